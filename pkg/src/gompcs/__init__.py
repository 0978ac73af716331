"""Compressive sensing of hyperspectral spectra with gOMP recovery."""
from .cube import (
    HsiCube,
    PipelineConfig,
    PipelineReport,
    extract_pixel,
    generate_phantom_cube,
    load_cube,
    run_pipeline,
    save_cube,
    sparsify_cube,
)
from .gomp import GompConfig, GompResult, gomp_recover
from .linalg import ContractViolation, RankDeficientError, least_squares_solve
from .metrics import QualityReport, bandwise_quality, mse, psnr, ssi, ssi_1d
from .sensing import (
    Dictionary,
    analyze,
    build_dft_basis,
    build_measurement_matrix,
    compose_dictionary,
    compress,
    synthesize,
)
from .sparsify import calibrate_threshold, sparsify, sparsity_level, sparsity_ratio

__version__ = "0.1.0"
