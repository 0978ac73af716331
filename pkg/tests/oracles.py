"""Loop-based reference metrics, written independently of gompcs.metrics."""
import math


def mse_ref(a, ref):
    flat_a, flat_r = list(a.ravel()), list(ref.ravel())
    return sum((p - q) ** 2 for p, q in zip(flat_a, flat_r)) / len(flat_a)


def psnr_ref(a, ref):
    e = mse_ref(a, ref)
    if e == 0:
        return math.inf
    peak = max(ref.ravel())
    return 10 * math.log10(peak ** 2 / e)


def _window_ssim(pa, pr, c1, c2):
    n = len(pa)
    ma, mr = sum(pa) / n, sum(pr) / n
    va = sum((p - ma) ** 2 for p in pa) / n
    vr = sum((q - mr) ** 2 for q in pr) / n
    cov = sum((p - ma) * (q - mr) for p, q in zip(pa, pr)) / n
    return ((2 * ma * mr + c1) * (2 * cov + c2)) / ((ma ** 2 + mr ** 2 + c1) * (va + vr + c2))


def _constants(a, ref):
    flat_r = list(ref.ravel())
    dyn = max(flat_r) - min(flat_r)
    if dyn == 0:
        dyn = max(max(abs(v) for v in flat_r), max(abs(v) for v in a.ravel())) or 1.0
    return (0.01 * dyn) ** 2, (0.03 * dyn) ** 2


def ssim2d_ref(a, ref, win=8):
    c1, c2 = _constants(a, ref)
    h, w = a.shape
    wh, ww = min(win, h), min(win, w)
    vals = []
    for i in range(h - wh + 1):
        for j in range(w - ww + 1):
            pa = [a[i + u, j + v] for u in range(wh) for v in range(ww)]
            pr = [ref[i + u, j + v] for u in range(wh) for v in range(ww)]
            vals.append(_window_ssim(pa, pr, c1, c2))
    return sum(vals) / len(vals)


def ssim1d_ref(a, ref, win=11):
    c1, c2 = _constants(a, ref)
    n = len(a)
    w = min(win, n)
    vals = [_window_ssim(list(a[i:i + w]), list(ref[i:i + w]), c1, c2) for i in range(n - w + 1)]
    return sum(vals) / len(vals)
