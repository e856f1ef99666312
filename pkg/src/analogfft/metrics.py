"""PSNR and SSIM."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSizeError


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidSizeError(f"shape mismatch {a.shape} vs {b.shape}")
    if a.size == 0:
        raise InvalidSizeError("empty input")
    return a, b


def psnr(reference, test, peak: float | None = None) -> float:
    """10 log10(peak^2 / MSE), peak defaulting to the maximum of ``reference``.

    Identical inputs give ``math.inf``.
    """
    ref, tst = _pair(reference, test)
    mse = float(np.mean((ref - tst) ** 2))
    if mse == 0.0:
        return math.inf
    s_max = float(ref.max()) if peak is None else float(peak)
    return 10.0 * math.log10(s_max ** 2 / mse)


def _gaussian_kernel(sigma: float, radius: int) -> np.ndarray:
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def _filter_valid(img: np.ndarray, k: np.ndarray) -> np.ndarray:
    # separable 'valid' correlation
    n = len(k)
    rows = np.lib.stride_tricks.sliding_window_view(img, n, axis=0) @ k
    return np.lib.stride_tricks.sliding_window_view(rows, n, axis=1) @ k


def ssim(a, b, data_range: float | None = None, sigma: float = 1.5, win_size: int = 11,
         k1: float = 0.01, k2: float = 0.03) -> float:
    """Mean structural similarity of two 2-D images (Gaussian window, population statistics).

    3-D inputs are treated as channel-last stacks and averaged over channels.
    ``data_range`` defaults to the span of ``a``.
    """
    a, b = _pair(a, b)
    if a.ndim == 3:
        return float(np.mean([ssim(a[..., c], b[..., c], data_range, sigma, win_size, k1, k2)
                              for c in range(a.shape[-1])]))
    if a.ndim != 2:
        raise InvalidSizeError(f"ssim needs 2-D images, got {a.ndim}-D")
    if min(a.shape) < win_size:
        raise InvalidSizeError(f"images must be at least {win_size} pixels on each side")
    if data_range is None:
        data_range = float(a.max() - a.min()) or 1.0
    k = _gaussian_kernel(sigma, win_size // 2)
    mu_a, mu_b = _filter_valid(a, k), _filter_valid(b, k)
    var_a = _filter_valid(a * a, k) - mu_a ** 2
    var_b = _filter_valid(b * b, k) - mu_b ** 2
    cov = _filter_valid(a * b, k) - mu_a * mu_b
    c1, c2 = (k1 * data_range) ** 2, (k2 * data_range) ** 2
    s = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / ((mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2))
    return float(s.mean())


@dataclass
class QualityReport:
    psnr_db: float
    ssim: float
    per_channel_psnr: list = field(default_factory=list)
    per_channel_ssim: list = field(default_factory=list)

    def to_dict(self) -> dict:
        def enc(v):
            return "inf" if v == math.inf else v
        return {"psnr_db": enc(self.psnr_db), "ssim": self.ssim,
                "per_channel_psnr": [enc(v) for v in self.per_channel_psnr],
                "per_channel_ssim": self.per_channel_ssim}


def quality_report(reference, test, data_range: float = 255.0) -> QualityReport:
    """Per-channel PSNR/SSIM of channel-last images; totals are channel means."""
    ref, tst = _pair(reference, test)
    if ref.ndim == 2:
        p, s = psnr(ref, tst), ssim(ref, tst, data_range)
        return QualityReport(p, s, [p], [s])
    ps = [psnr(ref[..., c], tst[..., c]) for c in range(ref.shape[-1])]
    ss = [ssim(ref[..., c], tst[..., c], data_range) for c in range(ref.shape[-1])]
    return QualityReport(float(np.mean(ps)), float(np.mean(ss)), ps, ss)
