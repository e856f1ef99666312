"""Audio and image pipelines on top of the analog transforms."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import engine
from .device import HardwareModel
from .engine import ExecutionConfig, StageTrace
from .errors import AnalogFFTError, InvalidSizeError
from .metrics import QualityReport, psnr, quality_report
from .plan import FactorPlan, Leaf, Split, plan_factorization


@dataclass
class SpectrogramConfig:
    window: int = 256
    hop: int = 128
    fft_plan: FactorPlan | None = None
    db_floor: float = -80.0
    normalize: bool = True
    pad: bool = False

    def __post_init__(self):
        if self.hop < 1:
            raise InvalidSizeError("hop must be >= 1")
        if self.window < 2:
            raise InvalidSizeError("window must be >= 2")
        if self.fft_plan is not None and self.fft_plan.size != self.window:
            raise InvalidSizeError(f"plan size {self.fft_plan.size} != window {self.window}")


@dataclass
class SpectrogramResult:
    magnitude: np.ndarray          # (window // 2, frames), linear
    spectra: np.ndarray            # (frames, window), complex
    trace: StageTrace = field(default_factory=StageTrace)

    def dbfs(self, reference: float | None = None, floor: float = -80.0) -> np.ndarray:
        """20 log10(|X| / reference) clamped at ``floor``; reference defaults to the maximum."""
        ref = float(self.magnitude.max()) if reference is None else float(reference)
        if ref <= 0:
            return np.full(self.magnitude.shape, floor)
        with np.errstate(divide="ignore"):
            db = 20.0 * np.log10(self.magnitude / ref)
        return np.maximum(db, floor)


def frame_signal(x, window: int, hop: int, pad: bool = False) -> np.ndarray:
    """Full windows only; ``pad`` zero-fills the tail to one more window instead."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidSizeError("expected a 1-D signal")
    if pad:
        extra = (-(len(x) - window)) % hop if len(x) >= window else window - len(x)
        x = np.concatenate([x, np.zeros(extra)])
    if len(x) < window:
        raise InvalidSizeError(f"signal of {len(x)} samples is shorter than the {window} window")
    frames = np.lib.stride_tricks.sliding_window_view(x, window)[::hop]
    return np.ascontiguousarray(frames)


def frame_count(length: int, window: int, hop: int) -> int:
    return (length - window) // hop + 1


def quantize_waveform(x, bits: int = 13) -> tuple[np.ndarray, float]:
    """Round a whole waveform to signed ``bits``-bit levels; returns (values, step)."""
    x = np.asarray(x, dtype=np.float64)
    peak = float(np.abs(x).max()) if x.size else 0.0
    if peak == 0.0:
        return x.copy(), 0.0
    step = peak / (2 ** (bits - 1) - 1)
    return np.rint(x / step) * step, step


def spectrogram(signal, cfg: SpectrogramConfig, exec_cfg: ExecutionConfig | None = None
                ) -> SpectrogramResult:
    """Analog FFT of every window; symmetrised magnitudes stacked as columns.

    The input step is shared by all windows (set by the waveform peak) unless
    ``exec_cfg.input_scale`` fixes it. ``exec_cfg=None`` computes the
    double-precision digital reference.
    """
    frames = frame_signal(signal, cfg.window, cfg.hop, cfg.pad)
    if exec_cfg is None:
        spectra, trace = np.fft.fft(frames, axis=1), StageTrace()
    else:
        run_cfg = exec_cfg
        if cfg.fft_plan is not None:
            run_cfg = replace(run_cfg, plan=cfg.fft_plan)
        if run_cfg.input_scale is None and run_cfg.input_signed:
            peak = float(np.abs(frames).max())
            if peak > 0:
                run_cfg = replace(run_cfg, input_scale=peak / (2 ** (run_cfg.input_bits - 1) - 1))
        spectra, trace = engine.analog_fft_batch(frames, run_cfg)
    mag = engine.symmetrize_spectrum(spectra).T
    return SpectrogramResult(mag, spectra, trace)


analog_stft = spectrogram


@dataclass
class SpectrumResult:
    magnitude: np.ndarray
    spectrum: np.ndarray
    padded: bool
    trace: StageTrace = field(default_factory=StageTrace)


def full_spectrum(signal, plan: FactorPlan | None, exec_cfg: ExecutionConfig | None) -> SpectrumResult:
    """Whole-signal FFT, zero-padded up to the plan size (``padded`` flags it)."""
    x = np.asarray(signal, dtype=np.float64)
    n = plan.size if plan is not None else 1 << max(0, int(np.ceil(np.log2(len(x)))))
    if len(x) > n:
        raise InvalidSizeError(f"signal of {len(x)} samples exceeds the {n}-point plan")
    padded = len(x) < n
    if padded:
        x = np.concatenate([x, np.zeros(n - len(x))])
    if exec_cfg is None:
        X, trace = np.fft.fft(x), StageTrace()
    else:
        if plan is None:
            plan = plan_factorization(n, exec_cfg.k_max)
        X, trace = engine.analog_fft_1d(x, replace(exec_cfg, plan=plan))
    return SpectrumResult(engine.symmetrize_spectrum(X), X, padded, trace)


def reconstruct_audio(spectra, hop: int, length: int | None = None) -> np.ndarray:
    """Digital inverse FFT per window, overlap-added and divided by window coverage."""
    spectra = np.asarray(spectra)
    if spectra.ndim != 2:
        raise InvalidSizeError("expected (frames, window) spectra")
    frames, window = spectra.shape
    if hop < 1 or hop > window:
        raise InvalidSizeError(f"hop {hop} inconsistent with window {window}")
    out = np.zeros((frames - 1) * hop + window)
    cover = np.zeros_like(out)
    blocks = np.fft.ifft(spectra, axis=1).real
    for i in range(frames):
        out[i * hop:i * hop + window] += blocks[i]
        cover[i * hop:i * hop + window] += 1
    out = out / np.maximum(cover, 1)
    if length is not None:
        out = np.concatenate([out, np.zeros(max(0, length - len(out)))])[:length]
    return out


def spectral_flatness_db(residual, window: int = 256) -> float:
    """Spread (max - min, dB) of the averaged power spectrum of a residual."""
    frames = frame_signal(residual, window, window)
    p = np.mean(np.abs(np.fft.rfft(frames, axis=1)) ** 2, axis=0)[1:-1]
    db = 10 * np.log10(np.maximum(p, 1e-300))
    return float(db.max() - db.min())


# -- images ------------------------------------------------------------------------


def parseval_correct(reconstruction, original_energy: float, spectrum_energy: float, n: int
                     ) -> tuple[np.ndarray, float]:
    """Scale by sqrt(sum|x|^2 / (sum|X|^2 / n)), n being the number of pixels."""
    if not spectrum_energy > 0:
        raise AnalogFFTError("spectrum energy must be positive for the Parseval correction")
    factor = float(np.sqrt(original_energy / (spectrum_energy / n)))
    return np.asarray(reconstruction) * factor, factor


@dataclass
class ImageResult:
    spectra: np.ndarray            # (channels, rows, cols)
    reconstruction: np.ndarray     # uint8 (rows, cols, channels), corrected
    uncorrected: np.ndarray        # uint8, without brightening
    quality: QualityReport
    quality_uncorrected: QualityReport
    factors: list
    trace: StageTrace


def to_uint8(img) -> np.ndarray:
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def image_config(method: str, model: HardwareModel | None = None, *, k: int = 16,
                 k_max: int = 256, gmax_table=None, workers: int = 1) -> ExecutionConfig:
    """Arrays and quantisation settings for 8-bit image transforms."""
    model = model or HardwareModel()
    table = engine.IMAGE_GMAX if gmax_table is None else gmax_table
    sizes = [k] if method == "vr" else [k_max]
    return ExecutionConfig(bank=engine.build_bank(sizes, model, table), model=model,
                           input_bits=8, input_signed=False, input_scale=1.0,
                           gmax_table=dict(table), workers=workers)


def image_spectrum_and_reconstruct(img, method: str = "vr", exec_cfg: ExecutionConfig | None = None,
                                   params=None, k_max: int = 256) -> ImageResult:
    """Per-channel analog 2-D DFT, digital inverse, Parseval brightening and metrics."""
    img = np.asarray(img)
    if img.ndim == 2:
        img = img[..., None]
    if img.ndim != 3:
        raise InvalidSizeError(f"expected (rows, cols, channels), got {img.shape}")
    exec_cfg = exec_cfg or image_config(method)
    if params is not None:
        exec_cfg = replace(exec_cfg, plan=tuple(params))
    chans = np.moveaxis(img.astype(np.float64), -1, 0)
    spectra, trace = engine.transform_2d_batch(chans, method, exec_cfg, k_max=k_max)
    raw = np.fft.ifft2(spectra).real
    n = chans.shape[1] * chans.shape[2]
    corrected, factors = [], []
    for c in range(chans.shape[0]):
        e_x = float(np.sum(chans[c] ** 2))
        e_X = float(np.sum(np.abs(spectra[c]) ** 2))
        if e_X > 0:
            out, f = parseval_correct(raw[c], e_x, e_X, n)
        else:
            out, f = raw[c], 1.0
        corrected.append(out)
        factors.append(f)
    rec = to_uint8(np.moveaxis(np.stack(corrected), 0, -1))
    unc = to_uint8(np.moveaxis(raw, 0, -1))
    return ImageResult(spectra, rec, unc, quality_report(img, rec), quality_report(img, unc),
                       factors, trace)


# -- default audio configurations -------------------------------------------------


def audio_config(sizes, model: HardwareModel | None = None, *, plan: FactorPlan | None = None,
                 workers: int = 1, subsample_from: int | None = None) -> ExecutionConfig:
    model = model or HardwareModel()
    bank = engine.build_bank(sizes, model, engine.AUDIO_GMAX, subsample_from=subsample_from)
    return ExecutionConfig(plan=plan, bank=bank, model=model, workers=workers, symmetrize=True)


def radix_plan(n1: int, n2: int) -> FactorPlan:
    if n2 == 1:
        return Leaf(n1)
    return Split(n1, n2, Leaf(n1), Leaf(n2))


def spectrogram_psnr(analog: SpectrogramResult, ideal: SpectrogramResult) -> float:
    """PSNR of symmetrised linear magnitudes, peak = ideal maximum."""
    return psnr(ideal.magnitude, analog.magnitude)
