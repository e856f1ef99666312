"""Full analog transforms built from elementary analog DFTs.

Every elementary DFT stage quantises its whole input with one scale per
transform instance (the "group"), runs bit-serially on a programmed array and
hands its output to exact double-precision twiddle multiplication.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import core
from .core import as_signal, ct_reshape_input, ct_reshape_output, twiddle_matrix
from .device import (US, HardwareModel, dft_array, group_scale, map_dft_to_targets, program,
                     run_dft_batch, subsample_view)
from .errors import ConfigError, InvalidSizeError, MissingArrayError
from .plan import FactorPlan, Leaf, Split, plan_factorization

# Maximum conductance per elementary DFT size, in siemens.
AUDIO_GMAX = {4: 20 * US, 8: 20 * US, 16: 20 * US, 32: 16.7 * US, 64: 13.3 * US,
              128: 10 * US, 256: 6.17 * US}
IMAGE_GMAX = {4: 20 * US, 8: 20 * US, 16: 20 * US, 32: 10 * US, 64: 5 * US,
              128: 2.67 * US, 256: 1.67 * US}


def default_tiles(k: int) -> int:
    return 4 if k <= 32 else 1


def lookup_gmax(table: Mapping[int, float], k: int) -> float:
    """Exact entry, else log-log interpolation, clamped at the table ends."""
    if k in table:
        return float(table[k])
    sizes = np.array(sorted(table))
    vals = np.array([table[s] for s in sizes])
    return float(np.exp(np.interp(np.log(k), np.log(sizes), np.log(vals))))


@dataclass
class StageRecord:
    stage: int
    size: int
    dfts: int
    mvms: int
    adc_conversions: int
    clips: int
    max_current: float

    @property
    def outputs(self) -> int:
        """Real output values produced (real and imaginary part per point)."""
        return 2 * self.dfts * self.size


@dataclass
class StageTrace:
    stages: list[StageRecord] = field(default_factory=list)

    def add(self, size: int, dfts: int, stats) -> None:
        self.stages.append(StageRecord(len(self.stages), size, dfts, stats.mvms,
                                       stats.conversions, stats.clips, stats.max_current))

    def extend(self, other: "StageTrace") -> None:
        for rec in other.stages:
            self.stages.append(StageRecord(len(self.stages), *[
                getattr(rec, f) for f in ("size", "dfts", "mvms", "adc_conversions",
                                          "clips", "max_current")]))

    @property
    def mvms(self) -> int:
        return sum(s.mvms for s in self.stages)

    @property
    def adc_conversions(self) -> int:
        return sum(s.adc_conversions for s in self.stages)

    @property
    def outputs(self) -> int:
        return sum(s.outputs for s in self.stages)

    @property
    def clips(self) -> int:
        return sum(s.clips for s in self.stages)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["stage", "size", "dfts", "mvms", "adc_conversions", "clips",
                    "max_current_a"])
        for s in self.stages:
            w.writerow([s.stage, s.size, s.dfts, s.mvms, s.adc_conversions, s.clips,
                        repr(s.max_current)])
        return buf.getvalue()


@dataclass
class ExecutionConfig:
    """How to run a transform.

    ``bank`` maps an elementary DFT size to a programmed array or a
    subsampled view. ``input_scale`` fixes the first-stage quantisation step
    (e.g. 1.0 for 8-bit images); otherwise it follows the input maximum.
    """

    plan: FactorPlan | tuple | None = None
    bank: dict = field(default_factory=dict)
    model: HardwareModel = field(default_factory=HardwareModel)
    input_bits: int = 13
    input_signed: bool = True
    input_scale: float | None = None
    intermediate_bits: int = 13
    symmetrize: bool = False
    workers: int = 1
    noise_stream: int = 0
    counter: int = 0
    gmax_table: Mapping[int, float] = field(default_factory=lambda: dict(AUDIO_GMAX))
    direct_cache: dict = field(default_factory=dict)

    def array(self, k: int):
        try:
            return self.bank[k]
        except KeyError:
            raise MissingArrayError(f"no programmed array for DFT-{k}; bank has "
                                    f"{sorted(self.bank)}") from None

    @property
    def k_max(self) -> int:
        if not self.bank:
            raise MissingArrayError("empty array bank")
        return max(self.bank)


class _Run:
    """Per-call state: the running read-noise counter and the stage trace."""

    def __init__(self, cfg: ExecutionConfig):
        self.cfg = cfg
        self.counter = cfg.counter
        self.trace = StageTrace()
        self.first = True

    def apply(self, array, x: np.ndarray, size: int, scale=None) -> tuple[np.ndarray, object]:
        cfg = self.cfg
        if self.first:
            bits, signed = cfg.input_bits, cfg.input_signed
            if scale is None and cfg.input_scale is not None:
                scale = cfg.input_scale
        else:
            bits, signed = cfg.intermediate_bits, True
        out, stats = run_dft_batch(array, x, cfg.model, bits=bits, signed=signed, scale=scale,
                                   counter=self.counter, stream=cfg.noise_stream,
                                   workers=cfg.workers)
        self.counter += stats.mvms
        return out, stats

    def leaf(self, x: np.ndarray, k: int) -> np.ndarray:
        out, stats = self.apply(self.cfg.array(k), x, k)
        self.trace.add(k, x.shape[0] * x.shape[1], stats)
        self.first = False
        return out


def _fft(run: _Run, x: np.ndarray, plan: FactorPlan) -> np.ndarray:
    """x: (G, m, n) -> DFT along the last axis, one quantisation scale per G."""
    if isinstance(plan, Leaf):
        return run.leaf(x, plan.size)
    G, m, n = x.shape
    n1, n2 = plan.n1, plan.n2
    xt = ct_reshape_input(x, n1, n2)                        # (G, m, n1, n2)
    y = _fft(run, xt.reshape(G, m * n1, n2), plan.child2).reshape(G, m, n1, n2)
    y = y * twiddle_matrix(n1, n2)
    yt = np.swapaxes(y, -1, -2).reshape(G, m * n2, n1)
    z = _fft(run, yt, plan.child1).reshape(G, m, n2, n1)
    return ct_reshape_output(np.swapaxes(z, -1, -2))


def _resolve_plan(cfg: ExecutionConfig, n: int) -> FactorPlan:
    plan = cfg.plan
    if plan is None:
        plan = plan_factorization(n, cfg.k_max)
    if not isinstance(plan, (Leaf, Split)):
        raise ConfigError(f"1-D transforms need a FactorPlan, got {plan!r}")
    if plan.size != n:
        raise InvalidSizeError(f"plan covers {plan.size} points, signal has {n}")
    for k in set(plan.leaves()):
        cfg.array(k)
    return plan


def analog_fft_batch(x, cfg: ExecutionConfig) -> tuple[np.ndarray, StageTrace]:
    """Independent analog FFTs of every row of ``x`` (B, N), each with its own scale."""
    x = as_signal(x, ndim=2)
    plan = _resolve_plan(cfg, x.shape[1])
    run = _Run(cfg)
    out = _fft(run, x[:, None, :], plan)[:, 0, :]
    return out, run.trace


def analog_fft_1d(x, cfg: ExecutionConfig) -> tuple[np.ndarray, StageTrace]:
    """Cooley-Tukey analog FFT following ``cfg.plan`` (min-depth plan if None)."""
    x = as_signal(x, ndim=1)
    out, trace = analog_fft_batch(x[None, :], cfg)
    return out[0], trace


# -- direct (partitioned) DFT --------------------------------------------------


def _direct_arrays(cfg: ExecutionConfig, n: int, k_max: int):
    key = (n, k_max)
    if key in cfg.direct_cache:
        return cfg.direct_cache[key]
    if n <= k_max and n in cfg.bank:
        blocks = {(0, 0): cfg.bank[n]}
    else:
        w = core.dft_matrix(n)
        g_max = lookup_gmax(cfg.gmax_table, min(n, k_max))
        nb = -(-n // k_max)
        blocks = {}
        for i in range(nb):
            for j in range(nb):
                sub = w[i * k_max:(i + 1) * k_max, j * k_max:(j + 1) * k_max]
                aid = (1 << 40) | (n << 20) | (i << 10) | j
                blocks[(i, j)] = program(map_dft_to_targets(sub, g_max, array_id=aid), cfg.model)
    cfg.direct_cache[key] = blocks
    return blocks


def _direct(run: _Run, x: np.ndarray, k_max: int) -> np.ndarray:
    """x: (G, m, n); W_n split into k_max blocks, partial outputs summed digitally."""
    G, m, n = x.shape
    blocks = _direct_arrays(run.cfg, n, k_max)
    nb = -(-n // k_max)
    cfg = run.cfg
    if run.first:
        bits, signed = cfg.input_bits, cfg.input_signed
        scale = cfg.input_scale
    else:
        bits, signed, scale = cfg.intermediate_bits, True, None
    if scale is None:
        scale = group_scale(x, bits, signed)
    out = np.zeros_like(x)
    for i in range(nb):
        rows = slice(i * k_max, min((i + 1) * k_max, n))
        for j in range(nb):
            cols = slice(j * k_max, min((j + 1) * k_max, n))
            part, stats = run.apply(blocks[(i, j)], x[..., cols], k_max, scale=scale)
            out[..., rows] += part
            run.trace.add(part.shape[-1], G * m, stats)
    run.first = False
    return out


def analog_dft_direct(x, k_max: int, cfg: ExecutionConfig) -> tuple[np.ndarray, StageTrace]:
    """Single-MVM-sequence DFT; above k_max the matrix is split over several arrays."""
    x = as_signal(x, ndim=1)
    if k_max < 1:
        raise InvalidSizeError("k_max must be >= 1")
    run = _Run(cfg)
    out = _direct(run, x[None, None, :], k_max)
    return out[0, 0], run.trace


def _direct_2d(run: _Run, img: np.ndarray, k_max: int) -> np.ndarray:
    """img: (G, M, N) -> row DFTs, then column DFTs."""
    rows = _direct(run, img, k_max)
    cols = _direct(run, np.swapaxes(rows, -1, -2).copy(), k_max)
    return np.swapaxes(cols, -1, -2)


def analog_dft_2d_direct(img, k_max: int, cfg: ExecutionConfig) -> tuple[np.ndarray, StageTrace]:
    img = as_signal(img, ndim=2)
    run = _Run(cfg)
    return _direct_2d(run, img[None], k_max)[0], run.trace


# -- vector-radix 2-D FFT --------------------------------------------------------


def vr_params_for(m: int, n: int) -> tuple[int, int, int, int]:
    """Default (p, q, r, s): square roots for even powers of two, else p = 2r."""
    def split(size):
        e = int(round(math.log2(size)))
        if 2 ** e != size:
            root = math.isqrt(size)
            if root * root == size:
                return root, root
            raise InvalidSizeError(f"no default vector-radix split for {size}")
        lo = e // 2
        return 2 ** (e - lo), 2 ** lo
    p, r = split(m)
    q, s = split(n)
    return p, q, r, s


def _stage_along(run: _Run, x: np.ndarray, axis: int) -> np.ndarray:
    """Analog DFT along one axis of x (G, ...), one quantisation scale per G."""
    n = x.shape[axis]
    moved = np.moveaxis(x, axis, -1)
    shape = moved.shape
    flat = moved.reshape(shape[0], -1, n)
    k_max = run.cfg.k_max
    plan = Leaf(n) if n in run.cfg.bank else plan_factorization(n, k_max)
    out = _fft(run, flat, plan)
    return np.moveaxis(out.reshape(shape), -1, axis)


def _vr(run: _Run, img: np.ndarray, p: int, q: int, r: int, s: int) -> np.ndarray:
    G = img.shape[0]
    xt = np.stack([core.vr_reshape(im, p, q, r, s) for im in img])   # (G, r, s, p, q)
    y = _stage_along(run, xt, 3)
    y = _stage_along(run, y, 4)
    y = y * core.vr_twiddle(p, q, r, s)
    yt = y.transpose(0, 3, 4, 1, 2)                                   # (G, p, q, r, s)
    z = _stage_along(run, yt, 3)
    z = _stage_along(run, z, 4)
    return np.stack([core.vr_reshape_output(z[g]) for g in range(G)])


def _vr_params(cfg: ExecutionConfig, shape) -> tuple[int, int, int, int]:
    params = cfg.plan
    if params is None or isinstance(params, (Leaf, Split)):
        params = vr_params_for(*shape)
    p, q, r, s = (int(v) for v in params)
    if shape != (p * r, q * s):
        raise InvalidSizeError(f"image shape {shape} != ({p}*{r}, {q}*{s})")
    return p, q, r, s


def analog_vr_fft_2d(img, cfg: ExecutionConfig) -> tuple[np.ndarray, StageTrace]:
    """Vector-radix FFT: P and Q stages, twiddles, axis swap, R and S stages."""
    img = as_signal(img, ndim=2)
    p, q, r, s = _vr_params(cfg, img.shape)
    run = _Run(cfg)
    return _vr(run, img[None], p, q, r, s)[0], run.trace


def transform_2d_batch(imgs, method: str, cfg: ExecutionConfig,
                       k_max: int | None = None) -> tuple[np.ndarray, StageTrace]:
    """2-D analog transform of a stack (C, M, N), one scale per channel and stage."""
    imgs = as_signal(imgs, ndim=3)
    run = _Run(cfg)
    if method == "vr":
        p, q, r, s = _vr_params(cfg, imgs.shape[1:])
        return _vr(run, imgs, p, q, r, s), run.trace
    if method == "direct":
        return _direct_2d(run, imgs, k_max or cfg.k_max), run.trace
    raise ConfigError(f"unknown 2-D method {method!r}")


# -- post-processing and diagnostics ---------------------------------------------


def symmetrize_spectrum(X) -> np.ndarray:
    """Half-spectrum magnitudes: DC kept, bin f = mean(|X_f|, |X_(N-f)|)."""
    X = np.asarray(X)
    n = X.shape[-1]
    if n % 2:
        raise InvalidSizeError(f"symmetrize_spectrum needs an even length, got {n}")
    mag = np.abs(X)
    half = mag[..., : n // 2].copy()
    half[..., 1:] = 0.5 * (mag[..., 1:n // 2] + mag[..., :n // 2:-1])
    return half


def dc_streak_flag(X, X_ref, factor: float = 3.0) -> tuple[bool, float]:
    """Flag error concentrated on the zero-frequency row and column.

    Returns (flag, ratio) with ratio = mean error on row 0 / column 0 over the
    median error of all bins.
    """
    err = np.abs(np.asarray(X) - np.asarray(X_ref))
    dc = np.concatenate([err[0, :], err[1:, 0]]).mean()
    med = np.median(err)
    ratio = float(dc / med) if med > 0 else (math.inf if dc > 0 else 0.0)
    return ratio > factor, ratio


# -- array banks -------------------------------------------------------------------


def build_bank(sizes, model: HardwareModel, gmax_table: Mapping[int, float] | None = None,
               *, tiles: Mapping[int, int] | None = None, inverse: bool = False,
               subsample_from: int | None = None) -> dict:
    """Program one array per elementary DFT size.

    With ``subsample_from`` every smaller size that divides it is served by a
    view of that single array instead of its own devices.
    """
    table = AUDIO_GMAX if gmax_table is None else gmax_table
    bank = {}
    sizes = sorted(set(int(k) for k in sizes))
    if subsample_from is not None:
        base = dft_array(subsample_from, lookup_gmax(table, subsample_from), model, 1,
                         array_id=subsample_from + (1000 if inverse else 0), inverse=inverse)
        bank[subsample_from] = base
    for k in sizes:
        if k in bank:
            continue
        if subsample_from is not None and subsample_from % k == 0:
            bank[k] = subsample_view(bank[subsample_from], k)
            continue
        n_t = tiles.get(k, default_tiles(k)) if tiles else default_tiles(k)
        bank[k] = dft_array(k, lookup_gmax(table, k), model, n_t,
                            array_id=k + (1000 if inverse else 0), inverse=inverse)
    return bank


def ideal_config(sizes, **kw) -> ExecutionConfig:
    """Zero-noise config with ideal ADC, for oracle checks."""
    model = kw.pop("model", HardwareModel.ideal())
    return ExecutionConfig(bank=build_bank(sizes, model), model=model, **kw)
