"""Analog crossbar model.

Complex matrices are stored as real block matrices over differential column
pairs, inputs are applied one bit-plane per analog MVM, and the column sums
pass through read noise, a quadratic IR-drop model and a clipping ADC before
being recombined digitally.

Canonical layout of one tile for an ``n_out x n_in`` complex matrix ``w``::

    rows  [0, n_in)          real part of the input
    rows  [n_in, 2 n_in)     imaginary part of the input
    cols  2j, 2j+1           (G+, G-) of real output j,      j < n_out
    cols  2(n_out+j), +1     (G+, G-) of imaginary output j

Tiles are repeated block-diagonally; off-diagonal cells target 0 S.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from . import rng
from .core import dft_matrix
from .errors import ConfigError, InvalidSizeError

US = 1e-6

# Vectors per work unit in the batched executor. Fixed so that results do not
# depend on the number of workers.
CHUNK_VECTORS = 256

PHYSICAL_ROWS = 1024
PHYSICAL_COLS = 1024


@dataclass(frozen=True, eq=False)
class ConductanceCurve:
    """Piecewise-linear table of a conductance-dependent quantity (siemens -> siemens)."""

    g: np.ndarray
    value: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        v = np.asarray(self.value, dtype=float)
        if g.ndim != 1 or g.shape != v.shape or len(g) < 1:
            raise ConfigError("curve tables need matching 1-D breakpoints and values")
        if np.any(np.diff(g) <= 0):
            raise ConfigError("curve breakpoints must be strictly increasing")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "value", v)

    def __call__(self, conductance):
        return np.interp(conductance, self.g, self.value)

    @classmethod
    def zero(cls) -> "ConductanceCurve":
        return cls(np.array([0.0]), np.array([0.0]))

    @classmethod
    def linear_saturating(cls, slope: float, offset: float, cap: float,
                          g_top: float = 24 * US) -> "ConductanceCurve":
        """min(slope*G + offset, cap) on [0, g_top]; offset and cap in siemens."""
        if slope <= 0:
            return cls(np.array([0.0, g_top]), np.full(2, min(offset, cap)))
        knee = (cap - offset) / slope
        if knee >= g_top:
            return cls(np.array([0.0, g_top]), np.array([offset, slope * g_top + offset]))
        return cls(np.array([0.0, knee, g_top]), np.array([offset, cap, cap]))

    def scaled(self, factor: float) -> "ConductanceCurve":
        return ConductanceCurve(self.g, self.value * factor)

    def to_dict(self) -> dict:
        return {"g": self.g.tolist(), "value": self.value.tolist()}


def default_sigma_prog() -> ConductanceCurve:
    return ConductanceCurve.linear_saturating(0.02, 0.005 * US, 0.4 * US)


def default_sigma_drift() -> ConductanceCurve:
    return ConductanceCurve.linear_saturating(0.03, 0.01 * US, 0.6 * US)


def default_drift_mean() -> ConductanceCurve:
    return ConductanceCurve(np.array([0.0, 24 * US]), np.array([0.0, -0.01 * 24 * US]))


@dataclass(frozen=True, eq=False)
class HardwareModel:
    """Every non-ideality parameter of the simulated array and its periphery.

    ``ir_drop_coeff=None`` selects the per-layout default: a fractional loss
    of ``ir_full_scale_loss`` at a full-scale current on a 512x1024 array,
    scaled linearly with rows + cols.
    """

    read_voltage: float = 0.06
    adc_range_max: float = 17e-6
    adc_bits: int = 12
    adc_step: float = 4.88e-9
    adc_ideal: bool = False
    sigma_prog: ConductanceCurve = field(default_factory=default_sigma_prog)
    drift_mean: ConductanceCurve = field(default_factory=default_drift_mean)
    sigma_drift: ConductanceCurve = field(default_factory=default_sigma_drift)
    drifted: bool = True
    read_noise_coeff: float = 0.01
    ir_drop_coeff: float | None = None
    ir_full_scale_loss: float = 0.05
    ir_reference_lines: int = 512 + 1024
    rng_seed: int = 0

    def __post_init__(self):
        if not self.adc_step > 0 or not self.adc_range_max > 0:
            raise ConfigError("adc_step and adc_range_max must be positive")
        if self.adc_bits < 1:
            raise ConfigError("adc_bits must be >= 1")
        if self.read_voltage <= 0:
            raise ConfigError("read_voltage must be positive")
        for name in ("sigma_prog", "sigma_drift"):
            if np.any(getattr(self, name).value < 0):
                raise ConfigError(f"{name} must be non-negative")
        if self.read_noise_coeff < 0:
            raise ConfigError("read_noise_coeff must be non-negative")

    @classmethod
    def ideal(cls, **kw) -> "HardwareModel":
        """No device errors, no noise, no IR drop and an unquantised, unclipped ADC."""
        zero = ConductanceCurve.zero()
        kw = {"sigma_prog": zero, "drift_mean": zero, "sigma_drift": zero,
              "read_noise_coeff": 0.0, "ir_drop_coeff": 0.0, "adc_ideal": True, **kw}
        return cls(**kw)

    @classmethod
    def noiseless(cls, **kw) -> "HardwareModel":
        """Like :meth:`ideal` but keeps the 12-bit clipping ADC."""
        return cls.ideal(adc_ideal=False, **kw)

    def with_seed(self, seed: int) -> "HardwareModel":
        return replace(self, rng_seed=int(seed))

    def scaled(self, sigma: float = 1.0, read: float = 1.0, ir: float = 1.0) -> "HardwareModel":
        """Scale the error magnitudes; used for degradation sweeps."""
        ir_coeff = None if self.ir_drop_coeff is None else self.ir_drop_coeff * ir
        return replace(
            self,
            sigma_prog=self.sigma_prog.scaled(sigma),
            sigma_drift=self.sigma_drift.scaled(sigma),
            drift_mean=self.drift_mean.scaled(sigma),
            read_noise_coeff=self.read_noise_coeff * read,
            ir_drop_coeff=ir_coeff,
            ir_full_scale_loss=self.ir_full_scale_loss * ir,
        )

    @property
    def full_code(self) -> int:
        return 2 ** self.adc_bits - 1

    def ir_coeff(self, rows: int, cols: int) -> float:
        if self.ir_drop_coeff is not None:
            return self.ir_drop_coeff
        return self.ir_full_scale_loss * (rows + cols) / self.ir_reference_lines

    def digitize(self, current: np.ndarray) -> np.ndarray:
        """Column currents -> ADC codes (float array holding integers).

        Currents at or above ``adc_range_max`` read out as the full-scale
        code, which :meth:`decode` maps back to ``adc_range_max``.
        """
        if self.adc_ideal:
            return current / self.adc_step
        full = self.full_code
        codes = np.clip(np.rint(current / self.adc_step), 0, full)
        return np.where(current >= self.adc_range_max, full, codes)

    def decode(self, codes: np.ndarray) -> np.ndarray:
        if self.adc_ideal:
            return codes * self.adc_step
        full = self.full_code
        top = min(self.adc_range_max, full * self.adc_step)
        return np.where(codes >= full, top, codes * self.adc_step)

    def to_dict(self) -> dict:
        return {
            "read_voltage": self.read_voltage,
            "adc_range_max": self.adc_range_max,
            "adc_bits": self.adc_bits,
            "adc_step": self.adc_step,
            "adc_ideal": self.adc_ideal,
            "sigma_prog": self.sigma_prog.to_dict(),
            "drift_mean": self.drift_mean.to_dict(),
            "sigma_drift": self.sigma_drift.to_dict(),
            "drifted": self.drifted,
            "read_noise_coeff": self.read_noise_coeff,
            "ir_drop_coeff": self.ir_drop_coeff,
            "ir_full_scale_loss": self.ir_full_scale_loss,
            "ir_reference_lines": self.ir_reference_lines,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HardwareModel":
        d = dict(d)
        preset = d.pop("preset", "default")
        base = {"default": cls, "ideal": cls.ideal, "noiseless": cls.noiseless}.get(preset)
        if base is None:
            raise ConfigError(f"unknown model preset {preset!r}")
        kw = {}
        for name in ("sigma_prog", "drift_mean", "sigma_drift"):
            if name in d:
                curve = d.pop(name)
                kw[name] = ConductanceCurve(curve["g"], curve["value"])
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown hardware model fields: {sorted(unknown)}")
        try:
            return base(**kw, **d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class Layout:
    n_in: int
    n_out: int
    n_tiles: int = 1
    # 0 = canonical quadrant/pair order described in the module docstring
    quadrant_order: int = 0
    pair_order: int = 0

    @property
    def k(self) -> int:
        return self.n_in

    @property
    def tile_shape(self) -> tuple[int, int]:
        return 2 * self.n_in, 4 * self.n_out

    @property
    def shape(self) -> tuple[int, int]:
        return 2 * self.n_in * self.n_tiles, 4 * self.n_out * self.n_tiles


@dataclass(frozen=True, eq=False)
class ProgrammedArray:
    g_target: np.ndarray
    g_max: float
    layout: Layout
    array_id: int = 0
    g_actual: np.ndarray | None = None

    @property
    def rows(self) -> int:
        return self.g_target.shape[0]

    @property
    def cols(self) -> int:
        return self.g_target.shape[1]

    @property
    def n_in(self) -> int:
        return self.layout.n_in

    @property
    def n_out(self) -> int:
        return self.layout.n_out

    @property
    def n_tiles(self) -> int:
        return self.layout.n_tiles

    @property
    def physical_shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def programmed(self) -> bool:
        return self.g_actual is not None

    @property
    def grid(self) -> np.ndarray:
        if self.g_actual is None:
            raise ConfigError("array has targets only; call program() first")
        return self.g_actual

    @cached_property
    def grid_sq(self) -> np.ndarray:
        return self.grid ** 2

    @property
    def target_grid(self) -> np.ndarray:
        return self.g_target

    @cached_property
    def crosstalk(self) -> np.ndarray | None:
        """Realised conductance outside the diagonal tiles, or None if all zero."""
        off = self.grid.copy()
        tr, tc = self.layout.tile_shape
        for t in range(self.n_tiles):
            off[t * tr:(t + 1) * tr, t * tc:(t + 1) * tc] = 0.0
        return off if np.any(off) else None


@dataclass(frozen=True, eq=False)
class SubsampledArray:
    """A DFT-n view of a programmed DFT-n1 array (n1 = n*a*b).

    Inputs go to every a-th logical row and outputs are read from every b-th
    logical column of the first tile, so no device is re-programmed.
    """

    base: ProgrammedArray
    n: int
    a: int
    b: int

    @property
    def n_in(self) -> int:
        return self.n

    @property
    def n_out(self) -> int:
        return self.n

    n_tiles = 1

    @property
    def g_max(self) -> float:
        return self.base.g_max

    @property
    def array_id(self) -> int:
        return self.base.array_id

    @property
    def physical_shape(self) -> tuple[int, int]:
        return self.base.physical_shape

    @cached_property
    def row_index(self) -> np.ndarray:
        sel = self.a * np.arange(self.n)
        return np.concatenate([sel, self.base.n_in + sel])

    @cached_property
    def col_index(self) -> np.ndarray:
        out = self.b * np.arange(self.n)
        logical = np.concatenate([out, self.base.n_out + out])
        return np.stack([2 * logical, 2 * logical + 1], axis=1).ravel()

    @cached_property
    def grid(self) -> np.ndarray:
        return self.base.grid[np.ix_(self.row_index, self.col_index)]

    @cached_property
    def grid_sq(self) -> np.ndarray:
        return self.grid ** 2

    @property
    def target_grid(self) -> np.ndarray:
        return self.base.g_target[np.ix_(self.row_index, self.col_index)]


@dataclass(frozen=True, eq=False)
class BitPlanes:
    """Sign-magnitude bit planes of the stacked (real, imag) input components.

    ``planes[b]`` holds bit ``b`` (LSB first) of every component; the last
    axis is ``2k`` long, real parts first.
    """

    magnitude_bits: int
    planes: np.ndarray
    signs: np.ndarray
    scale: np.ndarray | float
    signed: bool = True

    @property
    def real_planes(self) -> np.ndarray:
        k = self.planes.shape[-1] // 2
        return self.planes[..., :k]

    @property
    def imag_planes(self) -> np.ndarray:
        k = self.planes.shape[-1] // 2
        return self.planes[..., k:]

    def integers(self) -> np.ndarray:
        weights = (1 << np.arange(self.magnitude_bits, dtype=np.int64))
        mag = np.tensordot(weights, self.planes.astype(np.int64), axes=(0, 0))
        return mag * self.signs

    def dequantize(self) -> np.ndarray:
        comps = self.integers() * np.asarray(self.scale)
        k = comps.shape[-1] // 2
        return comps[..., :k] + 1j * comps[..., k:]


# -- mapping and programming ---------------------------------------------------


def map_dft_to_targets(w, g_max: float, n_tiles: int = 1, *, array_id: int = 0,
                       max_shape: tuple[int, int] = (PHYSICAL_ROWS, PHYSICAL_COLS)
                       ) -> ProgrammedArray:
    """Differential conductance targets for a complex matrix ``w`` (n_out x n_in).

    Accepts any matrix with real and imaginary parts in [-1, 1], so blocks of
    a larger DFT matrix and conjugate-transposed (inverse) matrices map too.
    """
    w = np.asarray(w, dtype=np.complex128)
    if w.ndim != 2 or w.size == 0:
        raise InvalidSizeError(f"weight matrix must be 2-D and non-empty, got {w.shape}")
    if not g_max > 0:
        raise ConfigError(f"g_max must be positive, got {g_max}")
    if n_tiles < 1:
        raise ConfigError(f"n_tiles must be >= 1, got {n_tiles}")
    lim = 1.0 + 1e-12
    if np.any(np.abs(w.real) > lim) or np.any(np.abs(w.imag) > lim):
        raise ConfigError("weights must have real and imaginary parts within [-1, 1]")
    n_out, n_in = w.shape
    layout = Layout(n_in, n_out, n_tiles)
    rows, cols = layout.shape
    if rows > max_shape[0] or cols > max_shape[1]:
        raise ConfigError(
            f"{rows}x{cols} layout exceeds the {max_shape[0]}x{max_shape[1]} array")

    wr, wi = w.real.T, w.imag.T
    block = np.block([[wr, wi], [-wi, wr]])          # (2 n_in, 2 n_out), input-major
    tile = np.zeros((2 * n_in, 4 * n_out))
    tile[:, 0::2] = np.maximum(block, 0.0) * g_max
    tile[:, 1::2] = np.maximum(-block, 0.0) * g_max
    targets = np.zeros((rows, cols))
    tr, tc = layout.tile_shape
    for t in range(n_tiles):
        targets[t * tr:(t + 1) * tr, t * tc:(t + 1) * tc] = tile
    return ProgrammedArray(targets, float(g_max), layout, int(array_id))


def program(targets: ProgrammedArray, model: HardwareModel,
            drifted: bool | None = None) -> ProgrammedArray:
    """Draw realised conductances for every cell.

    g = max(0, target + N(mu, sigma(target))) with ``mu`` the drift mean when
    ``drifted`` and the draw keyed by (seed, array_id, row, col).
    """
    if drifted is None:
        drifted = model.drifted
    g = targets.g_target
    if drifted:
        sigma, mu = model.sigma_drift(g), model.drift_mean(g)
    else:
        sigma, mu = model.sigma_prog(g), np.zeros_like(g)
    if np.any(sigma) or np.any(mu):
        z = rng.grid_normals(model.rng_seed, rng.PROGRAM, targets.array_id, g.shape)
        actual = np.maximum(0.0, g + (mu + sigma * z))
    else:
        actual = g.copy()
    return replace(targets, g_actual=actual)


def decode_weights(array, which: str = "actual") -> np.ndarray:
    """Complex weights per tile, shape (n_tiles, n_out, n_in), from the top input half."""
    grid = array.grid if which == "actual" else array.target_grid
    n_in, n_out = array.n_in, array.n_out
    tr, tc = 2 * n_in, 4 * n_out
    out = []
    for t in range(array.n_tiles):
        tile = grid[t * tr:t * tr + n_in, t * tc:(t + 1) * tc]
        diff = (tile[:, 0::2] - tile[:, 1::2]) / array.g_max    # (n_in, 2 n_out)
        out.append((diff[:, :n_out] + 1j * diff[:, n_out:]).T)
    return np.stack(out)


def weight_error_stats(array) -> dict:
    """Mean absolute magnitude and phase error of the stored complex weights."""
    w_hat = decode_weights(array, "actual")
    w = decode_weights(array, "target")
    mask = np.abs(w) > 0
    mag = np.abs(np.abs(w_hat[mask]) - np.abs(w[mask]))
    phase = np.abs(np.angle(w_hat[mask] * np.conj(w[mask])))
    return {"mae_magnitude": float(mag.mean()) if mag.size else 0.0,
            "mae_phase_radians": float(phase.mean()) if phase.size else 0.0}


def subsample_view(array: ProgrammedArray, n2: int, a: int | None = None,
                   b: int | None = None) -> SubsampledArray:
    """Run a DFT-n2 on an array programmed with DFT-n1 (requires n2 | n1)."""
    n1 = array.n_in
    if array.n_out != n1:
        raise InvalidSizeError("subsample_view needs a square DFT array")
    if n2 < 1 or n1 % n2:
        raise InvalidSizeError(f"{n2} does not divide {n1}")
    ratio = n1 // n2
    if a is None and b is None:
        a = next(d for d in range(math.isqrt(ratio), ratio + 1) if ratio % d == 0)
        b = ratio // a
    elif a is None:
        a = ratio // b
    elif b is None:
        b = ratio // a
    if a < 1 or b < 1 or a * b != ratio:
        raise InvalidSizeError(f"a*b must equal {ratio}, got a={a}, b={b}")
    return SubsampledArray(array, int(n2), int(a), int(b))


# -- bit-serial MVM ------------------------------------------------------------


def quantize_input(x, bits: int, signed: bool = True, scale=None) -> BitPlanes:
    """Sign-magnitude quantisation of complex inputs into bit planes.

    ``scale`` defaults to max|component| / (2**magnitude_bits - 1) over the
    whole input; an array broadcastable to ``x[..., :1]`` gives per-group
    scales. Unsigned mode rejects negative components.
    """
    x = np.asarray(x, dtype=np.complex128)
    if signed and bits < 2:
        raise ConfigError("signed inputs need at least 2 bits")
    if bits < 1:
        raise ConfigError("need at least 1 bit")
    mb = bits - 1 if signed else bits
    comps = np.concatenate([x.real, x.imag], axis=-1)
    if not signed and np.any(comps < 0):
        raise ConfigError("unsigned quantisation of negative values")
    mag = np.abs(comps)
    full = (1 << mb) - 1
    if scale is None:
        scale = mag.max() / full if mag.size else 0.0
    scale_arr = np.asarray(scale, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(scale_arr > 0, np.rint(mag / scale_arr), 0.0)
    q = np.clip(q, 0, full).astype(np.int64)
    planes = ((q[None, ...] >> np.arange(mb).reshape((mb,) + (1,) * q.ndim)) & 1).astype(np.uint8)
    signs = np.where(comps < 0, -1, 1).astype(np.int8)
    return BitPlanes(mb, planes, signs, scale if np.ndim(scale) else float(scale), signed)


def plane_schedule(bp: BitPlanes) -> tuple[np.ndarray, np.ndarray]:
    """Binary drive vectors (..., P, 2k) and their digital weights (P,).

    Signed inputs take two MVMs per magnitude bit, positive then negative
    components, with weights +2**b and -2**b.
    """
    planes = np.moveaxis(bp.planes, 0, -2)                 # (..., mb, 2k)
    mb = bp.magnitude_bits
    pw = 2.0 ** np.arange(mb)
    if not bp.signed:
        return planes, pw
    pos = planes & (bp.signs[..., None, :] > 0)
    neg = planes & (bp.signs[..., None, :] < 0)
    drives = np.stack([pos, neg], axis=-2).reshape(*planes.shape[:-2], 2 * mb, planes.shape[-1])
    weights = np.stack([pw, -pw], axis=-1).ravel()
    return drives.astype(np.uint8), weights


def mvm_count(n_planes: int, n_tiles: int) -> int:
    return -(-n_planes // n_tiles)


def _tile_product(array, d: np.ndarray, squared: bool = False) -> np.ndarray:
    # diagonal tiles summed on their own so a tile's columns see the same
    # reduction as a single-tile array; off-tile cells are added separately
    grid = array.grid_sq if squared else array.grid
    n_t = array.n_tiles
    if n_t == 1:
        return d @ grid
    tr, tc = 2 * array.n_in, 4 * array.n_out
    out = np.concatenate([d[:, t * tr:(t + 1) * tr] @ grid[t * tr:(t + 1) * tr, t * tc:(t + 1) * tc]
                          for t in range(n_t)], axis=1)
    off = array.crosstalk
    if off is not None:
        out = out + d @ (off ** 2 if squared else off)
    return out


def _column_currents(array, drives: np.ndarray, model: HardwareModel,
                     counters: np.ndarray, stream: int) -> np.ndarray:
    d = drives.astype(np.float64)
    current = model.read_voltage * _tile_product(array, d)
    if model.read_noise_coeff > 0:
        spread = np.sqrt(_tile_product(array, d, squared=True))
        cols = np.arange(current.shape[1], dtype=np.uint64)
        z = rng.counter_normals(model.rng_seed, (stream << 8) | rng.READ,
                                counters[:, None], cols[None, :])
        current = current + model.read_voltage * model.read_noise_coeff * spread * z
    c = model.ir_coeff(*array.physical_shape)
    if c:
        current = current - c * np.maximum(current, 0.0) ** 2 / model.adc_range_max
    return current


def analog_mvm(array, plane, model: HardwareModel, counter: int = 0,
               stream: int = 0) -> np.ndarray:
    """One analog MVM of a binary drive vector; returns an ADC code per column."""
    plane = np.asarray(plane)
    rows = array.grid.shape[0]
    if plane.shape != (rows,):
        raise InvalidSizeError(f"plane length {plane.shape} != ({rows},)")
    current = _column_currents(array, plane[None, :], model,
                               np.array([counter], dtype=np.uint64), stream)
    return model.digitize(current)[0]


def accumulate_bits(codes, weights, scale, g_max: float, model: HardwareModel) -> np.ndarray:
    """Recombine per-plane codes (..., P, 4 n_out) into complex outputs (..., n_out).

    Per plane the G- column is subtracted from the G+ column, planes are
    summed with their signed power-of-two weights and the result is scaled
    back to input units by scale / (g_max * V).
    """
    codes = np.asarray(codes)
    weights = np.asarray(weights, dtype=float)
    if codes.shape[-2] != weights.shape[0]:
        raise InvalidSizeError(f"got codes for {codes.shape[-2]} planes, expected {weights.shape[0]}")
    current = model.decode(codes)
    diff = current[..., 0::2] - current[..., 1::2]
    acc = np.einsum("...pj,p->...j", diff, weights)
    acc = acc * (np.asarray(scale)[..., None] if np.ndim(scale) else scale)
    acc = acc / (g_max * model.read_voltage)
    n_out = acc.shape[-1] // 2
    return acc[..., :n_out] + 1j * acc[..., n_out:]


@dataclass
class StageStats:
    mvms: int = 0
    conversions: int = 0
    clips: int = 0
    max_current: float = 0.0


def group_scale(x: np.ndarray, bits: int, signed: bool) -> np.ndarray:
    """Quantisation step per leading group: max component / full code."""
    mb = bits - 1 if signed else bits
    comps = np.maximum(np.abs(x.real), np.abs(x.imag))
    m = comps.reshape(x.shape[0], -1).max(axis=1)
    return (m / ((1 << mb) - 1)).reshape((x.shape[0],) + (1,) * (x.ndim - 1))


def run_dft_batch(array, x: np.ndarray, model: HardwareModel, *, bits: int = 13,
                  signed: bool = True, scale=None, counter: int = 0, stream: int = 0,
                  workers: int = 1) -> tuple[np.ndarray, StageStats]:
    """Apply the array to every vector of ``x`` (G, m, n_in) -> (G, m, n_out).

    The quantisation step is shared within each leading group G (one
    transform instance) unless ``scale`` is given. Read-noise counters are
    ``counter + vector_index * mvms_per_vector + j``, independent of
    ``workers``.
    """
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 3 or x.shape[-1] != array.n_in:
        raise InvalidSizeError(f"expected (G, m, {array.n_in}) input, got {x.shape}")
    if scale is None:
        scale = group_scale(x, bits, signed)
    G, m, n_in = x.shape
    n_out, n_t = array.n_out, array.n_tiles
    bp = quantize_input(x, bits, signed, scale)
    drives, weights = plane_schedule(bp)               # (G, m, P, 2 n_in)
    P = len(weights)
    n_mvm = mvm_count(P, n_t)
    vec_scale = np.broadcast_to(np.asarray(scale, dtype=float).reshape(-1, 1) if np.ndim(scale)
                                else np.full((G, 1), scale), (G, m)).reshape(-1)
    drives = drives.reshape(G * m, P, 2 * n_in)
    n_vec = G * m
    full = model.full_code

    def work(start: int):
        stop = min(start + CHUNK_VECTORS, n_vec)
        d = drives[start:stop]
        pad = n_mvm * n_t - P
        if pad:
            d = np.concatenate([d, np.zeros((stop - start, pad, 2 * n_in), np.uint8)], axis=1)
        d = d.reshape((stop - start) * n_mvm, n_t * 2 * n_in)
        counters = counter + np.arange(start * n_mvm, stop * n_mvm, dtype=np.uint64)
        current = _column_currents(array, d, model, counters, stream)
        codes = model.digitize(current)
        # plane p ran in MVM p // n_t on tile p % n_t
        codes = codes.reshape(stop - start, n_mvm * n_t, 4 * n_out)[:, :P]
        out = accumulate_bits(codes, weights, vec_scale[start:stop], array.g_max, model)
        clips = 0 if model.adc_ideal else int(np.count_nonzero(codes >= full))
        return out, clips, float(current.max(initial=0.0))

    starts = range(0, n_vec, CHUNK_VECTORS)
    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, starts))
    else:
        results = [work(s) for s in starts]
    out = np.concatenate([r[0] for r in results]).reshape(G, m, n_out)
    stats = StageStats(mvms=n_vec * n_mvm, conversions=n_vec * P * 4 * n_out,
                       clips=sum(r[1] for r in results),
                       max_current=max(r[2] for r in results))
    return out, stats


def calibrate_gmax(w, workload, model: HardwareModel, percentile: float = 99.99, *,
                   bits: int = 13, signed: bool = True, ceiling: float = 24 * US,
                   iterations: int = 60) -> float:
    """Largest g_max keeping ``percentile`` % of column currents below the ADC limit.

    Column currents are simulated without noise or IR drop for every bit
    plane of every workload vector; the search is a bisection on g_max.
    """
    samples = [np.asarray(s, dtype=np.complex128) for s in workload]
    if not samples:
        raise InvalidSizeError("empty calibration workload")
    w = np.asarray(w, dtype=np.complex128)
    unit = map_dft_to_targets(w, 1.0)
    unit = replace(unit, g_actual=unit.g_target)
    x = np.stack(samples)[:, None, :]
    if x.shape[-1] != w.shape[1]:
        raise InvalidSizeError(f"workload vectors must have length {w.shape[1]}")
    bp = quantize_input(x, bits, signed, group_scale(x, bits, signed))
    drives, _ = plane_schedule(bp)
    d = drives.reshape(-1, drives.shape[-1]).astype(np.float64)
    sums = model.read_voltage * (d @ unit.grid)
    if not np.any(sums > 0):
        return float(ceiling)
    unit_level = np.percentile(sums, percentile)

    def ok(g):
        return g * unit_level <= model.adc_range_max

    lo, hi = 0.0, float(ceiling)
    if ok(hi):
        return hi
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if ok(mid) else (lo, mid)
    return lo


def dft_array(k: int, g_max: float, model: HardwareModel, n_tiles: int = 1,
              array_id: int = 0, inverse: bool = False) -> ProgrammedArray:
    """Map and program a k-point DFT (or its conjugate transpose)."""
    w = dft_matrix(k)
    if inverse:
        w = w.conj().T
    return program(map_dft_to_targets(w, g_max, n_tiles, array_id=array_id), model)
