"""ADC-conversion, twiddle, buffer and energy accounting for DFT mappings.

Counts follow a tree walk over the factorisation plan: a Split of size
n1*n2 runs n1 copies of its second child and n2 copies of its first, with N
complex twiddle multiplications and one buffered intermediate (real and
imaginary 8-bit value per point) between the two stages.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, InvalidSizeError, UnfactorableError
from .plan import FactorPlan, Leaf, Split, plan_factorization

NJ = 1e-9
PJ = 1e-12

# Joules per elementary DFT; literals so table entries are exact decimals.
DEFAULT_DFT_ENERGY = {4: 0.234e-9, 8: 0.316e-9, 16: 0.483e-9, 32: 0.826e-9,
                      64: 1.543e-9, 128: 3.077e-9, 256: 6.496e-9}

CSV_HEADER = ["method", "K", "N", "adc_conversions", "twiddle_mults", "buffer_accesses",
              "energy_joules"]


class UnsupportedSizeError(InvalidSizeError):
    """Elementary DFT larger than the energy table covers."""


@dataclass(frozen=True, eq=False)
class EnergyTable:
    dft: Mapping[int, float] = field(default_factory=lambda: dict(DEFAULT_DFT_ENERGY))
    sram_access_8bit: float = 3.48e-12
    twiddle_complex_mult: float = 0.8e-12

    def __post_init__(self):
        if not self.dft:
            raise ConfigError("energy table is empty")
        sizes = sorted(self.dft)
        vals = [self.dft[s] for s in sizes]
        if any(v <= 0 for v in vals) or self.sram_access_8bit <= 0 or self.twiddle_complex_mult <= 0:
            raise ConfigError("energies must be positive")
        if any(b < a for a, b in zip(vals, vals[1:])):
            raise ConfigError("DFT energies must be nondecreasing in size")
        object.__setattr__(self, "dft", {int(s): float(self.dft[s]) for s in sizes})

    @property
    def max_size(self) -> int:
        return max(self.dft)

    def dft_energy(self, k: int) -> float:
        """Table entry, log-log interpolated between entries.

        Sizes below the smallest entry cost the smallest entry; sizes above
        the largest are refused.
        """
        if k in self.dft:
            return self.dft[k]
        if k > self.max_size:
            raise UnsupportedSizeError(f"DFT-{k} exceeds the energy table (max {self.max_size})")
        sizes = np.array(list(self.dft))
        if k < sizes[0]:
            return self.dft[int(sizes[0])]
        vals = np.array(list(self.dft.values()))
        return float(np.exp(np.interp(math.log(k), np.log(sizes), np.log(vals))))

    @classmethod
    def from_dict(cls, d: Mapping) -> "EnergyTable":
        d = dict(d)
        kw = {}
        if "dft" in d:
            kw["dft"] = {int(k): float(v) for k, v in d.pop("dft").items()}
        for name in ("sram_access_8bit", "twiddle_complex_mult"):
            if name in d:
                kw[name] = float(d.pop(name))
        if d:
            raise ConfigError(f"unknown energy table fields: {sorted(d)}")
        return cls(**kw)


@dataclass
class CostReport:
    method: str
    n: int
    adc_conversions: int
    twiddle_mults: int
    buffer_accesses_8bit: int
    analog_dft_invocations: dict
    energy_dft: float
    energy_twiddle: float
    energy_buffer: float
    dims: int = 1
    k: int | None = None

    @property
    def energy_total(self) -> float:
        return self.energy_dft + self.energy_twiddle + self.energy_buffer

    def recompute(self, table: EnergyTable) -> float:
        """Energy rebuilt from the counts alone (consistency check)."""
        e = sum(c * table.dft_energy(k) for k, c in self.analog_dft_invocations.items())
        return (e + self.twiddle_mults * table.twiddle_complex_mult
                + self.buffer_accesses_8bit * table.sram_access_8bit)

    def csv_row(self) -> list:
        return [self.method, self.k if self.k is not None else "", self.n, self.adc_conversions,
                self.twiddle_mults, self.buffer_accesses_8bit, repr(self.energy_total)]


# -- tree-walk counts ----------------------------------------------------------


def _walk(plan: FactorPlan, leaf, split_extra):
    if isinstance(plan, Leaf):
        return leaf(plan.size)
    return (split_extra(plan.size) + plan.n1 * _walk(plan.child2, leaf, split_extra)
            + plan.n2 * _walk(plan.child1, leaf, split_extra))


def count_conversions_fft(plan: FactorPlan, per_output: int = 1) -> int:
    """ADC conversions: 2 per point per elementary stage, times ``per_output``.

    ``per_output=1`` counts one conversion per real output value. Use
    :func:`bit_serial_multiplier` to count every column read of a bit-serial
    differential array instead.
    """
    return _walk(plan, lambda k: 2 * k, lambda n: 0) * per_output


def count_twiddles(plan: FactorPlan) -> int:
    return _walk(plan, lambda k: 0, lambda n: n)


def count_buffer_accesses(plan: FactorPlan) -> int:
    """8-bit intermediate values buffered (real and imaginary per point per boundary)."""
    return _walk(plan, lambda k: 0, lambda n: 2 * n)


def dft_invocations(plan: FactorPlan) -> dict:
    if isinstance(plan, Leaf):
        return {plan.size: 1}
    out = Counter()
    for k, c in dft_invocations(plan.child2).items():
        out[k] += plan.n1 * c
    for k, c in dft_invocations(plan.child1).items():
        out[k] += plan.n2 * c
    return dict(out)


def count_conversions_direct(n: int, k_max: int, per_output: int = 1) -> int:
    if n < 1 or k_max < 1:
        raise InvalidSizeError(f"need n, k_max >= 1, got {n}, {k_max}")
    return 2 * n * (-(-n // k_max)) * per_output


def bit_serial_multiplier(input_bits: int = 13, signed: bool = True) -> int:
    """Column reads per real output of a bit-serial differential array.

    Each magnitude bit is one plane (two for signed inputs, positive and
    negative components separately) and each real output uses two columns.
    """
    planes = 2 * (input_bits - 1) if signed else input_bits
    return 2 * planes


def mvms_per_dft(input_bits: int = 13, n_tiles: int = 1, signed: bool = True) -> int:
    planes = 2 * (input_bits - 1) if signed else input_bits
    return -(-planes // n_tiles)


def closed_form_conversions(n: int, s: int) -> int:
    return 2 * s * n


def closed_form_twiddles(n: int, s: int) -> int:
    return (s - 1) * n


# -- energy ----------------------------------------------------------------------


@dataclass(frozen=True)
class DirectMVM:
    n: int
    k_max: int


@dataclass(frozen=True)
class VectorRadix:
    p: int
    q: int
    r: int
    s: int
    k_max: int = 256

    @property
    def shape(self) -> tuple[int, int]:
        return self.p * self.r, self.q * self.s


def vr_for_side(n: int, k_max: int = 256) -> VectorRadix:
    """P=Q=R=S=sqrt(N) for even powers of two, else P=Q=2R=2S."""
    e = int(round(math.log2(n)))
    if 2 ** e != n:
        raise InvalidSizeError(f"vector-radix defaults need a power of two, got {n}")
    lo = e // 2
    return VectorRadix(2 ** (e - lo), 2 ** (e - lo), 2 ** lo, 2 ** lo, k_max)


def _fft_counts(n: int, k_max: int) -> tuple[int, int, int, dict]:
    plan = plan_factorization(n, k_max)
    return (count_conversions_fft(plan), count_twiddles(plan), count_buffer_accesses(plan),
            dft_invocations(plan))


def _direct_counts(n: int, k_max: int) -> tuple[int, dict]:
    blocks = -(-n // k_max)
    size = min(n, k_max)
    return count_conversions_direct(n, k_max), {size: blocks * blocks}


def _report(method, n, conv, tw, buf, inv, table, dims, k):
    e_dft = sum(c * table.dft_energy(s) for s, c in inv.items())
    return CostReport(method, n, int(conv), int(tw), int(buf), dict(inv), e_dft,
                      tw * table.twiddle_complex_mult, buf * table.sram_access_8bit, dims, k)


def _scale(inv: Mapping[int, int], m: int) -> Counter:
    return Counter({k: m * c for k, c in inv.items()})


def energy_estimate(spec, table: EnergyTable | None = None, dims: int = 1,
                    per_output: int = 1) -> CostReport:
    """Counts and energy of one transform.

    ``spec`` is a FactorPlan (analog FFT), DirectMVM or, for ``dims=2``, a
    VectorRadix. A 1-D plan with ``dims=2`` is applied row-column to an
    N x N input.
    """
    table = table or EnergyTable()
    if dims not in (1, 2):
        raise InvalidSizeError(f"dims must be 1 or 2, got {dims}")
    if isinstance(spec, (Leaf, Split)):
        n = spec.size
        conv, tw, buf = count_conversions_fft(spec), count_twiddles(spec), count_buffer_accesses(spec)
        inv = Counter(dft_invocations(spec))
        k = max(spec.leaves())
        if dims == 2:
            conv, tw, buf, inv = 2 * n * conv, 2 * n * tw, 2 * n * buf + 2 * n * n, _scale(inv, 2 * n)
        return _report("analog-fft", n, conv * per_output, tw, buf, inv, table, dims, k)
    if isinstance(spec, DirectMVM):
        n = spec.n
        conv, inv = _direct_counts(n, spec.k_max)
        buf = 0
        if dims == 2:
            conv, inv, buf = 2 * n * conv, _scale(inv, 2 * n), 2 * n * n
        return _report("analog-direct", n, conv * per_output, 0, buf, inv, table, dims, spec.k_max)
    if isinstance(spec, VectorRadix):
        if dims != 2:
            raise InvalidSizeError("vector-radix plans are 2-D")
        m, n = spec.shape
        pts = m * n
        conv = tw = buf = 0
        inv = Counter()
        for size in (spec.p, spec.q, spec.r, spec.s):
            c, t, b, i = _fft_counts(size, spec.k_max)
            vectors = pts // size
            conv += vectors * c
            tw += vectors * t
            buf += vectors * b
            inv.update(_scale(i, vectors))
        tw += pts
        buf += 3 * 2 * pts
        return _report("analog-vr-fft", m, conv * per_output, tw, buf, inv, table, 2, spec.k_max)
    raise ConfigError(f"unsupported cost spec {spec!r}")


def digital_comparator(n: int, coefficient: float, dims: int = 2) -> float:
    """coefficient * N^2 * log2 N (2-D) or coefficient * N * log2 N (1-D).

    The coefficient must come from the user's own measurements.
    """
    if n < 1:
        raise InvalidSizeError(f"n must be positive, got {n}")
    if coefficient < 0:
        raise ConfigError("coefficient must be non-negative")
    base = n * n if dims == 2 else n
    return coefficient * base * math.log2(n) if n > 1 else 0.0


def fit_digital_coefficient(sizes: Sequence[int], energies: Sequence[float], dims: int = 2) -> float:
    """Least-squares coefficient for measured digital energies."""
    basis = np.array([digital_comparator(n, 1.0, dims) for n in sizes])
    e = np.asarray(energies, dtype=float)
    return float(basis @ e / (basis @ basis))


def cheapest_plan(n: int, k_max: int, table: EnergyTable | None = None) -> FactorPlan:
    """Lowest-energy factorisation with every leaf <= k_max.

    Split energy is additive over the tree walk, so a divisor recursion is
    exact. Every plan allowed at k_max is also allowed at a larger k_max,
    which makes the result nonincreasing in k_max. Ties keep the min-depth
    planner's choice.
    """
    table = table or EnergyTable()
    if n < 1 or k_max < 1:
        raise InvalidSizeError(f"need n, k_max >= 1, got {n}, {k_max}")
    memo: dict[int, tuple[float, FactorPlan]] = {}

    def best(m: int) -> tuple[float, FactorPlan]:
        if m in memo:
            return memo[m]
        cands = [(table.dft_energy(m), Leaf(m))] if m <= k_max else []
        for d in range(2, math.isqrt(m) + 1):
            if m % d:
                continue
            for a, b in ((d, m // d), (m // d, d)):
                try:
                    (ea, pa), (eb, pb) = best(a), best(b)
                except UnfactorableError:
                    continue
                e = (b * ea + a * eb + m * table.twiddle_complex_mult
                     + 2 * m * table.sram_access_8bit)
                cands.append((e, Split(a, b, pa, pb)))
        if not cands:
            raise UnfactorableError(f"{m} has a prime factor larger than k_max={k_max}")
        e_min, plan = min(cands, key=lambda c: c[0])
        ref = plan_factorization(m, k_max)
        e_ref = energy_estimate(ref, table).energy_total
        if e_ref <= e_min * (1 + 1e-12):
            e_min, plan = e_ref, ref
        memo[m] = (e_min, plan)
        return memo[m]

    return best(int(n))[1]


def best_analog(n: int, k_max: int, table: EnergyTable | None = None, dims: int = 1) -> CostReport:
    table = table or EnergyTable()
    direct = energy_estimate(DirectMVM(n, k_max), table, dims)
    if dims == 2:
        fft = energy_estimate(vr_for_side(n, k_max), table, 2)
    else:
        fft = energy_estimate(cheapest_plan(n, k_max, table), table, 1)
    return min(direct, fft, key=lambda r: r.energy_total)


def scaling_report(k_list: Sequence[int] = (16, 64, 256),
                   n_range: Sequence[int] = tuple(2 ** e for e in range(4, 21)),
                   table: EnergyTable | None = None, dims: int = 1,
                   digital_coefficient: float | None = None) -> list[CostReport | list]:
    """Rows for analog FFT and direct MVM at every (K, N); digital rows if a coefficient is given."""
    table = table or EnergyTable()
    rows = []
    for k in k_list:
        for n in n_range:
            if dims == 2:
                fft = energy_estimate(vr_for_side(n, k), table, 2)
            else:
                fft = energy_estimate(cheapest_plan(n, k, table), table, 1)
            fft.k = k
            rows.append(fft)
            direct = energy_estimate(DirectMVM(n, k), table, dims)
            rows.append(direct)
    if digital_coefficient is not None:
        for n in n_range:
            rows.append(["digital-fft", "", n, "", "", "",
                         repr(digital_comparator(n, digital_coefficient, dims))])
    return rows


def report_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.csv_row() if isinstance(r, CostReport) else r)
    return buf.getvalue()


def loglog_slope(ns, values) -> float:
    return float(np.polyfit(np.log(np.asarray(ns, float)), np.log(np.asarray(values, float)), 1)[0])
