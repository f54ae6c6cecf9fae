"""Closed-form degeneracy probabilities and expected counts.

Uniform data in ``[0, 1]^d``::

    P_k        ~ C * eps / N**(d - k)
    E[count]   ~ eps * N**e / k!,  e = 2k - d in general,
                 e = 2 for collinear triples and e = 1 for coplanar
                 quadruples in 3-D (eps N^2 / 6 and eps N / 24)

Structured scenes in a cylinder of volume ``pi R^2 h``::

    P(coplanar)          ~ A_plane * delta / (pi R^2 h)
    P(nearly spherical)  ~ delta * d * r**(d-1) / (pi R^2 h)

Aggregation ``1 - prod (1 - p_i)**m_i`` is done in log space.  Probabilities
are clamped to ``[0, 1]``; expected counts are never clamped.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

from degeneracy.errors import InvalidInputError

__all__ = [
    "AmplificationFactors",
    "ExpectationRow",
    "ExpectationTable",
    "RandomModelParams",
    "StructuredModelParams",
    "amplified_expected_counts",
    "build_expectation_table",
    "composite_degeneracy_probability",
    "count_exponent",
    "expected_collinear",
    "expected_coplanar",
    "expected_degenerate_subsets",
    "near_spherical_probability",
    "overall_probability",
    "overall_probability_exp_approx",
    "single_subset_probability",
    "structured_coplanar_probability",
    "subset_count",
    "subset_count_asymptotic",
]


def _nonneg(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value < 0:
        raise InvalidInputError(f"{name} must be finite and >= 0, got {value}")
    return value


def _pos(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise InvalidInputError(f"{name} must be finite and > 0, got {value}")
    return value


def _int(name: str, value, minimum: int) -> int:
    if isinstance(value, bool) or int(value) != value or value < minimum:
        raise InvalidInputError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def _clamp01(p: float) -> float:
    return min(1.0, max(0.0, p))


def _power_ratio(n: int, exponent: int) -> float:
    """``n**exponent`` as a float; exact integer power while it fits.

    Integer powers keep ``(2N)**e == 2**e * N**e`` exact in floating point,
    which the growth-law checks rely on.  Falls back to log space on
    overflow.
    """
    try:
        if exponent >= 0:
            return float(n**exponent)
        return 1.0 / float(n ** (-exponent))
    except OverflowError:
        log = exponent * math.log(n)
        return math.exp(log) if log < 709.0 else math.inf


@dataclass(frozen=True)
class RandomModelParams:
    """Uniform-data model: ``N`` points in ``[0,1]^d``, subsets of size ``k``."""

    n_points: int
    dim: int
    subset_size: int
    epsilon: float
    proportionality: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "n_points", _int("n_points", self.n_points, 1))
        object.__setattr__(self, "dim", _int("dim", self.dim, 1))
        object.__setattr__(self, "subset_size", _int("subset_size", self.subset_size, 1))
        if self.subset_size > self.n_points:
            raise InvalidInputError(f"subset_size {self.subset_size} exceeds n_points {self.n_points}")
        object.__setattr__(self, "epsilon", _nonneg("epsilon", self.epsilon))
        object.__setattr__(self, "proportionality", _pos("proportionality", self.proportionality))


@dataclass(frozen=True)
class StructuredModelParams:
    """Structured scene: plane / sphere inside a cylinder of radius ``R``, height ``h``."""

    plane_area: float = 0.0
    shell_thickness: float = 0.0
    cyl_radius: float = 1.0
    cyl_height: float = 1.0
    sphere_radius: float = 1.0
    dim: int = 3

    def __post_init__(self):
        object.__setattr__(self, "plane_area", _nonneg("plane_area", self.plane_area))
        object.__setattr__(self, "shell_thickness", _nonneg("shell_thickness", self.shell_thickness))
        object.__setattr__(self, "cyl_radius", _pos("cyl_radius", self.cyl_radius))
        object.__setattr__(self, "cyl_height", _pos("cyl_height", self.cyl_height))
        object.__setattr__(self, "sphere_radius", _pos("sphere_radius", self.sphere_radius))
        object.__setattr__(self, "dim", _int("dim", self.dim, 1))

    @property
    def total_volume(self) -> float:
        return math.pi * self.cyl_radius**2 * self.cyl_height

    @property
    def sphere_area(self) -> float:
        """``d * r**(d-1)``, the surface measure used by the shell model."""
        return self.dim * self.sphere_radius ** (self.dim - 1)


@dataclass(frozen=True)
class AmplificationFactors:
    """Postulated multipliers for quantised over random expected counts."""

    collinear: float = 10.0
    coplanar: float = 3.0

    def __post_init__(self):
        object.__setattr__(self, "collinear", _pos("amplification collinear", self.collinear))
        object.__setattr__(self, "coplanar", _pos("amplification coplanar", self.coplanar))


# ---------------------------------------------------------------------------
# uniform random data
# ---------------------------------------------------------------------------

# The general exponent 2k - d gives N^3 and N^5 for the 3-D triple and
# quadruple cases, but the published 3-D results (and the comparison table
# built from them) use N^2 and N.  Those two cases follow the published values.
_PUBLISHED_3D_EXPONENTS = {(3, 3): 2, (4, 3): 1}


def count_exponent(k: int, d: int) -> int:
    """Power of ``N`` in the expected degenerate-subset count."""
    return _PUBLISHED_3D_EXPONENTS.get((k, d), 2 * k - d)


def single_subset_probability(params: RandomModelParams) -> float:
    p = params
    value = p.proportionality * p.epsilon * _power_ratio(p.n_points, p.subset_size - p.dim)
    return _clamp01(value)


def expected_degenerate_subsets(params: RandomModelParams) -> float:
    """``eps * N**e / k!`` with ``e = count_exponent(k, d)``.

    The proportionality constant is not applied.
    """
    p = params
    k = p.subset_size
    e = count_exponent(k, p.dim)
    if p.epsilon == 0.0:
        return 0.0
    value = p.epsilon * _power_ratio(p.n_points, e) / math.factorial(k)
    if math.isinf(value):
        # the power overflowed on its own; try the whole expression in log space
        log = math.log(p.epsilon) + e * math.log(p.n_points) - math.lgamma(k + 1)
        value = math.exp(log) if log < 709.0 else math.inf
    return value


def expected_collinear(n: int, epsilon: float) -> float:
    """``eps N^2 / 6``: expected collinear triples among ``N`` uniform points in 3-D."""
    n = _int("N", n, 3)
    return expected_degenerate_subsets(RandomModelParams(n, 3, 3, epsilon))


def expected_coplanar(n: int, epsilon: float) -> float:
    """``eps N / 24``: expected coplanar quadruples among ``N`` uniform points in 3-D."""
    n = _int("N", n, 4)
    return expected_degenerate_subsets(RandomModelParams(n, 3, 4, epsilon))


def subset_count(n: int, k: int) -> float:
    """``C(N, k)`` as a float (``inf`` if it does not fit)."""
    n = _int("N", n, 0)
    k = _int("k", k, 0)
    if k > n:
        raise InvalidInputError(f"k = {k} exceeds N = {n}")
    try:
        return float(math.comb(n, k))
    except OverflowError:
        log = math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
        return math.exp(log) if log < 709.0 else math.inf


def subset_count_asymptotic(n: int, k: int) -> float:
    """Large-N form ``N**k / k!``."""
    n = _int("N", n, 0)
    k = _int("k", k, 0)
    return _power_ratio(n, k) / math.factorial(k) if n else 0.0


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------

def overall_probability(p_k_list: Iterable[tuple[float, float]]) -> float:
    """``1 - prod (1 - p)**m`` over ``(p, m)`` pairs.

    The product is accumulated as ``sum m * log1p(-p)`` and finished with
    ``-expm1``, so tiny probabilities with huge multiplicities stay accurate.
    """
    total = 0.0
    certain = False
    for p, m in p_k_list:
        p = float(p)
        m = _nonneg("multiplicity", m)
        if not (0.0 <= p <= 1.0):
            raise InvalidInputError(f"probability must lie in [0, 1], got {p}")
        if m == 0.0:
            continue
        if p == 1.0:
            certain = True
            continue
        total += m * math.log1p(-p)
    if certain:
        return 1.0
    return _clamp01(-math.expm1(total))


def overall_probability_exp_approx(sum_pk: float) -> float:
    """``1 - exp(-sum P_k)``."""
    s = float(sum_pk)
    if math.isnan(s) or s < 0:
        raise InvalidInputError(f"sum of probabilities must be >= 0, got {s}")
    return _clamp01(-math.expm1(-s))


def composite_degeneracy_probability(factors: Sequence[float]) -> float:
    """Combine independent factor probabilities: ``1 - prod (1 - P_i)``."""
    return overall_probability((p, 1.0) for p in factors)


# ---------------------------------------------------------------------------
# structured environments
# ---------------------------------------------------------------------------

def structured_coplanar_probability(params: StructuredModelParams) -> float:
    return _clamp01(params.plane_area * params.shell_thickness / params.total_volume)


def near_spherical_probability(params: StructuredModelParams) -> float:
    return _clamp01(params.shell_thickness * params.sphere_area / params.total_volume)


# ---------------------------------------------------------------------------
# random vs quantised comparison table
# ---------------------------------------------------------------------------

def amplified_expected_counts(
    base_collinear: float, base_coplanar: float, amp: AmplificationFactors = AmplificationFactors()
) -> tuple[float, float]:
    base_collinear = _nonneg("base_collinear", base_collinear)
    base_coplanar = _nonneg("base_coplanar", base_coplanar)
    return amp.collinear * base_collinear, amp.coplanar * base_coplanar


@dataclass(frozen=True)
class ExpectationRow:
    n: int
    collinear_random: float
    collinear_quantized: float
    coplanar_random: float
    coplanar_quantized: float


@dataclass(frozen=True)
class ExpectationTable:
    rows: tuple[ExpectationRow, ...]
    eps_collinear: float
    eps_coplanar: float
    amplification: AmplificationFactors

    COLUMNS = ("n", "collinear_random", "collinear_quantized", "coplanar_random", "coplanar_quantized")

    def __len__(self) -> int:
        return len(self.rows)

    def row(self, n: int) -> ExpectationRow:
        for r in self.rows:
            if r.n == n:
                return r
        raise KeyError(n)

    def to_dict(self) -> dict:
        return {
            "eps_collinear": self.eps_collinear,
            "eps_coplanar": self.eps_coplanar,
            "amplification": asdict(self.amplification),
            "columns": list(self.COLUMNS),
            "rows": [asdict(r) for r in self.rows],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.COLUMNS)
        for r in self.rows:
            writer.writerow([r.n] + [repr(getattr(r, c)) for c in self.COLUMNS[1:]])
        return buf.getvalue()

    def to_text(self) -> str:
        header = f"{'N':>8} {'Collinear':>14} {'Collinear':>14} {'Coplanar':>14} {'Coplanar':>14}\n"
        header += f"{'':>8} {'Random':>14} {'Quantized':>14} {'Random':>14} {'Quantized':>14}\n"
        lines = [
            f"{r.n:>8d} {r.collinear_random:>14.6g} {r.collinear_quantized:>14.6g} "
            f"{r.coplanar_random:>14.6g} {r.coplanar_quantized:>14.6g}"
            for r in self.rows
        ]
        return header + "\n".join(lines) + ("\n" if lines else "")


def build_expectation_table(
    n_values: Sequence[int],
    eps_collinear: float = 1e-6,
    eps_coplanar: float = 1e-3,
    amp: AmplificationFactors = AmplificationFactors(),
) -> ExpectationTable:
    """Expected collinear / coplanar counts for random and quantised data.

    The two tolerances are separate on purpose: the published comparison
    table's coplanar column is ``eps N / 24`` with ``eps = 1e-3`` while its
    collinear column uses ``eps = 1e-6``.  The defaults reproduce it.
    """
    eps_collinear = _nonneg("eps_collinear", eps_collinear)
    eps_coplanar = _nonneg("eps_coplanar", eps_coplanar)
    rows = []
    for n in n_values:
        n = _int("N", n, 4)
        col = expected_collinear(n, eps_collinear)
        cop = expected_coplanar(n, eps_coplanar)
        col_q, cop_q = amplified_expected_counts(col, cop, amp)
        rows.append(ExpectationRow(n, col, col_q, cop, cop_q))
    return ExpectationTable(tuple(rows), eps_collinear, eps_coplanar, amp)
