"""Empirical degeneracy counts.

Exhaustive mode enumerates every unordered triple / quadruple ``i < j < k (< l)``
and evaluates the residual with the lowest index as the anchor, using the same
float64 kernels as :func:`degeneracy.geometry.collinearity_residual` and
:func:`degeneracy.geometry.coplanarity_residual`.  Work is split by anchor
index; partial counts are integers, so any thread count gives the same total.

Sampled mode draws uniform k-subsets with replacement across draws, in fixed
chunks of ``CHUNK`` samples.  Chunk ``c`` always uses sub-stream
``("subsets", k, c)``, which makes the estimate independent of how chunks are
scheduled.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Union

import numpy as np

from degeneracy.analytics import subset_count
from degeneracy.errors import CapExceededError, InvalidInputError
from degeneracy.geometry import PointCloud, _cross, _dot3, _norm3
from degeneracy.rng import SeededRng, as_rng

__all__ = [
    "CHUNK",
    "COLLINEAR_CAP",
    "COPLANAR_CAP",
    "ComparisonReport",
    "CountResult",
    "compare_analytic_empirical",
    "count_collinear_exhaustive",
    "count_coplanar_exhaustive",
    "count_degenerate_sampled",
    "wilson_interval",
]

COLLINEAR_CAP = 500
COPLANAR_CAP = 120
CHUNK = 1 << 15
Z95 = 1.959963984540054


@dataclass(frozen=True)
class CountResult:
    degenerate_count: float
    total_subsets: float
    mode: str
    ci_low: float
    ci_high: float
    samples_used: int
    k: int
    epsilon: float

    @property
    def fraction(self) -> float:
        return self.degenerate_count / self.total_subsets if self.total_subsets else 0.0

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "k": self.k,
            "epsilon": self.epsilon,
            "degenerate_count": self.degenerate_count,
            "total_subsets": self.total_subsets,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "samples_used": self.samples_used,
        }


def _check_cloud(cloud, k: int) -> np.ndarray:
    if not isinstance(cloud, PointCloud):
        cloud = PointCloud(cloud)
    if cloud.dim != 3:
        raise InvalidInputError(f"degeneracy counting needs a 3-D cloud, got dimension {cloud.dim}")
    return cloud.points


def _check_eps(epsilon: float) -> float:
    epsilon = float(epsilon)
    if math.isnan(epsilon) or epsilon < 0:
        raise InvalidInputError(f"epsilon must be >= 0, got {epsilon}")
    return epsilon


def _parallel_sum(fn: Callable[[int], int], tasks: range, threads: int) -> int:
    if threads < 1:
        raise InvalidInputError(f"threads must be >= 1, got {threads}")
    if threads == 1 or len(tasks) < 2:
        return sum(fn(t) for t in tasks)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return sum(pool.map(fn, tasks))


def _collinear_anchor(pts: np.ndarray, i: int, epsilon: float) -> int:
    d = pts[i + 1 :] - pts[i]
    m = len(d)
    if m < 2:
        return 0
    res = _norm3(_cross(d[:, None, :], d[None, :, :]))
    upper = np.triu(np.ones((m, m), dtype=bool), 1)
    return int(np.count_nonzero((res < epsilon) & upper))


def _coplanar_anchor(pts: np.ndarray, i: int, epsilon: float, upper3: np.ndarray) -> int:
    d = pts[i + 1 :] - pts[i]
    m = len(d)
    if m < 3:
        return 0
    c = _cross(d[:, None, :], d[None, :, :])
    det = np.abs(_dot3(c[:, :, None, :], d[None, None, :, :]))
    mask = upper3[-m:, -m:, -m:] if upper3.shape[0] >= m else _upper3(m)
    return int(np.count_nonzero((det < epsilon) & mask))


def _upper3(m: int) -> np.ndarray:
    r = np.arange(m)
    return (r[:, None, None] < r[None, :, None]) & (r[None, :, None] < r[None, None, :])


def count_collinear_exhaustive(
    cloud: PointCloud, epsilon: float, *, cap: int = COLLINEAR_CAP, threads: int = 1
) -> CountResult:
    """Exact number of triples with collinearity residual ``< epsilon``."""
    pts = _check_cloud(cloud, 3)
    epsilon = _check_eps(epsilon)
    n = len(pts)
    if n > cap:
        raise CapExceededError(n, cap, 3)
    count = _parallel_sum(lambda i: _collinear_anchor(pts, i, epsilon), range(max(n - 2, 0)), threads)
    total = subset_count(n, 3) if n >= 3 else 0.0
    return CountResult(float(count), total, "exhaustive", float(count), float(count), 0, 3, epsilon)


def count_coplanar_exhaustive(
    cloud: PointCloud, epsilon: float, *, cap: int = COPLANAR_CAP, threads: int = 1
) -> CountResult:
    """Exact number of quadruples with coplanarity residual ``< epsilon``."""
    pts = _check_cloud(cloud, 4)
    epsilon = _check_eps(epsilon)
    n = len(pts)
    if n > cap:
        raise CapExceededError(n, cap, 4)
    upper3 = _upper3(max(n - 1, 0))
    count = _parallel_sum(
        lambda i: _coplanar_anchor(pts, i, epsilon, upper3), range(max(n - 3, 0)), threads
    )
    total = subset_count(n, 4) if n >= 4 else 0.0
    return CountResult(float(count), total, "exhaustive", float(count), float(count), 0, 4, epsilon)


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise InvalidInputError("trials must be positive")
    f = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (f + z2 / (2 * trials)) / denom
    half = z * math.sqrt(f * (1 - f) / trials + z2 / (4 * trials * trials)) / denom
    # the exact interval always contains f; guard against rounding at f = 0 or 1
    return min(max(0.0, centre - half), f), max(min(1.0, centre + half), f)


def _draw_subsets(g: np.random.Generator, n: int, k: int, size: int) -> np.ndarray:
    """``size`` uniform k-subsets of ``range(n)``, each row sorted ascending."""
    out = np.empty((size, k), dtype=np.int64)
    for j in range(k):
        v = g.integers(0, n - j, size=size)
        if j:
            # map v onto the complement of the already chosen (sorted) indices
            prev = np.sort(out[:, :j], axis=1)
            for col in range(j):
                v = v + (v >= prev[:, col])
        out[:, j] = v
    out.sort(axis=1)
    return out


def _sampled_chunk(pts: np.ndarray, k: int, epsilon: float, rng: SeededRng, chunk: int, size: int) -> int:
    idx = _draw_subsets(rng.stream("subsets", k, chunk), len(pts), k, size)
    a = pts[idx[:, 0]]
    c = _cross(pts[idx[:, 1]] - a, pts[idx[:, 2]] - a)
    if k == 3:
        res = _norm3(c)
    else:
        res = np.abs(_dot3(c, pts[idx[:, 3]] - a))
    return int(np.count_nonzero(res < epsilon))


def count_degenerate_sampled(
    cloud: PointCloud,
    k: int,
    epsilon: float,
    num_samples: int,
    rng: Union[SeededRng, int],
    *,
    threads: int = 1,
) -> CountResult:
    """Estimate the degenerate k-subset count from ``num_samples`` random subsets.

    Returns ``f * C(N, k)`` with the 95% Wilson interval on ``f`` scaled by
    ``C(N, k)``.
    """
    if k not in (3, 4):
        raise InvalidInputError(f"k must be 3 or 4, got {k}")
    pts = _check_cloud(cloud, k)
    epsilon = _check_eps(epsilon)
    n = len(pts)
    if n < k:
        raise InvalidInputError(f"need at least {k} points, got {n}")
    if isinstance(num_samples, bool) or int(num_samples) != num_samples or num_samples < 1:
        raise InvalidInputError(f"num_samples must be a positive integer, got {num_samples!r}")
    num_samples = int(num_samples)
    rng = as_rng(rng)
    n_chunks = -(-num_samples // CHUNK)

    def work(c: int) -> int:
        size = min(CHUNK, num_samples - c * CHUNK)
        return _sampled_chunk(pts, k, epsilon, rng, c, size)

    hits = _parallel_sum(work, range(n_chunks), threads)
    total = subset_count(n, k)
    lo, hi = wilson_interval(hits, num_samples)
    f = hits / num_samples
    return CountResult(f * total, total, "sampled", lo * total, hi * total, num_samples, k, epsilon)


@dataclass(frozen=True)
class ComparisonReport:
    analytic_expectation: float
    empirical: CountResult
    ratio: Optional[float]
    ratio_defined: bool
    analytic_outside_ci: bool
    params: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "analytic_expectation": self.analytic_expectation,
            "empirical": self.empirical.to_dict(),
            "ratio": self.ratio,
            "ratio_defined": self.ratio_defined,
            "analytic_outside_ci": self.analytic_outside_ci,
            "params": dict(self.params),
        }


def compare_analytic_empirical(
    cloud_params: dict[str, Any], epsilon: float, analytic: float, empirical: CountResult
) -> ComparisonReport:
    """Put an analytic expectation next to a measured count.

    ``ratio`` is empirical / analytic, ``None`` when the analytic value is 0.
    ``analytic_outside_ci`` flags an analytic value outside the empirical
    interval (a point interval in exhaustive mode).
    """
    analytic = float(analytic)
    if math.isnan(analytic) or analytic < 0:
        raise InvalidInputError(f"analytic expectation must be >= 0, got {analytic}")
    defined = analytic > 0
    ratio = empirical.degenerate_count / analytic if defined else None
    outside = not (empirical.ci_low <= analytic <= empirical.ci_high)
    params = dict(cloud_params)
    params["epsilon"] = float(epsilon)
    return ComparisonReport(analytic, empirical, ratio, defined, outside, params)
