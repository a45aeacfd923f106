"""Boundary crossing probabilities over a whole partition of [q, d].

The crossing probability P(W_t > g(t) for some t in [q, d]) factorizes over
any partition q = t_0 < ... < t_n = d whose knots include the boundary's:

    P(no crossing) = integral over the orthant prod_i (-inf, g(t_i)] of
        phi(x_0, ..., x_n) * prod_i  P(bridge i stays below g | x_i, x_i1),

where phi is the joint density of the process at the partition times and
the bridge factors are the exact non-crossing probabilities from the bridge
module.  Because the bridge factors are exact, the value does not depend on
the partition (partition invariance) as long as g is affine on every
subinterval.

Written out with the pair/conditional densities, the integrand is

    c * prod_{i=1}^{n-1} sqrt(t_{i+1}-q) / sqrt((t_{i+1}-t_i)(t_i-q))
      * exp[-(q/4) ((x_0+x_n)^2/(3q-d) + (x_0-x_n)^2/(d-q))]
      * prod_{i=1}^{n-1} exp[-(q/4) ((x_i-x_0)^2/(t_i-q)
            + (x_{i+1}-x_i)^2/(t_{i+1}-t_i) - (x_{i+1}-x_0)^2/(t_{i+1}-q))]
      * prod bridge factors,

    c = q^{(n+1)/2} / (2^n pi^{(n+1)/2} sqrt((3q-d)(d-q))),

which is exactly the pair density at (t_0, t_n) times the chain of
conditional densities of x_i given (x_0, x_{i+1}); `bcp_integrand`
exposes it for testing and the quadrature engine contracts it axis by axis.

Two evaluators:

* `bcp_quadrature` - deterministic tensor Gauss-Legendre with refinement,
  capped at n <= 4 (integral dimension 5); the chain structure reduces the
  cost to matrix contractions along the partition.
* `bcp_montecarlo` - draws the skeleton vector X ~ N(0, Sigma) and averages
  the product of indicators and bridge factors; unbiased for every n, with
  seed-derived block streams so results do not depend on worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .boundary import PiecewiseAffineBoundary, approximate
from .bridge import noncross_affine_product
from .errors import (DimensionTooLargeError, DomainError,
                     QuadratureNonConvergenceError)
from .numerics import cholesky, gauss_legendre_on, gaussian_stream
from .process import ProcessParams, covariance_matrix

_QUAD_LEVELS = (16, 24, 32, 48, 64, 96, 144, 208)
_TAIL_CUT = 8.0         # marginal sd is 1; omitted mass < 1e-15 per axis
_UPPER_CAP = 8.5


@dataclass(frozen=True)
class Partition:
    """Partition q = t_0 < ... < t_n = d of the process interval."""

    params: ProcessParams
    times: tuple[float, ...]

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        object.__setattr__(self, "times", times)
        if len(times) < 2:
            raise DomainError("a partition needs at least two points")
        if times[0] != self.params.q or times[-1] != self.params.d:
            raise DomainError(
                f"partition endpoints must be q={self.params.q} and "
                f"d={self.params.d}, got {times[0]} and {times[-1]}")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise DomainError("partition times must be strictly increasing")

    @property
    def n(self) -> int:
        """Number of subintervals."""
        return len(self.times) - 1

    @staticmethod
    def equidistant(params: ProcessParams, n: int) -> "Partition":
        if n < 1:
            raise DomainError("need at least one subinterval")
        return Partition(params, tuple(np.linspace(params.q, params.d, n + 1)))

    @staticmethod
    def from_boundary(boundary: PiecewiseAffineBoundary) -> "Partition":
        """The minimal valid partition: the boundary's own knots."""
        return Partition(boundary.params, boundary.knots)


@dataclass(frozen=True)
class Estimate:
    """A crossing-probability estimate with its error indication.

    `error` is a quadrature error bound or a Monte-Carlo standard error
    depending on `method`.
    """

    value: float
    error: float
    method: str
    n_samples: int | None = None
    n_nodes: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"value must be a probability, got {self.value}")
        if self.error < 0.0:
            raise ValueError(f"error must be nonnegative, got {self.error}")
        if self.method not in ("quadrature", "montecarlo"):
            raise ValueError(f"unknown method {self.method!r}")


def _local_pieces(boundary: PiecewiseAffineBoundary, partition: Partition):
    """Per-subinterval (h, intercept at left end, slope) of the boundary.

    Requires the partition to contain every boundary knot; the bridge
    factors are exact only when the boundary is affine on each subinterval.
    """
    if boundary.params != partition.params:
        raise DomainError("boundary and partition use different (q, d)")
    times = np.asarray(partition.times)
    tol = 1e-12 * (partition.params.d - partition.params.q)
    for knot in boundary.knots:
        if np.min(np.abs(times - knot)) > tol:
            raise DomainError(
                f"partition must contain every boundary knot; missing "
                f"t={knot}")
    pieces = []
    for lo, hi in zip(partition.times, partition.times[1:]):
        b, a = boundary.local_affine(lo, hi)
        pieces.append((hi - lo, b, a))
    return pieces


def bcp_integrand(partition: Partition,
                       boundary: PiecewiseAffineBoundary, x) -> float:
    """The full (n+1)-dimensional integrand at the point x.

    Prefactors and exponents are accumulated in log space and exponentiated
    once; the bridge factors multiply in probability space.  Integrating
    this over the orthant prod (-inf, g(t_i)] gives the non-crossing
    probability.
    """
    x = np.asarray(x, dtype=float)
    n = partition.n
    if x.shape != (n + 1,):
        raise DomainError(f"x must have length {n + 1}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError("x must be finite")
    q, d = partition.params.q, partition.params.d
    t = partition.times
    pieces = _local_pieces(boundary, partition)

    log_c = (0.5 * (n + 1) * math.log(q) - n * math.log(2.0)
             - 0.5 * (n + 1) * math.log(math.pi)
             - 0.5 * math.log((3.0 * q - d) * (d - q)))
    log_val = log_c
    log_val -= (q / 4.0) * ((x[0] + x[n]) ** 2 / (3.0 * q - d)
                            + (x[0] - x[n]) ** 2 / (d - q))
    for i in range(1, n):
        log_val += 0.5 * (math.log(t[i + 1] - q)
                          - math.log((t[i + 1] - t[i]) * (t[i] - q)))
        log_val -= (q / 4.0) * ((x[i] - x[0]) ** 2 / (t[i] - q)
                                + (x[i + 1] - x[i]) ** 2 / (t[i + 1] - t[i])
                                - (x[i + 1] - x[0]) ** 2 / (t[i + 1] - q))
    bridges = 1.0
    for i, (h, b, a) in enumerate(pieces):
        bridges *= noncross_affine_product(q, h, b, a, x[i], x[i + 1])
    return math.exp(log_val) * bridges


def _axis_rules(limits, n_nodes):
    """Gauss-Legendre nodes/weights per axis on the truncated orthant."""
    nodes, weights = [], []
    for g in limits:
        lo = min(g, 0.0) - _TAIL_CUT
        hi = min(g, _UPPER_CAP)
        x, w = gauss_legendre_on(lo, hi, n_nodes)
        nodes.append(x)
        weights.append(w)
    return nodes, weights


def _noncross_tensor_gl(params, times, limits, pieces, n_nodes):
    """Non-crossing integral on a tensor Gauss-Legendre grid.

    Contracts the integrand along the partition: conditional-density factors
    couple (x_0, x_i, x_{i+1}) only, so for the inner axes a log-sum-exp
    matrix recursion over x_i suffices.  Log space keeps severely skewed
    partitions (tiny first gap) from overflowing the rank-separated
    conditional factors.
    """
    q = params.q
    n = len(times) - 1
    u = np.asarray(times) / q
    nodes, weights = _axis_rules(limits, n_nodes)

    def bridge_log(i):
        h, b, a = pieces[i]
        vals = noncross_affine_product(q, h, b, a, nodes[i][:, None],
                                       nodes[i + 1][None, :])
        with np.errstate(divide="ignore"):
            return np.log(vals)

    # log V[l, j]: x_0 = nodes[0][l], x_1 = nodes[1][j]
    log_v = bridge_log(0)
    for i in range(1, n):
        # conditional density of x_i given (x_0, x_{i+1}), canonical scale
        pref = (0.5 * math.log(u[i + 1] - 1.0) - math.log(2.0)
                - 0.5 * math.log(math.pi * (u[i + 1] - u[i]) * (u[i] - 1.0)))
        e_prev = (nodes[i][None, :] - nodes[0][:, None]) ** 2 / (u[i] - 1.0)
        e_step = ((nodes[i + 1][None, :] - nodes[i][:, None]) ** 2
                  / (u[i + 1] - u[i]))
        e_skip = ((nodes[i + 1][None, :] - nodes[0][:, None]) ** 2
                  / (u[i + 1] - 1.0))
        # log M[l, j, k] = log V[l, j] + log w_j + log cond + log bridge
        log_m = (log_v[:, :, None]
                 + np.log(weights[i])[None, :, None]
                 + pref
                 - 0.25 * e_prev[:, :, None]
                 - 0.25 * e_step[None, :, :]
                 + 0.25 * e_skip[:, None, :]
                 + bridge_log(i)[None, :, :])
        mx = np.max(log_m, axis=1)
        with np.errstate(invalid="ignore"):
            log_v = mx + np.log(np.sum(np.exp(log_m - mx[:, None, :]),
                                       axis=1))
        log_v = np.where(np.isfinite(mx), log_v, -np.inf)

    log_pair = (-math.log(2.0 * math.pi)
                - 0.5 * math.log((3.0 - u[n]) * (u[n] - 1.0))
                - 0.25 * ((nodes[0][:, None] + nodes[n][None, :]) ** 2
                          / (3.0 - u[n])
                          + (nodes[0][:, None] - nodes[n][None, :]) ** 2
                          / (u[n] - 1.0)))
    log_m = (log_v + log_pair + np.log(weights[0])[:, None]
             + np.log(weights[n])[None, :])
    mx = np.max(log_m)
    if not np.isfinite(mx):
        return 0.0
    return float(math.exp(mx) * np.sum(np.exp(log_m - mx)))


def bcp_quadrature(boundary: PiecewiseAffineBoundary,
                   partition: Partition | None = None,
                   tol: float = 1e-6) -> Estimate:
    """Crossing probability by deterministic nested quadrature.

    Works for partitions with n <= 4 subintervals (integral dimension 5);
    finer partitions should use `bcp_montecarlo`.  Semi-infinite axes are
    truncated at min(g(t_i), 0) - 8 below and capped at 8.5 above (marginal
    sd is 1, so the omitted mass is < 1e-15 per axis) and the tensor rule
    is refined until two successive levels agree within tol.

    A subinterval much shorter than its neighbours makes the conditional
    factor along that axis narrow (sd ~ sqrt(gap)) and can exhaust the
    refinement ladder; since the value is partition-invariant, prefer the
    minimal partition (the boundary knots) in that case.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    if partition is None:
        partition = Partition.from_boundary(boundary)
    n = partition.n
    if n > 4:
        raise DimensionTooLargeError(
            f"deterministic quadrature is capped at 4 subintervals, got "
            f"n={n}; use bcp_montecarlo")
    pieces = _local_pieces(boundary, partition)
    limits = [boundary.evaluate(t) for t in partition.times]

    prev = None
    for level in _QUAD_LEVELS:
        cur = _noncross_tensor_gl(partition.params, partition.times, limits,
                                  pieces, level)
        if prev is not None:
            diff = abs(cur - prev)
            if diff <= 0.5 * tol:
                value = min(1.0, max(0.0, 1.0 - cur))
                return Estimate(value=value, error=diff + 1e-14,
                                method="quadrature", n_nodes=level)
        prev = cur
    raise QuadratureNonConvergenceError(
        f"tensor quadrature did not reach tol={tol:g} at "
        f"{_QUAD_LEVELS[-1]} nodes per axis",
        value=min(1.0, max(0.0, 1.0 - prev)),
        error_bound=float("nan"), evaluations=_QUAD_LEVELS[-1] ** 2)


def _default_workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, workers)
    env = os.environ.get("SLEPIAN_BCP_WORKERS")
    return max(1, int(env)) if env else 1


def _mc_blocks(n_paths: int, block_size: int):
    blocks = []
    start = 0
    j = 0
    while start < n_paths:
        blocks.append((j, min(block_size, n_paths - start)))
        start += block_size
        j += 1
    return blocks


def _payoffs(x: np.ndarray, q: float, limits: np.ndarray, pieces) -> np.ndarray:
    """Product of boundary indicators and bridge factors per sample row."""
    z = np.all(x <= limits[None, :], axis=1).astype(float)
    for i, (h, b, a) in enumerate(pieces):
        z *= noncross_affine_product(q, h, b, a, x[:, i], x[:, i + 1])
    return z


def bcp_montecarlo(boundary: PiecewiseAffineBoundary,
                   partition: Partition | None = None,
                   n_paths: int = 1_000_000, seed: int = 0,
                   workers: int | None = None,
                   block_size: int = 131_072) -> Estimate:
    """Crossing probability by conditioned Monte Carlo.

    Samples the skeleton X ~ N(0, Sigma) at the partition times (one
    Cholesky factorization per call) and averages

        prod_i 1{X_i <= g(t_i)} * prod_i P(bridge i below g | X_i, X_{i+1});

    the expectation is exactly the non-crossing probability, so the
    estimate of the crossing probability is unbiased for every partition.
    Sample blocks draw from seed-derived streams indexed by block number,
    so a fixed seed gives identical results for any worker count.
    """
    if n_paths < 1:
        raise DomainError("n_paths must be >= 1")
    if partition is None:
        partition = Partition.from_boundary(boundary)
    params = partition.params
    pieces = _local_pieces(boundary, partition)
    limits = np.array([boundary.evaluate(t) for t in partition.times])
    m = partition.n + 1
    lower = cholesky(covariance_matrix(params, partition.times))

    def run_block(block):
        j, k = block
        eps = gaussian_stream(seed, j).normals(k * m).reshape(k, m)
        z = _payoffs(eps @ lower.T, params.q, limits, pieces)
        return float(np.sum(z)), float(np.sum(z * z))

    blocks = _mc_blocks(n_paths, block_size)
    n_workers = _default_workers(workers)
    if n_workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(run_block, blocks))
    else:
        results = [run_block(b) for b in blocks]
    s1 = sum(r[0] for r in results)
    s2 = sum(r[1] for r in results)
    mean = s1 / n_paths
    if n_paths > 1:
        var = max(0.0, (s2 - n_paths * mean * mean) / (n_paths - 1))
        se = math.sqrt(var / n_paths)
    else:
        se = 0.0
    return Estimate(value=min(1.0, max(0.0, 1.0 - mean)), error=se,
                    method="montecarlo", n_samples=n_paths, seed=seed)


@dataclass(frozen=True)
class StudyRow:
    """One resolution level of a boundary-approximation convergence study."""

    n_pieces: int
    estimate: Estimate
    diff_prev: float | None = None
    diff_se: float | None = None


def _union_partition(params: ProcessParams,
                     boundaries: Sequence[PiecewiseAffineBoundary]) -> Partition:
    knots = np.sort(np.concatenate([np.asarray(b.knots) for b in boundaries]))
    tol = 1e-12 * (params.d - params.q)
    merged = [knots[0]]
    for t in knots[1:]:
        if t - merged[-1] > tol:
            merged.append(t)
    merged[0], merged[-1] = params.q, params.d
    return Partition(params, tuple(merged))


def convergence_study(f: Callable[[float], float], params: ProcessParams,
                      piece_counts: Sequence[int], mode: str = "interpolate",
                      method: str = "mc", tol: float = 1e-6,
                      n_paths: int = 200_000, seed: int = 0,
                      workers: int | None = None,
                      block_size: int = 131_072) -> list[StudyRow]:
    """Crossing probabilities of piecewise-affine approximants of f.

    With method="mc" all resolutions are evaluated on the same skeleton
    draws over the union of their knots (partition invariance makes each
    estimate unbiased for its own boundary), so successive differences have
    far smaller variance than the individual estimates and the reported
    diff_se makes the convergence of the sequence testable.  With
    method="quad" the estimates are independent deterministic values.
    """
    counts = list(piece_counts)
    if not counts or any(c < 1 for c in counts):
        raise DomainError("piece counts must be positive")
    boundaries = [approximate(f, params, c, mode) for c in counts]

    if method == "quad":
        rows = []
        prev = None
        for c, bnd in zip(counts, boundaries):
            est = bcp_quadrature(bnd, tol=tol)
            diff = None if prev is None else est.value - prev.value
            rows.append(StudyRow(c, est, diff, None))
            prev = est
        return rows
    if method != "mc":
        raise DomainError(f"unknown method {method!r}")

    partition = _union_partition(params, boundaries)
    m = partition.n + 1
    lower = cholesky(covariance_matrix(params, partition.times))
    per_bnd = [(np.array([b.evaluate(t) for t in partition.times]),
                _local_pieces(b, partition)) for b in boundaries]

    nb = len(boundaries)
    s1 = np.zeros(nb)
    s2 = np.zeros(nb)
    d1 = np.zeros(nb - 1)
    d2 = np.zeros(nb - 1)
    for j, k in _mc_blocks(n_paths, block_size):
        eps = gaussian_stream(seed, j).normals(k * m).reshape(k, m)
        x = eps @ lower.T
        zs = [_payoffs(x, params.q, limits, pieces)
              for limits, pieces in per_bnd]
        for i, z in enumerate(zs):
            s1[i] += z.sum()
            s2[i] += (z * z).sum()
        for i in range(nb - 1):
            dz = zs[i] - zs[i + 1]     # value_{i+1} - value_i per sample
            d1[i] += dz.sum()
            d2[i] += (dz * dz).sum()

    rows = []
    for i, c in enumerate(counts):
        mean = s1[i] / n_paths
        var = max(0.0, (s2[i] - n_paths * mean ** 2) / (n_paths - 1))
        est = Estimate(value=min(1.0, max(0.0, 1.0 - mean)),
                       error=math.sqrt(var / n_paths), method="montecarlo",
                       n_samples=n_paths, seed=seed)
        if i == 0:
            rows.append(StudyRow(c, est))
        else:
            dmean = d1[i - 1] / n_paths
            dvar = max(0.0, (d2[i - 1] - n_paths * dmean ** 2) / (n_paths - 1))
            rows.append(StudyRow(c, est, dmean, math.sqrt(dvar / n_paths)))
    return rows
