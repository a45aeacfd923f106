"""Brute-force path-simulation oracle, independent of the analytic code.

Paths are generated straight from the moving-window representation
W_t = (B_t - B_{t-q}) / sqrt(q): a Brownian motion B is built by cumulative
sums of independent N(0, dt) increments on a grid covering [0, d] and the
window difference is read off for t in [q, d].  Crossings are checked by
strict inequality at the grid nodes only, with no correction for crossings
between nodes, so the crossing-probability estimates are biased low by an
amount that vanishes under grid refinement; keeping the estimator this
simple is what makes it a trustworthy cross-check of the analytic engines.

Path blocks draw from seed-derived streams indexed by block number, so a
fixed configuration reproduces the same ensemble regardless of how blocks
are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO, Iterator

import numpy as np

from .boundary import PiecewiseAffineBoundary
from .bridge import BridgeSpec
from .engine import Estimate
from .errors import DomainError, NotPositiveDefiniteError
from .numerics import gaussian_stream
from .process import ProcessParams, covariance_matrix


@dataclass(frozen=True)
class SimConfig:
    """Path-simulation configuration."""

    params: ProcessParams
    grid_step: float
    n_paths: int
    seed: int

    def __post_init__(self):
        if self.grid_step <= 0:
            raise DomainError("grid_step must be positive")
        span = self.params.d - self.params.q
        k = round(span / self.grid_step)
        if k < 10:
            raise DomainError(
                f"grid_step must be at most (d-q)/10 = {span / 10}")
        if abs(k * self.grid_step - span) > 1e-9 * self.grid_step:
            raise DomainError(
                f"grid_step={self.grid_step} must divide d-q={span} "
                "within rounding")
        if self.n_paths < 1:
            raise DomainError("n_paths must be >= 1")
        if self.seed < 0:
            raise DomainError("seed must be nonnegative")

    @property
    def n_steps(self) -> int:
        return round((self.params.d - self.params.q) / self.grid_step)


def _grids(params: ProcessParams, t_lo: float, t_hi: float, step: float):
    """Evaluation times on [t_lo, t_hi] plus the Brownian support grid.

    Returns (times, brownian_times, idx_left, idx_right) with
    W[times[k]] = (B[idx_right[k]] - B[idx_left[k]]) / sqrt(q); the Brownian
    grid starts at t_lo - q, where B is anchored to zero (only increments
    matter).
    """
    k = round((t_hi - t_lo) / step)
    offsets = np.arange(k + 1) * step
    times = t_lo + offsets
    ratio = params.q / step
    if abs(ratio - round(ratio)) < 1e-9:
        m = round(ratio)
        b_times = (t_lo - params.q) + np.arange(m + k + 1) * step
        idx_left = np.arange(k + 1)
        idx_right = m + np.arange(k + 1)
        return times, b_times, idx_left, idx_right
    left = (t_lo - params.q) + offsets
    right = t_lo + offsets
    both = np.concatenate([left, right])
    order = np.argsort(both, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(both))
    b_times = both[order]
    return times, b_times, rank[:k + 1], rank[k + 1:]


def _block_sizes(n_paths: int, n_grid: int, block_size: int | None):
    if block_size is None:
        block_size = max(128, (1 << 22) // max(n_grid, 1))
    blocks = []
    start = 0
    j = 0
    while start < n_paths:
        blocks.append((j, min(block_size, n_paths - start)))
        start += block_size
        j += 1
    return blocks


def simulate_paths(cfg: SimConfig,
                   block_size: int | None = None
                   ) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield (times, values) blocks of simulated paths on [q, d].

    `values` has one row per path; rows across all blocks form the full
    ensemble of cfg.n_paths paths, reproducible from cfg.seed.
    """
    params = cfg.params
    times, b_times, idx_l, idx_r = _grids(params, params.q, params.d,
                                          cfg.grid_step)
    sqrt_dt = np.sqrt(np.diff(b_times))
    n_inc = len(sqrt_dt)
    for j, k in _block_sizes(cfg.n_paths, len(b_times), block_size):
        eps = gaussian_stream(cfg.seed, j).normals(k * n_inc)
        eps = eps.reshape(k, n_inc) * sqrt_dt
        b = np.concatenate([np.zeros((k, 1)), np.cumsum(eps, axis=1)], axis=1)
        w = (b[:, idx_r] - b[:, idx_l]) / math.sqrt(params.q)
        yield times, w


def empirical_bcp(cfg: SimConfig,
                  boundary: PiecewiseAffineBoundary) -> Estimate:
    """Fraction of simulated paths exceeding the boundary at some grid node.

    The estimate carries a binomial standard error; grid discretization can
    only miss crossings, so the bias is one-sided (toward underestimating
    the crossing probability).
    """
    if boundary.params != cfg.params:
        raise DomainError("boundary and simulation use different (q, d)")
    count = 0
    g = None
    for times, w in simulate_paths(cfg):
        if g is None:
            g = np.asarray(boundary.evaluate(times))
        count += int(np.any(w > g[None, :], axis=1).sum())
    p = count / cfg.n_paths
    se = math.sqrt(p * (1.0 - p) / cfg.n_paths)
    return Estimate(value=p, error=se, method="montecarlo",
                    n_samples=cfg.n_paths, seed=cfg.seed)


def empirical_covariance(cfg: SimConfig, n_lags: int = 20):
    """Empirical covariance of W at `n_lags` grid lags from the left edge.

    Returns (lags, estimates, standard_errors); each estimate averages the
    product W_q * W_{q+lag} over paths.
    """
    k_max = cfg.n_steps
    lag_idx = np.unique(np.round(np.linspace(1, k_max, n_lags)).astype(int))
    s1 = np.zeros(len(lag_idx))
    s2 = np.zeros(len(lag_idx))
    for times, w in simulate_paths(cfg):
        prod = w[:, [0]] * w[:, lag_idx]
        s1 += prod.sum(axis=0)
        s2 += (prod * prod).sum(axis=0)
    n = cfg.n_paths
    mean = s1 / n
    var = np.maximum(0.0, (s2 - n * mean ** 2) / (n - 1))
    return lag_idx * cfg.grid_step, mean, np.sqrt(var / n)


def empirical_bridge_noncross(spec: BridgeSpec, b: float, a: float = 0.0,
                              n_paths: int = 100_000,
                              grid_step: float = 1e-3,
                              seed: int = 0) -> Estimate:
    """Path-simulation estimate of the bridge non-crossing probability.

    Pins the simulated paths to (x_i, x_i1) by the exact conditional
    Gaussian correction: an unconditional path W gets
    W + Cov(W, pins) Cov(pins)^{-1} (pins - W_pins), which is cheap (rank
    two) and has the exact conditional law.  A pin on or above the boundary
    is a certain crossing, so the estimate is 0 without simulation.
    """
    h = spec.h
    if spec.x_i >= b or spec.x_i1 >= b + a * h:
        return Estimate(value=0.0, error=0.0, method="montecarlo",
                        n_samples=n_paths, seed=seed)
    params = spec.params
    k = round(h / grid_step)
    if abs(k * grid_step - h) > 1e-9 * grid_step or k < 2:
        raise DomainError(
            f"grid_step={grid_step} must divide the bridge length {h} "
            "within rounding, with at least two subintervals")
    times, b_times, idx_l, idx_r = _grids(params, spec.t_i, spec.t_i1,
                                          grid_step)
    sqrt_dt = np.sqrt(np.diff(b_times))
    n_inc = len(sqrt_dt)

    sigma = covariance_matrix(params, times)
    pin_idx = [0, len(times) - 1]
    s_pp = sigma[np.ix_(pin_idx, pin_idx)]
    det = s_pp[0, 0] * s_pp[1, 1] - s_pp[0, 1] * s_pp[1, 0]
    if det <= 1e-14:
        raise NotPositiveDefiniteError(
            "pinned covariance is numerically singular; the bridge interval "
            "and grid are inconsistent")
    gain = sigma[:, pin_idx] @ np.linalg.inv(s_pp)
    pins = np.array([spec.x_i, spec.x_i1])
    bound = b + a * (times - spec.t_i)

    count = 0
    root_q = math.sqrt(params.q)
    for j, kblk in _block_sizes(n_paths, len(b_times), None):
        eps = gaussian_stream(seed, j).normals(kblk * n_inc)
        eps = eps.reshape(kblk, n_inc) * sqrt_dt
        bm = np.concatenate([np.zeros((kblk, 1)), np.cumsum(eps, axis=1)],
                            axis=1)
        w = (bm[:, idx_r] - bm[:, idx_l]) / root_q
        w += (pins[None, :] - w[:, pin_idx]) @ gain.T
        count += int(np.all(w[:, 1:-1] <= bound[None, 1:-1], axis=1).sum())
    p = count / n_paths
    se = math.sqrt(p * (1.0 - p) / n_paths)
    return Estimate(value=p, error=se, method="montecarlo",
                    n_samples=n_paths, seed=seed)


def dump_paths(cfg: SimConfig, fp: IO[str] | str,
               max_paths: int | None = None) -> int:
    """Write simulated paths as delimited text; returns the number written.

    First line holds the evaluation times, then one line per path:
    the path index followed by the path values, comma-separated.
    """
    def _write(handle):
        written = 0
        path_id = 0
        for times, w in simulate_paths(cfg):
            if written == 0:
                handle.write("t," + ",".join(f"{t:.17g}" for t in times)
                             + "\n")
            for row in w:
                if max_paths is not None and written >= max_paths:
                    return written
                handle.write(str(path_id) + ","
                             + ",".join(f"{v:.17g}" for v in row) + "\n")
                path_id += 1
                written += 1
        return written

    if isinstance(fp, str):
        with open(fp, "w", encoding="utf-8") as handle:
            return _write(handle)
    return _write(fp)
