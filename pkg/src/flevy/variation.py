"""Total variation along dyadic partitions, the derivative at zero and Y0.

``Y0`` denotes the improper integral ``int_{-inf}^0 (-s)^(d-1) L(ds)``. Under
the finite-variation criterion ``M_d(t)/t`` converges to ``Y0 / Gamma(d)`` in
L1 from either side of 0, and ``E TV(M_d|[a,b]) = (b-a) E|Y0| / Gamma(d)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import gamma as gamma_fn

from .criterion import Verdict, check_d, fv_criterion
from .errors import InvalidParameter
from .levy import IncrementGrid, LevyModel, PathSample, coarsened_grid, child_rng, sample_increment_matrix
from .synth import FlpPath, KernelKind, KernelSpec, synthesis_grid, synthesize_matrix

__all__ = [
    "VariationReport",
    "Y0Sample",
    "ExpectedTV",
    "dyadic_tv",
    "tv_profile",
    "tv_profile_matrix",
    "growth_exponent",
    "y0_from_increments",
    "y0_from_path",
    "sample_y0",
    "sample_y0_values",
    "expected_tv",
    "direct_expected_tv",
    "derivative_estimate",
    "paired_derivative_error",
    "sample_nd_derivative",
    "sample_nd_derivative_values",
    "nd_derivative_from_increments",
]

CONVERGENCE_TOL = 0.05
FIT_DEPTHS = 4
# Y0 sampling: inner stub length, cell growth rate and default explicit radius.
Y0_DELTA = 2.0**-40
Y0_GROWTH = 1.0 / 256
Y0_RADIUS = 1.0e6
_MAX_TICKS = 2**60


# ---------------------------------------------------------------------------
# Dyadic total variation
# ---------------------------------------------------------------------------


def dyadic_tv(values, depth: int):
    """Sum of |X(t_i) - X(t_{i-1})| over the 2^depth dyadic cells.

    ``values`` holds the process on the dyadic nodes of some depth ``m >= depth``
    (last axis of length ``2^m + 1``); coarser sums use every ``2^(m-depth)``-th node.
    """
    v = np.asarray(values, dtype=float)
    if depth < 0:
        raise InvalidParameter("depth must be >= 0")
    n = v.shape[-1] - 1
    if n < 1 or n & (n - 1):
        raise InvalidParameter(f"expected 2^m + 1 dyadic node values, got {n + 1}")
    m = n.bit_length() - 1
    if m < depth:
        raise InvalidParameter(f"values resolve depth {m} only, {depth} requested")
    sub = v[..., :: 1 << (m - depth)]
    out = np.abs(np.diff(sub, axis=-1)).sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def growth_exponent(tv_by_depth: Sequence[float], depths: Sequence[int]) -> float:
    """OLS slope of log2 TV_n against n; 0 for an identically zero profile."""
    tv = np.asarray(tv_by_depth, dtype=float)
    if np.all(tv == 0):
        return 0.0
    if np.any(tv <= 0):
        return math.nan
    return float(np.polyfit(np.asarray(depths, dtype=float), np.log2(tv), 1)[0])


def _converged(tv_top: np.ndarray, tv_ref: np.ndarray, tol: float) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.abs(tv_top - tv_ref) / tv_ref
    return np.where(tv_ref == 0, tv_top == 0, rel < tol)


@dataclass
class VariationReport:
    """TV along dyadic partitions; for several paths the per-depth values are means."""

    tv_by_depth: list[tuple[int, float]]
    growth_exponent: float
    converged: bool
    mc_mean: float | None = None
    mc_stderr: float | None = None
    n_paths: int = 1
    converged_fraction: float | None = None
    tv_stderr_by_depth: list[float] | None = None

    @property
    def tv_max(self) -> float:
        return self.tv_by_depth[-1][1]

    def to_dict(self) -> dict:
        return {
            "tv_by_depth": [[n, tv] for n, tv in self.tv_by_depth],
            "growth_exponent": self.growth_exponent,
            "converged": self.converged,
            "mc_mean": self.mc_mean,
            "mc_stderr": self.mc_stderr,
            "n_paths": self.n_paths,
            "converged_fraction": self.converged_fraction,
        }


def _dyadic_columns(times: np.ndarray, a: float, b: float, depth: int) -> np.ndarray:
    if not b > a:
        raise InvalidParameter("need a < b")
    want = a + (b - a) * np.arange(2**depth + 1) / 2**depth
    idx = np.searchsorted(times, want - 1e-12 * max(1.0, abs(b)))
    idx = np.minimum(idx, times.size - 1)
    if not np.allclose(times[idx], want, rtol=0, atol=1e-9 * max(1.0, abs(b))):
        raise InvalidParameter(f"path does not resolve depth {depth} on [{a}, {b}]")
    return idx


def _profile(values: np.ndarray, max_depth: int) -> np.ndarray:
    """TV_n for n = 1..max_depth; shape (n_paths, max_depth)."""
    return np.stack([np.atleast_1d(dyadic_tv(values, n)) for n in range(1, max_depth + 1)], axis=1)


def tv_profile_matrix(values: np.ndarray, times: Sequence[float], a: float, b: float,
                      max_depth: int, tol: float = CONVERGENCE_TOL) -> VariationReport:
    """Aggregate report over the rows of ``values`` sampled at ``times``."""
    if max_depth < 1:
        raise InvalidParameter("max_depth must be >= 1")
    vals = np.atleast_2d(np.asarray(values, dtype=float))
    cols = _dyadic_columns(np.asarray(times, dtype=float), a, b, max_depth)
    prof = _profile(vals[:, cols], max_depth)
    n_paths = prof.shape[0]
    mean = prof.mean(axis=0)
    se = prof.std(axis=0, ddof=1) / math.sqrt(n_paths) if n_paths > 1 else np.zeros(max_depth)
    depths = list(range(1, max_depth + 1))
    fit = depths[-FIT_DEPTHS:]
    ref = max(0, max_depth - 3)  # depth max_depth - 2, or depth 1 for shallow profiles
    per_path = _converged(prof[:, -1], prof[:, ref], tol)
    return VariationReport(
        tv_by_depth=[(n, float(x)) for n, x in zip(depths, mean)],
        growth_exponent=growth_exponent(mean[-FIT_DEPTHS:], fit) if len(fit) > 1 else 0.0,
        converged=bool(_converged(mean[-1:], mean[ref:ref + 1], tol)[0]),
        mc_mean=float(mean[-1]),
        mc_stderr=float(se[-1]),
        n_paths=n_paths,
        converged_fraction=float(per_path.mean()),
        tv_stderr_by_depth=[float(x) for x in se],
    )


def tv_profile(path: FlpPath, a: float, b: float, max_depth: int,
               tol: float = CONVERGENCE_TOL) -> VariationReport:
    """Dyadic TV profile of one synthesized path on ``[a, b]``.

    ``converged`` means the relative change between depths ``max_depth - 2``
    and ``max_depth`` is below ``tol``; the growth exponent is fitted on the
    last four depths.
    """
    vals = np.asarray(path.values, dtype=float)
    if vals.ndim != 1:
        return tv_profile_matrix(vals, path.times, a, b, max_depth, tol)
    rep = tv_profile_matrix(vals[None, :], path.times, a, b, max_depth, tol)
    rep.mc_stderr = None
    rep.converged_fraction = None
    rep.tv_stderr_by_depth = None
    return rep


# ---------------------------------------------------------------------------
# The improper integral Y0
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Y0Sample:
    """One draw of ``int_{-inf}^0 (-s)^(d-1) L(ds)`` and how it was truncated.

    Cells inside ``(-delta, 0)`` are dropped and ``stub_bound`` bounds the
    mean absolute size of what was dropped; beyond ``r_grid`` an independent
    Gaussian with the exact tail variance stands in for the sum, up to ``r_tail``
    (``-inf`` when the tail correction covers the whole remainder).
    """

    value: float
    r_tail: float
    r_grid: float
    delta: float
    tail_std: float
    stub_bound: float
    criterion_holds: bool
    meta: dict = field(default_factory=dict, compare=False)


def y0_from_increments(grid: IncrementGrid, increments: np.ndarray, d: float,
                       delta: float | None = None, origin: float = 0.0) -> np.ndarray:
    """Left-endpoint sum of ``(origin - s_k)^(d-1) dL_k`` over cells ending at or
    before ``origin - delta``.

    ``origin = 0`` gives Y0; other origins give its stationary shifts.
    """
    d = check_d(d)
    delta = grid.step if delta is None else float(delta)
    nodes = grid.nodes
    keep = nodes[1:] - origin <= -delta * (1 - 1e-12)
    w = np.zeros(grid.n_cells)
    w[keep] = (origin - grid.tags[keep]) ** (d - 1.0)
    return np.atleast_2d(increments) @ w


def y0_from_path(path: PathSample, d: float, delta: float | None = None) -> float:
    """``Y0`` from the driver behind a synthesized path (paired with ``M_d(t)/t``)."""
    return float(y0_from_increments(path.grid, path.increments, d, delta)[0])


def _y0_grid(r: float, delta: float, growth: float, two_sided: bool) -> IncrementGrid:
    r = max(r, -_MAX_TICKS * delta)
    left = coarsened_grid(r, 0.0, delta, fine_radius=0.0, growth=growth)
    if not two_sided:
        return left
    ticks = np.concatenate((left.ticks, -left.ticks[-2::-1]))
    return IncrementGrid(delta, ticks)


def _tail_std(model: LevyModel, d: float, radius: float) -> float:
    # Var int_{-inf}^{-R} (-s)^(d-1) L(ds) = E L(1)^2 R^(2d-1) / (1-2d)
    return math.sqrt(model.second_moment * radius ** (2.0 * d - 1.0) / (1.0 - 2.0 * d))


def _y0_setup(model: LevyModel, d: float, r_tail: float, delta: float, growth: float,
              tail_correction: bool, two_sided: bool):
    d = check_d(d)
    if not r_tail < 0:
        raise InvalidParameter("r_tail must be < 0")
    if not 0 < delta < -r_tail:
        raise InvalidParameter("need 0 < delta < |r_tail|")
    grid = _y0_grid(r_tail, delta, growth, two_sided)
    r_grid = grid.r_min
    sides = 2 if two_sided else 1
    tail_std = math.sqrt(sides) * _tail_std(model, d, -r_grid) if tail_correction else 0.0
    from .idbounds import stub_mean_abs_bound

    stub = stub_mean_abs_bound(model, d, delta)
    ok = fv_criterion(model, d).finite_variation
    return d, grid, tail_std, stub, ok


def _tail_draws(seed: int, first: int, n: int, std: float) -> np.ndarray:
    if std == 0:
        return np.zeros(n)
    return np.array([child_rng(seed, first + i, 2, 0).standard_normal() for i in range(n)]) * std


def sample_y0_values(model: LevyModel, d: float, r_tail: float, seed: int, n: int, *,
                     first_draw: int = 0, delta: float = Y0_DELTA, growth: float = Y0_GROWTH,
                     tail_correction: bool = True, chunk: int = 500) -> tuple[np.ndarray, dict]:
    """``n`` independent draws of Y0 (draw ``i`` uses driver stream ``first_draw + i``).

    The driver is sampled on a negative-time grid with cells of length
    ``delta`` next to the origin growing geometrically out to ``r_tail``.
    """
    d, grid, tail_std, stub, ok = _y0_setup(model, d, r_tail, delta, growth, tail_correction, False)
    out = np.empty(n)
    for lo in range(0, n, chunk):
        k = min(chunk, n - lo)
        inc = sample_increment_matrix(model, grid, seed, k, first_index=first_draw + lo)
        out[lo:lo + k] = y0_from_increments(grid, inc, d, delta)
    out += _tail_draws(seed, first_draw, n, tail_std)
    meta = {"r_tail": -math.inf if tail_correction else grid.r_min, "r_grid": grid.r_min,
            "delta": delta, "tail_std": tail_std, "stub_bound": stub, "criterion_holds": ok,
            "n_cells": grid.n_cells}
    return out, meta


def sample_y0(model: LevyModel, d: float, r_tail: float = -Y0_RADIUS, seed: int = 0, *,
              draw: int = 0, **kwargs) -> Y0Sample:
    """One draw of Y0; see ``sample_y0_values`` for the discretization."""
    vals, meta = sample_y0_values(model, d, r_tail, seed, 1, first_draw=draw, **kwargs)
    return Y0Sample(float(vals[0]), meta["r_tail"], meta["r_grid"], meta["delta"],
                    meta["tail_std"], meta["stub_bound"], meta["criterion_holds"], meta)


def nd_derivative_from_increments(grid: IncrementGrid, increments: np.ndarray, d: float,
                                  delta: float | None = None) -> np.ndarray:
    """``-(1/Gamma(d)) sum sign(s_k) |s_k|^(d-1) dL_k`` over cells at least ``delta`` from 0.

    Negative cells must end at or before ``-delta``; positive cells start at or after ``delta``.
    """
    d = check_d(d)
    delta = grid.step if delta is None else float(delta)
    tags = grid.tags
    w = np.zeros(grid.n_cells)
    neg = grid.nodes[1:] <= -delta * (1 - 1e-12)
    pos = tags >= delta * (1 - 1e-12)
    w[neg] = -((-tags[neg]) ** (d - 1.0))
    w[pos] = tags[pos] ** (d - 1.0)
    return -(np.atleast_2d(increments) @ w) / gamma_fn(d)


def sample_nd_derivative_values(model: LevyModel, d: float, r_tail: float, seed: int, n: int, *,
                                first_draw: int = 0, delta: float = Y0_DELTA,
                                growth: float = Y0_GROWTH, tail_correction: bool = True,
                                chunk: int = 200) -> tuple[np.ndarray, dict]:
    """``n`` draws of the derivative at 0 of the well-balanced process,
    ``-(1/Gamma(d)) int sign(s) |s|^(d-1) L(ds)``.

    The grid mirrors the one used for Y0 on both sides of the origin.
    """
    d, grid, tail_std, stub, ok = _y0_setup(model, d, r_tail, delta, growth, tail_correction, True)
    out = np.empty(n)
    for lo in range(0, n, chunk):
        k = min(chunk, n - lo)
        inc = sample_increment_matrix(model, grid, seed, k, first_index=first_draw + lo)
        out[lo:lo + k] = nd_derivative_from_increments(grid, inc, d, delta)
    g = float(gamma_fn(d))
    out += _tail_draws(seed, first_draw, n, tail_std) / g
    meta = {"r_tail": -math.inf if tail_correction else grid.r_min, "r_grid": grid.r_min,
            "delta": delta, "tail_std": tail_std / g, "stub_bound": 2.0 * stub / g,
            "criterion_holds": ok, "n_cells": grid.n_cells}
    return out, meta


def sample_nd_derivative(model: LevyModel, d: float, r_tail: float = -Y0_RADIUS, seed: int = 0,
                         *, draw: int = 0, **kwargs) -> Y0Sample:
    """One draw of the well-balanced derivative at 0; see ``sample_nd_derivative_values``."""
    vals, meta = sample_nd_derivative_values(model, d, r_tail, seed, 1, first_draw=draw, **kwargs)
    return Y0Sample(float(vals[0]), meta["r_tail"], meta["r_grid"], meta["delta"],
                    meta["tail_std"], meta["stub_bound"], meta["criterion_holds"], meta)


# ---------------------------------------------------------------------------
# Expected total variation
# ---------------------------------------------------------------------------


class ExpectedTV(NamedTuple):
    estimate: float
    stderr: float
    verdict: Verdict
    meta: dict


def expected_tv(model: LevyModel, d: float, a: float, b: float, n_mc: int, seed: int, *,
                r_tail: float = -Y0_RADIUS, **kwargs) -> ExpectedTV:
    """(b - a)/Gamma(d) times the Monte Carlo mean of |Y0|.

    A model violating the finite-variation criterion has infinite expected
    total variation; the estimate is then ``inf`` and no sampling happens.
    """
    d = check_d(d)
    if not b > a:
        raise InvalidParameter("need a < b")
    if not fv_criterion(model, d).finite_variation:
        return ExpectedTV(math.inf, 0.0, Verdict.INFINITE, {})
    if n_mc < 2:
        raise InvalidParameter("n_mc must be >= 2")
    vals, meta = sample_y0_values(model, d, r_tail, seed, n_mc, **kwargs)
    absv = np.abs(vals)
    scale = (b - a) / gamma_fn(d)
    meta = dict(meta, mean_abs_y0=float(absv.mean()))
    return ExpectedTV(scale * float(absv.mean()),
                      scale * float(absv.std(ddof=1) / math.sqrt(n_mc)), Verdict.FINITE, meta)


def direct_expected_tv(model: LevyModel, d: float, a: float, b: float, n_paths: int,
                       depth: int, tol: float, seed: int, *, oversample: int = 0,
                       chunk: int = 200) -> VariationReport:
    """Monte Carlo of E TV_depth over synthesized non-anticipative paths on ``[a, b]``.

    The driver step is ``(b - a) 2^-(depth + oversample)``; ``a`` must be a
    multiple of it.
    """
    d = check_d(d)
    spec = KernelSpec(KernelKind.NON_ANTICIPATIVE, d)
    res = depth + oversample
    step = (b - a) * 2.0**-res
    grid = synthesis_grid(spec, b, step, model.second_moment, tol, t_min=min(a, 0.0))
    times = a + (b - a) * np.arange(2**res + 1) / 2**res
    vals = np.empty((n_paths, times.size))
    for lo in range(0, n_paths, chunk):
        k = min(chunk, n_paths - lo)
        inc = sample_increment_matrix(model, grid, seed, k, first_index=lo)
        vals[lo:lo + k] = synthesize_matrix(grid, inc, spec, times)
    return tv_profile_matrix(vals, times, a, b, depth)


def paired_derivative_error(model: LevyModel, d: float, t_list: Sequence[float], n_paths: int,
                            seed: int, *, step: float, tol: float, origins: Sequence[float] = (0.0,),
                            chunk: int = 50) -> dict[str, np.ndarray]:
    """Mean of |(M_d(o +- t) - M_d(o))/(+-t) - Y0(o)/Gamma(d)| over paths and origins ``o``.

    ``Y0(o) = int_{-inf}^o (o - s)^(d-1) L(ds)`` comes from the same driver as
    the quotient. By stationarity every origin estimates the same quantity, so
    well separated origins act as extra, nearly independent replications.
    """
    d = check_d(d)
    ts = np.asarray(t_list, dtype=float)
    origins = np.asarray(origins, dtype=float)
    spec = KernelSpec(KernelKind.NON_ANTICIPATIVE, d)
    top = float(origins.max() + ts.max())
    grid = synthesis_grid(spec, top, step, model.second_moment, tol,
                          t_min=float(min(0.0, origins.min() - ts.max())))
    times = np.concatenate([np.concatenate(([o], o + ts, o - ts)) for o in origins])
    k = ts.size
    sums = {"right": np.zeros(k), "left": np.zeros(k)}
    inv_gamma = 1.0 / gamma_fn(d)
    for lo in range(0, n_paths, chunk):
        m = min(chunk, n_paths - lo)
        inc = sample_increment_matrix(model, grid, seed, m, first_index=lo)
        vals = synthesize_matrix(grid, inc, spec, times)
        for j, o in enumerate(origins):
            block = vals[:, j * (2 * k + 1):(j + 1) * (2 * k + 1)]
            y = y0_from_increments(grid, inc, d, origin=o) * inv_gamma
            right = (block[:, 1:k + 1] - block[:, :1]) / ts
            left = (block[:, k + 1:] - block[:, :1]) / -ts
            sums["right"] += np.abs(right - y[:, None]).sum(axis=0)
            sums["left"] += np.abs(left - y[:, None]).sum(axis=0)
    count = n_paths * origins.size
    return {side: v / count for side, v in sums.items()}


# ---------------------------------------------------------------------------
# Difference quotients at zero
# ---------------------------------------------------------------------------


def derivative_estimate(path: FlpPath, t_list: Sequence[float], side: str = "right"):
    """``[(t, X(t)/t)]`` at the given distances from 0.

    ``side="left"`` evaluates at ``-t`` (the quotient then approaches the same
    limit from below). Values are arrays when ``path`` holds several rows.
    """
    if side not in ("right", "left"):
        raise InvalidParameter("side must be 'right' or 'left'")
    out = []
    for t in t_list:
        if not t > 0:
            raise InvalidParameter("distances must be positive")
        ts = t if side == "right" else -t
        x = path.at(ts)
        out.append((ts, x / ts))
    return out
