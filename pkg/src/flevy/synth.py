"""Kernel-weighted synthesis of fractional Levy paths from a driver on a grid.

Every kind is a left-endpoint sum ``X(t) = sum_k w(t, s_k) dL_k`` over the
driver cells, with ``w`` the moving-average kernel divided by Gamma(d + 1).
Because all kinds share the same tags and increments, the decompositions
``M = F + I^d L`` and ``N = M1 + M2(-.)`` hold term by term.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gamma as gamma_fn

from .criterion import check_d
from .errors import InsufficientCoverage, InvalidParameter
from .levy import IncrementGrid, PathSample, coarsened_grid, time_reverse

__all__ = [
    "KernelKind",
    "KernelSpec",
    "FlpPath",
    "kernel_weight",
    "truncation_radius",
    "truncation_error",
    "synthesis_grid",
    "synthesize",
    "synthesize_matrix",
    "synthesize_nd_by_decomposition",
]

# Rows of the weight matrix are built in blocks of at most this many entries.
_BLOCK_ENTRIES = 1 << 23


class KernelKind(str, enum.Enum):
    NON_ANTICIPATIVE = "non_anticipative"
    WELL_BALANCED = "well_balanced"
    TAIL_PART = "tail_part"
    RIEMANN_LIOUVILLE = "riemann_liouville"

    @classmethod
    def parse(cls, value) -> "KernelKind":
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("-", "_")
        aliases = {"m": "non_anticipative", "n": "well_balanced", "f": "tail_part",
                   "rl": "riemann_liouville", "tail": "tail_part"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise InvalidParameter(f"unknown kernel kind {value!r}") from None


@dataclass(frozen=True)
class KernelSpec:
    kind: KernelKind
    d: float

    def __post_init__(self):
        object.__setattr__(self, "kind", KernelKind.parse(self.kind))
        object.__setattr__(self, "d", check_d(self.d))

    @property
    def has_left_tail(self) -> bool:
        return self.kind is not KernelKind.RIEMANN_LIOUVILLE

    @property
    def has_right_tail(self) -> bool:
        return self.kind is KernelKind.WELL_BALANCED


@dataclass(frozen=True, eq=False)
class FlpPath:
    """Values of a synthesized process at output nodes (one row per driver path)."""

    times: np.ndarray
    values: np.ndarray
    kernel: KernelSpec
    r_min: float
    step: float
    truncation_error: float

    def at(self, t: float) -> np.ndarray | float:
        idx = np.flatnonzero(np.isclose(self.times, t, rtol=0, atol=1e-12 * max(1.0, abs(t))))
        if idx.size == 0:
            raise InvalidParameter(f"time {t} is not an output time")
        return self.values[..., idx[0]]


def _pos_pow(x: np.ndarray, d: float) -> np.ndarray:
    return np.where(x > 0, np.abs(x), 0.0) ** d


def kernel_weight(spec: KernelSpec, t, s) -> np.ndarray | float:
    """Integrand of the moving-average representation, divided by Gamma(d + 1).

    Broadcasts over ``t`` and ``s``.
    """
    d = spec.d
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    kind = spec.kind
    if kind is KernelKind.NON_ANTICIPATIVE:
        w = _pos_pow(t - s, d) - _pos_pow(-s, d)
    elif kind is KernelKind.WELL_BALANCED:
        w = np.abs(t - s) ** d - np.abs(s) ** d
    elif kind is KernelKind.TAIL_PART:
        w = np.where(s < 0, _pos_pow(t - s, d) - _pos_pow(-s, d), 0.0)
    else:
        w = np.where(s >= 0, _pos_pow(t - s, d), 0.0)
    w = w / gamma_fn(d + 1.0)
    return w if w.ndim else float(w)


def _tail_constant(d: float) -> float:
    return d * d / (gamma_fn(d + 1.0) ** 2 * (1.0 - 2.0 * d))


def truncation_radius(d: float, t_max: float, driver_variance: float, tol: float) -> float:
    """Left cut-off ``r_min < 0`` whose dropped tail has L2 norm at most ``tol``.

    Uses the majorant ``kernel(t, s) <= t d (-s)^(d-1) / Gamma(d+1)``, giving
    ``|r_min| = (E L(1)^2 t_max^2 d^2 / (Gamma(d+1)^2 (1-2d) tol^2))^(1/(1-2d))``.
    """
    d = check_d(d)
    if not tol > 0:
        raise InvalidParameter(f"tol must be > 0, got {tol}")
    if not driver_variance > 0:
        raise InvalidParameter("driver variance must be > 0")
    if not t_max > 0:
        raise InvalidParameter("t_max must be > 0")
    base = driver_variance * t_max**2 * _tail_constant(d) / tol**2
    return -(base ** (1.0 / (1.0 - 2.0 * d)))


def truncation_error(d: float, t_max: float, driver_variance: float, radius: float) -> float:
    """L2 bound on the tail dropped beyond distance ``radius``; inverse of ``truncation_radius``."""
    if radius <= 0:
        return math.inf
    return math.sqrt(driver_variance * t_max**2 * _tail_constant(d) * radius ** (2.0 * d - 1.0))


def synthesis_grid(spec: KernelSpec, t_max: float, step: float, driver_variance: float,
                   tol: float, *, fine_radius: float | None = None,
                   growth: float = 1.0 / 64, t_min: float = 0.0) -> IncrementGrid:
    """Driver grid for outputs in ``[t_min, t_max]`` with truncation error below ``tol``.

    Unit cells cover ``[-fine_radius, t_max]``; beyond that cells grow
    geometrically out to the truncation radius (and mirrored on the right
    for the well-balanced kernel).
    """
    span = max(t_max, -t_min, step)
    if fine_radius is None:
        fine_radius = max(1.0, span)
    fine_radius = max(fine_radius, -t_min)
    if spec.has_left_tail:
        r = truncation_radius(spec.d, span, driver_variance, tol)
        r = min(r, -fine_radius)
    else:
        r = min(0.0, t_min)
    r_max = t_max - r if spec.has_right_tail else None
    return coarsened_grid(r, t_max, step, fine_radius=fine_radius, growth=growth, r_max=r_max)


def _weight_block(spec: KernelSpec, t: np.ndarray, tags: np.ndarray) -> np.ndarray:
    return kernel_weight(spec, t[:, None], tags[None, :])


def _check_coverage(spec: KernelSpec, grid: IncrementGrid, times: np.ndarray) -> None:
    if times.size == 0:
        return
    if times.max() > grid.t_max or times.min() < grid.r_min:
        raise InsufficientCoverage("output times fall outside the driver grid")
    if spec.has_left_tail and grid.r_min >= 0:
        raise InsufficientCoverage("this kernel needs driver cells at negative times")
    if spec.kind in (KernelKind.TAIL_PART, KernelKind.RIEMANN_LIOUVILLE) and times.min() < 0:
        raise InvalidParameter("tail-part and Riemann-Liouville outputs need t >= 0")


def synthesize_matrix(grid: IncrementGrid, increments: np.ndarray, spec: KernelSpec,
                      out_times: Sequence[float], *, form: str = "increment",
                      values: np.ndarray | None = None) -> np.ndarray:
    """Synthesize many driver paths at once; ``increments`` has one row per path.

    ``form="path"`` evaluates the same sum after discrete summation by parts,
    i.e. against node values with kernel differences (needs ``values`` or
    recomputes them from the increments).
    """
    inc = np.atleast_2d(np.asarray(increments, dtype=float))
    if inc.shape[1] != grid.n_cells:
        raise InvalidParameter("increment rows must match the grid cells")
    times = np.asarray(out_times, dtype=float)
    _check_coverage(spec, grid, times)
    grid.node_indices(times)
    tags = grid.tags
    out = np.zeros((inc.shape[0], times.size))
    if times.size == 0:
        return out
    if spec.has_right_tail:
        cols = slice(0, grid.n_cells)
    else:
        # cells tagged at or beyond max(t) carry zero weight
        cols = slice(0, int(np.searchsorted(tags, times.max(), side="left")))
    tags_c = tags[cols]
    rows = max(1, _BLOCK_ENTRIES // max(1, tags_c.size))
    if form == "increment":
        inc_c = inc[:, cols]
        for i in range(0, times.size, rows):
            w = _weight_block(spec, times[i:i + rows], tags_c)
            out[:, i:i + rows] = inc_c @ w.T
    elif form == "path":
        if values is None:
            cum = np.concatenate((np.zeros((inc.shape[0], 1)), np.cumsum(inc, axis=1)), axis=1)
            values = cum - cum[:, [grid.zero_index]]
        values = np.atleast_2d(values)
        n = tags_c.size
        if n == 0:
            return out
        v = values[:, : n + 1]
        for i in range(0, times.size, rows):
            w = _weight_block(spec, times[i:i + rows], tags_c)
            # sum_k w_k (v_{k+1} - v_k) = w_{n-1} v_n - w_0 v_0 - sum_{k>=1} (w_k - w_{k-1}) v_k
            dw = np.diff(w, axis=1)
            block = np.outer(v[:, n], w[:, -1]) - np.outer(v[:, 0], w[:, 0])
            if n > 1:
                block -= v[:, 1:n] @ dw.T
            out[:, i:i + rows] = block
    else:
        raise InvalidParameter(f"unknown form {form!r}")
    return out


def _trunc_estimate(spec: KernelSpec, grid: IncrementGrid, times: np.ndarray,
                    variance: float | None) -> float:
    if variance is None or times.size == 0:
        return math.nan
    if not spec.has_left_tail:
        return 0.0
    reach = float(np.max(np.abs(times)))
    err = truncation_error(spec.d, reach, variance, -grid.r_min + min(0.0, times.min()))
    if spec.has_right_tail:
        err = math.hypot(err, truncation_error(spec.d, reach, variance, grid.t_max - times.max()))
    return err


def synthesize(path: PathSample, spec: KernelSpec, out_times: Sequence[float], *,
               form: str = "increment") -> FlpPath:
    """Synthesize ``spec`` from one driver path at the given grid nodes."""
    times = np.asarray(out_times, dtype=float)
    vals = synthesize_matrix(path.grid, path.increments[None, :], spec, times, form=form,
                             values=path.values[None, :] if form == "path" else None)[0]
    return FlpPath(times, vals, spec, path.grid.r_min, path.grid.step,
                   _trunc_estimate(spec, path.grid, times, path.unit_variance))


def synthesize_nd_by_decomposition(path_pos: PathSample, path_neg: PathSample, d: float,
                                   out_times: Sequence[float]) -> FlpPath:
    """Well-balanced process as ``M1(t) + M2(-t)``.

    ``path_neg`` is the time-reversed driver, normally ``time_reverse(path_pos)``.
    """
    if path_pos.grid.step != path_neg.grid.step or path_pos.grid.n_cells != path_neg.grid.n_cells:
        raise InvalidParameter("forward and reversed drivers must live on matching grids")
    times = np.asarray(out_times, dtype=float)
    spec = KernelSpec(KernelKind.NON_ANTICIPATIVE, d)
    m1 = synthesize(path_pos, spec, times)
    m2 = synthesize(path_neg, spec, -times)
    wb = KernelSpec(KernelKind.WELL_BALANCED, d)
    return FlpPath(times, m1.values + m2.values, wb, path_pos.grid.r_min, path_pos.grid.step,
                   _trunc_estimate(wb, path_pos.grid, times, path_pos.unit_variance))


def well_balanced_pair(path: PathSample) -> tuple[PathSample, PathSample]:
    """Convenience: the forward driver and its time reversal."""
    return path, time_reverse(path)
