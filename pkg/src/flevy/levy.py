"""Square-integrable Levy drivers: triplets, jump families, grids and sampling.

A model is stored through its Gaussian variance, its mean per unit time and a
jump family. The drift ``gamma`` that belongs to the continuous truncation
function ``beta(x) = (1 - |x|) 1{|x| <= 1}`` is derived on demand, since
every downstream computation only needs the mean.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidParameter, Unsupported

__all__ = [
    "NoJumps",
    "CompoundPoisson",
    "TruncatedStable",
    "Mixture",
    "LevyModel",
    "IncrementGrid",
    "PathSample",
    "make_model",
    "tail_mass",
    "abs_moment",
    "uniform_grid",
    "coarsened_grid",
    "sample_increments",
    "sample_increment_matrix",
    "splice_two_sided",
    "time_reverse",
    "child_rng",
    "model_from_dict",
    "model_to_dict",
    "load_model",
    "dump_model",
    "write_path_csv",
]

POSITIVE, NEGATIVE = 1, -1

# Small-jump threshold eps = SMALL_JUMP_FACTOR * width**(1/alpha), clamped.
SMALL_JUMP_FACTOR = 0.1
FINE_EPS_RANGE = (1e-6, 1e-2)
# Coarse cells may push the threshold up to the cutoff (all-Gaussian cell).
COARSE_EPS_RANGE = (1e-6, 1.0)
# Node ticks are int64; keep well clear of overflow.
_MAX_TICK = 2**62


def child_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the stream identified by ``key`` under ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


# ---------------------------------------------------------------------------
# Jump families
# ---------------------------------------------------------------------------


class _Family:
    """Shared closed-form integrals built from ``moment`` and ``tail``.

    ``moment(p, lo, hi, side)`` is the integral of ``|x|**p`` over
    ``lo < |x| <= hi`` restricted to one sign; ``tail(x, side)`` is
    ``nu([x, inf))`` for ``side=+1`` and ``nu((-inf, -x])`` for ``side=-1``.
    """

    def tail(self, x: float, side: int = POSITIVE) -> float:
        raise NotImplementedError

    def moment(self, p: float, lo: float, hi: float, side: int = POSITIVE) -> float:
        raise NotImplementedError

    def leaves(self) -> list["_Family"]:
        return [self]

    def breakpoints(self) -> list[float]:
        return []

    def is_symmetric(self) -> bool:
        raise NotImplementedError

    # integrals of the tail function, used by the Levy-measure bounds
    def tail_integral(self, lo: float, hi: float, side: int = POSITIVE) -> float:
        """Integral of ``nu([x, inf))`` over ``lo <= x <= hi``."""
        if hi <= lo:
            return 0.0
        val = self.moment(1.0, lo, hi, side)
        if lo > 0:
            val -= lo * self.moment(0.0, lo, hi, side)
        if math.isfinite(hi):
            val += (hi - lo) * self.moment(0.0, hi, math.inf, side)
        return val

    def tail_x_integral(self, lo: float, hi: float, side: int = POSITIVE) -> float:
        """Integral of ``x * nu([x, inf))`` over ``lo <= x <= hi``."""
        if hi <= lo:
            return 0.0
        val = self.moment(2.0, lo, hi, side)
        if lo > 0:
            val -= lo * lo * self.moment(0.0, lo, hi, side)
        if math.isfinite(hi):
            val += (hi * hi - lo * lo) * self.moment(0.0, hi, math.inf, side)
        return 0.5 * val

    def second_moment(self) -> float:
        return self.moment(2.0, 0.0, math.inf, POSITIVE) + self.moment(2.0, 0.0, math.inf, NEGATIVE)

    def beta_shift(self) -> float:
        """Integral of ``x * (1 - beta(x))`` = ``x * min(|x|, 1)`` against nu."""
        inner = self.moment(2.0, 0.0, 1.0, POSITIVE) - self.moment(2.0, 0.0, 1.0, NEGATIVE)
        outer = self.moment(1.0, 1.0, math.inf, POSITIVE) - self.moment(1.0, 1.0, math.inf, NEGATIVE)
        return inner + outer


@dataclass(frozen=True)
class NoJumps(_Family):
    def tail(self, x, side=POSITIVE):
        return 0.0

    def moment(self, p, lo, hi, side=POSITIVE):
        return 0.0

    def leaves(self):
        return []

    def is_symmetric(self):
        return True


@dataclass(frozen=True)
class CompoundPoisson(_Family):
    """Finitely many atoms ``(size, rate)``; ``nu = sum rate * delta_size``."""

    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        atoms = tuple((float(a), float(r)) for a, r in self.atoms)
        for a, r in atoms:
            if r < 0 or not math.isfinite(r):
                raise InvalidParameter(f"atom rate must be finite and >= 0, got {r}")
            if a == 0 or not math.isfinite(a):
                raise InvalidParameter(f"atom size must be finite and nonzero, got {a}")
        object.__setattr__(self, "atoms", atoms)

    def _side(self, side):
        return [(abs(a), r) for a, r in self.atoms if (a > 0) == (side > 0)]

    def tail(self, x, side=POSITIVE):
        return float(sum(r for a, r in self._side(side) if a >= x))

    def moment(self, p, lo, hi, side=POSITIVE):
        return float(sum(r * a**p for a, r in self._side(side) if lo < a <= hi))

    def breakpoints(self):
        return sorted({abs(a) for a, _ in self.atoms})

    def is_symmetric(self):
        rates: dict[float, float] = {}
        for a, r in self.atoms:
            rates[a] = rates.get(a, 0.0) + r
        return all(math.isclose(r, rates.get(-a, 0.0), rel_tol=1e-12) for a, r in rates.items())

    @property
    def total_rate(self) -> float:
        return float(sum(r for _, r in self.atoms))

    @property
    def jump_mean(self) -> float:
        return float(sum(a * r for a, r in self.atoms))


@dataclass(frozen=True)
class TruncatedStable(_Family):
    """Density ``c |x|**(-1-alpha)`` on ``0 < |x| <= 1`` (positive side only unless symmetric)."""

    alpha: float
    c: float = 1.0
    symmetric: bool = True

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise InvalidParameter(f"alpha must lie in (0, 2), got {self.alpha}")
        if not self.c > 0.0:
            raise InvalidParameter(f"scale c must be > 0, got {self.c}")

    def _active(self, side):
        return side > 0 or self.symmetric

    def tail(self, x, side=POSITIVE):
        if not self._active(side) or x >= 1.0:
            return 0.0
        return self.c * (x ** (-self.alpha) - 1.0) / self.alpha

    def moment(self, p, lo, hi, side=POSITIVE):
        if not self._active(side):
            return 0.0
        hi = min(hi, 1.0)
        if hi <= lo:
            return 0.0
        e = p - self.alpha
        if lo == 0.0:
            if e <= 0.0:
                return math.inf
            return self.c * hi**e / e
        if e == 0.0:
            return self.c * math.log(hi / lo)
        return self.c * (hi**e - lo**e) / e

    def breakpoints(self):
        return [1.0]

    def is_symmetric(self):
        return self.symmetric

    def sides(self) -> int:
        return 2 if self.symmetric else 1


@dataclass(frozen=True)
class Mixture(_Family):
    """Sum of independent jump families."""

    components: tuple[_Family, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))

    def tail(self, x, side=POSITIVE):
        return float(sum(f.tail(x, side) for f in self.components))

    def moment(self, p, lo, hi, side=POSITIVE):
        return float(sum(f.moment(p, lo, hi, side) for f in self.components))

    def leaves(self):
        return [leaf for f in self.components for leaf in f.leaves()]

    def breakpoints(self):
        return sorted({b for f in self.components for b in f.breakpoints()})

    def is_symmetric(self):
        return all(f.is_symmetric() for f in self.components)


JumpFamily = _Family


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevyModel:
    """Levy process with Gaussian variance ``sigma`` per unit time and the given jumps.

    ``mean`` is E L(1). ``centered`` records that the mean was forced to zero.
    """

    sigma: float
    mean: float
    jumps: _Family = field(default_factory=NoJumps)
    centered: bool = True

    @property
    def gamma(self) -> float:
        """Drift with respect to the truncation ``(1 - |x|) 1{|x| <= 1}``."""
        return self.mean - self.jumps.beta_shift()

    @property
    def variance(self) -> float:
        """Var L(1) = sigma + int x^2 nu(dx)."""
        return self.sigma + self.jumps.second_moment()

    @property
    def second_moment(self) -> float:
        """E L(1)^2."""
        return self.variance + self.mean**2

    def is_symmetric(self) -> bool:
        return self.mean == 0.0 and self.jumps.is_symmetric()

    def scaled(self, factor: float) -> "LevyModel":
        """The model of ``factor * L`` (compound Poisson and Gaussian parts only)."""
        leaves = self.jumps.leaves()
        if any(not isinstance(f, CompoundPoisson) for f in leaves):
            raise Unsupported("scaling is implemented for compound Poisson jumps only")
        atoms = tuple((factor * a, r) for f in leaves for a, r in f.atoms)
        jumps = CompoundPoisson(atoms) if atoms else NoJumps()
        return LevyModel(self.sigma * factor**2, self.mean * factor, jumps, self.centered)


def make_model(sigma: float = 0.0, gamma: float = 0.0, jumps: _Family | None = None,
               centered: bool = True) -> LevyModel:
    """Build a model from its characteristic triplet.

    With ``centered`` the drift is chosen so that E L(1) = 0 and ``gamma`` is
    ignored; otherwise the mean is ``gamma`` plus the truncation correction.
    """
    if jumps is None:
        jumps = NoJumps()
    if not (sigma >= 0.0 and math.isfinite(sigma)):
        raise InvalidParameter(f"sigma must be finite and >= 0, got {sigma}")
    if not math.isfinite(gamma):
        raise InvalidParameter("gamma must be finite")
    if centered:
        if not math.isfinite(jumps.second_moment()):
            raise Unsupported("centering needs a jump family with finite second moment")
        mean = 0.0
    else:
        mean = gamma + jumps.beta_shift()
    return LevyModel(float(sigma), float(mean), jumps, bool(centered))


def tail_mass(model: LevyModel, x: float) -> float:
    """nu([x, inf)) for ``x > 0``."""
    if not x > 0:
        raise InvalidParameter(f"tail_mass needs x > 0, got {x}")
    return model.jumps.tail(x, POSITIVE)


def abs_moment(model: LevyModel, p: float, lo: float = 0.0, hi: float = 1.0) -> float:
    """Integral of ``|x|**p`` over ``lo < |x| <= hi``; ``inf`` when it diverges."""
    if not p > 0:
        raise InvalidParameter(f"abs_moment needs p > 0, got {p}")
    if lo < 0 or hi <= lo:
        raise InvalidParameter(f"need 0 <= lo < hi, got lo={lo}, hi={hi}")
    return model.jumps.moment(p, lo, hi, POSITIVE) + model.jumps.moment(p, lo, hi, NEGATIVE)


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class IncrementGrid:
    """Nodes ``ticks * step`` on the lattice ``step * Z`` with 0 as a node.

    Cell ``k`` is ``[nodes[k], nodes[k+1])`` and is tagged by its left node.
    Uniform grids have unit tick gaps everywhere; coarsened grids keep unit
    gaps near the origin and grow the cells geometrically in the far tails.
    """

    step: float
    ticks: np.ndarray

    def __post_init__(self):
        if not (self.step > 0 and math.isfinite(self.step)):
            raise InvalidParameter(f"step must be > 0, got {self.step}")
        ticks = np.asarray(self.ticks, dtype=np.int64)
        if ticks.ndim != 1 or ticks.size < 2:
            raise InvalidParameter("a grid needs at least two nodes")
        if np.any(np.diff(ticks) <= 0):
            raise InvalidParameter("grid nodes must be strictly increasing")
        if not np.any(ticks == 0):
            raise InvalidParameter("0 must be a grid node")
        ticks.setflags(write=False)
        object.__setattr__(self, "ticks", ticks)

    @property
    def r_min(self) -> float:
        return float(self.ticks[0] * self.step)

    @property
    def t_max(self) -> float:
        return float(self.ticks[-1] * self.step)

    @property
    def n_cells(self) -> int:
        return self.ticks.size - 1

    @cached_property
    def nodes(self) -> np.ndarray:
        return self.ticks * self.step

    @property
    def tags(self) -> np.ndarray:
        return self.nodes[:-1]

    @cached_property
    def widths(self) -> np.ndarray:
        """Cell lengths in units of ``step``."""
        return np.diff(self.ticks)

    @cached_property
    def zero_index(self) -> int:
        return int(np.flatnonzero(self.ticks == 0)[0])

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.widths == 1))

    def node_indices(self, times: Sequence[float]) -> np.ndarray:
        """Indices of ``times`` among the nodes; raises if any is off-grid."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        ticks = np.rint(times / self.step).astype(np.int64)
        if np.any(np.abs(ticks * self.step - times) > 1e-9 * np.maximum(1.0, np.abs(times))):
            raise InvalidParameter("times are not on the step lattice")
        idx = np.searchsorted(self.ticks, ticks)
        ok = (idx < self.ticks.size) & (self.ticks[np.minimum(idx, self.ticks.size - 1)] == ticks)
        if not np.all(ok):
            raise InvalidParameter("times are not nodes of the grid")
        return idx

    def __eq__(self, other):
        if not isinstance(other, IncrementGrid):
            return NotImplemented
        return self.step == other.step and np.array_equal(self.ticks, other.ticks)

    def __hash__(self):
        return hash((self.step, self.ticks.tobytes()))


def _lattice_tick(x: float, step: float, name: str) -> int:
    k = round(x / step)
    if abs(k * step - x) > 1e-9 * max(1.0, abs(x)):
        raise InvalidParameter(f"{name}={x} is not a multiple of step={step}")
    return int(k)


def uniform_grid(r_min: float, t_max: float, step: float) -> IncrementGrid:
    """Equally spaced grid on ``[r_min, t_max]``; both ends must be multiples of ``step``."""
    if r_min > 0 or t_max < 0 or t_max == r_min:
        raise InvalidParameter("need r_min <= 0 <= t_max and r_min < t_max")
    lo = _lattice_tick(r_min, step, "r_min")
    hi = _lattice_tick(t_max, step, "t_max")
    return IncrementGrid(step, np.arange(lo, hi + 1, dtype=np.int64))


def _geometric_ticks(start: int, stop: int, growth: float) -> list[int]:
    """Ticks from ``start`` (exclusive) to ``stop`` (inclusive), 0 < start < stop.

    Cell length at distance ``k`` from the origin is ``max(1, floor(growth * k))``.
    """
    out = []
    k = start
    while k < stop:
        k = min(stop, k + max(1, int(growth * k)))
        out.append(k)
    return out


def coarsened_grid(r_min: float, t_max: float, step: float, *, fine_radius: float = 1.0,
                   growth: float = 1.0 / 64, r_max: float | None = None) -> IncrementGrid:
    """Unit cells on ``[-fine_radius, t_max]`` (and ``(t_max, t_max + fine_radius]``
    when extended right), geometrically growing cells out to ``r_min`` / ``r_max``.

    ``r_min`` is rounded outward to the lattice; the far cells still start and
    end on lattice points so 0 and every fine node stay exact.
    """
    if not 0 < growth < 1:
        raise InvalidParameter("growth must lie in (0, 1)")
    if r_min > 0 or t_max < 0:
        raise InvalidParameter("need r_min <= 0 <= t_max")
    if -r_min / step > _MAX_TICK or (r_max is not None and r_max / step > _MAX_TICK):
        raise InvalidParameter("grid extent exceeds the integer tick range; raise step or tol")
    lo = -int(math.ceil(-r_min / step - 1e-9))
    hi = _lattice_tick(t_max, step, "t_max")
    fine = int(round(fine_radius / step))
    fine_lo = max(lo, -fine)
    left = [-k for k in reversed(_geometric_ticks(-fine_lo, -lo, growth))] if lo < fine_lo else []
    ticks = left + list(range(fine_lo, hi + 1))
    if r_max is not None and r_max > t_max:
        top = int(math.ceil(r_max / step - 1e-9))
        fine_hi = min(top, hi + fine)
        ticks += list(range(hi + 1, fine_hi + 1))
        if top > fine_hi:
            ticks += _geometric_ticks(fine_hi, top, growth)
    return IncrementGrid(step, np.asarray(ticks, dtype=np.int64))


# ---------------------------------------------------------------------------
# Paths
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PathSample:
    """Driver increments on a grid; ``values`` are the anchored prefix sums (L(0) = 0)."""

    grid: IncrementGrid
    increments: np.ndarray
    seed: int | None = None
    unit_variance: float | None = None

    def __post_init__(self):
        inc = np.asarray(self.increments, dtype=float)
        if inc.shape != (self.grid.n_cells,):
            raise InvalidParameter(
                f"expected {self.grid.n_cells} increments, got shape {inc.shape}")
        object.__setattr__(self, "increments", inc)

    @cached_property
    def values(self) -> np.ndarray:
        cum = np.concatenate(([0.0], np.cumsum(self.increments)))
        return cum - cum[self.grid.zero_index]

    def value_at(self, t: float) -> float:
        return float(self.values[self.grid.node_indices([t])[0]])


def _cell_eps(widths_time: np.ndarray, fine_mask: np.ndarray, alpha: float,
              eps: float | None) -> np.ndarray:
    if eps is not None:
        return np.full(widths_time.shape, float(eps))
    raw = SMALL_JUMP_FACTOR * widths_time ** (1.0 / alpha)
    return np.where(fine_mask, np.clip(raw, *FINE_EPS_RANGE), np.clip(raw, *COARSE_EPS_RANGE))


def _sample_side(model: LevyModel, widths_ticks: np.ndarray, step: float, seed: int,
                 path_index: int, side: int, eps: float | None) -> np.ndarray:
    """Increments for cells ordered outward from the origin on one side."""
    w = widths_ticks * step
    n = w.size
    out = np.zeros(n)
    drift = np.full(n, model.mean)
    side_key = 0 if side > 0 else 1
    if model.sigma > 0:
        rng = child_rng(seed, path_index, side_key, 0)
        out += rng.standard_normal(n) * np.sqrt(model.sigma * w)
    for comp, leaf in enumerate(model.jumps.leaves(), start=1):
        rng = child_rng(seed, path_index, side_key, comp)
        if isinstance(leaf, CompoundPoisson):
            for a, r in leaf.atoms:
                if r > 0:
                    out += a * rng.poisson(r * w)
            drift -= leaf.jump_mean
        elif isinstance(leaf, TruncatedStable):
            out += _sample_truncated_stable(leaf, w, widths_ticks == 1, rng, eps, drift)
        else:  # pragma: no cover - leaves() only yields the two concrete families
            raise Unsupported(type(leaf).__name__)
    return out + drift * w


def _sample_truncated_stable(leaf: TruncatedStable, w: np.ndarray, fine: np.ndarray,
                             rng: np.random.Generator, eps: float | None,
                             drift: np.ndarray) -> np.ndarray:
    """Exact jumps above a per-cell threshold, Gaussian remainder below it.

    ``drift`` is decremented in place by the mean of the exactly sampled jumps.
    """
    a, c, sides = leaf.alpha, leaf.c, leaf.sides()
    e = _cell_eps(w, fine, a, eps)
    big = e < 1.0
    rate = np.where(big, sides * c * (e ** (-a) - 1.0) / a, 0.0)
    counts = rng.poisson(rate * w)
    total = int(counts.sum())
    out = np.zeros(w.size)
    if total:
        cell = np.repeat(np.arange(w.size), counts)
        ea = e[cell] ** (-a)
        u = rng.random(total)
        size = (ea - u * (ea - 1.0)) ** (-1.0 / a)
        if leaf.symmetric:
            size *= np.where(rng.random(total) < 0.5, -1.0, 1.0)
        out += np.bincount(cell, weights=size, minlength=w.size)
    small_var = sides * c * np.minimum(e, 1.0) ** (2.0 - a) / (2.0 - a)
    out += rng.standard_normal(w.size) * np.sqrt(small_var * w)
    if not leaf.symmetric:
        # positive-side mean of the exactly sampled jumps on (eps, 1]
        if a == 1.0:
            m = np.where(big, -c * np.log(e), 0.0)
        else:
            m = np.where(big, c * (1.0 - e ** (1.0 - a)) / (1.0 - a), 0.0)
        drift -= m
    return out


def _sample_cells(model: LevyModel, grid: IncrementGrid, seed: int, path_index: int,
                  eps: float | None) -> np.ndarray:
    z = grid.zero_index
    widths = grid.widths
    pos = _sample_side(model, widths[z:], grid.step, seed, path_index, POSITIVE, eps)
    # negative side drawn nearest-first, so extending r_min leaves inner cells alone
    neg = _sample_side(model, widths[:z][::-1], grid.step, seed, path_index, NEGATIVE, eps)
    return np.concatenate((neg[::-1], pos))


def sample_increments(model: LevyModel, grid: IncrementGrid, seed: int, *,
                      path_index: int = 0, eps: float | None = None) -> PathSample:
    """Draw one two-sided driver path on ``grid``.

    Positive- and negative-time cells come from independent child streams, so
    the negative side is an independent copy run backwards. ``eps`` overrides
    the small-jump threshold of truncated-stable components.
    """
    inc = _sample_cells(model, grid, seed, path_index, eps)
    return PathSample(grid, inc, seed=int(seed), unit_variance=model.second_moment)


def sample_increment_matrix(model: LevyModel, grid: IncrementGrid, seed: int, n_paths: int,
                            *, first_index: int = 0, eps: float | None = None) -> np.ndarray:
    """Rows are ``sample_increments(..., path_index=i).increments`` for consecutive ``i``."""
    out = np.empty((n_paths, grid.n_cells))
    for i in range(n_paths):
        out[i] = _sample_cells(model, grid, seed, first_index + i, eps)
    return out


def splice_two_sided(pos: PathSample, neg_source: PathSample) -> PathSample:
    """Join a one-sided path with an independent copy run backwards.

    At grid resolution ``L(-u) = -L2(u)`` on nodes: a jump of ``L2`` recorded
    in the cell ending at ``u`` is read as the left limit at ``u``.
    """
    if pos.grid.step != neg_source.grid.step:
        raise InvalidParameter("paths must share the step")
    if pos.grid.ticks[0] != 0 or neg_source.grid.ticks[0] != 0:
        raise InvalidParameter("both inputs must be one-sided grids starting at 0")
    ticks = np.concatenate((-neg_source.grid.ticks[::-1], pos.grid.ticks[1:]))
    inc = np.concatenate((neg_source.increments[::-1], pos.increments))
    var = pos.unit_variance if pos.unit_variance is not None else neg_source.unit_variance
    return PathSample(IncrementGrid(pos.grid.step, ticks), inc, seed=pos.seed, unit_variance=var)


def time_reverse(path: PathSample) -> PathSample:
    """Driver ``L(-du)``: the cell tagged ``s`` is re-tagged ``-s``.

    Tags, not cell intervals, are mirrored so that weights evaluated at tags
    agree term by term with the forward path.
    """
    tags = path.grid.ticks[:-1]
    new_tags = -tags[::-1]
    last_gap = int(tags[1] - tags[0]) if tags.size > 1 else 1
    ticks = np.append(new_tags, new_tags[-1] + last_gap)
    return PathSample(IncrementGrid(path.grid.step, ticks), path.increments[::-1].copy(),
                      seed=path.seed, unit_variance=path.unit_variance)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _family_to_list(f: _Family) -> list[dict]:
    out = []
    for leaf in f.leaves():
        if isinstance(leaf, CompoundPoisson):
            out.append({"type": "compound_poisson", "atoms": [list(a) for a in leaf.atoms]})
        else:
            out.append({"type": "truncated_stable", "alpha": leaf.alpha, "c": leaf.c,
                        "symmetric": leaf.symmetric})
    return out


def _family_from_list(items: Iterable[dict]) -> _Family:
    leaves: list[_Family] = []
    for item in items:
        kind = item.get("type")
        if kind == "compound_poisson":
            leaves.append(CompoundPoisson(tuple(tuple(a) for a in item["atoms"])))
        elif kind == "truncated_stable":
            leaves.append(TruncatedStable(float(item["alpha"]), float(item.get("c", 1.0)),
                                          bool(item.get("symmetric", True))))
        else:
            raise InvalidParameter(f"unknown jump family type {kind!r}")
    if not leaves:
        return NoJumps()
    return leaves[0] if len(leaves) == 1 else Mixture(tuple(leaves))


def model_to_dict(model: LevyModel) -> dict:
    doc = {"sigma": model.sigma, "mean_zero": model.centered,
           "jumps": _family_to_list(model.jumps)}
    if not model.centered:
        doc["gamma"] = model.gamma
    return doc


def model_from_dict(doc: dict) -> LevyModel:
    if not isinstance(doc, dict):
        raise InvalidParameter("model document must be a JSON object")
    try:
        jumps = _family_from_list(doc.get("jumps", []))
        return make_model(float(doc.get("sigma", 0.0)), float(doc.get("gamma", 0.0)), jumps,
                          bool(doc.get("mean_zero", True)))
    except (KeyError, TypeError) as exc:
        raise InvalidParameter(f"malformed model document: {exc}") from exc


def load_model(path) -> LevyModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))


def dump_model(model: LevyModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_path_csv(path: PathSample, dest) -> None:
    """Write ``s_k, L(s_k)`` rows with 17 significant digits."""
    with open(dest, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", "L"])
        for s, v in zip(path.grid.nodes, path.values):
            w.writerow([f"{s:.17g}", f"{v:.17g}"])
