"""Numerical verification runs, one function per checked property.

Each runner takes the parsed configuration and returns a ``CheckResult``.
``run_all`` drives them in order; the CLI ``verify`` subcommand and the
acceptance tests both go through these functions.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.stats import ks_2samp

from .criterion import Verdict, fv_criterion, stable_threshold
from .errors import InvalidParameter
from .idbounds import DominanceLattice, dominance_suite, mean_abs_bound
from .levy import (CompoundPoisson, IncrementGrid, LevyModel, PathSample, TruncatedStable,
                   make_model, model_from_dict, sample_increment_matrix, time_reverse)
from .synth import KernelKind, KernelSpec, synthesis_grid, synthesize_matrix
from .variation import (direct_expected_tv, expected_tv, paired_derivative_error,
                        tv_profile_matrix)

__all__ = ["CheckResult", "load_config", "default_config", "quick_config", "run_all", "RUNNERS"]


@dataclass
class CheckResult:
    key: str
    title: str
    passed: bool
    estimates: dict = field(default_factory=dict)
    runtime: float = 0.0

    def to_dict(self) -> dict:
        return {"key": self.key, "title": self.title, "passed": self.passed,
                "estimates": _jsonable(self.estimates)}


def _jsonable(obj):
    """Plain JSON types; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(obj, Verdict):
        return obj.value
    return obj


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


def default_config() -> dict:
    text = resources.files("flevy").joinpath("data/default_config.json").read_text()
    return json.loads(text)


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path=None, overrides: dict | None = None) -> dict:
    """Default configuration updated by a JSON file and then by ``overrides``."""
    cfg = default_config()
    if path is not None:
        with open(path) as fh:
            user = json.load(fh)
        if not isinstance(user, dict):
            raise InvalidParameter("configuration must be a JSON object")
        cfg = _merge(cfg, user)
    if overrides:
        cfg = _merge(cfg, overrides)
    return cfg


def quick_config(cfg: dict | None = None) -> dict:
    """Shrunk Monte Carlo sizes for smoke runs; pass/fail is not meaningful."""
    cfg = cfg if cfg is not None else default_config()
    return _merge(cfg, cfg.get("quick", {}))


def _model(doc) -> LevyModel:
    return model_from_dict(doc)


def _seed(cfg: dict, offset: int) -> int:
    return int(cfg["seed"]) + 1000 * offset


def _synth_paths(model: LevyModel, spec: KernelSpec, grid: IncrementGrid, times, n: int,
                 seed: int, chunk: int = 250) -> np.ndarray:
    out = np.empty((n, len(times)))
    for lo in range(0, n, chunk):
        k = min(chunk, n - lo)
        inc = sample_increment_matrix(model, grid, seed, k, first_index=lo)
        out[lo:lo + k] = synthesize_matrix(grid, inc, spec, times)
    return out


def _inversions(seq) -> int:
    return int(np.sum(np.diff(np.asarray(seq)) > 0))


# ---------------------------------------------------------------------------
# Runners
# ---------------------------------------------------------------------------


def check_decomposition(cfg: dict) -> CheckResult:
    c = cfg["decomposition"]
    model = _model(cfg["model"])
    d, h, t_max, n = cfg["d"], float(c["step"]), float(c["t_max"]), int(c["n_paths"])
    times = np.arange(0, round(t_max / h) + 1) * h
    m_spec = KernelSpec(KernelKind.NON_ANTICIPATIVE, d)
    wb = KernelSpec(KernelKind.WELL_BALANCED, d)
    grid = synthesis_grid(wb, t_max, h, model.second_moment, c["tol"])
    inc = sample_increment_matrix(model, grid, _seed(cfg, 1), n)
    m = synthesize_matrix(grid, inc, m_spec, times)
    f = synthesize_matrix(grid, inc, KernelSpec(KernelKind.TAIL_PART, d), times)
    rl = synthesize_matrix(grid, inc, KernelSpec(KernelKind.RIEMANN_LIOUVILLE, d), times)
    scale = np.maximum(np.max(np.abs(m), axis=1, keepdims=True), np.finfo(float).tiny)
    err_m = float(np.max(np.abs(m - (f + rl)) / scale))

    # N_d directly and as M1(t) + M2(-t) with M2 driven by the time-reversed increments
    g1 = gamma_fn(d + 1.0)
    nd = g1 * synthesize_matrix(grid, inc, wb, times)
    rev = time_reverse(PathSample(grid, inc[0])).grid
    m2 = synthesize_matrix(rev, inc[:, ::-1], m_spec, -times)
    nd_sum = g1 * (m + m2)
    scale_n = np.maximum(np.max(np.abs(nd), axis=1, keepdims=True), np.finfo(float).tiny)
    err_n = float(np.max(np.abs(nd - nd_sum) / scale_n))
    tol = float(c["rel_tol"])
    return CheckResult("decomposition", "M = F + I^d L and N = M1 + M2(-.)",
                       err_m <= tol and err_n <= tol,
                       {"max_rel_err_tail_rl": err_m, "max_rel_err_nd": err_n, "tolerance": tol,
                        "n_paths": n, "n_cells": grid.n_cells})


def check_phase_boundary(cfg: dict) -> CheckResult:
    c = cfg["phase_boundary"]
    d_values = np.linspace(c["d_min"], c["d_max"], int(c["n_d"]))
    n_alpha = int(c["n_alpha"])
    generic = np.linspace(c["alpha_min"], c["alpha_max"], n_alpha - 1)
    agree = total = boundary_ok = 0
    for d in d_values:
        thr = stable_threshold(d)
        for alpha in (*generic, thr):
            model = make_model(0.0, 0.0, TruncatedStable(float(alpha)))
            rep = fv_criterion(model, float(d))
            expected = alpha < thr
            agree += rep.finite_variation == expected
            total += 1
            if alpha == thr:
                boundary_ok += rep.verdict is Verdict.INFINITE
    return CheckResult("phase_boundary", "criterion verdict on the (alpha, d) lattice",
                       agree == total and boundary_ok == len(d_values),
                       {"lattice_points": total, "agreement": agree / total,
                        "boundary_points": len(d_values), "boundary_infinite": boundary_ok})


def check_expected_tv(cfg: dict) -> CheckResult:
    c = cfg["expected_tv"]
    model = _model(c.get("model", cfg["model"]))
    d, a, b = cfg["d"], float(c["a"]), float(c["b"])
    y0 = expected_tv(model, d, a, b, int(c["n_mc"]), _seed(cfg, 3), r_tail=-float(c["y0_radius"]))
    if y0.verdict is Verdict.INFINITE:
        return CheckResult("expected_tv", "E TV(M_d) against (b-a) E|Y0| / Gamma(d)", True,
                           {"verdict": y0.verdict, "expected_infinite": True,
                            "estimate": y0.estimate})
    rep = direct_expected_tv(model, d, a, b, int(c["n_paths"]), int(c["depth"]), float(c["tol"]),
                             _seed(cfg, 30), oversample=int(c.get("oversample", 0)))
    se = math.hypot(y0.stderr, rep.mc_stderr)
    diff = abs(y0.estimate - rep.mc_mean)
    k = float(c["n_stderr"])
    return CheckResult("expected_tv", "E TV(M_d) against (b-a) E|Y0| / Gamma(d)", bool(diff <= k * se),
                       {"verdict": y0.verdict, "direct_mean": rep.mc_mean,
                        "direct_stderr": rep.mc_stderr, "y0_estimate": y0.estimate,
                        "y0_stderr": y0.stderr, "difference": diff, "combined_stderr": se,
                        "z": diff / se if se > 0 else math.inf,
                        "y0_stub_bound": y0.meta.get("stub_bound"),
                        "y0_tail_std": y0.meta.get("tail_std")})


def check_tv_dichotomy(cfg: dict) -> CheckResult:
    c = cfg["tv_dichotomy"]
    model = _model(cfg["model"])
    d = cfg["d"]
    depth = int(c["depth"])
    spec = KernelSpec(KernelKind.NON_ANTICIPATIVE, d)
    step = 2.0**-depth
    grid = synthesis_grid(spec, 1.0, step, model.second_moment, float(c["tol"]))
    times = np.arange(2**depth + 1) * step
    vals = _synth_paths(model, spec, grid, times, int(c["n_paths"]), _seed(cfg, 4))
    rep = tv_profile_matrix(vals, times, 0.0, 1.0, depth, float(c["conv_tol"]))
    frac_ok = rep.converged_fraction >= float(c["min_converged"])

    bm = make_model(1.0)
    bd = c["brownian"]
    res = int(bd["depth"]) + int(bd["oversample"])
    bstep = 2.0**-res
    btimes = np.arange(2**res + 1) * bstep
    slopes = {}
    ok = frac_ok
    for i, dv in enumerate(bd["d_values"]):
        bspec = KernelSpec(KernelKind.NON_ANTICIPATIVE, dv)
        bgrid = synthesis_grid(bspec, 1.0, bstep, 1.0, float(bd["tol"]))
        bvals = _synth_paths(bm, bspec, bgrid, btimes, int(bd["n_paths"]), _seed(cfg, 40 + i))
        brep = tv_profile_matrix(bvals, btimes, 0.0, 1.0, int(bd["depth"]))
        slopes[str(dv)] = {"growth_exponent": brep.growth_exponent, "target": 0.5 - dv,
                           "converged_fraction": brep.converged_fraction}
        ok = ok and abs(brep.growth_exponent - (0.5 - dv)) <= float(bd["exp_tol"])
    return CheckResult("tv_dichotomy", "TV converges for compound Poisson, grows for Brownian", ok,
                       {"converged_fraction": rep.converged_fraction,
                        "growth_exponent_cpp": rep.growth_exponent, "brownian": slopes})


def check_second_order(cfg: dict) -> CheckResult:
    c = cfg["second_order"]
    d = cfg["d"]
    spec = KernelSpec(KernelKind.NON_ANTICIPATIVE, d)
    ts = 2.0 ** -np.arange(int(c["min_level"]), int(c["max_level"]) - 1, -1)
    step = float(c["step"])
    out = {}
    ok = True
    for i, (name, doc) in enumerate(sorted(c["models"].items())):
        model = _model(doc)
        grid = synthesis_grid(spec, float(ts.max()), step, model.second_moment, float(c["tol"]))
        vals = _synth_paths(model, spec, grid, ts, int(c["n_reps"]), _seed(cfg, 50 + i), 1000)
        var = vals.var(axis=0, ddof=1)
        slope = float(np.polyfit(np.log(ts), np.log(var), 1)[0])
        out[name] = {"slope": slope, "target": 2 * d + 1}
        ok = ok and abs(slope - (2 * d + 1)) <= float(c["slope_tol"])
    return CheckResult("second_order", "log-log variance slope 2d + 1", ok, out)


def check_derivative(cfg: dict) -> CheckResult:
    c = cfg["derivative"]
    model = _model(cfg["model"])
    ts = 2.0 ** -np.arange(int(c["min_level"]), int(c["max_level"]) + 1)
    origins = float(c["origin_spacing"]) * np.arange(int(c["n_origins"]))
    errs = paired_derivative_error(model, cfg["d"], ts, int(c["n_paths"]), _seed(cfg, 6),
                                   step=float(c["step"]), tol=float(c["tol"]), origins=origins)
    out = {"t": ts, "n_origins": origins.size}
    ok = True
    for side, err in errs.items():
        inv = _inversions(err)
        out[side] = {"mean_abs_error": err, "inversions": inv}
        ok = ok and inv <= int(c["max_inversions"])
    return CheckResult("derivative", "paired L1 convergence of M_d(t)/t from both sides", ok, out)


def check_dominance(cfg: dict) -> CheckResult:
    c = cfg["dominance"]
    lat = DominanceLattice(
        eps_values=tuple(c["eps_values"]), d_values=tuple(c["d_values"]),
        r_values=tuple(c["r_values"]), a_values=tuple(c["a_values"]),
        mc_draws=int(c["mc_draws"]), fd_d=float(c["fd_d"]), fd_b=float(c["fd_b"]),
        fd_paths=int(c["fd_paths"]), fd_depth=int(c["fd_depth"]), fd_tol=float(c["fd_tol"]),
        seed=_seed(cfg, 7))
    rows_out = {}
    failed = 0
    for name, doc in sorted(c["models"].items()):
        rows = dominance_suite(_model(doc), lat)
        bad = [r for r in rows if r.passed is False]
        failed += len(bad)
        rows_out[name] = {"checked": sum(r.passed is not None for r in rows),
                          "failed": [r.to_dict() for r in bad]}
    worked = {
        "cpp_eps2": mean_abs_bound(make_model(0, 0, CompoundPoisson(((1, .5), (-1, .5)))), 2.0),
        "stable1_eps1": mean_abs_bound(make_model(0, 0, TruncatedStable(1.0)), 1.0),
    }
    worked_ok = (math.isclose(worked["cpp_eps2"], 2.5, rel_tol=1e-12)
                 and math.isclose(worked["stable1_eps1"], 3.0, rel_tol=1e-12))
    return CheckResult("dominance", "bound dominance suites", failed == 0 and worked_ok,
                       {"models": rows_out, "worked_values": worked})


def check_stationarity(cfg: dict) -> CheckResult:
    c = cfg["stationarity"]
    model = _model(cfg["model"])
    spec = KernelSpec(KernelKind.NON_ANTICIPATIVE, cfg["d"])
    t1, t2, h = float(c["t1"]), float(c["t2"]), float(c["h"])
    grid = synthesis_grid(spec, max(t1, t2) + h, float(c["step"]), model.second_moment,
                          float(c["tol"]))
    vals = _synth_paths(model, spec, grid, [t1, t1 + h, t2, t2 + h], int(c["n_paths"]),
                        _seed(cfg, 8))
    res = ks_2samp(vals[:, 1] - vals[:, 0], vals[:, 3] - vals[:, 2])
    level = float(c["level"])
    return CheckResult("stationarity", "KS test on increments at two offsets",
                       bool(res.pvalue >= level),
                       {"statistic": float(res.statistic), "pvalue": float(res.pvalue),
                        "level": level})


RUNNERS: dict[str, Callable[[dict], CheckResult]] = {
    "decomposition": check_decomposition,
    "phase_boundary": check_phase_boundary,
    "expected_tv": check_expected_tv,
    "tv_dichotomy": check_tv_dichotomy,
    "second_order": check_second_order,
    "derivative": check_derivative,
    "dominance": check_dominance,
    "stationarity": check_stationarity,
}


def run_all(cfg: dict, only: list[str] | None = None) -> list[CheckResult]:
    keys = only or [k for k in RUNNERS if cfg.get(k, {}).get("enabled", True)]
    out = []
    for key in keys:
        if key not in RUNNERS:
            raise InvalidParameter(f"unknown check {key!r}")
        start = time.perf_counter()
        res = RUNNERS[key](cfg)
        res.runtime = time.perf_counter() - start
        out.append(res)
    return out
