"""Command-line front end: ``flevy simulate | check | tv | bounds | verify``.

Exit codes: 0 success, 1 a verification or dominance check failed, 2 usage or
input error, 3 the criterion reports infinite variation.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .criterion import fv_criterion
from .errors import FlevyError, InvalidParameter
from .idbounds import DominanceLattice, dominance_suite
from .levy import load_model, model_from_dict, model_to_dict, sample_increment_matrix
from .synth import KernelSpec, synthesis_grid, synthesize_matrix
from .variation import expected_tv, tv_profile_matrix
from .verify import _jsonable, load_config, quick_config, run_all

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INFINITE = 0, 1, 2, 3


@dataclass
class RunConfig:
    """Parameters shared by the subcommands; ``extra`` keeps the verification sections."""

    model: dict
    kind: str = "non_anticipative"
    d: float = 0.25
    t_max: float = 1.0
    step: float = 2.0**-9
    tol: float = 1e-2
    paths: int = 1
    depth: int = 8
    n_mc: int = 0
    seed: int = 0
    interval: tuple[float, float] = (0.0, 1.0)
    out: str = "flevy_output"
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)} - {"extra"}
        known = {k: v for k, v in doc.items() if k in names}
        if "interval" in known:
            known["interval"] = tuple(float(x) for x in known["interval"])
        extra = {k: v for k, v in doc.items() if k not in names}
        cfg = cls(**known, extra=extra)
        model_from_dict(cfg.model)  # validate early
        KernelSpec(cfg.kind, cfg.d)
        return cfg

    def to_dict(self) -> dict:
        doc = asdict(self)
        extra = doc.pop("extra")
        doc["interval"] = list(self.interval)
        return {**extra, **doc}


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{x:.17g}" if isinstance(x, float) else x for x in row])


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out: Path, command: str, names: list[str]) -> Path:
    """Manifest listing every output file with its size and SHA-256."""
    entries = [{"file": n, "bytes": (out / n).stat().st_size, "sha256": _sha256(out / n)}
               for n in sorted(names)]
    dest = out / "manifest.json"
    _dump_json({"command": command, "files": entries}, dest)
    return dest


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(cfg: RunConfig) -> int:
    model = model_from_dict(cfg.model)
    spec = KernelSpec(cfg.kind, cfg.d)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    grid = synthesis_grid(spec, cfg.t_max, cfg.step, model.second_moment, cfg.tol)
    n_times = int(round(cfg.t_max / cfg.step)) + 1
    times = np.arange(n_times) * cfg.step
    names = []
    if cfg.paths > 0:
        inc = sample_increment_matrix(model, grid, cfg.seed, cfg.paths)
        vals = synthesize_matrix(grid, inc, spec, times)
        for i, row in enumerate(vals):
            name = f"path_{i:05d}.csv"
            _write_csv(out / name, ["t", "X"], zip(times.tolist(), row.tolist()))
            names.append(name)
    from .synth import truncation_error

    meta = {
        "kind": spec.kind.value, "d": spec.d, "t_max": cfg.t_max, "step": cfg.step,
        "tol": cfg.tol, "paths": cfg.paths, "seed": cfg.seed, "r_min": grid.r_min,
        "r_max": grid.t_max, "n_cells": grid.n_cells,
        "truncation_error": truncation_error(spec.d, cfg.t_max, model.second_moment, -grid.r_min)
        if spec.has_left_tail else 0.0,
        "model": model_to_dict(model),
    }
    if cfg.paths > 0:
        _dump_json(meta, out / "simulate.json")
        names.append("simulate.json")
    write_manifest(out, "simulate", names)
    print(f"wrote {len(names)} file(s) to {out}")
    return EXIT_OK


def cmd_check(cfg: RunConfig, write: bool = False) -> int:
    rep = fv_criterion(model_from_dict(cfg.model), cfg.d)
    doc = rep.to_dict()
    print(json.dumps(_jsonable(doc), indent=2, sort_keys=True))
    if write:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        _dump_json(doc, out / "check.json")
        write_manifest(out, "check", ["check.json"])
    return EXIT_OK if rep.finite_variation else EXIT_INFINITE


def _read_path_csv(path) -> tuple[np.ndarray, np.ndarray]:
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise InvalidParameter(f"cannot read path file {path}: {exc}") from exc
    if data.shape[1] < 2:
        raise InvalidParameter("path file needs a time column and at least one value column")
    return data[:, 0], data[:, 1:].T


def cmd_tv(cfg: RunConfig, input_path: str | None = None) -> int:
    a, b = cfg.interval
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    doc: dict = {"interval": [a, b], "depth": cfg.depth}
    if input_path is not None:
        times, vals = _read_path_csv(input_path)
        doc["source"] = os.path.basename(input_path)
    else:
        model = model_from_dict(cfg.model)
        spec = KernelSpec(cfg.kind, cfg.d)
        if cfg.paths < 1:
            raise InvalidParameter("--paths must be >= 1 when synthesizing")
        step = (b - a) * 2.0**-cfg.depth
        grid = synthesis_grid(spec, b, step, model.second_moment, cfg.tol, t_min=min(a, 0.0))
        times = a + (b - a) * np.arange(2**cfg.depth + 1) / 2**cfg.depth
        inc = sample_increment_matrix(model, grid, cfg.seed, cfg.paths)
        vals = synthesize_matrix(grid, inc, spec, times)
        doc.update(kind=spec.kind.value, d=spec.d, paths=cfg.paths, seed=cfg.seed)
        if cfg.n_mc > 0:
            est = expected_tv(model, spec.d, a, b, cfg.n_mc, cfg.seed)
            doc["expected_tv"] = {"estimate": est.estimate, "stderr": est.stderr,
                                  "verdict": est.verdict}
    rep = tv_profile_matrix(vals, times, a, b, cfg.depth)
    doc["report"] = rep.to_dict()
    _dump_json(doc, out / "tv.json")
    _write_csv(out / "tv.csv", ["n", "tv"], [(n, float(v)) for n, v in rep.tv_by_depth])
    write_manifest(out, "tv", ["tv.csv", "tv.json"])
    print(json.dumps(_jsonable(doc["report"]), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_bounds(cfg: RunConfig) -> int:
    model = model_from_dict(cfg.model)
    dom = cfg.extra.get("dominance", {})
    keys = {"eps_values", "d_values", "r_values", "a_values", "mc_draws", "fd_d", "fd_b",
            "fd_paths", "fd_depth", "fd_tol"}
    lat = DominanceLattice(**{k: (tuple(v) if isinstance(v, list) else v)
                              for k, v in dom.items() if k in keys}, seed=cfg.seed)
    rows = dominance_suite(model, lat)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    _dump_json({"rows": [r.to_dict() for r in rows]}, out / "bounds.json")
    write_manifest(out, "bounds", ["bounds.json"])
    failed = 0
    print(f"{'check':<32} {'params':<34} {'lhs':>12} {'rhs':>12}  result")
    for r in rows:
        status = "skip" if r.passed is None else ("pass" if r.passed else "FAIL")
        failed += r.passed is False
        params = ",".join(f"{k}={v}" for k, v in r.params.items())
        lhs = "-" if r.lhs is None else f"{r.lhs:.6g}"
        rhs = "-" if r.rhs is None else f"{r.rhs:.6g}"
        print(f"{r.check:<32} {params:<34} {lhs:>12} {rhs:>12}  {status} {r.note}".rstrip())
    return EXIT_FAIL if failed else EXIT_OK


def cmd_verify(cfg_doc: dict, out: str, quick: bool = False) -> int:
    """Run every verification check; summary and manifest are reproducible byte for byte."""
    doc = quick_config(cfg_doc) if quick else cfg_doc
    RunConfig.from_dict({k: v for k, v in doc.items() if k != "quick"})
    results = run_all(doc)
    dest = Path(out)
    dest.mkdir(parents=True, exist_ok=True)
    summary = {"all_passed": all(r.passed for r in results), "quick": quick,
               "seed": doc["seed"], "checks": [r.to_dict() for r in results]}
    _dump_json(summary, dest / "summary.json")
    write_manifest(dest, "verify", ["summary.json"])
    # wall-clock times differ between runs, so they stay out of the manifest
    _dump_json({r.key: r.runtime for r in results}, dest / "timings.json")
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.key}: {r.title} ({r.runtime:.1f} s)")
    return EXIT_OK if summary["all_passed"] else EXIT_FAIL


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _interval(text: str) -> tuple[float, float]:
    try:
        a, b = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("interval must look like a:b") from None
    if not b > a:
        raise argparse.ArgumentTypeError("interval needs a < b")
    return a, b


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (flags override it)")
    common.add_argument("--model", help="model JSON document")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--d", type=float)

    synth = argparse.ArgumentParser(add_help=False)
    synth.add_argument("--kind")
    synth.add_argument("--tmax", type=float, dest="t_max")
    synth.add_argument("--step", type=float)
    synth.add_argument("--tol", type=float)
    synth.add_argument("--paths", type=int)

    p = argparse.ArgumentParser(prog="flevy", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common, synth], help="synthesize paths to CSV")
    c = sub.add_parser("check", parents=[common], help="finite-variation verdict")
    c.add_argument("--write", action="store_true", help="also write check.json and a manifest")
    t = sub.add_parser("tv", parents=[common, synth], help="dyadic total variation")
    t.add_argument("--depth", type=int)
    t.add_argument("--interval", type=_interval)
    t.add_argument("--n-mc", type=int, dest="n_mc", help="draws for the Y0-based estimate")
    t.add_argument("--input", help="CSV path file (t, X) to analyse instead of synthesizing")
    sub.add_parser("bounds", parents=[common], help="bound dominance suite")
    v = sub.add_parser("verify", parents=[common], help="run the verification suite")
    v.add_argument("--quick", action="store_true", help="small Monte Carlo sizes (smoke run)")
    return p


_FLAG_KEYS = ("seed", "out", "d", "kind", "t_max", "step", "tol", "paths", "depth", "interval",
              "n_mc")


def _config_from_args(args) -> dict:
    overrides = {k: getattr(args, k) for k in _FLAG_KEYS if getattr(args, k, None) is not None}
    if getattr(args, "model", None):
        overrides["model"] = model_to_dict(load_model(args.model))
    if "interval" in overrides:
        overrides["interval"] = list(overrides["interval"])
    doc = load_config(args.config, overrides)
    doc.setdefault("out", "flevy_output")
    return doc


def _run(args) -> int:
    doc = _config_from_args(args)
    if args.command == "verify":
        return cmd_verify(doc, doc["out"], quick=args.quick)
    cfg = RunConfig.from_dict({k: v for k, v in doc.items() if k != "quick"})
    if args.command == "simulate":
        return cmd_simulate(cfg)
    if args.command == "check":
        return cmd_check(cfg, write=args.write)
    if args.command == "tv":
        return cmd_tv(cfg, args.input)
    return cmd_bounds(cfg)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    threads = os.environ.get("FLEVY_THREADS")
    try:
        if threads:
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=int(threads)):
                return _run(args)
        return _run(args)
    except json.JSONDecodeError as exc:
        print(f"flevy: malformed JSON: {exc}", file=sys.stderr)
    except (FlevyError, ValueError, OSError, KeyError, TypeError) as exc:
        print(f"flevy: {exc}", file=sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
