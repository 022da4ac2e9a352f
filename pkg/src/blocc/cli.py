"""Experiment command line: run the built-in problems, gradient audits, and
hyperparameter sweeps; write CSV traces and JSON summaries.

Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 solver abort.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .errors import ConfigError, ParseError, SolverAbort
from .maxmin import (MaxMinConfig, MaxMinMode, default_stepsizes_F,
                     default_stepsizes_g)
from .problem import PrimalDualPair
from .problems import (build_pedagogical, build_svm, build_toy,
                       build_transport, parse_libsvm, parse_network_spec,
                       three_node_spec)
from .solver import BloccConfig, solve
from .verify import finite_diff_grad, grid_oracle_lower
from .solver import estimate_grad_v
from .maxmin import solve_maxmin_g

EXPERIMENTS = ("toy", "pedagogical", "svm", "transport", "gradcheck", "sweep")

# Per-experiment defaults; gamma/eta follow the reference experiment settings.
_DEFAULTS: Dict[str, Dict[str, object]] = {
    "toy": dict(gamma=5.0, eta=0.05, outer_iters=400, inner_iters=400, ty=1,
                mode="single-loop"),
    "pedagogical": dict(gamma=2.0, eta=0.05, outer_iters=2000,
                        inner_iters=1000, ty=10, mode="accelerated"),
    "svm": dict(gamma=12.0, eta=0.01, outer_iters=1000, inner_iters=4000,
                ty=1,
                mode="single-loop", eta_y_g=0.1, eta_mu_g=0.002,
                eta_y_F=5e-4, eta_mu_F=0.12, f_update_tol=1e-5),
    "transport": dict(gamma=3.0, eta=1.6e-4, outer_iters=20000,
                      inner_iters=100, ty=1, mode="single-loop",
                      eta_y_g=2e-3, eta_mu_g=0.05, eta_y_F=2e-3,
                      eta_mu_F=0.15),
}


@dataclass
class RunConfig:
    experiment: str
    gamma: Optional[float] = None
    eta: Optional[float] = None
    outer_iters: Optional[int] = None
    inner_iters: Optional[int] = None
    ty: Optional[int] = None
    mode: Optional[str] = None
    seed: int = 0
    dataset_path: Optional[str] = None
    network_path: Optional[str] = None
    output_dir: str = "."
    repeats: int = 1
    # Inner stepsizes; None means use the problem defaults / stepsize rules.
    eta_y_g: Optional[float] = None
    eta_mu_g: Optional[float] = None
    eta_y_F: Optional[float] = None
    eta_mu_F: Optional[float] = None
    inner_tol: float = 1e-9
    outer_tol: float = 0.0
    f_update_tol: Optional[float] = None
    # Sweep-only grids (comma-separated in files/flags).
    gammas: Optional[List[float]] = None
    etas: Optional[List[float]] = None
    sweep_experiment: str = "toy"

    def resolved(self) -> "RunConfig":
        """Fill unset fields from the experiment's defaults."""
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"unknown experiment {self.experiment!r}; "
                f"valid: {', '.join(EXPERIMENTS)}")
        base = self.experiment
        if self.experiment == "sweep":
            base = self.sweep_experiment
        if self.experiment == "gradcheck":
            base = "pedagogical"
        defaults = _DEFAULTS.get(base, _DEFAULTS["toy"])
        out = dataclasses.replace(self)
        for key, val in defaults.items():
            if getattr(out, key) is None:
                setattr(out, key, val)
        if out.mode not in ("accelerated", "single-loop"):
            raise ConfigError(f"unknown mode {out.mode!r}")
        if out.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if out.experiment == "svm" and not out.dataset_path:
            raise ConfigError("svm experiment requires dataset_path")
        return out


_FLOAT_KEYS = {"gamma", "eta", "eta_y_g", "eta_mu_g", "eta_y_F", "eta_mu_F",
               "inner_tol", "outer_tol", "f_update_tol"}
_INT_KEYS = {"outer_iters", "inner_iters", "ty", "seed", "repeats"}
_LIST_KEYS = {"gammas", "etas"}


def load_run_config(path: Optional[str] = None,
                    overrides: Optional[Dict[str, object]] = None
                    ) -> RunConfig:
    """Build a RunConfig from an optional key=value file plus overrides
    (flag values win over file values).  Unknown keys are rejected."""
    valid = {f.name for f in fields(RunConfig)}
    values: Dict[str, object] = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ParseError(f"cannot read config file {path}: {exc}")
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' not in line:
                raise ConfigError(
                    f"config line {lineno}: expected key=value, got {line!r}")
            key, _, val = line.partition('=')
            key = key.strip()
            val = val.strip()
            if key not in valid:
                raise ConfigError(
                    f"unknown config key {key!r}; valid keys: "
                    f"{', '.join(sorted(valid))}")
            values[key] = val
    if overrides:
        for key, val in overrides.items():
            if val is None:
                continue
            if key not in valid:
                raise ConfigError(f"unknown config key {key!r}")
            values[key] = val
    if "experiment" not in values:
        raise ConfigError("experiment must be specified")

    kwargs: Dict[str, object] = {}
    for key, val in values.items():
        try:
            if key in _FLOAT_KEYS:
                kwargs[key] = float(val)
            elif key in _INT_KEYS:
                kwargs[key] = int(val)
            elif key in _LIST_KEYS:
                if isinstance(val, (list, tuple)):
                    kwargs[key] = [float(v) for v in val]
                else:
                    kwargs[key] = [float(v) for v in str(val).split(',') if v]
            else:
                kwargs[key] = str(val)
        except (TypeError, ValueError):
            raise ConfigError(f"bad value for config key {key!r}: {val!r}")
    return RunConfig(**kwargs)


# The svm init box starts above 1 so the lower level is feasible at x0 (slack
# caps below 1 cannot absorb the unit margins at w = 0).
_INIT_BOX = {"toy": (0.0, 3.0), "pedagogical": (0.0, 3.0),
             "svm": (1.0, 2.0), "transport": (0.0, 2.0)}


def _make_maxmin_configs(cfg: RunConfig, oracle) -> tuple:
    mode = (MaxMinMode.SINGLE_LOOP if cfg.mode == "single-loop"
            else MaxMinMode.ACCELERATED)
    ty = 1 if mode == MaxMinMode.SINGLE_LOOP else cfg.ty
    sg = default_stepsizes_g(oracle.lipschitz, oracle.alpha_g, mode,
                             defaults=oracle.default_steps_g)
    sF = default_stepsizes_F(oracle.lipschitz, oracle.alpha_g, cfg.gamma,
                             mode, defaults=oracle.default_steps_F)
    mm_g = MaxMinConfig(mode=mode, outer_iters=cfg.inner_iters,
                        inner_y_iters=ty,
                        eta_y=cfg.eta_y_g or sg.eta_y,
                        eta_mu=cfg.eta_mu_g or sg.eta_mu,
                        tol=cfg.inner_tol)
    mm_F = MaxMinConfig(mode=mode, outer_iters=cfg.inner_iters,
                        inner_y_iters=ty,
                        eta_y=cfg.eta_y_F or sF.eta_y,
                        eta_mu=cfg.eta_mu_F or sF.eta_mu,
                        tol=cfg.inner_tol)
    return mm_g, mm_F


def _build_oracle(cfg: RunConfig, repeat: int):
    exp = cfg.sweep_experiment if cfg.experiment == "sweep" else cfg.experiment
    if exp == "toy":
        return build_toy()
    if exp == "pedagogical":
        return build_pedagogical("quadratic")
    if exp == "svm":
        try:
            text = Path(cfg.dataset_path).read_text()
        except OSError as exc:
            raise ParseError(f"cannot read dataset {cfg.dataset_path}: {exc}")
        data = parse_libsvm(text, seed=cfg.seed + repeat)
        return build_svm(data, nonneg_c=True)
    if exp == "transport":
        if cfg.network_path:
            try:
                text = Path(cfg.network_path).read_text()
            except OSError as exc:
                raise ParseError(
                    f"cannot read network {cfg.network_path}: {exc}")
            return build_transport(parse_network_spec(text))
        return build_transport(three_node_spec())
    raise ConfigError(f"no oracle for experiment {exp!r}")


def _run_repeat(cfg: RunConfig, repeat: int, gamma: float, eta: float):
    oracle = _build_oracle(cfg, repeat)
    rcfg = dataclasses.replace(cfg, gamma=gamma, eta=eta)
    mm_g, mm_F = _make_maxmin_configs(rcfg, oracle)
    bcfg = BloccConfig(gamma=gamma, eta=eta, outer_iters=cfg.outer_iters,
                       maxmin_g=mm_g, maxmin_F=mm_F,
                       outer_tol=cfg.outer_tol,
                       f_update_tol=cfg.f_update_tol,
                       seed=cfg.seed + repeat)
    rng = np.random.default_rng(cfg.seed + repeat)
    exp = cfg.sweep_experiment if cfg.experiment == "sweep" else cfg.experiment
    lo, hi = _INIT_BOX[exp]
    x0 = oracle.project_X(rng.uniform(lo, hi, size=oracle.dim_x))
    return oracle, solve(oracle, bcfg, x0)


def _write_trace(path: Path, rows: List[dict]) -> None:
    cols = ["repeat", "iter", "f_at_yF", "f_at_yg", "g_gap", "gen_grad_norm",
            "max_violation", "wall_time_s"]
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=cols)
        writer.writeheader()
        writer.writerows(rows)


def _summary_stats(values: List[float]) -> Dict[str, float]:
    arr = np.asarray(values, dtype=float)
    return {"mean": float(np.mean(arr)),
            "std": float(np.std(arr)) if arr.size > 1 else 0.0}


def _final_violation(oracle, x, y) -> float:
    gc = oracle.eval_gc(x, y)
    viol = float(np.max(gc[:oracle.num_ineq], initial=0.0))
    if oracle.num_eq:
        viol = max(viol, float(np.max(np.abs(gc[oracle.num_ineq:]),
                                      initial=0.0)))
    return viol


def _svm_test_accuracy(cfg: RunConfig, repeat: int, y_g) -> float:
    text = Path(cfg.dataset_path).read_text()
    data = parse_libsvm(text, seed=cfg.seed + repeat)
    d = data.features.shape[1]
    w, b = y_g[:d], y_g[d]
    idx = data.test_idx
    pred = np.sign(data.features[idx] @ w + b)
    pred[pred == 0] = 1.0
    return float(np.mean(pred == data.labels[idx]))


def _run_experiment(cfg: RunConfig) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows: List[dict] = []
    finals: List[dict] = []
    for r in range(cfg.repeats):
        oracle, res = _run_repeat(cfg, r, cfg.gamma, cfg.eta)
        for t in res.trace:
            rows.append(dict(repeat=r, iter=t.iter,
                             f_at_yF=repr(t.f_at_yF), f_at_yg=repr(t.f_at_yg),
                             g_gap=repr(t.g_gap),
                             gen_grad_norm=repr(t.gen_grad_norm),
                             max_violation=repr(t.max_violation),
                             wall_time_s=f"{t.wall_time_s:.6f}"))
        last = res.trace[-1] if res.trace else None
        final = {
            "repeat": r,
            "x_final": res.x_final.tolist(),
            "f_at_yF": float(oracle.eval_f(res.x_final, res.pd_F.y)),
            "f_at_yg": float(oracle.eval_f(res.x_final, res.pd_g.y)),
            "avg_sq_gen_grad": res.avg_sq_gen_grad,
            "iterations": len(res.trace),
            "final_gen_grad_norm": last.gen_grad_norm if last else 0.0,
            "final_max_violation": _final_violation(oracle, res.x_final,
                                                    res.pd_g.y),
        }
        if cfg.experiment == "svm":
            final["test_accuracy"] = _svm_test_accuracy(cfg, r, res.pd_g.y)
        finals.append(final)
    _write_trace(out / "trace.csv", rows)
    summary = {
        "config": {k: v for k, v in dataclasses.asdict(cfg).items()
                   if v is not None},
        "repeats": finals,
        "stats": {key: _summary_stats([f[key] for f in finals])
                  for key in ("f_at_yF", "f_at_yg", "avg_sq_gen_grad",
                              "final_max_violation")
                  + (("test_accuracy",) if cfg.experiment == "svm" else ())},
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2,
                                                 sort_keys=True) + "\n")
    return 0


def _run_gradcheck(cfg: RunConfig) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    oracle = build_pedagogical()
    report = []
    mm = MaxMinConfig(mode=MaxMinMode.ACCELERATED, outer_iters=5000,
                      inner_y_iters=10, eta_y=0.25, eta_mu=0.5, tol=1e-12)
    for xv in (0.5, 1.0, 2.0):
        x = np.array([xv])
        pd = solve_maxmin_g(oracle, x, mm,
                            PrimalDualPair(np.zeros(1), np.zeros(1))).pd
        gv = float(estimate_grad_v(oracle, x, pd)[0])
        report.append({"x": xv, "grad_v": gv, "expected": 2.0 * xv,
                       "abs_err": abs(gv - 2.0 * xv)})
    ok = all(r["abs_err"] <= 1e-4 for r in report)
    (out / "gradcheck.json").write_text(
        json.dumps({"passed": ok, "checks": report}, indent=2) + "\n")
    if not ok:
        raise SolverAbort("gradient check failed; see gradcheck.json")
    return 0


def _run_sweep(cfg: RunConfig) -> int:
    if not cfg.gammas or not cfg.etas:
        raise ConfigError("sweep requires gammas and etas lists")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    cells = {}
    for gamma in cfg.gammas:
        for eta in cfg.etas:
            gaps = []
            for r in range(cfg.repeats):
                oracle, res = _run_repeat(cfg, r, gamma, eta)
                # Lower-level gap: distance from the penalized solution y_F
                # to the (tightly solved) lower-level optimum at x_final.
                gap = float(np.linalg.norm(res.pd_F.y - res.pd_g.y))
                gaps.append(gap)
                rows.append(dict(gamma=gamma, eta=eta, repeat=r, gap=gap))
            cells[f"gamma={gamma},eta={eta}"] = _summary_stats(gaps)
    with (out / "sweep.csv").open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["gamma", "eta", "repeat",
                                                "gap"])
        writer.writeheader()
        writer.writerows(rows)
    summary = {"config": {k: v for k, v in dataclasses.asdict(cfg).items()
                          if v is not None},
               "cells": cells}
    (out / "summary.json").write_text(json.dumps(summary, indent=2,
                                                 sort_keys=True) + "\n")
    return 0


def run(config: RunConfig) -> int:
    cfg = config.resolved()
    if cfg.experiment == "gradcheck":
        return _run_gradcheck(cfg)
    if cfg.experiment == "sweep":
        return _run_sweep(cfg)
    return _run_experiment(cfg)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blocc", description="Bilevel optimization experiments")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--gamma", type=float)
        p.add_argument("--eta", type=float)
        p.add_argument("--outer-iters", type=int, dest="outer_iters")
        p.add_argument("--inner-iters", type=int, dest="inner_iters")
        p.add_argument("--ty", type=int)
        p.add_argument("--mode", choices=["accelerated", "single-loop"])
        p.add_argument("--seed", type=int)
        p.add_argument("--repeats", type=int)
        p.add_argument("--dataset-path", dest="dataset_path")
        p.add_argument("--network-path", dest="network_path")
        p.add_argument("--output-dir", dest="output_dir")
        p.add_argument("--inner-tol", type=float, dest="inner_tol")
        p.add_argument("--outer-tol", type=float, dest="outer_tol")
        p.add_argument("--f-update-tol", type=float, dest="f_update_tol")
        if name == "sweep":
            p.add_argument("--gammas", help="comma-separated gamma grid")
            p.add_argument("--etas", help="comma-separated eta grid")
            p.add_argument("--experiment", dest="sweep_experiment",
                           choices=["toy", "pedagogical", "transport"])
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items()
                 if k != "config" and v is not None}
    try:
        cfg = load_run_config(args.config, overrides)
        return run(cfg)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 1
    except (ParseError, OSError) as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 2
    except SolverAbort as exc:
        print(f"error: solver: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
