"""Command-line surface: simulate / fit / evaluate / audit / gmsm / replay.

Every run resolves its flags (with an optional JSON config overlay; flags win)
into one effective-config dict, executes from that dict alone, and echoes it
to ``effective_config.json`` in the output directory.  Replaying that file
reproduces every CSV/JSON output byte for byte: all randomness flows from the
single recorded seed through named substreams, JSON is written with sorted
keys, and CSV floats use ``repr`` round-tripping.

Exit codes: 0 success, 2 usage/validation, 3 data error, 4 internal.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import analysis, sensitivity, simulation
from .data import ColumnSchema, load_csv, save_csv, validate_overlap
from .errors import CensorBoundsError, ConfigError, DataError
from .models import LearnerSpec, load_model, save_model
from .nuisance import _derived_seed, assign_folds, fit_nuisances

MODEL_KINDS = {"rf": "random_forest", "knn": "knn", "ridge": "ridge",
               "constant": "constant"}
THREADS_ENV = "CENSORBOUNDS_THREADS"


# ---------------------------------------------------------------------------
# deterministic writers
# ---------------------------------------------------------------------------

def _json_dump(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _write_csv(path, header, rows) -> None:
    # csv.writer for the quoting: gmsm cell labels contain commas
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


# ---------------------------------------------------------------------------
# flag parsing / coercion
# ---------------------------------------------------------------------------

def _num(tok):
    f = float(tok)
    return int(f) if f.is_integer() else f


def _num_list(value) -> list:
    if value is None:
        return []
    if isinstance(value, str):
        return [_num(tok) for tok in value.split(",") if tok.strip()]
    return [_num(v) for v in value]


def _str_list(value) -> list:
    if value is None:
        return []
    if isinstance(value, str):
        return [tok.strip() for tok in value.split(",") if tok.strip()]
    return [str(v) for v in value]


def _resolve_threads(value) -> int:
    if value is None:
        value = os.environ.get(THREADS_ENV, "1")
    threads = int(value)
    if threads < 1:
        raise ConfigError("--threads must be at least 1, got %d" % threads)
    return threads


def _parse_propensity(value, arms):
    """'estimate' or 'known:p' with p the first arm's probability."""
    if value is None or value == "estimate":
        return "estimate"
    if isinstance(value, str) and value.startswith("known:"):
        p = float(value.split(":", 1)[1])
        if not 0.0 < p < 1.0:
            raise ConfigError("known propensity must lie in (0, 1), got %g" % p)
        if len(arms) != 2:
            raise ConfigError("known:p needs exactly two arms, got %r" % (arms,))
        return {arms[0]: p, arms[1]: 1.0 - p}
    raise ConfigError("--propensity must be 'estimate' or 'known:p', got %r" % (value,))


def _covariate_index(token, d):
    names = d.covariate_names or tuple("x%d" % (j + 1) for j in range(d.p))
    if token in names:
        return names.index(token)
    try:
        j = int(token)
    except ValueError:
        raise ConfigError("unknown covariate %r (have %s)" % (token, names)) from None
    if not 0 <= j < d.p:
        raise ConfigError("covariate index %d out of range [0, %d)" % (j, d.p))
    return j


def _parse_cells(value, d):
    """'cov:K' for K equal-width bins, or 'cov:e1,e2,...' for explicit edges."""
    if not isinstance(value, str) or ":" not in value:
        raise ConfigError("--cells must look like 'covariate:K' or "
                          "'covariate:e1,e2,...', got %r" % (value,))
    cov_tok, spec_tok = value.split(":", 1)
    j = _covariate_index(cov_tok.strip(), d)
    parts = [tok for tok in spec_tok.split(",") if tok.strip()]
    if len(parts) == 1:
        return j, None, int(parts[0])
    return j, [float(tok) for tok in parts], None


def _schema(cfg) -> ColumnSchema:
    cov = cfg.get("covariates")
    return ColumnSchema(
        treatment=cfg["treatment_col"],
        time=cfg["time_col"],
        indicator=cfg["indicator_col"],
        indicator_convention=cfg["indicator_convention"],
        covariates=tuple(cov) if cov else None,
    )


def _resolve_tmax(cfg):
    """Explicit --tmax, else the sibling meta.json of the data file, else None."""
    if cfg.get("tmax") is not None:
        return float(cfg["tmax"])
    meta_path = Path(cfg["data"]).parent / "meta.json"
    if meta_path.exists():
        with open(meta_path, encoding="utf-8") as fh:
            meta = json.load(fh)
        if "t_max" in meta:
            warnings.warn("t_max %g resolved from %s" % (meta["t_max"], meta_path),
                          stacklevel=2)
            return float(meta["t_max"])
    return None


def _load_dataset(cfg):
    d = load_csv(cfg["data"], _schema(cfg), t_max=_resolve_tmax(cfg))
    report = validate_overlap(d)
    for msg in report.warnings:
        print("warning: %s" % msg, file=sys.stderr)
    return d


def _default_arms(cfg, d):
    if cfg.get("arms"):
        arms = tuple(_num_list(cfg["arms"]))
    else:
        arms = tuple(sorted(d.arms, reverse=True))
    if len(arms) != 2:
        raise ConfigError("need exactly two arms (a1,a2), got %r" % (arms,))
    return arms


def _resolve_gamma(cfg, required: bool):
    if cfg.get("gamma") is not None and cfg.get("gamma_table"):
        raise ConfigError("--gamma and --gamma-table are mutually exclusive")
    if cfg.get("gamma") is not None:
        return float(cfg["gamma"])
    if cfg.get("gamma_table"):
        return sensitivity.load_gamma_table(cfg["gamma_table"])
    if required:
        raise ConfigError("the domain case needs --gamma or --gamma-table")
    return None


def _learner_spec(cfg) -> LearnerSpec:
    name = cfg.get("model", "rf")
    if name not in MODEL_KINDS:
        raise ConfigError("--model must be one of %s, got %r"
                          % (tuple(MODEL_KINDS), name))
    return LearnerSpec(kind=MODEL_KINDS[name])


def _second_stage_spec(cfg):
    """Stage-2 override: None for the default forest (n-adaptive leaf size)."""
    return None if cfg.get("model", "rf") == "rf" else _learner_spec(cfg)


def _outdir(cfg) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_effective(cfg, out: Path) -> None:
    _json_dump(cfg, out / "effective_config.json")


# ---------------------------------------------------------------------------
# runners (operate on effective-config dicts only)
# ---------------------------------------------------------------------------

def run_simulate(cfg) -> int:
    s = simulation.Scenario(family=cfg["scenario"], design=cfg["design"],
                            xi_target=float(cfg["xi"]), n=int(cfg["n"]),
                            seed=int(cfg["seed"]))
    d, latent = simulation.generate(s)
    out = _outdir(cfg)
    save_csv(d, out / "data.csv")
    x = d.x[:, 0]
    lo0, up0 = simulation.oracle_bounds(s, x, case="conservative", arm=0)
    lo1, up1 = simulation.oracle_bounds(s, x, case="conservative", arm=1)
    locate, upcate = simulation.oracle_bounds(s, x, case="conservative",
                                              arm_pair=(1, 0))
    _write_csv(
        out / "latent.csv",
        ["x1", "a", "t_true", "c_true", "p_censor", "lam",
         "oracle_capo0_lower", "oracle_capo0_upper",
         "oracle_capo1_lower", "oracle_capo1_upper",
         "oracle_cate_lower", "oracle_cate_upper"],
        zip(x, d.a, latent.t_true, latent.c_true, latent.p_censor, latent.lam,
            lo0, up0, lo1, up1, locate, upcate),
    )
    _json_dump({"family": s.family, "design": s.design, "xi_target": s.xi_target,
                "n": s.n, "seed": s.seed, "noise_sd": s.noise_sd,
                "t_max": s.t_max, "clip_rate": latent.clip_rate},
               out / "meta.json")
    _write_effective(cfg, out)
    print("simulate: wrote %d subjects to %s" % (d.n, out))
    return 0


def run_fit(cfg) -> int:
    _resolve_threads(cfg.get("threads"))
    d = _load_dataset(cfg)
    arms = _default_arms(cfg, d)
    case = cfg["case"]
    gamma = _resolve_gamma(cfg, required=(case == "domain"))
    spec = _learner_spec(cfg)
    model = analysis.fit_cate_pipeline(
        d, seed=int(cfg["seed"]), case=case, learner=cfg["learner"], gamma=gamma,
        propensity=_parse_propensity(cfg.get("propensity"), arms),
        folds=int(cfg["folds"]), arm_pair=arms, nuisance_spec=spec,
        second_stage=_second_stage_spec(cfg))
    lo, up, crossed = model.predict(d.x)
    out = _outdir(cfg)
    names = list(d.covariate_names)
    _write_csv(out / "bounds.csv", names + ["a", "t_obs", "censored",
                                            "lower", "upper", "crossed"],
               (list(d.x[i]) + [d.a[i], d.t_tilde[i], int(d.delta[i]),
                                lo[i], up[i], crossed[i]]
                for i in range(d.n)))
    save_model(model, out / "model.bin")
    _json_dump({"n": d.n, "arms": list(arms), "case": case,
                "learner": cfg["learner"], "t_max": d.t_max,
                "crossing_count": int(np.sum(crossed))},
               out / "fit_meta.json")
    _write_effective(cfg, out)
    print("fit: wrote bounds for %d subjects to %s" % (d.n, out))
    return 0


def run_evaluate(cfg) -> int:
    _resolve_threads(cfg.get("threads"))
    out = _outdir(cfg)
    xi_values = _num_list(cfg["xi"])
    if cfg.get("model"):
        if len(xi_values) != 1:
            raise ConfigError("evaluating a saved model needs exactly one --xi")
        path = Path(cfg["model"])
        if path.is_dir():
            path = path / "model.bin"
        model = load_model(path)
        s = simulation.Scenario(family=cfg["family"], design=cfg["design"],
                                xi_target=float(xi_values[0]), n=2, seed=0)
        r = analysis.rmse_vs_oracle(
            model, s, grid=analysis.evaluation_grid(int(cfg["grid"])))
        report = {"mode": "model", "model": str(cfg["model"]),
                  "family": s.family, "design": s.design, "xi": s.xi_target,
                  "case": model.case, "grid_size": int(cfg["grid"]),
                  "rmse_lower": r.lower, "rmse_upper": r.upper,
                  "rmse_joint": r.joint}
    else:
        report = analysis.evaluate_learners(
            families=(cfg["family"],), xi_values=tuple(xi_values),
            cases=tuple(_str_list(cfg["cases"])),
            learners=tuple(_str_list(cfg["learners"])),
            n=int(cfg["n"]), seeds=tuple(int(s) for s in _num_list(cfg["seeds"])),
            design=cfg["design"], gamma=float(cfg["gamma"]),
            grid_size=int(cfg["grid"]))
        report["mode"] = "benchmark"
    _json_dump(report, out / "eval_report.json")
    _write_effective(cfg, out)
    print("evaluate: wrote eval_report.json to %s" % out)
    return 0


def run_audit(cfg) -> int:
    _resolve_threads(cfg.get("threads"))
    d = _load_dataset(cfg)
    arms = _default_arms(cfg, d)
    case = cfg["case"]
    gamma = _resolve_gamma(cfg, required=(case == "domain"))
    spec = _learner_spec(cfg)
    seed = int(cfg["seed"])
    model = analysis.fit_cate_pipeline(
        d, seed=seed, case=case, learner=cfg["learner"], gamma=gamma,
        propensity=_parse_propensity(cfg.get("propensity"), arms),
        folds=int(cfg["folds"]), arm_pair=arms, nuisance_spec=spec,
        second_stage=_second_stage_spec(cfg))
    lo, up, crossed = model.predict(d.x)
    out = _outdir(cfg)
    names = list(d.covariate_names)
    _write_csv(out / "bounds.csv", names + ["a", "lower", "upper", "crossed"],
               (list(d.x[i]) + [d.a[i], lo[i], up[i], crossed[i]]
                for i in range(d.n)))

    frac_rows = [["overall", "", d.n, analysis.fraction_lb_positive(lo)]]
    for row in analysis.fraction_table(d, lo):
        frac_rows.append([row["covariate"], row["level"], row["n"],
                          row["percent_positive"]])
    _write_csv(out / "fractions.csv",
               ["covariate", "level", "n", "percent_lb_positive"], frac_rows)

    _write_csv(out / "pairs.csv",
               ["covariate_a", "covariate_b", "n", "percent_lb_positive"],
               ([r["covariate_a"], r["covariate_b"], r["n"], r["percent_positive"]]
                for r in analysis.pair_table(d, lo)))

    tree = analysis.subgroup_tree(lo, d)
    _json_dump(tree.to_dict(), out / "subgroups.json")

    best = tree.best_leaf()
    B = int(cfg["bootstrap"])
    boot_rows = []
    for label, idx in (("all", np.arange(d.n)), ("best_leaf", np.array(best.indices))):
        mask = np.zeros(d.n, dtype=bool)
        mask[idx] = True
        mean, sd = analysis.bootstrap_subgroup(lo, d, mask, B=B, seed=seed)
        boot_rows.append([label, int(idx.size), mean, sd])
    _write_csv(out / "bootstrap.csv",
               ["selection", "n", "mean_lower_bound", "bootstrap_sd"], boot_rows)

    grid = np.linspace(0.0, d.t_max, int(cfg["grid"]))
    curves = analysis.bound_survival_curves(lo, up, grid)
    _write_csv(out / "curves.csv", ["t", "p_lower", "p_mid", "p_upper"],
               ([r["t"], r["p_lower"], r["p_mid"], r["p_upper"]]
                for r in curves.rows()))
    from .svg import Series, render_line_chart
    render_line_chart(
        [Series(curves.t, curves.lower, "lower bound"),
         Series(curves.t, curves.upper, "upper bound"),
         Series(curves.t, curves.mid, "midpoint", dashed=True)],
        title="exceedance curves of the estimated effect bounds",
        xlabel="months", ylabel="fraction above t",
        path=out / "curves.svg")
    _write_effective(cfg, out)
    print("audit: wrote 6 report artifacts to %s" % out)
    return 0


def run_gmsm(cfg) -> int:
    _resolve_threads(cfg.get("threads"))
    d = _load_dataset(cfg)
    arms = _default_arms(cfg, d)
    case = cfg["case"]
    gamma = _resolve_gamma(cfg, required=(case == "domain"))
    gammas = [float(g) for g in _num_list(cfg["gamma_confounding"])]
    if not gammas:
        raise ConfigError("--gamma-confounding needs at least one value")
    specs = [sensitivity.GmsmSpec(g) for g in gammas]  # validates each >= 1
    seed = int(cfg["seed"])
    plan = assign_folds(d, int(cfg["folds"]), seed=_derived_seed(seed, 21))
    ns = fit_nuisances(d, plan, _learner_spec(cfg).with_seed(_derived_seed(seed, 22)),
                       propensity=_parse_propensity(cfg.get("propensity"), arms))
    j, edges, n_bins = _parse_cells(cfg["cells"], d)
    cells = sensitivity.covariate_cells(d, j, edges=edges, n_bins=n_bins)
    header = ["cell", "arm", "n", "pi_obs", "plugin_lower", "plugin_upper"]
    for g in gammas:
        header += ["lower_G%g" % g, "upper_G%g" % g]
    rows = []
    for label, mask in cells:
        for arm in arms:
            n_arm = int(np.sum(mask & (d.a == arm)))
            row = [label, arm, n_arm]
            try:
                results = [sensitivity.gmsm_bound_adjustment(
                    d, mask, arm, spec, ns, case=case, gamma=gamma) for spec in specs]
            except CensorBoundsError as exc:
                print("warning: cell %s arm %s skipped: %s" % (label, arm, exc),
                      file=sys.stderr)
                row += [None] * (3 + 2 * len(gammas))
                rows.append(row)
                continue
            row += [results[0].pi_obs, results[0].input.lower, results[0].input.upper]
            for res in results:
                row += [res.adjusted.lower, res.adjusted.upper]
            rows.append(row)
    out = _outdir(cfg)
    _write_csv(out / "gmsm.csv", header, rows)
    _write_effective(cfg, out)
    print("gmsm: wrote %d cell rows to %s" % (len(rows), out))
    return 0


RUNNERS = {"simulate": run_simulate, "fit": run_fit, "evaluate": run_evaluate,
           "audit": run_audit, "gmsm": run_gmsm}


def run_replay(config_path, out_override=None) -> int:
    with open(config_path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    sub = cfg.get("subcommand")
    if sub not in RUNNERS:
        raise ConfigError("config %s does not name a replayable subcommand"
                          % (config_path,))
    if out_override:
        cfg = dict(cfg)
        cfg["out"] = out_override
    return RUNNERS[sub](cfg)


# ---------------------------------------------------------------------------
# argparse plumbing
# ---------------------------------------------------------------------------

_SCHEMA_DEFAULTS = {
    "treatment_col": "a", "time_col": "t_obs", "indicator_col": "censored",
    "indicator_convention": "censored", "covariates": None,
}

_DEFAULTS = {
    "simulate": {"scenario": "sin", "xi": None, "n": 2000, "design": "rct",
                 "seed": 0, "out": "."},
    "fit": {"data": None, "learner": "survb", "case": "conservative",
            "gamma": None, "gamma_table": None, "tmax": None, "folds": 3,
            "arms": None, "propensity": "estimate", "model": "rf", "seed": 0,
            "threads": None, "out": ".", **_SCHEMA_DEFAULTS},
    "evaluate": {"model": None, "family": "sin", "design": "rct",
                 "xi": "0.2,0.4,0.6", "cases": "domain,conservative",
                 "learners": "survb,plugin", "n": 2000, "seeds": "1,2,3,4,5",
                 "gamma": 3.0, "grid": 200, "seed": 0, "threads": None, "out": "."},
    "audit": {"data": None, "learner": "survb", "case": "conservative",
              "gamma": None, "gamma_table": None, "tmax": None, "folds": 3,
              "arms": None, "propensity": "estimate", "model": "rf", "seed": 0,
              "bootstrap": 2000, "grid": 200, "threads": None, "out": ".",
              **_SCHEMA_DEFAULTS},
    "gmsm": {"data": None, "case": "conservative", "gamma": None,
             "gamma_table": None, "tmax": None, "folds": 3, "arms": None,
             "propensity": "estimate", "model": "rf", "seed": 0,
             "cells": None, "gamma_confounding": None, "threads": None,
             "out": ".", **_SCHEMA_DEFAULTS},
}

_REQUIRED = {
    "simulate": ("xi",),
    "fit": ("data",),
    "evaluate": (),
    "audit": ("data",),
    "gmsm": ("data", "cells", "gamma_confounding"),
}


def _add_schema_flags(sp):
    sp.add_argument("--treatment-col", dest="treatment_col")
    sp.add_argument("--time-col", dest="time_col")
    sp.add_argument("--indicator-col", dest="indicator_col")
    sp.add_argument("--indicator-convention", dest="indicator_convention",
                    choices=("censored", "event"))
    sp.add_argument("--covariates", help="comma-separated covariate column names")


def _add_fit_like_flags(sp):
    sp.add_argument("--data")
    sp.add_argument("--case", choices=("domain", "conservative"))
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--gamma-table", dest="gamma_table")
    sp.add_argument("--tmax", type=float)
    sp.add_argument("--folds", type=int)
    sp.add_argument("--arms", help="a1,a2 (effect is a1 minus a2)")
    sp.add_argument("--propensity", help="'estimate' or 'known:p'")
    sp.add_argument("--model", choices=tuple(MODEL_KINDS))
    _add_schema_flags(sp)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="censorbounds",
        description="Partial-identification bounds on treatment effects from "
                    "right-censored survival data.")
    sub = p.add_subparsers(dest="subcommand", required=True)

    sp = sub.add_parser("simulate", help="draw a synthetic benchmark dataset")
    sp.add_argument("--scenario", help="exp | sin | logsin")
    sp.add_argument("--xi", type=float, help="target censoring strength in (0,1)")
    sp.add_argument("--n", type=int)
    sp.add_argument("--design", choices=("rct", "obs"))

    sp = sub.add_parser("fit", help="fit CATE bound models to a CSV")
    sp.add_argument("--learner", choices=("survb", "plugin"))
    _add_fit_like_flags(sp)

    sp = sub.add_parser("evaluate",
                        help="oracle-RMSE benchmark, or score a saved model")
    sp.add_argument("--model", help="directory (or file) of a saved fit")
    sp.add_argument("--family")
    sp.add_argument("--design", choices=("rct", "obs"))
    sp.add_argument("--xi", help="comma-separated censoring strengths")
    sp.add_argument("--cases")
    sp.add_argument("--learners")
    sp.add_argument("--n", type=int)
    sp.add_argument("--seeds", help="comma-separated seeds")
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--grid", type=int)

    sp = sub.add_parser("audit", help="full report pipeline on a user CSV")
    sp.add_argument("--learner", choices=("survb", "plugin"))
    sp.add_argument("--bootstrap", type=int, help="bootstrap replicates")
    sp.add_argument("--grid", type=int, help="curve grid size")
    sp.add_argument("--report", dest="out", help="alias for --out")
    _add_fit_like_flags(sp)

    sp = sub.add_parser("gmsm",
                        help="hidden-confounding widening of cell-level bounds")
    sp.add_argument("--gamma-confounding", dest="gamma_confounding",
                    help="comma-separated Gamma values, each >= 1")
    sp.add_argument("--cells", help="'covariate:K' bins or 'covariate:e1,e2,...'")
    _add_fit_like_flags(sp)

    sp = sub.add_parser("replay", help="re-run a recorded effective_config.json")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", help="override the recorded output directory")

    for name, sp in sub.choices.items():
        if name == "replay":
            continue
        sp.add_argument("--config", help="JSON config overlay (flags win)")
        sp.add_argument("--seed", type=int)
        if "--out" not in sp._option_string_actions:
            sp.add_argument("--out")
        if "--threads" not in sp._option_string_actions and name != "simulate":
            sp.add_argument("--threads", type=int)
    return p


def _effective(args, name: str) -> dict:
    cfg = dict(_DEFAULTS[name])
    overlay = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            overlay = json.load(fh)
        unknown = set(overlay) - set(cfg) - {"subcommand"}
        if unknown:
            raise ConfigError("config keys not understood by %s: %s"
                              % (name, sorted(unknown)))
    for key in cfg:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
        elif key in overlay and overlay[key] is not None:
            cfg[key] = overlay[key]
    missing = [k for k in _REQUIRED[name] if cfg[k] is None]
    if missing:
        raise ConfigError("%s is missing required option(s): %s"
                          % (name, ", ".join("--" + k.replace("_", "-")
                                             for k in missing)))
    if isinstance(cfg.get("covariates"), str):
        cfg["covariates"] = _str_list(cfg["covariates"])
    cfg["subcommand"] = name
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.subcommand == "replay":
            return run_replay(args.config, args.out)
        cfg = _effective(args, args.subcommand)
        return RUNNERS[args.subcommand](cfg)
    except ConfigError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except DataError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3
    except CensorBoundsError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3
    except ValueError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - safety net
        print("internal error: %r" % (exc,), file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
