"""
Command-line entry points for reproducible experiments.

Three subcommands wire the library together:

    pstarann simulate  --config cfg.json --out DIR [--seed S]
    pstarann fit       --config cfg.json --panel panel.csv --out DIR
    pstarann replicate --config cfg.json --out DIR --replicates R
                       [--threads K] [--fixed-design]

The config is one JSON document with sections:

    "lattice":    {"n1": 20, "n2": 20}            (or)
    "adjacency":  {"file": "edges.csv", "n": 3107}
    "model":      {"p": 1, "q": 2, "h": 1, "density": "normal",
                   "linear_term": true, "intercept": false}
    "covariates": [{"kind": "normal", "sd": 1.5}, ...]   (q entries)
    "theta":      {"phi0": .., "phi": [..], "beta": [..],
                   "lambda": [..], "gamma": [[..]]}      (simulate/replicate)
    "simulate":   {"T": 30, "burn_in": 200}
    "optim":      {"n_starts": 5, "tol": 1e-8, "max_iter": 500}

Exit codes: 0 success, 2 input error (bad config, malformed CSV, non-causal
parameters), 3 numerical non-convergence. Every command is deterministic
under a fixed --seed, including replicate summaries across thread counts.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .densities import density_from_config
from .diagnostics import heatmap_grid, residual_diagnostics
from .estimate import FitError, fit, sandwich_covariance
from .model import ModelSpec, ParameterVector, check_causal, param_names
from .simulate import generate_covariates, read_panel_csv, simulate, write_panel_csv
from .weights import build_queen_lattice, read_adjacency_csv

__all__ = ["main"]

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NONCONVERGENCE = 3


class ConfigError(ValueError):
    pass


# ----------------------------------------------------------------------
# Config handling
# ----------------------------------------------------------------------

def load_config(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: "
                          f"{exc.msg}") from exc


def _require(cfg, key, where="config"):
    if key not in cfg:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return cfg[key]


def build_weights(cfg, standardize=True, base_dir="."):
    has_lattice = "lattice" in cfg
    has_adj = "adjacency" in cfg
    if has_lattice == has_adj:
        raise ConfigError("config needs exactly one of 'lattice' or 'adjacency'")
    if has_lattice:
        lat = cfg["lattice"]
        return build_queen_lattice(_require(lat, "n1", "lattice"),
                                   _require(lat, "n2", "lattice"),
                                   standardize=standardize)
    adj = cfg["adjacency"]
    path = Path(base_dir) / _require(adj, "file", "adjacency")
    return read_adjacency_csv(path, _require(adj, "n", "adjacency"),
                              standardize=standardize)


def build_spec(cfg, W):
    model = _require(cfg, "model")
    try:
        density = density_from_config(_require(model, "density", "model"))
        spec = ModelSpec(
            W=W,
            p=int(_require(model, "p", "model")),
            q=int(_require(model, "q", "model")),
            h=int(_require(model, "h", "model")),
            density=density,
            linear_term=bool(model.get("linear_term", True)),
            include_intercept=bool(model.get("intercept", False)),
        )
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from exc
    cov = cfg.get("covariates")
    if cov is not None and len(cov) != spec.q:
        raise ConfigError(f"covariates: {len(cov)} column specs but model.q={spec.q}")
    return spec


def build_theta(cfg, spec):
    theta = ParameterVector.from_json_dict(_require(cfg, "theta"))
    try:
        theta.validate(spec)
    except ValueError as exc:
        raise ConfigError(f"theta: {exc}") from exc
    return theta


# ----------------------------------------------------------------------
# simulate
# ----------------------------------------------------------------------

def cmd_simulate(args):
    cfg = load_config(args.config)
    base = Path(args.config).parent
    W = build_weights(cfg, standardize=not args.no_standardize, base_dir=base)
    spec = build_spec(cfg, W)
    theta = build_theta(cfg, spec)
    sim = cfg.get("simulate", {})
    T = int(_require(sim, "T", "simulate"))
    burn_in = int(sim.get("burn_in", 200))
    columns = _require(cfg, "covariates") if spec.q else []

    chk = check_causal(spec, theta)
    if not chk.causal:
        raise ConfigError(
            f"theta is not causal: max root modulus {chk.max_root_modulus:.6f} >= 1"
        )

    data = simulate(spec, theta, seed=args.seed, burn_in=burn_in, T=T,
                    covariate_columns=columns)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_panel_csv(out / "panel.csv", data)
    theta.save_json(out / "theta.json")
    grids = []
    if W.lattice_dims is not None:
        for t in range(max(1, T - 2), T + 1):
            gpath = out / f"heatmap_t{t}.csv"
            heatmap_grid(data.Y[spec.p + t - 1], W.lattice_dims, path=gpath)
            grids.append(gpath.name)
    print(f"wrote {out / 'panel.csv'} ({(T + spec.p) * spec.n} data rows), theta.json"
          + (f", grids: {', '.join(grids)}" if grids else ""))
    return EXIT_OK


# ----------------------------------------------------------------------
# fit
# ----------------------------------------------------------------------

def _optim_options(cfg):
    opt = cfg.get("optim", {})
    return {
        "n_starts": int(opt.get("n_starts", 5)),
        "tol": float(opt.get("tol", 1e-8)),
        "max_iter": int(opt.get("max_iter", 500)),
    }


def cmd_fit(args):
    cfg = load_config(args.config)
    base = Path(args.config).parent
    W = build_weights(cfg, standardize=not args.no_standardize, base_dir=base)
    spec = build_spec(cfg, W)
    model = _require(cfg, "model")
    data = read_panel_csv(args.panel, int(_require(model, "p", "model")),
                          int(_require(model, "q", "model")))
    if data.n != spec.n:
        raise ConfigError(f"panel has n={data.n} locations, weights have n={spec.n}")

    opts = _optim_options(cfg)
    result = fit(spec, data, seed=args.seed, **opts)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result.save_json(out / "fit.json")
    (out / "fit.txt").write_text(result.format_table() + "\n")

    diag = residual_diagnostics(spec, result.theta, data)
    with open(out / "diagnostics.json", "w") as fh:
        json.dump(
            {
                "moran_per_t": diag["moran_per_t"],
                "qq": diag["qq"].tolist(),
            },
            fh,
        )
    print(result.format_table())
    if not result.converged:
        print("fit did not converge; diagnostics written", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    return EXIT_OK


# ----------------------------------------------------------------------
# replicate
# ----------------------------------------------------------------------

def _replicate_one(payload):
    """One simulate + fit cycle; runs inside worker processes."""
    (spec, theta, T, burn_in, columns, X_fixed, base_seed, r, opts) = payload
    sim_seed = np.random.SeedSequence(base_seed, spawn_key=(r,))
    try:
        data = simulate(spec, theta, X=X_fixed, seed=sim_seed, burn_in=burn_in,
                        T=T, covariate_columns=columns)
        res = fit(spec, data, seed=base_seed + r, covariance=False,
                  rank_check=False, **opts)
        se = None
        try:
            se = sandwich_covariance(spec, res.theta, data)["se"].tolist()
        except Exception:
            pass
        return {
            "replicate": r,
            "ok": True,
            "converged": res.converged,
            "estimate": res.theta.to_array().tolist(),
            "loglik": res.loglik,
            "asymptotic_se": se,
        }
    except Exception as exc:  # recorded per replicate, summary over successes
        return {"replicate": r, "ok": False, "error": f"{type(exc).__name__}: {exc}"}


def cmd_replicate(args):
    cfg = load_config(args.config)
    base = Path(args.config).parent
    W = build_weights(cfg, standardize=not args.no_standardize, base_dir=base)
    spec = build_spec(cfg, W)
    theta = build_theta(cfg, spec)
    sim = cfg.get("simulate", {})
    T = int(_require(sim, "T", "simulate"))
    burn_in = int(sim.get("burn_in", 200))
    columns = _require(cfg, "covariates") if spec.q else []
    opts = _optim_options(cfg)

    R = args.replicates if args.replicates is not None else int(
        cfg.get("replicate", {}).get("R", 0))
    if R < 2:
        raise ConfigError("replicate count R must be >= 2 (flag --replicates or "
                          "config section 'replicate')")

    chk = check_causal(spec, theta)
    if not chk.causal:
        raise ConfigError(
            f"theta is not causal: max root modulus {chk.max_root_modulus:.6f} >= 1"
        )

    X_fixed = None
    if args.fixed_design:
        steps = burn_in + spec.p + T
        X_fixed = generate_covariates(columns, spec.n, steps,
                                      np.random.SeedSequence(args.seed, spawn_key=(10**6,)))

    payloads = [(spec, theta, T, burn_in, columns, X_fixed, args.seed, r, opts)
                for r in range(R)]
    if args.threads > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            records = list(pool.map(_replicate_one, payloads))
    else:
        records = [_replicate_one(p) for p in payloads]
    records.sort(key=lambda d: d["replicate"])  # deterministic reduction order

    names = param_names(spec)
    truth = theta.to_array()
    good = [d for d in records if d["ok"]]
    est = np.array([d["estimate"] for d in good]) if good else np.zeros((0, spec.dim))
    ses = np.array([d["asymptotic_se"] for d in good if d["asymptotic_se"] is not None])

    summary = {
        "R": R,
        "n_success": len(good),
        "n_failed": R - len(good),
        "names": names,
        "true": truth.tolist(),
        "mean": est.mean(axis=0).tolist() if len(good) else None,
        "empirical_sd": est.std(axis=0, ddof=1).tolist() if len(good) >= 2 else None,
        "mean_asymptotic_se": ses.mean(axis=0).tolist() if ses.size else None,
        "records": records,
    }

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)

    if good:
        lines = [f"{'parameter':<10} {'true':>9} {'mean':>9} {'emp. SD':>9} "
                 f"{'asy. SD':>9} {'count':>6}"]
        for k, name in enumerate(names):
            asy = f"{ses.mean(axis=0)[k]:>9.4f}" if ses.size else "      n/a"
            sd = f"{est[:, k].std(ddof=1):>9.4f}" if len(good) >= 2 else "      n/a"
            lines.append(
                f"{name:<10} {truth[k]:>9.4f} {est[:, k].mean():>9.4f} "
                f"{sd} {asy} {len(good):>6d}"
            )
    else:
        lines = [f"all {R} replicates failed; see summary.json for errors"]
    table = "\n".join(lines)
    (out / "summary.txt").write_text(table + "\n")
    print(table)
    if not good:
        print("all replicates failed", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    return EXIT_OK


# ----------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="pstarann",
        description="Simulate, fit and replicate space-time autoregressive "
                    "panels with a sigmoid network component.",
    )
    parser.add_argument("--version", action="version", version=f"pstarann {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--no-standardize", action="store_true",
                       help="keep raw symmetric weights (no row standardization)")

    p_sim = sub.add_parser("simulate", help="generate a panel CSV plus truth JSON")
    common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_fit = sub.add_parser("fit", help="fit a model to a panel CSV")
    common(p_fit)
    p_fit.add_argument("--panel", required=True, help="panel CSV (schema t,s,y,x1..xq)")
    p_fit.set_defaults(func=cmd_fit)

    p_rep = sub.add_parser("replicate", help="parallel simulate+fit study")
    common(p_rep)
    p_rep.add_argument("--replicates", type=int, default=None)
    p_rep.add_argument("--threads", type=int, default=1)
    p_rep.add_argument("--fixed-design", action="store_true",
                       help="hold one covariate draw fixed across replicates")
    p_rep.set_defaults(func=cmd_replicate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
