"""Command-line interface.

Every run writes its outputs plus ``summary.json`` (seed and fully resolved
configuration) into ``--out``. Failures print one JSON line to stderr and
exit with status 1.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .centering import RegressionTheta
from .io import IngestConfig, ingest, load_config
from .posterior import kalbfleisch_prentice, kaplan_meier, posterior_update, predictive_distribution
from .process import SbsParameters, TimeGrid, sample_increments
from .regression import (
    RegressionConfig,
    predictive_for_profile,
    prior_concentration_curve,
    prior_theta_sampler,
    rwmh_sample,
)
from .simulation import SimulationConfig, run_simulation_study, write_distance_table
from .urn import UrnSystem, write_trace

__all__ = ["main", "build_parser"]

_DATA_KEYS = set(IngestConfig.__dataclass_fields__)

DEFAULTS = {
    "fit-nonparametric": {"data": {}, "alpha": 1.0, "n_samples": 1000},
    "fit-regression": {
        "data": {},
        "m": 1.0,
        "model": "weibull",
        "parametric": False,
        "n_iter": 26000,
        "burn_in": 1000,
        "thin": 25,
        "proposal_scale": None,
        "fixed_shape": None,
        "prior": {},
        "draws_per_theta": 1,
    },
    "simulate": {
        "n_replicates": 50,
        "sample_sizes": [100, 1000],
        "horizon": 70,
        "bin_width": 100.0,
        "censor_bin": 70,
        "m_values": [1.0, 1e3, 1e6],
        "include_parametric": True,
        "n_iter": 2200,
        "burn_in": 200,
        "thin": 10,
        "model": "weibull",
        "theta": None,
        "n_jobs": 1,
    },
    "urn-demo": {"horizon": 5, "k": 2, "alpha": 1.0, "m": 1.0, "n_blocks": 10, "close_horizon": True},
    "concentration-curve": {
        "horizon": 70,
        "bin_width": 100.0,
        "k": 2,
        "profile": [1.0],
        "m_values": [1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6],
        "n_draws": 40000,
        "model": "weibull",
        "prior": {},
    },
}


class CliError(Exception):
    """Invalid command-line input."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sbstacy", description="Bayesian nonparametric competing-risks analyses.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, data=False):
        p.add_argument("--config", help="JSON or YAML settings file")
        p.add_argument("--seed", type=int, help="random seed (default 0)")
        p.add_argument("--out", required=True, help="output directory")
        if data:
            p.add_argument("--data", required=True, help="delimited dataset with time,status columns")
            p.add_argument("--bins", type=float, help="uniform bin width for discretising times")
        return p

    p = common(sub.add_parser("fit-nonparametric", help="classical estimators and SBS posterior"), True)
    p.add_argument("--alpha", type=float, help="constant prior parameter alpha_{t,c}")

    p = common(sub.add_parser("fit-regression", help="SBS regression by RWMH"), True)
    p.add_argument("--m", type=float, help="reinforcement mass")
    p.add_argument("--model", choices=["weibull", "lognormal"], help="centring family")
    p.add_argument("--parametric", action="store_true", default=None, help="fit the centring model alone")

    p = common(sub.add_parser("simulate", help="KS-distance simulation study"))
    p.add_argument("--model", choices=["weibull", "lognormal"])
    p.add_argument("--bins", type=int, help="number of bins in the simulation grid")

    p = common(sub.add_parser("urn-demo", help="simulate blocks from the reinforced urn"))
    p.add_argument("--m", type=float, help="reinforcement mass")
    p.add_argument("--bins", type=int, help="number of bins (horizon)")

    p = common(sub.add_parser("concentration-curve", help="prior SD of dF - dF0 against m"))
    p.add_argument("--model", choices=["weibull", "lognormal"])
    p.add_argument("--bins", type=int, help="number of bins")
    return parser


def _resolve(command: str, args) -> dict:
    cfg = json.loads(json.dumps(DEFAULTS[command]))
    if getattr(args, "config", None):
        user = load_config(args.config)
        unknown = set(user) - set(cfg) - {"seed"}
        if unknown:
            raise CliError(f"unknown settings for {command}: {sorted(unknown)}")
        cfg.update(user)
    cfg.setdefault("seed", 0)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if "data" in cfg:
        data = dict(cfg["data"])
        bad = set(data) - _DATA_KEYS
        if bad:
            raise CliError(f"unknown data settings: {sorted(bad)}")
        if getattr(args, "bins", None) is not None:
            data["bin_width"] = args.bins
        data.setdefault("bin_width", 1.0)
        cfg["data"] = data
        cfg["data_path"] = args.data
    for flag in ("m", "model", "alpha", "parametric"):
        val = getattr(args, flag, None)
        if val is not None:
            cfg[flag] = val
    if command in ("simulate", "urn-demo", "concentration-curve") and args.bins is not None:
        cfg["horizon"] = args.bins
        if command == "simulate":
            cfg["censor_bin"] = min(cfg["censor_bin"], args.bins)
    return cfg


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else str(f)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _write_summary(out: Path, command: str, cfg: dict, results: dict) -> None:
    doc = {"command": command, "version": __version__, "seed": cfg["seed"], "config": cfg, "results": results}
    text = json.dumps(_jsonable(doc), indent=2, sort_keys=True)
    (out / "summary.json").write_text(text + "\n")


def _cum_rows(grid: TimeGrid, *tables):
    for t in range(grid.horizon):
        yield [t + 1, grid.edges[t + 1]] + [v for tab in tables for v in tab[t]]


def cmd_fit_nonparametric(cfg: dict, out: Path) -> dict:
    sample, grid = ingest(cfg["data_path"], cfg["data"])
    k = sample.k
    prior = SbsParameters(np.full((grid.horizon, k + 1), float(cfg["alpha"])), grid)
    stats = sample.stats()
    post = posterior_update(prior, stats)
    pred = predictive_distribution(post)
    draws = sample_increments(post, int(cfg["n_samples"]), cfg["seed"])
    lower, upper = np.quantile(np.cumsum(draws, axis=1), [0.025, 0.975], axis=0)
    kp = kalbfleisch_prentice(stats, grid)
    km = kaplan_meier(stats)
    causes = range(1, k + 1)
    _write_csv(
        out / "predictive.csv",
        ["bin", "tau"] + [f"F_{c}" for c in causes] + [f"lower_{c}" for c in causes]
        + [f"upper_{c}" for c in causes],
        _cum_rows(grid, pred.cumulative, lower, upper),
    )
    _write_csv(
        out / "classical.csv",
        ["bin", "tau", "km_survival"] + [f"cif_{c}" for c in causes],
        _cum_rows(grid, km[:, None], kp.cumulative),
    )
    _write_csv(
        out / "posterior_alpha.csv",
        ["bin"] + [f"alpha_{d}" for d in range(k + 1)],
        ([t + 1] + list(post.alpha[t]) for t in range(grid.horizon)),
    )
    return {"n": sample.n, "k": k, "horizon": grid.horizon, "posterior_alpha": post.alpha}


def cmd_fit_regression(cfg: dict, out: Path) -> dict:
    sample, grid = ingest(cfg["data_path"], cfg["data"])
    rcfg = RegressionConfig(
        m=cfg["m"],
        n_iter=cfg["n_iter"],
        burn_in=cfg["burn_in"],
        thin=cfg["thin"],
        proposal_scale=cfg["proposal_scale"],
        seed=cfg["seed"],
        family=cfg["model"],
        likelihood="parametric" if cfg["parametric"] else "sbs",
        fixed_shape=cfg["fixed_shape"],
        **cfg["prior"],
    )
    rng = np.random.default_rng(cfg["seed"])
    chain = rwmh_sample(sample, rcfg, rng)
    _write_csv(out / "chain.csv", ["draw"] + chain.names + ["log_posterior"],
               ([i] + list(chain.draws[i]) + [chain.log_posterior[i]] for i in range(len(chain))))
    rows = []
    for j, w in enumerate(sample.profiles):
        curve = predictive_for_profile(chain, sample, w, rcfg, rng, cfg["draws_per_theta"])
        expected = np.cumsum(curve.expected, axis=0)
        for t in range(grid.horizon):
            for c in range(sample.k):
                rows.append([j, t + 1, grid.edges[t + 1], c + 1, curve.mean[t, c],
                             expected[t, c], curve.lower[t, c], curve.upper[t, c]])
    _write_csv(out / "predictive.csv",
               ["profile", "bin", "tau", "cause", "mean", "expected", "lower", "upper"], rows)
    _write_csv(out / "profiles.csv", ["profile"] + list(sample.covariate_names),
               ([j] + list(w) for j, w in enumerate(sample.profiles)))
    return {
        "n": sample.n,
        "k": sample.k,
        "horizon": grid.horizon,
        "n_profiles": len(sample.profiles),
        "chain_length": len(chain),
        "acceptance_rate": chain.acceptance_rate,
        "geweke": dict(zip(chain.names, chain.geweke)),
        "posterior_mean": dict(zip(chain.names, chain.draws.mean(axis=0))),
        "posterior_sd": dict(zip(chain.names, chain.draws.std(axis=0, ddof=1) if len(chain) > 1 else [])),
        "mode": dict(zip(chain.names, chain.mode.theta.to_vector(log_shape=False))),
        "mode_converged": chain.mode.converged,
    }


def cmd_simulate(cfg: dict, out: Path) -> dict:
    theta = cfg["theta"]
    sim = SimulationConfig(
        n_replicates=cfg["n_replicates"],
        sample_sizes=tuple(cfg["sample_sizes"]),
        horizon=cfg["horizon"],
        bin_width=cfg["bin_width"],
        censor_bin=cfg["censor_bin"],
        m_values=tuple(cfg["m_values"]),
        include_parametric=cfg["include_parametric"],
        n_iter=cfg["n_iter"],
        burn_in=cfg["burn_in"],
        thin=cfg["thin"],
        seed=cfg["seed"],
        family=cfg["model"],
        **({} if theta is None else {"theta": RegressionTheta(**theta)}),
    )
    result = run_simulation_study(sim, n_jobs=cfg["n_jobs"])
    with open(out / "distances.csv", "w", newline="") as fh:
        write_distance_table(result, fh)
    medians = []
    arms = (["parametric"] if sim.include_parametric else []) + ["sbs"] * len(sim.m_values)
    ms = ([None] if sim.include_parametric else []) + list(sim.m_values)
    for n in sim.sample_sizes:
        for model, m in zip(arms, ms):
            for c in range(1, sim.theta.k + 1):
                d = result.distances(model, n, c, m)
                medians.append({"model": model, "m": m, "n": n, "cause": c,
                                "median_ks": float(np.median(d)) if d.size else None})
    return {"resolved_design": sim.to_dict(), "medians": medians, "failures": result.failures}


def cmd_urn_demo(cfg: dict, out: Path) -> dict:
    T, k = int(cfg["horizon"]), int(cfg["k"])
    alpha = np.broadcast_to(np.asarray(cfg["alpha"], dtype=float), (T, k + 1)).copy()
    if cfg["close_horizon"]:
        alpha[-1, 0] = 0.0
    urn = UrnSystem(SbsParameters(alpha, TimeGrid(T)), cfg["m"])
    trace: list = []
    blocks = urn.draw_blocks(int(cfg["n_blocks"]), cfg["seed"], trace)
    _write_csv(out / "blocks.csv", ["block", "time", "cause"],
               ([i + 1, b.time, b.cause] for i, b in enumerate(blocks)))
    with open(out / "trace.csv", "w", newline="") as fh:
        write_trace(trace, fh)
    return {"n_blocks": len(blocks), "n_extractions": len(trace), "next_block_law": urn.next_block_law()}


def cmd_concentration_curve(cfg: dict, out: Path) -> dict:
    grid = TimeGrid.uniform(int(cfg["horizon"]), float(cfg["bin_width"]))
    w = np.asarray(cfg["profile"], dtype=float)
    rcfg = RegressionConfig(family=cfg["model"], **cfg["prior"])
    sampler = prior_theta_sampler(rcfg, int(cfg["k"]), w.size)
    curve = prior_concentration_curve(
        sampler, w, cfg["m_values"], grid, cfg["seed"], int(cfg["n_draws"]), cfg["model"]
    )
    rows = []
    for i, m in enumerate(curve.m_values):
        for t in range(grid.horizon):
            for c in range(sampler.k):
                rows.append([m, t + 1, grid.edges[t + 1], c + 1, curve.sigma[i, t, c],
                             curve.sigma_se[i, t, c], curve.sigma_inf[t, c]])
    _write_csv(out / "concentration.csv",
               ["m", "bin", "tau", "cause", "sigma", "sigma_se", "sigma_inf"], rows)
    return {"n_draws": curve.n_draws, "max_sigma_inf": float(curve.sigma_inf.max())}


COMMANDS = {
    "fit-nonparametric": cmd_fit_nonparametric,
    "fit-regression": cmd_fit_regression,
    "simulate": cmd_simulate,
    "urn-demo": cmd_urn_demo,
    "concentration-curve": cmd_concentration_curve,
}


def main(argv=None) -> int:
    command = None
    try:
        args = build_parser().parse_args(argv)
        command = args.command
        cfg = _resolve(command, args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        results = COMMANDS[command](cfg, out)
        _write_summary(out, command, cfg, results)
    except SystemExit:
        raise
    except Exception as exc:  # noqa: BLE001 - every failure becomes one record
        record = {"status": "error", "command": command, "error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(record), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
