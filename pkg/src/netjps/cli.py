"""Batch command-line front-end.

Subcommands: ``exposure``, ``fit``, ``drf``, ``balance``, ``simulate``.
Every run is driven by one config file (``--config``); ``--out`` and
``--seed`` override the config.  On failure a machine-readable JSON error is
written to stderr and the exit code identifies the error class.  Set
NETJPS_LOG=debug|info|warning for log verbosity.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import balance as balance_mod
from . import bootstrap as bootstrap_mod
from . import io as io_mod
from . import jps
from . import synth
from .config import load_config
from .dataset import PanelDataset, add_neighborhood_covariate, attach_exposure, check_unique_keys
from .errors import (
    BootstrapError,
    ConfigError,
    DegenerateExposureError,
    DegenerateNormalizerError,
    DomainError,
    InputError,
    NetjpsError,
    NoRootError,
    SingularDesignError,
    UnboundColumnError,
)
from .network import build_adjacency

logger = logging.getLogger(__name__)

# error class -> exit code (most specific first)
_EXIT_CODES = (
    (UnboundColumnError, 4),
    (ConfigError, 2),
    (DegenerateNormalizerError, 7),
    (DegenerateExposureError, 8),
    (SingularDesignError, 9),
    (NoRootError, 10),
    (BootstrapError, 11),
    (DomainError, 6),
    (InputError, 5),
    (NetjpsError, 1),
)
MISSING_FILE_EXIT = 3


def _load_dataset(cfg):
    """Ingest panel + edges, attach exposures and neighborhood covariates."""
    if cfg.panel is None or cfg.edges is None:
        raise ConfigError("config must bind 'panel' and 'edges' file paths")
    c = cfg.columns
    units, periods, columns = io_mod.read_panel_csv(cfg.panel, c.unit, c.period)
    for name in (c.outcome, c.treatment):
        if name not in columns:
            raise UnboundColumnError(f"bound column {name!r} not found in {cfg.panel}")
    y = columns.pop(c.outcome)
    z = columns.pop(c.treatment)
    dataset = PanelDataset(units=units, periods=periods, y=y, z=z, covariates=columns)
    check_unique_keys(dataset)

    edges = io_mod.read_edges_csv(cfg.edges)
    adj = build_adjacency(edges, dataset.keys())
    dataset = attach_exposure(dataset, adj, cfg.exposure_mode)
    for spec in cfg.neighborhood:
        dataset = add_neighborhood_covariate(dataset, adj, spec)
    for name in (*c.x_z, *c.x_g):
        if name not in dataset.covariates:
            raise UnboundColumnError(f"bound covariate {name!r} not found in the panel")
    return dataset, adj


def _jps_config(cfg):
    c = cfg.columns
    if not c.x_z or (cfg.variant in ("jps", "both") and not c.x_g):
        raise ConfigError("columns.x_z and columns.x_g must be non-empty for fitting")
    return jps.JpsConfig(x_z=c.x_z, x_g=c.x_g, grid=cfg.grid)


def _outdir(cfg):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_exposure(cfg):
    dataset, _ = _load_dataset(cfg)
    out = _outdir(cfg)
    io_mod.write_exposure_csv(dataset, out / "exposure.csv",
                              unit_col=cfg.columns.unit, period_col=cfg.columns.period)
    print(f"wrote {out / 'exposure.csv'} ({dataset.n} rows)")
    return 0


def _fit_summary(cfg, dataset):
    config = _jps_config(cfg)
    summary = {"variant": cfg.variant, "n": dataset.n}
    if cfg.variant in ("jps", "both"):
        result = jps.run_jps(dataset, replace(config, retain_unit_level=False))
        summary["boxcox"] = {"k": result.gps.boxcox.k, "skewness": result.gps.boxcox.skewness}
        summary["treatment_models"] = {
            "individual": io_mod.linear_fit_payload(result.gps.z_model),
            "neighborhood": io_mod.linear_fit_payload(result.gps.g_model),
        }
        summary["outcome_model"] = io_mod.linear_fit_payload(result.outcome.fit)
    if cfg.variant in ("naive", "both"):
        nres = jps.run_naive(dataset, replace(config, retain_unit_level=False))
        summary["naive"] = {
            "boxcox": {"k": nres.boxcox.k, "skewness": nres.boxcox.skewness},
            "individual_model": io_mod.linear_fit_payload(nres.z_model),
            "outcome_model": io_mod.linear_fit_payload(nres.outcome.fit),
        }
    return summary


def cmd_fit(cfg):
    dataset, _ = _load_dataset(cfg)
    out = _outdir(cfg)
    summary = _fit_summary(cfg, dataset)
    io_mod.write_json(summary, out / "fit_summary.json")
    for label in ("outcome_model",):
        if label in summary:
            terms = summary[label]["terms"]
            coefs = summary[label]["coefficients"]
            print(f"{label} ({len(terms)} terms)")
            for t, b in zip(terms, coefs):
                print(f"  {t:<12} {b: .6g}")
    print(f"wrote {out / 'fit_summary.json'}")
    return 0


def cmd_drf(cfg):
    dataset, _ = _load_dataset(cfg)
    out = _outdir(cfg)
    config = _jps_config(cfg)
    summary = _fit_summary(cfg, dataset)
    io_mod.write_json(summary, out / "fit_summary.json")

    bands = None
    if cfg.variant in ("jps", "both"):
        result = jps.run_jps(dataset, config)
        drf = result.drf
        report = jps.effects(drf, cfg.contrasts)
        if cfg.bootstrap.b >= 2:
            bands = bootstrap_mod.bootstrap_drf(
                dataset, config, cfg.bootstrap.b, cfg.bootstrap.seed,
                level=cfg.bootstrap.level, variant="with_interference",
            )
        io_mod.write_drf_surface_csv(drf, out / "drf_surface.csv", bands=bands)
        io_mod.write_marginal_csv(
            "z", drf.z_grid, drf.marginal_z, out / "drf_marginal_z.csv",
            lo=None if bands is None else bands.marginal_z_lo,
            hi=None if bands is None else bands.marginal_z_hi,
        )
        io_mod.write_marginal_csv(
            "g", drf.g_grid, drf.marginal_g, out / "drf_marginal_g.csv",
            lo=None if bands is None else bands.marginal_g_lo,
            hi=None if bands is None else bands.marginal_g_hi,
        )
        io_mod.write_json(report.to_payload(), out / "effects.json")
        io_mod.write_json(io_mod.drf_payload(drf, effects=report, bands=bands), out / "drf.json")
    if cfg.variant in ("naive", "both"):
        nres = jps.run_naive(dataset, config)
        ndrf = nres.drf
        nbands = None
        if cfg.bootstrap.b >= 2:
            nbands = bootstrap_mod.bootstrap_drf(
                dataset, config, cfg.bootstrap.b, cfg.bootstrap.seed,
                level=cfg.bootstrap.level, variant="without_interference",
            )
        name = "drf_marginal_z.csv" if cfg.variant == "naive" else "naive_marginal_z.csv"
        io_mod.write_marginal_csv(
            "z", ndrf.z_grid, ndrf.marginal_z, out / name,
            lo=None if nbands is None else nbands.marginal_z_lo,
            hi=None if nbands is None else nbands.marginal_z_hi,
        )
        nreport = jps.effects(ndrf, jps.ContrastSpec(z_pairs=cfg.contrasts.z_pairs))
        if cfg.variant == "naive":
            io_mod.write_json(nreport.to_payload(), out / "effects.json")
            io_mod.write_json(io_mod.drf_payload(ndrf, effects=nreport, bands=nbands),
                              out / "drf.json")
        else:
            io_mod.write_json(io_mod.drf_payload(ndrf, effects=nreport, bands=nbands),
                              out / "naive_drf.json")
    print(f"wrote dose-response outputs to {out}")
    return 0


def cmd_balance(cfg):
    dataset, _ = _load_dataset(cfg)
    out = _outdir(cfg)
    config = _jps_config(cfg)
    gps = jps.fit_treatment_models(dataset, config)
    scores = jps.predict_scores(gps, dataset)
    report = balance_mod.balance_check(dataset, gps, scores)
    io_mod.write_json(report.to_payload(), out / "balance.json")
    print(report.format_table())
    print(f"wrote {out / 'balance.json'}")
    return 0


def cmd_simulate(cfg):
    if cfg.scenario is None:
        raise ConfigError("simulate requires scenario.* keys in the config")
    out = _outdir(cfg)
    scenario = cfg.scenario
    dataset, adj = synth.generate(scenario)
    io_mod.write_panel_csv(dataset, out / "panel.csv",
                           unit_col=cfg.columns.unit, period_col=cfg.columns.period,
                           outcome_col=cfg.columns.outcome, treatment_col=cfg.columns.treatment)
    io_mod.write_edges_csv(adj, out / "edges.csv")

    x_names = scenario.covariate_names()
    config = jps.JpsConfig(
        x_z=cfg.columns.x_z or x_names,
        x_g=cfg.columns.x_g or x_names,
        grid=cfg.grid,
    )
    result = jps.run_jps(dataset, config)
    drf = result.drf
    naive = jps.run_naive(dataset, config).drf
    oracle = synth.oracle_drf(scenario, drf.z_grid, drf.g_grid, m=cfg.oracle_m)

    oracle_payload = {
        "z_grid": oracle.z_grid.tolist(),
        "g_grid": oracle.g_grid.tolist(),
        "surface": oracle.surface.tolist(),
        "marginal_z": oracle.marginal_z.tolist(),
        "marginal_g": oracle.marginal_g.tolist(),
        "mc_se_z": oracle.mc_se_z.tolist(),
        "mc_se_g": oracle.mc_se_g.tolist(),
        "g_mean": oracle.g_mean,
        "z_mean": oracle.z_mean,
        "m_samples": oracle.m_samples,
    }
    io_mod.write_json(oracle_payload, out / "oracle.json")
    io_mod.write_json(io_mod.drf_payload(drf, effects=jps.effects(drf, cfg.contrasts)),
                      out / "drf.json")

    jps_err = np.abs(drf.marginal_z - oracle.marginal_z)
    naive_err = np.abs(naive.marginal_z - oracle.marginal_z)
    comparison = {
        "sd_y": float(np.std(dataset.y)),
        "jps": {
            "mean_abs_error_marginal_z": float(jps_err.mean()),
            "max_abs_error_surface": float(np.nanmax(np.abs(drf.surface - oracle.surface))),
            "argmax_z": float(drf.z_grid[np.argmax(drf.marginal_z)]),
            "argmax_steps_from_oracle": int(
                abs(int(np.argmax(drf.marginal_z)) - oracle.argmax_z())
            ),
        },
        "naive": {
            "mean_abs_error_marginal_z": float(naive_err.mean()),
            "argmax_z": float(naive.z_grid[np.argmax(naive.marginal_z)]),
            "argmax_steps_from_oracle": int(
                abs(int(np.argmax(naive.marginal_z)) - oracle.argmax_z())
            ),
        },
        "oracle_argmax_z": float(oracle.z_grid[oracle.argmax_z()]),
    }
    io_mod.write_json(comparison, out / "comparison.json")
    print(json.dumps(comparison, indent=2))
    return 0


_COMMANDS = {
    "exposure": cmd_exposure,
    "fit": cmd_fit,
    "drf": cmd_drf,
    "balance": cmd_balance,
    "simulate": cmd_simulate,
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="netjps",
        description="direct and spillover dose-response estimation on weighted directed networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the run config file")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--seed", type=int, default=None,
                       help="override bootstrap/scenario seed (u64)")
    return parser


def main(argv=None):
    level = os.environ.get("NETJPS_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.out is not None:
            cfg = replace(cfg, out=args.out)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be a non-negative integer")
            cfg = replace(cfg, bootstrap=replace(cfg.bootstrap, seed=args.seed))
            if cfg.scenario is not None:
                cfg = replace(cfg, scenario=replace(cfg.scenario, seed=args.seed))
        return _COMMANDS[args.command](cfg)
    except FileNotFoundError as exc:
        _emit_error("missing-file", str(exc))
        return MISSING_FILE_EXIT
    except NetjpsError as exc:
        _emit_error(exc.code, str(exc))
        for klass, code in _EXIT_CODES:
            if isinstance(exc, klass):
                return code
        return 1


def _emit_error(code, message):
    json.dump({"error": code, "message": message}, sys.stderr)
    sys.stderr.write("\n")


if __name__ == "__main__":
    sys.exit(main())
