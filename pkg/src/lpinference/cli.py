"""Command-line front end.

Exit codes: 0 success, 2 usage or validation error, 3 numerical failure.
Flags override values read from ``--config`` (a JSON object keyed by the
long flag names with dashes replaced by underscores).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
import scipy

from . import __version__
from .bands import (
    BAND_KINDS,
    pointwise_bands,
    scheffe_bands,
    significance_bands_asymptotic,
    significance_bands_bootstrap,
    supt_bands,
)
from .core import DGP_KINDS, ESTIMATORS, HC_VARIANTS, VARIANCES, DgpConfig, EstimationError, LPSpec, TimeSeriesDataset
from .estimators import estimate
from .simulation import run_mc, simulate

log = logging.getLogger("lpinference")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
STOCHASTIC_BANDS = ("sup_t", "significance_bootstrap")

DEFAULTS: dict[str, Any] = {
    "z": None,
    "controls": [],
    "lagged": [],
    "horizon": 8,
    "lags": 0,
    "no_intercept": False,
    "estimator": "ols",
    "variance": "newey_west",
    "nw_lags": None,
    "hc": "hc3",
    "block_size": 8,
    "n_boot": 1000,
    "partialling": "explicit_regressors",
    "bands": [],
    "alpha": 0.05,
    "seed": None,
    "supt_draws": 10_000,
    # mc / simulate
    "dgp": "iv_system",
    "T": [100],
    "beta": [0.0],
    "rho": 0.5,
    "intercept": 0.0,
    "burn_in": None,
    "reps": 1000,
    "jobs": 1,
}


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    input_path: Path | None
    output_path: Path
    options: dict[str, Any] = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.options[name]
        except KeyError:
            raise AttributeError(name) from None

    def lp_spec(self) -> LPSpec:
        return LPSpec(
            horizon_max=self.horizon,
            control_lags=self.lags,
            include_intercept=not self.no_intercept,
            estimator=self.estimator,
            variance=self.variance,
            nw_lags=self.nw_lags,
            hc_variant=self.hc,
            block_size=self.block_size,
            n_boot=self.n_boot,
            partialling=self.partialling,
        )


def _csv_list(text: str) -> list[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in _csv_list(text)]


def _int_list(text: str) -> list[int]:
    return [int(v) for v in _csv_list(text)]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def _add_spec_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("local projection")
    g.add_argument("--horizon", type=int, help="maximum horizon H (default 8)")
    g.add_argument("--lags", type=int, help="lags of y, s and --lagged series in the control block")
    g.add_argument("--no-intercept", action="store_const", const=True, default=None)
    g.add_argument("--estimator", choices=ESTIMATORS)
    g.add_argument("--variance", choices=VARIANCES)
    g.add_argument("--nw-lags", type=int, help="Newey-West truncation (default h+1, or H+1 for joint objects)")
    g.add_argument("--hc", choices=HC_VARIANTS)
    g.add_argument("--block-size", type=int)
    g.add_argument("--n-boot", type=int)
    g.add_argument("--partialling", choices=("explicit_regressors", "fwl_prewash"))
    g.add_argument("--bands", type=_csv_list, help=f"comma-separated subset of {','.join(BAND_KINDS)}")
    g.add_argument("--alpha", type=float)
    g.add_argument("--supt-draws", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lpinference",
        description="Local projection impulse responses, bands and Monte Carlo checks.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("estimate", "estimate an impulse response from a CSV file"),
        ("bands", "write bands in long format (one row per horizon and band kind)"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--input", required=True, type=Path)
        p.add_argument("--output", required=True, type=Path)
        p.add_argument("--config", type=Path)
        p.add_argument("--y", help="outcome column")
        p.add_argument("--s", help="treatment column")
        p.add_argument("--z", type=_csv_list, help="instrument column(s)")
        p.add_argument("--controls", type=_csv_list)
        p.add_argument("--lagged", type=_csv_list)
        p.add_argument("--seed", type=int)
        _add_spec_flags(p)

    p = sub.add_parser("mc", help="Monte Carlo rejection rates of band-based tests")
    p.add_argument("--output", required=True, type=Path)
    p.add_argument("--config", type=Path)
    p.add_argument("--seed", type=int)
    p.add_argument("--dgp", choices=DGP_KINDS)
    p.add_argument("--T", type=_int_list, help="comma-separated sample sizes")
    p.add_argument("--beta", type=_float_list, help="comma-separated treatment effects")
    p.add_argument("--rho", type=float)
    p.add_argument("--burn-in", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--jobs", type=int)
    _add_spec_flags(p)

    p = sub.add_parser("simulate", help="write a simulated dataset")
    p.add_argument("--output", required=True, type=Path)
    p.add_argument("--config", type=Path)
    p.add_argument("--seed", type=int)
    p.add_argument("--dgp", choices=DGP_KINDS)
    p.add_argument("--T", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--intercept", type=float)
    p.add_argument("--burn-in", type=int)
    return parser


def make_config(args: argparse.Namespace) -> RunConfig:
    given = {k: v for k, v in vars(args).items() if v is not None}
    options = dict(DEFAULTS)
    if "config" in given:
        try:
            from_file = json.loads(Path(given["config"]).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file: {exc}") from exc
        if not isinstance(from_file, dict):
            raise UsageError("config file must hold a JSON object")
        options.update(from_file)
    options.update(given)
    options["_explicit"] = set(given) | set(from_file if "config" in given else {})
    command = options.pop("command")
    input_path = options.pop("input", None)
    output_path = options.pop("output")
    for key in ("controls", "lagged", "bands"):
        if isinstance(options.get(key), str):
            options[key] = _csv_list(options[key])
    if not 0 < options["alpha"] < 1:
        raise UsageError("alpha must lie in (0, 1)")
    return RunConfig(command, Path(input_path) if input_path else None, Path(output_path), options)


def _versions() -> dict[str, str]:
    return {
        "lpinference": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "python": platform.python_version(),
    }


def _write_sidecar(cfg: RunConfig, extra: dict[str, Any]) -> None:
    meta = {
        "command": cfg.command,
        "input": str(cfg.input_path) if cfg.input_path else None,
        "seed": cfg.seed,
        "alpha": cfg.alpha,
        "versions": _versions(),
        **extra,
    }
    path = cfg.output_path.with_name(cfg.output_path.name + ".json")
    path.write_text(json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n")


def _write_csv(path: Path, header: list[str], rows: list[list[Any]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else _fmt(v) for v in row])


def load_dataset(cfg: RunConfig) -> TimeSeriesDataset:
    try:
        frame = pd.read_csv(cfg.input_path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise UsageError(f"cannot read {cfg.input_path}: {exc}") from exc
    if not cfg.y or not cfg.s:
        raise UsageError("--y and --s are required")
    z = cfg.z or []
    wanted = [cfg.y, cfg.s, *z, *cfg.controls, *cfg.lagged]
    for name in wanted:
        if name not in frame.columns:
            raise UsageError(f"column {name!r} not found in {cfg.input_path}")
    series = {}
    for name in dict.fromkeys(wanted):
        col = pd.to_numeric(frame[name], errors="coerce")
        if col.isna().any() or not np.all(np.isfinite(col.to_numpy())):
            raise UsageError(f"column {name!r} has missing or non-numeric values")
        series[name] = col.to_numpy(dtype=float)
    return TimeSeriesDataset(series, y=cfg.y, s=cfg.s, z=z or None, controls=cfg.controls, lagged=cfg.lagged)


def _compute_bands(cfg: RunConfig, data, spec, irf):
    out = {}
    rng = np.random.default_rng(cfg.seed) if cfg.seed is not None else None
    for kind in cfg.bands:
        if kind == "pointwise":
            out[kind] = pointwise_bands(irf, cfg.alpha)
        elif kind == "scheffe":
            out[kind] = scheffe_bands(irf, cfg.alpha)
        elif kind == "sup_t":
            if irf.cov is None:
                raise UsageError("sup_t bands need --estimator gmm")
            out[kind] = supt_bands(irf, cfg.alpha, M=cfg.supt_draws, rng=rng)
        elif kind == "significance_asymptotic":
            out[kind] = significance_bands_asymptotic(data, spec, cfg.alpha)
        else:
            out[kind] = significance_bands_bootstrap(data, spec, cfg.alpha, rng=rng)
    return out


def _check_bands(cfg: RunConfig, spec: LPSpec) -> None:
    for kind in cfg.bands:
        if kind not in BAND_KINDS:
            raise UsageError(f"unknown band kind {kind!r}")
    stochastic = [k for k in cfg.bands if k in STOCHASTIC_BANDS]
    if spec.variance == "wild_block":
        stochastic.append("wild_block variance")
    if stochastic and cfg.seed is None:
        raise UsageError(f"--seed is required for {', '.join(stochastic)}")


def cmd_estimate(cfg: RunConfig) -> int:
    spec = cfg.lp_spec()
    _check_bands(cfg, spec)
    data = load_dataset(cfg)
    spec.check(data.T)
    irf = estimate(data, spec, seed=cfg.seed)
    bands = _compute_bands(cfg, data, spec, irf)

    header = ["h", "beta", "se", "n_obs"]
    for kind in bands:
        header += [f"{kind}_lower", f"{kind}_upper"]
    rows = []
    for h in range(irf.beta.size):
        row = [h, irf.beta[h], irf.se[h], int(irf.n_obs[h])]
        for band in bands.values():
            row += [band.lower[h], band.upper[h]]
        rows.append(row)
    _write_csv(cfg.output_path, header, rows)
    _write_sidecar(cfg, {"estimate": irf.meta, "bands": list(bands), "spec": vars_spec(spec)})
    return EXIT_OK


def cmd_bands(cfg: RunConfig) -> int:
    spec = cfg.lp_spec()
    if not cfg.bands:
        cfg.options["bands"] = ["pointwise", "significance_asymptotic"]
    _check_bands(cfg, spec)
    data = load_dataset(cfg)
    spec.check(data.T)
    irf = estimate(data, spec, seed=cfg.seed)
    bands = _compute_bands(cfg, data, spec, irf)
    rows = []
    for kind, band in bands.items():
        crit = np.broadcast_to(band.critical, band.upper.shape)
        for h in range(band.upper.size):
            rows.append([h, kind, band.level, band.center[h], band.lower[h], band.upper[h], crit[h]])
    _write_csv(cfg.output_path, ["h", "band_kind", "level", "center", "lower", "upper", "critical"], rows)
    _write_sidecar(cfg, {"estimate": irf.meta, "bands": list(bands), "spec": vars_spec(spec)})
    return EXIT_OK


def vars_spec(spec: LPSpec) -> dict[str, Any]:
    return {k: getattr(spec, k) for k in spec.__dataclass_fields__}


def cmd_mc(cfg: RunConfig) -> int:
    if cfg.seed is None:
        raise UsageError("--seed is required for mc")
    if cfg.reps < 1:
        raise UsageError("--reps must be positive")
    bands = cfg.bands or ["significance_asymptotic", "significance_bootstrap"]
    for kind in bands:
        if kind not in BAND_KINDS:
            raise UsageError(f"unknown band kind {kind!r}")
    # Monte Carlo design defaults: H = 4, eight Newey-West lags
    opts = dict(cfg.options)
    for key, value in (("horizon", 4), ("nw_lags", 8)):
        if key not in cfg.options["_explicit"]:
            opts[key] = value
    spec = RunConfig(cfg.command, None, cfg.output_path, opts).lp_spec()
    T_values = cfg.T if isinstance(cfg.T, list) else [cfg.T]
    betas = cfg.beta if isinstance(cfg.beta, list) else [cfg.beta]
    grid = [
        DgpConfig(cfg.dgp, T=T, beta=b, rho=cfg.rho, burn_in=cfg.burn_in)
        for T in T_values
        for b in betas
    ]
    results = run_mc(
        grid, spec, bands, cfg.alpha, cfg.reps, cfg.seed, supt_draws=cfg.supt_draws, n_jobs=cfg.jobs
    )
    rows = [
        [r.dgp.kind, r.dgp.T, r.dgp.beta, r.band_kind, r.rejection_rate, r.mc_standard_error,
         r.n_reps, r.coverage_rate, r.n_failed]
        for r in results
    ]
    header = ["dgp", "T", "beta", "band_kind", "rejection_rate", "mc_se", "n_reps", "coverage_rate", "n_failed"]
    _write_csv(cfg.output_path, header, rows)
    _write_sidecar(cfg, {"spec": vars_spec(spec), "bands": bands, "reps": cfg.reps})
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    if cfg.seed is None:
        raise UsageError("--seed is required for simulate")
    T = cfg.T[0] if isinstance(cfg.T, list) else cfg.T
    beta = cfg.beta[0] if isinstance(cfg.beta, list) else cfg.beta
    dgp = DgpConfig(cfg.dgp, T=T, burn_in=cfg.burn_in, seed=cfg.seed, rho=cfg.rho,
                    intercept=cfg.intercept, beta=beta)
    data = simulate(dgp)
    names = list(data.series)
    rows = [[data[n][t] for n in names] for t in range(data.T)]
    _write_csv(cfg.output_path, names, rows)
    roles = {"y": data.y, "s": data.s, "z": list(data.z), "lagged": list(data.lagged)}
    _write_sidecar(cfg, {"dgp": vars(dgp), "roles": roles})
    return EXIT_OK


COMMANDS = {"estimate": cmd_estimate, "bands": cmd_bands, "mc": cmd_mc, "simulate": cmd_simulate}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = make_config(args)
        return COMMANDS[cfg.command](cfg)
    except EstimationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
