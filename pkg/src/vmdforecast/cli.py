"""Command-line interface: ``vmdforecast <subcommand> --config cfg.json``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import warnings
from pathlib import Path

from .errors import ConfigError, DataError, NumericalError, StageError
from .load_data import save_resampled_csv, save_windows
from .metrics import write_metrics_csv
from .pipeline import (
    BASELINE_NAME, ExperimentConfig, RunRecord, baseline, decompose, emit_plots, k_label, metrics_rows,
    prepare_household, run_pipeline, sweep,
)
from .stationarity import batch_stationarity

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

logger = logging.getLogger("vmdforecast")


def _parse_k(raw: str):
    if raw == "none":
        return "none"
    try:
        k = int(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"K must be a positive int or 'none', got {raw!r}") from None
    if k < 1:
        raise argparse.ArgumentTypeError("K must be >= 1")
    return k


def _load_config(args) -> ExperimentConfig:
    if not args.config:
        raise ConfigError("--config is required")
    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.base_seed = args.seed
    if args.out is not None:
        cfg.output_dir = args.out
    return cfg.validate()


def _households(cfg: ExperimentConfig, args) -> list[str]:
    if getattr(args, "household", None):
        if args.household not in cfg.households:
            raise ConfigError(f"unknown household {args.household!r}")
        return [args.household]
    return list(cfg.households)


def _k_values(cfg: ExperimentConfig, args) -> list:
    return args.K if getattr(args, "K", None) else list(cfg.k_list)


def _i_values(cfg: ExperimentConfig, args) -> list[int]:
    return args.I if getattr(args, "I", None) else list(cfg.i_list)


def cmd_ingest(cfg, args) -> None:
    for h in _households(cfg, args):
        data = prepare_household(cfg, h)
        d = Path(cfg.output_dir) / h
        d.mkdir(parents=True, exist_ok=True)
        save_resampled_csv(data.resampled, d / "resampled.csv")
        save_windows(data.train, d / "train_windows.lcw")
        save_windows(data.test, d / "test_windows.lcw")
        print(f"{h}: {len(data.train)} train / {len(data.test)} test windows -> {d}")


def cmd_decompose(cfg, args) -> None:
    from .vmd import energy_shares

    for h in _households(cfg, args):
        data = prepare_household(cfg, h)
        for K in _k_values(cfg, args):
            if k_label(K) == "none":
                continue
            d = Path(cfg.output_dir) / h / f"decomposition_K{k_label(K)}"
            d.mkdir(parents=True, exist_ok=True)
            shares = {}
            for part, ds in (("train", data.train), ("test", data.test)):
                comps = decompose(cfg, ds, K)
                for j, c in enumerate(comps):
                    save_windows(c, d / f"{part}_component_{j:03d}.lcw")
                shares[part] = [float(s) for s in energy_shares(comps)]
            (d / "energy_shares.json").write_text(json.dumps(shares, indent=2))
            print(f"{h}: K={K} -> {d}")


def cmd_stationarity(cfg, args) -> None:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "stationarity.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["household", "decomposition", "test", "p_value", "statistic", "critical_value",
                    "stationary_fraction"])
        for h in _households(cfg, args):
            data = prepare_household(cfg, h)
            for K in _k_values(cfg, args):
                comps = decompose(cfg, data.train, K)
                rep = batch_stationarity(comps, source=args.source, max_windows=args.max_windows,
                                         seed=cfg.base_seed)
                name = "raw" if k_label(K) == "none" else f"{K}IMFs+Res"
                adf_frac = rep.adf_stationary_fraction()
                kpss_frac = sum(c.kpss_stationary for c in rep.components) / len(rep.components)
                for test, frac in (("ADF", adf_frac), ("KPSS", kpss_frac)):
                    w.writerow([h, name, test, f"{rep.mean_p_value(test):.6g}", f"{rep.mean_statistic(test):.6g}",
                                f"{rep.mean_critical_value(test):.6g}", f"{frac:.6g}"])
                detail = out / h / f"stationarity_K{k_label(K)}.json"
                detail.parent.mkdir(parents=True, exist_ok=True)
                detail.write_text(json.dumps(rep.to_dict(), indent=1))
    print(f"wrote {path}")


def _cells(cfg, args):
    for h in _households(cfg, args):
        for K in _k_values(cfg, args):
            for I in _i_values(cfg, args):
                yield h, K, I


def cmd_train(cfg, args) -> None:
    for h, K, I in _cells(cfg, args):
        run_pipeline(cfg, h, K, I, resume=not args.no_resume, stop_after="train")
        print(f"{h} K={k_label(K)} I={I}: trained")


def cmd_forecast(cfg, args) -> None:
    for h, K, I in _cells(cfg, args):
        rec = run_pipeline(cfg, h, K, I, resume=not args.no_resume)
        print(f"{h} K={k_label(K)} I={I}: forecasts -> {Path(rec.run_dir) / 'forecasts.lcw'}")


def cmd_evaluate(cfg, args) -> None:
    records = [run_pipeline(cfg, h, K, I, resume=not args.no_resume) for h, K, I in _cells(cfg, args)]
    out = Path(cfg.output_dir)
    write_metrics_csv(metrics_rows(records), out / "metrics.csv")
    for r in records:
        print(f"{r.household} K={r.K} I={r.I}: rmse={r.metrics.rmse:.4f} fs={r.metrics.fs:.2f} "
              f"cv={r.metrics.cv:.3f} mape={r.metrics.mape_pct:.2f}")
    print(f"wrote {out / 'metrics.csv'}")


def cmd_baseline(cfg, args) -> None:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for h in _households(cfg, args):
        rep = baseline(cfg, h)
        (out / f"baseline_{h}.json").write_text(rep.to_json())
        rows.append({"household": h, "model": BASELINE_NAME, "K": None, "I": None, "report": rep})
        print(f"{h}: rmse={rep.rmse:.3f} cv={rep.cv:.3f} mape={rep.mape_pct:.2f} days={rep.n_instances}")
    write_metrics_csv(rows, out / "baseline_metrics.csv")


def cmd_sweep(cfg, args) -> None:
    records = sweep(cfg, _households(cfg, args), resume=not args.no_resume)
    print(f"{len(records)} runs -> {Path(cfg.output_dir) / 'sweep_metrics.csv'}")


def cmd_emit_plots(cfg, args) -> None:
    paths = sorted(Path(cfg.output_dir).glob("*/K*_I*/record.json"))
    if not paths:
        raise DataError(f"no run records under {cfg.output_dir}")
    records = [RunRecord.load(p) for p in paths]
    written = emit_plots(records, Path(cfg.output_dir) / "plots", instance=args.instance)
    print(f"wrote {len(written)} files to {Path(cfg.output_dir) / 'plots'}")


COMMANDS = {
    "ingest": (cmd_ingest, "ingest, resample and window each household"),
    "decompose": (cmd_decompose, "VMD-decompose train/test windows"),
    "stationarity": (cmd_stationarity, "ADF/KPSS tests on decomposed components"),
    "train": (cmd_train, "train and checkpoint every component model"),
    "forecast": (cmd_forecast, "forecast the test set (trains missing components)"),
    "evaluate": (cmd_evaluate, "score forecasts against actuals and the baseline"),
    "baseline": (cmd_baseline, "score the historical-mean baseline"),
    "sweep": (cmd_sweep, "run every household x K x I cell"),
    "emit-plots": (cmd_emit_plots, "write CSV data for plots from saved run records"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (JSON)")
    common.add_argument("--seed", type=int, help="override base_seed")
    common.add_argument("--out", help="override output_dir")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="vmdforecast", description="VMD + mWDN day-ahead load forecasting")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--household", help="restrict to one household id")
        if name in ("decompose", "stationarity", "train", "forecast", "evaluate"):
            p.add_argument("--K", type=_parse_k, nargs="+", help="VMD mode counts (int or 'none')")
        if name in ("train", "forecast", "evaluate"):
            p.add_argument("--I", type=int, nargs="+", help="wavelet levels")
        if name in ("train", "forecast", "evaluate", "sweep"):
            p.add_argument("--no-resume", action="store_true", help="ignore existing checkpoints")
        if name == "stationarity":
            p.add_argument("--source", choices=["windows", "series"], default="windows")
            p.add_argument("--max-windows", type=int, default=200)
        if name == "emit-plots":
            p.add_argument("--instance", type=int, default=0, help="test window for the overlay")
    return parser


def _exit_code(exc: BaseException) -> int:
    cause = exc.cause if isinstance(exc, StageError) else exc
    if isinstance(cause, ConfigError):
        return EXIT_CONFIG
    if isinstance(cause, (NumericalError, ArithmeticError)):
        return EXIT_NUMERIC
    return EXIT_DATA


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load_config(args)
        with warnings.catch_warnings():
            if not args.verbose:
                warnings.simplefilter("ignore", RuntimeWarning)
            COMMANDS[args.command][0](cfg, args)
    except (ConfigError, DataError, NumericalError, StageError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
