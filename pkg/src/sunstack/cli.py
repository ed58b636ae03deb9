"""Command-line pipeline driver.

Subcommands compose through files: ``synth`` writes an hourly dataset CSV,
``train-base`` fits and serializes the 24-model family, ``backtest`` runs
the rolling monthly evaluation and emits the report plus plot-ready CSVs,
``combine`` trains a single combiner and writes its blended forecasts,
``importance`` ranks a saved combiner's input columns, and ``stats``
computes monthly spread/correlation diagnostics from saved forecasts.

Every command stages its outputs fully in memory, refuses to overwrite
existing files unless --force is given, and publishes each file by writing
a temporary sibling and renaming it, so a failed run leaves no partial
artifacts.  Exit status is 0 only when every artifact was written.
"""

from __future__ import annotations

import argparse
import io
import os
import sys
import tempfile

import numpy as np

from .dataset import (
    HourlyDataset,
    format_timestamp,
    load_hourly_csv,
    parse_timestamp,
)
from .ensemble import (
    CombinerConfig,
    ForecastMatrix,
    combine,
    rolling_backtest,
    run_base_models,
    select_best_model,
    simple_average,
    train_combiner,
)
from .features import build_combiner_matrix
from .forest import load_forest, save_forest
from .metrics import model_spread_stats, rmse
from .report import render_report, report_csv_texts
from .site import DEFAULT_SITE, load_site_file
from .synth import synth_generate
from .validation import ConfigurationError, ParseError, SchemaError
from .variants import (
    load_svr_model,
    save_svr_model,
    train_variants,
    training_row_mask,
)

COMBINER_FILE = "combiner.forest"


class CliError(Exception):
    """User-facing command failure; message printed to stderr, exit 1."""


def _load_site(path):
    return load_site_file(path) if path else DEFAULT_SITE


def _parse_month(text: str) -> np.datetime64:
    try:
        month = np.datetime64(text.strip(), "M")
    except ValueError:
        raise CliError(f"invalid month {text!r}, expected YYYY-MM") from None
    return month


def _parse_month_range(text: str) -> list[np.datetime64]:
    """Expand 'YYYY-MM' or 'YYYY-MM:YYYY-MM' (inclusive) to a month list."""
    first, sep, last = text.partition(":")
    lo = _parse_month(first)
    hi = _parse_month(last) if sep else lo
    if hi < lo:
        raise CliError(f"month range {text!r} runs backwards")
    return [lo + np.timedelta64(i, "M") for i in range(int(hi - lo) + 1)]


def _parse_lags(text: str) -> tuple[int, ...]:
    try:
        lags = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise CliError(f"invalid lag list {text!r}, expected e.g. '0,24'") from None
    return lags


def _publish(outputs: dict[str, str], force: bool) -> None:
    """Write {path: text} atomically; refuse existing targets without force."""
    if not force:
        for path in outputs:
            if os.path.exists(path):
                raise CliError(f"{path} exists, pass --force to overwrite")
    for path in outputs:
        parent = os.path.dirname(os.path.abspath(path))
        os.makedirs(parent, exist_ok=True)
    for path, text in outputs.items():
        parent = os.path.dirname(os.path.abspath(path))
        fd, tmp = tempfile.mkstemp(dir=parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def _dataset_csv_text(dataset: HourlyDataset) -> str:
    from .dataset import write_hourly_csv

    buf = io.StringIO()
    write_hourly_csv(dataset, buf)
    return buf.getvalue()


def _combined_csv_text(timestamps, ensemble, average, best, actual) -> str:
    rows = ["timestamp,ensemble,simple_average,best_model,actual"]
    for i, ts in enumerate(timestamps):
        rows.append(
            f"{format_timestamp(ts)},{float(ensemble[i])!r},{float(average[i])!r},"
            f"{float(best[i])!r},{float(actual[i])!r}"
        )
    return "\n".join(rows) + "\n"


def _forecasts_csv_text(forecasts: ForecastMatrix) -> str:
    rows = ["timestamp,model_id,forecast"]
    for i, ts in enumerate(forecasts.timestamps):
        stamp = format_timestamp(ts)
        for j, mid in enumerate(forecasts.model_ids):
            rows.append(f"{stamp},{mid},{float(forecasts.values[i, j])!r}")
    return "\n".join(rows) + "\n"


def _load_forecasts_csv(path) -> ForecastMatrix:
    """Read the long-format forecast CSV back into a ForecastMatrix."""
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        header = fh.readline().rstrip("\n")
        if header != "timestamp,model_id,forecast":
            raise ParseError(f"unexpected forecast header {header!r}", 1)
        cells: dict[str, dict[np.datetime64, float]] = {}
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ParseError(f"expected 3 fields, got {len(parts)}", lineno)
            ts = parse_timestamp(parts[0])
            cells.setdefault(parts[1], {})[ts] = float(parts[2])
    if not cells:
        raise CliError(f"{path} contains no forecast rows")
    model_ids = tuple(sorted(cells))
    stamps = sorted(cells[model_ids[0]])
    values = np.empty((len(stamps), len(model_ids)))
    for j, mid in enumerate(model_ids):
        series = cells[mid]
        if sorted(series) != stamps:
            raise SchemaError(f"model {mid} covers a different timestamp set")
        values[:, j] = [series[ts] for ts in stamps]
    return ForecastMatrix(
        timestamps=np.asarray(stamps, dtype="datetime64[s]"),
        model_ids=model_ids,
        values=values,
    )


def _load_model_dir(model_dir):
    names = sorted(
        n for n in os.listdir(model_dir) if n.endswith(".svr")
    ) if os.path.isdir(model_dir) else []
    if not names:
        raise CliError(f"no .svr model files in {model_dir}")
    return [load_svr_model(os.path.join(model_dir, n)) for n in names]


def cmd_synth(args) -> None:
    site = _load_site(args.site)
    dataset = synth_generate(days=args.days, seed=args.seed, site=site)
    _publish({args.out: _dataset_csv_text(dataset)}, args.force)


def cmd_train_base(args) -> None:
    site = _load_site(args.site)
    dataset = load_hourly_csv(args.data, site)
    models = train_variants(dataset)

    actual = dataset.power_w / site.nominal_power_w
    outputs: dict[str, str] = {}
    summary = ["model_id,label,train_rmse,n_support,bias,iterations"]
    for model in models:
        pred = model.predict_normalized(dataset)
        mask = training_row_mask(dataset, model.spec.dataset_span)
        score = rmse(pred, actual, mask & ~np.isnan(actual))
        summary.append(
            f"{model.spec.model_id},{model.spec.label},{score!r},"
            f"{len(model.svr.support_)},{float(model.svr.intercept_)!r},"
            f"{model.svr.n_iter_}"
        )
        buf = io.StringIO()
        save_svr_model(model, buf)
        outputs[os.path.join(args.out, f"{model.spec.model_id}.svr")] = buf.getvalue()
    outputs[os.path.join(args.out, "summary.csv")] = "\n".join(summary) + "\n"
    _publish(outputs, args.force)


def _combiner_config(args, train_window=None, forecast_window=None) -> CombinerConfig:
    return CombinerConfig(
        n_trees=args.trees,
        max_features=args.max_features,
        min_samples_leaf=args.min_leaf,
        random_state=args.seed,
        lag_hours=_parse_lags(args.lags),
        train_window=train_window,
        forecast_window=forecast_window,
    )


def cmd_backtest(args) -> None:
    site = _load_site(args.site)
    dataset = load_hourly_csv(args.data, site)
    months = _parse_month_range(args.months) if args.months else None
    report = rolling_backtest(dataset, config=_combiner_config(args), months=months)

    art = report.artifacts
    outputs = {
        os.path.join(args.out, name): text
        for name, text in report_csv_texts(report).items()
    }
    outputs[os.path.join(args.out, "report.txt")] = render_report(report)
    outputs[os.path.join(args.out, "combined.csv")] = _combined_csv_text(
        art.timestamps, art.ensemble, art.simple_average, art.best_model, art.actual
    )
    outputs[os.path.join(args.out, "base_forecasts.csv")] = _forecasts_csv_text(
        ForecastMatrix(
            timestamps=art.timestamps, model_ids=art.model_ids, values=art.base
        )
    )
    _publish(outputs, args.force)


def cmd_combine(args) -> None:
    site = _load_site(args.site)
    dataset = load_hourly_csv(args.data, site)
    models = _load_model_dir(args.models)
    forecasts = run_base_models(dataset, models)

    # month boundaries follow the site's local calendar, like the backtest
    offset = np.timedelta64(int(round(site.utc_offset_h * 3600)), "s")
    month = _parse_month(args.month)
    f0 = month.astype("datetime64[s]") - offset
    f1 = (month + 1).astype("datetime64[s]") - offset
    if args.train_months:
        span = _parse_month_range(args.train_months)
        t0 = span[0].astype("datetime64[s]") - offset
        t1 = (span[-1] + 1).astype("datetime64[s]") - offset
    else:
        t0 = dataset.timestamps[0]
        t1 = f0
    config = _combiner_config(args, train_window=(t0, t1), forecast_window=(f0, f1))

    combiner = train_combiner(dataset, forecasts, config)
    blended = combine(combiner, dataset, forecasts, config)

    sel = (dataset.timestamps >= f0) & (dataset.timestamps < f1)
    if not sel.any():
        raise ConfigurationError(f"dataset has no rows in month {month}")
    train_sel = (dataset.timestamps >= t0) & (dataset.timestamps < t1)
    actual_all = dataset.power_w / site.nominal_power_w
    train_mask = train_sel & dataset.daylight_mask() & ~np.isnan(actual_all)
    scores = [
        rmse(forecasts.values[:, j], actual_all, train_mask)
        for j in range(len(forecasts.model_ids))
    ]
    best_col = select_best_model(scores) - 1

    columns = build_combiner_matrix(
        dataset, forecasts.timestamps, forecasts.values,
        forecasts.model_ids, lags=config.lag_hours, with_target=False,
    ).columns
    buf = io.StringIO()
    save_forest(
        combiner,
        buf,
        feature_names=list(columns),
        extra={"lags": ",".join(str(l) for l in config.lag_hours),
               "model_ids": ",".join(forecasts.model_ids)},
    )
    outputs = {
        os.path.join(args.out, "combined.csv"): _combined_csv_text(
            dataset.timestamps[sel],
            blended,
            simple_average(forecasts)[sel],
            forecasts.values[sel, best_col],
            actual_all[sel],
        ),
        os.path.join(args.out, COMBINER_FILE): buf.getvalue(),
    }
    _publish(outputs, args.force)


def cmd_importance(args) -> None:
    path = os.path.join(args.models, COMBINER_FILE)
    if not os.path.exists(path):
        raise CliError(f"no trained combiner at {path}; run `combine` first")
    forest, feature_names, _extra = load_forest(path)
    if feature_names is None:
        raise CliError(f"{path} carries no feature names")
    order = np.argsort(-forest.feature_importances_, kind="stable")
    rows = ["rank,feature,importance"]
    for r, j in enumerate(order, start=1):
        rows.append(f"{r},{feature_names[j]},{float(forest.feature_importances_[j])!r}")
    _publish({args.out: "\n".join(rows) + "\n"}, args.force)


def cmd_stats(args) -> None:
    site = _load_site(args.site)
    dataset = load_hourly_csv(args.data, site)
    forecasts = _load_forecasts_csv(args.forecasts)

    pos = np.searchsorted(dataset.timestamps, forecasts.timestamps)
    if (
        pos[-1] >= len(dataset.timestamps)
        or not (dataset.timestamps[pos] == forecasts.timestamps).all()
    ):
        raise SchemaError("forecast timestamps are not all present in the dataset")
    mask = dataset.daylight_mask()[pos]
    month_keys = dataset.local_timestamps()[pos].astype("datetime64[M]")
    spread = model_spread_stats(forecasts.values, mask, month_keys)
    rows = ["month,mean_std,mean_corr"]
    for i, month in enumerate(spread.months):
        rows.append(
            f"{month},{float(spread.mean_std[i])!r},{float(spread.mean_corr[i])!r}"
        )
    _publish({args.out: "\n".join(rows) + "\n"}, args.force)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sunstack",
        description="Forecast-combination pipeline: SVR family + forest blender.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, seed_required, out_help):
        p.add_argument("--site", help="site key=value file (default: built-in site)")
        p.add_argument("--out", required=True, help=out_help)
        p.add_argument("--force", action="store_true",
                       help="overwrite existing output files")
        p.add_argument("--seed", type=int, required=seed_required,
                       help="RNG seed; required wherever training occurs")

    def rf_flags(p):
        p.add_argument("--trees", type=int, default=300,
                       help="number of trees in the combiner (default 300)")
        p.add_argument("--min-leaf", type=int, default=5,
                       help="minimum samples per leaf (default 5)")
        p.add_argument("--max-features", type=int, default=None,
                       help="features tried per split (default ceil(p/3))")
        p.add_argument("--lags", default="0,24",
                       help="comma-separated forecast lags in hours (default 0,24)")

    p = sub.add_parser("synth", help="generate a synthetic hourly dataset CSV")
    p.add_argument("--days", type=int, required=True)
    common(p, seed_required=True, out_help="output CSV path")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train-base", help="train and serialize the 24-model family")
    p.add_argument("--data", required=True, help="hourly dataset CSV")
    common(p, seed_required=True, out_help="output directory for .svr files")
    p.set_defaults(func=cmd_train_base)

    p = sub.add_parser("backtest", help="rolling monthly backtest with full report")
    p.add_argument("--data", required=True, help="hourly dataset CSV")
    p.add_argument("--months",
                   help="evaluation months, YYYY-MM or YYYY-MM:YYYY-MM (default: auto)")
    rf_flags(p)
    common(p, seed_required=True, out_help="output directory for report artifacts")
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("combine", help="train one combiner and blend forecasts")
    p.add_argument("--data", required=True, help="hourly dataset CSV")
    p.add_argument("--models", required=True, help="directory of .svr model files")
    p.add_argument("--month", required=True, help="forecast month, YYYY-MM")
    p.add_argument("--train-months",
                   help="combiner training months (default: all history before)")
    rf_flags(p)
    common(p, seed_required=True, out_help="output directory")
    p.set_defaults(func=cmd_combine)

    p = sub.add_parser("importance", help="rank a saved combiner's input columns")
    p.add_argument("--models", required=True,
                   help="directory holding combiner.forest (from `combine`)")
    p.add_argument("--data", help="dataset CSV (unused; accepted for symmetry)")
    common(p, seed_required=False, out_help="output CSV path")
    p.set_defaults(func=cmd_importance)

    p = sub.add_parser("stats", help="monthly spread/correlation of saved forecasts")
    p.add_argument("--data", required=True, help="hourly dataset CSV")
    p.add_argument("--forecasts", required=True,
                   help="long-format forecast CSV (from `backtest`)")
    common(p, seed_required=False, out_help="output CSV path")
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        args.func(args)
    except (CliError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
