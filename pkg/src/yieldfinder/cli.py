"""Command-line entry points.

Exit codes: 0 success, 1 any domain failure, 2 usage errors (click's
default). Commands that read market data always go through the same
pipeline the tests exercise; there is no CLI-only code path.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import evaluation as ev
from .artifacts import Scaler, TrainedModel, dataset_fingerprint, load_model, save_model
from .errors import FixtureMissing, YieldfinderError
from .finance import compute_yield_index, export_index_csv, export_index_geojson
from .forest import forest_fit, forest_predict
from .ingest import (
    FixtureSource,
    LiveSource,
    SearchQuery,
    clean_payload,
    dataset_stats,
    dedupe,
    fetch_page,
    load_dataset,
    parse_record,
    store_dataset,
)
from .model import (
    ForestConfig,
    KernelKind,
    KernelSpec,
    ModelSpec,
    MortgageTerms,
    Operation,
    SvrConfig,
)
from .regression import encode, impute_price_by_area, ols_fit, ols_predict
from .svr import svr_fit, svr_predict


def _domain_errors(f):
    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except YieldfinderError as exc:
            raise click.ClickException(str(exc))

    return wrapper


def _terms_options(f):
    defaults = MortgageTerms.defaults()
    options = [
        click.option("--rate", type=float, default=defaults.monthly_rate, show_default=True,
                     help="Monthly interest rate (e.g. 0.0016)."),
        click.option("--months", type=int, default=defaults.months, show_default=True,
                     help="Loan term in months."),
        click.option("--tcost", type=float, default=defaults.transaction_cost_rate, show_default=True,
                     help="Transaction costs as a fraction of price."),
        click.option("--down", type=float, default=defaults.down_payment_fraction, show_default=True,
                     help="Down payment as a fraction of price."),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def _terms(rate: float, months: int, tcost: float, down: float) -> MortgageTerms:
    return MortgageTerms(
        price=1.0,
        monthly_rate=rate,
        months=months,
        transaction_cost_rate=tcost,
        down_payment_fraction=down,
    )


def _write_output(data: bytes, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.buffer.write(data)
    else:
        Path(out).write_bytes(data)


@click.group()
def main():
    """Rental yield index and rent models over listing datasets."""


@main.command()
@click.option("--fixtures", type=click.Path(exists=True, file_okay=False), default=None,
              help="Directory of checked-in payload files.")
@click.option("--live", is_flag=True, help="Fetch from the vendor API instead of fixtures.")
@click.option("--base-url", envvar="YF_API_BASE", default=None, help="Vendor search endpoint (env YF_API_BASE).")
@click.option("--token", envvar="YF_API_TOKEN", default=None, help="Bearer token (env YF_API_TOKEN).")
@click.option("--operation", "operations", multiple=True, type=click.Choice(["rent", "sale"]),
              default=("rent", "sale"), show_default=True)
@click.option("--pages", type=int, default=None,
              help="Pages per operation. Fixtures default to all present; live defaults to 1.")
@click.option("--center-lat", type=float, default=40.4167, show_default=True)
@click.option("--center-lon", type=float, default=-3.70325, show_default=True)
@click.option("--radius-km", type=float, default=60.0, show_default=True)
@click.option("--property-kind", default=None, help="Vendor property kind filter, e.g. homes.")
@click.option("--page-size", type=int, default=50, show_default=True)
@click.option("--strict", is_flag=True, help="Abort on the first unparseable record instead of skipping.")
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Output dataset (JSONL).")
@_domain_errors
def ingest(fixtures, live, base_url, token, operations, pages, center_lat, center_lon,
           radius_km, property_kind, page_size, strict, out):
    """Fetch, clean, parse, dedupe, and store listings."""
    if live == (fixtures is not None):
        raise click.UsageError("choose exactly one of --fixtures or --live")
    if live:
        if not base_url or not token:
            raise click.UsageError("--live needs --base-url and --token (or YF_API_BASE / YF_API_TOKEN)")
        source = LiveSource(base_url=base_url, token=token)
        max_pages = pages if pages is not None else 1
    else:
        source = FixtureSource(directory=Path(fixtures))
        max_pages = pages

    listings = []
    skipped = 0
    for operation in operations:
        page = 1
        while max_pages is None or page <= max_pages:
            query = SearchQuery(
                operation=Operation.parse(operation),
                center_lat=center_lat,
                center_lon=center_lon,
                radius_km=radius_km,
                property_kind=property_kind,
                page=page,
                page_size=page_size,
            )
            try:
                payload = fetch_page(query, source)
            except FixtureMissing:
                if max_pages is None:
                    break
                raise
            for record in clean_payload(payload):
                try:
                    listings.append(parse_record(record))
                except YieldfinderError as exc:
                    if strict:
                        raise
                    skipped += 1
                    click.echo(f"skipping record on {operation} page {page}: {exc}", err=True)
            page += 1

    unique, removed = dedupe(listings)
    store_dataset(unique, out)
    by_op = {op: sum(1 for l in unique if l.operation.value == op) for op in ("rent", "sale")}
    click.echo(
        f"stored {len(unique)} listings to {out} "
        f"(rent {by_op['rent']}, sale {by_op['sale']}, duplicates removed {removed}, records skipped {skipped})"
    )


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--price-bin", type=float, default=500.0, show_default=True)
@click.option("--size-bin", type=float, default=25.0, show_default=True)
@click.option("--as-json", "as_json", is_flag=True, help="Emit machine-readable JSON.")
@_domain_errors
def stats(dataset, price_bin, size_bin, as_json):
    """Summarize a stored dataset."""
    listings = load_dataset(dataset)
    summary = dataset_stats(listings, price_bin=price_bin, size_bin=size_bin)
    if as_json:
        click.echo(json.dumps(summary.to_dict(), indent=2, sort_keys=True))
        return
    click.echo(f"total listings: {summary.total}")
    for name, op_stats in summary.operations.items():
        click.echo(f"\n{name} ({op_stats.count}):")
        for column, cs in (("price", op_stats.price), ("size", op_stats.size)):
            click.echo(
                f"  {column:<6} mean {cs.mean:>12.2f}  std {cs.std:>12.2f}"
                f"  min {cs.minimum:>10.1f}  max {cs.maximum:>12.1f}"
            )


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@_terms_options
@click.option("--fmt", "fmt", type=click.Choice(["csv", "geojson"]), default="csv", show_default=True)
@click.option("--boundaries", type=click.Path(exists=True, dir_okay=False), default=None,
              help="GeoJSON FeatureCollection of neighborhood polygons (required for geojson output).")
@click.option("--out", default=None, help="Output path; stdout when omitted.")
@_domain_errors
def index(dataset, rate, months, tcost, down, fmt, boundaries, out):
    """Compute the per-neighborhood yield index."""
    listings = load_dataset(dataset)
    cells = compute_yield_index(listings, _terms(rate, months, tcost, down))
    if fmt == "csv":
        _write_output(export_index_csv(cells), out)
        return
    if boundaries is None:
        raise click.UsageError("--fmt geojson needs --boundaries")
    boundary_data = json.loads(Path(boundaries).read_text(encoding="utf-8"))
    _write_output(export_index_geojson(cells, boundary_data), out)


def _kernel_from_options(kernel: str, gamma: float | None, degree: int, coef0: float) -> KernelSpec:
    return KernelSpec(kind=KernelKind(kernel), gamma=gamma, degree=degree, coef0=coef0)


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--model", "model_kind", type=click.Choice(["ols", "forest", "svr"]), required=True)
@click.option("--spec", type=click.IntRange(1, 4), default=3, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--split", type=float, default=0.7, show_default=True, help="Training fraction.")
@click.option("--zscore", type=float, default=None, help="Optional outlier filter threshold.")
@click.option("--trees", type=int, default=100, show_default=True)
@click.option("--mtry", type=int, default=None, help="Features per split; default is p/3 rounded up.")
@click.option("--min-leaf", type=int, default=1, show_default=True)
@click.option("--no-bootstrap", is_flag=True)
@click.option("--kernel", type=click.Choice([k.value for k in KernelKind]), default="radial", show_default=True)
@click.option("--cost", type=float, default=1.0, show_default=True)
@click.option("--epsilon", type=float, default=None, help="Tube half-width; default 0.1*std(y).")
@click.option("--gamma", type=float, default=None, help="Kernel gamma; default 1/n_features.")
@click.option("--degree", type=int, default=3, show_default=True)
@click.option("--coef0", type=float, default=0.0, show_default=True)
@click.option("--tolerance", type=float, default=None, help="KKT stopping tolerance; default scales with std(y).")
@click.option("--max-iterations", type=int, default=200_000, show_default=True)
@click.option("--standardize/--no-standardize", default=True, show_default=True,
              help="Standardize features from training statistics (SVR only).")
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Model artifact path.")
@_domain_errors
def train(dataset, model_kind, spec, seed, split, zscore, trees, mtry, min_leaf, no_bootstrap,
          kernel, cost, epsilon, gamma, degree, coef0, tolerance, max_iterations, standardize, out):
    """Fit one rent model on the training split and save it."""
    listings = load_dataset(dataset)
    spec = ModelSpec(spec)
    rents = ev.prepare_rents(listings, zscore)
    encoded = encode(rents, spec, add_intercept=False)
    plan = ev.train_test_split(encoded.ids, split, seed)
    X_train, y_train, X_test, y_test = ev.split_matrices(encoded, plan)

    scaler = None
    if model_kind == "ols":
        ones_train = np.hstack([np.ones((X_train.shape[0], 1)), X_train])
        ones_test = np.hstack([np.ones((X_test.shape[0], 1)), X_test])
        fit = ols_fit(ones_train, y_train, ("intercept",) + encoded.feature_names, spec=spec)
        train_pred, test_pred = ols_predict(fit, ones_train), ols_predict(fit, ones_test)
        artifact = fit
    elif model_kind == "forest":
        config = ForestConfig(n_trees=trees, mtry=mtry, min_leaf=min_leaf,
                              bootstrap=not no_bootstrap, seed=seed)
        artifact = forest_fit(X_train, y_train, config, feature_names=encoded.feature_names, spec=spec)
        train_pred, test_pred = forest_predict(artifact, X_train), forest_predict(artifact, X_test)
    else:
        config = SvrConfig(
            kernel=_kernel_from_options(kernel, gamma, degree, coef0),
            cost=cost, epsilon=epsilon, tolerance=tolerance, max_iterations=max_iterations,
        )
        if standardize:
            scaler = Scaler.fit(X_train)
            Z_train, Z_test = scaler.transform(X_train), scaler.transform(X_test)
        else:
            Z_train, Z_test = X_train, X_test
        artifact = svr_fit(Z_train, y_train, config, feature_names=encoded.feature_names, spec=spec)
        train_pred, test_pred = svr_predict(artifact, Z_train), svr_predict(artifact, Z_test)
        if not artifact.converged:
            click.echo(f"warning: solver stopped at {artifact.n_iterations} iterations before converging", err=True)

    trained = TrainedModel(
        kind=model_kind,
        spec=spec,
        artifact=artifact,
        scaler=scaler,
        metadata={
            "name": Path(out).stem,
            "seed": seed,
            "split": split,
            "zscore": zscore,
            "dataset_hash": dataset_fingerprint(listings),
            "n_train": len(y_train),
            "n_test": len(y_test),
            "rmse_train": ev.rmse(train_pred, y_train),
            "rmse_test": ev.rmse(test_pred, y_test),
        },
    )
    save_model(trained, out)
    click.echo(
        f"saved {model_kind} (spec {int(spec)}) to {out}; "
        f"train RMSE {trained.metadata['rmse_train']:.2f}, test RMSE {trained.metadata['rmse_test']:.2f} "
        f"({len(y_train)}/{len(y_test)} rows)"
    )


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--spec", "specs", multiple=True, type=click.IntRange(1, 4), default=(1, 2, 3, 4),
              show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--split", type=float, default=0.7, show_default=True)
@click.option("--zscore", type=float, default=None)
@click.option("--no-ols", is_flag=True)
@click.option("--trees", type=int, default=None, help="Include a forest with this many trees.")
@click.option("--kernels", default=None,
              help="Comma-separated SVR kernels to include, e.g. linear,radial.")
@click.option("--standardize/--no-standardize", default=True, show_default=True)
@click.option("--csv-out", default=None, help="Write the comparison table as CSV.")
@click.option("--scatter-dir", type=click.Path(file_okay=False), default=None,
              help="Write per-cell predicted-vs-actual CSVs here.")
@_domain_errors
def evaluate(dataset, specs, seed, split, zscore, no_ols, trees, kernels, standardize,
             csv_out, scatter_dir):
    """Compare models across feature specs on a held-out split."""
    listings = load_dataset(dataset)
    svr_configs = []
    if kernels:
        for name in kernels.split(","):
            svr_configs.append(SvrConfig(kernel=KernelSpec(kind=KernelKind(name.strip()))))
    forest_config = ForestConfig(n_trees=trees, seed=seed) if trees else None
    if scatter_dir:
        Path(scatter_dir).mkdir(parents=True, exist_ok=True)
    result = ev.run_model_suite(
        listings,
        specs=[ModelSpec(s) for s in specs],
        seed=seed,
        fraction=split,
        include_ols=not no_ols,
        forest_config=forest_config,
        svr_configs=svr_configs,
        svr_standardize=standardize,
        z=zscore,
        scatter_dir=scatter_dir,
    )
    click.echo(result.table_text())
    for model, spec, message in result.failures:
        click.echo(f"failed: {model} spec {spec}: {message}", err=True)
    if csv_out:
        Path(csv_out).write_bytes(result.table_csv())


@main.command("grid-search")
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--spec", type=click.IntRange(1, 4), default=4, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--split", type=float, default=0.7, show_default=True)
@click.option("--trees", default=",".join(str(t) for t in ev.DEFAULT_TREES_GRID), show_default=True)
@click.option("--mtry", default=",".join(str(m) for m in ev.DEFAULT_MTRY_GRID), show_default=True)
@click.option("--zscore", default=",".join(str(z) for z in ev.DEFAULT_Z_GRID), show_default=True)
@click.option("--top", type=int, default=10, show_default=True)
@click.option("--csv-out", default=None)
@_domain_errors
def grid_search(dataset, spec, seed, split, trees, mtry, zscore, top, csv_out):
    """Sweep forest hyperparameters and report cells ranked by test RMSE."""
    listings = load_dataset(dataset)
    result = ev.grid_search_forest(
        listings,
        ModelSpec(spec),
        seed=seed,
        trees_grid=[int(t) for t in trees.split(",")],
        mtry_grid=[int(m) for m in mtry.split(",")],
        z_grid=[float(z) for z in zscore.split(",")],
        fraction=split,
    )
    click.echo(f"{'n_trees':>8} {'mtry':>5} {'z':>6} {'rmse_test':>12}")
    for report in result.reports[:top]:
        p = report.params
        click.echo(f"{p['n_trees']:>8} {p['mtry']:>5} {p['z']:>6} {report.rmse_test:>12.2f}")
    if result.failures:
        click.echo(f"({len(result.failures)} cells failed; first: {result.failures[0][1]})", err=True)
    if csv_out:
        Path(csv_out).write_bytes(ev.grid_report_csv(result))


@main.command("rank-yield")
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Trained model artifact.")
@_terms_options
@click.option("--limit", type=int, default=20, show_default=True)
@click.option("--csv-out", default=None)
@_domain_errors
def rank_yield(dataset, model_path, rate, months, tcost, down, limit, csv_out):
    """Rank sale listings by predicted rent over monthly mortgage."""
    listings = load_dataset(dataset)
    trained = load_model(model_path)
    result = ev.implied_yield_ranking(listings, trained, _terms(rate, months, tcost, down), limit=limit)
    click.echo(f"{'id':>10} {'neighborhood':<22} {'price':>12} {'pred rent':>10} {'mortgage':>10} {'index':>7}")
    for row in result.rows:
        click.echo(
            f"{row.id:>10} {row.neighborhood:<22.22} {row.price:>12.0f}"
            f" {row.predicted_rent:>10.2f} {row.monthly_mortgage:>10.2f} {row.implied_index:>7.3f}"
        )
    if result.skipped_ids:
        click.echo(f"({len(result.skipped_ids)} sale listings lacked required features)", err=True)
    if csv_out:
        Path(csv_out).write_bytes(ev.ranking_csv(result))


@main.command()
@click.option("--dataset", envvar="YF_DATASET", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Dataset JSONL (env YF_DATASET).")
@click.option("--boundaries", envvar="YF_BOUNDARIES", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Boundary GeoJSON (env YF_BOUNDARIES).")
@click.option("--model", "model_paths", multiple=True, type=click.Path(exists=True, dir_okay=False),
              help="Model artifacts to expose; repeatable.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8787, show_default=True)
@_domain_errors
def serve(dataset, boundaries, model_paths, host, port):
    """Run the HTTP API over a dataset snapshot."""
    from .service import load_state
    from .service import serve as run_server

    state = load_state(dataset, boundaries_path=boundaries, model_paths=model_paths)
    click.echo(f"serving {len(state.listings)} listings with {len(state.models)} model(s) on {host}:{port}")
    run_server(state, host=host, port=port)


if __name__ == "__main__":
    main()
