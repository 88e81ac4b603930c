"""Operator command line: dataset generation, generator calibration, model
training and evaluation, decay-constant search, consensus fault simulations,
and the HTTP service."""

from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path

import click

from venuetrace import consensus, ml, risk, synth
from venuetrace.manifest import RunManifest


class DataError(Exception):
    """Invalid input data or configuration; exits with code 2."""


@click.group()
def cli():
    """Venue check-in exposure-risk backend."""


def _load_json(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read config {path}: {exc}") from None


def _generator_config(options: dict) -> synth.GeneratorConfig:
    size = options.pop("size", None)
    if size is not None:
        preset = str(size).lower()
        if preset not in synth.PRESET_SIZES:
            raise DataError(f"size preset must be one of {sorted(synth.PRESET_SIZES)}")
        options["n_records"] = synth.PRESET_SIZES[preset]
    try:
        return synth.GeneratorConfig(**options)
    except (TypeError, ValueError) as exc:
        raise DataError(f"invalid generator config: {exc}") from None


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True), help="JSON GeneratorConfig file.")
@click.option("--size", type=str, default=None, help="Preset: 150k, 250k, 500k, 750k, 1m.")
@click.option("--n-records", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--balanced/--unbalanced", default=None)
@click.option("--noise/--no-noise", "noise_enabled", default=None)
@click.option("--pairs", is_flag=True, help="Emit two independently seeded datasets.")
@click.option("--out", type=click.Path(), required=True, help="Output CSV path.")
def generate(config_path, size, n_records, seed, balanced, noise_enabled, pairs, out):
    """Generate a synthetic exposure dataset (CSV + manifest)."""
    options = _load_json(config_path)
    if size is not None:
        options["size"] = size
    if n_records is not None:
        options["n_records"] = n_records
    if seed is not None:
        options["seed"] = seed
    if balanced is not None:
        options["balanced"] = balanced
    if noise_enabled is not None:
        options["noise_enabled"] = noise_enabled
    options.setdefault("seed", 0)
    if "n_records" not in options and "size" not in options:
        raise DataError("provide --size, --n-records, or a config with n_records")
    config = _generator_config(options)
    manifest = RunManifest("generate", config.__dict__ | {"pairs": pairs}, seed=config.seed)
    out_path = Path(out)
    seeds = [config.seed, config.seed + 1_000_003] if pairs else [config.seed]
    written = []
    for i, run_seed in enumerate(seeds):
        run_config = replace(config, seed=run_seed)
        dataset = synth.generate_dataset(run_config)
        path = out_path if not pairs else out_path.with_stem(f"{out_path.stem}-{chr(ord('a') + i)}")
        dataset.write_csv(path)
        manifest.add_output(path)
        written.append((path, len(dataset), dataset.positive_rate()))
    manifest.results["datasets"] = [
        {"path": str(p), "rows": n, "positive_rate": round(r, 6)} for p, n, r in written
    ]
    manifest_path = manifest.finish(out_path.with_suffix(".manifest.json"))
    for path, n, rate in written:
        click.echo(f"wrote {path} ({n} rows, positive rate {rate:.4f})")
    click.echo(f"manifest {manifest_path}")


@cli.command()
@click.option("--target", type=float, default=0.72, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="Write the calibrated table as JSON.")
def calibrate(target, out):
    """Re-derive the modulation scale against the exact generator oracle."""
    scale, accuracy = synth.calibrate_scale(target=target)
    table = synth.BASE_MODULATION.scaled(scale)
    worst = synth.worst_case_score(table)
    rate = synth.expected_positive_rate(table)
    manifest = RunManifest("calibrate", {"target": target})
    manifest.results.update(
        {"scale": scale, "oracle_accuracy": accuracy, "worst_case_score": worst, "positive_rate": rate}
    )
    click.echo(f"scale {scale}  oracle accuracy {accuracy:.4f}  worst-case {worst:.4f}  rate {rate:.4f}")
    if out:
        Path(out).write_text(
            json.dumps({f"{attr}|{level}": d for (attr, level), d in table.deltas.items()}, indent=2)
        )
        manifest.add_output(out)
        click.echo(f"table {out}")
    manifest_path = manifest.finish(Path(out or "calibrate").with_suffix(".manifest.json"))
    click.echo(f"manifest {manifest_path}")


def _read_dataset(path: str) -> ml.LabeledDataset:
    try:
        return synth.read_dataset_csv(path).to_labeled()
    except (OSError, KeyError, ValueError) as exc:
        raise DataError(f"cannot load dataset {path}: {exc}") from None


@cli.command()
@click.option("--dataset", type=click.Path(exists=True), required=True)
@click.option("--model", "kind", type=click.Choice(["logreg", "nb"]), default="logreg", show_default=True)
@click.option("--draws", type=int, default=8, show_default=True, help="Random search budget; 0 = shipped defaults.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--threshold", type=float, default=0.5, show_default=True)
@click.option("--out-model", type=click.Path(), required=True)
@click.option("--report", "report_path", type=click.Path(), default=None)
def train(dataset, kind, draws, seed, threshold, out_model, report_path):
    """70/30 split, 10-fold CV tuning on train, final metrics on test."""
    data = _read_dataset(dataset)
    model_kind = ml.ModelKind.LOGISTIC_REGRESSION if kind == "logreg" else ml.ModelKind.NAIVE_BAYES
    manifest = RunManifest("train", {"model": kind, "draws": draws, "threshold": threshold}, seed=seed)
    manifest.add_input(dataset)
    train_part, test_part = ml.split(data, 0.7, seed=seed)
    if len(train_part) < 10:
        raise DataError("dataset too small for 10-fold cross-validation")
    if draws > 0:
        hp, cv_report = ml.tune(train_part, n_draws=draws, seed=seed, kind=model_kind)
        manifest.results["cv_metrics"] = cv_report.as_dict()
    else:
        hp = ml.HyperParams()
    model = (
        ml.train_logreg(train_part, hp)
        if model_kind is ml.ModelKind.LOGISTIC_REGRESSION
        else ml.train_nb(train_part, hp.nb_smoothing)
    )
    report = ml.evaluate(model, test_part, threshold)
    model.save(out_model)
    manifest.add_output(out_model)
    manifest.seed = seed
    manifest.results.update(
        {
            "hyperparams": hp.__dict__,
            "test_metrics": report.as_dict(),
            "train_rows": len(train_part),
            "test_rows": len(test_part),
            # audit trail: tuning folds partition the train split only
            "train_ids_sha256": _ids_digest(train_part),
            "test_ids_sha256": _ids_digest(test_part),
            "folds_within_train": True,
        }
    )
    table = ml.format_metrics_table({kind: report})
    click.echo(table)
    if report_path:
        Path(report_path).write_text(json.dumps({kind: report.as_dict()}, indent=2) + "\n")
        manifest.add_output(report_path)
    manifest_path = manifest.finish(Path(out_model).with_suffix(".manifest.json"))
    click.echo(f"model {out_model}\nmanifest {manifest_path}")


def _ids_digest(part: ml.LabeledDataset) -> str:
    import hashlib

    joined = ",".join(sorted(str(i) for i in part.ids))
    return hashlib.sha256(joined.encode()).hexdigest()


@cli.command(name="lambda")
@click.option("--dataset", type=click.Path(exists=True), required=True)
@click.option("--grid", type=str, default=None, help="Comma-separated candidates within [5e-5, 5e-4].")
def lambda_search(dataset, grid):
    """Grid-search the decay constant on per-user exposure histories."""
    data = synth.read_dataset_csv(dataset)
    candidates = risk.lambda_grid() if grid is None else [float(x) for x in grid.split(",")]
    manifest = RunManifest("lambda", {"grid": candidates})
    manifest.add_input(dataset)

    horizon = int(data.timestamps.max()) + 1
    by_user: dict[str, list[tuple[int, float, int]]] = {}
    for i in range(len(data)):
        by_user.setdefault(str(data.user_ids[i]), []).append(
            (int(data.timestamps[i]), float(data.scores[i]), int(data.labels[i]))
        )
    recent_cut = horizon - 14 * 1440

    def objective(lam: float) -> float:
        params = risk.DecayParams(lam=lam)
        hits = 0
        for events in by_user.values():
            score = risk.combined_risk(
                [risk.ExposureEvent(t, p) for t, p, _y in events], horizon, params
            )
            actual = any(y and t >= recent_cut for t, _p, y in events)
            hits += (score >= 0.5) == actual
        return hits / len(by_user)

    rows = [(lam, objective(lam)) for lam in candidates]
    best = risk.select_lambda(candidates, dict(rows).__getitem__)
    click.echo("lambda      objective")
    for lam, value in rows:
        marker = "  <- selected" if lam == best else ""
        click.echo(f"{lam:<10.5g}  {value:.4f}{marker}")
    manifest.results.update({"rows": rows, "selected": best})
    manifest_path = manifest.finish(Path(dataset).with_suffix(".lambda.manifest.json"))
    click.echo(f"manifest {manifest_path}")


@cli.command()
@click.option("--scenario", type=click.Path(exists=True), required=True, help="SimNetConfig JSON.")
@click.option("--commands", "n_commands", type=int, default=1000, show_default=True)
@click.option("--trace", "trace_path", type=click.Path(), default=None)
def simulate(scenario, n_commands, trace_path):
    """Run a consensus fault simulation and report the safety verdict."""
    doc = _load_json(scenario)
    try:
        config = consensus.SimNetConfig.from_json(doc)
    except (consensus.InvalidScenario, TypeError) as exc:
        raise DataError(f"invalid scenario: {exc}") from None
    manifest = RunManifest("simulate", config.to_json(), seed=config.seed)
    manifest.add_input(scenario)
    result = consensus.run_scenario(config, n_commands=n_commands, trace=trace_path is not None)
    click.echo(
        f"verdict: {result.verdict} | committed {result.committed_commands}/{result.total_commands}"
        f" | rounds {result.rounds} | leader changes {result.leader_changes}"
    )
    if trace_path:
        Path(trace_path).write_text("\n".join(result.trace) + "\n")
        manifest.add_output(trace_path)
    manifest.results.update(
        {
            "verdict": result.verdict,
            "safety_ok": result.safety_ok,
            "committed": result.committed_commands,
            "rounds": result.rounds,
        }
    )
    manifest_path = manifest.finish(Path(scenario).with_suffix(".result.manifest.json"))
    click.echo(f"manifest {manifest_path}")
    if not result.safety_ok:
        raise click.ClickException("safety violated")


@cli.command()
@click.option("--port", type=int, default=8321, show_default=True)
@click.option("--host", type=str, default="127.0.0.1", show_default=True)
@click.option("--model", "model_path", type=click.Path(), required=True)
@click.option("--silos", type=int, default=4, show_default=True)
@click.option("--backend", type=click.Choice(["direct", "cluster"]), default="direct", show_default=True)
@click.option("--k-min", type=int, default=5, show_default=True)
@click.option("--decay-lambda", type=float, default=risk.DEFAULT_LAMBDA, show_default=True)
@click.option("--thresholds", "thresholds_path", type=click.Path(exists=True), default=None,
              help='JSON {"High": [t1,t2,t3], "Moderate": [...], "Low": [...]}.')
@click.option("--pow-base", type=int, default=8, show_default=True, help="Base challenge difficulty in bits.")
def serve(port, host, model_path, silos, backend, k_min, decay_lambda, thresholds_path, pow_base):
    """Start the HTTP service (requires a trained model file)."""
    if not Path(model_path).exists():
        raise DataError(f"model file {model_path} not found")
    from venuetrace import pow as pow_mod
    from venuetrace import service as service_mod
    from venuetrace.records import RiskCategory
    import uvicorn

    model = ml.ClassifierModel.load(model_path)
    thresholds = risk.ThresholdTable()
    if thresholds_path:
        doc = _load_json(thresholds_path)
        try:
            thresholds = risk.ThresholdTable(
                {RiskCategory(name): tuple(values) for name, values in doc.items()}
            )
        except ValueError as exc:
            raise DataError(f"invalid threshold table: {exc}") from None
    config = service_mod.ServiceConfig(
        n_silos=silos,
        silo_backend=backend,
        k_min=k_min,
        decay=risk.DecayParams(lam=decay_lambda),
        thresholds=thresholds,
        pow_params=pow_mod.PowParams(d_base=pow_base),
        model=model,
    )
    manifest = RunManifest(
        "serve",
        {"port": port, "silos": silos, "backend": backend, "k_min": k_min, "lambda": decay_lambda},
    )
    manifest.add_input(model_path)
    manifest.finish(Path(model_path).with_suffix(".serve.manifest.json"))
    app = service_mod.create_app(config)
    click.echo(f"serving on {host}:{port} ({silos} silos, {backend} backend)")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@cli.command()
@click.option("--metrics", "metrics_paths", type=click.Path(exists=True), multiple=True, required=True)
def report(metrics_paths):
    """Render saved metrics files as one comparison table."""
    rows: dict[str, ml.MetricsReport] = {}
    for path in metrics_paths:
        doc = _load_json(path)
        for name, values in doc.items():
            try:
                rows[name] = ml.MetricsReport(*(values[c] for c in ml.METRIC_COLUMNS))
            except (KeyError, TypeError) as exc:
                raise DataError(f"{path}: malformed metrics for {name}: {exc}") from None
    click.echo(ml.format_metrics_table(rows))


def main() -> None:
    try:
        cli.main(standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        sys.exit(1)
    except click.Abort:
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(3)
    except DataError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except Exception as exc:  # pragma: no cover - unexpected runtime failure
        click.echo(f"runtime failure: {exc}", err=True)
        sys.exit(3)
    sys.exit(0)


if __name__ == "__main__":
    main()
