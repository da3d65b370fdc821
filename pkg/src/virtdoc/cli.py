"""Operator command line: data generation, training, evaluation, sweeps,
one-shot prediction, scripted session simulation, and serving.

Exit codes: 0 ok, 2 usage/config, 3 data error, 4 numeric failure. Errors are
printed as a single machine-parsable line on stderr.
"""

from __future__ import annotations

import functools
import json
import os
import sys

import click

from . import evaluation, sensors
from .anamnesis import AnamnesisAnswers, AnamnesisMachine, AdjustmentConfig, adjust_probability, decide, render_report
from .artifact import artifact_dict, cohort_file_hash, load_artifact, save_artifact
from .dataset import (
    PatientRecord,
    SplitSpec,
    generate_synthetic_cohort,
    ingest_csv,
    split,
    write_csv,
)
from .errors import ConfigError, InvalidConfigError, NumericError, VirtdocError
from .neuralnet import NetworkConfig, predict_scores
from .numerics import clamp_probability
from .pipeline import train_pipeline


def _fail(exc: BaseException, code: int) -> None:
    click.echo(f"error[{type(exc).__name__}]: {exc}", err=True)
    sys.exit(code)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            _fail(exc, 2)
        except NumericError as exc:
            _fail(exc, 4)
        except VirtdocError as exc:
            _fail(exc, 3)
        except OSError as exc:
            _fail(exc, 3)
    return wrapper


def _parse_grid(text: str) -> list[int]:
    """Parse grid specs like '1-20' or '1,2,3' or '1,5-8'."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, _, hi = part.partition("-")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise InvalidConfigError(f"empty grid spec {text!r}")
    return out


def _parse_answers(text: str) -> AnamnesisAnswers:
    fields: dict[str, str] = {}
    for part in text.split(","):
        key, sep, value = part.partition("=")
        if not sep:
            raise InvalidConfigError(f"bad answer {part!r}; expected key=value")
        fields[key.strip()] = value.strip()
    expected = {"polyuria", "polydipsia", "alcohol", "tobacco"}
    if set(fields) != expected:
        raise InvalidConfigError(f"answers must set exactly {sorted(expected)}")
    try:
        return AnamnesisAnswers(
            polyuria=fields["polyuria"],
            polydipsia=fields["polydipsia"],
            alcohol=int(fields["alcohol"]),
            tobacco=int(fields["tobacco"]),
        )
    except ValueError as exc:
        raise InvalidConfigError(f"bad answers {text!r}: {exc}") from exc


def _hidden_layers(layers: int, widths: str) -> tuple[int, ...]:
    parsed = [int(w.strip()) for w in widths.split(",") if w.strip()]
    if len(parsed) == 1:
        parsed = parsed * layers
    if len(parsed) != layers:
        raise InvalidConfigError(
            f"--widths lists {len(parsed)} values but --layers is {layers}"
        )
    return tuple(parsed)


@click.group()
def main():
    """Virtual doctor toolkit."""


@main.command("gen-data")
@click.option("--n", type=int, required=True, help="Cohort size (>= 100).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--with-hba1c", is_flag=True, help="Include label-conditional hba1c values.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@handle_errors
def gen_data(n, seed, with_hba1c, out):
    """Write a synthetic cohort CSV."""
    cohort = generate_synthetic_cohort(n, seed=seed, with_hba1c=with_hba1c)
    write_csv(cohort, out)
    prevalence = float(cohort.labels.mean())
    click.echo(f"wrote {len(cohort)} records to {out} (prevalence {prevalence:.3f})")


@main.command("train")
@click.option("--data", required=True, type=click.Path(dir_okay=False))
@click.option("--features", type=click.Choice(["basic", "hba1c"]), default="basic", show_default=True)
@click.option("--layers", type=int, default=1, show_default=True, help="Number of hidden layers.")
@click.option("--widths", default="10", show_default=True, help="Hidden widths, comma separated.")
@click.option("--epochs", type=int, default=100, show_default=True)
@click.option("--learning-rate", type=float, default=0.1, show_default=True)
@click.option("--batch-size", type=int, default=32, show_default=True)
@click.option("--momentum", type=float, default=0.9, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--train-fraction", type=float, default=0.8, show_default=True)
@click.option("--balance/--no-balance", default=True, show_default=True)
@click.option("--calibrate", type=click.Choice(["guess", "platt"]), default="guess", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@handle_errors
def train_cmd(data, features, layers, widths, epochs, learning_rate, batch_size,
              momentum, seed, train_fraction, balance, calibrate, out):
    """Split, balance, normalize, train, calibrate, and write a model artifact."""
    feature_set = "with_hba1c" if features == "hba1c" else "basic"
    hidden = _hidden_layers(layers, widths)
    cohort = ingest_csv(data)
    config = NetworkConfig(
        input_dim=1,  # replaced by the pipeline from the feature set
        hidden_layers=hidden,
        epochs=epochs,
        learning_rate=learning_rate,
        batch_size=batch_size,
        momentum=momentum,
        seed=seed,
    )
    result = train_pipeline(
        cohort,
        feature_set=feature_set,
        config=config,
        split_spec=SplitSpec(train_fraction=train_fraction, seed=seed),
        calibrate=calibrate,
        balance=balance,
    )
    doc = artifact_dict(
        result.network,
        result.calibration,
        result.calibration_method,
        data_hash=cohort_file_hash(data),
        extra_metadata={
            "train_fraction": train_fraction,
            "balance": balance,
            "n_train": result.n_train,
            "n_test": result.n_test,
            "test_auc": result.test_auc,
            "test_ece_raw": result.test_ece_raw,
            "test_ece_calibrated": result.test_ece_calibrated,
        },
    )
    save_artifact(out, doc)
    click.echo(
        f"trained {feature_set} model: test AUC {result.test_auc:.4f}, "
        f"ECE raw {result.test_ece_raw:.4f} -> calibrated {result.test_ece_calibrated:.4f}; "
        f"artifact written to {out}"
    )


@main.command("evaluate")
@click.option("--model", required=True, type=click.Path(dir_okay=False))
@click.option("--data", required=True, type=click.Path(dir_okay=False))
@click.option("--repeats", type=int, default=5, show_default=True)
@click.option("--permutations", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-prefix", required=True)
@handle_errors
def evaluate_cmd(model, data, repeats, permutations, seed, out_prefix):
    """ROC CSV, AUC distribution, one-sided t-test, and permutation p-value."""
    art = load_artifact(model)
    cohort = ingest_csv(data)
    feature_set = art.network.feature_set

    _, test_cohort = split(cohort, SplitSpec(seed=seed))
    scores = predict_scores(art.network, test_cohort)
    labels = test_cohort.labels
    roc = evaluation.roc_curve(scores, labels)
    with open(f"{out_prefix}_roc.csv", "w", encoding="utf-8") as fh:
        fh.write("fpr,tpr,threshold\n")
        for fpr, tpr, thr in roc.points:
            fh.write(f"{fpr!r},{tpr!r},{thr!r}\n")

    perm = evaluation.permutation_test(scores, labels, n_permutations=permutations, seed=seed)
    aucs = evaluation.auc_distribution(
        cohort, art.network.config, repeats=repeats, seed=seed, feature_set=feature_set
    )
    with open(f"{out_prefix}_aucs.csv", "w", encoding="utf-8") as fh:
        fh.write("repeat,auc\n")
        for i, value in enumerate(aucs):
            fh.write(f"{i},{value!r}\n")
    t_stat, t_p = evaluation.auc_t_test(aucs)

    stats = {
        "test_auc": roc.auc,
        "permutation_p": perm.p_value,
        "auc_distribution_mean": sum(aucs) / len(aucs),
        "t_statistic": t_stat,
        "t_p_value": t_p,
        "repeats": repeats,
        "permutations": permutations,
    }
    with open(f"{out_prefix}_stats.json", "w", encoding="utf-8") as fh:
        json.dump(stats, fh, indent=2, sort_keys=True)
        fh.write("\n")
    click.echo(
        f"test AUC {roc.auc:.4f}; permutation p {perm.p_value:.4g}; "
        f"t-test vs 0.5: t={t_stat:.3f}, p={t_p:.4g}"
    )


@main.command("sweep")
@click.option("--data", required=True, type=click.Path(dir_okay=False))
@click.option("--depths", default="1,2,3", show_default=True)
@click.option("--widths", default="1-20", show_default=True)
@click.option("--repeats", type=int, default=5, show_default=True)
@click.option("--epochs", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@handle_errors
def sweep_cmd(data, depths, widths, repeats, epochs, seed, out):
    """Mean test AUC over the hidden-layer grid (CSV: width,depth,mean_auc)."""
    cohort = ingest_csv(data)
    config = NetworkConfig(input_dim=1, hidden_layers=(1,), epochs=epochs, seed=seed)
    result = evaluation.sweep(
        cohort, config,
        depths=_parse_grid(depths), widths=_parse_grid(widths),
        repeats=repeats, seed=seed,
        feature_set=cohort.feature_set,
    )
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("width,depth,mean_auc\n")
        for point in result.points:
            fh.write(f"{point.width},{point.depth},{point.mean_auc!r}\n")
    click.echo(f"wrote {len(result.points)} grid points to {out}")


@main.command("predict")
@click.option("--model", required=True, type=click.Path(dir_okay=False))
@click.option("--sex", type=click.Choice(["male", "female"]), required=True)
@click.option("--age", type=int, required=True)
@click.option("--weight", type=float, default=None, help="Weight in kg (with --height).")
@click.option("--height", type=float, default=None, help="Height in meters (with --weight).")
@click.option("--bmi", "bmi_opt", type=float, default=None, help="BMI, if weight/height not given.")
@click.option("--answers", default="polyuria=no,polydipsia=no,alcohol=1,tobacco=1",
              show_default=True, help="Interview answers as key=value pairs.")
@handle_errors
def predict_cmd(model, sex, age, weight, height, bmi_opt, answers):
    """One-shot risk prediction without the service."""
    art = load_artifact(model)
    if weight is not None and height is not None:
        bmi_value = sensors.bmi(weight, height)
    elif bmi_opt is not None:
        bmi_value = bmi_opt
    else:
        raise InvalidConfigError("provide either --bmi or both --weight and --height")
    try:
        record = PatientRecord(
            sex=sex, age=age, bmi=bmi_value, label=0,
            height_m=height, weight_kg=weight,
        )
    except ValueError as exc:
        raise InvalidConfigError(str(exc)) from exc
    raw, base = art.score_record(record)
    parsed = _parse_answers(answers)
    cfg = AdjustmentConfig()
    adjusted = adjust_probability(clamp_probability(base), parsed, cfg)
    click.echo(f"bmi={bmi_value:.2f}")
    click.echo(f"raw_score={raw:.6f}")
    click.echo(f"base_probability={base:.6f}")
    click.echo(f"adjusted_probability={adjusted:.6f}")
    click.echo(f"decision={decide(adjusted, cfg).value}")


@main.command("simulate-session")
@click.option("--model", required=True, type=click.Path(dir_okay=False))
@click.option("--script", required=True, type=click.Path(dir_okay=False),
              help="JSON array of {'utterance': ...} | {'frame': ...} in workflow order.")
@handle_errors
def simulate_session(model, script):
    """Replay a scripted transcript through the state machine; print the report."""
    art = load_artifact(model)
    machine = AnamnesisMachine(art.session_predictor())
    with open(script, encoding="utf-8") as fh:
        items = json.load(fh)
    session = machine.new_session("sim")
    for i, item in enumerate(items):
        if not isinstance(item, dict) or len(item) != 1:
            raise InvalidConfigError(f"script item {i} must be an object with one key")
        if "utterance" in item:
            session = machine.handle_text(session, item["utterance"])
        elif "frame" in item:
            session = machine.advance(session, sensors.parse_frame(item["frame"]))
        else:
            raise InvalidConfigError(f"script item {i} must be 'utterance' or 'frame'")
    report = render_report(session)
    click.echo(json.dumps(report.to_dict(), indent=2, sort_keys=True))


@main.command("serve")
@click.option("--model", required=True, type=click.Path(dir_okay=False))
@click.option("--port", type=int, default=8080, show_default=True,
              help="Listen port; the VIRTDOC_PORT env var overrides this.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", required=True, type=click.Path(file_okay=False))
@handle_errors
def serve_cmd(model, port, host, data_dir):
    """Start the HTTP session service."""
    import uvicorn

    from .service import create_app

    port = int(os.environ.get("VIRTDOC_PORT", port))
    app = create_app(model, data_dir)
    click.echo(f"serving model {model} on {host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
