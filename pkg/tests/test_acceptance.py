"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with -s to see them as they complete).

The published headline metrics come from a non-public cohort, so criteria
combine exact property checks with qualitative reproductions on the
synthetic cohort.
"""

import os
import socket
import subprocess
import sys
import time
from dataclasses import replace

import httpx
import numpy as np
from click.testing import CliRunner

from virtdoc import calibration, evaluation, neuralnet, sensors
from virtdoc.anamnesis import AdjustmentConfig, Decision, decide
from virtdoc.cli import main as cli_main
from virtdoc.dataset import (
    FEATURE_SETS,
    Cohort,
    SplitSpec,
    balance_subsample,
    feature_matrix,
    fit_normalization,
    generate_synthetic_cohort,
    split,
)
from virtdoc.numerics import sigmoid
from conftest import canonical_script_items


def _criterion(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"ACCEPTANCE {name}: {status}{suffix}")
    assert ok, f"{name}{suffix}"


def _shuffle_labels(cohort: Cohort, seed: int) -> Cohort:
    rng = np.random.default_rng(seed)
    labels = rng.permutation(cohort.labels)
    return Cohort(
        records=tuple(replace(r, label=int(l)) for r, l in zip(cohort.records, labels)),
        name=f"{cohort.name}-shuffled",
    )


def test_formula_exactness():
    height = sensors.height_from_distance(25.2)
    bmi = sensors.bmi(86.2, 1.748)
    cohort = generate_synthetic_cohort(500, seed=1)
    stats = fit_normalization(cohort, FEATURE_SETS["basic"])
    from virtdoc.dataset import apply_normalization

    Z = apply_normalization(cohort, stats)
    ok = (
        abs(height - 1.748) < 1e-12
        and abs(bmi - 28.2) < 0.05
        and np.all(np.abs(Z.mean(axis=0)) < 1e-9)
        and np.all(np.abs(Z.std(axis=0, ddof=1) - 1.0) < 1e-9)
    )
    _criterion("formula-exactness", ok,
               f"height={height:.4f}, bmi={bmi:.3f}")


def test_gradient_oracle():
    rng = np.random.default_rng(321)
    worst = 0.0
    for i in range(100):
        depth = int(rng.integers(1, 4))
        hidden = tuple(int(rng.integers(1, 8)) for _ in range(depth))
        dim = int(rng.integers(2, 6))
        cfg = neuralnet.NetworkConfig(input_dim=dim, hidden_layers=hidden, seed=i)
        net = neuralnet.init_network(cfg)
        for W in net.weights:
            W += rng.normal(0, 0.5, W.shape)
        sample = (rng.normal(size=dim), float(rng.integers(0, 2)))
        worst = max(worst, neuralnet.gradient_check(net, sample))
    _criterion("gradient-oracle", worst < 1e-4, f"max rel err {worst:.2e}")


def test_auc_oracle():
    from test_evaluation import brute_force_auc

    rng = np.random.default_rng(55)
    exact = True
    for _ in range(200):
        n = int(rng.integers(4, 51))
        labels = np.zeros(n, int)
        labels[: int(rng.integers(1, n))] = 1
        rng.shuffle(labels)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        scores = np.round(rng.random(n), 1)  # heavy ties
        if evaluation.auc(scores, labels) != brute_force_auc(scores, labels):
            exact = False
            break
    _criterion("auc-oracle", exact, "rank AUC == pair counting on 200 instances")


def test_delong_sanity():
    rng = np.random.default_rng(0)
    scores = rng.random(60)
    labels = (rng.random(60) < 0.4).astype(int)
    labels[0], labels[1] = 0, 1
    self_cmp = evaluation.delong_test(scores, scores, labels, sided="two")

    rng = np.random.default_rng(7)
    n = 2000
    x = rng.normal(0, 1, n)
    y = (rng.random(n) < sigmoid(2 * x)).astype(int)
    scores_a = sigmoid(2 * x)
    scores_b = sigmoid(2 * x + rng.normal(0, 2.5, n))
    better = evaluation.delong_test(scores_a, scores_b, y, sided="one")

    ok = (
        self_cmp.z == 0.0 and self_cmp.p_value == 1.0
        and better.auc_a > better.auc_b and better.p_value < 0.05
    )
    _criterion("delong-sanity", ok,
               f"self p={self_cmp.p_value}, constructed one-sided p={better.p_value:.2e}")


def test_permutation_and_t_test_null_behavior():
    base = generate_synthetic_cohort(600, seed=3)
    config = neuralnet.NetworkConfig(input_dim=1, hidden_layers=(4,), epochs=15, seed=0)
    t_ok = 0
    perm_ok = 0
    for trial in range(100):
        shuffled = _shuffle_labels(base, seed=trial)
        aucs = evaluation.auc_distribution(shuffled, config, repeats=5, seed=trial)
        try:
            _, t_p = evaluation.auc_t_test(aucs)
        except Exception:
            t_p = 1.0
        if t_p > 0.05:
            t_ok += 1
        perm_p = _pipeline_permutation_p(shuffled, config, trial, n_permutations=300)
        if perm_p > 0.05:
            perm_ok += 1

    aucs_info = evaluation.auc_distribution(base, config, repeats=5, seed=1234)
    _, t_p_info = evaluation.auc_t_test(aucs_info)
    perm_p_info = _pipeline_permutation_p(base, config, 1234, n_permutations=999)

    ok = t_ok >= 90 and perm_ok >= 90 and t_p_info <= 0.05 and perm_p_info <= 0.05
    _criterion(
        "permutation-t-test-null", ok,
        f"null: t {t_ok}/100, perm {perm_ok}/100; informative: "
        f"t p={t_p_info:.2e}, perm p={perm_p_info:.4f}",
    )


def _pipeline_permutation_p(cohort, config, seed, n_permutations):
    train_c, test_c = split(cohort, SplitSpec(seed=seed))
    train_c = balance_subsample(train_c, seed=seed)
    stats = fit_normalization(train_c, FEATURE_SETS["basic"])
    cfg = replace(config, input_dim=3, seed=seed)
    net = neuralnet.init_network(cfg, norm_stats=stats)
    X, y = feature_matrix(train_c, stats)
    trained, _ = neuralnet.train(net, X, y, cfg)
    X_test, y_test = feature_matrix(test_c, stats)
    scores = neuralnet.forward_batch(trained, X_test)
    return evaluation.permutation_test(
        scores, y_test.astype(int), n_permutations=n_permutations, seed=seed
    ).p_value


def test_hba1c_ordering():
    cohort = generate_synthetic_cohort(4814, seed=7, with_hba1c=True)
    config = neuralnet.NetworkConfig(input_dim=1, hidden_layers=(10,), epochs=100, seed=0)
    basic = evaluation.auc_distribution(cohort, config, repeats=5, seed=42,
                                        feature_set="basic")
    enriched = evaluation.auc_distribution(cohort, config, repeats=5, seed=42,
                                           feature_set="with_hba1c")
    gap = float(np.mean(enriched) - np.mean(basic))
    _, t_p = evaluation.auc_t_test(basic)
    ok = gap >= 0.05 and t_p < 0.01
    _criterion(
        "hba1c-ordering", ok,
        f"basic {np.mean(basic):.3f}, with-hba1c {np.mean(enriched):.3f}, "
        f"gap {gap:.3f}, basic-vs-0.5 t p={t_p:.2e}",
    )


def test_capacity_convergence():
    cohort = generate_synthetic_cohort(4814, seed=7)
    config = neuralnet.NetworkConfig(input_dim=1, hidden_layers=(1,), epochs=100, seed=0)
    result = evaluation.sweep(cohort, config, depths=(1, 3), widths=range(1, 21),
                              repeats=5, seed=99)
    depth1 = [p.mean_auc for p in result.points if p.depth == 1]
    depth3 = [p.mean_auc for p in result.points if p.depth == 3]
    convergence_gap = max(depth1) - depth1[-1]
    depth_gap = abs(max(depth3) - max(depth1))
    ok = convergence_gap <= 0.05 and depth_gap <= 0.03
    _criterion(
        "capacity-convergence", ok,
        f"max-minus-width20 {convergence_gap:.4f}, depth1-vs-depth3 {depth_gap:.4f}",
    )


def test_calibration_improvement():
    mu0, mu1, sd = 0.4, 0.6, 0.08
    rng = np.random.default_rng(3)
    n = 1000
    scores = np.clip(
        np.concatenate([rng.normal(mu0, sd, n), rng.normal(mu1, sd, n)]), 1e-3, 1 - 1e-3
    )
    labels = np.concatenate([np.zeros(n, int), np.ones(n, int)])
    model = calibration.fit_guess(scores, labels)
    calibrated = np.clip(calibration.calibrate_guess(model, scores), 0.0, 1.0)
    truth = sigmoid((mu1 - mu0) / sd**2 * (scores - (mu0 + mu1) / 2))
    ece_raw = calibration.expected_calibration_error(scores, labels)
    ece_cal = calibration.expected_calibration_error(calibrated, labels)
    mae = float(np.mean(np.abs(calibrated - truth)))
    ok = ece_cal <= ece_raw and mae < 0.02
    _criterion("calibration-improvement", ok,
               f"ECE {ece_raw:.4f} -> {ece_cal:.4f}, posterior MAE {mae:.4f}")


def test_workflow_determinism(model_path, canonical_script):
    runner = CliRunner()
    outputs = set()
    for _ in range(10):
        result = runner.invoke(cli_main, [
            "simulate-session", "--model", str(model_path),
            "--script", str(canonical_script),
        ], catch_exceptions=False)
        assert result.exit_code == 0
        outputs.add(result.output)
    cfg = AdjustmentConfig()
    decisions_ok = (
        decide(0.5, cfg) is Decision.RECOMMEND_HBA1C
        and decide(0.1, cfg) is Decision.LOW_RISK
        and decide(0.9, cfg) is Decision.HIGH_RISK
    )
    ok = len(outputs) == 1 and decisions_ok
    _criterion("workflow-determinism", ok,
               f"{len(outputs)} distinct report(s) over 10 runs")


# --- crash recovery ----------------------------------------------------------

def _free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def _start_service(model_path, data_dir, port) -> subprocess.Popen:
    env = dict(os.environ, VIRTDOC_PORT=str(port))
    proc = subprocess.Popen(
        [sys.executable, "-m", "virtdoc", "serve", "--model", str(model_path),
         "--port", str(port + 1), "--data-dir", str(data_dir)],
        stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL, env=env,
    )
    deadline = time.time() + 30
    url = f"http://127.0.0.1:{port}/api/health"
    while time.time() < deadline:
        try:
            if httpx.get(url, timeout=1.0).status_code == 200:
                return proc  # bound to the env port, proving the override
        except httpx.HTTPError:
            time.sleep(0.1)
        if proc.poll() is not None:
            raise RuntimeError("service exited during startup")
    proc.kill()
    raise RuntimeError("service did not come up")


def test_service_crash_recovery(model_path, tmp_path):
    data_dir = tmp_path / "data"
    items = canonical_script_items()
    kill_points = (2, 5, len(items))  # mid-interview, mid-measurement, done
    ok = True
    detail = []
    done = 0
    for kill_after in kill_points:
        port = _free_port()
        proc = _start_service(model_path, data_dir, port)
        base = f"http://127.0.0.1:{port}"
        try:
            sid = httpx.post(f"{base}/api/sessions", timeout=5).json()["session_id"]
            for item in items[:kill_after]:
                httpx.post(f"{base}/api/sessions/{sid}/input", json=item, timeout=5)
            before = httpx.get(f"{base}/api/sessions/{sid}", timeout=5).json()
        finally:
            proc.kill()
            proc.wait()

        port = _free_port()
        proc = _start_service(model_path, data_dir, port)
        base = f"http://127.0.0.1:{port}"
        try:
            after = httpx.get(f"{base}/api/sessions/{sid}", timeout=5).json()
            if after != before:
                ok = False
                detail.append(f"state diverged after kill at step {kill_after}")
            if after.get("stage") == "Done":
                report = httpx.get(f"{base}/api/sessions/{sid}/report", timeout=5)
                done += 1
                if report.status_code != 200:
                    ok = False
                    detail.append("report unavailable after restart")
        finally:
            proc.kill()
            proc.wait()
    if done == 0:
        ok = False
        detail.append("no session reached Done")
    _criterion("service-crash-recovery", ok,
               "; ".join(detail) or f"{len(kill_points)} kill/restart cycles verbatim")
