"""Acceptance suite: one test, and one PASS/FAIL summary line, per criterion.

Each test measures its own wall time against the criterion's budget. The
summary lines are printed at the end of the pytest session.
"""

import json
import time
from dataclasses import replace
from itertools import product

import numpy as np
import pytest

import oracles
from helpers import report
from imbkit.bench import REGISTRY, Context, Pipeline, build_pipeline, from_dict, run_benchmark
from imbkit.bench.cli import main
from imbkit.bench.report import COLUMNS
from imbkit.core import Dataset, class_weights_from_counts, compute_fdr, derive_seed, stratified_split
from imbkit.datagen import ClassSpec, generate, measured_fdr, preset
from imbkit.inprocess import bagging_fit, balanced_bootstrap, balanced_bootstrap_indices, vote
from imbkit.learners import ForestConfig, LossSpec, TreeConfig, focal_loss, knn_table, loss_and_grads, train_tree
from imbkit.learners.mlp import init_params
from imbkit.postprocess import CostSpec, cost_threshold, pava, tune_threshold
from imbkit.preprocess import ResampleSpec, adasyn, cluster_centroids, find_tomek_links, smote

TIMEOUT_NOTE = "runtime {:.2f}s (budget {}s)"


def rel_err(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


# ------------------------------------------------------------------ 1


def test_criterion_1_formula_oracles():
    t0 = time.perf_counter()
    errs = []
    # class weights
    cw = class_weights_from_counts([90, 10]).weights
    errs += [rel_err(a, b) for a, b in zip(cw, oracles.class_weights([90, 10]))]
    errs += [rel_err(cw[0], 100 / 180), rel_err(cw[1], 5.0)]
    table2 = [2184, 224, 152, 991, 254, 325]
    errs += [rel_err(a, b) for a, b in zip(class_weights_from_counts(table2).weights, oracles.class_weights(table2))]
    errs.append(rel_err(class_weights_from_counts(table2)[2], 4130 / (6 * 152)))
    # focal and weighted focal
    onehot = np.array([[0.0, 1.0]])
    p = np.array([[0.1, 0.9]])
    for gamma, alpha, hand in ((2.0, 1.0, 0.0010536051565782628), (0.0, 1.0, 0.10536051565782628),
                               (2.0, 0.25, 0.0002634012891445657)):
        got = focal_loss(onehot, p, gamma, alpha)
        errs += [rel_err(got, oracles.focal(0.9, gamma, alpha)), rel_err(got, hand)]
    # cost thresholds
    for fp, fn in ((1, 1), (1, 4), (3, 7)):
        errs.append(rel_err(cost_threshold(CostSpec(fp, fn)), oracles.cost_tau(fp, fn)))
    boundary_ok = cost_threshold(CostSpec(0, 3)) == 0.0
    # FDR
    ds = Dataset(np.array([[0.0], [2.0], [4.0], [6.0]]), [0, 0, 1, 1])
    errs.append(rel_err(compute_fdr(ds).mean, 4.0))
    rng = np.random.default_rng(0)
    X = rng.normal(size=(80, 3)) + np.repeat(np.eye(3), [30, 30, 20], axis=0)[:, :3]
    y = np.repeat([0, 1, 2], [30, 30, 20])
    errs += [rel_err(a, b) for a, b in zip(compute_fdr(Dataset(X, y)).per_feature, oracles.fdr(X, y))]
    elapsed = time.perf_counter() - t0
    worst = max(errs)
    ok = worst <= 1e-9 and boundary_ok and elapsed < 1.0
    report(1, ok, f"max relative error {worst:.2e} (tol 1e-9), " + TIMEOUT_NOTE.format(elapsed, 1))
    assert ok


# ------------------------------------------------------------------ 2


def test_criterion_2_algorithm_oracles():
    t0 = time.perf_counter()
    failures = []
    rng = np.random.default_rng(2)
    # threshold tuning vs exhaustive grid, 200 instances
    for i in range(200):
        n = int(rng.integers(5, 80))
        y = rng.integers(0, 2, n)
        y[:2] = [0, 1]
        scores = np.round(rng.random(n), int(rng.integers(1, 4)))
        rule = tune_threshold(scores, y, 0.01)
        tau, f1 = oracles.grid_argmax_threshold(scores.tolist(), y.tolist(), 100)
        if rule.tau != tau or abs(rule.best_f1[0] - f1) > 1e-9:
            failures.append(f"threshold instance {i}")
    # PAVA vs exhaustive partition search: every 0/1 target vector, plus random reals
    n_pava = 0
    for n in range(1, 7):
        for bits in product([0.0, 1.0], repeat=n):
            n_pava += 1
            if not np.allclose(pava(bits), oracles.isotonic_bruteforce(bits, [1.0] * n), rtol=1e-9, atol=1e-12):
                failures.append(f"pava {bits}")
        for _ in range(50):
            n_pava += 1
            yv, wv = rng.random(n), rng.uniform(0.2, 3.0, n)
            if not np.allclose(pava(yv, wv), oracles.isotonic_bruteforce(yv, wv), rtol=1e-9, atol=1e-12):
                failures.append(f"pava {yv}")
    # kNN and Tomek links vs O(n^2) scans, 100 random 50-point sets
    for s in range(100):
        pts = np.round(rng.normal(size=(50, 2)), 1)  # coarse grid so distance ties occur
        labels = rng.integers(0, 2, 50)
        table = knn_table(pts, np.arange(50), 5)
        for q in range(50):
            if table[q].tolist() != oracles.knn_scan(pts, pts[q], 5, exclude=q):
                failures.append(f"knn set {s} query {q}")
                break
        links = [(p.index_a, p.index_b) for p in find_tomek_links(Dataset(pts, labels, 2))]
        if links != oracles.tomek_scan(pts, labels):
            failures.append(f"tomek set {s}")
    # bagging vote vs recount, both the fitted ensemble and raw member outputs
    ds = generate(preset("detection_low_fdr", calibrate=False))
    model = bagging_fit(ds.subset(np.arange(0, ds.n_samples, 4)), "tree", 10, seed=1)
    Xq = ds.features[1::8]
    probas = [m.predict_proba(Xq) for m in model.members]
    preds = [np.argmax(p, axis=1) for p in probas]
    if model.predict(Xq).tolist() != oracles.recount_vote(preds, probas, 2):
        failures.append("bagging ensemble vote")
    for s in range(50):
        C = int(rng.integers(2, 5))
        pr = np.round(rng.dirichlet(np.ones(C), size=(7, 40)), 1)
        pd = rng.integers(0, C, (7, 40))
        if vote(pd, pr, C).tolist() != oracles.recount_vote(pd, pr, C):
            failures.append(f"vote instance {s}")
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 30.0
    report(2, ok, f"200 threshold, {n_pava} PAVA, 100 kNN/Tomek sets, 51 vote checks; "
                  f"{len(failures)} mismatches, " + TIMEOUT_NOTE.format(elapsed, 30))
    assert ok, failures[:5]


# ------------------------------------------------------------------ 3


def segment_residuals(points, minority):
    """Distance from each point to its closest segment between two minority rows."""
    a_idx, b_idx = np.triu_indices(len(minority), k=1)
    A, B = minority[a_idx], minority[b_idx]
    AB = B - A
    denom = np.einsum("ij,ij->i", AB, AB)
    out = np.empty(len(points))
    for i, p in enumerate(points):
        t = np.clip(np.einsum("ij,ij->i", p - A, AB) / np.where(denom > 0, denom, 1.0), 0.0, 1.0)
        out[i] = np.sqrt(((A + t[:, None] * AB - p) ** 2).sum(axis=1)).min()
    return out


def test_criterion_3_geometry_properties():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    residuals = []
    n_synth = 0
    seed = 0
    while n_synth < 10_000:
        seed += 1
        n_min = int(rng.integers(8, 25))
        X = np.vstack([rng.normal(0, 1, (200, 2)), rng.normal(1.2, 1, (n_min, 2))])
        ds = Dataset(X, np.r_[np.zeros(200, dtype=int), np.ones(n_min, dtype=int)])
        method = smote if seed % 2 else adasyn
        out = method(ds, ResampleSpec(method.__name__, k_neighbors=5), seed=seed)
        synth = out.features[ds.n_samples:]
        residuals.append(segment_residuals(synth, X[200:]))
        n_synth += len(synth)
    worst = float(np.concatenate(residuals).max())
    count_failures = 0
    for _ in range(1000):
        C = int(rng.integers(2, 6))
        counts = rng.integers(2, 60, C)
        y = np.concatenate([np.full(n, c) for c, n in enumerate(counts)])
        if np.bincount(y[balanced_bootstrap_indices(y, rng, C)], minlength=C).tolist() != [counts.min()] * C:
            count_failures += 1
        ds = Dataset(rng.normal(size=(y.size, 2)), y, C)
        major = ds.majority_class()
        k = int(counts[counts > 0].min())
        out = cluster_centroids(ds, ResampleSpec("cluster_centroids"), seed=int(rng.integers(1 << 30)))
        expected = counts.copy()
        expected[major] = k
        untouched = all(np.array_equal(out.features[out.labels == c], ds.features[ds.labels == c])
                        for c in range(C) if c != major)
        if out.counts.tolist() != expected.tolist() or not untouched:
            count_failures += 1
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-9 and count_failures == 0
    report(3, ok, f"{n_synth} synthetics, max segment residual {worst:.1e} (tol 1e-9); "
                  f"{count_failures}/2000 count-contract failures over 1000 distributions, {elapsed:.1f}s")
    assert ok


# ------------------------------------------------------------------ 4


def test_criterion_4_gradient_check():
    h = 1e-5
    worst = 0.0
    for b in range(20):
        rng = np.random.default_rng(400 + b)
        C = int(rng.integers(2, 7))
        params = init_params([2, 20, 10, C], rng)
        X = rng.normal(size=(8, 2))
        y = rng.integers(0, C, 8)
        alpha = tuple(rng.uniform(0.2, 5.0, C))
        losses = (LossSpec("cross_entropy"), LossSpec("weighted_ce", 0.0, alpha),
                  LossSpec("focal", 2.0), LossSpec("weighted_focal", 2.0, alpha))
        for loss in losses:
            _, grads = loss_and_grads(params, X, y, loss, C)
            for p, g in zip(params, grads):
                flat, gflat = p.reshape(-1), g.reshape(-1)
                for i in range(flat.size):
                    old = flat[i]
                    flat[i] = old + h
                    up, _ = loss_and_grads(params, X, y, loss, C)
                    flat[i] = old - h
                    down, _ = loss_and_grads(params, X, y, loss, C)
                    flat[i] = old
                    num = (up - down) / (2 * h)
                    worst = max(worst, abs(num - gflat[i]) / max(abs(num), abs(gflat[i]), 1e-8))
    ok = worst < 1e-4
    report(4, ok, f"max relative error {worst:.2e} over 20 batches x 4 losses (tol 1e-4, step {h})")
    assert ok


# ------------------------------------------------------------------ 5


def test_criterion_5_fdr_calibration():
    t0 = time.perf_counter()
    lines, ok = [], True
    for name, target, tol in (("detection_low_fdr", 0.769, 0.05), ("detection_high_fdr", 2.254, 0.05),
                              ("identification", 181.2, 5.0)):
        spec = preset(name, seed=0)
        got = measured_fdr(spec)
        # re-draw the calibrated geometry on a fresh seed with at least 5000 rows
        scale = int(np.ceil(5000 / sum(spec.counts)))
        big = replace(spec, seed=derive_seed("acceptance", name),
                      classes=tuple(ClassSpec(c.count * scale, c.components) for c in spec.classes))
        fresh = measured_fdr(big)
        n = max(sum(spec.counts), sum(big.counts))
        good = abs(got - target) <= tol and abs(fresh - target) <= tol and n >= 5000
        ok &= good
        lines.append(f"{name} {got:.4g} / fresh {fresh:.4g} (n={sum(big.counts)})")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 60.0
    report(5, ok, "; ".join(lines) + ", " + TIMEOUT_NOTE.format(elapsed, 60))
    assert ok


# ------------------------------------------------------------------ 6 and 7

CRITERION_6_START = time.perf_counter()
_C6_SECONDS = []


def paired_sign_test(rows, technique):
    base = np.asarray(rows["baseline"].scores)
    other = np.asarray(rows[technique].scores)
    wins, losses = int((other > base).sum()), int((other < base).sum())
    return wins, losses, oracles.sign_test_p(wins, losses)


@pytest.fixture(scope="module")
def detection_rows():
    t0 = time.perf_counter()
    cfg = from_dict({"datasets": ["detection_low_fdr"], "repetitions": 30, "timing": "off",
                     "techniques": ["rus", "bagging", "brf", "threshold_adjustment"]})
    rows = {r.technique: r for r in run_benchmark(cfg)}
    _C6_SECONDS.append(time.perf_counter() - t0)
    return rows


@pytest.fixture(scope="module")
def identification_rows():
    t0 = time.perf_counter()
    cfg = from_dict({"datasets": ["identification"], "repetitions": 30, "timing": "off",
                     "techniques": ["cvae", "smote", "meta_learning"]})
    rows = {r.technique: r for r in run_benchmark(cfg)}
    _C6_SECONDS.append(time.perf_counter() - t0)
    return rows


def test_criterion_6a_detection_direction(detection_rows):
    parts, ok = [], True
    for tech in ("rus", "bagging", "brf", "threshold_adjustment"):
        w, l, p = paired_sign_test(detection_rows, tech)
        ok &= p < 0.05 and detection_rows[tech].mean_f1 > detection_rows["baseline"].mean_f1
        parts.append(f"{tech} {detection_rows[tech].mean_f1:.4f} ({w}-{l}, p={p:.1e})")
    report("6a", ok, f"baseline F1 {detection_rows['baseline'].mean_f1:.4f}; " + "; ".join(parts))
    assert ok


def test_criterion_6b_identification_direction(identification_rows):
    parts, ok = [], True
    for tech in ("cvae", "smote", "meta_learning"):
        w, l, p = paired_sign_test(identification_rows, tech)
        ok &= p < 0.05 and identification_rows[tech].mean_f1 > identification_rows["baseline"].mean_f1
        parts.append(f"{tech} {identification_rows[tech].mean_f1:.4f} ({w}-{l}, p={p:.1e})")
    report("6b", ok, f"baseline macro-F1 {identification_rows['baseline'].mean_f1:.4f}; " + "; ".join(parts))
    assert ok


def test_criterion_6c_adasyn_fails_on_high_fdr():
    t0 = time.perf_counter()
    cfg = from_dict({"datasets": ["detection_high_fdr"], "repetitions": 30, "timing": "off",
                     "techniques": ["adasyn"]})
    rows = {r.technique: r for r in run_benchmark(cfg)}
    _C6_SECONDS.append(time.perf_counter() - t0)
    status = rows["adasyn"].status
    total = sum(_C6_SECONDS)
    ok = status == "n/a: NoBoundarySamples" and total < 15 * 60
    report("6c", ok, f"adasyn status '{status}'; criterion 6 benchmark time {total:.0f}s (budget 900s)")
    assert ok


def test_criterion_7_threshold_vmr():
    cfg = from_dict({"datasets": ["detection_low_fdr"], "repetitions": 100, "timing": "off",
                     "techniques": ["threshold_adjustment"]})
    rows = {r.technique: r for r in run_benchmark(cfg)}
    base, thr = rows["baseline"].vmr, rows["threshold_adjustment"].vmr
    ok = rows["baseline"].reps == 100 and thr <= base
    report(7, ok, f"VMR threshold_adjustment {thr:.3e} <= baseline {base:.3e} over 100 reps")
    assert ok


# ------------------------------------------------------------------ 8


def per_sample_seconds(predictors, X, trials=150):
    """Interleaved timing; returns one array of per-sample seconds per predictor."""
    out = [[] for _ in predictors]
    for t in range(trials):
        order = range(len(predictors)) if t % 2 == 0 else reversed(range(len(predictors)))
        for i in order:
            t0 = time.perf_counter()
            predictors[i](X)
            out[i].append((time.perf_counter() - t0) / len(X))
    return [np.asarray(v) for v in out]


def test_criterion_8_timing_order():
    ds = generate(preset("detection_low_fdr"))
    rest, test = stratified_split(ds, 0.2, seed=8)
    train, tune = stratified_split(rest, 0.25, seed=9)
    # warm every code path once before timing
    bag = bagging_fit(train, "tree", 10, seed=1)
    single = train_tree(balanced_bootstrap(train, 2), None, TreeConfig(), 3)
    bag.predict(test.features)
    single.predict(test.features)
    t_bag, t_single = per_sample_seconds([bag.predict, single.predict], test.features)
    bag_ok = np.median(t_bag) > np.median(t_single)
    parts = [f"bagging10 {np.median(t_bag) * 1e6:.2f}us vs single {np.median(t_single) * 1e6:.2f}us per sample"]

    # post-processed pipelines vs the same model without the adjustment; "at least as slow" is
    # checked as "not measurably faster": mean paired gap must not sit 3 standard errors below 0
    ctx = Context("forest", 2, ForestConfig(), cost_fn=4.0, cost_fp=1.0)
    post_ok = True
    for kind in ("threshold_adjustment", "cost_sensitive", "reweighting", "calibration"):
        assert REGISTRY[kind].family == "post"
        pipe = build_pipeline(kind, {}, ctx, train, tune, seed=4)
        plain = Pipeline(pipe.model)
        pipe.predict(test.features)
        t_post, t_plain = per_sample_seconds([pipe.predict, plain.predict], test.features)
        gap = t_post - t_plain
        se = gap.std(ddof=1) / np.sqrt(gap.size)
        good = gap.mean() >= -3 * se
        post_ok &= good
        parts.append(f"{kind} {np.median(t_post) * 1e6:.3f} vs {np.median(t_plain) * 1e6:.3f}us "
                     f"(gap {gap.mean() * 1e9:+.1f}ns, 3SE {3 * se * 1e9:.1f}ns)")
    ok = bag_ok and post_ok
    report(8, ok, "; ".join(parts))
    assert ok


# ------------------------------------------------------------------ 9

DETERMINISM_CONFIG = {
    "datasets": ["detection_low_fdr", "detection_high_fdr", "identification"],
    "techniques": ["rus", "smote", "adasyn", "class_weights", "threshold_adjustment", "calibration"],
    "repetitions": 2,
    "seed": 11,
    "mlp": {"epochs": 40},
}


def run_cli(tmp_path, name, timing, parallel="1"):
    cfg = tmp_path / f"{name}.json"
    cfg.write_text(json.dumps({**DETERMINISM_CONFIG, "timing": timing}))
    out = tmp_path / name
    assert main(["run", "--config", str(cfg), "--out", str(out), "--parallel", parallel]) == 0
    return {p.name: p.read_bytes() for p in sorted(out.iterdir())}


def strip_timing(csv_bytes):
    keep = [i for i, c in enumerate(COLUMNS) if c not in ("train_ms", "infer_ms_per_1k")]
    return [[line.split(",")[i] for i in keep] for line in csv_bytes.decode().splitlines()]


def test_criterion_9_byte_identical_reruns(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("BENCH_THREADS", raising=False)
    first = run_cli(tmp_path, "a", "off")
    second = run_cli(tmp_path, "b", "off")
    parallel = run_cli(tmp_path, "p", "off", parallel="2")
    identical = first == second == parallel
    kinds = sorted({name.rsplit(".", 1)[1] for name in first})
    # with wall-clock timing on, everything but the timing columns (and the chart drawing them) still matches
    wall_a = run_cli(tmp_path, "wa", "wall")
    wall_b = run_cli(tmp_path, "wb", "wall")
    wall_ok = strip_timing(wall_a["report.csv"]) == strip_timing(wall_b["report.csv"])
    wall_ok &= all(wall_a[n] == wall_b[n] for n in wall_a if n.startswith("f1_"))
    capsys.readouterr()
    ok = identical and wall_ok and kinds == ["csv", "json", "svg"]
    report(9, ok, f"{len(first)} files ({', '.join(kinds)}) byte-identical across two runs and a 2-worker run; "
                  f"wall-timed reruns identical outside timing columns: {wall_ok}")
    assert ok
