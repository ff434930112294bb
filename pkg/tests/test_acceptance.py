"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Thresholds here are the contract and must not be relaxed to make a run pass.
"""

import itertools
import math
import time

import numpy as np
import pytest

from usast import synth
from usast.classifiers import feature_importance, fit_forest, loo_errors
from usast.classifiers.ridge import one_hot
from usast.core import VariantConfig
from usast.distance import dist_and_count, epsilon_similar, ued
from usast.explain import explain_global, explain_local
from usast.metrics import cross_entropy, weighted_from_confusion, weighted_scores
from usast.pipeline import dumps_model, evaluate, load_model, predict, save_model, stratified_split, train
from usast.pool import build_pool, enumerate_candidates, greedy_dedup
from usast.transform import transform

from acceptance_log import record
from conftest import make_dataset
from oracles import log_loss_direct, naive_dedup, refit_loo, ued_direct, window_scan

SEEDS = (1, 2, 3)


def _overlaps(a0, a1, b0, b1):
    return a0 < b1 and b0 < a1


def _held_out_accuracy(ds, cfg, seed, n_trees=100):
    tr, te = stratified_split(ds.labels, 0.8, seed)
    model = train(ds.subset(tr), cfg.with_(seed=seed), classifier_params={"n_trees": n_trees})
    return evaluate(model, ds.subset(te))["overall"].accuracy


# --- 1 -----------------------------------------------------------------------

def test_criterion_01_ued_oracle():
    rng = np.random.default_rng(101)
    pairs = []
    for _ in range(1000):
        l = int(rng.integers(1, 17))
        pairs.append((rng.normal(0, 3, l), rng.uniform(0, 2, l), rng.normal(0, 3, l), rng.uniform(0, 2, l)))
    t0 = time.perf_counter()
    got = [ued((a, da), (b, db)) for a, da, b, db in pairs]
    zero = [ued((a, np.zeros_like(a)), (b, np.zeros_like(b))) for a, _, b, _ in pairs]
    elapsed = time.perf_counter() - t0
    worst = 0.0
    reduction_ok = True
    for (a, da, b, db), r, z in zip(pairs, got, zero):
        v, u = ued_direct(a.tolist(), da.tolist(), b.tolist(), db.tolist())
        for x, y in ((r.value, v), (r.uncertainty, u)):
            worst = max(worst, abs(x - y) / max(abs(y), 1e-300))
        sq = sum((x - y) ** 2 for x, y in zip(a.tolist(), b.tolist()))
        reduction_ok &= z.uncertainty == 0.0 and abs(z.value - sq) <= 1e-9 * max(sq, 1e-300)
    ok = worst <= 1e-9 and reduction_ok and elapsed < 1.0
    record(1, ok, f"1000 pairs, max rel err {worst:.2e}, zero-uncertainty reduction {reduction_ok}, {elapsed:.3f}s")
    assert ok


# --- 2 -----------------------------------------------------------------------

def test_criterion_02_sliding_window_oracle():
    rng = np.random.default_rng(202)
    triples = []
    for _ in range(500):
        m = int(rng.integers(1, 33))
        l = int(rng.integers(1, m + 1))
        # coarse values make exact ties in distance (and hence the tie rule) common
        S = rng.integers(-2, 3, l).astype(float)
        T = rng.integers(-2, 3, m).astype(float)
        triples.append((S, rng.uniform(0, 1, l).round(1), T, rng.uniform(0, 1, m).round(1), float(rng.uniform(0, 3))))
    t0 = time.perf_counter()
    results = [dist_and_count((S, dS), (T, dT), eps) for S, dS, T, dT, eps in triples]
    elapsed = time.perf_counter() - t0
    mismatches = 0
    for (S, dS, T, dT, eps), r in zip(triples, results):
        v, u, p, c = window_scan(S.tolist(), dS.tolist(), T.tolist(), dT.tolist(), eps)
        same = (math.isclose(r.distance.value, v, rel_tol=1e-9, abs_tol=1e-12)
                and math.isclose(r.distance.uncertainty, u, rel_tol=1e-9, abs_tol=1e-12)
                and r.position == p and r.count == c)
        mismatches += not same
    ok = mismatches == 0 and elapsed < 5.0
    record(2, ok, f"500 triples, {mismatches} mismatches in (distance, position, count), {elapsed:.3f}s")
    assert ok


# --- 3 -----------------------------------------------------------------------

def test_criterion_03_non_transitivity_witness():
    # the two steps X->Y and Y->Z are orthogonal, so |XZ|^2 = |XY|^2 + |YZ|^2
    l, eps = 4, 0.25
    zero = np.zeros(l)
    X, Y, Z = np.zeros(l), np.eye(l)[0], np.eye(l)[0] + np.eye(l)[1]
    xy = epsilon_similar((X, zero), (Y, zero), eps)
    yz = epsilon_similar((Y, zero), (Z, zero), eps)
    xz = epsilon_similar((X, zero), (Z, zero), eps)
    ok = xy and yz and not xz
    record(3, ok, f"eps-similar(X,Y)={xy}, eps-similar(Y,Z)={yz}, eps-similar(X,Z)={xz}")
    assert ok


# --- 4 -----------------------------------------------------------------------

def test_criterion_04_dedup_correctness():
    lengths = (3, 5, 8)
    eps_grid = (0.0, 0.05, 0.1, 0.2, 0.4, 0.8, 1.5)
    oracle_bad = pairwise_bad = idem_bad = mono_bad = 0
    for seed in range(100):
        rng = np.random.default_rng(4000 + seed)
        m = int(rng.integers(12, 36))
        values = rng.normal(size=(2, m))
        if seed % 2:
            values = np.cumsum(values, axis=1).round(1)
        ds = make_dataset([values], ["a"], dims=("u", "g"), rng_unc=rng)
        cands = enumerate_candidates(ds, lengths)
        eps = float(rng.choice(eps_grid))
        kept = greedy_dedup(cands, eps)
        oracle_in = [(c.provenance.dimension, c.values.tolist()) for c in cands]
        oracle_bad += kept != naive_dedup(oracle_in, eps)
        pool = [cands[i] for i in kept]
        pairwise_bad += any(
            epsilon_similar(a, b, eps)
            for a, b in itertools.combinations(pool, 2)
            if a.provenance.dimension == b.provenance.dimension and len(a) == len(b)
        )
        idem_bad += greedy_dedup(pool, eps) != list(range(len(pool)))
        sizes = [len(greedy_dedup(cands, e)) for e in eps_grid]
        mono_bad += sizes != sorted(sizes, reverse=True)
    ok = oracle_bad == pairwise_bad == idem_bad == mono_bad == 0
    record(4, ok, f"100 series: oracle mismatches {oracle_bad}, similar pairs kept {pairwise_bad}, "
                  f"non-idempotent {idem_bad}, non-monotone in eps {mono_bad}")
    assert ok


# --- 5 -----------------------------------------------------------------------

def test_criterion_05_ridge_loo_identity():
    alphas = (1e-3, 0.1, 1.0, 10.0, 1000.0)
    worst = 0.0
    for p in range(20):
        rng = np.random.default_rng(500 + p)
        n = int(rng.integers(4, 25))
        f = int(rng.integers(1, 30))
        k = int(rng.integers(2, 5))
        X = rng.normal(size=(n, f)) * rng.uniform(0.1, 10, f)
        Y = one_hot(rng.integers(0, k, n), k)
        for a, e in zip(alphas, loo_errors(X, Y, alphas)):
            worst = max(worst, abs(e - refit_loo(X, Y, a)))
    ok = worst <= 1e-8
    record(5, ok, f"20 problems x {len(alphas)} alphas, max |closed-form - refit| {worst:.2e}")
    assert ok


# --- 6 -----------------------------------------------------------------------

def test_criterion_06_classifier_sanity():
    def xor(n, seed):
        rng = np.random.default_rng(seed)
        X = rng.uniform(-1, 1, size=(n, 2))
        return X, ((X[:, 0] > 0) ^ (X[:, 1] > 0)).astype(int)

    X, y = xor(200, 61)
    Xt, yt = xor(1000, 62)
    model = fit_forest(X, y, n_trees=100, seed=1)
    acc = float(np.mean(model.predict(Xt) == yt))
    rows = np.abs(model.predict_proba(Xt).sum(axis=1) - 1.0).max()
    imp = abs(feature_importance(model).sum() - 1.0)
    ok = acc >= 0.9 and rows <= 1e-9 and imp <= 1e-9
    record(6, ok, f"XOR held-out accuracy {acc:.3f}, max |row sum - 1| {rows:.1e}, |importance sum - 1| {imp:.1e}")
    assert ok


# --- 7 and 11 share the separable model -------------------------------------

@pytest.fixture(scope="module")
def separable():
    ds = synth.generate(synth.separable_spec(n_per_class=60, m=120, n_dims=2, seed=0))
    tr, te = stratified_split(ds.labels, 0.8, 1)
    t0 = time.perf_counter()
    model = train(ds.subset(tr), VariantConfig(seed=1))
    reports = evaluate(model, ds.subset(te))
    elapsed = time.perf_counter() - t0
    return ds, tr, te, model, reports["overall"], elapsed


def test_criterion_07_separable_benchmark(separable):
    _, _, te, model, rep, elapsed = separable
    ok = rep.f1 >= 0.95 and elapsed < 600
    record(7, ok, f"uSASTd held-out weighted F1 {rep.f1:.4f} on {len(te)} test objects, "
                  f"pool {len(model.pool)}/{model.pool.n_candidates}, {elapsed:.1f}s")
    assert ok


# --- 8 -----------------------------------------------------------------------

def test_criterion_08_uncertainty_ablation():
    ds = synth.generate(synth.uncertainty_only_spec(n_per_class=100, seed=0))
    aware = [_held_out_accuracy(ds, VariantConfig.from_variant("uSASTd"), s) for s in SEEDS]
    blind = [_held_out_accuracy(ds, VariantConfig.from_variant("SASTd"), s) for s in SEEDS]
    a, b = float(np.mean(aware)), float(np.mean(blind))
    ok = a >= 0.85 and b <= 0.65 and a - b >= 0.15
    record(8, ok, f"mean held-out accuracy over seeds {SEEDS}: uSASTd {a:.3f} {np.round(aware, 3).tolist()}, "
                  f"SASTd {b:.3f} {np.round(blind, 3).tolist()}, margin {a - b:.3f}")
    assert ok


# --- 9 -----------------------------------------------------------------------

def test_criterion_09_counting_ablation():
    ds = synth.generate(synth.frequency_spec(n_per_class=60, seed=0))
    dc = [_held_out_accuracy(ds, VariantConfig.from_variant("uSASTdc"), s) for s in SEEDS]
    d = [_held_out_accuracy(ds, VariantConfig.from_variant("uSASTd"), s) for s in SEEDS]
    a, b = float(np.mean(dc)), float(np.mean(d))
    ok = a - b >= 0.15
    record(9, ok, f"mean held-out accuracy over seeds {SEEDS}: uSASTdc {a:.3f} {np.round(dc, 3).tolist()}, "
                  f"uSASTd {b:.3f} {np.round(d, 3).tolist()}, margin {a - b:.3f}")
    assert ok


# --- 10 ----------------------------------------------------------------------

def test_criterion_10_dedup_speed():
    ds = synth.generate(synth.periodic_spec(seed=0))
    dedup_cfg = VariantConfig.from_variant("uSASTd")
    raw_cfg = VariantConfig.from_variant("uSAST")
    deduped, raw = build_pool(ds, dedup_cfg), build_pool(ds, raw_cfg)

    def best_time(pool, cfg):
        times = []
        for _ in range(3):
            t0 = time.perf_counter()
            transform(ds.instances, pool, cfg)
            times.append(time.perf_counter() - t0)
        return min(times)

    t_dedup, t_raw = best_time(deduped, dedup_cfg), best_time(raw, raw_cfg)
    ratio = len(deduped) / len(raw)
    ok = ratio <= 0.5 and t_dedup < t_raw
    record(10, ok, f"pool {len(deduped)}/{len(raw)} ({ratio:.1%}), transform {t_dedup:.3f}s deduplicated "
                   f"vs {t_raw:.3f}s raw")
    assert ok


# --- 11 ----------------------------------------------------------------------

def test_criterion_11_explanation_localization(separable):
    ds, _, te, model, _, _ = separable
    test = ds.subset(te)
    labels, _ = predict(model, test)
    hits = total = 0
    for inst, truth, pred, meta in zip(test.instances, test.labels, labels, test.metadata):
        if truth != pred:
            continue
        top = explain_local(model.classifier, model.pool, model.layout, inst, model.config, top=1,
                            classes=model.classes).entries[0]
        end = top.window_start + top.window_length
        spans = meta["motif_spans"][top.dimension]
        hits += any(_overlaps(top.window_start, end, s, e) for s, e in spans)
        total += 1
    frac = hits / total

    g = explain_global(model.classifier, model.pool, model.layout, top_k=20).entries[0]
    ref_meta = ds.metadata[[i.id for i in ds.instances].index(g.ref_instance_id)]
    rank1_ok = any(_overlaps(g.start, g.start + g.length, s, e) for s, e in ref_meta["motif_spans"][g.dimension])

    unc_ds = synth.generate(synth.uncertainty_only_spec(n_per_class=100, seed=0))
    tr, _ = stratified_split(unc_ds.labels, 0.8, 1)
    unc_model = train(unc_ds.subset(tr), VariantConfig.from_variant("uSASTd", seed=1))
    top5 = [e.feature_type for e in explain_global(unc_model.classifier, unc_model.pool, unc_model.layout, 5).entries]

    ok = frac >= 0.9 and rank1_ok and "Uncertainty" in top5
    record(11, ok, f"top-1 local window on a motif for {hits}/{total} ({frac:.1%}) correct test objects; "
                   f"rank-1 global entry motif-bearing {rank1_ok}; uncertainty-only top-5 types {top5}")
    assert ok


# --- 12 ----------------------------------------------------------------------

def test_criterion_12_determinism_and_persistence(tmp_path):
    ds = synth.generate(synth.separable_spec(n_per_class=10, m=80, n_dims=2, seed=12))
    cfg = VariantConfig(count_frequency=True, length_list=(20, 30), seed=7)
    a = train(ds, cfg, classifier_params={"n_trees": 30})
    b = train(ds, cfg, classifier_params={"n_trees": 30})
    save_model(a, tmp_path / "a.json")
    save_model(b, tmp_path / "b.json")
    same_bytes = (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    back = load_model(tmp_path / "a.json")
    la, pa = predict(a, ds)
    lb, pb = predict(back, ds)
    round_trip = la == lb and np.array_equal(pa, pb) and dumps_model(back) == dumps_model(a)

    workers = 4
    one = transform(ds.instances, a.pool, cfg, n_jobs=1).values
    many = transform(ds.instances, a.pool, cfg, n_jobs=workers).values
    same_workers = one.tobytes() == many.tobytes()

    ok = same_bytes and round_trip and same_workers
    record(12, ok, f"byte-identical model files {same_bytes}, save/load predictions identical {round_trip}, "
                   f"transform 1 vs {workers} workers identical {same_workers}")
    assert ok


# --- 13 ----------------------------------------------------------------------

def test_criterion_13_metrics_oracle():
    y_true = ["a", "a", "a", "b"]
    y_pred = ["a", "a", "b", "b"]
    p, r, f1, _ = weighted_scores(y_true, y_pred)
    expected_f1 = 0.75 * 0.8 + 0.25 * (2 / 3)
    proba = np.array([[0.9, 0.1], [0.6, 0.4], [0.3, 0.7], [0.2, 0.8]])
    ll = cross_entropy([0, 0, 0, 1], proba)
    expected_ll = -(math.log(0.9) + math.log(0.6) + math.log(0.3) + math.log(0.8)) / 4
    example_ok = (abs(p - 0.875) <= 1e-12 and abs(r - 0.75) <= 1e-12 and abs(f1 - expected_f1) <= 1e-12
                  and round(f1, 4) == 0.7667 and abs(ll - expected_ll) <= 1e-12
                  and abs(ll - log_loss_direct([0, 0, 0, 1], proba)) <= 1e-12)

    rng = np.random.default_rng(1300)
    worst = 0.0
    for _ in range(100):
        k = int(rng.integers(2, 8))
        cm = rng.integers(0, 30, size=(k, k))
        cm[rng.integers(0, k), rng.integers(0, k)] += 1
        recall = weighted_from_confusion(cm, [str(i) for i in range(k)])[1]
        worst = max(worst, abs(recall - np.trace(cm) / cm.sum()))
    ok = example_ok and worst <= 1e-12
    record(13, ok, f"example P/R/F1 {p:.4f}/{r:.4f}/{f1:.4f}, log-loss {ll:.6f} (hand {expected_ll:.6f}); "
                   f"max |weighted recall - accuracy| over 100 matrices {worst:.1e}")
    assert ok

