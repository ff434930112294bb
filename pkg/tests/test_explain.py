import json

import numpy as np
import pytest

from usast import synth
from usast.classifiers import RandomForest, fit_ridge_loocv
from usast.core import VariantConfig
from usast.explain import explain_global, explain_local, local_contribution_total
from usast.pipeline import features, train
from usast.pool import generate_subsequences
from usast.transform import FeatureLayout


@pytest.fixture(scope="module")
def model_and_data():
    ds = synth.generate(synth.separable_spec(n_per_class=8, m=60, n_dims=1, seed=3))
    cfg = VariantConfig(count_frequency=True, length_list=(20,), seed=1)
    model = train(ds, cfg, classifier_params={"n_trees": 30})
    return model, ds


def test_local_contributions_telescope(model_and_data):
    model, ds = model_and_data
    fm = features(model, ds)
    for row in fm.values:
        total, proba = local_contribution_total(model.classifier, row)
        assert abs(total - proba) <= 1e-9


def test_local_entries_point_at_best_window(model_and_data):
    model, ds = model_and_data
    for inst in ds.instances[:6]:
        exp = explain_local(model.classifier, model.pool, model.layout, inst, model.config, top=3,
                            classes=model.classes)
        assert len(exp.entries) == 3
        assert exp.predicted_class in model.classes
        contribs = [abs(e.contribution) for e in exp.entries]
        assert contribs == sorted(contribs, reverse=True)
        for e in exp.entries:
            assert 0 <= e.window_start <= inst.length - e.window_length
            assert len(e.window_points) == e.window_length
            assert e.feature_type in ("Value", "Uncertainty", "Count")


def test_self_match_window(model_and_data):
    model, ds = model_and_data
    by_id = {i.id: i for i in ds.instances}
    ref = model.pool.entries[0].provenance
    inst = by_id[ref.ref_instance_id]
    exp = explain_local(model.classifier, model.pool, model.layout, inst, model.config, top=model.layout.n_features)
    hit = [e for e in exp.entries if e.entry == 0]
    for e in hit:
        assert e.window_start == ref.start
        if e.feature_type == "Value":
            assert e.feature_value == 0.0


def test_global_ranking_and_clamping(model_and_data):
    model, _ = model_and_data
    g = explain_global(model.classifier, model.pool, model.layout, top_k=5)
    imps = [e.importance for e in g.entries]
    assert imps == sorted(imps, reverse=True) and len(imps) == 5
    assert [e.rank for e in g.entries] == [1, 2, 3, 4, 5]
    everything = explain_global(model.classifier, model.pool, model.layout, top_k=10_000)
    assert len(everything.entries) == model.layout.n_features
    assert sum(e.importance for e in everything.entries) == pytest.approx(1.0, abs=1e-9)


def test_global_ties_resolve_by_column():
    layout = FeatureLayout(3, False, False)

    class Fake:
        feature_importances_ = np.array([0.25, 0.5, 0.25])
        n_features = 3

    ds = synth.generate(synth.separable_spec(n_per_class=1, m=40, n_dims=1, seed=0))
    pool = generate_subsequences(ds.subset([0]), [20], 0.0, dedup=False)
    pool = type(pool)(pool.entries[:3], pool.dim_names, pool.length_list, 0.0, False)
    g = explain_global(Fake(), pool, layout, top_k=3)
    assert [e.column for e in g.entries] == [1, 0, 2]


def test_single_signal_rank_one():
    ds = synth.generate(synth.separable_spec(n_per_class=10, m=60, n_dims=1, seed=5))
    cfg = VariantConfig.from_variant("uSASTd", length_list=(20,))
    model = train(ds, cfg, classifier_params={"n_trees": 40})
    top = explain_global(model.classifier, model.pool, model.layout, top_k=1).entries[0]
    sub = model.pool.entries[top.entry]
    meta = ds.metadata[[i.id for i in ds.instances].index(sub.provenance.ref_instance_id)]
    (s, e), = meta["motif_spans"]["0"]
    assert sub.provenance.start < e and s < sub.provenance.start + len(sub)


def test_json_schema(model_and_data):
    model, ds = model_and_data
    g = json.loads(explain_global(model.classifier, model.pool, model.layout, top_k=4).to_json())
    assert g["schema"] == "usast-explanation-global" and len(g["entries"]) == 4
    assert set(g["entries"][0]) >= {"rank", "class", "dimension", "type", "importance", "start", "length", "points"}
    loc = json.loads(explain_local(model.classifier, model.pool, model.layout, ds.instances[0], model.config,
                                   classes=model.classes).to_json())
    assert loc["instance_id"] == ds.instances[0].id
    assert set(loc["entries"][0]) >= {"contribution", "window_start", "window_length", "dimension", "class", "type"}
    assert len(loc["highlights"]) == len(loc["entries"])
    assert set(loc["series"]) == {"0"}


def test_layout_mismatch_and_ridge(model_and_data):
    model, ds = model_and_data
    wrong = FeatureLayout(len(model.pool) + 1, True, True)
    with pytest.raises(ValueError, match="layout"):
        explain_global(model.classifier, model.pool, wrong)
    X = features(model, ds).values
    ridge = fit_ridge_loocv(X, ds.y)
    with pytest.raises(TypeError):
        explain_local(ridge, model.pool, model.layout, ds.instances[0], model.config)
    untrained = RandomForest()
    untrained.n_features = 2
    with pytest.raises(ValueError, match="classifier expects"):
        explain_global(untrained, model.pool, model.layout)
