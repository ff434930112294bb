import json

import pytest

from usast.cli import build_parser, config_from_args, main
from usast.core import VariantConfig


def _error(capsys):
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    return json.loads(err[0])


def _train_args(*extra, out="x"):
    return ["train", "--observations", "o.csv", "--metadata", "m.csv", "--out", str(out), *extra]


def test_train_defaults():
    args = build_parser().parse_args(_train_args())
    assert args.seeds == [1, 2, 3] and args.split == 0.8 and args.window == 5
    cfg = config_from_args(args)
    assert cfg == VariantConfig(length_list=(20, 30, 40, 50, 60), epsilon=0.25, k_per_class=1)
    assert cfg.variant_name == "uSASTd"


def test_variant_alias_and_overrides():
    cfg = config_from_args(build_parser().parse_args(_train_args("--variant", "SASTdc")))
    assert (cfg.use_uncertainty, cfg.drop_duplicates, cfg.count_frequency) == (False, True, True)
    cfg = config_from_args(build_parser().parse_args(_train_args("--variant", "SASTdc", "--use-uncertainty")))
    assert cfg.variant_name == "uSASTdc"


def test_count_without_dedup_is_usage_error(tmp_path, capsys):
    code = main(_train_args("--count-frequency", "--no-drop-duplicates", out=tmp_path))
    assert code == 2
    assert _error(capsys)["error"] == "usage"


def test_unknown_option_is_one_json_line(tmp_path, capsys):
    assert main(["train", "--bogus", "--out", str(tmp_path)]) == 2
    assert _error(capsys)["error"] == "usage"


def test_missing_file_exits_3(tmp_path, capsys):
    code = main(["validate", "--observations", str(tmp_path / "none.csv"), "--metadata", str(tmp_path / "m.csv"),
                 "--out", str(tmp_path / "out")])
    assert code == 3
    assert "none.csv" in _error(capsys)["message"]


def test_bad_model_file(tmp_path, capsys):
    (tmp_path / "model.json").write_text('{"format": "usast-mo')
    assert main(["explain", "--model", str(tmp_path / "model.json"), "--out", str(tmp_path)]) == 3
    assert _error(capsys)["error"] == "bad-model"


def test_help_documents_schemas(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["train", "--help"])
    text = capsys.readouterr().out
    assert "schema_version" in text and "flux_err" in text


def test_end_to_end(tmp_path, capsys):
    data = tmp_path / "data"
    obs, meta = str(data / "observations.csv"), str(data / "metadata.csv")
    assert main(["synth", "--preset", "separable", "--n-per-class", "5", "--m", "60", "--n-dims", "1",
                 "--seed", "3", "--out", str(data)]) == 0
    assert main(["validate", "--observations", obs, "--metadata", meta, "--out", str(tmp_path / "v")]) == 0

    run = tmp_path / "run"
    assert main(["train", "--observations", obs, "--metadata", meta, "--out", str(run), "--seeds", "1",
                 "--min-length", "20", "--max-length", "30", "--n-trees", "15", "--variant", "uSASTdc",
                 "--n-jobs", "1"]) == 0
    assert sorted(p.name for p in run.iterdir()) == ["model_seed1.json", "split_seed1.json", "training_summary.json"]
    summary = json.loads((run / "training_summary.json").read_text())
    assert summary["variant"] == "uSASTdc" and "held_out" in summary["runs"][0]
    model = run / "model_seed1.json"

    ev = tmp_path / "eval"
    assert main(["evaluate", "--model", str(model), "--observations", obs, "--metadata", meta,
                 "--split-file", str(run / "split_seed1.json"), "--positive-class", "box", "--out", str(ev)]) == 0
    report = json.loads((ev / "report.json").read_text())
    assert 0.0 <= report["overall"]["f1"] <= 1.0 and "one_vs_rest" in report

    pr = tmp_path / "pred"
    assert main(["predict", "--model", str(model), "--observations", obs, "--out", str(pr)]) == 0
    lines = (pr / "predictions.csv").read_text().splitlines()
    assert lines[0] == "object_id,predicted,p_box,p_burst,p_ramp" and len(lines) == 16

    ex = tmp_path / "expl"
    assert main(["explain", "--model", str(model), "--observations", obs, "--ids", "box-0000",
                 "--top-k", "5", "--out", str(ex)]) == 0
    g = json.loads((ex / "explanation_global.json").read_text())
    loc = json.loads((ex / "explanation_local_box-0000.json").read_text())
    assert len(g["entries"]) == 5 and len(loc["entries"]) == 3
    capsys.readouterr()
    assert main(["explain", "--model", str(model), "--observations", obs, "--ids", "nope", "--out", str(ex)]) == 3
    assert "nope" in _error(capsys)["message"]

    # nothing written outside the --out directories
    assert sorted(p.name for p in tmp_path.iterdir()) == ["data", "eval", "expl", "pred", "run", "v"]
