import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from segcomplexity.cli import main
from segcomplexity.dataset import (
    SceneRecord,
    load_manifest,
    load_scene,
    write_dataset,
    write_soft_mask,
)
from segcomplexity.report import AnalyzeConfig, analyze_dataset, evaluate_dataset
from segcomplexity.synth import generate_scenes, make_corpus

from conftest import make_scene, rect_mask


@pytest.fixture()
def small_corpus(tmp_path):
    root = tmp_path / "corpus"
    make_corpus(root, "textured", 6, seed=21)
    return root


def _write_perfect_predictions(root: Path) -> None:
    manifest = load_manifest(root)
    for sid in manifest.ids:
        scene = load_scene(manifest, sid)
        for k, obj in enumerate(scene.objects):
            write_soft_mask(
                manifest.prediction_dir(sid) / f"{k}.png",
                scene.object_mask(obj.id).astype(float),
            )


def test_analyze_report_structure(small_corpus):
    report = analyze_dataset(small_corpus, AnalyzeConfig(factors=("object", "scene")))
    assert report["kind"] == "factors"
    assert len(report["scenes"]) == 6
    for name, entry in report["factors"].items():
        hist = entry["histogram"]
        total = sum(hist["counts"]) + hist.get("overflow", 0)
        assert total == entry["summary"]["count"], name
        edges = hist["edges"]
        assert all(a < b for a, b in zip(edges, edges[1:]))


def test_analyze_records_missing_scene_factors(tmp_path):
    # one K=1 scene: scene-level factors must be missing, not fatal
    good = make_scene(
        {1: (rect_mask(64, 4, 4, 12, 12), (200, 0, 0)),
         2: (rect_mask(64, 40, 40, 12, 12), (0, 200, 0))},
    )
    lone = make_scene({1: (rect_mask(64, 20, 20, 12, 12), (0, 0, 200))})
    good_scene = SceneRecord(id="a", image=good.image, labels=good.labels)
    lone_scene = SceneRecord(id="b", image=lone.image, labels=lone.labels)
    root = tmp_path / "ds"
    write_dataset([good_scene, lone_scene], root)
    report = analyze_dataset(root, AnalyzeConfig(factors=("object", "scene")))
    summary = report["factors"]["inter_object_color_similarity"]["summary"]
    assert summary["count"] == 1
    assert summary["missing"] == 1
    lone_record = [r for r in report["scenes"] if r["id"] == "b"][0]
    assert lone_record["scene"] is None
    assert lone_record["missing"]["scene"] == "TooFewObjects"


def test_analyze_jobs_do_not_change_output(small_corpus, tmp_path):
    runner = CliRunner()
    outs = []
    for jobs in (1, 2):
        out = tmp_path / f"report_{jobs}.json"
        result = runner.invoke(
            main,
            ["analyze", str(small_corpus), "--out", str(out), "--seed", "7",
             "--jobs", str(jobs), "--factors", "all", "--hungarian-budget", "256"],
        )
        assert result.exit_code == 0, result.output
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_evaluate_perfect_predictions(small_corpus):
    _write_perfect_predictions(small_corpus)
    report = evaluate_dataset(small_corpus)
    for name, entry in report["aggregate"].items():
        assert entry["mean"] == pytest.approx(1.0), name
    assert report["arp_arr_variant"] == "pair-hypergeometric"


def test_evaluate_empty_predictions(small_corpus):
    report = evaluate_dataset(small_corpus, metric_names=("ap", "recall"))
    assert report["aggregate"]["ap"]["mean"] == 0.0
    assert report["aggregate"]["recall"]["mean"] == 0.0


def test_evaluate_external_pred_root(small_corpus, tmp_path):
    manifest = load_manifest(small_corpus)
    pred_root = tmp_path / "preds"
    for sid in manifest.ids:
        scene = load_scene(manifest, sid)
        for k, obj in enumerate(scene.objects):
            write_soft_mask(
                pred_root / sid / f"{k}.png",
                scene.object_mask(obj.id).astype(float),
            )
    report = evaluate_dataset(small_corpus, metric_names=("ap",), pred_root=pred_root)
    assert report["aggregate"]["ap"]["mean"] == pytest.approx(1.0)


# --- CLI ------------------------------------------------------------------------


def test_cli_ablate_then_analyze_collapses_gradient(small_corpus, tmp_path):
    runner = CliRunner()
    out_ds = tmp_path / "ablated"
    result = runner.invoke(
        main, ["ablate", str(small_corpus), "--ops", "C", "--out", str(out_ds)]
    )
    assert result.exit_code == 0, result.output
    report_path = tmp_path / "r.json"
    result = runner.invoke(
        main,
        ["analyze", str(out_ds), "--out", str(report_path), "--factors", "object"],
    )
    assert result.exit_code == 0, result.output
    report = json.loads(report_path.read_text())
    hist = report["factors"]["object_color_gradient"]["histogram"]
    assert hist["counts"][0] == report["factors"]["object_color_gradient"]["summary"]["count"]
    assert report["factors"]["object_color_gradient"]["summary"]["mean"] == 0.0


def test_cli_unknown_op_is_usage_error(small_corpus, tmp_path):
    runner = CliRunner()
    result = runner.invoke(
        main, ["ablate", str(small_corpus), "--ops", "Z", "--out", str(tmp_path / "x")]
    )
    assert result.exit_code == 2


def test_cli_unknown_metric_token(small_corpus, tmp_path):
    runner = CliRunner()
    result = runner.invoke(
        main,
        ["evaluate", str(small_corpus), "--out", str(tmp_path / "m.json"),
         "--metrics", "nope"],
    )
    assert result.exit_code == 2


def test_cli_data_error_exit_code(small_corpus, tmp_path):
    # corrupt prediction layout: non-integer filename
    manifest = load_manifest(small_corpus)
    sid = manifest.ids[0]
    write_soft_mask(manifest.prediction_dir(sid) / "not-a-number.png",
                    np.ones((128, 128)))
    runner = CliRunner()
    result = runner.invoke(
        main, ["evaluate", str(small_corpus), "--out", str(tmp_path / "m.json")]
    )
    assert result.exit_code == 1


def test_cli_prepare_and_split(tmp_path):
    raw = tmp_path / "raw"
    ids = []
    for i, scene in enumerate(generate_scenes("simple", 8, seed=31)):
        from segcomplexity.dataset import write_scene_files

        write_scene_files(raw, scene)
        ids.append(scene.id)
    runner = CliRunner()
    out = tmp_path / "prepared"
    result = runner.invoke(
        main,
        ["prepare", str(raw), "--out", str(out), "--train-fraction", "0.5",
         "--blank-background"],
    )
    assert result.exit_code == 0, result.output
    splits = [p.name for p in out.iterdir() if p.is_dir()]
    total = 0
    for split in splits:
        manifest = load_manifest(out / split)
        assert manifest.split == split
        total += len(manifest.ids)
    assert total == 8
    # rerun gives the same membership
    out2 = tmp_path / "prepared2"
    result = runner.invoke(
        main,
        ["prepare", str(raw), "--out", str(out2), "--train-fraction", "0.5",
         "--blank-background"],
    )
    assert result.exit_code == 0
    for split in splits:
        a = load_manifest(out / split).ids
        b = load_manifest(out2 / split).ids
        assert a == b


def test_cli_prepare_all_filtered_is_data_error(tmp_path):
    raw = tmp_path / "raw"
    from segcomplexity.dataset import write_scene_files

    for scene in generate_scenes("simple", 3, seed=5):
        write_scene_files(raw, scene)
    runner = CliRunner()
    result = runner.invoke(
        main,
        ["prepare", str(raw), "--out", str(tmp_path / "out"),
         "--min-objects", "50", "--max-objects", "60"],
    )
    assert result.exit_code == 1


def test_ablate_jobs_do_not_change_output(small_corpus, tmp_path):
    runner = CliRunner()
    datasets = []
    for jobs in (1, 2):
        out = tmp_path / f"ablated_{jobs}"
        result = runner.invoke(
            main,
            ["ablate", str(small_corpus), "--ops", "T,C", "--out", str(out),
             "--seed", "5", "--jobs", str(jobs)],
        )
        assert result.exit_code == 0, result.output
        datasets.append(out)
    a, b = datasets
    for rel in sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file()):
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel
