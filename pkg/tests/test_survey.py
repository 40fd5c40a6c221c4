from __future__ import annotations

import json
from dataclasses import replace

import pytest

from aliquot_omega.errors import CheckpointCorrupt, CheckpointMismatch, ConfigError, OutputError
from aliquot_omega.survey import (
    CHECKPOINT_NAME,
    SegmentResult,
    SurveyConfig,
    load_checkpoint,
    result_columns,
    resume,
    run_survey,
)

X = 20_000


def config(tmp_path, name="out", **kw):
    base = dict(x_max=X, checkpoints=(5000, X), segment_size=3000, threshold_mode="override",
                out_dir=tmp_path / name, cross_checks=4)
    base.update(kw)
    return SurveyConfig(**base)


def csv_of(out):
    return out.result_path.read_bytes()


def test_single_checkpoint_single_row(tmp_path):
    out = run_survey(SurveyConfig(x_max=10**4, checkpoints=(10**4,), out_dir=tmp_path))
    lines = out.result_path.read_text().splitlines()
    assert len(lines) == 2
    assert lines[0].split(",") == result_columns((0.25, 0.5))


def test_default_checkpoints():
    assert SurveyConfig(x_max=10**7).checkpoints == (10**4, 10**5, 10**6, 10**7)
    assert SurveyConfig(x_max=300_000).checkpoints == (10**4, 10**5, 300_000)
    assert SurveyConfig(x_max=500).checkpoints == (500,)


def test_rerun_is_byte_identical(tmp_path):
    a = csv_of(run_survey(config(tmp_path, "a")))
    b = csv_of(run_survey(config(tmp_path, "b")))
    assert a == b


def test_shards_and_workers(tmp_path):
    ref = csv_of(run_survey(config(tmp_path, "ref")))
    for size, workers in [(1000, 1), (7000, 3), (X, 2)]:
        out = run_survey(config(tmp_path, f"s{size}w{workers}", segment_size=size, workers=workers))
        assert csv_of(out) == ref


def test_resume_half_checkpoint(tmp_path):
    fresh = run_survey(config(tmp_path, "fresh"))
    cfg = config(tmp_path, "half")
    run_survey(cfg)
    ckpt = cfg.out_dir / CHECKPOINT_NAME
    lines = ckpt.read_text().splitlines(keepends=True)
    ckpt.write_text("".join(lines[: len(lines) // 2]))
    (cfg.out_dir / "survey.csv").unlink()
    out = resume(cfg)
    assert out.segments_reused == len(lines) // 2
    assert out.segments_computed == len(lines) - len(lines) // 2
    assert csv_of(out) == csv_of(fresh)


def test_interrupted_run_resumes(tmp_path):
    fresh = run_survey(config(tmp_path, "fresh"))
    cfg = config(tmp_path, "cut")
    partial = run_survey(cfg, max_segments=3)
    assert not partial.complete and partial.result_path is None
    # the resumed run may use a different segment size and worker count
    out = resume(replace(cfg, segment_size=5000, workers=2))
    assert out.segments_reused == 3
    assert csv_of(out) == csv_of(fresh)


def test_resume_complete_and_empty(tmp_path):
    cfg = config(tmp_path, "c")
    first = run_survey(cfg)
    again = resume(cfg)
    assert again.segments_computed == 0 and csv_of(again) == csv_of(first)
    (cfg.out_dir / CHECKPOINT_NAME).write_text("")
    assert csv_of(resume(cfg)) == csv_of(first)
    (cfg.out_dir / CHECKPOINT_NAME).unlink()
    assert csv_of(resume(cfg)) == csv_of(first)


def test_torn_final_line_is_dropped(tmp_path):
    cfg = config(tmp_path, "torn")
    first = run_survey(cfg)
    ckpt = cfg.out_dir / CHECKPOINT_NAME
    text = ckpt.read_text()
    ckpt.write_text(text + text.splitlines()[0][:40])
    out = resume(cfg)
    assert out.segments_computed == 0 and csv_of(out) == csv_of(first)
    assert ckpt.read_text() == text


def test_hash_mismatch_refused(tmp_path):
    cfg = config(tmp_path, "m")
    run_survey(cfg)
    for other in (replace(cfg, threshold_mode="literal"), replace(cfg, alpha=0.3),
                  replace(cfg, checkpoints=(6000, X))):
        with pytest.raises(CheckpointMismatch):
            resume(other)


def test_corrupt_checkpoint(tmp_path):
    cfg = config(tmp_path, "bad")
    run_survey(cfg)
    ckpt = cfg.out_dir / CHECKPOINT_NAME
    lines = ckpt.read_text().splitlines(keepends=True)
    ckpt.write_text(lines[0] + "{not json}\n")
    with pytest.raises(CheckpointCorrupt):
        resume(cfg)
    ckpt.write_text(lines[0] + lines[2])
    with pytest.raises(CheckpointCorrupt):
        resume(cfg)


def test_checkpoint_lines_round_trip(tmp_path):
    cfg = config(tmp_path, "rt")
    run_survey(cfg)
    text = (cfg.out_dir / CHECKPOINT_NAME).read_text()
    for line in text.splitlines():
        assert SegmentResult.from_json(line).to_json() == line
        doc = json.loads(line)
        assert doc["engine_version"] == "1.0" and doc["config_hash"] == cfg.config_hash()
    segs = load_checkpoint(cfg.out_dir / CHECKPOINT_NAME, cfg)
    assert segs[0].lo == 1 and segs[-1].hi == X + 1
    assert all(a.hi == b.lo for a, b in zip(segs, segs[1:]))


def test_jsonl_output(tmp_path):
    cfg = config(tmp_path, "j", output_format="jsonl")
    out = run_survey(cfg)
    docs = [json.loads(line) for line in out.result_path.read_text().splitlines()]
    assert [d["x"] for d in docs] == [5000, X]
    for d in docs:
        assert sum(d["z_histogram"]["all"]) == d["count_total"]
        assert sum(d["tally"]["first_failure"]) == d["count_in_E"]
        assert d["threshold_mode"] == "override"


def test_crosscheck_report(tmp_path):
    out = run_survey(config(tmp_path, "cc", cross_checks=40, seed=5))
    cc = json.loads((out.config.out_dir / "crosscheck.json").read_text())
    assert cc["records"] == 40 and cc["record_mismatches"] == 0
    assert cc["congruence_failures"] == 0


def test_config_validation(tmp_path):
    bad = [dict(checkpoints=(X, 5000)), dict(checkpoints=(X + 1,)), dict(segment_size=999),
           dict(workers=0), dict(threshold_mode="fuzzy"), dict(output_format="xml"),
           dict(alpha=1.5), dict(f_bound=1.0), dict(x_max=0, checkpoints=(1,))]
    for kw in bad:
        with pytest.raises(ConfigError):
            config(tmp_path, **kw)


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OutputError):
        run_survey(config(tmp_path, out_dir=blocker / "sub"))
