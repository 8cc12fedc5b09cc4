from pathlib import Path

import numpy as np
import pytest

from trustdyn import csvio
from trustdyn.config import MissingRequired, ParseError, UnknownKey, ConfigError, parse_config, parse_config_text
from trustdyn.scenario_sim import generate_cohort
from trustdyn.trust_core import EPS


def test_empty_config_needs_seed():
    with pytest.raises(MissingRequired) as e:
        parse_config_text("")
    assert e.value.key == "seed"


def test_seed_only_defaults():
    cfg = parse_config_text("seed=42\n")
    assert cfg.seed == 42
    assert cfg.cohort_sizes == (91, 25, 14)
    assert cfg.clustering_mode == "per_level"
    assert cfg.behavior.cross_check_accuracy == 0.95


def test_malformed_line():
    with pytest.raises(ParseError) as e:
        parse_config_text("seed 42")
    assert e.value.line == 1


def test_unknown_key_and_bad_values():
    with pytest.raises(UnknownKey) as e:
        parse_config_text("seed=1\ncolour=blue")
    assert e.value.line == 2
    with pytest.raises(ParseError):
        parse_config_text("seed=abc")
    with pytest.raises(ConfigError):
        parse_config_text("seed=1\nclustering_mode=global")
    with pytest.raises(ConfigError):
        parse_config_text("seed=1\nreliability_mix=62,65")


def test_comments_overrides_and_behavior_keys(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# demo\nseed = 3  # root\nblind_follow_bdm=0.5\ncross_check_time_ms=1000,2000\nstratify=yes\n")
    cfg = parse_config(path, {"seed": 9, "out": Path("x"), "jobs": None})
    assert cfg.seed == 9 and cfg.out == Path("x") and cfg.jobs == 1
    assert cfg.behavior.blind_follow_rate["BDM"] == 0.5
    assert cfg.behavior.blind_follow_rate["Disbeliever"] == 0.18
    assert cfg.behavior.cross_check_time_ms == (1000.0, 2000.0)
    assert cfg.stratify is True
    assert "out" not in cfg.snapshot() and "jobs" not in cfg.snapshot()


def test_fmt():
    assert csvio.fmt(0.1234567) == "0.123457"
    assert csvio.fmt(-0.0000001) == "0.000000"
    assert csvio.fmt(None) == "NA"
    assert csvio.fmt(float("nan")) == "NA"
    assert csvio.fmt(True) == "1"
    assert csvio.fmt(7) == "7"


def test_trajectory_roundtrip(tmp_path):
    records = generate_cohort(sizes=(2, 2, 1), seed=3)
    path = csvio.write_table(tmp_path / "t.csv", csvio.TRAJECTORY_COLUMNS, csvio.trajectory_rows(records))
    loaded = csvio.ingest_trajectories(path)
    assert [t.agent_id for t in loaded] == [r.agent_id for r in records]
    for t, r in zip(loaded, records):
        np.testing.assert_allclose(t.reports, r.trajectory.reports, atol=5e-7)
        assert np.array_equal(t.outcomes, r.trajectory.outcomes)


def test_clamp_note(tmp_path):
    path = tmp_path / "t.csv"
    rows = [("a", 1, 1.0, "Hit"), ("a", 2, 0.5, "FA")]
    csvio.write_table(path, csvio.REQUIRED_TRAJECTORY_COLUMNS, rows)
    notes = []
    (traj,) = csvio.ingest_trajectories(path, expected_trials=2, notes=notes)
    assert traj.reports[0] == 1 - EPS
    assert len(notes) == 1 and "clamped" in notes[0]


def test_missing_column(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("agent_id,trial,outcome_class\na,1,Hit\n")
    with pytest.raises(csvio.SchemaError) as e:
        csvio.ingest_trajectories(path)
    assert e.value.column == "reported_trust"


def test_empty_file(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("")
    with pytest.raises(csvio.EmptyFile):
        csvio.ingest_trajectories(path)
