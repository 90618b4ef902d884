import csv
import json

import numpy as np
import pytest
import yaml
from pydantic import ValidationError

from mixedadc.scenario import (
    CSV_HEADER,
    ResultTable,
    Row,
    ScenarioError,
    ScenarioSpec,
    bundled_scenarios,
    emit_table,
    load_spec,
    noise_variance_for,
    read_table,
    run_scenario,
    sidecar_path,
)

SMALL = {
    "name": "small",
    "array": {"num_elements": 10},
    "arrangements": {"left": "left:4", "center": "center:4", "edges": "edges:4"},
    "scene": {"angles_deg": [10, 20], "powers": [1, 1], "snapshots": [5, 20], "snr_db": [-10, 10]},
    "threshold": {"h_max": 2.0, "levels": 8},
    "trials": 4,
    "seed": 7,
    "baselines": True,
}


@pytest.fixture(scope="module")
def small_table():
    return run_scenario(ScenarioSpec.model_validate(SMALL))


def test_unknown_key_rejected():
    bad = dict(SMALL, tirals=3)
    with pytest.raises(ValidationError):
        ScenarioSpec.model_validate(bad)
    bad_scene = dict(SMALL, scene=dict(SMALL["scene"], snr=[0]))
    with pytest.raises(ValidationError):
        ScenarioSpec.model_validate(bad_scene)


@pytest.mark.parametrize("patch", [
    {"trials": 0},
    {"scene": dict(SMALL["scene"], snr_db=[])},
    {"scene": dict(SMALL["scene"], snapshots=[])},
    {"arrangements": {"x": [1, 0, 1]}},
    {"arrangements": {"x": "edges:11"}},
    {"scene": dict(SMALL["scene"], angles_deg=[10, 95])},
])
def test_invalid_specs(patch):
    with pytest.raises((ValidationError, ValueError)):
        ScenarioSpec.model_validate(dict(SMALL, **patch))


def test_explicit_indicator_arrangement():
    spec = ScenarioSpec.model_validate(dict(SMALL, arrangements={"x": [1, 0, 0, 0, 0, 0, 0, 0, 0, 1]}))
    assert spec.resolve("x").high_positions() == (1, 10)


def test_snr_mapping():
    assert noise_variance_for(-20) == pytest.approx(100.0)
    assert noise_variance_for(0) == 1.0


def test_row_count_and_order(small_table):
    names = ["left", "center", "edges", "High-precision", "One-bit"]
    assert len(small_table.rows) == len(names) * 3 * 2 * 2 * 2
    keys = [(names.index(r.arrangement), ["exact", "asymptotic", "general"].index(r.formula),
             r.N, r.snr_db, r.target) for r in small_table.rows]
    assert keys == sorted(keys)
    assert all(r.crb > 0 for r in small_table.rows)


def test_ordering_invariants(small_table):
    for N in (5, 20):
        for snr in (-10, 10):
            at = dict(N=N, snr_db=snr)
            hp = small_table.values(arrangement="High-precision", formula="exact", **at)
            ob = small_table.values(arrangement="One-bit", formula="exact", **at)
            for name in ("left", "center", "edges"):
                mixed = small_table.values(arrangement=name, formula="exact", **at)
                assert np.all(hp <= mixed) and np.all(mixed <= ob)
                gen = small_table.values(arrangement=name, formula="general", **at)
                assert np.all(gen >= mixed)
            for formula in ("exact", "asymptotic"):
                edges = small_table.values(arrangement="edges", formula=formula, **at)
                for other in ("left", "center"):
                    assert np.all(edges <= small_table.values(arrangement=other, formula=formula, **at))


def test_exact_scales_with_n(small_table):
    for name in ("left", "edges", "One-bit"):
        a = small_table.values(arrangement=name, formula="exact", N=5, snr_db=10)
        b = small_table.values(arrangement=name, formula="exact", N=20, snr_db=10)
        np.testing.assert_allclose(b, a * 5 / 20, rtol=1e-10)


def test_deterministic():
    spec = ScenarioSpec.model_validate(dict(SMALL, trials=1))
    a, b = run_scenario(spec), run_scenario(spec)
    assert a.rows == b.rows


def test_parallel_matches_serial():
    spec = ScenarioSpec.model_validate(dict(SMALL, trials=2))
    assert run_scenario(spec, workers=3).rows == run_scenario(spec).rows


def test_exclusion_limit():
    spec = ScenarioSpec.model_validate({
        "array": {"num_elements": 30},
        "arrangements": {},
        "baselines": ["One-bit"],
        "scene": {"angles_deg": [10, 20], "powers": [1, 1], "snapshots": [10], "snr_db": [25]},
        "trials": 50, "seed": 2023, "formulas": ["general"],
    })
    with pytest.raises(ScenarioError, match="singular"):
        run_scenario(spec)


class TestEmit:
    def test_empty(self, tmp_path):
        path = emit_table(ResultTable(), tmp_path / "empty.csv")
        assert path.read_text() == ",".join(CSV_HEADER) + "\n"

    def test_round_trip(self, tmp_path):
        table = ResultTable([Row("Mixed-ADC3", "exact", 10, -20.0, 1, 2.631882714123e-04, 1)],
                            metadata={"seed": 1})
        path = emit_table(table, tmp_path / "one.csv")
        lines = path.read_text().splitlines()
        assert len(lines) == 2
        assert lines[1] == "Mixed-ADC3,exact,10,-20,1,2.631882714e-04,-3.579733468e+01,1"
        back = read_table(path).rows[0]
        assert back.arrangement == "Mixed-ADC3" and back.N == 10 and back.target == 1
        assert back.crb == pytest.approx(2.631882714123e-04, rel=1e-9)
        assert json.loads(sidecar_path(path).read_text()) == {"seed": 1}

    def test_full_table(self, small_table, tmp_path):
        path = emit_table(small_table, tmp_path / "t.csv")
        back = read_table(path)
        assert len(back.rows) == len(small_table.rows)
        for a, b in zip(back.rows, small_table.rows):
            assert a.crb == pytest.approx(b.crb, rel=1e-9)
        with path.open() as fh:
            for rec in csv.DictReader(fh):
                assert float(rec["crb_db"]) == pytest.approx(10 * np.log10(float(rec["crb"])), abs=1e-8)
        meta = json.loads(sidecar_path(path).read_text())
        assert meta["seed"] == 7 and "excluded_trials" in meta

    def test_unwritable(self, tmp_path):
        with pytest.raises(OSError, match="missing"):
            emit_table(ResultTable(), tmp_path / "missing" / "x.csv")


class TestBundled:
    def test_names(self):
        assert {"paper_fig2a", "paper_fig2b"} <= set(bundled_scenarios())

    def test_paper_fig2a_spec(self):
        spec = load_spec("paper_fig2a")
        assert spec.array.num_elements == 30
        assert spec.resolve("Mixed-ADC3").high_positions() == (1, 2, 3, 4, 5, 26, 27, 28, 29, 30)
        assert spec.resolve("Mixed-ADC1").high_positions() == tuple(range(1, 11))
        assert spec.resolve("Mixed-ADC2").high_positions() == tuple(range(11, 21))
        assert spec.scene.snr_db == [-20]
        assert spec.threshold.levels == 8 and spec.threshold.h_max == 2

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "s.yaml"
        path.write_text(yaml.safe_dump(SMALL))
        assert load_spec(path).name == "small"

    def test_missing(self):
        with pytest.raises(FileNotFoundError):
            load_spec("does_not_exist")
