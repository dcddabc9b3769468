import csv
import io
import json
import math

import numpy as np
import pytest

from sbp_minimizer.field import ModelParams, make_grid, zeros
from sbp_minimizer.minimize import MinimizeConfig, multi_start
from sbp_minimizer.sweep import (SWEEP_COLUMNS, SweepRecord, SweepReport, apply_env,
                                 check_ratio_conditions, check_scaling_paths,
                                 check_subadditivity, dyadic_grid, load_config, parse_c_grid,
                                 sweep_mass)

FAST = MinimizeConfig()
GRID = make_grid(1024, 60.0)


def report_from(cs, ms, consts):
    recs = [SweepRecord(c=c, m_est=m, lam=-0.1, A=1.0, B=0.1, C=1.0, D=0.0, Q=0.0,
                        converged=True, n_starts=1) for c, m in zip(cs, ms)]
    return SweepReport(recs, [], consts, "x")


@pytest.fixture(scope="module")
def three_point(consts):
    cs = [consts.c0 / 8, consts.c0 / 4, consts.c0 / 2]
    return sweep_mass(cs, 1.0, 2.5, consts, FAST, 4, GRID)


def test_three_point_sweep_negative_levels(three_point):
    assert [r.converged for r in three_point.records] == [True] * 3
    assert all(r.m_est < 0 for r in three_point.records)
    assert all(c["verdict"] == "pass" for c in three_point.checks)
    assert list(three_point.c) == sorted(three_point.c)
    assert all(r.m_bar == r.m_est for r in three_point.records)


def test_warm_start_never_worse_than_cold(three_point, consts):
    for r in three_point.records:
        cold = multi_start(ModelParams(1.0, 2.5, r.c), consts, FAST, 4, GRID)
        assert r.m_est <= cold.breakdown.I


def test_sweep_outputs_are_deterministic(three_point, consts):
    again = sweep_mass(list(three_point.c), 1.0, 2.5, consts, FAST, 4, GRID)
    assert again.to_csv() == three_point.to_csv()
    assert json.dumps(again.to_dict()) == json.dumps(three_point.to_dict())
    rows = list(csv.reader(io.StringIO(three_point.to_csv())))
    assert tuple(rows[0]) == SWEEP_COLUMNS
    assert [float(r[0]) for r in rows[1:]] == list(three_point.c)
    assert float(rows[1][0]) == three_point.records[0].c  # 17 digits round-trip exactly
    assert all(r[-1] == "0" for r in rows[1:])
    timed = three_point.to_csv(timing=True).splitlines()[1].split(",")[-1]
    assert float(timed) > 0


def test_subadditivity_on_computed_sweep(three_point):
    out = check_subadditivity(three_point, 1e-6)
    assert len(out["checks"]) == 2
    # c0/2 - c0/8 is not on the grid
    assert out["skipped"] == [(three_point.c[2], three_point.c[0])]
    for c in out["checks"]:
        assert c["verdict"] == "pass" and c["inputs"]["strict_margin"] > 0
        assert set(c) == {"name", "value", "tolerance", "verdict", "anchor", "inputs"}


def test_continuity_in_mass(consts):
    c = consts.c0 / 4
    def m(x):
        return multi_start(ModelParams(1.0, 2.5, x), consts, FAST, 2, GRID).breakdown.I
    base = m(c)
    d1, d2 = abs(m(1.01 * c) - base), abs(m(1.001 * c) - base)
    assert d2 < 0.2 * d1


def test_sweep_guards(consts):
    with pytest.raises(ValueError):
        sweep_mass([], 1.0, 2.5, consts)
    with pytest.raises(ValueError):
        sweep_mass([0.1, 0.2, consts.c0], 1.0, 2.5, consts)


def test_failures_are_recorded_and_sweep_continues(consts):
    rep = sweep_mass([consts.c0 / 8, consts.c0 / 4, consts.c0 / 2], 1.0, 2.5, consts,
                     MinimizeConfig(max_iter=1), 1, GRID)
    assert not any(r.converged for r in rep.records)
    assert all(math.isnan(r.m_est) for r in rep.records)
    assert len(rep.failed) == 3 and "all starts failed" in rep.records[0].message


def test_subadditivity_detector(consts):
    assert check_subadditivity(report_from([1.0], [-1.0], consts), 1e-6) == dict(checks=[],
                                                                                   skipped=[])
    rep = report_from([1.0, 2.0, 3.5], [-1.0, -1.5, -4.0], consts)
    out = check_subadditivity(rep, 1e-6)
    assert [c["verdict"] for c in out["checks"]] == ["fail"]  # m(2) > 2 m(1)
    assert out["checks"][0]["value"] == pytest.approx(0.5)
    assert (3.5, 1.0) in out["skipped"] and (3.5, 2.0) not in out["skipped"]


def test_ratio_detector(consts):
    cs = dyadic_grid(1.0, 6)
    flat = check_ratio_conditions(report_from(cs, [-1.0] * 6, consts))
    assert len(flat["violations"]) == 5 and flat["checks"][0]["verdict"] == "margin"
    good = check_ratio_conditions(report_from(cs, [-c**1.5 for c in cs], consts))
    assert good["checks"][0]["verdict"] == "pass" and good["checks"][1]["verdict"] == "pass"
    assert good["checks"][1]["value"] == pytest.approx(0.5)
    with pytest.raises(ValueError):
        check_ratio_conditions(report_from(cs[:3], [-1.0] * 3, consts))
    with pytest.raises(ValueError):
        check_ratio_conditions(report_from([1.0, 1.5, 2.0, 2.5], [-1.0] * 4, consts))


def test_scaling_path_checks(minimizer, half_params, grid):
    out = check_scaling_paths(minimizer.field, half_params, (-1.0, 0.0, 1.0))
    assert [c["verdict"] for c in out["checks"]] == ["pass", "pass"]
    assert out["checks"][1]["value"] <= 1e-10
    assert out["slope"] == pytest.approx(minimizer.breakdown.Q, rel=1e-6, abs=1e-12)
    with pytest.raises(ValueError):
        check_scaling_paths(zeros(grid), half_params)


def test_c_grid_parsing():
    assert parse_c_grid("dyadic:3", 8.0) == [1.0, 2.0, 4.0]
    assert parse_c_grid("0.5,0.25", 8.0) == [2.0, 4.0]
    with pytest.raises(ValueError):
        dyadic_grid(1.0, 0)


def test_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("[model]\nmu = 2\np = 2.4\n[grid]\nnode_count = 512\n"
                    "[optimizer]\nseed = 9\n[sweep]\nwarm_start = false\n")
    cfg = load_config(path)
    assert cfg["model"] == {"mu": 2.0, "p": 2.4}
    assert cfg["grid"]["node_count"] == 512 and cfg["sweep"]["warm_start"] is False
    path.write_text("[model]\nmu = 2\nlambda = 3\n")
    with pytest.raises(ValueError, match="model.lambda"):
        load_config(path)
    path.write_text("[solver]\nmu = 2\n")
    with pytest.raises(ValueError, match="solver"):
        load_config(path)


def test_seed_environment(monkeypatch):
    monkeypatch.delenv("BP_SEED", raising=False)
    assert apply_env(3) == 3
    monkeypatch.setenv("BP_SEED", "11")
    assert apply_env(3) == 11
