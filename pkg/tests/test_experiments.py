import pandas as pd
import pytest

from tollsub.repository.results import csv_header, render_csv, write_csv
from tollsub.usecase.experiments import (
    STRICT_MARGIN,
    fig1_sweep,
    fig2a_sweep,
    fig2b_sweep,
    solve_instance,
    theorem1_check,
    theorem2_check,
)
from tollsub.usecase.incentives import MarginalCost
from tollsub.usecase.poa import affine_toll_poa_formula, smc_single_class_poa
from tollsub.usecase.search import AffineGrid


def test_solve_instance_applies_the_mechanism(pigou):
    outcome = solve_instance(pigou, MarginalCost(), restarts=0)
    assert outcome.instance.mechanism == "mc"
    assert outcome.report.poa == pytest.approx(1.0, abs=1e-6)
    assert outcome.optimal.kind == "optimal"


def test_fig1_columns_and_values():
    frame = fig1_sweep([0.0, 1.0], p_max=2, restarts=0)
    assert list(frame["beta"]) == [0.0, 1.0]
    assert {"toll_p1", "toll_p2", "subsidy_p1", "subsidy_p2", "poa_toll_tight", "poa_subsidy_tight"} <= set(frame)
    first, last = frame.iloc[0], frame.iloc[1]
    assert first["toll_p1"] == pytest.approx(4.0 / 3.0, abs=1e-6)
    assert first["subsidy_p1"] == pytest.approx(4.0 / 3.0, abs=1e-6)
    # a subsidy bounded by 1 reaches p/(p+1), which makes every Pigou member optimal
    assert last["poa_subsidy_tight"] == pytest.approx(1.0, abs=1e-6)
    assert (frame["poa_subsidy_tight"] <= frame["poa_toll_tight"] + 1e-7).all()
    assert not frame["uncertified"].any()


def test_fig2a_follows_the_closed_forms(coarse_grid):
    frame = fig2a_sweep([0.0, 0.5, 1.0], coarse_grid, restarts=0)
    for _, row in frame.iterrows():
        assert row["toll_formula"] == pytest.approx(affine_toll_poa_formula(row["beta"]))
        assert row["toll_formula"] - 5e-3 <= row["empirical_toll"] <= row["toll_formula"] + 1e-6
        assert row["empirical_subsidy"] <= row["subsidy_formula"] + 1e-6
    assert frame.iloc[-1]["subsidy_formula"] == 1.0


def test_fig2b_at_homogeneity(coarse_grid):
    frame = fig2b_sweep([1.0], grid=coarse_grid, restarts=0)
    row = frame.iloc[0]
    assert row["s_upper"] == pytest.approx(1.0)
    assert row["empirical_smc"] == pytest.approx(1.0, abs=1e-6)
    assert row["empirical_nes"] == pytest.approx(1.0, abs=1e-6)
    assert row["nes_formula"] >= row["smc_formula"]


def test_fig2b_formulas_separate_under_heterogeneity():
    # one even mass split keeps the two-class screen small
    frame = fig2b_sweep([0.25], grid=AffineGrid(coef_points=5, coef_max=2.0, mass_splits=1), restarts=0)
    row = frame.iloc[0]
    assert row["s_upper"] == pytest.approx(4.0)
    assert row["nes_formula"] > row["smc_formula"]
    assert row["smc_single_class"] == pytest.approx(1.125)
    assert row["exceeds_formula"] == pytest.approx(max(row["empirical_smc"] - row["smc_formula"], 0.0), abs=1e-6)


@pytest.mark.slow
def test_smc_search_follows_the_single_class_curve():
    qs = [0.1, 0.25, 0.5, 0.75]
    frame = fig2b_sweep(qs, restarts=0)
    for q, (_, row) in zip(qs, frame.iterrows()):
        assert row["smc_single_class"] == pytest.approx(smc_single_class_poa(q))
        assert row["empirical_smc"] == pytest.approx(row["smc_single_class"], abs=2e-3)
        assert row["empirical_smc"] > row["smc_formula"]
        assert row["exceeds_formula"] > 0.0


def test_theorem1_holds_on_the_coarse_grid(coarse_grid):
    frame = theorem1_check([0.5], coarse_grid, restarts=0)
    assert list(frame.columns[:2]) == ["theorem", "beta"]
    assert frame["passed"].all()
    assert frame.iloc[0]["margin"] >= 0.0


@pytest.mark.parametrize("beta", [0.2, 0.4, 0.6, 0.8])
def test_subsidy_beats_toll_by_a_clear_margin(beta):
    row = theorem1_check([beta], restarts=0).iloc[0]
    assert row["margin"] >= STRICT_MARGIN
    assert row["strict"]
    assert row["passed"]


def test_theorem2_pair_is_identical_without_heterogeneity(coarse_grid):
    frame = theorem2_check([1.0], 0.5, grid=coarse_grid, restarts=0)
    row = frame.iloc[0]
    assert row["beta_subsidy"] == pytest.approx(1.0 / 3.0)
    assert row["margin"] == pytest.approx(0.0, abs=1e-6)
    assert row["passed"]


def test_theorem2_subsidy_is_worse_under_heterogeneity(coarse_grid):
    row = theorem2_check([0.25], 0.5, grid=coarse_grid, restarts=0).iloc[0]
    assert row["margin"] > 0.0
    assert row["subsidy"] > row["toll"]
    assert row["passed"]


def test_csv_output_is_deterministic(tmp_path):
    frame = pd.DataFrame({"beta": [0.0, 0.5], "poa": [4.0 / 3.0, 1.0666666666666667], "passed": [True, True]})
    header = csv_header("fig2a_sweep", "grid: test")
    first = render_csv(frame, header)
    assert first == render_csv(frame.copy(), header)
    lines = first.splitlines()
    assert lines[0].startswith("# tollsub ")
    assert all(line.startswith("# ") for line in lines[:3])
    assert lines[3] == "beta,poa,passed"
    assert lines[4] == "0,1.33333333333,True"

    path = tmp_path / "out" / "fig.csv"
    write_csv(frame, path, header)
    assert path.read_text(encoding="utf-8") == first
    assert pd.read_csv(path, comment="#")["poa"].iloc[1] == pytest.approx(1.06666666667)


def test_csv_to_standard_output(capsys):
    write_csv(pd.DataFrame({"q": [1.0]}), "-")
    assert capsys.readouterr().out == "q\n1\n"
