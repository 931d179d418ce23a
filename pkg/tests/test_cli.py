import pandas as pd
import pytest

from tollsub.main import main
from tollsub.usecase.incentives import OptBoundedToll


def test_solve_prints_the_price_of_anarchy(pigou_file, capsys):
    path = pigou_file()
    assert main(["solve", "--instance", str(path), "--mech", "none", "--restarts", "0"]) == 0
    out = capsys.readouterr().out
    assert "instance: pigou_p1" in out
    assert "PoA: 1.333333333" in out
    assert "certified: True" in out


def test_solve_with_marginal_cost(pigou_file, capsys):
    assert main(["solve", "--instance", str(pigou_file()), "--mech", "mc", "--restarts", "0"]) == 0
    assert "PoA: 1.000000000" in capsys.readouterr().out


def test_solve_keeps_incentives_from_the_file(pigou_file, capsys):
    path = pigou_file(mechanism=OptBoundedToll(0.5), name="tolled")
    assert main(["solve", "--instance", str(path), "--restarts", "0"]) == 0
    out = capsys.readouterr().out
    assert "mechanism: toll:β=0.5" in out
    assert "nash latency: 0.777777778" in out


def test_solve_two_classes_from_flags(pigou_file, capsys):
    args = ["solve", "--instance", str(pigou_file()), "--mech", "subsidy:β=0.25", "--sL", "1", "--sU", "3", "--restarts", "0"]
    assert main(args) == 0
    out = capsys.readouterr().out
    assert "class s=1 mass=0.5" in out
    assert "class s=3 mass=0.5" in out


def test_solve_writes_a_csv_row(pigou_file, tmp_path, capsys):
    out = tmp_path / "solve.csv"
    assert main(["solve", "--instance", str(pigou_file()), "--restarts", "0", "--out", str(out)]) == 0
    frame = pd.read_csv(out, comment="#")
    assert frame["poa"].iloc[0] == pytest.approx(4.0 / 3.0, abs=1e-6)
    assert "nash[0:e1]" in frame.columns


def test_poa_over_a_family(pigou_file, capsys):
    paths = [str(pigou_file(p)) for p in (1, 2)]
    assert main(["poa", "--instance", paths[0], "--instance", paths[1], "--restarts", "0"]) == 0
    out = capsys.readouterr().out
    assert "argmax: pigou_p2 (2 members, 0 excluded)" in out
    assert "PoA: 1.625" in out


def test_malformed_instance_exits_2(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{", encoding="utf-8")
    assert main(["solve", "--instance", str(path)]) == 2
    assert "error:" in capsys.readouterr().err


def test_usage_errors_exit_1(pigou_file, capsys):
    assert main(["solve", "--instance", str(pigou_file()), "--mech", "bogus"]) == 1
    assert main([]) == 1
    assert main(["solve"]) == 1
    assert main(["check"]) == 1
    assert "error:" in capsys.readouterr().err


def test_failed_check_exits_4(monkeypatch, tmp_path):
    failing = pd.DataFrame(
        {
            "theorem": [1],
            "beta": [0.5],
            "toll": [1.0],
            "subsidy": [1.1],
            "margin": [-0.1],
            "passed": [False],
            "vi_gap": [0.0],
            "uncertified": [False],
        }
    )
    monkeypatch.setattr("tollsub.cli.commands.check.theorem1_check", lambda *args, **kwargs: failing)
    assert main(["check", "--theorem", "1", "--out", str(tmp_path / "check.csv")]) == 4


def test_fig2a_writes_a_commented_csv(tmp_path):
    out = tmp_path / "fig2a.csv"
    args = ["fig2a", "--beta-grid", "0:0.5:0.5", "--coef-points", "5", "--mass-splits", "1", "--restarts", "0", "--out", str(out)]
    assert main(args) == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("# tollsub ")
    header = next(line for line in lines if not line.startswith("#"))
    assert header.startswith("beta,toll_formula,subsidy_formula,empirical_toll,empirical_subsidy")
    assert len(pd.read_csv(out, comment="#")) == 2


def test_fig2b_header_records_the_single_class_excess(tmp_path):
    out = tmp_path / "fig2b.csv"
    args = ["fig2b", "--q-grid", "1", "--coef-points", "5", "--mass-splits", "1", "--restarts", "0", "--out", str(out)]
    assert main(args) == 0
    comments = [line for line in out.read_text(encoding="utf-8").splitlines() if line.startswith("# ")]
    assert any(line.startswith("# empirical_smc can exceed smc_formula") for line in comments)
    frame = pd.read_csv(out, comment="#")
    assert frame["smc_single_class"].iloc[0] == pytest.approx(1.0)


def test_experiment_file_with_flag_override(tmp_path):
    config = tmp_path / "fig1.env"
    config.write_text("BETA_GRID=0:1:1\nP_MAX=1\nRESTARTS=5\n", encoding="utf-8")
    out = tmp_path / "fig1.csv"
    assert main(["fig1", "--config", str(config), "--restarts", "0", "--out", str(out)]) == 0
    text = out.read_text(encoding="utf-8")
    assert "restarts=0" in text
    frame = pd.read_csv(out, comment="#")
    assert list(frame["beta"]) == [0.0, 1.0]
    assert frame["toll_p1"].iloc[1] == pytest.approx(1.0, abs=1e-6)
