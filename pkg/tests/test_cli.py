import pytest

from solitonlab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_simulate_hand_trace(capsys):
    code, out, _ = run(capsys, "simulate", "--system", "bbs", "--init", "110100", "--steps", "3")
    rows = out.splitlines()
    assert code == 0 and len(rows) == 4
    assert rows[1].translate(str.maketrans(".o", "01")) == "001011"


def test_simulate_vacuum(capsys):
    code, out, _ = run(capsys, "simulate", "--system", "bbs", "--init", "", "--steps", "5")
    rows = out.splitlines()
    assert code == 0 and len(rows) == 6 and set("".join(rows)) == {"."}


def test_simulate_row_count(capsys):
    code, out, _ = run(capsys, "simulate", "--system", "udkdv", "--L", "2", "--init-spec",
                       "truncexp(lambda=1,c=0,L=2)", "--sites", "1000", "--steps", "10", "--seed", "7")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "t,n,value" and len(lines) == 1 + 11 * 1000


def test_simulate_toda_csv(capsys, tmp_path):
    path = tmp_path / "out.csv"
    code, _, _ = run(capsys, "simulate", "--system", "udtoda", "--init", "1:0.5,0:2", "--steps", "2",
                     "--output", str(path))
    text = path.read_text()
    assert code == 0 and text.startswith("t,n,Q,E\n") and "\r" not in text


def test_simulate_errors(capsys):
    assert run(capsys, "simulate", "--system", "dkdv", "--init", "1,-1")[0] == 2
    assert run(capsys, "simulate", "--system", "bbs", "--init", "1021")[0] == 2
    assert run(capsys, "simulate", "--system", "bbs", "--init-spec", "bernoulli(p=2)")[0] == 2
    assert run(capsys, "simulate", "--system", "udkdv", "--format", "diagram")[0] == 2
    code, _, err = run(capsys, "simulate", "--system", "bbs", "--init", "1" * 40, "--steps", "3",
                       "--max-sites", "10")
    assert code == 3 and "step" in err


@pytest.mark.parametrize("argv", [
    ["equiv", "--system", "bbs", "--random", "100", "--steps", "10"],
    ["equiv", "--system", "dtoda", "--random", "100", "--steps", "10", "--tol", "1e-9"],
    ["equiv", "--system", "udkdv", "--steps", "0"],
])
def test_equiv_examples(capsys, argv):
    assert run(capsys, *argv)[0] == 0


def test_verify_small_suite(capsys, tmp_path):
    suite = tmp_path / "s.txt"
    suite.write_text("balance-exact p=0.25\nbalance-exact p=0.25 r=0.5 expect=fail\n")
    report = tmp_path / "r.csv"
    code, out, _ = run(capsys, "verify", str(suite), "--report", str(report))
    assert code == 0 and report.read_text().startswith("test,target,subtest")
    suite.write_text("balance-exact p=0.25 r=0.5\n")
    assert run(capsys, "verify", str(suite))[0] == 1


def test_verify_malformed_literal(capsys, tmp_path):
    suite = tmp_path / "bad.txt"
    suite.write_text("# header\nbalance-exact p=0.25\ncarrier system=bbs specs=bernoulli(p=0.25\n")
    code, _, err = run(capsys, "verify", str(suite))
    assert code == 2 and "line 3" in err


def test_sample(capsys):
    code, out, _ = run(capsys, "sample", "--spec", "onesidedexp(lambda1=1,lambda2=2,a=0.5)", "--n", "4")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "even,odd" and len(lines) == 5
    assert run(capsys, "sample", "--spec", "bogus(x=1)")[0] == 2


def test_seed_env(capsys, monkeypatch):
    a = run(capsys, "sample", "--spec", "shiftexp(lambda=1)", "--n", "5")[1]
    monkeypatch.setenv("SOLITONLAB_SEED", "123")
    b = run(capsys, "sample", "--spec", "shiftexp(lambda=1)", "--n", "5")[1]
    c = run(capsys, "sample", "--spec", "shiftexp(lambda=1)", "--n", "5", "--seed", "123")[1]
    assert a != b and b == c
    monkeypatch.setenv("SOLITONLAB_SEED", "abc")
    assert run(capsys, "sample", "--spec", "shiftexp(lambda=1)")[0] == 2


def test_help_lists_grammar(capsys):
    assert run(capsys, "--help")[0] == 0
    out = capsys.readouterr().out
    code = main(["simulate", "--help"])
    out = capsys.readouterr().out
    from solitonlab.measures import FAMILIES
    assert code == 0 and all(f"{name}(" in out for name in FAMILIES)
