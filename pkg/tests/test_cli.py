import json
import math

import numpy as np
import pytest

from pinnexp.cli import main, parse_rates, UsageError


def read_csv(path):
    lines = path.read_text().splitlines()
    return [ln for ln in lines if ln.startswith("#")], [ln.split(",") for ln in lines if not ln.startswith("#")]


def test_parse_rates():
    np.testing.assert_array_equal(parse_rates("-4:6:1"), np.arange(-4, 7))
    r = parse_rates("-6:6:0.05")
    assert len(r) == 241 and r[-1] == 6.0 and 0.05 in r
    for bad in ("1:0:1", "0:1:0", "0:1", "a:b:c", "0:inf:1"):
        with pytest.raises(UsageError):
            parse_rates(bad)


@pytest.mark.parametrize("argv", [[], ["bogus"], ["train", "--problem", "heat"],
                                  ["train", "--iters", "-3"], ["sweep", "--rates", "3:1:1"],
                                  ["theory", "--budget", "0"], ["train", "--iters", "x"]])
def test_usage_errors_exit_2(argv, tmp_path):
    assert main(argv + (["--out", str(tmp_path / "o")] if len(argv) > 1 else [])) == 2


def test_help_exits_0(capsys):
    assert main(["--help"]) == 0
    assert "train" in capsys.readouterr().out


def test_train_zero_iterations_matches_untrained(tmp_path):
    out = tmp_path / "run"
    assert main(["train", "--iters", "0", "--rate", "1", "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    _, rows = read_csv(out / "history.csv")
    assert rows[0] == ["iteration", "loss", "final_error", "integral_error"]
    assert len(rows) == 2
    assert float(rows[1][2]) == summary["final_error"]
    assert summary["iterations"] == 0
    assert (out / "params.bin").exists()


def test_train_deterministic(tmp_path):
    for d in ("a", "b"):
        assert main(["train", "--iters", "30", "--rate", "2", "--out", str(tmp_path / d)]) == 0
    for f in ("history.csv", "summary.json", "params.bin"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_train_divergence_exit_3(tmp_path, monkeypatch):
    import pinnexp.cli as cli
    from pinnexp.trainer import TrainConfig

    # a huge learning rate forces a non-finite update
    monkeypatch.setattr(cli, "TrainConfig", lambda **kw: TrainConfig(**kw, learning_rate=1e300))
    with np.errstate(all="ignore"):
        code = main(["train", "--iters", "20", "--out", str(tmp_path / "d")])
    assert code == 3
    assert (tmp_path / "d" / "history.csv").read_text().startswith("iteration,")


def test_sweep_sorted_with_argmin_footer(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--iters", "20", "--rates=-1:1:1", "--out", str(out)]) == 0
    footer, rows = read_csv(out)
    assert rows[0] == ["r", "final_error", "integral_error", "final_loss", "iterations", "seed"]
    rates = [float(r[0]) for r in rows[1:]]
    assert rates == [-1.0, 0.0, 1.0]
    errs = [float(r[1]) for r in rows[1:]]
    best = rates[int(np.argmin(errs))]
    assert footer == [f"# argmin r={best!r} final_error={min(errs)!r}"]


def test_sweep_parallel_equals_serial(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sweep", "--iters", "10", "--rates", "0:2:1", "--out", str(a)]) == 0
    assert main(["sweep", "--iters", "10", "--rates", "0:2:1", "--jobs", "2", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_theory_output(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["theory", "--lambda", "2", "--out", str(out)]) == 0
    header, rows = read_csv(out)
    fields = dict(kv.split("=") for kv in header[0][2:].split())
    assert float(fields["error_bound"]) == pytest.approx(0.30329, abs=5e-6)
    assert abs(float(fields["argmin_r"]) - 8 / 3) <= 0.05
    assert float(fields["oracle_optimum"]) == pytest.approx(float(fields["error_bound"]), rel=5e-3)
    assert len(rows) == 242


def test_theory_budget_scaling(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["theory", "--lambda", "1", "--rates=-2:2:0.5", "--out", str(a)])
    main(["theory", "--lambda", "1", "--rates=-2:2:0.5", "--budget", "200", "--out", str(b)])
    ea = np.array([float(r[1]) for r in read_csv(a)[1][1:]])
    eb = np.array([float(r[1]) for r in read_csv(b)[1][1:]])
    np.testing.assert_allclose(eb, ea / math.sqrt(2), rtol=1e-13)


def test_theory_zero_lambda_argmin(tmp_path):
    out = tmp_path / "t.csv"
    main(["theory", "--lambda", "0", "--out", str(out)])
    fields = dict(kv.split("=") for kv in read_csv(out)[0][0][2:].split())
    assert abs(float(fields["argmin_r"])) <= 0.05


def test_reference_linear(tmp_path):
    out = tmp_path / "lin.csv"
    assert main(["reference", "--problem", "linear", "--lambda", "2", "--npoints", "11", "--out", str(out)]) == 0
    _, rows = read_csv(out)
    assert rows[0] == ["t", "u"]
    t = np.array([float(r[0]) for r in rows[1:]])
    u = np.array([float(r[1]) for r in rows[1:]])
    np.testing.assert_allclose(u, math.sqrt(15) * np.exp(2 * t), rtol=1e-15)


def test_reference_lorenz(tmp_path):
    out = tmp_path / "lor.csv"
    assert main(["reference", "--problem", "lorenz", "--h", "0.01", "--out", str(out)]) == 0
    _, rows = read_csv(out)
    assert rows[0] == ["t", "x", "y", "z"] and len(rows) == 102
    assert rows[1] == ["0.0", "1.0", "1.0", "1.0"]


def test_reference_burgers_center_column(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["reference", "--problem", "burgers", "--nx", "257", "--T", "0.2", "--out", str(out)]) == 0
    _, rows = read_csv(out)
    assert rows[0] == ["t", "x", "u"]
    centre = [float(r[2]) for r in rows[1:] if float(r[1]) == 0.0]
    assert len(centre) == 101 and all(abs(u) < 1e-12 for u in centre)
    assert main(["reference", "--problem", "burgers", "--nx", "64", "--out", str(out)]) == 2
