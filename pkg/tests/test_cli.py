import json
from pathlib import Path

import pytest

from nlqual import cli
from nlqual.instances import EXAMPLES

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def _close(a, b, path="$"):
    if isinstance(a, float) or isinstance(b, float):
        assert a == pytest.approx(b, rel=1e-9, abs=1e-12), path
    elif isinstance(a, dict):
        assert sorted(a) == sorted(b), path
        for k in a:
            _close(a[k], b[k], f"{path}.{k}")
    elif isinstance(a, list):
        assert len(a) == len(b), path
        for i, (u, v) in enumerate(zip(a, b)):
            _close(u, v, f"{path}[{i}]")
    else:
        assert a == b, path


@pytest.mark.parametrize("name", EXAMPLES)
def test_report_matches_golden_file(capsys, name):
    code, out, _ = run(capsys, "report", name, "--json")
    assert code == 0
    got = json.loads(out)
    got.pop("wall_time")
    _close(got, json.loads((GOLDEN / f"report_{name}.json").read_text()))


def test_reports_are_byte_identical_except_wall_time(capsys, tmp_path):
    texts = []
    for k in range(2):
        out = tmp_path / f"r{k}.json"
        assert run(capsys, "check", "example2", "--seed", "7", "--out", str(out))[0] == 0
        d = json.loads(out.read_text())
        d.pop("wall_time")
        texts.append(json.dumps(d, sort_keys=True))
    assert texts[0] == texts[1]


def test_example1_summary_lines(capsys):
    code, out, _ = run(capsys, "check", "example1", "--point", "1,0,1,0", "--conditions", "nnamcq,qn,rcpld,dqn")
    assert code == 0
    lines = dict(l.split() for l in out.strip().splitlines())
    assert lines == {"NNAMCQ": "CERTIFIED_FAILS", "QN_HORIZON": "CERTIFIED_HOLDS", "RCPLD_HORIZON": "CERTIFIED_HOLDS", "QN_CODERIV": "CERTIFIED_HOLDS"}


def test_file_paths_work(capsys, tmp_path):
    from nlqual.instances import example_dict

    f = tmp_path / "p.json"
    f.write_text(json.dumps(example_dict("example4")))
    code, out, _ = run(capsys, "kkt", str(f))
    assert code == 0 and out.startswith("KKT FOUND")


def test_subcommands_run(capsys, tmp_path):
    assert run(capsys, "subdiff", "example1", "--term", "1")[0] == 0
    assert run(capsys, "kkt", "example1", "--multipliers", "0,-1/2,-1/2")[1].startswith("KKT VERIFIED")
    code, out, _ = run(capsys, "penalize", "example1", "--samples", "2000")
    assert code == 0 and out.startswith("rho0=1.0")
    code, out, _ = run(capsys, "solve", "example1", "--rho", "1", "--start", "1,0,1,0")
    assert code == 0 and "KKT=FOUND" in out
    out_file = tmp_path / "solve.json"
    assert run(capsys, "solve", "prox_line", "--rho", "1", "--start", "0", "--out", str(out_file))[0] == 0
    assert json.loads(out_file.read_text())["results"]["solve"]["x"][0] == pytest.approx(9.84061076829815, abs=1e-6)


@pytest.mark.parametrize(
    "argv, code",
    [
        (["check", "no_such_file.json"], 2),
        (["check", "example1", "--point", "1,0"], 2),
        (["check", "example1", "--point", "1,0,x,0"], 2),
        (["check", "example1", "--conditions", "slater"], 2),
        (["check", "example1", "--radius-ladder", "a:b"], 2),
        (["penalize", "example1", "--rho", "-1"], 2),
        (["check", "example1", "--point", "0,0,0,0"], 3),
        (["kkt", "example3", "--point", "1"], 3),
        (["check", "example2"], 0),
    ],
)
def test_exit_codes(capsys, argv, code):
    got, _, err = run(capsys, *argv)
    assert got == code
    if code:
        assert "error" in json.loads(err)


def test_usage_errors_exit_with_two():
    with pytest.raises(SystemExit) as exc:
        cli.main(["check"])
    assert exc.value.code == 2
