import csv
import io
import json

import numpy as np
import pytest

from lbubfl.cli import BENCH_COLUMNS, main
from lbubfl.core import save_instance


def test_gen_deterministic(tmp_path):
    for d in ("a", "b"):
        assert main(["gen", "-F", "4", "-C", "10", "-L", "2", "-U", "4", "--seed", "1",
                     "--count", "2", "-o", str(tmp_path / d)]) == 0
    for name in ("inst_0.json", "inst_1.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


@pytest.mark.parametrize("args", [["-L", "5", "-U", "4", "-C", "10"],
                                  ["-L", "4", "-U", "5", "-C", "7"]])
def test_gen_rejects_parameters(tmp_path, args, capsys):
    assert main(["gen", "-F", "3", *args, "-o", str(tmp_path)]) == 4
    err = capsys.readouterr().err
    assert "k*L" in err or "exceeds" in err


def test_solve_t1(tmp_path, t1, capsys):
    p = tmp_path / "t1.json"
    save_instance(t1, p)
    lp = tmp_path / "lp.txt"
    assert main(["solve", str(p), "--check-invariants", "--oracle", "--trace",
                 "--export-lp", str(lp)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["solution"]["min_load"] >= 2
    assert out["report"]["oracle_opt"] >= out["report"]["lp_opt"] - 1e-9
    assert lp.read_text().startswith("minimize")


def test_solve_metric_error(tmp_path):
    data = {"L": 1, "U": 1, "facilities": [{"id": "a", "cost": 0}, {"id": "b", "cost": 0}],
            "clients": [{"id": "c"}], "matrix": [0, 1, 5, 1, 0, 1, 5, 1, 0]}
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(data))
    assert main(["solve", str(p)]) == 3


def test_solve_bad_ell(tmp_path, t1):
    p = tmp_path / "t1.json"
    save_instance(t1, p)
    assert main(["solve", str(p), "--ell", "2.0"]) == 4


def test_solve_infeasible(tmp_path):
    from lbubfl.core import Instance
    p = tmp_path / "inf.json"
    save_instance(Instance.on_line([0, 1], [0, 1, 2], [0, 0], 2, 2), p)
    assert main(["solve", str(p)]) == 2


def test_bench_empty(tmp_path, capsys):
    assert main(["bench", str(tmp_path)]) == 0
    assert capsys.readouterr().out.strip() == ",".join(BENCH_COLUMNS)


def test_bench_rows(tmp_path, capsys):
    main(["gen", "-F", "4", "-C", "9", "-L", "2", "-U", "3", "--count", "3", "-o", str(tmp_path)])
    (tmp_path / "broken.json").write_text("{}")
    capsys.readouterr()
    assert main(["bench", str(tmp_path)]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert [r["id"] for r in rows] == ["broken", "inst_0", "inst_1", "inst_2"]
    assert rows[0]["cost"].startswith("error:")
    for r in rows[1:]:
        assert float(r["ratio"]) > 0 and float(r["opt?"]) >= float(r["lp_opt"]) - 1e-9


def test_oracle_command(tmp_path, t1, capsys):
    p = tmp_path / "t1.json"
    save_instance(t1, p)
    assert main(["oracle", str(p)]) == 0
    assert json.loads(capsys.readouterr().out)["min_load"] >= 2
