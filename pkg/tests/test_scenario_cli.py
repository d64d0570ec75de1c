import numpy as np
import pytest

from orbitkit.cli import main, run_scenario
from orbitkit.errors import DimensionMismatch, ParseError, UnknownBuiltin
from orbitkit.report import read_point_cloud, strip_timestamp
from orbitkit.scenario import parse_scenario

HEIS_SCENARIO = """\
version 1
family {
  builtin heisenberg {
    radius 8
  }
}
lb {
  order 2
}
defaults {
  tol 1e-09
  seed 42
}
command verdict {
  point 0 0 0
  k-max 3
}
"""

POLY_SCENARIO = """\
version 1
space {
  dim 2
  norm euclidean
}
family {
  domain {
    center 0 0
    radius 4
  }
  poly X1 {
    component 0 {
      term 1.0 0 0
    }
  }
  poly X2 {
    component 1 {
      term 1.0 1 0
    }
  }
}
command bracket-chain {
  point 0 0
  k-max 2
}
"""


class TestParsing:
    def test_builtin_heisenberg(self):
        sc = parse_scenario(HEIS_SCENARIO)
        fam = sc.build_family()
        assert fam.space.dimension == 3
        assert len(fam.members) == 2
        assert len(sc.commands()) == 1

    def test_affine_builtin(self):
        sc = parse_scenario("""\
family {
  builtin affine-l1 {
    dim 8
    count 8
  }
}
command check-lb {
}
""")
        fam = sc.build_family()
        assert len(fam.members) == 8
        assert fam.space.truncation_of_l1
        # constant-direction members: evaluation is point-independent
        a = fam.members[3](np.zeros(8))
        b = fam.members[3](np.ones(8))
        assert np.array_equal(a, b)

    def test_duplicate_label_rejected(self):
        bad = POLY_SCENARIO.replace("poly X2", "poly X1")
        with pytest.raises(ParseError):
            parse_scenario(bad)

    def test_unknown_builtin(self):
        with pytest.raises(UnknownBuiltin):
            parse_scenario("family {\n  builtin nosuch {\n  }\n}\n")

    def test_unbalanced_braces(self):
        with pytest.raises(ParseError):
            parse_scenario("family {\n  builtin heisenberg {\n}\n")

    def test_dimension_mismatch(self):
        bad = POLY_SCENARIO.replace("center 0 0", "center 0 0 0")
        with pytest.raises(DimensionMismatch):
            parse_scenario(bad)

    def test_unknown_command(self):
        with pytest.raises(ParseError):
            parse_scenario(HEIS_SCENARIO.replace("command verdict", "command dance"))

    def test_poly_family_builds(self):
        sc = parse_scenario(POLY_SCENARIO)
        fam = sc.build_family()
        assert np.array_equal(fam.members[1](np.array([2.0, 0.0])), [0.0, 2.0])

    def test_round_trip_byte_identical(self):
        sc = parse_scenario(HEIS_SCENARIO)
        first = sc.emit()
        second = parse_scenario(first).emit()
        assert first == second
        sc2 = parse_scenario(POLY_SCENARIO)
        assert sc2.emit() == parse_scenario(sc2.emit()).emit()

    def test_operator_family_builtin(self):
        sc = parse_scenario("""\
family {
  builtin operator-family {
    dim 2
    count 2
    matrix-term 1.0 0 0 0 0
    matrix-term 1.0 0 0 1 1
    matrix-term 1.0 1 0 1 0
  }
}
command check-lb {
}
""")
        fam = sc.build_family()
        assert len(fam.members) == 2
        # first row of the matrix map is the identity part
        assert np.array_equal(fam.members[0](np.array([1.0, 0.0])), [1.0, 1.0])


class TestRunner:
    def test_verdict_report(self, tmp_path):
        sc = parse_scenario(HEIS_SCENARIO)
        code = run_scenario(sc, tmp_path / "out")
        assert code == 0
        text = (tmp_path / "out" / "report-01-verdict.txt").read_text()
        assert "kind exactly_controllable" in text
        assert "ranks 2 3" in text
        assert "provenance declared" in text
        assert "status ok" in text

    def test_guard_violation_captured(self, tmp_path):
        sc = parse_scenario(HEIS_SCENARIO + """\
command compose {
  point 0 0 0
  entry 0 2.0
  entry 1 2.0
}
""")
        code = run_scenario(sc, tmp_path / "out")
        assert code == 1
        text = (tmp_path / "out" / "report-02-compose.txt").read_text()
        assert "status error" in text
        assert "type GuardViolated" in text

    def test_unsafe_override(self, tmp_path):
        sc = parse_scenario(HEIS_SCENARIO + """\
command compose {
  point 0 0 0
  entry 0 2.0
  entry 1 2.0
  unsafe on
}
""")
        code = run_scenario(sc, tmp_path / "out")
        assert code == 0
        text = (tmp_path / "out" / "report-02-compose.txt").read_text()
        assert "unsafe on" in text

    def test_orbit_sample_cloud_file(self, tmp_path):
        sc = parse_scenario(HEIS_SCENARIO + """\
command orbit-sample {
  point 0 0 0
  budget 100
  max-word-len 10
  out cloud.txt
}
""")
        code = run_scenario(sc, tmp_path / "out")
        assert code == 0
        pts = read_point_cloud(tmp_path / "out" / "cloud.txt")
        assert pts.shape[1] == 3
        header = (tmp_path / "out" / "cloud.txt").read_text().splitlines()[0]
        assert header.split() == ["x0", "x1", "x2"]
        text = (tmp_path / "out" / "report-02-orbit-sample.txt").read_text()
        assert f"points {pts.shape[0]}" in text

    def test_determinism_same_seed(self, tmp_path):
        body = HEIS_SCENARIO + """\
command orbit-sample {
  point 0 0 0
  budget 150
  max-word-len 12
  out cloud.txt
}
command compose {
  point 0 0 0
  entry 0 0.2
  entry 1 -0.1
}
"""
        sc = parse_scenario(body)
        run_scenario(sc, tmp_path / "a")
        run_scenario(sc, tmp_path / "b")
        for f in sorted((tmp_path / "a").iterdir()):
            ta = strip_timestamp(f.read_text())
            tb = strip_timestamp((tmp_path / "b" / f.name).read_text())
            assert ta == tb

    def test_bad_entry_index_captured(self, tmp_path):
        sc = parse_scenario(HEIS_SCENARIO + """\
command compose {
  point 0 0 0
  entry 7 0.1
}
""")
        code = run_scenario(sc, tmp_path / "out")
        assert code == 1
        text = (tmp_path / "out" / "report-02-compose.txt").read_text()
        assert "status error" in text

    def test_seed_override_changes_cloud(self, tmp_path):
        sc = parse_scenario(HEIS_SCENARIO + """\
command orbit-sample {
  point 0 0 0
  budget 100
  max-word-len 10
  out cloud.txt
}
""")
        run_scenario(sc, tmp_path / "a")
        run_scenario(sc, tmp_path / "b", seed=7)
        ca = (tmp_path / "a" / "cloud.txt").read_text()
        cb = (tmp_path / "b" / "cloud.txt").read_text()
        assert ca != cb

    def test_flow_command(self, tmp_path):
        sc = parse_scenario(HEIS_SCENARIO + """\
command flow {
  point 0 0 0
  duration 0.25
  piece 0 0.25 0 1.0
  variational on
}
""")
        code = run_scenario(sc, tmp_path / "out")
        assert code == 0
        text = (tmp_path / "out" / "report-02-flow.txt").read_text()
        assert "endpoint 0.25 0.0 0.0" in text
        assert "variational-row-0 1.0 0.0 0.0" in text


class TestCliEntry:
    def test_catalog(self, capsys):
        assert main(["catalog"]) == 0
        out = capsys.readouterr().out
        assert "heisenberg" in out and "grushin" in out

    def test_check_ok(self, tmp_path, capsys):
        p = tmp_path / "s.okit"
        p.write_text(HEIS_SCENARIO)
        assert main(["check", str(p)]) == 0

    def test_parse_error_exit_code(self, tmp_path, capsys):
        p = tmp_path / "bad.okit"
        p.write_text("family {\n  wat\n")
        assert main(["check", str(p)]) == 2
        assert main(["run", str(p)]) == 2

    def test_run_writes_reports(self, tmp_path, capsys):
        p = tmp_path / "s.okit"
        p.write_text(HEIS_SCENARIO)
        assert main(["run", str(p), "--out", str(tmp_path / "out")]) == 0
        assert (tmp_path / "out" / "report-01-verdict.txt").exists()

    def test_global_unsafe_flag(self, tmp_path, capsys):
        p = tmp_path / "s.okit"
        p.write_text(HEIS_SCENARIO + """\
command compose {
  point 0 0 0
  entry 0 2.0
  entry 1 2.0
}
""")
        assert main(["run", str(p), "--out", str(tmp_path / "g")]) == 1
        assert main(["run", str(p), "--out", str(tmp_path / "u"), "--unsafe"]) == 0

    def test_lb_region_override(self, tmp_path):
        sc = parse_scenario("""\
family {
  builtin heisenberg {
    radius 8
  }
}
lb {
  order 2
  region {
    center 0 0 0
    radius 2
  }
}
command check-lb {
}
""")
        code = run_scenario(sc, tmp_path / "out")
        assert code == 0
        text = (tmp_path / "out" / "report-01-check-lb.txt").read_text()
        assert "region-radius 2.0" in text
