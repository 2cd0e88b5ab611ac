import json
import math

import pytest

from surjunctive import __version__
from surjunctive.cli import (
    build_parser,
    jsonable,
    main,
    parse_exponent,
    parse_radii,
    resolve_config,
)
from surjunctive.config import config
from surjunctive.errors import ExpressionError


def read_jsonl(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


class TestArgumentParsing:
    """Test flag parsing helpers."""

    def test_radius_ranges(self):
        """Test 2..5 and 2,3,5."""
        assert parse_radii("2..5") == [2, 3, 4, 5]
        assert parse_radii("2,3,5") == [2, 3, 5]
        assert parse_radii([1, 2]) == [1, 2]

    def test_bad_radii(self):
        """Test that junk radii are usage errors."""
        with pytest.raises(ExpressionError):
            parse_radii("two")

    def test_exponent(self):
        """Test inf and numeric exponents."""
        assert parse_exponent("inf") == math.inf
        assert parse_exponent("1.5") == 1.5

    def test_jsonable(self):
        """Test that non-finite floats and complex values become JSON."""
        assert jsonable({"x": math.inf, "z": 1 + 2j}) == {"x": "inf", "z": [1.0, 2.0]}

    def test_flags_override_config_file(self, tmp_path):
        """Test TOML values with a flag winning."""
        path = tmp_path / "run.toml"
        path.write_text('group = "Z"\nradii = "1..3"\nseed = 7\n')

        args = build_parser().parse_args(["ball", "--config", str(path), "--seed", "9"])
        cfg = resolve_config(args)

        assert cfg.group == "Z"
        assert cfg.radii == [1, 2, 3]
        assert cfg.seed == 9


class TestMain:
    """Test end-to-end runs and exit codes."""

    def test_finite_kernel(self, tmp_path):
        """Test C4 with δ_e + δ_{g²}: not injective, exit 0."""
        out = tmp_path / "finite.jsonl"

        code = main(["finite", "--group", "C4", "--elem", "de+dg2", "--out", str(out)])

        lines = read_jsonl(out)
        assert code == 0
        assert lines[0]["type"] == "header"
        assert lines[1]["injective"] is False
        assert lines[1]["surjective"] is False
        assert lines[-1] == {"type": "summary", "ok": True, "failures": []}

    def test_ball_with_csv_and_plots(self, tmp_path):
        """Test ball sizes on F2 with every output file."""
        out, table, plots = tmp_path / "b.jsonl", tmp_path / "b.csv", tmp_path / "plots"

        code = main([
            "ball", "--group", "F2", "--radii", "0..3", "--out", str(out),
            "--csv", str(table), "--plot-dir", str(plots),
        ])

        assert code == 0
        assert [line["size"] for line in read_jsonl(out)[1:-1]] == [1, 5, 17, 53]
        table_lines = table.read_text().splitlines()
        plot_lines = (plots / "ball_size.csv").read_text().splitlines()
        assert table_lines[0].startswith(f"# surjunctive {__version__} ")
        assert json.loads(table_lines[0].split(" ", 3)[3])["group"] == "F2"
        assert table_lines[1] == "group,layers,radius,size,type"
        assert plot_lines[0] == table_lines[0]
        assert plot_lines[1:3] == ["x,y", "0,1"]

    def test_willis_small_radii(self, tmp_path):
        """Test the Willis command at r = 1, 2."""
        out = tmp_path / "w.jsonl"

        code = main(["willis", "--radii", "1,2", "--p", "1", "--out", str(out)])

        lines = read_jsonl(out)
        assert code == 0
        assert [line["radius"] for line in lines[1:-1]] == [1, 2]
        assert lines[-1]["trend"]["monotone"] is True

    def test_spectrum_kesten(self, tmp_path):
        """Test adjacency λ_max on F2 below 2√3."""
        out = tmp_path / "s.jsonl"

        code = main(["spectrum", "--group", "F2", "--radii", "1..4", "--p", "2",
                     "--out", str(out)])

        records = read_jsonl(out)[1:-1]
        assert code == 0
        assert all(r["lambda_max"] < r["kesten_bound"] for r in records)

    def test_nclp_matrix_file(self, tmp_path):
        """Test the matrix mode of nclp on diag(2, 1)."""
        matrix = tmp_path / "m.txt"
        matrix.write_text(
            "% surjunctive-coordinate 1\n% 2 2 2 unknown\n0 0 2.0 0.0\n1 1 1.0 0.0\n"
        )
        out = tmp_path / "n.jsonl"

        code = main(["nclp", "--matrix", str(matrix), "--p", "2", "--out", str(out)])

        record = read_jsonl(out)[1]
        assert code == 0
        assert record["norm"] == pytest.approx(math.sqrt(2.5))
        assert record["achieved"] == pytest.approx(2.0)

    def test_unknown_group_is_usage_error(self, tmp_path):
        """Test exit code 2 for a bad group."""
        assert main(["ball", "--group", "SL2", "--out", str(tmp_path / "x.jsonl")]) == 2

    def test_bad_radii_is_usage_error(self):
        """Test exit code 2 for unparseable radii."""
        assert main(["ball", "--radii", "a..b"]) == 2

    def test_hypothesis_failure_exit_code(self, tmp_path):
        """Test exit code 1 when a precondition fails during the run."""
        out = tmp_path / "h.jsonl"

        code = main(["herz", "--group", "F2", "--out", str(out)])

        assert code == 1
        assert read_jsonl(out)[-1]["ok"] is False

    def test_deterministic_output(self, tmp_path):
        """Test byte-identical files from two runs with one seed."""
        paths = [tmp_path / "a.jsonl", tmp_path / "b.jsonl"]
        for path in paths:
            main(["probe", "--group", "Z", "--elem", "walk", "--radii", "1..3",
                  "--p", "1.5", "--seed", "4", "--out", str(path)])

        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_deterministic_csv_across_paths(self, tmp_path):
        """Test that CSV tables and plots do not depend on where they are written."""
        runs = [tmp_path / "first", tmp_path / "second"]
        for run_dir in runs:
            main(["ball", "--group", "Z^2", "--radii", "0..2", "--out", str(run_dir / "b.jsonl"),
                  "--csv", str(run_dir / "b.csv"), "--plot-dir", str(run_dir / "plots")])

        for name in ("b.jsonl", "b.csv", "plots/ball_size.csv"):
            assert (runs[0] / name).read_bytes() == (runs[1] / name).read_bytes()

    def test_spectrum_decomposition(self, tmp_path):
        """Test the full spectrum of the walk on B_2 of Z: 2cos(kπ/6), k = 1..5."""
        out, plots = tmp_path / "s.jsonl", tmp_path / "plots"

        code = main(["spectrum", "--group", "Z", "--elem", "walk", "--radii", "2",
                     "--p", "2", "--out", str(out), "--plot-dir", str(plots)])

        record = read_jsonl(out)[1]
        expected = sorted(2 * math.cos(k * math.pi / 6) for k in range(1, 6))
        assert code == 0
        assert record["decomposition"]["eigenvalues"] == pytest.approx(expected, abs=1e-12)
        assert record["decomposition"]["residual"] < 1e-12
        assert record["lambda_max"] == pytest.approx(math.sqrt(3))
        points = (plots / "eigenvalues_r2.csv").read_text().splitlines()[2:]
        assert [float(line.split(",")[1]) for line in points] == pytest.approx(expected)

    def test_relative_paths_under_results_dir(self, tmp_path, monkeypatch):
        """Test that relative output paths resolve under the results directory."""
        monkeypatch.setattr(config.output, "results_dir", str(tmp_path / "results"))

        code = main(["ball", "--group", "Z", "--radii", "1", "--out", "runs/z.jsonl"])

        assert code == 0
        assert read_jsonl(tmp_path / "results" / "runs" / "z.jsonl")[1]["size"] == 3

    def test_exponent_below_one_is_usage_error(self, tmp_path):
        """Test exit code 2 when p < 1 reaches the norm computation."""
        out = tmp_path / "n.jsonl"

        code = main(["nclp", "--group", "Z", "--elem", "walk", "--p", "0.5", "--radii", "2",
                     "--out", str(out)])

        assert code == 2
        assert not out.exists()

    def test_missing_matrix_file_is_usage_error(self, tmp_path):
        """Test exit code 2 for an unreadable matrix file."""
        assert main(["nclp", "--matrix", str(tmp_path / "absent.txt"),
                     "--out", str(tmp_path / "n.jsonl")]) == 2
