"""Batch command line: ``surjunctive <command> [flags]``.

Every run writes JSON lines (a header with the version and resolved config,
one line per record, a summary line) and optionally a CSV table and
two-column CSV plot data. Exit status: 0 when every checked invariant holds,
1 when one fails, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
import tomllib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from . import __version__
from .algebra import star
from .config import config, numerics_overrides
from .errors import ExpressionError, InvariantViolation, ParameterError, SurjunctiveError
from .expressions import parse_expression, parse_scalar
from .groups import ball, parse_group, radial_tree_oracle
from .logging_config import get_default_log_file, set_run_context, setup_logging
from .nclp import TracialMatrixAlgebra, mat_nclp_norm, norm_attainment
from .operators import Provenance, assemble, from_coordinate_text, opnorm_est
from .probes import (
    abelian_invertibility,
    approx_kernel_sequence,
    finite_group_surjunctivity,
    heisenberg_survey,
    herz_check,
    plateau_summary,
    probe_element,
    trial_elements,
    willis_experiment,
)
from .records import ExperimentConfig
from .spectral import eig_herm, largest_eigenvalue
from .traces import nc_lp_norm_group

logger = logging.getLogger(__name__)

COMMANDS = ("ball", "spectrum", "approx-kernel", "willis", "herz", "nclp", "probe", "finite")


@dataclass
class RunOutput:
    """Everything a run produces before it is written to disk."""

    records: List[Dict[str, Any]] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    failures: List[str] = field(default_factory=list)
    plots: Dict[str, List[Tuple[float, float]]] = field(default_factory=dict)

    def fail(self, invariant: str, message: str) -> None:
        logger.error(f"Invariant '{invariant}' failed: {message}")
        self.failures.append(f"{invariant}: {message}")


def parse_radii(text: str | Sequence[int]) -> List[int]:
    """``"2..5"`` or ``"2,3,5"`` (or a list from a config file)."""
    if not isinstance(text, str):
        return [int(r) for r in text]
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            return list(range(int(lo), int(hi) + 1))
        return [int(r) for r in text.split(",") if r.strip()]
    except ValueError:
        raise ExpressionError(f"Cannot parse radii '{text}' (use 2..5 or 2,3,5)")


def parse_exponent(text: str | float) -> float:
    if isinstance(text, str) and text.strip().lower() in ("inf", "infinity", "oo"):
        return math.inf
    try:
        return float(text)
    except ValueError:
        raise ExpressionError(f"Cannot parse exponent '{text}'")


def jsonable(value: Any) -> Any:
    """Plain JSON values; non-finite floats become strings, complex a pair."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, complex):
        return [jsonable(value.real), jsonable(value.imag)]
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return value


def _element(cfg: ExperimentConfig, default: str = "adjacency"):
    desc = parse_group(cfg.group)
    if cfg.elem is None:
        library = trial_elements(desc)
        if default not in library:
            raise ExpressionError(f"--elem is required for {desc.key}")
        return library[default]
    library = trial_elements(desc)
    if cfg.elem in library:
        return library[cfg.elem]
    return parse_expression(desc, cfg.elem, exact=cfg.exact)


def _run_ball(cfg: ExperimentConfig, out: RunOutput) -> None:
    desc = parse_group(cfg.group)
    previous = None
    for r in cfg.radii:
        b = ball(desc, r)
        layers = [b.layer_offsets[k + 1] - b.layer_offsets[k] for k in range(r + 1)]
        out.records.append(
            {"type": "ball", "group": desc.key, "radius": r, "size": len(b), "layers": layers}
        )
        out.plots.setdefault("ball_size", []).append((r, len(b)))
        if previous is not None and b.elements[: len(previous)] != previous.elements:
            out.fail("ball_nesting", f"B_{previous.radius} is not a prefix of B_{r}")
        if any(b.word_length(~g) != b.word_length(g) for g in b.elements):
            out.fail("inversion_closure", f"B_{r} of {desc.key} breaks inverse symmetry")
        previous = b


def _run_spectrum(cfg: ExperimentConfig, out: RunOutput) -> None:
    desc = parse_group(cfg.group)
    a = _element(cfg)
    hermitian = star(a) == a
    free_adjacency = desc.key.startswith("F") and cfg.elem in (None, "adjacency")
    values = []
    for r in cfg.radii:
        T = assemble(a, ball(desc, r), Provenance.LEFT)
        norm = opnorm_est(T, cfg.p)
        record: Dict[str, Any] = {
            "type": "spectrum",
            "group": desc.key,
            "radius": r,
            "size": T.shape[0],
            "p": cfg.p,
            "norm_lower": norm.lower,
            "norm_upper": norm.upper,
        }
        if hermitian:
            if T.shape[0] <= config.numerics.dense_limit:
                D = eig_herm(T.matrix)
                record["decomposition"] = D.to_json()
                lam = float(D.eigenvalues[-1]) if D.size else 0.0
                out.plots[f"eigenvalues_r{r}"] = [
                    (i, float(x)) for i, x in enumerate(D.eigenvalues)
                ]
            else:
                lam = largest_eigenvalue(T.matrix)
            record["lambda_max"] = lam
            values.append(lam)
            out.plots.setdefault("lambda_max", []).append((r, lam))
        if free_adjacency:
            k = desc.law.k
            record["tree_oracle"] = radial_tree_oracle(k, r)
            record["kesten_bound"] = 2 * math.sqrt(2 * k - 1)
            if hermitian and lam > record["kesten_bound"] + 1e-6:
                out.fail("kesten_bound", f"lambda_max {lam!r} at r={r}")
        out.records.append(record)
    if free_adjacency and any(b <= a for a, b in zip(values, values[1:])):
        out.fail("kesten_monotone", f"lambda_max not strictly increasing: {values}")


def _run_approx_kernel(cfg: ExperimentConfig, out: RunOutput) -> None:
    a = _element(cfg, "walk")
    for rec in approx_kernel_sequence(a, cfg.n, cfg.r):
        out.records.append({"type": "approx_kernel", **rec.model_dump()})
        out.plots.setdefault("approx_kernel_ratio", []).append((rec.n, rec.ratio))


def _run_willis(cfg: ExperimentConfig, out: RunOutput) -> None:
    desc = parse_group(cfg.group)
    t_a, t_b = parse_scalar(cfg.ta), parse_scalar(cfg.tb)
    records, summary = willis_experiment(
        t_a, t_b, cfg.p, cfg.radii, cfg.restarts, cfg.seed, desc
    )
    for rec in records:
        out.records.append({"type": "willis", **rec.model_dump()})
        out.plots.setdefault("willis_distance", []).append((rec.radius, rec.distance))
        out.plots.setdefault("willis_modulus", []).append((rec.radius, rec.modulus))
    out.summary["trend"] = summary.model_dump()
    if not summary.monotone:
        out.fail("range_monotone", f"distances increase in r: {summary.distances}")


def _run_herz(cfg: ExperimentConfig, out: RunOutput) -> None:
    rec = herz_check(_element(cfg), cfg.p, cfg.r, cfg.samples, cfg.seed)
    out.records.append({"type": "herz", **rec.model_dump()})
    if rec.violation:
        out.fail("herz_majorization", f"max ratio {rec.max_ratio!r} > {rec.norm_upper!r}")


def _run_nclp(cfg: ExperimentConfig, out: RunOutput) -> None:
    if cfg.matrix:
        X = from_coordinate_text(Path(cfg.matrix).read_text()).toarray()
        if X.shape[0] != X.shape[1]:
            raise ExpressionError(f"Matrix in {cfg.matrix} is not square: {X.shape}")
        alg = TracialMatrixAlgebra(X.shape[0])
        record: Dict[str, Any] = {
            "type": "nclp_matrix",
            "n": X.shape[0],
            "p": cfg.p,
            "norm": mat_nclp_norm(alg, X, cfg.p),
        }
        if math.isfinite(cfg.p) and np.any(X):
            att = norm_attainment(alg, X, cfg.p)
            record.update(achieved=att.achieved, sigma_max=att.sigma_max)
            if abs(att.achieved - att.sigma_max) > 1e-8 * max(att.sigma_max, 1.0):
                out.fail("norm_attainment", f"{att.achieved!r} vs {att.sigma_max!r}")
        out.records.append(record)
        return
    a = _element(cfg)
    report = nc_lp_norm_group(a, cfg.p, cfg.radii)
    out.records.append({"type": "nclp", "group": a.group.key, **report.model_dump()})
    out.plots["nclp_value"] = list(zip(report.radii, report.values))


def _run_probe(cfg: ExperimentConfig, out: RunOutput) -> None:
    desc = parse_group(cfg.group)
    if desc.key == "H3" and cfg.elem is None:
        for rec in heisenberg_survey(cfg.p, cfg.radii, None, cfg.restarts, cfg.seed):
            out.records.append({"type": "experiment", **rec.model_dump()})
        return
    a = _element(cfg)
    records = probe_element(a, cfg.p, cfg.radii, cfg.restarts, cfg.seed)
    for rec in records:
        out.records.append({"type": "probe", **rec.model_dump()})
        out.plots.setdefault("probe_distance", []).append((rec.radius, rec.distance))
        out.plots.setdefault("probe_modulus", []).append((rec.radius, rec.modulus))
    summary = plateau_summary([r.radius for r in records], [r.distance for r in records])
    out.summary["trend"] = summary.model_dump()
    if desc.key.startswith("Z"):
        out.summary["wiener"] = abelian_invertibility(a, cfg.points)
    if not summary.monotone:
        out.fail("range_monotone", f"distances increase in r: {summary.distances}")


def _run_finite(cfg: ExperimentConfig, out: RunOutput) -> None:
    rec = finite_group_surjunctivity(_element(cfg, "identity"))
    out.records.append({"type": "finite", **rec.model_dump()})


_HANDLERS = {
    "ball": _run_ball,
    "spectrum": _run_spectrum,
    "approx-kernel": _run_approx_kernel,
    "willis": _run_willis,
    "herz": _run_herz,
    "nclp": _run_nclp,
    "probe": _run_probe,
    "finite": _run_finite,
}


def execute(cfg: ExperimentConfig) -> RunOutput:
    """Run one command under its tolerance overrides; invariant failures are collected."""
    if cfg.command not in _HANDLERS:
        raise ExpressionError(f"Unknown command '{cfg.command}'")
    out = RunOutput()
    with numerics_overrides(cfg.tolerances):
        try:
            _HANDLERS[cfg.command](cfg, out)
        except InvariantViolation as e:
            out.fail(e.invariant, str(e))
    return out


OUTPUT_FIELDS = {"out", "csv", "plot_dir"}


def resolved_config(cfg: ExperimentConfig) -> Dict[str, Any]:
    """The run configuration without output locations; identical runs embed identical bytes."""
    return jsonable(cfg.model_dump(mode="json", exclude=OUTPUT_FIELDS))


def provenance_comment(cfg: ExperimentConfig) -> str:
    """First line of every CSV artifact: version and resolved config."""
    body = json.dumps(resolved_config(cfg), sort_keys=True, ensure_ascii=False)
    return f"# surjunctive {__version__} {body}\n"


def render_jsonl(cfg: ExperimentConfig, out: RunOutput) -> str:
    lines = [
        {"type": "header", "version": __version__, "config": resolved_config(cfg)},
        *out.records,
        {"type": "summary", "ok": not out.failures, "failures": out.failures, **out.summary},
    ]
    return "".join(
        json.dumps(jsonable(line), sort_keys=True, ensure_ascii=False) + "\n"
        for line in lines
    )


def render_csv(records: Sequence[Dict[str, Any]]) -> str:
    columns = sorted({k for rec in records for k in rec})
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for rec in records:
        writer.writerow(
            {k: json.dumps(jsonable(v)) if isinstance(v, (list, dict)) else jsonable(v)
             for k, v in rec.items()}
        )
    return buffer.getvalue()


def write_atomic(path: str | Path, text: str) -> None:
    """Write via a temporary file in the target directory and ``os.replace``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def artifact_path(path: str | Path) -> Path:
    """Relative output paths land under ``SURJ_RESULTS_DIR``; absolute paths are kept."""
    return Path(config.output.results_dir) / path


def _plot_value(v: Any) -> str:
    return repr(v.item() if isinstance(v, np.generic) else v)


def run(cfg: ExperimentConfig) -> int:
    """Execute ``cfg`` and write its result files; returns the exit status."""
    try:
        out = execute(cfg)
    except (ExpressionError, ParameterError, OSError) as e:
        logger.error(f"Usage error: {e}")
        return 2
    except SurjunctiveError as e:
        logger.error(f"Failed to run '{cfg.command}': {e}")
        out = RunOutput()
        out.fail(e.error_type, str(e))
    except ValidationError as e:
        logger.error(f"Failed to build a result record for '{cfg.command}': {e}")
        out = RunOutput()
        out.fail("record_validation", str(e))
    text = render_jsonl(cfg, out)
    if cfg.out:
        path = artifact_path(cfg.out)
        write_atomic(path, text)
        logger.info(f"Wrote {len(out.records)} records to {path}")
    else:
        sys.stdout.write(text)
    header = provenance_comment(cfg)
    if cfg.csv:
        write_atomic(artifact_path(cfg.csv), header + render_csv(out.records))
    if cfg.plot_dir:
        plot_dir = artifact_path(cfg.plot_dir)
        for name, points in sorted(out.plots.items()):
            body = "".join(f"{_plot_value(x)},{_plot_value(y)}\n" for x, y in points)
            write_atomic(plot_dir / f"{name}.csv", header + "x,y\n" + body)
    return 1 if out.failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="surjunctive",
        description="Finite-scale experiments on convolution operators over group algebras",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", help="TOML file with the same keys as the flags")
        cmd.add_argument("--group", help="Z, Z^d, Fk, H3, Cn or Sn")
        cmd.add_argument("--elem", help="Element expression or trial element name")
        cmd.add_argument("--p", help="Exponent in [1, inf]")
        cmd.add_argument("--radii", help="2..5 or 2,3,5")
        cmd.add_argument("--r", type=int, help="Single radius")
        cmd.add_argument("--n", help="Comma separated n values")
        cmd.add_argument("--ta", help="Scalar t_a (e.g. w, -1, 0.6+0.8i)")
        cmd.add_argument("--tb", help="Scalar t_b")
        cmd.add_argument("--samples", type=int)
        cmd.add_argument("--restarts", type=int)
        cmd.add_argument("--points", type=int, help="Torus grid points per axis")
        cmd.add_argument("--seed", type=int)
        cmd.add_argument("--exact", action="store_true", default=None)
        cmd.add_argument("--matrix", help="Coordinate text matrix (nclp)")
        cmd.add_argument("--out", help="JSON lines output path (default stdout)")
        cmd.add_argument("--csv", help="CSV table output path")
        cmd.add_argument("--plot-dir", dest="plot_dir", help="Directory for plot data")
        cmd.add_argument("--log-level", dest="log_level")
        cmd.add_argument("--log-file", dest="log_file", help="Path, or 'default'")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Merge a TOML file and explicit flags (flags win) into an ExperimentConfig."""
    values: Dict[str, Any] = {}
    if args.config:
        with open(args.config, "rb") as f:
            values.update(tomllib.load(f))
    for key in ExperimentConfig.model_fields:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    values["command"] = args.command
    if "radii" in values:
        values["radii"] = parse_radii(values["radii"])
    if isinstance(values.get("n"), str):
        values["n"] = parse_radii(values["n"])
    if "p" in values:
        values["p"] = parse_exponent(values["p"])
    return ExperimentConfig.model_validate(values)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point for the command line."""
    args = build_parser().parse_args(argv)
    log_file = args.log_file or config.log_file
    if log_file == "default":
        log_file = get_default_log_file()
    setup_logging(level=args.log_level or config.log_level, log_file=log_file)
    try:
        cfg = resolve_config(args)
    except (ExpressionError, ValidationError, OSError, tomllib.TOMLDecodeError) as e:
        logger.error(f"Invalid configuration: {e}")
        return 2
    set_run_context(cfg.command, cfg.seed)
    logger.info(f"Running {cfg.command} on {cfg.group}")
    return run(cfg)
