"""Command-line front end.

Exit codes: 0 success, 1 input error, 2 certificate or convergence failure,
3 configuration error.  Floats are written with ``repr``, the shortest text
that round-trips a double.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from . import __version__
from .core import Segmentation, StepModel
from .errors import CertificateError, ConfigError, ConvergenceError, FusedLassoError
from .experiments import generate, load_config, run_experiment
from .extensions import trend_solve, variance_solve
from .lasso import irrep_profile
from .path import trace_path, validate_nesting
from .solver import dual_variables, lambda_max, polish, solve, verify_kkt

SCHEMA_VERSION = 1

EXIT_OK, EXIT_INPUT, EXIT_CERT, EXIT_CONFIG = 0, 1, 2, 3


class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage mistakes are input errors, not certificate failures
    def error(self, message):
        raise _Usage(f"{self.prog}: error: {message}")


# -- input -----------------------------------------------------------------------

@dataclass(frozen=True)
class InputData:
    values: np.ndarray
    sha256: str


def parse_values(text: str, source: str = "<input>") -> np.ndarray:
    """One number per line; a non-numeric first line is taken as a header."""
    values: list[float] = []
    bad: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            v = float(line)
        except ValueError:
            if lineno == 1:
                continue
            bad.append(lineno)
            continue
        if not math.isfinite(v):
            bad.append(lineno)
            continue
        values.append(v)
    if bad:
        shown = ", ".join(map(str, bad[:10])) + (" ..." if len(bad) > 10 else "")
        raise _InputProblem(f"{source}: non-numeric or non-finite value on line(s) {shown}")
    if not values:
        raise _InputProblem(f"{source}: no numeric values")
    return np.asarray(values, dtype=np.float64)


class _InputProblem(FusedLassoError, ValueError):
    pass


def read_input(path: str) -> InputData:
    if path == "-":
        data = sys.stdin.buffer.read()
    else:
        try:
            with open(path, "rb") as fh:
                data = fh.read()
        except OSError as exc:
            raise _InputProblem(f"cannot read {path}: {exc.strerror}") from None
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        raise _InputProblem(f"{path}: not UTF-8 text") from None
    return InputData(parse_values(text, path), hashlib.sha256(data).hexdigest())


# -- documents -------------------------------------------------------------------

@dataclass
class SegmentationDocument:
    n: int
    lam: float
    change_points: list[int]
    levels: list[float]
    provenance: dict[str, Any]
    dual: list[float] | None = None
    kkt: dict | None = None
    polished: bool = False
    kind: str = "segmentation"
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        out = {
            "schema_version": self.schema_version,
            "kind": self.kind,
            "n": self.n,
            "lambda": self.lam,
            "change_points": self.change_points,
            "levels": self.levels,
            "polished": self.polished,
            "provenance": self.provenance,
        }
        if self.dual is not None:
            out["dual"] = self.dual
        if self.kkt is not None:
            out["kkt"] = self.kkt
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "SegmentationDocument":
        return cls(doc["n"], doc["lambda"], list(doc["change_points"]), list(doc["levels"]),
                   dict(doc["provenance"]), doc.get("dual"), doc.get("kkt"),
                   doc.get("polished", False), doc.get("kind", "segmentation"),
                   doc["schema_version"])

    def segmentation(self) -> Segmentation:
        return Segmentation(self.n, self.change_points, self.levels, self.lam)

    @classmethod
    def from_segmentation(cls, seg: Segmentation, provenance: dict, **kw) -> "SegmentationDocument":
        return cls(seg.n, float(seg.lam), seg.change_points.tolist(), seg.levels.tolist(),
                   provenance, **kw)


def _provenance(command: str, inp: InputData | None = None, seed: int | None = None) -> dict:
    return {
        "command": command,
        "seed": seed,
        "input_sha256": inp.sha256 if inp is not None else None,
        "version": __version__,
    }


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


def _json(doc: dict) -> str:
    return json.dumps(doc, indent=2, allow_nan=False)


def _segments_csv(seg: Segmentation) -> str:
    b = seg.bounds()
    rows = ["start,stop,level"]
    rows += [f"{b[i]},{b[i + 1]},{float(seg.levels[i])!r}" for i in range(seg.n_segments)]
    return "\n".join(rows)


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise _InputProblem(f"expected comma-separated integers, got {text!r}") from None


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise _InputProblem(f"expected comma-separated numbers, got {text!r}") from None


# -- commands --------------------------------------------------------------------

def _certify(y, seg: Segmentation, tol: float):
    report = verify_kkt(y, seg, seg.lam, tol)
    if not report.feasible:
        raise CertificateError("solution failed its optimality certificate", report)
    return report


def cmd_denoise(args) -> None:
    inp = read_input(args.input)
    lam = args.lam if args.lam is not None else args.lambda_frac * lambda_max(inp.values)
    seg = solve(inp.values, lam)
    report = _certify(inp.values, seg, args.tol)
    dual = dual_variables(inp.values, seg).z.tolist() if args.dual else None
    out = polish(inp.values, seg) if args.polish else seg
    if args.format == "csv":
        _emit(_segments_csv(out), args.output)
        return
    doc = SegmentationDocument.from_segmentation(
        out, _provenance("denoise", inp), dual=dual, kkt=report.to_dict(), polished=args.polish)
    _emit(_json(doc.to_dict()), args.output)


def cmd_lambda_max(args) -> None:
    inp = read_input(args.input)
    _emit(repr(lambda_max(inp.values)), args.output)


def cmd_path(args) -> None:
    inp = read_input(args.input)
    path = trace_path(inp.values)
    nest = validate_nesting(path)
    if not nest.ok:
        raise CertificateError(f"path nesting violated: {nest.violation}")
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "path",
        "n": int(inp.values.size),
        "lambda_max": lambda_max(inp.values),
        "events": [
            {"lambda": e.lam, "change_points": e.change_points.tolist(),
             "signs": e.signs.tolist()}
            for e in path.events
        ],
        "provenance": _provenance("path", inp),
    }
    _emit(_json(doc), args.output)


def cmd_variance(args) -> None:
    inp = read_input(args.input)
    seg = variance_solve(inp.values, args.lam)
    report = _certify(inp.values**2, seg, args.tol)
    if args.format == "csv":
        _emit(_segments_csv(seg), args.output)
        return
    doc = SegmentationDocument.from_segmentation(
        seg, _provenance("variance", inp), kkt=report.to_dict(), kind="variance")
    _emit(_json(doc.to_dict()), args.output)


def cmd_trend(args) -> None:
    inp = read_input(args.input)
    fit = trend_solve(inp.values, args.lam, args.tol)
    if args.format == "csv":
        _emit("fitted\n" + "\n".join(repr(float(v)) for v in fit.fitted), args.output)
        return
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "trend",
        "n": int(fit.fitted.size),
        "lambda": fit.lam,
        "fitted": fit.fitted.tolist(),
        "kink_points": fit.kink_points.tolist(),
        "kkt": fit.kkt.to_dict() if fit.kkt else None,
        "provenance": _provenance("trend", inp),
    }
    _emit(_json(doc), args.output)


def cmd_irrep(args) -> None:
    prof = irrep_profile(args.n, _ints(args.support), _floats(args.signs))
    support = set(prof.K.tolist())
    rows = ["t,value,in_support"]
    rows += [f"{t},{float(v)!r},{int(t in support)}"
             for t, v in zip(range(1, args.n), prof.full)]
    _emit("\n".join(rows), args.output)


def cmd_simulate(args) -> None:
    if args.model is not None:
        from .experiments import example1_truth, example2_truth

        truth = (example1_truth if args.model == "example1" else example2_truth)(args.noise_sd)
    else:
        if args.lengths is None or args.levels is None:
            raise _InputProblem("give --model or both --lengths and --levels")
        truth = StepModel.from_lengths(_ints(args.lengths), _floats(args.levels), args.noise_sd)
    y = generate(truth, args.seed)
    _emit("y\n" + "\n".join(repr(float(v)) for v in y.values), args.output)


def cmd_experiment(args) -> None:
    cfg = load_config(args.config)
    if args.seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=args.seed)
    report = run_experiment(cfg, threads=args.threads)
    report.setdefault("provenance", {"command": "experiment", "seed": cfg.seed,
                                     "version": __version__})
    _emit(_json(report), args.output)


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fusedlasso", description="Exact 1-D fused lasso tools.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, fmt=False):
        sp.add_argument("input", help="CSV file with one value per line, or - for stdin")
        sp.add_argument("-o", "--output", help="output file (default stdout)")
        if fmt:
            sp.add_argument("--format", choices=("json", "csv"), default="json")

    d = sub.add_parser("denoise", help="FLSA fit at one lambda")
    common(d, fmt=True)
    g = d.add_mutually_exclusive_group(required=True)
    g.add_argument("--lambda", dest="lam", type=float)
    g.add_argument("--lambda-frac", type=float, help="fraction of lambda_max")
    d.add_argument("--polish", action="store_true", help="replace levels by segment averages")
    d.add_argument("--dual", action="store_true", help="attach the dual trajectory")
    d.add_argument("--tol", type=float, default=1e-8)
    d.set_defaults(func=cmd_denoise)

    lm = sub.add_parser("lambda-max", help="smallest lambda giving one segment")
    common(lm)
    lm.set_defaults(func=cmd_lambda_max)

    pa = sub.add_parser("path", help="exact regularisation path")
    common(pa)
    pa.set_defaults(func=cmd_path)

    va = sub.add_parser("variance", help="piecewise-constant variance (zero-mean data)")
    common(va, fmt=True)
    va.add_argument("--lambda", dest="lam", type=float, required=True)
    va.add_argument("--tol", type=float, default=1e-8)
    va.set_defaults(func=cmd_variance)

    tr = sub.add_parser("trend", help="l1 trend filter")
    common(tr, fmt=True)
    tr.add_argument("--lambda", dest="lam", type=float, required=True)
    tr.add_argument("--tol", type=float, default=1e-8)
    tr.set_defaults(func=cmd_trend)

    ir = sub.add_parser("irrep", help="irrepresentable-condition profile as CSV")
    ir.add_argument("--n", type=int, required=True)
    ir.add_argument("--support", required=True, help="comma-separated change points")
    ir.add_argument("--signs", required=True, help="comma-separated +1/-1")
    ir.add_argument("-o", "--output")
    ir.set_defaults(func=cmd_irrep)

    si = sub.add_parser("simulate", help="draw a noisy step signal")
    si.add_argument("--seed", type=int, required=True)
    si.add_argument("--model", choices=("example1", "example2"))
    si.add_argument("--lengths")
    si.add_argument("--levels")
    si.add_argument("--noise-sd", type=float, default=1.0)
    si.add_argument("-o", "--output")
    si.set_defaults(func=cmd_simulate)

    ex = sub.add_parser("experiment", help="run a Monte-Carlo study from a JSON config")
    ex.add_argument("config")
    ex.add_argument("--seed", type=int, help="override the config seed")
    ex.add_argument("--threads", type=int, default=1)
    ex.add_argument("-o", "--output")
    ex.set_defaults(func=cmd_experiment)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except _Usage as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INPUT
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CertificateError as exc:
        print(f"certificate failure: {exc}", file=sys.stderr)
        if exc.report is not None and hasattr(exc.report, "to_dict"):
            print(_json(exc.report.to_dict()), file=sys.stderr)
        return EXIT_CERT
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CERT
    except (FusedLassoError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
