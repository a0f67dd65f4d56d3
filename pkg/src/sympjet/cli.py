"""Command-line front end: JSON in, JSON plus a verification report out.

Exit codes: 0 success, 2 malformed input, 3 violated mathematical
hypothesis, 4 numeric tolerance failure.  Every output embeds the resolved
configuration, and identical (input, seed, tolerance) triples produce
byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import serialize as ser
from .defaults import DEFAULT_TOL
from .errors import SchemaError, SympjetError
from .factor import factor_sp
from .interpolate import (InterpolationJob, StageJob, TameTarget,
                          delta_vector, finite_jet_interpolate,
                          multi_point_stage, tame_normalizer)
from .shears import word_jet, word_verify
from .tame import (a_limit, a_sequence, projection_bound_check, rr_delta,
                   shell_delta, unavoidable_set)


@dataclass
class CommandSpec:
    """Resolved invocation: command, paths, seed, and tolerance overrides."""

    command: str
    input: str | None = None
    output: str | None = None
    seed: int | None = None
    tol: float = DEFAULT_TOL
    max_degree: int | None = None
    stages: int | None = None
    trials: int = 1000

    def to_args(self):
        ns = argparse.Namespace(**self.__dict__)
        return ns


def run_spec(spec: CommandSpec) -> dict:
    """Execute a command spec and return its artifact payload."""
    if spec.command not in _COMMANDS:
        raise SchemaError(f"unknown command {spec.command!r}")
    return _COMMANDS[spec.command](spec.to_args())


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise SchemaError(f"input file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"input is not valid JSON: {exc}") from exc


def _dump(payload: dict, path: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2,
                      allow_nan=False) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _config(args, command: str) -> dict:
    return {"command": command, "seed": args.seed, "tol": args.tol,
            "max_degree": getattr(args, "max_degree", None),
            "stages": getattr(args, "stages", None)}


def _require_seed(args) -> None:
    if args.seed is None:
        raise SchemaError("--seed is mandatory for randomized commands")


def cmd_factor(args) -> dict:
    _require_seed(args)
    data = _load_json(args.input)
    try:
        M = ser.read_cmat(data["matrix"])
    except KeyError as exc:
        raise SchemaError("factor input needs a 'matrix' entry") from exc
    mode = data.get("mode", "transvections")
    word = factor_sp(M, args.seed, mode=mode, tol=args.tol)
    recon = word.matrix(M.shape[0])
    residual = float(np.linalg.norm(recon - M)) / max(1.0, float(np.linalg.norm(M)))
    return {"config": _config(args, "factor"),
            "word": ser.factorword_to_json(word),
            "count": len(word), "relative_residual": residual}


def _verify_payload(word, job: InterpolationJob) -> dict:
    report = word_verify(
        word, jet_target=job.jet,
        flats=[(f.point, f.order) for f in job.flats],
        fixpoints=job.fixpoints, region=job.region, eps=job.eps,
        seed=job.seed, sample_scale=0.3)
    return report.as_json()


def cmd_interp(args) -> dict:
    _require_seed(args)
    job = ser.job_from_json(_load_json(args.input))
    job.seed = args.seed
    word = finite_jet_interpolate(job, tol=args.tol)
    report = _verify_payload(word, job)
    return {"config": _config(args, "interp"),
            "word": ser.word_to_json(word), "report": report}


def cmd_multi_interp(args) -> dict:
    _require_seed(args)
    data = _load_json(args.input)
    try:
        jobs = [StageJob(int(j["alpha"]), ser.jet_from_json(j["jet"]))
                for j in data["jobs"]]
        horizon = int(data["horizon"])
    except (KeyError, TypeError) as exc:
        raise SchemaError("multi-interp input needs 'jobs' and 'horizon'") from exc
    if args.stages is not None:
        jobs = jobs[:args.stages]
    word = multi_point_stage(jobs, horizon, seed=args.seed, tol=args.tol)
    dim = jobs[0].jet.dim
    delta = delta_vector(dim)
    stage_reports = []
    for j in jobs:
        jw = word_jet(word, j.alpha * delta, j.jet.order)
        err = max(a.sub(b).max_abs_coeff()
                  for a, b in zip(jw.components, j.jet.components))
        stage_reports.append({"alpha": j.alpha, "jet_residual": err})
    lattice = []
    for i in range(jobs[-1].alpha + 1, horizon + 1):
        err = float(np.max(np.abs(word.apply(i * delta) - i * delta)))
        lattice.append({"i": i, "error": err})
    return {"config": _config(args, "multi-interp"),
            "word": ser.word_to_json(word),
            "report": {"stages": stage_reports, "lattice": lattice}}


def cmd_tame_normalize(args) -> dict:
    data = _load_json(args.input)
    try:
        n = int(data["n"])
        targets = [TameTarget(int(t["j"]), ser.read_cnum(t["gamma"]),
                              int(t.get("order", 0)))
                   for t in data["targets"]]
    except (KeyError, TypeError) as exc:
        raise SchemaError("tame-normalize input needs 'n' and 'targets'") from exc
    word = tame_normalizer(n, targets, tol=args.tol)
    delta = delta_vector(2 * n)
    per_point = []
    for t in targets:
        got = word.apply(t.j * delta)
        err = float(np.max(np.abs(got - t.gamma * delta)))
        per_point.append({"j": t.j, "error": err})
    return {"config": _config(args, "tame-normalize"),
            "word": ser.word_to_json(word),
            "report": {"points": per_point}}


def cmd_verify(args) -> dict:
    data = _load_json(args.input)
    try:
        word = ser.word_from_json(data["word"])
        job = ser.job_from_json(data["job"])
    except KeyError as exc:
        raise SchemaError("verify input needs 'word' and 'job'") from exc
    return {"config": _config(args, "verify"),
            "report": _verify_payload(word, job)}


def cmd_unavoidable(args) -> dict:
    _require_seed(args)
    data = _load_json(args.input)
    try:
        ss = unavoidable_set(
            int(data["n"]), int(data["j_max"]), float(data["a1"]),
            int(data["sphere_resolution"]), float(data["box_radius"]),
            seed=args.seed,
            cert_samples=int(data.get("cert_samples", 10_000)))
    except KeyError as exc:
        raise SchemaError("unavoidable input needs n, j_max, a1, "
                          "sphere_resolution, box_radius") from exc
    shells = [{"j": sh.j, "delta_j": sh.delta, "counts": sh.counts(),
               "resolution": sh.resolution, "spacing": sh.spacing,
               "box_radius": sh.box_radius} for sh in ss.shells]
    return {"config": _config(args, "unavoidable"),
            "note": ss.note,
            "shells": shells,
            "plane_projection_counts": {str(k): v for k, v in
                                        ss.plane_projection_counts().items()}}


def cmd_lemmas(args) -> dict:
    _require_seed(args)
    rng = np.random.default_rng(args.seed)
    trials = args.trials
    passed = 0
    worst_slack = float("inf")
    for _ in range(trials):
        n = int(rng.integers(2, 5))
        A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        det = np.linalg.det(A)
        if abs(det) < 1e-6:
            passed += 1
            continue
        A = A / det ** (1.0 / n)
        k = int(rng.integers(1, n))
        X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        Qf, _ = np.linalg.qr(X)
        P = Qf[:, :k] @ Qf[:, :k].conj().T
        coeff = rng.standard_normal(n - k) + 1j * rng.standard_normal(n - k)
        u = Qf[:, k:] @ coeff
        u = u / np.linalg.norm(u)
        chk = projection_bound_check(A, P, u)
        if chk.holds:
            passed += 1
            worst_slack = min(worst_slack, chk.rhs - chk.lhs)
    seq = a_sequence(1.5, 1_000_000)
    limit_err = abs(seq[-1] - a_limit(1.5))
    d1 = shell_delta(1, 1.5)
    return {"config": _config(args, "lemmas"),
            "projection_bound": {"trials": trials, "passed": passed,
                                 "min_slack": worst_slack},
            "a_sequence": {"terms": 1_000_000, "limit_error": limit_err},
            "delta_1": {"value": d1, "reference": 4.0 / 177147.0,
                        "relative_error": abs(d1 - 4.0 / 177147.0)
                        / (4.0 / 177147.0)},
            "rr_delta_zero_gap": rr_delta(1.5, 1.5, 3.0, 2)}


_COMMANDS = {
    "factor": cmd_factor,
    "interp": cmd_interp,
    "multi-interp": cmd_multi_interp,
    "tame-normalize": cmd_tame_normalize,
    "verify": cmd_verify,
    "unavoidable": cmd_unavoidable,
    "lemmas": cmd_lemmas,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sympjet",
        description="Symplectic shear factorization and jet interpolation")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        if name not in ("lemmas",):
            p.add_argument("--input", required=True)
        p.add_argument("--output", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--tol", type=float, default=DEFAULT_TOL)
        p.add_argument("--max-degree", type=int, default=None,
                       dest="max_degree")
        p.add_argument("--stages", type=int, default=None)
        if name == "lemmas":
            p.add_argument("--trials", type=int, default=1000)
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        payload = _COMMANDS[args.command](args)
    except SympjetError as exc:
        diag = {"error": type(exc).__name__, "message": str(exc),
                "diagnostic": _jsonable(exc.diagnostic)}
        sys.stderr.write(json.dumps(diag, sort_keys=True, default=str) + "\n")
        return exc.exit_code
    _dump(payload, args.output)
    return 0


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
