"""Command-line entry point.

Subcommands map one-to-one onto the library:

    classify WORD                      braid word -> TN class report
    protocol validate FILE             admissibility report for a protocol
    protocol extract FILE              braid word read off a protocol
    field solve --config F --time T    one stream solve + residual report
    advect --config F --tracers CSV    per-period tracer positions
    measure curve|gradient|circulation growth / drift experiments
    accept                             the full acceptance suite

Exit codes: 0 success, 1 declared-threshold failure, 2 configuration
error, 3 numerical failure.  Outputs are deterministic for a fixed
config: CSV bytes repeat across runs on the same machine.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from stirflow import __version__
from stirflow.braid import BraidSyntaxError, NotPseudoAnosov, classify, parse_braid
from stirflow.config import (
    TOLERANCES,
    ConfigError,
    ExperimentConfig,
    config_hash,
    protocol_from_dict,
    provenance,
    vorticity_from_name,
)
from stirflow.diagnostics import (
    DegenerateSeries,
    circulation_drift,
    estimate_growth_rate,
    evolve_curve,
    interior_grid,
    vorticity_gradient_growth,
)
from stirflow.field import FieldError, OutOfDomain
from stirflow.protocol import DegenerateProjection, ProtocolError, extract_braid, validate
from stirflow.transport import LeftDomain, ProtocolFlow

EXIT_OK = 0
EXIT_THRESHOLD = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _classify_report(text: str) -> dict:
    word = parse_braid(text)
    reduced = word.reduced()
    tn = classify(word)
    report = {
        "word": str(word),
        "reduced": str(reduced),
        "trace": tn.trace,
        "class": tn.kind,
        "expansion": tn.expansion,
        "log_expansion": math.log(tn.expansion) if tn.expansion else None,
    }
    if tn.identity_image:
        report["note"] = "matrix is the identity"
    return report


def cmd_classify(args) -> int:
    report = _classify_report(args.word)
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        print(f"word:      {report['word']}")
        print(f"reduced:   {report['reduced']}")
        print(f"trace:     {report['trace']}")
        print(f"class:     {report['class']}")
        if report["expansion"] is not None:
            print(f"expansion: {report['expansion']:.12f}")
            print(f"log:       {report['log_expansion']:.12f}")
        if "note" in report:
            print(f"note:      {report['note']}")
    return EXIT_OK


def _load_protocol_file(path: str):
    try:
        spec = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load protocol file {path}: {exc}") from exc
    return protocol_from_dict(spec)


def cmd_protocol(args) -> int:
    protocol = _load_protocol_file(args.file)
    if args.action == "validate":
        report = validate(protocol, samples_per_move=args.samples)
        payload = {
            "ok": report.ok,
            "min_pair_gap": report.min_pair_gap,
            "min_wall_gap": report.min_wall_gap,
            "max_junction_jump": report.max_junction_jump,
            "closure_error": report.closure_error,
            "config_violations": list(report.config_violations),
        }
        if args.json:
            print(json.dumps(payload, indent=2))
        else:
            for key, val in payload.items():
                print(f"{key}: {val}")
        return EXIT_OK if report.ok else EXIT_THRESHOLD
    word = extract_braid(protocol, samples=max(args.samples * len(protocol.moves), 512))
    report = _classify_report(word.as_text() or "")
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        print(f"extracted word: {report['word']}")
        print(f"reduced:        {report['reduced']}")
        print(f"class:          {report['class']} (trace {report['trace']})")
    return EXIT_OK


def _flow_for(cfg: ExperimentConfig) -> ProtocolFlow:
    return ProtocolFlow(cfg.protocol, cfg.conditions, cfg.solver)


def _out_dir(args, cfg) -> Path:
    out = args.out or cfg.output_dir or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def cmd_field_solve(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    flow = _flow_for(cfg)
    model = flow.model_at(args.time)
    out = _out_dir(args, cfg)
    payload = provenance(cfg.config_hash)
    payload["time"] = args.time
    payload["coefficients"] = {
        "omega": model.omega,
        "centers": [[c.real, c.imag] for c in model.centers],
        "log_strengths": list(model.log_strengths),
        "laurent_re": model.laurent.real.tolist(),
        "laurent_im": model.laurent.imag.tolist(),
        "taylor_re": model.taylor.real.tolist(),
        "taylor_im": model.taylor.imag.tolist(),
        "constant": model.constant,
        "boundary_constants": list(model.boundary_constants),
    }
    payload["residuals"] = model.report.as_dict()
    (out / "field_solve.json").write_text(json.dumps(payload, indent=2))
    if args.grid:
        n = args.grid
        xs = np.linspace(-1.0, 1.0, n)
        rows = []
        for yv in xs:
            for xv in xs:
                z = complex(xv, yv)
                if model.snapshot.contains(z):
                    psi = float(model.stream(z, check=False).real)
                    speed = float(abs(model.velocity(z, check=False)))
                else:
                    psi = math.nan
                    speed = math.nan
                rows.append((xv, yv, psi, speed))
        _write_csv(out / "field_grid.csv", ["x", "y", "psi", "speed"], rows)
    print(f"solved t={args.time}: max normal residual "
          f"{model.report.max_normal_residual:.3e} -> {out / 'field_solve.json'}")
    return EXIT_OK


def cmd_advect(args) -> int:
    from stirflow.transport import advect

    cfg = ExperimentConfig.from_file(args.config)
    flow = _flow_for(cfg)
    try:
        tracers = np.loadtxt(args.tracers, delimiter=",", ndmin=2)
    except OSError as exc:
        raise ConfigError(f"cannot read tracers {args.tracers}: {exc}") from exc
    if tracers.shape[1] != 2:
        raise ConfigError("tracer CSV needs two columns: x,y")
    z = tracers[:, 0] + 1j * tracers[:, 1]
    out = _out_dir(args, cfg)
    if args.threads > 1:
        flow.precompute(0.0, flow.period, cfg.integrator, threads=args.threads)
    rows = [(i, 0, float(p.real), float(p.imag)) for i, p in enumerate(z)]
    current = z
    for n in range(1, args.periods + 1):
        current = advect(current, (n - 1) * flow.period, n * flow.period, flow, cfg.integrator)
        rows.extend(
            (i, n, float(p.real), float(p.imag)) for i, p in enumerate(current)
        )
    _write_csv(out / "advect.csv", ["tracer", "period", "x", "y"], rows)
    print(f"advected {z.size} tracers over {args.periods} periods -> {out / 'advect.csv'}")
    return EXIT_OK


def _braid_block(cfg: ExperimentConfig) -> dict:
    word = extract_braid(cfg.protocol, samples=max(512, 256 * len(cfg.protocol.moves)))
    return _classify_report(word.as_text() or "")


def cmd_measure(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    if cfg.measure is None or cfg.measure.kind != args.kind:
        raise ConfigError(f"config must declare measure.kind = {args.kind!r}")
    spec = cfg.measure
    flow = _flow_for(cfg)
    out = _out_dir(args, cfg)
    if args.threads > 1:
        flow.precompute(0.0, flow.period, cfg.integrator, threads=args.threads)

    summary = provenance(cfg.config_hash)
    summary["kind"] = spec.kind
    summary["braid"] = _braid_block(cfg)
    log_lambda = summary["braid"]["log_expansion"]
    checks: dict[str, bool] = {}

    if spec.kind == "curve":
        series = evolve_curve(spec.material_curve(), flow, spec.periods, cfg.integrator)
        est = estimate_growth_rate(series)
        _write_csv(out / "curve_growth.csv", ["n", "length"],
                   list(enumerate(series.values.tolist())))
        summary["results"] = {
            "lengths": series.values.tolist(),
            "rate": est.rate,
            "fit_window": list(est.window),
            "budget_exceeded": series.budget_exceeded,
            "log_expansion": log_lambda,
        }
        if "min_rate" in spec.thresholds:
            checks["min_rate"] = est.rate >= float(spec.thresholds["min_rate"])
        if "max_rate" in spec.thresholds:
            checks["max_rate"] = est.rate <= float(spec.thresholds["max_rate"])
    elif spec.kind == "gradient":
        w0 = vorticity_from_name(spec.vorticity)
        grid = interior_grid(spec.grid, flow.domain_at(0.0))
        series = vorticity_gradient_growth(w0, flow, grid, spec.periods, cfg.integrator)
        _write_csv(out / "gradient_growth.csv", ["n", "sup_norm"],
                   list(enumerate(series.values.tolist())))
        results = {
            "sup_norms": series.values.tolist(),
            "grid_points": int(grid.size),
            "degenerate": series.degenerate,
            "log_expansion": log_lambda,
        }
        if not series.degenerate:
            est = estimate_growth_rate(series)
            results["rate"] = est.rate
            if "min_rate" in spec.thresholds:
                checks["min_rate"] = est.rate >= float(spec.thresholds["min_rate"])
            if "max_rate" in spec.thresholds:
                checks["max_rate"] = est.rate <= float(spec.thresholds["max_rate"])
        summary["results"] = results
    else:  # circulation
        values = circulation_drift(flow, spec.material_curve(), spec.periods, cfg.integrator)
        drift = float(np.abs(values - values[0]).max())
        _write_csv(out / "circulation.csv", ["n", "circulation"],
                   list(enumerate(values.tolist())))
        summary["results"] = {"circulations": values.tolist(), "drift": drift}
        if "max_drift" in spec.thresholds:
            checks["max_drift"] = drift <= float(spec.thresholds["max_drift"])

    summary["checks"] = checks
    passed = all(checks.values()) if checks else True
    summary["passed"] = passed
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    if args.json:
        print(json.dumps(summary, indent=2))
    else:
        print(f"{spec.kind} measurement -> {out / 'summary.json'}"
              f" [{'pass' if passed else 'FAIL'}]")
    return EXIT_OK if passed else EXIT_THRESHOLD


def cmd_accept(args) -> int:
    from stirflow.experiments import run_all

    results = run_all(threads=args.threads)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        payload = {
            "version": __version__,
            "tolerances": TOLERANCES,
            "criteria": [
                {
                    "index": r.index,
                    "name": r.name,
                    "passed": r.passed,
                    "details": {k: v for k, v in r.details.items()},
                    "elapsed": r.elapsed,
                }
                for r in results
            ],
            "passed": all(r.passed for r in results),
        }
        (out / "acceptance.json").write_text(json.dumps(payload, indent=2, default=str))
    failed = [r.index for r in results if not r.passed]
    if failed:
        print(f"FAILED criteria: {failed}")
        return EXIT_THRESHOLD
    print("all acceptance criteria passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stirflow",
        description="Stirring protocols, their braid classes, and the "
        "exponential stretching of the flows they force.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="classify a braid word")
    p.add_argument("word")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_classify)

    p = sub.add_parser("protocol", help="validate or extract a protocol file")
    p.add_argument("action", choices=["validate", "extract"])
    p.add_argument("file")
    p.add_argument("--samples", type=int, default=256)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_protocol)

    p = sub.add_parser("field", help="stream-function solves")
    fsub = p.add_subparsers(dest="action", required=True)
    ps = fsub.add_parser("solve")
    ps.add_argument("--config", required=True)
    ps.add_argument("--time", type=float, required=True)
    ps.add_argument("--grid", type=int, default=0, help="emit psi/speed CSV on an NxN grid")
    ps.add_argument("--out")
    ps.set_defaults(fn=cmd_field_solve)

    p = sub.add_parser("advect", help="advect tracer positions")
    p.add_argument("--config", required=True)
    p.add_argument("--tracers", required=True, help="CSV of x,y rows")
    p.add_argument("--periods", type=int, default=1)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_advect)

    p = sub.add_parser("measure", help="growth and drift measurements")
    p.add_argument("kind", choices=["curve", "gradient", "circulation"])
    p.add_argument("--config", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_measure)

    p = sub.add_parser("accept", help="run the acceptance suite")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_accept)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, BraidSyntaxError, ProtocolError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FieldError, OutOfDomain, LeftDomain, DegenerateProjection,
            DegenerateSeries, NotPseudoAnosov) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
