"""Experiment configuration: JSON in, validated objects out.

One JSON file describes a whole experiment: the stirring protocol (a braid
word or an explicit move list), flow conditions, solver and integrator
options, and the measurement to run.  All quantities are nondimensional
(unit outer disk, one time unit per braid letter by default).  The file's
canonical-JSON hash rides along into every output for provenance.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from stirflow.braid import BraidSyntaxError, parse_braid
from stirflow.diagnostics import MaterialCurve, VorticityField
from stirflow.field import FlowConditions, IncompatibleCirculations, SolverOptions
from stirflow.protocol import (
    Hold,
    ProtocolError,
    StirrerConfig,
    StirringProtocol,
    Swap,
    build_protocol,
)
from stirflow.transport import IntegratorOptions

# Tolerances pinned by the acceptance suite; emitted into every summary.
TOLERANCES = {
    "braid_expansion_abs": 1e-12,
    "exact_velocity_rel": 1e-6,
    "solver_normal_residual": 1e-5,
    "solver_circulation_error": 1e-8,
    "area_preservation": 1e-5,
    "rk4_order_ratio": [12, 20],
    "pa_rate_min": 0.9 * math.log((3 + math.sqrt(5)) / 2),
    "hold_rate_max": 0.05,
    "finite_order_rate_max": 0.2,
    "circulation_drift": 1e-4,
    "period_closure": 1e-12,
}


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


def _point(obj, label: str) -> complex:
    if isinstance(obj, (int, float)):
        return complex(obj, 0.0)
    if isinstance(obj, (list, tuple)) and len(obj) == 2:
        return complex(float(obj[0]), float(obj[1]))
    raise ConfigError(f"{label} must be a number or [x, y] pair")


def protocol_from_dict(spec: dict) -> StirringProtocol:
    """Build a protocol from {word | moves, epsilon, centers, period}."""
    if not isinstance(spec, dict):
        raise ConfigError("protocol spec must be an object")
    kwargs: dict[str, Any] = {}
    if "epsilon" in spec:
        kwargs["radius"] = float(spec["epsilon"])
    if "centers" in spec:
        centers = tuple(_point(c, "center") for c in spec["centers"])
        kwargs["centers"] = centers
    config = StirrerConfig(**kwargs)

    if ("word" in spec) == ("moves" in spec):
        raise ConfigError("protocol spec needs exactly one of 'word' or 'moves'")
    try:
        if "word" in spec:
            word = parse_braid(str(spec["word"]))
            n_moves = max(1, len(word))
            period = float(spec.get("period", n_moves))
            if period <= 0:
                raise ConfigError("period must be positive")
            return build_protocol(word, config, moves_per_unit_time=n_moves / period)
        moves = []
        for m in spec["moves"]:
            kind = m.get("kind")
            if kind == "swap":
                moves.append(
                    Swap(
                        slot=int(m["slot"]),
                        handedness=str(m.get("handedness", "ccw")),
                        duration=float(m.get("duration", 1.0)),
                    )
                )
            elif kind == "hold":
                moves.append(Hold(duration=float(m.get("duration", 1.0))))
            else:
                raise ConfigError(f"move kind {kind!r} not 'swap' or 'hold'")
        if "period" in spec:
            total = sum(m.duration for m in moves)
            if abs(total - float(spec["period"])) > 1e-9 * max(1.0, total):
                raise ConfigError(
                    f"declared period {spec['period']} != sum of move durations {total}"
                )
        config.require_admissible()
        return StirringProtocol(config, tuple(moves))
    except (BraidSyntaxError, ProtocolError) as exc:
        raise ConfigError(str(exc)) from exc


def curve_from_dict(spec: dict, delta: float, max_turn: float) -> MaterialCurve:
    kind = spec.get("kind")
    if kind == "segment":
        return MaterialCurve.segment(
            _point(spec["start"], "start"), _point(spec["end"], "end"),
            delta=delta, max_turn=max_turn,
        )
    if kind == "circle":
        return MaterialCurve.circle(
            _point(spec["center"], "center"), float(spec["radius"]),
            delta=delta, max_turn=max_turn,
        )
    if kind == "polyline":
        pts = [_point(q, "point") for q in spec["points"]]
        return MaterialCurve(
            pts, closed=bool(spec.get("closed", False)),
            delta=delta, max_turn=max_turn,
        )
    raise ConfigError(f"curve kind {kind!r} not one of segment/circle/polyline")


def vorticity_from_name(name: str) -> VorticityField:
    if name == "linear_x":
        return VorticityField.linear_x()
    if name.startswith("constant"):
        value = 0.0
        if "(" in name:
            value = float(name[name.index("(") + 1 : name.rindex(")")])
        return VorticityField.constant(value)
    if name == "gaussian_bump":
        return VorticityField.gaussian_bump()
    raise ConfigError(f"unknown vorticity field {name!r}")


@dataclass(frozen=True)
class MeasureSpec:
    kind: str  # curve | gradient | circulation
    periods: int
    delta: float = 5e-3
    max_turn: float = 0.2
    curve: Optional[dict] = None
    grid: int = 32
    vorticity: str = "linear_x"
    thresholds: dict = field(default_factory=dict)

    def material_curve(self) -> MaterialCurve:
        if self.curve is None:
            raise ConfigError(f"measure kind {self.kind!r} needs a curve spec")
        return curve_from_dict(self.curve, self.delta, self.max_turn)


@dataclass(frozen=True)
class ExperimentConfig:
    protocol: StirringProtocol
    conditions: FlowConditions
    solver: SolverOptions
    integrator: IntegratorOptions
    measure: Optional[MeasureSpec]
    output_dir: Optional[str]
    raw: dict
    config_hash: str

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("experiment config must be a JSON object")
        protocol = protocol_from_dict(raw.get("protocol", {"word": ""}))

        flow = raw.get("flow", {})
        omega = float(flow.get("omega", 0.0))
        circulations = flow.get("circulations", [0.0, 0.0, 0.0, 0.0])
        if len(circulations) != 4:
            raise ConfigError("flow.circulations must list outer + 3 stirrers")
        try:
            conditions = FlowConditions(
                omega,
                tuple(float(g) for g in circulations),
                math.pi * (1.0 - 3.0 * protocol.config.radius**2),
            )
        except IncompatibleCirculations as exc:
            raise ConfigError(str(exc)) from exc

        sol = raw.get("solver", {})
        try:
            solver = SolverOptions(
                order=int(sol.get("order", 12)),
                nodes_per_boundary=int(sol.get("nodes_per_boundary", 128)),
                min_singular_ratio=float(sol.get("min_singular_ratio", 1e-10)),
                residual_tolerance=sol.get("residual_tolerance", 2e-5),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

        integ = raw.get("integrator", {})
        dt = integ.get("dt")
        if dt is not None:
            dt = float(dt)
            if dt <= 0:
                raise ConfigError("integrator.dt must be positive")
            for move in protocol.moves:
                steps = move.duration / dt
                if abs(steps - round(steps)) > 1e-6 * max(1.0, steps):
                    raise ConfigError(
                        f"dt = {dt} does not divide move duration {move.duration}"
                    )
        integrator = IntegratorOptions(dt=dt)

        measure = None
        if "measure" in raw:
            m = raw["measure"]
            kind = m.get("kind")
            if kind not in ("curve", "gradient", "circulation"):
                raise ConfigError(f"measure.kind {kind!r} invalid")
            periods = int(m.get("periods", 8))
            if periods < 1:
                raise ConfigError("measure.periods must be >= 1")
            measure = MeasureSpec(
                kind=kind,
                periods=periods,
                delta=float(m.get("delta", 5e-3)),
                max_turn=float(m.get("max_turn", 0.2)),
                curve=m.get("curve"),
                grid=int(m.get("grid", 32)),
                vorticity=str(m.get("vorticity", "linear_x")),
                thresholds=dict(m.get("thresholds", {})),
            )
            if kind in ("curve", "circulation"):
                try:
                    measure.material_curve()  # validate eagerly
                except (ValueError, KeyError) as exc:
                    raise ConfigError(f"bad curve spec: {exc}") from exc

        return cls(
            protocol=protocol,
            conditions=conditions,
            solver=solver,
            integrator=integrator,
            measure=measure,
            output_dir=raw.get("output_dir"),
            raw=raw,
            config_hash=config_hash(raw),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(raw)


def config_hash(raw: dict) -> str:
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def provenance(cfg_hash: str) -> dict:
    """Version, config hash, and pinned tolerances for summary files."""
    from stirflow import __version__

    return {
        "version": __version__,
        "config_hash": cfg_hash,
        "tolerances": TOLERANCES,
    }
