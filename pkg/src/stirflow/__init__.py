"""Stirring protocols in a three-holed disk, the periodic constant-vorticity
flows they drive, and the exponential stretching those flows must exhibit.

The package is organized around a pipeline:

    braid       -- words in the three-strand braid group, their integer
                   2x2 representation, and Thurston-Nielsen classification
    protocol    -- smooth periodic stirrer motions realizing a braid word
    field       -- collocation solver for the constant-vorticity stream
                   function on each domain snapshot
    transport   -- tracer advection and flow-map Jacobians
    diagnostics -- material-curve growth, transported vorticity, and
                   vorticity-gradient growth measurements
    experiments -- canonical acceptance experiments
    cli         -- command-line entry point
"""

__version__ = "0.1.0"

from stirflow.braid import (
    BraidWord,
    IntMatrix2,
    TNClass,
    burau_at_minus_one,
    classify,
    entropy_lower_bound,
    parse_braid,
)
from stirflow.protocol import (
    Hold,
    StirrerConfig,
    StirringProtocol,
    Swap,
    build_protocol,
    extract_braid,
)
from stirflow.field import (
    DomainSnapshot,
    FlowConditions,
    SolverOptions,
    StreamModel,
    solve_stream,
)
from stirflow.transport import (
    IntegratorOptions,
    ProtocolFlow,
    SteadyFlow,
    advect,
    advect_with_jacobian,
    inverse_flow,
)
from stirflow.diagnostics import (
    GrowthSeries,
    MaterialCurve,
    VorticityField,
    circulation_drift,
    estimate_growth_rate,
    evolve_curve,
    transported_vorticity,
    vorticity_gradient_growth,
)

__all__ = [
    "BraidWord",
    "IntMatrix2",
    "TNClass",
    "burau_at_minus_one",
    "classify",
    "entropy_lower_bound",
    "parse_braid",
    "Hold",
    "StirrerConfig",
    "StirringProtocol",
    "Swap",
    "build_protocol",
    "extract_braid",
    "DomainSnapshot",
    "FlowConditions",
    "SolverOptions",
    "StreamModel",
    "solve_stream",
    "IntegratorOptions",
    "ProtocolFlow",
    "SteadyFlow",
    "advect",
    "advect_with_jacobian",
    "inverse_flow",
    "GrowthSeries",
    "MaterialCurve",
    "VorticityField",
    "circulation_drift",
    "estimate_growth_rate",
    "evolve_curve",
    "transported_vorticity",
    "vorticity_gradient_growth",
]
