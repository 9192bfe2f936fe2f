import hypothesis
import numpy as np
import pytest

from stirflow.braid import BraidWord, parse_braid
from stirflow.field import DomainSnapshot, FlowConditions, SolverOptions, solve_stream
from stirflow.protocol import build_protocol
from stirflow.transport import ProtocolFlow, SteadyFlow

hypothesis.settings.register_profile(
    "numerics", deadline=None, max_examples=60, derandomize=True
)
hypothesis.settings.load_profile("numerics")

EPS = 0.05


@pytest.fixture(scope="session")
def pa_word():
    return parse_braid("1 -2")


@pytest.fixture(scope="session")
def pa_protocol(pa_word):
    return build_protocol(pa_word)


@pytest.fixture(scope="session")
def pa_flow(pa_protocol):
    """Shared provider for the canonical pA protocol; the stream-solve
    cache accumulates across tests."""
    return ProtocolFlow(pa_protocol, FlowConditions.still(3, EPS), SolverOptions())


@pytest.fixture(scope="session")
def solid_flow():
    """Rigid-rotation flow (no stirrers), omega = 2, one period = pi/2 so a
    period rotates by 90 degrees."""
    omega = 2.0
    dom = DomainSnapshot((), EPS)
    cond = FlowConditions(omega, (omega * dom.area,), dom.area)
    model = solve_stream(dom, cond, [0j], SolverOptions(order=8, nodes_per_boundary=64))
    return SteadyFlow(model, period=np.pi / 2.0)


@pytest.fixture(scope="session")
def annulus_model():
    gamma_hat = 1.3
    dom = DomainSnapshot((0j,), EPS)
    cond = FlowConditions(0.0, (gamma_hat, -gamma_hat), dom.area)
    model = solve_stream(dom, cond, [0j, 0j], SolverOptions(order=8, nodes_per_boundary=64))
    return model, gamma_hat


@pytest.fixture(scope="session")
def zero_flow():
    """Hold protocol with zero circulations: the velocity field vanishes."""
    hold = build_protocol(BraidWord(()))
    return ProtocolFlow(hold, FlowConditions.still(3, EPS), SolverOptions(order=8, nodes_per_boundary=64))
