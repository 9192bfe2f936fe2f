import math

import numpy as np
import pytest

from stirflow.braid import parse_braid
from stirflow.field import (
    DomainSnapshot,
    FlowConditions,
    IllConditioned,
    IncompatibleCirculations,
    OutOfDomain,
    ResidualTooLarge,
    SolverOptions,
    domain_area,
    residual_report,
    solve_stream,
)
from stirflow.protocol import build_protocol

EPS = 0.05


def mid_swap_snapshot(t=0.5):
    """Canonical protocol geometry at a time inside the first swap."""
    p = build_protocol(parse_braid("1 -2"))
    centers = p._base_paths(np.array([t]))[0]
    vels = p._base_paths(np.array([t]), derivative=True)[0]
    dom = DomainSnapshot(tuple(centers.tolist()), EPS, time=t)
    return dom, np.array([0j, *vels.tolist()])


def test_flow_conditions_compatibility():
    area = domain_area(3, EPS)
    FlowConditions(0.0, (0.0, 0.0, 0.0, 0.0), area)
    with pytest.raises(IncompatibleCirculations):
        FlowConditions(0.0, (1.0, 0.0, 0.0, 0.0), area)
    cond = FlowConditions.balanced(1.3, (0.2, -0.1, 0.4), EPS)
    assert sum(cond.circulations) == pytest.approx(1.3 * cond.area, abs=1e-14)


def test_annulus_recovers_exact_solution(annulus_model):
    model, gamma_hat = annulus_model
    rng = np.random.default_rng(5)
    z = rng.uniform(1.5 * EPS, 0.9, 50) * np.exp(2j * np.pi * rng.uniform(0, 1, 50))
    a = -gamma_hat / (2 * np.pi)
    exact = -1j * np.conj(a / z)
    err = np.abs(model.velocity(z) - exact) / np.abs(exact)
    assert err.max() < 1e-8
    # tangential speed Gamma / (2 pi r)
    speeds = np.abs(model.velocity(z))
    assert np.allclose(speeds, gamma_hat / (2 * np.pi * np.abs(z)), rtol=1e-8)


def test_solid_body_field(solid_flow):
    model = solid_flow.model
    omega = model.omega
    z = np.array([0.5 + 0.0j, 0.1 + 0.3j, -0.4 + 0.2j])
    assert np.abs(model.velocity(z) - 0.5j * omega * z).max() < 1e-10
    grad = model.velocity_gradient(np.array([0.3 + 0.2j]))[0]
    expect = np.array([[0.0, -omega / 2], [omega / 2, 0.0]])
    assert np.abs(grad - expect).max() < 1e-10


def test_zero_conditions_zero_velocity():
    dom = DomainSnapshot((-0.5 + 0j, 0j, 0.5 + 0j), EPS)
    cond = FlowConditions.still(3, EPS)
    model = solve_stream(dom, cond, [0j, 0j, 0j, 0j])
    rng = np.random.default_rng(0)
    z = rng.uniform(-0.6, 0.6, 30) + 1j * rng.uniform(0.2, 0.7, 30)
    assert np.abs(model.velocity(z)).max() < 1e-12


def test_out_of_domain_checks():
    dom = DomainSnapshot((0j,), EPS)
    cond = FlowConditions(0.0, (1.0, -1.0), dom.area)
    model = solve_stream(dom, cond, [0j, 0j], SolverOptions(order=8, nodes_per_boundary=64))
    with pytest.raises(OutOfDomain):
        model.velocity(np.array([1.5 + 0j]))
    with pytest.raises(OutOfDomain):
        model.velocity(np.array([0.01 + 0j]))  # inside the stirrer
    model.velocity(np.array([0.5 + 0j]))  # interior point passes


def test_moving_snapshot_residuals():
    dom, bvel = mid_swap_snapshot()
    cond = FlowConditions.still(3, EPS)
    model = solve_stream(dom, cond, bvel)
    rep = model.report
    assert rep.max_normal_residual < 2e-5
    # quadrature circulations match the prescription for all solved models
    assert max(rep.circulation_errors) < 1e-10


def test_circulation_report_with_nonzero_gamma():
    dom, bvel = mid_swap_snapshot(t=0.25)
    cond = FlowConditions.balanced(0.8, (0.3, -0.2, 0.1), EPS)
    model = solve_stream(dom, cond, bvel)
    assert max(model.report.circulation_errors) < 1e-10


def test_laplacian_matches_vorticity():
    dom, bvel = mid_swap_snapshot(t=0.4)
    omega = 0.9
    cond = FlowConditions.balanced(omega, (0.0, 0.0, 0.0), EPS)
    model = solve_stream(dom, cond, bvel)
    rng = np.random.default_rng(11)
    pts = []
    while len(pts) < 100:
        z = complex(rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9))
        if abs(z) < 0.8 and all(abs(z - c) > EPS + 0.12 for c in dom.centers):
            pts.append(z)
    z = np.array(pts)
    h = 1e-4
    lap = (
        model.stream(z + h, check=False)
        + model.stream(z - h, check=False)
        + model.stream(z + 1j * h, check=False)
        + model.stream(z - 1j * h, check=False)
        - 4.0 * model.stream(z, check=False)
    ) / h**2
    assert np.abs(lap + omega).max() < 1e-6


def test_divergence_and_curl_by_finite_differences():
    dom, bvel = mid_swap_snapshot(t=0.6)
    omega = 1.4
    cond = FlowConditions.balanced(omega, (0.1, 0.0, -0.1), EPS)
    model = solve_stream(dom, cond, bvel)
    rng = np.random.default_rng(3)
    pts = []
    while len(pts) < 40:
        z = complex(rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8))
        if abs(z) < 0.8 and all(abs(z - c) > EPS + 0.12 for c in dom.centers):
            pts.append(z)
    z = np.array(pts)
    h = 1e-4
    vxp = model.velocity(z + h, check=False)
    vxm = model.velocity(z - h, check=False)
    vyp = model.velocity(z + 1j * h, check=False)
    vym = model.velocity(z - 1j * h, check=False)
    div = (vxp.real - vxm.real + vyp.imag - vym.imag) / (2 * h)
    curl = (vxp.imag - vxm.imag) / (2 * h) - (vyp.real - vym.real) / (2 * h)
    assert np.abs(div).max() < 1e-6
    assert np.abs(curl - omega).max() < 1e-6


def test_gradient_matches_finite_differences():
    dom, bvel = mid_swap_snapshot(t=0.5)
    cond = FlowConditions.balanced(0.7, (0.2, 0.0, -0.3), EPS)
    model = solve_stream(dom, cond, bvel)
    z = np.array([0.3 + 0.55j, -0.2 - 0.6j])
    h = 1e-6
    grad = model.velocity_gradient(z)
    vx = (model.velocity(z + h, check=False) - model.velocity(z - h, check=False)) / (2 * h)
    vy = (model.velocity(z + 1j * h, check=False) - model.velocity(z - 1j * h, check=False)) / (2 * h)
    fd = np.stack(
        [np.stack([vx.real, vy.real], axis=-1), np.stack([vx.imag, vy.imag], axis=-1)],
        axis=-2,
    )
    assert np.abs(grad - fd).max() < 1e-5
    assert np.abs(grad[:, 0, 0] + grad[:, 1, 1]).max() < 1e-12  # trace free


def test_convergence_in_truncation_order():
    dom, bvel = mid_swap_snapshot(t=0.5)
    cond = FlowConditions.still(3, EPS)
    res = {}
    for order in (8, 16):
        opts = SolverOptions(order=order, nodes_per_boundary=8 * order,
                             residual_tolerance=None)
        res[order] = solve_stream(dom, cond, bvel, opts).report.max_normal_residual
    assert res[8] / res[16] >= 10.0


def test_uniqueness_surrogate_node_count():
    dom, bvel = mid_swap_snapshot(t=0.3)
    cond = FlowConditions.still(3, EPS)
    m128 = solve_stream(dom, cond, bvel, SolverOptions(nodes_per_boundary=128))
    m192 = solve_stream(dom, cond, bvel, SolverOptions(nodes_per_boundary=192))
    rng = np.random.default_rng(9)
    pts = []
    while len(pts) < 50:
        z = complex(rng.uniform(-0.85, 0.85), rng.uniform(-0.85, 0.85))
        if abs(z) < 0.9 and all(abs(z - c) > EPS + 0.02 for c in dom.centers):
            pts.append(z)
    z = np.array(pts)
    gap = np.abs(m128.velocity(z) - m192.velocity(z)).max()
    allowance = 10.0 * max(
        m128.report.max_normal_residual, m192.report.max_normal_residual
    )
    assert gap < allowance


def test_ill_conditioned_guard_trips():
    dom, bvel = mid_swap_snapshot()
    cond = FlowConditions.still(3, EPS)
    with pytest.raises(IllConditioned):
        solve_stream(dom, cond, bvel, SolverOptions(min_singular_ratio=1.0))


def test_residual_tolerance_trips():
    dom, bvel = mid_swap_snapshot()
    cond = FlowConditions.still(3, EPS)
    with pytest.raises(ResidualTooLarge):
        solve_stream(dom, cond, bvel, SolverOptions(residual_tolerance=1e-12))


def test_solver_options_validate():
    with pytest.raises(ValueError):
        SolverOptions(order=12, nodes_per_boundary=12)


def test_rejects_inconsistent_inputs():
    dom = DomainSnapshot((0j,), EPS)
    cond = FlowConditions(0.0, (1.0, -1.0), dom.area)
    with pytest.raises(ValueError):
        solve_stream(dom, cond, [0j])  # wrong boundary count
    with pytest.raises(ValueError):
        solve_stream(dom, cond, [1.0 + 0j, 0j])  # outer must be at rest
    overlapping = DomainSnapshot((0j, 0.01 + 0j), EPS)
    cond2 = FlowConditions(0.0, (0.0, 0.0, 0.0), overlapping.area)
    with pytest.raises(ValueError):
        solve_stream(overlapping, cond2, [0j, 0j, 0j])


def test_standalone_residual_report(annulus_model):
    model, gamma_hat = annulus_model
    dom = DomainSnapshot((0j,), EPS)
    cond = FlowConditions(0.0, (gamma_hat, -gamma_hat), dom.area)
    rep = residual_report(model, dom, cond, [0j, 0j], density=8)
    assert rep.max_normal_residual < 1e-10
    assert max(rep.circulation_errors) < 1e-10
