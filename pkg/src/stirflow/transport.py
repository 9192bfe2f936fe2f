"""Tracer advection under the time-dependent solved velocity field.

A velocity provider turns a stirring protocol plus flow conditions into a
time-indexed family of stream-function solves, memoized so the fixed-step
integrator re-uses one solve per distinct stage time.  Classical
fixed-step RK4 is used throughout: reproducibility of growth-rate
measurements matters more than per-trajectory efficiency.  Step counts are
rounded per move so stage times never straddle a move junction, where the
velocity field is only C^1 in time.

The flow-map Jacobian is integrated alongside the points via the
variational equation dJ/dt = grad(X)(z(t), t) J with J(t0) = I, using the
same RK4 stages, which preserves the scheme's fourth order for the joint
system.  Backward integration provides the inverse flow map and its
Jacobian as needed by the vorticity diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from stirflow.field import (
    OUTER_RADIUS,
    DomainSnapshot,
    FlowConditions,
    SolverOptions,
    StreamModel,
    solve_stream,
)
from stirflow.protocol import Hold, StirringProtocol

try:  # compiled fast path; the numpy route below is the reference
    from stirflow import _kernels

    _HAVE_KERNELS = True
except ImportError:  # pragma: no cover
    _kernels = None
    _HAVE_KERNELS = False

_GRAZE = 1e-9  # boundary-grazing guard distance
_ESCAPE = 1e-6  # tolerated boundary excursion before LeftDomain


class LeftDomain(RuntimeError):
    """A tracer penetrated a boundary beyond tolerance (dt too large or the
    solver residual too large)."""


@dataclass(frozen=True)
class IntegratorOptions:
    """Fixed-step RK4 controls; dt is a target, rounded so that an integer
    number of steps covers each move exactly (default period/2000)."""

    dt: float | None = None

    def steps_for(self, duration: float, period: float) -> int:
        target = self.dt if self.dt is not None else period / 2000.0
        if target <= 0:
            raise ValueError("dt must be positive")
        return max(1, round(duration / target))


@dataclass(frozen=True)
class FlowMapSample:
    """One advected point with the Jacobian of the flow map over (t0, t1)."""

    point: complex
    jacobian: np.ndarray  # (2, 2)
    t0: float
    t1: float


@dataclass(frozen=True)
class FlowMapSamples:
    """Batch of advected points with flow-map Jacobians over (t0, t1)."""

    points: np.ndarray  # complex (n,)
    jacobians: np.ndarray  # (n, 2, 2)
    t0: float
    t1: float

    def __len__(self) -> int:
        return self.points.size

    def __getitem__(self, i: int) -> FlowMapSample:
        return FlowMapSample(
            complex(self.points[i]), self.jacobians[i], self.t0, self.t1
        )

    @property
    def determinants(self) -> np.ndarray:
        return np.linalg.det(self.jacobians)


class ProtocolFlow:
    """Velocity provider for a stirring protocol: solves the stream
    function at each requested time and memoizes by base-period offset.

    Circulations attach to stirrer identities (they ride along with the
    permuted stirrers), so cache keys combine the quantized offset with the
    per-path circulation assignment; for permutation-symmetric circulations
    every period hits the same entries.
    """

    def __init__(
        self,
        protocol: StirringProtocol,
        conditions: FlowConditions,
        solver: SolverOptions = SolverOptions(),
    ):
        if conditions.n_inner != 3:
            raise ValueError("protocol flows have three stirrers")
        protocol.config.require_admissible()
        self.protocol = protocol
        self.conditions = conditions
        self.solver = solver
        self._models: dict = {}
        self._static = all(isinstance(move, Hold) for move in protocol.moves)

    @property
    def period(self) -> float:
        return self.protocol.period

    @property
    def radius(self) -> float:
        return self.protocol.config.radius

    def junction_times(self) -> np.ndarray:
        return self.protocol.junction_times

    def _key(self, t: float):
        T = self.period
        k = math.floor(t / T + 1e-12)
        s = min(max(t - k * T, 0.0), T)
        if self._static:
            return ("static",)
        inv = _invert(self.protocol.permutation_power(k))
        gammas = tuple(self.conditions.circulations[1 + inv[j]] for j in range(3))
        return (round(s, 12), gammas)

    def model_at(self, t: float) -> StreamModel:
        key = self._key(t)
        model = self._models.get(key)
        if model is None:
            model = self._solve(t, key)
            self._models[key] = model
        return model

    def _solve(self, t: float, key) -> StreamModel:
        T = self.period
        k = math.floor(t / T + 1e-12)
        s = min(max(t - k * T, 0.0), T)
        centers = self.protocol._base_paths(np.array([s]))[0]
        vels = self.protocol._base_paths(np.array([s]), derivative=True)[0]
        if self._static:
            gammas = self.conditions.circulations[1:]
        else:
            gammas = key[1]
        dom = DomainSnapshot(tuple(centers.tolist()), self.radius, time=s)
        cond = FlowConditions(
            self.conditions.omega,
            (self.conditions.circulations[0], *gammas),
            dom.area,
        )
        return solve_stream(dom, cond, [0j, *vels.tolist()], self.solver)

    def velocity(self, z, t: float):
        return self.model_at(t).velocity(z, check=False)

    def velocity_gradient(self, z, t: float):
        return self.model_at(t).velocity_gradient(z, check=False)

    def domain_at(self, t: float) -> DomainSnapshot:
        return self.model_at(t).snapshot

    def stage_times(self, t0: float, t1: float, opts: IntegratorOptions):
        edges = _step_edges(self, t0, t1, opts)
        stages = [edges[0]]
        for a, b in zip(edges[:-1], edges[1:]):
            stages.extend((0.5 * (a + b), b))
        return np.array(stages)

    def precompute(self, t0: float, t1: float, opts: IntegratorOptions, threads: int = 1):
        """Solve at every stage time of the [t0, t1] step grid up front."""
        times = self.stage_times(t0, t1, opts)
        missing = []
        seen = set()
        for t in times:
            key = self._key(float(t))
            if key not in self._models and key not in seen:
                seen.add(key)
                missing.append((float(t), key))
        if threads > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=threads) as pool:
                futures = {
                    key: pool.submit(self._solve, t, key) for t, key in missing
                }
            for key, fut in futures.items():
                self._models[key] = fut.result()
        else:
            for t, key in missing:
                self._models[key] = self._solve(t, key)

    @property
    def solve_count(self) -> int:
        return len(self._models)


def _invert(perm: tuple[int, ...]) -> tuple[int, ...]:
    out = [0] * len(perm)
    for i, p in enumerate(perm):
        out[p] = i
    return tuple(out)


class SteadyFlow:
    """Velocity provider wrapping a single solved model (static domain)."""

    def __init__(self, model: StreamModel, period: float = 1.0):
        self.model = model
        self._period = period

    @property
    def period(self) -> float:
        return self._period

    @property
    def radius(self) -> float:
        return self.model.radius

    def junction_times(self) -> np.ndarray:
        return np.array([0.0, self._period])

    def model_at(self, t: float) -> StreamModel:
        return self.model

    def velocity(self, z, t: float):
        return self.model.velocity(z, check=False)

    def velocity_gradient(self, z, t: float):
        return self.model.velocity_gradient(z, check=False)

    def domain_at(self, t: float) -> DomainSnapshot:
        return self.model.snapshot


def _step_edges(vp, t0: float, t1: float, opts: IntegratorOptions) -> np.ndarray:
    """Monotone step grid from t0 to t1 aligned with move junctions."""
    if t1 == t0:
        return np.array([t0])
    lo, hi = (t0, t1) if t1 > t0 else (t1, t0)
    T = vp.period
    junctions = np.asarray(vp.junction_times())[:-1]
    k_lo = math.floor(lo / T + 1e-12)
    k_hi = math.floor(hi / T - 1e-12)
    marks = {lo, hi}
    for k in range(k_lo, k_hi + 1):
        for j in junctions:
            t = k * T + float(j)
            if lo < t < hi:
                marks.add(t)
    marks = sorted(marks)
    edges = [lo]
    for a, b in zip(marks[:-1], marks[1:]):
        n = opts.steps_for(b - a, T)
        edges.extend(a + (b - a) * (i + 1) / n for i in range(n))
    grid = np.array(edges)
    return grid if t1 > t0 else grid[::-1]


def _nudge(z: np.ndarray, snapshot: DomainSnapshot) -> np.ndarray:
    """Grazing guard for stage evaluations: points within the hair-thin
    band +-1e-9 of a boundary are placed 1e-9 inside.  Points further out
    (e.g. RK4 stage copies lagging a moving wall by its curvature scale)
    are left alone: projecting them would erase exactly the geometric
    information the stage sampling exists to capture."""
    r = np.abs(z)
    limit = OUTER_RADIUS - _GRAZE
    graze = (r > limit) & (r < OUTER_RADIUS + _GRAZE)
    if np.any(graze):
        z = np.where(graze, z * (limit / np.where(r == 0, 1.0, r)), z)
    eps = snapshot.radius
    for c in snapshot.centers:
        d = np.abs(z - c)
        graze = (d < eps + _GRAZE) & (d > eps - _GRAZE)
        if np.any(graze):
            safe = np.where(d == 0, 1.0, d)
            z = np.where(graze, c + (z - c) * ((eps + _GRAZE) / safe), z)
    return z


def _heal(z: np.ndarray, snapshot: DomainSnapshot) -> np.ndarray:
    """State projection between steps: any point at or beyond a boundary
    (grazing or penetrating) is placed 1e-9 inside the fluid.  Runs on the
    integration state only, never on stage copies."""
    r = np.abs(z)
    limit = OUTER_RADIUS - _GRAZE
    out = r > limit
    if np.any(out):
        z = np.where(out, z * (limit / np.where(r == 0, 1.0, r)), z)
    eps = snapshot.radius
    for c in snapshot.centers:
        d = np.abs(z - c)
        close = d < eps + _GRAZE
        if np.any(close):
            safe = np.where(d == 0, 1.0, d)
            z = np.where(close, c + (z - c) * ((eps + _GRAZE) / safe), z)
    return z


def _check_containment(z: np.ndarray, snapshot: DomainSnapshot, t: float) -> None:
    ok = snapshot.contains(z, tol=_ESCAPE)
    if not np.all(ok):
        idx = np.nonzero(~ok)[0]
        raise LeftDomain(
            f"{idx.size} tracer(s) left the domain near t = {t:.6g} "
            f"(first index {idx[0]}); reduce dt or solver residual"
        )


def _vargs(model):
    return (model._centers_arr, model._logs_arr, model._d1_inner,
            model._d1_outer, model.omega)


def _gargs(model):
    return (model._centers_arr, model._logs_arr, model._d1_inner,
            model._d2_inner, model._d1_outer, model._d2_outer[:-1],
            model.omega)


def _integrate(
    points: np.ndarray,
    t0: float,
    t1: float,
    vp,
    opts: IntegratorOptions,
    with_jacobian: bool,
):
    z = np.array(points, dtype=complex).reshape(-1)
    jac = None
    if with_jacobian:
        jac = np.zeros((z.size, 2, 2))
        jac[:, 0, 0] = jac[:, 1, 1] = 1.0
    edges = _step_edges(vp, t0, t1, opts)
    _check_containment(z, vp.domain_at(float(edges[0])), float(edges[0]))
    fast = _HAVE_KERNELS and hasattr(vp, "model_at")
    for a, b in zip(edges[:-1], edges[1:]):
        h = b - a
        mid = a + 0.5 * h
        if fast:
            ma = vp.model_at(a)
            mm = vp.model_at(mid)
            mb = vp.model_at(b)
            if with_jacobian:
                exc = _kernels.rk4_step_jac(
                    z, jac, h, vp.radius, *_gargs(ma), *_gargs(mm), *_gargs(mb)
                )
            else:
                exc = _kernels.rk4_step(
                    z, h, vp.radius, *_vargs(ma), *_vargs(mm), *_vargs(mb)
                )
            if exc > _ESCAPE:
                _check_containment(z, mb.snapshot, b)
            continue
        snap_a = vp.domain_at(a)
        snap_m = vp.domain_at(mid)
        snap_b = vp.domain_at(b)
        # project grazing/penetrating state back inside before the step so
        # near-boundary integration error cannot accumulate across steps
        z = _heal(z, snap_a)

        def stage(t, zs, snap):
            zs = _nudge(zs, snap)
            if with_jacobian:
                return vp.velocity(zs, t), vp.velocity_gradient(zs, t)
            return vp.velocity(zs, t), None

        k1, g1 = stage(a, z, snap_a)
        k2, g2 = stage(mid, z + 0.5 * h * k1, snap_m)
        k3, g3 = stage(mid, z + 0.5 * h * k2, snap_m)
        k4, g4 = stage(b, z + h * k3, snap_b)
        if with_jacobian:
            m1 = g1 @ jac
            m2 = g2 @ (jac + 0.5 * h * m1)
            m3 = g3 @ (jac + 0.5 * h * m2)
            m4 = g4 @ (jac + h * m3)
            jac = jac + (h / 6.0) * (m1 + 2.0 * m2 + 2.0 * m3 + m4)
        z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        _check_containment(z, snap_b, b)
    return z, jac


def advect(
    points,
    t0: float,
    t1: float,
    vp,
    opts: IntegratorOptions = IntegratorOptions(),
) -> np.ndarray:
    """Advect points from t0 to t1 (backward allowed); returns positions."""
    z, _ = _integrate(points, t0, t1, vp, opts, with_jacobian=False)
    return z


def advect_with_jacobian(
    points,
    t0: float,
    t1: float,
    vp,
    opts: IntegratorOptions = IntegratorOptions(),
) -> FlowMapSamples:
    """Advect points and the flow-map Jacobian from t0 to t1."""
    z, jac = _integrate(points, t0, t1, vp, opts, with_jacobian=True)
    return FlowMapSamples(points=z, jacobians=jac, t0=t0, t1=t1)


def inverse_flow(
    points,
    n_periods: int,
    vp,
    opts: IntegratorOptions = IntegratorOptions(),
) -> FlowMapSamples:
    """Backward map from t = n_periods * T to 0 with Jacobians: realizes
    the inverse of the n-period flow map at the given points."""
    if n_periods < 0:
        raise ValueError("n_periods must be nonnegative")
    t0 = n_periods * vp.period
    return advect_with_jacobian(points, t0, 0.0, vp, opts)
