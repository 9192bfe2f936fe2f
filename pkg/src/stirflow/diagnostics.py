"""Growth measurements for stirred flows.

Three instruments, all built on the transport module:

* material-curve length per period, with adaptive refinement that bisects
  *initial-time* preimages and advects the new points forward, so the
  polyline never accumulates interpolation error in the stretched image;
* passively transported scalar values (the vorticity carried by the flow),
  evaluated by pulling grid points back with the inverse flow map;
* the gradient of the transported scalar, via the chain rule
  grad(w_n)(z) = D(phi_n^{-1})(z)^T grad(w_0)(phi_n^{-1}(z)),
  whose sup norm must grow like the braid's expansion constant for
  pseudoAnosov protocols;
* circulation along an advected closed curve, which an ideal flow must
  conserve.

Growth rates are fitted on the last half of each series: the early periods
carry an unknown multiplicative constant, only the exponent is predicted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from stirflow.field import OUTER_RADIUS, DomainSnapshot
from stirflow.transport import IntegratorOptions, advect, advect_with_jacobian, inverse_flow

DEFAULT_VERTEX_BUDGET = 2_000_000
_SPLIT_FLOOR_FACTOR = 1e-3  # stop bisecting polyline corners below this * delta


class DegenerateSeries(ValueError):
    """Growth series has nonpositive values; no exponential rate exists."""


@dataclass(frozen=True)
class MaterialCurve:
    """Polyline tracked under the flow map.

    Curves made by the ``segment`` and ``circle`` factories carry an exact
    parameterization, so refinement inserts points on the true initial
    curve; a bare polyline refines by chord bisection instead.
    """

    vertices: np.ndarray
    closed: bool = False
    delta: float = 5e-3
    max_turn: float = 0.2
    parameterization: Optional[tuple[Callable, np.ndarray]] = None

    def __post_init__(self) -> None:
        verts = np.asarray(self.vertices, dtype=complex).reshape(-1)
        if verts.size < 2:
            raise ValueError("a curve needs at least two vertices")
        if np.any(verts[1:] == verts[:-1]):
            raise ValueError("consecutive vertices must be distinct")
        if not (self.delta > 0 and self.max_turn > 0):
            raise ValueError("refinement parameters must be positive")
        object.__setattr__(self, "vertices", verts)

    @classmethod
    def segment(cls, start: complex, end: complex, delta: float = 5e-3,
                max_turn: float = 0.2) -> "MaterialCurve":
        n = max(2, math.ceil(abs(end - start) / delta) + 1)
        params = np.linspace(0.0, 1.0, n)
        fn = lambda s: start + s * (end - start)  # noqa: E731
        return cls(fn(params), closed=False, delta=delta, max_turn=max_turn,
                   parameterization=(fn, params))

    @classmethod
    def circle(cls, center: complex, radius: float, delta: float = 5e-3,
               max_turn: float = 0.2) -> "MaterialCurve":
        n = max(16, math.ceil(2 * math.pi / max_turn) + 1,
                math.ceil(2 * math.pi * radius / delta) + 1)
        params = np.arange(n) / n
        fn = lambda s: center + radius * np.exp(2j * math.pi * s)  # noqa: E731
        return cls(fn(params), closed=True, delta=delta, max_turn=max_turn,
                   parameterization=(fn, params))

    def length(self) -> float:
        pts = self.vertices
        if self.closed:
            pts = np.concatenate([pts, pts[:1]])
        return float(np.abs(np.diff(pts)).sum())


@dataclass
class GrowthSeries:
    """Per-period measurements (lengths or gradient sup-norms)."""

    values: np.ndarray
    label: str
    period: float
    budget_exceeded: bool = False
    degenerate: bool = False

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)


@dataclass(frozen=True)
class RateEstimate:
    rate: float  # per period
    intercept: float
    max_residual: float
    window: tuple[int, int]


def estimate_growth_rate(series: GrowthSeries) -> RateEstimate:
    """Least-squares slope of log(values) vs period over the last half."""
    v = series.values
    if v.size < 4:
        raise ValueError("need at least 4 values to fit a rate")
    if np.any(v <= 0.0):
        raise DegenerateSeries("growth series has nonpositive values")
    n_last = v.size - 1
    lo = math.ceil(n_last / 2)
    idx = np.arange(lo, n_last + 1)
    logs = np.log(v[lo:])
    slope, intercept = np.polyfit(idx, logs, 1)
    resid = float(np.abs(logs - (slope * idx + intercept)).max())
    return RateEstimate(float(slope), float(intercept), resid, (lo, n_last))


@dataclass(frozen=True)
class VorticityField:
    """Closed-form scalar with closed-form gradient (as complex gx + i*gy)."""

    name: str
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]

    @classmethod
    def constant(cls, omega: float) -> "VorticityField":
        return cls(
            name=f"constant({omega})",
            value=lambda z: np.full(np.shape(z), float(omega)),
            gradient=lambda z: np.zeros(np.shape(z), dtype=complex),
        )

    @classmethod
    def linear_x(cls) -> "VorticityField":
        """w(x, y) = x: no critical points, and its level sets crossing the
        gaps between stirrers are essential regular arcs."""
        return cls(
            name="linear_x",
            value=lambda z: np.asarray(z, dtype=complex).real,
            gradient=lambda z: np.full(np.shape(z), 1.0 + 0.0j),
        )

    @classmethod
    def gaussian_bump(
        cls, center: complex = 0.25j, width: float = 0.35, amplitude: float = 1.0
    ) -> "VorticityField":
        """Morse example: single interior maximum, finitely many critical
        points on any compact region."""

        def value(z):
            z = np.asarray(z, dtype=complex)
            return amplitude * np.exp(-np.abs(z - center) ** 2 / width**2)

        def gradient(z):
            z = np.asarray(z, dtype=complex)
            return value(z) * (-2.0 / width**2) * (z - center)

        return cls(name="gaussian_bump", value=value, gradient=gradient)


class _CurveEvolver:
    """Advect a refined polyline period by period.

    Every vertex carries its preimage (a parameter on the analytic initial
    curve when available, otherwise the initial-time point itself); new
    vertices bisect preimages and are advected forward to the current
    period, so refinement never interpolates in the stretched image.
    """

    def __init__(self, curve: MaterialCurve, vp, opts: IntegratorOptions,
                 vertex_budget: int = DEFAULT_VERTEX_BUDGET):
        self.vp = vp
        self.opts = opts
        self.closed = curve.closed
        self.delta = curve.delta
        self.max_turn = curve.max_turn
        self.budget = vertex_budget
        self.budget_exceeded = False
        self.periods_done = 0
        if curve.parameterization is not None:
            self._fn, pre = curve.parameterization
            self._pre = np.asarray(pre, dtype=float)
        else:
            self._fn = None
            self._pre = np.asarray(curve.vertices, dtype=complex)
        self.points = self._to_points(self._pre)
        if not np.all(vp.domain_at(0.0).contains(self.points, tol=1e-9)):
            raise ValueError("initial curve leaves the fluid domain")
        self._refine(initial=True)

    def _to_points(self, pre):
        return np.asarray(pre, dtype=complex) if self._fn is None else np.asarray(self._fn(pre), dtype=complex)

    def length(self) -> float:
        pts = self.points
        if self.closed:
            pts = np.concatenate([pts, pts[:1]])
        return float(np.abs(np.diff(pts)).sum())

    def _segment_views(self):
        z = self.points
        if self.closed:
            return z, np.roll(z, -1)
        return z[:-1], z[1:]

    def _mid_pre(self, seg_idx):
        pre = self._pre
        n = pre.size
        if self._fn is None:
            nxt = pre[(seg_idx + 1) % n] if self.closed else pre[seg_idx + 1]
            return 0.5 * (pre[seg_idx] + nxt)
        if self.closed:
            nxt = np.where(seg_idx + 1 < n, pre[(seg_idx + 1) % n],
                           pre[0] + 1.0)
        else:
            nxt = pre[seg_idx + 1]
        return 0.5 * (pre[seg_idx] + nxt)

    def _bad_segments(self) -> np.ndarray:
        a, b = self._segment_views()
        d = b - a
        ds = np.abs(d)
        bad = ds > self.delta
        m = d.size
        # Turning refinement stops below the length floor: fold tips stretch
        # locally much faster than the global rate, and chasing their
        # curvature to machine scale would eat the vertex budget while
        # adding no measurable length.
        floor = max(1e-12, _SPLIT_FLOOR_FACTOR * self.delta)
        if m >= 2:
            if self.closed:
                ratio = np.roll(d, -1) / np.where(d == 0, 1.0, d)
                turn = np.abs(np.angle(ratio))
                over = turn > self.max_turn  # corner between seg j and j+1
                angular = over | np.roll(over, 1)
            else:
                ratio = d[1:] / np.where(d[:-1] == 0, 1.0, d[:-1])
                turn = np.abs(np.angle(ratio))
                over = turn > self.max_turn
                angular = np.zeros_like(bad)
                angular[:-1] |= over
                angular[1:] |= over
            bad |= angular & (ds > floor)
        return bad

    def _refine(self, initial: bool = False) -> None:
        t_now = self.periods_done * self.vp.period
        while True:
            bad = np.nonzero(self._bad_segments())[0]
            if bad.size == 0:
                return
            if self._pre.size + bad.size > self.budget:
                room = max(0, self.budget - self._pre.size)
                bad = bad[:room]
                self.budget_exceeded = True
                if bad.size == 0:
                    return
            mid_pre = self._mid_pre(bad)
            # guard against zero-progress splits at float resolution
            n = self._pre.size
            left = self._pre[bad]
            right = self._pre[(bad + 1) % n] if self.closed else self._pre[bad + 1]
            progress = (mid_pre != left) & (mid_pre != right)
            if not np.all(progress):
                bad = bad[progress]
                mid_pre = mid_pre[progress]
                if bad.size == 0:
                    return
            mid_pts = self._to_points(mid_pre)
            if not initial and t_now > 0:
                mid_pts = advect(mid_pts, 0.0, t_now, self.vp, self.opts)
            self._pre = np.insert(self._pre, bad + 1, mid_pre)
            self.points = np.insert(self.points, bad + 1, mid_pts)
            if self.budget_exceeded:
                return

    def advance_period(self) -> None:
        T = self.vp.period
        t0 = self.periods_done * T
        self.points = advect(self.points, t0, t0 + T, self.vp, self.opts)
        self.periods_done += 1
        self._refine()

    @property
    def vertex_count(self) -> int:
        return self._pre.size


def evolve_curve(
    curve: MaterialCurve,
    vp,
    n_periods: int,
    opts: IntegratorOptions = IntegratorOptions(),
    vertex_budget: int = DEFAULT_VERTEX_BUDGET,
) -> GrowthSeries:
    """Advect the curve one period at a time, re-refining after each, and
    record the polyline length per period.  On hitting the vertex budget a
    partial series is returned with ``budget_exceeded`` set."""
    evolver = _CurveEvolver(curve, vp, opts, vertex_budget)
    lengths = [evolver.length()]
    for _ in range(n_periods):
        if evolver.budget_exceeded:
            break
        evolver.advance_period()
        lengths.append(evolver.length())
    return GrowthSeries(
        values=np.array(lengths),
        label="length",
        period=vp.period,
        budget_exceeded=evolver.budget_exceeded,
    )


def transported_vorticity(
    w0: VorticityField,
    vp,
    z,
    n_periods: int,
    opts: IntegratorOptions = IntegratorOptions(),
) -> np.ndarray:
    """Values of the transported scalar at points z after n periods:
    w_n(z) = w_0(inverse flow map applied to z)."""
    samples = inverse_flow(np.asarray(z, dtype=complex).reshape(-1), n_periods, vp, opts)
    return w0.value(samples.points)


def _periodic_circulations(vp) -> bool:
    conditions = getattr(vp, "conditions", None)
    protocol = getattr(vp, "protocol", None)
    if conditions is None or protocol is None:
        return True  # steady providers
    perm = protocol.permutation
    gammas = conditions.circulations[1:]
    return all(gammas[i] == gammas[perm[i]] for i in range(len(perm)))


def vorticity_gradient_growth(
    w0: VorticityField,
    vp,
    grid,
    n_periods: int,
    opts: IntegratorOptions = IntegratorOptions(),
) -> GrowthSeries:
    """Sup norm over the grid of grad(w_n) per period, via inverse-flow
    Jacobians.  A gradient-free scalar yields a flagged zero series."""
    grid = np.asarray(grid, dtype=complex).reshape(-1)
    g0 = np.abs(w0.gradient(grid))
    if float(g0.max()) == 0.0:
        return GrowthSeries(
            values=np.zeros(n_periods + 1),
            label="gradient",
            period=vp.period,
            degenerate=True,
        )
    values = [float(g0.max())]
    T = vp.period
    if _periodic_circulations(vp):
        # incremental pullback: one backward period per step
        y = grid.copy()
        jac = np.zeros((grid.size, 2, 2))
        jac[:, 0, 0] = jac[:, 1, 1] = 1.0
        for _ in range(n_periods):
            leg = advect_with_jacobian(y, T, 0.0, vp, opts)
            y = leg.points
            jac = leg.jacobians @ jac
            values.append(_max_gradient_norm(w0, y, jac))
    else:
        for n in range(1, n_periods + 1):
            samples = inverse_flow(grid, n, vp, opts)
            values.append(_max_gradient_norm(w0, samples.points, samples.jacobians))
    return GrowthSeries(values=np.array(values), label="gradient", period=T)


def _max_gradient_norm(w0: VorticityField, preimages, jacobians) -> float:
    g = w0.gradient(preimages)
    gx, gy = g.real, g.imag
    out_x = jacobians[:, 0, 0] * gx + jacobians[:, 1, 0] * gy
    out_y = jacobians[:, 0, 1] * gx + jacobians[:, 1, 1] * gy
    return float(np.hypot(out_x, out_y).max())


def pullback_gradient(
    w0: VorticityField,
    vp,
    z,
    n_periods: int,
    opts: IntegratorOptions = IntegratorOptions(),
) -> np.ndarray:
    """grad(w_n) at the points z (complex gx + i*gy), for cross-checks."""
    z = np.asarray(z, dtype=complex).reshape(-1)
    samples = inverse_flow(z, n_periods, vp, opts)
    g = w0.gradient(samples.points)
    gx, gy = g.real, g.imag
    jac = samples.jacobians
    out_x = jac[:, 0, 0] * gx + jac[:, 1, 0] * gy
    out_y = jac[:, 0, 1] * gx + jac[:, 1, 1] * gy
    return out_x + 1j * out_y


def circulation_drift(
    vp,
    curve: MaterialCurve,
    n_periods: int,
    opts: IntegratorOptions = IntegratorOptions(),
    vertex_budget: int = DEFAULT_VERTEX_BUDGET,
) -> np.ndarray:
    """Trapezoid circulation of the instantaneous velocity along the
    advected, refined closed curve at each period boundary."""
    if not curve.closed:
        raise ValueError("circulation needs a closed curve")
    evolver = _CurveEvolver(curve, vp, opts, vertex_budget)
    out = [_polyline_circulation(evolver.points, vp, 0.0)]
    for k in range(1, n_periods + 1):
        evolver.advance_period()
        out.append(_polyline_circulation(evolver.points, vp, k * vp.period))
    return np.array(out)


def _polyline_circulation(points: np.ndarray, vp, t: float) -> float:
    v = vp.velocity(points, t)
    z_next = np.roll(points, -1)
    v_next = np.roll(v, -1)
    seg = z_next - points
    mean_v = 0.5 * (v + v_next)
    return float((np.conj(mean_v) * seg).real.sum())


def interior_grid(n: int, snapshot: DomainSnapshot, margin: float | None = None) -> np.ndarray:
    """Uniform n x n grid over the bounding square, intersected with the
    fluid domain at the given margin (default eps/2) from all boundaries."""
    if margin is None:
        margin = snapshot.radius / 2.0
    xs = np.linspace(-OUTER_RADIUS, OUTER_RADIUS, n)
    X, Y = np.meshgrid(xs, xs)
    z = (X + 1j * Y).reshape(-1)
    keep = np.abs(z) <= OUTER_RADIUS - margin
    for c in snapshot.centers:
        keep &= np.abs(z - c) >= snapshot.radius + margin
    return z[keep]
