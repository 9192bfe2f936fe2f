"""Constant-vorticity stream function on one snapshot of the stirred disk.

On the unit disk minus m rigid disks of radius eps the solver finds the
stream function Psi with

    Laplacian(Psi) = -Omega                      in the fluid,
    (J grad Psi) . n = U_i . n                   on each boundary circle,
    circulation of J grad Psi around circle i = Gamma_i,

where U_i is the rigid translation velocity of circle i (zero on the outer
circle) and circulations are measured with the fluid on the left (outer
boundary counterclockwise, inner boundaries clockwise).  Compatibility
requires sum(Gamma_i) = Omega * area.

Boundary-condition reformulation.  For a circle translating rigidly with
constant velocity U, the normal-velocity condition is equivalent to a
Dirichlet-type one: with X = J grad Psi and tangent tau = (-n2, n1), the
arc-length derivative of Psi along the circle is grad Psi . tau = X . n,
while the linear function g(x, y) = U1*y - U2*x has dg/ds = U . n.  Hence
X . n = U . n along the whole circle exactly when d(Psi - g)/ds = 0, i.e.

    Psi(z) - (U1*y - U2*x) = s_i   (an unknown constant per boundary).

The solver works with this collocation-friendly form; one constant is
gauge-fixed to zero on the outer circle and a free additive constant in
the basis absorbs the gauge.

Representation.  Psi = c0 - Omega*|z|^2/4 + sum_i a_i*log|z - c_i|
plus harmonic corrections: truncated Laurent series Re/Im((z - c_i)^{-k})
about each stirrer and a Taylor tail Re/Im(z^k) for the outer wall,
k = 1..K.  Only the particular term and the log terms carry circulation:
Green's theorem fixes each log strength linearly,

    a_i = (Gamma_i + Omega*pi*eps^2) / (2*pi),

before least squares, and the remaining (single-valued) basis functions
contribute zero to every circulation.  The least-squares system over
equispaced collocation nodes is row-weighted by arc length and column
scaled; a smallest-singular-value guard rejects ill-conditioned fits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

OUTER_RADIUS = 1.0
_TWO_PI = 2.0 * math.pi


class FieldError(RuntimeError):
    """Base class for solver failures."""


class IllConditioned(FieldError):
    """Smallest singular value of the collocation matrix below guard."""


class ResidualTooLarge(FieldError):
    """Boundary normal-velocity residual above the configured tolerance."""


class OutOfDomain(ValueError):
    """Evaluation point outside the closed fluid domain."""


class IncompatibleCirculations(ValueError):
    """sum(Gamma_i) != Omega * area within tolerance."""


def domain_area(n_inner: int, radius: float) -> float:
    """Fluid area pi*(1 - m*eps^2) of the unit disk minus m stirrers."""
    return math.pi * (OUTER_RADIUS**2 - n_inner * radius**2)


@dataclass(frozen=True)
class DomainSnapshot:
    """Unit disk minus inner circles of common radius at one instant."""

    centers: tuple[complex, ...]
    radius: float
    time: float = 0.0

    @property
    def n_inner(self) -> int:
        return len(self.centers)

    @property
    def area(self) -> float:
        return domain_area(self.n_inner, self.radius)

    def violations(self) -> list[str]:
        out = []
        eps = self.radius
        if self.centers and not eps > 0:
            out.append("stirrer radius must be positive")
        cs = list(self.centers)
        for i in range(len(cs)):
            if abs(cs[i]) + eps >= OUTER_RADIUS:
                out.append(f"inner circle {i} touches the outer boundary")
            for j in range(i + 1, len(cs)):
                if abs(cs[i] - cs[j]) <= 2 * eps:
                    out.append(f"inner circles {i} and {j} overlap")
        return out

    def contains(self, z, tol: float = 1e-9):
        """Boolean mask: inside the closed fluid domain within tol."""
        z = np.asarray(z, dtype=complex)
        ok = np.abs(z) <= OUTER_RADIUS + tol
        for c in self.centers:
            ok &= np.abs(z - c) >= self.radius - tol
        return ok


@dataclass(frozen=True)
class FlowConditions:
    """Vorticity and per-boundary circulations (outer first, fluid on left).

    The constructor enforces the compatibility constraint
    sum(circulations) = omega * area to within 1e-12 * max(1, |omega|).
    """

    omega: float
    circulations: tuple[float, ...]
    area: float

    def __post_init__(self) -> None:
        gap = abs(sum(self.circulations) - self.omega * self.area)
        if gap > 1e-12 * max(1.0, abs(self.omega)):
            raise IncompatibleCirculations(
                f"sum(Gamma) - Omega*area = {gap:.3e} exceeds tolerance"
            )

    @property
    def n_inner(self) -> int:
        return len(self.circulations) - 1

    @classmethod
    def still(cls, n_inner: int = 3, radius: float = 0.05) -> "FlowConditions":
        """Zero vorticity, zero circulations."""
        return cls(0.0, (0.0,) * (n_inner + 1), domain_area(n_inner, radius))

    @classmethod
    def balanced(
        cls, omega: float, inner: Sequence[float], radius: float
    ) -> "FlowConditions":
        """Prescribed inner circulations; outer chosen to close the sum."""
        area = domain_area(len(inner), radius)
        gamma0 = omega * area - float(sum(inner))
        return cls(omega, (gamma0, *map(float, inner)), area)


@dataclass(frozen=True)
class SolverOptions:
    # Default residual tolerance is 2e-5: the canonical three-stirrer swap
    # protocol peaks at ~1.2e-5 outer-wall residual at K = 12 (the Taylor
    # tail of the moving stirrer's translation dipole), and diagnostics
    # only need ~1e-4.
    order: int = 12  # Laurent/Taylor truncation K
    nodes_per_boundary: int = 128
    min_singular_ratio: float = 1e-10
    residual_tolerance: float | None = 2e-5

    def __post_init__(self) -> None:
        if self.order < 1:
            raise ValueError("truncation order must be >= 1")
        if self.nodes_per_boundary < 4 * self.order:
            raise ValueError(
                "nodes_per_boundary must be >= 4 * order for overdetermination"
            )


@dataclass(frozen=True)
class ResidualReport:
    max_normal_residual: float
    normal_residual_by_boundary: tuple[float, ...]
    circulation_errors: tuple[float, ...]
    condition_number: float

    def as_dict(self) -> dict:
        return {
            "max_normal_residual": self.max_normal_residual,
            "normal_residual_by_boundary": list(self.normal_residual_by_boundary),
            "circulation_errors": list(self.circulation_errors),
            "condition_number": self.condition_number,
        }


@dataclass(frozen=True)
class StreamModel:
    """Solved stream function; velocity and its gradient are closed form.

    laurent[i, k-1] is the complex coefficient of (z - c_i)^{-k} whose real
    part enters Psi (real/imag parts are the cos/sin Fourier pair), taylor
    likewise for z^k.  Velocity is X = (dPsi/dy, -dPsi/dx).
    """

    omega: float
    centers: tuple[complex, ...]
    radius: float
    log_strengths: tuple[float, ...]
    laurent: np.ndarray  # complex, shape (m, K)
    taylor: np.ndarray  # complex, shape (K,)
    constant: float
    boundary_constants: tuple[float, ...]  # s_0 = 0, s_1..s_m
    order: int
    report: ResidualReport
    time: float = 0.0

    def __post_init__(self) -> None:
        m, K = len(self.centers), self.order
        laurent = np.asarray(self.laurent, dtype=complex).reshape(m, K)
        taylor = np.asarray(self.taylor, dtype=complex).reshape(K)
        k = np.arange(1, K + 1)
        object.__setattr__(self, "laurent", laurent)
        object.__setattr__(self, "taylor", taylor)
        # Horner coefficient tables for F', F'' (highest degree first)
        object.__setattr__(self, "_d1_inner", (laurent * k)[:, ::-1].copy())
        object.__setattr__(self, "_d2_inner", (laurent * k * (k + 1))[:, ::-1].copy())
        object.__setattr__(self, "_d1_outer", (taylor * k)[::-1].copy())
        object.__setattr__(self, "_d2_outer", (taylor * k * (k - 1))[::-1].copy())
        object.__setattr__(self, "_centers_arr", np.array(self.centers, dtype=complex))
        object.__setattr__(self, "_logs_arr", np.array(self.log_strengths, dtype=float))

    @property
    def snapshot(self) -> DomainSnapshot:
        return DomainSnapshot(self.centers, self.radius, self.time)

    def _require_inside(self, z, tol: float = 1e-9) -> None:
        ok = self.snapshot.contains(z, tol)
        if not np.all(ok):
            bad = np.asarray(z, dtype=complex).reshape(-1)[~np.asarray(ok).reshape(-1)]
            raise OutOfDomain(f"point(s) outside fluid domain, e.g. {bad.flat[0]}")

    def _fprime(self, z: np.ndarray) -> np.ndarray:
        """Derivative of the analytic part of Psi (logs, Laurent, Taylor)."""
        out = np.zeros_like(z)
        for i, c in enumerate(self._centers_arr):
            w = 1.0 / (z - c)
            acc = np.zeros_like(z)
            for coef in self._d1_inner[i]:
                acc = acc * w + coef
            out += self.log_strengths[i] * w - acc * w * w
        acc = np.zeros_like(z)
        for coef in self._d1_outer:
            acc = acc * z + coef
        return out + acc

    def _fsecond(self, z: np.ndarray) -> np.ndarray:
        out = np.zeros_like(z)
        for i, c in enumerate(self._centers_arr):
            w = 1.0 / (z - c)
            acc = np.zeros_like(z)
            for coef in self._d2_inner[i]:
                acc = acc * w + coef
            w2 = w * w
            out += -self.log_strengths[i] * w2 + acc * w2 * w
        if self.order >= 2:
            acc = np.zeros_like(z)
            for coef in self._d2_outer[:-1]:  # k = K .. 2
                acc = acc * z + coef
            out += acc
        return out

    def stream(self, z, check: bool = True):
        """Stream function values at z (complex scalar or array)."""
        z = np.asarray(z, dtype=complex)
        if check:
            self._require_inside(z)
        out = self.constant - 0.25 * self.omega * np.abs(z) ** 2
        K = self.order
        for i, c in enumerate(self._centers_arr):
            zc = z - c
            out = out + self.log_strengths[i] * np.log(np.abs(zc))
            w = 1.0 / zc
            acc = np.zeros_like(z)
            for coef in self.laurent[i, ::-1]:
                acc = (acc + coef) * w
            out = out + acc.real
        acc = np.zeros_like(z)
        for coef in self.taylor[::-1]:
            acc = (acc + coef) * z
        return out + acc.real

    def velocity(self, z, check: bool = True):
        """Fluid velocity as complex v1 + i*v2 at z."""
        z = np.asarray(z, dtype=complex)
        if check:
            self._require_inside(z)
        return -1j * np.conj(self._fprime(z)) + 0.5j * self.omega * z

    def velocity_gradient(self, z, check: bool = True):
        """Spatial velocity Jacobian, shape z.shape + (2, 2); trace-free."""
        z = np.asarray(z, dtype=complex)
        if check:
            self._require_inside(z)
        f2 = self._fsecond(z)
        a, b = f2.real, f2.imag
        half = 0.5 * self.omega
        out = np.empty(z.shape + (2, 2))
        out[..., 0, 0] = -b
        out[..., 0, 1] = -a - half
        out[..., 1, 0] = -a + half
        out[..., 1, 1] = b
        return out


def _boundary_nodes(dom: DomainSnapshot, n: int):
    """Equispaced nodes on every boundary circle.

    Returns (z, boundary_index, weight, normal) where weight is sqrt of the
    arc-length element and normal the unit normal used in residuals.
    """
    theta = _TWO_PI * (np.arange(n) + 0.5) / n
    rays = np.exp(1j * theta)
    zs, idx, wts, nrm = [], [], [], []
    zs.append(OUTER_RADIUS * rays)
    idx.append(np.zeros(n, dtype=int))
    wts.append(np.full(n, math.sqrt(_TWO_PI * OUTER_RADIUS / n)))
    nrm.append(rays)
    for i, c in enumerate(dom.centers, start=1):
        zs.append(c + dom.radius * rays)
        idx.append(np.full(n, i, dtype=int))
        wts.append(np.full(n, math.sqrt(_TWO_PI * dom.radius / n)))
        nrm.append(rays)
    return (
        np.concatenate(zs),
        np.concatenate(idx),
        np.concatenate(wts),
        np.concatenate(nrm),
    )


def _powers(base: np.ndarray, K: int) -> np.ndarray:
    out = np.empty((base.size, K), dtype=complex)
    out[:, 0] = base
    for k in range(1, K):
        out[:, k] = out[:, k - 1] * base
    return out


def solve_stream(
    dom: DomainSnapshot,
    cond: FlowConditions,
    boundary_velocities: Sequence[complex],
    opts: SolverOptions = SolverOptions(),
) -> StreamModel:
    """Solve for the stream function on one domain snapshot.

    boundary_velocities holds the rigid translation velocity of each
    boundary, outer first; the outer one must be zero.  Raises
    IllConditioned or ResidualTooLarge per the options, and ValueError on
    inconsistent inputs.
    """
    problems = dom.violations()
    if problems:
        raise ValueError("inadmissible domain: " + "; ".join(problems))
    if cond.n_inner != dom.n_inner:
        raise ValueError("conditions and domain disagree on boundary count")
    if abs(cond.area - dom.area) > 1e-12:
        raise ValueError("conditions were built for a different fluid area")
    bvel = np.asarray(boundary_velocities, dtype=complex)
    if bvel.shape != (dom.n_inner + 1,):
        raise ValueError("need one velocity per boundary, outer first")
    if abs(bvel[0]) != 0.0:
        raise ValueError("outer boundary velocity must be zero")

    m, K = dom.n_inner, opts.order
    eps, omega = dom.radius, cond.omega
    # Circulation conditions fix the log strengths before least squares.
    log_strengths = tuple(
        (cond.circulations[i + 1] + omega * math.pi * eps**2) / _TWO_PI
        for i in range(m)
    )

    z, b_idx, wts, _ = _boundary_nodes(dom, opts.nodes_per_boundary)
    n_rows = z.size
    n_cols = 1 + 2 * K * m + 2 * K + m
    A = np.empty((n_rows, n_cols))
    A[:, 0] = 1.0  # free additive constant (absorbs the s_0 = 0 gauge)
    col = 1
    for i in range(m):
        V = _powers(1.0 / (z - dom.centers[i]), K)
        A[:, col : col + 2 * K : 2] = V.real
        A[:, col + 1 : col + 2 * K : 2] = V.imag
        col += 2 * K
    V = _powers(z, K)
    A[:, col : col + 2 * K : 2] = V.real
    A[:, col + 1 : col + 2 * K : 2] = V.imag
    col += 2 * K
    s_col0 = col
    for i in range(1, m + 1):
        A[:, col] = np.where(b_idx == i, -1.0, 0.0)
        col += 1

    # Right side: motion term minus the known (particular + log) part.
    known = -0.25 * omega * np.abs(z) ** 2
    for i in range(m):
        known += log_strengths[i] * np.log(np.abs(z - dom.centers[i]))
    motion = np.zeros(n_rows)
    for i in range(1, m + 1):
        on_i = b_idx == i
        motion[on_i] = (np.conj(bvel[i]) * z[on_i]).imag  # U1*y - U2*x
    rhs = motion - known

    A *= wts[:, None]
    rhs = rhs * wts
    scale = np.sqrt(np.einsum("ij,ij->j", A, A))
    scale[scale == 0.0] = 1.0
    A /= scale
    coef, _, rank, sv = np.linalg.lstsq(A, rhs, rcond=None)
    condition = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    if rank < n_cols or sv[-1] < opts.min_singular_ratio * sv[0]:
        raise IllConditioned(
            f"singular-value ratio {sv[-1] / sv[0]:.3e} below guard "
            f"{opts.min_singular_ratio:.3e}"
        )
    coef = coef / scale

    laurent = np.empty((m, K), dtype=complex)
    for i in range(m):
        block = coef[1 + 2 * K * i : 1 + 2 * K * (i + 1)]
        laurent[i] = block[0::2] - 1j * block[1::2]
    block = coef[1 + 2 * K * m : 1 + 2 * K * m + 2 * K]
    taylor = block[0::2] - 1j * block[1::2]
    s_consts = (0.0, *map(float, coef[s_col0:]))

    model = StreamModel(
        omega=omega,
        centers=tuple(dom.centers),
        radius=eps,
        log_strengths=log_strengths,
        laurent=laurent,
        taylor=taylor,
        constant=float(coef[0]),
        boundary_constants=s_consts,
        order=K,
        report=_placeholder_report(condition),
        time=dom.time,
    )
    report = residual_report(
        model, dom, cond, bvel, nodes=4 * opts.nodes_per_boundary, condition=condition
    )
    object.__setattr__(model, "report", report)
    if (
        opts.residual_tolerance is not None
        and report.max_normal_residual > opts.residual_tolerance
    ):
        raise ResidualTooLarge(
            f"max normal-velocity residual {report.max_normal_residual:.3e} "
            f"exceeds {opts.residual_tolerance:.3e}"
        )
    return model


def _placeholder_report(condition: float) -> ResidualReport:
    return ResidualReport(math.nan, (), (), condition)


def residual_report(
    model: StreamModel,
    dom: DomainSnapshot,
    cond: FlowConditions,
    boundary_velocities: Sequence[complex],
    density: int = 4,
    nodes: int | None = None,
    condition: float | None = None,
) -> ResidualReport:
    """Boundary-condition and circulation checks at density x collocation
    resolution: max |X.n - U.n| per boundary and trapezoid circulation
    error per boundary."""
    bvel = np.asarray(boundary_velocities, dtype=complex)
    n = nodes if nodes is not None else density * max(128, 4 * model.order)
    theta = _TWO_PI * np.arange(n) / n
    rays = np.exp(1j * theta)
    normal_res = []
    circ_err = []

    # outer boundary: counterclockwise, fluid inside
    z = OUTER_RADIUS * rays
    v = model.velocity(z, check=False)
    normal_res.append(float(np.abs((np.conj(rays) * v).real).max()))
    dz = 1j * OUTER_RADIUS * rays * (_TWO_PI / n)
    gamma = float((np.conj(v) * dz).real.sum())
    circ_err.append(abs(gamma - cond.circulations[0]))

    for i, c in enumerate(dom.centers, start=1):
        z = c + dom.radius * rays
        v = model.velocity(z, check=False)
        rel = v - bvel[i]
        normal_res.append(float(np.abs((np.conj(rays) * rel).real).max()))
        # clockwise traversal (fluid on the left outside the stirrer)
        dz = -1j * dom.radius * rays * (_TWO_PI / n)
        gamma = float((np.conj(v) * dz).real.sum())
        circ_err.append(abs(gamma - cond.circulations[i]))

    cnum = condition if condition is not None else model.report.condition_number
    return ResidualReport(
        max_normal_residual=float(max(normal_res)),
        normal_residual_by_boundary=tuple(normal_res),
        circulation_errors=tuple(circ_err),
        condition_number=cnum,
    )
