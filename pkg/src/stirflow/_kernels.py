"""Numba-compiled inner loops for tracer integration.

One fused kernel advances a whole RK4 step (four stage evaluations, the
boundary-grazing guard, the state update, and the containment reduction)
per point, which removes the per-stage array traffic of the numpy path.
The math matches transport's numpy fallback exactly: stream-function
derivative by Horner evaluation, velocity  -i*conj(F') + i*omega*z/2,
and the variational update for the flow-map Jacobian.

Import of this module fails cleanly when numba is unavailable; transport
falls back to numpy.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

_GRAZE = 1e-9


@njit(cache=True, inline="always")
def _fprime_point(z, centers, logs, d1, d1o):
    fp = 0.0 + 0.0j
    m = centers.shape[0]
    K = d1o.shape[0]
    for i in range(m):
        w = 1.0 / (z - centers[i])
        acc = 0.0 + 0.0j
        for k in range(K):
            acc = acc * w + d1[i, k]
        fp += logs[i] * w - acc * w * w
    acc = 0.0 + 0.0j
    for k in range(K):
        acc = acc * z + d1o[k]
    return fp + acc


@njit(cache=True, inline="always")
def _fsecond_point(z, centers, logs, d2, d2o):
    fs = 0.0 + 0.0j
    m = centers.shape[0]
    for i in range(m):
        w = 1.0 / (z - centers[i])
        acc = 0.0 + 0.0j
        for k in range(d2.shape[1]):
            acc = acc * w + d2[i, k]
        w2 = w * w
        fs += -logs[i] * w2 + acc * w2 * w
    acc = 0.0 + 0.0j
    for k in range(d2o.shape[0]):
        acc = acc * z + d2o[k]
    return fs + acc


@njit(cache=True, inline="always")
def _nudge_point(z, centers, eps):
    # band-limited grazing guard for stage copies: only points within
    # +-1e-9 of a boundary are moved (to 1e-9 inside)
    r = abs(z)
    limit = 1.0 - _GRAZE
    if r > limit and r < 1.0 + _GRAZE:
        z = z * (limit / r)
    for i in range(centers.shape[0]):
        d = abs(z - centers[i])
        if d > eps - _GRAZE and d < eps + _GRAZE and d > 0.0:
            z = centers[i] + (z - centers[i]) * ((eps + _GRAZE) / d)
    return z


@njit(cache=True, inline="always")
def _heal_point(z, centers, eps):
    # between-step state projection: grazing or penetrating points are
    # placed 1e-9 inside the fluid
    r = abs(z)
    limit = 1.0 - _GRAZE
    if r > limit:
        z = z * (limit / r)
    for i in range(centers.shape[0]):
        d = abs(z - centers[i])
        if d < eps + _GRAZE and d > 0.0:
            z = centers[i] + (z - centers[i]) * ((eps + _GRAZE) / d)
    return z


@njit(cache=True, inline="always")
def _excursion_point(z, centers, eps):
    exc = abs(z) - 1.0
    for i in range(centers.shape[0]):
        d = eps - abs(z - centers[i])
        if d > exc:
            exc = d
    return exc


@njit(cache=True, parallel=True)
def rk4_step(
    z, h, eps,
    ca, la, d1a, oa, oma,
    cm, lm, d1m, om_, omm,
    cb, lb, d1b, ob, omb,
):
    """One RK4 step for all points; returns worst boundary excursion."""
    n = z.shape[0]
    worst = -1.0e300
    for p in prange(n):
        zp = _heal_point(z[p], ca, eps)
        v = _fprime_point(zp, ca, la, d1a, oa)
        k1 = -1j * np.conj(v) + 0.5j * oma * zp

        z2 = _nudge_point(zp + 0.5 * h * k1, cm, eps)
        v = _fprime_point(z2, cm, lm, d1m, om_)
        k2 = -1j * np.conj(v) + 0.5j * omm * z2

        z3 = _nudge_point(zp + 0.5 * h * k2, cm, eps)
        v = _fprime_point(z3, cm, lm, d1m, om_)
        k3 = -1j * np.conj(v) + 0.5j * omm * z3

        z4 = _nudge_point(zp + h * k3, cb, eps)
        v = _fprime_point(z4, cb, lb, d1b, ob)
        k4 = -1j * np.conj(v) + 0.5j * omb * z4

        zn = zp + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        z[p] = zn
        worst = max(worst, _excursion_point(zn, cb, eps))
    return worst


@njit(cache=True, inline="always")
def _gradient_point(z, centers, logs, d2, d2o, omega):
    fs = _fsecond_point(z, centers, logs, d2, d2o)
    a = fs.real
    b = fs.imag
    half = 0.5 * omega
    return -b, -a - half, -a + half, b


@njit(cache=True, parallel=True)
def rk4_step_jac(
    z, jac, h, eps,
    ca, la, d1a, d2a, oa, o2a, oma,
    cm, lm, d1m, d2m, om_, o2m, omm,
    cb, lb, d1b, d2b, ob, o2b, omb,
):
    """RK4 step for points and flow-map Jacobians; returns worst excursion."""
    n = z.shape[0]
    worst = -1.0e300
    for p in prange(n):
        j00 = jac[p, 0, 0]
        j01 = jac[p, 0, 1]
        j10 = jac[p, 1, 0]
        j11 = jac[p, 1, 1]

        zp = _heal_point(z[p], ca, eps)
        v = _fprime_point(zp, ca, la, d1a, oa)
        k1 = -1j * np.conj(v) + 0.5j * oma * zp
        g00, g01, g10, g11 = _gradient_point(zp, ca, la, d2a, o2a, oma)
        m1_00 = g00 * j00 + g01 * j10
        m1_01 = g00 * j01 + g01 * j11
        m1_10 = g10 * j00 + g11 * j10
        m1_11 = g10 * j01 + g11 * j11

        z2 = _nudge_point(zp + 0.5 * h * k1, cm, eps)
        v = _fprime_point(z2, cm, lm, d1m, om_)
        k2 = -1j * np.conj(v) + 0.5j * omm * z2
        g00, g01, g10, g11 = _gradient_point(z2, cm, lm, d2m, o2m, omm)
        t00 = j00 + 0.5 * h * m1_00
        t01 = j01 + 0.5 * h * m1_01
        t10 = j10 + 0.5 * h * m1_10
        t11 = j11 + 0.5 * h * m1_11
        m2_00 = g00 * t00 + g01 * t10
        m2_01 = g00 * t01 + g01 * t11
        m2_10 = g10 * t00 + g11 * t10
        m2_11 = g10 * t01 + g11 * t11

        z3 = _nudge_point(zp + 0.5 * h * k2, cm, eps)
        v = _fprime_point(z3, cm, lm, d1m, om_)
        k3 = -1j * np.conj(v) + 0.5j * omm * z3
        g00, g01, g10, g11 = _gradient_point(z3, cm, lm, d2m, o2m, omm)
        t00 = j00 + 0.5 * h * m2_00
        t01 = j01 + 0.5 * h * m2_01
        t10 = j10 + 0.5 * h * m2_10
        t11 = j11 + 0.5 * h * m2_11
        m3_00 = g00 * t00 + g01 * t10
        m3_01 = g00 * t01 + g01 * t11
        m3_10 = g10 * t00 + g11 * t10
        m3_11 = g10 * t01 + g11 * t11

        z4 = _nudge_point(zp + h * k3, cb, eps)
        v = _fprime_point(z4, cb, lb, d1b, ob)
        k4 = -1j * np.conj(v) + 0.5j * omb * z4
        g00, g01, g10, g11 = _gradient_point(z4, cb, lb, d2b, o2b, omb)
        t00 = j00 + h * m3_00
        t01 = j01 + h * m3_01
        t10 = j10 + h * m3_10
        t11 = j11 + h * m3_11
        m4_00 = g00 * t00 + g01 * t10
        m4_01 = g00 * t01 + g01 * t11
        m4_10 = g10 * t00 + g11 * t10
        m4_11 = g10 * t01 + g11 * t11

        zn = zp + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        z[p] = zn
        jac[p, 0, 0] = j00 + (h / 6.0) * (m1_00 + 2.0 * m2_00 + 2.0 * m3_00 + m4_00)
        jac[p, 0, 1] = j01 + (h / 6.0) * (m1_01 + 2.0 * m2_01 + 2.0 * m3_01 + m4_01)
        jac[p, 1, 0] = j10 + (h / 6.0) * (m1_10 + 2.0 * m2_10 + 2.0 * m3_10 + m4_10)
        jac[p, 1, 1] = j11 + (h / 6.0) * (m1_11 + 2.0 * m2_11 + 2.0 * m3_11 + m4_11)
        worst = max(worst, _excursion_point(zn, cb, eps))
    return worst
