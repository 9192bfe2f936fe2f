"""Smooth periodic stirrer motions realizing a braid word.

Three rigid disks of common radius eps move inside the unit disk.  A braid
letter sigma_i^{+-1} is realized as a half-turn interchange of the two
stirrers currently occupying x-ordered slots i and i+1: both travel
half-circle arcs about the slots' midpoint, counterclockwise for sigma_i
and clockwise for sigma_i^{-1}.  The angular ramp

    theta(u) = pi * (u - sin(2*pi*u) / (2*pi)),   u in [0, 1]

has vanishing derivative at both ends, so concatenated moves give center
paths that are C^1 (and C^2 except at isolated junctions) with zero
velocity at every move boundary.

Every swap returns the *set* of centers to its starting configuration, so
the set of stirrers is periodic with the protocol period while individual
stirrers are permuted; the permutation is tracked so positions and
velocities extend to all t >= 0.

The inverse construction, ``extract_braid``, projects the three center
world-lines onto a (possibly rotated) axis and emits one signed letter per
transposition of the projected order.  A crossing is positive when the
strand coming from the left passes behind (smaller depth coordinate),
which matches the build convention above, so build/extract round-trip up
to free reduction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from stirflow.braid import BraidWord, Letter

OUTER_RADIUS = 1.0


class ProtocolError(ValueError):
    """Raised for inadmissible configurations or malformed move lists."""


class DegenerateProjection(RuntimeError):
    """Raised when the crossing order cannot be resolved by refinement."""


@dataclass(frozen=True)
class StirrerConfig:
    """Geometry of the stirred disk: stirrer radius and initial centers.

    Centers must be ordered left to right; the defaults are the canonical
    -1/2, 0, +1/2 on the real axis inside the unit disk.
    """

    radius: float = 0.05
    centers: tuple[complex, ...] = (-0.5 + 0.0j, 0.0 + 0.0j, 0.5 + 0.0j)

    def violations(self) -> list[str]:
        out = []
        eps = self.radius
        if not 0.0 < eps < 0.125:
            out.append(f"stirrer radius {eps} outside (0, 1/8)")
        if len(self.centers) != 3:
            out.append(f"expected 3 centers, got {len(self.centers)}")
            return out
        xs = [c.real for c in self.centers]
        if not (xs[0] < xs[1] < xs[2]):
            out.append("centers must be strictly ordered by x-coordinate")
        margin = eps
        for i in range(3):
            for j in range(i + 1, 3):
                gap = abs(self.centers[i] - self.centers[j])
                if gap < 2 * eps + margin:
                    out.append(
                        f"centers {i + 1},{j + 1} separated by {gap:.4g} "
                        f"< 2*eps + margin = {2 * eps + margin:.4g}"
                    )
        for i, c in enumerate(self.centers):
            wall = OUTER_RADIUS - abs(c)
            if wall < eps + margin:
                out.append(
                    f"center {i + 1} clearance to unit circle {wall:.4g} "
                    f"< eps + margin = {eps + margin:.4g}"
                )
        return out

    def require_admissible(self) -> None:
        problems = self.violations()
        if problems:
            raise ProtocolError("; ".join(problems))


@dataclass(frozen=True)
class Swap:
    """Half-turn interchange of the stirrers in slots (slot, slot+1)."""

    slot: int  # 1 or 2
    handedness: str = "ccw"  # "ccw" realizes sigma_slot, "cw" its inverse
    duration: float = 1.0

    def __post_init__(self) -> None:
        if self.slot not in (1, 2):
            raise ProtocolError(f"swap slot {self.slot} outside {{1, 2}}")
        if self.handedness not in ("ccw", "cw"):
            raise ProtocolError(f"handedness {self.handedness!r} not ccw/cw")
        if not self.duration > 0:
            raise ProtocolError("swap duration must be positive")

    @property
    def ccw(self) -> bool:
        return self.handedness == "ccw"


@dataclass(frozen=True)
class Hold:
    """All stirrers stationary for the given duration."""

    duration: float = 1.0

    def __post_init__(self) -> None:
        if not self.duration > 0:
            raise ProtocolError("hold duration must be positive")


Move = Union[Swap, Hold]


def _theta(u):
    return math.pi * (u - np.sin(2.0 * math.pi * u) / (2.0 * math.pi))


def _dtheta(u):
    return math.pi * (1.0 - np.cos(2.0 * math.pi * u))


@dataclass(frozen=True)
class StirringProtocol:
    """Immutable T-periodic stirrer motion built from swap/hold moves.

    Positions and velocities are indexed by stirrer identity (the index of
    the initial center).  Over one period the identities are permuted;
    ``permutation`` maps identity -> slot occupied at time T, and
    evaluation at t = k*T + s follows identity i along the base path of
    identity permutation^k(i).
    """

    config: StirrerConfig = field(default_factory=StirrerConfig)
    moves: tuple[Move, ...] = (Hold(1.0),)

    def __post_init__(self) -> None:
        if not self.moves:
            raise ProtocolError("protocol needs at least one move")
        starts = np.concatenate(
            [[0.0], np.cumsum([m.duration for m in self.moves])]
        )
        # slot_by_identity[m][e]: slot of identity e when move m starts
        slot_by_identity = [tuple(range(3))]
        for move in self.moves:
            prev = list(slot_by_identity[-1])
            if isinstance(move, Swap):
                lo, hi = move.slot - 1, move.slot
                prev = [
                    hi if s == lo else lo if s == hi else s for s in prev
                ]
            slot_by_identity.append(tuple(prev))
        object.__setattr__(self, "_starts", starts)
        object.__setattr__(self, "_slots", tuple(slot_by_identity))

    @property
    def period(self) -> float:
        return float(self._starts[-1])

    @property
    def permutation(self) -> tuple[int, ...]:
        """Identity i sits at initial center ``permutation[i]`` at time T."""
        return self._slots[-1]

    def permutation_power(self, k: int) -> tuple[int, ...]:
        perm = tuple(range(3))
        step = self.permutation
        for _ in range(k % _perm_order(step)):
            perm = tuple(step[p] for p in perm)
        return perm

    @property
    def junction_times(self) -> np.ndarray:
        """Move boundaries within one base period, including 0 and T."""
        return self._starts.copy()

    def _split_time(self, t):
        """Period index and base-period offset for (arrays of) t >= 0."""
        t = np.asarray(t, dtype=float)
        if np.any(t < -1e-12):
            raise ProtocolError("protocol times must be nonnegative")
        T = self.period
        k = np.floor(t / T + 1e-12).astype(int)
        s = t - k * T
        s = np.clip(s, 0.0, T)
        return k, s

    def _base_paths(self, s, derivative=False):
        """Positions (or velocities) by stirrer identity at base-period
        offsets s (1-d array); returns an (n, 3) array."""
        s = np.asarray(s, dtype=float)
        q = np.array(self.config.centers, dtype=complex)
        # slot-local evaluation: column j holds the stirrer in slot j at the
        # start of the move containing s
        local = np.empty(s.shape + (3,), dtype=complex)
        local[...] = 0.0 if derivative else q
        idx = np.clip(
            np.searchsorted(self._starts, s, side="right") - 1,
            0,
            len(self.moves) - 1,
        )
        for m, move in enumerate(self.moves):
            mask = idx == m
            if not np.any(mask) or isinstance(move, Hold):
                continue
            u = (s[mask] - self._starts[m]) / move.duration
            lo, hi = move.slot - 1, move.slot
            mid = (q[lo] + q[hi]) / 2.0
            hand = 1.0 if move.ccw else -1.0
            rot = np.exp(1j * hand * _theta(u))
            if derivative:
                rate = 1j * hand * _dtheta(u) / move.duration
                local[mask, lo] = (q[lo] - mid) * rot * rate
                local[mask, hi] = (q[hi] - mid) * rot * rate
            else:
                local[mask, lo] = mid + (q[lo] - mid) * rot
                local[mask, hi] = mid + (q[hi] - mid) * rot
        # remap slot-local columns to identities via the per-move assignment
        out = np.empty_like(local)
        for m in np.unique(idx):
            mask = idx == m
            slots = list(self._slots[m])  # identity -> slot at move start
            out[mask] = local[mask][:, slots]
        return out

    def _by_identity(self, t, derivative):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        k, s = self._split_time(t_arr)
        base = self._base_paths(s, derivative)
        out = np.empty_like(base)
        for kk in np.unique(k):
            perm = list(self.permutation_power(int(kk)))
            mask = k == kk
            out[mask] = base[mask][:, perm]
        if np.isscalar(t) or np.asarray(t).ndim == 0:
            return out[0]
        return out

    def positions(self, t):
        """Centers by stirrer identity at time(s) t; shape t.shape + (3,)."""
        return self._by_identity(t, derivative=False)

    def velocities(self, t):
        """Center velocities by stirrer identity at time(s) t."""
        return self._by_identity(t, derivative=True)


def _perm_order(perm: tuple[int, ...]) -> int:
    order, current = 1, perm
    ident = tuple(range(len(perm)))
    while current != ident:
        current = tuple(perm[p] for p in current)
        order += 1
    return order


def build_protocol(
    word: BraidWord,
    config: StirrerConfig | None = None,
    moves_per_unit_time: float = 1.0,
) -> StirringProtocol:
    """Turn a braid word into a stirring protocol, one swap per letter.

    sigma_i becomes a counterclockwise interchange of slots i, i+1 and
    sigma_i^{-1} a clockwise one, each lasting 1/moves_per_unit_time.  The
    empty word becomes a single hold of that duration.
    """
    config = config or StirrerConfig()
    config.require_admissible()
    if moves_per_unit_time <= 0:
        raise ProtocolError("moves_per_unit_time must be positive")
    duration = 1.0 / moves_per_unit_time
    if not word.letters:
        return StirringProtocol(config, (Hold(duration),))
    moves = tuple(
        Swap(gen, "ccw" if sign > 0 else "cw", duration)
        for gen, sign in word.letters
    )
    return StirringProtocol(config, moves)


@dataclass(frozen=True)
class AdmissibilityReport:
    """Sampled geometric clearances and periodicity checks for a protocol."""

    min_pair_gap: float  # min pairwise center distance minus 2*eps
    min_wall_gap: float  # min clearance of any disk to the unit circle
    max_junction_jump: float  # velocity discontinuity across move junctions
    closure_error: float  # set distance between centers at 0 and T
    config_violations: tuple[str, ...]
    samples_per_move: int

    @property
    def ok(self) -> bool:
        return (
            not self.config_violations
            and self.min_pair_gap > 0.0
            and self.min_wall_gap > 0.0
            and self.max_junction_jump < 1e-9
            and self.closure_error < 1e-12
        )


def validate(protocol: StirringProtocol, samples_per_move: int = 256) -> AdmissibilityReport:
    """Sample every move and report clearances, junction smoothness, and
    period closure.  The report carries pass/fail; nothing is raised."""
    if samples_per_move < 100:
        raise ProtocolError("need at least 100 samples per move")
    eps = protocol.config.radius
    ts = []
    for m, move in enumerate(protocol.moves):
        start = protocol._starts[m]
        ts.append(start + np.linspace(0.0, move.duration, samples_per_move))
    ts = np.concatenate(ts)
    pos = protocol.positions(ts)  # (n, 3)

    diffs = [abs(pos[:, i] - pos[:, j]) for i, j in ((0, 1), (0, 2), (1, 2))]
    min_pair = float(min(d.min() for d in diffs)) - 2.0 * eps
    min_wall = float((OUTER_RADIUS - np.abs(pos)).min()) - eps

    junctions = protocol._starts[1:-1]
    jump = 0.0
    for tj in junctions:
        before = protocol.velocities(np.nextafter(tj, -np.inf))
        after = protocol.velocities(np.nextafter(tj, np.inf))
        jump = max(jump, float(np.abs(before - after).max()))
    # period wrap junction
    wrap = np.abs(
        protocol.velocities(np.nextafter(protocol.period, -np.inf))
        - protocol.velocities(np.nextafter(protocol.period, np.inf))
    ).max()
    jump = max(jump, float(wrap))

    start_set = protocol.positions(0.0)
    end_set = protocol.positions(protocol.period)
    perm = _match(start_set, end_set)
    closure = float(np.abs(end_set - start_set[list(perm)]).max())
    return AdmissibilityReport(
        min_pair_gap=min_pair,
        min_wall_gap=min_wall,
        max_junction_jump=jump,
        closure_error=closure,
        config_violations=tuple(protocol.config.violations()),
        samples_per_move=samples_per_move,
    )


def _match(reference: np.ndarray, points: np.ndarray) -> tuple[int, ...]:
    """Permutation p minimizing max |points[i] - reference[p[i]]| greedily."""
    taken: list[int] = []
    for p in points:
        dists = np.abs(reference - p)
        dists[taken] = np.inf
        taken.append(int(np.argmin(dists)))
    return tuple(taken)


def extract_braid(
    protocol: StirringProtocol,
    samples: int = 4096,
    angle: float = 0.0,
) -> BraidWord:
    """Read the braid word off the center world-lines over one period.

    Projects centers onto the axis rotated by ``angle``; each transposition
    of the projected order of an adjacent pair in slots (i, i+1) emits
    sigma_i, positive when the strand coming from the left passes behind
    (smaller depth).  Intervals containing more than one transposition are
    subdivided; ambiguity persisting below time resolution ~1e-13*T raises
    DegenerateProjection.
    """
    T = protocol.period
    n = max(16, samples)
    n += (-n) % (2 * len(protocol.moves))  # align parity with move grid
    ts = np.concatenate([[0.0], (np.arange(n) + 0.5) * (T / n), [T]])
    rot = np.exp(-1j * angle)

    def order_at(t: float) -> tuple[int, ...]:
        xi = (protocol.positions(t) * rot).real
        return tuple(np.argsort(xi, kind="stable"))

    letters: list[Letter] = []

    def emit(t_lo: float, t_hi: float, order_lo, order_hi) -> None:
        diff = [r for r in range(3) if order_lo[r] != order_hi[r]]
        if diff == []:
            return
        single = (
            len(diff) == 2
            and diff[1] == diff[0] + 1
            and order_lo[diff[0]] == order_hi[diff[1]]
            and order_lo[diff[1]] == order_hi[diff[0]]
        )
        if not single:
            if t_hi - t_lo < 1e-13 * T:
                raise DegenerateProjection(
                    f"order change near t = {t_lo:.6g} not a single transposition"
                )
            mid = 0.5 * (t_lo + t_hi)
            order_mid = order_at(mid)
            emit(t_lo, mid, order_lo, order_mid)
            emit(mid, t_hi, order_mid, order_hi)
            return
        r = diff[0]
        left, right = order_lo[r], order_lo[r + 1]

        def gap(t: float) -> float:
            z = protocol.positions(t) * rot
            return float(z[left].real - z[right].real)

        a, b = t_lo, t_hi
        ga = gap(a)
        for _ in range(80):
            mid = 0.5 * (a + b)
            gm = gap(mid)
            if gm == 0.0:
                a = b = mid
                break
            if (gm < 0) == (ga < 0):
                a, ga = mid, gm
            else:
                b = mid
        t_cross = 0.5 * (a + b)
        z = protocol.positions(t_cross) * rot
        positive = z[left].imag < z[right].imag
        letters.append((r + 1, 1 if positive else -1))

    for j in range(len(ts) - 1):
        o_lo, o_hi = order_at(ts[j]), order_at(ts[j + 1])
        if o_lo != o_hi:
            emit(float(ts[j]), float(ts[j + 1]), o_lo, o_hi)
    return BraidWord(tuple(letters))
