import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stirflow.braid import BraidWord, parse_braid
from stirflow.protocol import (
    Hold,
    ProtocolError,
    StirrerConfig,
    StirringProtocol,
    Swap,
    build_protocol,
    extract_braid,
    validate,
)

letters = st.tuples(st.sampled_from([1, 2]), st.sampled_from([1, -1]))


def test_config_defaults_admissible():
    assert StirrerConfig().violations() == []


def test_config_rejects_fat_stirrers():
    assert StirrerConfig(radius=0.3).violations()
    with pytest.raises(ProtocolError):
        build_protocol(parse_braid("1"), StirrerConfig(radius=0.3))


def test_build_empty_word_is_hold():
    p = build_protocol(BraidWord(()))
    assert p.moves == (Hold(1.0),)
    for t in (0.0, 0.3, 2.7):
        assert np.allclose(p.positions(t), p.config.centers)


def test_swap_midpoint_geometry():
    # halfway through a slot-1 swap the moving pair sits at the top and
    # bottom of the circle of diameter |p2 - p1| about the slots' midpoint
    p = build_protocol(parse_braid("1"))
    pos = p.positions(0.5)
    assert pos[0] == pytest.approx(-0.25 - 0.25j, abs=1e-12)
    assert pos[1] == pytest.approx(-0.25 + 0.25j, abs=1e-12)
    assert pos[2] == pytest.approx(0.5 + 0j, abs=1e-14)


def test_swap_endpoint_exchanges_pair():
    p = build_protocol(parse_braid("1"))
    pos = p.positions(1.0)
    assert pos[0] == pytest.approx(0.0 + 0j, abs=1e-12)
    assert pos[1] == pytest.approx(-0.5 + 0j, abs=1e-12)
    assert pos[2] == pytest.approx(0.5 + 0j, abs=1e-14)


def test_mid_swap_speed():
    p = build_protocol(parse_braid("1"))
    v = p.velocities(0.5)
    # speed = pi * half-gap / duration * ramp factor, ramp = 2 at midpoint
    assert abs(v[0]) == pytest.approx(math.pi * 0.25 * 2.0, rel=1e-12)
    assert abs(v[2]) == 0.0


def test_velocities_vanish_at_junctions():
    p = build_protocol(parse_braid("1 -2 1"))
    for tj in p.junction_times:
        assert np.abs(p.velocities(float(tj))).max() < 1e-14


def test_positions_are_c1():
    p = build_protocol(parse_braid("1 -2"))
    h = 1e-5
    for t in (0.31, 0.5, 0.77, 1.25, 1.9):
        fd = (p.positions(t + h) - p.positions(t - h)) / (2 * h)
        assert np.abs(fd - p.velocities(t)).max() < 1e-8


def test_periodicity_with_permutation():
    p = build_protocol(parse_braid("1 -2"))
    perm = p.permutation
    for t in (0.1, 0.6, 1.43):
        lhs = p.positions(t + p.period)
        rhs = p.positions(t)
        for i in range(3):
            assert lhs[i] == pytest.approx(rhs[perm[i]], abs=1e-12)


def test_validate_canonical_protocol():
    rep = validate(build_protocol(parse_braid("1 -2")))
    assert rep.ok
    assert rep.min_pair_gap > 0.3
    assert rep.min_wall_gap > 0.4
    assert rep.max_junction_jump < 1e-12
    assert rep.closure_error < 1e-12


def test_validate_hold_clearances():
    rep = validate(build_protocol(BraidWord(())))
    assert rep.ok
    assert rep.min_pair_gap == pytest.approx(0.5 - 0.1, abs=1e-12)


def test_validate_reports_config_violation():
    config = StirrerConfig(radius=0.3)
    protocol = StirringProtocol(config, (Hold(1.0),))
    rep = validate(protocol)
    assert not rep.ok
    assert rep.config_violations


def test_validate_needs_enough_samples():
    with pytest.raises(ProtocolError):
        validate(build_protocol(parse_braid("1")), samples_per_move=10)


def test_extract_single_generator():
    # crossing-sequence oracle at high sampling
    p = build_protocol(parse_braid("1"))
    assert extract_braid(p, samples=10_000).letters == ((1, 1),)


def test_extract_hold_is_empty():
    assert extract_braid(build_protocol(BraidWord(()))).letters == ()


def test_extract_three_letter_word():
    w = parse_braid("1 -2 1")
    got = extract_braid(build_protocol(w), samples=10_000)
    assert got.reduced() == w.reduced()


@settings(max_examples=25)
@given(st.lists(letters, max_size=4))
def test_round_trip_random_words(ls):
    w = BraidWord(tuple(ls))
    got = extract_braid(build_protocol(w), samples=512)
    assert got.reduced() == w.reduced()


def test_trace_invariant_under_projection_rotation():
    from stirflow.braid import burau_at_minus_one

    p = build_protocol(parse_braid("1 -2 -2 1"))
    ref = burau_at_minus_one(extract_braid(p, samples=2048)).trace
    for angle in (-0.15, -0.07, 0.07, 0.12, 0.15):
        got = burau_at_minus_one(extract_braid(p, samples=2048, angle=angle)).trace
        assert got == ref


def test_moves_validate_slots():
    with pytest.raises(ProtocolError):
        Swap(slot=3)
    with pytest.raises(ProtocolError):
        Swap(slot=1, handedness="up")
    with pytest.raises(ProtocolError):
        Hold(duration=0.0)


def test_permutation_power_cycles():
    p = build_protocol(parse_braid("1 -2"))
    assert p.permutation == (2, 0, 1)
    assert p.permutation_power(3) == (0, 1, 2)
