import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from stirflow.braid import (
    BraidSyntaxError,
    BraidWord,
    IntMatrix2,
    NotPseudoAnosov,
    burau_at_minus_one,
    classify,
    entropy_lower_bound,
    parse_braid,
)

LAMBDA = (3.0 + math.sqrt(5.0)) / 2.0

letters = st.tuples(st.sampled_from([1, 2]), st.sampled_from([1, -1]))
words = st.lists(letters, max_size=6).map(lambda ls: BraidWord(tuple(ls)))
short_words = st.lists(letters, max_size=4).map(lambda ls: BraidWord(tuple(ls)))


def test_parse_signed_integers():
    assert parse_braid("1 -2").letters == ((1, 1), (2, -1))


def test_parse_empty():
    assert parse_braid("").letters == ()


def test_parse_letter_aliases():
    assert parse_braid("a B").letters == ((1, 1), (2, -1))
    assert parse_braid("aBa").letters == parse_braid("1 -2 1").letters


def test_parse_commas():
    assert parse_braid("1, -2, 1").letters == ((1, 1), (2, -1), (1, 1))


@pytest.mark.parametrize("bad", ["3", "-3", "0", "x", "1 q", "1.5"])
def test_parse_rejects(bad):
    with pytest.raises(BraidSyntaxError):
        parse_braid(bad)


def test_generator_images():
    assert burau_at_minus_one(parse_braid("1")).rows() == [[1, 1], [0, 1]]
    assert burau_at_minus_one(parse_braid("2")).rows() == [[1, 0], [-1, 1]]


def test_empty_word_is_identity():
    assert burau_at_minus_one(BraidWord(())).rows() == [[1, 0], [0, 1]]


def test_hand_multiplied_product():
    assert burau_at_minus_one(parse_braid("1 -2")).rows() == [[2, 1], [1, 1]]


def test_full_twist_is_minus_identity():
    assert burau_at_minus_one(parse_braid("1 2 1 2 1 2")).rows() == [[-1, 0], [0, -1]]


def test_classify_pseudo_anosov():
    tn = classify(parse_braid("1 -2"))
    assert tn.kind == "pseudo_anosov"
    assert tn.trace == 3
    assert abs(tn.expansion - LAMBDA) < 1e-12


def test_classify_finite_order():
    tn = classify(parse_braid("1 2"))
    assert tn.kind == "finite_order"
    assert tn.trace == 1
    assert tn.expansion is None


def test_classify_parabolic_generator():
    tn = classify(parse_braid("1"))
    assert tn.kind == "parabolic"
    assert tn.trace == 2
    assert not tn.identity_image


def test_classify_identity_image_flag():
    tn = classify(parse_braid("1 2 1 2 1 2 1 2 1 2 1 2"))
    assert tn.kind == "parabolic"
    assert tn.identity_image


def test_entropy_bound_value():
    assert abs(entropy_lower_bound(parse_braid("1 -2")) - 0.9624236501192069) < 1e-10


def test_entropy_bound_mirror_word():
    assert abs(entropy_lower_bound(parse_braid("-1 2")) - 0.9624236501192069) < 1e-10


def test_entropy_bound_rejects_finite_order():
    with pytest.raises(NotPseudoAnosov):
        entropy_lower_bound(parse_braid("1 2"))


def test_free_reduction():
    assert parse_braid("1 -1").reduced().letters == ()
    assert parse_braid("1 2 -2 -1").reduced().letters == ()
    assert parse_braid("1 -2 2 1").reduced().letters == ((1, 1), (1, 1))


@given(words, words)
def test_homomorphism(u, v):
    assert burau_at_minus_one(u * v) == burau_at_minus_one(u) @ burau_at_minus_one(v)


@given(words)
def test_determinant_one(w):
    assert burau_at_minus_one(w).det == 1


@given(words)
def test_inverse_word_inverse_matrix(w):
    assert burau_at_minus_one(w.inverse()) == burau_at_minus_one(w).inverse()


@given(short_words, short_words)
def test_conjugacy_invariance(g, w):
    conj = g * w * g.inverse()
    assert burau_at_minus_one(conj).trace == burau_at_minus_one(w).trace
    assert classify(conj).kind == classify(w).kind


@given(words)
def test_free_reduction_idempotent(w):
    assert w.reduced().reduced() == w.reduced()
    assert burau_at_minus_one(w) == burau_at_minus_one(w.reduced())


@given(words)
def test_expansion_pair_product(w):
    tn = classify(w)
    if tn.kind != "pseudo_anosov":
        return
    t = abs(tn.trace)
    smaller = (t - math.sqrt(t * t - 4)) / 2.0
    assert abs(tn.expansion * smaller - 1.0) < 1e-12


def test_matrix_inverse_requires_unimodular():
    with pytest.raises(ValueError):
        IntMatrix2(2, 0, 0, 1).inverse()
