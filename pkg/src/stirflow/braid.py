"""Words in the three-strand braid group and their dynamical classification.

A stirring motion of three rods traces out a braid on three strands.  The
braid determines an isotopy class of the stirred disk, and the class is
detected by a 2x2 integer matrix representation: the Burau representation
evaluated at -1, which sends the two Artin generators to

    sigma_1 -> [[1, 1], [0, 1]]        sigma_2 -> [[1, 0], [-1, 1]]

A word maps to a pseudoAnosov class exactly when the trace of its matrix
has magnitude above 2; the expansion constant is then the dominant
eigenvalue and its log bounds the topological entropy of every map in the
class from below.

All matrix arithmetic is exact (Python integers), so trace sign and parity
decisions are never subject to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional


class BraidSyntaxError(ValueError):
    """Raised when a braid word string cannot be parsed."""


class NotPseudoAnosov(ValueError):
    """Raised when an entropy bound is requested for a non-pA word."""


# A letter is (generator index in {1, 2}, sign in {+1, -1}).
Letter = tuple[int, int]

_LETTER_ALIASES = {"a": (1, 1), "A": (1, -1), "b": (2, 1), "B": (2, -1)}


@dataclass(frozen=True)
class IntMatrix2:
    """2x2 integer matrix; products and inverses stay exact."""

    a: int
    b: int
    c: int
    d: int

    def __matmul__(self, other: "IntMatrix2") -> "IntMatrix2":
        return IntMatrix2(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    @property
    def trace(self) -> int:
        return self.a + self.d

    @property
    def det(self) -> int:
        return self.a * self.d - self.b * self.c

    def inverse(self) -> "IntMatrix2":
        if self.det != 1:
            raise ValueError("only unimodular matrices are inverted here")
        return IntMatrix2(self.d, -self.b, -self.c, self.a)

    def is_identity(self) -> bool:
        return (self.a, self.b, self.c, self.d) == (1, 0, 0, 1)

    def rows(self) -> list[list[int]]:
        return [[self.a, self.b], [self.c, self.d]]


IDENTITY2 = IntMatrix2(1, 0, 0, 1)

_GENERATOR_IMAGES = {
    (1, 1): IntMatrix2(1, 1, 0, 1),
    (2, 1): IntMatrix2(1, 0, -1, 1),
    (1, -1): IntMatrix2(1, -1, 0, 1),
    (2, -1): IntMatrix2(1, 0, 1, 1),
}


@dataclass(frozen=True)
class BraidWord:
    """Ordered sequence of signed Artin generators on three strands."""

    letters: tuple[Letter, ...] = ()

    def __post_init__(self) -> None:
        for gen, sign in self.letters:
            if gen not in (1, 2):
                raise BraidSyntaxError(f"generator index {gen} outside {{1, 2}}")
            if sign not in (1, -1):
                raise BraidSyntaxError(f"sign {sign} must be +1 or -1")

    def __len__(self) -> int:
        return len(self.letters)

    def __mul__(self, other: "BraidWord") -> "BraidWord":
        return BraidWord(self.letters + other.letters)

    def inverse(self) -> "BraidWord":
        return BraidWord(tuple((g, -s) for g, s in reversed(self.letters)))

    def reduced(self) -> "BraidWord":
        """Free reduction: cancel adjacent sigma_i sigma_i^{-1} pairs."""
        stack: list[Letter] = []
        for letter in self.letters:
            if stack and stack[-1][0] == letter[0] and stack[-1][1] == -letter[1]:
                stack.pop()
            else:
                stack.append(letter)
        return BraidWord(tuple(stack))

    def as_text(self) -> str:
        return " ".join(str(g * s) for g, s in self.letters)

    def __str__(self) -> str:
        return self.as_text() if self.letters else "(empty)"


def parse_braid(text: str) -> BraidWord:
    """Parse a braid word from signed-integer or letter form.

    "1 -2 1" and "a B a" both denote sigma_1 sigma_2^{-1} sigma_1.  Tokens
    may be separated by whitespace or commas; a token of several letters
    ("aBa") is also accepted.  No reduction is applied.
    """
    letters: list[Letter] = []
    for token in text.replace(",", " ").split():
        if all(ch in _LETTER_ALIASES for ch in token):
            letters.extend(_LETTER_ALIASES[ch] for ch in token)
            continue
        try:
            value = int(token)
        except ValueError:
            raise BraidSyntaxError(f"unknown token {token!r}") from None
        if value == 0 or abs(value) not in (1, 2):
            raise BraidSyntaxError(
                f"generator index {abs(value)} outside {{1, 2}} in token {token!r}"
            )
        letters.append((abs(value), 1 if value > 0 else -1))
    return BraidWord(tuple(letters))


def burau_at_minus_one(word: BraidWord | Iterable[Letter]) -> IntMatrix2:
    """Product of the generator images in word order (first letter leftmost)."""
    letters = word.letters if isinstance(word, BraidWord) else tuple(word)
    out = IDENTITY2
    for letter in letters:
        try:
            out = out @ _GENERATOR_IMAGES[letter]
        except KeyError:
            raise BraidSyntaxError(f"invalid letter {letter}") from None
    return out


@dataclass(frozen=True)
class TNClass:
    """Thurston-Nielsen type of a three-strand braid word.

    kind is "pseudo_anosov", "finite_order", or "parabolic"; expansion is
    the dominant-eigenvalue magnitude for pA words and None otherwise.
    identity_image flags the parabolic case where the whole matrix is the
    identity (the trace test alone cannot distinguish it).
    """

    kind: str
    trace: int
    expansion: Optional[float] = None
    identity_image: bool = False

    @property
    def is_pseudo_anosov(self) -> bool:
        return self.kind == "pseudo_anosov"


def expansion_constant(trace: int) -> float:
    """Dominant eigenvalue magnitude (|trace| + sqrt(trace^2 - 4)) / 2."""
    t = abs(trace)
    if t <= 2:
        raise NotPseudoAnosov(f"|trace| = {t} <= 2 has no expansion constant")
    return (t + math.sqrt(t * t - 4)) / 2.0


def classify(word: BraidWord) -> TNClass:
    """Classify by the trace criterion: |trace| > 2 is pseudoAnosov,
    |trace| < 2 finite order, |trace| = 2 parabolic."""
    matrix = burau_at_minus_one(word)
    t = matrix.trace
    if abs(t) > 2:
        return TNClass("pseudo_anosov", t, expansion=expansion_constant(t))
    if abs(t) < 2:
        return TNClass("finite_order", t)
    return TNClass("parabolic", t, identity_image=matrix.is_identity())


def entropy_lower_bound(word: BraidWord) -> float:
    """log(expansion constant), in nats per period; requires a pA word."""
    tn = classify(word)
    if not tn.is_pseudo_anosov:
        raise NotPseudoAnosov(
            f"word {word} has trace {tn.trace}; no entropy bound for |trace| <= 2"
        )
    assert tn.expansion is not None
    return math.log(tn.expansion)
