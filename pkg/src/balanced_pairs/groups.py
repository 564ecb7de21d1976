"""Finitely generated groups Z^k and F_k, word lengths and Cayley balls.

Elements are plain tuples.  For Z^k an element is its exponent vector of
length k.  For F_k it is a reduced word: a tuple of nonzero integers where
``i`` stands for the i-th generator (1-based) and ``-i`` for its inverse.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import ResourceCapError

DEFAULT_BALL_CAP = 250_000

FREE_ABELIAN = "free_abelian"
FREE = "free"


@dataclass(frozen=True)
class GroupSpec:
    kind: str
    rank: int

    def __post_init__(self):
        if self.kind not in (FREE_ABELIAN, FREE):
            raise ValueError(f"unknown group kind {self.kind!r}")
        if int(self.rank) < 1:
            raise ValueError("rank must be at least 1")

    @property
    def abelian(self):
        return self.kind == FREE_ABELIAN

    def identity(self):
        return (0,) * self.rank if self.abelian else ()

    def generators(self):
        """Positive generators e_1..e_k in the group's encoding."""
        if self.abelian:
            return [tuple(int(i == j) for j in range(self.rank)) for i in range(self.rank)]
        return [(i + 1,) for i in range(self.rank)]

    def validate(self, g):
        g = tuple(int(x) for x in g)
        if self.abelian:
            if len(g) != self.rank:
                raise ValueError(f"expected {self.rank} exponents, got {g}")
            return g
        for x in g:
            if x == 0 or abs(x) > self.rank:
                raise ValueError(f"letter {x} outside F_{self.rank}")
        return _reduce(g)

    def multiply(self, g, h):
        if self.abelian:
            return tuple(a + b for a, b in zip(g, h))
        # cancel the longest suffix of g against a prefix of h
        i = 0
        n = min(len(g), len(h))
        while i < n and g[len(g) - 1 - i] == -h[i]:
            i += 1
        return tuple(g[: len(g) - i]) + tuple(h[i:])

    def inverse(self, g):
        if self.abelian:
            return tuple(-a for a in g)
        return tuple(-x for x in reversed(g))

    def length(self, g):
        if self.abelian:
            return sum(abs(a) for a in g)
        return len(g)

    def sort_key(self, g):
        return (self.length(g), tuple(g))

    def is_positive(self, g):
        """Half of Gamma used to fix the symmetrization convention.

        The identity counts as positive; otherwise exactly one of g and
        g^-1 is positive.
        """
        inv = self.inverse(g)
        return tuple(g) == inv or self.sort_key(g) > self.sort_key(inv)

    def ball_size(self, radius):
        """Closed-form size of the ball of the given radius."""
        R = int(radius)
        k = self.rank
        if self.abelian:
            # lattice points with l1 norm <= R: sum_j 2^j C(k,j) C(R,j)
            from math import comb

            return sum(2**j * comb(k, j) * comb(R, j) for j in range(min(k, R) + 1))
        if k == 1:
            return 2 * R + 1
        return 1 + 2 * k * ((2 * k - 1) ** R - 1) // (2 * k - 2)

    def ball(self, radius, cap=DEFAULT_BALL_CAP):
        return ball(self, radius, cap=cap)

    def format(self, g):
        """Human readable form, e.g. ``a b^-1`` or ``(1, -2)``."""
        if self.abelian:
            return str(tuple(g)) if self.rank > 1 else str(g[0])
        if not g:
            return "e"
        letters = "abcdefghijklmnopqrstuvwxyz"
        parts = []
        for x in g:
            s = letters[abs(x) - 1] if self.rank <= 26 else f"x{abs(x)}"
            parts.append(s if x > 0 else s + "^-1")
        return " ".join(parts)


def free_abelian(k):
    return GroupSpec(FREE_ABELIAN, k)


def free_group(k):
    return GroupSpec(FREE, k)


def _reduce(word):
    out = []
    for x in word:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def multiply(spec, g, h):
    return spec.multiply(g, h)


def inverse(spec, g):
    return spec.inverse(g)


@dataclass(frozen=True)
class Ball:
    """Elements of word length at most ``radius``, sorted by (length, word)."""

    spec: GroupSpec
    radius: int
    elements: tuple
    index: dict = field(compare=False, repr=False)

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, g):
        return tuple(g) in self.index

    def position(self, g):
        return self.index[tuple(g)]


def ball(spec, radius, cap=DEFAULT_BALL_CAP):
    """Enumerate the Cayley ball of ``spec`` with the given radius."""
    R = int(radius)
    if R < 0:
        raise ValueError("radius must be nonnegative")
    size = spec.ball_size(R)
    if cap is not None and size > cap:
        raise ResourceCapError(f"ball of radius {R} has {size} elements, cap is {cap}")
    if spec.abelian:
        elems = [
            v
            for v in itertools.product(range(-R, R + 1), repeat=spec.rank)
            if sum(abs(a) for a in v) <= R
        ]
    else:
        letters = [x for x in range(-spec.rank, spec.rank + 1) if x != 0]
        elems = [()]
        frontier = [()]
        for _ in range(R):
            nxt = []
            for w in frontier:
                for x in letters:
                    if not w or w[-1] != -x:
                        nxt.append(w + (x,))
            elems.extend(nxt)
            frontier = nxt
    elems.sort(key=spec.sort_key)
    elems = tuple(elems)
    return Ball(spec, R, elems, {g: i for i, g in enumerate(elems)})
