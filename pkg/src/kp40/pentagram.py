"""Mermin's pentagram of ten three-qubit observables and its five commuting lines.

Each observable is a tensor word over {I, X, Z} (Y never occurs, so every
matrix is a real signed permutation).  The five lines pairwise commute, four
multiply to +identity and one to -identity, and the common eigenvectors of
the lines are the 40 rays of the Kernaghan-Peres set.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import prod

import numpy as np

from .rays import Ray, canonical_form

FACTORS = ("I", "X", "Z")

_PAULI_2 = {
    "I": np.eye(2, dtype=np.int64),
    "X": np.array([[0, 1], [1, 0]], dtype=np.int64),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.int64),
}


@dataclass(frozen=True)
class PauliWord:
    """Three-factor tensor word, e.g. "ZXX"; "ZII" is the single-qubit z on qubit 1."""

    factors: str

    def __post_init__(self) -> None:
        if len(self.factors) != 3 or any(f not in FACTORS for f in self.factors):
            raise ValueError(f"invalid word {self.factors!r}: need 3 factors from {FACTORS}")

    def __str__(self) -> str:
        return self.factors


@dataclass(frozen=True)
class Context:
    """Four pairwise-commuting words whose matrix product is product_sign * identity."""

    words: tuple[PauliWord, PauliWord, PauliWord, PauliWord]
    product_sign: int

    def to_json(self) -> dict:
        return {"words": [w.factors for w in self.words], "product_sign": self.product_sign}


def pauli_matrix(w: PauliWord | str) -> np.ndarray:
    """8x8 integer matrix: Kronecker product of the three 2x2 factors (qubit 1 first)."""
    factors = w.factors if isinstance(w, PauliWord) else PauliWord(w).factors
    a, b, c = (_PAULI_2[f] for f in factors)
    return np.kron(np.kron(a, b), c)


def commutes(w1: PauliWord | str, w2: PauliWord | str) -> bool:
    """True iff the number of positions holding one X against one Z is even."""
    f1 = w1.factors if isinstance(w1, PauliWord) else w1
    f2 = w2.factors if isinstance(w2, PauliWord) else w2
    anti = sum(1 for a, b in zip(f1, f2) if a != "I" and b != "I" and a != b)
    return anti % 2 == 0


# The five lines, in the order of the 40-ray table's basis groups.  Each of the
# ten distinct words lies on exactly two lines; the first line is the unique one
# whose operator product is -identity.
_LINES: tuple[tuple[str, str, str, str], ...] = (
    ("ZXX", "XXZ", "XZX", "ZZZ"),
    ("ZII", "IZI", "IIZ", "ZZZ"),
    ("XII", "IXI", "IIZ", "XXZ"),
    ("XII", "IZI", "IIX", "XZX"),
    ("ZII", "IXI", "IIX", "ZXX"),
)


def _context_sign(words: tuple[PauliWord, ...]) -> int:
    p = np.eye(8, dtype=np.int64)
    for w in words:
        p = p @ pauli_matrix(w)
    ident = np.eye(8, dtype=np.int64)
    if np.array_equal(p, ident):
        return 1
    if np.array_equal(p, -ident):
        return -1
    raise ValueError(f"words {[w.factors for w in words]} do not multiply to +/-identity")


def pentagram_contexts() -> tuple[Context, ...]:
    """The five contexts of the pentagram, signs derived from the matrix product."""
    out = []
    for line in _LINES:
        words = tuple(PauliWord(f) for f in line)
        for a, b in itertools.combinations(words, 2):
            if not commutes(a, b):
                raise ValueError(f"{a} and {b} do not commute")
        out.append(Context(words=words, product_sign=_context_sign(words)))
    return tuple(out)


def sign_pattern_projector(c: Context, pattern: tuple[int, int, int, int]) -> np.ndarray:
    """16x the joint eigenprojector for the given sign pattern, as an exact integer matrix."""
    p = np.eye(8, dtype=np.int64)
    for s, w in zip(pattern, c.words):
        p = p @ (np.eye(8, dtype=np.int64) + s * pauli_matrix(w))
    return p


def _assert_rank_one(p16: np.ndarray) -> None:
    # symmetric with p16^2 = 16*p16 means eigenvalues in {0, 16}; rank = trace/16
    if not np.array_equal(p16, p16.T):
        raise ArithmeticError("projector not symmetric")
    if not np.array_equal(p16 @ p16, 16 * p16):
        raise ArithmeticError("projector not idempotent at scale 16")
    if int(np.trace(p16)) != 16:
        raise ArithmeticError(f"projector rank {int(np.trace(p16)) // 16}, expected 1")


def _extract_ray(p16: np.ndarray) -> Ray:
    for j in range(8):
        col = p16[:, j]
        if np.any(col):
            return canonical_form(tuple(int(x) for x in col))
    raise ArithmeticError("zero projector has no ray")


def common_eigenrays(c: Context) -> list[tuple[Ray, tuple[int, int, int, int]]]:
    """The 8 common eigenrays of a context, one per sign pattern consistent with its product sign.

    Patterns with s1*s2*s3*s4 != product_sign must give an exactly zero
    projector; that is verified here and such patterns are skipped.
    """
    out = []
    for pattern in itertools.product((1, -1), repeat=4):
        p16 = sign_pattern_projector(c, pattern)
        if prod(pattern) != c.product_sign:
            if np.any(p16):
                raise ArithmeticError(f"pattern {pattern} inconsistent but projector nonzero")
            continue
        _assert_rank_one(p16)
        out.append((_extract_ray(p16), pattern))
    if len(out) != 8:
        raise ArithmeticError(f"context produced {len(out)} rays, expected 8")
    return out


def pentagram_words() -> tuple[PauliWord, ...]:
    """The ten distinct observables, in first-appearance order over the five lines."""
    seen: dict[str, PauliWord] = {}
    for line in _LINES:
        for f in line:
            seen.setdefault(f, PauliWord(f))
    return tuple(seen.values())


def pentagram_unsat() -> tuple[int, int]:
    """Brute-force all 2^10 noncontextual +/-1 assignments against the five line constraints.

    Returns (number of assignments satisfying all 5 lines, max lines
    simultaneously satisfiable).
    """
    contexts = pentagram_contexts()
    words = pentagram_words()
    index = {w.factors: i for i, w in enumerate(words)}
    lines = [
        ([index[w.factors] for w in c.words], c.product_sign) for c in contexts
    ]
    satisfying = 0
    best = 0
    for bits in range(1 << len(words)):
        vals = [1 - 2 * ((bits >> i) & 1) for i in range(len(words))]
        sat = sum(1 for idxs, sign in lines if prod(vals[i] for i in idxs) == sign)
        if sat == len(lines):
            satisfying += 1
        best = max(best, sat)
    return satisfying, best
