"""Exact quantum values of the two sums for integer-component states."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .ksset import KSSet, canonical_set, mermin_subset
from .rays import entries_of, overlap_prob

# Unnormalized integer components; basis order matches the ray table's qubit ordering.
NAMED_STATES: dict[str, tuple[int, ...]] = {
    "ghz": (0, 1, 1, 0, 1, 0, 0, -1),
    "w": (0, 1, 1, 0, 1, 0, 0, 0),
    "beta": (0, 0, 1, 1, -1, -1, 0, 0),
    "eta": (1, 1, 1, 1, 1, 1, 0, 0),
    "prod": (1, 0, 0, 0, 0, 0, 0, 0),
}


@dataclass(frozen=True)
class ProbabilityProfile:
    """Exact outcome probabilities of one state against all 40 rays."""

    state: tuple[int, ...]
    probs: dict[int, Fraction]

    def basis_sums(self, s: KSSet | None = None) -> dict[int, Fraction]:
        s = s or canonical_set()
        return {
            g + 1: sum((self.probs[i] for i in group), Fraction(0))
            for g, group in enumerate(s.basis_groups)
        }

    def to_json(self) -> dict:
        return {
            "state": list(self.state),
            "probs": {str(i): str(p) for i, p in sorted(self.probs.items())},
        }


def resolve_state(state: str | Sequence[int]) -> tuple[int, ...]:
    if isinstance(state, str):
        try:
            return NAMED_STATES[state.lower()]
        except KeyError:
            raise ValueError(f"unknown state name {state!r}; known: {sorted(NAMED_STATES)}") from None
    entries = entries_of(state)
    if len(entries) != 8 or not any(entries):
        raise ValueError("state must be 8 integer components, not all zero")
    return entries


def profile(state: str | Sequence[int], s: KSSet | None = None) -> ProbabilityProfile:
    s = s or canonical_set()
    entries = resolve_state(state)
    probs = {i: overlap_prob(entries, s.ray(i)) for i in range(1, len(s.rays) + 1)}
    return ProbabilityProfile(state=entries, probs=probs)


def sigma_value(state: str | Sequence[int], s: KSSet | None = None) -> Fraction:
    """Sum of the 40 outcome probabilities.  Equals 5 for every state: the five
    basis groups are complete, so each contributes exactly 1."""
    p = profile(state, s)
    return sum(p.probs.values(), Fraction(0))


def S_value(state: str | Sequence[int], s: KSSet | None = None) -> Fraction:
    """Sum of the 16 outcome probabilities over the Mermin-test subset."""
    p = profile(state, s)
    return sum((p.probs[i] for i in mermin_subset()), Fraction(0))


def sigma_of_profile(probs: Mapping[int, Fraction | float]) -> Fraction | float:
    return sum(probs.values())


def S_of_profile(probs: Mapping[int, Fraction | float]) -> Fraction | float:
    return sum(probs[i] for i in mermin_subset())
