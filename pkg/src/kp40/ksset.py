"""The canonical 40-ray Kernaghan-Peres set, its orthogonality graph, and octads."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable

from . import pentagram
from .rays import Ray, canonical_form, dot, parse_ray_entries, same_direction

N_RAYS = 40
RAY_DEGREE = 23
EDGE_COUNT = 460
N_OCTADS = 25    # frozen regression constant, cross-checked against networkx in tests

# Rows 1-40 in table order, one basis group of 8 per commuting line of the
# pentagram (see pentagram._LINES for the group-to-line correspondence).
_TABLE: tuple[tuple[int, ...], ...] = (
    # common eigenvectors of {zxx, xxz, xzx, zzz}
    (0, 1, 1, 0, 1, 0, 0, -1),
    (1, 0, 0, 1, 0, 1, -1, 0),
    (1, 0, 0, 1, 0, -1, 1, 0),
    (0, 1, 1, 0, -1, 0, 0, 1),
    (1, 0, 0, -1, 0, 1, 1, 0),
    (0, 1, -1, 0, 1, 0, 0, 1),
    (0, -1, 1, 0, 1, 0, 0, 1),
    (-1, 0, 0, 1, 0, 1, 1, 0),
    # common eigenvectors of {z1, z2, z3, zzz}: the computational basis
    (1, 0, 0, 0, 0, 0, 0, 0),
    (0, 1, 0, 0, 0, 0, 0, 0),
    (0, 0, 1, 0, 0, 0, 0, 0),
    (0, 0, 0, 1, 0, 0, 0, 0),
    (0, 0, 0, 0, 1, 0, 0, 0),
    (0, 0, 0, 0, 0, 1, 0, 0),
    (0, 0, 0, 0, 0, 0, 1, 0),
    (0, 0, 0, 0, 0, 0, 0, 1),
    # common eigenvectors of {x1, x2, z3, xxz}
    (1, 0, 1, 0, 1, 0, 1, 0),
    (0, 1, 0, 1, 0, 1, 0, 1),
    (1, 0, -1, 0, 1, 0, -1, 0),
    (0, 1, 0, -1, 0, 1, 0, -1),
    (1, 0, 1, 0, -1, 0, -1, 0),
    (0, 1, 0, 1, 0, -1, 0, -1),
    (1, 0, -1, 0, -1, 0, 1, 0),
    (0, 1, 0, -1, 0, -1, 0, 1),
    # common eigenvectors of {x1, z2, x3, xzx}
    (0, 0, 1, -1, 0, 0, -1, 1),
    (0, 0, 1, 1, 0, 0, -1, -1),
    (1, -1, 0, 0, -1, 1, 0, 0),
    (1, 1, 0, 0, -1, -1, 0, 0),
    (0, 0, 1, -1, 0, 0, 1, -1),
    (0, 0, 1, 1, 0, 0, 1, 1),
    (1, -1, 0, 0, 1, -1, 0, 0),
    (1, 1, 0, 0, 1, 1, 0, 0),
    # common eigenvectors of {z1, x2, x3, zxx}
    (0, 0, 0, 0, 1, -1, -1, 1),
    (0, 0, 0, 0, 1, 1, -1, -1),
    (0, 0, 0, 0, 1, -1, 1, -1),
    (0, 0, 0, 0, 1, 1, 1, 1),
    (1, -1, -1, 1, 0, 0, 0, 0),
    (1, 1, -1, -1, 0, 0, 0, 0),
    (1, -1, 1, -1, 0, 0, 0, 0),
    (1, 1, 1, 1, 0, 0, 0, 0),
)

_BASIS_GROUPS: tuple[tuple[int, ...], ...] = tuple(
    tuple(range(8 * g + 1, 8 * g + 9)) for g in range(5)
)

_MERMIN_SUBSET: tuple[int, ...] = (10, 11, 13, 16, 17, 20, 22, 23, 26, 27, 29, 32, 34, 35, 37, 40)

Octad = tuple[int, ...]


@dataclass(frozen=True)
class KSSet:
    """The 40 rays (1-based table order) plus the 5 basis groups of 8 indices."""

    rays: tuple[Ray, ...]
    basis_groups: tuple[tuple[int, ...], ...]

    def ray(self, index: int) -> Ray:
        if not 1 <= index <= len(self.rays):
            raise IndexError(f"ray index {index} out of range 1..{len(self.rays)}")
        return self.rays[index - 1]

    def basis_of(self, index: int) -> int:
        """1-based basis-group number containing the given ray index."""
        for g, group in enumerate(self.basis_groups, start=1):
            if index in group:
                return g
        raise IndexError(f"ray index {index} in no basis group")

    def to_json(self) -> dict:
        return {
            "rays": [list(r.entries) for r in self.rays],
            "basis_groups": [list(g) for g in self.basis_groups],
        }


@dataclass(frozen=True)
class OrthoGraph:
    """Orthogonality graph over ray indices 1..n; adjacency stored as bitmasks (bit i = index i+1)."""

    n: int
    adj: tuple[int, ...]

    def adjacent(self, i: int, j: int) -> bool:
        return bool(self.adj[i - 1] >> (j - 1) & 1)

    def degree(self, i: int) -> int:
        return self.adj[i - 1].bit_count()

    def edge_count(self) -> int:
        return sum(m.bit_count() for m in self.adj) // 2

    def neighbors(self, i: int) -> tuple[int, ...]:
        return tuple(j + 1 for j in range(self.n) if self.adj[i - 1] >> j & 1)


def _validate_groups(rays: tuple[Ray, ...], groups: tuple[tuple[int, ...], ...]) -> None:
    for group in groups:
        for a_pos, a in enumerate(group):
            for b in group[a_pos + 1:]:
                if dot(rays[a - 1], rays[b - 1]) != 0:
                    raise ValueError(f"rays {a} and {b} in one basis group are not orthogonal")


def _validate_against_pentagram(rays: tuple[Ray, ...], groups: tuple[tuple[int, ...], ...]) -> None:
    for context, group in zip(pentagram.pentagram_contexts(), groups):
        generated = [r for r, _ in pentagram.common_eigenrays(context)]
        remaining = list(group)
        for gen in generated:
            match = [i for i in remaining if same_direction(gen, rays[i - 1])]
            if len(match) != 1:
                raise ValueError(f"generated ray {gen.entries} matches table rows {match}")
            remaining.remove(match[0])
        if remaining:
            raise ValueError(f"table rows {remaining} not produced by their context")


@lru_cache(maxsize=1)
def canonical_set() -> KSSet:
    """The table data, validated at construction against orthogonality and the pentagram."""
    rays = tuple(Ray(row, label=i) for i, row in enumerate(_TABLE, start=1))
    _validate_groups(rays, _BASIS_GROUPS)
    _validate_against_pentagram(rays, _BASIS_GROUPS)
    return KSSet(rays=rays, basis_groups=_BASIS_GROUPS)


def build_graph(s: KSSet) -> OrthoGraph:
    """Edge (i, j) iff dot(v_i, v_j) == 0."""
    n = len(s.rays)
    adj = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            if dot(s.rays[i], s.rays[j]) == 0:
                adj[i] |= 1 << j
                adj[j] |= 1 << i
    return OrthoGraph(n=n, adj=tuple(adj))


def enumerate_octads(g: OrthoGraph) -> tuple[Octad, ...]:
    """All 8-cliques of the orthogonality graph, sorted lexicographically.

    Ordered backtracking: members are chosen in increasing index order and each
    new member must be adjacent to all chosen ones, so every 8-clique is
    produced exactly once.
    """
    out: list[Octad] = []
    adj = g.adj

    def extend(clique: list[int], cand: int) -> None:
        if len(clique) == 8:
            out.append(tuple(v + 1 for v in clique))
            return
        if len(clique) + cand.bit_count() < 8:
            return
        while cand:
            v = (cand & -cand).bit_length() - 1
            cand &= cand - 1
            clique.append(v)
            extend(clique, cand & adj[v])
            clique.pop()

    extend([], (1 << g.n) - 1)
    return tuple(sorted(out))


def mermin_subset() -> tuple[int, ...]:
    """The 16 ray indices of the single-system Mermin inequality."""
    return _MERMIN_SUBSET


def pentagram_match_map() -> dict[tuple[int, tuple[int, int, int, int]], int]:
    """Map (context number 1..5, sign pattern) -> table index, asserting a 40/40 bijection."""
    s = canonical_set()
    mapping: dict[tuple[int, tuple[int, int, int, int]], int] = {}
    for c_idx, (context, group) in enumerate(
        zip(pentagram.pentagram_contexts(), s.basis_groups), start=1
    ):
        remaining = list(group)
        for ray, pattern in pentagram.common_eigenrays(context):
            match = [i for i in remaining if same_direction(ray, s.rays[i - 1])]
            if len(match) != 1:
                raise ValueError(f"context {c_idx} pattern {pattern}: matches {match}")
            mapping[(c_idx, pattern)] = match[0]
            remaining.remove(match[0])
    if len(mapping) != N_RAYS:
        raise ValueError(f"matched {len(mapping)} rays, expected {N_RAYS}")
    return mapping


def load_ksset_file(path: str | Path) -> KSSet:
    """Parse a ksset.json file, validating row by row (errors name the offending ray)."""
    with open(path) as f:
        data = json.load(f)
    rows = data["rays"] if isinstance(data, dict) else data
    if len(rows) != N_RAYS:
        raise ValueError(f"expected {N_RAYS} rays, got {len(rows)}")
    rays = tuple(
        Ray(parse_ray_entries(row, index=i), label=i) for i, row in enumerate(rows, start=1)
    )
    groups = (
        tuple(tuple(int(i) for i in grp) for grp in data["basis_groups"])
        if isinstance(data, dict) and "basis_groups" in data
        else _BASIS_GROUPS
    )
    _validate_groups(rays, groups)
    return KSSet(rays=rays, basis_groups=groups)


def induced_bitmask(indices: Iterable[int]) -> int:
    mask = 0
    for i in indices:
        mask |= 1 << (i - 1)
    return mask
