"""Factorization structures: the multiset of (factor degree, multiplicity) labelling a manifold.

The embedding order is generated by two moves that each raise the manifold
dimension: combining two components of equal multiplicity into one of summed
degree, and splitting a multiplicity ``k`` into ``k_hat + (k - k_hat)``.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from .polycore import dim, tuple_add

Component = tuple[tuple[int, ...], int]

ENUMERATION_GUARD = 400


class StructureError(ValueError):
    pass


def _canonical(components: Iterable[Component]) -> tuple[Component, ...]:
    comps = [(tuple(int(e) for e in d), int(k)) for d, k in components]
    return tuple(sorted(comps, key=lambda c: (c[0], c[1]), reverse=True))


@dataclass(frozen=True)
class FactorStructure:
    components: tuple[Component, ...]

    def __post_init__(self):
        comps = _canonical(self.components)
        if not comps:
            raise StructureError("a structure needs at least one component")
        ell = len(comps[0][0])
        for d, k in comps:
            if len(d) != ell:
                raise StructureError("components have degrees of different lengths")
            if not any(d) or min(d) < 0:
                raise StructureError(f"invalid component degree {d}")
            if k < 1:
                raise StructureError(f"invalid multiplicity {k}")
        object.__setattr__(self, "components", comps)

    @classmethod
    def of(cls, *components: Component) -> FactorStructure:
        return cls(tuple(components))

    @property
    def nvars(self) -> int:
        return len(self.components[0][0])

    def total_degree(self) -> tuple[int, ...]:
        total = (0,) * self.nvars
        for d, k in self.components:
            total = tuple_add(total, tuple(k * e for e in d))
        return total

    def __len__(self):
        return len(self.components)

    def __str__(self):
        parts = []
        for d, k in self.components:
            deg = str(d[0]) if len(d) == 1 else "(" + ",".join(map(str, d)) + ")"
            parts.append(deg if k == 1 else f"{deg}^{k}")
        return " ".join(parts)

    def to_json(self) -> list[dict]:
        return [{"degree": list(d), "multiplicity": k} for d, k in self.components]

    @classmethod
    def from_json(cls, data) -> FactorStructure:
        return cls(tuple((tuple(c["degree"]), c["multiplicity"]) for c in data))


def parse_structure(text: str) -> FactorStructure:
    """Parse ``"(1,0) (0,1) (1,1)"`` or ``"1^10 1^20"`` style structure hints."""
    import re

    comps = []
    for m in re.finditer(r"(\([\d,\s]+\)|\d+)\s*(?:\^\s*(\d+))?", text):
        d = tuple(int(x) for x in m.group(1).strip("()").split(",") if x.strip())
        comps.append((d, int(m.group(2) or 1)))
    if not comps:
        raise StructureError(f"cannot parse structure {text!r}")
    return FactorStructure(tuple(comps))


def codim(S: FactorStructure) -> int:
    m = S.total_degree()
    return dim(m) - (sum(dim(d) for d, _ in S.components) + 1 - len(S))


def is_trivial(S: FactorStructure) -> bool:
    comps = S.components
    if len(comps) == 1 and comps[0][1] == 1:
        return True
    return S.nvars == 1 and all(d == (1,) and k == 1 for d, k in comps)


def combine_degrees(S: FactorStructure, i: int, j: int) -> FactorStructure:
    comps = list(S.components)
    if i == j or not (0 <= i < len(comps) and 0 <= j < len(comps)):
        raise StructureError(f"invalid component indices {i}, {j}")
    (di, ki), (dj, kj) = comps[i], comps[j]
    if ki != kj:
        raise StructureError("combined components must have equal multiplicity")
    rest = [c for n, c in enumerate(comps) if n not in (i, j)]
    return FactorStructure(tuple(rest + [(tuple_add(di, dj), ki)]))


def split_multiplicity(S: FactorStructure, i: int, k_hat: int) -> FactorStructure:
    comps = list(S.components)
    if not 0 <= i < len(comps):
        raise StructureError(f"invalid component index {i}")
    d, k = comps[i]
    if not 1 <= k_hat < k:
        raise StructureError(f"cannot split multiplicity {k} at {k_hat}")
    rest = comps[:i] + comps[i + 1 :]
    return FactorStructure(tuple(rest + [(d, k_hat), (d, k - k_hat)]))


def realizable(d: Sequence[int]) -> bool:
    """Whether an irreducible factor can have tuple degree ``d``.

    With two or more variables, a factor living in one variable of degree > 1
    always splits over C, so such components never label a manifold.
    """
    live = [e for e in d if e]
    return len(d) == 1 or len(live) > 1 or max(live, default=0) <= 1


def embedding_moves(S: FactorStructure) -> list[tuple[str, tuple[int, int], FactorStructure]]:
    """Every single combine/split move out of ``S`` (duplicates removed)."""
    out = []
    seen = set()
    comps = S.components
    for i in range(len(comps)):
        for j in range(i + 1, len(comps)):
            if comps[i][1] == comps[j][1] and realizable(tuple_add(comps[i][0], comps[j][0])):
                T = combine_degrees(S, i, j)
                if T not in seen:
                    seen.add(T)
                    out.append(("combine", (i, j), T))
        for k_hat in range(1, comps[i][1] // 2 + 1):
            T = split_multiplicity(S, i, k_hat)
            if T not in seen:
                seen.add(T)
                out.append(("split", (i, k_hat), T))
    return out


def successors(S: FactorStructure) -> list[FactorStructure]:
    return [T for _, _, T in embedding_moves(S)]


@lru_cache(maxsize=4096)
def _reachable(N: FactorStructure) -> frozenset:
    seen = {N}
    queue = deque([N])
    while queue:
        S = queue.popleft()
        for T in successors(S):
            if T not in seen:
                seen.add(T)
                queue.append(T)
    return frozenset(seen)


def precedes(N: FactorStructure, M: FactorStructure) -> bool:
    """True iff ``M`` is reachable from ``N`` by combine/split moves (N embeds in M)."""
    if N.total_degree() != M.total_degree():
        raise StructureError("structures of different total degree")
    if N == M:
        return True
    return M in _reachable(N)


def enumerate_structures(m: Sequence[int], max_components: int | None = None) -> list[FactorStructure]:
    """All structures of total degree ``m``, sorted by decreasing codimension."""
    m = tuple(m)
    if dim(m) > ENUMERATION_GUARD:
        raise StructureError(f"box {m} too large to enumerate (dim {dim(m)} > {ENUMERATION_GUARD})")
    if not any(m):
        return []
    import itertools

    degrees = [d for d in itertools.product(*(range(k + 1) for k in m)) if any(d) and realizable(d)]
    pairs = []
    for d in degrees:
        k = 1
        while all(k * e <= t for e, t in zip(d, m)):
            pairs.append((d, k))
            k += 1
    pairs.sort(reverse=True)
    limit = max_components or sum(m)
    found: list[FactorStructure] = []

    def rec(start: int, remaining: tuple[int, ...], chosen: list[Component]):
        if not any(remaining):
            found.append(FactorStructure(tuple(chosen)))
            return
        if len(chosen) >= limit:
            return
        for idx in range(start, len(pairs)):
            d, k = pairs[idx]
            need = tuple(k * e for e in d)
            if all(a <= b for a, b in zip(need, remaining)):
                chosen.append((d, k))
                rec(idx, tuple(b - a for a, b in zip(need, remaining)), chosen)
                chosen.pop()

    rec(0, m, [])
    uniq = sorted(set(found), key=lambda S: (-codim(S), S.components))
    return uniq


def select_max_codim(candidates: Sequence[tuple[FactorStructure, float]], epsilon: float):
    """Highest-codimension structure among those within ``epsilon``.

    Returns ``(structure, tied)`` where ``tied`` lists other structures of the
    same codimension that were also within ``epsilon``.
    """
    within = [(S, d) for S, d in candidates if d < epsilon]
    if not within:
        raise StructureError(f"no candidate structure within {epsilon:g}")
    best = max(codim(S) for S, _ in within)
    top = sorted((d, S.components, S) for S, d in within if codim(S) == best)
    winner = top[0][2]
    tied = [S for _, _, S in top[1:] if S != winner]
    return winner, tied


def stratification_dag(m: Sequence[int]) -> dict:
    """Nodes (structures with codim) and single-move embedding edges for degree ``m``."""
    structs = enumerate_structures(m)
    index = {S: n for n, S in enumerate(structs)}
    nodes = [{"id": n, "label": str(S), "codim": codim(S), "components": S.to_json()} for S, n in index.items()]
    edges = []
    for S, n in index.items():
        for kind, _, T in embedding_moves(S):
            edges.append({"source": n, "target": index[T], "move": kind})
    edges.sort(key=lambda e: (e["source"], e["target"], e["move"]))
    return {"degree": list(m), "nodes": nodes, "edges": edges}


def dag_to_json(m: Sequence[int]) -> str:
    return json.dumps(stratification_dag(m), indent=2, sort_keys=True)


def dag_to_dot(m: Sequence[int]) -> str:
    dag = stratification_dag(m)
    lines = [f'digraph "stratification {tuple(m)}" {{', "  rankdir=TB;"]
    for nd in dag["nodes"]:
        lines.append(f'  n{nd["id"]} [label="{nd["label"]}\\ncodim {nd["codim"]}"];')
    for e in dag["edges"]:
        lines.append(f'  n{e["source"]} -> n{e["target"]} [label="{e["move"]}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
