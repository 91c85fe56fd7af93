"""Density monitors and greedy repair procedures.

Each check here mirrors an asymptotic whp statement about the process, so a
breach is recorded as data with a witness, never raised as a fault. The two
repair procedures are constructive stand-ins for existential deletion
statements: they greedily delete whichever member or edge currently
destroys the most offending structures, under a budget, and report whether
the residual count reached its target. Deletions are virtual (a mask); the
process state is never mutated.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .pairs import bits_to_indices, mask_from_indices, pair_index
from .process import ProcessState, init
from .rng import run_seed, stream
from .trajectory import ParamSet
from .triples import Configuration


@dataclass
class Violation:
    lemma: str
    witness: dict
    observed: float
    bound: float

    def to_dict(self) -> dict:
        return {"lemma": self.lemma, "witness": self.witness,
                "observed": self.observed, "bound": self.bound}


def violations_json(violations: Sequence[Violation]) -> str:
    return json.dumps([v.to_dict() for v in violations], sort_keys=True)


def edges_between(state: ProcessState, A: Iterable[int], B: Iterable[int]) -> int:
    """Edges with one endpoint in A and one in B; an edge inside the overlap
    counts once."""
    a = sorted(set(int(v) for v in A))
    b_mask = mask_from_indices(state.n, set(int(v) for v in B))
    total = 0
    for v in a:
        total += int(np.bitwise_count(state.adj[v] & b_mask).sum())
    # ordered count: edges with both ends in A&B were counted twice
    both = sorted(set(a) & set(int(v) for v in B))
    if both:
        bb = mask_from_indices(state.n, both)
        inner = sum(int(np.bitwise_count(state.adj[v] & bb).sum()) for v in both) // 2
        total -= inner
    return total


def check_event_D(state: ProcessState, params: ParamSet, samples: int,
                  rng: Optional[np.random.Generator] = None) -> list[Violation]:
    """Sampled and adversarial probes of e(A,B) < max(4/eps (a+b), p a b n^(2 eps))."""
    rng = rng if rng is not None else stream(state.seed, 2)
    n = state.n
    out: list[Violation] = []

    def probe(A, B, tag):
        a, b = len(A), len(B)
        if a == 0 or b == 0:
            return
        e = edges_between(state, A, B)
        bound = max(4.0 / params.epsilon * (a + b), params.p * a * b * n ** (2 * params.epsilon))
        if e >= bound:
            out.append(Violation("edge_count_between_sets",
                                 {"tag": tag, "a": a, "b": b}, e, bound))

    for _ in range(samples):
        a = int(rng.integers(1, n + 1))
        b = int(rng.integers(1, n + 1))
        A = rng.choice(n, size=a, replace=False)
        B = rng.choice(n, size=b, replace=False)
        probe(A.tolist(), B.tolist(), "random")

    top = np.argsort(-state.deg, kind="stable")
    for frac in (8, 32):
        t = top[: max(1, n // frac)].tolist()
        probe(t, t, f"top_degree_n/{frac}")
    for v in top[:5].tolist():
        nb = state.neighbors(v).tolist()
        probe(nb, nb, f"neighborhood_of_{v}")
        probe(nb, top[: max(1, n // 8)].tolist(), f"neighborhood_x_top_{v}")
    return out


def high_degree_set(state: ProcessState, A: Iterable[int], d: float) -> list[int]:
    """Vertices with at least d neighbors inside A."""
    if d < 1:
        raise ValueError("threshold d must be at least 1")
    a_mask = mask_from_indices(state.n, set(int(v) for v in A))
    deg_a = np.bitwise_count(state.adj & a_mask[None, :]).sum(axis=1)
    return [int(v) for v in np.flatnonzero(deg_a >= d)]


def check_high_degree_bound(state: ProcessState, A, d: float, params: ParamSet) -> Optional[Violation]:
    """Size bound 16/eps * a/d on the high-degree set, applicable once d clears
    max(16/eps, 2 a p n^(2 eps)); returns None if inapplicable or satisfied."""
    a = len(set(int(v) for v in A))
    if d < max(16.0 / params.epsilon, 2.0 * a * params.p * state.n ** (2 * params.epsilon)):
        return None
    observed = len(high_degree_set(state, A, d))
    bound = 16.0 / params.epsilon / d * a
    if observed >= bound:
        return Violation("high_degree_set_size", {"a": a, "d": d}, observed, bound)
    return None


def disjoint_codegree_family(state: ProcessState, A: Iterable[int], d: float) -> list[tuple[int, int]]:
    """Greedy maximal family of pairwise-disjoint vertex pairs, each with at
    least d common neighbors inside A; pairs scanned in lexicographic order."""
    if d < 1:
        raise ValueError("threshold d must be at least 1")
    n = state.n
    a_mask = mask_from_indices(n, set(int(v) for v in A))
    used = np.zeros(n, dtype=bool)
    fam: list[tuple[int, int]] = []
    for x in range(n):
        if used[x]:
            continue
        row = state.adj[x]
        for y in range(x + 1, n):
            if used[y] or used[x]:
                continue
            cod = int(np.bitwise_count(row & state.adj[y] & a_mask).sum())
            if cod >= d:
                fam.append((x, y))
                used[x] = used[y] = True
                break
    return fam


def check_codegree_family_bound(state: ProcessState, A, d: float, params: ParamSet) -> Optional[Violation]:
    """Family-size bound 30/eps * a/d once d clears the triple lower bound."""
    a = len(set(int(v) for v in A))
    n = state.n
    floor = max(
        300.0 / params.epsilon,
        a * params.p ** 2 * n ** (5 * params.epsilon),
        params.epsilon ** -0.5 * (a * params.p) ** 0.5 * n ** (2 * params.epsilon),
    )
    if d < floor:
        return None
    observed = len(disjoint_codegree_family(state, A, d))
    bound = 30.0 / params.epsilon / d * a
    if observed > bound:
        return Violation("disjoint_codegree_family_size", {"a": a, "d": d}, observed, bound)
    return None


@dataclass(frozen=True)
class EdgeFamily:
    """Family of equal-size pair sets; members given as tuples of (u, v) pairs."""

    members: tuple[frozenset, ...]
    size: int

    @classmethod
    def of(cls, members: Iterable[Iterable[tuple[int, int]]]) -> "EdgeFamily":
        ms = []
        sizes = set()
        for m in members:
            fs = frozenset((min(u, v), max(u, v)) for u, v in m)
            ms.append(fs)
            sizes.add(len(fs))
        if len(sizes) > 1:
            raise ValueError(f"member sizes differ: {sorted(sizes)}")
        size = sizes.pop() if sizes else 0
        return cls(members=tuple(ms), size=size)


def deletion_repair(
    state: ProcessState,
    family: EdgeFamily,
    params: ParamSet,
    budget: int,
    slack: float,
) -> tuple[list[int], int, bool]:
    """Greedy member deletion until at most mu' + slack members stay contained.

    mu' = |family| p^l n^(2 l eps). Each round removes the contained member
    whose edges hit the most contained members (ties: first in family order)
    and masks its edges. Returns (deleted member indices, residual, success).
    """
    ell = family.size
    mu = len(family.members) * params.p ** ell * state.n ** (2 * ell * params.epsilon)
    target = mu + slack
    masked: set[tuple[int, int]] = set()

    def contained_indices() -> list[int]:
        out = []
        for idx, m in enumerate(family.members):
            ok = all(state.is_edge(u, v) and (u, v) not in masked for (u, v) in m)
            if ok:
                out.append(idx)
        return out

    deleted: list[int] = []
    contained = contained_indices()
    while len(contained) > target and len(deleted) < budget:
        cont_set = set(contained)
        best_idx, best_hit = -1, -1
        for idx in contained:
            edges = family.members[idx]
            hit = sum(
                1 for j in cont_set if any(e in family.members[j] for e in edges)
            )
            if hit > best_hit:
                best_idx, best_hit = idx, hit
        deleted.append(best_idx)
        masked |= set(family.members[best_idx])
        contained = contained_indices()
    return deleted, len(contained), len(contained) <= target


def quadruple_deletion_repair(
    state: ProcessState, sigma: Configuration, params: ParamSet
) -> tuple[set[tuple[int, int]], int, bool]:
    """Greedy edge deletion shrinking the closure-quadruple count.

    Allowed deletions are existing edges with an endpoint in K; the target
    residual is r^3 n p^4 n^(10 eps) for r = |A| and the budget is 20/eps * r.
    Deletions are a local mask; state is untouched.
    """
    r = sigma.k
    n = state.n
    target = r ** 3 * n * params.p ** 4 * n ** (10.0 * params.epsilon)
    budget = int(20.0 / params.epsilon * r)
    masked: set[tuple[int, int]] = set()

    def residual_and_counts():
        b_set = set(sigma.B)
        c_set = set(sigma.C)
        per_edge: dict[tuple[int, int], int] = {}
        total = 0

        def alive(a, b):
            key = (min(a, b), max(a, b))
            return state.is_edge(a, b) and key not in masked

        def bump(a, b):
            key = (min(a, b), max(a, b))
            per_edge[key] = per_edge.get(key, 0) + 1

        for u in sigma.A:
            for w in sigma.C:
                if not alive(u, w):
                    continue
                for z in bits_to_indices(state.adj[u] & state.adj[w]).tolist():
                    if not (alive(z, u) and alive(z, w)):
                        continue
                    for v in bits_to_indices(state.adj[z]).tolist():
                        if v not in b_set or v == z or not alive(z, v):
                            continue
                        total += 1
                        bump(u, w)
                        bump(z, u)
                        bump(z, v)
                        bump(z, w)
        return total, per_edge

    total, per_edge = residual_and_counts()
    while total > target and len(masked) < budget:
        edge, _ = max(per_edge.items(), key=lambda kv: (kv[1], (-kv[0][0], -kv[0][1])))
        masked.add(edge)
        total, per_edge = residual_and_counts()
    return masked, total, total <= target


def edge_set_probability(
    n: int, runs: int, F: Sequence[tuple[int, int]], params: ParamSet,
    master_seed: int = 0,
) -> tuple[float, float]:
    """Monte Carlo frequency of all pairs of F being edges after m steps,
    against the per-edge-set reference bound (p n^(2 eps))^|F|."""
    if runs < 1:
        raise ValueError("need at least one run")
    pids = [pair_index(n, min(u, v), max(u, v)) for u, v in F]
    hits = 0
    for r in range(runs):
        st = init(n, run_seed(master_seed, r))
        target = min(params.m, n * (n - 1) // 2)
        while st.open_count > 0 and st.i < target:
            st.step()
        if all(st.pair_class[p] == 1 for p in pids):
            hits += 1
    bound = (params.p * n ** (2 * params.epsilon)) ** len(F)
    return hits / runs, bound


def greedy_independent_pairs_bound(alpha_lb: int, max_degree: int, vertices: int) -> bool:
    """Any maximal independent set has size >= |V|/(1 + max degree)."""
    return alpha_lb * (1 + max_degree) >= vertices
