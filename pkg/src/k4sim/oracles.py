"""Brute-force oracles over explicit 4-subset enumeration.

These deliberately share no logic with the incremental closure scan: a pair
is closed exactly when some 4-subset holding it has the other five pairs
present. Costs are exponential-ish in n and intended for small instances.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from .pairs import pair_count, pair_index
from .process import PairClass, ProcessState

_quad_tables: dict[int, np.ndarray] = {}


def quad_pair_table(n: int) -> np.ndarray:
    """(C(n,4), 6) array: the pair ids of each 4-subset of [0, n)."""
    tbl = _quad_tables.get(n)
    if tbl is None:
        rows = []
        for quad in combinations(range(n), 4):
            rows.append([pair_index(n, a, b) for a, b in combinations(quad, 2)])
        tbl = np.asarray(rows, dtype=np.int64)
        _quad_tables[n] = tbl
    return tbl


def classify_all(n: int, edge_pids: np.ndarray) -> tuple[np.ndarray, bool]:
    """Reclassify every pair from scratch.

    Returns (classes, k4_found): classes[pid] is OPEN/EDGE/CLOSED computed
    purely from the 4-subset definition; k4_found reports whether the edge
    set already induces a 4-clique.
    """
    P = pair_count(n)
    edge_b = np.zeros(P, dtype=bool)
    edge_b[edge_pids] = True
    classes = np.zeros(P, dtype=np.int8)
    classes[edge_pids] = PairClass.EDGE
    tbl = quad_pair_table(n)
    present = edge_b[tbl]
    counts = present.sum(axis=1)
    k4_found = bool((counts == 6).any())
    rows = np.flatnonzero(counts == 5)
    if rows.size:
        missing_col = np.argmin(present[rows], axis=1)
        pids = tbl[rows, missing_col]
        classes[pids] = PairClass.CLOSED
    return classes, k4_found


def classify_state(state: ProcessState) -> tuple[np.ndarray, bool]:
    return classify_all(state.n, np.asarray(state.edge_history, dtype=np.int64))


def closed_by_oracle(state: ProcessState, pair: tuple[int, int]) -> set[tuple[int, int]]:
    """Definitional closure set of `pair`: open pairs xy such that adding both
    creates a K4 containing both, found by enumerating candidate 4-sets."""
    u, v = sorted(pair)
    is_edge = state.is_edge
    n = state.n
    out = set()
    for x in range(n):
        for y in range(x + 1, n):
            if state.class_of(x, y) != PairClass.OPEN or (x, y) == (u, v):
                continue
            ends = {u, v, x, y}
            if len(ends) == 4:
                others = [(a, b) for a, b in combinations(sorted(ends), 2)
                          if {a, b} not in ({u, v}, {x, y})]
                if all(is_edge(a, b) for a, b in others):
                    out.add((x, y))
            elif len(ends) == 3:
                tri = sorted(ends)
                for w in range(n):
                    if w in ends:
                        continue
                    quad = tri + [w]
                    pairs = [(a, b) for a, b in combinations(sorted(quad), 2)
                             if {a, b} not in ({u, v}, {x, y})]
                    if all(is_edge(a, b) for a, b in pairs):
                        out.add((x, y))
                        break
    return out
