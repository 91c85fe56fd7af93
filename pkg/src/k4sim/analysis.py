"""Terminal-graph analytics: scaling fits, independence estimates, triangle
coverage of vertex subsets, and K4-freeness certification."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from itertools import combinations
from typing import IO, Iterable, Optional, Sequence

import numpy as np

from .pairs import bits_to_indices, mask_from_indices
from .process import PairClass, ProcessState
from .rng import stream

SWEEP_CSV_HEADER = "n,seed,steps,edges,maxdeg,mindeg,alpha_greedy,alpha_exact,tri_cov"


@dataclass
class SweepRecord:
    n: int
    seed: int
    steps_to_termination: int
    final_edges: int
    max_degree: int
    min_degree: int
    greedy_alpha: int
    exact_alpha: Optional[int]
    triangle_coverage_rate: Optional[float]

    def csv_row(self) -> str:
        ae = "" if self.exact_alpha is None else str(self.exact_alpha)
        tc = "" if self.triangle_coverage_rate is None else repr(self.triangle_coverage_rate)
        return (
            f"{self.n},{self.seed},{self.steps_to_termination},{self.final_edges},"
            f"{self.max_degree},{self.min_degree},{self.greedy_alpha},{ae},{tc}"
        )


def write_sweep_csv(records: Sequence[SweepRecord], fh: IO[str]) -> None:
    fh.write(SWEEP_CSV_HEADER + "\n")
    for r in records:
        fh.write(r.csv_row() + "\n")


def fit_exponent(points: Sequence[tuple[float, float]]) -> tuple[float, float, float]:
    """Least squares of ln(value) on ln(n): returns (slope, intercept, slope stderr)."""
    if len(points) < 3:
        raise ValueError("need at least 3 points")
    ns = [p[0] for p in points]
    vals = [p[1] for p in points]
    if len(set(ns)) < 3:
        raise ValueError("need at least 3 distinct n values")
    if any(v <= 0 for v in vals) or any(x <= 0 for x in ns):
        raise ValueError("all coordinates must be positive")
    x = np.log(np.asarray(ns, dtype=np.float64))
    y = np.log(np.asarray(vals, dtype=np.float64))
    xm = x.mean()
    sxx = float(((x - xm) ** 2).sum())
    slope = float(((x - xm) * (y - y.mean())).sum() / sxx)
    intercept = float(y.mean() - slope * xm)
    resid = y - (intercept + slope * x)
    dof = len(points) - 2
    sigma2 = float((resid ** 2).sum()) / dof if dof > 0 else 0.0
    stderr = math.sqrt(max(sigma2, 0.0) / sxx)
    return slope, intercept, stderr


# -- independent sets ---------------------------------------------------------


def _adj_ints(state: ProcessState) -> list[int]:
    """Adjacency rows as Python big-int bitsets (fast take/kill loops)."""
    out = []
    for v in range(state.n):
        out.append(int.from_bytes(state.adj[v].tobytes(), "little"))
    return out


def _greedy_pass(order: Iterable[int], adj: list[int], n: int) -> int:
    alive = (1 << n) - 1
    size = 0
    for v in order:
        if alive >> v & 1:
            size += 1
            alive &= ~(adj[v] | (1 << v))
    return size


def greedy_independence(state: ProcessState, passes: int = 32,
                        rng: Optional[np.random.Generator] = None) -> int:
    """Best of `passes` random-permutation greedy passes plus one pass over
    the degree-ascending (min-degree-first) order. Every pass is maximal, so
    the result obeys size * (1 + max degree) >= n."""
    rng = rng if rng is not None else stream(state.seed, 3)
    adj = _adj_ints(state)
    order = sorted(range(state.n), key=lambda v: (int(state.deg[v]), v))
    best = _greedy_pass(order, adj, state.n)
    for _ in range(passes):
        perm = rng.permutation(state.n)
        best = max(best, _greedy_pass(perm.tolist(), adj, state.n))
    return best


def exact_independence(state: ProcessState, time_budget_s: float = 10.0) -> Optional[int]:
    """Branch and bound, only for n <= 40; returns None past the time budget."""
    n = state.n
    if n > 40:
        raise ValueError("exact independence supported only for n <= 40")
    adj = _adj_ints(state)
    full = (1 << n) - 1
    deadline = time.monotonic() + time_budget_s
    best = 0
    timed_out = False

    def popcount(x: int) -> int:
        return x.bit_count()

    def expand(alive: int, size: int) -> None:
        nonlocal best, timed_out
        if timed_out or time.monotonic() > deadline:
            timed_out = True
            return
        if size + popcount(alive) <= best:
            return
        if alive == 0:
            best = max(best, size)
            return
        # branch on a highest-degree survivor: either exclude it or take it
        v_best, d_best = -1, -1
        rest = alive
        while rest:
            v = (rest & -rest).bit_length() - 1
            rest &= rest - 1
            d = popcount(adj[v] & alive)
            if d > d_best:
                v_best, d_best = v, d
        if d_best == 0:
            best = max(best, size + popcount(alive))
            return
        v = v_best
        expand(alive & ~(1 << v), size)
        expand(alive & ~(adj[v] | (1 << v)), size + 1)

    expand(full, 0)
    return None if timed_out else best


def independence_lower(state: ProcessState, passes: int = 32,
                       exact_limit: int = 40) -> tuple[int, Optional[int]]:
    greedy = greedy_independence(state, passes=passes)
    exact = exact_independence(state) if state.n <= exact_limit else None
    return greedy, exact


# -- triangles ----------------------------------------------------------------


def subset_has_triangle(state: ProcessState, subset: Sequence[int]) -> bool:
    sub = sorted(set(int(v) for v in subset))
    mask = mask_from_indices(state.n, sub)
    for v in sub:
        inner = state.adj[v] & mask
        for x in bits_to_indices(inner).tolist():
            if x <= v:
                continue
            if bool((state.adj[x] & inner).any()):
                return True
    return False


def triangle_coverage(
    state: ProcessState, u_size: int, samples: int,
    rng: Optional[np.random.Generator] = None,
) -> tuple[float, list[list[int]]]:
    """Fraction of uniformly random u_size-subsets containing a triangle;
    also returns the missing subsets as witnesses."""
    if u_size > state.n:
        raise ValueError("subset size exceeds n")
    rng = rng if rng is not None else stream(state.seed, 4)
    misses: list[list[int]] = []
    hits = 0
    for _ in range(samples):
        sub = rng.choice(state.n, size=u_size, replace=False)
        if subset_has_triangle(state, sub.tolist()):
            hits += 1
        else:
            misses.append(sorted(int(v) for v in sub))
    return hits / samples, misses


# -- certification -------------------------------------------------------------


@dataclass
class Certificate:
    ok: bool
    method: str
    checked: int
    witness: Optional[tuple[int, int, int, int]]
    maximal: Optional[bool]

    def to_dict(self) -> dict:
        return {"ok": self.ok, "method": self.method, "checked": self.checked,
                "witness": list(self.witness) if self.witness else None,
                "maximal": self.maximal}


def certify_k4_free(state: ProcessState, mode: str = "auto",
                    sample_size: int = 1_000_000) -> Certificate:
    """Certify the current graph K4-free.

    exhaustive: every edge's common neighborhood is scanned for an inner edge
    (equivalent to checking all 4-cliques); allowed for n <= 512.
    sampled: `sample_size` random 4-subsets. Terminated states additionally
    certify maximality: every non-edge is closed.
    """
    if mode == "auto":
        mode = "exhaustive" if state.n <= 512 else "sampled"
    maximal = None
    if state.open_count == 0:
        nonedge = state.pair_class != PairClass.EDGE
        maximal = bool((state.pair_class[nonedge] == PairClass.CLOSED).all())
    if mode == "exhaustive":
        if state.n > 512:
            raise ValueError("exhaustive certification supported only for n <= 512")
        checked = 0
        for pid in state.edge_history:
            u, v = state.pair_of(pid)
            common = state.adj[u] & state.adj[v]
            cidx = bits_to_indices(common)
            checked += 1
            for x in cidx.tolist():
                hit = state.adj[x] & common
                for y in bits_to_indices(hit).tolist():
                    if y > x:
                        return Certificate(False, mode, checked, tuple(sorted((u, v, x, y))), maximal)
        return Certificate(True, mode, checked, None, maximal)
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    rng = stream(state.seed, 5)
    n = state.n
    remaining = sample_size
    while remaining > 0:
        batch = min(remaining, 200_000)
        quads = rng.integers(0, n, size=(batch, 4))
        distinct = (
            (quads[:, 0] != quads[:, 1]) & (quads[:, 0] != quads[:, 2])
            & (quads[:, 0] != quads[:, 3]) & (quads[:, 1] != quads[:, 2])
            & (quads[:, 1] != quads[:, 3]) & (quads[:, 2] != quads[:, 3])
        )
        quads = quads[distinct]
        ok = np.ones(len(quads), dtype=bool)
        for a, b in combinations(range(4), 2):
            ii = quads[:, a]
            jj = quads[:, b]
            words = state.adj[ii, jj >> 6]
            bit = (words >> (jj & 63).astype(np.uint64)) & np.uint64(1)
            ok &= bit != 0
        if ok.any():
            w = quads[int(np.flatnonzero(ok)[0])]
            return Certificate(False, mode, sample_size - remaining + len(quads),
                               tuple(sorted(int(x) for x in w)), maximal)
        remaining -= batch
    return Certificate(True, mode, sample_size, None, maximal)
