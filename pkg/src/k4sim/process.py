"""The K4-free random graph process.

Starting from the empty graph on n vertices, each step adds an edge drawn
uniformly at random from the pairs whose addition would not complete a
4-clique. Every unordered pair carries exactly one class at all times:

    OPEN    not an edge, may still be drawn,
    EDGE    already added,
    CLOSED  not an edge, adding it would complete a K4; permanently barred.

The state keeps the full tri-partition incrementally. When an edge (u, v)
is inserted, the pairs it closes are found by a two-branch neighborhood
scan rather than by maintaining closure sets for every pair:

  * disjoint branch: open pairs (x, y) with x, y common neighbors of u and
    v (the 4-clique would be {u, v, x, y});
  * shared branch: open pairs (u, y) with y adjacent to v and some witness
    w adjacent to u, v and y (4-clique {u, v, y, w}), and symmetrically
    (v, x).

Uniform selection uses an indexable array of open pair ids with a reverse
position index; removal is swap-with-last, so a draw is a single uniform
integer.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from enum import IntEnum
from typing import Callable, IO, Optional, Sequence

import numpy as np

from .pairs import (
    BITS64,
    bits_to_indices,
    pair_count,
    pair_decode,
    pair_index,
    row_bases,
    test_bit,
    word_count,
)
from .rng import stream


class PairClass(IntEnum):
    OPEN = 0
    EDGE = 1
    CLOSED = 2


class ProcessTerminated(Exception):
    """Raised by step() when no open pair remains; a normal outcome, not a fault."""


class ObserverError(RuntimeError):
    """An observer raised during a run; carries the step index for diagnosis."""


@dataclass(frozen=True)
class Termination:
    """Run until no open pair remains."""


@dataclass(frozen=True)
class AfterSteps:
    steps: int


@dataclass(frozen=True)
class AfterScaledTime:
    """Stop at step ceil(t * n^2 * p), i.e. at scaled time t."""

    t: float


StopRule = Termination | AfterSteps | AfterScaledTime


@dataclass(frozen=True)
class ClosureWitness:
    """Audit record: adding via_edge closed pair; quad is the completing 4-set."""

    pair: tuple[int, int]
    via_edge: tuple[int, int]
    quad: tuple[int, int, int, int]


@dataclass
class RunSummary:
    n: int
    seed: int
    steps: int
    edges: int
    max_degree: int
    min_degree: int
    open_remaining: int
    terminated: bool
    elapsed_s: float

    def to_dict(self, with_elapsed: bool = False) -> dict:
        d = {
            "n": self.n,
            "seed": self.seed,
            "steps": self.steps,
            "edges": self.edges,
            "max_degree": self.max_degree,
            "min_degree": self.min_degree,
            "open_remaining": self.open_remaining,
            "terminated": self.terminated,
        }
        if with_elapsed:
            d["elapsed_s"] = self.elapsed_s
        return d


# Observer signature: (state, chosen_pid, newly_closed_pids). Called after the
# state has been updated; state.i is the index of the step just completed.
Observer = Callable[["ProcessState", int, np.ndarray], None]

_EMPTY = np.empty(0, dtype=np.int64)


class ProcessState:
    """Evolving graph plus the exact open/edge/closed tri-partition."""

    def __init__(self, n: int, seed: int):
        if n < 2:
            raise ValueError(f"need at least 2 vertices, got n={n}")
        self.n = n
        self.seed = int(seed)
        self.i = 0
        self.words = word_count(n)
        self.adj = np.zeros((n, self.words), dtype=np.uint64)
        self.deg = np.zeros(n, dtype=np.int64)
        self.max_degree = 0
        P = pair_count(n)
        self.P = P
        self.pair_class = np.zeros(P, dtype=np.int8)
        self.open_pairs = np.arange(P, dtype=np.int64)
        self.open_pos = np.arange(P, dtype=np.int64)
        self.open_count = P
        self.bases = row_bases(n)
        self.edge_history: list[int] = []
        self.rng = stream(self.seed)
        # per-vertex neighbor buffers, grown geometrically
        self._nb_cap = min(64, n)
        self._nb = np.zeros((n, self._nb_cap), dtype=np.int32)
        self._triu_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    # -- pair helpers -----------------------------------------------------

    def pid(self, u: int, v: int) -> int:
        return int(pair_index(self.n, u, v))

    def pair_of(self, pid: int) -> tuple[int, int]:
        u, v = pair_decode(self.bases, pid)
        return int(u), int(v)

    def class_of(self, u: int, v: int) -> PairClass:
        return PairClass(int(self.pair_class[self.pid(u, v)]))

    def neighbors(self, v: int) -> np.ndarray:
        return self._nb[v, : self.deg[v]]

    def is_edge(self, u: int, v: int) -> bool:
        return test_bit(self.adj[u], v) if u != v else False

    @property
    def min_degree(self) -> int:
        return int(self.deg.min())

    # -- closure scan -----------------------------------------------------

    def closed_by(self, pair: tuple[int, int]) -> set[tuple[int, int]]:
        """Open pairs xy such that adding `pair` and xy creates a K4 containing both.

        Defined for open and closed input pairs; an existing edge is rejected.
        """
        u, v = (pair[0], pair[1]) if pair[0] < pair[1] else (pair[1], pair[0])
        if not (0 <= u < v < self.n):
            raise ValueError(f"invalid pair {pair!r}")
        if self.pair_class[self.pid(u, v)] == PairClass.EDGE:
            raise ValueError(f"pair {pair!r} is already an edge")
        pids = self._closed_pids(u, v, self.adj[u] & self.adj[v])
        return {self.pair_of(p) for p in pids.tolist()}

    def _closed_pids(self, u: int, v: int, common: np.ndarray) -> np.ndarray:
        """Pids of C_(u,v) on the current graph; common = adj[u] & adj[v]."""
        if not common.any():
            return _EMPTY
        out = []
        n = self.n
        bases = self.bases
        pc = self.pair_class
        cidx = bits_to_indices(common)
        # disjoint branch: both endpoints inside the common neighborhood
        if cidx.size >= 2:
            a, b = self._triu(cidx.size)
            x = cidx[a]
            y = cidx[b]
            pids = bases[x] + (y - x - 1)
            hit = pids[pc[pids] == 0]
            if hit.size:
                out.append(hit)
        # shared branch: touched = vertices adjacent to some common neighbor
        touched = np.bitwise_or.reduce(self.adj[cidx], axis=0)
        for z, other in ((u, v), (v, u)):
            nb = self.neighbors(other).astype(np.int64)
            if nb.size == 0:
                continue
            lo = np.minimum(nb, z)
            hi = np.maximum(nb, z)
            pids = lo * (2 * n - lo - 1) // 2 + (hi - lo - 1)
            opn = pc[pids] == 0
            if not opn.any():
                continue
            cand = nb[opn]
            w = touched[cand >> 6]
            has_witness = (w >> (cand & 63).astype(np.uint64)) & np.uint64(1) != 0
            if has_witness.any():
                out.append(pids[opn][has_witness])
        if not out:
            return _EMPTY
        return out[0] if len(out) == 1 else np.concatenate(out)

    def _triu(self, size: int) -> tuple[np.ndarray, np.ndarray]:
        t = self._triu_cache.get(size)
        if t is None:
            t = np.triu_indices(size, 1)
            self._triu_cache[size] = t
        return t

    # -- stepping ---------------------------------------------------------

    def step(self) -> tuple[int, np.ndarray]:
        """Add one uniformly random open pair; returns (chosen_pid, closed_pids)."""
        if self.open_count == 0:
            raise ProcessTerminated(f"no open pairs after {self.i} steps")
        j = int(self.rng.integers(0, self.open_count))
        e = int(self.open_pairs[j])
        u, v = pair_decode(self.bases, e)
        u, v = int(u), int(v)
        adj = self.adj
        closed = self._closed_pids(u, v, adj[u] & adj[v])

        pc = self.pair_class
        pc[e] = 1
        if closed.size:
            pc[closed] = 2
            self._batch_remove(np.concatenate((closed, (e,))))
        else:
            self._batch_remove(np.array((e,), dtype=np.int64))

        adj[u, v >> 6] |= BITS64[v & 63]
        adj[v, u >> 6] |= BITS64[u & 63]
        deg = self.deg
        du = deg[u] = deg[u] + 1
        dv = deg[v] = deg[v] + 1
        if du >= self._nb_cap or dv >= self._nb_cap:
            self._grow_nb()
        self._nb[u, du - 1] = v
        self._nb[v, dv - 1] = u
        if du > self.max_degree or dv > self.max_degree:
            self.max_degree = int(max(du, dv))
        self.edge_history.append(e)
        self.i += 1
        return e, closed

    def _grow_nb(self) -> None:
        cap = min(self._nb_cap * 2, self.n)
        nb = np.zeros((self.n, cap), dtype=np.int32)
        nb[:, : self._nb_cap] = self._nb
        self._nb = nb
        self._nb_cap = cap

    def _batch_remove(self, pids: np.ndarray) -> None:
        # classes of removed pids are already non-open, so the tail keep-mask
        # below cannot resurrect them
        b = pids.size
        new_count = self.open_count - b
        op, pos = self.open_pairs, self.open_pos
        tail = op[new_count : self.open_count]
        keep = tail[self.pair_class[tail] == 0]
        holes = pos[pids]
        holes = holes[holes < new_count]
        op[holes] = keep
        pos[keep] = holes
        self.open_count = new_count


def init(n: int, seed: int) -> ProcessState:
    """Fresh process state: empty graph, every pair open."""
    return ProcessState(n, seed)


def stop_step(state: ProcessState, stop: StopRule, params=None) -> Optional[int]:
    """Target step count for a stop rule, or None for run-to-termination."""
    if isinstance(stop, Termination):
        return None
    if isinstance(stop, AfterSteps):
        return int(stop.steps)
    if isinstance(stop, AfterScaledTime):
        n = state.n
        return int(np.ceil(stop.t * n * n * n ** (-2.0 / 5.0)))
    raise ValueError(f"unknown stop rule {stop!r}")


def run(
    state: ProcessState,
    stop: StopRule = Termination(),
    observers: Sequence[Observer] = (),
) -> RunSummary:
    """Drive the process under a stop rule, invoking observers after each step."""
    target = stop_step(state, stop)
    t0 = time.perf_counter()
    if observers:
        while state.open_count > 0 and (target is None or state.i < target):
            chosen, closed = state.step()
            for obs in observers:
                try:
                    obs(state, chosen, closed)
                except Exception as exc:  # noqa: BLE001 - rewrap with context
                    raise ObserverError(
                        f"observer {obs!r} failed at step {state.i}"
                    ) from exc
    else:
        while state.open_count > 0 and (target is None or state.i < target):
            state.step()
    elapsed = time.perf_counter() - t0
    return RunSummary(
        n=state.n,
        seed=state.seed,
        steps=state.i,
        edges=state.i,
        max_degree=state.max_degree,
        min_degree=state.min_degree,
        open_remaining=int(state.open_count),
        terminated=state.open_count == 0,
        elapsed_s=elapsed,
    )


def is_closed_oracle(state: ProcessState, pair: tuple[int, int]) -> bool:
    """Exhaustive check: does some 4-set containing the pair induce a K4 once
    the pair is added? Intended for tests; cost O(n^2) per pair."""
    u, v = (pair[0], pair[1]) if pair[0] < pair[1] else (pair[1], pair[0])
    if state.is_edge(u, v):
        raise ValueError(f"pair {pair!r} is already an edge")
    n = state.n
    is_edge = state.is_edge
    for w in range(n):
        if w in (u, v) or not (is_edge(u, w) and is_edge(v, w)):
            continue
        for z in range(w + 1, n):
            if z in (u, v):
                continue
            if is_edge(u, z) and is_edge(v, z) and is_edge(w, z):
                return True
    return False


def witness_for(state: ProcessState, closed_pair: tuple[int, int], via_edge: tuple[int, int]) -> ClosureWitness:
    """Reconstruct the 4-set completed by (closed_pair, via_edge); raises if none."""
    x, y = closed_pair
    u, v = via_edge
    shared = {x, y} & {u, v}
    is_edge = state.is_edge
    if not shared:
        quad = (u, v, x, y)
        need = [(u, x), (u, y), (v, x), (v, y)]
        if all(is_edge(a, b) for a, b in need):
            return ClosureWitness(tuple(sorted(closed_pair)), tuple(sorted(via_edge)), tuple(sorted(quad)))
    else:
        s = shared.pop()
        a = x if y == s else y
        b = u if v == s else v
        if is_edge(a, b):
            for w in range(state.n):
                if w in (s, a, b):
                    continue
                if is_edge(w, s) and is_edge(w, a) and is_edge(w, b):
                    return ClosureWitness(
                        tuple(sorted(closed_pair)), tuple(sorted(via_edge)), tuple(sorted((s, a, b, w)))
                    )
    raise ValueError(f"{closed_pair} is not closed by {via_edge}")


def export_edges(state: ProcessState, fh: IO[str]) -> None:
    """Text edge list: header 'n m seed', then one '1-based u v' line per edge
    in insertion order (the insertion order is the process history)."""
    fh.write(f"{state.n} {len(state.edge_history)} {state.seed}\n")
    for pid in state.edge_history:
        u, v = state.pair_of(pid)
        fh.write(f"{u + 1} {v + 1}\n")


def load_edges(fh: IO[str]) -> tuple[int, int, list[tuple[int, int]]]:
    """Parse the edge-list format back to (n, seed, 0-based edges)."""
    head = fh.readline().split()
    n, m, seed = int(head[0]), int(head[1]), int(head[2])
    edges = []
    for _ in range(m):
        u, v = fh.readline().split()
        edges.append((int(u) - 1, int(v) - 1))
    return n, seed, edges
