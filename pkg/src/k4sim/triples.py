"""Configuration-attached triple ledgers with inductive add/remove/ignore rules.

A configuration fixes a vertex set U and three disjoint subsets A, B, C of
equal size k inside it. For (u, v, w) in A x B x C the tracker maintains:

    open set      uv, vw, uw all open,
    intermediate  uv, vw open and uw an edge,
    partial       uw, vw edges and uv open-or-closed, membership governed
                  by the rules below rather than by a closed form.

When the process adds edge e with the graph still at its pre-step value
G(i), a partial triple is added if it was intermediate, e = vw, uv is not
closed by e, and no other triple currently occupies the (u, v) slot; this
guarantees at most one partial triple per (u, v). An existing partial
triple (u, v, w) is then removed or ignored:

    case 1   e = uv: removed.
    case 2   e = xy closes uv, xy disjoint from uv: removed when
             min(|G(x) n G(y) n A|, |G(x) n G(y) n B|) <= k p n^(-20 eps),
             otherwise ignored (stays, counted).
    case 3   e = xy closes uv with shared vertex x, y the far endpoint:
             removed when |G(y) n K| <= (1/p) n^(-15 eps), or when some
             z in G(x) n G(y) has the non-shared endpoint of uv inside
             G(y) n G(z) n K with |G(y) n G(z) n K| <= k p n^(-20 eps);
             otherwise ignored.

All neighborhood tests use G(i), the graph before e is inserted. The three
latched bad events mark a configuration whose ledgers stop being
trustworthy: B1 (induced degree in K too large), B2 (too many pairs with
large codegree into both A and B), B3 (some pair participating in too many
closure quadruples). B2/B3 need quadratic scans and run on a check
cadence; B1 is maintained incrementally and exactly.

At desk-scale n the rule thresholds are typically below 1, which makes
some branches vacuous; the effective values are recorded in
`TripleTracker.thresholds` so reports stay interpretable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO, Optional

import numpy as np

from .pairs import bits_to_indices, mask_from_indices, pair_index, test_bit
from .process import PairClass, ProcessState
from .trajectory import ParamSet


class TrackerDesync(RuntimeError):
    """on_step was invoked out of order; the ledgers are no longer valid."""


@dataclass(frozen=True)
class Configuration:
    """Sigma = (U, (A, B, C)) with A, B, C disjoint equal-size subsets of U."""

    U: tuple[int, ...]
    A: tuple[int, ...]
    B: tuple[int, ...]
    C: tuple[int, ...]

    def __post_init__(self):
        a, b, c = set(self.A), set(self.B), set(self.C)
        u = set(self.U)
        if not (len(a) == len(self.A) and len(b) == len(self.B) and len(c) == len(self.C)):
            raise ValueError("duplicate vertices inside a class")
        if not (len(a) == len(b) == len(c)):
            raise ValueError("A, B, C must have equal sizes")
        if a & b or a & c or b & c:
            raise ValueError("A, B, C must be pairwise disjoint")
        if not (a | b | c) <= u:
            raise ValueError("A, B, C must be subsets of U")

    @property
    def k(self) -> int:
        return len(self.A)

    @property
    def K(self) -> frozenset[int]:
        return frozenset(self.A) | frozenset(self.B) | frozenset(self.C)

    def to_dict(self, one_based: bool = True) -> dict:
        off = 1 if one_based else 0
        return {
            "U": [v + off for v in self.U],
            "A": [v + off for v in self.A],
            "B": [v + off for v in self.B],
            "C": [v + off for v in self.C],
        }


@dataclass
class BadEventStatus:
    b1: bool = False
    b2: bool = False
    b3: bool = False
    first_step: dict = field(default_factory=dict)

    def latch(self, name: str, step: int) -> None:
        if not getattr(self, name):
            setattr(self, name, True)
            self.first_step[name] = step


@dataclass
class LedgerCounters:
    added: int = 0
    removed_case1: int = 0
    removed_R2: int = 0
    removed_R3a: int = 0
    removed_R3b: int = 0
    ignored_I2: int = 0
    ignored_I3: int = 0
    promoted: int = 0
    removed_open: int = 0
    removed_interm: int = 0


@dataclass
class TransitionRecord:
    """Per-step deltas, mirroring the cumulative counters."""

    promoted: int = 0
    removed_open: int = 0
    removed_interm: int = 0
    added: int = 0
    removed_case1: int = 0
    removed_R2: int = 0
    removed_R3a: int = 0
    removed_R3b: int = 0
    ignored_I2: int = 0
    ignored_I3: int = 0


_AB, _BC, _AC, _KK = 1, 2, 3, 4


class TripleTracker:
    """Observer maintaining the triple ledgers for one configuration."""

    def __init__(self, state: ProcessState, sigma: Configuration, params: ParamSet,
                 check_interval: Optional[int] = None):
        n = state.n
        if any(v < 0 or v >= n for v in sigma.U):
            raise ValueError("configuration vertices outside [0, n)")
        if state.i != 0:
            raise ValueError("tracker must be attached to a fresh state (step 0)")
        self.sigma = sigma
        self.params = params
        self.n = n
        k = sigma.k
        eps = params.epsilon
        self.thresholds = {
            "rule_codegree": k * params.p * n ** (-20.0 * eps),   # R2 / R3b / B2 pair test
            "rule_K_degree": (1.0 / params.p) * n ** (-15.0 * eps),  # R3a
            "bad_K_degree": k * params.p * n ** (5.0 * eps),      # B1
            "bad_pair_count": k * n ** (-20.0 * eps),             # B2
            "bad_quadruple": k * k * params.p * n ** (-15.0 * eps),  # B3
        }
        self.check_interval = (
            check_interval if check_interval is not None else max(1, params.m // 200)
        )

        self.a_set, self.b_set, self.c_set = set(sigma.A), set(sigma.B), set(sigma.C)
        self.k_list = sorted(self.a_set | self.b_set | self.c_set)
        self.k_mask = mask_from_indices(n, self.k_list)
        self.a_mask = mask_from_indices(n, sigma.A)
        self.b_mask = mask_from_indices(n, sigma.B)

        # role of every within-K pair id; 0 elsewhere
        self._role = np.zeros(state.P, dtype=np.int8)
        self._ab: dict[int, tuple[int, int]] = {}
        self._bc: dict[int, tuple[int, int]] = {}
        self._ac: dict[int, tuple[int, int]] = {}
        kl = self.k_list
        for ii, x in enumerate(kl):
            for y in kl[ii + 1 :]:
                self._role[pair_index(n, x, y)] = _KK
        for u in sigma.A:
            for v in sigma.B:
                p = pair_index(n, u, v)
                self._role[p] = _AB
                self._ab[int(p)] = (u, v)
            for w in sigma.C:
                p = pair_index(n, u, w)
                self._role[p] = _AC
                self._ac[int(p)] = (u, w)
        for v in sigma.B:
            for w in sigma.C:
                p = pair_index(n, v, w)
                self._role[p] = _BC
                self._bc[int(p)] = (v, w)

        self.open_set: set[tuple[int, int, int]] = {
            (u, v, w) for u in sigma.A for v in sigma.B for w in sigma.C
        }
        self.interm_set: set[tuple[int, int, int]] = set()
        self.partial_by_pair: dict[tuple[int, int], int] = {}
        self.pair_history: dict[tuple[int, int], int] = {}
        self.counters = LedgerCounters()
        self.bad = BadEventStatus()
        self._deg_k: dict[int, int] = {v: 0 for v in self.k_list}
        self._max_deg_k = 0
        self._expected_i = 1
        self._state = state

    # -- observer entry point ------------------------------------------------

    def __call__(self, state: ProcessState, chosen: int, closed: np.ndarray) -> TransitionRecord:
        return self.on_step(state, chosen, closed)

    def on_step(self, state: ProcessState, chosen: int, closed: np.ndarray) -> TransitionRecord:
        if state.i != self._expected_i:
            raise TrackerDesync(
                f"expected step {self._expected_i}, saw {state.i}; ledgers corrupt"
            )
        self._expected_i += 1
        rec = TransitionRecord()
        closed_set = set(int(p) for p in closed.tolist())
        chosen = int(chosen)
        cu, cv = state.pair_of(chosen)
        chosen_role = int(self._role[chosen])

        partial_snapshot = list(self.partial_by_pair.items())

        # (1) promotions: chosen is an A x C pair uw; uv, vw stay open because
        # neither can be closed by uw while the third pair is a non-edge
        if chosen_role == _AC:
            u, w = self._ac[chosen]
            for v in self.sigma.B:
                t = (u, v, w)
                if t in self.open_set:
                    self.open_set.discard(t)
                    self.interm_set.add(t)
                    rec.promoted += 1

        # (2) removals driven by the chosen edge itself
        partial_candidates: list[tuple[int, int, int]] = []
        if chosen_role == _AB:
            u, v = self._ab[chosen]
            for w in self.sigma.C:
                t = (u, v, w)
                if t in self.open_set:
                    self.open_set.discard(t)
                    rec.removed_open += 1
                if t in self.interm_set:
                    self.interm_set.discard(t)
                    rec.removed_interm += 1
        elif chosen_role == _BC:
            v, w = self._bc[chosen]
            for u in self.sigma.A:
                t = (u, v, w)
                if t in self.open_set:
                    self.open_set.discard(t)
                    rec.removed_open += 1
                if t in self.interm_set:
                    self.interm_set.discard(t)
                    rec.removed_interm += 1
                    partial_candidates.append(t)

        # (2') removals driven by pairs the chosen edge closed
        if closed_set:
            roles = self._role[closed]
            for pid, role in zip(closed.tolist(), roles.tolist()):
                if role == _AB:
                    u, v = self._ab[pid]
                    others = self.sigma.C
                elif role == _BC:
                    v, w = self._bc[pid]
                    others = self.sigma.A
                elif role == _AC:
                    u, w = self._ac[pid]
                    others = self.sigma.B
                else:
                    continue
                for o in others:
                    if role == _AB:
                        t = (u, v, o)
                    elif role == _BC:
                        t = (o, v, w)
                    else:
                        t = (u, o, w)
                    if t in self.open_set:
                        self.open_set.discard(t)
                        rec.removed_open += 1
                    if role != _AC and t in self.interm_set:
                        # intermediate triples keep uw as an edge, so only
                        # uv/vw closures can evict them
                        self.interm_set.discard(t)
                        rec.removed_interm += 1

        # (3) partial additions: vw arrived, uv not closed by it, slot free
        for (u, v, w) in partial_candidates:
            uv_pid = int(pair_index(self.n, u, v))
            if uv_pid in closed_set:
                continue
            if (u, v) in self.partial_by_pair:
                continue
            self.partial_by_pair[(u, v)] = w
            self.pair_history.setdefault((u, v), w)
            rec.added += 1

        # (4) partial removals / ignores on the pre-step membership
        for (u, v), w in partial_snapshot:
            uv_pid = int(pair_index(self.n, u, v))
            if uv_pid == chosen:
                del self.partial_by_pair[(u, v)]
                rec.removed_case1 += 1
                continue
            if uv_pid in closed_set:
                triggered = True
            elif state.pair_class[uv_pid] == PairClass.CLOSED:
                # uv was already closed before this step; the chosen edge can
                # still complete a 4-clique with it
                triggered = self._completes_k4(state, (u, v), (cu, cv))
            else:
                triggered = False
            if not triggered:
                continue
            shared = {u, v} & {cu, cv}
            if not shared:
                self._apply_case2(state, (u, v), (cu, cv), rec)
            else:
                self._apply_case3(state, (u, v), (cu, cv), shared.pop(), rec)

        # bad events
        if chosen_role != 0:
            dk = self._deg_k
            dk[cu] += 1
            dk[cv] += 1
            m = max(dk[cu], dk[cv])
            if m > self._max_deg_k:
                self._max_deg_k = m
            if m > self.thresholds["bad_K_degree"]:
                self.bad.latch("b1", state.i)
        if self.check_interval and state.i % self.check_interval == 0:
            self.evaluate_slow_bad_events(state)

        c = self.counters
        c.promoted += rec.promoted
        c.removed_open += rec.removed_open
        c.removed_interm += rec.removed_interm
        c.added += rec.added
        c.removed_case1 += rec.removed_case1
        c.removed_R2 += rec.removed_R2
        c.removed_R3a += rec.removed_R3a
        c.removed_R3b += rec.removed_R3b
        c.ignored_I2 += rec.ignored_I2
        c.ignored_I3 += rec.ignored_I3
        return rec

    # -- rule helpers ---------------------------------------------------------

    def _row_before(self, state: ProcessState, v: int, cu: int, cv: int) -> np.ndarray:
        """Adjacency row of v in G(i), with the just-inserted edge masked out."""
        row = state.adj[v]
        if v == cu:
            row = row.copy()
            row[cv >> 6] &= ~np.uint64(1 << (cv & 63))
        elif v == cv:
            row = row.copy()
            row[cu >> 6] &= ~np.uint64(1 << (cu & 63))
        return row

    def _completes_k4(self, state: ProcessState, uv: tuple[int, int], xy: tuple[int, int]) -> bool:
        """Would adding uv and xy to G(i) create a K4 containing both?"""
        u, v = uv
        x, y = xy
        shared = {u, v} & {x, y}
        if not shared:
            common = self._row_before(state, x, x, y) & self._row_before(state, y, x, y)
            return test_bit(common, u) and test_bit(common, v)
        s = shared.pop()
        a = u if v == s else v       # far endpoint of uv
        b = x if y == s else y       # far endpoint of xy
        # (a, b) is never the chosen pair itself, so the current graph agrees
        # with G(i) on it
        if not state.is_edge(a, b):
            return False
        wit = (
            self._row_before(state, u, x, y)
            & self._row_before(state, v, x, y)
            & self._row_before(state, b, x, y)
        )
        return bool(wit.any())

    def _apply_case2(self, state, uv, xy, rec) -> None:
        x, y = xy
        common = self._row_before(state, x, x, y) & self._row_before(state, y, x, y)
        ca = int(np.bitwise_count(common & self.a_mask).sum())
        cb = int(np.bitwise_count(common & self.b_mask).sum())
        if min(ca, cb) <= self.thresholds["rule_codegree"]:
            del self.partial_by_pair[uv]
            rec.removed_R2 += 1
        else:
            rec.ignored_I2 += 1

    def _apply_case3(self, state, uv, xy, shared_vertex, rec) -> None:
        u, v = uv
        x0 = shared_vertex
        y0 = xy[0] if xy[1] == x0 else xy[1]
        row_y0 = self._row_before(state, y0, xy[0], xy[1])
        deg_y0_K = int(np.bitwise_count(row_y0 & self.k_mask).sum())
        if deg_y0_K <= self.thresholds["rule_K_degree"]:
            del self.partial_by_pair[uv]
            rec.removed_R3a += 1
            return
        target = v if x0 == u else u
        row_x0 = self._row_before(state, x0, xy[0], xy[1])
        thr = self.thresholds["rule_codegree"]
        for z in bits_to_indices(row_x0 & row_y0).tolist():
            row_z = self._row_before(state, int(z), xy[0], xy[1])
            yzk = row_y0 & row_z & self.k_mask
            if test_bit(yzk, target) and int(np.bitwise_count(yzk).sum()) <= thr:
                del self.partial_by_pair[uv]
                rec.removed_R3b += 1
                return
        rec.ignored_I3 += 1

    # -- queries ---------------------------------------------------------------

    def counts(self) -> tuple[int, int, int, int]:
        """(open, intermediate, partial, partial-with-uv-still-open)."""
        state = self._state
        partial_open = 0
        for (u, v) in self.partial_by_pair:
            if state.pair_class[pair_index(self.n, u, v)] == PairClass.OPEN:
                partial_open += 1
        return (
            len(self.open_set),
            len(self.interm_set),
            len(self.partial_by_pair),
            partial_open,
        )

    @property
    def partial_set(self) -> set[tuple[int, int, int]]:
        return {(u, v, w) for (u, v), w in self.partial_by_pair.items()}

    def bad_events(self) -> BadEventStatus:
        return self.bad

    def finalize(self, state: ProcessState) -> BadEventStatus:
        """Run the slow bad-event scans once more at the stop step."""
        self.evaluate_slow_bad_events(state)
        return self.bad

    # -- slow bad-event scans ----------------------------------------------------

    def evaluate_slow_bad_events(self, state: ProcessState) -> None:
        if not self.bad.b2 and self._b2_count(state) > self.thresholds["bad_pair_count"]:
            self.bad.latch("b2", state.i)
        if not self.bad.b3:
            _, per_pair_max, _ = xi_quadruple_stats(state, self.sigma)
            if per_pair_max > self.thresholds["bad_quadruple"]:
                self.bad.latch("b3", state.i)

    def _b2_count(self, state: ProcessState) -> int:
        """Number of vertex pairs with codegree >= rule threshold into both A and B."""
        thr = self.thresholds["rule_codegree"]
        n = state.n
        unpacked = np.unpackbits(state.adj.view(np.uint8), bitorder="little").reshape(n, -1)
        ma = unpacked[:, list(self.sigma.A)].astype(np.float32)
        mb = unpacked[:, list(self.sigma.B)].astype(np.float32)
        ca = ma @ ma.T
        cb = mb @ mb.T
        hit = np.minimum(ca, cb) >= thr
        return int(np.triu(hit, 1).sum())


def attach(state: ProcessState, sigma: Configuration, params: ParamSet,
           check_interval: Optional[int] = None) -> TripleTracker:
    """Bind a fresh triple tracker to a step-0 state; use it as a run observer."""
    return TripleTracker(state, sigma, params, check_interval=check_interval)


def xi_quadruple_stats(
    state: ProcessState, sigma: Configuration
) -> tuple[int, int, Optional[tuple[int, int]]]:
    """Count closure quadruples (u, v, w, z) in A x B x C x [n]: z outside the
    triple, with uw, zu, zv, zw all edges. Returns (total, the largest number
    of quadruples any single pair participates in via those four roles, and
    that pair)."""
    n = state.n
    b_mask = mask_from_indices(n, sigma.B)
    c_mask = mask_from_indices(n, sigma.C)
    per_pair: dict[int, int] = {}
    total = 0

    def bump(a, b, amt):
        pid = int(pair_index(n, min(a, b), max(a, b)))
        per_pair[pid] = per_pair.get(pid, 0) + amt

    for u in sigma.A:
        ws = bits_to_indices(state.adj[u] & c_mask)
        for w in ws.tolist():
            zrow = state.adj[u] & state.adj[w]
            for z in bits_to_indices(zrow).tolist():
                vs = bits_to_indices(state.adj[z] & b_mask)
                cnt = 0
                for v in vs.tolist():
                    if z == v:
                        continue
                    cnt += 1
                    bump(z, v, 1)
                if cnt:
                    total += cnt
                    bump(u, w, cnt)
                    bump(z, u, cnt)
                    bump(z, w, cnt)
    if not per_pair:
        return 0, 0, None
    pid, best = max(per_pair.items(), key=lambda kv: (kv[1], -kv[0]))
    return total, best, state.pair_of(pid)


def t_u_count(state: ProcessState, U) -> int:
    """Open pairs inside U whose addition completes a triangle within U."""
    uu = sorted(set(int(v) for v in U))
    if any(v < 0 or v >= state.n for v in uu):
        raise ValueError("U contains vertices outside [0, n)")
    u_mask = mask_from_indices(state.n, uu)
    count = 0
    pc = state.pair_class
    for ii, a in enumerate(uu):
        row_a = state.adj[a]
        for b in uu[ii + 1 :]:
            if pc[pair_index(state.n, a, b)] != PairClass.OPEN:
                continue
            if bool((row_a & state.adj[b] & u_mask).any()):
                count += 1
    return count


class TriangleLowerBoundMonitor:
    """Checkpoint observer for the triangle-completion lower bound on one U.

    Records, at a step stride, whether the number of triangle-completing open
    pairs inside U falls below delta * u^3 * (t p)^2 * q(t). The reference
    window starts at scaled time 1; at desk scale that window is usually
    empty, so the monitor also keeps the raw trajectory for inspection.
    """

    def __init__(self, U, params: ParamSet, stride: Optional[int] = None):
        self.U = sorted(int(v) for v in U)
        self.params = params
        self.stride = stride if stride is not None else max(1, params.m // 50)
        self.rows: list[tuple[int, float, int, float]] = []
        self.violations = 0

    def __call__(self, state: ProcessState, chosen: int, closed: np.ndarray) -> None:
        if state.i % self.stride != 0:
            return
        p = self.params
        t = p.time_of_step(state.i)
        bound = p.delta * len(self.U) ** 3 * (t * p.p) ** 2 * p.q(t)
        observed = t_u_count(state, self.U)
        self.rows.append((state.i, t, observed, bound))
        if t >= 1.0 and state.i <= p.m and observed < bound:
            self.violations += 1


class LedgerCSV:
    """Streams tracker counts as CSV rows: step,t,open,interm,partial,partial_open,b1,b2,b3."""

    HEADER = "step,t,open,interm,partial,partial_open,b1,b2,b3"

    def __init__(self, tracker: TripleTracker, fh: IO[str], stride: int = 1):
        self.tracker = tracker
        self.fh = fh
        self.stride = max(1, stride)
        fh.write(self.HEADER + "\n")
        self._row(0)

    def _row(self, step: int) -> None:
        t = self.tracker.params.time_of_step(step)
        o, m, p, po = self.tracker.counts()
        b = self.tracker.bad
        self.fh.write(
            f"{step},{t!r},{o},{m},{p},{po},{int(b.b1)},{int(b.b2)},{int(b.b3)}\n"
        )

    def __call__(self, state: ProcessState, chosen: int, closed: np.ndarray) -> None:
        if state.i % self.stride == 0:
            self._row(state.i)
