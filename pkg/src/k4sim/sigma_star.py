"""Deterministic greedy construction of a tracking configuration on a set U.

Vertices are ranked by how many neighbors they have inside U (descending,
ties by id). Walking that order, three prefix stopping points are chosen
greedily: the first index where the accumulated neighborhoods-in-U reach
size 2k, then again for a second disjoint layer, then a third. High-degree
vertices (>= k p n^(5 eps) neighbors in U) form the exclusion set L.

If the third stopping point does not exist or sits beyond k p n^(-5 eps),
the classes A, B, C are just the lowest-id vertices of U clear of all
accumulated neighborhoods and of L. Otherwise the classes are carved out
of the three layers themselves, with A additionally avoiding everything
adjacent to the second-and-third-layer prefix vertices; the prefix
vertices form the exempt set I whose members, by construction, have
neighbors in at most one of A, B.

Infeasibility (some pool too small) is a first-class result, not a fault:
desk-scale constants routinely violate the size slack the construction
relies on at large n.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .pairs import bits_to_indices, mask_from_indices
from .process import ProcessState
from .trajectory import ParamSet
from .triples import Configuration


@dataclass
class SigmaStarResult:
    sigma: Optional[Configuration]
    I: tuple[int, ...]
    ell_A: float  # index (1-based count) or math.inf
    ell_B: float
    ell_C: float
    L: tuple[int, ...]
    branch: int  # 1 or 2
    feasible: bool
    reason: Optional[str] = None

    def to_json(self) -> str:
        d = {"branch": self.branch, "feasible": self.feasible}
        if self.sigma is not None:
            d.update(self.sigma.to_dict())
        else:
            d.update({"U": [], "A": [], "B": [], "C": []})
        d["I"] = [v + 1 for v in self.I]
        if self.reason:
            d["reason"] = self.reason
        return json.dumps(d, sort_keys=True)


def build_sigma_star(state: ProcessState, U, params: ParamSet) -> SigmaStarResult:
    """Greedy configuration for U; |U| must equal the parameter set's u."""
    uu = sorted(set(int(v) for v in U))
    if len(uu) != params.u:
        raise ValueError(f"|U| = {len(uu)} but params require u = {params.u}")
    if uu and (uu[0] < 0 or uu[-1] >= state.n):
        raise ValueError("U contains vertices outside [0, n)")
    n = state.n
    k = params.k
    u_mask = mask_from_indices(n, uu)
    deg_u = np.bitwise_count(state.adj & u_mask[None, :]).sum(axis=1).astype(np.int64)

    high = params.k * params.p * n ** (5.0 * params.epsilon)
    L = tuple(int(v) for v in np.flatnonzero(deg_u >= high))

    order = np.lexsort((np.arange(n), -deg_u))  # degree desc, id asc

    words = u_mask.size
    acc = np.zeros(words, dtype=np.uint64)
    n_a = np.zeros(words, dtype=np.uint64)
    n_b = np.zeros(words, dtype=np.uint64)
    n_c = np.zeros(words, dtype=np.uint64)
    ell_a = ell_b = ell_c = math.inf
    phase = 0
    layer = np.zeros(words, dtype=np.uint64)
    for j, v in enumerate(order, start=1):
        gain = (state.adj[v] & u_mask) & ~acc
        layer |= gain
        acc |= gain
        if phase <= 2 and int(np.bitwise_count(layer).sum()) >= 2 * k:
            if phase == 0:
                ell_a, n_a = j, layer
            elif phase == 1:
                ell_b, n_b = j, layer
            else:
                ell_c, n_c = j, layer
            phase += 1
            layer = np.zeros(words, dtype=np.uint64)
            if phase == 3:
                break
    if phase == 0:
        n_a = layer
    elif phase == 1:
        n_b = layer
    elif phase == 2:
        n_c = layer

    branch_cut = params.k * params.p * n ** (-5.0 * params.epsilon)
    if math.isinf(ell_c) or ell_c > branch_cut:
        return _branch1(state, uu, params, n_a, n_b, n_c, L, (ell_a, ell_b, ell_c))
    return _branch2(state, uu, params, order, n_a, n_b, n_c, L, (ell_a, ell_b, ell_c))


def _take(pool: list[int], k: int) -> Optional[list[int]]:
    return pool[:k] if len(pool) >= k else None


def _result(U, A, B, C, I, ells, L, branch, reason=None) -> SigmaStarResult:
    feasible = A is not None and B is not None and C is not None
    sigma = None
    if feasible:
        sigma = Configuration(U=tuple(U), A=tuple(A), B=tuple(B), C=tuple(C))
    return SigmaStarResult(
        sigma=sigma,
        I=tuple(I),
        ell_A=ells[0],
        ell_B=ells[1],
        ell_C=ells[2],
        L=tuple(L),
        branch=branch,
        feasible=feasible,
        reason=reason,
    )


def _branch1(state, uu, params, n_a, n_b, n_c, L, ells) -> SigmaStarResult:
    k = params.k
    avoid = n_a | n_b | n_c | mask_from_indices(state.n, L)
    avoided = set(bits_to_indices(avoid).tolist())
    pool = [v for v in uu if v not in avoided]
    if len(pool) < 3 * k:
        return _result(uu, None, None, None, (), ells, L, 1,
                       reason=f"need 3k={3*k} free vertices in U, have {len(pool)}")
    return _result(uu, pool[:k], pool[k : 2 * k], pool[2 * k : 3 * k], (), ells, L, 1)


def _branch2(state, uu, params, order, n_a, n_b, n_c, L, ells) -> SigmaStarResult:
    k = params.k
    ell_a, _, ell_c = int(ells[0]), ells[1], int(ells[2])
    I_A = [int(v) for v in order[:ell_a]]
    I_BC = [int(v) for v in order[ell_a:ell_c]]
    I = I_A + I_BC
    gamma_ibc = np.zeros(state.words, dtype=np.uint64)
    for v in I_BC:
        gamma_ibc |= state.adj[v]
    l_mask = mask_from_indices(state.n, L)
    a_pool = sorted(bits_to_indices(n_a & ~gamma_ibc & ~l_mask).tolist())
    b_pool = sorted(bits_to_indices(n_b & ~l_mask).tolist())
    c_pool = sorted(bits_to_indices(n_c & ~l_mask).tolist())
    A, B, C = _take(a_pool, k), _take(b_pool, k), _take(c_pool, k)
    reason = None
    if A is None or B is None or C is None:
        sizes = (len(a_pool), len(b_pool), len(c_pool))
        reason = f"layer pools too small for k={k}: {sizes}"
    return _result(uu, A, B, C, I, ells, L, 2, reason=reason)


@dataclass
class NeighborhoodReport:
    checked_outside: int
    violations_outside: list  # (vertex, |G(v) n K|, bound)
    checked_inside: int
    violations_inside: list  # vertices of I meeting both A and B

    @property
    def ok(self) -> bool:
        return not self.violations_outside and not self.violations_inside


def verify_neighborhood_bounds(
    result: SigmaStarResult, state: ProcessState, params: ParamSet
) -> NeighborhoodReport:
    """Post-hoc guarantees of the construction: every vertex outside I has at
    most (1/p) n^(10 eps) neighbors in K, and every vertex of I misses A or B
    entirely. Violations are reported, not raised."""
    if not result.feasible or result.sigma is None:
        raise ValueError("cannot verify an infeasible construction")
    sigma = result.sigma
    n = state.n
    k_mask = mask_from_indices(n, sorted(sigma.K))
    a_mask = mask_from_indices(n, sigma.A)
    b_mask = mask_from_indices(n, sigma.B)
    bound = (1.0 / params.p) * n ** (10.0 * params.epsilon)
    in_I = set(result.I)
    deg_k = np.bitwise_count(state.adj & k_mask[None, :]).sum(axis=1)
    bad_out = [
        (int(v), int(deg_k[v]), bound)
        for v in range(n)
        if v not in in_I and deg_k[v] > bound
    ]
    bad_in = []
    for v in result.I:
        da = int(np.bitwise_count(state.adj[v] & a_mask).sum())
        db = int(np.bitwise_count(state.adj[v] & b_mask).sum())
        if min(da, db) != 0:
            bad_in.append(int(v))
    return NeighborhoodReport(
        checked_outside=n - len(in_I),
        violations_outside=bad_out,
        checked_inside=len(result.I),
        violations_inside=bad_in,
    )
