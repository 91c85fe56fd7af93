"""Model parameters, the deterministic trajectory functions, and envelope monitors.

The process runs at density scale p = n^(-2/5) with scaled time t = i/(n^2 p).
Two functions drive every prediction and error band:

    open_fraction(t)  = exp(-16 t^5)      expected fraction of pairs still open
    error_envelope(t) = exp((t^5 + t) W)  multiplicative error budget

Two constant profiles are provided. Paper mode (epsilon=1/1000, W=500, mu
fixed by 2 W mu^5 = epsilon) keeps the envelope arithmetic faithful but is
numerically meaningful only at enormous n. Desk mode (epsilon=0.05, W=4,
mu=0.3, gamma=10) is an engineering profile usable at n <= 2^13; every
report flags which profile produced it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .process import ProcessState
from .rng import stream

DELTA = 1.0 / 7000.0
DESK_EPSILON = 0.05
DESK_W = 4.0
DESK_MU = 0.3
DESK_GAMMA = 10.0
PAPER_EPSILON = 1.0 / 1000.0
PAPER_W = 500.0


def open_fraction(t: float) -> float:
    """exp(-16 t^5): the predicted open-pair density at scaled time t."""
    return math.exp(-16.0 * t ** 5)


def error_envelope(t: float, W: float) -> float:
    """exp((t^5 + t) W): the multiplicative error budget at scaled time t."""
    return math.exp((t ** 5 + t) * W)


def gamma_formula(mu: float) -> float:
    return max(5.0 / (math.sqrt(DELTA) * mu ** 2.5), 150.0)


@dataclass(frozen=True)
class ParamSet:
    """Resolved constants for one run; log is natural throughout."""

    n: int
    epsilon: float
    mu: float
    W: float
    gamma: float
    mode: str  # "paper" | "desk" | "custom"

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        for name in ("epsilon", "mu", "W", "gamma"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def paper(cls, n: int, epsilon: float = PAPER_EPSILON, W: float = PAPER_W,
              mu: Optional[float] = None) -> "ParamSet":
        # mu maximal subject to 2 W mu^5 <= epsilon unless given explicitly;
        # unlike desk mode, the constraint is enforced here
        if mu is None:
            mu = (epsilon / (2.0 * W)) ** 0.2
        elif 2.0 * W * mu ** 5 > epsilon:
            raise ValueError(f"paper profile requires 2 W mu^5 <= epsilon; "
                             f"got {2.0 * W * mu ** 5} > {epsilon}")
        return cls(n=n, epsilon=epsilon, mu=mu, W=W, gamma=gamma_formula(mu), mode="paper")

    @classmethod
    def desk(cls, n: int, epsilon: float = DESK_EPSILON, W: float = DESK_W,
             mu: float = DESK_MU, gamma: float = DESK_GAMMA) -> "ParamSet":
        # gamma from the paper-mode formula puts the witness-set size u far
        # beyond n at any desk-scale n, so desk mode pins a small gamma instead
        return cls(n=n, epsilon=epsilon, mu=mu, W=W, gamma=gamma, mode="desk")

    # -- derived quantities -------------------------------------------------

    @property
    def ln_n(self) -> float:
        return math.log(self.n)

    @property
    def p(self) -> float:
        return float(self.n) ** (-2.0 / 5.0)

    @property
    def t_max(self) -> float:
        return self.mu * self.ln_n ** 0.2

    @property
    def steps_per_unit_time(self) -> float:
        return self.n * self.n * self.p

    @property
    def m(self) -> int:
        return math.ceil(self.steps_per_unit_time * self.t_max)

    @property
    def s_e(self) -> float:
        return float(self.n) ** (1.0 / 12.0 - self.epsilon)

    @property
    def delta(self) -> float:
        return DELTA

    @property
    def u(self) -> int:
        return math.ceil(self.gamma * self.n * self.p * self.t_max)

    @property
    def k(self) -> int:
        return math.ceil(self.u / 15.0)

    @property
    def constraint_ok(self) -> bool:
        """Whether 2 W mu^5 <= epsilon holds for this profile."""
        return 2.0 * self.W * self.mu ** 5 <= self.epsilon

    def q(self, t: float) -> float:
        return open_fraction(t)

    def f(self, t: float) -> float:
        return error_envelope(t, self.W)

    def step_of_time(self, t: float) -> int:
        return math.ceil(t * self.steps_per_unit_time)

    def time_of_step(self, i: int) -> float:
        return i / self.steps_per_unit_time

    def describe(self) -> dict:
        """Full resolved constants; embedded in every serialized report."""
        return {
            "mode": self.mode,
            "n": self.n,
            "epsilon": self.epsilon,
            "mu": self.mu,
            "W": self.W,
            "gamma": self.gamma,
            "delta": self.delta,
            "p": self.p,
            "t_max": self.t_max,
            "m": self.m,
            "s_e": self.s_e,
            "u": self.u,
            "k": self.k,
            "constraint_2Wmu5_le_epsilon": self.constraint_ok,
        }


def make_params(mode: str, n: int, epsilon: Optional[float] = None,
                W: Optional[float] = None, mu: Optional[float] = None,
                gamma: Optional[float] = None) -> ParamSet:
    """Profile constructor with optional overrides (overrides mark mode 'custom')."""
    overridden = any(v is not None for v in (epsilon, W, mu, gamma))
    if mode == "paper":
        base = ParamSet.paper(n, epsilon=epsilon if epsilon is not None else PAPER_EPSILON,
                              W=W if W is not None else PAPER_W, mu=mu)
        if gamma is not None:
            base = ParamSet(n=n, epsilon=base.epsilon, mu=base.mu, W=base.W,
                            gamma=gamma, mode="custom")
        elif overridden:
            base = ParamSet(n=n, epsilon=base.epsilon, mu=base.mu, W=base.W,
                            gamma=base.gamma, mode="custom")
        return base
    if mode == "desk":
        return ParamSet.desk(
            n,
            epsilon=epsilon if epsilon is not None else DESK_EPSILON,
            W=W if W is not None else DESK_W,
            mu=mu if mu is not None else DESK_MU,
            gamma=gamma if gamma is not None else DESK_GAMMA,
        )
    raise ValueError(f"unknown mode {mode!r}")


# -- log-space sanity bounds on the trajectory functions ---------------------


def q_chain_margins(params: ParamSet, grid: int = 200) -> dict:
    """Worst margins of 1 >= q(t) >= n^(-epsilon/2) over a t grid, in log space."""
    worst_upper = -math.inf  # max of log q (should be <= 0)
    worst_lower = math.inf   # min of log q + (eps/2) ln n (should be >= 0)
    for j in range(grid + 1):
        t = params.t_max * j / grid
        lq = -16.0 * t ** 5
        worst_upper = max(worst_upper, lq)
        worst_lower = min(worst_lower, lq + 0.5 * params.epsilon * params.ln_n)
    return {"max_log_q": worst_upper, "min_log_q_minus_floor": worst_lower}


def f_chain_margins(epsilon: float, W: float, mu: float, ln_n: float, grid: int = 200) -> dict:
    """Worst margins of 1 <= f q^2 <= f <= n^epsilon over a t grid, in log space.

    ln_n is taken directly so the chain can be checked at symbolic scales far
    beyond floating-point range for n itself.
    """
    t_max = mu * ln_n ** 0.2
    min_log_fq2 = math.inf
    max_log_f_minus_cap = -math.inf
    for j in range(grid + 1):
        t = t_max * j / grid
        lf = (t ** 5 + t) * W
        min_log_fq2 = min(min_log_fq2, lf - 32.0 * t ** 5)
        max_log_f_minus_cap = max(max_log_f_minus_cap, lf - epsilon * ln_n)
    return {"min_log_fq2": min_log_fq2, "max_log_f_minus_cap": max_log_f_minus_cap}


# -- envelope monitoring ------------------------------------------------------


@dataclass
class EnvelopeReport:
    steps_checked: int = 0
    violations_O: int = 0
    violations_deg: int = 0
    violations_codeg: int = 0
    violations_Cuv: int = 0
    violations_CC: int = 0
    samples_Cuv: int = 0
    samples_CC: int = 0
    worst_rel_dev: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "steps_checked": self.steps_checked,
                "violations_O": self.violations_O,
                "violations_deg": self.violations_deg,
                "violations_codeg": self.violations_codeg,
                "violations_Cuv": self.violations_Cuv,
                "violations_CC": self.violations_CC,
                "samples_Cuv": self.samples_Cuv,
                "samples_CC": self.samples_CC,
                "worst_rel_dev": self.worst_rel_dev,
                "params": self.params,
            },
            sort_keys=True,
        )


class EnvelopeMonitor:
    """Per-step observer recording how often the whp envelopes are breached.

    Checks, for each step i <= horizon (default m):
      * open-pair count against (1 +- 3 f/s_e) q(t) n^2/2,
      * max degree against 3 n p t_max,
      * max codegree against (ln n) n p^2 (maintained incrementally),
    and on a sampled stride, for `sample_pairs` random non-edge pairs,
      * closure-set size against (40 t^4 q +- 9 f/s_e) / p,
      * pairwise closure-set intersections against n^(-1/6) / p.

    Violations are counted, never raised: these are whp statements about the
    asymptotic process, so desk-scale breaches are data.
    """

    def __init__(self, params: ParamSet, sample_pairs: int = 64,
                 stride: Optional[int] = None, horizon: Optional[int] = None,
                 rng: Optional[np.random.Generator] = None):
        self.params = params
        self.sample_pairs = sample_pairs
        self.stride = stride if stride is not None else max(1, params.m // 256)
        self.horizon = horizon if horizon is not None else params.m
        self.rng = rng
        self.report = EnvelopeReport(params=params.describe())
        self._codeg: Optional[np.ndarray] = None
        self._max_codeg = 0
        self._worst = {"O": 0.0, "deg": 0.0, "codeg": 0.0, "Cuv": 0.0, "CC": 0.0}

    def __call__(self, state: ProcessState, chosen: int, closed: np.ndarray) -> None:
        if self._codeg is None:
            self._codeg = np.zeros(state.P, dtype=np.int32)
            if self.rng is None:
                self.rng = stream(state.seed, 1)  # analysis fork, not the run stream
        self._update_codegrees(state, chosen)
        if state.i > self.horizon:
            return
        p = self.params
        t = p.time_of_step(state.i)
        q = p.q(t)
        f = p.f(t)
        rep = self.report
        rep.steps_checked += 1

        center = q * state.n * state.n / 2.0
        half = 3.0 * f / p.s_e * center
        dev = abs(state.open_count - center)
        if dev > half:
            rep.violations_O += 1
        self._worst["O"] = max(self._worst["O"], dev / center)

        deg_bound = 3.0 * state.n * p.p * p.t_max
        if state.max_degree > deg_bound:
            rep.violations_deg += 1
        self._worst["deg"] = max(self._worst["deg"], state.max_degree / deg_bound)

        codeg_bound = p.ln_n * state.n * p.p * p.p
        if self._max_codeg > codeg_bound:
            rep.violations_codeg += 1
        self._worst["codeg"] = max(self._worst["codeg"], self._max_codeg / codeg_bound)

        if state.i % self.stride == 0:
            self._sampled_checks(state, t, q, f)
        rep.worst_rel_dev = dict(self._worst)

    def _update_codegrees(self, state: ProcessState, chosen: int) -> None:
        u, v = state.pair_of(chosen)
        n = state.n
        for a, b in ((u, v), (v, u)):
            nb = state.neighbors(b).astype(np.int64)
            nb = nb[nb != a]
            if nb.size == 0:
                continue
            lo = np.minimum(nb, a)
            hi = np.maximum(nb, a)
            pids = lo * (2 * n - lo - 1) // 2 + (hi - lo - 1)
            np.add.at(self._codeg, pids, 1)
            m = int(self._codeg[pids].max())
            if m > self._max_codeg:
                self._max_codeg = m

    def _sampled_checks(self, state: ProcessState, t: float, q: float, f: float) -> None:
        p = self.params
        rep = self.report
        inv_p = 1.0 / p.p
        center = 40.0 * t ** 4 * q * inv_p
        half = 9.0 * f / p.s_e * inv_p
        pids = self._sample_non_edges(state, self.sample_pairs)
        for pid in pids:
            size = len(state.closed_by(state.pair_of(int(pid))))
            if abs(size - center) > half:
                rep.violations_Cuv += 1
            rep.samples_Cuv += 1
            self._worst["Cuv"] = max(self._worst["Cuv"], abs(size - center) / inv_p)

        cc_bound = state.n ** (-1.0 / 6.0) * inv_p
        n_cc = max(1, self.sample_pairs // 4)
        if state.open_count >= 2:
            for _ in range(n_cc):
                idx = self.rng.choice(state.open_count, size=2, replace=False)
                a = state.pair_of(int(state.open_pairs[idx[0]]))
                b = state.pair_of(int(state.open_pairs[idx[1]]))
                inter = len(state.closed_by(a) & state.closed_by(b))
                if inter > cc_bound:
                    rep.violations_CC += 1
                rep.samples_CC += 1
                self._worst["CC"] = max(self._worst["CC"], inter / cc_bound)

    def _sample_non_edges(self, state: ProcessState, count: int) -> np.ndarray:
        out = []
        need = count
        while need > 0:
            draw = self.rng.integers(0, state.P, size=2 * need + 8)
            keep = draw[state.pair_class[draw] != 1][:need]
            out.append(keep)
            need -= keep.size
        return np.concatenate(out)
