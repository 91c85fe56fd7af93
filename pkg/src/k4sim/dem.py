"""Generic trajectory-verification harness for tracked process variables.

A variable spec packages the deterministic trajectory x(t), the expected
per-step gain/loss rates y+(t), y-(t), the error envelope f(t) with
half-budget h(t), a scaling S, and the bookkeeping parameters
(s_sigma, lambda, beta, tau, u_sigma, steps-per-unit-time s, horizon m).
`validate_spec` numerically checks every side condition the concentration
argument needs; `transform_increments` turns observed per-step gains and
losses into the four centered cumulative walks

    Z(+-)(i) = sum_j [ Y(+)(j) - (y+(t_j) -+ h(t_j)/s_sigma) S/s ]   etc.

which are super/submartingales with increments in [-M, N], M = 3 lambda S/s
and N = 2 beta^2 S / (s_sigma^2 lambda tau u_sigma); an excursion of a =
(beta/6)(S/s_sigma) in any of them is exactly what a trajectory escape
requires. `hoeffding_bound` gives the tail bound exp(-a^2/(3 m M N)) such
bounded walks obey.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .trajectory import ParamSet, error_envelope, open_fraction

Fn = Callable[[float], float]


@dataclass(frozen=True)
class DemVariableSpec:
    label: str
    x: Fn
    y_plus: Fn
    y_minus: Fn
    f: Fn
    h: Fn
    scale: float          # S
    s_sigma: float
    lam: float
    beta: float
    tau: float
    u_sigma: float
    steps_per_unit_time: float  # s
    horizon: int                # m

    def __post_init__(self):
        for name in ("scale", "s_sigma", "lam", "beta", "tau", "u_sigma",
                     "steps_per_unit_time"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")

    @property
    def t_end(self) -> float:
        return self.horizon / self.steps_per_unit_time


@dataclass
class CheckItem:
    name: str
    passed: bool
    observed: float
    required: float
    note: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed,
                "observed": self.observed, "required": self.required,
                "note": self.note}


@dataclass
class ChecklistReport:
    label: str
    items: list[CheckItem] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(it.passed for it in self.items)

    def failed(self) -> list[str]:
        return [it.name for it in self.items if not it.passed]

    def to_dict(self) -> dict:
        return {"label": self.label, "all_passed": self.all_passed,
                "items": [it.to_dict() for it in self.items]}


def _adaptive_simpson(fn: Fn, a: float, b: float, rel_tol: float = 1e-8,
                      min_width: float = 0.0) -> float:
    """Adaptive Simpson quadrature.

    The tolerance is relative to the integral's own magnitude (estimated on a
    coarse pass), so astronomically scaled integrands converge, and min_width
    stops refinement below the resolution at which the integrand is defined
    (finite-differenced integrands are pure noise below their step).
    """

    def simpson(lo, hi, flo, fmid, fhi):
        return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)

    if b <= a:
        return 0.0
    coarse = 0.0
    prev = a
    fprev = fn(a)
    for j in range(1, 65):
        t = a + (b - a) * j / 64.0
        ft = fn(t)
        coarse += simpson(prev, t, fprev, fn((prev + t) / 2.0), ft)
        prev, fprev = t, ft
    tol = max(abs(coarse) * rel_tol, 1e-300)

    def recurse(lo, hi, flo, fmid, fhi, whole, tol, depth):
        mid = (lo + hi) / 2.0
        lm = (lo + mid) / 2.0
        rm = (mid + hi) / 2.0
        flm = fn(lm)
        frm = fn(rm)
        left = simpson(lo, mid, flo, flm, fmid)
        right = simpson(mid, hi, fmid, frm, fhi)
        if (depth <= 0 or hi - lo <= min_width
                or abs(left + right - whole) <= 15.0 * tol):
            return left + right + (left + right - whole) / 15.0
        return (
            recurse(lo, mid, flo, flm, fmid, left, tol / 2.0, depth - 1)
            + recurse(mid, hi, fmid, frm, fhi, right, tol / 2.0, depth - 1)
        )

    fa, fb = fn(a), fn(b)
    mid = (a + b) / 2.0
    fm = fn(mid)
    whole = simpson(a, b, fa, fm, fb)
    return recurse(a, b, fa, fm, fb, whole, tol, 30)


def validate_spec(spec: DemVariableSpec, grid_points: int = 1000) -> ChecklistReport:
    """Numerically audit every side condition of the concentration argument.

    Derivatives of supplied functions are taken by central differences, the
    two integral bounds by adaptive Simpson on the differenced integrands.
    """
    rep = ChecklistReport(label=spec.label)
    s = spec.steps_per_unit_time
    m = spec.horizon
    t_end = spec.t_end
    ratio = spec.s_sigma * spec.lam / spec.beta

    req = max(15.0 * spec.u_sigma * spec.tau * ratio ** 2, 9.0 * ratio)
    rep.items.append(CheckItem("steps_scale_lower_bound", s >= req, s, req))

    lo = s / (18.0 * ratio)
    hi = s * spec.tau / 1944.0
    rep.items.append(CheckItem("horizon_window", lo < m <= hi, float(m), hi,
                               note=f"window ({lo!r}, {hi!r}]"))

    ts = [t_end * j / grid_points for j in range(grid_points + 1)]
    sup_y = max(max(spec.y_plus(t), spec.y_minus(t)) for t in ts)
    rep.items.append(CheckItem("gain_loss_sup", sup_y <= spec.lam, sup_y, spec.lam))

    low = min(min(spec.x(t), spec.y_plus(t), spec.y_minus(t), spec.f(t), spec.h(t))
              for t in ts)
    rep.items.append(CheckItem("non_negativity", low >= -1e-12, low, 0.0))

    dh = 1e-5 * t_end

    def x2(t):
        a = max(t - dh, 0.0)
        b = t + dh
        return abs((spec.x(b) - 2.0 * spec.x((a + b) / 2.0) + spec.x(a)) / ((b - a) / 2.0) ** 2)

    ix2 = _adaptive_simpson(x2, 0.0, t_end, min_width=16.0 * dh)
    rep.items.append(CheckItem("curvature_integral", ix2 <= spec.lam, ix2, spec.lam))

    def hprime(t):
        a = max(t - dh, 0.0)
        b = t + dh
        return abs(spec.h(b) - spec.h(a)) / (b - a)

    ih = _adaptive_simpson(hprime, 0.0, t_end, min_width=16.0 * dh)
    bound_h = spec.s_sigma * spec.lam
    rep.items.append(CheckItem("error_rate_integral", ih <= bound_h, ih, bound_h))

    h0 = spec.h(0.0)
    rep.items.append(CheckItem("error_rate_initial", h0 <= bound_h, h0, bound_h))

    # centered difference compared at the window midpoint; relative scale is
    # floored at 1 so zero crossings of x' do not blow up the quotient
    worst = 0.0
    for t in ts:
        a = max(t - dh, 0.0)
        b = min(t + dh, t_end) if t + dh > t_end else t + dh
        mid = (a + b) / 2.0
        dx = (spec.x(b) - spec.x(a)) / (b - a)
        target = spec.y_plus(mid) - spec.y_minus(mid)
        worst = max(worst, abs(dx - target) / max(1.0, abs(target)))
    rep.items.append(CheckItem("derivative_identity", worst <= 1e-6, worst, 1e-6))

    # cumulative integral of h, each grid cell refined until its Simpson value
    # stabilizes relative to f's local magnitude; the budget often holds with
    # equality, so the quadrature must stay well under the 1e-9 margin even
    # when f reaches e^50-scale values
    def cell_integral(lo, hi, scale):
        panels = 2
        prev = None
        while True:
            w = (hi - lo) / panels
            total = 0.0
            for j in range(panels):
                a = lo + j * w
                total += w / 6.0 * (spec.h(a) + 4.0 * spec.h(a + w / 2.0) + spec.h(a + w))
            if prev is not None and abs(total - prev) <= 1e-13 * scale + 1e-300:
                return total
            if panels >= 256:
                return total
            prev = total
            panels *= 2

    worst_f = spec.f(0.0) - spec.beta
    worst_rel = worst_f / max(abs(spec.f(0.0)), 1.0)
    acc = 0.0
    prev_t = 0.0
    for t in ts[1:]:
        acc += cell_integral(prev_t, t, max(abs(spec.f(t)), 1.0))
        prev_t = t
        margin = spec.f(t) - 2.0 * acc - spec.beta
        worst_f = min(worst_f, margin)
        worst_rel = min(worst_rel, margin / max(abs(spec.f(t)), 1.0))
    rep.items.append(CheckItem("error_budget", worst_rel >= -1e-9, worst_rel, -1e-9,
                               note=f"worst absolute margin {worst_f!r}"))
    return rep


@dataclass
class MartingaleAudit:
    Z_pp: np.ndarray
    Z_pm: np.ndarray
    Z_mp: np.ndarray
    Z_mm: np.ndarray
    M: float
    N: float
    a: float
    max_excursion: float
    increment_violations: int
    ratio_ok: bool  # M <= N/10
    crossed: bool   # some |Z| reached a
    frozen_at: Optional[int]


def transform_increments(
    spec: DemVariableSpec,
    observed: Sequence[tuple[float, float]],
    freeze_at: Optional[int] = None,
) -> MartingaleAudit:
    """Center observed per-step (gain, loss) pairs into the four walks.

    observed[i] = (Y+(i), Y-(i)) for steps i = 0..len-1; entries at or past
    freeze_at contribute zero (the caller freezes once its good event fails).
    """
    L = len(observed)
    if L > spec.horizon:
        raise ValueError(f"sequence of length {L} exceeds horizon {spec.horizon}")
    obs = np.asarray(observed, dtype=np.float64).reshape(L, 2) if L else np.zeros((0, 2))
    s = spec.steps_per_unit_time
    ts = np.arange(L, dtype=np.float64) / s
    yp = np.array([spec.y_plus(t) for t in ts])
    ym = np.array([spec.y_minus(t) for t in ts])
    hh = np.array([spec.h(t) for t in ts]) / spec.s_sigma
    unit = spec.scale / s
    live = np.ones(L, dtype=bool)
    if freeze_at is not None:
        live[freeze_at:] = False

    def walk(y_obs, y_fn, sign):
        inc = (y_obs - (y_fn + sign * hh) * unit) * live
        return inc, np.concatenate(([0.0], np.cumsum(inc)))

    # second superscript +: centering y - h/s_sigma (submartingale side);
    # second superscript -: centering y + h/s_sigma (supermartingale side)
    inc_pp, z_pp = walk(obs[:, 0], yp, -1.0)
    inc_pm, z_pm = walk(obs[:, 0], yp, +1.0)
    inc_mp, z_mp = walk(obs[:, 1], ym, -1.0)
    inc_mm, z_mm = walk(obs[:, 1], ym, +1.0)

    M = 3.0 * spec.lam * spec.scale / s
    N = (2.0 * spec.beta ** 2 / (spec.s_sigma ** 2 * spec.lam * spec.tau)) * (
        spec.scale / spec.u_sigma
    )
    a = (spec.beta / 6.0) * (spec.scale / spec.s_sigma)
    violations = 0
    for inc in (inc_pp, inc_pm, inc_mp, inc_mm):
        if L:
            violations += int(((inc < -M - 1e-12) | (inc > N + 1e-12)).sum())
    zs = (z_pp, z_pm, z_mp, z_mm)
    max_exc = max(float(np.abs(z).max()) for z in zs) if L else 0.0
    return MartingaleAudit(
        Z_pp=z_pp, Z_pm=z_pm, Z_mp=z_mp, Z_mm=z_mm,
        M=M, N=N, a=a,
        max_excursion=max_exc,
        increment_violations=violations,
        ratio_ok=M <= N / 10.0,
        crossed=max_exc >= a,
        frozen_at=freeze_at,
    )


def hoeffding_bound(a: float, m: float, M: float, N: float) -> float:
    """Tail bound exp(-a^2 / (3 m M N)) for an (M, N)-bounded supermartingale
    with M <= N/10; valid for 0 < a < m M (reported via ValueError otherwise)."""
    for name, val in (("a", a), ("m", m), ("M", M), ("N", N)):
        if val <= 0:
            raise ValueError(f"{name} must be positive, got {val}")
    return math.exp(-(a * a) / (3.0 * m * M * N))


def builtin_triple_specs(params: ParamSet) -> tuple[DemVariableSpec, DemVariableSpec, DemVariableSpec]:
    """The three ledger variables: open, intermediate, partial triple counts.

    Scalings are k^3, k^3 p, k^3 p^2; the envelope for each is the global
    error budget times the matching power of the open-pair density, and the
    error half-rate is its derivative over two, so the error budget identity
    holds with equality.
    """
    W = params.W
    n = float(params.n)
    eps = params.epsilon
    k3 = float(params.k) ** 3
    p = params.p
    common = dict(
        s_sigma=n ** (2.0 * eps),
        lam=n ** eps,
        tau=n ** eps,
        beta=1.0,
        u_sigma=params.u * n ** eps,
        steps_per_unit_time=params.steps_per_unit_time,
        horizon=params.m,
    )

    def q(t):
        return open_fraction(t)

    def f(t):
        return error_envelope(t, W)

    open_spec = DemVariableSpec(
        label="open_triples",
        x=lambda t: q(t) ** 3,
        y_plus=lambda t: 0.0,
        y_minus=lambda t: 240.0 * t ** 4 * q(t) ** 3,
        f=lambda t: f(t) * q(t) ** 2,
        h=lambda t: 0.5 * ((W - 32.0) * 5.0 * t ** 4 + W) * f(t) * q(t) ** 2,
        scale=k3,
        **common,
    )
    interm_spec = DemVariableSpec(
        label="intermediate_triples",
        x=lambda t: 2.0 * t * q(t) ** 2,
        y_plus=lambda t: 2.0 * q(t) ** 2,
        y_minus=lambda t: 320.0 * t ** 5 * q(t) ** 2,
        f=lambda t: f(t) * q(t),
        h=lambda t: 0.5 * ((W - 16.0) * 5.0 * t ** 4 + W) * f(t) * q(t),
        scale=k3 * p,
        **common,
    )
    partial_spec = DemVariableSpec(
        label="partial_triples",
        x=lambda t: 2.0 * t ** 2 * q(t),
        y_plus=lambda t: 4.0 * t * q(t),
        y_minus=lambda t: 160.0 * t ** 6 * q(t),
        f=f,
        h=lambda t: 0.5 * (5.0 * t ** 4 + 1.0) * W * f(t),
        scale=k3 * p * p,
        **common,
    )
    return open_spec, interm_spec, partial_spec
