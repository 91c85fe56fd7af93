"""Center-radius interval algebra and executable inclusion checks.

An interval a +- b denotes [a - b, a + b]. The product checks below
evaluate exact interval products by endpoint enumeration (exact for
products of intervals) and compare them against claimed envelopes; when a
check's hypothesis fails the report records that instead of asserting.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as iproduct

REL_SLACK = 1e-12


@dataclass(frozen=True)
class PmInterval:
    center: float
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError(f"radius must be non-negative, got {self.radius}")

    @property
    def lo(self) -> float:
        return self.center - self.radius

    @property
    def hi(self) -> float:
        return self.center + self.radius


def contains(outer: PmInterval, inner: PmInterval, slack: float = 0.0) -> bool:
    """True iff inner is a subset of outer, up to an absolute slack.

    A relative floating-point slack of REL_SLACK on the outer endpoints is
    always granted on top of the caller's absolute slack.
    """
    eps = slack + REL_SLACK * max(abs(outer.lo), abs(outer.hi), 1.0)
    return outer.lo - eps <= inner.lo and inner.hi <= outer.hi + eps


def _exact_product(*intervals: PmInterval) -> PmInterval:
    pts = [ [iv.lo, iv.hi] for iv in intervals ]
    vals = [float(a) for a in (_prod(c) for c in iproduct(*pts))]
    lo, hi = min(vals), max(vals)
    return PmInterval((lo + hi) / 2.0, (hi - lo) / 2.0)


def _prod(xs):
    out = 1.0
    for x in xs:
        out *= x
    return out


def reciprocal_envelope(x: float) -> tuple[PmInterval, PmInterval]:
    """Exact interval {1/(1+s) : |s| <= x} and the claimed cover 1 +- 2x.

    Valid for 0 <= x <= 1/2; the caller asserts contains(claimed, computed).
    """
    if not 0.0 <= x <= 0.5:
        raise ValueError(f"x must be in [0, 1/2], got {x}")
    lo = 1.0 / (1.0 + x)
    hi = 2.0 if x == 0.5 else 1.0 / (1.0 - x)
    computed = PmInterval((lo + hi) / 2.0, (hi - lo) / 2.0)
    return computed, PmInterval(1.0, 2.0 * x)


@dataclass(frozen=True)
class ProductReport:
    """Outcome of one product-envelope evaluation."""

    hypothesis_met: bool
    included: bool | None  # None when the hypothesis failed (nothing asserted)
    computed: PmInterval | None
    claimed: PmInterval | None


def product_envelope(
    x: float, y: float, f_x: float, f_y: float, g: float, h: float
) -> tuple[ProductReport, ProductReport]:
    """Evaluate both product inclusion forms.

    Form one: (x +- f_x)(1 +- g) inside x +- h whenever f_x + x*g <= h/2.
    Form two: (x +- f_x)(y +- f_y)(1 +- g) inside x*y +- h whenever
    x*f_y + y*f_x + f_x*f_y + x*y*g <= h/2. All inputs non-negative, g <= 1.
    """
    for name, val in (("x", x), ("y", y), ("f_x", f_x), ("f_y", f_y), ("g", g), ("h", h)):
        if val < 0:
            raise ValueError(f"{name} must be non-negative, got {val}")
    if g > 1:
        raise ValueError(f"g must be at most 1, got {g}")

    def report(hyp_ok: bool, factors, center) -> ProductReport:
        if not hyp_ok:
            return ProductReport(False, None, None, None)
        computed = _exact_product(*factors)
        claimed = PmInterval(center, h)
        return ProductReport(True, contains(claimed, computed), computed, claimed)

    one = report(
        f_x + x * g <= h / 2.0,
        (PmInterval(x, f_x), PmInterval(1.0, g)),
        x,
    )
    two = report(
        x * f_y + y * f_x + f_x * f_y + x * y * g <= h / 2.0,
        (PmInterval(x, f_x), PmInterval(y, f_y), PmInterval(1.0, g)),
        x * y,
    )
    return one, two
