import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from k4sim import PmInterval, contains, product_envelope, reciprocal_envelope


class TestContains:
    def test_nested(self):
        assert contains(PmInterval(1, 1), PmInterval(1, 0.5))

    def test_not_nested(self):
        assert not contains(PmInterval(1, 0.5), PmInterval(1, 1))

    def test_degenerate(self):
        assert contains(PmInterval(0, 0), PmInterval(0, 0))

    def test_negative_radius_rejected(self):
        with pytest.raises(ValueError):
            PmInterval(0, -1e-9)


class TestReciprocal:
    def test_zero(self):
        computed, claimed = reciprocal_envelope(0.0)
        assert computed.lo == computed.hi == 1.0
        assert claimed.center == 1.0 and claimed.radius == 0.0
        assert contains(claimed, computed)

    def test_half(self):
        computed, claimed = reciprocal_envelope(0.5)
        assert math.isclose(computed.lo, 2.0 / 3.0)
        assert math.isclose(computed.hi, 2.0)
        assert (claimed.lo, claimed.hi) == (0.0, 2.0)
        assert contains(claimed, computed)

    def test_domain(self):
        with pytest.raises(ValueError):
            reciprocal_envelope(0.51)
        with pytest.raises(ValueError):
            reciprocal_envelope(-0.01)

    def test_grid(self):
        for k in range(51):
            computed, claimed = reciprocal_envelope(0.01 * k)
            assert contains(claimed, computed), f"x={0.01 * k}"


class TestProductEnvelope:
    def test_worked_example(self):
        one, _ = product_envelope(x=1, y=0, f_x=0.1, f_y=0, g=0.1, h=0.4)
        assert one.hypothesis_met and one.included
        assert math.isclose(one.computed.lo, 0.81)
        assert math.isclose(one.computed.hi, 1.21)
        assert (one.claimed.lo, one.claimed.hi) == (0.6, 1.4)

    def test_tight_equality(self):
        one, two = product_envelope(x=1, y=1, f_x=0, f_y=0, g=0, h=0)
        assert one.hypothesis_met and one.included
        assert two.hypothesis_met and two.included

    def test_hypothesis_not_met_is_reported(self):
        one, _ = product_envelope(x=1, y=0, f_x=1, f_y=0, g=1, h=0.1)
        assert not one.hypothesis_met and one.included is None

    def test_rejects_bad_g(self):
        with pytest.raises(ValueError):
            product_envelope(1, 1, 0, 0, 1.5, 1)

    @given(
        x=st.floats(0, 50),
        y=st.floats(0, 50),
        f_x=st.floats(0, 10),
        f_y=st.floats(0, 10),
        g=st.floats(0, 1),
        scale=st.floats(1.0, 4.0),
    )
    @settings(max_examples=400)
    def test_inclusion_whenever_hypothesis_holds(self, x, y, f_x, f_y, g, scale):
        # h built to satisfy each hypothesis with the given headroom
        h1 = 2.0 * scale * (f_x + x * g)
        h2 = 2.0 * scale * (x * f_y + y * f_x + f_x * f_y + x * y * g)
        one, _ = product_envelope(x, y, f_x, f_y, g, h1)
        _, two = product_envelope(x, y, f_x, f_y, g, h2)
        assert one.hypothesis_met and one.included
        assert two.hypothesis_met and two.included
