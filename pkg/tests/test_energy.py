import math
from fractions import Fraction

from hypothesis import given, strategies as st
import pytest

from manetsim.energy import (
    Battery, EnergyModel, LinkEnergyParams, k_factor, packet_airtime, resultant_energy,
    tx_energy_link_model, tx_energy_time_model,
)
from manetsim.errors import EnergyNonPositiveError, ZeroReceptionProbabilityError


@pytest.mark.parametrize("e,k", [(15, 1), (7.5, 2), (5, 3), (3.75, 4), (2.5, 6)])
def test_k_factor_table(e, k):
    assert k_factor(e, 15) == pytest.approx(k, rel=1e-12)


def test_k_factor_rejects_empty_battery():
    with pytest.raises(EnergyNonPositiveError):
        k_factor(0.0, 15.0)
    with pytest.raises(EnergyNonPositiveError):
        k_factor(-1.0, 15.0)


@given(st.floats(0.01, 15.0), st.floats(0.01, 15.0))
def test_k_factor_decreasing_in_energy(a, b):
    if a < b:
        assert k_factor(a, 15.0) > k_factor(b, 15.0)


def test_airtime_two_rates():
    # exact rational reference
    ref = Fraction(512, 6_000_000) + Fraction(65536, 54_000_000)
    assert packet_airtime(512, 65536) == pytest.approx(float(ref), rel=1e-12)
    assert packet_airtime(0, 0) == 0.0


def test_airtime_rejects_negative():
    with pytest.raises(ValueError):
        packet_airtime(-1, 0)


def test_time_model_scales_with_current_and_voltage():
    b = Battery(level=10, voltage=2.0, current=0.5)
    assert tx_energy_time_model(600, 0, b) == pytest.approx(600 / 6e6, rel=1e-12)
    b2 = Battery(level=10, voltage=3.0, current=2.0)
    assert tx_energy_time_model(600, 0, b2) == pytest.approx(6 * 600 / 6e6, rel=1e-12)


def test_link_model_value():
    p = LinkEnergyParams(M=1000, P_i=0.1, R=1e6, p_c=0.5)
    assert tx_energy_link_model(p) == pytest.approx(1000 * 0.1 / (1e6 * 0.5), rel=1e-12)


def test_link_model_zero_reception_probability():
    with pytest.raises(ZeroReceptionProbabilityError):
        tx_energy_link_model(LinkEnergyParams(M=1, P_i=1, R=1, p_c=0))


def test_energy_model_modes():
    b = Battery(level=5)
    assert EnergyModel("time").cost(512, 0, b) == pytest.approx(512 / 6e6)
    link = EnergyModel("link", tx_power=0.2, data_rate=1e6, p_correct=1.0)
    assert link.cost(512, 488, b) == pytest.approx(1000 * 0.2 / 1e6)
    with pytest.raises(ValueError):
        EnergyModel("bogus")


def test_resultant_energy_sums_links():
    assert resultant_energy([0.1] * 10) == 1.0  # fsum is exact here
    assert resultant_energy([]) == 0.0
    with pytest.raises(ValueError):
        resultant_energy([1.0, -0.5])


def test_battery_drain_floors_at_zero():
    b = Battery(level=1.0)
    b.drain(0.4)
    b.drain(5.0)
    assert b.level == 0.0
    assert b.drained == pytest.approx(1.0)
    assert b.drain_count == 2
    assert not b.alive


def test_battery_rejects_out_of_range_level():
    with pytest.raises(ValueError):
        Battery(level=16.0)
    with pytest.raises(ValueError):
        Battery(level=-0.1)


@given(st.floats(0.0, 15.0), st.lists(st.floats(0.0, 2.0), max_size=40))
def test_battery_conservation(level, drains):
    b = Battery(level=level)
    for d in drains:
        b.drain(d)
    assert b.initial - b.level == pytest.approx(b.drained, rel=1e-9, abs=1e-12)
    assert b.level >= 0.0


def test_death_threshold_boundary():
    b = Battery(level=0.15, death_threshold=0.15)
    assert b.alive
    b.drain(1e-12)
    assert not b.alive
    assert math.isclose(b.level, 0.15 - 1e-12)
