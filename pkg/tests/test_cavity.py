import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from admr_sim import bloch, cavity as cav
from admr_sim.cavity import DiamondSample, MirrorPair
from admr_sim.errors import NegativeConcentration, ParameterError, UnityRoundTrip

FIG3 = MirrorPair(0.948, 0.998)

# Oracle: the shipped fig3a parameters pushed through the loss/finesse/buildup
# formulas with plain floats (see notes in each test).
FIG3_NV_LOSS = 0.16e-9 * 1.76e20 * 3.1e-15 * 2.6  # 2.269696e-4
FIG3_ALPHA = 0.0781 + 0.006 + FIG3_NV_LOSS


def test_ppb_conversion():
    assert cav.ppb_to_density(0.0) == 0.0
    assert cav.ppb_to_density(0.16) == pytest.approx(2.9e10, rel=0.05)
    assert cav.ppb_to_density(70.8) == pytest.approx(1.24608e13, rel=1e-12)
    with pytest.raises(NegativeConcentration):
        cav.ppb_to_density(-1.0)
    with pytest.raises(NegativeConcentration):
        DiamondSample(nv_ppb=-0.1)


def test_loss_decomposition():
    s = DiamondSample()
    assert cav.propagation_loss(s, 1.0) == pytest.approx(FIG3_ALPHA, rel=1e-14)
    assert cav.propagation_loss(s, 1.0) == pytest.approx(0.0843, abs=5e-5)
    assert s.nv_loss == pytest.approx(9e-5 * 2.6, rel=0.05)
    assert cav.propagation_loss(s, 0.0) == pytest.approx(0.0841, rel=1e-14)
    assert cav.propagation_loss(s.with_nv(0.0), 0.37) == pytest.approx(0.0841, rel=1e-14)
    with pytest.raises(ParameterError):
        cav.propagation_loss(s, 1.2)


def test_finesse_values():
    assert cav.finesse(FIG3, 0.0) == pytest.approx(113.4, abs=0.5)
    assert cav.finesse(FIG3, FIG3_ALPHA) == pytest.approx(45.1, abs=0.5)
    assert cav.finesse(FIG3, 800.0) == pytest.approx(0.0, abs=1e-150)
    with pytest.raises(UnityRoundTrip):
        cav.finesse(MirrorPair(0.9, 1.0), -math.log(1 / 0.9))


def test_fig3_buildup_and_pump_rate():
    rho = math.sqrt(0.948 * 0.998 * math.exp(-FIG3_ALPHA))
    expected = 0.4 * 0.052 / (1 - rho) ** 2
    p_cav = cav.intracavity_power(0.4, FIG3, FIG3_ALPHA)
    assert p_cav == pytest.approx(expected, rel=1e-13)
    assert p_cav == pytest.approx(4.6, rel=0.02)
    assert p_cav / 0.4 == pytest.approx(11.5, rel=0.02)
    assert cav.pump_rate(p_cav, DiamondSample()) == pytest.approx(0.34, rel=0.02)
    assert cav.pump_rate(1.0, DiamondSample()) == pytest.approx(0.075)
    assert cav.pump_rate(0.0, DiamondSample()) == 0.0
    assert cav.intracavity_power(0.0, FIG3, FIG3_ALPHA) == 0.0


def test_fig3_output_regression(rates):
    # pinned after checking the chain by hand: Gamma_p from the frozen
    # buildup, rho_g from the five-level solve at Omega = 0
    config = cav.CavityConfig()
    gp = cav.frozen_pump_rate(0.4, config)
    assert gp == pytest.approx(0.3425879754994686, rel=1e-12)
    rho_g = bloch.steady_state(rates, bloch.DrivePoint(0.0, gp)).rho_g
    assert rho_g == pytest.approx(0.9691725142800187, rel=1e-10)
    alpha = cav.propagation_loss(config.sample, rho_g)
    assert cav.transmitted_power(0.4, FIG3, alpha) == pytest.approx(0.00839775388687818, rel=1e-9)
    assert cav.reflected_power(0.4, FIG3, alpha) == pytest.approx(0.022197812834464203, rel=1e-9)


def test_symmetric_lossless_cavity():
    m = MirrorPair(0.97, 0.97)
    assert cav.transmitted_power(1.3, m, 0.0) == pytest.approx(1.3, rel=1e-12)
    assert cav.reflected_power(1.3, m, 0.0) == pytest.approx(0.0, abs=1e-15)


def test_impedance_matched_reflection_vanishes():
    alpha = 0.05
    m = MirrorPair(0.999 * math.exp(-alpha), 0.999)
    assert cav.reflected_power(0.5, m, alpha) == pytest.approx(0.0, abs=1e-15)


def test_channel_dispatch():
    assert cav.cavity_power(1.0, FIG3, 0.1, "transmit") == cav.transmitted_power(1.0, FIG3, 0.1)
    assert cav.cavity_power(1.0, FIG3, 0.1, "reflect") == cav.reflected_power(1.0, FIG3, 0.1)
    with pytest.raises(ParameterError):
        cav.cavity_power(1.0, FIG3, 0.1, "sideways")


mirrors = st.builds(MirrorPair, r1=st.floats(0.5, 0.9999), r2=st.floats(0.5, 1.0))


@settings(max_examples=200, deadline=None)
@given(mirrors, st.floats(1e-6, 2.0), st.floats(0.0, 10.0))
def test_energy_bound(m, alpha, p_in):
    total = cav.transmitted_power(p_in, m, alpha) + cav.reflected_power(p_in, m, alpha)
    assert total <= p_in * (1 + 1e-12)
    assert cav.transmitted_power(p_in, m, alpha) >= 0
    assert cav.reflected_power(p_in, m, alpha) >= 0


@settings(max_examples=200, deadline=None)
@given(mirrors, st.floats(0.0, 10.0))
def test_lossless_energy_conservation(m, p_in):
    total = cav.transmitted_power(p_in, m, 0.0) + cav.reflected_power(p_in, m, 0.0)
    assert total == pytest.approx(p_in, rel=1e-9, abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(mirrors, st.floats(0.0, 1.0), st.floats(1e-3, 1.0))
def test_finesse_monotonicity(m, alpha, d):
    assert cav.finesse(m, alpha + d) < cav.finesse(m, alpha)
    better = MirrorPair(m.r1 + (1 - m.r1) * 0.5, m.r2)
    assert cav.finesse(better, alpha + d) > cav.finesse(m, alpha + d)


@settings(max_examples=100, deadline=None)
@given(mirrors, st.floats(1e-3, 1.0), st.floats(0.0, 5.0), st.floats(1.5, 4.0))
def test_outputs_linear_in_input_power(m, alpha, p_in, k):
    for f in (cav.transmitted_power, cav.reflected_power, cav.intracavity_power):
        assert f(k * p_in, m, alpha) == pytest.approx(k * f(p_in, m, alpha), rel=1e-12, abs=1e-300)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1000), st.floats(0, 1), st.floats(0, 1))
def test_loss_affine_and_monotone(nv_ppb, g1, g2):
    s = DiamondSample(nv_ppb=nv_ppb)
    lo, hi = sorted((g1, g2))
    assert cav.propagation_loss(s, lo) <= cav.propagation_loss(s, hi)
    mid = cav.propagation_loss(s, 0.5 * (lo + hi))
    ends = 0.5 * (cav.propagation_loss(s, lo) + cav.propagation_loss(s, hi))
    assert mid == pytest.approx(ends, rel=1e-12)
    assert cav.propagation_loss(s.with_nv(nv_ppb + 1.0), hi) >= cav.propagation_loss(s, hi)


def test_balanced_sample_doubles_nv_loss():
    s = DiamondSample(alpha0_abs=0.0).with_nv(70.8, nv_balanced=True)
    assert s.alpha0_abs == s.nv_loss
    assert cav.propagation_loss(s, 1.0) == pytest.approx(2 * s.nv_loss + 0.006, rel=1e-14)


def test_vectorized_loss():
    out = cav.propagation_loss(DiamondSample(), np.array([0.0, 1.0]))
    np.testing.assert_allclose(out, [0.0841, FIG3_ALPHA], rtol=1e-14)
