"""Tests for the KL-rate detectability metrics and parameter sweeps."""

import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import constants

from gravispec.detectability import (
    T_INFINITE,
    contour_sweep,
    kl_rate,
    kl_snr,
    t_min_estimates,
    t_required,
)
from gravispec.single_mass import SingleMassParams

OMEGA_M = 2 * math.pi * 0.01  # 10 mHz device

# strong-measurement room-temperature configuration (Lambda = 2pi x 350 Hz,
# T = 300 K, Q = 3e6)
STRONG = SingleMassParams(
    omega_sn=5.7,
    gamma=1.0 / (2 * 3e6),
    lam=2 * math.pi * 350.0 / OMEGA_M,
    n_th=constants.k * 300.0 / (constants.hbar * OMEGA_M * 3e6),
    zeta=math.pi / 2,
    tau=0.0,
    omega_m_si=OMEGA_M,
)

# low-temperature weak-measurement configuration (Lambda/2pi = 57 mHz,
# T = 1 mK, Q = 1e7)
WEAK = SingleMassParams(
    omega_sn=5.7, gamma=5e-8, lam=5.7,
    n_th=constants.k * 1e-3 / (constants.hbar * OMEGA_M * 1e7),
    zeta=math.pi / 2, tau=0.0, omega_m_si=OMEGA_M,
)


def test_zero_self_attraction_rate_is_zero():
    p = STRONG.without_feedback()
    assert kl_rate(p) == 0.0
    assert t_required(p) == T_INFINITE


def test_kl_snr_linear_in_observation_time():
    p = replace(STRONG, tau=0.5 * OMEGA_M)
    a = kl_snr(p, 1e4)
    b = kl_snr(p, 2e4)
    assert b == pytest.approx(2.0 * a, rel=1e-12)
    with pytest.raises(ValueError):
        kl_snr(p, 0.0)


def test_delayed_strong_measurement_values():
    # frozen from this implementation's exact pipeline (regression oracle);
    # the KL rate definition is T int dW/2pi (dS/(S_th + S_QG))^2
    got_half = kl_snr(replace(STRONG, tau=0.5 * OMEGA_M), 1e4)
    got_one = kl_snr(replace(STRONG, tau=1.0 * OMEGA_M), 1e4)
    assert got_half == pytest.approx(4.81, rel=0.02)
    assert got_one == pytest.approx(37.0, rel=0.02)
    # no-delay baseline is many orders of magnitude smaller
    assert kl_snr(STRONG, 1e4) < 1e-6


def test_rate_monotone_in_thermal_occupation():
    taus = 0.5 * OMEGA_M
    rates = [kl_rate(replace(STRONG, tau=taus, n_th=STRONG.n_th * m))
             for m in (0.5, 1.0, 2.0, 4.0)]
    assert all(a > b for a, b in zip(rates, rates[1:]))


def test_t_required_consistency():
    p = replace(STRONG, tau=0.5 * OMEGA_M)
    t_req = t_required(p)
    assert kl_snr(p, t_req) == pytest.approx(1.0, rel=1e-6)


def test_t_min_estimates_reference_point():
    # 10 mHz, 1 mK, Q = 1e7, omega_sn/2pi = 57 mHz -> ~3e3 s
    t_th, t_q = t_min_estimates(WEAK)
    assert t_th == pytest.approx(3e3, rel=0.30)
    # thermal estimate vanishes with temperature (n_th -> 0)
    t_th0, _ = t_min_estimates(replace(WEAK, n_th=0.0))
    assert t_th0 == 0.0
    # lam = omega_sn -> quantum estimate is 1/omega_m
    _, t_q1 = t_min_estimates(replace(WEAK, lam=WEAK.omega_sn))
    assert t_q1 == pytest.approx(1.0 / OMEGA_M, rel=1e-12)
    assert t_min_estimates(WEAK.without_feedback()) == (T_INFINITE,
                                                        T_INFINITE)


def test_delay_helps_at_high_temperature_strong_measurement():
    # past ~0.25 s of latency the required time drops steeply
    taus = np.array([0.0, 0.1, 0.25, 0.5, 1.0]) * OMEGA_M
    ts = [t_required(replace(STRONG, tau=t)) for t in taus]
    assert ts[-1] < ts[-2] < ts[0]
    assert ts[-1] < 1e4  # room temperature becomes workable


def test_contour_sweep_shapes_and_sentinels():
    lam_axis = ("lam", [2.0, 5.7])
    sn_axis = ("omega_sn", [0.0, 5.7])
    res = contour_sweep(WEAK, lam_axis, sn_axis, [0.0])
    assert res.t_required.shape == (2, 2, 1)
    # omega_sn = 0 cells are indistinguishable -> infinite time
    assert np.all(np.isinf(res.t_required[:, 0, 0]))
    assert np.all(np.isfinite(res.t_required[:, 1, 0]))


def test_contour_sweep_records_failures_as_nan():
    res = contour_sweep(WEAK, ("zeta", [0.0, math.pi / 2]),
                        ("n_th", [100.0]), [0.0])
    assert math.isnan(res.t_required[0, 0, 0])   # zeta = 0 is degenerate
    assert math.isfinite(res.t_required[1, 0, 0])


def test_contour_sweep_monotone_in_temperature_axis():
    n_axis = ("n_th", WEAK.n_th * np.array([0.25, 1.0, 4.0]))
    res = contour_sweep(WEAK, ("lam", [5.7]), n_axis, [0.0])
    col = res.t_required[0, :, 0]
    assert np.all(np.diff(col) > 0)  # hotter -> longer observation


def test_low_temperature_no_delay_region_is_detectable():
    # with T = 1 mK, Q = 1e7 hardware there are configurations requiring
    # only ~1e3..1e4 s even without latency
    ts = [t_required(replace(WEAK, lam=lam)) for lam in (3.0, 5.7, 10.0)]
    assert min(ts) < 1e4
