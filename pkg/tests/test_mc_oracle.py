"""Tests for the time-domain Monte-Carlo oracle.

The simulator uses an exact discretization of the fused truth/observer
model, so the only systematic error is the O(dt^2) midpoint correction of
the delayed-innovation injection.  Spectra are therefore compared against
the analytic frequency-domain results bin by bin at the periodogram's own
statistical resolution.
"""

import dataclasses
import math

import numpy as np
import pytest

from gravispec.mc_oracle import (
    MCConfig,
    ljung_box,
    simulate_single,
    simulate_mutual,
    variance_decay_mc,
)
from gravispec.mutual import MutualParams, ccsn_spectra, qg_spectra
from gravispec.nonstationary import conditional_variance_trace
from gravispec.single_mass import SingleMassParams, spectrum_total

CCSN = SingleMassParams(omega_sn=0.8, gamma=0.02, lam=1.5, n_th=2.0,
                        zeta=math.pi / 2, tau=0.0)
PAIR = MutualParams(omega_g=0.2, gamma=0.005, lam=1.5, n_th=0.5)


def single_config(p, seed):
    return MCConfig(p, dt=0.05, duration=1500.0, n_trajectories=24,
                    rng_seed=seed, segment_duration=500.0, burn_in=100.0)


def pair_config(p, seed, n_traj=40):
    return MCConfig(p, dt=0.05, duration=1250.0, n_trajectories=n_traj,
                    rng_seed=seed, segment_duration=1250.0, burn_in=400.0)


# ---------------------------------------------------------------------------
# configuration validation
# ---------------------------------------------------------------------------

def test_rejects_coarse_time_step():
    with pytest.raises(ValueError):
        MCConfig(CCSN, dt=0.5, duration=500.0, n_trajectories=4)


def test_rejects_short_segment():
    with pytest.raises(ValueError):
        MCConfig(CCSN, dt=0.05, duration=2.0, n_trajectories=4,
                 segment_duration=0.5)


def test_delay_rounds_to_step_grid():
    p = dataclasses.replace(CCSN, tau=0.123)
    cfg = MCConfig(p, dt=0.05, duration=500.0, n_trajectories=4)
    assert cfg.delay_steps == 2


# ---------------------------------------------------------------------------
# statistical calibration: flat vacuum record
# ---------------------------------------------------------------------------

def test_flat_vacuum_record_is_unit_white():
    # no self-attraction, no readout coupling, no thermal bath: the record
    # is pure shot noise with unit symmetrized spectrum
    p = SingleMassParams(omega_sn=0.0, gamma=0.02, lam=0.0, n_th=0.0,
                         zeta=math.pi / 2, tau=0.0)
    cfg = MCConfig(p, dt=0.05, duration=500.0, n_trajectories=8,
                   rng_seed=1, segment_duration=250.0, burn_in=10.0)
    sp = simulate_single(cfg).spectrum
    dev = (sp.power - 1.0) / sp.stderr
    assert abs(np.mean(sp.power) - 1.0) < 0.02
    assert np.mean(np.abs(dev) < 3.0) > 0.95


# ---------------------------------------------------------------------------
# single mass against the analytic spectrum
# ---------------------------------------------------------------------------

def test_single_spectrum_matches_analytic():
    res = simulate_single(single_config(CCSN, seed=2))
    sp = res.spectrum
    ana = spectrum_total(CCSN, sp.omega, model="ccsn")
    dev = (sp.power - ana) / sp.stderr
    assert np.mean(np.abs(dev) < 3.0) > 0.97
    assert res.innovation_pvalue > 0.01


def test_single_delayed_spectrum_matches_analytic():
    p = dataclasses.replace(CCSN, tau=1.25)
    res = simulate_single(single_config(p, seed=3))
    sp = res.spectrum
    ana = spectrum_total(p, sp.omega, model="ccsn")
    dev = (sp.power - ana) / sp.stderr
    assert np.mean(np.abs(dev) < 3.0) > 0.97
    assert res.innovation_pvalue > 0.01


def test_same_seed_reproduces_run_exactly():
    cfg = MCConfig(CCSN, dt=0.05, duration=300.0, n_trajectories=3,
                   rng_seed=11, segment_duration=150.0, burn_in=20.0)
    a = simulate_single(cfg)
    b = simulate_single(cfg)
    assert np.array_equal(a.record, b.record)
    assert np.array_equal(a.spectrum.power, b.spectrum.power)
    c = simulate_single(dataclasses.replace(cfg, rng_seed=12))
    assert not np.array_equal(a.record, c.record)


# ---------------------------------------------------------------------------
# two-mass runs against the analytic correlation spectra
# ---------------------------------------------------------------------------

def test_mutual_qg_matches_analytic():
    r = simulate_mutual(pair_config(PAIR, seed=5), model="qg")
    ana = qg_spectra(PAIR, r.omega)
    dev_a = (r.s_aa - ana.s_aa) / r.stderr_aa
    dev_b = (r.s_bb - ana.s_bb) / r.stderr_bb
    assert np.mean(np.abs(dev_a) < 3.0) > 0.95
    assert np.mean(np.abs(dev_b) < 3.0) > 0.95
    cab = np.abs(ana.s_ab) ** 2 / (ana.s_aa * ana.s_bb)
    ipk = np.argmax(cab)
    assert abs(r.c_ab[ipk] - cab[ipk]) < 3.0 * r.stderr_c[ipk]


def test_mutual_ccsn_matches_analytic():
    r = simulate_mutual(pair_config(PAIR, seed=5), model="ccsn")
    ana = ccsn_spectra(PAIR, r.omega)
    dev_a = (r.s_aa - ana.s_aa) / r.stderr_aa
    dev_b = (r.s_bb - ana.s_bb) / r.stderr_bb
    assert np.mean(np.abs(dev_a) < 3.0) > 0.95
    assert np.mean(np.abs(dev_b) < 3.0) > 0.95
    cab = np.abs(ana.s_ab) ** 2 / (ana.s_aa * ana.s_bb)
    ipk = np.argmax(cab)
    assert abs(r.c_ab[ipk] - cab[ipk]) < 3.5 * r.stderr_c[ipk]
    for pv in r.innovation_pvalues:
        assert pv > 0.005


def test_mutual_ccsn_with_delay_runs_clean():
    p = dataclasses.replace(PAIR, tau_a=0.5, tau_b=0.5)
    r = simulate_mutual(pair_config(p, seed=6), model="ccsn")
    ana = ccsn_spectra(p, r.omega)
    dev_b = (r.s_bb - ana.s_bb) / r.stderr_bb
    assert np.mean(np.abs(dev_b) < 3.0) > 0.95


def test_zero_coupling_coherence_is_noise_floor():
    # with the gravitational coupling off, the two records share nothing;
    # the magnitude-squared coherence estimator has bias 1/n_averages
    p = dataclasses.replace(PAIR, omega_g=0.0)
    r = simulate_mutual(pair_config(p, seed=7), model="qg")
    floor = 1.0 / r.n_averages
    assert 0.5 * floor < np.mean(r.c_ab) < 2.0 * floor


# ---------------------------------------------------------------------------
# innovation whiteness statistic
# ---------------------------------------------------------------------------

def test_ljung_box_accepts_white_rejects_colored():
    rng = np.random.default_rng(0)
    white = rng.standard_normal(8000)
    _, p_white = ljung_box(white)
    assert p_white > 0.01
    colored = np.empty(8000)
    colored[0] = white[0]
    for i in range(1, 8000):
        colored[i] = 0.6 * colored[i - 1] + white[i]
    _, p_col = ljung_box(colored)
    assert p_col < 1e-6


# ---------------------------------------------------------------------------
# post-shut-off variance decay
# ---------------------------------------------------------------------------

def test_variance_decay_matches_analytic_trace():
    p = SingleMassParams(omega_sn=0.8, gamma=0.05, lam=1.7, n_th=3.0,
                         zeta=math.pi / 2, tau=0.0)
    ts = [0.0, 0.3, 1.0, 2.5, 5.0]
    tr = conditional_variance_trace(p, ts, with_reference=False)
    t_actual, v, err = variance_decay_mc(p, ts, n_trajectories=4000,
                                         dt=0.02, rng_seed=3)
    assert np.allclose(t_actual, ts, atol=0.011)
    dev = (v - tr.v_total) / err
    assert np.max(np.abs(dev)) < 3.0


def test_variance_decay_rejects_bad_input():
    p = SingleMassParams(omega_sn=0.8, gamma=0.05, lam=1.7, n_th=3.0,
                         zeta=0.4, tau=0.0)
    with pytest.raises(ValueError):
        variance_decay_mc(p, [0.0, 1.0])
    good = dataclasses.replace(p, zeta=math.pi / 2)
    with pytest.raises(ValueError):
        variance_decay_mc(good, [-1.0])
