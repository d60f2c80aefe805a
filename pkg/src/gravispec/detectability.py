"""Detectability of the conditional-gravity signature in stationary records.

The discriminator between the two gravity models is the Kullback-Leibler
divergence rate between the Gaussian record statistics they predict; for a
small spectral difference dS on top of a common background S this rate is
(1/2 per record... summed over the band)

    rho^2 = T_obs * int dW/2pi [dS(W) / S(W)]^2

evaluated here with dS the conditional-source shift of the record spectrum
and S the standard-QM record spectrum (shot + back-action + thermal).  The
force/record referencing cancels in the ratio, so everything is computed in
normalized record units.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import GravispecError
from .single_mass import SingleMassParams, spectrum_components

log = logging.getLogger(__name__)

#: sentinel for cells where the two models are identical
T_INFINITE = math.inf


def _integration_grid(p: SingleMassParams):
    """Grid resolving the resonances, the estimator's sinc lobes and the
    back-action/shot crossover at omega ~ Lambda."""
    hi = 30.0 * max(p.omega_q, p.lam, math.pi / p.tau if p.tau > 0 else 0.0)
    lo = 1.0 / 30.0
    pieces = [np.geomspace(lo, 1.2 * p.omega_q, 2000)]
    # linear windows of width ~1e3 gamma around both resonances
    for w0 in (1.0, p.omega_q):
        hw = max(1e3 * p.gamma, 1e-5)
        pieces.append(np.linspace(w0 - hw, w0 + hw, 800))
        pieces.append(w0 + np.geomspace(hw, 0.3, 200))
        pieces.append(w0 - np.geomspace(hw, min(0.3, w0 - lo), 200))
    if p.tau > 0:
        # at least ~15 samples per oscillation period 2 pi / tau
        step = 2.0 * math.pi / p.tau / 15.0
        n = int(min(4e6, (hi - p.omega_q) / step)) + 2
        pieces.append(np.linspace(1.2 * p.omega_q, hi, n))
    else:
        pieces.append(np.geomspace(1.2 * p.omega_q, hi, 4000))
    grid = np.unique(np.concatenate(pieces))
    return grid[(grid >= lo) & (grid <= hi)]


def kl_rate(p: SingleMassParams):
    """KL divergence rate (1/s) between the two models' record statistics."""
    if p.omega_sn == 0.0:
        return 0.0
    w = _integration_grid(p)
    comp = spectrum_components(p, w, model="ccsn")
    background = comp["shot"] + comp["backaction"] + comp["thermal"]
    ratio = comp["sn"] / background
    # spectra are even: full-line integral is twice the positive half
    integral = 2.0 * np.trapezoid(ratio ** 2, w) / (2.0 * math.pi)
    return integral * p.omega_m_si


def kl_snr(p: SingleMassParams, t_obs):
    """rho^2 accumulated over ``t_obs`` seconds of stationary record."""
    if t_obs <= 0:
        raise ValueError("t_obs must be positive")
    return kl_rate(p) * t_obs


def t_min_estimates(p: SingleMassParams):
    """Closed-form order-of-magnitude observation times (seconds).

    Returns ``(t_thermal, t_quantum)``:
    * thermal-limited: (omega_m/omega_sn^2) (2 k_B T/(hbar omega_sn Q_m))^2,
      expressed through n_th as (1/wsn^2)(2 n_th/wsn)^2 scaled units;
    * quantum-limited: (Lambda/omega_sn)^4 / omega_m.
    """
    if p.omega_sn == 0.0:
        return T_INFINITE, T_INFINITE
    t_th = (2.0 * p.n_th / p.omega_sn) ** 2 / p.omega_sn ** 2
    t_q = (p.lam / p.omega_sn) ** 4
    return t_th / p.omega_m_si, t_q / p.omega_m_si


@dataclass
class SweepResult:
    """Grid of required observation times over two parameter axes and a
    list of feedback latencies; ``t_required[i, j, k]`` corresponds to
    (axis1[i], axis2[j], tau[k]).  Infinite cells mean the models are
    indistinguishable; NaN cells mean the evaluation failed."""

    axis1_name: str
    axis1_values: np.ndarray
    axis2_name: str
    axis2_values: np.ndarray
    tau_values: np.ndarray
    t_required: np.ndarray


def t_required(p: SingleMassParams):
    """Observation time (s) at which rho^2 reaches 1."""
    rate = kl_rate(p)
    return 1.0 / rate if rate > 0.0 else T_INFINITE


def contour_sweep(base: SingleMassParams, axis1, axis2, tau_list):
    """Evaluate t_required over a 2-d parameter grid times a tau list.

    ``axis1``/``axis2`` are ``(field_name, values)`` pairs naming scaled
    SingleMassParams fields (e.g. ("lam", [...]), ("n_th", [...])).
    Failures are recorded as NaN cells and logged, never raised.
    """
    name1, vals1 = axis1
    name2, vals2 = axis2
    vals1 = np.asarray(vals1, dtype=float)
    vals2 = np.asarray(vals2, dtype=float)
    taus = np.asarray(tau_list, dtype=float)
    out = np.empty((vals1.size, vals2.size, taus.size))
    for i, v1 in enumerate(vals1):
        for j, v2 in enumerate(vals2):
            for k, tau in enumerate(taus):
                try:
                    cell = replace(base, **{name1: float(v1),
                                            name2: float(v2),
                                            "tau": float(tau)})
                    out[i, j, k] = t_required(cell)
                except GravispecError as exc:
                    log.warning("sweep cell (%s=%g, %s=%g, tau=%g) failed: %s",
                                name1, v1, name2, v2, tau, exc)
                    out[i, j, k] = math.nan
    return SweepResult(name1, vals1, name2, vals2, taus, out)
