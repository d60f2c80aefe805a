"""Homodyne-record spectra for a single continuously monitored oscillator.

Two gravity models are compared for the same optomechanical hardware:

* QG   -- gravity sources from the quantum state; the conditional dynamics is
          standard measured quantum mechanics and the record spectrum is the
          usual shot + back-action + thermal budget at the bare frequency.
* CCSN -- gravity sources from the measurement-conditioned classical
          expectation of position, fed back through a (possibly delayed)
          causal estimator built from the record itself.  The quantum part of
          the motion oscillates at the shifted frequency
          omega_Q = sqrt(omega_m^2 + omega_sn^2).

All internal math uses scaled units hbar = M = omega_m = 1; positions are in
units of sqrt(hbar/(M omega_m)) and spectra of the normalized record are
referenced to unit shot noise.  ``SingleMassParams.from_si`` converts
laboratory numbers.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import constants

from .errors import DegenerateQuadrature
from .freq_algebra import ExpRational, RationalFn, causal_part
from .specfact import beta_root, damped_pole, factor_single_mass

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SingleMassParams:
    """Scaled parameters (units hbar = M = omega_m = 1).

    omega_sn : frequency shift scale of the classical self-attraction
    gamma    : amplitude damping rate
    lam      : measurement-strength rate Lambda (backaction = shot at
               omega ~ Lambda for resonant probing)
    n_th     : thermal decoherence quanta k_B T / (hbar omega_m Q_m)
    zeta     : homodyne angle (pi/2 measures the position-carrying
               quadrature, 0 the probe amplitude quadrature)
    tau      : feedback latency of the conditional source, in units of
               1/omega_m
    omega_m_si : bare mechanical frequency in rad/s (only used to convert
               scaled results back to laboratory units)
    """

    omega_sn: float
    gamma: float
    lam: float
    n_th: float
    zeta: float = math.pi / 2
    tau: float = 0.0
    omega_m_si: float = 1.0

    @property
    def omega_q(self):
        """Shifted oscillation frequency of the quantum fluctuations."""
        return math.sqrt(1.0 + self.omega_sn ** 2)

    @classmethod
    def from_si(cls, *, mass, omega_m, omega_sn, q_m, temperature,
                zeta=math.pi / 2, tau=0.0, lam=None,
                power=None, finesse=None, wavelength=None):
        """Build scaled parameters from SI inputs.

        Exactly one of ``lam`` (rad/s) or the optical stack
        (``power`` W, ``finesse``, ``wavelength`` m) must be given; the
        stack converts as Lambda = (4 F / pi) sqrt(2 omega_0 P / (M c^2))
        with omega_0 = 2 pi c / wavelength.
        """
        stack = (power, finesse, wavelength)
        if (lam is None) == all(v is None for v in stack):
            raise ValueError(
                "give exactly one of lam= or (power, finesse, wavelength)")
        if lam is None:
            if any(v is None for v in stack):
                raise ValueError("power, finesse and wavelength are all "
                                 "required for the optical conversion")
            lam = measurement_rate_from_optics(mass, power, finesse,
                                               wavelength)
        gamma = omega_m / (2.0 * q_m)
        n_th = constants.k * temperature / (constants.hbar * omega_m * q_m)
        return cls(
            omega_sn=omega_sn / omega_m,
            gamma=gamma / omega_m,
            lam=lam / omega_m,
            n_th=n_th,
            zeta=zeta,
            tau=tau * omega_m,
            omega_m_si=omega_m,
        )

    def without_feedback(self):
        """Same hardware with the classical self-attraction switched off
        (omega_sn = 0): the QG reference configuration."""
        return replace(self, omega_sn=0.0)


def measurement_rate_from_optics(mass, power, finesse, wavelength):
    """Lambda in rad/s from intracavity power, finesse and wavelength."""
    omega_0 = 2.0 * math.pi * constants.c / wavelength
    return (4.0 * finesse / math.pi) * math.sqrt(
        2.0 * omega_0 * power / (mass * constants.c ** 2))


def self_attraction_frequency(atom_mass, zero_point_width):
    """omega_sn (rad/s) of a crystal from its atomic mass (kg) and the
    zero-point width (m) of each atom's wavepacket:
    sqrt(G m / (6 sqrt(pi) x_zp^3))."""
    return math.sqrt(constants.G * atom_mass
                     / (6.0 * math.sqrt(math.pi) * zero_point_width ** 3))


# ---------------------------------------------------------------------------
# susceptibilities and the conditional-source estimator
# ---------------------------------------------------------------------------

def susceptibility(omega0, gamma):
    """chi(omega) = 1/(omega0^2 - 2 i gamma omega - omega^2) as a RationalFn
    (= -1/((omega - pole)(omega + conj(pole))))."""
    p = damped_pole(omega0, gamma)
    return RationalFn(-1.0, (), (p, -p.conjugate()))


def conditional_estimator(p: SingleMassParams):
    """Delayed causal estimator K of position from the past record.

    x_est(omega) = K(omega) z(omega) uses the record up to a latency
    p.tau.  Returned as an ExpRational; both terms carry the full delay
    tau with strictly proper rational parts (poles beta, -conj(beta)).
    """
    if math.sin(p.zeta) == 0.0:
        raise DegenerateQuadrature(
            "zeta = 0: the record carries no position information, "
            "the stationary estimator is degenerate")
    s, c = math.sin(p.zeta), math.cos(p.zeta)
    omq = p.omega_q
    beta = beta_root(omq, p.gamma, p.lam, p.zeta)
    omt = damped_pole(omq, p.gamma)
    pref = p.lam / (omt + omt.conjugate())
    g1 = (pref * (p.lam ** 2 * s + 4j * p.gamma * omt * c)
          * cmath.exp(-1j * omt * p.tau)
          / ((omt + beta) * (omt - beta.conjugate())))
    g2 = (-pref * (p.lam ** 2 * s - 4j * p.gamma * omt.conjugate() * c)
          * cmath.exp(1j * omt.conjugate() * p.tau)
          / ((omt.conjugate() - beta) * (omt.conjugate() + beta.conjugate())))
    poles = (beta, -beta.conjugate())
    return ExpRational([
        (p.tau, RationalFn(g1, (-omt.conjugate(),), poles)),
        (p.tau, RationalFn(g2, (omt,), poles)),
    ])


def conditional_estimator_zero_delay(p: SingleMassParams):
    """Closed form of the zero-latency estimator (independent of the
    two-pole form above; used for cross-validation):

        K = (1/(Lambda sin z)) [1 - (w^2 + 2i g w - wq^2)/((w-b)(w+b*))]
    """
    if math.sin(p.zeta) == 0.0:
        raise DegenerateQuadrature("zeta = 0")
    beta = beta_root(p.omega_q, p.gamma, p.lam, p.zeta)
    omt = damped_pole(p.omega_q, p.gamma)

    def ev(w):
        w = np.asarray(w, dtype=float)
        D = w ** 2 + 2j * p.gamma * w - p.omega_q ** 2
        num = (w - beta) * (w + beta.conjugate())
        return (1.0 - D / num) / (p.lam * math.sin(p.zeta))

    return ev


def conditional_estimator_wiener_hopf(p: SingleMassParams):
    """Estimator built by the generic whitening construction
    K = [S_xz / phi_-]_tau / phi_+ (independent derivation path)."""
    if math.sin(p.zeta) == 0.0:
        raise DegenerateQuadrature("zeta = 0")
    s, c = math.sin(p.zeta), math.cos(p.zeta)
    phi, beta, omt = factor_single_mass(p.omega_q, p.gamma, p.lam, p.zeta)
    chi = susceptibility(p.omega_q, p.gamma)
    # cross-spectrum of position with the measured quadrature
    sxz = (ExpRational.from_rational(chi * (p.lam * c))
           + ExpRational.from_rational(chi * chi.conj() * (p.lam ** 3 * s)))
    inv_phi_minus = RationalFn(1.0, phi.conj().poles, phi.conj().zeros)
    inv_phi_plus = RationalFn(1.0, phi.poles, phi.zeros)
    return causal_part(sxz * inv_phi_minus, p.tau) * inv_phi_plus


# ---------------------------------------------------------------------------
# record spectra
# ---------------------------------------------------------------------------

def spectrum_components(p: SingleMassParams, w, model="ccsn"):
    """Record spectrum on the grid ``w`` (scaled frequencies), split into
    physically tagged components.

    Returns a dict with keys ``shot``, ``backaction``, ``sn``, ``thermal``
    and ``total`` (all arrays; total = sum of the four).  ``sn`` is zero for
    model="qg".  Shot noise is 1 by normalization.
    """
    w = np.asarray(w, dtype=float)
    s = math.sin(p.zeta)
    chi_c = susceptibility(1.0, p.gamma)
    thermal = 4.0 * p.lam ** 2 * p.n_th * s ** 2 * np.abs(chi_c(w)) ** 2

    # QG reference: conditional dynamics at the bare frequency
    q_ref = p.without_feedback()
    phi_ref, _, _ = factor_single_mass(1.0, p.gamma, p.lam, p.zeta)
    szz_ref = np.abs(phi_ref(w)) ** 2
    shot = np.ones_like(w)
    backaction = szz_ref - shot

    if model == "qg" or p.omega_sn == 0.0:
        total = szz_ref + thermal
        return {"shot": shot, "backaction": backaction,
                "sn": np.zeros_like(w), "thermal": thermal, "total": total}
    if model != "ccsn":
        raise ValueError(f"unknown model {model!r}")

    phi, beta, omt = factor_single_mass(p.omega_q, p.gamma, p.lam, p.zeta)
    szz = np.abs(phi(w)) ** 2
    K = conditional_estimator(p)
    loop = 1.0 + p.lam * p.omega_sn ** 2 * s * chi_c(w) * K(w)
    quantum = np.abs(loop) ** 2 * szz
    total = quantum + thermal
    return {"shot": shot, "backaction": backaction,
            "sn": quantum - szz_ref, "thermal": thermal, "total": total}


def spectrum_total(p: SingleMassParams, w, model="ccsn"):
    return spectrum_components(p, w, model=model)["total"]


def spectrum_nodelay_closed(p: SingleMassParams, w):
    """Closed form of the zero-latency record spectrum (cross-check path):

        S = (|(w+b)(w-b*) + wsn^2|^2 + 4 Lam^2 n_th sin^2 z) / |Dc|^2
    """
    w = np.asarray(w, dtype=float)
    beta = beta_root(p.omega_q, p.gamma, p.lam, p.zeta)
    Dc = 1.0 - 2j * p.gamma * w - w ** 2
    num = np.abs((w + beta) * (w - beta.conjugate()) + p.omega_sn ** 2) ** 2
    num = num + 4.0 * p.lam ** 2 * p.n_th * math.sin(p.zeta) ** 2
    return num / np.abs(Dc) ** 2


def spectrum_delay_approx(p: SingleMassParams, w):
    """Sinc-lobe approximation of the delayed record spectrum, valid for
    gamma * tau << 1 and weak coupling (cross-check path only)."""
    w = np.asarray(w, dtype=float)
    s = math.sin(p.zeta)
    beta = beta_root(p.omega_q, p.gamma, p.lam, p.zeta)
    omq = p.omega_q
    tau = p.tau
    Dc = 1.0 - 2j * p.gamma * w - w ** 2
    phase = (1j * cmath.exp(1j * omq * tau / 2.0) * p.lam ** 2 * s
             / ((omq - beta) * (omq + beta.conjugate())))
    delta = np.angle(phase)
    lobe = (p.lam ** 2 * tau * s / (2.0 * omq)) * np.exp(1j * w * tau / 2.0) * (
        np.exp(1j * delta) * np.sinc((w - omq) * tau / (2.0 * np.pi))
        + np.exp(-1j * delta) * np.sinc((w + omq) * tau / (2.0 * np.pi)))
    Q = (w + beta) * (w - beta.conjugate()) + p.omega_sn ** 2 * (1.0 + lobe)
    num = np.abs(Q) ** 2 + 4.0 * p.lam ** 2 * p.n_th * s ** 2
    return num / np.abs(Dc) ** 2


def spectrum_preselection(p: SingleMassParams, w):
    """Amplitude-quadrature (zeta = 0) spectrum: the only signal is
    back-action filtered through the oscillator, peaked at omega_q."""
    w = np.asarray(w, dtype=float)
    chi = susceptibility(p.omega_q, p.gamma)
    return 1.0 + p.lam ** 4 * np.abs(chi(w)) ** 2


# ---------------------------------------------------------------------------
# force-referred budget
# ---------------------------------------------------------------------------

def record_to_force(p: SingleMassParams, w, record):
    """Convert a record-referenced spectrum component to an equivalent force
    spectrum in units hbar M omega_m^2:  S_F = S |Dc|^2 / (Lam^2 sin^2 z)."""
    w = np.asarray(w, dtype=float)
    Dc2 = np.abs(1.0 - 2j * p.gamma * w - w ** 2) ** 2
    return np.asarray(record) * Dc2 / (p.lam ** 2 * math.sin(p.zeta) ** 2)


def force_budget(p: SingleMassParams, w):
    """Force-referred noise budget (units hbar M omega_m^2).

    Returns shot, backaction, thermal, and the shift ``sn`` of the total
    force noise when the conditional self-attraction is switched on, plus
    the closed-form constant ``sn_predicted`` valid at zero latency and
    negligible damping:  -2 Lam^2 wsn^2 / (wq^2 + sqrt(Lam^4 + wq^4)).
    """
    comp = spectrum_components(p, w, model="ccsn")
    out = {k: record_to_force(p, w, comp[k])
           for k in ("shot", "backaction", "thermal", "sn")}
    omq2 = p.omega_q ** 2
    out["sn_predicted"] = (-2.0 * p.lam ** 2 * p.omega_sn ** 2
                           / (omq2 + math.sqrt(p.lam ** 4 + omq2 ** 2)))
    out["total"] = out["shot"] + out["backaction"] + out["thermal"] + out["sn"]
    return out


# ---------------------------------------------------------------------------
# frequency grids
# ---------------------------------------------------------------------------

def frequency_grid(p: SingleMassParams, w_min=None, w_max=None,
                   n_log=400, n_window=400, window_halfwidth=None):
    """Positive frequency grid resolving the narrow mechanical features.

    Log-spaced global coverage plus linear windows around the bare and
    shifted resonances (half-width ~1e3 gamma by default) and, for delayed
    feedback, around the first few sinc lobes at multiples of pi/tau.
    """
    if w_min is None:
        w_min = 1e-3
    if w_max is None:
        w_max = max(10.0, 3.0 * p.omega_q, 3.0 * p.lam)
    if window_halfwidth is None:
        window_halfwidth = max(1e3 * p.gamma, 1e-6)
    pts = [np.geomspace(w_min, w_max, n_log)]
    for w0 in (1.0, p.omega_q):
        lo = max(w0 - window_halfwidth, w_min)
        hi = min(w0 + window_halfwidth, w_max)
        if hi > lo:
            pts.append(np.linspace(lo, hi, n_window))
    if p.tau > 0:
        dw = math.pi / p.tau
        for k in range(1, 6):
            for w0 in (p.omega_q + k * dw, p.omega_q - k * dw):
                if w_min < w0 < w_max:
                    pts.append(np.linspace(w0 - 0.2 * dw, w0 + 0.2 * dw, 60))
    grid = np.unique(np.concatenate(pts))
    return grid[(grid >= w_min) & (grid <= w_max)]
