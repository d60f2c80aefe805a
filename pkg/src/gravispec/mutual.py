"""Record correlations of two gravitationally coupled monitored oscillators.

Three gravity models for the same pair of optomechanical systems:

* QG      -- the masses couple at the operator level; the coupled modes
             split into common/differential eigenfrequencies and quantum
             back-action on A is transferred to B's record.
* naiveSN -- classical gravity sourced by an unconditioned (zero) mean:
             the systems decouple, each merely frequency-shifted.
* CCSN    -- classical gravity sourced by each system's causally filtered
             conditional mean, with per-system homodyne angle and
             measurement latency; measurement feedback restores the QG
             eigenmodes and most of the cross-correlation.

Scaled units hbar = M = omega_m = 1 throughout; records are normalized to
unit shot noise.  The mutual coupling lowers the per-mass restoring
frequency: omega_q^2 = 1 - omega_g^2 (opposite in sign to the self-
attraction case).  The primary evaluator solves the coupled loops
pointwise on the six-dimensional noise basis (a_1A, a_2A, a_1B, a_2B,
f_thA, f_thB) with independent, identically distributed thermal baths;
the closed forms from the small-coupling expansions are kept as separate
cross-check evaluators.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import constants

from .freq_algebra import ExpRational, RationalFn, anticausal_part, causal_part
from .single_mass import measurement_rate_from_optics, susceptibility
from .specfact import beta_root, damped_pole, factor_single_mass

log = logging.getLogger(__name__)


def mutual_coupling_frequency(mass, distance):
    """Gravitational coupling frequency (rad/s) of two masses separated by
    ``distance``: omega_g = sqrt(2 G M / d^3)."""
    return math.sqrt(2.0 * constants.G * mass / distance ** 3)


@dataclass(frozen=True)
class MutualParams:
    """Scaled parameters of two identical devices (units of omega_m).

    The hardware (mass, frequency, damping, coupling, bath) is common to
    both systems; homodyne angle and measurement latency are per system.

    omega_g : mutual coupling frequency (< 1/sqrt(2) so both eigenmodes
              are stable)
    gamma   : amplitude damping rate
    lam     : measurement-strength rate Lambda
    n_th    : thermal decoherence quanta k_B T / (hbar omega_m Q_m)
    zeta_a, zeta_b : homodyne angles (canonical setting (0, pi/2))
    tau_a, tau_b   : per-system latencies in units of 1/omega_m
    omega_m_si     : bare mechanical frequency in rad/s for SI conversion
    """

    omega_g: float
    gamma: float
    lam: float
    n_th: float
    zeta_a: float = 0.0
    zeta_b: float = math.pi / 2
    tau_a: float = 0.0
    tau_b: float = 0.0
    omega_m_si: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.omega_g < math.sqrt(0.5):
            raise ValueError("need 0 <= omega_g < 1/sqrt(2) for a stable "
                             "differential mode")

    @property
    def omega_q(self):
        """Per-mass frequency lowered by the attraction to the partner."""
        return math.sqrt(1.0 - self.omega_g ** 2)

    @property
    def omega_plus(self):
        """Common-mode eigenfrequency (coupling cancels)."""
        return 1.0

    @property
    def omega_minus(self):
        """Differential-mode eigenfrequency."""
        return math.sqrt(1.0 - 2.0 * self.omega_g ** 2)

    @classmethod
    def from_si(cls, *, mass, omega_m, q_m, temperature, omega_g=None,
                distance=None, zeta_a=0.0, zeta_b=math.pi / 2,
                tau_a=0.0, tau_b=0.0, lam=None, power=None, finesse=None,
                wavelength=None):
        """Scaled parameters from SI inputs; ``omega_g`` (rad/s) directly
        or derived from the mirror ``distance`` (m).  Coupling Lambda as
        in SingleMassParams.from_si."""
        if (omega_g is None) == (distance is None):
            raise ValueError("give exactly one of omega_g= or distance=")
        if omega_g is None:
            omega_g = mutual_coupling_frequency(mass, distance)
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
        return cls(
            omega_g=omega_g / omega_m,
            gamma=omega_m / (2.0 * q_m) / omega_m,
            lam=lam / omega_m,
            n_th=constants.k * temperature / (constants.hbar * omega_m
                                              * q_m),
            zeta_a=zeta_a, zeta_b=zeta_b,
            tau_a=tau_a * omega_m, tau_b=tau_b * omega_m,
            omega_m_si=omega_m,
        )

    def with_delay(self, tau):
        """Both latencies set to ``tau`` (scaled)."""
        return replace(self, tau_a=tau, tau_b=tau)


@dataclass
class CorrelationSpectra:
    """Record auto- and cross-spectra of the two systems on ``grid`` and
    the normalized correlation c_ab = |s_ab|^2/(s_aa s_bb); ``thermal_aa``
    is the thermally driven part of s_aa (for model cross-checks)."""

    grid: np.ndarray
    s_aa: np.ndarray
    s_bb: np.ndarray
    s_ab: np.ndarray
    c_ab: np.ndarray
    model: str
    thermal_aa: np.ndarray


# ---------------------------------------------------------------------------
# susceptibilities and Wiener filters
# ---------------------------------------------------------------------------

def _chi_single(p, w):
    """Per-mass susceptibility 1/(omega_q^2 - 2 i gamma w - w^2)."""
    return susceptibility(p.omega_q, p.gamma)(np.asarray(w, dtype=float))


def _chi_matrix(p, w):
    """Coupled-response functions: ``chi_d`` (drive on the same mass) and
    ``chi_o`` (drive on the partner).  These restore the common /
    differential eigenmode poles from the per-mass shifted ones."""
    chi = _chi_single(p, w)
    e = 1.0 / (1.0 - p.omega_g ** 4 * chi ** 2)
    return chi * e, -p.omega_g ** 2 * chi ** 2 * e


def wiener_filter(omega_q, gamma, lam, zeta, tau):
    """Causal estimator of position from the quantum-only record of a
    single monitored oscillator at ``omega_q``, with latency ``tau``.

    Built by whitening: K = [S_xz / phi_-]_tau / phi_+.  For zeta = 0 the
    record is the probe amplitude quadrature itself (unit white) and the
    filter degenerates to the truncated susceptibility [Lambda chi]_tau.
    """
    chi = susceptibility(omega_q, gamma)
    if math.sin(zeta) == 0.0:
        return causal_part(ExpRational.from_rational(chi * lam), tau)
    s, c = math.sin(zeta), math.cos(zeta)
    phi, _, _ = factor_single_mass(omega_q, gamma, lam, zeta)
    sxz = (ExpRational.from_rational(chi * (lam * c))
           + ExpRational.from_rational(chi * chi.conj() * (lam ** 3 * s)))
    inv_minus = RationalFn(1.0, phi.conj().poles, phi.conj().zeros)
    inv_plus = RationalFn(1.0, phi.poles, phi.zeros)
    return causal_part(sxz * inv_minus, tau) * inv_plus


def wiener_filter_closed(omega_q, gamma, lam, zeta, tau):
    """Independent closed form of the delayed filter (cross-check path):
    residue expansion over the susceptibility poles divided by the record
    whitening factor."""
    if math.sin(zeta) == 0.0:
        raise ValueError("closed form is degenerate at zeta = 0")
    beta = beta_root(omega_q, gamma, lam, zeta)
    omt = damped_pole(omega_q, gamma)
    pref = 1.0 / (lam * math.sin(zeta) * (omt + omt.conjugate()))
    c1 = ((omt - beta) * (omt + beta.conjugate())
          * np.exp(-1j * omt * tau)) * pref
    c2 = (-(omt.conjugate() - beta.conjugate()) * (omt.conjugate() + beta)
          * np.exp(1j * omt.conjugate() * tau)) * pref
    poles = (beta, -beta.conjugate())
    return ExpRational([
        (tau, RationalFn(c1, (-omt.conjugate(),), poles)),
        (tau, RationalFn(c2, (omt,), poles)),
    ])


# ---------------------------------------------------------------------------
# spectra pipelines (6-dim noise basis)
# ---------------------------------------------------------------------------

def _assemble(grid, rows_a, rows_b, weights, model, thermal_aa):
    s_aa = sum(wk * np.abs(t) ** 2 for wk, t in zip(weights, rows_a))
    s_bb = sum(wk * np.abs(t) ** 2 for wk, t in zip(weights, rows_b))
    s_ab = sum(wk * ta * np.conj(tb)
               for wk, ta, tb in zip(weights, rows_a, rows_b))
    c_ab = np.abs(s_ab) ** 2 / (s_aa.real * s_bb.real)
    return CorrelationSpectra(grid, s_aa.real, s_bb.real, s_ab, c_ab,
                              model, thermal_aa)


def correlation_grid(p: MutualParams, n_peak=4001, n_tail=1500):
    """Positive-frequency grid resolving the eigenmode splitting
    (~omega_g^2) around the peak plus logarithmic tails."""
    og2 = max(p.omega_g ** 2, 1e-6)
    half = max(50.0 * og2, 2e3 * p.gamma)
    center = p.omega_q
    lo = max(center - half, 1e-3)
    pieces = [np.linspace(lo, center + half, n_peak)]
    pieces.append(np.geomspace(1e-2, max(lo, 1.1e-2), n_tail // 3))
    hi = 30.0 * max(p.lam, 10.0)
    pieces.append(np.geomspace(center + half, hi, n_tail))
    grid = np.unique(np.concatenate(pieces))
    return grid


def qg_spectra(p: MutualParams, w=None):
    """Record spectra when gravity couples the masses at operator level."""
    if w is None:
        w = correlation_grid(p)
    w = np.asarray(w, dtype=float)
    chi_d, chi_o = _chi_matrix(p, w)
    lam = p.lam
    sa, ca = math.sin(p.zeta_a), math.cos(p.zeta_a)
    sb, cb = math.sin(p.zeta_b), math.cos(p.zeta_b)
    zeros = np.zeros_like(w, dtype=complex)
    rows_a = [ca + lam ** 2 * sa * chi_d, sa + zeros,
              lam ** 2 * sa * chi_o, zeros,
              lam * sa * chi_d, lam * sa * chi_o]
    rows_b = [lam ** 2 * sb * chi_o, zeros,
              cb + lam ** 2 * sb * chi_d, sb + zeros,
              lam * sb * chi_o, lam * sb * chi_d]
    wts = (1.0, 1.0, 1.0, 1.0, 4.0 * p.n_th, 4.0 * p.n_th)
    thermal_aa = (4.0 * p.n_th * lam ** 2 * sa ** 2
                  * (np.abs(chi_d) ** 2 + np.abs(chi_o) ** 2))
    return _assemble(w, rows_a, rows_b, wts, "qg", thermal_aa)


def naive_sn_spectra(p: MutualParams, w=None, include_thermal=False):
    """Record spectra when classical gravity is sourced by the
    unconditioned (zero) mean: the systems decouple, each oscillating at
    the shifted omega_q; no cross-correlation.  Thermal driving is
    omitted by default, matching the quantum-only idealization."""
    if w is None:
        w = correlation_grid(p)
    w = np.asarray(w, dtype=float)
    chi = _chi_single(p, w)
    lam = p.lam
    sa, ca = math.sin(p.zeta_a), math.cos(p.zeta_a)
    sb, cb = math.sin(p.zeta_b), math.cos(p.zeta_b)
    zeros = np.zeros_like(w, dtype=complex)
    n_th = p.n_th if include_thermal else 0.0
    rows_a = [ca + lam ** 2 * sa * chi, sa + zeros, zeros, zeros,
              lam * sa * chi, zeros]
    rows_b = [zeros, zeros, cb + lam ** 2 * sb * chi, sb + zeros,
              zeros, lam * sb * chi]
    wts = (1.0, 1.0, 1.0, 1.0, 4.0 * n_th, 4.0 * n_th)
    thermal_aa = 4.0 * n_th * lam ** 2 * sa ** 2 * np.abs(chi) ** 2
    return _assemble(w, rows_a, rows_b, wts, "naive_sn", thermal_aa)


def ccsn_spectra(p: MutualParams, w=None):
    """Record spectra when classical gravity is sourced by the causally
    filtered conditional means, each built from its own delayed record.

    The quantum records z_{A/B} drive the partner's gravity through the
    coupled-response functions divided by the bare per-mass one; the
    thermal forces drive both classical means exactly as in the QG case.
    """
    if w is None:
        w = correlation_grid(p)
    w = np.asarray(w, dtype=float)
    chi = _chi_single(p, w)
    chi_d, chi_o = _chi_matrix(p, w)
    lam = p.lam
    sa, ca = math.sin(p.zeta_a), math.cos(p.zeta_a)
    sb, cb = math.sin(p.zeta_b), math.cos(p.zeta_b)
    k_a = wiener_filter(p.omega_q, p.gamma, lam, p.zeta_a, p.tau_a)(w)
    k_b = wiener_filter(p.omega_q, p.gamma, lam, p.zeta_b, p.tau_b)(w)
    # coupled-over-bare response ratios
    ratio_d = chi_d / chi     # = 1/(1 - omega_g^4 chi^2)
    ratio_o = chi_o / chi
    h_aa = 1.0 + (ratio_d - 1.0) * lam * sa * k_a
    h_ab = ratio_o * lam * sa * k_b
    h_bb = 1.0 + (ratio_d - 1.0) * lam * sb * k_b
    h_ba = ratio_o * lam * sb * k_a
    z_a = (ca + lam ** 2 * sa * chi, sa + np.zeros_like(w, dtype=complex))
    z_b = (cb + lam ** 2 * sb * chi, sb + np.zeros_like(w, dtype=complex))
    rows_a = [h_aa * z_a[0], h_aa * z_a[1], h_ab * z_b[0], h_ab * z_b[1],
              lam * sa * chi_d, lam * sa * chi_o]
    rows_b = [h_ba * z_a[0], h_ba * z_a[1], h_bb * z_b[0], h_bb * z_b[1],
              lam * sb * chi_o, lam * sb * chi_d]
    wts = (1.0, 1.0, 1.0, 1.0, 4.0 * p.n_th, 4.0 * p.n_th)
    thermal_aa = (4.0 * p.n_th * lam ** 2 * sa ** 2
                  * (np.abs(chi_d) ** 2 + np.abs(chi_o) ** 2))
    return _assemble(w, rows_a, rows_b, wts, "ccsn", thermal_aa)


# ---------------------------------------------------------------------------
# closed-form cross-checks
# ---------------------------------------------------------------------------

def qg_correlation_closed(p: MutualParams, w):
    """Exact closed form of the QG correlation for the canonical angles
    (0, pi/2) including thermal noise, in terms of the eigenmode
    polynomials (cross-check for the pipeline)."""
    w = np.asarray(w, dtype=float)
    p_plus = w ** 2 - p.omega_plus ** 2 + 2j * p.gamma * w
    p_minus = w ** 2 - p.omega_minus ** 2 + 2j * p.gamma * w
    lam2 = p.lam ** 2
    num = 2.0 * lam2 ** 2 * p.omega_g ** 4
    den = (2.0 * np.abs(p_plus * p_minus) ** 2
           + lam2 * (lam2 + 4.0 * p.n_th)
           * (np.abs(p_plus) ** 2 + np.abs(p_minus) ** 2))
    return num / den


def qg_correlation_simple(p: MutualParams, w):
    """Small-coupling Lorentzian approximation of the QG correlation
    (gamma -> 0), parameterized by the detuning from the shifted
    per-mass resonance."""
    w = np.asarray(w, dtype=float)
    delta = w ** 2 - p.omega_q ** 2
    og4 = p.omega_g ** 4
    lam_eff4 = p.lam ** 2 * (p.lam ** 2 + 4.0 * p.n_th)
    num = p.lam ** 4 * og4
    den = (delta ** 4 + delta ** 2 * (lam_eff4 - 2.0 * og4)
           + og4 * (lam_eff4 + og4))
    return num / den


def qg_peak_correlation(p: MutualParams):
    """Peak of the QG correlation (gamma -> 0): Lambda^2/(Lambda^2 +
    4 n_th omega_m^2) in scaled units."""
    return p.lam ** 2 / (p.lam ** 2 + 4.0 * p.n_th)


def bb_shift_approx(p: MutualParams, w, zeta_a):
    """Leading small-coupling shift of S_BB (phase quadrature on B,
    quantum-only, no latency) relative to the QG value, whose coefficient
    depends on the angle measured at A: 2 (zeta_a = 0) vs 4 (pi/2)."""
    w = np.asarray(w, dtype=float)
    delta = w ** 2 - p.omega_q ** 2
    og4 = p.omega_g ** 4
    wq2 = p.omega_q ** 2
    coeff = 2.0 if math.sin(zeta_a) == 0.0 else 4.0
    shift = (coeff * og4 * delta
             * (math.sqrt(p.lam ** 4 + wq2 ** 2) - wq2))
    return shift / (delta ** 2 - og4) ** 2


def delay_factor_approx(omega_q, tau, w):
    """Low-damping approximation of the truncated-over-full
    susceptibility ratio under a latency tau:
    e^{i w tau}[cos(omega_q tau) - (i w / omega_q) sin(omega_q tau)]."""
    w = np.asarray(w, dtype=float)
    return np.exp(1j * w * tau) * (math.cos(omega_q * tau)
                                   - 1j * w / omega_q
                                   * math.sin(omega_q * tau))


# ---------------------------------------------------------------------------
# CCSN - QG difference of S_BB at (0, pi/2), cancellation-free
# ---------------------------------------------------------------------------

def bb_spectrum_difference(p: MutualParams, w):
    """S_BB^CCSN - S_BB^QG at the canonical angles (0, pi/2), evaluated
    without forming the near-cancelling spectra themselves.

    The relative difference is ~ (omega_g/Lambda)^2 (1e-13 at tabletop
    parameters), far below subtraction precision of the O(1) spectra, so
    every term here is explicitly proportional to omega_g^4: the feedback
    correction on B's own record, the coupled-over-bare response
    normalization, and the latency remainder of A's degenerate filter.
    Thermal contributions are identical between the models and drop out.
    """
    if math.sin(p.zeta_a) != 0.0 or abs(math.sin(p.zeta_b) - 1.0) > 1e-12:
        raise ValueError("difference form assumes angles (0, pi/2)")
    w = np.asarray(w, dtype=float)
    chi = _chi_single(p, w)
    og4 = p.omega_g ** 4
    lam = p.lam
    e = 1.0 / (1.0 - og4 * chi ** 2)
    k_b = wiener_filter(p.omega_q, p.gamma, lam, p.zeta_b, p.tau_b)(w)
    # latency remainder of the zeta_A = 0 filter: Lambda chi - [Lambda chi]_tau
    rem = anticausal_part(ExpRational.from_rational(
        susceptibility(p.omega_q, p.gamma) * lam), p.tau_a)(w)
    abs_chi2 = np.abs(chi) ** 2
    abs_e2 = np.abs(e) ** 2

    # feedback correction on B's own quantum record
    fb = og4 * chi ** 2 * e * lam * k_b
    term_record = (1.0 + lam ** 4 * abs_chi2) * (2.0 * fb.real
                                                 + np.abs(fb) ** 2)
    # change of |coupled response|^2 relative to the bare one
    term_response = -(lam ** 4 * abs_chi2 * abs_e2
                      * (2.0 * (og4 * chi ** 2).real
                         - og4 ** 2 * abs_chi2 ** 2))
    # latency remainder of A's filter in the cross drive of B
    k_a2_minus = np.abs(rem) ** 2 - 2.0 * (lam * chi * np.conj(rem)).real
    term_delay = og4 * lam ** 2 * abs_chi2 * abs_e2 * k_a2_minus
    return term_record + term_response + term_delay


def relative_bb_shift(p: MutualParams, w):
    """(S_BB^CCSN - S_BB^QG)/S_BB^QG at (0, pi/2) on ``w``."""
    qg = qg_spectra(p, w)
    return bb_spectrum_difference(p, w) / qg.s_bb


# ---------------------------------------------------------------------------
# required observation time
# ---------------------------------------------------------------------------

@dataclass
class ObservationTime:
    """Required observation times (s) to resolve the CCSN shift of S_BB,
    per latency value: ``t_exact`` from the integral of the squared
    relative shift, ``t_estimate`` the latency-independent closed-form
    scaling."""

    tau_values: np.ndarray
    t_exact: np.ndarray
    t_estimate: float


def _tobs_grid(p: MutualParams):
    og2 = p.omega_g ** 2
    center = p.omega_q
    half = 200.0 * og2
    pieces = [np.linspace(max(center - half, 1e-3), center + half, 20000)]
    pieces.append(np.geomspace(1e-2, max(center - half, 1.1e-2), 1500))
    hi = 40.0 * max(p.lam, math.sqrt(max(4.0 * p.n_th, 1.0)))
    pieces.append(np.geomspace(center + half, hi, 4000))
    return np.unique(np.concatenate(pieces))


def observation_rate(p: MutualParams):
    """int dW/2pi |relative S_BB shift|^2 over the full real line
    (scaled); the inverse is the scaled observation time."""
    w = _tobs_grid(p)
    ratio = relative_bb_shift(p, w)
    # even integrand: full-line integral is twice the positive half
    return 2.0 * np.trapezoid(ratio ** 2, w) / (2.0 * math.pi)


def observation_time_estimate(p: MutualParams):
    """Closed-form scaling of the no-latency observation time (s):
    inverse of 2 omega_g^2 [peak correlation * omega_g^2/(omega_m^2 +
    sqrt(Lambda^4 + omega_m^4))]^2."""
    og2 = p.omega_g ** 2
    frac = (qg_peak_correlation(p) * og2
            / (1.0 + math.sqrt(p.lam ** 4 + 1.0)))
    rate = 2.0 * og2 * frac ** 2
    return 1.0 / (rate * p.omega_m_si)


def mutual_observation_time(p: MutualParams, tau_list):
    """Required observation time (s) for each latency in ``tau_list``
    (scaled units, applied to both systems)."""
    taus = np.asarray(tau_list, dtype=float)
    t_exact = np.empty(taus.size)
    for i, tau in enumerate(taus):
        rate = observation_rate(p.with_delay(float(tau)))
        t_exact[i] = (1.0 / (rate * p.omega_m_si)
                      if rate > 0.0 else math.inf)
    return ObservationTime(taus, t_exact, observation_time_estimate(p))
