"""Conditional position variance after the measurement is switched off.

The record is taken on t < 0 (phase quadrature, zeta = pi/2) with the
conditional gravity source following the causally filtered mean; the
observer then predicts the position variance at time tau >= 0 with no
further measurement.  The position splits into two independent pieces:

* the quantum deviation from the gravity-generating conditional mean,
  which oscillates at the shifted frequency omega_q and is orthogonal to
  the record, and
* the conditional-mean motion itself (an omega_m oscillator driven by the
  record innovations and the thermal force), which the observer estimates
  from the total record.

All frequency-domain blocks are nested applications of the delayed
causal/anticausal projections on delay-rational transfer functions,
integrated exactly by residues.  The algebra is arranged so that the huge
unconditional/explained cancellations happen symbolically (exact spectral
identities and residue collapsing) — a naive evaluation loses ~17 digits
at gamma ~ 1e-8.  Everything is in scaled units hbar = M = omega_m = 1;
position variances are in units hbar/(M omega_m) (zero-point variance 1/2).

An independent oracle for the tau -> 0 limit solves the stationary
filtering problem as an algebraic Riccati equation on the augmented state
(x, p, x_g, p_g), where (x_g, p_g) is the gravity-generating filter's own
state: that filter knows the thermal force it absorbs, the external
observer does not.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import linalg

from .errors import DegenerateQuadrature
from .freq_algebra import (
    ExpRational,
    RationalFn,
    anticausal_part,
    causal_part,
    collapse,
    integrate_real_line,
    partial_fractions,
)
from .single_mass import SingleMassParams, susceptibility
from .specfact import damped_pole, factor_numeric, factor_single_mass

log = logging.getLogger(__name__)


def _require_phase_quadrature(p):
    if abs(math.sin(p.zeta) - 1.0) > 1e-12:
        raise DegenerateQuadrature(
            "the shut-off variance analysis assumes the phase quadrature "
            "(zeta = pi/2) record")


# ---------------------------------------------------------------------------
# whitening of the total record (quantum + thermal)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TotalWhitening:
    """Causal factorization of the full record spectrum S = |phi_tot|^2 and
    the expansion of the whitened record on (w_q, f_th):

        w_tot = c_wq(omega) w_q + c_fth(omega) f_th

    with w_q the whitened quantum-only record (unit spectrum) and f_th the
    thermal force (spectrum 4 n_th, white/Markovian).
    """

    phi_tot: RationalFn
    c_wq: RationalFn
    c_fth: RationalFn
    beta: complex
    numerator_roots: tuple


def whiten_total(p: SingleMassParams):
    """Spectral factorization of the measured-quadrature spectrum including
    thermal force noise, and the w_tot expansion coefficients."""
    _require_phase_quadrature(p)
    phi_q, beta, pole_q = factor_single_mass(p.omega_q, p.gamma, p.lam,
                                             p.zeta)
    pole_c = damped_pole(1.0, p.gamma)

    # numerator polynomial |N(w)|^2 + 4 Lam^2 n_th,
    # N(w) = (w - beta)(w + beta*) + omega_sn^2
    b = beta.conjugate() - beta
    c = p.omega_sn ** 2 - beta * beta.conjugate()
    n_coeffs = np.array([c, b, 1.0])
    full = np.convolve(n_coeffs, n_coeffs.conjugate())
    if np.max(np.abs(full.imag)) > 1e-12 * np.max(np.abs(full.real)):
        raise AssertionError("numerator polynomial should be real")
    coeffs = full.real
    coeffs[0] += 4.0 * p.lam ** 2 * p.n_th
    gain, roots = factor_numeric(coeffs)
    phi_tot = RationalFn(gain, roots, (pole_c, -pole_c.conjugate()))

    # w_tot = b2 / phi_tot with b2 = N(w)/Dc * w_q + Lam chi_c f_th
    denom = RationalFn(1.0 / gain, (), roots)
    n_roots = tuple(np.roots(n_coeffs[::-1]))
    c_wq = RationalFn(1.0, n_roots, ()) * denom
    c_fth = RationalFn(-p.lam, (), ()) * denom
    return TotalWhitening(phi_tot, c_wq, c_fth, beta, n_roots)


def whitening_residual(tw: TotalWhitening, p: SingleMassParams, w):
    """|S_{w_tot w_tot} - 1| on a real grid (whiteness check)."""
    w = np.asarray(w, dtype=float)
    s = (np.abs(tw.c_wq(w)) ** 2
         + 4.0 * p.n_th * np.abs(tw.c_fth(w)) ** 2)
    return np.abs(s - 1.0)


# ---------------------------------------------------------------------------
# stationary kernels
# ---------------------------------------------------------------------------

def quantum_mean_kernel(p: SingleMassParams):
    """Causal Wiener kernel K estimating the quantum position from the
    whitened record: K = [Lam chi_q S_{a1 w_q}]_0."""
    _require_phase_quadrature(p)
    _, beta, _ = factor_single_mass(p.omega_q, p.gamma, p.lam, p.zeta)
    chi_q = susceptibility(p.omega_q, p.gamma)
    s_a1wq = RationalFn(-p.lam ** 2, (), (beta.conjugate(), -beta))
    return causal_part(ExpRational.from_rational(chi_q * p.lam) * s_a1wq,
                       0.0), beta, s_a1wq


def gravity_center_kernel(p: SingleMassParams):
    """Transfer Q from the whitened record to the gravity-generating
    conditional mean: Q = (chi_c / chi_q) K.

    The multiplication by chi_c/chi_q = D_q/D_c is done per partial
    fraction of K, where the D_q factor cancels the pole exactly:
    D_q(w)/(w - z) is the opposite-root linear polynomial.  This keeps the
    kernel free of spurious omega_q poles (the mean oscillates at omega_m).
    """
    K, beta, s_a1wq = quantum_mean_kernel(p)
    wtq = damped_pole(p.omega_q, p.gamma)
    wtc = damped_pole(1.0, p.gamma)
    terms = []
    for a, r in K.terms:
        poly, pf = partial_fractions(r)
        for z, order, c in pf:
            if order != 1:
                raise AssertionError("quantum mean kernel has simple poles")
            zero = -wtq.conjugate() if abs(z - wtq) < abs(z + wtq.conjugate()) \
                else wtq
            terms.append((a, RationalFn(c, (zero,), (wtc, -wtc.conjugate()))))
    return ExpRational(terms), beta, s_a1wq


# ---------------------------------------------------------------------------
# conditional variance trace
# ---------------------------------------------------------------------------

@dataclass
class VarianceTrace:
    """Conditional variance of position at times after measurement
    shut-off, split into the quantum-deviation block and the classical
    (conditional-mean + thermal) block; units hbar/(M omega_m).

    ``reference`` holds the same trace recomputed without the conditional
    self-attraction (omega_sn = 0), i.e. the standard-QM baseline.
    """

    times: np.ndarray
    v_quantum: np.ndarray
    v_classical: np.ndarray
    reference: "VarianceTrace | None" = None

    @property
    def v_total(self):
        return self.v_quantum + self.v_classical


def _quantum_block(p, beta, s_a1wq, tau):
    """Integrand of the quantum-deviation variance at prediction time tau.

    Var = (1/2) int dW/2pi [ |u|^2 - |[u g]_tau|^2 ],  u = [Lam chi_q]_tau,
    rearranged with the exact identity 1 - |g|^2 = D_q conj(D_q) / quartic
    so that no gamma^-1 resonances survive in the residue sums.
    """
    wtq = damped_pole(p.omega_q, p.gamma)
    chi_q = susceptibility(p.omega_q, p.gamma)
    u = causal_part(ExpRational.from_rational(chi_q * p.lam), tau)
    ug = u * s_a1wq
    a_q = anticausal_part(ug, tau)
    one_minus_g2 = RationalFn(
        1.0,
        (wtq, -wtq.conjugate(), wtq.conjugate(), -wtq),
        (beta, -beta.conjugate(), beta.conjugate(), -beta))
    cross = ug * a_q.conj()
    return (u * u.conj() * one_minus_g2 + cross + cross.conj()
            + (-1.0) * a_q.abs2())


def _classical_block(p, tw, q_kernel, tau):
    """Integrand of the observer's residual uncertainty about the
    conditional-mean motion at prediction time tau.

    With b = [Q]_tau the mean's record kernel, h the Wiener estimator from
    the total record, and A the non-causal remainder of the estimator's
    numerator, the error transfers on the (w_q, f_th) basis are

        E1 = b - h c_wq = (4 n_th Lam / (den conj(den))) G + A c_wq
        E2 = chi_c - h c_fth = (conj(N) / (den conj(den))) G + A c_fth

    with G = Lam b + chi_c N collapsed so the near-cancelling resonance
    residues combine in scalar arithmetic.  The spectral-factorization
    identities den conj(den) = N conj(N) + 4 Lam^2 n_th make the huge
    unconditional/explained cancellation exact.
    """
    lam = p.lam
    chi_c = susceptibility(1.0, p.gamma)
    roots = tuple(tw.phi_tot.zeros)
    croots = tuple(z.conjugate() for z in roots)
    nroots = tw.numerator_roots
    cnroots = tuple(z.conjugate() for z in nroots)
    s_w = tw.c_wq.conj()
    s_f = tw.c_fth.conj() * (4.0 * p.n_th)

    b = causal_part(q_kernel, tau)
    u1 = anticausal_part(b * s_w, tau)
    u2 = anticausal_part(ExpRational.from_rational(chi_c) * s_f, tau)
    a_rem = u1 + u2

    n_rat = RationalFn(1.0, nroots, ())
    nbar_rat = RationalFn(1.0, cnroots, ())
    r1 = RationalFn(1.0, (), roots + croots)
    g = collapse(b * lam + ExpRational.from_rational(chi_c * n_rat))
    e1 = g * (r1 * (4.0 * p.n_th * lam)) + a_rem * tw.c_wq
    e2 = g * (r1 * nbar_rat) + a_rem * tw.c_fth
    return e1.abs2() + e2.abs2() * (4.0 * p.n_th)


def conditional_variance_trace(p: SingleMassParams, times, *,
                               with_reference=True):
    """Observer's conditional variance of position at each time in
    ``times`` (scaled units, >= 0) after the measurement stops at t = 0.

    The quantum block is the free evolution of the gravity filter's error
    (resonant at omega_q, undriven after shut-off); the classical block is
    the observer's residual uncertainty about the conditional-mean motion
    (resonant at omega_m, thermally driven throughout).  The two are
    independent and add.  Unless ``with_reference`` is false, the
    standard-QM baseline (omega_sn = 0, same code path) is attached as
    ``reference``.
    """
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise ValueError("times must be >= 0")
    _require_phase_quadrature(p)
    tw = whiten_total(p)
    q_kernel, beta, s_a1wq = gravity_center_kernel(p)
    vq = np.empty(times.size)
    vc = np.empty(times.size)
    for i, t in enumerate(times):
        val_q, _ = integrate_real_line(_quantum_block(p, beta, s_a1wq, t))
        val_c, _ = integrate_real_line(_classical_block(p, tw, q_kernel, t))
        vq[i] = 0.5 * val_q.real
        vc[i] = 0.5 * val_c.real
        for name, v in (("quantum", val_q), ("classical", val_c)):
            if abs(v.imag) > 1e-6 * max(abs(v.real), 1.0):
                log.warning("%s block at t=%g has imaginary residue %g",
                            name, t, v.imag)
    ref = None
    if with_reference:
        ref = conditional_variance_trace(replace(p, omega_sn=0.0), times,
                                         with_reference=False)
    return VarianceTrace(times, vq, vc, ref)


# ---------------------------------------------------------------------------
# stationary Riccati oracle for the tau -> 0 limit
# ---------------------------------------------------------------------------

def stationary_variance_riccati(p: SingleMassParams):
    """Stationary conditional variance of x by an independent route.

    Solves the continuous filtering Riccati equation.  For omega_sn > 0 the
    state is augmented with the gravity-generating filter's own estimate
    (which knows the thermal force while the observer does not); for
    omega_sn = 0 it reduces to the standard 2-state problem.  All white
    noises carry intensity S/2 (symmetrized unit-vacuum convention).
    """
    _require_phase_quadrature(p)
    g2 = 2.0 * p.gamma
    wq2 = p.omega_q ** 2
    lam = p.lam
    r = 0.5                      # shot-noise intensity
    q_ba = 0.5 * lam ** 2        # back-action force intensity
    q_th = 2.0 * p.n_th          # thermal force intensity (= (4 n_th)/2)

    if p.omega_sn == 0.0:
        a = np.array([[0.0, 1.0], [-1.0, -g2]])
        c = np.array([[lam, 0.0]])
        q = np.diag([0.0, q_ba + q_th])
        pcov = linalg.solve_continuous_are(a.T, c.T, q, np.array([[r]]))
        return float(pcov[0, 0])

    # gravity-generating filter: knows f_th, estimates the quantum part
    a_g = np.array([[0.0, 1.0], [-wq2, -g2]])
    c_row = np.array([[lam, 0.0]])
    q_g = np.diag([0.0, q_ba])
    p_g = linalg.solve_continuous_are(a_g.T, c_row.T, q_g, np.array([[r]]))
    gain = p_g @ c_row.T / r     # injection gain of the record

    # augmented truth: X = (x, p, x_g, p_g); the gravity source omega_sn^2 x_g
    # acts on the true momentum; the filter consumes the record
    # y = lam x + a2 and the (known to it) f_th
    wsn2 = p.omega_sn ** 2
    A = np.zeros((4, 4))
    A[0, 1] = 1.0
    A[1, :] = [-wq2, -g2, wsn2, 0.0]
    A[2, :] = [gain[0, 0] * lam, 0.0, -gain[0, 0] * lam, 1.0]
    A[3, :] = [gain[1, 0] * lam, 0.0, -1.0 - gain[1, 0] * lam, -g2]
    C = np.array([[lam, 0.0, 0.0, 0.0]])
    # noise columns: a1 -> p; f_th -> p and p_g; a2 -> filter states and y
    B = np.zeros((4, 3))
    B[1, 0] = lam        # a1
    B[1, 1] = 1.0        # f_th on truth
    B[3, 1] = 1.0        # f_th known to the gravity filter
    B[2, 2] = gain[0, 0]
    B[3, 2] = gain[1, 0]
    W = np.diag([0.5, q_th, r])
    Q = B @ W @ B.T
    S = B @ W @ np.array([[0.0], [0.0], [1.0]])  # correlation with y-noise
    pcov = linalg.solve_continuous_are(A.T, C.T, Q, np.array([[r]]), s=S)
    return float(pcov[0, 0])
