"""Spectral factorization of measured-quadrature noise spectra.

A stationary spectrum S(omega) >= 0 that is rational in omega factors as
S = phi_+ phi_- with phi_- = conj(phi_+) on the real axis and all poles and
zeros of phi_+ strictly below the real axis (the causal/minimum-phase factor
under the e^{+i omega t} transform convention used throughout).

Two paths are provided: a closed form for the homodyne spectrum of a single
monitored oscillator (the quartic numerator root beta is known analytically)
and a numeric path for spectra only available as polynomial coefficients.
"""

from __future__ import annotations

import cmath
import logging
import math

import numpy as np

from .errors import DegenerateDenominator, NegativeSpectrum, RootSignAmbiguity
from .freq_algebra import RationalFn

log = logging.getLogger(__name__)


def damped_pole(omega0, gamma):
    """Lower-half-plane pole sqrt(omega0^2 - gamma^2) - i gamma of the
    susceptibility 1/(omega0^2 - 2 i gamma omega - omega^2)."""
    return cmath.sqrt(omega0 ** 2 - gamma ** 2) - 1j * gamma


def beta_root(omega_Q, gamma, Lambda, zeta):
    """Numerator root beta of the factored homodyne spectrum.

    beta^2 = omega_Q^2 - 2 gamma^2 + Lambda^2 sin(zeta) cos(zeta)
             - i sqrt(4 gamma^2 (omega_Q^2 - gamma^2)
                      + 2 gamma^2 Lambda^2 sin(2 zeta)
                      + Lambda^4 sin(zeta)^4)

    The branch with Re(beta) > 0 and Im(beta) < 0 is returned so that beta
    and -conj(beta) both lie below the real axis.
    """
    s, c = math.sin(zeta), math.cos(zeta)
    radicand = (4 * gamma ** 2 * (omega_Q ** 2 - gamma ** 2)
                + 2 * gamma ** 2 * Lambda ** 2 * math.sin(2 * zeta)
                + Lambda ** 4 * s ** 4)
    beta2 = (omega_Q ** 2 - 2 * gamma ** 2 + Lambda ** 2 * s * c
             - 1j * cmath.sqrt(radicand))
    beta = cmath.sqrt(beta2)
    if beta.real < 0:
        beta = -beta
    if not (beta.real > 0 and beta.imag < 0):
        raise RootSignAmbiguity(
            f"no branch of sqrt({beta2}) satisfies Re>0, Im<0 "
            f"(omega_Q={omega_Q}, gamma={gamma}, Lambda={Lambda}, zeta={zeta})")
    return beta


def factor_single_mass(omega_Q, gamma, Lambda, zeta):
    """Causal factor of the homodyne-quadrature spectrum of one oscillator.

    The measured quadrature (shot noise plus back-action filtered through the
    oscillator) has unit-gain spectrum

        S(omega) = |cos z + Lambda^2 chi(omega) sin z|^2 + sin^2 z
                 = phi_+ phi_-

    with chi = 1/(omega_Q^2 - 2 i gamma omega - omega^2).  Returns
    ``(phi_plus, beta, pole)`` where phi_plus is a RationalFn with zeros
    (beta, -conj(beta)) and poles (pole, -conj(pole)),
    pole = sqrt(omega_Q^2 - gamma^2) - i gamma.
    """
    beta = beta_root(omega_Q, gamma, Lambda, zeta)
    pole = damped_pole(omega_Q, gamma)
    phi_plus = RationalFn(1.0, (beta, -beta.conjugate()),
                          (pole, -pole.conjugate()))
    return phi_plus, beta, pole


def factor_numeric(coeffs, rtol=1e-9, check_nonnegative=True):
    """Spectral factorization of a polynomial spectrum from its coefficients.

    ``coeffs`` are real ascending coefficients of P(omega) with
    P(omega) >= 0 for real omega.  Returns ``(gain, roots)`` with gain > 0
    and ``roots`` strictly below the real axis such that

        P(omega) = |gain * prod(omega - root_i)|^2   (real omega).

    Roots within ``rtol`` of the real axis are rejected (the factor would
    not be invertible there).
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.ndim != 1 or coeffs.size < 1:
        raise ValueError("coeffs must be a non-empty 1-d real array")
    while coeffs.size > 1 and coeffs[-1] == 0.0:
        coeffs = coeffs[:-1]
    deg = coeffs.size - 1
    if deg % 2 != 0:
        raise DegenerateDenominator(
            "spectrum polynomial must have even degree")
    if coeffs[-1] <= 0.0:
        raise NegativeSpectrum("leading coefficient must be positive")

    if deg == 0:
        return math.sqrt(coeffs[0]), ()

    roots = np.roots(coeffs[::-1])
    scale = max(1.0, float(np.max(np.abs(roots))))
    near_real = np.abs(roots.imag) <= rtol * scale
    if np.any(near_real):
        raise DegenerateDenominator(
            f"root(s) on the real axis within tolerance: "
            f"{roots[near_real]}")
    lower = roots[roots.imag < 0]
    if 2 * lower.size != deg:
        raise DegenerateDenominator(
            f"half-plane partition failed: {lower.size} of {deg} roots below "
            "the real axis")

    if check_nonnegative:
        probe = np.concatenate([roots.real, [0.0, scale, -scale]])
        vals = np.polyval(coeffs[::-1], probe)
        floor = -1e-9 * max(1.0, float(np.max(np.abs(vals))))
        if np.any(vals < floor):
            raise NegativeSpectrum(
                "polynomial is negative on the real axis")

    gain = math.sqrt(coeffs[-1])
    return gain, tuple(complex(r) for r in sorted(lower, key=lambda z: z.real))


def factor_numeric_rational(num_coeffs, den_poles, rtol=1e-9):
    """Causal factor of S = P(omega)/|D(omega)|^2 given P's coefficients and
    the lower-half-plane poles of the (already factored) denominator."""
    gain, roots = factor_numeric(num_coeffs, rtol=rtol)
    for p in den_poles:
        if p.imag >= 0:
            raise DegenerateDenominator(
                f"denominator pole {p} not below the real axis")
    return RationalFn(gain, roots, tuple(den_poles))
