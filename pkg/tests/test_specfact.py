"""Tests for spectral factorization (closed-form and numeric paths)."""

import numpy as np
import pytest

from gravispec.errors import DegenerateDenominator, NegativeSpectrum
from gravispec.specfact import (
    beta_root,
    damped_pole,
    factor_numeric,
    factor_numeric_rational,
    factor_single_mass,
)

RNG = np.random.default_rng(7)


def random_params(rng):
    omega_Q = float(rng.uniform(0.1, 10.0))
    gamma = float(omega_Q * 10.0 ** rng.uniform(-9, -0.7))
    Lam = float(rng.uniform(0.0, 3.0) * omega_Q)
    zeta = float(rng.uniform(0.05, np.pi))
    return omega_Q, gamma, Lam, zeta


def direct_spectrum(omega_Q, gamma, Lam, zeta, w):
    """Homodyne spectrum assembled term by term (independent oracle)."""
    D = w ** 2 + 2j * gamma * w - omega_Q ** 2
    chi = -1.0 / D
    return np.abs(np.cos(zeta) + Lam ** 2 * chi * np.sin(zeta)) ** 2 \
        + np.sin(zeta) ** 2


def test_quartic_factorization_identity():
    # |(w-beta)(w+beta*)|^2 == |cos z D - Lam^2 sin z|^2 + sin^2 z |D|^2
    rng = np.random.default_rng(101)
    for _ in range(100):
        omega_Q, gamma, Lam, zeta = random_params(rng)
        beta = beta_root(omega_Q, gamma, Lam, zeta)
        w = np.concatenate([
            rng.uniform(-3 * omega_Q, 3 * omega_Q, 500),
            omega_Q + gamma * rng.uniform(-5, 5, 500),
        ])
        D = w ** 2 + 2j * gamma * w - omega_Q ** 2
        lhs = np.abs((w - beta) * (w + beta.conjugate())) ** 2
        rhs = (np.abs(np.cos(zeta) * D - Lam ** 2 * np.sin(zeta)) ** 2
               + np.sin(zeta) ** 2 * np.abs(D) ** 2)
        scale = np.abs(D) ** 2 + Lam ** 4 + omega_Q ** 4
        assert np.max(np.abs(lhs - rhs) / scale) < 1e-10


def test_beta_branch_location():
    rng = np.random.default_rng(5)
    for _ in range(50):
        omega_Q, gamma, Lam, zeta = random_params(rng)
        beta = beta_root(omega_Q, gamma, Lam, zeta)
        assert beta.real > 0 and beta.imag < 0


def test_beta_zero_coupling_reduces_to_damped_pole():
    omega_Q, gamma = 2.0, 0.01
    beta = beta_root(omega_Q, gamma, 0.0, 0.6)
    assert beta == pytest.approx(damped_pole(omega_Q, gamma), rel=1e-12)


def test_factor_single_mass_matches_direct_spectrum():
    rng = np.random.default_rng(11)
    for _ in range(30):
        omega_Q, gamma, Lam, zeta = random_params(rng)
        phi, beta, pole = factor_single_mass(omega_Q, gamma, Lam, zeta)
        w = np.concatenate([
            rng.uniform(-3 * omega_Q, 3 * omega_Q, 200),
            omega_Q + gamma * rng.uniform(-3, 3, 200),
        ])
        S_fact = np.abs(phi(w)) ** 2
        S_ref = direct_spectrum(omega_Q, gamma, Lam, zeta, w)
        # on-resonance points with gamma/omega ~ 1e-9 lose ~8 digits to
        # cancellation in either evaluation path
        assert np.allclose(S_fact, S_ref, rtol=1e-7)
        # phi_+ phi_- real and nonnegative on the axis
        prod = phi(w) * phi.conj()(w)
        assert np.allclose(prod.imag, 0.0, atol=1e-12 * np.max(prod.real))
        # all singularities and zeros strictly below the axis
        assert all(z.imag < 0 for z in phi.zeros)
        assert all(p.imag < 0 for p in phi.poles)


def test_factor_numeric_round_trip():
    rng = np.random.default_rng(23)
    for _ in range(20):
        n = int(rng.integers(1, 4))
        roots = [complex(rng.uniform(-2, 2), -10.0 ** rng.uniform(-3, 0))
                 for _ in range(n)]
        g = float(rng.uniform(0.2, 3.0))
        # P = |g prod (w - r)|^2, expanded to real coefficients
        full = np.poly(roots + [r.conjugate() for r in roots]) * g ** 2
        coeffs = full[::-1].real
        gain, got = factor_numeric(coeffs)
        assert gain == pytest.approx(g, rel=1e-9)
        got_sorted = sorted(got, key=lambda z: (z.real, z.imag))
        ref_sorted = sorted(roots, key=lambda z: (z.real, z.imag))
        for a, b in zip(got_sorted, ref_sorted):
            assert a == pytest.approx(b, rel=1e-7, abs=1e-9)
        # whiteness of the recovered factor: |phi|^2 reproduces P
        w = rng.uniform(-3, 3, 100)
        phi_w = gain * np.prod([w - r for r in got], axis=0)
        assert np.allclose(np.abs(phi_w) ** 2,
                           np.polyval(coeffs[::-1], w), rtol=1e-8)


def test_factor_numeric_constant():
    gain, roots = factor_numeric([4.0])
    assert gain == 2.0 and roots == ()


def test_factor_numeric_rejects_real_axis_roots():
    # (w^2 - 1)^2 has double real roots at +-1
    coeffs = np.polynomial.polynomial.polymul([-1, 0, 1], [-1, 0, 1])
    with pytest.raises(DegenerateDenominator):
        factor_numeric(coeffs)


def test_factor_numeric_rejects_negative_and_odd():
    with pytest.raises(NegativeSpectrum):
        factor_numeric([1.0, 0.0, -1.0, 0.0, 0.0])  # negative leading coeff
    with pytest.raises(DegenerateDenominator):
        factor_numeric([1.0, 0.0, 1.0, 1.0])  # odd degree


def test_factor_numeric_rational_builds_causal_factor():
    phi, beta, pole = factor_single_mass(1.0, 0.05, 0.8, np.pi / 2)
    # numerator polynomial |(w-beta)(w+beta*)|^2 expanded
    roots = [beta, -beta.conjugate()]
    full = np.poly(roots + [r.conjugate() for r in roots])
    f = factor_numeric_rational(full[::-1].real,
                                (pole, -pole.conjugate()))
    w = np.linspace(-3, 3, 301)
    assert np.allclose(np.abs(f(w)) ** 2, np.abs(phi(w)) ** 2, rtol=1e-8)
