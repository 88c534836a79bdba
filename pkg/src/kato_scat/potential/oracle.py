# src/kato_scat/potential/oracle.py

"""Closed-form Jost function of a single step well, used as a reference throughout."""

import logging

import numpy as np
from scipy import optimize

from kato_scat.errors import QuadratureNotConverged
from kato_scat.potential.potential import Potential


def _sin_over(kappa_sq, a):
    """sin(kappa a)/kappa and its derivative in kappa^2, both even in kappa."""
    kappa = np.sqrt(kappa_sq + 0j)
    z = kappa * a
    small = np.abs(z) < 1e-4
    safe = np.where(small, 1.0, kappa)
    ratio = np.where(small, a * (1 - z ** 2 / 6 + z ** 4 / 120), np.sin(z) / safe)
    cos_term = np.cos(z)
    safe_sq = np.where(small, 1.0, kappa_sq + 0j)
    d_ratio = np.where(small, -a ** 3 / 6 + kappa_sq * a ** 5 / 60, (a * cos_term - ratio) / (2 * safe_sq))
    return cos_term, ratio, d_ratio


def step_jost(v0: complex, a: float, k) -> np.ndarray:
    """e(k) = exp(ika) [cos(kappa a) - i (k/kappa) sin(kappa a)], kappa = sqrt(k^2 - v0)."""
    k = np.asarray(k, dtype=complex)
    cos_term, ratio, _ = _sin_over(k ** 2 - v0, a)
    return np.exp(1j * k * a) * (cos_term - 1j * k * ratio)


def step_jost_derivative(v0: complex, a: float, k) -> np.ndarray:
    k = np.asarray(k, dtype=complex)
    cos_term, ratio, d_ratio = _sin_over(k ** 2 - v0, a)
    inner = cos_term - 1j * k * ratio
    # d cos(kappa a)/dk = -a k sin(kappa a)/kappa
    d_inner = -a * k * ratio - 1j * ratio - 1j * k * d_ratio * 2 * k
    return np.exp(1j * k * a) * (1j * a * inner + d_inner)


def step_zero(v0: complex, a: float, guess: complex, tol: float = 1e-13) -> complex:
    """Newton polish of a zero of the closed form starting from `guess`."""
    k = complex(guess)
    for _ in range(100):
        value = complex(step_jost(v0, a, k))
        slope = complex(step_jost_derivative(v0, a, k))
        delta = value / slope
        k -= delta
        if abs(delta) <= tol * max(1.0, abs(k)):
            return k
    raise QuadratureNotConverged(f"closed-form Newton did not settle from {guess}")


def bound_state_count(depth: float) -> int:
    """Number of eigenvalues of a real Dirichlet well V = -depth on [0, 1]."""
    if depth <= 0:
        return 0
    return int(np.floor(np.sqrt(depth) / np.pi + 0.5))


def tune_singular_step(k_real: float, a: float = 1.0, guesses=None) -> Potential:
    """
    Complex step depth v0 e^{i theta} on [0, a] whose Jost function vanishes at the real
    point `k_real`, so the operator has a spectral singularity there.

    The search is a secant iteration in the complex depth, restarted from several guesses.
    """
    if guesses is None:
        guesses = [complex(re, im) for im in (1.0, -1.0, 3.0, -3.0, 0.5) for re in (-3.0, -6.0, -1.0, -10.0, 2.0)]

    def residual(v0):
        return complex(step_jost(v0, a, k_real))

    for guess in guesses:
        try:
            v0 = complex(optimize.newton(residual, complex(guess), tol=1e-14, maxiter=200))
        except (RuntimeError, OverflowError):
            continue
        if np.isfinite(v0) and abs(residual(v0)) < 1e-12 and abs(v0.imag) > 1e-8:
            logging.info(f"Singular step for k = {k_real}: v0 = {v0:.12g}")
            return Potential.step(abs(v0), a, float(np.angle(v0)))
    raise QuadratureNotConverged(f"no complex step depth found with a real zero at k = {k_real}")
