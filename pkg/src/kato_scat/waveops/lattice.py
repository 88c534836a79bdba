# src/kato_scat/waveops/lattice.py

import hashlib
from dataclasses import dataclass

import numpy as np


def _gauss_panels(edges: np.ndarray, order: int):
    t, w = np.polynomial.legendre.leggauss(order)
    half = np.diff(edges)[:, None] / 2
    mid = (edges[:-1] + edges[1:])[:, None] / 2
    return (mid + half * t[None, :]).ravel(), (half * w[None, :]).ravel()


@dataclass(frozen=True)
class SpectralLattice:
    """
    Quadrature in the spectral parameter on (-Lambda, Lambda) without the sliver |lambda| < lambda_min.

    The right half uses lambda = kappa^2 with Gauss panels uniform in kappa, the left half
    lambda = -u^2 with panels geometric in u.
    """

    big_lambda: float = 400.0
    n_kappa: int = 1200
    n_negative: int = 200
    lambda_min: float = 1e-4
    order: int = 10

    @property
    def k_max(self) -> float:
        return float(np.sqrt(self.big_lambda))

    def kappa(self):
        """Wavenumbers kappa and weights for d kappa."""
        panels = max(self.n_kappa // self.order, 1)
        edges = np.linspace(np.sqrt(self.lambda_min), self.k_max, panels + 1)
        return _gauss_panels(edges, self.order)

    def negative(self):
        """u = sqrt(-lambda) and weights for du."""
        panels = max(self.n_negative // self.order, 1)
        edges = np.geomspace(np.sqrt(self.lambda_min), self.k_max, panels + 1)
        return _gauss_panels(edges, self.order)

    def nodes(self):
        """
        Returns (lambda, d lambda, k at lambda + i0, k at lambda - i0) over both halves.
        """
        kappa, w_kappa = self.kappa()
        u, w_u = self.negative()
        lams = np.concatenate([kappa ** 2, -(u ** 2)])
        weights = np.concatenate([2 * kappa * w_kappa, 2 * u * w_u])
        upper = np.concatenate([kappa, 1j * u]).astype(complex)
        lower = np.concatenate([-kappa, 1j * u]).astype(complex)
        return lams, weights, upper, lower

    def coarsened(self) -> "SpectralLattice":
        return SpectralLattice(self.big_lambda, self.n_kappa // 2, self.n_negative // 2, self.lambda_min, self.order)

    def digest(self) -> str:
        key = f"{self.big_lambda!r}:{self.n_kappa}:{self.n_negative}:{self.lambda_min!r}:{self.order}"
        return hashlib.sha256(key.encode()).hexdigest()[:12]
