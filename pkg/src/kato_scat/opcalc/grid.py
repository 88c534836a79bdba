# src/kato_scat/opcalc/grid.py

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from kato_scat.errors import ConfigError


def _barycentric_weights(points: np.ndarray) -> np.ndarray:
    diffs = points[:, None] - points[None, :]
    np.fill_diagonal(diffs, 1.0)
    return 1.0 / np.prod(diffs, axis=1)


def differentiation_matrix(points: np.ndarray) -> np.ndarray:
    """First-derivative matrix of the interpolating polynomial through `points`."""
    bary = _barycentric_weights(points)
    diffs = points[:, None] - points[None, :]
    np.fill_diagonal(diffs, 1.0)
    matrix = (bary[None, :] / bary[:, None]) / diffs
    np.fill_diagonal(matrix, 0.0)
    np.fill_diagonal(matrix, -matrix.sum(axis=1))
    return matrix


@dataclass(frozen=True, eq=False)
class Grid:
    """
    Composite Gauss-Legendre panels on [0, x_max].

    Panel edges always contain 0, x_max and every breakpoint passed to `build`, so a
    piecewise-constant potential is smooth inside each panel.
    """

    nodes: np.ndarray
    weights: np.ndarray
    panel_edges: np.ndarray
    order: int

    @property
    def x_max(self) -> float:
        return float(self.panel_edges[-1])

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def panel_count(self) -> int:
        return self.panel_edges.size - 1

    @property
    def k_nyquist(self) -> float:
        """Largest wavenumber the panels resolve, pi over the mean node spacing."""
        return float(np.pi * self.size / self.x_max)

    @classmethod
    def build(cls, x_max: float, n_nodes: int, breakpoints=(), order: int = 10) -> "Grid":
        if x_max <= 0:
            raise ConfigError(f"grid needs a positive X_max, got {x_max}")
        if n_nodes < order:
            raise ConfigError(f"grid needs at least {order} nodes, got {n_nodes}")

        cuts = sorted({0.0, float(x_max)} | {float(b) for b in breakpoints if 0 < b < x_max})
        lengths = np.diff(cuts)
        n_panels = max(int(np.ceil(n_nodes / order)), len(lengths))

        # largest-remainder split of the panel budget, at least one panel per piece
        share = lengths / lengths.sum() * n_panels
        counts = np.maximum(np.floor(share).astype(int), 1)
        remainder = share - np.floor(share)
        for index in np.argsort(-remainder, kind="stable"):
            if counts.sum() >= n_panels:
                break
            counts[index] += 1

        edges = [0.0]
        for left, right, count in zip(cuts[:-1], cuts[1:], counts):
            edges.extend(np.linspace(left, right, count + 1)[1:])
        edges = np.asarray(edges)

        ref_nodes, ref_weights = np.polynomial.legendre.leggauss(order)
        half = np.diff(edges)[:, None] / 2
        mid = (edges[:-1] + edges[1:])[:, None] / 2
        nodes = (mid + half * ref_nodes[None, :]).ravel()
        weights = (half * ref_weights[None, :]).ravel()
        logging.debug(f"Grid: {edges.size - 1} panels of order {order} on [0, {x_max}]")
        return cls(nodes=nodes, weights=weights, panel_edges=edges, order=order)

    def refined(self) -> "Grid":
        """Same breakpoints, every panel split in two."""
        mids = (self.panel_edges[:-1] + self.panel_edges[1:]) / 2
        edges = np.sort(np.concatenate([self.panel_edges, mids]))
        ref_nodes, ref_weights = np.polynomial.legendre.leggauss(self.order)
        half = np.diff(edges)[:, None] / 2
        mid = (edges[:-1] + edges[1:])[:, None] / 2
        return Grid(nodes=(mid + half * ref_nodes[None, :]).ravel(),
                    weights=(half * ref_weights[None, :]).ravel(),
                    panel_edges=edges, order=self.order)

    @cached_property
    def knots(self) -> np.ndarray:
        """Sorted union of panel edges and nodes; propagation steps between consecutive knots."""
        return np.union1d(self.panel_edges, self.nodes)

    @cached_property
    def node_positions(self) -> np.ndarray:
        """Index of every node inside `knots`."""
        return np.searchsorted(self.knots, self.nodes)

    def panel_slices(self):
        for p in range(self.panel_count):
            yield slice(p * self.order, (p + 1) * self.order)

    @cached_property
    def second_derivative(self) -> np.ndarray:
        """Block-diagonal panelwise spectral second derivative on the nodes."""
        matrix = np.zeros((self.size, self.size))
        for block in self.panel_slices():
            first = differentiation_matrix(self.nodes[block])
            matrix[block, block] = first @ first
        return matrix

    def inner(self, f: np.ndarray, g: np.ndarray) -> complex:
        """Weighted inner product sum w f conj(g), linear in the first slot."""
        return complex(np.sum(self.weights * f * np.conj(g)))

    def norm(self, f: np.ndarray) -> float:
        return float(np.sqrt(np.sum(self.weights * np.abs(f) ** 2)))

    def support_mask(self, potential) -> np.ndarray:
        return np.abs(potential(self.nodes)) > 0
