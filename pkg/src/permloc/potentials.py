"""Laplace transmission problem on reference shapes and polarization tensors.

Each Cartesian component of the potential is represented as a single-layer
potential whose density solves a second-kind integral equation with the
adjoint double-layer operator K*. With G = log|x-y| / (2 pi):

    d/dn S[phi] from outside = (+1/2 I + K*) phi
    d/dn S[phi] from inside  = (-1/2 I + K*) phi

The flux condition k * d/dn|inside - d/dn|outside = -nu becomes

    ((k+1)/2 I - (k-1) K*) phi = nu,

which is uniformly well conditioned for all contrasts k > 0. The ``+`` trace
convention is "inside" by default (the limit taken from within the shape);
the ``plus_side`` flag switches the tensor to the outside trace, which for the
unit disk moves the tensor from 2|B|/(k+1) I to 2k|B|/(k+1) I.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import InclusionShape, PermlocError

PLUS_SIDE_DEFAULT = "inside"


@dataclass(frozen=True)
class ShapeBoundary:
    """Nystrom nodes on a smooth closed curve with arclength weights."""

    nodes: np.ndarray      # (n, 2)
    normals: np.ndarray    # (n, 2) outward unit normals
    weights: np.ndarray    # (n,) arclength quadrature weights
    curvature: np.ndarray  # (n,) signed curvature
    params: np.ndarray     # (n,) parameter values in [0, 2pi)

    @property
    def n(self) -> int:
        return self.nodes.shape[0]

    def area(self) -> float:
        # divergence theorem: |B| = 1/2 * integral of y . nu ds
        return float(0.5 * np.sum(self.weights *
                                  np.einsum("nd,nd->n", self.nodes, self.normals)))


def discretize_shape(shape: InclusionShape, n: int) -> ShapeBoundary:
    """Spectral (periodic trapezoid) quadrature nodes for a smooth closed curve."""
    if n < 16:
        raise ValueError("need at least 16 quadrature nodes")
    t = 2.0 * math.pi * np.arange(n) / n
    y, dy, d2y = shape.curve(t)
    speed = np.hypot(dy[:, 0], dy[:, 1])
    if np.any(speed <= 0) or shape.area() <= 0:
        raise PermlocError("degenerate shape: zero speed or non-positive area")
    normals = np.stack([dy[:, 1], -dy[:, 0]], axis=1) / speed[:, None]
    weights = speed * (2.0 * math.pi / n)
    curvature = (dy[:, 0] * d2y[:, 1] - dy[:, 1] * d2y[:, 0]) / speed**3
    return ShapeBoundary(nodes=y, normals=normals, weights=weights,
                         curvature=curvature, params=t)


def adjoint_double_layer(b: ShapeBoundary) -> np.ndarray:
    """Matrix of K*: kernel (x - y) . nu(x) / (2 pi |x - y|^2), weights folded in.

    The kernel is smooth on a smooth curve; the diagonal limit is kappa / (4 pi).
    """
    dx = b.nodes[:, None, :] - b.nodes[None, :, :]
    r2 = np.einsum("ijd,ijd->ij", dx, dx)
    np.fill_diagonal(r2, 1.0)
    ker = np.einsum("ijd,id->ij", dx, b.normals) / (2.0 * math.pi * r2)
    np.fill_diagonal(ker, b.curvature / (4.0 * math.pi))
    return ker * b.weights[None, :]


@dataclass(frozen=True)
class TransmissionSolution:
    """Layer densities and normal-derivative traces per Cartesian component."""

    contrast: float
    density: np.ndarray    # (n, 2)
    dn_inner: np.ndarray   # (n, 2) limit from inside the shape
    dn_outer: np.ndarray   # (n, 2) limit from outside


def solve_transmission(b: ShapeBoundary, k: float) -> TransmissionSolution:
    """Solve the transmission problem for contrast k = mu_inclusion / mu_background."""
    if k <= 0:
        raise PermlocError(f"contrast must be positive, got {k}")
    n = b.n
    if k == 1.0:
        zero = np.zeros((n, 2))
        return TransmissionSolution(contrast=k, density=zero, dn_inner=zero.copy(),
                                    dn_outer=zero.copy())
    Kstar = adjoint_double_layer(b)
    A = 0.5 * (k + 1.0) * np.eye(n) - (k - 1.0) * Kstar
    try:
        density = np.linalg.solve(A, b.normals)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - A is provably invertible
        raise PermlocError(
            f"transmission solve failed at contrast {k}; cond={np.linalg.cond(A):.3e}"
        ) from exc
    dn_inner = -0.5 * density + Kstar @ density
    dn_outer = 0.5 * density + Kstar @ density
    return TransmissionSolution(contrast=k, density=density, dn_inner=dn_inner,
                                dn_outer=dn_outer)


@dataclass(frozen=True)
class PolarizationTensor:
    """The 2x2 shape/contrast signature matrix with provenance."""

    M: np.ndarray
    contrast: float
    n_nodes: int
    symmetry_defect: float
    plus_side: str

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.M)[0])


def polarization_tensor(b: ShapeBoundary, k: float,
                        plus_side: str = PLUS_SIDE_DEFAULT) -> PolarizationTensor:
    """Quadrature evaluation of M_kl = sum [nu_k + (k-1) dPhi^k/dn] y_l w.

    The result is symmetrized; the symmetry defect before symmetrization is
    reported relative to the matrix norm.
    """
    if plus_side not in ("inside", "outside"):
        raise ValueError("plus_side must be 'inside' or 'outside'")
    sol = solve_transmission(b, k)
    dn = sol.dn_inner if plus_side == "inside" else sol.dn_outer
    integrand = b.normals + (k - 1.0) * dn          # (n, 2), component index = row of M
    M = np.einsum("n,nk,nl->kl", b.weights, integrand, b.nodes)
    defect = float(np.linalg.norm(M - M.T) / max(np.linalg.norm(M), 1e-300))
    M_sym = 0.5 * (M + M.T)
    return PolarizationTensor(M=M_sym, contrast=k, n_nodes=b.n,
                              symmetry_defect=defect, plus_side=plus_side)


def disk_tensor_value(radius: float, k: float,
                      plus_side: str = PLUS_SIDE_DEFAULT) -> float:
    """Closed-form disk law: 2|B|/(k+1) (inside trace) or 2k|B|/(k+1) (outside)."""
    area = math.pi * radius**2
    return 2.0 * area / (k + 1.0) if plus_side == "inside" else 2.0 * k * area / (k + 1.0)
