"""Dense symmetric linear algebra used by the StAE branch.

Everything here works on plain float64 numpy arrays. The eigensolver is a
cyclic Jacobi method with a round-robin pairing, so each of the ``n - 1``
rounds of a sweep applies ``n // 2`` disjoint rotations at once.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import (
    DimensionMismatch,
    KTooLarge,
    NoConvergence,
    NonSquare,
    NotSymmetric,
    SingularPencil,
    ZeroVector,
)

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
PENCIL_EPS = 1e-12


@dataclass(frozen=True)
class EigenPair:
    values: np.ndarray  # ascending
    vectors: np.ndarray  # columns are eigenvectors


@dataclass(frozen=True)
class SimilarityGraph:
    weights: np.ndarray
    neighbor_count: int


def _as_matrix(a, name="a") -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Tournament schedule: ``n - 1`` rounds of disjoint index pairs covering
    every pair exactly once (a dummy player is added when ``n`` is odd)."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        p, q = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < n and b < n:
                p.append(min(a, b))
                q.append(max(a, b))
        rounds.append((np.array(p, dtype=np.intp), np.array(q, dtype=np.intp)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def sym_eig(a, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS) -> EigenPair:
    """Eigendecomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius norm falls below
    ``tol * max(1, ||a||_F)``. Eigenvalues are returned in ascending order.
    """
    a = _as_matrix(a)
    n, m = a.shape
    if n != m:
        raise NonSquare(f"expected a square matrix, got {a.shape}")
    scale = np.max(np.abs(a)) if a.size else 0.0
    if a.size and np.max(np.abs(a - a.T)) > 1e-9 * (1.0 + scale):
        raise NotSymmetric("matrix is not symmetric")
    if n == 0:
        return EigenPair(np.zeros(0), np.zeros((0, 0)))

    A = 0.5 * (a + a.T)
    V = np.eye(n)
    target = tol * max(1.0, float(np.linalg.norm(A)))
    rounds = _round_robin(n) if n > 1 else []
    diag_mask = np.eye(n, dtype=bool)

    for _sweep in range(max_sweeps + 1):
        off = np.linalg.norm(A[~diag_mask])
        if off < target:
            break
        if _sweep == max_sweeps:
            raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps (off={off:.3e})")
        for p, q in rounds:
            apq = A[p, q]
            active = apq != 0.0
            if not np.any(active):
                continue
            p, q, apq = p[active], q[active], apq[active]
            with np.errstate(over="ignore", divide="ignore"):
                # a denormal pivot gives tau = inf and hence no rotation
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            # A <- J^T A J with J the product of the disjoint rotations
            Ap, Aq = A[:, p].copy(), A[:, q].copy()
            A[:, p] = c * Ap - s * Aq
            A[:, q] = s * Ap + c * Aq
            Ap, Aq = A[p, :].copy(), A[q, :].copy()
            A[p, :] = c[:, None] * Ap - s[:, None] * Aq
            A[q, :] = s[:, None] * Ap + c[:, None] * Aq
            A[p, q] = 0.0
            A[q, p] = 0.0
            Vp, Vq = V[:, p].copy(), V[:, q].copy()
            V[:, p] = c * Vp - s * Vq
            V[:, q] = s * Vp + c * Vq

    values = np.diag(A).copy()
    order = np.argsort(values, kind="stable")
    return EigenPair(values[order], V[:, order])


def solve_sylvester(a_sy, b_sy, c_sy) -> np.ndarray:
    """Solve ``a_sy @ X + X @ b_sy = c_sy`` for symmetric ``a_sy`` and ``b_sy``.

    Both coefficient matrices are diagonalised, the right-hand side is
    rotated into the joint eigenbasis and divided entrywise by
    ``lambda_i + mu_j``.
    """
    a_sy = _as_matrix(a_sy, "a_sy")
    b_sy = _as_matrix(b_sy, "b_sy")
    c_sy = _as_matrix(c_sy, "c_sy")
    m, n = c_sy.shape
    if a_sy.shape != (m, m) or b_sy.shape != (n, n):
        raise DimensionMismatch(
            f"incompatible shapes a={a_sy.shape}, b={b_sy.shape}, c={c_sy.shape}"
        )
    ea = sym_eig(a_sy)
    eb = sym_eig(b_sy)
    denom = ea.values[:, None] + eb.values[None, :]
    if denom.size and np.min(denom) <= PENCIL_EPS:
        raise SingularPencil(f"lambda_i + mu_j reaches {np.min(denom):.3e}")
    rotated = ea.vectors.T @ c_sy @ eb.vectors
    return ea.vectors @ (rotated / denom) @ eb.vectors.T


def _vertices(h, axis: str) -> np.ndarray:
    h = _as_matrix(h, "h")
    if axis == "instances":
        return h.T
    if axis == "features":
        return h
    raise ValueError(f"unknown axis {axis!r}")


def _cosines(vertices: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vertices, axis=1)
    if np.any(norms == 0.0):
        bad = int(np.flatnonzero(norms == 0.0)[0])
        raise ZeroVector(f"vertex {bad} is the zero vector; cosine undefined")
    unit = vertices / norms[:, None]
    return np.clip(unit @ unit.T, -1.0, 1.0)


def _linked(cos: np.ndarray, k: int) -> np.ndarray:
    n = cos.shape[0]
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k >= n:
        raise KTooLarge(f"k={k} needs more than {n} vertices")
    ranking = -cos
    np.fill_diagonal(ranking, np.inf)
    top = np.argsort(ranking, axis=1, kind="stable")[:, :k]
    linked = np.zeros((n, n), dtype=bool)
    linked[np.repeat(np.arange(n), k), top.ravel()] = True
    linked |= linked.T
    np.fill_diagonal(linked, False)
    return linked


def knn_mask(h, k: int, axis: Literal["instances", "features"] = "instances") -> np.ndarray:
    """Boolean adjacency of :func:`knn_cosine_graph` (which pairs carry an edge)."""
    return _linked(_cosines(_vertices(h, axis)), k)


def knn_cosine_graph(
    h, k: int, axis: Literal["instances", "features"] = "instances"
) -> SimilarityGraph:
    """Symmetric k-nearest-neighbour graph weighted by cosine similarity.

    Vertices are the columns of ``h`` for ``axis="instances"`` and its rows
    for ``axis="features"``. An edge ``(i, j)`` carries ``cos(v_i, v_j)``
    when either endpoint is among the other's ``k`` most similar vertices.
    Ties in the neighbour ranking go to the lower vertex index.
    """
    cos = _cosines(_vertices(h, axis))
    weights = np.where(_linked(cos, k), cos, 0.0)
    weights = 0.5 * (weights + weights.T)  # cos is symmetric up to rounding
    return SimilarityGraph(weights=weights, neighbor_count=k)


def graph_laplacian(w) -> np.ndarray:
    """``Q - W`` where ``Q`` is the diagonal matrix of column sums of ``W``."""
    weights = w.weights if isinstance(w, SimilarityGraph) else _as_matrix(w, "w")
    if weights.shape[0] != weights.shape[1]:
        raise NonSquare(f"weight matrix must be square, got {weights.shape}")
    return np.diag(weights.sum(axis=0)) - weights
