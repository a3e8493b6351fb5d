"""Small dense symmetric linear algebra: an exact Jacobi eigensolver.

The eigensolver is the ground truth the fast Rayleigh estimates are checked
against, so it is deliberately simple rather than fast. Rotations use the
parallel (round-robin) cyclic ordering: within one round every index belongs
to at most one pair, so the whole round is applied as vectorized row and
column updates.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-10
MAX_SWEEPS = 100


class SymMatrix:
    """A real symmetric matrix whose entries are symmetric bit-for-bit."""

    __slots__ = ("entries",)

    def __init__(self, entries):
        a = np.array(entries, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
        _check_finite(a)
        if not np.array_equal(a, a.T):
            raise ValueError("matrix is not exactly symmetric; use SymMatrix.symmetrize")
        a.setflags(write=False)
        self.entries = a

    @classmethod
    def symmetrize(cls, a) -> "SymMatrix":
        a = np.asarray(a, dtype=np.float64)
        # (a_ij + a_ji) / 2 is bit-identical to (a_ji + a_ij) / 2
        return cls(0.5 * (a + a.T))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __repr__(self) -> str:
        return f"SymMatrix(dim={self.dim})"


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector: np.ndarray


def matvec(m: SymMatrix, v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (m.dim,):
        raise ValueError(f"vector of shape {v.shape} does not match matrix dim {m.dim}")
    return m.entries @ v


def canonical_sign(v: np.ndarray) -> np.ndarray:
    """Flip ``v`` so that its first nonzero component is positive."""
    nz = np.flatnonzero(np.abs(v) > 1e-14)
    if nz.size and v[nz[0]] < 0:
        return -v
    return v


def _check_finite(a: np.ndarray) -> None:
    bad = np.argwhere(~np.isfinite(a))
    if bad.size:
        i, j = bad[0]
        raise ValueError(f"non-finite entry {a[i, j]!r} at index ({i}, {j})")


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairings for one parallel cyclic sweep; every (p, q) appears exactly once."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for i in range(m // 2):
            p, q = players[i], players[m - 1 - i]
            if p < n and q < n:
                ps.append(min(p, q))
                qs.append(max(p, q))
        rounds.append((np.array(ps, dtype=np.intp), np.array(qs, dtype=np.intp)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(m: SymMatrix, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition by cyclic Jacobi rotations.

    Returns ``(w, V)`` with eigenvalues ``w`` (in diagonal order, unsorted)
    and orthonormal eigenvectors in the columns of ``V``. Iteration stops
    once the off-diagonal Frobenius norm is at most ``tol * ||M||_F``.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    a = np.array(m.entries, dtype=np.float64)
    _check_finite(a)
    n = a.shape[0]
    v = np.eye(n)
    scale = np.linalg.norm(a)
    if n == 1 or scale == 0.0:
        return np.diag(a).copy(), v

    rounds = _round_robin(n)
    for _ in range(MAX_SWEEPS):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            break
        for p, q in rounds:
            apq = a[p, q]
            active = np.abs(apq) > 1e-300
            if not active.any():
                continue
            p, q, apq = p[active], q[active], apq[active]
            theta = (a[q, q] - a[p, p]) / (2.0 * apq)
            with np.errstate(over="ignore"):
                # theta**2 may overflow for negligible apq; t then rounds to 0
                t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t[theta == 0.0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c

            cp, cq = a[:, p].copy(), a[:, q].copy()
            a[:, p] = c * cp - s * cq
            a[:, q] = s * cp + c * cq
            rp, rq = a[p, :].copy(), a[q, :].copy()
            a[p, :] = c[:, None] * rp - s[:, None] * rq
            a[q, :] = s[:, None] * rp + c[:, None] * rq
            a[p, q] = 0.0
            a[q, p] = 0.0

            vp, vq = v[:, p].copy(), v[:, q].copy()
            v[:, p] = c * vp - s * vq
            v[:, q] = s * vp + c * vq
        a = 0.5 * (a + a.T)
    return np.diag(a).copy(), v


def sym_eig_min(m: SymMatrix, tol: float = DEFAULT_TOL) -> EigenPair:
    """Smallest eigenvalue of ``m`` and a unit eigenvector for it.

    The vector is sign-normalized so its first nonzero component is positive.
    With a repeated minimum any vector of the eigenspace may be returned.
    """
    w, vecs = jacobi_eigh(m, tol)
    k = int(np.argmin(w))
    vec = vecs[:, k]
    vec = canonical_sign(vec / np.linalg.norm(vec))
    return EigenPair(float(w[k]), vec)
