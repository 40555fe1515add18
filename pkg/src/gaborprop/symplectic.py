"""Dense linear algebra on the phase space R^{2d} / C^{2d}.

Matrices are plain :class:`numpy.ndarray` objects of shape ``(2d, 2d)``;
:func:`as_phase_matrix` validates that shape and finiteness.  Real linear
subspaces are carried by :class:`Subspace`, which stores an orthonormal basis
as columns.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

DEFAULT_RANK_TOL = 1e-10
_ABS_RANK_FLOOR = 1e-14
_EXPM_MAX_ENTRY = 1e8


def as_phase_matrix(M, *, real: bool = False) -> np.ndarray:
    """Validate a 2d x 2d phase-space matrix and return it as an array."""
    M = np.asarray(M, dtype=float if real else complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] % 2:
        raise ValueError(f"phase-space matrix must be square with even side, got shape {M.shape}")
    if M.shape[0] == 0:
        raise ValueError("phase-space matrix must be non-empty")
    if not np.all(np.isfinite(M)):
        raise ValueError("phase-space matrix has non-finite entries")
    return M


def dim_d(M) -> int:
    return np.shape(M)[0] // 2


@dataclass(frozen=True)
class Subspace:
    """Real subspace of R^{2d} with orthonormal basis columns (shape ``(2d, k)``)."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim != 2:
            raise ValueError("basis must be a 2-D array")
        n, k = b.shape
        if n % 2 or k > n:
            raise ValueError(f"invalid basis shape {b.shape}")
        if k and np.max(np.abs(b.T @ b - np.eye(k))) > 1e-10:
            raise ValueError("basis columns are not orthonormal")
        object.__setattr__(self, "basis", b)

    @property
    def ambient(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def dim_d(self) -> int:
        return self.ambient // 2

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def distance(self, v) -> np.ndarray:
        """Euclidean distance from the rows of ``v`` to the subspace."""
        v = np.atleast_2d(np.asarray(v, dtype=float))
        residual = v - (v @ self.basis) @ self.basis.T
        return np.linalg.norm(residual, axis=1)

    def contains(self, other: "Subspace", tol: float = 1e-9) -> bool:
        if other.dim == 0:
            return True
        return bool(np.max(self.distance(other.basis.T)) <= tol)

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(np.eye(n))

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        return cls(np.zeros((n, 0)))

    @classmethod
    def span(cls, vectors, tol: float = DEFAULT_RANK_TOL) -> "Subspace":
        """Orthonormalize the columns of ``vectors`` (rank-revealing)."""
        V = np.asarray(vectors, dtype=float)
        if V.ndim == 1:
            V = V[:, None]
        if V.shape[1] == 0:
            return cls.zero(V.shape[0])
        U, sv, _ = np.linalg.svd(V, full_matrices=False)
        cutoff = tol * sv[0] if sv[0] > 0 else _ABS_RANK_FLOOR
        return cls(U[:, sv > max(cutoff, _ABS_RANK_FLOOR)])


def standard_symplectic_form(d: int) -> np.ndarray:
    """J = [[0, I], [-I, 0]] in d x d blocks."""
    if int(d) != d or d < 1:
        raise ValueError(f"d must be a positive integer, got {d!r}")
    d = int(d)
    J = np.zeros((2 * d, 2 * d))
    J[:d, d:] = np.eye(d)
    J[d:, :d] = -np.eye(d)
    return J


def matrix_exponential(M) -> np.ndarray:
    """exp(M) by scaling and squaring with a degree-13 Pade approximant.

    Delegates to :func:`scipy.linalg.expm` (Al-Mohy & Higham).  Inputs with
    entries larger than 1e8 in magnitude are rejected as out of range.
    """
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"matrix_exponential needs a square matrix, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix_exponential: non-finite entries")
    if M.size and np.max(np.abs(M)) > _EXPM_MAX_ENTRY:
        raise OverflowError("matrix_exponential: entries exceed 1e8, out of range")
    return scipy.linalg.expm(M)


def is_symplectic(T, tol: float = 1e-8) -> bool:
    """True iff max |T^t J T - J| <= tol (complex symplectic when T is complex)."""
    T = np.asarray(T)
    if T.ndim != 2 or T.shape[0] != T.shape[1] or T.shape[0] % 2:
        return False
    J = standard_symplectic_form(T.shape[0] // 2)
    return bool(np.max(np.abs(T.T @ J @ T - J)) <= tol)


def positivity_form(T) -> np.ndarray:
    """Hermitian matrix H with X^* H X = i(sigma(conj(TX), TX) - sigma(conj X, X)).

    With sigma(X, Y) = <JX, Y> this is H = i(J - T^* J T).
    """
    T = np.asarray(T, dtype=complex)
    J = standard_symplectic_form(T.shape[0] // 2)
    H = 1j * (J - T.conj().T @ J @ T)
    return 0.5 * (H + H.conj().T)


def is_positive_symplectic(T, tol: float = 1e-8) -> bool:
    if not is_symplectic(T, tol):
        raise ValueError("is_positive_symplectic: matrix is not symplectic")
    return bool(np.min(np.linalg.eigvalsh(positivity_form(T))) >= -tol)


def kernel(M, tol: float = DEFAULT_RANK_TOL) -> Subspace:
    """Null space of a real matrix with ``n`` columns, as a subspace of R^n.

    Singular values at or below ``tol * sigma_max`` count as zero; when
    sigma_max itself vanishes an absolute floor of 1e-14 is used.
    """
    M = np.asarray(M)
    if np.iscomplexobj(M):
        if np.max(np.abs(M.imag), initial=0.0) > 0:
            raise ValueError("kernel expects a real matrix")
        M = M.real
    M = np.atleast_2d(np.asarray(M, dtype=float))
    n = M.shape[1]
    if M.shape[0] == 0:
        return Subspace.full(n)
    _, sv, Vt = np.linalg.svd(M, full_matrices=True)
    smax = sv[0] if sv.size else 0.0
    cutoff = tol * smax if smax > 0 else _ABS_RANK_FLOOR
    cutoff = max(cutoff, _ABS_RANK_FLOOR)
    rank = int(np.sum(sv > cutoff))
    return Subspace(_canonical_signs(Vt[rank:].T.copy()))


def _canonical_signs(B: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-magnitude entry of each is positive."""
    for j in range(B.shape[1]):
        i = int(np.argmax(np.abs(B[:, j])))
        if B[i, j] < 0:
            B[:, j] = -B[:, j]
    return B


def intersect(a: Subspace, b: Subspace, tol: float = DEFAULT_RANK_TOL) -> Subspace:
    """a ∩ b as the common kernel of the complementary projectors I - P_a, I - P_b."""
    if a.ambient != b.ambient:
        raise ValueError("intersect: subspaces live in different ambient spaces")
    n = a.ambient
    if a.dim == 0 or b.dim == 0:
        return Subspace.zero(n)
    eye = np.eye(n)
    stacked = np.vstack([eye - a.projector(), eye - b.projector()])
    out = kernel(stacked, tol=max(tol, 1e-12))
    # result must sit in both inputs
    if out.dim and (np.max(a.distance(out.basis.T)) > 1e-6 or np.max(b.distance(out.basis.T)) > 1e-6):
        raise ArithmeticError("intersect: rank decision inconsistent with inputs")
    return out


def projection_residual(a: Subspace, b: Subspace) -> float:
    """Largest distance of a basis vector of one subspace from the other.

    Returns ``inf`` when the dimensions differ.
    """
    if a.ambient != b.ambient or a.dim != b.dim:
        return float("inf")
    if a.dim == 0:
        return 0.0
    return float(max(np.max(b.distance(a.basis.T)), np.max(a.distance(b.basis.T))))


def same_subspace(a: Subspace, b: Subspace, tol: float = 1e-9) -> bool:
    return projection_residual(a, b) <= tol


def block(M, d: int | None = None):
    """Split a 2d x 2d matrix into its (A, B, C, D) d x d blocks."""
    M = np.asarray(M)
    d = M.shape[0] // 2 if d is None else d
    return M[:d, :d], M[:d, d:], M[d:, :d], M[d:, d:]
