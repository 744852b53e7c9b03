"""Lie algebra and matrix-group primitives.

A finite-dimensional Lie algebra is described by its structure constants
C^k_ij (so [e_i, e_j] = C^k_ij e_k) plus an optional matrix realization
given by basis matrices E_i, with hat(xi) = sum_i xi_i E_i.

Sign conventions for the dual operations are fixed by the duality pairing,
never by component formulas:

    <ad_star(xi, mu), eta> = <mu, [xi, eta]>
    <coadjoint(g, mu), xi> = <mu, adjoint(g, xi)>

so on so(3) ~ R^3 with the cross-product bracket, ad_star(xi, mu) = mu x xi
and coadjoint(g, .) acts by g^T on coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatchError,
    GroupMembershipError,
    UnsupportedRealizationError,
)

_JACOBI_TOL = 1e-12
_ANTISYM_TOL = 1e-12
_REALIZATION_TOL = 1e-12
_SO3_ORTHO_TOL = 1e-10


def jacobi_residual(c: np.ndarray) -> float:
    """Max-norm residual of the Jacobi identity for structure constants c[i,j,k]."""
    term = np.einsum("ijm,mkl->ijkl", c, c)
    cyclic = term + np.einsum("jkm,mil->ijkl", c, c) + np.einsum("kim,mjl->ijkl", c, c)
    return float(np.max(np.abs(cyclic)))


@dataclass(frozen=True, eq=False)
class LieAlgebra:
    """Structure constants plus an optional matrix realization.

    structure_constants has shape (r, r, r) and is indexed [i, j, k] for C^k_ij.
    basis_matrices, when present, has shape (r, n, n).
    """

    dim: int
    structure_constants: np.ndarray
    basis_names: tuple[str, ...] = ()
    basis_matrices: np.ndarray | None = None
    vee_fn: object = None  # optional exact inverse of hat; pinv fallback otherwise
    name: str = "lie-algebra"
    _vee_pinv: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionMismatchError("algebra dimension must be positive")
        c = np.ascontiguousarray(np.asarray(self.structure_constants, dtype=float))
        if c.shape != (self.dim,) * 3:
            raise DimensionMismatchError(
                f"structure constants must have shape {(self.dim,)*3}, got {c.shape}")
        if np.max(np.abs(c + np.swapaxes(c, 0, 1))) > _ANTISYM_TOL:
            raise DimensionMismatchError("structure constants are not antisymmetric in (i, j)")
        res = jacobi_residual(c)
        if res > _JACOBI_TOL:
            raise DimensionMismatchError(f"Jacobi identity residual {res:.3e} exceeds {_JACOBI_TOL}")
        object.__setattr__(self, "structure_constants", c)
        if not self.basis_names:
            object.__setattr__(self, "basis_names",
                               tuple(f"e{i+1}" for i in range(self.dim)))
        if self.basis_matrices is not None:
            E = np.ascontiguousarray(np.asarray(self.basis_matrices, dtype=float))
            if E.ndim != 3 or E.shape[0] != self.dim or E.shape[1] != E.shape[2]:
                raise DimensionMismatchError("basis matrices must have shape (r, n, n)")
            object.__setattr__(self, "basis_matrices", E)
            object.__setattr__(self, "_vee_pinv",
                               np.linalg.pinv(E.reshape(self.dim, -1).T))
            self._check_realization()

    def _check_realization(self):
        for i in range(self.dim):
            for j in range(self.dim):
                comm = self.basis_matrices[i] @ self.basis_matrices[j] \
                    - self.basis_matrices[j] @ self.basis_matrices[i]
                lhs = self.hat(self.structure_constants[i, j])
                if np.max(np.abs(lhs - comm)) > _REALIZATION_TOL:
                    raise DimensionMismatchError(
                        "matrix realization does not reproduce the bracket "
                        f"on basis pair ({i}, {j})")

    @property
    def matrix_dim(self) -> int | None:
        return None if self.basis_matrices is None else self.basis_matrices.shape[1]

    def _require_realization(self):
        if self.basis_matrices is None:
            raise UnsupportedRealizationError(
                f"{self.name} carries no matrix realization")

    # -- raw coordinate operations ------------------------------------------

    def hat(self, coords: np.ndarray) -> np.ndarray:
        """Matrix realization of a coordinate vector."""
        self._require_realization()
        return np.tensordot(np.asarray(coords, dtype=float), self.basis_matrices, axes=1)

    def vee(self, matrix: np.ndarray) -> np.ndarray:
        """Inverse of hat on the realized subspace (least squares off it)."""
        self._require_realization()
        if self.vee_fn is not None:
            return np.asarray(self.vee_fn(np.asarray(matrix, dtype=float)), dtype=float)
        return self._vee_pinv @ np.asarray(matrix, dtype=float).ravel()

    def bracket(self, xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
        """[xi, eta]_k = C^k_ij xi_i eta_j."""
        return np.einsum("ijk,i,j->k", self.structure_constants, xi, eta)

    def ad_star(self, xi: np.ndarray, mu: np.ndarray) -> np.ndarray:
        """Dual of ad_xi under the pairing: <ad*_xi mu, eta> = <mu, [xi, eta]>."""
        return np.einsum("ijk,i,k->j", self.structure_constants, xi, mu)

    def ad_matrix(self, xi: np.ndarray) -> np.ndarray:
        """r x r matrix of ad_xi = [xi, .] on coordinates."""
        return np.einsum("ijk,i->kj", self.structure_constants, xi)

    def adjoint_matrix(self, g: np.ndarray) -> np.ndarray:
        """r x r matrix of Ad_g on coordinates: column j = vee(g E_j g^-1)."""
        self._require_realization()
        if self.name == "so(3)":
            return np.asarray(g, dtype=float)
        g = np.asarray(g, dtype=float)
        ginv = np.linalg.inv(g)
        cols = [self.vee(g @ self.basis_matrices[j] @ ginv) for j in range(self.dim)]
        return np.column_stack(cols)

    def identity_matrix(self) -> np.ndarray:
        self._require_realization()
        return np.eye(self.matrix_dim)


def so3() -> LieAlgebra:
    """so(3) with the cross-product bracket and the standard hat map."""
    c = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        c[i, j, k] = 1.0
        c[j, i, k] = -1.0
    E = np.array([
        [[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]],
        [[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]],
        [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
    ])

    def vee_exact(m):
        return np.array([0.5 * (m[2, 1] - m[1, 2]),
                         0.5 * (m[0, 2] - m[2, 0]),
                         0.5 * (m[1, 0] - m[0, 1])])

    return LieAlgebra(dim=3, structure_constants=c, basis_matrices=E,
                      vee_fn=vee_exact, name="so(3)")


# -- element wrappers ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    algebra: LieAlgebra
    coords: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float).reshape(-1)
        if coords.size != self.algebra.dim:
            raise DimensionMismatchError(
                f"coords length {coords.size} != algebra dim {self.algebra.dim}")
        object.__setattr__(self, "coords", coords)


@dataclass(frozen=True, eq=False)
class CoAlgebraElement:
    algebra: LieAlgebra
    coords: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float).reshape(-1)
        if coords.size != self.algebra.dim:
            raise DimensionMismatchError(
                f"coords length {coords.size} != algebra dim {self.algebra.dim}")
        object.__setattr__(self, "coords", coords)


@dataclass(frozen=True, eq=False)
class GroupElement:
    """Element of a matrix group, validated on construction for SO(3)."""

    matrix: np.ndarray
    group: str = "SO(3)"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise GroupMembershipError("group element must be a square matrix")
        if self.group == "SO(3)":
            if m.shape != (3, 3):
                raise GroupMembershipError("SO(3) elements are 3x3")
            if np.max(np.abs(m.T @ m - np.eye(3))) > _SO3_ORTHO_TOL:
                raise GroupMembershipError("matrix is not orthogonal within 1e-10")
            if abs(np.linalg.det(m) - 1.0) > _SO3_ORTHO_TOL:
                raise GroupMembershipError("matrix determinant is not 1 within 1e-10")
        object.__setattr__(self, "matrix", m)

    def inverse(self) -> "GroupElement":
        if self.group == "SO(3)":
            return GroupElement(self.matrix.T, self.group)
        return GroupElement(np.linalg.inv(self.matrix), self.group)

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.matrix @ other.matrix, self.group)

    @staticmethod
    def identity(n: int = 3, group: str = "SO(3)") -> "GroupElement":
        return GroupElement(np.eye(n), group)


def _same_algebra(a: LieAlgebra, b: LieAlgebra):
    if a is not b and (a.dim != b.dim or a.name != b.name):
        raise DimensionMismatchError(f"algebra mismatch: {a.name} vs {b.name}")


def hat(xi: AlgebraElement) -> np.ndarray:
    return xi.algebra.hat(xi.coords)


def vee(algebra: LieAlgebra, matrix: np.ndarray) -> AlgebraElement:
    return AlgebraElement(algebra, algebra.vee(matrix))


def bracket(xi: AlgebraElement, eta: AlgebraElement) -> AlgebraElement:
    _same_algebra(xi.algebra, eta.algebra)
    return AlgebraElement(xi.algebra, xi.algebra.bracket(xi.coords, eta.coords))


def ad_star(xi: AlgebraElement, mu: CoAlgebraElement) -> CoAlgebraElement:
    _same_algebra(xi.algebra, mu.algebra)
    return CoAlgebraElement(xi.algebra, xi.algebra.ad_star(xi.coords, mu.coords))


def adjoint(g: GroupElement, xi: AlgebraElement) -> AlgebraElement:
    """Ad_g xi = vee(g hat(xi) g^-1)."""
    return AlgebraElement(xi.algebra, xi.algebra.adjoint_matrix(g.matrix) @ xi.coords)


def coadjoint(g: GroupElement, mu: CoAlgebraElement) -> CoAlgebraElement:
    """Dual of Ad_g: <coadjoint(g, mu), xi> = <mu, adjoint(g, xi)>."""
    return CoAlgebraElement(mu.algebra, mu.algebra.adjoint_matrix(g.matrix).T @ mu.coords)
