"""Discrete jet fields and the quadratic/bilinear forms over them.

A jet pairs a scalar with a tangent vector at a support point; a jet
field carries one jet per point of a fixed measure.  The three forms

    q1(u, v)  = sum_i w_i [a_i b_i ell_i + a_i v_i.grad ell_i
                           + b_i u_i.grad ell_i + u_i.Hess ell_i.v_i]
    sp1(u, v) = sum_ij w_i w_j D1_u D2_v L(x_i, x_j) + q1(u, v)
    sp2(u, v) = sp1(u, v) + q1(u, v)

are assembled as Gram matrices over the canonical per-point unit-jet
basis (ordering: point-major blocks [scalar, e_1, ..., e_m]).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CvpError, DimensionMismatchError, SchemaError
from .kernels import RadialKernel, lagrangian_derivatives, lagrangian_eval, pair_tables
from .measure import DiscreteMeasure

FORM_Q1 = "Q1"
FORM_SP1 = "SP1"
FORM_SP2 = "SP2"
BASIS_FULL = "full"
BASIS_SCALAR = "scalar_only"
BASIS_VECTOR = "vector_only"


@dataclass(frozen=True)
class Jet:
    """Scalar component a and vector component u at a single point."""

    a: float
    u: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float))
        if not (np.isfinite(self.a) and np.isfinite(self.u).all()):
            raise SchemaError("jet components must be finite")

    @classmethod
    def zero(cls, dim: int) -> "Jet":
        return cls(a=0.0, u=np.zeros(dim))


@dataclass(frozen=True)
class JetField:
    """One jet per support point: scalar (n,) and vector (n, m) arrays."""

    scalar: np.ndarray
    vector: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.scalar, dtype=float).ravel()
        v = np.atleast_2d(np.asarray(self.vector, dtype=float))
        if s.shape[0] != v.shape[0]:
            raise DimensionMismatchError("scalar and vector parts differ in length")
        object.__setattr__(self, "scalar", s)
        object.__setattr__(self, "vector", v)

    @property
    def count(self) -> int:
        return self.scalar.shape[0]

    @property
    def dim(self) -> int:
        return self.vector.shape[1]

    def jet(self, i: int) -> Jet:
        return Jet(a=float(self.scalar[i]), u=self.vector[i])

    def stacked(self) -> np.ndarray:
        """Flat coefficient vector in the canonical basis ordering."""
        return np.hstack([self.scalar[:, None], self.vector]).ravel()

    @classmethod
    def from_stacked(cls, coeffs: np.ndarray, dim: int) -> "JetField":
        block = np.asarray(coeffs, dtype=float).reshape(-1, 1 + dim)
        return cls(scalar=block[:, 0], vector=block[:, 1:])

    @classmethod
    def zero(cls, count: int, dim: int) -> "JetField":
        return cls(scalar=np.zeros(count), vector=np.zeros((count, dim)))

    @classmethod
    def translation(cls, count: int, dim: int, axis: int = 0) -> "JetField":
        v = np.zeros((count, dim))
        v[:, axis] = 1.0
        return cls(scalar=np.zeros(count), vector=v)

    def to_dict(self) -> dict:
        return {"scalar": self.scalar.tolist(), "vector": self.vector.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "JetField":
        return cls(scalar=np.asarray(data["scalar"], dtype=float),
                   vector=np.asarray(data["vector"], dtype=float))


def _check_field(rho: DiscreteMeasure, jf: JetField) -> None:
    if jf.count != rho.count or jf.dim != rho.manifold.dim:
        raise DimensionMismatchError(
            f"jet field of shape ({jf.count}, {jf.dim}) on a measure with "
            f"{rho.count} points in dimension {rho.manifold.dim}")


class FormEvaluator:
    """Precomputed pairwise tables and ell data for the jet forms.

    All the module-level form functions route through this class; build
    one instance when evaluating many forms on the same measure.
    """

    def __init__(self, rho: DiscreteMeasure, kernel: RadialKernel, nu: float):
        self.rho = rho
        self.kernel = kernel
        self.nu = float(nu)
        t = pair_tables(kernel, rho.manifold, rho.points)
        w = rho.weights
        self.tables = t
        self.ell = t.L @ w - self.nu / 2.0
        self.grad_ell = np.einsum("ija,j->ia", t.G, w)
        self.hess_ell = np.einsum("ijab,j->iab", t.H11, w)

    def nabla_ell(self, i: int, jet: Jet) -> float:
        return float(jet.a * self.ell[i] + jet.u @ self.grad_ell[i])

    def nabla2_ell(self, i: int, jet1: Jet, jet2: Jet) -> float:
        return float(jet1.a * jet2.a * self.ell[i]
                     + jet1.a * (jet2.u @ self.grad_ell[i])
                     + jet2.a * (jet1.u @ self.grad_ell[i])
                     + jet1.u @ self.hess_ell[i] @ jet2.u)

    def q1(self, jf1: JetField, jf2: JetField) -> float:
        for jf in (jf1, jf2):
            _check_field(self.rho, jf)
        w = self.rho.weights
        terms = (jf1.scalar * jf2.scalar * self.ell
                 + jf1.scalar * np.einsum("ia,ia->i", jf2.vector, self.grad_ell)
                 + jf2.scalar * np.einsum("ia,ia->i", jf1.vector, self.grad_ell)
                 + np.einsum("ia,iab,ib->i", jf1.vector, self.hess_ell, jf2.vector))
        return float(w @ terms)

    def double_sum(self, jf1: JetField, jf2: JetField) -> float:
        """sum_ij w_i w_j D1_{u_i} D2_{v_j} L(x_i, x_j), diagonal included."""
        for jf in (jf1, jf2):
            _check_field(self.rho, jf)
        t = self.tables
        w = self.rho.weights
        a, u = jf1.scalar, jf1.vector
        b, v = jf2.scalar, jf2.vector
        # grad2 = -grad1 and hess12 = -hess11 for radial kernels on flat charts
        aw, uw = a * w, u * w[:, None]
        bw, vw = b * w, v * w[:, None]
        val = (np.einsum("i,ij,j", aw, t.L, bw)
               - np.einsum("i,ija,ja", aw, t.G, vw)
               + np.einsum("ia,ija,j", uw, t.G, bw)
               - np.einsum("ia,ijab,jb", uw, t.H11, vw))
        return float(val)

    def sp1(self, jf1: JetField, jf2: JetField) -> float:
        return self.double_sum(jf1, jf2) + self.q1(jf1, jf2)

    def sp2(self, jf1: JetField, jf2: JetField) -> float:
        return self.sp1(jf1, jf2) + self.q1(jf1, jf2)

    def _block_matrix_double(self) -> np.ndarray:
        """Gram matrix of the kernel double sum over the unit-jet basis."""
        n, m = self.rho.count, self.rho.manifold.dim
        t = self.tables
        w = self.rho.weights
        blocks = np.zeros((n, 1 + m, n, 1 + m))
        blocks[:, 0, :, 0] = t.L
        blocks[:, 0, :, 1:] = -t.G  # grad2 of the (i, j) pair
        blocks[:, 1:, :, 0] = t.G.transpose(0, 2, 1)
        blocks[:, 1:, :, 1:] = -t.H11.transpose(0, 2, 1, 3)
        blocks *= w[:, None, None, None] * w[None, None, :, None]
        return blocks.reshape(n * (1 + m), n * (1 + m))

    def _block_matrix_q1(self) -> np.ndarray:
        n, m = self.rho.count, self.rho.manifold.dim
        w = self.rho.weights
        out = np.zeros((n * (1 + m), n * (1 + m)))
        for i in range(n):
            block = np.empty((1 + m, 1 + m))
            block[0, 0] = self.ell[i]
            block[0, 1:] = self.grad_ell[i]
            block[1:, 0] = self.grad_ell[i]
            block[1:, 1:] = self.hess_ell[i]
            sl = slice(i * (1 + m), (i + 1) * (1 + m))
            out[sl, sl] = w[i] * block
        return out

    def form_matrix(self, form_id: str) -> np.ndarray:
        q1 = self._block_matrix_q1()
        if form_id == FORM_Q1:
            return q1
        double = self._block_matrix_double()
        if form_id == FORM_SP1:
            return double + q1
        if form_id == FORM_SP2:
            return double + 2.0 * q1
        raise SchemaError(f"unknown form id {form_id!r}")


def nabla_ell(rho, kernel, nu, i: int, jet: Jet) -> float:
    if not 0 <= i < rho.count:
        raise IndexError(f"point index {i} out of range")
    return FormEvaluator(rho, kernel, nu).nabla_ell(i, jet)


def nabla2_ell_form(rho, kernel, nu, i: int, jet1: Jet, jet2: Jet) -> float:
    if not 0 <= i < rho.count:
        raise IndexError(f"point index {i} out of range")
    return FormEvaluator(rho, kernel, nu).nabla2_ell(i, jet1, jet2)


def nabla1_nabla2_L(kernel: RadialKernel, manifold, x, y,
                    jet_x: Jet, jet_y: Jet) -> float:
    """D1_{jet_x} D2_{jet_y} L(x, y) at two arbitrary chart points."""
    L = lagrangian_eval(kernel, manifold, x, y)
    g1 = lagrangian_derivatives(kernel, manifold, x, y, "grad1")
    h12 = lagrangian_derivatives(kernel, manifold, x, y, "hess12")
    return float(jet_x.a * jet_y.a * L
                 + jet_x.a * (jet_y.u @ (-g1))
                 + jet_y.a * (jet_x.u @ g1)
                 + jet_x.u @ h12 @ jet_y.u)


def q1(rho, kernel, nu, jf1: JetField, jf2: JetField) -> float:
    return FormEvaluator(rho, kernel, nu).q1(jf1, jf2)


def sp1_inner(rho, kernel, nu, jf1: JetField, jf2: JetField) -> float:
    return FormEvaluator(rho, kernel, nu).sp1(jf1, jf2)


def sp2_inner(rho, kernel, nu, jf1: JetField, jf2: JetField) -> float:
    return FormEvaluator(rho, kernel, nu).sp2(jf1, jf2)


@dataclass(frozen=True)
class GramReport:
    form_id: str
    basis: str
    matrix: np.ndarray
    eigenvalues: np.ndarray
    min_eigenvalue: float
    scale: float
    tau_psd: float
    psd: bool
    strictly_positive: bool
    near_null_vectors: np.ndarray  # eigenvectors with eigenvalue <= tau_psd*scale

    def to_dict(self, include_matrix: bool = True) -> dict:
        out = {
            "form_id": self.form_id,
            "basis": self.basis,
            "eigenvalues": self.eigenvalues.tolist(),
            "min_eigenvalue": self.min_eigenvalue,
            "scale": self.scale,
            "tau_psd": self.tau_psd,
            "psd": self.psd,
            "strictly_positive": self.strictly_positive,
        }
        if include_matrix:
            out["matrix"] = self.matrix.tolist()
        return out


def _basis_indices(n: int, m: int, basis: str) -> np.ndarray:
    blocks = np.arange(n * (1 + m)).reshape(n, 1 + m)
    if basis == BASIS_FULL:
        return blocks.ravel()
    if basis == BASIS_SCALAR:
        return blocks[:, 0]
    if basis == BASIS_VECTOR:
        return blocks[:, 1:].ravel()
    raise SchemaError(f"unknown basis {basis!r}")


def gram_spectrum(rho, kernel, nu, form_id: str, basis: str = BASIS_FULL,
                  tau_psd: float = 1e-8, max_dim: int = 4096) -> GramReport:
    """Gram matrix of a form over the canonical unit-jet basis plus spectrum."""
    n, m = rho.count, rho.manifold.dim
    idx = _basis_indices(n, m, basis)
    if idx.size > max_dim:
        raise SchemaError(f"basis dimension {idx.size} exceeds cap {max_dim}")
    ev = FormEvaluator(rho, kernel, nu)
    full = ev.form_matrix(form_id)
    matrix = full[np.ix_(idx, idx)]
    matrix = 0.5 * (matrix + matrix.T)
    scale = float(np.abs(matrix).max())
    try:
        eigenvalues, eigenvectors = np.linalg.eigh(matrix)
    except np.linalg.LinAlgError as exc:
        raise CvpError(f"eigendecomposition failed: {exc}") from exc
    min_eig = float(eigenvalues[0])
    near_null = eigenvectors[:, eigenvalues <= tau_psd * scale]
    return GramReport(form_id=form_id, basis=basis, matrix=matrix,
                      eigenvalues=eigenvalues, min_eigenvalue=min_eig,
                      scale=scale, tau_psd=tau_psd,
                      psd=bool(min_eig >= -tau_psd * scale),
                      strictly_positive=bool(min_eig > tau_psd * scale),
                      near_null_vectors=near_null)
