"""Linearized field equations and surface-layer integrals.

A jet field solves the linearized field equations when, at every support
point, both the scalar bracket

    <u, D ell>(x_i) = sum_j w_j [ (a_i + a_j) L_ij + (u_i - u_j).grad1 L_ij ]
                      - a_i * nu / 2

and its chart gradient vanish.  The surface-layer integral of a solution
over a region Omega couples only the pairs straddling the boundary:

    osi(Omega) = - sum_{i in Omega} sum_{j not in Omega}
                     w_i w_j  D1_{u_i} D2_{u_j} L(x_i, x_j).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CvpError, DimensionMismatchError, SchemaError
from .jets import JetField
from .kernels import RadialKernel, pair_tables
from .measure import DiscreteMeasure


@dataclass(frozen=True)
class RegionMask:
    """A subset of support points, as a boolean mask with a label."""

    inside: np.ndarray
    label: str = ""

    def __post_init__(self):
        mask = np.asarray(self.inside, dtype=bool).ravel()
        mask.setflags(write=False)
        object.__setattr__(self, "inside", mask)

    @classmethod
    def from_indices(cls, count: int, indices, label: str = "") -> "RegionMask":
        mask = np.zeros(count, dtype=bool)
        mask[np.asarray(indices, dtype=int)] = True
        return cls(inside=mask, label=label)

    @property
    def size(self) -> int:
        return int(self.inside.sum())

    def complement(self) -> "RegionMask":
        return RegionMask(inside=~self.inside, label=f"complement({self.label})")


class LinearizedOperator:
    """Matrix of the linearized field equations over the unit-jet basis.

    Row blocks follow the same point-major [scalar, e_1, ..., e_m]
    ordering as the jet coefficient vector, so `matrix @ jf.stacked()`
    gives the stacked bracket values and bracket gradients.
    """

    def __init__(self, rho: DiscreteMeasure, kernel: RadialKernel, nu: float):
        self.rho = rho
        self.kernel = kernel
        self.nu = float(nu)
        n, m = rho.count, rho.manifold.dim
        t = pair_tables(kernel, rho.manifold, rho.points)
        w = rho.weights
        ell = t.L @ w - self.nu / 2.0
        grad_ell = np.einsum("ija,j->ia", t.G, w)
        hess_ell = np.einsum("ijab,j->iab", t.H11, w)

        blocks = np.zeros((n, 1 + m, n, 1 + m))
        # scalar bracket rows
        blocks[:, 0, :, 0] = t.L * w[None, :]
        blocks[np.arange(n), 0, np.arange(n), 0] += ell
        blocks[:, 0, :, 1:] = -t.G * w[None, :, None]
        blocks[np.arange(n), 0, np.arange(n), 1:] += grad_ell
        # gradient-of-bracket rows
        blocks[:, 1:, :, 0] = (t.G * w[None, :, None]).transpose(0, 2, 1)
        blocks[np.arange(n), 1:, np.arange(n), 0] += grad_ell
        blocks[:, 1:, :, 1:] = -(t.H11 * w[None, :, None, None]).transpose(0, 2, 1, 3)
        blocks[np.arange(n), 1:, np.arange(n), 1:] += hess_ell
        self.matrix = blocks.reshape(n * (1 + m), n * (1 + m))

    def apply(self, jf: JetField) -> np.ndarray:
        if jf.count != self.rho.count or jf.dim != self.rho.manifold.dim:
            raise DimensionMismatchError("jet field does not match the operator")
        return self.matrix @ jf.stacked()

    def residual(self, jf: JetField) -> float:
        """Max-norm of the stacked bracket values and gradients."""
        return float(np.abs(self.apply(jf)).max())


def assemble_linfield(rho: DiscreteMeasure, kernel: RadialKernel,
                      nu: float) -> LinearizedOperator:
    return LinearizedOperator(rho, kernel, nu)


def linfield_residual(rho: DiscreteMeasure, kernel: RadialKernel, nu: float,
                      jf: JetField) -> float:
    return LinearizedOperator(rho, kernel, nu).residual(jf)


@dataclass(frozen=True)
class LinfieldSolution:
    """Numerical kernel of the linearized operator."""

    solutions: tuple[JetField, ...]
    singular_values: np.ndarray
    threshold: float
    residuals: tuple[float, ...]

    @property
    def dimension(self) -> int:
        return len(self.solutions)

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "singular_values": self.singular_values.tolist(),
            "threshold": self.threshold,
            "residuals": list(self.residuals),
            "solutions": [jf.to_dict() for jf in self.solutions],
        }


def solve_linfield(op: LinearizedOperator,
                   sigma_threshold_rel: float = 1e-10) -> LinfieldSolution:
    """Kernel of the linearized operator via singular value decomposition.

    Right singular vectors with sigma <= sigma_threshold_rel * sigma_max
    span the returned solution space (orthonormal in coefficient space).
    """
    if not 0.0 <= sigma_threshold_rel < 1.0:
        raise SchemaError("sigma threshold must lie in [0, 1)")
    try:
        _, sigma, vt = np.linalg.svd(op.matrix)
    except np.linalg.LinAlgError as exc:
        raise CvpError(f"singular value decomposition failed: {exc}") from exc
    cut = sigma_threshold_rel * (sigma[0] if sigma.size else 0.0)
    null_rows = vt[sigma <= cut] if sigma.size else vt
    dim = op.rho.manifold.dim
    solutions = tuple(JetField.from_stacked(row, dim) for row in null_rows)
    residuals = tuple(op.residual(jf) for jf in solutions)
    return LinfieldSolution(solutions=solutions, singular_values=sigma,
                            threshold=float(cut), residuals=residuals)


def surface_layer_integral(rho: DiscreteMeasure, kernel: RadialKernel,
                           region: RegionMask, jf: JetField) -> float:
    """Boundary-pair double sum of the jet-differentiated kernel over Omega."""
    if region.inside.size != rho.count:
        raise DimensionMismatchError("region mask does not match the measure")
    if jf.count != rho.count or jf.dim != rho.manifold.dim:
        raise DimensionMismatchError("jet field does not match the measure")
    t = pair_tables(kernel, rho.manifold, rho.points)
    a, u = jf.scalar, jf.vector
    # D1_{u_i} D2_{u_j} L(x_i, x_j) for every pair, using grad2 = -grad1
    pair = (np.einsum("i,ij,j->ij", a, t.L, a)
            - np.einsum("i,ija,ja->ij", a, t.G, u)
            + np.einsum("ia,ija,j->ij", u, t.G, a)
            - np.einsum("ia,ijab,jb->ij", u, t.H11, u))
    pair *= rho.weights[:, None] * rho.weights[None, :]
    inside = region.inside
    return -float(pair[np.ix_(inside, ~inside)].sum())


def arc_regions(rho: DiscreteMeasure, axis: int = 0) -> list[RegionMask]:
    """All proper contiguous arcs in the sorted order along one chart axis.

    Intended for one-dimensional supports, where arcs exhaust the
    connected regions up to cyclic relabeling.
    """
    n = rho.count
    order = np.argsort(rho.points[:, axis])
    regions = []
    for start in range(n):
        for length in range(1, n):
            idx = order[(start + np.arange(length)) % n]
            regions.append(RegionMask.from_indices(
                n, idx, label=f"arc(start={start}, length={length})"))
    return regions


def random_regions(rho: DiscreteMeasure, count: int, seed: int) -> list[RegionMask]:
    """Seeded random proper subsets (never empty, never everything)."""
    if rho.count < 2:
        raise SchemaError("random regions need at least two points")
    rng = np.random.default_rng(seed)
    regions = []
    for k in range(count):
        size = int(rng.integers(1, rho.count))
        idx = rng.choice(rho.count, size=size, replace=False)
        regions.append(RegionMask.from_indices(rho.count, idx,
                                               label=f"random(seed_draw={k})"))
    return regions


@dataclass
class OSIReport:
    """Surface-layer integral values over a family of regions."""

    values: list[tuple[str, float]] = field(default_factory=list)
    min_value: float = np.inf
    min_region: str = ""
    residual: float = np.nan        # linearized-equation residual of the jet
    solution_hypothesis: bool = False  # residual small enough to claim positivity

    @property
    def all_positive(self) -> bool:
        return self.min_value > 0.0

    def to_dict(self) -> dict:
        return {
            "values": [{"region": lab, "osi": v} for lab, v in self.values],
            "min_value": self.min_value,
            "min_region": self.min_region,
            "residual": self.residual,
            "solution_hypothesis": self.solution_hypothesis,
            "all_positive": self.all_positive,
        }


def osi_report(rho: DiscreteMeasure, kernel: RadialKernel, nu: float,
               jf: JetField, regions: list[RegionMask],
               residual_tolerance: float = 1e-6) -> OSIReport:
    """Evaluate the surface-layer integral of one jet over many regions.

    Positivity is only expected when the jet solves the linearized field
    equations; the report records the residual and whether it is below
    the stated tolerance, without enforcing anything.
    """
    if not regions:
        raise SchemaError("need at least one region")
    residual = linfield_residual(rho, kernel, nu, jf)
    report = OSIReport(residual=residual,
                       solution_hypothesis=bool(residual <= residual_tolerance))
    for region in regions:
        val = surface_layer_integral(rho, kernel, region, jf)
        report.values.append((region.label, val))
        if val < report.min_value:
            report.min_value = val
            report.min_region = region.label
    return report
