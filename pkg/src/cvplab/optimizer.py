"""Projected gradient descent for the action under the volume constraint."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InfeasibleProjectionError, NonFiniteIterateError, SchemaError
from .kernels import RadialKernel, pair_tables
from .measure import DiscreteMeasure


@dataclass(frozen=True)
class OptimizerConfig:
    max_iterations: int = 100_000
    step_size_initial: float = 0.05
    armijo_factor: float = 0.5          # backtracking shrink, in (0, 1)
    armijo_slope: float = 1e-4
    tolerance_weak_el: float = 1e-6
    weight_floor_rel: float = 1e-8      # floor as a fraction of the mean weight
    max_backtracks: int = 80
    seed: int = 0
    trace_period: int = 50

    def __post_init__(self):
        if not (0.0 < self.armijo_factor < 1.0):
            raise SchemaError("armijo_factor must lie in (0, 1)")
        if min(self.max_iterations, self.step_size_initial,
               self.tolerance_weak_el, self.trace_period) <= 0:
            raise SchemaError("optimizer config values must be positive")
        if self.weight_floor_rel < 0:
            raise SchemaError("weight floor must be non-negative")

    def to_dict(self) -> dict:
        return {
            "max_iterations": self.max_iterations,
            "step_size_initial": self.step_size_initial,
            "armijo_factor": self.armijo_factor,
            "armijo_slope": self.armijo_slope,
            "tolerance_weak_el": self.tolerance_weak_el,
            "weight_floor_rel": self.weight_floor_rel,
            "max_backtracks": self.max_backtracks,
            "seed": self.seed,
            "trace_period": self.trace_period,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "OptimizerConfig":
        known = {f for f in cls.__dataclass_fields__}
        bad = set(data) - known
        if bad:
            raise SchemaError(f"unknown optimizer config fields: {sorted(bad)}")
        return cls(**data)


@dataclass
class OptimizerTrace:
    """Per-iteration rows: (iteration, action, weak EL residual, step size)."""

    rows: list[tuple[int, float, float, float]] = field(default_factory=list)
    status: str = "running"       # "converged" | "stalled" | "budget-exhausted"
    floored_points: list[int] = field(default_factory=list)

    def write_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["iteration", "action", "weak_residual", "step"])
            for row in self.rows:
                writer.writerow([row[0]] + [repr(float(v)) for v in row[1:]])


def project_volume(weights: np.ndarray, target_volume: float,
                   weight_floor: float = 0.0) -> np.ndarray:
    """Euclidean projection onto {w >= floor, sum w = target_volume}.

    KKT form w*_i = max(floor, w_i + lam); the multiplier is found exactly
    by scanning the clip count over the sorted weights.
    """
    w = np.asarray(weights, dtype=float)
    n = w.size
    if target_volume <= 0:
        raise SchemaError("target volume must be positive")
    if n * weight_floor > target_volume:
        raise InfeasibleProjectionError(
            f"{n} weights with floor {weight_floor} cannot sum to {target_volume}")
    order = np.sort(w)
    csum = np.cumsum(order)
    total = csum[-1]
    for k in range(n):  # k smallest entries clipped to the floor
        free = n - k
        lam = (target_volume - k * weight_floor
               - (total - (csum[k - 1] if k else 0.0))) / free
        clip_ok = k == 0 or order[k - 1] + lam <= weight_floor + 1e-15
        free_ok = order[k] + lam >= weight_floor - 1e-15
        if clip_ok and free_ok:
            return np.maximum(weight_floor, w + lam)
    return np.full(n, target_volume / n)  # unreachable for consistent input


def _gradients(rho_points, weights, kernel, manifold):
    tables = pair_tables(kernel, manifold, rho_points)
    rows = tables.L @ weights
    grad_ell = np.einsum("ija,j->ia", tables.G, weights)
    # dS/dx_i = 2 w_i sum_j w_j grad1 L(x_i, x_j); dS/dw_i = 2 row_sum_i
    gx = 2.0 * weights[:, None] * grad_ell
    gw = 2.0 * rows
    act = float(weights @ rows)
    residual = max(float((rows - rows.min()).max()), float(np.abs(grad_ell).max()))
    return act, gx, gw, residual


def minimize(rho0: DiscreteMeasure, kernel: RadialKernel,
             config: OptimizerConfig) -> tuple[DiscreteMeasure, OptimizerTrace]:
    """Minimize the action over positions and weights at fixed total volume.

    Projected gradient over the stacked variable with Armijo backtracking;
    the sufficient-decrease test uses the projected displacement, so it
    remains meaningful on the weight simplex.  Accepted steps never
    increase the action.
    """
    manifold = rho0.manifold
    x = rho0.points.copy()
    w = rho0.weights.copy()
    volume = rho0.total_volume
    floor = config.weight_floor_rel * volume / rho0.count
    trace = OptimizerTrace()
    step = config.step_size_initial
    act, gx, gw, residual = _gradients(x, w, kernel, manifold)
    trace.rows.append((0, act, residual, step))
    if residual <= config.tolerance_weak_el:
        trace.status = "converged"
        return rho0, trace

    grow = 1.0 / config.armijo_factor
    for it in range(1, config.max_iterations + 1):
        if not (np.isfinite(act) and np.isfinite(gx).all() and np.isfinite(gw).all()):
            raise NonFiniteIterateError(
                f"non-finite action or gradient at iteration {it}",
                iteration=it, points=x, weights=w)
        accepted = False
        for _ in range(config.max_backtracks):
            xn = x - step * gx
            wn = project_volume(w - step * gw, volume, floor)
            tables_act = float(wn @ pair_tables(kernel, manifold, xn).L @ wn)
            moved = float(((xn - x) ** 2).sum() + ((wn - w) ** 2).sum())
            if tables_act <= act - config.armijo_slope / step * moved:
                accepted = True
                break
            step *= config.armijo_factor
        if not accepted:
            trace.status = "stalled"
            break
        x, w = xn, wn
        act, gx, gw, residual = _gradients(x, w, kernel, manifold)
        if it % config.trace_period == 0:
            trace.rows.append((it, act, residual, step))
        if residual <= config.tolerance_weak_el:
            trace.status = "converged"
            break
        step *= grow
    else:
        trace.status = "budget-exhausted"

    act, _, _, residual = _gradients(x, w, kernel, manifold)
    if not trace.rows or trace.rows[-1][0] != it:
        trace.rows.append((it, act, residual, step))
    trace.floored_points = [int(i) for i in np.flatnonzero(w <= floor * (1 + 1e-12))]
    return rho0.replace(points=x, weights=w), trace
