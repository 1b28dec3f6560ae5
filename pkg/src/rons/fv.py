"""1-D periodic finite-volume scaffolding and the invariant-constrained RHS.

Cell states are plain arrays of shape ``(p, n_cells)`` holding cell averages,
one row per field.  Flattened vectors (row-major, fields concatenated) are
the parameter vectors seen by the constraint machinery; the metric there is
diagonal with the cell widths on the diagonal, repeated per field.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import core
from .errors import DivergenceError, ValidationError


@dataclass(frozen=True)
class FvGrid:
    """Disjoint control volumes covering ``[0, length]`` with periodic wrap."""

    length: float
    n_cells: int
    centers: np.ndarray
    widths: np.ndarray
    boundary: str = "periodic"

    def __post_init__(self):
        if np.any(self.widths <= 0):
            raise ValidationError("cell widths must be positive")
        if abs(self.widths.sum() - self.length) > 1e-12 * self.length:
            raise ValidationError("cell widths must tile the domain")
        if np.any(np.diff(self.centers) <= 0):
            raise ValidationError("cell centers must be strictly increasing")

    @property
    def dx(self) -> float:
        """Uniform cell width; raises if the grid is nonuniform."""
        w0 = float(self.widths[0])
        if np.any(np.abs(self.widths - w0) > 1e-14 * w0):
            raise ValidationError("grid is not uniform")
        return w0


def build_grid(length: float, n_cells: int) -> FvGrid:
    """Uniform periodic grid: ``|cell_i| = length / n``, centers at midpoints."""
    if length <= 0:
        raise ValidationError("domain length must be positive")
    if not isinstance(n_cells, (int, np.integer)) or n_cells < 2:
        raise ValidationError("need an integer cell count of at least 2")
    dx = length / n_cells
    centers = (np.arange(n_cells) + 0.5) * dx
    widths = np.full(n_cells, dx)
    return FvGrid(length=float(length), n_cells=int(n_cells), centers=centers, widths=widths)


@dataclass(frozen=True)
class FluxScheme:
    """A semi-discretization: cell-average time derivatives plus a CFL rule.

    ``rhs(U, grid)`` returns the flux divergence F(U) with the same shape as
    ``U``; for periodic boundaries the width-weighted sum of each field's
    derivative telescopes to zero.  ``cfl_dt(U, grid)`` returns the stable
    step size at the current state.
    """

    rhs: Callable[[np.ndarray, FvGrid], np.ndarray]
    cfl_dt: Callable[[np.ndarray, FvGrid], float]


def fv_rhs(U: np.ndarray, scheme: FluxScheme, grid: FvGrid) -> np.ndarray:
    """Classical finite-volume time derivative ``dU_i/dt = F_i(U)``."""
    out = np.asarray(scheme.rhs(U, grid))
    if not np.all(np.isfinite(out)):
        raise DivergenceError("non-finite flux divergence")
    return out


def fv_metric(grid: FvGrid, n_fields: int) -> core.MetricTensor:
    """Diagonal metric ``M_ii = |cell_i|`` on the flattened state."""
    return core.MetricTensor.from_diagonal(np.tile(grid.widths, n_fields))


def fvrons_rhs(
    U: np.ndarray,
    scheme: FluxScheme,
    grid: FvGrid,
    constraints: Sequence[core.ConservedQuantity] = (),
    degeneracy_tol: float = core.DEGENERACY_TOL,
    metric: core.MetricTensor | None = None,
) -> np.ndarray:
    """Finite-volume derivative corrected to conserve the given invariants.

    ``dU/dt = F(U) - sum_k lambda_k M^{-1} grad I_k`` with the diagonal cell
    metric (pass a prebuilt ``metric`` to skip reassembly in hot loops).
    With an empty (or fully degenerate) constraint list the result is the
    plain :func:`fv_rhs` output, bit for bit.
    """
    flux = fv_rhs(U, scheme, grid)
    if not constraints:
        return flux
    flat = np.asarray(U, dtype=float).reshape(-1)
    grads = [np.asarray(q.gradient(flat), dtype=float) for q in constraints]
    active = core.drop_degenerate_constraints(grads, degeneracy_tol)
    if not active:
        return flux
    grad_matrix = np.column_stack([grads[i] for i in active])
    if metric is None:
        metric = fv_metric(grid, U.shape[0])
    corrected = core.apply_invariant_correction(
        metric, flux.reshape(-1), grad_matrix
    )
    return corrected.reshape(U.shape)


def state_integral(U: np.ndarray, grid: FvGrid, fld: int) -> float:
    """Integral of one field: ``sum_i |cell_i| U_i``."""
    U = np.asarray(U, dtype=float)
    if not 0 <= fld < U.shape[0]:
        raise ValidationError(f"field index {fld} out of range for {U.shape[0]} fields")
    return float(np.dot(grid.widths, U[fld]))


def state_integral_quantity(
    grid: FvGrid, n_fields: int, fld: int, name: str | None = None
) -> core.ConservedQuantity:
    """The field integral as a constraint with constant gradient ``|cell_i|``."""
    if not 0 <= fld < n_fields:
        raise ValidationError("field index out of range")
    n = grid.n_cells
    grad = np.zeros(n_fields * n)
    grad[fld * n : (fld + 1) * n] = grid.widths
    grad.setflags(write=False)
    return core.ConservedQuantity(
        name=name or f"field{fld}_integral",
        value=lambda a: float(np.dot(grad, a)),
        gradient=lambda a: grad,
    )
