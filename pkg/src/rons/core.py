"""Constrained projection dynamics.

Builds the linear algebra shared by every solver in this package: metric
tensors (dense, block-diagonal, diagonal), projected right-hand sides,
declared first integrals with analytic gradients, and the Lagrange-multiplier
correction that keeps those integrals constant along the projected dynamics.

Complex coefficients are stored as stacked real vectors.  The stacking used
throughout is ``T(z) = [Re z, -Im z]`` per component, together with the real
metric ``[[Re P, Im P], [-Im P, Re P]]`` built from the Hermitian pairing
matrix ``P``.  Under this pairing ``T(P z) = complexify(P) @ T(z)`` holds
exactly, so the stacked real solve reproduces the complex Galerkin solve
entrywise; see ``tests/test_core.py`` for the verification.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import linalg

from .errors import (
    ConstraintConditioningError,
    DimensionError,
    IllConditionedConstraintWarning,
    SingularMetricError,
    ValidationError,
)

#: Condition-number estimate above which the constraint equation falls back
#: to a minimum-norm least-squares solve.
CONDITION_LIMIT = 1e12

#: Default gradient-norm threshold below which a constraint is inactive.
DEGENERACY_TOL = 1e-10

_SYMMETRY_RTOL = 1e-12
_DIAGONAL_RTOL = 1e-14


# ---------------------------------------------------------------------------
# Parameter layout and state


@dataclass(frozen=True)
class Component:
    """One block of the parameter vector: a PDE field or one complex set.

    ``size`` counts coefficients; a complex component of ``size`` coefficients
    occupies ``2 * size`` slots of real storage.
    """

    size: int
    is_complex: bool = False

    def __post_init__(self):
        if self.size < 1:
            raise ValidationError("component size must be a positive integer")

    @property
    def width(self) -> int:
        return 2 * self.size if self.is_complex else self.size


@dataclass(frozen=True)
class ParameterLayout:
    """How a real parameter vector decomposes into per-field components."""

    components: tuple[Component, ...]

    def __post_init__(self):
        if not self.components:
            raise ValidationError("layout needs at least one component")

    @classmethod
    def single_real(cls, size: int) -> "ParameterLayout":
        return cls((Component(size),))

    @classmethod
    def single_complex(cls, size: int) -> "ParameterLayout":
        return cls((Component(size, is_complex=True),))

    @property
    def width(self) -> int:
        return sum(c.width for c in self.components)

    @property
    def boundaries(self) -> tuple[int, ...]:
        """Offsets of component starts, plus the total width."""
        offs = [0]
        for c in self.components:
            offs.append(offs[-1] + c.width)
        return tuple(offs)

    def slices(self) -> tuple[slice, ...]:
        b = self.boundaries
        return tuple(slice(b[i], b[i + 1]) for i in range(len(self.components)))

    def pack(self, parts: Sequence[np.ndarray]) -> np.ndarray:
        """Stack per-component coefficient vectors into real storage.

        Complex components are stored as ``[Re z, -Im z]``.
        """
        if len(parts) != len(self.components):
            raise DimensionError(
                f"expected {len(self.components)} component vectors, got {len(parts)}"
            )
        out = []
        for comp, part in zip(self.components, parts):
            arr = np.asarray(part)
            if arr.shape != (comp.size,):
                raise DimensionError(
                    f"component vector has shape {arr.shape}, expected ({comp.size},)"
                )
            if comp.is_complex:
                arr = arr.astype(complex, copy=False)
                out.append(arr.real.copy())
                out.append(-arr.imag)
            else:
                if np.iscomplexobj(arr):
                    raise ValidationError("real component given complex data")
                out.append(arr.astype(float, copy=True))
        return np.concatenate(out)

    def unpack(self, values: np.ndarray) -> list[np.ndarray]:
        """Inverse of :meth:`pack`; complex components come back complex."""
        values = np.asarray(values, dtype=float)
        if values.shape != (self.width,):
            raise DimensionError(
                f"state has shape {values.shape}, expected ({self.width},)"
            )
        parts = []
        for comp, sl in zip(self.components, self.slices()):
            block = values[sl]
            if comp.is_complex:
                parts.append(block[: comp.size] - 1j * block[comp.size :])
            else:
                parts.append(block.copy())
        return parts


@dataclass(frozen=True)
class ParameterState:
    """A real parameter vector together with its component layout."""

    values: np.ndarray
    layout: ParameterLayout

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.shape != (self.layout.width,):
            raise DimensionError(
                f"{values.shape[0] if values.ndim == 1 else values.shape} values "
                f"for a layout of width {self.layout.width}"
            )

    def components(self) -> list[np.ndarray]:
        return self.layout.unpack(self.values)


def state_values(a) -> np.ndarray:
    """Accept either a raw vector or a :class:`ParameterState`."""
    return np.asarray(getattr(a, "values", a), dtype=float)


# ---------------------------------------------------------------------------
# Metric tensors


class MetricTensor:
    """Gram matrix of the modes under the ambient inner product.

    ``kind`` is one of ``"dense"``, ``"diagonal"`` or ``"block"``.  The dense
    kind caches its Cholesky factor on first use; the inverse is never formed.
    """

    def __init__(self, kind, *, dense=None, diag=None, blocks=None, boundaries=None):
        self.kind = kind
        self._dense = dense
        self._diag = diag
        self._blocks = blocks
        self._chol = None
        if boundaries is None and blocks is not None:
            offs = [0]
            for b in blocks:
                offs.append(offs[-1] + b.size)
            boundaries = tuple(offs)
        self.boundaries = boundaries

    # -- constructors -------------------------------------------------------

    @classmethod
    def identity(cls, n: int) -> "MetricTensor":
        return cls("diagonal", diag=np.ones(n))

    @classmethod
    def from_diagonal(cls, diag) -> "MetricTensor":
        diag = np.asarray(diag, dtype=float)
        if diag.ndim != 1:
            raise DimensionError("diagonal metric needs a 1-d array")
        return cls("diagonal", diag=diag)

    # -- basic queries -------------------------------------------------------

    @property
    def size(self) -> int:
        if self.kind == "dense":
            return self._dense.shape[0]
        if self.kind == "diagonal":
            return self._diag.shape[0]
        return self.boundaries[-1]

    def toarray(self) -> np.ndarray:
        if self.kind == "dense":
            return self._dense.copy()
        if self.kind == "diagonal":
            return np.diag(self._diag)
        out = np.zeros((self.size, self.size))
        for blk, lo, hi in self._iter_blocks():
            out[lo:hi, lo:hi] = blk.toarray()
        return out

    def _iter_blocks(self):
        for blk, lo, hi in zip(self._blocks, self.boundaries[:-1], self.boundaries[1:]):
            yield blk, lo, hi

    # -- linear algebra ------------------------------------------------------

    def _factor(self):
        if self._chol is None:
            try:
                self._chol = linalg.cholesky(self._dense, lower=True)
            except linalg.LinAlgError as exc:
                raise SingularMetricError(
                    "metric tensor is not positive definite"
                ) from exc
        return self._chol

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve ``M x = rhs`` for a vector or a matrix of columns."""
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape[0] != self.size:
            raise DimensionError(
                f"rhs has leading dimension {rhs.shape[0]}, metric size {self.size}"
            )
        if self.kind == "diagonal":
            if np.any(self._diag <= 0):
                raise SingularMetricError("diagonal metric has non-positive entries")
            if rhs.ndim == 1:
                return rhs / self._diag
            return rhs / self._diag[:, None]
        if self.kind == "dense":
            return linalg.cho_solve((self._factor(), True), rhs)
        out = np.empty_like(rhs, dtype=float)
        for blk, lo, hi in self._iter_blocks():
            out[lo:hi] = blk.solve(rhs[lo:hi])
        return out

    def whiten(self, vectors: np.ndarray) -> np.ndarray:
        """Apply ``L^{-1}`` where ``M = L L^T``; makes Gram products exact SPD."""
        vectors = np.asarray(vectors, dtype=float)
        if self.kind == "diagonal":
            if np.any(self._diag <= 0):
                raise SingularMetricError("diagonal metric has non-positive entries")
            root = np.sqrt(self._diag)
            if vectors.ndim == 1:
                return vectors / root
            return vectors / root[:, None]
        if self.kind == "dense":
            return linalg.solve_triangular(self._factor(), vectors, lower=True)
        out = np.empty_like(vectors, dtype=float)
        for blk, lo, hi in self._iter_blocks():
            out[lo:hi] = blk.whiten(vectors[lo:hi])
        return out

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "diagonal":
            return self._diag * x
        if self.kind == "dense":
            return self._dense @ x
        out = np.empty_like(x)
        for blk, lo, hi in self._iter_blocks():
            out[lo:hi] = blk.matvec(x[lo:hi])
        return out


def assemble_metric(inner_products) -> MetricTensor:
    """Build a metric tensor from the symmetric matrix of mode pairings.

    Flags the diagonal kind when every off-diagonal entry is negligible
    against the largest diagonal entry.
    """
    m = np.asarray(inner_products, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"mode pairings must be square, got shape {m.shape}")
    scale = np.max(np.abs(m)) if m.size else 0.0
    if scale > 0 and np.max(np.abs(m - m.T)) > _SYMMETRY_RTOL * scale:
        raise ValidationError("mode pairings are not symmetric within tolerance")
    m = 0.5 * (m + m.T)
    diag = np.diag(m).copy()
    off = m - np.diag(diag)
    if np.max(np.abs(off), initial=0.0) <= _DIAGONAL_RTOL * np.max(diag, initial=0.0):
        return MetricTensor.from_diagonal(diag)
    return MetricTensor("dense", dense=m)


def assemble_block_metric(blocks: Sequence) -> MetricTensor:
    """Assemble a block-diagonal metric from per-component metrics.

    Accepts :class:`MetricTensor` blocks or raw pairing matrices.  Component
    boundaries are recorded so systems of PDEs keep their field offsets.
    """
    if not blocks:
        raise ValidationError("block metric needs at least one block")
    tensors = [
        b if isinstance(b, MetricTensor) else assemble_metric(b) for b in blocks
    ]
    offs = [0]
    for t in tensors:
        offs.append(offs[-1] + t.size)
    boundaries = tuple(offs)
    if len(tensors) == 1:
        single = tensors[0]
        single.boundaries = boundaries
        return single
    if all(t.kind == "diagonal" for t in tensors):
        merged = MetricTensor.from_diagonal(np.concatenate([t._diag for t in tensors]))
        merged.boundaries = boundaries
        return merged
    return MetricTensor("block", blocks=tensors, boundaries=boundaries)


def complexify_metric(complex_pairings) -> MetricTensor:
    """Real metric for complex coefficients stored as stacked real vectors.

    Given the Hermitian pairing matrix ``P`` this is the real matrix
    ``[[Re P, Im P], [-Im P, Re P]]``, which represents ``z -> P z`` in the
    ``[Re z, -Im z]`` stacking.  Symmetric by construction, and positive
    definite whenever the modes are independent.
    """
    p = np.asarray(complex_pairings, dtype=complex)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise DimensionError(f"pairing matrix must be square, got shape {p.shape}")
    scale = np.max(np.abs(p)) if p.size else 0.0
    if scale > 0 and np.max(np.abs(p - p.conj().T)) > _SYMMETRY_RTOL * scale:
        raise ValidationError("pairing matrix is not Hermitian within tolerance")
    p = 0.5 * (p + p.conj().T)
    a, b = p.real, p.imag
    real = np.block([[a, b], [-b, a]])
    return assemble_metric(real)


def assemble_rhs(projections, layout: ParameterLayout | None = None) -> np.ndarray:
    """Stack projected right-hand-side values into real storage.

    Real components pass through unchanged; a complex component ``f`` becomes
    ``[Re f, -Im f]``, matching the metric built by :func:`complexify_metric`
    so the stacked solve reproduces the complex Galerkin system.
    """
    if layout is None:
        arr = np.asarray(projections)
        if np.iscomplexobj(arr):
            layout = ParameterLayout.single_complex(arr.shape[0])
        else:
            layout = ParameterLayout.single_real(arr.shape[0])
        return layout.pack([arr])
    if isinstance(projections, np.ndarray) and len(layout.components) == 1:
        projections = [projections]
    return layout.pack(list(projections))


# ---------------------------------------------------------------------------
# Conserved quantities


@dataclass(frozen=True)
class ConservedQuantity:
    """A named first integral of the discretized dynamics.

    ``value`` maps a parameter vector to the scalar invariant; ``gradient``
    returns its analytic gradient with respect to the same vector.  Shipped
    quantities are checked against central finite differences in the tests.
    """

    name: str
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]


def finite_difference_gradient(fn, x, step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient, the oracle for gradient checks."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for i in range(x.size):
        forward = x.copy()
        backward = x.copy()
        forward[i] += step
        backward[i] -= step
        out[i] = (fn(forward) - fn(backward)) / (2 * step)
    return out


def directional_derivative(fn, x, direction, step: float = 1e-6) -> float:
    """Central difference of ``fn`` along ``direction``."""
    x = np.asarray(x, dtype=float)
    d = np.asarray(direction, dtype=float)
    return (fn(x + step * d) - fn(x - step * d)) / (2 * step)


# ---------------------------------------------------------------------------
# Constrained systems


@dataclass
class RonsSystem:
    """Metric, projected right-hand side and the invariants to enforce."""

    metric: MetricTensor
    rhs: Callable[[np.ndarray], np.ndarray]
    constraints: tuple[ConservedQuantity, ...] = ()
    degeneracy_tol: float = DEGENERACY_TOL

    def __post_init__(self):
        self.constraints = tuple(self.constraints)
        if self.degeneracy_tol <= 0:
            raise ValidationError("degeneracy tolerance must be positive")
        if len(self.constraints) > self.metric.size:
            raise ValidationError("more constraints than parameters")


class ConstraintSystem(NamedTuple):
    matrix: np.ndarray   # C, m x m over active constraints
    rhs: np.ndarray      # b, length m
    active: tuple[int, ...]


def drop_degenerate_constraints(gradients, tol: float) -> tuple[int, ...]:
    """Indices of gradients with Euclidean norm above ``tol``, in order.

    Keeps states like lake-at-rest (vanishing energy gradient) from making
    the constraint matrix singular.
    """
    if tol <= 0:
        raise ValidationError("degeneracy tolerance must be positive")
    return tuple(
        i for i, g in enumerate(gradients) if np.linalg.norm(np.asarray(g)) > tol
    )


def _equilibrated(c: np.ndarray, b: np.ndarray):
    """Jacobi-scale C so conditioning reflects dependence, not units."""
    d = np.diag(c).copy()
    d[d <= 0] = 1.0
    s = 1.0 / np.sqrt(d)
    return s[:, None] * c * s[None, :], s * b, s


def _condition_estimate(c_scaled: np.ndarray) -> float:
    eigs = np.linalg.eigvalsh(c_scaled)
    emax = eigs[-1]
    emin = eigs[0]
    if emax <= 0:
        return np.inf
    if emin <= 0:
        return np.inf
    return emax / emin


def solve_lagrange(c: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve the constraint equation ``C lambda = b``.

    Uses a symmetric factorization; if the (equilibrated) condition estimate
    exceeds :data:`CONDITION_LIMIT` the solve falls back to minimum-norm least
    squares and an :class:`IllConditionedConstraintWarning` is issued so run
    diagnostics can record it.
    """
    c = np.asarray(c, dtype=float)
    b = np.asarray(b, dtype=float)
    m = b.shape[0]
    if m == 0:
        return np.zeros(0)
    if c.shape != (m, m):
        raise DimensionError(f"constraint matrix shape {c.shape} does not match b")
    if np.max(np.abs(c - c.T), initial=0.0) > _SYMMETRY_RTOL * max(
        np.max(np.abs(c)), 1e-300
    ):
        raise ValidationError("constraint matrix must be symmetric")
    if not np.any(c):
        return np.zeros(m)
    cs, bs, s = _equilibrated(c, b)
    # Gershgorin fast path: unit diagonal with small off-diagonal row sums
    # bounds the condition number near 1, so the estimate can be skipped.
    off_row = np.max(np.sum(np.abs(cs - np.eye(m)), axis=1))
    if off_row < 0.5:
        lam_scaled = linalg.cho_solve(linalg.cho_factor(cs, lower=True), bs)
        return s * lam_scaled
    cond = _condition_estimate(cs)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        warnings.warn(
            f"constraint equation ill-conditioned (estimate {cond:.3e}); "
            "using minimum-norm least squares",
            IllConditionedConstraintWarning,
            stacklevel=2,
        )
        lam_scaled, *_ = np.linalg.lstsq(cs, bs, rcond=None)
    else:
        lam_scaled = linalg.cho_solve(linalg.cho_factor(cs, lower=True), bs)
    return s * lam_scaled


def _active_gradients(a, system: RonsSystem):
    grads = [np.asarray(q.gradient(a), dtype=float) for q in system.constraints]
    active = drop_degenerate_constraints(grads, system.degeneracy_tol)
    if not active:
        return None, ()
    return np.column_stack([grads[i] for i in active]), active


def evaluate_constraint_system(
    a, system: RonsSystem, *, check_conditioning: bool = True
) -> ConstraintSystem:
    """Assemble ``C`` and ``b`` for the active constraints at state ``a``.

    ``C[i, j] = <grad I_i, M^{-1} grad I_j>`` and ``b[i] = <grad I_i, M^{-1} f>``,
    computed with one metric solve per active gradient (plus one for ``f``);
    the inverse metric is never formed.  With ``check_conditioning`` the
    (equilibrated) conditioning of ``C`` is verified and numerically dependent
    gradients raise :class:`ConstraintConditioningError`; the time-stepping
    path disables the check and relies on :func:`solve_lagrange`'s fallback.
    """
    a = state_values(a)
    grad_matrix, active = _active_gradients(a, system)
    if grad_matrix is None:
        return ConstraintSystem(np.zeros((0, 0)), np.zeros(0), ())
    whitened = system.metric.whiten(grad_matrix)
    c = whitened.T @ whitened
    velocity = system.metric.solve(np.asarray(system.rhs(a), dtype=float))
    b = grad_matrix.T @ velocity
    if check_conditioning:
        cs, _, _ = _equilibrated(c, b)
        cond = _condition_estimate(cs)
        if not np.isfinite(cond) or cond > CONDITION_LIMIT:
            raise ConstraintConditioningError(
                f"active constraint gradients are numerically dependent "
                f"(condition estimate {cond:.3e})"
            )
    return ConstraintSystem(c, b, active)


def apply_invariant_correction(
    metric: MetricTensor, velocity: np.ndarray, gradient_columns: np.ndarray
) -> np.ndarray:
    """Project ``velocity`` onto the tangent space of the active invariants.

    ``velocity`` is the unconstrained solve ``M^{-1} f`` (for finite volume,
    the flux vector itself, since there ``f = M F`` exactly).  Returns
    ``velocity - M^{-1} G lambda`` with ``C lambda = b`` and ``b = G^T velocity``.
    """
    whitened = metric.whiten(gradient_columns)
    c = whitened.T @ whitened
    b = gradient_columns.T @ velocity
    lam = solve_lagrange(c, b)
    return velocity - metric.solve(gradient_columns) @ lam


def grons_rhs(a, system: RonsSystem) -> np.ndarray:
    """Constrained time derivative ``M a' = f - sum_k lambda_k grad I_k``.

    With no active constraints this is exactly the classical Galerkin solve
    ``M a' = f`` (identical code path, hence bitwise identical results).
    Along the returned direction every active invariant has zero rate of
    change up to the linear-solve tolerance.
    """
    a = state_values(a)
    f = np.asarray(system.rhs(a), dtype=float)
    velocity = system.metric.solve(f)
    grad_matrix, _ = _active_gradients(a, system)
    if grad_matrix is None:
        return velocity
    return apply_invariant_correction(system.metric, velocity, grad_matrix)


def project_onto_levels(
    a,
    quantities: Sequence[ConservedQuantity],
    targets: Sequence[float],
    *,
    tol: float = 1e-12,
    max_iter: int = 25,
) -> np.ndarray:
    """Optional post-step Newton projection onto invariant level sets.

    OFF by default everywhere: the solvers enforce tangency only.  Kept for
    experiments that want to renormalize after long integrations.
    """
    x = state_values(a).copy()
    targets = np.asarray(targets, dtype=float)
    scale = np.maximum(np.abs(targets), 1.0)
    for _ in range(max_iter):
        residual = np.array([q.value(x) for q in quantities]) - targets
        if np.max(np.abs(residual) / scale) < tol:
            return x
        jac = np.stack([np.asarray(q.gradient(x), dtype=float) for q in quantities])
        delta = np.linalg.lstsq(jac @ jac.T, residual, rcond=None)[0]
        x = x - jac.T @ delta
    residual = np.array([q.value(x) for q in quantities]) - targets
    if np.max(np.abs(residual) / scale) >= tol:
        warnings.warn(
            "invariant projection did not converge", RuntimeWarning, stacklevel=2
        )
    return x
