"""Frozen-coefficient (Picard) solver for the regularized p-Laplace problem

    -div((eps + |grad u|^2)^((p-2)/2) grad u) = f   in the box,
    u = g                                           on its boundary.

The discretization is a (2n+1)-point flux stencil whose face coefficients
are harmonic means of node coefficients; each Picard step solves one SPD
system with AMG-preconditioned conjugate gradients.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pyamg
import scipy.sparse as sp
from scipy.sparse.linalg import cg

from .fields import CellMask, DomainError, GridDomain, ScalarField, jet

log = logging.getLogger(__name__)

COLD_START_MIN_EPSILON = 1e-4


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Regularized Dirichlet problem.

    ``g`` holds one value per boundary node, ordered as
    ``domain.boundary_indices()``.
    """

    p: float
    epsilon: float
    f: ScalarField
    g: np.ndarray
    domain: GridDomain

    def __post_init__(self):
        if not self.p > 1:
            raise DomainError(f"p must exceed 1, got {self.p}")
        if not 0 <= self.epsilon < 1:
            raise DomainError(f"epsilon must lie in [0, 1), got {self.epsilon}")
        if self.f.domain != self.domain:
            raise DomainError("source field lives on a different domain")
        g = np.asarray(self.g, dtype=float).reshape(-1)
        if g.size != self.domain.boundary_indices().size:
            raise DomainError("boundary trace length does not match the boundary node count")
        if not np.all(np.isfinite(g)):
            raise DomainError("boundary trace must be finite")
        object.__setattr__(self, "g", g)

    @classmethod
    def from_functions(cls, domain: GridDomain, p: float, epsilon: float, f, g) -> ProblemSpec:
        """Build from callables (or constants) evaluated on the node coordinates."""
        xs = domain.coordinates()
        fv = np.broadcast_to(f(*xs) if callable(f) else f, domain.shape)
        gv = np.broadcast_to(g(*xs) if callable(g) else g, domain.shape)
        return cls(p, epsilon, ScalarField(domain, fv), gv.reshape(-1)[domain.boundary_indices()], domain)

    def with_epsilon(self, epsilon: float) -> ProblemSpec:
        return ProblemSpec(self.p, epsilon, self.f, self.g, self.domain)

    def extend_trace(self, interior=0.0) -> np.ndarray:
        """Node array equal to ``interior`` inside and ``g`` on the boundary."""
        u = np.array(np.broadcast_to(interior, self.domain.shape), dtype=float).reshape(-1)
        u[self.domain.boundary_indices()] = self.g
        return u.reshape(self.domain.shape)


@dataclass
class SolveReport:
    iterations: int = 0
    residual_history: list[float] = field(default_factory=list)
    linear_solve_iterations: list[int] = field(default_factory=list)
    converged: bool = False
    epsilon_schedule: list[float] = field(default_factory=list)
    energy_history: list[float] = field(default_factory=list)
    energy_monotone: bool = True

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "residual_history": list(self.residual_history),
            "linear_solve_iterations": list(self.linear_solve_iterations),
            "converged": self.converged,
            "epsilon_schedule": list(self.epsilon_schedule),
            "energy_history": list(self.energy_history),
            "energy_monotone": self.energy_monotone,
        }


def coefficient(u: ScalarField, p: float, epsilon: float) -> tuple[ScalarField, CellMask]:
    """Node-wise ``(eps + |grad u|^2)^((p-2)/2)``.

    Nodes where the value would be infinite (eps = 0, grad u = 0, p < 2)
    are flagged in the returned mask and hold 0 in the field.
    """
    g2 = jet(u, 1).grad_norm ** 2
    base = epsilon + g2
    with np.errstate(divide="ignore"):
        a = np.power(base, 0.5 * (p - 2.0))
    bad = ~np.isfinite(a)
    a[bad] = 0.0
    return ScalarField(u.domain, a), CellMask(bad, "degenerate_gradient")


def _harmonic(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    s = a + b
    out = np.zeros_like(s)
    np.divide(2.0 * a * b, s, out=out, where=s > 0)
    return out


def flux_operator(domain: GridDomain, a: np.ndarray) -> sp.csr_matrix:
    """Full-grid matrix of ``-div(a grad .)`` scaled by the cell volume.

    Row ``i`` equals ``sum_faces a_face * vol / h_axis^2 * (u_i - u_nb)``.
    """
    idx = np.arange(domain.size).reshape(domain.shape)
    vol = domain.cell_volume
    rows, cols, vals = [], [], []
    diag = np.zeros(domain.size)
    for axis, h in enumerate(domain.h):
        lo = [slice(None)] * domain.n
        hi = [slice(None)] * domain.n
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        w = (_harmonic(a[tuple(lo)], a[tuple(hi)]) * (vol / (h * h))).reshape(-1)
        i = idx[tuple(lo)].reshape(-1)
        j = idx[tuple(hi)].reshape(-1)
        np.add.at(diag, i, w)
        np.add.at(diag, j, w)
        rows += [i, j]
        cols += [j, i]
        vals += [-w, -w]
    rows.append(np.arange(domain.size))
    cols.append(np.arange(domain.size))
    vals.append(diag)
    L = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(domain.size, domain.size),
    )
    return L.tocsr()


def residual_vector(u: ScalarField, spec: ProblemSpec) -> np.ndarray:
    """Algebraic residual ``vol*f - L(u) u`` on the interior nodes."""
    a, bad = coefficient(u, spec.p, spec.epsilon)
    L = flux_operator(spec.domain, a.values)
    r = spec.domain.cell_volume * spec.f.flat() - L @ u.flat()
    r = r[spec.domain.interior_indices()]
    if bad.count:
        r = np.where(bad.values.reshape(-1)[spec.domain.interior_indices()], 0.0, r)
    return r


def residual(u: ScalarField, spec: ProblemSpec) -> float:
    """Max-norm of the volume-scaled nonlinear residual over interior nodes."""
    return float(np.max(np.abs(residual_vector(u, spec))))


def energy(u: ScalarField, spec: ProblemSpec) -> float:
    """Discrete ``(1/p) int (eps + |grad u|^2)^(p/2) - int f u`` (trapezoid)."""
    from .fields import integrate

    g2 = jet(u, 1).grad_norm ** 2
    dens = (spec.epsilon + g2) ** (0.5 * spec.p) / spec.p - spec.f.values * u.values
    return integrate(dens, domain=spec.domain)


def _linear_solve(A: sp.csr_matrix, b: np.ndarray, x0: np.ndarray, rtol: float) -> tuple[np.ndarray, int]:
    # local weighting avoids the randomized spectral-radius estimate, keeping solves reproducible
    ml = pyamg.smoothed_aggregation_solver(A, symmetry="symmetric", smooth=("jacobi", {"weighting": "local"}))
    count = [0]

    def tick(_):
        count[0] += 1

    x, info = cg(A, b, x0=x0, rtol=rtol, atol=0.0, maxiter=2000, M=ml.aspreconditioner(cycle="V"), callback=tick)
    if info > 0:
        log.warning("linear solve stopped after %d iterations without reaching rtol=%g", info, rtol)
    return x, count[0]


def picard_solve(
    spec: ProblemSpec,
    u0: ScalarField | None = None,
    tol: float = 1e-8,
    max_iter: int = 200,
    damping: float = 0.7,
    warm_start: bool = False,
) -> tuple[ScalarField, SolveReport]:
    """Damped frozen-coefficient iteration ``u <- (1-d) u + d w``.

    ``w`` solves the linear flux problem with coefficients frozen at the
    current iterate.  At p = 2 the coefficient is constant, so one full
    step (d = 1) already solves the problem.  Cold starts below
    ``COLD_START_MIN_EPSILON`` are refused; reach small eps through
    :func:`continuation_solve`.
    """
    if not spec.epsilon > 0:
        raise DomainError("the solver needs epsilon > 0")
    if spec.epsilon < COLD_START_MIN_EPSILON and not warm_start:
        raise DomainError(
            f"cold solve at epsilon={spec.epsilon:g} refused; use continuation_solve "
            f"with a schedule ending at this epsilon"
        )
    if not 0 < damping <= 1:
        raise DomainError(f"damping must lie in (0, 1], got {damping}")
    dom = spec.domain
    bidx, iidx = dom.boundary_indices(), dom.interior_indices()
    if u0 is None:
        u0 = _poisson_guess(spec)
    elif not np.allclose(u0.flat()[bidx], spec.g, rtol=0, atol=1e-12 * (1 + np.abs(spec.g).max())):
        raise DomainError("initial guess does not match the boundary trace")
    step = 1.0 if spec.p == 2 else damping

    u = u0
    report = SolveReport(epsilon_schedule=[spec.epsilon])
    report.energy_history.append(energy(u, spec))
    best, best_res = u, math.inf
    lin_rtol = 0.01 * tol
    for it in range(1, max_iter + 1):
        a, _ = coefficient(u, spec.p, spec.epsilon)
        L = flux_operator(dom, a.values)
        A = L[iidx][:, iidx].tocsr()
        b = dom.cell_volume * spec.f.flat()[iidx] - L[iidx][:, bidx] @ spec.g
        w, nlin = _linear_solve(A, b, u.flat()[iidx], lin_rtol)
        new = u.flat().copy()
        new[iidx] = (1.0 - step) * new[iidx] + step * w
        if not np.all(np.isfinite(new)):
            raise SolverError(f"non-finite iterate at Picard iteration {it}")
        u = ScalarField(dom, new)
        res = residual(u, spec)
        report.iterations = it
        report.residual_history.append(res)
        report.linear_solve_iterations.append(nlin)
        report.energy_history.append(energy(u, spec))
        if res < best_res:
            best, best_res = u, res
        log.debug("picard it=%d residual=%.3e linear_its=%d", it, res, nlin)
        if res <= tol:
            report.converged = True
            break
    e = np.asarray(report.energy_history)
    report.energy_monotone = bool(np.all(np.diff(e) <= 1e-12 * (1 + np.abs(e[:-1]))))
    if not report.energy_monotone:
        log.info("discrete energy increased along the Picard iterates")
    if not report.converged:
        log.warning("Picard did not reach tol=%g in %d iterations (best %.3e)", tol, max_iter, best_res)
        return best, report
    return u, report


def _poisson_guess(spec: ProblemSpec) -> ScalarField:
    """Initial iterate: the constant-coefficient (p = 2) solution."""
    dom = spec.domain
    bidx, iidx = dom.boundary_indices(), dom.interior_indices()
    L = flux_operator(dom, np.ones(dom.shape))
    A = L[iidx][:, iidx].tocsr()
    b = dom.cell_volume * spec.f.flat()[iidx] - L[iidx][:, bidx] @ spec.g
    w, _ = _linear_solve(A, b, np.zeros(iidx.size), 1e-12)
    u = spec.extend_trace().reshape(-1)
    u[iidx] = w
    return ScalarField(dom, u)


def continuation_solve(
    spec: ProblemSpec,
    schedule,
    tol: float = 1e-8,
    max_iter: int = 200,
    damping: float = 0.7,
    u0: ScalarField | None = None,
) -> tuple[list[ScalarField], SolveReport]:
    """Solve along a strictly decreasing eps schedule, warm-starting each stage."""
    schedule = [float(e) for e in schedule]
    if not schedule:
        raise DomainError("empty epsilon schedule")
    if any(b >= a for a, b in zip(schedule, schedule[1:])) or schedule[-1] <= 0:
        raise DomainError(f"schedule must be strictly decreasing and positive: {schedule}")
    total = SolveReport(epsilon_schedule=schedule, converged=True)
    solutions = []
    u = u0
    for k, eps in enumerate(schedule):
        u, rep = picard_solve(spec.with_epsilon(eps), u, tol, max_iter, damping, warm_start=k > 0)
        solutions.append(u)
        total.iterations += rep.iterations
        total.residual_history += rep.residual_history
        total.linear_solve_iterations += rep.linear_solve_iterations
        total.energy_history += rep.energy_history
        total.energy_monotone &= rep.energy_monotone
        total.converged &= rep.converged
    return solutions, total
