"""Structured-grid fields, finite-difference jets and masked quadrature.

Node arrays use ``indexing="ij"`` layout, so flattening in C order gives
the row-major node ordering used by the serializers and by the solver.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np

MIN_CELLS = 4


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class QuadratureWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class GridDomain:
    """Axis-aligned box ``origin + [0, extent]`` split into uniform cells."""

    n: int
    origin: tuple[float, ...]
    extent: tuple[float, ...]
    cells: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "extent", tuple(float(v) for v in self.extent))
        object.__setattr__(self, "cells", tuple(int(v) for v in self.cells))
        if self.n not in (1, 2, 3):
            raise DomainError(f"dimension must be 1, 2 or 3, got {self.n}")
        if not (len(self.origin) == len(self.extent) == len(self.cells) == self.n):
            raise DomainError("origin, extent and cells must each have n entries")
        if min(self.extent) <= 0:
            raise DomainError(f"extent must be positive, got {self.extent}")
        if min(self.cells) < MIN_CELLS:
            raise DomainError(f"need at least {MIN_CELLS} cells per axis, got {self.cells}")

    @classmethod
    def box(cls, lo, hi, cells) -> GridDomain:
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        n = lo.size
        cells = np.broadcast_to(np.asarray(cells, dtype=int), (n,))
        return cls(n, tuple(lo), tuple(hi - lo), tuple(cells))

    @classmethod
    def cube(cls, n: int, lo: float, hi: float, spacing: float) -> GridDomain:
        """Cube ``[lo, hi]^n`` whose spacing is ``spacing`` (must divide the side)."""
        m = (hi - lo) / spacing
        cells = int(round(m))
        if abs(cells - m) > 1e-9 * max(1.0, m):
            raise DomainError(f"spacing {spacing} does not divide side {hi - lo}")
        return cls(n, (lo,) * n, (hi - lo,) * n, (cells,) * n)

    @property
    def h(self) -> tuple[float, ...]:
        return tuple(e / c for e, c in zip(self.extent, self.cells))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(c + 1 for c in self.cells)

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    @property
    def cell_volume(self) -> float:
        return math.prod(self.h)

    def axes(self) -> list[np.ndarray]:
        return [o + h * np.arange(c + 1) for o, h, c in zip(self.origin, self.h, self.cells)]

    def coordinates(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.axes(), indexing="ij"))

    def radius(self, center=None) -> np.ndarray:
        center = np.zeros(self.n) if center is None else np.asarray(center, dtype=float)
        return np.sqrt(sum((x - c) ** 2 for x, c in zip(self.coordinates(), center)))

    def margin_mask(self, width: int) -> np.ndarray:
        """Boolean array, True on nodes within ``width`` nodes of the boundary."""
        inner = np.zeros(self.shape, dtype=bool)
        if width <= 0:
            inner[...] = True
        else:
            inner[(slice(width, -width),) * self.n] = True
        return ~inner

    def boundary_indices(self) -> np.ndarray:
        """Flat (row-major) indices of the boundary nodes, ascending."""
        return np.flatnonzero(self.margin_mask(1))

    def interior_indices(self) -> np.ndarray:
        return np.flatnonzero(~self.margin_mask(1))

    def header(self, name: str) -> dict:
        return {
            "n": self.n,
            "origin": list(self.origin),
            "extent": list(self.extent),
            "cells": list(self.cells),
            "name": name,
        }


def _as_node_array(domain: GridDomain, values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        return np.full(domain.shape, float(arr))
    if arr.size != domain.size:
        raise DomainError(f"expected {domain.size} node values, got {arr.size}")
    return arr.reshape(domain.shape)


@dataclass(frozen=True, eq=False)
class ScalarField:
    domain: GridDomain
    values: np.ndarray
    _jets: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        arr = _as_node_array(self.domain, self.values)
        if not np.all(np.isfinite(arr)):
            raise DomainError("scalar field values must be finite")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_function(cls, domain: GridDomain, func: Callable[..., np.ndarray]) -> ScalarField:
        return cls(domain, np.broadcast_to(func(*domain.coordinates()), domain.shape))

    def with_values(self, values) -> ScalarField:
        return ScalarField(self.domain, values)

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)


@dataclass(frozen=True, eq=False)
class VectorField:
    """Per-node vectors stored component-first: ``values.shape == (n, *domain.shape)``."""

    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.shape != (self.domain.n,) + self.domain.shape:
            raise DomainError(f"vector field shape {arr.shape} does not match domain")
        object.__setattr__(self, "values", arr)

    def component(self, i: int) -> ScalarField:
        return ScalarField(self.domain, self.values[i])

    def norm(self) -> np.ndarray:
        return np.sqrt(np.sum(self.values**2, axis=0))


@dataclass(frozen=True, eq=False)
class CellMask:
    """Per-node exclusion flags; True marks a node left out of quadrature."""

    values: np.ndarray
    provenance: tuple[str, ...] = ("user",)

    PROVENANCES = ("degenerate_gradient", "degenerate_hessian", "boundary_margin", "user")

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=bool)
        prov = (self.provenance,) if isinstance(self.provenance, str) else tuple(self.provenance)
        unknown = set(prov) - set(self.PROVENANCES)
        if unknown:
            raise ValueError(f"unknown mask provenance {sorted(unknown)}")
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "provenance", prov)

    @classmethod
    def empty(cls, domain: GridDomain, provenance="user") -> CellMask:
        return cls(np.zeros(domain.shape, dtype=bool), provenance)

    def __or__(self, other: CellMask) -> CellMask:
        if other is None:
            return self
        if self.values.shape != other.values.shape:
            raise DomainError("mask shapes differ")
        prov = tuple(dict.fromkeys(self.provenance + other.provenance))
        return CellMask(self.values | other.values, prov)

    __ror__ = __or__

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.values))

    @property
    def fraction(self) -> float:
        return self.count / self.values.size


def box_window(domain: GridDomain, lo, hi) -> CellMask:
    """Mask flagging every node outside the closed box ``[lo, hi]``."""
    tol = 1e-9 * min(domain.h)
    inside = np.ones(domain.shape, dtype=bool)
    for x, a, b in zip(domain.coordinates(), np.broadcast_to(lo, (domain.n,)), np.broadcast_to(hi, (domain.n,))):
        inside &= (x >= a - tol) & (x <= b + tol)
    return CellMask(~inside, "user")


def disk_window(domain: GridDomain, radius: float, r_min: float = 0.0, center=None) -> CellMask:
    """Mask flagging nodes outside the ball (or annulus ``r_min <= r <= radius``)."""
    r = domain.radius(center)
    tol = 1e-9 * min(domain.h)
    inside = (r <= radius + tol) & (r >= r_min - tol)
    return CellMask(~inside, "user")


# --- finite differences -------------------------------------------------------


def _take(a: np.ndarray, axis: int, sl: slice) -> np.ndarray:
    idx = [slice(None)] * a.ndim
    idx[axis] = sl
    return a[tuple(idx)]


def _pad_edges(core: np.ndarray, axis: int, width: int) -> np.ndarray:
    pad = [(0, 0)] * core.ndim
    pad[axis] = (width, width)
    return np.pad(core, pad, mode="edge")


def central_first(a: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Second-order central first difference; edge nodes copy their neighbour."""
    core = (_take(a, axis, slice(2, None)) - _take(a, axis, slice(None, -2))) / (2.0 * h)
    return _pad_edges(core, axis, 1)


def central_second(a: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Three-point second difference; edge nodes copy their neighbour."""
    core = (
        _take(a, axis, slice(2, None)) - 2.0 * _take(a, axis, slice(1, -1)) + _take(a, axis, slice(None, -2))
    ) / (h * h)
    return _pad_edges(core, axis, 1)


@dataclass(frozen=True, eq=False)
class JetField:
    domain: GridDomain
    order: int
    grad: np.ndarray
    hess: np.ndarray | None
    third: np.ndarray | None
    interior_margin: int

    @cached_property
    def grad_norm(self) -> np.ndarray:
        return np.sqrt(np.sum(self.grad**2, axis=0))

    @cached_property
    def hess_norm(self) -> np.ndarray:
        if self.hess is None:
            raise DomainError("jet has no second derivatives")
        return np.sqrt(np.sum(self.hess**2, axis=(0, 1)))

    @cached_property
    def third_norm(self) -> np.ndarray:
        if self.third is None:
            raise DomainError("jet has no third derivatives")
        return np.sqrt(np.sum(self.third**2, axis=(0, 1, 2)))

    @property
    def boundary(self) -> CellMask:
        return CellMask(self.domain.margin_mask(self.interior_margin), "boundary_margin")


def _jet_from_array(domain: GridDomain, u: np.ndarray, order: int) -> JetField:
    n, h = domain.n, domain.h
    grad = np.stack([central_first(u, i, h[i]) for i in range(n)])
    hess = third = None
    if order >= 2:
        hess = np.empty((n, n) + domain.shape)
        second = [central_second(u, i, h[i]) for i in range(n)]
        for i in range(n):
            hess[i, i] = second[i]
            for j in range(i + 1, n):
                hess[i, j] = hess[j, i] = central_first(grad[i], j, h[j])
    if order >= 3:
        third = np.empty((n, n, n) + domain.shape)
        # repeated indices go into the compact second difference
        for i in range(n):
            for j in range(i, n):
                for k in range(j, n):
                    if i == j:
                        val = central_first(second[i], k, h[k])
                    elif j == k:
                        val = central_first(second[j], i, h[i])
                    else:
                        val = central_first(hess[i, j], k, h[k])
                    for a, b, c in {(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)}:
                        third[a, b, c] = val
    return JetField(domain, order, grad, hess, third, interior_margin=order)


def jet(u: ScalarField, order: int = 2) -> JetField:
    """Finite-difference derivatives of ``u`` up to ``order`` (1, 2 or 3).

    Nodes within ``order`` nodes of the boundary carry copied one-sided
    values and are flagged by ``JetField.boundary``.
    """
    if order not in (1, 2, 3):
        raise DomainError(f"jet order must be 1, 2 or 3, got {order}")
    if min(u.domain.cells) < 2 * order:
        raise DomainError(f"grid too small for order {order} jets: cells={u.domain.cells}")
    cached = u._jets.get(order)
    if cached is None:
        cached = _jet_from_array(u.domain, u.values, order)
        u._jets[order] = cached
    return cached


def array_jet(domain: GridDomain, values: np.ndarray, order: int) -> JetField:
    """Jet of a raw node array that may hold non-finite entries (no caching)."""
    if min(domain.cells) < 2 * order:
        raise DomainError(f"grid too small for order {order} jets: cells={domain.cells}")
    return _jet_from_array(domain, np.asarray(values, dtype=float), order)


def default_delta(jet_: JetField, which: str = "gradient") -> float:
    """Degeneracy threshold that shrinks like h^2 relative to the median norm."""
    scale = float(np.median(jet_.grad_norm if which == "gradient" else jet_.hess_norm))
    if scale == 0.0:
        scale = 1.0
    return max(max(jet_.domain.h) ** 2, 1e-10) * scale


def degenerate_mask(jet_: JetField, which: str = "gradient", delta: float | None = None) -> CellMask:
    """Flag nodes where the gradient (or Hessian) norm falls below ``delta``."""
    if delta is None:
        delta = default_delta(jet_, which)
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    if which == "gradient":
        return CellMask(jet_.grad_norm < delta, "degenerate_gradient")
    if which == "hessian":
        return CellMask(jet_.hess_norm < delta, "degenerate_hessian")
    raise DomainError(f"unknown degeneracy kind {which!r}")


# --- quadrature ---------------------------------------------------------------

RULES = ("midpoint", "trapezoid")


def quadrature_weights(domain: GridDomain, rule: str = "trapezoid") -> np.ndarray:
    """Node weights: tensor trapezoid, or one full dual cell per node for midpoint."""
    if rule == "midpoint":
        return np.full(domain.shape, domain.cell_volume)
    if rule != "trapezoid":
        raise DomainError(f"unknown quadrature rule {rule!r}")
    w = np.ones(domain.shape)
    for axis, (h, c) in enumerate(zip(domain.h, domain.cells)):
        w1 = np.full(c + 1, h)
        w1[[0, -1]] = 0.5 * h
        shape = [1] * domain.n
        shape[axis] = c + 1
        w = w * w1.reshape(shape)
    return w


def integrate(values, mask: CellMask | None = None, rule: str = "trapezoid", domain: GridDomain | None = None) -> float:
    """Compensated sum of ``w_i v_i`` over unmasked nodes, in row-major order.

    Masked nodes are omitted without renormalizing the weights.  If every
    node is masked the result is 0.0 and a QuadratureWarning is emitted.
    """
    if isinstance(values, ScalarField):
        domain, arr = values.domain, values.values
    else:
        if domain is None:
            raise DomainError("raw value arrays need a domain")
        arr = _as_node_array(domain, values)
    keep = np.ones(domain.shape, dtype=bool) if mask is None else ~mask.values
    if not keep.any():
        warnings.warn("all nodes masked; integral set to 0", QuadratureWarning, stacklevel=2)
        return 0.0
    w = quadrature_weights(domain, rule)
    terms = w[keep] * arr[keep]
    return math.fsum(terms.tolist())


# --- serialization ------------------------------------------------------------


def save_field(path, domain: GridDomain, values, name: str, fmt: str = "csv") -> tuple[Path, Path]:
    """Write ``<path>.json`` (header) and ``<path>.csv`` or ``<path>.bin`` (row-major float64)."""
    path = Path(path)
    arr = _as_node_array(domain, values).reshape(-1)
    head = path.with_suffix(".json")
    head.write_text(json.dumps(domain.header(name), indent=2) + "\n")
    if fmt == "csv":
        data = path.with_suffix(".csv")
        data.write_text("".join(f"{v!r}\n" for v in arr.tolist()))
    elif fmt == "bin":
        data = path.with_suffix(".bin")
        data.write_bytes(arr.astype("<f8").tobytes())
    else:
        raise ValueError(f"unknown field format {fmt!r}")
    return head, data


def load_field(path) -> tuple[GridDomain, np.ndarray, str]:
    path = Path(path)
    header = json.loads(path.with_suffix(".json").read_text())
    domain = GridDomain(header["n"], header["origin"], header["extent"], header["cells"])
    if path.with_suffix(".bin").exists() and path.suffix != ".csv":
        arr = np.frombuffer(path.with_suffix(".bin").read_bytes(), dtype="<f8")
    else:
        arr = np.array([float(line) for line in path.with_suffix(".csv").read_text().split()])
    return domain, arr.reshape(domain.shape), header["name"]
