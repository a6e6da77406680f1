"""Weighted integrals of solution jets and the auxiliary fields they use.

Conventions shared by every functional:

* ``window`` is a :class:`CellMask` flagging nodes *outside* the region of
  integration (``None`` integrates over the whole box).
* Nodes within the stencil margin of the box boundary are always excluded.
* With ``epsilon == 0`` the sharp weight ``|grad u|^s`` is used and the
  degenerate set is masked by threshold (unless ``mask_policy="none"``).
  With ``epsilon > 0`` the regularized weight ``(eps + |grad u|^2)^(s/2)`` is
  used and no degeneracy mask is applied.
* Nodes whose integrand is not finite are excluded and counted in
  ``masked_fraction``: the excluded share of the candidate nodes (inside
  the window and away from the boundary margin).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .fields import (
    CellMask,
    DomainError,
    GridDomain,
    JetField,
    ScalarField,
    VectorField,
    array_jet,
    central_first,
    degenerate_mask,
    integrate,
    jet,
)

KINDS = (
    "hessian_energy",
    "inverse_weight_f",
    "gradient_inverse",
    "third_order",
    "stress_seminorm",
    "power_field_seminorm",
    "linearized_residual",
)
MASK_POLICIES = ("exclude_Zu", "exclude_Zu_and_degenerate_hessian", "none")
REQUIRED = {
    "hessian_energy": ("p", "beta"),
    "inverse_weight_f": ("p", "q"),
    "gradient_inverse": ("p", "r"),
    "third_order": ("p", "alpha", "gamma"),
    "stress_seminorm": ("p", "alpha_tilde"),
    "power_field_seminorm": ("k", "r_exp"),
    "linearized_residual": ("p", "i", "j"),
}


class AdmissibilityWarning(UserWarning):
    """Parameters lie outside the range where the corresponding bound is known."""


@dataclass(frozen=True)
class FunctionalSpec:
    kind: str
    params: dict = field(default_factory=dict)
    mask_policy: str = "exclude_Zu"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown functional kind {self.kind!r}")
        if self.mask_policy not in MASK_POLICIES:
            raise DomainError(f"unknown mask policy {self.mask_policy!r}")
        missing = [k for k in REQUIRED[self.kind] if k not in self.params]
        if missing:
            raise DomainError(f"{self.kind} needs parameters {missing}")


@dataclass(frozen=True)
class FunctionalValue:
    value: float
    masked_fraction: float
    grid_h: float
    epsilon: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise DomainError("functional value is not finite")

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "masked_fraction": self.masked_fraction,
            "grid_h": self.grid_h,
            "epsilon": self.epsilon,
        }


# --- truncations --------------------------------------------------------------


def truncation_G(t, epsilon: float):
    """Odd truncation: 0 on ``[0, eps]``, ``2t - 2eps`` on ``[eps, 2eps]``, ``t`` beyond."""
    if epsilon < 0:
        raise DomainError(f"epsilon must be nonnegative, got {epsilon}")
    t = np.asarray(t, dtype=float)
    a = np.abs(t)
    out = np.where(a <= epsilon, 0.0, np.where(a <= 2.0 * epsilon, 2.0 * a - 2.0 * epsilon, a))
    out = np.copysign(out, t)
    return float(out) if out.ndim == 0 else out


# Bridge for h on [1, 2], written in s = t - 1: H(s) = 16 s^3 - 23 s^4 + 9 s^5.
# H(0) = H'(0) = H''(0) = 0, H(1) = 2, H'(1) = 1, H''(1) = 0, so h is C^2;
# H' = s^2 (48 - 92 s + 45 s^2) > 0 and H(s) <= 1 + s on [0, 1].
_BRIDGE = np.polynomial.Polynomial([0.0, 0.0, 0.0, 16.0, -23.0, 9.0])
_BRIDGE_D1 = _BRIDGE.deriv()
_BRIDGE_D2 = _BRIDGE.deriv(2)


def _unit_cutoff(t: np.ndarray, deriv: int) -> np.ndarray:
    s = t - 1.0
    if deriv == 0:
        far, bridge = t, _BRIDGE(s)
    elif deriv == 1:
        far, bridge = np.ones_like(t), _BRIDGE_D1(s)
    else:
        far, bridge = np.zeros_like(t), _BRIDGE_D2(s)
    return np.where(t <= 1.0, 0.0, np.where(t < 2.0, bridge, far))


def cutoff_h_derivatives(t, epsilon: float):
    """``(h_eps, h_eps', h_eps'')`` at ``t >= 0``; ``epsilon == 0`` is the identity."""
    if epsilon < 0:
        raise DomainError(f"epsilon must be nonnegative, got {epsilon}")
    t = np.asarray(t, dtype=float)
    if epsilon == 0:
        out = (t.copy(), np.ones_like(t), np.zeros_like(t))
    else:
        x = t / epsilon
        out = (epsilon * _unit_cutoff(x, 0), _unit_cutoff(x, 1), _unit_cutoff(x, 2) / epsilon)
    if t.ndim == 0:
        return tuple(float(v) for v in out)
    return out


def cutoff_h(t, epsilon: float):
    """``h_eps(t) = eps h(t/eps)`` with h = 0 on [0,1] and h(t) = t on [2, inf)."""
    return cutoff_h_derivatives(t, epsilon)[0]


# --- masking and quadrature ---------------------------------------------------


def _weight(jet_: JetField, epsilon: float, power: float) -> np.ndarray:
    """``(eps + |grad u|^2)^(power/2)``; infinite where the base vanishes and power < 0."""
    base = epsilon + jet_.grad_norm**2
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.power(base, 0.5 * power)


def _exclusions(jet_: JetField, window, epsilon: float, mask_policy: str, margin: int | None = None):
    if mask_policy not in MASK_POLICIES:
        raise DomainError(f"unknown mask policy {mask_policy!r}")
    dom = jet_.domain
    width = jet_.interior_margin if margin is None else margin
    outside = CellMask(dom.margin_mask(width), "boundary_margin")
    if window is not None:
        outside = outside | window
    degenerate = CellMask.empty(dom, "degenerate_gradient")
    if epsilon == 0 and mask_policy != "none":
        degenerate = degenerate_mask(jet_, "gradient")
        if mask_policy == "exclude_Zu_and_degenerate_hessian":
            degenerate = degenerate | degenerate_mask(jet_, "hessian")
    return outside, degenerate


def _evaluate(
    domain: GridDomain,
    integrand: np.ndarray,
    outside: CellMask,
    degenerate: CellMask,
    epsilon: float,
    rule: str = "trapezoid",
) -> FunctionalValue:
    bad = ~np.isfinite(integrand)
    excluded = (degenerate.values | bad) & ~outside.values
    candidates = int(np.count_nonzero(~outside.values))
    mask = CellMask(outside.values | excluded, outside.provenance + degenerate.provenance)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        value = integrate(np.where(mask.values, 0.0, integrand), mask, rule=rule, domain=domain)
    frac = float(np.count_nonzero(excluded)) / candidates if candidates else 0.0
    return FunctionalValue(value, frac, max(domain.h), float(epsilon))


# --- scalar functionals -------------------------------------------------------


def hessian_energy(
    u: ScalarField,
    p: float,
    beta: float,
    epsilon: float = 0.0,
    window: CellMask | None = None,
    mask_policy: str = "exclude_Zu",
    rule: str = "trapezoid",
) -> FunctionalValue:
    """``int (eps + |grad u|^2)^((p-2-beta)/2) |D^2 u|^2``."""
    if not 0 <= beta < 1:
        warnings.warn(f"beta = {beta} outside [0, 1)", AdmissibilityWarning, stacklevel=2)
    J = jet(u, 2)
    outside, degen = _exclusions(J, window, epsilon, mask_policy)
    with np.errstate(invalid="ignore"):
        integrand = _weight(J, epsilon, p - 2.0 - beta) * J.hess_norm**2
    return _evaluate(u.domain, integrand, outside, degen, epsilon, rule)


def inverse_weight_f(
    u: ScalarField,
    f: ScalarField,
    p: float,
    q_dual: float,
    epsilon: float = 0.0,
    window: CellMask | None = None,
    mask_policy: str = "exclude_Zu",
    rule: str = "trapezoid",
) -> FunctionalValue:
    """``int f^2 / (eps + |grad u|^2)^(q (p-2)/2)``; warns when p > 2 and q >= (p-1)/(p-2)."""
    if p > 2 and not q_dual < (p - 1.0) / (p - 2.0):
        warnings.warn(
            f"q = {q_dual} is not below (p-1)/(p-2) = {(p - 1.0) / (p - 2.0):.6g}",
            AdmissibilityWarning,
            stacklevel=2,
        )
    if f.domain != u.domain:
        raise DomainError("u and f live on different domains")
    J = jet(u, 1)
    outside, degen = _exclusions(J, window, epsilon, mask_policy)
    with np.errstate(invalid="ignore"):
        integrand = f.values**2 * _weight(J, epsilon, -q_dual * (p - 2.0))
    return _evaluate(u.domain, integrand, outside, degen, epsilon, rule)


def gradient_inverse(
    u: ScalarField,
    p: float,
    r: float,
    window: CellMask | None = None,
    mask_policy: str = "exclude_Zu",
    rule: str = "trapezoid",
) -> FunctionalValue:
    """``int |grad u|^(-(p-1) r)`` over the window minus the degenerate set."""
    if not r < 1:
        warnings.warn(f"r = {r} is not below 1", AdmissibilityWarning, stacklevel=2)
    J = jet(u, 1)
    outside, degen = _exclusions(J, window, 0.0, mask_policy)
    integrand = _weight(J, 0.0, -(p - 1.0) * r)
    return _evaluate(u.domain, integrand, outside, degen, 0.0, rule)


def third_order_functional(
    u: ScalarField,
    p: float,
    alpha: float,
    gamma: float,
    epsilon: float = 0.0,
    mask_policy: str = "exclude_Zu",
    window: CellMask | None = None,
    rule: str = "trapezoid",
) -> FunctionalValue:
    """``int (eps + |grad u|^2)^((p-2+alpha)/2) |D^2 u|^(gamma-1) |D^3 u|^2``.

    For ``gamma < 1`` with the sharp weight the set ``{|D^2 u| = 0}`` must be
    excluded as well, so ``mask_policy`` has to say so.
    """
    if gamma < 1 and epsilon == 0 and mask_policy != "exclude_Zu_and_degenerate_hessian":
        raise DomainError("gamma < 1 needs mask_policy='exclude_Zu_and_degenerate_hessian'")
    J = jet(u, 3)
    outside, degen = _exclusions(J, window, epsilon, mask_policy)
    with np.errstate(divide="ignore", invalid="ignore"):
        hpow = np.ones_like(J.hess_norm) if gamma == 1 else np.power(J.hess_norm, gamma - 1.0)
        integrand = _weight(J, epsilon, p - 2.0 + alpha) * hpow * J.third_norm**2
    return _evaluate(u.domain, integrand, outside, degen, epsilon, rule)


# --- stress field -------------------------------------------------------------


def stress_field(u: ScalarField, p: float, epsilon: float = 0.0) -> VectorField:
    """``(eps + |grad u|^2)^((p-2)/2) grad u``; set to 0 where that is undefined."""
    J = jet(u, 1)
    w = _weight(J, epsilon, p - 2.0)
    with np.errstate(invalid="ignore"):
        V = w[None] * J.grad
    V[:, ~np.isfinite(V).all(axis=0)] = 0.0
    return VectorField(u.domain, V)


def _jacobian(V: np.ndarray, domain: GridDomain) -> np.ndarray:
    n = domain.n
    return np.stack([np.stack([central_first(V[i], j, domain.h[j]) for j in range(n)]) for i in range(n)])


@dataclass(frozen=True)
class StressSeminorm:
    """Three evaluations of the alpha-tilde energy of D(stress).

    ``direct``: finite differences of the sampled stress field.
    ``chain_rule``: the pointwise chain-rule expansion of D(stress) from the
    jet of u, the same quantity as ``direct`` by a different route.
    ``expansion``: the Hessian-weighted integrand
    ``(eps+|grad u|^2)^(a(p-2)/2) |D^2u|^2 sum_kl |u_kl|^(a-2)``.
    """

    direct: FunctionalValue
    chain_rule: FunctionalValue
    expansion: FunctionalValue

    @property
    def route_gap(self) -> float:
        """Relative disagreement between the two D(stress) routes."""
        a, b = self.direct.value, self.chain_rule.value
        scale = max(abs(a), abs(b))
        return 0.0 if scale == 0 else abs(a - b) / scale


def stress_sobolev_seminorm(
    u: ScalarField,
    p: float,
    alpha_tilde: float,
    epsilon: float = 0.0,
    window: CellMask | None = None,
    mask_policy: str = "exclude_Zu",
    rule: str = "trapezoid",
) -> StressSeminorm:
    dom = u.domain
    J = jet(u, 2)
    # differencing the stress adds one node to the jet margin
    outside, degen = _exclusions(J, window, epsilon, mask_policy, margin=2)
    a = alpha_tilde

    V = stress_field(u, p, epsilon).values
    DV = _jacobian(V, dom)
    direct = np.sqrt(np.sum(DV**2, axis=(0, 1))) ** a

    w = _weight(J, epsilon, p - 2.0)
    w4 = _weight(J, epsilon, p - 4.0)
    with np.errstate(invalid="ignore"):
        Hg = np.einsum("lj...,l...->j...", J.hess, J.grad)  # sum_l u_l u_lj
        chain = w[None, None] * J.hess + (p - 2.0) * w4[None, None] * np.einsum("i...,j...->ij...", J.grad, Hg)
        chain_val = np.sqrt(np.sum(chain**2, axis=(0, 1))) ** a
        kl = np.sum(np.abs(J.hess) ** (a - 2.0), axis=(0, 1))
        expansion = _weight(J, epsilon, a * (p - 2.0)) * J.hess_norm**2 * kl

    return StressSeminorm(
        direct=_evaluate(dom, direct, outside, degen, epsilon, rule),
        chain_rule=_evaluate(dom, chain_val, outside, degen, epsilon, rule),
        expansion=_evaluate(dom, expansion, outside, degen, epsilon, rule),
    )


# --- power vector field -------------------------------------------------------


def power_vector_field(u: ScalarField, k: float, epsilon: float = 0.0) -> tuple[VectorField, CellMask]:
    """``h_eps(|grad u|) |grad u|^(k-2) grad u`` and the nodes where it was undefined (set to 0)."""
    J = jet(u, 1)
    g = J.grad_norm
    h = cutoff_h(g, epsilon)
    with np.errstate(divide="ignore", invalid="ignore"):
        V = (h * np.power(g, k - 2.0))[None] * J.grad
        if epsilon > 0:
            V = np.where((h == 0.0)[None], 0.0, V)
    bad = ~np.isfinite(V).all(axis=0)
    V[:, bad] = 0.0
    return VectorField(u.domain, V), CellMask(bad, "degenerate_gradient")


def power_field_seminorm(
    u: ScalarField,
    k: float,
    r_exp: float,
    order: int = 2,
    epsilon: float = 0.0,
    window: CellMask | None = None,
    mask_policy: str = "exclude_Zu",
    p: float | None = None,
    rule: str = "trapezoid",
) -> FunctionalValue:
    """``int |D^order V|^r_exp`` for the power vector field V (Frobenius norm)."""
    if order not in (1, 2):
        raise DomainError(f"order must be 1 or 2, got {order}")
    if p is not None and not k > (p - 1.0) / 2.0:
        warnings.warn(f"k = {k} is not above (p-1)/2 = {(p - 1.0) / 2.0}", AdmissibilityWarning, stacklevel=2)
    dom = u.domain
    J = jet(u, 1)
    V, undefined = power_vector_field(u, k, epsilon)
    outside, degen = _exclusions(J, window, epsilon, mask_policy, margin=1 + order)
    degen = degen | undefined
    if order == 1:
        D = _jacobian(V.values, dom)
        norm2 = np.sum(D**2, axis=(0, 1))
    else:
        norm2 = sum(np.sum(array_jet(dom, V.values[i], 2).hess ** 2, axis=(0, 1)) for i in range(dom.n))
    integrand = np.sqrt(norm2) ** r_exp
    return _evaluate(dom, integrand, outside, degen, epsilon, rule)


# --- second linearized equation -----------------------------------------------


def linearized_terms(u: ScalarField, f: ScalarField, phi: ScalarField, i: int, j: int, p: float, rule: str = "trapezoid"):
    """The six left-hand integrals and the right-hand side ``int f_ij phi``.

    Integration runs over the nodes where ``phi`` or its gradient is
    nonzero, minus the degenerate set of ``u``.
    """
    dom = u.domain
    if f.domain != dom or phi.domain != dom:
        raise DomainError("u, f and phi must share a domain")
    n = dom.n
    if not (0 <= i < n and 0 <= j < n):
        raise DomainError(f"axes ({i}, {j}) out of range for n = {n}")
    Ju, Jphi, Jf = jet(u, 3), jet(phi, 1), jet(f, 2)
    margin = Ju.interior_margin + 1
    support = (phi.values != 0) | np.any(Jphi.grad != 0, axis=0)
    if np.any(support & dom.margin_mask(margin)):
        raise DomainError("phi must vanish, with its gradient, within the boundary margin")
    degen = degenerate_mask(Ju, "gradient")
    mask = CellMask(~support | degen.values, ("user", "degenerate_gradient"))

    g = Ju.grad
    H = Ju.hess
    gi, gj = H[:, i], H[:, j]  # grad of u_i and u_j
    gij = Ju.third[i, j]  # grad of u_ij
    dphi = Jphi.grad

    def dot(a, b):
        return np.sum(a * b, axis=0)

    with np.errstate(divide="ignore", invalid="ignore"):
        w2 = _weight(Ju, 0.0, p - 2.0)
        w4 = _weight(Ju, 0.0, p - 4.0)
        w6 = _weight(Ju, 0.0, p - 6.0)
        dens = [
            w2 * dot(gij, dphi),
            (p - 2.0) * w4 * dot(g, gj) * dot(gi, dphi),
            (p - 2.0) * (p - 4.0) * w6 * dot(g, gj) * dot(gi, g) * dot(g, dphi),
            (p - 2.0) * w4 * dot(gij, g) * dot(g, dphi),
            (p - 2.0) * w4 * dot(gi, gj) * dot(g, dphi),
            (p - 2.0) * w4 * dot(gi, g) * dot(gj, dphi),
        ]
    keep = ~mask.values
    lhs = [integrate(np.where(keep, d, 0.0), mask, rule=rule, domain=dom) for d in dens]
    rhs = integrate(np.where(keep, Jf.hess[i, j] * phi.values, 0.0), mask, rule=rule, domain=dom)
    return lhs, rhs


def linearized_residual(u: ScalarField, f: ScalarField, phi: ScalarField, i: int, j: int, p: float) -> float:
    """Left-hand side minus right-hand side of the second linearized equation."""
    lhs, rhs = linearized_terms(u, f, phi, i, j, p)
    return math.fsum(lhs) - rhs


# --- dispatch -----------------------------------------------------------------


def evaluate(spec: FunctionalSpec, u: ScalarField, f: ScalarField | None = None, window: CellMask | None = None):
    """Evaluate ``spec`` on ``u``; stress returns :class:`StressSeminorm`."""
    P = spec.params
    eps = float(P.get("epsilon", 0.0))
    pol = spec.mask_policy
    if spec.kind == "hessian_energy":
        return hessian_energy(u, P["p"], P["beta"], eps, window, pol)
    if spec.kind == "inverse_weight_f":
        if f is None:
            raise DomainError("inverse_weight_f needs the source field")
        return inverse_weight_f(u, f, P["p"], P["q"], eps, window, pol)
    if spec.kind == "gradient_inverse":
        return gradient_inverse(u, P["p"], P["r"], window, pol)
    if spec.kind == "third_order":
        return third_order_functional(u, P["p"], P["alpha"], P["gamma"], eps, pol, window)
    if spec.kind == "stress_seminorm":
        return stress_sobolev_seminorm(u, P["p"], P["alpha_tilde"], eps, window, pol)
    if spec.kind == "power_field_seminorm":
        return power_field_seminorm(u, P["k"], P["r_exp"], int(P.get("order", 2)), eps, window, pol, P.get("p"))
    raise DomainError(f"{spec.kind} is not a windowed integral; call linearized_residual directly")
