"""Independent reference values: exact radial solutions, 1-D radial quadrature
of every functional, Calderon-Zygmund ratio estimates, and a manufactured
Poisson pair.

Nothing in this module uses the finite-difference stencils of
:mod:`plaplab.fields`; radial derivatives come from closed forms and from a
small second-order forward-mode arithmetic on profiles ``phi(r)``.
"""

from __future__ import annotations

import itertools
import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate as sint
from scipy.special import gamma as gamma_fn

from .fields import DomainError, GridDomain, ScalarField, quadrature_weights
from .functionals import cutoff_h_derivatives

log = logging.getLogger(__name__)


class UnknownConstantError(ValueError):
    pass


class _Divergent:
    """Marker returned when a radial integral is infinite."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "DIVERGENT"

    def __bool__(self):
        return False


DIVERGENT = _Divergent()


# --- profiles with two derivatives -------------------------------------------


@dataclass(frozen=True)
class Profile:
    """Value and first two derivatives of a function of r."""

    f: float
    d1: float
    d2: float

    @classmethod
    def radius(cls, r: float) -> Profile:
        return cls(r, 1.0, 0.0)

    def __mul__(self, other):
        if not isinstance(other, Profile):
            return Profile(self.f * other, self.d1 * other, self.d2 * other)
        return Profile(
            self.f * other.f,
            self.d1 * other.f + self.f * other.d1,
            self.d2 * other.f + 2.0 * self.d1 * other.d1 + self.f * other.d2,
        )

    __rmul__ = __mul__

    def __add__(self, c: float) -> Profile:
        return Profile(self.f + c, self.d1, self.d2)

    def __pow__(self, a: float) -> Profile:
        if a == 0:
            return Profile(1.0, 0.0, 0.0)
        v = self.f
        return Profile(
            v**a,
            a * v ** (a - 1) * self.d1,
            a * (a - 1) * v ** (a - 2) * self.d1**2 + a * v ** (a - 1) * self.d2,
        )

    def compose(self, g, g1, g2) -> Profile:
        """``g`` applied to this profile, given ``g, g', g''`` at ``self.f``."""
        return Profile(g, g1 * self.d1, g2 * self.d1**2 + g1 * self.d2)


def _unit(n: int, direction=None) -> np.ndarray:
    e = np.zeros(n)
    if direction is None:
        e[0] = 1.0
    else:
        e[:] = direction
    return e


def radial_vector_derivatives(phi: Profile, r: float, e: np.ndarray):
    """Jacobian and second derivatives of ``V(x) = phi(|x|) x`` at ``x = r e``.

    ``DV_ij = phi d_ij + r phi' e_i e_j`` and
    ``D2V_ijk = phi' (d_ij e_k + d_ik e_j + d_jk e_i) + (r phi'' - phi') e_i e_j e_k``.
    """
    n = e.size
    eye = np.eye(n)
    J = phi.f * eye + r * phi.d1 * np.outer(e, e)
    sym = np.einsum("ij,k->ijk", eye, e) + np.einsum("ik,j->ijk", eye, e) + np.einsum("jk,i->ijk", eye, e)
    H = phi.d1 * sym + (r * phi.d2 - phi.d1) * np.einsum("i,j,k->ijk", e, e, e)
    return J, H


# --- exact radial solutions ---------------------------------------------------


@dataclass(frozen=True)
class RadialSolution:
    """``u = scale * |x|^m`` with ``m = p/(p-1)``, solving ``-div(|grad u|^(p-2) grad u) = f_value``."""

    p: float
    n: int
    scale: float

    def __post_init__(self):
        if not self.p > 1:
            raise DomainError(f"p must exceed 1, got {self.p}")
        if self.scale == 0:
            raise DomainError("scale must be nonzero")

    @property
    def m(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def sign(self) -> int:
        return 1 if self.scale > 0 else -1

    @property
    def f_value(self) -> float:
        return -self.sign * self.n * (abs(self.scale) * self.m) ** (self.p - 1.0)

    # profile of grad u = phi(r) x
    def grad_profile(self, r: float) -> Profile:
        return self.scale * self.m * Profile.radius(r) ** (self.m - 2.0)

    def grad_norm(self, r: float) -> float:
        return abs(self.scale) * self.m * r ** (self.m - 1.0)

    def jet_at(self, x: np.ndarray):
        """Exact ``(grad, hess, third)`` at a single point ``x != 0``."""
        x = np.asarray(x, dtype=float)
        r = float(np.linalg.norm(x))
        phi = self.grad_profile(r)
        J, H = radial_vector_derivatives(phi, r, x / r)
        return phi.f * x, J, H

    # vectorized samplers on coordinate tuples ----------------------------------
    def _rad(self, xs):
        xs = [np.asarray(x, dtype=float) for x in xs]
        r = np.sqrt(sum(x * x for x in xs))
        with np.errstate(divide="ignore", invalid="ignore"):
            e = [np.where(r > 0, x / np.where(r > 0, r, 1.0), 0.0) for x in xs]
        return xs, r, e

    def u(self, *xs) -> np.ndarray:
        _, r, _ = self._rad(xs)
        return self.scale * r**self.m

    def f(self, *xs) -> np.ndarray:
        return np.full(np.shape(xs[0]), self.f_value)

    def grad(self, *xs) -> np.ndarray:
        _, r, e = self._rad(xs)
        g = self.scale * self.m * r ** (self.m - 1.0)
        return np.stack([g * ei for ei in e])

    def hess(self, *xs) -> np.ndarray:
        """Exact Hessian; non-finite at the origin when m < 2."""
        _, r, e = self._rad(xs)
        s, m, n = self.scale, self.m, len(xs)
        with np.errstate(divide="ignore", invalid="ignore"):
            rp = r ** (m - 2.0)
            out = np.empty((n, n) + r.shape)
            for i, j in itertools.product(range(n), repeat=2):
                out[i, j] = s * m * rp * ((i == j) + (m - 2.0) * e[i] * e[j])
        return out

    def third(self, *xs) -> np.ndarray:
        """Exact third derivatives; non-finite at the origin when m < 3 and m != 2."""
        _, r, e = self._rad(xs)
        s, m, n = self.scale, self.m, len(xs)
        out = np.empty((n, n, n) + r.shape)
        if m == 2.0:
            out[...] = 0.0
            return out
        with np.errstate(divide="ignore", invalid="ignore"):
            rp = r ** (m - 3.0)
            for i, j, k in itertools.product(range(n), repeat=3):
                sym = (i == j) * e[k] + (i == k) * e[j] + (j == k) * e[i]
                out[i, j, k] = s * m * (m - 2.0) * rp * (sym + (m - 4.0) * e[i] * e[j] * e[k])
            out[:, :, :, r == 0] = np.inf if m < 3 else 0.0
        return out


def radial_solution(p: float, n: int = 2, scale: float = 1.0) -> RadialSolution:
    return RadialSolution(float(p), int(n), float(scale))


# --- radial functional oracle -------------------------------------------------

KINDS = (
    "hessian_energy",
    "inverse_weight_f",
    "gradient_inverse",
    "third_order",
    "stress_seminorm",
    "power_field_seminorm",
)


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n (2 for n = 1)."""
    return 2.0 * math.pi ** (n / 2.0) / gamma_fn(n / 2.0)


def _weight_exponent(key_power: float, eps: float, m: float) -> float:
    """Small-r exponent of ``(eps + |grad u|^2)^(key_power/2)``."""
    return 0.0 if eps > 0 else (m - 1.0) * key_power


def radial_exponent(kind: str, params: dict, sol: RadialSolution) -> float:
    """Leading small-r power of the integrand (the sphere factor excluded).

    Returns ``+inf`` when the integrand vanishes identically near the origin.
    """
    m, n = sol.m, sol.n
    p = params.get("p", sol.p)
    eps = params.get("epsilon", 0.0)
    hess_exp = m - 2.0
    if kind == "hessian_energy":
        return _weight_exponent(p - 2.0 - params["beta"], eps, m) + 2.0 * hess_exp
    if kind == "inverse_weight_f":
        return _weight_exponent(-params["q"] * (p - 2.0), eps, m)
    if kind == "gradient_inverse":
        return -(p - 1.0) * params["r"] * (m - 1.0)
    if kind == "third_order":
        if m == 2.0:
            return math.inf
        w = _weight_exponent(p - 2.0 + params["alpha"], eps, m)
        return w + (params["gamma"] - 1.0) * hess_exp + 2.0 * (m - 3.0)
    if kind == "stress_seminorm":
        a = params["alpha_tilde"]
        w = _weight_exponent(a * (p - 2.0), eps, m)
        if params.get("variant", "direct") == "expansion":
            return w + 2.0 * hess_exp + (a - 2.0) * hess_exp
        # grad of V: eps = 0 gives V ~ r^((m-1)(p-1)), DV ~ r^((m-1)(p-1)-1) = r^0
        if eps > 0:
            return a * hess_exp
        return a * ((m - 1.0) * (p - 1.0) - 1.0)
    if kind == "power_field_seminorm":
        k, order, r_exp = params["k"], int(params.get("order", 2)), params["r_exp"]
        if eps > 0:
            # h_eps vanishes near the degenerate point
            return math.inf
        # V = C r^c x with c = (m-1)k - 1; its second derivatives carry a factor c
        if order == 2 and (m - 1.0) * k == 1.0:
            return math.inf
        return r_exp * ((m - 1.0) * k - order)
    raise DomainError(f"unknown functional kind {kind!r}")


def _stress_profile(sol: RadialSolution, p: float, eps: float, r: float) -> Profile:
    g = sol.grad_profile(r)
    g2 = (sol.scale * sol.m) ** 2 * Profile.radius(r) ** (2.0 * (sol.m - 1.0))
    return g * ((g2 + eps) ** ((p - 2.0) / 2.0))


def _power_profile(sol: RadialSolution, k: float, eps: float, r: float) -> Profile:
    g = sol.grad_profile(r)
    gn = abs(sol.scale) * sol.m * Profile.radius(r) ** (sol.m - 1.0)
    if eps > 0:
        h, h1, h2 = cutoff_h_derivatives(gn.f, eps)
        hval = gn.compose(h, h1, h2)
    else:
        hval = gn
    return g * hval * gn ** (k - 2.0)


def _integrand_at(kind: str, params: dict, sol: RadialSolution, r: float, e: np.ndarray) -> float:
    p = params.get("p", sol.p)
    eps = params.get("epsilon", 0.0)
    x = r * e
    if kind in ("stress_seminorm", "power_field_seminorm"):
        if kind == "stress_seminorm" and params.get("variant", "direct") == "expansion":
            _, hess, _ = sol.jet_at(x)
            gn2 = sol.grad_norm(r) ** 2
            a = params["alpha_tilde"]
            return (eps + gn2) ** (a * (p - 2.0) / 2.0) * np.sum(hess**2) * np.sum(np.abs(hess) ** (a - 2.0))
        if kind == "stress_seminorm":
            J, _ = radial_vector_derivatives(_stress_profile(sol, p, eps, r), r, e)
            return float(np.sqrt(np.sum(J**2))) ** params["alpha_tilde"]
        J, H = radial_vector_derivatives(_power_profile(sol, params["k"], eps, r), r, e)
        D = J if int(params.get("order", 2)) == 1 else H
        return float(np.sqrt(np.sum(D**2))) ** params["r_exp"]
    gn = sol.grad_norm(r)
    base = eps + gn * gn
    if kind == "gradient_inverse":
        return gn ** (-(p - 1.0) * params["r"])
    if kind == "inverse_weight_f":
        return sol.f_value**2 * base ** (-params["q"] * (p - 2.0) / 2.0)
    _, hess, third = sol.jet_at(x)
    h2 = float(np.sum(hess**2))
    if kind == "hessian_energy":
        return base ** ((p - 2.0 - params["beta"]) / 2.0) * h2
    if kind == "third_order":
        t2 = float(np.sum(third**2))
        if t2 == 0.0:
            return 0.0
        return base ** ((p - 2.0 + params["alpha"]) / 2.0) * h2 ** ((params["gamma"] - 1.0) / 2.0) * t2
    raise DomainError(f"unknown functional kind {kind!r}")


def _sphere_average(fun, n: int) -> float:
    """Integral of ``fun(e)`` over the unit sphere of R^n."""
    if n == 1:
        return fun(np.array([1.0])) + fun(np.array([-1.0]))
    if n == 2:
        val, _ = sint.quad(lambda t: fun(np.array([math.cos(t), math.sin(t)])), 0.0, 2 * math.pi, limit=200)
        return val
    if n == 3:

        def inner(ph, th):
            return fun(np.array([math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)])) * math.sin(th)

        val, _ = sint.dblquad(inner, 0.0, math.pi, 0.0, 2 * math.pi)
        return val
    raise DomainError(f"dimension {n} not supported")


def _is_isotropic(kind: str, params: dict) -> bool:
    return not (kind == "stress_seminorm" and params.get("variant", "direct") == "expansion")


def radial_functional_exact(kind: str, params: dict, sol: RadialSolution, annulus=(0.0, 1.0)):
    """Exact value of a functional on ``r0 <= |x| <= R`` for a radial power field.

    Returns :data:`DIVERGENT` when ``r0 == 0`` and the integrand's leading
    power ``sigma`` satisfies ``sigma <= -n``.
    """
    if kind not in KINDS:
        raise DomainError(f"unknown functional kind {kind!r}")
    r0, R = (float(a) for a in annulus)
    if not 0 <= r0 < R:
        raise DomainError(f"bad annulus {annulus}")
    n = sol.n
    sigma = radial_exponent(kind, params, sol)
    if r0 == 0.0 and sigma <= -n:
        return DIVERGENT
    if sigma == math.inf and kind == "third_order":
        return 0.0

    def radial(r, e):
        return _integrand_at(kind, params, sol, r, e) * r ** (n - 1)

    eps = params.get("epsilon", 0.0)
    breaks = []
    if eps > 0:
        # where |grad u|^2 ~ eps, and the cutoff corners at |grad u| = eps, 2 eps
        scale = abs(sol.scale) * sol.m
        for level in (math.sqrt(eps), eps, 2.0 * eps):
            rb = (level / scale) ** (1.0 / (sol.m - 1.0))
            if r0 < rb < R:
                breaks.append(rb)
    breaks = sorted(breaks)

    def radial_quad(e):
        pts = [r0] + breaks + [R]
        total = 0.0
        for a, b in zip(pts, pts[1:]):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", sint.IntegrationWarning)
                val, _ = sint.quad(lambda r: radial(r, e), a, b, limit=500, epsabs=0.0, epsrel=1e-11)
            total += val
        return total

    if _is_isotropic(kind, params):
        return sphere_area(n) * radial_quad(_unit(n))
    return _sphere_average(radial_quad, n)


# --- Calderon-Zygmund ratio ---------------------------------------------------


@dataclass(frozen=True)
class CZValue:
    value: float
    kind: str  # "exact" or "lower_bound"
    n: int
    q: float
    seed: int | None = None
    family_size: int | None = None
    grid: int | None = None
    description: str = ""

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("value", "kind", "n", "q", "seed", "family_size", "grid", "description")}


def bump(x: tuple, center: np.ndarray, M: np.ndarray, amp: float):
    """``amp * (1 - s)^4`` on ``s = d^T M d < 1`` with its exact Hessian and Laplacian."""
    n = len(x)
    d = [x[i] - center[i] for i in range(n)]
    Md = [sum(M[i, j] * d[j] for j in range(n)) for i in range(n)]
    s = sum(d[i] * Md[i] for i in range(n))
    inside = s < 1.0
    t = np.where(inside, 1.0 - s, 0.0)
    gs = [2.0 * Md[i] for i in range(n)]
    hess = np.empty((n, n) + np.shape(x[0]))
    for i in range(n):
        for j in range(n):
            hess[i, j] = amp * (12.0 * t**2 * gs[i] * gs[j] - 8.0 * t**3 * M[i, j])
    w = amp * t**4
    return w, hess


def _random_family(rng: np.random.Generator, n: int, size: int):
    """Sums of 1 to 4 anisotropic bumps supported inside the unit box."""
    fam = []
    for _ in range(size):
        parts = []
        for _ in range(int(rng.integers(1, 5))):
            radii = rng.uniform(0.05, 0.45, size=n)
            Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
            M = Q @ np.diag(1.0 / radii**2) @ Q.T
            reach = radii.max()
            center = rng.uniform(reach, 1.0 - reach, size=n)
            parts.append((center, M, float(rng.choice([-1.0, 1.0]) * rng.uniform(0.2, 1.0))))
        fam.append(parts)
    return fam


def _lq_norm(values: np.ndarray, weights: np.ndarray, q: float) -> float:
    return math.fsum((weights * np.abs(values) ** q).ravel().tolist()) ** (1.0 / q)


def hessian_laplacian_ratio(hess: np.ndarray, weights: np.ndarray, q: float) -> float:
    """``||D^2 w||_q / ||Lap w||_q`` with the Frobenius norm pointwise."""
    n = hess.shape[0]
    frob = np.sqrt(np.sum(hess**2, axis=(0, 1)))
    lap = sum(hess[i, i] for i in range(n))
    return _lq_norm(frob, weights, q) / _lq_norm(lap, weights, q)


def sine_product_hessian(x: tuple) -> np.ndarray:
    """Exact Hessian of ``prod_i sin(pi x_i)``."""
    n = len(x)
    s = [np.sin(math.pi * xi) for xi in x]
    c = [np.cos(math.pi * xi) for xi in x]
    out = np.empty((n, n) + np.shape(x[0]))
    for i in range(n):
        for j in range(n):
            fac = [s[k] for k in range(n)]
            if i == j:
                fac[i] = -s[i]
            else:
                fac[i], fac[j] = c[i], c[j]
            out[i, j] = math.pi**2 * np.prod(fac, axis=0)
    return out


def cz_ratios(n: int, q: float, grid: int = 128, family_size: int = 64, seed: int = 7) -> list[float]:
    """Discrete Hessian/Laplacian ratios over the seeded bump family on ``[0,1]^n``."""
    dom = GridDomain(n, (0.0,) * n, (1.0,) * n, (grid,) * n)
    xs = dom.coordinates()
    wts = quadrature_weights(dom, "trapezoid")
    rng = np.random.default_rng(seed)
    out = []
    for parts in _random_family(rng, n, family_size):
        hess = np.zeros((n, n) + dom.shape)
        for center, M, amp in parts:
            hess += bump(xs, center, M, amp)[1]
        out.append(hessian_laplacian_ratio(hess, wts, q))
    return out


def cz_constant(n: int, q: float, mode: str = "known", grid: int = 128, family_size: int = 64, seed: int = 7) -> CZValue:
    """Calderon-Zygmund constant ``C(n, q)``.

    ``known`` returns the exact value 1 at q = 2 and refuses any other q.
    ``estimate`` returns a labelled lower bound: the largest discrete ratio
    over a seeded family of compactly supported bump combinations.
    """
    if not q >= 2:
        raise DomainError(f"q must be at least 2, got {q}")
    if mode == "known":
        if q == 2:
            return CZValue(1.0, "exact", n, q, description="integration by parts identity")
        raise UnknownConstantError(
            f"C({n}, {q}) has no known closed form; use mode='estimate' for a lower bound or pass a value explicitly"
        )
    if mode != "estimate":
        raise DomainError(f"unknown mode {mode!r}")
    ratios = cz_ratios(n, q, grid, family_size, seed)
    value = max(ratios)
    desc = f"max over {family_size} sums of 1-4 quartic bumps on a {grid}^{n} grid"
    log.info("C(%d, %g) lower bound %.6f (seed %d; %s)", n, q, value, seed, desc)
    return CZValue(value, "lower_bound", n, q, seed, family_size, grid, desc)


# --- manufactured Poisson pair ------------------------------------------------


def manufactured_poisson(domain: GridDomain) -> tuple[ScalarField, ScalarField]:
    """``u = prod sin(pi x_i)`` and ``f = n pi^2 u`` so that ``-Lap u = f``."""
    xs = domain.coordinates()
    u = np.prod([np.sin(math.pi * x) for x in xs], axis=0)
    return ScalarField(domain, u), ScalarField(domain, domain.n * math.pi**2 * u)


def sample_radial(sol: RadialSolution, domain: GridDomain) -> tuple[ScalarField, ScalarField]:
    """Exact ``u`` and ``f`` of a radial solution on the nodes of ``domain``."""
    if domain.n != sol.n:
        raise DomainError("dimension mismatch between solution and domain")
    xs = domain.coordinates()
    return ScalarField(domain, sol.u(*xs)), ScalarField(domain, sol.f(*xs))


def radial_reference_integral(values_fn, sol_n: int, r0: float, R: float) -> float:
    """``|S^{n-1}| * int_{r0}^{R} values_fn(r) r^{n-1} dr`` for plain radial integrands."""
    val, _ = sint.quad(lambda r: values_fn(r) * r ** (sol_n - 1), r0, R, limit=500, epsabs=0.0, epsrel=1e-11)
    return sphere_area(sol_n) * val


__all__ = [
    "DIVERGENT",
    "CZValue",
    "Profile",
    "RadialSolution",
    "UnknownConstantError",
    "cz_constant",
    "cz_ratios",
    "manufactured_poisson",
    "radial_exponent",
    "radial_functional_exact",
    "radial_solution",
    "sample_radial",
]
