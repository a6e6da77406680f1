"""Closed-form admissibility formulas for the weighted regularity estimates.

Every bound is returned together with its strictness so that ``>`` and
``>=`` conditions are never merged.  Nothing here rounds or applies
tolerances; callers that compare floats choose their own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .fields import DomainError

STRICT = "strict"
NONSTRICT = "nonstrict"

# guard against chains that never reach q (q0 <= 2 is a fixed point)
_MAX_CHAIN = 128


@dataclass(frozen=True)
class Bound:
    """Lower bound ``x > value`` (strict) or ``x >= value``."""

    value: float
    strict: bool = True

    @property
    def relation(self) -> str:
        return ">" if self.strict else ">="

    def admits(self, x: float) -> bool:
        return x > self.value if self.strict else x >= self.value

    def to_dict(self) -> dict:
        return {"value": self.value, "relation": self.relation}

    def __str__(self) -> str:
        return f"{self.relation} {self.value:.12g}"


@dataclass(frozen=True)
class Interval:
    lower: float
    upper: float
    lower_closed: bool = False
    upper_closed: bool = False
    note: str = ""

    @property
    def empty(self) -> bool:
        if self.lower < self.upper:
            return False
        return not (self.lower == self.upper and self.lower_closed and self.upper_closed)

    def contains(self, x: float) -> bool:
        above = x >= self.lower if self.lower_closed else x > self.lower
        below = x <= self.upper if self.upper_closed else x < self.upper
        return above and below

    def to_dict(self) -> dict:
        d = {
            "lower": self.lower,
            "upper": self.upper,
            "lower_closed": self.lower_closed,
            "upper_closed": self.upper_closed,
            "empty": self.empty,
        }
        if self.note:
            d["note"] = self.note
        return d

    def __str__(self) -> str:
        lb = "[" if self.lower_closed else "("
        rb = "]" if self.upper_closed else ")"
        return f"{lb}{self.lower:.12g}, {self.upper:.12g}{rb}"


@dataclass(frozen=True)
class ExponentParams:
    p: float
    q: float
    gamma: float
    n: int
    cz_constant: float
    f_has_sign: bool = True

    def __post_init__(self):
        if not self.p > 1:
            raise DomainError(f"p must exceed 1, got {self.p}")
        if not self.q >= 2:
            raise DomainError(f"q must be at least 2, got {self.q}")
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"n must be an integer >= 2, got {self.n}")
        if not self.cz_constant > 0:
            raise DomainError(f"the Calderon-Zygmund constant must be positive, got {self.cz_constant}")


@dataclass(frozen=True)
class ExponentReport:
    q0: float
    chain: list[float]
    N: int
    alpha_threshold: Bound
    p_window: Interval
    gamma_lower: float
    k_threshold: Bound
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "q0": self.q0,
            "chain": list(self.chain),
            "N": self.N,
            "alpha_threshold": self.alpha_threshold.to_dict(),
            "p_window": self.p_window.to_dict(),
            "gamma_lower": self.gamma_lower,
            "k_threshold": self.k_threshold.to_dict(),
            "notes": list(self.notes),
        }


def q_chain(q0: float, q: float, bracket: str = STRICT) -> tuple[int, list[float]]:
    """Locate ``q`` in the chain ``q_N = 2 (q_{N-1} - 1)`` started at ``q0``.

    ``strict`` finds the smallest N with ``q_N < q <= q_{N+1}``;
    ``nonstrict`` finds N with ``q_N <= q < q_{N+1}``.  The returned chain
    runs from ``q_0`` through ``q_{N+1}``.
    """
    if bracket not in (STRICT, NONSTRICT):
        raise DomainError(f"unknown bracket {bracket!r}")
    if not q0 >= 2:
        raise DomainError(f"q0 must be at least 2, got {q0}")
    if bracket == STRICT and not q > q0:
        raise DomainError(f"strict bracket q_N < q <= q_(N+1) needs q > q0 = {q0}, got q = {q}")
    if bracket == NONSTRICT and not q >= q0:
        raise DomainError(f"bracket q_N <= q < q_(N+1) needs q >= q0 = {q0}, got q = {q}")
    chain = [float(q0)]
    for N in range(_MAX_CHAIN):
        chain.append(2.0 * (chain[-1] - 1.0))
        lo, hi = chain[N], chain[N + 1]
        hit = (lo < q <= hi) if bracket == STRICT else (lo <= q < hi)
        if hit:
            return N, chain
    raise DomainError(f"q = {q} is not bracketed by the chain from q0 = {q0}")


def alpha_threshold(params: ExponentParams, N: int, q0: float | None = None) -> Bound:
    """Lower bound on alpha for chain index ``N``.

    With a signed source the bound is strict and depends on ``q`` and on
    ``q_N`` from the chain started at ``q0`` (default ``3 + gamma``).
    Without a sign it is ``(3 - p)/2^N + 1`` (strict) or ``alpha >= 4 - p``
    at N = 0.
    """
    if N < 0 or int(N) != N:
        raise DomainError(f"N must be a nonnegative integer, got {N}")
    p, q = params.p, params.q
    scale = 2.0**N
    if params.f_has_sign:
        qN = 3.0 + params.gamma if q0 is None else float(q0)
        for _ in range(N):
            qN = 2.0 * (qN - 1.0)
        return Bound((q - qN) / (scale * q) * (1.0 - p) + (3.0 - p) / scale + 1.0, strict=True)
    if N == 0:
        return Bound(4.0 - p, strict=False)
    return Bound((3.0 - p) / scale + 1.0, strict=True)


def p_window(q: float, cz_constant: float, mode: str = "third_order") -> Interval:
    """Open p-interval admitted for integrability ``q`` and constant ``C(n, q)``."""
    if not q >= 2:
        raise DomainError(f"q must be at least 2, got {q}")
    if not cz_constant > 0:
        raise DomainError(f"the Calderon-Zygmund constant must be positive, got {cz_constant}")
    lower = 2.0 - 1.0 / cz_constant
    if mode == "third_order":
        upper = min(2.0 + 1.0 / (q - 1.0), 2.0 + 1.0 / cz_constant)
        return Interval(lower, upper)
    if mode == "w2q":
        return Interval(lower, 2.0 + 1.0 / cz_constant, note="p > 2 additionally requires q < (p-1)/(p-2)")
    raise DomainError(f"unknown window mode {mode!r}")


def w2q_admits(p: float, q: float, cz_constant: float) -> bool:
    """Membership in the second-order window, including the p > 2 side condition."""
    if not p_window(q, cz_constant, "w2q").contains(p):
        return False
    return p <= 2 or q < (p - 1.0) / (p - 2.0)


def gamma_lower(p: float) -> float:
    """``max{(p-2)/(p-1), 2-p}``; admissible gamma must exceed it strictly."""
    if not p > 1:
        raise DomainError(f"p must exceed 1, got {p}")
    return max((p - 2.0) / (p - 1.0), 2.0 - p)


def k_threshold(p: float, alpha: float, f_has_sign: bool = True) -> Bound:
    if f_has_sign:
        return Bound((alpha + 1.0) / 2.0, strict=True)
    return Bound((p + alpha) / 2.0, strict=False)


def stress_window(alpha_tilde: float, n: int, cz_constant: float) -> tuple[float, Interval]:
    """Return ``q = 2(alpha_tilde - 1)`` and the half-open p-interval ending at 2."""
    if not alpha_tilde >= 3:
        raise DomainError(f"the stress estimate needs alpha_tilde >= 3, got {alpha_tilde}")
    if int(n) != n or n < 2:
        raise DomainError(f"n must be an integer >= 2, got {n}")
    if not cz_constant > 0:
        raise DomainError(f"the Calderon-Zygmund constant must be positive, got {cz_constant}")
    q = 2.0 * (alpha_tilde - 1.0)
    lower = max(2.0 - 1.0 / (2.0 * alpha_tilde - 1.0), 2.0 - 1.0 / cz_constant)
    return q, Interval(lower, 2.0, lower_closed=False, upper_closed=True)


def exponent_report(params: ExponentParams, q0: float | None = None, alpha: float | None = None) -> ExponentReport:
    """Full admissibility ledger for ``params``.

    ``q0`` defaults to ``3 + gamma``.  The k threshold is evaluated at
    ``alpha`` when given, otherwise at the alpha threshold itself (the
    infimum over admissible alpha).
    """
    q0 = 3.0 + params.gamma if q0 is None else float(q0)
    bracket = STRICT if params.f_has_sign else NONSTRICT
    N, chain = q_chain(q0, params.q, bracket)
    a_thr = alpha_threshold(params, N, q0)
    window = p_window(params.q, params.cz_constant, "third_order")
    a_ref = a_thr.value if alpha is None else alpha
    notes = []
    if not window.contains(params.p):
        notes.append(f"p = {params.p} lies outside the window {window}")
    g_low = gamma_lower(params.p)
    if not params.gamma > g_low:
        notes.append(f"gamma = {params.gamma} does not exceed {g_low}")
    if alpha is not None and not a_thr.admits(alpha):
        notes.append(f"alpha = {alpha} fails alpha {a_thr}")
    return ExponentReport(
        q0=q0,
        chain=chain,
        N=N,
        alpha_threshold=a_thr,
        p_window=window,
        gamma_lower=g_low,
        k_threshold=k_threshold(params.p, a_ref, params.f_has_sign),
        notes=notes,
    )


def third_order_admissible(params: ExponentParams, alpha: float, q0: float | None = None) -> bool:
    """True when (p, q, gamma, alpha) satisfy every hypothesis of the third-order estimate."""
    try:
        rep = exponent_report(params, q0=q0, alpha=alpha)
    except DomainError:
        return False
    return not rep.notes and math.isfinite(alpha)
