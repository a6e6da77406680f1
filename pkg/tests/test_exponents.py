from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plaplab import exponents as ex
from plaplab.fields import DomainError


def params(p=2.0, q=8.0, gamma=1.0, n=2, C=1.25, signed=True):
    return ex.ExponentParams(p, q, gamma, n, C, signed)


@pytest.mark.parametrize(
    "q0,q,bracket,N,chain",
    [
        (4, 8, ex.STRICT, 1, [4, 6, 10]),
        (4, 4, ex.NONSTRICT, 0, [4, 6]),
        (5, 14, ex.STRICT, 1, [5, 8, 14]),
        (4, 18, ex.STRICT, 2, [4, 6, 10, 18]),
    ],
)
def test_q_chain_table(q0, q, bracket, N, chain):
    got_N, got_chain = ex.q_chain(q0, q, bracket)
    assert got_N == N
    assert got_chain == pytest.approx(chain, abs=1e-12)


def test_q_chain_bracket_edges_differ():
    # q equal to a chain term sits on opposite sides under the two brackets
    assert ex.q_chain(4, 6, ex.STRICT)[0] == 0
    assert ex.q_chain(4, 6, ex.NONSTRICT)[0] == 1


def test_q_chain_rejects_out_of_range():
    with pytest.raises(DomainError):
        ex.q_chain(4, 4, ex.STRICT)
    with pytest.raises(DomainError):
        ex.q_chain(1.5, 8)
    with pytest.raises(DomainError):
        ex.q_chain(2, 8)  # q0 = 2 is a fixed point
    with pytest.raises(DomainError):
        ex.q_chain(4, 8, "open")


def test_alpha_threshold_table():
    b = ex.alpha_threshold(params(p=2, q=8, gamma=1), N=1)
    assert b.strict and abs(b.value - 1.375) <= 1e-12
    b = ex.alpha_threshold(params(p=2, signed=False), N=1)
    assert b.strict and abs(b.value - 1.5) <= 1e-12
    b = ex.alpha_threshold(params(p=2, signed=False), N=0)
    assert not b.strict and abs(b.value - 2.0) <= 1e-12
    assert b.admits(2.0) and not ex.Bound(2.0, True).admits(2.0)


def test_alpha_threshold_q0_override_matches_default():
    P = params(p=1.9, q=9, gamma=1)
    assert ex.alpha_threshold(P, 1) == ex.alpha_threshold(P, 1, q0=4.0)
    assert ex.alpha_threshold(P, 1, q0=5.0).value != ex.alpha_threshold(P, 1).value


@pytest.mark.parametrize(
    "q,C,mode,lo,hi",
    [
        (2, 1, "w2q", 1.0, 3.0),
        (4, 2, "third_order", 1.5, 7 / 3),
        (4, 1.25, "third_order", 1.2, 7 / 3),
    ],
)
def test_p_window_table(q, C, mode, lo, hi):
    w = ex.p_window(q, C, mode)
    assert abs(w.lower - lo) <= 1e-12 and abs(w.upper - hi) <= 1e-12
    assert not w.lower_closed and not w.upper_closed


def test_w2q_side_condition():
    assert ex.w2q_admits(2.5, 2, 1)
    assert not ex.w2q_admits(2.5, 3.5, 0.5)  # (p-1)/(p-2) = 3 at p = 2.5


@pytest.mark.parametrize("p,expected", [(2, 0.0), (1.5, 0.5), (3, 0.5)])
def test_gamma_lower_table(p, expected):
    assert abs(ex.gamma_lower(p) - expected) <= 1e-12


@pytest.mark.parametrize(
    "p,alpha,signed,value,strict",
    [(2, 2, True, 1.5, True), (2, 2, False, 2.0, False), (1.9, 2.1, True, 1.55, True)],
)
def test_k_threshold_table(p, alpha, signed, value, strict):
    b = ex.k_threshold(p, alpha, signed)
    assert abs(b.value - value) <= 1e-12 and b.strict is strict


@pytest.mark.parametrize(
    "at,C,q,lo",
    [(3, 1.25, 4, 1.8), (3, 10, 4, 1.9), (4, 1, 6, 2 - 1 / 7)],
)
def test_stress_window_table(at, C, q, lo):
    got_q, w = ex.stress_window(at, 2, C)
    assert abs(got_q - q) <= 1e-12
    assert abs(w.lower - lo) <= 1e-12 and w.upper == 2.0
    assert not w.lower_closed and w.upper_closed
    assert w.contains(2.0) and not w.contains(lo)


def test_stress_window_rejects_small_alpha_tilde():
    with pytest.raises(DomainError):
        ex.stress_window(2.5, 2, 1)


def test_report_serializes_strictness():
    rep = ex.exponent_report(params(p=2, q=8, gamma=1))
    d = rep.to_dict()
    assert d["N"] == 1 and d["chain"] == [4.0, 6.0, 10.0]
    assert d["alpha_threshold"] == {"value": 1.375, "relation": ">"}
    assert d["k_threshold"]["relation"] == ">"
    assert rep.notes == []


def test_report_notes_failures():
    rep = ex.exponent_report(params(p=2.6, q=8, gamma=0.1), alpha=1.0)
    assert len(rep.notes) == 3
    assert not ex.third_order_admissible(params(p=2.6, q=8, gamma=0.1), 1.0)
    assert ex.third_order_admissible(params(p=2, q=8, gamma=1), 1.4)
    assert not ex.third_order_admissible(params(p=2, q=8, gamma=1), 1.375)


def test_params_validation():
    for bad in (dict(p=1.0), dict(q=1.5), dict(n=1), dict(C=0.0)):
        with pytest.raises(DomainError):
            params(**bad)


# --- properties ---------------------------------------------------------------


@given(st.floats(2.01, 50))
def test_chain_strictly_increasing(q0):
    _, chain = ex.q_chain(q0, 2 * (2 * (q0 - 1) - 1) ** 2, ex.STRICT)
    chain = chain[:10]
    assert all(b > a for a, b in zip(chain, chain[1:]))


@st.composite
def window_point(draw):
    q = draw(st.floats(2.5, 40))
    hi = 2 + 1 / (q - 1)
    p = draw(st.floats(1.05, hi, exclude_max=True))
    gamma = draw(st.floats(0.5, 3))
    return p, q, gamma


@settings(max_examples=200)
@given(window_point(), st.integers(1, 12))
def test_threshold_decreases_with_chain_index(pt, N):
    p, q, gamma = pt
    P = params(p=p, q=q, gamma=gamma, C=1.0)
    assert ex.alpha_threshold(P, N).value < ex.alpha_threshold(P, N - 1).value


@settings(max_examples=200)
@given(window_point())
def test_threshold_above_one_in_window(pt):
    p, q, gamma = pt
    q0 = 3 + gamma
    if not q > q0:
        return
    P = params(p=p, q=q, gamma=gamma, C=1.0)
    N, _ = ex.q_chain(q0, q, ex.STRICT)
    for k in range(N + 1):
        assert ex.alpha_threshold(P, k).value > 1


@given(st.floats(2, 1e6), st.floats(1e-6, 1e6))
def test_p2_inside_every_window(q, C):
    assert ex.p_window(q, C, "third_order").contains(2.0)
    assert ex.p_window(q, C, "w2q").contains(2.0)


@given(st.floats(3, 1e6), st.floats(1e-6, 1e12), st.integers(2, 6))
def test_stress_window_never_empty(at, C, n):
    _, w = ex.stress_window(at, n, C)
    assert w.lower < 2 and not w.empty


@given(st.floats(-10, 10), st.floats(1.01, 5))
def test_k_threshold_is_linear_in_alpha(alpha, p):
    a = ex.k_threshold(p, alpha).value
    b = ex.k_threshold(p, alpha + 2).value
    assert math.isclose(b - a, 1.0, rel_tol=1e-9, abs_tol=1e-12)
