import random
from fractions import Fraction

import gmpy2
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from conftest import F256, real_pair, series
from resnf.errors import NotResonant, PreconditionError
from resnf.polar import from_polar, to_polar
from resnf.sampling import random_real_series
from resnf.scalars import EXACT, QQi, field_for
from resnf.series import FormalSeries, ResonanceContext, delta_order, grade_slice, resonant_projection

Z, W = sp.symbols("z w")  # w stands for zbar


def to_sympy(s):
    out = 0
    for (k, l, j), c in s.items():
        out += (sp.Rational(str(c.re)) + sp.I * sp.Rational(str(c.im))) * Z**k * W**l
    return sp.expand(out)


def truncate_sympy(expr, N):
    p = sp.Poly(expr, Z, W)
    return sp.expand(sum(c * Z**a * W**b for (a, b), c in p.terms() if a + b <= N))


small_series = st.integers(0, 10**6).map(lambda s: random_real_series(6, random.Random(s), lo=1, density=0.5))


# --- add / mul -------------------------------------------------------------


def test_add_examples():
    z = FormalSeries.z(3)
    assert (z + (-z)).is_zero()
    s = series({(2, 0): 1}, 4) + series({(0, 2): 1}, 4)
    assert s.coeffs == {(2, 0, 0): QQi(1), (0, 2, 0): QQi(1)}
    q = series({(2, 2): 1}, 4)
    assert (q + q) == series({(2, 2): 2}, 4)


def test_add_takes_min_truncation():
    s = series({(3, 0): 1}, 5) + series({(1, 0): 1}, 2)
    assert s.trunc_total == 2 and s == series({(1, 0): 1}, 2)


def test_mul_examples():
    z, w = FormalSeries.z(4), FormalSeries.zbar(4)
    assert z * w == series({(1, 1): 1}, 4)
    assert (z + w) ** 2 == series({(2, 0): 1, (1, 1): 2, (0, 2): 1}, 4)
    assert (series({(3, 0): 1}, 5) * series({(0, 3): 1}, 5)).is_zero()


def test_mixed_modes_rejected():
    with pytest.raises(TypeError):
        FormalSeries.z(3) + FormalSeries.z(3, field=F256)


def test_explicit_zero_is_absent():
    s = FormalSeries({(1, 1, 0): 0, (2, 0, 0): 1}, 3)
    assert (1, 1, 0) not in s and len(s) == 1


@given(small_series, small_series, small_series)
def test_mul_associative_commutative(a, b, c):
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)


@given(small_series, small_series)
def test_mul_matches_sympy(a, b):
    assert to_sympy(a * b) == truncate_sympy(to_sympy(a) * to_sympy(b), 6)


# --- real symmetry -------------------------------------------------------------


def test_is_real_valued_examples():
    assert series({(2, 2): 1}, 4).is_real_valued()
    assert not series({(3, 0): (0, 1)}, 3).is_real_valued()
    h = series({(0, 3): (0, Fraction(1, 6)), (3, 0): (0, Fraction(-1, 6))}, 3)
    assert h.is_real_valued()


def test_is_real_valued_float_tolerance():
    h = series(real_pair(4, 1, 2, 3), 5, field=F256)
    with F256.context():
        tiny = h + FormalSeries({(4, 1, 0): F256.make(0, gmpy2.mpfr(2) ** -200)}, 5, 0, F256)
        bumped = h + FormalSeries({(4, 1, 0): F256.make(0, gmpy2.mpfr(2) ** -50)}, 5, 0, F256)
    # default tolerance is 2^(-prec/2)
    assert tiny.is_real_valued()
    assert not bumped.is_real_valued()
    assert bumped.is_real_valued(tol=gmpy2.mpfr(2) ** -40)


@pytest.mark.parametrize(
    "terms, expected",
    [
        ({(1, 0): 1}, {(0, 1): 1}),
        ({(2, 1): (2, 3)}, {(1, 2): (2, -3)}),
        ({(1, 0): (3, 4), (0, 2): 1}, {(0, 1): (3, -4), (2, 0): 1}),
    ],
)
def test_real_symmetry_conjugate(terms, expected):
    assert series(terms, 3).real_symmetry_conjugate() == series(expected, 3)


@given(small_series)
def test_conjugation_involution(h):
    g = h * FormalSeries.monomial(1, 0, 0, QQi(1, 2), 6)
    assert g.conj().conj() == g


@given(small_series)
def test_real_valued_grade_slices(h):
    ctx = ResonanceContext(3)
    hr = resonant_projection(h, ctx)
    for m in range(0, 7):
        assert grade_slice(hr, m, ctx).is_real_valued()


# --- resonance and grading ---------------------------------------------------


@pytest.mark.parametrize(
    "n, terms, kept",
    [
        (5, {(2, 2): 1, (3, 0): 1}, {(2, 2): 1}),
        (3, {(3, 0): 1, (2, 0): 1}, {(3, 0): 1}),
        (4, {(4, 0): 1, (0, 4): 1, (1, 3): 1}, {(4, 0): 1, (0, 4): 1}),
    ],
)
def test_resonant_projection(n, terms, kept):
    assert resonant_projection(series(terms, 6), ResonanceContext(n)) == series(kept, 6)


def test_resonant_projection_ignores_eps():
    h = series({(1, 1, 2): 1, (2, 1, 1): 1}, 4, 2)
    assert resonant_projection(h, ResonanceContext(5)) == series({(1, 1, 2): 1}, 4, 2)


@pytest.mark.parametrize("n", [3, 4, 5, 6, 7, 9])
def test_delta_order_examples(n):
    ctx = ResonanceContext(n)
    assert delta_order(2, 2, ctx) == 2
    assert delta_order(n, 0, ctx) == 2
    for m in range(0, 7):
        for j in range(0, m // 2 + 1):
            assert delta_order(m + n * j - 2 * j, m - 2 * j, ctx) == m


@pytest.mark.parametrize("n", [3, 4, 5, 6, 7])
def test_delta_order_closed_forms_agree(n):
    N = 14
    ctx = ResonanceContext(n)
    for k in range(2 * N + 1):
        for l in range(2 * N + 1 - k):
            if (k - l) % n == 0:
                d = delta_order(k, l, ctx)
                assert d == Fraction(k + l, 2) - Fraction((n - 4) * abs(k - l), 2 * n)
                assert d.denominator == 1


def test_delta_order_rejects_nonresonant():
    with pytest.raises(NotResonant):
        delta_order(3, 0, ResonanceContext(5))


@pytest.mark.parametrize(
    "n, terms, m, grading, expected",
    [
        (6, {(6, 0): 1, (2, 2): 1, (3, 3): 1}, 2, None, {(6, 0): 1, (2, 2): 1}),
        (4, {(4, 0): 1, (4, 2): 1}, 2, None, {(4, 0): 1}),
        (3, {(3, 0): 1, (2, 2): 1}, 3, None, {(3, 0): 1}),
        (5, {(5, 0): 1, (3, 3): 1}, 6, "total", {(3, 3): 1}),
    ],
)
def test_grade_slice(n, terms, m, grading, expected):
    h = series(terms, 8)
    assert grade_slice(h, m, ResonanceContext(n), grading) == series(expected, 8)


def test_resonance_context_validation():
    with pytest.raises(ValueError):
        ResonanceContext(6, 2)
    with pytest.raises(ValueError):
        ResonanceContext(2)
    ctx = ResonanceContext(7, 3)
    mu = ctx.mu(F256)
    with F256.context():
        assert abs(mu**7 - 1) < gmpy2.mpfr(2) ** -240
        assert all(abs(mu**m - 1) > 0.1 for m in range(1, 7))


# --- polar form ---------------------------------------------------------------


def eval_z(h, x, y, prec=256):
    with gmpy2.context(gmpy2.get_context(), precision=prec):
        z = gmpy2.mpc(x, y)
        w = gmpy2.mpc(x, -y)
        tot = gmpy2.mpc(0)
        for (k, l, j), c in h.items():
            tot += gmpy2.mpc(gmpy2.mpfr(c.re), gmpy2.mpfr(c.im)) * z**k * w**l
        return tot


def test_polar_examples():
    H = to_polar(series({(2, 2): 3}, 4), 5)
    assert H.A == {Fraction(2): 12} and not H.B
    H = to_polar(series({(4, 0): 5, (0, 4): 5}, 4), 4)
    assert H.B == {Fraction(2): 40}


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_polar_matches_pointwise_evaluation(n):
    # h = (z zbar)^2 a + (z^n + zbar^n)(b + c z zbar)
    h = series({(2, 2): Fraction(3, 2), (n, 0): 2, (0, n): 2, (n + 1, 1): -1, (1, n + 1): -1}, n + 2)
    H = to_polar(h, n)
    with gmpy2.context(gmpy2.get_context(), precision=256):
        for I, phi in [(0.3, 0.1), (1.7, 2.0), (0.05, -1.3)]:
            r = gmpy2.sqrt(2 * gmpy2.mpfr(I))
            x, y = r * gmpy2.cos(gmpy2.mpfr(phi)), r * gmpy2.sin(gmpy2.mpfr(phi))
            zval = eval_z(h, x, y)
            assert abs(zval.imag) < 1e-70
            assert abs(zval.real - H.evaluate(I, phi)) < 1e-70


def test_polar_n4_shape():
    # a normal form for n = 4 has only integer powers I^{2+...}
    h = series({(2, 2): 1, (4, 0): 2, (0, 4): 2, (3, 3): 5, (6, 2): 1, (2, 6): 1}, 8)
    H = to_polar(h, 4)
    assert min(H.A) == 2 and min(H.B) == 2
    assert all(e.denominator == 1 for e in list(H.A) + list(H.B))


@pytest.mark.parametrize("n", [4, 6])
def test_polar_roundtrip(n):
    h = series({(2, 2): 1, (3, 3): -2, (n, 0): 3, (0, n): 3, (n + 2, 2): 7, (2, n + 2): 7}, n + 4)
    assert from_polar(to_polar(h, n), n + 4) == h


def test_polar_roundtrip_float_odd_n():
    h = series({(2, 2): 1, (5, 0): 3, (0, 5): 3, (7, 2): 2, (2, 7): 2}, 9, field=F256)
    back = from_polar(to_polar(h, 5), 9, F256)
    assert (back - h).max_abs() < gmpy2.mpfr(2) ** -240


def test_polar_rejects_other_shapes():
    with pytest.raises(PreconditionError):
        to_polar(series(real_pair(4, 1, 1, 1), 5), 3)


# --- JSON ----------------------------------------------------------------------


@pytest.mark.parametrize("field", [EXACT, field_for("float", 128)])
def test_json_roundtrip(field):
    h = random_real_series(6, random.Random(3), trunc_eps=1, field=field)
    back = FormalSeries.from_json(h.to_json())
    assert back == h and back.trunc_eps == 1 and back.field.mode == field.mode


def test_json_rational_strings():
    lit = {"trunc_total": 3, "terms": [{"k": 2, "l": 1, "re": "1/3", "im": "-2"}]}
    s = FormalSeries.from_json(lit)
    assert s[(2, 1)] == QQi(Fraction(1, 3), -2)
