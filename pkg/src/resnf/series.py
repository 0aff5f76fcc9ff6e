"""Truncated formal power series in ``z``, ``zbar`` and a parameter ``eps``.

A :class:`FormalSeries` stores a sparse map from exponent triples
``(k, l, j)`` (powers of z, zbar, eps) to scalars of a single
coefficient field.  Two truncation bounds are kept: ``trunc_total`` limits
``k + l`` and ``trunc_eps`` limits ``j``.  Every retained coefficient is
exact with respect to the truncation, so operations shrink the bounds
whenever higher coefficients would depend on discarded data.

Examples
--------
>>> from resnf.series import FormalSeries
>>> z = FormalSeries.z(4)
>>> zb = FormalSeries.zbar(4)
>>> sorted((z + zb) ** 2 .keys())
[(0, 2, 0), (1, 1, 0), (2, 0, 0)]
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

import gmpy2

from .errors import NotResonant
from .scalars import EXACT, InexactError, QQi, field_for


class FormalSeries:
    """Immutable truncated series with coefficients in one field.

    Parameters
    ----------
    coeffs : dict
        Map ``(k, l, j) -> scalar``; two-element keys ``(k, l)`` mean ``j = 0``.
    trunc_total : int
        Largest retained ``k + l``.
    trunc_eps : int, optional
        Largest retained ``j``; ``0`` for series without a parameter.
    field : ExactField or FloatField, optional
        Coefficient field; defaults to exact Gaussian rationals.
    """

    __slots__ = ("_c", "trunc_total", "trunc_eps", "field")

    def __init__(self, coeffs=None, trunc_total=0, trunc_eps=0, field=EXACT, *, _raw=False):
        self.trunc_total = int(trunc_total)
        self.trunc_eps = int(trunc_eps)
        self.field = field
        if _raw:
            self._c = coeffs
            return
        out = {}
        if coeffs:
            with field.context():
                for key, c in coeffs.items():
                    if len(key) == 2:
                        key = (key[0], key[1], 0)
                    k, l, j = key
                    if k < 0 or l < 0 or j < 0:
                        raise ValueError(f"negative exponent {key}")
                    if k + l > self.trunc_total or j > self.trunc_eps:
                        continue
                    c = field.coerce(c)
                    if c != 0:
                        out[(int(k), int(l), int(j))] = c
        self._c = out

    # construction helpers -------------------------------------------------
    @classmethod
    def zero(cls, trunc_total, trunc_eps=0, field=EXACT):
        return cls({}, trunc_total, trunc_eps, field, _raw=True)

    @classmethod
    def monomial(cls, k, l, j=0, coeff=1, trunc_total=None, trunc_eps=None, field=EXACT):
        if trunc_total is None:
            trunc_total = k + l
        if trunc_eps is None:
            trunc_eps = j
        return cls({(k, l, j): coeff}, trunc_total, trunc_eps, field)

    @classmethod
    def z(cls, trunc_total, trunc_eps=0, field=EXACT):
        return cls.monomial(1, 0, 0, 1, trunc_total, trunc_eps, field)

    @classmethod
    def zbar(cls, trunc_total, trunc_eps=0, field=EXACT):
        return cls.monomial(0, 1, 0, 1, trunc_total, trunc_eps, field)

    @classmethod
    def constant(cls, c, trunc_total, trunc_eps=0, field=EXACT):
        return cls({(0, 0, 0): c}, trunc_total, trunc_eps, field)

    def _new(self, coeffs, trunc_total=None, trunc_eps=None):
        """Wrap an already canonical dict (no zeros, within bounds)."""
        return FormalSeries(
            coeffs,
            self.trunc_total if trunc_total is None else trunc_total,
            self.trunc_eps if trunc_eps is None else trunc_eps,
            self.field,
            _raw=True,
        )

    # mapping-like access ----------------------------------------------------
    def __getitem__(self, key):
        if len(key) == 2:
            key = (key[0], key[1], 0)
        c = self._c.get(key)
        return self.field.zero() if c is None else c

    def __contains__(self, key):
        if len(key) == 2:
            key = (key[0], key[1], 0)
        return key in self._c

    def __len__(self):
        return len(self._c)

    def __iter__(self):
        return iter(sorted(self._c))

    def keys(self):
        return sorted(self._c)

    def items(self):
        return [(key, self._c[key]) for key in sorted(self._c)]

    @property
    def coeffs(self):
        """A copy of the coefficient map."""
        return dict(self._c)

    def is_zero(self):
        return not self._c

    def __bool__(self):
        return bool(self._c)

    # comparisons ----------------------------------------------------------
    def __eq__(self, other):
        """Coefficientwise equality; truncation bounds are not compared."""
        if isinstance(other, (int, Fraction)) and other == 0:
            return not self._c
        if not isinstance(other, FormalSeries):
            return NotImplemented
        if self.field.mode != other.field.mode:
            return False
        return self._c == other._c

    __hash__ = None

    def __repr__(self):
        if not self._c:
            body = "0"
        else:
            body = " + ".join(f"({c})*z^{k}*zb^{l}" + (f"*e^{j}" if j else "") for (k, l, j), c in self.items())
        return f"FormalSeries[{body}; N={self.trunc_total}, E={self.trunc_eps}]"

    # compatibility ----------------------------------------------------------
    def _check(self, other):
        if not isinstance(other, FormalSeries):
            raise TypeError(f"expected FormalSeries, got {type(other).__name__}")
        if self.field.mode != other.field.mode:
            raise TypeError("mixed scalar modes in one computation")
        if self.field.mode == "float" and self.field.prec != other.field.prec:
            raise TypeError("mixed float precisions in one computation")

    def _lift(self, other):
        if isinstance(other, FormalSeries):
            self._check(other)
            return other
        return FormalSeries.constant(other, self.trunc_total, self.trunc_eps, self.field)

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        other = self._lift(other)
        N = min(self.trunc_total, other.trunc_total)
        E = min(self.trunc_eps, other.trunc_eps)
        out = {key: c for key, c in self._c.items() if key[0] + key[1] <= N and key[2] <= E}
        with self.field.context():
            for key, c in other._c.items():
                if key[0] + key[1] > N or key[2] > E:
                    continue
                prev = out.get(key)
                if prev is None:
                    out[key] = c
                else:
                    s = prev + c
                    if s != 0:
                        out[key] = s
                    else:
                        del out[key]
        return self._new(out, N, E)

    __radd__ = __add__

    def __neg__(self):
        with self.field.context():
            return self._new({key: -c for key, c in self._c.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def scale(self, c):
        """Multiply every coefficient by the scalar ``c``."""
        with self.field.context():
            c = self.field.coerce(c)
            if c == 0:
                return self._new({})
            out = {}
            for key, v in self._c.items():
                w = v * c
                if w != 0:
                    out[key] = w
            return self._new(out)

    def __mul__(self, other):
        if not isinstance(other, FormalSeries):
            return self.scale(other)
        self._check(other)
        N = min(self.trunc_total, other.trunc_total)
        E = min(self.trunc_eps, other.trunc_eps)
        return _mul(self, other, N, E)

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers")
        result = FormalSeries.constant(1, self.trunc_total, self.trunc_eps, self.field)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def truncate(self, trunc_total=None, trunc_eps=None):
        """Drop terms beyond new (smaller or equal) bounds."""
        N = self.trunc_total if trunc_total is None else min(trunc_total, self.trunc_total)
        E = self.trunc_eps if trunc_eps is None else min(trunc_eps, self.trunc_eps)
        return self._new({key: c for key, c in self._c.items() if key[0] + key[1] <= N and key[2] <= E}, N, E)

    def with_trunc(self, trunc_total=None, trunc_eps=None):
        """Relabel the bounds; only valid when the series is an exact polynomial."""
        N = self.trunc_total if trunc_total is None else trunc_total
        E = self.trunc_eps if trunc_eps is None else trunc_eps
        return self._new({key: c for key, c in self._c.items() if key[0] + key[1] <= N and key[2] <= E}, N, E)

    def filter(self, pred):
        """Keep terms whose exponent triple satisfies ``pred(k, l, j)``."""
        return self._new({key: c for key, c in self._c.items() if pred(*key)})

    def map_coeffs(self, fn):
        """Apply ``fn(key, c)`` to every coefficient; zeros are erased."""
        out = {}
        with self.field.context():
            for key, c in self._c.items():
                w = self.field.coerce(fn(key, c))
                if w != 0:
                    out[key] = w
        return self._new(out)

    # calculus -------------------------------------------------------------
    def dz(self):
        with self.field.context():
            out = {(k - 1, l, j): c * k for (k, l, j), c in self._c.items() if k}
        return self._new(out, max(self.trunc_total - 1, 0))

    def dzbar(self):
        with self.field.context():
            out = {(k, l - 1, j): c * l for (k, l, j), c in self._c.items() if l}
        return self._new(out, max(self.trunc_total - 1, 0))

    def conj(self):
        """Real-symmetry conjugate: coefficient of ``z^k zbar^l`` becomes ``conj(c_lk)``."""
        fld = self.field
        with fld.context():
            return self._new({(l, k, j): fld.conj(c) for (k, l, j), c in self._c.items()})

    real_symmetry_conjugate = conj

    # inspection -----------------------------------------------------------
    def min_degree(self, skip_constants=False):
        """Smallest ``k + l`` among stored terms, or ``None`` when empty."""
        degs = [k + l for (k, l, _j) in self._c if not (skip_constants and k + l == 0)]
        return min(degs) if degs else None

    def min_order(self):
        """Smallest joint order ``k + l + j`` among stored terms."""
        degs = [k + l + j for (k, l, j) in self._c]
        return min(degs) if degs else None

    def max_abs(self):
        """Largest coefficient modulus (a real number; 0 for the zero series)."""
        if not self._c:
            return gmpy2.mpfr(0) if self.field.mode == "float" else gmpy2.mpq(0)
        if self.field.mode == "exact":
            best = max(c.abs2() for c in self._c.values())
            return EXACT.sqrt_real(best) if _is_square_q(best) else gmpy2.sqrt(gmpy2.mpfr(best))
        with self.field.context():
            return max(abs(c) for c in self._c.values())

    def is_real_valued(self, tol=None):
        """True iff ``h_klj == conj(h_lkj)`` for all stored exponents."""
        return _symmetric_defect(self, tol)

    def eps_slice(self, j):
        """Coefficient of ``eps^j`` as a series with ``j = 0``."""
        return self._new({(k, l, 0): c for (k, l, jj), c in self._c.items() if jj == j}, None, 0)

    def to_field(self, field):
        """Convert to another field (exact to float only)."""
        if field.mode == self.field.mode and field.prec == self.field.prec:
            return self
        if field.mode == "exact":
            raise TypeError("cannot convert float series to exact mode")
        with field.context():
            out = {key: field.coerce(c) for key, c in self._c.items()}
        return FormalSeries(out, self.trunc_total, self.trunc_eps, field)

    # serialisation ----------------------------------------------------------
    def to_json(self):
        fld = self.field
        terms = []
        for (k, l, j), c in self.items():
            re, im = fld.format(c)
            terms.append({"k": k, "l": l, "j": j, "re": re, "im": im})
        out = {"mode": fld.mode}
        if fld.mode == "float":
            out["prec_bits"] = fld.prec
        out.update({"trunc_total": self.trunc_total, "trunc_eps": self.trunc_eps, "terms": terms})
        return out

    @classmethod
    def from_json(cls, data, field=None):
        """Parse a series literal; ``field`` overrides the mode recorded in ``data``."""
        if isinstance(data, str):
            data = json.loads(data)
        if field is None:
            field = field_for(data.get("mode", "exact"), data.get("prec_bits"))
        coeffs = {}
        for t in data.get("terms", []):
            key = (int(t["k"]), int(t["l"]), int(t.get("j", 0)))
            c = field.parse(t.get("re", "0"), t.get("im", "0"))
            with field.context():
                coeffs[key] = coeffs[key] + c if key in coeffs else c
        return cls(coeffs, int(data["trunc_total"]), int(data.get("trunc_eps", 0)), field)


def _is_square_q(q):
    q = gmpy2.mpq(q)
    return gmpy2.is_square(q.numerator) and gmpy2.is_square(q.denominator)


def _symmetric_defect(h, tol):
    fld = h.field
    zero = fld.zero()
    with fld.context():
        for (k, l, j), c in h._c.items():
            partner = h._c.get((l, k, j), zero)
            d = c - fld.conj(partner)
            if fld.mode == "exact":
                if d:
                    return False
            else:
                t = fld.tol if tol is None else tol
                if abs(d) > t:
                    return False
    return True


def _mul(a, b, N, E):
    """Truncated Cauchy product, bucketed by total degree for early exit."""
    if not a._c or not b._c:
        return a._new({}, N, E)
    if len(a._c) > len(b._c):
        a, b = b, a
    buckets = {}
    for (k, l, j), c in b._c.items():
        if k + l <= N and j <= E:
            buckets.setdefault(k + l, []).append((k, l, j, c))
    degs = sorted(buckets)
    out = {}
    get = out.get
    with a.field.context():
        for (k1, l1, j1), c1 in a._c.items():
            d1 = k1 + l1
            if d1 > N or j1 > E:
                continue
            room = N - d1
            eroom = E - j1
            for d in degs:
                if d > room:
                    break
                for k2, l2, j2, c2 in buckets[d]:
                    if j2 > eroom:
                        continue
                    key = (k1 + k2, l1 + l2, j1 + j2)
                    prev = get(key)
                    out[key] = c1 * c2 if prev is None else prev + c1 * c2
    out = {key: c for key, c in out.items() if c != 0}
    return FormalSeries(out, N, E, a.field, _raw=True)


# ---------------------------------------------------------------------------
# resonance bookkeeping


@dataclass(frozen=True)
class ResonanceContext:
    """Resonance data for a fixed point.

    Parameters
    ----------
    n : int or None
        Least ``n`` with ``mu**n == 1``; ``None`` marks a non-resonant
        multiplier (to the working truncation).
    q : int
        Numerator of the rotation number, ``mu = exp(2 pi i q / n)``.
    trunc_total : int, optional
        Working truncation order ``N``.
    mu_value : scalar, optional
        Explicit multiplier, required when ``n is None``.
    """

    n: int | None
    q: int = 1
    trunc_total: int | None = None
    mu_value: object = None

    def __post_init__(self):
        if self.n is not None:
            if self.n < 3:
                raise ValueError("resonance order must be at least 3")
            if gcd(self.q, self.n) != 1:
                raise ValueError(f"gcd(q, n) must be 1, got q={self.q}, n={self.n}")

    @property
    def resonant(self):
        return self.n is not None

    @property
    def regime(self):
        if self.n is None:
            return "nonresonant"
        if self.n >= 5:
            return "n5"
        return "n4" if self.n == 4 else "n3"

    @property
    def grading(self):
        if self.n == 3:
            return "total"
        if self.n == 4:
            return "half_total"
        return "delta"

    def with_trunc(self, trunc_total):
        return ResonanceContext(self.n, self.q, trunc_total, self.mu_value)

    def is_resonant(self, k, l):
        """Hamiltonian resonance ``k == l (mod n)``."""
        if self.n is None:
            return k == l
        return (k - l) % self.n == 0

    def alpha(self, field):
        """Rotation angle as a real float of the field's precision."""
        with field.context() if field.mode == "float" else gmpy2.context(gmpy2.get_context(), precision=256):
            if self.n is None:
                mu = field.to_float(field.coerce(self.mu_value)) if field.mode == "exact" else field.coerce(self.mu_value)
                return gmpy2.atan2(mu.imag, mu.real)
            return 2 * gmpy2.const_pi() * self.q / self.n

    def mu(self, field):
        """The multiplier in ``field``; raises in exact mode unless rational."""
        return self.mu_power(1, field)

    def mu_power(self, e, field):
        """``mu**e`` computed from the exponent class ``e mod n``."""
        if self.n is None:
            mu = field.coerce(self.mu_value)
            with field.context():
                return mu ** e
        r = (self.q * e) % self.n
        if r == 0:
            return field.one()
        if 4 * r == self.n:
            return field.imag_unit()
        if 2 * r == self.n:
            return -field.one()
        if 4 * r == 3 * self.n:
            return -field.imag_unit()
        if field.mode == "exact":
            raise InexactError(f"exp(2 pi i {r}/{self.n}) is irrational; use float mode")
        with field.context():
            return field.exp_i(2 * gmpy2.const_pi() * r / self.n)

    def resonant_power(self, e):
        """True iff ``mu**e == 1`` exactly."""
        if self.n is None:
            return e == 0
        return e % self.n == 0


def resonant_projection(h, ctx):
    """Keep the terms with ``k == l (mod n)``; the eps exponent is free."""
    return h.filter(lambda k, l, j: ctx.is_resonant(k, l))


def is_resonant_series(h, ctx):
    return all(ctx.is_resonant(k, l) for (k, l, _j) in h.keys())


def delta_order(k, l, ctx):
    """delta-order ``2|k-l|/n + min(k, l)`` of a resonant monomial.

    Returns a :class:`fractions.Fraction`; on resonant input it is always an
    integer.  Both closed forms are evaluated and must agree.
    """
    if not ctx.is_resonant(k, l):
        raise NotResonant(f"monomial z^{k} zbar^{l} is not resonant for n={ctx.n}")
    if ctx.n is None:
        return Fraction(min(k, l))
    n = ctx.n
    first = Fraction(2 * abs(k - l), n) + min(k, l)
    second = Fraction(k + l, 2) - Fraction((n - 4) * abs(k - l), 2 * n)
    assert first == second, (k, l, n)
    assert first.denominator == 1, (k, l, n)
    return first


def grade_of(k, l, ctx, grading=None):
    """Grade of a resonant monomial under the regime's grading."""
    grading = grading or ctx.grading
    if grading == "delta":
        return delta_order(k, l, ctx)
    if grading == "half_total":
        return Fraction(k + l, 2)
    if grading == "total":
        return Fraction(k + l)
    raise ValueError(f"unknown grading {grading!r}")


def grade_slice(h, m, ctx, grading=None):
    """Terms of ``h`` whose grade equals ``m``."""
    m = Fraction(m)
    return h.filter(lambda k, l, j: ctx.is_resonant(k, l) and grade_of(k, l, ctx, grading) == m)


def series_from_terms(terms, trunc_total, trunc_eps=0, field=EXACT):
    """Build a series from ``{(k, l[, j]): value}`` with string or numeric values."""
    coeffs = {}
    for key, v in terms.items():
        if isinstance(v, str):
            v = field.parse(v)
        elif isinstance(v, tuple):
            v = field.parse(*v)
        coeffs[key] = v
    return FormalSeries(coeffs, trunc_total, trunc_eps, field)


__all__ = [
    "FormalSeries",
    "QQi",
    "ResonanceContext",
    "delta_order",
    "grade_of",
    "grade_slice",
    "is_resonant_series",
    "resonant_projection",
    "series_from_terms",
]
