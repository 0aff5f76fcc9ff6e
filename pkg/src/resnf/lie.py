"""Symplectic calculus in complex coordinates.

With ``z = x + i y`` the symplectic form is ``dx^dy = -(1/2i) dz^dzbar`` and
the Hamiltonian vector field of a real-valued ``chi`` has z-component
``-2i d(chi)/d(zbar)``.  The Lie derivative ``L_chi g = -2i {g, chi}`` is the
derivative of ``g`` along that field; :func:`lie_derivative` is the only
place where the factor ``-2i`` appears.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import NotRealValued
from .series import FormalSeries


def _bracket_trunc(a, b):
    ma = a.min_degree(skip_constants=True)
    mb = b.min_degree(skip_constants=True)
    ma = a.trunc_total + 1 if ma is None else ma
    mb = b.trunc_total + 1 if mb is None else mb
    return min(a.trunc_total + mb - 2, b.trunc_total + ma - 2)


def poisson_bracket(a: FormalSeries, b: FormalSeries) -> FormalSeries:
    """``{a, b} = a_z b_zbar - a_zbar b_z``; eps is a passive parameter.

    The truncation of the result is the largest order whose coefficient only
    depends on retained coefficients of ``a`` and ``b``.
    """
    a._check(b)
    N = max(_bracket_trunc(a, b), 0)
    E = min(a.trunc_eps, b.trunc_eps)
    bterms = [(k, l, j, c) for (k, l, j), c in b._c.items() if j <= E]
    out = {}
    get = out.get
    with a.field.context():
        for (k1, l1, j1), c1 in a._c.items():
            if j1 > E:
                continue
            for k2, l2, j2, c2 in bterms:
                w = k1 * l2 - l1 * k2
                if not w:
                    continue
                k, l, j = k1 + k2 - 1, l1 + l2 - 1, j1 + j2
                if k + l > N or j > E:
                    continue
                key = (k, l, j)
                prev = get(key)
                term = c1 * c2 * w
                out[key] = term if prev is None else prev + term
    out = {key: c for key, c in out.items() if c != 0}
    return FormalSeries(out, N, E, a.field, _raw=True)


def divergence(g: FormalSeries) -> FormalSeries:
    """``dg/dz + d(gbar)/d(zbar)`` with ``gbar`` from the real symmetry."""
    return g.dz() + g.conj().dzbar()


def _check_generator(chi):
    for k, l, j in chi._c:
        if k + l < 2 or k + l + j < 3:
            raise ValueError(f"generator term z^{k} zbar^{l} eps^{j} has order below 3")


def lie_derivative(chi: FormalSeries, g: FormalSeries) -> FormalSeries:
    """``L_chi g = -2i {g, chi}``.

    Raises
    ------
    ValueError
        If ``chi`` has terms of order below 3.
    """
    _check_generator(chi)
    return poisson_bracket(g, chi).scale(chi.field.make(0, -2))


def lie_exp(chi: FormalSeries, g: FormalSeries) -> FormalSeries:
    """``exp(L_chi) g = g + sum_k L_chi^k g / k!``.

    Each application of ``L_chi`` raises the joint order by at least one,
    so the sum terminates on any finite truncation box.
    """
    _check_generator(chi)
    total = g
    term = g
    k = 0
    while True:
        k += 1
        term = lie_derivative(chi, term).truncate(total.trunc_total, total.trunc_eps)
        if term.is_zero():
            break
        term = term.scale(Fraction(1, k))
        total = total + term
    # trailing zero terms can still lower the guaranteed truncation
    return total.truncate(term.trunc_total, term.trunc_eps)


def _field_trunc(X, g):
    mX = X.min_degree()
    mg = g.min_degree(skip_constants=True)
    mX = X.trunc_total + 1 if mX is None else mX
    mg = g.trunc_total + 1 if mg is None else mg
    return min(g.trunc_total + mX - 1, X.trunc_total + mg - 1)


def field_derivative(X: FormalSeries, g: FormalSeries) -> FormalSeries:
    """Derivative of ``g`` along the real field with z-component ``X``.

    ``D_X g = X g_z + conj(X) g_zbar``; for ``X = -2i chi_zbar`` this is
    ``L_chi g``.  Used for fields that are not Hamiltonian.
    """
    X._check(g)
    for k, l, j in X._c:
        if k + l < 1 or k + l + j < 2:
            raise ValueError(f"vector field term z^{k} zbar^{l} eps^{j} has order below 2")
    N = max(_field_trunc(X, g), 0)
    E = min(X.trunc_eps, g.trunc_eps)
    Xb = X.conj()
    a = _mul_box(X, g.dz(), N, E)
    b = _mul_box(Xb, g.dzbar(), N, E)
    return a + b


def _mul_box(a, b, N, E):
    from .series import _mul

    return _mul(a.with_trunc(max(N, a.trunc_total)), b.with_trunc(max(N, b.trunc_total)), N, E)


def field_exp(X: FormalSeries, g: FormalSeries) -> FormalSeries:
    """``exp(D_X) g``, i.e. ``g`` composed with the time-one flow of ``X``."""
    total = g
    term = g
    k = 0
    while True:
        k += 1
        term = field_derivative(X, term).truncate(total.trunc_total, total.trunc_eps)
        if term.is_zero():
            break
        term = term.scale(Fraction(1, k))
        total = total + term
    return total.truncate(term.trunc_total, term.trunc_eps)


def hamiltonian_field(chi: FormalSeries) -> FormalSeries:
    """z-component ``-2i chi_zbar`` of the Hamiltonian field of ``chi``."""
    return chi.dzbar().scale(chi.field.make(0, -2))


@dataclass(frozen=True)
class MapJet:
    """Jet of a real planar map written as the z-component ``f(z, zbar)``.

    The zbar-component is ``f.conj()`` by the real symmetry.
    """

    f: FormalSeries

    def __post_init__(self):
        for k, l, j in self.f._c:
            if k == 0 and l == 0:
                raise ValueError("map jet has a constant term; the fixed point must be at the origin")

    @property
    def mu(self):
        """Linear multiplier: coefficient of ``z`` at ``eps = 0``."""
        return self.f[(1, 0, 0)]

    @property
    def field(self):
        return self.f.field

    @property
    def trunc_total(self):
        return self.f.trunc_total

    @property
    def fbar(self):
        return self.f.conj()

    @classmethod
    def identity(cls, trunc_total, trunc_eps=0, field=None):
        from .scalars import EXACT

        return cls(FormalSeries.z(trunc_total, trunc_eps, field or EXACT))

    @classmethod
    def rotation(cls, mu, trunc_total, trunc_eps=0, field=None):
        from .scalars import EXACT

        field = field or EXACT
        return cls(FormalSeries.monomial(1, 0, 0, mu, trunc_total, trunc_eps, field))

    def __call__(self, g: FormalSeries) -> FormalSeries:
        """Pull back ``g``: returns ``g(f, fbar)``."""
        return substitute(g, self.f, self.f.conj())

    def to_json(self):
        return {"map": self.f.to_json()}


def substitute(s: FormalSeries, u: FormalSeries, ubar: FormalSeries) -> FormalSeries:
    """``s(u, ubar)`` for series ``u, ubar`` without constant terms.

    Powers of ``ubar`` are grouped for each power of ``u``.
    """
    s._check(u)
    for key in list(u._c) + list(ubar._c):
        if key[0] + key[1] == 0:
            raise ValueError("substituted series must vanish at the origin")
    N = min(s.trunc_total, u.trunc_total, ubar.trunc_total)
    E = min(s.trunc_eps, u.trunc_eps, ubar.trunc_eps)
    u = u.truncate(N, E)
    ubar = ubar.truncate(N, E)
    by_k = {}
    for (k, l, j), c in s._c.items():
        if k + l <= N and j <= E:
            by_k.setdefault(k, []).append((l, j, c))
    maxl = max((l for rows in by_k.values() for l, _, _ in rows), default=0)
    one = FormalSeries.constant(1, N, E, s.field)
    ubar_pows = [one]
    for _ in range(maxl):
        ubar_pows.append(ubar_pows[-1] * ubar)
    eps_pows = {}

    def eps(j):
        if j not in eps_pows:
            eps_pows[j] = FormalSeries.monomial(0, 0, j, 1, N, E, s.field)
        return eps_pows[j]

    result = FormalSeries.zero(N, E, s.field)
    upow = one
    for k in range(0, max(by_k, default=-1) + 1):
        if k:
            upow = upow * u
        rows = by_k.get(k)
        if not rows:
            continue
        inner = FormalSeries.zero(N, E, s.field)
        for l, j, c in rows:
            piece = ubar_pows[l].scale(c)
            if j:
                piece = piece * eps(j)
            inner = inner + piece
        result = result + upow * inner
    return result


def compose(a: MapJet, b: MapJet) -> MapJet:
    """Jet of ``a o b``."""
    return MapJet(substitute(a.f, b.f, b.f.conj()))


def time_one_map(chi: FormalSeries) -> MapJet:
    """Time-one map ``exp(L_chi) z`` of a real-valued generator."""
    if not chi.is_real_valued():
        raise NotRealValued("generator is not real-valued")
    z = FormalSeries.z(max(chi.trunc_total - 1, 1), chi.trunc_eps, chi.field)
    return MapJet(lie_exp(chi, z))


def field_time_one_map(X: FormalSeries, trunc_total=None) -> MapJet:
    """Time-one map of the real vector field with z-component ``X``."""
    N = X.trunc_total if trunc_total is None else trunc_total
    z = FormalSeries.z(N, X.trunc_eps, X.field)
    return MapJet(field_exp(X, z))


def check_area_preserving(m: MapJet) -> FormalSeries:
    """Residual ``div g - {gbar, g}`` with ``g = f - z``; zero iff area-preserving."""
    f = m.f
    g = f - FormalSeries.z(f.trunc_total, f.trunc_eps, f.field)
    return divergence(g) - poisson_bracket(g.conj(), g)


def area_residual_max(m: MapJet):
    return check_area_preserving(m).max_abs()


__all__ = [
    "MapJet",
    "area_residual_max",
    "check_area_preserving",
    "compose",
    "divergence",
    "field_derivative",
    "field_exp",
    "field_time_one_map",
    "hamiltonian_field",
    "lie_derivative",
    "lie_exp",
    "poisson_bracket",
    "substitute",
    "time_one_map",
]
