"""Formal interpolating Hamiltonians of tangent-to-identity maps.

Given ``f = z + sum_{p>=2} f_p`` that is area-preserving, there is a unique
real-valued ``h = sum_{p>=3} h_p`` with ``f = exp(L_h) z``.  It is built
order by order: at step ``m`` every multi-bracket ``L_{s_1} ... L_{s_l} z``
with ``s_1 + ... + s_l = m - 1`` and ``l >= 2`` is subtracted from ``f_m``
and the remainder, which is divergence free, is integrated for ``h_{m+1}``.

Homogeneity is measured in the joint order ``k + l + j`` so a parameter
``eps`` is carried along passively.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import product
from math import factorial

from .errors import NotAreaPreserving
from .lie import MapJet, check_area_preserving, divergence, lie_derivative, time_one_map
from .series import FormalSeries


def _small(s, tol):
    if s.field.mode == "exact":
        return s.is_zero()
    return s.max_abs() <= (s.field.tol if tol is None else tol)


def hamiltonian_from_divfree(g: FormalSeries, tol=None) -> FormalSeries:
    """Real-valued ``h`` with ``-2i dh/dzbar = g`` for divergence-free ``g``.

    Coefficients follow ``h_kl = -g_{k,l-1} / (2 i l)`` for ``l >= 1`` and the
    free coefficients are fixed by ``h_{k0} = conj(h_{0k})``.

    Raises
    ------
    NotAreaPreserving
        If ``div g`` does not vanish; the residual is attached.
    """
    fld = g.field
    res = divergence(g)
    if not _small(res, tol):
        raise NotAreaPreserving("divergence of the vector field does not vanish", residual=res)
    out = {}
    with fld.context():
        for (k, l, j), a in g._c.items():
            out[(k, l + 1, j)] = a / fld.make(0, -2 * (l + 1))
        for (k, l, j), c in list(out.items()):
            if k == 0:
                out[(l, 0, j)] = fld.conj(c)
    return FormalSeries(out, g.trunc_total + 1, g.trunc_eps, fld)


def _joint_slice(s, p):
    return s.filter(lambda k, l, j: k + l + j == p)


class _LieTerms:
    """Memoised ``T(l, k) = sum over compositions of k into l parts of L_{s_1}...L_{s_l} z``."""

    def __init__(self, hs, z):
        self.hs = hs  # order p -> h_p
        self.z = z
        self.memo = {}

    def L(self, s, g):
        h = self.hs.get(s + 2)
        if h is None or h.is_zero():
            return None
        return lie_derivative(h, g)

    def T(self, l, k):
        key = (l, k)
        if key in self.memo:
            return self.memo[key]
        acc = None
        if l == 1:
            acc = self.L(k, self.z)
        else:
            for s in range(1, k - l + 2):
                inner = self.T(l - 1, k - s)
                if inner is None:
                    continue
                t = self.L(s, inner)
                if t is None:
                    continue
                acc = t if acc is None else acc + t
        self.memo[key] = acc
        return acc


def higher_lie_terms(hs, z, m):
    """``sum_{l>=2} (1/l!) sum_{s_1+...+s_l = m-1} L_{s_1}...L_{s_l} z`` via the memo."""
    terms = _LieTerms(hs, z)
    return _higher(terms, m)


def _higher(terms, m):
    total = None
    for l in range(2, m):
        t = terms.T(l, m - 1)
        if t is None:
            continue
        t = t.scale(Fraction(1, factorial(l)))
        total = t if total is None else total + t
    return total


def higher_lie_terms_naive(hs, z, m):
    """Same sum enumerating every composition of ``m - 1`` explicitly (audit path)."""
    total = None
    for l in range(2, m):
        for parts in product(range(1, m - 1), repeat=l):
            if sum(parts) != m - 1:
                continue
            g = z
            ok = True
            for s in reversed(parts):
                h = hs.get(s + 2)
                if h is None or h.is_zero():
                    ok = False
                    break
                g = lie_derivative(h, g)
            if not ok:
                continue
            g = g.scale(Fraction(1, factorial(l)))
            total = g if total is None else total + g
    return total


def interpolate(m: MapJet, tol=None) -> FormalSeries:
    """Unique real-valued ``h`` with ``m.f = exp(L_h) z`` to the jet's truncation.

    Parameters
    ----------
    m : MapJet
        Tangent-to-identity, area-preserving jet.
    tol : real, optional
        Float-mode tolerance for the area and divergence checks.

    Returns
    -------
    FormalSeries
        ``h`` with ``trunc_total = m.trunc_total + 1``.

    Raises
    ------
    ValueError
        If the multiplier is not 1 or the jet is not tangent to the identity.
    NotAreaPreserving
        If the jet, or the remainder at some order, is not divergence free.
    """
    f = m.f
    fld = f.field
    one = fld.one()
    with fld.context():
        if fld.mode == "exact":
            if f[(1, 0, 0)] != one:
                raise ValueError("interpolation needs multiplier 1 (tangent to identity)")
        elif abs(f[(1, 0, 0)] - one) > (fld.tol if tol is None else tol):
            raise ValueError("interpolation needs multiplier 1 (tangent to identity)")
    if f[(0, 1, 0)] != 0:
        raise ValueError("linear part is not the identity")
    res = check_area_preserving(m)
    if not _small(res, tol):
        raise NotAreaPreserving("map jet is not area-preserving", residual=res)

    N, E = f.trunc_total, f.trunc_eps
    z = FormalSeries.z(N, E, fld)
    g_all = (f - z).filter(lambda k, l, j: not (k == 1 and l == 0 and j == 0))
    hs = {}
    terms = _LieTerms(hs, z)
    h = FormalSeries.zero(N + 1, E, fld)
    for order in range(2, N + E + 1):
        fm = _joint_slice(g_all, order)
        rest = _higher(terms, order)
        g = fm if rest is None else fm - _joint_slice(rest, order)
        g = g.with_trunc(N, E)
        if g.is_zero():
            continue
        try:
            hp = hamiltonian_from_divfree(g, tol)
        except NotAreaPreserving as exc:
            raise NotAreaPreserving(
                f"remainder at order {order} is not divergence free", residual=exc.residual, order=order
            ) from None
        hp = hp.with_trunc(N + 1, E)
        hs[order + 1] = hp
        h = h + hp
    return h


def approximate_map(h: FormalSeries, m: int) -> MapJet:
    """Time-one jet of the part of ``h`` of joint order at most ``m``."""
    Hm = h.filter(lambda k, l, j: k + l + j <= m)
    return time_one_map(Hm)


__all__ = [
    "approximate_map",
    "hamiltonian_from_divfree",
    "higher_lie_terms",
    "higher_lie_terms_naive",
    "interpolate",
]
