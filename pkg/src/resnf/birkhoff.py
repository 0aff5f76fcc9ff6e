"""Classical Birkhoff normalisation of map jets.

A jet ``f = mu z + ...`` is conjugated, one order at a time, by time-one
maps of polynomial vector fields until it commutes with the rotation
``z -> mu z``.  On the z-component a monomial ``z^k zbar^l`` commutes with
the rotation iff ``mu**(k-l) == mu``, i.e. ``k - l - 1 == 0 (mod n)``.

For a homogeneous field ``X`` the order-``p`` part of the conjugated map is
``f_p + mu X - X(mu z, conj(mu) zbar)``, so the coefficient of ``z^k zbar^l``
is cancelled by ``X_kl = -f_kl / (mu - mu**(k-l))``.  The powers of ``mu``
come from an exact residue table, so a zero divisor occurs exactly on the
resonant exponents.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import gmpy2

from .errors import CertificationError, NotAreaPreserving
from .interpolation import _small, hamiltonian_from_divfree
from .lie import MapJet, check_area_preserving, divergence, field_exp, substitute
from .scalars import InexactError
from .series import FormalSeries, ResonanceContext


def map_resonant(k, l, ctx):
    """True iff ``z^k zbar^l`` on the z-component commutes with the rotation."""
    return ctx.resonant_power(k - l - 1)


@dataclass
class BirkhoffStep:
    """One conjugation ``N -> Phi^{-1} o N o Phi`` with ``Phi`` the flow of ``field``.

    ``generator`` is the real Hamiltonian of ``field`` when the field is
    divergence free (always the case for area-preserving input).
    """

    order: int
    field: FormalSeries
    generator: FormalSeries | None = None

    def to_json(self):
        return {
            "order": self.order,
            "field": self.field.to_json(),
            "generator": None if self.generator is None else self.generator.to_json(),
        }


@dataclass
class BirkhoffResult:
    jet: MapJet
    log: list = dc_field(default_factory=list)
    snapped_max: object = 0

    def __iter__(self):
        # allows ``jet, log = birkhoff_normalize(...)``
        return iter((self.jet, self.log))


def conjugate_by_field(m: MapJet, X: FormalSeries) -> MapJet:
    """Jet of ``Phi^{-1} o m o Phi`` where ``Phi`` is the time-one flow of ``X``."""
    fX = field_exp(X, m.f)
    psi = field_exp(-X, FormalSeries.z(m.trunc_total, m.f.trunc_eps, m.field))
    return MapJet(substitute(psi, fX, fX.conj()))


def _snap(f, ctx, upto, tol):
    """Drop non-resonant terms of joint order <= upto after checking they are below tol."""
    worst = 0
    keep = {}
    with f.field.context():
        for (k, l, j), c in f._c.items():
            if k + l + j <= upto and not map_resonant(k, l, ctx):
                mag = f.field.magnitude(c)
                if f.field.mode == "exact" or mag > tol:
                    raise CertificationError(
                        f"non-resonant term z^{k} zbar^{l} eps^{j} survived elimination (|c| = {mag})"
                    )
                worst = max(worst, mag)
                continue
            keep[(k, l, j)] = c
    return FormalSeries(keep, f.trunc_total, f.trunc_eps, f.field, _raw=True), worst


def _order_step(f, ctx, p, mu):
    fld = f.field
    X = {}
    with fld.context():
        for (k, l, j), c in f._c.items():
            if k + l + j != p or map_resonant(k, l, ctx):
                continue
            d = mu - ctx.mu_power(k - l, fld)
            if fld.is_zero(d):
                raise CertificationError(f"zero divisor on non-resonant exponent ({k}, {l})")
            X[(k, l, j)] = -c / d
    return FormalSeries(X, f.trunc_total, f.trunc_eps, fld)


def _apply_step(m, X, ctx, p, tol):
    new = conjugate_by_field(m, X)
    f, worst = _snap(new.f, ctx, p, tol)
    return MapJet(f), worst


def birkhoff_normalize(m: MapJet, ctx: ResonanceContext, tol=None, check_area=True) -> BirkhoffResult:
    """Remove every non-resonant term of ``m`` by successive conjugations.

    Parameters
    ----------
    m : MapJet
        Jet with linear part ``mu z``.
    ctx : ResonanceContext
        Supplies ``mu`` and the resonance order.
    tol : real, optional
        Float-mode tolerance; defaults to ``2**(-prec/2)``.

    Returns
    -------
    BirkhoffResult
        The normalised jet and the list of :class:`BirkhoffStep`.
    """
    f = m.f
    fld = f.field
    tol = fld.tol if tol is None else tol
    mu = ctx.mu(fld)
    with fld.context():
        if not fld.close(f[(1, 0, 0)], mu):
            raise ValueError("jet multiplier does not match the resonance context")
    if f[(0, 1, 0)] != 0:
        raise ValueError("linear part must be diagonal (mu z); run linearize_elliptic first")
    if check_area:
        res = check_area_preserving(m)
        if not _small(res, tol):
            raise NotAreaPreserving("input jet is not area-preserving", residual=res)
    log = []
    worst = 0
    for p in range(2, f.trunc_total + f.trunc_eps + 1):
        X = _order_step(m.f, ctx, p, mu)
        if X.is_zero():
            continue
        generator = None
        if _small(divergence(X), tol):
            generator = hamiltonian_from_divfree(X, tol)
        m, w = _apply_step(m, X, ctx, p, tol)
        worst = max(worst, w)
        log.append(BirkhoffStep(p, X, generator))
    return BirkhoffResult(m, log, worst)


def replay(m: MapJet, log, ctx: ResonanceContext, tol=None) -> MapJet:
    """Apply a transform log to ``m``; reproduces the normalised jet."""
    tol = m.field.tol if tol is None else tol
    for step in log:
        m, _ = _apply_step(m, step.field, ctx, step.order, tol)
    return m


def commutation_residual(m: MapJet, ctx: ResonanceContext):
    """Max modulus of the coefficients of ``N o R - R o N``.

    Resonant exponents contribute an exact zero; the remaining ones are
    evaluated at 256 bits.
    """
    worst = gmpy2.mpfr(0)
    ffl = None
    for (k, l, j), c in m.f.items():
        if map_resonant(k, l, ctx):
            continue
        if ffl is None:
            from .scalars import FloatField

            ffl = FloatField(max(256, m.field.prec or 256))
        with ffl.context():
            d = ctx.mu_power(k - l, ffl) - ctx.mu_power(1, ffl)
            worst = max(worst, abs(ffl.coerce(c) * d))
    return worst


# ---------------------------------------------------------------------------
# real (x, y) jets


def xy_to_z(X: FormalSeries, Y: FormalSeries) -> FormalSeries:
    """z-component ``X + iY`` of a real map given in ``(x, y)``.

    ``X`` and ``Y`` use ``(k, l)`` for powers of ``x`` and ``y``.
    """
    fld = X.field
    N = min(X.trunc_total, Y.trunc_total)
    E = min(X.trunc_eps, Y.trunc_eps)
    with fld.context():
        half = fld.make(gmpy2.mpq(1, 2))
        xs = FormalSeries({(1, 0, 0): half, (0, 1, 0): half}, N, E, fld)
        ys = FormalSeries({(1, 0, 0): fld.make(0, gmpy2.mpq(-1, 2)), (0, 1, 0): fld.make(0, gmpy2.mpq(1, 2))}, N, E, fld)
    return substitute(X, xs, ys) + substitute(Y, xs, ys).scale(fld.imag_unit())


def _linear_part(X, Y):
    return X[(1, 0, 0)], X[(0, 1, 0)], Y[(1, 0, 0)], Y[(0, 1, 0)]


def linearize_elliptic(X: FormalSeries, Y: FormalSeries, ctx_hint: ResonanceContext | None = None):
    """Bring the linear part to a rotation and pass to ``z, zbar``.

    Returns
    -------
    (MapJet, ResonanceContext, matrix)
        The jet ``f = mu z + O(2)``, the detected resonance context and the
        real linear change ``P`` (columns) with ``P^{-1} A P = R_alpha``.
    """
    fld = X.field
    with fld.context():
        a, b, c, d = (fld.real(v) for v in _linear_part(X, Y))
        det = a * d - b * c
        tr = a + d
        tol = fld.tol
        if fld.mode == "exact":
            area_ok = det == 1
        else:
            area_ok = abs(det - 1) <= tol
        if not area_ok:
            raise NotAreaPreserving(f"linear part has determinant {det}, not 1")
        if tr * tr >= 4 if fld.mode == "exact" else tr * tr >= 4 - tol:
            raise ValueError("linear part is hyperbolic or parabolic (|trace| >= 2)")
        if b == -c and a == d:
            P = ((1, 0), (0, 1))
            mu = fld.make(a, c)
        else:
            disc = fld.sqrt_real(4 - tr * tr)
            P = None
            for sgn in (1, -1):
                mu_re, mu_im = tr / 2, sgn * disc / 2
                # eigenvector of A for mu: (b, mu - a) when b != 0, else (mu - d, c)
                if b != 0:
                    ur, ui = (b, 0), (mu_re - a, mu_im)
                else:
                    ur, ui = (mu_re - d, mu_im), (c, 0)
                u = (ur[0], ui[0])
                w = (ur[1], ui[1])
                # columns p1 = u, p2 = -w  (u, w real and imaginary parts of v)
                p1 = u
                p2 = (-w[0], -w[1])
                dP = p1[0] * p2[1] - p2[0] * p1[1]
                if dP > 0:
                    s = fld.sqrt_real(dP)
                    P = ((p1[0] / s, p2[0] / s), (p1[1] / s, p2[1] / s))
                    mu = fld.make(mu_re, mu_im)
                    break
            if P is None:
                raise CertificationError("failed to build a symplectic eigenbasis")
    Xn, Yn = _conjugate_linear(X, Y, P)
    f = xy_to_z(Xn, Yn)
    ctx = ctx_hint if ctx_hint is not None else detect_resonance(mu, fld, f.trunc_total + 1)
    return MapJet(f), ctx, P


def _conjugate_linear(X, Y, P):
    """``P^{-1} o F o P`` for the real matrix ``P`` (rows of tuples)."""
    fld = X.field
    N, E = X.trunc_total, X.trunc_eps
    with fld.context():
        (p11, p12), (p21, p22) = [[fld.make(v) for v in row] for row in P]
        xs = FormalSeries({(1, 0, 0): p11, (0, 1, 0): p12}, N, E, fld)
        ys = FormalSeries({(1, 0, 0): p21, (0, 1, 0): p22}, N, E, fld)
        det = p11 * p22 - p12 * p21
        q11, q12, q21, q22 = p22 / det, -p12 / det, -p21 / det, p11 / det
    Xs = substitute(X, xs, ys)
    Ys = substitute(Y, xs, ys)
    return Xs.scale(q11) + Ys.scale(q12), Xs.scale(q21) + Ys.scale(q22)


def detect_resonance(mu, fld, max_order) -> ResonanceContext:
    """Least ``n <= max_order`` with ``mu**n == 1`` (exactly or to tolerance)."""
    with fld.context():
        p = fld.one()
        for n in range(1, max_order + 1):
            p = p * mu
            hit = (p == fld.one()) if fld.mode == "exact" else abs(p - 1) <= fld.tol
            if hit:
                if n < 3:
                    raise ValueError(f"multiplier is a root of unity of order {n}; not elliptic-resonant")
                if fld.mode == "exact":
                    # Gaussian rational roots of unity of order >= 3: only +-i
                    q = 1 if mu == fld.imag_unit() else 3
                else:
                    ang = gmpy2.atan2(mu.imag, mu.real)
                    q = int(gmpy2.rint(ang * n / (2 * gmpy2.const_pi()))) % n
                return ResonanceContext(n, q, max_order - 1)
    return ResonanceContext(None, 1, max_order - 1, mu_value=mu)


def mu_from_context(ctx, fld):
    try:
        return ctx.mu(fld)
    except InexactError as exc:
        raise InexactError(f"{exc}; the multiplier of order {ctx.n} needs float mode") from None


def reduced_tangent_map(m: MapJet, ctx: ResonanceContext) -> MapJet:
    """``R_{-alpha} o N`` for a jet ``N`` that commutes with the rotation."""
    fld = m.field
    with fld.context():
        mubar = fld.conj(ctx.mu(fld))
    return MapJet(m.f.scale(mubar))


__all__ = [
    "BirkhoffResult",
    "BirkhoffStep",
    "birkhoff_normalize",
    "commutation_residual",
    "conjugate_by_field",
    "detect_resonance",
    "linearize_elliptic",
    "map_resonant",
    "reduced_tangent_map",
    "replay",
    "xy_to_z",
]
