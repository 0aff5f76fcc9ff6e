"""Unique normal forms for families depending on a parameter ``eps``.

The Hamiltonian ``h(z, zbar; eps)`` is grouped into blocks ``eps^j h_{g,j}``
with ``h_{g,j}`` of grade ``g``.  With ``s = g + j`` the blocks are visited
for ``s = 3, 4, ...`` and, inside each ``s``, for ``j = 0, ..., s - 1``.
Block ``(g, j)`` is normalised by ``eps^j chi`` with ``chi`` of grade
``g - 1``; its homological equation uses the same operator ``L_{g-1}`` as
for a single map, because only the ``eps``-free leading part enters.

Coefficient layout
------------------
The result is ``zzbar A(zzbar; eps) + (z^n + zbar^n) B(zzbar; eps)`` with

* ``n >= 4``: ``a[k][m]`` at ``(z zbar)^(k+1) eps^m`` and ``b[k][m]`` at
  ``z^n (z zbar)^(2k) eps^m`` (only even powers survive), ``a[0][0] = 0``;
* ``n == 3``: ``a[k][m]`` at ``(z zbar)^(k+1) eps^m`` with ``k != 1 mod 3``
  and ``b[k][m]`` at ``z^3 (z zbar)^k eps^m`` with ``k != 2 mod 3``;
  ``a[0][0] = a[1][0] = 0``.

Truncation
----------
Block ``(g, j)`` is affected by generators of every earlier block, among
them ``eps``-free ones of grade ``g + j - 1``.  A block is therefore only
determined when ``g + j <= M`` with ``M`` the largest grade resolved by
``trunc_total``; terms beyond this triangle are discarded and row ``k`` of
each array is cut where its grade plus ``m`` exceeds ``M``.

Entries that are forced to vanish are kept in the arrays as zeros.  The
single-map invariants are ``a_k = a[k+1][0]`` (``n >= 4``) or
``a_k = a[k+2][0]`` (``n == 3``) and ``b_k = b[k][0]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import gmpy2

from .errors import CertificationError, DegenerateLeadingTerm, NotRealValued, NotResonant
from .lie import lie_exp
from .series import FormalSeries, ResonanceContext, grade_of
from .unique_nf import (
    _fmt_any,
    _fmt_float,
    _leading,
    _tol_zero,
    _vec_to_series,
    complement_project,
    homological_matrix,
    max_grade,
    rotate_leading,
)


@dataclass
class FamilyStep:
    grade: int
    eps_power: int
    generator: FormalSeries

    def to_json(self):
        return {"grade": self.grade, "eps_power": self.eps_power, "generator": self.generator.to_json()}


@dataclass
class FamilyNormalFormResult:
    """Two-index invariants ``a[k][m]``, ``b[k][m]`` of a family."""

    n: int
    a: list
    b: list
    normalized_h: FormalSeries
    rotation_angle: object = 0
    rotation_factor: object = None
    log: list = dc_field(default_factory=list)
    residuals: dict = dc_field(default_factory=dict)
    genericity: dict = dc_field(default_factory=dict)
    diagnostics: dict = dc_field(default_factory=dict)
    max_grade: int = 0
    trunc_eps: int = 0
    polar_a: list = dc_field(default_factory=list)
    polar_b: list = dc_field(default_factory=list)
    regime: str = "family"

    @property
    def field(self):
        return self.normalized_h.field

    def invariants(self):
        """Flat list of all ``a[k][m]`` then all ``b[k][m]``."""
        return [v for row in self.a for v in row] + [v for row in self.b for v in row]

    def eps_slice(self, m=0):
        """``(a[.][m], b[.][m])`` over the rows that reach ``eps^m``."""
        return [row[m] for row in self.a if m < len(row)], [row[m] for row in self.b if m < len(row)]

    def to_json(self):
        fld = self.field
        fr = fld.format_real
        return {
            "n": self.n,
            "a": [[fr(v) for v in row] for row in self.a],
            "b": [[fr(v) for v in row] for row in self.b],
            "rotation_angle": _fmt_float(self.rotation_angle),
            "residual_max": _fmt_float(max(self.residuals.values(), default=0)),
            "genericity": {k: fr(v) for k, v in self.genericity.items()},
            "diagnostics": {
                k: (v if isinstance(v, (bool, str)) else _fmt_any(v, fld)) for k, v in self.diagnostics.items()
            },
            "max_grade": self.max_grade,
            "trunc_eps": self.trunc_eps,
            "polar": {
                "a": [[_fmt_any(v, fld) for v in row] for row in self.polar_a],
                "b": [[_fmt_any(v, fld) for v in row] for row in self.polar_b],
            },
            "normalized_h": self.normalized_h.to_json(),
            "transform_log": [s.to_json() for s in self.log],
            "provenance": {"regime": "family"},
        }


def _validate_family(h, ctx, tol=None):
    """Real-valuedness and resonance per eps power; pure eps constants are dropped."""
    fld = h.field
    if not h.is_real_valued(tol):
        raise NotRealValued("Hamiltonian is not real-valued")
    keep = {}
    for (k, l, j), c in h.items():
        if k == 0 and l == 0:
            continue  # constants do not move points
        if not ctx.is_resonant(k, l):
            if fld.mode == "float" and _tol_zero(fld, c, tol):
                continue
            raise NotResonant(f"term z^{k} zbar^{l} eps^{j} is not resonant for n={ctx.n}")
        if k + l + j < 3:
            raise ValueError(f"term z^{k} zbar^{l} eps^{j} has joint order below 3")
        keep[(k, l, j)] = c
    return FormalSeries(keep, h.trunc_total, h.trunc_eps, fld, _raw=True)


def _filter(h, ctx, M):
    return h.filter(lambda k, l, j: grade_of(k, l, ctx) + j <= M)


def _block_vec(h, ctx, g, j, basis):
    vec = {}
    for (k, l, jj), c in h.items():
        if jj == j and grade_of(k, l, ctx) == g:
            vec[basis.js[basis.items.index((k, l))]] = c
    return vec


def _with_eps(s, j, trunc_eps):
    coeffs = {(k, l, j): c for (k, l, _), c in s.items()}
    return FormalSeries(coeffs, s.trunc_total, trunc_eps, s.field, _raw=True)


def _blocks_before(h1, h2, ctx, g, j, tol=None):
    """Blocks preceding ``(g, j)`` in the sweep agree."""
    s = g + j
    d = (h1 - h2).filter(lambda k, l, jj: grade_of(k, l, ctx) + jj < s or (grade_of(k, l, ctx) + jj == s and jj < j))
    fld = h1.field
    if fld.mode == "exact":
        return d.is_zero()
    return d.max_abs() <= (fld.tol if tol is None else tol) * 16


def _block_order(M, E, g0):
    """Blocks ``(g, j)`` in sweep order; targets of grade 1 are already normal."""
    out = []
    for s in range(3, M + 1):
        for j in range(0, min(s - 1, E) + 1):
            g = s - j
            if g > M or g < 2 or (j == 0 and g < g0):
                continue
            out.append((g, j))
    return out


def _extract(h, n, M, E):
    fld = h.field
    zero = fld.real(fld.zero())
    # grade of the monomial carrying a[k][.] and b[k][.]
    if n >= 4:
        ga = [k + 1 for k in range(M)]
        gb = [2 * k + 2 for k in range(M // 2)]
    else:
        ga = [2 * k + 2 for k in range(M // 2)]
        gb = [2 * k + 3 for k in range((M - 3) // 2 + 1)]
    a = [[zero] * (min(E, M - g) + 1) for g in ga]
    b = [[zero] * (min(E, M - g) + 1) for g in gb]
    for (k, l, j), c in h.items():
        if k == l and k - 1 < len(a) and j < len(a[k - 1]):
            a[k - 1][j] = fld.real(c)
        elif k - l == n:
            idx = l // 2 if n >= 4 else l
            if idx < len(b) and j < len(b[idx]):
                b[idx][j] = fld.real(c)
    return a, b


def family_shape_violations(h: FormalSeries, n) -> list:
    """Monomials of ``h`` outside the family normal-form shape."""
    bad = []
    for (k, l, j) in h.keys():
        lo = min(k, l)
        if k == l:
            q = k
            if j == 0 and q < 2:
                bad.append((k, l, j))
            elif n == 3 and q % 3 == 2:
                bad.append((k, l, j))
        elif abs(k - l) != n:
            bad.append((k, l, j))
        elif n >= 4 and lo % 2:
            bad.append((k, l, j))
        elif n == 3 and lo % 3 == 2:
            bad.append((k, l, j))
    return bad


def _polar(a, b, n, fld):
    """Polar coefficients: ``I A(I, eps) + I^(n/2) B(I, eps) cos(n phi)``."""
    exact = fld.mode == "exact"
    pa, pb = [], []
    with fld.context() if not exact else gmpy2.context(gmpy2.get_context(), precision=256):
        two = gmpy2.mpq(2) if exact else gmpy2.mpfr(2)
        for k, row in enumerate(a):
            pa.append([v * two ** (k + 1) for v in row])
        for k, row in enumerate(b):
            e2 = n + (4 * k if n >= 4 else 2 * k)  # twice the power of I
            if exact and e2 % 2 == 0:
                f = 2 * two ** (e2 // 2)
            else:
                f = 2 * gmpy2.sqrt(gmpy2.mpfr(2)) ** e2
            pb.append([v * f if exact and e2 % 2 == 0 else gmpy2.mpfr(v) * f for v in row])
    return pa, pb


def family_normal_form(h: FormalSeries, ctx: ResonanceContext, tol=None, max_grade_override=None):
    """Normalise a resonant family ``h(z, zbar; eps)``.

    Parameters
    ----------
    h : FormalSeries
        Real-valued, resonant in ``(k, l)``, joint order at least 3.
        ``trunc_eps`` bounds the retained powers of ``eps``.
    ctx : ResonanceContext
        Resonant context (``n >= 3``).

    Returns
    -------
    FamilyNormalFormResult

    Raises
    ------
    DegenerateLeadingTerm
        ``h_{n00} = 0``, or ``h_{220} = 0`` when a solve needs it (``n >= 4``).
    """
    if not ctx.resonant:
        raise NotResonant("family normal forms need a resonant context")
    fld = h.field
    n = ctx.n
    h = _validate_family(h, ctx, tol)
    N, E = h.trunc_total, h.trunc_eps
    M = max_grade(n, N) if max_grade_override is None else max_grade_override
    h = _filter(h, ctx, M)
    h, angle, u = rotate_leading(h, ctx)
    a0, b0 = _leading(h, n)
    g0 = 4 if n == 3 else 3
    blocks = _block_order(M, E, g0)
    if n >= 4 and _tol_zero(fld, a0) and any(
        (n >= 5 and (g - 1) % 2 == 0) or (n == 4 and (g - 1) % 4 == 2) for g, _ in blocks
    ):
        raise DegenerateLeadingTerm(f"h_220 vanishes; required for n = {n} at this truncation")
    ops = {}
    log, residuals = [], {}
    for g, j in blocks:
        p = g - 1
        if p not in ops:
            ops[p] = homological_matrix(n, p, a0, b0, fld)
        op = ops[p]
        target = _block_vec(h, ctx, g, j, op.target)
        chi_vec, normal, _ = complement_project(op, target)
        if not chi_vec:
            residuals[(g, j)] = 0
            continue
        chi = _with_eps(_vec_to_series(chi_vec, op.domain, fld, N), j, E)
        new = _filter(lie_exp(-chi, h), ctx, M)
        if not _blocks_before(new, h, ctx, g, j, tol):
            raise CertificationError(f"step at block (grade {g}, eps^{j}) changed earlier blocks")
        got = _block_vec(new, ctx, g, j, op.target)
        worst = 0
        with fld.context():
            for jt in op.target.js:
                r = got.get(jt, fld.zero()) - normal.get(jt, fld.zero())
                worst = max(worst, fld.magnitude(r))
        if fld.mode == "exact" and worst != 0:
            raise CertificationError(f"block (grade {g}, eps^{j}) not in complement after the step")
        residuals[(g, j)] = worst
        snapped = _with_eps(_vec_to_series(normal, op.target, fld, N), j, E)
        new = new.filter(lambda k, l, jj, g=g, j=j: not (jj == j and grade_of(k, l, ctx) == g)) + snapped
        h = new.truncate(N, E)
        log.append(FamilyStep(g, j, chi))
    a, b = _extract(h, n, M, E)
    pa, pb = _polar(a, b, n, fld)
    diagnostics = {}
    if n >= 4 and len(pa) > 1 and pb:
        with fld.context() if fld.mode == "float" else gmpy2.context(gmpy2.get_context(), precision=256):
            tw = pa[1][0] * pb[0][0]
        diagnostics["twist_condition"] = tw
        diagnostics["twist_condition_holds"] = not _tol_zero(fld, tw)
    elif n == 3 and pb:
        diagnostics["twist_condition"] = pb[0][0]
        diagnostics["twist_condition_holds"] = not _tol_zero(fld, b0)
    return FamilyNormalFormResult(
        n, a, b, h, angle, u, log, residuals, {"a0": a0, "b0": b0}, diagnostics, M, E, pa, pb
    )


def family_invariance_check(h: FormalSeries, ctx: ResonanceContext, chi_family: FormalSeries, tol=None):
    """Max deviation between the family invariants of ``h`` and ``exp(L_chi) h``."""
    r1 = family_normal_form(h, ctx, tol)
    h2 = h if chi_family.is_zero() else lie_exp(chi_family, h).truncate(h.trunc_total, h.trunc_eps)
    r2 = family_normal_form(h2, ctx, tol)
    v1, v2 = r1.invariants(), r2.invariants()
    fld = r1.field
    worst = 0
    with fld.context():
        for x, y in zip(v1, v2):
            worst = max(worst, abs(x - y))
    return worst


__all__ = [
    "FamilyNormalFormResult",
    "FamilyStep",
    "family_invariance_check",
    "family_normal_form",
    "family_shape_violations",
]
