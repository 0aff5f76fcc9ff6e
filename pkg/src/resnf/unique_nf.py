"""Unique normal forms of resonant real-valued Hamiltonians.

The Hamiltonian is normalised one grade at a time.  At grade ``g = p + 1``
the generator ``chi`` lives in the grade-``p`` space ``H_p`` and changes
grade ``g`` by ``L_p chi = [2i {chi, h_lead}]_g`` where ``h_lead`` is the
leading part:

* ``n >= 5``: grade is the delta-order ``2|k-l|/n + min(k, l)`` and
  ``h_lead = a0 z^2 zbar^2 + b0 (z^n + zbar^n)``;
* ``n == 4``: grade is half the degree, same ``h_lead``;
* ``n == 3``: grade is the degree and ``h_lead = b0 (z^3 + zbar^3)``.

The part of grade ``g`` outside the image of ``L_p`` is projected onto a
fixed complement; its coefficients are the invariants ``a_k``, ``b_k``.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from math import factorial

import gmpy2

from .errors import CertificationError, DegenerateLeadingTerm, NotRealValued, NotResonant, PreconditionError
from .lie import lie_exp, poisson_bracket
from .linalg import solve
from .polar import PolarHamiltonian, to_polar
from .series import FormalSeries, ResonanceContext, grade_of


# ---------------------------------------------------------------------------
# bases


@dataclass(frozen=True)
class MonomialBasis:
    """Ordered resonant monomials ``Q_{m,j}`` spanning ``H^n_m``.

    ``items[i]`` is the exponent pair of ``Q_{m, js[i]}``.
    """

    n: int
    m: int
    js: tuple
    items: tuple

    def __len__(self):
        return len(self.items)

    def index(self, j):
        return self.js.index(j)

    def exponent(self, j):
        return self.items[self.js.index(j)]


def basis_exponent(n, m, j):
    """Exponent pair of ``Q_{m,j}``; negative ``j`` is the conjugate monomial."""
    if n == 3:
        return ((m + 3 * j) // 2, (m - 3 * j) // 2)
    s = abs(j)
    k, l = m + (n - 2) * s, m - 2 * s
    return (k, l) if j >= 0 else (l, k)


def basis_js(n, m):
    if m < 0:
        return ()
    if n == 3:
        J = m // 3
        return tuple(j for j in range(-J, J + 1) if (j - m) % 2 == 0)
    J = m // 2
    return tuple(range(-J, J + 1))


def monomial_basis(n, m) -> MonomialBasis:
    js = basis_js(n, m)
    return MonomialBasis(n, m, js, tuple(basis_exponent(n, m, j) for j in js))


def basis_dimension(n, m):
    """Closed-form ``dim H^n_m``."""
    if n == 3:
        k, r = divmod(m, 3)
        return (k + 1, k, k + 1)[r]
    return 1 + 2 * (m // 2)


def enumerate_grade(n, m):
    """All resonant ``(k, l)`` of grade ``m`` by brute force (for checks)."""
    ctx = ResonanceContext(n)
    out = []
    for k in range(0, 4 * m + n + 1):
        for l in range(0, 4 * m + n + 1):
            if ctx.is_resonant(k, l) and grade_of(k, l, ctx) == m:
                out.append((k, l))
    return sorted(out)


def max_grade(n, trunc_total):
    """Largest grade whose monomials all have degree ``<= trunc_total``."""
    if n is None:
        return trunc_total // 2
    if n == 3:
        return trunc_total
    if n == 4:
        return trunc_total // 2
    m = 0
    while 2 * (m + 1) + (n - 4) * ((m + 1) // 2) <= trunc_total:
        m += 1
    return m


# ---------------------------------------------------------------------------
# homological operator


def closed_form_action(n, p, j, a0, b0):
    """``L_p(Q_{p,j})`` as ``{target j: complex coefficient as (re, im)}``."""
    if n >= 5:
        if j == 0:
            c = 2 * b0 * n * p
            return {1: (0, -c), -1: (0, c)}
        s = abs(j)
        diag = 4 * a0 * n * s
        off = 2 * b0 * n * (p - 2 * s)
        if j > 0:
            return {j: (0, diag), j + 1: (0, -off)}
        return {j: (0, -diag), j - 1: (0, off)}
    if n == 4:
        return {j: (0, 16 * a0 * j), j - 1: (0, 8 * b0 * (p + 2 * j)), j + 1: (0, -8 * b0 * (p - 2 * j))}
    if n == 3:
        return {j - 1: (0, 3 * b0 * (p + 3 * j)), j + 1: (0, -3 * b0 * (p - 3 * j))}
    raise ValueError(f"no homological operator for n={n}")


def leading_hamiltonian(n, a0, b0, trunc_total, field):
    with field.context():
        terms = {(n, 0, 0): field.make(b0), (0, n, 0): field.make(b0)}
        if n >= 4:
            terms[(2, 2, 0)] = field.make(a0)
    return FormalSeries(terms, trunc_total, 0, field)


def _vec_to_series(vec, basis, field, trunc_total):
    coeffs = {}
    for j, c in vec.items():
        k, l = basis.exponent(j)
        coeffs[(k, l, 0)] = c
    return FormalSeries(coeffs, trunc_total, 0, field)


def _series_to_vec(s, basis, field):
    return {j: s[(k, l, 0)] for j, (k, l) in zip(basis.js, basis.items)}


@dataclass
class HomologicalOperator:
    """``L_p : H_p -> H_{p+1}`` with kernel and complement data."""

    n: int
    p: int
    a0: object
    b0: object
    field: object
    domain: MonomialBasis
    target: MonomialBasis
    matrix: dict  # (target j, domain j) -> complex scalar
    kernel: list  # domain vectors {j: c}
    complement: list  # target vectors {j: c}
    certificate: str = ""

    def apply(self, vec):
        """Image of a domain vector ``{j: c}``."""
        fld = self.field
        out = {}
        with fld.context():
            for (jt, jd), m in self.matrix.items():
                c = vec.get(jd)
                if c is None or c == 0:
                    continue
                out[jt] = out.get(jt, fld.zero()) + m * c
        return out

    def dense(self):
        """Matrix as a list of rows (target order by ``target.js``)."""
        z = self.field.zero()
        return [[self.matrix.get((jt, jd), z) for jd in self.domain.js] for jt in self.target.js]

    @property
    def codim(self):
        return len(self.complement)


def kernel_vector(n, p, a0, b0, field):
    """``[h_lead^(p/2)]_p`` (``n >= 4``) or ``h_lead^(p/3)`` (``n == 3``); ``None`` if absent."""
    if n == 3:
        if p % 3:
            return None
        e = p // 3
    else:
        if p % 2:
            return None
        e = p // 2
    basis = monomial_basis(n, p)
    top = max(k + l for k, l in basis.items)
    lead = leading_hamiltonian(n, a0, b0, max(top, n), field)
    power = lead ** e if e else FormalSeries.constant(1, top, 0, field)
    return _series_to_vec(power, basis, field)


def complement_vectors(n, g, field):
    """Basis of the fixed complement of ``L_{g-1}(H_{g-1})`` in ``H_g``."""
    one = field.one()
    if n == 3:
        if g % 3 == 1:
            return []
        if g % 2 == 0:
            return [{0: one}]
        return [{1: one, -1: one}]
    if g % 2 == 0:
        return [{0: one}, {1: one, -1: one}]
    return [{0: one}]


def _certificate(n, p, a0, b0, field):
    """Closed-form leading-block determinant; must be nonzero."""
    if n >= 5:
        if p % 2:
            # diagonal entries -2i b0 n (p - 2j + 2), j = 1..k+1, multiply to an odd double factorial
            k = (p - 1) // 2
            dfact = 1
            for i in range(1, 2 * k + 2, 2):
                dfact *= i
            val = (2 * b0 * n) ** (k + 1) * dfact
            label = f"|det| = (2 b0 n)^{k + 1} ({2 * k + 1})!!"
        else:
            k = p // 2
            val = (4 * a0 * n) ** k * factorial(k)
            label = f"|diag product| = (4 a0 n)^{k} {k}!"
        return val, label
    # n = 3, 4: leading minors are products of b0 times nonzero integers
    return b0, "b0 != 0"


def homological_matrix(n, p, a0, b0, field) -> HomologicalOperator:
    """Closed-form operator ``L_p`` with certified kernel and complement.

    Raises
    ------
    DegenerateLeadingTerm
        If ``b0`` vanishes, or ``a0`` vanishes for an even-grade ``n >= 5``
        solve (``p = 2 mod 4`` when ``n = 4``).
    """
    with field.context():
        a0 = field.real_scalar(a0)
        b0 = field.real_scalar(b0)
        if b0 == 0:
            raise DegenerateLeadingTerm("b0 = |h_n0| vanishes")
        if n >= 5 and p % 2 == 0 and a0 == 0:
            raise DegenerateLeadingTerm("a0 = h22 vanishes; even-grade solve is singular")
        if n == 4 and p % 4 == 2 and a0 == 0:
            raise DegenerateLeadingTerm("a0 = h22 vanishes; solve at this grade is singular for n = 4")
        domain = monomial_basis(n, p)
        target = monomial_basis(n, p + 1)
        tj = set(target.js)
        matrix = {}
        for jd in domain.js:
            for jt, (re, im) in closed_form_action(n, p, jd, a0, b0).items():
                if jt not in tj:
                    if re != 0 or im != 0:
                        raise CertificationError(f"L_{p} maps Q_{p},{jd} outside H_{p + 1}")
                    continue
                if re != 0 or im != 0:
                    matrix[(jt, jd)] = field.make(re, im)
        val, label = _certificate(n, p, a0, b0, field)
        if val == 0:
            raise CertificationError(f"leading block of L_{p} is singular ({label})")
    kv = kernel_vector(n, p, a0, b0, field)
    op = HomologicalOperator(
        n, p, a0, b0, field, domain, target, matrix,
        [kv] if kv is not None else [],
        complement_vectors(n, p + 1, field),
        label,
    )
    return op


def bracket_matrix(n, p, a0, b0, field):
    """``L_p`` computed from Poisson brackets (independent of the closed form)."""
    domain = monomial_basis(n, p)
    target = monomial_basis(n, p + 1)
    ctx = ResonanceContext(n)
    top = max(k + l for k, l in target.items) + 2
    lead = leading_hamiltonian(n, a0, b0, top + n, field)
    out = {}
    for jd, (k, l) in zip(domain.js, domain.items):
        q = FormalSeries.monomial(k, l, 0, 1, top + n, 0, field)
        img = poisson_bracket(q, lead).scale(field.make(0, 2))
        for (kk, ll, _j), c in img.items():
            if grade_of(kk, ll, ctx) == p + 1:
                jt = target.js[target.items.index((kk, ll))]
                out[(jt, jd)] = c
    return out


# ---------------------------------------------------------------------------
# the real linear solve


def _params(basis):
    ps = []
    for j in basis.js:
        if j == 0:
            ps.append(("re", 0))
        elif j > 0:
            ps.append(("re", j))
            ps.append(("im", j))
    return ps


def _param_vector(param, field):
    kind, j = param
    one = field.one()
    if j == 0:
        return {0: one}
    if kind == "re":
        return {j: one, -j: one}
    return {j: field.imag_unit(), -j: -field.imag_unit()}


def _components(vec, basis, field):
    """Real coordinates of a real-valued target vector (re c_0, re/im c_j for j > 0)."""
    zero = field.zero()
    out = []
    for j in basis.js:
        c = vec.get(j, zero)
        if j == 0:
            out.append(field.real(c))
        elif j > 0:
            out.append(field.real(c))
            out.append(field.imag(c))
    return out


def complement_project(op: HomologicalOperator, target_vec):
    """Split ``target = L_p(chi) + normal`` with ``normal`` in the complement.

    ``chi`` is real-valued and orthogonal to the kernel (minimal norm), which
    makes the decomposition unique.

    Returns
    -------
    (chi_vec, normal_vec, coeffs)
        Domain vector, target vector and the complement coefficients.
    """
    fld = op.field
    params = _params(op.domain)
    with fld.context():
        cols = []
        for prm in params:
            cols.append(_components(op.apply(_param_vector(prm, fld)), op.target, fld))
        for cv in op.complement:
            cols.append(_components(cv, op.target, fld))
        nrow = len(cols[0]) if cols else len(_components({}, op.target, fld))
        A = [[col[r] for col in cols] for r in range(nrow)]
        rhs = _components(target_vec, op.target, fld)
        zero_r = fld.real(fld.zero())
        for kv in op.kernel:
            row = []
            for kind, j in params:
                c = kv.get(j, fld.zero())
                w = fld.real(c) if kind == "re" else fld.imag(c)
                row.append(w if j == 0 else 2 * w)
            row.extend([zero_r] * len(op.complement))
            A.append(row)
            rhs.append(zero_r)
        if len(A) != len(cols):
            raise CertificationError(
                f"homological system at grade {op.p + 1} is {len(A)}x{len(cols)}, expected square"
            )
        if not cols:
            return {}, {}, []
        x = solve(A, rhs, fld)
        chi = {}
        for val, prm in zip(x, params):
            for j, c in _param_vector(prm, fld).items():
                chi[j] = chi.get(j, fld.zero()) + c * fld.make(val)
        coeffs = x[len(params):]
        normal = {}
        for d, cv in zip(coeffs, op.complement):
            for j, c in cv.items():
                normal[j] = normal.get(j, fld.zero()) + c * fld.make(d)
        # residual check
        img = op.apply(chi)
        worst = 0
        for j in op.target.js:
            r = img.get(j, fld.zero()) + normal.get(j, fld.zero()) - target_vec.get(j, fld.zero())
            worst = max(worst, fld.magnitude(r))
        scale = max([fld.magnitude(c) for c in target_vec.values()] + [1])
        if (fld.mode == "exact" and worst != 0) or (fld.mode == "float" and worst > fld.tol * scale):
            raise CertificationError(f"homological residual {worst} at grade {op.p + 1}")
    chi = {j: c for j, c in chi.items() if c != 0}
    normal = {j: c for j, c in normal.items() if c != 0}
    return chi, normal, coeffs


# ---------------------------------------------------------------------------
# normalisation driver


@dataclass
class GradeStep:
    grade: int
    generator: FormalSeries

    def to_json(self):
        return {"grade": self.grade, "generator": self.generator.to_json()}


@dataclass
class NormalFormResult:
    """Invariants, normalised Hamiltonian and diagnostics."""

    n: int | None
    regime: str
    a: list
    b: list
    normalized_h: FormalSeries
    rotation_angle: object = 0
    rotation_factor: object = None
    log: list = dc_field(default_factory=list)
    residuals: dict = dc_field(default_factory=dict)
    genericity: dict = dc_field(default_factory=dict)
    polar: PolarHamiltonian | None = None
    max_grade: int = 0
    certificates: dict = dc_field(default_factory=dict)
    extra: dict = dc_field(default_factory=dict)

    @property
    def field(self):
        return self.normalized_h.field

    def invariants(self):
        """All invariant coefficients as one flat list ``a + b``."""
        return list(self.a) + list(self.b)

    def to_json(self):
        fld = self.field
        fr = fld.format_real
        out = {
            "n": self.n,
            "a": [fr(v) for v in self.a],
            "b": [fr(v) for v in self.b],
            "rotation_angle": _fmt_float(self.rotation_angle),
            "residual_max": _fmt_float(max(self.residuals.values(), default=0)),
            "genericity": {k: fr(v) for k, v in self.genericity.items()},
            "max_grade": self.max_grade,
            "normalized_h": self.normalized_h.to_json(),
            "transform_log": [s.to_json() for s in self.log],
            "provenance": {"regime": self.regime},
        }
        if self.polar is not None:
            out["polar"] = self.polar.to_dict(lambda v: _fmt_float(v) if not isinstance(v, type(gmpy2.mpq(0))) else fr(v))
            out["polar"]["a"] = [_fmt_any(v, fld) for v in self.polar.a_coeffs]
            out["polar"]["b"] = [_fmt_any(v, fld) for v in self.polar.b_coeffs]
            out["polar"]["twist"] = [_fmt_any(v, fld) for v in self.polar.twist()]
        return out


def _fmt_float(v):
    if isinstance(v, type(gmpy2.mpq(0))):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return v
    if type(v).__name__ == "mpfr":
        return str(v)
    with gmpy2.context(gmpy2.get_context(), precision=256):
        return str(gmpy2.mpfr(v))


def _fmt_any(v, fld):
    if isinstance(v, type(gmpy2.mpq(0))) or isinstance(v, int):
        return _fmt_float(gmpy2.mpq(v))
    return _fmt_float(v)


def _tol_zero(fld, c, tol=None):
    if fld.mode == "exact":
        return c == 0
    with fld.context():
        return abs(c) <= (fld.tol if tol is None else tol)


def validate_hamiltonian(h: FormalSeries, ctx: ResonanceContext, tol=None) -> FormalSeries:
    """Check real-valuedness and resonance; drop certified float noise."""
    fld = h.field
    if not h.is_real_valued(tol):
        raise NotRealValued("Hamiltonian is not real-valued")
    keep = {}
    for (k, l, j), c in h.items():
        if not ctx.is_resonant(k, l):
            if _tol_zero(fld, c, tol) and fld.mode == "float":
                continue
            raise NotResonant(f"term z^{k} zbar^{l} is not resonant for n={ctx.n}")
        if k + l < 3 and j == 0:
            raise PreconditionError(f"term z^{k} zbar^{l} has order below 3")
        keep[(k, l, j)] = c
    return FormalSeries(keep, h.trunc_total, h.trunc_eps, fld, _raw=True)


def rotate_leading(h: FormalSeries, ctx: ResonanceContext):
    """Rotate ``z`` so that ``h_n0`` becomes ``|h_n0| > 0``.

    Returns
    -------
    (FormalSeries, angle, factor)
        Rotated series, ``theta = -arg(h_n0)/n`` and the unit factor
        ``conj(h_n0)/|h_n0|`` applied to the coefficient of ``Q_{.,1}``.

    Raises
    ------
    DegenerateLeadingTerm
        If ``h_n0 == 0``.
    """
    n = ctx.n
    fld = h.field
    c = h[(n, 0, 0)]
    if _tol_zero(fld, c) if fld.mode == "float" else c == 0:
        raise DegenerateLeadingTerm(f"h_{n}0 vanishes; the unique normal form does not apply")
    with fld.context():
        mod = fld.abs(c)
        u = fld.conj(c) / fld.make(mod)
        if fld.mode == "exact":
            with gmpy2.context(gmpy2.get_context(), precision=256):
                angle = -gmpy2.atan2(gmpy2.mpfr(c.im), gmpy2.mpfr(c.re)) / n
        else:
            angle = -gmpy2.atan2(c.imag, c.real) / n
    return apply_rotation(h, n, u), angle, u


def apply_rotation(h, n, u):
    """Multiply the coefficient of ``z^k zbar^l`` by ``u**((k-l)/n)``."""
    fld = h.field
    if u == fld.one():
        return h
    ubar = fld.conj(u)
    pows = {}

    def factor(j):
        if j not in pows:
            with fld.context():
                pows[j] = u ** j if j >= 0 else ubar ** (-j)
        return pows[j]

    return h.map_coeffs(lambda key, c: c * factor((key[0] - key[1]) // n))


def _grade_filter(h, ctx, M):
    return h.filter(lambda k, l, j: grade_of(k, l, ctx) <= M)


def _grade_vec(h, ctx, g, basis):
    vec = {}
    for (k, l, j), c in h.items():
        if j == 0 and grade_of(k, l, ctx) == g:
            vec[basis.js[basis.items.index((k, l))]] = c
    return vec


def _slices_equal(h1, h2, ctx, upto, tol=None):
    fld = h1.field
    d = (h1 - h2).filter(lambda k, l, j: grade_of(k, l, ctx) <= upto)
    if fld.mode == "exact":
        return d.is_zero()
    return d.max_abs() <= (fld.tol if tol is None else tol) * 16


def _leading(h, n):
    fld = h.field
    a0 = fld.real(h[(2, 2, 0)]) if n >= 4 else fld.real(fld.zero())
    b0 = fld.real(h[(n, 0, 0)])
    return a0, b0


def normalize_grade(h, ctx, g, M, a0, b0, eps_power=0, tol=None):
    """One homological step at grade ``g`` (eps power ``eps_power``)."""
    n = ctx.n
    fld = h.field
    p = g - 1
    op = homological_matrix(n, p, a0, b0, fld)
    target = {}
    for (k, l, j), c in h.items():
        if j == eps_power and grade_of(k, l, ctx) == g:
            target[op.target.js[op.target.items.index((k, l))]] = c
    chi_vec, normal, coeffs = complement_project(op, target)
    return op, chi_vec, normal, coeffs


def _extract_invariants(h, ctx, M):
    n = ctx.n
    fld = h.field
    a, b = [], []
    if n is None or n >= 4:
        for k in range(0, M - 1):
            a.append(fld.real(h[(k + 2, k + 2, 0)]))
        if n is not None:
            for k in range(0, (M - 2) // 2 + 1):
                b.append(fld.real(h[(n + 2 * k, 2 * k, 0)]))
    else:
        k = 0
        while 2 * k + 6 <= M:
            a.append(fld.real(h[(k + 3, k + 3, 0)]))
            k += 1
        k = 0
        while 2 * k + 3 <= M:
            b.append(fld.real(h[(3 + k, k, 0)]))
            k += 1
    return a, b


def check_shape(h: FormalSeries, n) -> list:
    """Monomials violating the normal-form shape (empty list when clean)."""
    bad = []
    for (k, l, j) in h.keys():
        if j:
            bad.append((k, l, j))
            continue
        if k == l:
            if n == 3 and (k - 3) % 3 == 2:
                bad.append((k, l, j))
            continue
        if n is None:
            bad.append((k, l, j))
            continue
        lo = min(k, l)
        if abs(k - l) != n:
            bad.append((k, l, j))
        elif n >= 4 and lo % 2:
            bad.append((k, l, j))
        elif n == 3 and lo % 3 == 2:
            bad.append((k, l, j))
    return bad


def _polar_lists(a, b, n, fld):
    exact = fld.mode == "exact"
    pa, pb = [], []
    with fld.context() if not exact else gmpy2.context(gmpy2.get_context(), precision=256):
        shift = 3 if n == 3 else 2
        for k, v in enumerate(a):
            pa.append(v * (gmpy2.mpq(2) ** (k + shift)) if exact else v * gmpy2.mpfr(2) ** (k + shift))
        for k, v in enumerate(b):
            e = Fraction(n, 2) + (k if n == 3 else 2 * k) if n else 0
            if e.denominator == 1 and exact:
                pb.append(2 * v * gmpy2.mpq(2) ** int(e))
            else:
                pb.append(2 * gmpy2.mpfr(v) * gmpy2.sqrt(gmpy2.mpfr(2)) ** int(2 * e))
    return pa, pb


def unique_normal_form(h: FormalSeries, ctx: ResonanceContext, tol=None, max_grade_override=None) -> NormalFormResult:
    """Normalise a real-valued resonant Hamiltonian to its unique form.

    Parameters
    ----------
    h : FormalSeries
        Real-valued, resonant, starting at order 3.
    ctx : ResonanceContext
        ``ctx.n is None`` selects the non-resonant path (``B = 0``).
    tol : real, optional
        Float tolerance; default ``2**(-prec/2)``.

    Returns
    -------
    NormalFormResult
    """
    fld = h.field
    h = validate_hamiltonian(h, ctx, tol)
    n = ctx.n
    N = h.trunc_total
    M = max_grade(n, N) if max_grade_override is None else max_grade_override

    if n is None:
        if any(k != l for (k, l, _j) in h.keys()):
            raise NotResonant("non-resonant context but off-diagonal terms present")
        hN = _grade_filter(h, ctx, M)
        a, b = _extract_invariants(hN, ctx, M)
        polar = to_polar(hN, None)
        polar.a_coeffs, polar.b_coeffs = _polar_lists(a, [], None, fld)
        return NormalFormResult(None, "nonresonant", a, [], hN, 0, fld.one(), [], {}, {}, polar, M)

    h = _grade_filter(h, ctx, M)
    h, angle, u = rotate_leading(h, ctx)
    a0, b0 = _leading(h, n)
    if n >= 4 and M >= 3 and _tol_zero(fld, a0):
        raise DegenerateLeadingTerm("a0 = h22 vanishes; required for n >= 4")
    log, residuals, certs = [], {}, {}
    g0 = 4 if n == 3 else 3
    for g in range(g0, M + 1):
        op, chi_vec, normal, coeffs = normalize_grade(h, ctx, g, M, a0, b0, 0, tol)
        certs[g] = op.certificate
        if not chi_vec:
            residuals[g] = 0
            continue
        chi = _vec_to_series(chi_vec, op.domain, fld, N)
        new = _grade_filter(lie_exp(-chi, h), ctx, M)
        if not _slices_equal(new, h, ctx, g - 1, tol):
            raise CertificationError(f"step at grade {g} changed lower grades")
        got = _grade_vec(new, ctx, g, op.target)
        worst = 0
        with fld.context():
            for j in op.target.js:
                r = got.get(j, fld.zero()) - normal.get(j, fld.zero())
                worst = max(worst, fld.magnitude(r))
        if fld.mode == "exact" and worst != 0:
            raise CertificationError(f"grade {g} not in complement after the step")
        residuals[g] = worst
        # snap the normalised grade onto the complement
        new = new.filter(lambda k, l, j, g=g: grade_of(k, l, ctx) != g) + _vec_to_series(normal, op.target, fld, N)
        h = new.truncate(N)
        log.append(GradeStep(g, chi))
    a, b = _extract_invariants(h, ctx, M)
    polar = to_polar(h, n)
    polar.a_coeffs, polar.b_coeffs = _polar_lists(a, b, n, fld)
    return NormalFormResult(
        n, ctx.regime, a, b, h, angle, u, log, residuals, {"a0": a0, "b0": b0}, polar, M, certs
    )


def replay_log(h: FormalSeries, result: NormalFormResult, ctx: ResonanceContext) -> FormalSeries:
    """Apply the rotation and generators of ``result`` to ``h``."""
    h = validate_hamiltonian(h, ctx)
    M = result.max_grade
    h = _grade_filter(h, ctx, M)
    if ctx.n is None:
        return h
    h = apply_rotation(h, ctx.n, result.rotation_factor)
    for step in result.log:
        h = _grade_filter(lie_exp(-step.generator, h), ctx, M)
    return h


def invariant_deviation(r1: NormalFormResult, r2: NormalFormResult):
    """Max absolute difference of the invariant sequences."""
    v1, v2 = r1.invariants(), r2.invariants()
    if len(v1) != len(v2):
        raise ValueError("results have different lengths")
    fld = r1.field
    worst = 0
    with fld.context():
        for x, y in zip(v1, v2):
            worst = max(worst, abs(x - y))
    return worst


def hamiltonian_invariance_check(h: FormalSeries, ctx: ResonanceContext, chi: FormalSeries, tol=None):
    """Deviation between invariants of ``h`` and of ``exp(L_chi) h``."""
    r1 = unique_normal_form(h, ctx, tol)
    h2 = lie_exp(chi, h) if not chi.is_zero() else h
    r2 = unique_normal_form(h2.truncate(h.trunc_total), ctx, tol)
    return invariant_deviation(r1, r2)


__all__ = [
    "GradeStep",
    "HomologicalOperator",
    "MonomialBasis",
    "NormalFormResult",
    "basis_dimension",
    "bracket_matrix",
    "check_shape",
    "closed_form_action",
    "complement_project",
    "complement_vectors",
    "enumerate_grade",
    "hamiltonian_invariance_check",
    "homological_matrix",
    "invariant_deviation",
    "kernel_vector",
    "max_grade",
    "monomial_basis",
    "replay_log",
    "rotate_leading",
    "unique_normal_form",
    "validate_hamiltonian",
]
