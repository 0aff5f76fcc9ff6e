"""Normal forms in symplectic polar coordinates.

With ``x = sqrt(2I) cos(phi)`` and ``y = sqrt(2I) sin(phi)`` we have
``z zbar = 2I`` and ``z^n + zbar^n = 2 (2I)^(n/2) cos(n phi)``.  A series of
the shape ``P(z zbar) + (z^n + zbar^n) Q(z zbar)`` therefore becomes
``H(I, phi) = A~(I) + B~(I) cos(n phi)``.

Sign of the twist
-----------------
Because the time-one map of ``h`` moves ``z`` by ``-2i dh/dzbar``, a
function of the action alone generates ``phi' = -dH/dI``.  The rotation
number of ``R_alpha o Phi_H`` at action ``I`` is therefore
``omega(I) = alpha - dH/dI``; :meth:`PolarHamiltonian.twist` uses this.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import gmpy2

from .errors import PreconditionError
from .scalars import EXACT
from .series import FormalSeries


@dataclass
class PolarHamiltonian:
    """``H(I, phi) = sum A[e] I^e + cos(n phi) sum B[e] I^e``.

    Exponents are :class:`fractions.Fraction` (half-integers occur for odd
    ``n``).  Coefficients are real: ``mpq`` when exact, ``mpfr`` otherwise.
    """

    n: int | None
    A: dict = dc_field(default_factory=dict)
    B: dict = dc_field(default_factory=dict)
    a_coeffs: list = dc_field(default_factory=list)
    b_coeffs: list = dc_field(default_factory=list)

    def twist(self, count=None):
        """``omega_k`` for ``k >= 1`` from ``omega(I) = alpha - dH/dI`` (phi-free part)."""
        out = []
        exps = sorted(e for e in self.A if e.denominator == 1)
        top = int(max(exps)) - 1 if exps else 0
        count = top if count is None else count
        for k in range(1, count + 1):
            c = self.A.get(Fraction(k + 1), 0)
            out.append(-(k + 1) * c)
        return out

    def evaluate(self, I, phi, prec=256):
        with gmpy2.context(gmpy2.get_context(), precision=prec):
            I = gmpy2.mpfr(I)
            total = gmpy2.mpfr(0)
            for e, c in self.A.items():
                total += gmpy2.mpfr(c) * _pow(I, e)
            if self.B:
                cs = gmpy2.cos(self.n * gmpy2.mpfr(phi))
                for e, c in self.B.items():
                    total += gmpy2.mpfr(c) * _pow(I, e) * cs
            return total

    def to_dict(self, fmt):
        return {
            "n": self.n,
            "A": {str(e): fmt(c) for e, c in sorted(self.A.items())},
            "B": {str(e): fmt(c) for e, c in sorted(self.B.items())},
        }


def _pow(I, e):
    if e.denominator == 1:
        return I ** int(e)
    return gmpy2.sqrt(I) ** int(2 * e)


def _two_pow(e, exact):
    """``2**e`` for a half-integer ``e``; exact when ``e`` is an integer."""
    if e.denominator == 1:
        return gmpy2.mpq(2) ** int(e) if exact else gmpy2.mpfr(2) ** int(e)
    return gmpy2.sqrt(gmpy2.mpfr(2)) ** int(2 * e)


def split_shape(h: FormalSeries, n):
    """Return ``(P, Q)`` with ``h = sum P[s] (z zbar)^s + (z^n + zbar^n) sum Q[s] (z zbar)^s``.

    Raises
    ------
    PreconditionError
        If ``h`` is not of that shape.
    """
    fld = h.field
    P, Q = {}, {}
    for (k, l, j), c in h.items():
        if j:
            raise PreconditionError("polar form is defined for eps-free series")
        if k == l:
            P[k] = c
        elif n is not None and k - l == n:
            Q[l] = c
        elif n is not None and l - k == n:
            continue
        else:
            raise PreconditionError(f"term z^{k} zbar^{l} is outside the normal-form shape")
    with fld.context():
        for s, c in Q.items():
            partner = h[(s, s + n, 0)]
            if not fld.close(partner, c) if fld.mode == "float" else partner != c:
                raise PreconditionError("z^n and zbar^n parts differ; not of normal-form shape")
    return P, Q


def to_polar(h: FormalSeries, n) -> PolarHamiltonian:
    """``H(I, phi)`` for ``h`` of shape ``P(z zbar) + (z^n + zbar^n) Q(z zbar)``."""
    exact = h.field.mode == "exact"
    P, Q = split_shape(h, n)
    fld = h.field
    A, B = {}, {}
    ctx = fld.context() if not exact else gmpy2.context(gmpy2.get_context(), precision=256)
    with ctx:
        for s, c in P.items():
            A[Fraction(s)] = fld.real(c) * _two_pow(Fraction(s), exact)
        for s, c in Q.items():
            e = Fraction(n, 2) + s
            B[e] = fld.real(c) * 2 * _two_pow(e, exact)
    return PolarHamiltonian(n, A, B)


def from_polar(H: PolarHamiltonian, trunc_total, field=None) -> FormalSeries:
    """Inverse of :func:`to_polar`."""
    field = field or EXACT
    exact = field.mode == "exact"
    coeffs = {}
    ctx = field.context() if not exact else gmpy2.context(gmpy2.get_context(), precision=256)
    with ctx:
        for e, c in H.A.items():
            if e.denominator != 1:
                raise PreconditionError("phi-free part must have integer exponents")
            coeffs[(int(e), int(e), 0)] = c / _two_pow(e, exact)
        for e, c in H.B.items():
            s = e - Fraction(H.n, 2)
            if s.denominator != 1 or s < 0:
                raise PreconditionError(f"exponent {e} does not match cos({H.n} phi)")
            v = c / (2 * _two_pow(e, exact))
            if exact and not isinstance(v, type(gmpy2.mpq(0))):
                raise PreconditionError("half-integer powers of 2 need float mode")
            coeffs[(H.n + int(s), int(s), 0)] = v
            coeffs[(int(s), H.n + int(s), 0)] = v
        coeffs = {k: field.make(v) for k, v in coeffs.items()}
    return FormalSeries(coeffs, trunc_total, 0, field)


__all__ = ["PolarHamiltonian", "from_polar", "split_shape", "to_polar"]
