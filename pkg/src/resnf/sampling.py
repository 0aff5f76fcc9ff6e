"""Seeded random real-valued series for tests, ``verify`` and benchmarks."""
from __future__ import annotations

import random
from fractions import Fraction

from .scalars import EXACT, QQi
from .series import FormalSeries


def _rational(rng, size=5, den=4):
    return Fraction(rng.randint(-size, size), rng.randint(1, den))


def random_real_series(trunc_total, rng: random.Random, n=None, trunc_eps=0, lo=3, field=EXACT,
                       density=0.8, resonant_only=False, size=5):
    """Random real-valued series with small rational coefficients.

    Parameters
    ----------
    trunc_total : int
        Largest ``k + l``.
    rng : random.Random
        Source of randomness; the output depends only on its state.
    n : int, optional
        With ``resonant_only`` keep only ``k = l (mod n)`` (``k = l`` when
        ``n`` is None).
    lo : int
        Smallest joint order ``k + l + j``; terms with ``k + l < 2`` are skipped.
    density : float
        Probability of keeping each admissible monomial pair.
    """
    c = {}
    for k in range(trunc_total + 1):
        for l in range(k, trunc_total + 1 - k):
            for j in range(trunc_eps + 1):
                if k + l < 2 or k + l + j < lo:
                    continue
                if resonant_only and (((k - l) % n) if n else (k != l)):
                    continue
                if rng.random() >= density:
                    continue
                re = _rational(rng, size)
                im = Fraction(0) if k == l else _rational(rng, size)
                if re == 0 and im == 0:
                    continue
                c[(k, l, j)] = QQi(re, im)
                c[(l, k, j)] = QQi(re, -im)
    s = FormalSeries(c, trunc_total, trunc_eps, EXACT)
    return s if field.mode == "exact" else s.to_field(field)


_PYTHAGOREAN = [(1, 0), (0, 1), (-1, 0), (3, 4), (4, -3), (-3, 4), (5, 12), (-12, 5), (8, -15)]


def random_generic_hamiltonian(n, trunc_total, rng: random.Random, trunc_eps=0, field=EXACT,
                               resonant_only=True, density=0.8):
    """Random Hamiltonian satisfying the genericity conditions for resonance ``n``.

    ``h_n0`` is a random Gaussian integer with integer modulus and, for
    ``n >= 4``, ``h_22`` a random nonzero rational.
    """
    h = random_real_series(trunc_total, rng, n, trunc_eps, 3, EXACT, density, resonant_only)
    c = dict(h.items())
    # Gaussian integers of integer modulus keep the leading rotation exact
    re, im = rng.choice(_PYTHAGOREAN)
    scale = rng.randint(1, 3)
    hn = QQi(scale * re, scale * im)
    c[(n, 0, 0)] = hn
    c[(0, n, 0)] = hn.conjugate()
    if n >= 4:
        a = 0
        while a == 0:
            a = _rational(rng)
        c[(2, 2, 0)] = QQi(a)
    s = FormalSeries(c, trunc_total, trunc_eps, EXACT)
    return s if field.mode == "exact" else s.to_field(field)


__all__ = ["random_generic_hamiltonian", "random_real_series"]
