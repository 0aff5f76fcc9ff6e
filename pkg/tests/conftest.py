import random

import pytest
from hypothesis import HealthCheck, settings

from resnf.scalars import EXACT, FloatField, QQi
from resnf.series import FormalSeries

settings.register_profile(
    "resnf", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("resnf")

F256 = FloatField(256)


def series(terms, N, E=0, field=EXACT):
    """Series from ``{(k, l[, j]): value}``; tuples are ``(re, im)``."""
    coeffs = {}
    for key, v in terms.items():
        coeffs[key] = QQi(*v) if isinstance(v, tuple) else QQi(v)
    s = FormalSeries(coeffs, N, E, EXACT)
    return s if field is EXACT else s.to_field(field)


def real_pair(k, l, re, im=0, j=0):
    """Terms ``c z^k zbar^l + conj(c) z^l zbar^k`` as a dict."""
    if k == l:
        return {(k, l, j): (re, 0)}
    return {(k, l, j): (re, im), (l, k, j): (re, -im)}


@pytest.fixture
def rng():
    return random.Random(20261015)
