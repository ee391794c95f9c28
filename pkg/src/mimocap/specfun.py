"""Special-function kernels for the closed-form capacity.

The exponential integral only ever appears in the product ``exp(x) * E_n(x)``.
At low SNR the argument ``x = 1/f`` is large enough for ``exp(x)`` to overflow,
so only the fused, scaled function is exposed here.
"""

import math

from scipy import special

from mimocap.errors import DomainError, NumericalError

EULER_GAMMA = 0.5772156649015329

# Below this argument the power series is used, above it the continued fraction.
SERIES_CROSSOVER = 1.0

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10_000


def gamma_ln(x):
    """Natural log of the gamma function for positive real ``x``."""
    if not math.isfinite(x) or x <= 0:
        raise DomainError(f"gamma_ln requires a finite x > 0, got {x!r}")
    return math.lgamma(x)


def upper_incomplete_gamma(s, x):
    """Upper incomplete gamma ``Gamma(s, x) = int_x^inf t^(s-1) e^(-t) dt``.

    Args:
        s: Shape parameter, strictly positive.
        x: Lower integration limit, non-negative.

    Returns:
        The (non-regularized) upper incomplete gamma value.
    """
    if not s > 0 or not math.isfinite(s):
        raise DomainError(f"upper_incomplete_gamma requires s > 0, got {s!r}")
    if not x >= 0:
        raise DomainError(f"upper_incomplete_gamma requires x >= 0, got {x!r}")
    if x == 0:
        return math.gamma(s) if s < 171 else math.inf
    regularized = special.gammaincc(s, x)
    if regularized == 0.0:
        return 0.0
    return math.exp(math.lgamma(s) + math.log(regularized))


def _scaled_en_series(n, x):
    # E_n(x) = (-x)^(n-1)/(n-1)! * (psi(n) - ln x) - sum_{k != n-1} (-x)^k / ((k-n+1) k!)
    psi = -EULER_GAMMA + math.fsum(1.0 / i for i in range(1, n))
    terms = []
    term = 1.0  # (-x)^k / k!
    k = 0
    while True:
        if k == n - 1:
            terms.append(term * (psi - math.log(x)))
        else:
            terms.append(-term / (k - n + 1))
        k += 1
        term *= -x / k
        # x <= 1 and E_n(x) >= exp(-1)/(n+1), so an absolute cut is enough
        if k > n and abs(term) < 1e-18:
            break
        if k > _MAX_ITER:
            raise NumericalError("E_n power series failed to converge")
    return math.exp(x) * math.fsum(terms)


def _scaled_en_continued_fraction(n, x):
    # modified Lentz evaluation of exp(x) E_n(x) = 1/(x+n- 1*n/(x+n+2- 2(n+1)/(x+n+4- ...)))
    b = x + n
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (n - 1 + i)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise NumericalError("E_n continued fraction failed to converge")


def exp_integral_scaled(n, x):
    """Return ``exp(x) * E_n(x)`` without forming either factor separately.

    ``x = inf`` is admitted and returns 0, which is the limit of the product.

    Args:
        n: Order, integer >= 1.
        x: Argument, >= 0 (> 0 when ``n == 1``), or ``math.inf``.

    Returns:
        The scaled exponential integral.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"order must be an integer >= 1, got {n!r}")
    n = int(n)
    if math.isnan(x) or x < 0:
        raise DomainError(f"argument must be >= 0, got {x!r}")
    if x == math.inf:
        return 0.0
    if x == 0:
        if n == 1:
            raise DomainError("E_1 diverges at x = 0")
        return 1.0 / (n - 1)
    if x <= SERIES_CROSSOVER:
        return _scaled_en_series(n, x)
    return _scaled_en_continued_fraction(n, x)


def scaled_en_partial_sum(t, x):
    """Sum ``exp(x) E_j(x)`` for ``j = 1..t+1``.

    This is the inner sum over ``k`` in the closed-form capacity with the index
    flipped (``j = t + 2 - k``).
    """
    if x == math.inf:
        return 0.0
    return math.fsum(exp_integral_scaled(j, x) for j in range(1, t + 2))


def log_moment_integral(a, n, c):
    """Closed form of ``int_0^inf ln(1 + a y) y^(n-1) exp(-c y) dy``.

    Uses ``Gamma(k-n, z) = z^(k-n) E_(n-k+1)(z)`` with ``z = c/a`` so the
    negative-order incomplete gamma never has to be evaluated, which collapses
    the identity to ``Gamma(n) / c^n * sum_j exp(z) E_j(z)``.
    """
    if not a > 0 or not c > 0:
        raise DomainError(f"log_moment_integral requires a > 0 and c > 0, got a={a!r}, c={c!r}")
    if int(n) != n or n < 1:
        raise DomainError(f"n must be an integer >= 1, got {n!r}")
    n = int(n)
    z = c / a
    prefactor = math.exp(math.lgamma(n) - n * math.log(c))
    return prefactor * scaled_en_partial_sum(n - 1, z)
