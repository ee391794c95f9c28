"""Exact ergodic capacity for i.i.d. Rayleigh fading with residual impairments.

The unordered eigenvalue of the ``q x q`` complex Wishart matrix ``W`` has density

    p(lam) = K * sum_{n,m} (-1)^(n+m) lam^t e^(-lam) det(Omega^(n,m)),
    t = n + m + p - q - 2,

where ``Omega^(n,m)`` is the ``(n, m)`` minor of the Hankel matrix of factorials
``[(i + j + p - q - 2)!]`` scaled by ``q^(-1/(q-1))`` per entry. Integrating
``log(1 + f lam) - log(1 + g lam)`` against that density term by term gives the
closed form as a finite sum of scaled exponential integrals.

Coefficients are built with exact integer arithmetic and only rounded to floats
once, after the alternating sum has been collapsed per power of ``lam``.
"""

import functools
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate

from mimocap.errors import (
    DomainError,
    NoCeilingError,
    NumericalError,
    UnsupportedConfigurationError,
)
from mimocap.model import ceiling_params, prop1_params
from mimocap.specfun import scaled_en_partial_sum

MAX_Q = 8
LOG2E = 1.0 / math.log(2.0)

# tolerated roundoff before a negative density value is treated as a bug
_PDF_NEGATIVE_GUARD = 1e-10


@dataclass(frozen=True)
class SpectrumTerm:
    n: int
    m: int
    t: int
    sign: int  # sign of (-1)^(n+m) det(Omega)
    log_abs_det: float  # log |det(Omega)|, -inf when the minor is singular


@dataclass(frozen=True)
class SpectrumCoefficients:
    """Precomputed data for the unordered Wishart eigenvalue density.

    Attributes:
        q, p: min and max of (Nt, Nr).
        log_K: log of the normalization constant K.
        terms: the q*q signed minor determinants, row-major in (n, m).
        powers: distinct exponents t present in the density, ascending.
        poly: float coefficient c_t of ``lam^t e^-lam`` for each entry of ``powers``.
        moment_weights: ``c_t * t!``, i.e. the mass each power contributes.
    """

    q: int
    p: int
    log_K: float
    terms: tuple
    powers: tuple
    poly: tuple
    moment_weights: tuple

    def __post_init__(self):
        if len(self.terms) != self.q * self.q:
            raise ValueError("coefficient table must hold q*q terms")


def _exact_det(matrix):
    """Determinant of an integer matrix by fraction-free (Bareiss) elimination."""
    a = [list(row) for row in matrix]
    size = len(a)
    if size == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(size - 1):
        if a[k][k] == 0:
            swap = next((r for r in range(k + 1, size) if a[r][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, size):
            for j in range(k + 1, size):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[-1][-1]


def _alpha(i, j, n, m):
    if i < n and j < m:
        return i + j - 2
    if i >= n and j >= m:
        return i + j
    return i + j - 1


def _exact_minor_det(q, p, n, m):
    """Integer determinant of the (q-1)x(q-1) factorial matrix for index (n, m)."""
    rows = [
        [math.factorial(_alpha(i, j, n, m) + p - q) for j in range(1, q)]
        for i in range(1, q)
    ]
    return _exact_det(rows)


@functools.lru_cache(maxsize=None)
def _coefficients_for(q, p):
    k_inverse = 1
    for i in range(1, q + 1):
        k_inverse *= math.factorial(p - i) * math.factorial(q - i)

    # q^(-1/(q-1)) on every entry of a (q-1)x(q-1) matrix scales det by 1/q;
    # for q = 1 the matrix is empty and det is taken as 1 with no scaling
    det_scale = Fraction(1, q) if q > 1 else Fraction(1)

    terms = []
    by_power = {}
    for n in range(1, q + 1):
        for m in range(1, q + 1):
            t = n + m + p - q - 2
            signed = (-1) ** (n + m) * _exact_minor_det(q, p, n, m)
            log_abs = math.log(abs(signed)) + math.log(det_scale) if signed else -math.inf
            terms.append(SpectrumTerm(n, m, t, 1 if signed >= 0 else -1, log_abs))
            by_power[t] = by_power.get(t, 0) + signed

    powers = tuple(sorted(by_power))
    exact_poly = [Fraction(by_power[t], k_inverse) * det_scale for t in powers]
    exact_weights = [c * math.factorial(t) for c, t in zip(exact_poly, powers)]
    total_mass = sum(exact_weights)
    if total_mass != 1:
        raise NumericalError(f"eigenvalue density for q={q}, p={p} has mass {total_mass}, not 1")

    return SpectrumCoefficients(
        q=q,
        p=p,
        log_K=-math.log(k_inverse),
        terms=tuple(terms),
        powers=powers,
        poly=tuple(float(c) for c in exact_poly),
        moment_weights=tuple(float(w) for w in exact_weights),
    )


def build_spectrum_coefficients(ant):
    """Coefficient table of the unordered eigenvalue density for ``ant``.

    Raises:
        UnsupportedConfigurationError: if ``min(Nt, Nr) > 8``. Use the
            Monte-Carlo estimator for larger arrays.
    """
    if ant.q > MAX_Q:
        raise UnsupportedConfigurationError(
            f"closed form is validated for min(Nt, Nr) <= {MAX_Q}, got {ant.q} ({ant}); "
            "use the Monte-Carlo estimator instead"
        )
    return _coefficients_for(ant.q, ant.p)


def eigen_pdf(lam, coef):
    """Density of an unordered eigenvalue of W, evaluated at ``lam``.

    Accepts a scalar or a numpy array.
    """
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(lam_arr < 0) or np.any(np.isnan(lam_arr)):
        raise DomainError("eigenvalue must be >= 0")
    powers = np.array(coef.powers, dtype=float)
    poly = np.array(coef.poly)
    flat = lam_arr.reshape(-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_lam = np.log(flat)
        # lam^t e^-lam in log space; lam = 0 gives exp(-inf) = 0 except for t = 0
        log_mag = np.where(powers[:, None] == 0, 0.0, powers[:, None] * log_lam[None, :]) - flat[None, :]
    contrib = poly[:, None] * np.exp(log_mag)
    # sum with largest magnitudes last to limit roundoff in the alternating series
    order = np.argsort(np.abs(contrib), axis=0)
    values = np.take_along_axis(contrib, order, axis=0).sum(axis=0)
    scale = np.abs(contrib).sum(axis=0)
    too_negative = values < -_PDF_NEGATIVE_GUARD * np.maximum(scale, 1.0)
    if np.any(too_negative):
        raise NumericalError(
            f"eigenvalue density is negative beyond roundoff at lam={flat[too_negative][0]!r}"
        )
    values = np.maximum(values, 0.0).reshape(lam_arr.shape)
    return float(values) if values.ndim == 0 else values


def _capacity_from_fg(coef, f, g):
    inv_f = 1.0 / f
    inv_g = math.inf if g == 0 else 1.0 / g
    parts = [
        w * (scaled_en_partial_sum(t, inv_f) - scaled_en_partial_sum(t, inv_g))
        for t, w in zip(coef.powers, coef.moment_weights)
    ]
    capacity = coef.q * LOG2E * math.fsum(parts)
    if not math.isfinite(capacity):
        raise NumericalError(f"closed-form capacity is not finite (f={f!r}, g={g!r})")
    if capacity < 0:
        if capacity < -1e-12:
            raise NumericalError(f"closed-form capacity is negative: {capacity!r}")
        capacity = 0.0
    return capacity


def ergodic_capacity_closed(rho, ant, imp):
    """Exact ergodic capacity in bits per channel use.

    Args:
        rho: Linear SNR, > 0.
        ant: Antenna configuration with ``min(Nt, Nr) <= 8``.
        imp: Impairment levels.
    """
    coef = build_spectrum_coefficients(ant)
    f, g = prop1_params(rho, ant, imp)
    return _capacity_from_fg(coef, f, g)


def capacity_ceiling(ant, imp):
    """Finite limit of the ergodic capacity as ``rho -> inf``.

    With ``delta_r = 0`` every eigenmode's SINR saturates at ``1/delta_t^2``,
    which gives ``q log2(1 + 1/delta_t^2)`` directly.
    """
    if imp.is_ideal:
        raise NoCeilingError("ideal hardware has no capacity ceiling")
    if imp.delta_r == 0:
        return ant.q * math.log2(1.0 + 1.0 / imp.delta_t**2)
    coef = build_spectrum_coefficients(ant)
    f_hat, g_hat = ceiling_params(ant, imp)
    return _capacity_from_fg(coef, f_hat, g_hat)


# the alternating power sum in the density carries ~1e-10 absolute noise at
# q = 8, so tighter targets only trigger roundoff warnings
QUAD_EPSREL = 1e-10
QUAD_EPSABS = 1e-14
QUAD_MAX_ERR = 1e-8


def ergodic_capacity_quadrature(rho, ant, imp):
    """Ergodic capacity by adaptive quadrature of ``q E[log2(1 + sinr(lam))]``.

    Independent of the exponential-integral algebra; only the density is shared.
    """
    coef = build_spectrum_coefficients(ant)
    f, g = prop1_params(rho, ant, imp)

    def integrand(lam):
        gain = math.log1p(f * lam) - math.log1p(g * lam)
        return gain * eigen_pdf(lam, coef)

    # the density lives on roughly [0, (sqrt(p)+sqrt(q))^2]; split there and at
    # decades above the knee of the log so each panel is smooth
    bulk = (math.sqrt(ant.p) + math.sqrt(ant.q)) ** 2
    breaks = {bulk, 4.0 * bulk + 40.0}
    knee = 1.0 / f
    while knee < bulk:
        breaks.add(knee)
        knee *= 10.0
    breaks = sorted(breaks)
    edges = [0.0] + breaks + [math.inf]
    pieces = []
    errors = []
    with warnings.catch_warnings():
        # roundoff warnings at extreme SNRs are judged by the error estimate below
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in zip(edges[:-1], edges[1:]):
            value, err = integrate.quad(integrand, lo, hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=400)
            pieces.append(value)
            errors.append(err)
    total = math.fsum(pieces)
    if sum(errors) > QUAD_MAX_ERR * max(abs(total), 1e-6):
        raise NumericalError(f"quadrature error estimate {sum(errors):.3g} too large for value {total:.6g}")
    capacity = coef.q * LOG2E * total
    if not math.isfinite(capacity):
        raise NumericalError("quadrature capacity is not finite")
    return max(capacity, 0.0)
