"""Low-SNR metrics and large-antenna approximations of the impaired capacity."""

import math
from dataclasses import dataclass

from mimocap.errors import DomainError, NoCeilingError, NumericalError

LN2 = math.log(2.0)
LOG2E = 1.0 / LN2


@dataclass(frozen=True)
class LowSnrMetrics:
    """First- and second-order behaviour of capacity (bits) around rho = 0.

    ``c_dot_0`` and ``c_ddot_0`` are derivatives of the capacity in bits with
    respect to the linear SNR.
    """

    eb_n0_min: float
    s0: float
    c_dot_0: float
    c_ddot_0: float

    @property
    def eb_n0_min_db(self):
        return 10.0 * math.log10(self.eb_n0_min)


@dataclass(frozen=True)
class DeterministicEquivalent:
    rho1: float
    rho2: float
    l_param: float
    capacity_approx: float


def low_snr_metrics(ant, imp):
    """Minimum Eb/N0 and wideband slope for i.i.d. Rayleigh fading.

    ``Eb/N0_min = ln 2 / Nr`` regardless of the impairments; they only enter the
    slope ``S0 = 2 Nt Nr / ((2 dt^2 + 1)(Nt + Nr) + 2 dr^2 Nt)``.
    """
    nt, nr = ant.nt, ant.nr
    dt2, dr2 = imp.delta_t**2, imp.delta_r**2
    c_dot_0 = nr / LN2
    c_ddot_0 = -(nr / LN2) * ((2 * dt2 + 1) * (nt + nr) / nt + 2 * dr2)
    return LowSnrMetrics(
        eb_n0_min=LN2 / nr,
        s0=2 * nt * nr / ((2 * dt2 + 1) * (nt + nr) + 2 * dr2 * nt),
        c_dot_0=c_dot_0,
        c_ddot_0=c_ddot_0,
    )


def low_snr_capacity_approx(eb_n0, metrics):
    """Capacity linearized in Eb/N0 (dB) about its minimum.

    Values below ``eb_n0_min`` come out negative and are returned unchanged;
    callers can detect that region with ``eb_n0 < metrics.eb_n0_min``.
    """
    if not eb_n0 > 0:
        raise DomainError(f"eb_n0 must be > 0, got {eb_n0!r}")
    return metrics.s0 * math.log2(eb_n0 / metrics.eb_n0_min)


def capacity_large_nt(rho, nr, imp):
    """Capacity limit as Nt grows with Nr fixed: ``(1/Nt) H H^H -> I``."""
    if not rho > 0:
        raise DomainError(f"rho must be > 0, got {rho!r}")
    if nr < 1:
        raise DomainError(f"nr must be >= 1, got {nr!r}")
    sinr = rho / (rho * imp.delta_t**2 + rho * imp.delta_r**2 + 1.0)
    return nr * math.log2(1.0 + sinr)


def capacity_large_nr(nt, imp):
    """Capacity limit as Nr grows with Nt fixed; depends on ``delta_t`` only."""
    if nt < 1:
        raise DomainError(f"nt must be >= 1, got {nt!r}")
    if imp.delta_t == 0:
        raise NoCeilingError("with an ideal transmitter capacity grows without bound in Nr")
    return nt * math.log2(1.0 + 1.0 / imp.delta_t**2)


def _branch(snr, beta, l_param):
    """Fixed point and ``fixed_point / snr`` for one classical-capacity term.

    ``snr`` is the per-term effective SNR (noise folded in). The fixed point is
    the positive root of ``x^2 - (snr L - 1/beta) x - snr/beta = 0``; the ratio
    is evaluated in rationalized form so it stays exact as ``snr -> 0`` where it
    tends to 1.
    """
    inv_beta = 1.0 / beta
    b = snr * l_param - inv_beta
    disc = b * b + 4.0 * snr * inv_beta
    if disc < 0:
        raise NumericalError(f"negative discriminant {disc!r} in deterministic equivalent")
    root = math.sqrt(disc)
    if b >= 0:
        fixed = 0.5 * (b + root)
    else:
        # avoids cancellation of b + root when b < 0
        fixed = 2.0 * snr * inv_beta / (root - b)
    ratio = 2.0 * inv_beta / (root - b)
    return fixed, ratio


def deterministic_equivalent(rho, ant, imp):
    """Large-system approximation of the capacity at fixed ``beta = Nr/Nt``.

    The capacity is the difference of two classical log-det terms with effective
    SNRs ``s1 = rho (1 + dt^2) / (1 + rho dr^2)`` and ``s2 = rho dt^2 / (1 + rho dr^2)``;
    each gets its own fixed point (``rho1``, ``rho2``). The result approximates
    the true ergodic capacity up to an ``O(1/Nt)`` error and is not exact at any
    finite array size.
    """
    if not rho > 0:
        raise DomainError(f"rho must be > 0, got {rho!r}")
    beta_exact = ant.beta
    l_exact = 1 - 1 / beta_exact
    beta = float(beta_exact)
    l_param = float(l_exact)

    noise = 1.0 + rho * imp.delta_r**2
    s1 = rho * (1.0 + imp.delta_t**2) / noise
    s2 = rho * imp.delta_t**2 / noise
    rho1, ratio1 = _branch(s1, beta, l_param)
    rho2, ratio2 = _branch(s2, beta, l_param)

    bracket = (
        math.log2((noise + rho * (1.0 + imp.delta_t**2) / (1.0 + beta * rho1))
                  / (noise + rho * imp.delta_t**2 / (1.0 + beta * rho2)))
        + (math.log2(1.0 + beta * rho1) - math.log2(1.0 + beta * rho2)) / beta
        + LOG2E * (ratio1 - ratio2)
    )
    capacity = ant.nr * bracket
    if not math.isfinite(capacity):
        raise NumericalError("deterministic equivalent is not finite")
    return DeterministicEquivalent(
        rho1=rho1, rho2=rho2, l_param=l_param, capacity_approx=max(capacity, 0.0)
    )


def relative_capacity_gap(impaired, ideal):
    """``(C_imp - C_ideal) / C_ideal``, a diagnostic for fixed-ratio sweeps."""
    if ideal <= 0:
        raise DomainError("ideal capacity must be positive")
    return (impaired - ideal) / ideal
