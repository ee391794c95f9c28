"""System configuration and the residual-impairment signal model.

Received signal: ``y = H (s + eta_t) + eta_r + nu`` where the transmit distortion
has per-antenna power ``delta_t**2 * q_n`` and the receive distortion has power
``delta_r**2 * tr(Q)`` on every receive antenna. Noise is normalized to unit
power, so the SNR ``rho`` equals the total transmit power ``tr(Q)``.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

from mimocap.errors import DomainError


@dataclass(frozen=True)
class ImpairmentConfig:
    """Transceiver distortion levels (EVM proportionality constants)."""

    delta_t: float = 0.0
    delta_r: float = 0.0

    def __post_init__(self):
        for name in ("delta_t", "delta_r"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise DomainError(f"{name} must be finite and >= 0, got {value!r}")

    @property
    def is_ideal(self):
        return self.delta_t == 0 and self.delta_r == 0


IDEAL = ImpairmentConfig(0.0, 0.0)


@dataclass(frozen=True)
class AntennaConfig:
    nt: int
    nr: int

    def __post_init__(self):
        for name in ("nt", "nr"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise DomainError(f"{name} must be a positive integer, got {value!r}")

    @property
    def q(self):
        return min(self.nt, self.nr)

    @property
    def p(self):
        return max(self.nt, self.nr)

    @property
    def beta(self):
        """Receive-to-transmit antenna ratio, kept exact."""
        return Fraction(self.nr, self.nt)

    def __str__(self):
        return f"{self.nr}x{self.nt}"


def db_to_linear(snr_db):
    return 10.0 ** (snr_db / 10.0)


def linear_to_db(rho):
    if not rho > 0:
        raise DomainError(f"linear SNR must be > 0, got {rho!r}")
    return 10.0 * math.log10(rho)


@dataclass(frozen=True)
class SnrSpec:
    """Linear SNR (= effective signal power with unit-power noise)."""

    rho: float

    def __post_init__(self):
        if not self.rho > 0 or not math.isfinite(self.rho):
            raise DomainError(f"rho must be finite and > 0, got {self.rho!r}")

    @classmethod
    def from_db(cls, snr_db):
        return cls(db_to_linear(snr_db))

    @property
    def db(self):
        return linear_to_db(self.rho)


def _check_rho(rho):
    if not rho > 0:
        raise DomainError(f"rho must be > 0, got {rho!r}")


def evm_of(imp):
    """Transmitter EVM, which under this model is exactly ``delta_t``."""
    return imp.delta_t


def effective_sinr(lam, rho, ant, imp):
    """Per-eigenmode SINR for eigenvalue ``lam`` of the channel Gram matrix.

    ``(rho lam / Nt) / (rho delta_t^2 lam / Nt + rho delta_r^2 + 1)``

    Works elementwise on numpy arrays as well as on scalars.
    """
    if (lam < 0).any() if hasattr(lam, "any") else lam < 0:
        raise DomainError("eigenvalue must be >= 0")
    _check_rho(rho)
    signal = rho * lam / ant.nt
    return signal / (imp.delta_t**2 * signal + rho * imp.delta_r**2 + 1.0)


def prop1_params(rho, ant, imp):
    """Return ``(f, g)`` such that ``1 + sinr(lam) = (1 + f lam) / (1 + g lam)``.

    ``f = rho (1 + dt^2) / (Nt (rho dr^2 + 1))`` and
    ``g = rho dt^2 / (Nt (rho dr^2 + 1))``.
    """
    _check_rho(rho)
    denom = ant.nt * (rho * imp.delta_r**2 + 1.0)
    f = rho * (1.0 + imp.delta_t**2) / denom
    g = rho * imp.delta_t**2 / denom
    return f, g


def ceiling_params(ant, imp):
    """High-SNR limits of ``prop1_params``; requires ``delta_r > 0``."""
    if imp.delta_r == 0:
        raise DomainError("f_hat and g_hat are undefined for delta_r = 0")
    denom = ant.nt * imp.delta_r**2
    return (1.0 + imp.delta_t**2) / denom, imp.delta_t**2 / denom
