"""Monte-Carlo oracle for the ergodic capacity over i.i.d. Rayleigh channels.

Trials are split into a fixed number of shards. Shard ``i`` draws from its own
PCG64 stream spawned from ``SeedSequence(seed)``, so an estimate is fully
determined by ``(seed, trials, shards)`` no matter how many threads run it.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from mimocap.errors import DomainError, NumericalError
from mimocap.model import effective_sinr

DEFAULT_SHARDS = 8
# complex entries per batch; bounds memory for large arrays
_BATCH_ENTRIES = 1 << 21
_EIG_NEGATIVE_GUARD = 1e-9


@dataclass(frozen=True)
class CapacityEstimate:
    mean: float
    std_error: float
    trials: int
    seed: int


def shard_rngs(seed, shards):
    """Independent generators for each shard, derived from ``seed`` only."""
    children = np.random.SeedSequence(seed).spawn(shards)
    return [np.random.Generator(np.random.PCG64(child)) for child in children]


def shard_sizes(trials, shards):
    base, extra = divmod(trials, shards)
    return [base + (1 if i < extra else 0) for i in range(shards)]


def sample_channel(ant, rng, size=None):
    """Draw an ``Nr x Nt`` matrix of i.i.d. CN(0, 1) entries.

    Args:
        ant: Antenna configuration.
        rng: ``numpy.random.Generator``.
        size: Optional batch count; adds a leading axis.
    """
    shape = (ant.nr, ant.nt) if size is None else (size, ant.nr, ant.nt)
    parts = rng.standard_normal(shape + (2,)) * math.sqrt(0.5)
    return parts[..., 0] + 1j * parts[..., 1]


def gram_eigenvalues(h):
    """Eigenvalues of the ``q x q`` Gram matrix of ``h`` (batched over leading axes).

    Uses ``H H^H`` when ``Nr <= Nt`` and ``H^H H`` otherwise, so the
    decomposition is always on the smaller side.
    """
    h = np.asarray(h)
    nr, nt = h.shape[-2:]
    hh = np.conj(np.swapaxes(h, -1, -2))
    w = h @ hh if nr <= nt else hh @ h
    try:
        lam = np.linalg.eigvalsh(w)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(w)
        raise NumericalError(f"Hermitian eigensolver failed; condition number(s) {cond}") from exc
    if np.any(lam < -_EIG_NEGATIVE_GUARD):
        worst = lam.min()
        raise NumericalError(f"Gram matrix has eigenvalue {worst!r} below -{_EIG_NEGATIVE_GUARD}")
    return np.maximum(lam, 0.0)


def mutual_information(h, q_diag, imp):
    """``log2 det(I + H Q H^H Phi^-1)`` for diagonal ``Q`` given by ``q_diag``.

    ``Phi = delta_t^2 H Q H^H + (delta_r^2 tr(Q) + 1) I`` is the aggregate
    distortion-plus-noise covariance. ``h`` may carry leading batch axes.
    """
    q_diag = np.asarray(q_diag, dtype=float)
    if np.any(q_diag < 0):
        raise DomainError("signal covariance must have non-negative diagonal")
    h = np.asarray(h)
    nr = h.shape[-2]
    signal = (h * q_diag) @ np.conj(np.swapaxes(h, -1, -2))
    eye = np.eye(nr)
    phi = imp.delta_t**2 * signal + (imp.delta_r**2 * q_diag.sum() + 1.0) * eye
    _, logdet_total = np.linalg.slogdet(phi + signal)
    _, logdet_noise = np.linalg.slogdet(phi)
    mi = (logdet_total - logdet_noise) / math.log(2.0)
    return np.maximum(mi, 0.0) if np.ndim(mi) else max(float(mi), 0.0)


def capacity_from_eigenvalues(lam, rho, ant, imp):
    """Sum of ``log2(1 + sinr)`` over the last axis of ``lam``."""
    sinr = effective_sinr(lam, rho, ant, imp)
    return np.log1p(sinr).sum(axis=-1) / math.log(2.0)


def capacity_realization(h, rho, ant, imp):
    """Mutual information of one realization under isotropic input, via eigenvalues."""
    return capacity_from_eigenvalues(gram_eigenvalues(h), rho, ant, imp)


def _batches(ant, n):
    per = max(1, _BATCH_ENTRIES // (ant.nt * ant.nr))
    while n > 0:
        take = min(per, n)
        yield take
        n -= take


def _shard_eigenvalues(ant, rng, n):
    out = [gram_eigenvalues(sample_channel(ant, rng, size)) for size in _batches(ant, n)]
    return np.concatenate(out) if out else np.empty((0, ant.q))


def sample_eigenvalues(ant, trials, seed=42, shards=DEFAULT_SHARDS, threads=1):
    """Gram eigenvalues for ``trials`` channel draws, shape ``(trials, q)``.

    Rows are ordered by shard, so the result depends only on
    ``(seed, trials, shards)``.
    """
    rngs = shard_rngs(seed, shards)
    sizes = shard_sizes(trials, shards)
    jobs = list(zip(rngs, sizes))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda job: _shard_eigenvalues(ant, *job), jobs))
    else:
        parts = [_shard_eigenvalues(ant, *job) for job in jobs]
    return np.concatenate(parts)


def summarize(samples, seed):
    samples = np.asarray(samples, dtype=float)
    trials = samples.size
    mean = float(samples.mean())
    std_error = float(samples.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return CapacityEstimate(mean=max(mean, 0.0), std_error=std_error, trials=trials, seed=seed)


def estimate_ergodic_capacity(rho, ant, imp, trials, seed=42, shards=DEFAULT_SHARDS, threads=1):
    """Monte-Carlo ergodic capacity with its standard error.

    Args:
        rho: Linear SNR.
        ant: Antenna configuration.
        imp: Impairment levels.
        trials: Number of channel draws, at least 100.
        seed: Unsigned 64-bit seed.
        shards: Number of independent RNG substreams; part of the estimate's definition.
        threads: Worker threads; never changes the result.

    Returns:
        CapacityEstimate
    """
    if trials < 100:
        raise DomainError(f"at least 100 trials are required, got {trials}")
    if not rho > 0:
        raise DomainError(f"rho must be > 0, got {rho!r}")
    lam = sample_eigenvalues(ant, trials, seed=seed, shards=shards, threads=threads)
    return summarize(capacity_from_eigenvalues(lam, rho, ant, imp), seed)
