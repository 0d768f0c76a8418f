"""Chain diagnostics: batch-means errors, integrated autocorrelation time, effective sample size."""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

logger = logging.getLogger(__name__)


def _next_pow_two(n: int) -> int:
    i = 1
    while i < n:
        i <<= 1
    return i


def autocorrelation(x: np.ndarray) -> np.ndarray:
    """Normalized autocorrelation function of a 1-D series via FFT."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise ValueError("autocorrelation expects a 1-D series")
    centred = x - x.mean()
    if not np.any(centred):
        acf = np.zeros(x.size)
        acf[0] = 1.0
        return acf
    n = _next_pow_two(x.size)
    f = np.fft.fft(centred, n=2 * n)
    acf = np.fft.ifft(f * np.conjugate(f))[: x.size].real
    return acf / acf[0]


def integrated_autocorrelation_time(series: np.ndarray, c: float = 5.0) -> float:
    """tau_int averaged over chains, with Sokal's automatic window M < c * tau.

    Args:
        series: (T,) or (chains, T) array
        c: Window constant
    """
    series = np.atleast_2d(np.asarray(series, dtype=float))
    f = np.mean([autocorrelation(row) for row in series], axis=0)
    taus = 2.0 * np.cumsum(f) - 1.0
    inside = np.arange(taus.size) < c * taus
    window = int(np.argmin(inside)) if np.any(inside) else taus.size - 1
    return float(max(taus[window], 1.0))


def effective_sample_size(series: np.ndarray) -> float:
    series = np.atleast_2d(np.asarray(series, dtype=float))
    return float(series.size / integrated_autocorrelation_time(series))


@dataclass(frozen=True)
class BatchMeans:
    mean: float
    stderr: float
    n_batches: int
    ess: float


def batch_means(series: np.ndarray, n_batches: int = 20) -> BatchMeans:
    """Mean and batch-means standard error of a (chains, T) series.

    Each chain is cut into contiguous batches; the pooled batch means
    give the error estimate. Chains shorter than the batch count fall
    back to one batch per sample.
    """
    series = np.atleast_2d(np.asarray(series, dtype=float))
    chains, T = series.shape
    per_chain = max(1, min(n_batches, T))
    size = T // per_chain
    means = series[:, : per_chain * size].reshape(chains, per_chain, size).mean(axis=2).reshape(-1)
    mean = float(series.mean())
    stderr = float(means.std(ddof=1) / np.sqrt(means.size)) if means.size > 1 else 0.0
    ess = effective_sample_size(series) if T > 1 else float(series.size)
    return BatchMeans(mean=mean, stderr=stderr, n_batches=int(means.size), ess=ess)


def mean_with_stderr(series: np.ndarray, n_batches: int = 20) -> Tuple[float, float]:
    result = batch_means(series, n_batches)
    return result.mean, result.stderr
