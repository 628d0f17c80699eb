"""The Gaussian sampling mechanism and its utility radius.

The mechanism releases the empirical covariance of ``k`` draws from
``N(0, sigma)``:  ``sigma_hat = (1/k) * sum_i g_i g_i^T``.  Privacy comes from
the sampling noise alone; no noise is added to the estimate.  Utility is the
usual empirical-covariance concentration: with probability ``1 - gamma`` the
whitened deviation ``||sigma^{-1/2} sigma_hat sigma^{-1/2} - I||_F`` is at
most ``rho ~ sqrt((n^2 + log(1/gamma)) / k)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import NotPsd, ParamRange
from .linalg import SymMatrix, as_sym, is_psd, relative_frobenius_distance, sym_eigendecompose

WARN_SINGULAR_ESTIMATE = "SingularEstimate"


def sample_gaussian(sigma, k: int, seed) -> np.ndarray:
    """Draw ``k`` samples from ``N(0, sigma)``; returns an array of shape (k, n).

    The factor is eigenvector-based, ``L = V diag(sqrt(max(w, 0)))``, which
    tolerates exactly singular PSD covariances.  Sample ``i`` consumes normals
    ``[i*n, (i+1)*n)`` of the stream keyed by ``(TAG_MECHANISM, *seed)``, so
    output is bit-reproducible for fixed ``(sigma, k, seed)``.
    """
    sigma = as_sym(sigma)
    if k < 0:
        raise ParamRange(f"k must be non-negative, got {k}")
    if not is_psd(sigma):
        raise NotPsd("covariance must be PSD")
    dec = sym_eigendecompose(sigma)
    factor = dec.eigenvectors * np.sqrt(np.clip(dec.eigenvalues, 0.0, None))
    n = sigma.dim
    z = rng.standard_normals(k * n, (rng.TAG_MECHANISM, *rng.normalize_entropy(seed)))
    return z.reshape(k, n) @ factor.T


@dataclass(frozen=True)
class MechanismOutput:
    """Covariance estimate released by the mechanism, with diagnostics.

    ``rel_frob_error`` records the whitened Frobenius deviation from the true
    covariance (NaN when the input covariance is singular and whitening is
    undefined).  ``warnings`` flags ``SingularEstimate`` when k < n, in which
    case the estimate cannot be positive definite.
    """

    sigma_hat: SymMatrix
    k: int
    seed: object
    rel_frob_error: float
    warnings: tuple[str, ...]


def gaussian_sampling_mechanism(sigma, k: int, seed) -> MechanismOutput:
    """Release ``sigma_hat = (1/k) sum_i g_i g_i^T`` from seeded Gaussian draws."""
    sigma = as_sym(sigma)
    if k < 1:
        raise ParamRange(f"k must be at least 1, got {k}")
    samples = sample_gaussian(sigma, k, seed)
    sigma_hat = SymMatrix(samples.T @ samples / k)
    warnings = (WARN_SINGULAR_ESTIMATE,) if k < sigma.dim else ()
    eigs = np.linalg.eigvalsh(sigma.values)
    if float(eigs.min()) > 1e-9 * max(1.0, float(np.abs(eigs).max())):
        rel = relative_frobenius_distance(sigma, sigma_hat)
    else:
        rel = float("nan")
    return MechanismOutput(
        sigma_hat=sigma_hat, k=k, seed=seed, rel_frob_error=rel, warnings=warnings
    )


def utility_radius(n: int, gamma: float, k: int, scale: float) -> float:
    """High-probability whitened deviation level for the mechanism.

    ``scale * (sqrt((n^2 + ln(1/gamma)) / k) + (n^2 + ln(1/gamma)) / k)``.
    ``scale`` is the empirically calibrated leading constant (1.0 by default
    throughout the package).
    """
    if n < 1:
        raise ParamRange(f"n must be at least 1, got {n}")
    if not 0.0 < gamma < 1.0:
        raise ParamRange(f"gamma must lie in (0, 1), got {gamma}")
    if k < 1:
        raise ParamRange(f"k must be at least 1, got {k}")
    if scale <= 0:
        raise ParamRange(f"scale must be positive, got {scale}")
    mass = n * n + math.log(1.0 / gamma)
    return scale * (math.sqrt(mass / k) + mass / k)


def required_samples(n: int, gamma: float, radius_target: float, scale: float) -> int:
    """Smallest ``k`` with ``utility_radius(n, gamma, k, scale) <= radius_target``.

    The radius is strictly decreasing in ``k``, so an analytic starting point
    plus a local integer walk gives the exact minimizer.
    """
    if radius_target <= 0:
        raise ParamRange(f"radius_target must be positive, got {radius_target}")
    if scale <= 0:
        raise ParamRange(f"scale must be positive, got {scale}")
    if not 0.0 < gamma < 1.0:
        raise ParamRange(f"gamma must lie in (0, 1), got {gamma}")
    if n < 1:
        raise ParamRange(f"n must be at least 1, got {n}")
    mass = n * n + math.log(1.0 / gamma)
    # Solve y + y^2 = target/scale for y = sqrt(mass / k).
    t = radius_target / scale
    y = (-1.0 + math.sqrt(1.0 + 4.0 * t)) / 2.0
    k = max(1, math.ceil(mass / (y * y)))
    while k > 1 and utility_radius(n, gamma, k - 1, scale) <= radius_target:
        k -= 1
    while utility_radius(n, gamma, k, scale) > radius_target:
        k += 1
    return k
