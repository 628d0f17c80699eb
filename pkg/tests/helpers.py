"""Shared random-instance constructors for the test suite."""

import numpy as np


def rand_orthogonal(gen, n):
    q, _ = np.linalg.qr(gen.standard_normal((n, n)))
    return q


def rand_symmetric(gen, n, scale=1.0):
    m = gen.standard_normal((n, n)) * scale
    return (m + m.T) / 2.0


def rand_pd(gen, n, eig_low=0.5, eig_high=2.0):
    q = rand_orthogonal(gen, n)
    eigs = gen.uniform(eig_low, eig_high, n)
    return (q * eigs) @ q.T


def rand_psd(gen, n, eig_high=2.0):
    q = rand_orthogonal(gen, n)
    eigs = gen.uniform(0.0, eig_high, n)
    return (q * eigs) @ q.T


def chain_pair(gen, n, eps, r):
    """Construct a (base, perturbed) PSD pair meeting the chain preconditions.

    The perturbed matrix has eigenvalues mu, and the base equals
    perturbed^{1/2} S perturbed^{1/2} with the eigenvalues of S drawn inside
    [1/(1+eps), 1+eps].  That subinterval of [1-eps, 1+eps] is the regime the
    sampling pipeline realizes (both directions of the spectral sandwich hold
    there); spectra touching 1-eps from below can push an entry of the
    perturbed matrix up to r/(1-eps), past the (1+eps) r entry-stage bound.
    Both matrices are rescaled so max |base entry| = r.
    """
    q = rand_orthogonal(gen, n)
    mu = gen.uniform(0.2, 2.0, n)
    perturbed = (q * mu) @ q.T
    perturbed = (perturbed + perturbed.T) / 2.0
    q2 = rand_orthogonal(gen, n)
    s_eigs = gen.uniform(1.0 / (1.0 + eps), 1.0 + eps, n)
    ratio = (q2 * s_eigs) @ q2.T
    w, v = np.linalg.eigh(perturbed)
    half = (v * np.sqrt(w)) @ v.T
    base = half @ ratio @ half
    base = (base + base.T) / 2.0
    scale = r / np.abs(base).max()
    return base * scale, perturbed * scale
