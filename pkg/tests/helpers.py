"""Shared helpers for the test-suite."""

import numpy as np


def random_unitary(rng, d):
    """Haar-ish random unitary from the QR decomposition of a Gaussian."""
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    diag = np.diag(r)
    return q * (diag / np.abs(diag))


def basis(dim, k):
    v = np.zeros(dim, dtype=complex)
    v[k] = 1.0
    return v
