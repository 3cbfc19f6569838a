"""Input validation helpers for complex matrices."""

from __future__ import annotations

import numpy as np

HERMITIAN_RTOL = 1e-10
PSD_RTOL = 1e-8


def as_complex_matrix(a, name: str = "matrix", shape=None) -> np.ndarray:
    """Coerce to a finite 2-D complex array, optionally checking shape."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    if shape is not None and a.shape != tuple(shape):
        raise ValueError(f"{name} must have shape {tuple(shape)}, got {a.shape}")
    return a


def hermitian_defect(a: np.ndarray) -> float:
    """||A - A^H||_F relative to ||A||_F (absolute when A ~ 0)."""
    scale = np.linalg.norm(a)
    defect = np.linalg.norm(a - a.conj().T)
    return defect / scale if scale > 0 else defect


def is_hermitian(a: np.ndarray, rtol: float = HERMITIAN_RTOL) -> bool:
    return hermitian_defect(a) <= rtol


def check_hermitian(a, name: str = "matrix", rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    a = as_complex_matrix(a, name)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got {a.shape}")
    if not is_hermitian(a, rtol):
        raise ValueError(f"{name} is not Hermitian within tolerance {rtol}")
    return a


def is_psd(a: np.ndarray, rtol: float = PSD_RTOL) -> bool:
    if not is_hermitian(a):
        return False
    w = np.linalg.eigvalsh(0.5 * (a + a.conj().T))
    return w.min() >= -rtol * max(1.0, w.max())


def check_psd(a, name: str = "matrix", rtol: float = PSD_RTOL) -> np.ndarray:
    a = check_hermitian(a, name)
    if not is_psd(a, rtol):
        raise ValueError(f"{name} is not positive semidefinite within tolerance {rtol}")
    return a


def check_unit_modulus(v, name: str = "vector", atol: float = 1e-12) -> np.ndarray:
    v = np.asarray(v, dtype=complex).ravel()
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    if np.max(np.abs(np.abs(v) - 1.0)) > atol:
        raise ValueError(f"{name} entries are not unit modulus within {atol}")
    return v


def herm(a: np.ndarray) -> np.ndarray:
    """Hermitian part (A + A^H) / 2."""
    return 0.5 * (a + a.conj().T)
