"""Alamouti encoding, effective channel assembly, MRC decoding and the
SNR/rate objective driving the optimization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ChannelSet
from .validation import as_complex_matrix, check_unit_modulus


class DegenerateChannelError(ValueError):
    """Raised when decoding is attempted on an (effectively) zero channel."""


@dataclass
class PhaseConfig:
    """Unit-modulus reflection coefficients of both IRSs, concatenated."""

    phi: np.ndarray   # length 2R, |phi_r| = 1
    r1: int           # split point: first r1 entries belong to IRS 1

    def __post_init__(self):
        self.phi = check_unit_modulus(self.phi, "phi")
        if not (0 <= self.r1 <= self.phi.size):
            raise ValueError("r1 out of range")

    @property
    def phi_1(self) -> np.ndarray:
        return self.phi[: self.r1]

    @property
    def phi_2(self) -> np.ndarray:
        return self.phi[self.r1:]


def encode(s1: complex, s2: complex) -> np.ndarray:
    """2x2 orthogonal transmission matrix [[s1, -s2*], [s2, s1*]]."""
    return np.array([[s1, -np.conj(s2)], [s2, np.conj(s1)]], dtype=complex)


def effective_channel(channels: ChannelSet, phases: PhaseConfig, F: np.ndarray) -> np.ndarray:
    """2x2 end-to-end channel G = H_I diag(phi) H_B F."""
    F = as_complex_matrix(F, "F")
    if F.shape[0] != channels.M or F.shape[1] != 2:
        raise ValueError(f"F must be {channels.M}x2, got {F.shape}")
    if phases.phi.size != channels.R1 + channels.R2:
        raise ValueError("phase vector length does not match channel set")
    return (channels.H_I * phases.phi) @ (channels.H_B @ F)


def effective_channel_two_term(channels: ChannelSet, phases: PhaseConfig,
                               F: np.ndarray) -> np.ndarray:
    """Same G assembled per IRS: (H_I1 Phi_1 H_B1 + H_I2 Phi_2 H_B2) F."""
    H1 = (channels.H_I1 * phases.phi_1) @ channels.H_B1
    H2 = (channels.H_I2 * phases.phi_2) @ channels.H_B2
    return (H1 + H2) @ F


def snr(G: np.ndarray, p_t_w: float, sigma2: float) -> float:
    """Post-combining symbol SNR (P_t / 2 sigma^2) * ||G||_F^2.

    The same value holds for both Alamouti symbols.
    """
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    G = as_complex_matrix(G, "G")
    return p_t_w / (2.0 * sigma2) * float(np.linalg.norm(G) ** 2)


def sum_snr_two_users(G: np.ndarray, p_t_w: float, sigma2: float) -> float:
    """Sum over both users of their per-symbol SNR (row-norm decomposition);
    identical scalar to snr(G, ...)."""
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    G = as_complex_matrix(G, "G")
    per_user = np.sum(np.abs(G) ** 2, axis=1)
    return p_t_w / (2.0 * sigma2) * float(per_user.sum())


def mrc_decode(R: np.ndarray, G: np.ndarray) -> tuple[complex, complex]:
    """MRC/ML estimates of (s1, s2) from the 2x2 received block R.

    With zero noise, recovery is exact for any G with ||G||_F > 0.
    """
    R = as_complex_matrix(R, "R", shape=(2, 2))
    G = as_complex_matrix(G, "G", shape=(2, 2))
    d = float(np.linalg.norm(G) ** 2)
    if d <= 1e-12:
        raise DegenerateChannelError("effective channel has (near-)zero Frobenius norm")
    g1, g2 = G[:, 0], G[:, 1]
    r1, r2 = R[:, 0], R[:, 1]
    s1 = (g1.conj() @ r1 + r2.conj() @ g2) / d
    s2 = (g2.conj() @ r1 - r2.conj() @ g1) / d
    return complex(s1), complex(s2)


def mismatched_sinrs(G_true: np.ndarray, G_hat: np.ndarray,
                     p_t_w: float, sigma2: float) -> tuple[float, float]:
    """Per-symbol SINRs when the receiver combines with G_hat while the
    signal actually propagated through G_true.

    The channel mismatch breaks the orthogonal design and leaks the other
    symbol into each estimate; with G_hat == G_true both values reduce to
    snr(G_true, ...).
    """
    G_true = as_complex_matrix(G_true, "G_true", shape=(2, 2))
    G_hat = as_complex_matrix(G_hat, "G_hat", shape=(2, 2))
    g1, g2 = G_true[:, 0], G_true[:, 1]
    h1, h2 = G_hat[:, 0], G_hat[:, 1]
    es = p_t_w / 2.0
    noise = sigma2 * float(np.linalg.norm(G_hat) ** 2)
    # s1 estimate: signal h1^H g1 + g2^H h2, interference h1^H g2 - g1^H h2.
    sig1 = abs(h1.conj() @ g1 + g2.conj() @ h2) ** 2
    int1 = abs(h1.conj() @ g2 - g1.conj() @ h2) ** 2
    # s2 estimate: signal h2^H g2 + g1^H h1, interference h2^H g1 - g2^H h1.
    sig2 = abs(h2.conj() @ g2 + g1.conj() @ h1) ** 2
    int2 = abs(h2.conj() @ g1 - g2.conj() @ h1) ** 2
    return (es * sig1 / (es * int1 + noise), es * sig2 / (es * int2 + noise))


def achievable_rate(snr_value: float, half_rate: bool = False) -> float:
    """log2(1 + SNR) in bps/Hz; the half_rate switch applies the 0.5
    factor used when comparing against non-Alamouti baselines."""
    if snr_value < 0:
        raise ValueError("SNR must be nonnegative")
    rate = float(np.log2(1.0 + snr_value))
    return 0.5 * rate if half_rate else rate
