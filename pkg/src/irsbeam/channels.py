"""Extended Saleh-Valenzuela mmWave channel generation and stacking.

Four base channels are generated per draw: BS->IRS-1, BS->IRS-2 and the
two IRS->user links.  ``assemble`` builds the vertically stacked BS-side
matrix, the horizontally stacked user-side matrix and the auxiliary Gram
matrix used by the lifted phase optimization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .validation import as_complex_matrix, herm


@dataclass
class ChannelSet:
    H_B1: np.ndarray   # R1 x M
    H_B2: np.ndarray   # R2 x M
    H_I1: np.ndarray   # 2 x R1
    H_I2: np.ndarray   # 2 x R2
    H_B: np.ndarray    # 2R x M, [H_B1; H_B2]
    H_I: np.ndarray    # 2 x 2R, [H_I1, H_I2]
    H_I_tilde: np.ndarray  # 2R x 2R Hermitian PSD, H_I^H H_I

    @property
    def R1(self) -> int:
        return self.H_B1.shape[0]

    @property
    def R2(self) -> int:
        return self.H_B2.shape[0]

    @property
    def M(self) -> int:
        return self.H_B1.shape[1]


def upa_response(azimuth: float, elevation: float, dims: tuple[int, int],
                 spacing: float, wavelength: float) -> np.ndarray:
    """Unit-norm steering vector of a W x H uniform planar array.

    Entry for grid index (m, n) carries phase
    (2*pi*spacing/wavelength) * (m*sin(az)*sin(el) + n*cos(el)),
    with m the horizontal and n the vertical element index.
    """
    if not (np.isfinite(azimuth) and np.isfinite(elevation)):
        raise ValueError("angles must be finite")
    w, h = dims
    if w < 1 or h < 1:
        raise ValueError(f"invalid UPA dims {dims}")
    k = 2.0 * np.pi * spacing / wavelength
    m = np.repeat(np.arange(w), h)
    n = np.tile(np.arange(h), w)
    phase = k * (m * np.sin(azimuth) * np.sin(elevation) + n * np.cos(elevation))
    return np.exp(1j * phase) / np.sqrt(w * h)


def path_loss(distance: float, a: float = 61.4, b: float = 2.0) -> float:
    """Distance-dependent path loss in dB: a + 10*b*log10(D)."""
    if distance <= 0:
        raise ValueError("distance must be positive")
    return a + 10.0 * b * np.log10(distance)


def gen_sv_channel(rx_dims: tuple[int, int], tx_dims: tuple[int, int],
                   n_paths: int, pl_db: float, rng: np.random.Generator,
                   spacing: float, wavelength: float) -> np.ndarray:
    """Sparse multipath channel: sum over paths of gain * a_rx a_tx^H.

    Path gains are CN(0, kappa^2 * 10^(-0.1*pl_db)) with
    kappa = sqrt(n_rx * n_tx / n_paths), so E||H||_F^2 =
    n_rx * n_tx * 10^(-0.1*pl_db).  Azimuths are uniform on [0, 2*pi),
    elevations uniform on (0, pi).
    """
    if n_paths < 1:
        raise ValueError("need at least one path")
    n_rx = rx_dims[0] * rx_dims[1]
    n_tx = tx_dims[0] * tx_dims[1]
    kappa = np.sqrt(n_rx * n_tx / n_paths)
    std = kappa * 10.0 ** (-0.05 * pl_db)
    # Draw order fixed for reproducibility: gains, then per-path angles.
    gains = std * (rng.standard_normal(n_paths) + 1j * rng.standard_normal(n_paths)) / np.sqrt(2.0)
    h = np.zeros((n_rx, n_tx), dtype=complex)
    for q in range(n_paths):
        az_r, az_t = rng.uniform(0.0, 2.0 * np.pi, size=2)
        el_r, el_t = rng.uniform(0.0, np.pi, size=2)
        a_r = upa_response(az_r, el_r, rx_dims, spacing, wavelength)
        a_t = upa_response(az_t, el_t, tx_dims, spacing, wavelength)
        h += gains[q] * np.outer(a_r, a_t.conj())
    return h


def assemble(H_B1, H_B2, H_I1, H_I2) -> ChannelSet:
    """Stack the four base channels and build the auxiliary Gram matrix."""
    H_B1 = as_complex_matrix(H_B1, "H_B1")
    H_B2 = as_complex_matrix(H_B2, "H_B2")
    H_I1 = as_complex_matrix(H_I1, "H_I1")
    H_I2 = as_complex_matrix(H_I2, "H_I2")
    if H_B1.shape[1] != H_B2.shape[1]:
        raise ValueError("H_B1 and H_B2 must agree on the antenna dimension")
    if H_I1.shape[0] != H_I2.shape[0]:
        raise ValueError("H_I1 and H_I2 must agree on the user dimension")
    if H_I1.shape[1] != H_B1.shape[0] or H_I2.shape[1] != H_B2.shape[0]:
        raise ValueError("IRS dimensions of BS-side and user-side channels disagree")
    H_B = np.vstack([H_B1, H_B2])
    H_I = np.hstack([H_I1, H_I2])
    H_I_tilde = herm(H_I.conj().T @ H_I)  # Hermitian up to rounding by construction
    return ChannelSet(H_B1, H_B2, H_I1, H_I2, H_B, H_I, H_I_tilde)


def generate_channels(cfg: SystemConfig, rng: np.random.Generator | None = None,
                      d_b1: float | None = None, d_b2: float | None = None,
                      d_i1: float | None = None, d_i2: float | None = None) -> ChannelSet:
    """Draw the four mmWave channels for one experiment.

    Per-link distances default to cfg.d_HB / cfg.d_HI.  The transmit
    antenna gain is credited once, on the BS-side links.  The master rng
    (or cfg.seed) is split deterministically per channel matrix.
    """
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    streams = rng.spawn(4)
    pl_b1 = path_loss(d_b1 if d_b1 is not None else cfg.d_HB, cfg.pl_a, cfg.pl_b) - cfg.g_t
    pl_b2 = path_loss(d_b2 if d_b2 is not None else cfg.d_HB, cfg.pl_a, cfg.pl_b) - cfg.g_t
    pl_i1 = path_loss(d_i1 if d_i1 is not None else cfg.d_HI, cfg.pl_a, cfg.pl_b)
    pl_i2 = path_loss(d_i2 if d_i2 is not None else cfg.d_HI, cfg.pl_a, cfg.pl_b)
    H_B1 = gen_sv_channel(cfg.node_dims("irs1"), cfg.node_dims("bs"), cfg.L_B,
                          pl_b1, streams[0], cfg.spacing, cfg.wavelength)
    H_B2 = gen_sv_channel(cfg.node_dims("irs2"), cfg.node_dims("bs"), cfg.L_B,
                          pl_b2, streams[1], cfg.spacing, cfg.wavelength)
    H_I1 = gen_sv_channel(cfg.node_dims("ue"), cfg.node_dims("irs1"), cfg.L_I,
                          pl_i1, streams[2], cfg.spacing, cfg.wavelength)
    H_I2 = gen_sv_channel(cfg.node_dims("ue"), cfg.node_dims("irs2"), cfg.L_I,
                          pl_i2, streams[3], cfg.spacing, cfg.wavelength)
    return assemble(H_B1, H_B2, H_I1, H_I2)


def generate_split_user_channels(cfg: SystemConfig, rng: np.random.Generator,
                                 d_user_irs: np.ndarray) -> ChannelSet:
    """Coverage-style draw where user k sits at d_user_irs[k, i] meters
    from IRS-i; each user row of H_I_i gets its own path loss and paths."""
    d_user_irs = np.asarray(d_user_irs, dtype=float)
    if d_user_irs.shape != (2, 2):
        raise ValueError("d_user_irs must be 2x2 (user, irs)")
    streams = rng.spawn(6)
    pl_b = path_loss(cfg.d_HB, cfg.pl_a, cfg.pl_b) - cfg.g_t
    H_B1 = gen_sv_channel(cfg.node_dims("irs1"), cfg.node_dims("bs"), cfg.L_B,
                          pl_b, streams[0], cfg.spacing, cfg.wavelength)
    H_B2 = gen_sv_channel(cfg.node_dims("irs2"), cfg.node_dims("bs"), cfg.L_B,
                          pl_b, streams[1], cfg.spacing, cfg.wavelength)
    rows_1, rows_2 = [], []
    for k in range(2):
        pl_1 = path_loss(d_user_irs[k, 0], cfg.pl_a, cfg.pl_b)
        pl_2 = path_loss(d_user_irs[k, 1], cfg.pl_a, cfg.pl_b)
        rows_1.append(gen_sv_channel((1, 1), cfg.node_dims("irs1"), cfg.L_I,
                                     pl_1, streams[2 + k], cfg.spacing, cfg.wavelength))
        rows_2.append(gen_sv_channel((1, 1), cfg.node_dims("irs2"), cfg.L_I,
                                     pl_2, streams[4 + k], cfg.spacing, cfg.wavelength))
    return assemble(H_B1, H_B2, np.vstack(rows_1), np.vstack(rows_2))


def perturb(channels: ChannelSet, alpha: float, rng: np.random.Generator) -> ChannelSet:
    """Add alpha * DeltaH to each base channel, DeltaH i.i.d. complex
    normal per matrix with per-entry variance equal to the matrix's mean
    entry energy.

    The channels carry path loss, so the error is scaled relative to each
    matrix: alpha = 1 means error energy equal to channel energy in
    expectation.  DeltaH is drawn independently per matrix; the stacked
    forms are reassembled.  alpha = 0 reproduces the input exactly.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if alpha == 0:
        return assemble(channels.H_B1, channels.H_B2, channels.H_I1, channels.H_I2)

    def noise(base, stream):
        scale = np.linalg.norm(base) / np.sqrt(base.size)
        raw = (stream.standard_normal(base.shape)
               + 1j * stream.standard_normal(base.shape)) / np.sqrt(2.0)
        return scale * raw

    streams = rng.spawn(4)
    return assemble(
        channels.H_B1 + alpha * noise(channels.H_B1, streams[0]),
        channels.H_B2 + alpha * noise(channels.H_B2, streams[1]),
        channels.H_I1 + alpha * noise(channels.H_I1, streams[2]),
        channels.H_I2 + alpha * noise(channels.H_I2, streams[3]),
    )


# -- plain-text export/import for cross-implementation comparison ----------

_BLOCKS = ("H_B1", "H_B2", "H_I1", "H_I2")


def save_channels(path, channels: ChannelSet) -> None:
    """Write the four base channels as text: per matrix a 'name rows cols'
    header then one row per line, entries as (re+imj) tokens."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# irsbeam channelset v1\n")
        for name in _BLOCKS:
            mat = getattr(channels, name)
            fh.write(f"{name} {mat.shape[0]} {mat.shape[1]}\n")
            for row in mat:
                fh.write(" ".join(f"{z.real:.17e}{z.imag:+.17e}j" for z in row))
                fh.write("\n")


def load_channels(path) -> ChannelSet:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    mats = {}
    i = 0
    while i < len(lines):
        name, rows, cols = lines[i].split()
        rows, cols = int(rows), int(cols)
        block = [np.array([complex(tok) for tok in lines[i + 1 + r].split()])
                 for r in range(rows)]
        mat = np.vstack(block)
        if mat.shape != (rows, cols):
            raise ValueError(f"bad block {name}: expected {rows}x{cols}, got {mat.shape}")
        mats[name] = mat
        i += 1 + rows
    missing = [n for n in _BLOCKS if n not in mats]
    if missing:
        raise ValueError(f"channel file missing blocks: {missing}")
    return assemble(*(mats[n] for n in _BLOCKS))
