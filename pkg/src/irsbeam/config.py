"""Scenario configuration, unit conversions and seeded RNG streams."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np


class ConfigError(ValueError):
    """Raised when a SystemConfig violates one of its invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid configuration: " + "; ".join(self.violations))


def dbm_to_watt(x_dbm: float) -> float:
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def watt_to_dbm(p_w: float) -> float:
    if p_w <= 0:
        raise ValueError("power must be positive")
    return 10.0 * math.log10(p_w) + 30.0


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    if x <= 0:
        raise ValueError("value must be positive")
    return 10.0 * math.log10(x)


def near_square_dims(n: int) -> tuple[int, int]:
    """(W, H) grid with W*H = n, as close to square as the factorization allows.

    W >= H, e.g. 10 -> (5, 2), 25 -> (5, 5), primes degrade to (n, 1).
    """
    if n < 1:
        raise ValueError("element count must be >= 1")
    h = int(math.isqrt(n))
    while n % h != 0:
        h -= 1
    return (n // h, h)


# Carrier defaults: 28 GHz, half-wavelength element spacing.
_C = 299_792_458.0
DEFAULT_WAVELENGTH = _C / 28e9


@dataclass
class SystemConfig:
    """All scenario parameters for one experiment.

    Powers are accepted in dBm at the interface and converted once to
    linear watts internally (``p_t_w``).
    """

    M: int = 10                  # BS transmit antennas
    N_RF: int = 2                # RF chains
    K: int = 2                   # users / streams, fixed at 2
    R1: int = 25                 # reflecting elements, IRS 1
    R2: int = 25                 # reflecting elements, IRS 2
    p_t_dbm: float = 30.0        # transmit power
    sigma2: float = dbm_to_watt(20.0)  # noise power, linear watts
    g_t: float = 49.0            # transmit antenna gain, dBi
    L_B: int = 5                 # paths, BS -> IRS links
    L_I: int = 5                 # paths, IRS -> user links
    d_HB: float = 30.0           # BS-IRS distance, m
    d_HI: float = 30.0           # IRS-user distance, m
    wavelength: float = DEFAULT_WAVELENGTH
    spacing: float = DEFAULT_WAVELENGTH / 2.0
    pl_a: float = 61.4           # path loss intercept, dB
    pl_b: float = 2.0            # path loss exponent
    seed: int = 0
    # Per-node (W, H) UPA grids; None -> near-square defaults.
    bs_dims: tuple[int, int] | None = None
    irs1_dims: tuple[int, int] | None = None
    irs2_dims: tuple[int, int] | None = None

    @property
    def p_t_w(self) -> float:
        return dbm_to_watt(self.p_t_dbm)

    @property
    def R_total(self) -> int:
        return self.R1 + self.R2

    def node_dims(self, node: str) -> tuple[int, int]:
        if node == "bs":
            return self.bs_dims or near_square_dims(self.M)
        if node == "irs1":
            return self.irs1_dims or near_square_dims(self.R1)
        if node == "irs2":
            return self.irs2_dims or near_square_dims(self.R2)
        if node == "ue":
            return (self.K, 1)
        raise ValueError(f"unknown node {node!r}")

    def with_overrides(self, **kwargs) -> "SystemConfig":
        return replace(self, **kwargs)


def validate_config(cfg: SystemConfig) -> SystemConfig:
    """Return cfg iff every invariant holds, else raise ConfigError
    listing all violations."""
    bad = []
    if cfg.K != 2:
        bad.append(f"K must be 2 for the Alamouti scheme (got {cfg.K})")
    if not (cfg.K <= cfg.N_RF <= cfg.M):
        bad.append(f"require K <= N_RF <= M (got K={cfg.K}, N_RF={cfg.N_RF}, M={cfg.M})")
    if cfg.R1 < 1 or cfg.R2 < 1:
        bad.append(f"each IRS needs >= 1 element (got R1={cfg.R1}, R2={cfg.R2})")
    if cfg.sigma2 <= 0:
        bad.append("sigma2 must be positive")
    if cfg.d_HB <= 0 or cfg.d_HI <= 0:
        bad.append("distances must be positive")
    if cfg.wavelength <= 0 or cfg.spacing <= 0:
        bad.append("wavelength and spacing must be positive")
    if cfg.L_B < 1 or cfg.L_I < 1:
        bad.append("path counts must be >= 1")
    for node, count in (("bs", cfg.M), ("irs1", cfg.R1), ("irs2", cfg.R2)):
        try:
            w, h = cfg.node_dims(node)
        except ValueError as exc:
            bad.append(str(exc))
            continue
        if w * h != count:
            bad.append(f"{node} UPA dims {w}x{h} inconsistent with element count {count}")
    if bad:
        raise ConfigError(bad)
    return cfg


def spawn_streams(seed: int, labels) -> dict[str, np.random.Generator]:
    """Deterministically split one master seed into named child streams.

    Identical (seed, labels) always produce bit-identical streams.
    """
    labels = list(labels)
    children = np.random.SeedSequence(seed).spawn(len(labels))
    return {lab: np.random.default_rng(ss) for lab, ss in zip(labels, children)}


# -- flat key/value config files ------------------------------------------

_FIELD_TYPES = {
    "M": int, "N_RF": int, "K": int, "R1": int, "R2": int,
    "p_t_dbm": float, "sigma2": float, "g_t": float,
    "L_B": int, "L_I": int, "d_HB": float, "d_HI": float,
    "wavelength": float, "spacing": float, "pl_a": float, "pl_b": float,
    "seed": int,
}


def load_config_file(path) -> dict:
    """Parse a flat ``key = value`` config file into override kwargs.

    Lines starting with '#' and blank lines are ignored.  Keys match
    SystemConfig field names.
    """
    overrides = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError([f"{path}:{lineno}: expected 'key = value'"])
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _FIELD_TYPES:
                raise ConfigError([f"{path}:{lineno}: unknown key {key!r}"])
            try:
                overrides[key] = _FIELD_TYPES[key](value)
            except ValueError:
                raise ConfigError([f"{path}:{lineno}: bad value for {key!r}: {value!r}"]) from None
    return overrides
