"""Second subproblem: factor the fully digital precoder into a
unit-modulus analog matrix and a small digital matrix.

Alternating optimization: the digital half has a closed-form least
squares update, the analog half is driven by exact per-entry phase
minimization (with a PhaseCut-style SDR lift available as an
initializer and cross-check).  Power normalization is applied once at
the end.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import convex
from .validation import as_complex_matrix, herm


@dataclass
class PrecoderSet:
    F: np.ndarray       # M x 2 fully digital target
    F_RF: np.ndarray    # M x N_RF, unit-modulus entries
    F_BB: np.ndarray    # N_RF x 2, normalized
    beta: float


@dataclass
class LiftedAnalog:
    """Block lift of the analog design problem.

    M_mat couples an (N_RF + M) x (N_RF + M) Hermitian variable whose
    lower-left M x N_RF block carries the (1/sqrt(M))-scaled analog
    precoder.  Tr(M_mat X) reproduces the analog objective up to a
    positive 1/M factor, so the minimizers coincide.
    """

    M_mat: np.ndarray
    n_rf: int
    m_antennas: int

    @property
    def q_idx(self):
        return slice(0, self.n_rf)

    @property
    def r_idx(self):
        return slice(self.n_rf, self.n_rf + self.m_antennas)


@dataclass
class AOSettings:
    max_iters: int = 100
    residual_tol: float = 1e-5       # relative change of the fit residual
    use_sdr_init: bool = False
    sdr: convex.SolverSettings = field(default_factory=lambda: convex.SolverSettings(
        max_iters=500))


@dataclass
class AOReport:
    iterations: int
    residuals: list
    final_residual: float
    beta: float
    unit_modulus_violation: float
    stagnated: bool


def digital_update(F_RF: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Least squares digital precoder (F_RF^H F_RF)^-1 F_RF^H F."""
    F_RF = as_complex_matrix(F_RF, "F_RF")
    F = as_complex_matrix(F, "F")
    if np.linalg.cond(F_RF) > 1e10:
        raise ValueError("F_RF is (near) rank deficient")
    out, *_ = np.linalg.lstsq(F_RF, F, rcond=None)
    return out


def normalize_beta(F_RF: np.ndarray, F_BB_unnorm: np.ndarray) -> tuple[float, np.ndarray]:
    """Scale the digital precoder so ||F_RF F_BB||_F^2 = 2 exactly."""
    power = float(np.linalg.norm(F_RF @ F_BB_unnorm) ** 2)
    if power <= 0:
        raise ValueError("zero-power digital precoder; cannot normalize")
    beta = np.sqrt(2.0 / power)
    return beta, beta * F_BB_unnorm


def analog_objective(F_RF: np.ndarray, F_BB_unnorm: np.ndarray, F: np.ndarray) -> float:
    """Analog design objective; equals ||F - F_RF F_BB||_F^2 - ||F||_F^2."""
    T = F_BB_unnorm @ F_BB_unnorm.conj().T
    val = np.trace(F_RF @ T @ F_RF.conj().T) \
        - np.trace(F_RF @ F_BB_unnorm @ F.conj().T) \
        - np.trace(F @ F_BB_unnorm.conj().T @ F_RF.conj().T)
    return float(np.real(val))


def analog_coordinate_update(F_RF: np.ndarray, F_BB_unnorm: np.ndarray,
                             F: np.ndarray) -> np.ndarray:
    """One row-major sweep of exact per-entry phase minimization.

    For entry (m, n) the objective is 2 Re(conj(c) x) + const on |x| = 1
    with c the cross coefficient excluding the (m, n) self-term, so the
    minimizer is x = -c/|c|.  The objective never increases.
    """
    F_RF = F_RF.copy()
    T = F_BB_unnorm @ F_BB_unnorm.conj().T          # N_RF x N_RF, Hermitian
    P = F @ F_BB_unnorm.conj().T                    # M x N_RF
    m_ant, n_rf = F_RF.shape
    for m in range(m_ant):
        for n in range(n_rf):
            c = (F_RF[m] @ T[:, n]) - P[m, n] - F_RF[m, n] * T[n, n]
            if abs(c) > 1e-14:
                F_RF[m, n] = -c / abs(c)
    return F_RF


def build_lift(F_BB_unnorm: np.ndarray, F: np.ndarray, m_antennas: int) -> LiftedAnalog:
    """Assemble the block coupling matrix of the lifted analog problem."""
    F_BB_unnorm = as_complex_matrix(F_BB_unnorm, "F_BB_unnorm")
    F = as_complex_matrix(F, "F", shape=(m_antennas, F_BB_unnorm.shape[1]))
    n_rf = F_BB_unnorm.shape[0]
    s = 1.0 / np.sqrt(m_antennas)
    top = np.hstack([F_BB_unnorm @ F_BB_unnorm.conj().T,
                     -s * F_BB_unnorm @ F.conj().T])
    bottom = np.hstack([-s * F @ F_BB_unnorm.conj().T,
                        np.zeros((m_antennas, m_antennas), dtype=complex)])
    return LiftedAnalog(M_mat=np.vstack([top, bottom]), n_rf=n_rf, m_antennas=m_antennas)


def lift_X(lift: LiftedAnalog, F_RF: np.ndarray) -> np.ndarray:
    """Gram lift X for a feasible analog precoder (unit-diagonal, PSD)."""
    F_bar = F_RF / np.sqrt(lift.m_antennas)
    tall = np.vstack([F_bar.conj().T, np.eye(lift.m_antennas, dtype=complex)])
    return tall @ tall.conj().T


def solve_sdr_analog(lift: LiftedAnalog, F_BB_unnorm: np.ndarray, F: np.ndarray,
                     settings: convex.SolverSettings | None = None,
                     refine_sweeps: int = 20) -> np.ndarray:
    """SDR initialization of the analog precoder plus coordinate refinement.

    The modulus constraints on the off-diagonal blocks are relaxed for
    the SDP and restored by entrywise phase projection on the recovered
    block.
    """
    settings = settings or convex.SolverSettings(max_iters=500)
    m_sym = herm(lift.M_mat)
    n = m_sym.shape[0]
    block = convex.BlockSpec(name="X", n=n, linear=-m_sym, diag_one=True)
    problem = convex.ConvexProblem(blocks=[block])
    try:
        result = convex.solve(problem, warm_start={"X": np.eye(n, dtype=complex)},
                              settings=settings)
        F_bar = result.xs["X"][lift.r_idx, lift.q_idx]
        mags = np.abs(F_bar)
        phases = np.where(mags > 1e-14, F_bar / np.where(mags > 1e-14, mags, 1.0), 1.0)
        F_RF = phases.astype(complex)
    except convex.SolverError:
        # Fall back to deterministic pseudo-random phases.
        rng = np.random.default_rng(0)
        F_RF = np.exp(2j * np.pi * rng.random((lift.m_antennas, lift.n_rf)))
    for _ in range(refine_sweeps):
        prev = F_RF
        F_RF = analog_coordinate_update(F_RF, F_BB_unnorm, F)
        if np.linalg.norm(F_RF - prev) < 1e-12 * np.sqrt(F_RF.size):
            break
    return F_RF


def run_second_subproblem(F: np.ndarray, n_rf: int,
                          settings: AOSettings | None = None) -> tuple[PrecoderSet, AOReport]:
    """Alternate digital and analog updates until the fit residual stalls,
    then apply the power normalization once."""
    settings = settings or AOSettings()
    F = as_complex_matrix(F, "F")
    m_ant = F.shape[0]
    f_norm = np.linalg.norm(F)
    if f_norm == 0:
        raise ValueError("zero digital precoder")

    # Initial analog phases from the digital columns; extra chains get
    # DFT columns so the analog matrix starts full rank.
    cols = []
    for k in range(n_rf):
        if k < F.shape[1]:
            c = F[:, k]
            cols.append(np.exp(1j * np.angle(np.where(np.abs(c) > 0, c, 1.0))))
        else:
            cols.append(np.exp(2j * np.pi * k * np.arange(m_ant) / m_ant))
    F_RF = np.column_stack(cols)
    F_BB = digital_update(F_RF, F)
    if settings.use_sdr_init:
        lift = build_lift(F_BB, F, m_ant)
        F_RF = solve_sdr_analog(lift, F_BB, F, settings.sdr)
        F_BB = digital_update(F_RF, F)

    residuals = [float(np.linalg.norm(F - F_RF @ F_BB) / f_norm)]
    stagnated = False
    it = 0
    for it in range(1, settings.max_iters + 1):
        F_RF = analog_coordinate_update(F_RF, F_BB, F)
        F_BB = digital_update(F_RF, F)
        res = float(np.linalg.norm(F - F_RF @ F_BB) / f_norm)
        residuals.append(res)
        if abs(residuals[-2] - res) < settings.residual_tol * max(res, 1e-15):
            break
    else:
        stagnated = True

    beta, F_BB_norm = normalize_beta(F_RF, F_BB)
    report = AOReport(
        iterations=it,
        residuals=residuals,
        final_residual=residuals[-1],
        beta=beta,
        unit_modulus_violation=float(np.max(np.abs(np.abs(F_RF) - 1.0))),
        stagnated=stagnated,
    )
    return PrecoderSet(F=F, F_RF=F_RF, F_BB=F_BB_norm, beta=beta), report
