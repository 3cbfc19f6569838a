"""First subproblem: lifted phase/precoder optimization.

The unit-modulus phase vector and the fully digital precoder are lifted
into a PSD pair (Q, W) with unit diagonal and fixed trace.  The bilinear
coupling Tr((H_tilde ⊙ Q)(H_B W H_B^H)) is split into a difference of
squared Frobenius norms, the convex half is linearized (majorization-
minimization) and the rank-1 / rank-2 targets are enforced through
difference-of-convex penalties driven by a shrinking coefficient.  Each
outer iteration solves a concave SDP via the projected-splitting engine.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import convex
from .alamouti import PhaseConfig, effective_channel
from .channels import ChannelSet
from .validation import check_hermitian, herm


@dataclass
class LiftedVars:
    Q: np.ndarray   # 2R x 2R Hermitian PSD, unit diagonal, rank-1 target
    W: np.ndarray   # M x M Hermitian PSD, Tr = 2, rank-2 target


@dataclass
class MMSettings:
    max_outer: int = 50
    obj_tol: float = 1e-4            # relative change of the true objective
    rank_tol: float = 1e-3           # relative rank residual at exit
    eta_shrink: float = 0.25         # eta <- eta_shrink * eta until ranks collapse
    penalty_init_ratio: float = 0.3  # (1/eta0)*(g1+g2) vs |objective| at start
    inner: convex.SolverSettings = field(default_factory=lambda: convex.SolverSettings(
        max_iters=800, step_tol=1e-6))


@dataclass
class MMState:
    """Outer-iteration record of one lifted optimization run."""

    iteration: int = 0
    eta: float = np.inf
    objective: list = field(default_factory=list)        # true coupled objective per iter
    penalized: list = field(default_factory=list)        # normalized objective - (1/eta)(g1+g2)
    surrogate: list = field(default_factory=list)
    penalty_q: list = field(default_factory=list)        # exact DC residual of Q
    penalty_w: list = field(default_factory=list)        # exact DC residual of W
    etas: list = field(default_factory=list)
    feasibility: list = field(default_factory=list)
    converged: bool = False
    convergence_iteration: int | None = None


# -- lifted objective pieces ----------------------------------------------

def lift_A(Q: np.ndarray, H_I_tilde: np.ndarray) -> np.ndarray:
    """A = H_tilde ⊙ Q (elementwise); Hermitian when both inputs are."""
    if Q.shape != H_I_tilde.shape:
        raise ValueError(f"shape mismatch {Q.shape} vs {H_I_tilde.shape}")
    return H_I_tilde * Q


def lift_B(W: np.ndarray, H_B: np.ndarray) -> np.ndarray:
    """B = H_B W H_B^H; PSD whenever W is."""
    if W.shape != (H_B.shape[1], H_B.shape[1]):
        raise ValueError(f"W must be {H_B.shape[1]}x{H_B.shape[1]}, got {W.shape}")
    return H_B @ W @ H_B.conj().T


def objective_Y2(Q: np.ndarray, W: np.ndarray, H_I_tilde: np.ndarray,
                 H_B: np.ndarray) -> float:
    """Coupled objective Tr((H_tilde ⊙ Q)(H_B W H_B^H)); real for
    Hermitian inputs."""
    return float(np.real(np.trace(lift_A(Q, H_I_tilde) @ lift_B(W, H_B))))


def ia_split(A: np.ndarray, B: np.ndarray) -> tuple[float, float, float]:
    """Inner-approximation identity: Tr(AB) as
    (-1/2||A||^2, -1/2||B||^2, +1/2||A+B||^2)."""
    A = check_hermitian(A, "A")
    B = check_hermitian(B, "B")
    return (-0.5 * float(np.linalg.norm(A) ** 2),
            -0.5 * float(np.linalg.norm(B) ** 2),
            0.5 * float(np.linalg.norm(A + B) ** 2))


def coupling_value(Q, W, H_I_tilde, H_B) -> float:
    """S1 = 1/2 ||H_tilde ⊙ Q + H_B W H_B^H||_F^2 (the convex half)."""
    return 0.5 * float(np.linalg.norm(lift_A(Q, H_I_tilde) + lift_B(W, H_B)) ** 2)


def mm_surrogate(Qi: np.ndarray, Wi: np.ndarray, H_I_tilde: np.ndarray,
                 H_B: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Tangent-plane minorizer of the convex half at (Qi, Wi).

    Returns (script_A, script_B, constant) such that
    S1(Q, W) >= constant + Tr(script_A (Q - Qi)) + Tr(script_B (W - Wi))
    with equality at (Qi, Wi).  script_A and script_B are the Hermitian
    gradient matrices of S1 in the Tr(G ΔX) pairing.
    """
    A = lift_A(Qi, H_I_tilde)
    B = lift_B(Wi, H_B)
    script_A = herm(np.conj(H_I_tilde) * (A + B))
    script_B = herm(H_B.conj().T @ (A + B) @ H_B)
    constant = 0.5 * float(np.linalg.norm(A + B) ** 2)
    return script_A, script_B, constant


# -- DC rank penalties ----------------------------------------------------

def _top_eigvecs(a: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh(herm(a))
    return w[::-1][:k], v[:, ::-1][:, :k]


def penalty_g1(Q: np.ndarray, Qi: np.ndarray) -> float:
    """Linearized rank-1 penalty: Tr(Q) minus the tangent-plane majorant
    of the spectral norm at Qi."""
    w, u = _top_eigvecs(Qi, 1)
    u = u[:, 0]
    lin = float(np.real(u.conj() @ (Q - Qi) @ u))
    return float(np.real(np.trace(Q))) - float(w[0]) - lin


def penalty_g2(W: np.ndarray, Wi: np.ndarray) -> float:
    """Linearized rank-2 penalty: Tr(W) minus the tangent plane of the
    top-2 eigenvalue sum at Wi."""
    w, U = _top_eigvecs(Wi, 2)
    lin = float(np.real(np.trace(U.conj().T @ (W - Wi) @ U)))
    return float(np.real(np.trace(W))) - float(np.sum(w)) - lin


def rank1_residual(Q: np.ndarray) -> float:
    """(Tr(Q) - lambda_max) / Tr(Q); zero iff Q is rank one."""
    w = np.linalg.eigvalsh(herm(Q))
    tr = float(np.sum(w))
    return (tr - float(w[-1])) / tr if tr > 0 else 0.0


def rank2_residual(W: np.ndarray) -> float:
    """(Tr(W) - top-2 eigenvalue sum) / Tr(W); zero iff rank(W) <= 2."""
    w = np.linalg.eigvalsh(herm(W))
    tr = float(np.sum(w))
    return (tr - float(np.sum(w[-2:]))) / tr if tr > 0 else 0.0


# -- per-iteration convex program -----------------------------------------

def _build_problem(Qi, Wi, H_I_tilde, H_B, inv_eta, fixed_W=None):
    script_A, script_B, const = mm_surrogate(Qi, Wi if fixed_W is None else fixed_W,
                                             H_I_tilde, H_B)
    n_q = Qi.shape[0]
    C_Q = script_A.copy()
    if inv_eta > 0:
        _, u = _top_eigvecs(Qi, 1)
        C_Q -= inv_eta * (np.eye(n_q) - np.outer(u[:, 0], u[:, 0].conj()))
    blocks = [convex.BlockSpec(
        name="Q", n=n_q, linear=C_Q,
        quad_diag=np.abs(H_I_tilde) ** 2, diag_one=True)]
    if fixed_W is None:
        m = Wi.shape[0]
        C_W = script_B.copy()
        if inv_eta > 0:
            _, U2 = _top_eigvecs(Wi, 2)
            C_W -= inv_eta * (np.eye(m) - U2 @ U2.conj().T)
        # In the eigenbasis of H_B^H H_B the quadratic ||H_B W H_B^H||^2
        # becomes entrywise with weights sigma_i^2 sigma_j^2.
        s2, V = np.linalg.eigh(herm(H_B.conj().T @ H_B))
        s2 = np.maximum(s2, 0.0)
        blocks.append(convex.BlockSpec(
            name="W", n=m, linear=C_W,
            quad_diag=np.outer(s2, s2), basis=V, trace=2.0))
    return convex.ConvexProblem(blocks=blocks), const


def _surrogate_value(problem: convex.ConvexProblem, xs) -> float:
    return problem.objective(xs)


def solve_p5_iteration(Qi: np.ndarray, Wi: np.ndarray, H_I_tilde: np.ndarray,
                       H_B: np.ndarray, inv_eta: float,
                       settings: convex.SolverSettings,
                       fixed_W: np.ndarray | None = None) -> LiftedVars:
    """One penalized-surrogate SDP solve, warm-started at (Qi, Wi).

    The returned iterate never has a worse surrogate value than the warm
    start (ascent safeguard), so the exact penalized objective is
    monotone over outer iterations at fixed eta.
    """
    problem, _ = _build_problem(Qi, Wi, H_I_tilde, H_B, inv_eta, fixed_W)
    warm = {"Q": Qi} if fixed_W is not None else {"Q": Qi, "W": Wi}
    result = convex.solve(problem, warm_start=warm, settings=settings)
    start_val = _surrogate_value(problem, warm)
    if result.objective < start_val:
        return LiftedVars(Q=Qi.copy(), W=(Wi if fixed_W is None else fixed_W).copy())
    Q = result.xs["Q"]
    W = result.xs["W"] if fixed_W is None else fixed_W
    return LiftedVars(Q=Q, W=W)


def exact_penalized_objective(Q, W, H_I_tilde, H_B, inv_eta) -> float:
    """True objective minus 1/eta times the exact DC rank residuals."""
    wq = np.linalg.eigvalsh(herm(Q))
    ww = np.linalg.eigvalsh(herm(W))
    g1 = float(np.sum(wq) - wq[-1])
    g2 = float(np.sum(ww) - np.sum(ww[-2:]))
    return objective_Y2(Q, W, H_I_tilde, H_B) - inv_eta * (g1 + g2)


def _phase_coordinate_ascent(K: np.ndarray, psi: np.ndarray,
                             sweeps: int = 50, tol: float = 1e-10) -> np.ndarray:
    """Exact cyclic maximization of psi^H K psi over unit-modulus psi.

    Each coordinate update is the closed-form optimum given the others,
    so the quadratic form is non-decreasing sweep over sweep.
    """
    psi = psi.copy()
    n = psi.size
    for _ in range(sweeps):
        moved = 0.0
        for i in range(n):
            c = K[i] @ psi - K[i, i] * psi[i]
            mag = abs(c)
            if mag > 1e-15:
                new = c / mag
                moved = max(moved, abs(new - psi[i]))
                psi[i] = new
        if moved < tol:
            break
    return psi


def default_init(H_I_tilde: np.ndarray, H_B: np.ndarray, rounds: int = 100,
                 tol: float = 1e-8) -> LiftedVars:
    """Feasible rank-1 / rank-2 starting point from a cheap alternation.

    Alternates (a) the best rank-one W for fixed phases (top singular
    direction of the effective channel quadratic) with (b) phases taken
    from the top eigenvector of the phase-coupling matrix for fixed W,
    until the coupled objective stalls.  Both lifts stay exactly
    feasible, so the MM loop starts on the rank manifold it is trying to
    reach.
    """
    n_q = H_I_tilde.shape[0]
    m = H_B.shape[1]
    psi = np.ones(n_q, dtype=complex)
    W = (2.0 / m) * np.eye(m, dtype=complex)
    prev = None
    for _ in range(rounds):
        # Best W for fixed Q = psi psi^H: top eigenvector of
        # H_B^H (H_tilde ⊙ psi psi^H) H_B.
        A = H_I_tilde * np.outer(psi, psi.conj())
        coupling_w = herm(H_B.conj().T @ A @ H_B)
        _, v = _top_eigvecs(coupling_w, 1)
        W = 2.0 * np.outer(v[:, 0], v[:, 0].conj())
        # Best phases for fixed W: Tr((H_tilde ⊙ psi psi^H) B) = psi^H K^T psi.
        B = lift_B(W, H_B)
        K = herm((H_I_tilde * B.T).T)
        _, v = _top_eigvecs(K, 1)
        u = v[:, 0]
        mags = np.abs(u)
        psi = np.where(mags > 1e-14, u / np.where(mags > 1e-14, mags, 1.0), 1.0)
        psi = _phase_coordinate_ascent(K, psi)
        val = objective_Y2(np.outer(psi, psi.conj()), W, H_I_tilde, H_B)
        if prev is not None and abs(val - prev) <= tol * max(abs(prev), 1e-30):
            break
        prev = val
    return LiftedVars(Q=np.outer(psi, psi.conj()), W=W)


def run_first_subproblem(channels: ChannelSet, settings: MMSettings | None = None,
                         penalty_free: bool = False,
                         fixed_W: np.ndarray | None = None,
                         init: LiftedVars | None = None) -> tuple[LiftedVars, MMState]:
    """Outer MM + penalty loop producing lifted (Q, W).

    ``penalty_free`` runs the pure relaxation (upper-bound variant).
    ``fixed_W`` freezes the precoder lift and optimizes phases only.
    Channels are rescaled internally so the engine works on O(1)
    matrices; recorded objectives are in original units.
    """
    settings = settings or MMSettings()
    H_B = channels.H_B
    H_t = channels.H_I_tilde
    # Scale-invariant reparametrization: Q, W are unchanged if the
    # channels are rescaled, only the objective scales.
    s_b = np.linalg.norm(H_B)
    s_t = np.linalg.norm(H_t)
    if s_b == 0 or s_t == 0:
        raise ValueError("degenerate (all-zero) channels")
    H_Bn = H_B / s_b
    H_tn = H_t / s_t
    obj_scale = float(s_t * s_b ** 2)

    n_q = H_t.shape[0]
    m = H_B.shape[1]
    if init is not None:
        Q = init.Q.copy()
        W = init.W.copy()
    elif fixed_W is None:
        start = default_init(H_tn, H_Bn)
        Q, W = start.Q, start.W
    else:
        # Phases-only warm start against the frozen precoder lift.
        B = lift_B(fixed_W.astype(complex), H_Bn)
        K = herm((H_tn * B.T).T)
        _, v = _top_eigvecs(K, 1)
        u = v[:, 0]
        mags = np.abs(u)
        psi = np.where(mags > 1e-14, u / np.where(mags > 1e-14, mags, 1.0), 1.0)
        psi = _phase_coordinate_ascent(K, psi)
        Q = np.outer(psi, psi.conj())
    if fixed_W is not None:
        W = fixed_W.astype(complex)

    state = MMState()
    rank_exit = settings.rank_tol
    eta = None
    inv_eta = 0.0
    frozen = penalty_free
    prev_obj = None

    for it in range(settings.max_outer):
        if not penalty_free and eta is None:
            # Size eta so the initial penalty is a fixed fraction of the
            # (normalized) objective magnitude.
            y0 = abs(objective_Y2(Q, W, H_tn, H_Bn))
            wq = np.linalg.eigvalsh(herm(Q))
            ww = np.linalg.eigvalsh(herm(W))
            g0 = float(np.sum(wq) - wq[-1]) + float(np.sum(ww) - np.sum(ww[-2:]))
            if g0 > 1e-12 and y0 > 0:
                eta = g0 / (settings.penalty_init_ratio * y0)
            else:
                # Already (near) rank-feasible: price a unit of rank
                # violation at the objective scale.
                eta = 1.0 / (settings.penalty_init_ratio * max(y0, 1e-12))
            inv_eta = 1.0 / eta

        new = solve_p5_iteration(Q, W, H_tn, H_Bn, inv_eta, settings.inner,
                                 fixed_W=W if fixed_W is not None else None)
        Q, W = new.Q, new.W

        obj_n = objective_Y2(Q, W, H_tn, H_Bn)
        obj = obj_n * obj_scale
        g1 = rank1_residual(Q) * float(np.real(np.trace(Q)))
        g2 = rank2_residual(W) * float(np.real(np.trace(W)))
        problem, const = _build_problem(Q, W, H_tn, H_Bn, inv_eta,
                                        fixed_W=W if fixed_W is not None else None)
        sur = _surrogate_value(problem, {"Q": Q} if fixed_W is not None else {"Q": Q, "W": W})
        feas = max(float(np.max(np.abs(np.diag(Q) - 1.0))),
                   abs(float(np.real(np.trace(W))) - 2.0) if fixed_W is None else 0.0)
        state.objective.append(obj)
        state.penalized.append(obj_n - inv_eta * (g1 + g2))
        state.surrogate.append(sur * obj_scale if np.isfinite(sur) else sur)
        state.penalty_q.append(g1)
        state.penalty_w.append(g2)
        state.etas.append(np.inf if penalty_free else eta)
        state.feasibility.append(feas)
        state.iteration = it + 1

        rank_ok = penalty_free or (rank1_residual(Q) < rank_exit
                                   and (fixed_W is not None or rank2_residual(W) < rank_exit))
        obj_ok = (prev_obj is not None
                  and abs(obj_n - prev_obj) < settings.obj_tol * max(abs(prev_obj), 1e-30))
        if obj_ok and rank_ok:
            state.converged = True
            state.convergence_iteration = it + 1
            break
        prev_obj = obj_n

        if not penalty_free and not frozen:
            if rank_ok:
                frozen = True
            else:
                eta *= settings.eta_shrink
                inv_eta = 1.0 / eta

    state.eta = np.inf if penalty_free else eta
    return LiftedVars(Q=Q, W=W), state


# -- extraction ------------------------------------------------------------

def extract_phases(Q: np.ndarray, channels: ChannelSet | None = None,
                   F: np.ndarray | None = None) -> PhaseConfig:
    """Unit-modulus phases from the (near) rank-1 lift.

    Both the entrywise phases of the top eigenvector and their conjugate
    are evaluated (the Hadamard lift determines phases only up to
    conjugation); with channels and a precoder available the candidate
    with the larger effective-channel energy wins.
    """
    _, u = _top_eigvecs(Q, 1)
    u = u[:, 0]
    mags = np.abs(u)
    phi = np.where(mags > 1e-14, u / np.where(mags > 1e-14, mags, 1.0), 1.0)
    r1 = channels.R1 if channels is not None else Q.shape[0]
    cand_a = PhaseConfig(phi=phi, r1=min(r1, phi.size))
    cand_b = PhaseConfig(phi=np.conj(phi), r1=min(r1, phi.size))
    if channels is None or F is None:
        return cand_a
    score_a = np.linalg.norm(effective_channel(channels, cand_a, F))
    score_b = np.linalg.norm(effective_channel(channels, cand_b, F))
    return cand_a if score_a >= score_b else cand_b


def extract_precoder(W: np.ndarray) -> np.ndarray:
    """M x 2 precoder from the top-2 eigenpairs of W, rescaled to
    ||F||_F^2 = 2 exactly."""
    w, U = _top_eigvecs(W, 2)
    w = np.maximum(w, 0.0)
    if w.sum() <= 0:
        raise ValueError("W has no positive spectrum; cannot extract a precoder")
    F = U * np.sqrt(w)
    return F * np.sqrt(2.0 / np.sum(np.abs(F) ** 2))
