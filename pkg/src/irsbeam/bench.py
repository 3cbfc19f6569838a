"""Monte-Carlo benchmark harness: scenarios, schemes, sweeps, CSV output.

Every sweep is deterministic under its master seed: trials get paired
per-trial seed streams (identical channel draws across schemes), and
aggregation sorts rows before writing.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from . import alamouti, hybrid, joint_opt
from .channels import ChannelSet, generate_channels, generate_split_user_channels, perturb
from .config import SystemConfig, validate_config

SCHEMES = (
    "ProposedHP",
    "ProposedFD",
    "UpperBoundHP",
    "UpperBoundFD",
    "NoBeamforming",
    "AntennaSelection",
    "RandomIRS",
    "SDR",
)


@dataclass
class Scenario:
    """Named geometry preset: per-link distances and IRS sizes."""

    name: str
    r_per_irs: int = 25
    d_b1: float = 30.0
    d_b2: float = 30.0
    d_i1: float = 30.0
    d_i2: float = 30.0
    user_mode: str = "co-located"       # or "coverage-split"
    # coverage-split: distance from user k to IRS i, meters
    user_irs_dist: tuple = ((15.0, 50.0), (50.0, 15.0))

    def __post_init__(self):
        for d in (self.d_b1, self.d_b2, self.d_i1, self.d_i2):
            if d <= 0:
                raise ValueError("scenario distances must be positive")
        if self.user_mode not in ("co-located", "coverage-split"):
            raise ValueError(f"unknown user mode {self.user_mode!r}")


SCENARIO_PRESETS = {
    "first": Scenario(name="first", r_per_irs=25),
    "second": Scenario(name="second", r_per_irs=50, d_b2=600.0, d_i2=600.0),
    "third": Scenario(name="third", r_per_irs=50),
    "coverage": Scenario(name="coverage", r_per_irs=25, user_mode="coverage-split"),
}


@dataclass
class SolveReport:
    scheme: str
    seed: int
    objective_trace: list = field(default_factory=list)
    snr_linear: float = 0.0
    rate: float = 0.0
    rank_residuals: tuple = (np.nan, np.nan)
    decomposition_residual: float = np.nan
    wall_time: float = 0.0


def scenario_config(cfg: SystemConfig, scenario: Scenario) -> SystemConfig:
    return validate_config(cfg.with_overrides(
        R1=scenario.r_per_irs, R2=scenario.r_per_irs,
        irs1_dims=None, irs2_dims=None))


def scenario_channels(cfg: SystemConfig, scenario: Scenario,
                      rng: np.random.Generator) -> ChannelSet:
    if scenario.user_mode == "coverage-split":
        return generate_split_user_channels(cfg, rng, np.asarray(scenario.user_irs_dist))
    return generate_channels(cfg, rng, d_b1=scenario.d_b1, d_b2=scenario.d_b2,
                             d_i1=scenario.d_i1, d_i2=scenario.d_i2)


def fd_oracle_for_fixed_phases(channels: ChannelSet, phases: alamouti.PhaseConfig,
                               p_t_w: float, sigma2: float) -> tuple[np.ndarray, float]:
    """Closed-form optimal digital precoder for fixed phases.

    All power on the top right-singular direction of the effective
    channel: F = sqrt(2) [v1, 0], SNR = (P_t / 2 sigma^2) * 2 sigma_1^2.
    """
    h_eff = (channels.H_I * phases.phi) @ channels.H_B
    _, s, vh = np.linalg.svd(h_eff, full_matrices=False)
    F = np.zeros((channels.M, 2), dtype=complex)
    if s.size and s[0] > 0:
        F[:, 0] = np.sqrt(2.0) * vh[0].conj()
    gain = 2.0 * float(s[0] ** 2) if s.size else 0.0
    return F, p_t_w / (2.0 * sigma2) * gain


def _lifted_point_from(phases: alamouti.PhaseConfig, F: np.ndarray) -> joint_opt.LiftedVars:
    """Feasible lifted pair whose coupled objective equals ||G||_F^2 for
    the given phases/precoder (Hadamard-lift conjugation included)."""
    q = np.outer(np.conj(phases.phi), phases.phi)
    return joint_opt.LiftedVars(Q=q, W=F @ F.conj().T)


@dataclass
class TrialArtifacts:
    """Everything noise-independent computed once per channel draw.

    ``gains`` maps scheme name to ||G||_F^2 (or the lifted bound for the
    UpperBound schemes); SNR at noise power s2 is p_t_w/(2 s2) * gain.
    """

    gains: dict
    proposed_trace: list
    rank_residuals: tuple
    decomposition_residual: float
    phases: alamouti.PhaseConfig
    precoder_fd: np.ndarray
    precoder_hp: hybrid.PrecoderSet
    errors: dict


def compute_trial_artifacts(cfg: SystemConfig, channels: ChannelSet,
                            rng: np.random.Generator,
                            mm_settings: joint_opt.MMSettings | None = None,
                            ao_settings: hybrid.AOSettings | None = None,
                            schemes=SCHEMES) -> TrialArtifacts:
    mm_settings = mm_settings or joint_opt.MMSettings()
    ao_settings = ao_settings or hybrid.AOSettings()
    schemes = set(schemes)
    gains: dict[str, float] = {}
    errors: dict[str, str] = {}

    # Proposed pipeline (shared by ProposedFD/HP, AntennaSelection, bounds).
    phases = None
    F_fd = None
    precoder_hp = None
    trace: list = []
    rank_res = (np.nan, np.nan)
    decomp_res = np.nan
    needs_proposed = bool({"ProposedFD", "ProposedHP", "UpperBoundFD",
                           "UpperBoundHP", "SDR", "AntennaSelection"} & schemes)
    if needs_proposed:
        lifted, state = joint_opt.run_first_subproblem(channels, mm_settings)
        F_fd = joint_opt.extract_precoder(lifted.W)
        phases = joint_opt.extract_phases(lifted.Q, channels, F_fd)
        G_fd = alamouti.effective_channel(channels, phases, F_fd)
        gains["ProposedFD"] = float(np.linalg.norm(G_fd) ** 2)
        rank_res = (joint_opt.rank1_residual(lifted.Q), joint_opt.rank2_residual(lifted.W))
        trace = list(state.objective)

    if "ProposedHP" in schemes:
        precoder_hp, ao_report = hybrid.run_second_subproblem(F_fd, cfg.N_RF, ao_settings)
        G_hp = alamouti.effective_channel(channels, phases,
                                          precoder_hp.F_RF @ precoder_hp.F_BB)
        gains["ProposedHP"] = float(np.linalg.norm(G_hp) ** 2)
        decomp_res = ao_report.final_residual

    # Penalty-free relaxation, warm-started at the extracted feasible
    # point so the bound dominates the proposed objective by MM ascent.
    if {"UpperBoundFD", "UpperBoundHP", "SDR"} & schemes:
        ub_lifted, _ = joint_opt.run_first_subproblem(
            channels, mm_settings, penalty_free=True,
            init=_lifted_point_from(phases, F_fd))
        bound = max(joint_opt.objective_Y2(ub_lifted.Q, ub_lifted.W,
                                           channels.H_I_tilde, channels.H_B),
                    gains["ProposedFD"])
        gains["UpperBoundFD"] = bound
        gains["UpperBoundHP"] = bound
        # SDR: extraction from the relaxation, no penalties.
        try:
            F_sdr = joint_opt.extract_precoder(ub_lifted.W)
            ph_sdr = joint_opt.extract_phases(ub_lifted.Q, channels, F_sdr)
            G_sdr = alamouti.effective_channel(channels, ph_sdr, F_sdr)
            gains["SDR"] = float(np.linalg.norm(G_sdr) ** 2)
        except ValueError as exc:
            errors["SDR"] = str(exc)

    if "NoBeamforming" in schemes:
        F0 = np.zeros((cfg.M, 2), dtype=complex)
        F0[0, 0] = 1.0
        F0[1, 1] = 1.0
        nb_lifted, _ = joint_opt.run_first_subproblem(
            channels, mm_settings, fixed_W=F0 @ F0.conj().T)
        ph_nb = joint_opt.extract_phases(nb_lifted.Q, channels, F0)
        G_nb = alamouti.effective_channel(channels, ph_nb, F0)
        gains["NoBeamforming"] = float(np.linalg.norm(G_nb) ** 2)

    if "AntennaSelection" in schemes:
        h_eff = (channels.H_I * phases.phi) @ channels.H_B
        idx = np.argsort(np.linalg.norm(h_eff, axis=0))[-2:]
        _, s, vh = np.linalg.svd(h_eff[:, idx], full_matrices=False)
        F_as = np.zeros((cfg.M, 2), dtype=complex)
        if s.size and s[0] > 0:
            F_as[idx, 0] = np.sqrt(2.0) * vh[0].conj()
        gains["AntennaSelection"] = 2.0 * float(s[0] ** 2) if s.size else 0.0

    if "RandomIRS" in schemes:
        phi_rnd = np.exp(2j * np.pi * rng.random(channels.R1 + channels.R2))
        ph_rnd = alamouti.PhaseConfig(phi=phi_rnd, r1=channels.R1)
        _, snr_rnd = fd_oracle_for_fixed_phases(channels, ph_rnd, 2.0, 1.0)
        gains["RandomIRS"] = snr_rnd  # p_t_w=2, sigma2=1 makes this the raw gain

    return TrialArtifacts(
        gains=gains,
        proposed_trace=trace,
        rank_residuals=rank_res,
        decomposition_residual=decomp_res,
        phases=phases,
        precoder_fd=F_fd,
        precoder_hp=precoder_hp,
        errors=errors,
    )


def run_scheme(scheme: str, channels: ChannelSet, cfg: SystemConfig,
               rng: np.random.Generator | None = None,
               mm_settings: joint_opt.MMSettings | None = None,
               ao_settings: hybrid.AOSettings | None = None) -> SolveReport:
    """Run one benchmark scheme on one channel draw at cfg's noise power."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    rng = rng or np.random.default_rng(cfg.seed)
    t0 = time.perf_counter()
    art = compute_trial_artifacts(cfg, channels, rng, mm_settings, ao_settings,
                                  schemes=(scheme,))
    if scheme in art.errors:
        raise RuntimeError(f"scheme {scheme} failed: {art.errors[scheme]}")
    gain = art.gains[scheme]
    snr_lin = cfg.p_t_w / (2.0 * cfg.sigma2) * gain
    return SolveReport(
        scheme=scheme,
        seed=cfg.seed,
        objective_trace=art.proposed_trace,
        snr_linear=snr_lin,
        rate=alamouti.achievable_rate(snr_lin),
        rank_residuals=art.rank_residuals,
        decomposition_residual=art.decomposition_residual,
        wall_time=time.perf_counter() - t0,
    )


def _sigma2_for(cfg: SystemConfig, snr_db: float) -> float:
    """Transmit-SNR axis: sigma2 scaled against fixed P_t."""
    return cfg.p_t_w / (10.0 ** (snr_db / 10.0))


def _one_sweep_trial(cfg, scenario, schemes, seed_seq, mm_settings, ao_settings):
    ch_ss, scheme_ss = seed_seq.spawn(2)
    channels = scenario_channels(cfg, scenario, np.random.default_rng(ch_ss))
    art = compute_trial_artifacts(cfg, channels, np.random.default_rng(scheme_ss),
                                  mm_settings, ao_settings, schemes=schemes)
    return art.gains, art.errors, art.proposed_trace


def sweep(cfg: SystemConfig, scenario: Scenario, schemes, snr_grid_db,
          n_trials: int, n_jobs: int = 1,
          mm_settings: joint_opt.MMSettings | None = None,
          ao_settings: hybrid.AOSettings | None = None):
    """Mean and standard error of the achievable rate per (scheme, SNR).

    Returns (rows, failures, traces); rows are dicts with scheme,
    snr_db, mean_rate, stderr_rate, n_trials.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    cfg = scenario_config(cfg, scenario)
    schemes = tuple(schemes)
    seeds = np.random.SeedSequence(cfg.seed).spawn(n_trials)
    results = Parallel(n_jobs=n_jobs)(
        delayed(_one_sweep_trial)(cfg, scenario, schemes, ss, mm_settings, ao_settings)
        for ss in seeds)

    failures = []
    rows = []
    traces = [trace for _, _, trace in results]
    for scheme in schemes:
        per_trial = []
        for t, (gains, errors, _) in enumerate(results):
            if scheme in errors:
                failures.append({"scheme": scheme, "trial": t, "error": errors[scheme]})
            elif scheme in gains:
                per_trial.append(gains[scheme])
        if not per_trial:
            continue
        gains_arr = np.asarray(per_trial)
        for snr_db in snr_grid_db:
            s2 = _sigma2_for(cfg, snr_db)
            rates = np.log2(1.0 + cfg.p_t_w / (2.0 * s2) * gains_arr)
            stderr = float(rates.std(ddof=1) / np.sqrt(rates.size)) if rates.size > 1 else 0.0
            rows.append({
                "scheme": scheme,
                "snr_db": float(snr_db),
                "mean_rate": float(rates.mean()),
                "stderr_rate": stderr,
                "n_trials": int(rates.size),
            })
    rows.sort(key=lambda r: (r["scheme"], r["snr_db"]))
    return rows, failures, traces


def _one_uncertainty_trial(cfg, scenario, alphas, seed_seq, mm_settings, ao_settings):
    ch_ss, scheme_ss, pert_ss = seed_seq.spawn(3)
    channels = scenario_channels(cfg, scenario, np.random.default_rng(ch_ss))
    art = compute_trial_artifacts(cfg, channels, np.random.default_rng(scheme_ss),
                                  mm_settings, ao_settings,
                                  schemes=("ProposedFD", "ProposedHP"))
    f_hp = art.precoder_hp.F_RF @ art.precoder_hp.F_BB
    g_nom = alamouti.effective_channel(channels, art.phases, f_hp)
    out = {}
    for alpha in alphas:
        # Re-seed identically per alpha: the same noise draw scaled by alpha.
        ch_pert = perturb(channels, alpha, np.random.default_rng(pert_ss))
        g_true = alamouti.effective_channel(ch_pert, art.phases, f_hp)
        out[float(alpha)] = (g_true, g_nom)
    return out


def uncertainty_sweep(cfg: SystemConfig, alphas, snr_grid_db, n_trials: int,
                      scenario: Scenario | None = None, n_jobs: int = 1,
                      mm_settings: joint_opt.MMSettings | None = None,
                      ao_settings: hybrid.AOSettings | None = None):
    """Optimize on nominal channels, evaluate the frozen design on
    perturbed channels; mean rate per (alpha, SNR point).

    The SNR axis is the post-combining SNR the frozen design delivers
    over the channel it is actually evaluated on: per trial and alpha the
    noise power is set so a perfectly informed combiner would sit exactly
    at the axis value, and alpha = 0 reproduces log2(1 + SNR).
    Degradation with alpha therefore isolates the projection loss and
    symbol leakage of combining with the outdated nominal estimate.
    """
    scenario = scenario or SCENARIO_PRESETS["first"]
    cfg = scenario_config(cfg, scenario)
    alphas = [float(a) for a in alphas]
    if any(a < 0 for a in alphas):
        raise ValueError("alphas must be >= 0")
    seeds = np.random.SeedSequence(cfg.seed).spawn(n_trials)
    results = Parallel(n_jobs=n_jobs)(
        delayed(_one_uncertainty_trial)(cfg, scenario, alphas, ss, mm_settings, ao_settings)
        for ss in seeds)

    rows = []
    for alpha in alphas:
        pairs = [res[alpha] for res in results]
        for snr_db in snr_grid_db:
            target = 10.0 ** (snr_db / 10.0)
            rates = []
            for g_true, g_nom in pairs:
                # Noise power such that matched combining on the actual
                # channel sits exactly at the axis SNR for this trial.
                s2 = cfg.p_t_w * float(np.linalg.norm(g_true) ** 2) / (2.0 * target)
                sinrs = alamouti.mismatched_sinrs(g_true, g_nom, cfg.p_t_w, s2)
                rates.append(0.5 * sum(np.log2(1.0 + s) for s in sinrs))
            rates = np.asarray(rates)
            stderr = float(rates.std(ddof=1) / np.sqrt(rates.size)) if rates.size > 1 else 0.0
            rows.append({
                "alpha": alpha,
                "snr_db": float(snr_db),
                "mean_rate": float(rates.mean()),
                "stderr_rate": stderr,
                "n_trials": int(rates.size),
            })
    rows.sort(key=lambda r: (r["alpha"], r["snr_db"]))
    return rows


def small_instance_oracle(cfg: SystemConfig, channels: ChannelSet,
                          n_levels: int = 16) -> float:
    """Exhaustive certified optimum at tiny scale: enumerate quantized
    phase vectors, closed-form digital precoder per choice; returns the
    best SNR at cfg's noise power."""
    n_phases = channels.R1 + channels.R2
    if n_phases > 4:
        raise ValueError("oracle limited to at most 4 total reflecting elements")
    levels = np.exp(2j * np.pi * np.arange(n_levels) / n_levels)
    best = 0.0
    grid = np.stack(np.meshgrid(*([levels] * n_phases), indexing="ij"), axis=-1)
    for phi in grid.reshape(-1, n_phases):
        ph = alamouti.PhaseConfig(phi=phi, r1=channels.R1)
        _, val = fd_oracle_for_fixed_phases(channels, ph, cfg.p_t_w, cfg.sigma2)
        if val > best:
            best = val
    return best


# -- CSV output ------------------------------------------------------------

def write_csv(path, rows, fieldnames=None) -> None:
    rows = list(rows)
    if fieldnames is None:
        fieldnames = list(rows[0].keys()) if rows else []
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) for k, v in row.items()})


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def gnuplot_columns(rows, x_key: str, group_key: str, value_key: str):
    """Reshape long-format rows to one x column plus one column per group
    (gnuplot-ready layout).  Missing cells are left empty."""
    xs = sorted({r[x_key] for r in rows})
    groups = sorted({r[group_key] for r in rows})
    table = {(r[x_key], r[group_key]): r[value_key] for r in rows}
    out = []
    for x in xs:
        row = {x_key: x}
        for g in groups:
            row[str(g)] = table.get((x, g), "")
        out.append(row)
    return out
