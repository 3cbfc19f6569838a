"""Estimator-style wrappers around the optimization pipeline.

Both classes follow the scikit-learn protocol: hyperparameters in
``__init__``, ``fit`` computes trailing-underscore attributes, and
``get_params``/``set_params`` come from ``BaseEstimator``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from . import alamouti, hybrid, joint_opt
from .channels import ChannelSet


class DoubleIrsBeamformer(BaseEstimator):
    """Joint phase/precoder design for the Alamouti double-IRS downlink.

    Fit on a ChannelSet; afterwards ``phases_`` holds the unit-modulus
    reflection coefficients, ``precoder_`` the fully digital precoder
    (and ``F_RF_``/``F_BB_`` its hybrid factorization when ``n_rf`` is
    given), and ``gain_`` the achieved effective-channel energy
    ||G||_F^2.
    """

    def __init__(self, max_outer: int = 50, obj_tol: float = 1e-4,
                 rank_tol: float = 1e-3, eta_shrink: float = 0.25,
                 penalty_init_ratio: float = 0.3, n_rf: int | None = None):
        self.max_outer = max_outer
        self.obj_tol = obj_tol
        self.rank_tol = rank_tol
        self.eta_shrink = eta_shrink
        self.penalty_init_ratio = penalty_init_ratio
        self.n_rf = n_rf

    def _settings(self) -> joint_opt.MMSettings:
        return joint_opt.MMSettings(
            max_outer=self.max_outer, obj_tol=self.obj_tol,
            rank_tol=self.rank_tol, eta_shrink=self.eta_shrink,
            penalty_init_ratio=self.penalty_init_ratio)

    def fit(self, X: ChannelSet, y=None) -> "DoubleIrsBeamformer":
        if not isinstance(X, ChannelSet):
            raise TypeError("X must be a ChannelSet")
        lifted, state = joint_opt.run_first_subproblem(X, self._settings())
        self.lifted_ = lifted
        self.state_ = state
        self.precoder_ = joint_opt.extract_precoder(lifted.W)
        self.phases_ = joint_opt.extract_phases(lifted.Q, X, self.precoder_)
        if self.n_rf is not None:
            precoders, report = hybrid.run_second_subproblem(self.precoder_, self.n_rf)
            self.F_RF_ = precoders.F_RF
            self.F_BB_ = precoders.F_BB
            self.beta_ = precoders.beta
            self.decomposition_residual_ = report.final_residual
            F_used = self.F_RF_ @ self.F_BB_
        else:
            F_used = self.precoder_
        G = alamouti.effective_channel(X, self.phases_, F_used)
        self.effective_channel_ = G
        self.gain_ = float(np.linalg.norm(G) ** 2)
        self.n_iter_ = state.iteration
        return self

    def score(self, X: ChannelSet, y=None) -> float:
        """Effective-channel energy of the fitted design on channels X."""
        if not hasattr(self, "phases_"):
            raise AttributeError("call fit before score")
        F_used = (self.F_RF_ @ self.F_BB_) if self.n_rf is not None else self.precoder_
        G = alamouti.effective_channel(X, self.phases_, F_used)
        return float(np.linalg.norm(G) ** 2)


class HybridPrecoderFactorizer(BaseEstimator):
    """Factor a fully digital precoder into unit-modulus analog and
    small digital matrices.

    ``fit(F)`` sets ``F_RF_``, ``F_BB_``, ``beta_`` and the relative fit
    residual ``residual_``.
    """

    def __init__(self, n_rf: int = 2, max_iters: int = 100,
                 residual_tol: float = 1e-5, use_sdr_init: bool = False):
        self.n_rf = n_rf
        self.max_iters = max_iters
        self.residual_tol = residual_tol
        self.use_sdr_init = use_sdr_init

    def fit(self, X: np.ndarray, y=None) -> "HybridPrecoderFactorizer":
        X = np.asarray(X)
        if X.ndim != 2:
            raise ValueError("X must be a 2-D precoder matrix")
        settings = hybrid.AOSettings(max_iters=self.max_iters,
                                     residual_tol=self.residual_tol,
                                     use_sdr_init=self.use_sdr_init)
        precoders, report = hybrid.run_second_subproblem(X, self.n_rf, settings)
        self.F_RF_ = precoders.F_RF
        self.F_BB_ = precoders.F_BB
        self.beta_ = precoders.beta
        self.residual_ = report.final_residual
        self.n_iter_ = report.iterations
        return self

    def transform(self, X=None) -> np.ndarray:
        """Return the hybrid product F_RF F_BB of the fitted factorization."""
        if not hasattr(self, "F_RF_"):
            raise AttributeError("call fit before transform")
        return self.F_RF_ @ self.F_BB_
