"""Spectral gaps of higher-order periodic operators with distributional potentials.

Everything is computed on the Fourier side from the coefficients ``v(k)``
of the potential, using truncations of ``D + B`` with
``D = diag((k pi)^{2m})`` and ``B`` the Toeplitz matrix of ``v``.
"""
from .seqspace import (
    ExplicitProfile, FourierSeq, PotentialSpec, RandomDecayProfile, WeightParams,
    conv_bound_ratio, convolve, h_norm, make_potential,
)
from .operators import (
    ConvergenceError, ExtM, SingularOperatorError, ThresholdSet, TruncatedOp, Vert,
    build_B, build_D, build_S, hs_norm, lemma1_bound, lemma2_bound, lemma3_checks,
    lemma4_thresholds, op_norm, resolvent_apply,
)
from .spectrum import (
    ContourError, EigenList, EigensolverError, PairRow, PairTable, eigs_truncated,
    gap_via_reduction, pair_eigs, parity_split, projector_distance, q0_matrix, q1_norm,
    riesz_projector, tau_via_trace,
)
from .asymptotics import (
    DecayFit, ResidualSeries, compute_l, compute_w, corollary1_check, decay_fit,
    h_membership, predict_gap_first, predict_gap_refined, predict_tau, residual_series,
)
from .harness import ExperimentConfig, RunReport, convergence_study, emit_plots_data, run_experiment

__version__ = "0.1.0"
