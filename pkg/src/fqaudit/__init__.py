"""Atomic measures, probe pairings, almost periods and uniqueness audits."""

from .almost_periods import (AlmostPeriodSet, Discrepancy, SampledFunction, discrepancy,
                             exponential_sum, find_almost_periods, relative_dense_radius, sampled)
from .generators import (dirac_comb, model_set, model_set_density, perturb,
                         perturbation_decomposition, remark3_measure)
from .harness import (AuditConfig, AuditReport, DegenerateAccumulation, HypothesisViolation,
                      build_discrepancy_family, choose_rho, dual_audit, jet_audit, shell_selector,
                      uniqueness_audit, witness_point)
from .measures import (AtomicMeasure, BallUnion, Cluster, ClusterDecomposition, GrowthProfile,
                       JetDistribution, cluster_decompose, cluster_stats, growth_profile,
                       min_separation, restrict, singleton_decomposition, sparsity_bound,
                       total_variation)
from .probes import (ProbeFunction, bump, derivative_eval, gaussian, monomial_bump, pair_jets,
                     pair_measure, schwartz_norm, scaled_translate, standard_bump)
from .spectral import (QuadratureError, Spectrum, amplitude_estimate, convergence_guard,
                       probe_fourier, spectral_evaluate)

__version__ = "0.1.0"

__all__ = [
    "AlmostPeriodSet", "AtomicMeasure", "AuditConfig", "AuditReport", "BallUnion", "Cluster",
    "ClusterDecomposition", "DegenerateAccumulation", "Discrepancy", "GrowthProfile",
    "HypothesisViolation", "JetDistribution", "ProbeFunction", "QuadratureError",
    "SampledFunction", "Spectrum", "amplitude_estimate", "build_discrepancy_family", "bump",
    "choose_rho", "cluster_decompose", "cluster_stats", "convergence_guard", "derivative_eval",
    "dirac_comb", "discrepancy", "dual_audit", "exponential_sum", "find_almost_periods",
    "gaussian", "growth_profile", "jet_audit", "min_separation", "model_set",
    "model_set_density", "monomial_bump", "pair_jets", "pair_measure", "perturb",
    "perturbation_decomposition", "probe_fourier", "relative_dense_radius", "remark3_measure",
    "restrict", "sampled", "scaled_translate", "schwartz_norm", "shell_selector",
    "singleton_decomposition", "sparsity_bound", "spectral_evaluate", "standard_bump",
    "total_variation",
    "uniqueness_audit", "witness_point",
]
