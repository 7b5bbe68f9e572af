"""Wavelet compressed sensing: encoders, decoders, and comparison harness.

Core surface: periodized Daubechies transforms, the Fourier-wavelet
cross-Gramian with coherence/balancing diagnostics, multilevel random
subsampling, weighted l1 solvers, parameter recipes for three sensing
strategies, and a seeded sweep harness with CSV/SVG output.
"""

from .diagnostics import (LevelSparsity, RipReport, SparseModel,
                          gripl_constant_bruteforce, rip_constant_bruteforce,
                          sigma_sM_weighted, success_rate)
from .errors import (BudgetError, CapExceededError, CswaveError, InfeasibleError,
                     PreconditionError, SolverDivergenceError, UnsupportedOrderError)
from .experiment import (ResultRow, SweepConfig, emit_plot, fit_slope, make_fk,
                         run_sweep, trial_seed)
from .fourier import (BandPartition, CrossGramian, balancing_constant,
                      coherence_table, cross_gramian, dyadic_bands,
                      estimate_smoothness_q, fourier_coefficients,
                      local_coherence, natural_to_signed, signed_to_natural)
from .recipes import (FourierRecipe, GaussRecipe, OptimalRecipe, RunResult,
                      SparsityPlan, fourier_params, gauss_params, optimal_params,
                      run_fourier, run_gauss, run_optimal, sparsity_plan)
from .sampling import (LevelScheme, MeasurementOperator, SamplingPattern,
                       draw_multilevel, draw_symmetric, gaussian_operator,
                       operator_norm, scaling_weights, subsampled_gramian_operator,
                       two_level_operator)
from .solvers import (SolveOptions, SolveReport, basis_pursuit, oracle_min_l1,
                      weighted_basis_pursuit, weighted_sqrt_lasso)
from .wavelets import (CoefficientVector, PiecewiseFunction, WaveletSpec,
                       best_s_term_error, daubechies, decay_profile,
                       function_to_coefficients, linear_error, periodized_dwt,
                       periodized_idwt)

__version__ = "0.1.0"
