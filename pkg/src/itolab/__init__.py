"""Desk-scale verification lab for Poisson stochastic integral moment
inequalities, vector-valued Rosenthal inequalities, and random matrix norm
bounds, built on exact finite-space enumeration with Monte Carlo fallback."""

from .lq import (ExponentPair, FiniteMeasureSpace, InvalidInputError, LqElement,
                 StepFunction, decreasing_rearrangement, embed, modulus_square,
                 norm_q, pair, point_space, uniform_space)
from .prob import (BudgetExceededError, FiniteProbabilitySpace, RandomLqVariable,
                   TruncatedPoisson, centered_poisson_moment, exact_moment,
                   independent_product, philox, product_space, rademacher_space,
                   sample, truncated_poisson)
from .seqnorms import (Decomposition, LqSequence, RegimeSpec, brute_force_sum_norm,
                       composite_norm, duality_gap, norm_D, norm_S, regime_select)
from .poisson import (GridPartition, PoissonFieldRealization, realize, refine,
                      verify_poisson_moment_bounds)
from .integrator import (SimpleAdaptedProcess, StepProcess, build_exact_model,
                         decoupled_integrate, decoupling_difference_sequence,
                         deterministic_process, grid_condition, integrate,
                         integrate_exact, process_norm, running_max_moment)
from .report import CheckReport
from .checks import (ConstantTable, check_decoupling, check_doob,
                     check_hoffmann_jorgensen, check_ito_isomorphism,
                     check_kahane, check_khintchine, check_pq_ge2_equivalence,
                     check_rosenthal_lq, check_rosenthal_positive,
                     check_rosenthal_scalar, check_symmetrization,
                     check_type_cotype)
from .randmat import (EntryLaw, MatrixEnsemble, bound_entry_matrix, bound_latala,
                      bound_matrix_sum, gaussian_law, rademacher_law,
                      seginer_ensemble, two_atom_law)

__version__ = "0.1.0"
