"""Symplectic shear calculus and truncated-jet interpolation on C^(2n)."""

from .defaults import DEFAULT_TOL
from .errors import PreconditionError, SchemaError, SympjetError, ToleranceError
from .factor import (ElemFactor, FactorWord, Transvection, elem_matrix,
                     factor_sp, shear_of_factor, split_symmetric_block,
                     sym_basis)
from .interpolate import (FlatSpec, InterpolationJob, StageJob, TameTarget,
                          delta_vector, finite_jet_interpolate, higher_stage,
                          lambda_image_check, linear_stage, multi_point_stage,
                          point_mover, tame_normalizer)
from .jets import (JetMap, homogeneous_part, jet_compose, jet_invert,
                   linear_part, poly_eval)
from .osculate import (CompactRegion, OsculationConstraint,
                       anchored_one_function, attenuation_factor,
                       constrained_polynomial, hermite_osculate,
                       magic_function)
from .poly import PolyScalar, UniPoly
from .shears import (GradShear, Shear, Word, shear_apply, word_apply,
                     word_inverse, word_jet, word_verify)
from .symplectic import (HamiltonianDecomposition, J_matrix, SympMatrix,
                         TwoFormPoly, hamiltonian_decompose,
                         hamiltonian_field, hamiltonian_potential,
                         linear_form_power_basis, nhat, omega,
                         pullback_defect, symplectic_order)
from .tame import (DiscreteSet, ShellSet, a_limit, a_sequence,
                   covering_certificate, fiber_separation,
                   gradient_interpolant, lagrangian_tame_word, plane_embed,
                   projection_bound_check, rr_delta, set_split,
                   shell_constants, shell_delta, unavoidable_set)

__version__ = "0.1.0"
