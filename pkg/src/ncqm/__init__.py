"""Numerics for quantum mechanics on Euclidean configuration spaces whose
coordinates acquire constant commutators from a conjugate field in momentum
space, together with the commutative-case reference constructions and the
verification suites that check every closed form against an independent
oracle."""

from .blockframe import (
    AntisymMatrix,
    BlockFrame,
    block_diagonalize,
    matched_width_matrix,
    rotate_from_frame,
    rotate_to_frame,
    theta_inverse,
)
from .coherent import (
    CoherentLabel,
    FieldConfig,
    displacement_action,
    matrix_element,
    momentum_wavefunction,
    norm_squared,
    overlap,
    uncertainty_matrices,
)
from .dynamics import (
    EvolutionConfig,
    PolynomialPotential,
    continuity_check_commutative,
    evolve,
    hamiltonian_superop,
    hermitize,
)
from .envrep import (
    EnvelopingState,
    Superoperator,
    gaussian_packet_image,
    heisenberg_suite,
    inner_product,
    localized_state_image,
    op_p,
    op_x,
    state_to_operator,
)
from .fock import (
    FockOperator,
    FockState,
    FockTruncation,
    coherent_vector,
    displacement_matrix,
    ladder_matrices,
    localized_state_vector,
    position_momentum_from_ladders,
)
from .kernels import (
    PolyGaussian,
    PosDefSymMatrix,
    star_product,
    weierstrass,
    weierstrass_moments,
    weierstrass_pde_residual,
)

__version__ = "0.1.0"
