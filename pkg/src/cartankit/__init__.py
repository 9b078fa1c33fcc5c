"""Numerics for bounded symmetric domains realised as unit balls of JB*-triples."""

from .bergmann import (
    BergmannPower,
    MobiusMap,
    bergmann,
    bergmann_power,
    gab_ratio,
    jb_operator_norm,
    kobayashi_ball_contains,
    kobayashi_distance,
    mobius_apply,
    mobius_inverse_apply,
)
from .dynamics import (
    Compose,
    Constant,
    DirectSumMap,
    LinearIsometry,
    Mobius,
    ScalarScale,
    boundary_component,
    closed_form_mobius_iterates,
    denjoy_wolff_report,
    distance_to_component_closure,
    earle_hamilton_fixed_point,
    eval_map,
    iterate_orbit,
    wolff_data,
)
from .errors import (
    CartanError,
    ConvergenceError,
    DecompositionError,
    DomainError,
    FixedPointError,
    FrameAlignmentError,
    SingularityError,
    SpaceMismatchError,
    UnsupportedOperationError,
    ValidationError,
)
from .horoball import (
    ApproachSequence,
    HoroballParams,
    big_F,
    corollary_h_check,
    h_domain_contains,
    horoball_contains,
    horoball_params,
    wolff_sigmas,
)
from .linop import LinearOp
from .peirce import (
    Frame,
    SpectralDecomp,
    Tripotent,
    are_orthogonal,
    is_tripotent,
    joint_peirce_projection,
    peirce_projection,
    rank_of,
    refine_to_minimal_frame,
    spectral_decompose,
)
from .triple import (
    Element,
    FactorDesc,
    TripleSpace,
    box_operator,
    inject_summand,
    jb_norm,
    project_summand,
    random_element,
    spin_conjugate,
    triple_product,
)

__version__ = "0.1.0"
