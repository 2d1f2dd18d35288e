"""koforge: Keller-Osserman classification, radial barriers, and weighted
comparison geometry for diffusion-type operators."""

__version__ = "0.1.0"

from .funcs import (  # noqa: F401
    FunctionSpec,
    GridSpec,
    KoforgeError,
    constant,
    exp_power,
    from_callable,
    mean_curvature,
    power,
    power_log,
    powered,
    product,
    sum_of,
    table,
)
from .structural import (  # noqa: F401
    ConditionEntry,
    ConditionReport,
    StructuralProfile,
    check_b_tilde,
    check_grad_ell,
    check_parameter_regimes,
    check_phi,
    check_phi_ell,
    check_theta,
    estimate_c_increasing,
)
from .transforms import (  # noqa: F401
    ConvergenceVerdict,
    MonotoneMap,
    classify_improper,
    classify_ko,
    compute_F,
    compute_Fhat,
    compute_K,
    invert_monotone,
)
from .geometry import (  # noqa: F401
    ComparisonSolution,
    ModelManifold,
    VolumeTable,
    check_ratio_monotonicity,
    check_riccati_inequality,
    lr_comparison_bound,
    model_Lr,
    petersen_constant,
    petersen_volume_bound,
    ricci_nm_radial,
    sinh_warp,
    solve_h,
    verify_bochner_radial,
    volume_table,
)
from .supersolution import (  # noqa: F401
    BuildRequest,
    RadialProfile,
    build_alpha,
    compute_Csigma,
    compute_Nsigma,
    residual_check,
    search_sigma,
    solve_Tsigma,
)
from .counterexample import (  # noqa: F401
    GlueParams,
    GluedSolution,
    assemble_u,
    build_w,
    probe_lambda,
    solve_glue_params,
    verify_subsolution,
)
from .maxprin import (  # noqa: F401
    SharpnessReport,
    WmpParams,
    sharpness_example,
    theoremB_threshold,
    wmp_constant,
)
