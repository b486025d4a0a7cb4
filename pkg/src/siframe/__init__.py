"""Frame analysis toolkit for shift-invariant spaces in mixed-norm spaces.

Decides whether the integer translates of finitely many generators form
a mixed-norm frame of their shift-invariant span, by computing the
fibered bracket Gramian, its eigenvalue bands and rank profile;
constructs dual generators and runs the reconstruction identity; and
validates the equivalence structure exactly on finite groups.
"""

from .corpus import corpus_build, corpus_list
from .discrete_oracle import (
    DiscreteModel,
    build_synthesis_matrix,
    exact_fiber_profile,
    verdict_equivalence,
)
from .duality import (
    DualSystem,
    coefficient_cost_upper,
    dual_generators,
    frame_bounds_empirical,
    reconstruct,
    scaling_limit_diagnostic,
)
from .errors import (
    ArityMismatch,
    BadParams,
    BadScenario,
    ConditionIIIFails,
    DimensionMismatch,
    NonHermitianFiber,
    PreconditionSumNonzero,
    SiframeError,
    StageFailure,
    TailMassExceeded,
    UnknownCorpusEntry,
    WindowTooSmall,
)
from .fiberization import (
    FrequencyGrid,
    GramianField,
    SpectralProfile,
    bracket,
    condition_iii_check,
    fourier_fibers,
    spectral_profile,
)
from .grids import (
    CoefficientArray,
    Decay,
    MixedExponents,
    SampledField,
    UniformGrid,
    delta_coeffs,
    field_from_samples,
)
from .lattice_ops import GeneratorSystem, analyze, semi_convolve, synthesize
from .mixed_norms import Lpq_norm, amalgam_norm, lpq_seq_norm, wiener_norm
from .report import FrameReport, run_analyze, run_oracle

__version__ = "0.1.0"
