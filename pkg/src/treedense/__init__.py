"""Exact desk-scale tools for branching density in binary trees.

Library layout:

- :mod:`treedense.dyadic` — exact power-of-two rationals
- :mod:`treedense.core` — bitstrings, cylinder measures, finite trees, schedules
- :mod:`treedense.treespace` — one-or-two-branching trees: sampling and counting
- :mod:`treedense.kc` — prefix-free code allocation and complexity oracles
- :mod:`treedense.hitting` — hitting sets, costs, pull-backs, envelopes
- :mod:`treedense.densify` — window families, the induced tree map, experiments
- :mod:`treedense.cli` — reproducible command-line artifacts
"""

from .core import (
    AffineGapWitness,
    CompatReport,
    FiniteTree,
    GapUpperBound,
    LevelSchedule,
    PreconditionError,
    ResourceCapError,
    SeriesReport,
    all_strings,
    compat_check,
    concat,
    concat_power,
    is_prefix_free,
    measure,
    minimal_cover,
    overlap_measure,
    overlap_minus_measure,
    relative_measure,
    series_partial,
    sort_strings,
)
from .densify import (
    HittingFamily,
    MCResult,
    build_family,
    decode_tree,
    derived_tree,
    family_image,
    image_slices,
    mc_experiment,
    transfer_requests,
    window_image,
    window_index,
)
from .dyadic import Dyadic
from .hitting import (
    EnvelopeFamily,
    HittingReport,
    MissWitness,
    boost_density,
    check_envelope,
    finite_subcover,
    hits,
    hitting_cost,
    pull_back,
)
from .kc import (
    AllocationError,
    ComplexityOracle,
    KCAllocator,
    KCRequest,
    allocate_all,
    checkpoint_deficiency,
    compressor_oracle,
    deficiency_requests,
    incompressible_truncation,
    length_stub,
    machine_oracle,
    table_oracle,
)
from .treespace import (
    Extends,
    LevelTree,
    PathsInside,
    RngSeed,
    ScheduleBranching,
    Skeletal,
    TreeClass,
    branching_defects,
    count_prefixes,
    density_profile,
    enumerate_class,
    is_skeletal,
    prune_to_branching,
    sample_tree,
)
