from .bounds import (
    classical_bound,
    count_strategies,
    random_strategy,
    strategy_to_table,
)
from .quantum import (
    bell_analyzer,
    born_table,
    classify_assembly,
    classify_effect,
    gate_measurement,
    partial_bsm_ideal,
    partial_bsm_lab,
    partial_bsm_noisy,
    relabel_sigma_x,
    trigonal_preparations,
    unentangled_povm_pair,
    validate_assembly,
)
from .seesaw import (
    certify_povm_optimality,
    povm_update,
    require_convergence,
    seesaw,
    start_point,
    state_update,
)
from .simulate import (
    apply_splitting_correction,
    bootstrap_stderr,
    estimate,
    load_counts,
    prep_characterization,
    sample_counts,
    save_counts,
    visibility_sweep,
)
from .witnesses import (
    BUILTIN_WITNESSES,
    evaluate,
    load_witness,
    resolve_witness,
    verdict,
    witness_v,
    witness_w,
)

__all__ = [
    "BUILTIN_WITNESSES",
    "apply_splitting_correction",
    "bell_analyzer",
    "bootstrap_stderr",
    "born_table",
    "certify_povm_optimality",
    "classical_bound",
    "classify_assembly",
    "classify_effect",
    "count_strategies",
    "estimate",
    "evaluate",
    "gate_measurement",
    "load_counts",
    "load_witness",
    "partial_bsm_ideal",
    "partial_bsm_lab",
    "partial_bsm_noisy",
    "povm_update",
    "prep_characterization",
    "random_strategy",
    "relabel_sigma_x",
    "require_convergence",
    "resolve_witness",
    "sample_counts",
    "save_counts",
    "seesaw",
    "start_point",
    "state_update",
    "strategy_to_table",
    "trigonal_preparations",
    "unentangled_povm_pair",
    "validate_assembly",
    "verdict",
    "visibility_sweep",
    "witness_v",
    "witness_w",
]
