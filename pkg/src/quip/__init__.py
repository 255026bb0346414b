"""quip: a test-set integer programming toolkit.

Exact Groebner and Graver basis engines, toric/algebraic IP solvers, QUBO
reformulation, a deterministic simulated annealer, and a Graver-augmented
hybrid optimizer, with a small CLI (`quip`) on top.
"""

__version__ = "0.1.0"

from .polys import (
    Monomial,
    MonomialOrder,
    SparsePolynomial,
    cost_order,
    grevlex,
    grlex,
    lex,
    normal_form,
    parse_poly,
    poly_to_text,
    reduce,
    s_polynomial,
)
from .errors import (
    FormatError,
    InfeasibleError,
    QuipError,
    ResourceLimitError,
    UnboundedError,
)
from .groebner import BuchbergerStats, GroebnerBasis, Ideal, buchberger, is_infeasible
from .toric import (
    BptResult,
    CtResult,
    ToricIP,
    bpt_solve,
    coloring_ideal,
    ct_solve,
    is_k_colorable,
    toric_kernel_binomials,
)
from .lattices import (
    AugmentResult,
    GraverBasis,
    conformal_leq,
    graver_augment,
    integer_kernel_basis,
    lawrence_graver,
    minimal_filter,
    pottier,
    sign_compatible,
    vector_normal_form,
)
from .models import (
    BruteForceResult,
    IlpDescription,
    IsingModel,
    QuboModel,
    brute_force,
    chain_duplicate,
    chain_indices,
    ising_to_qubo,
    maxcut_to_ising,
    qubo_to_ilp,
    qubo_to_ising,
)
from .anneal import (
    AnnealSchedule,
    SampleSet,
    chain_break_stats,
    exchange_probability,
    mhmc_sweep,
    model_digest,
    parallel_tempering,
    simulated_anneal,
    tts,
)
from .gama import (
    GamaConfig,
    GamaReport,
    extract_partial_graver,
    gama_solve,
    kernel_qubo,
    portfolio_objective,
    seed_qubo,
)
from .fileio import (
    ARTIFACT_VERSION,
    GraphSpec,
    OracleSpec,
    ProblemFile,
    RunManifest,
    file_digest,
    format_dimacs,
    format_ising,
    format_qubo,
    format_rational,
    format_samples,
    json_ready,
    make_manifest,
    manifest_to_json,
    parse_dimacs,
    parse_ising,
    parse_manifest,
    parse_matrix_text,
    parse_problem,
    parse_problem_text,
    parse_qubo,
    parse_rational,
    parse_samples,
    pretty_json,
    print_problem,
    read_dimacs,
    read_ising,
    read_manifest,
    read_matrix,
    read_qubo,
    read_samples,
    write_dimacs,
    write_ising,
    write_manifest,
    write_problem,
    write_qubo,
    write_samples,
)
from .cli import run_subcommand
from .reformulate import (
    CompileReport,
    ConstraintSystem,
    EncodingMap,
    PenaltyWeights,
    QuadratizeResult,
    binarize,
    compile_qubo,
    cost_magnitude_penalty,
    inequality_to_equality,
    make_encoding,
    multilinear,
    objective_gain,
    penalty_bound,
    quadratize,
)

__all__ = [
    "Monomial",
    "MonomialOrder",
    "SparsePolynomial",
    "lex",
    "grlex",
    "grevlex",
    "cost_order",
    "s_polynomial",
    "reduce",
    "normal_form",
    "parse_poly",
    "poly_to_text",
    "QuipError",
    "ResourceLimitError",
    "InfeasibleError",
    "FormatError",
    "Ideal",
    "GroebnerBasis",
    "BuchbergerStats",
    "buchberger",
    "is_infeasible",
    "ToricIP",
    "CtResult",
    "BptResult",
    "ct_solve",
    "bpt_solve",
    "toric_kernel_binomials",
    "coloring_ideal",
    "is_k_colorable",
    "GraverBasis",
    "AugmentResult",
    "sign_compatible",
    "conformal_leq",
    "integer_kernel_basis",
    "vector_normal_form",
    "minimal_filter",
    "pottier",
    "lawrence_graver",
    "graver_augment",
    "QuboModel",
    "IsingModel",
    "BruteForceResult",
    "IlpDescription",
    "qubo_to_ising",
    "ising_to_qubo",
    "maxcut_to_ising",
    "qubo_to_ilp",
    "chain_indices",
    "chain_duplicate",
    "brute_force",
    "ConstraintSystem",
    "EncodingMap",
    "PenaltyWeights",
    "QuadratizeResult",
    "CompileReport",
    "UnboundedError",
    "make_encoding",
    "binarize",
    "multilinear",
    "quadratize",
    "inequality_to_equality",
    "objective_gain",
    "penalty_bound",
    "cost_magnitude_penalty",
    "compile_qubo",
    "AnnealSchedule",
    "SampleSet",
    "model_digest",
    "mhmc_sweep",
    "exchange_probability",
    "simulated_anneal",
    "parallel_tempering",
    "tts",
    "chain_break_stats",
    "GamaConfig",
    "GamaReport",
    "kernel_qubo",
    "seed_qubo",
    "extract_partial_graver",
    "gama_solve",
    "portfolio_objective",
    "ARTIFACT_VERSION",
    "ProblemFile",
    "OracleSpec",
    "GraphSpec",
    "RunManifest",
    "parse_problem",
    "parse_problem_text",
    "print_problem",
    "write_problem",
    "parse_qubo",
    "format_qubo",
    "read_qubo",
    "write_qubo",
    "parse_ising",
    "format_ising",
    "read_ising",
    "write_ising",
    "parse_dimacs",
    "format_dimacs",
    "read_dimacs",
    "write_dimacs",
    "parse_samples",
    "format_samples",
    "read_samples",
    "write_samples",
    "parse_manifest",
    "manifest_to_json",
    "make_manifest",
    "read_manifest",
    "write_manifest",
    "parse_rational",
    "format_rational",
    "parse_matrix_text",
    "read_matrix",
    "json_ready",
    "file_digest",
]
