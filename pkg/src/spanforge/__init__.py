"""spanforge: compile quantum query algorithms to span programs and back.

The package is organized bottom-up:

    circuit_ir    algorithm IR, exact simulation, cleaning transforms
    fixtures      small built-in algorithms used by tests and the CLI
    span_core     span program data model, witness solvers, rescaling
    alg_to_sp     the span program of a clean algorithm
    sp_compiler   span program -> simulated phase-estimation evaluator
    registers     register-level circuit primitives with oracle counters
    subroutines   register circuits for the evaluator's reflections
    or_compose    OR composition, binning, variable-time search
    cli           command-line frontend
"""

__version__ = "0.1.0"
