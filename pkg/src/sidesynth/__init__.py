"""Synthesis of side-channel attacks on string-manipulating programs."""
from .constraints import DIGITS, HIGH, LOW, LOWER, StringDomain, parse_formula, to_sexpr
from .dsl import Program, parse_program
from .errors import (ContradictionError, ExhaustedError, ParseError, PartitionError,
                     SidesynthError)
from .estimator import AttackSynthesizer
from .symexec import CostModel, merge_observations, run_concrete, sym_exec
from .benchmarks import BENCHMARKS, SUITE, get_benchmark, load_program

__version__ = "0.1.0"

__all__ = [
    "AttackSynthesizer", "BENCHMARKS", "SUITE", "get_benchmark", "load_program",
    "Program", "parse_program", "CostModel", "sym_exec", "run_concrete", "merge_observations",
    "StringDomain", "HIGH", "LOW", "DIGITS", "LOWER", "parse_formula", "to_sexpr",
    "SidesynthError", "ParseError", "ContradictionError", "PartitionError", "ExhaustedError",
]
