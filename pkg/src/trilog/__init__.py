"""Three-valued semantics, types and a soundness harness for normalized logic programs."""

from trilog.ast import Program
from trilog.errors import TrilogError, TypeCheckError
from trilog.normalizer import normalize
from trilog.parser import parse_program, parse_type
from trilog.typechecker import check_program

__all__ = [
    "Program",
    "TrilogError",
    "TypeCheckError",
    "check_program",
    "normalize",
    "parse_program",
    "parse_type",
]

__version__ = "0.1.0"
