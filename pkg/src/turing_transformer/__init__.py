"""Compile Turing machines into transformer layers and study their error behaviour."""

from .compiler import CompiledProgram, compile_machine, simulate
from .encoding import decode, encode, layout
from .layer import QuantizationConfig
from .rounds import induction_audit, plan_rounds, run_rounds
from .tm import TmSpec, Transition, parse_spec, parse_spec_file, run, serialize_spec

__all__ = [
    "CompiledProgram", "QuantizationConfig", "TmSpec", "Transition",
    "compile_machine", "decode", "encode", "induction_audit", "layout",
    "parse_spec", "parse_spec_file", "plan_rounds", "run", "run_rounds",
    "serialize_spec", "simulate",
]

__version__ = "0.1.0"
