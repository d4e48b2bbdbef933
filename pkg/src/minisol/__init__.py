"""MiniSol hardening compiler.

Parses MiniSol contracts, builds a code property graph, finds reentrancy and
integer bugs by graph queries, patches them with locks/guards and assertion
checks at source level, and validates patches by differential replay of
benign and attack transaction scenarios in a bundled interpreter.
"""

from .parser import parse, parse_with_diagnostics
from .astjson import ast_to_json, json_to_ast
from .emit import EmitConfig, emit_source, emit_unit

__all__ = [
    "parse",
    "parse_with_diagnostics",
    "ast_to_json",
    "json_to_ast",
    "EmitConfig",
    "emit_source",
    "emit_unit",
]
