"""Subject language: parsing, printing, scoping, and spec attachment."""

from __future__ import annotations

from . import ast
from .analysis import (
    SymbolTable,
    check_spec_expr,
    parse_spec_expr,
    resolve_scopes,
    spec_visibility,
)
from .parser import parse_expr_text, parse_unit_syntax
from .printer import clause_to_text, expr_to_text, print_unit

__all__ = [
    "ast",
    "SymbolTable",
    "parse_unit",
    "parse_unit_syntax",
    "print_unit",
    "parse_spec_expr",
    "check_spec_expr",
    "parse_expr_text",
    "resolve_scopes",
    "spec_visibility",
    "strip_specs",
    "expr_to_text",
    "clause_to_text",
]


def parse_unit(text: str) -> ast.SourceUnit:
    """Parse, scope-resolve, and type-check one compilation unit.

    Specification clauses are parsed in the scope of their anchors and
    attached to the returned unit.
    """
    from .analysis import attach_specs

    parsed = parse_unit_syntax(text)
    table = resolve_scopes(parsed.unit)
    return attach_specs(parsed, table)


def strip_specs(unit: ast.SourceUnit) -> ast.SourceUnit:
    """The same unit with no specification clauses; bodies are shared."""
    return ast.SourceUnit(unit.name, unit.methods, [], line=unit.line)
