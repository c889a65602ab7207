"""Semantic-preserving perturbations and spec/task migration."""

from .common import (
    ALL_KINDS,
    KIND_DEFUSE,
    KIND_FLIP,
    KIND_RANDOM,
    KIND_SHUFFLE,
    KIND_SWAP,
    DefUseBreakRule,
    PerturbedUnit,
    fresh_name,
    rename_spec_expr,
    stmt_def_use,
)
from .ops import (
    defuse_break,
    find_independent_pairs,
    ifelse_flip,
    independent_swap,
    name_random,
    name_shuffle,
)

PERTURBERS = {
    KIND_DEFUSE: defuse_break,
    KIND_FLIP: ifelse_flip,
    KIND_SWAP: independent_swap,
    KIND_RANDOM: name_random,
    KIND_SHUFFLE: name_shuffle,
}

__all__ = [
    "ALL_KINDS",
    "KIND_DEFUSE",
    "KIND_FLIP",
    "KIND_SWAP",
    "KIND_RANDOM",
    "KIND_SHUFFLE",
    "PERTURBERS",
    "PerturbedUnit",
    "DefUseBreakRule",
    "defuse_break",
    "ifelse_flip",
    "find_independent_pairs",
    "independent_swap",
    "name_random",
    "name_shuffle",
    "fresh_name",
    "rename_spec_expr",
    "stmt_def_use",
]
