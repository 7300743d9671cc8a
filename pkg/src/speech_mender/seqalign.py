"""Needleman-Wunsch global alignment with unit edit costs."""

from collections.abc import Hashable, Sequence
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np


class EditOp(str, Enum):
    """Per-position edit operation converting hyp into ref."""

    UNCHANGE = "unchange"
    INSERT = "insert"
    REPLACE = "replace"
    DELETE = "delete"


@dataclass(frozen=True)
class AlignedPair:
    """One column of an alignment."""

    hyp_index: Optional[int]
    ref_index: Optional[int]
    op: EditOp


@dataclass(frozen=True)
class Alignment:
    """Ordered aligned pairs of a minimum-cost alignment."""

    pairs: tuple[AlignedPair, ...]

    @property
    def cost(self) -> int:
        return sum(1 for pair in self.pairs if pair.op is not EditOp.UNCHANGE)

    def count(self, op: EditOp) -> int:
        return sum(1 for pair in self.pairs if pair.op is op)


def _suffix_costs(hyp: Sequence[Hashable], ref: Sequence[Hashable]) -> np.ndarray:
    """Cost matrix where cell (i, j) aligns hyp[i:] with ref[j:]."""
    n, m = len(hyp), len(ref)
    costs = np.zeros((n + 1, m + 1), dtype=np.int64)
    costs[n, :] = np.arange(m, -1, -1)
    costs[:, m] = np.arange(n, -1, -1)
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            costs[i, j] = min(
                costs[i + 1, j + 1] + (hyp[i] != ref[j]),
                costs[i + 1, j] + 1,
                costs[i, j + 1] + 1,
            )
    return costs


def align(hyp: Sequence[Hashable], ref: Sequence[Hashable]) -> Alignment:
    """Align a recognized sequence with a target sequence.

    Unit costs for insert/replace/delete, so the cost equals the Levenshtein
    distance. The path is traced from the start of both sequences with
    precedence diagonal > delete > insert, which places edits as late as the
    optimum allows.
    """
    costs = _suffix_costs(hyp, ref)
    n, m = len(hyp), len(ref)
    pairs: list[AlignedPair] = []
    i = j = 0
    while i < n or j < m:
        here = costs[i, j]
        if i < n and j < m:
            mismatch = hyp[i] != ref[j]
            if here == costs[i + 1, j + 1] + mismatch:
                op = EditOp.REPLACE if mismatch else EditOp.UNCHANGE
                pairs.append(AlignedPair(i, j, op))
                i += 1
                j += 1
                continue
        if i < n and here == costs[i + 1, j] + 1:
            pairs.append(AlignedPair(i, None, EditOp.DELETE))
            i += 1
            continue
        pairs.append(AlignedPair(None, j, EditOp.INSERT))
        j += 1
    return Alignment(tuple(pairs))


def edit_distance(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    """Minimum number of insert/replace/delete operations turning a into b."""
    return int(_suffix_costs(a, b)[0, 0])
