"""Coefficient tensor with structural tracking of shared coefficient vectors.

Two datasets share covariate ``j``'s effect exactly when they carry the same
group label in row ``j``. Labels only change through :func:`apply_increment`,
which adds one common increment to every member of a subset, so equal labels
always mean bit-identical coefficient vectors.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from math import comb

import numpy as np

MAX_DATASETS = 12


@dataclass(frozen=True)
class IncrementProposal:
    j: int
    subset: tuple
    gamma: np.ndarray
    objective_value: float = float("nan")

    @property
    def bitmask(self) -> int:
        return subset_to_mask(self.subset)


def subset_to_mask(subset) -> int:
    mask = 0
    for m in subset:
        mask |= 1 << int(m)
    return mask


def mask_to_subset(mask: int) -> tuple:
    return tuple(m for m in range(mask.bit_length()) if mask >> m & 1)


@dataclass
class CoefficientState:
    """Coefficients ``beta[m, j]`` (length K) plus partition labels.

    Attributes
    ----------
    beta : ndarray, shape (M, p, K)
    group_labels : ndarray of int, shape (p, M)
    updated : ndarray of bool, shape (M, p)
        True once ``beta[m, j]`` received a nonzero increment; this is the
        support used by the BIC term.
    """

    beta: np.ndarray
    group_labels: np.ndarray
    updated: np.ndarray

    @classmethod
    def zeros(cls, M: int, p: int, K: int) -> "CoefficientState":
        if M > MAX_DATASETS:
            raise ValueError(f"subset enumeration supports at most {MAX_DATASETS} datasets")
        return cls(
            beta=np.zeros((M, p, K)),
            group_labels=np.zeros((p, M), dtype=np.int64),
            updated=np.zeros((M, p), dtype=bool),
        )

    @property
    def M(self) -> int:
        return self.beta.shape[0]

    @property
    def p(self) -> int:
        return self.beta.shape[1]

    @property
    def K(self) -> int:
        return self.beta.shape[2]

    def copy(self) -> "CoefficientState":
        return CoefficientState(self.beta.copy(), self.group_labels.copy(), self.updated.copy())

    def support_sizes(self) -> np.ndarray:
        return self.updated.sum(axis=1)

    def partition_of(self, j: int) -> list:
        return partition_of(self, j)


def partition_of(state: CoefficientState, j: int) -> list:
    """Groups of datasets sharing covariate ``j``'s coefficient vector.

    Groups are tuples ordered by their smallest member.
    """
    row = state.group_labels[j]
    groups = {}
    for m, lab in enumerate(row):
        groups.setdefault(int(lab), []).append(m)
    return sorted((tuple(g) for g in groups.values()), key=lambda g: g[0])


def enumerate_candidates(partition) -> list:
    """Every nonempty subset of every group, as tuples of dataset indices.

    Order: groups by smallest member, then subsets by ascending bitmask.
    """
    out = []
    for group in sorted(partition, key=min):
        group = sorted(group)
        masks = sorted(
            subset_to_mask(group[b] for b in range(len(group)) if s >> b & 1)
            for s in range(1, 1 << len(group))
        )
        out.extend(mask_to_subset(mk) for mk in masks)
    return out


def apply_increment(state: CoefficientState, proposal: IncrementProposal, v: float) -> CoefficientState:
    """Return a new state with ``beta[m, j] += v * gamma`` for ``m`` in the subset."""
    new = state.copy()
    apply_increment_inplace(new, proposal.j, proposal.subset, proposal.gamma, v)
    return new


def apply_increment_inplace(state: CoefficientState, j: int, subset, gamma, v: float) -> None:
    subset = sorted(int(m) for m in subset)
    if not subset:
        raise ValueError("empty subset")
    row = state.group_labels[j]
    label = row[subset[0]]
    if np.any(row[subset] != label):
        raise ValueError(f"subset {subset} crosses groups of covariate {j}")
    gamma = np.asarray(gamma, dtype=float)
    if not np.any(gamma):
        return
    # one shared arithmetic result keeps group members bit-identical
    new_value = state.beta[subset[0], j] + v * gamma
    state.beta[subset, j] = new_value
    state.updated[subset, j] = True
    group_size = int(np.count_nonzero(row == label))
    if len(subset) < group_size:
        row[subset] = row.max() + 1


def equal_pairs_per_covariate(group_labels) -> np.ndarray:
    """Number of dataset pairs sharing a label, for each covariate row."""
    labels = np.asarray(group_labels)
    same = labels[:, :, None] == labels[:, None, :]
    M = labels.shape[1]
    iu = np.triu_indices(M, k=1)
    return same[:, iu[0], iu[1]].sum(axis=1)


def count_equal_pairs(state: CoefficientState) -> int:
    return int(equal_pairs_per_covariate(state.group_labels).sum())


def pen_c_from_count(equal_pairs: int, M: int, p: int) -> float:
    if M < 2:
        return 0.0
    return 1.0 - equal_pairs / (comb(M, 2) * p)


def pen_c(state: CoefficientState) -> float:
    """Commonality penalty: share of (pair, covariate) cells with differing vectors."""
    return pen_c_from_count(count_equal_pairs(state), state.M, state.p)


def audit_labels(state: CoefficientState) -> bool:
    """Check that equal labels imply bit-identical coefficient vectors."""
    for j in range(state.p):
        for group in partition_of(state, j):
            ref = state.beta[group[0], j]
            if any(not np.array_equal(state.beta[m, j], ref) for m in group[1:]):
                return False
    return True


def write_coefficients_csv(path, state: CoefficientState, covariate_names=None, header: str | None = None):
    """Rows ``covariate, dataset, group_label, k, value`` for every nonzero vector."""
    names = covariate_names or [f"x{j + 1}" for j in range(state.p)]
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(header.rstrip("\n") + "\n")
        w = csv.writer(fh)
        w.writerow(["covariate", "dataset", "group_label", "k", "value"])
        for j in range(state.p):
            for m in range(state.M):
                if not state.updated[m, j]:
                    continue
                for k in range(state.K):
                    w.writerow([names[j], m + 1, int(state.group_labels[j, m]), k + 1,
                                repr(float(state.beta[m, j, k]))])
