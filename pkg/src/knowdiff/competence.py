"""Competence scores derived from layer knowledge."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyPopulation, InvalidParameter

# lower bound of each band, checked from the top; Master is c == 1
EXPERTISE_LEVELS = (
    (0.8, "Expert"),
    (0.6, "Journeyman"),
    (0.4, "Apprentice"),
    (0.2, "Initiate"),
    (0.0, "Novice"),
)
MASTER_TOL = 1e-9
COLUMN_SUM_TOL = 1e-9


@dataclass
class CompetenceMatrix:
    """Weights linking knowledge layers (rows) to competences (columns)."""

    names: List[str]
    weights: np.ndarray

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.ndim != 2 or self.weights.shape[1] != len(self.names):
            raise DimensionMismatch(
                f"weights shape {self.weights.shape} does not match {len(self.names)} competences")
        if (self.weights < 0).any():
            raise InvalidParameter("competence weights must be non-negative")
        sums = self.weights.sum(axis=0)
        for name, s in zip(self.names, sums):
            if abs(s - 1.0) > COLUMN_SUM_TOL:
                raise InvalidParameter(f"weights of competence {name!r} sum to {s:.12g}, not 1")

    @classmethod
    def from_columns(cls, columns: Dict[str, Sequence[float]]) -> "CompetenceMatrix":
        names = list(columns)
        return cls(names, np.column_stack([np.asarray(columns[n], dtype=float) for n in names]))

    @property
    def n_layers(self) -> int:
        return self.weights.shape[0]


def competence_value(matrix: CompetenceMatrix, knowledge, k_ref: float) -> np.ndarray:
    """Weighted knowledge per competence, scaled by ``k_ref`` and capped at 1.

    ``knowledge`` may be one vector of layer values or an ``(agents, layers)``
    array, in which case one row of competences per agent is returned.
    """
    if k_ref <= 0:
        raise InvalidParameter(f"k_ref must be positive, got {k_ref}")
    k = np.asarray(knowledge, dtype=float)
    if k.shape[-1] != matrix.n_layers:
        raise DimensionMismatch(
            f"knowledge has {k.shape[-1]} layers, competence matrix has {matrix.n_layers}")
    return np.minimum(1.0, (k @ matrix.weights) / k_ref)


def expertise_level(c: float) -> str:
    if not 0.0 <= c <= 1.0:
        raise InvalidParameter(f"competence value {c} outside [0, 1]")
    if c >= 1.0 - MASTER_TOL:
        return "Master"
    for lower, label in EXPERTISE_LEVELS:
        if c >= lower:
            return label
    raise AssertionError("unreachable")


def organizational_competence(values) -> np.ndarray:
    """Mean competence over agents; ``values`` is ``(agents, competences)``."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 2 or v.shape[0] == 0:
        raise EmptyPopulation("organizational competence needs at least one agent")
    return v.mean(axis=0)


@dataclass
class CompetenceReport:
    names: List[str]
    values: np.ndarray  # (agents, competences)
    agents: List[int]

    @property
    def mean(self) -> np.ndarray:
        return organizational_competence(self.values)

    def levels(self) -> List[List[str]]:
        return [[expertise_level(float(c)) for c in row] for row in self.values]


def competence_report(matrix: CompetenceMatrix, knowledge, agents: List[int], k_ref: float) -> CompetenceReport:
    return CompetenceReport(matrix.names, competence_value(matrix, knowledge, k_ref), list(agents))
