"""Partially ordered knowledge domain with prerequisite (cover) relations."""

from __future__ import annotations

from dataclasses import dataclass
from graphlib import CycleError, TopologicalSorter
from typing import Dict, FrozenSet, Iterable, List, Sequence, Set, Tuple

from .errors import CycleDetected, DimensionMismatch, InvalidParameter, UnknownLabel


def _reachable(succ: Dict[str, Set[str]], src: str) -> Set[str]:
    seen: Set[str] = set()
    stack = list(succ[src])
    while stack:
        x = stack.pop()
        if x not in seen:
            seen.add(x)
            stack.extend(succ[x])
    return seen


@dataclass(frozen=True)
class KnowledgeDomain:
    """Knowledge kinds indexed by position, plus the Hasse covers between them.

    A cover ``(a, b)`` says ``a`` is an immediate prerequisite of ``b``.
    """

    labels: Tuple[str, ...]
    covers: FrozenSet[Tuple[str, str]]

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownLabel(f"unknown knowledge kind {label!r}") from None

    def _require(self, label: str) -> None:
        if label not in self.labels:
            raise UnknownLabel(f"unknown knowledge kind {label!r}")

    def lower_shadow(self, label: str) -> Set[str]:
        self._require(label)
        return {a for a, b in self.covers if b == label}

    def upper_shadow(self, label: str) -> Set[str]:
        self._require(label)
        return {b for a, b in self.covers if a == label}

    def extremal_elements(self) -> Tuple[Set[str], Set[str]]:
        """``(maximal, minimal)`` elements."""
        below = {a for a, _ in self.covers}
        above = {b for _, b in self.covers}
        return set(self.labels) - below, set(self.labels) - above

    def less_than(self, a: str, b: str) -> bool:
        """Strict order from the transitive closure of the covers."""
        self._require(a)
        self._require(b)
        succ = {x: set() for x in self.labels}
        for x, y in self.covers:
            succ[x].add(y)
        return b in _reachable(succ, a)

    def validate_state(self, knowledge: Sequence[float]) -> List[str]:
        """Positive elements that have a zero-valued immediate prerequisite."""
        if len(knowledge) != len(self.labels):
            raise DimensionMismatch(
                f"knowledge vector has {len(knowledge)} entries, domain has {len(self.labels)}")
        value = dict(zip(self.labels, knowledge))
        bad = []
        for label in self.labels:
            if value[label] > 0 and any(value[a] <= 0 for a in self.lower_shadow(label)):
                bad.append(label)
        return bad

    def lower_shadow_indices(self) -> List[List[int]]:
        return [sorted(self.index(a) for a in self.lower_shadow(b)) for b in self.labels]

    def to_dict(self) -> dict:
        return {"layers": list(self.labels), "covers": [list(c) for c in sorted(self.covers)]}


def build_domain(labels: Iterable[str], cover_pairs: Iterable[Sequence[str]]) -> KnowledgeDomain:
    """Validate the prerequisite pairs and reduce them to Hasse covers.

    Pairs implied by transitivity are dropped. Raises ``CycleDetected`` if the
    pairs do not describe a strict partial order.
    """
    labels = tuple(labels)
    if not labels:
        raise InvalidParameter("a knowledge domain needs at least one element")
    if len(set(labels)) != len(labels):
        raise InvalidParameter(f"duplicate labels in {labels}")
    pairs = set()
    for pair in cover_pairs:
        a, b = pair
        for x in (a, b):
            if x not in labels:
                raise UnknownLabel(f"cover references unknown knowledge kind {x!r}")
        if a == b:
            raise CycleDetected([a, a])
        pairs.add((a, b))

    graph = {x: set() for x in labels}
    for a, b in pairs:
        graph[b].add(a)
    try:
        tuple(TopologicalSorter(graph).static_order())
    except CycleError as exc:
        raise CycleDetected(exc.args[1]) from None

    succ = {x: set() for x in labels}
    for a, b in pairs:
        succ[a].add(b)
    covers = set()
    for a, b in pairs:
        # (a, b) is redundant when b is reachable through another successor of a
        if not any(b in _reachable(succ, c) for c in succ[a] if c != b):
            covers.add((a, b))
    return KnowledgeDomain(labels=labels, covers=frozenset(covers))
