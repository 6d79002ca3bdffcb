"""Declarative exclusion and dependency constraints between layers."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Iterable

from .errors import ConfigError, ConstraintDeclarationError, UnknownLayerError

if TYPE_CHECKING:
    from .layers import Layer, Registry

logger = logging.getLogger(__name__)


class ConstraintKind(str, Enum):
    EXCLUDES = "excludes"
    REQUIRES = "requires"


@dataclass(frozen=True)
class Constraint:
    kind: ConstraintKind
    first: "Layer"
    second: "Layer"

    def __str__(self):
        return f"{self.kind.value}({self.first.name}, {self.second.name})"

    def sort_key(self):
        return (self.kind.value, self.first.name, self.second.name)


@dataclass(frozen=True)
class Validation:
    """Result of validate: truthy when no constraint is violated."""

    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def __str__(self):
        if self.ok:
            return "ok"
        return "violation: " + ", ".join(str(v) for v in self.violations)


OK = Validation()


class ConstraintSet:
    """Excludes pairs (unordered) and requires pairs (ordered), checked on activation."""

    def __init__(self):
        self._excludes: set = set()
        self._requires: set = set()
        self._cache: dict = {}

    @classmethod
    def from_names(cls, registry: "Registry", excludes=(), requires=()) -> "ConstraintSet":
        """Build a constraint set from pairs of layer names, as found in the JSON config."""
        constraints = cls()
        errors = []
        for kind, pairs, declare in (
            ("excludes", excludes, constraints.declare_excludes),
            ("requires", requires, constraints.declare_requires),
        ):
            for a, b in pairs:
                try:
                    declare(registry.layer(a), registry.layer(b))
                except (UnknownLayerError, ConstraintDeclarationError) as e:
                    errors.append(f"constraints.{kind}: {e}")
        if errors:
            raise ConfigError(errors)
        return constraints

    @property
    def excludes(self) -> frozenset:
        return frozenset(self._excludes)

    @property
    def requires(self) -> frozenset:
        return frozenset(self._requires)

    def declare_excludes(self, a: "Layer", b: "Layer") -> None:
        if a is b:
            raise ConstraintDeclarationError(f"a layer cannot exclude itself: {a.name}")
        if (a, b) in self._requires or (b, a) in self._requires:
            raise ConstraintDeclarationError(
                f"{a.name} and {b.name} are already related by requires; cannot also exclude")
        self._excludes.add(frozenset((a, b)))
        self._cache.clear()
        logger.debug("Declared excludes(%s, %s)", a.name, b.name)

    def declare_requires(self, a: "Layer", b: "Layer") -> None:
        if a is b:
            raise ConstraintDeclarationError(f"a layer cannot require itself: {a.name}")
        if frozenset((a, b)) in self._excludes:
            raise ConstraintDeclarationError(
                f"{a.name} and {b.name} already exclude each other; cannot also require")
        if self._reachable(b, a):
            raise ConstraintDeclarationError(f"requires({a.name}, {b.name}) would create a cycle")
        self._requires.add((a, b))
        self._cache.clear()
        logger.debug("Declared requires(%s, %s)", a.name, b.name)

    def _reachable(self, start: "Layer", goal: "Layer") -> bool:
        pending = [start]
        seen = set()
        while pending:
            layer = pending.pop()
            if layer is goal:
                return True
            if layer in seen:
                continue
            seen.add(layer)
            pending.extend(b for a, b in self._requires if a is layer)
        return False

    def validate(self, layers: Iterable["Layer"]) -> Validation:
        """
        Check an effective layer set against every declared constraint.

        Args:
            layers: the effective set (after suppression and deduplication)

        Returns:
            Validation: OK, or the sorted list of violated constraints
        """
        effective = frozenset(layers)
        cached = self._cache.get(effective)
        if cached is not None:
            return cached
        violations = [
            Constraint(ConstraintKind.EXCLUDES, *sorted(pair, key=lambda l: l.name))
            for pair in self._excludes if pair <= effective
        ]
        violations.extend(
            Constraint(ConstraintKind.REQUIRES, a, b)
            for a, b in self._requires if a in effective and b not in effective
        )
        result = Validation(tuple(sorted(violations, key=Constraint.sort_key))) if violations else OK
        self._cache[effective] = result
        return result


def validate(constraints: ConstraintSet, layers: Iterable["Layer"]) -> Validation:
    return constraints.validate(layers)
