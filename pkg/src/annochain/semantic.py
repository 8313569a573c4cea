"""Semantic units, the caption tree representation, and binary vectors.

A caption is decomposed into object-attribute edges ("semantic units") and
arranged as a three-level tree: a virtual image root, one node per object,
and one edge per attribute. The edge count is the comprehensiveness measure
used throughout the package.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import UnknownUnit

ROOT_LABEL = "Image"
EXISTENCE_VALUE = "present"

_ARTICLES = {"a", "an", "the"}
_WS = re.compile(r"\s+")


class AttributeKind(str, Enum):
    ABSOLUTE_LOCATION = "absolute_location"
    RELATIVE_LOCATION = "relative_location"
    COLOUR = "colour"
    AMOUNT = "amount"
    SIZE = "size"
    SHAPE = "shape"
    MATERIAL = "material"
    OBJECT_DESCRIPTION = "object_description"
    OTHER = "other"

    @classmethod
    def from_label(cls, label: str) -> "AttributeKind":
        """Map a free-form attribute key to a kind; unknown labels become OTHER."""
        key = _WS.sub("_", label.strip().lower().replace("-", "_"))
        aliases = {"color": "colour", "object_descriptions": "object_description"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            return cls.OTHER


def _collapse(text: str) -> str:
    return _WS.sub(" ", text.strip().lower())


def normalize_object_name(name: str) -> str:
    """Lowercase, collapse whitespace, and drop articles from an object name."""
    tokens = [t for t in _collapse(name).split() if t not in _ARTICLES]
    return " ".join(tokens)


def normalize_value(value: str, kind: AttributeKind) -> str:
    """Normalize an attribute value; articles survive only in AMOUNT values."""
    if kind is AttributeKind.AMOUNT:
        return _collapse(value)
    tokens = [t for t in _collapse(value).split() if t not in _ARTICLES]
    return " ".join(tokens)


@dataclass(frozen=True)
class SemanticUnit:
    """One object-attribute edge. Identity is the (name, kind, value) triple."""

    object_name: str
    kind: AttributeKind
    value: str
    source_round: int = field(default=0, compare=False)

    def __post_init__(self):
        if not self.object_name:
            raise ValueError("object_name must be non-empty")
        if not self.value and not self.is_existence:
            raise ValueError("value must be non-empty for non-existence units")

    @property
    def is_existence(self) -> bool:
        return self.kind is AttributeKind.OBJECT_DESCRIPTION and self.value == EXISTENCE_VALUE

    @property
    def identity(self) -> tuple[str, str, str]:
        return (self.object_name, self.kind.value, self.value)

    def rendered(self) -> str:
        """Phrase form used for embedding-based comparison."""
        return f"{self.object_name} {self.kind.value} {self.value}"

    @classmethod
    def existence(cls, object_name: str, source_round: int = 0) -> "SemanticUnit":
        return cls(object_name, AttributeKind.OBJECT_DESCRIPTION, EXISTENCE_VALUE, source_round)

    @classmethod
    def make(cls, object_name: str, kind: AttributeKind | str, value: str,
             source_round: int = 0) -> "SemanticUnit":
        """Build a unit with normalization applied to name and value."""
        k = kind if isinstance(kind, AttributeKind) else AttributeKind.from_label(kind)
        return cls(normalize_object_name(object_name), k, normalize_value(value, k), source_round)


@dataclass(frozen=True)
class ObjectNode:
    name: str
    attributes: tuple[tuple[AttributeKind, str], ...]  # sorted by (kind, value)


@dataclass(frozen=True)
class SemanticUnitTree:
    """Canonical tree: objects sorted by name, edges sorted by (kind, value)."""

    objects: tuple[ObjectNode, ...]

    @property
    def root(self) -> str:
        return ROOT_LABEL


def build_tree(units: Iterable[SemanticUnit]) -> SemanticUnitTree:
    """Group units by object, collapse duplicate edges, and canonicalize.

    Existence markers only register the object; they never coexist with
    explicit attribute edges under the same object.
    """
    edges: dict[str, set[tuple[AttributeKind, str]]] = {}
    for u in units:
        bucket = edges.setdefault(u.object_name, set())
        if not u.is_existence:
            bucket.add((u.kind, u.value))
    objects = tuple(
        ObjectNode(name, tuple(sorted(edges[name], key=lambda e: (e[0].value, e[1]))))
        for name in sorted(edges)
    )
    return SemanticUnitTree(objects)


def unit_count(tree: SemanticUnitTree) -> int:
    """Edge count; an attribute-less object contributes one implicit edge."""
    return sum(len(o.attributes) or 1 for o in tree.objects)


def tree_units(tree: SemanticUnitTree) -> list[SemanticUnit]:
    """Canonical unit list; attribute-less objects yield existence units."""
    out: list[SemanticUnit] = []
    for obj in tree.objects:
        if not obj.attributes:
            out.append(SemanticUnit.existence(obj.name))
            continue
        for kind, value in obj.attributes:
            out.append(SemanticUnit(obj.name, kind, value))
    return out


@dataclass(frozen=True)
class SemanticVector:
    """Binary presence vector over an ordered unit vocabulary."""

    vocabulary: tuple[tuple[str, str, str], ...]
    bits: np.ndarray

    def popcount(self) -> int:
        return int(self.bits.sum())

    def __eq__(self, other):  # np.ndarray equality needs care
        return (isinstance(other, SemanticVector)
                and self.vocabulary == other.vocabulary
                and np.array_equal(self.bits, other.bits))


def to_vector(tree: SemanticUnitTree,
              vocabulary: Sequence[SemanticUnit | tuple[str, str, str]]) -> SemanticVector:
    """Map a tree onto a vocabulary of unit identities; bit i marks presence."""
    ids = tuple(v.identity if isinstance(v, SemanticUnit) else tuple(v) for v in vocabulary)
    index = {ident: i for i, ident in enumerate(ids)}
    bits = np.zeros(len(ids), dtype=np.uint8)
    for unit in tree_units(tree):
        pos = index.get(unit.identity)
        if pos is None:
            raise UnknownUnit(f"unit {unit.identity} not in vocabulary")
        bits[pos] = 1
    return SemanticVector(ids, bits)


def residual(previous: SemanticUnitTree, current: SemanticUnitTree, matcher) -> list[SemanticUnit]:
    """Units of `current` not matched to any unit of `previous`.

    The matcher decides admissibility (exact identity or embedding
    similarity); see `annochain.matching.DuplicationMatcher`.
    """
    prev_units = tree_units(previous)
    cur_units = tree_units(current)
    matched_current = {j for _, j in matcher.match(prev_units, cur_units)}
    return [u for j, u in enumerate(cur_units) if j not in matched_current]


def tree_to_json(tree: SemanticUnitTree) -> list[dict]:
    """Serialize to the list-of-objects document shape used on the wire."""
    doc = []
    for obj in tree.objects:
        attrs: dict[str, object] = {}
        by_kind: dict[str, list[str]] = {}
        for kind, value in obj.attributes:
            by_kind.setdefault(kind.value, []).append(value)
        for kind_label, values in by_kind.items():
            if kind_label == AttributeKind.OTHER.value or len(values) > 1:
                attrs[kind_label] = values
            else:
                attrs[kind_label] = values[0]
        doc.append({"name": obj.name, "attributes": attrs})
    return doc


def tree_from_json(doc: list[dict]) -> SemanticUnitTree:
    """Parse the wire document; string and list attribute values both accepted."""
    units: list[SemanticUnit] = []
    for entry in doc:
        name = entry.get("name", "")
        attrs = entry.get("attributes", {}) or {}
        if not attrs:
            units.append(SemanticUnit.make(name, AttributeKind.OBJECT_DESCRIPTION, EXISTENCE_VALUE))
            continue
        for kind_label, value in attrs.items():
            values = value if isinstance(value, list) else [value]
            for v in values:
                if str(v).strip():
                    units.append(SemanticUnit.make(name, kind_label, str(v)))
    return build_tree(units)


def canonical_tree_json(tree: SemanticUnitTree) -> str:
    """Deterministic serialization; replaying it reproduces the tree bit-exactly."""
    return json.dumps(tree_to_json(tree), sort_keys=True, separators=(",", ":"))
