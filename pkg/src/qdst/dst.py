"""Classical Dempster-Shafer operations over a Boolean-indexed power set.

A focal set over a frame ``(t1, ..., tn)`` is stored as an integer index whose
bit ``k`` is set when element ``k`` belongs to the set, so ``t1`` is the least
significant bit. Every combination here is computed by exhaustive enumeration
of source focal sets; these functions are the reference the circuit path is
checked against.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import reduce
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

MASS_TOL = 1e-9
# n * p above this makes the (2^n)^p enumeration impractical.
MAX_ENUMERATION_BITS = 24
CONFLICT_TOL = 1e-12


class DSTError(ValueError):
    """Invalid input to a belief-function operation."""


class FrameMismatchError(DSTError):
    pass


class TotalConflictError(DSTError):
    """Raised when all of the mass sits on the empty set."""

    def __init__(self, conflict: float, mass=None):
        super().__init__(f"total conflict: m(empty) = {conflict!r}")
        self.conflict = conflict
        self.mass = mass


@dataclass(frozen=True)
class Frame:
    """Ordered frame of discernment; position ``k`` is bit ``k`` of an index."""

    elements: tuple[str, ...]

    def __init__(self, elements: Iterable[str]):
        elements = tuple(elements)
        if not elements:
            raise DSTError("a frame needs at least one element")
        for label in elements:
            if not isinstance(label, str) or not label:
                raise DSTError(f"frame labels must be non-empty strings, got {label!r}")
        if len(set(elements)) != len(elements):
            raise DSTError(f"duplicate labels in frame {elements!r}")
        object.__setattr__(self, "elements", elements)

    @property
    def n(self) -> int:
        return len(self.elements)

    @property
    def size(self) -> int:
        """Number of subsets, ``2**n``."""
        return 1 << self.n

    def position(self, label: str) -> int:
        try:
            return self.elements.index(label)
        except ValueError:
            raise DSTError(f"unknown element {label!r} for frame {self.elements!r}") from None


def index_of_set(frame: Frame, members: Iterable[str]) -> int:
    """Return the Boolean index of a subset of ``frame``.

    >>> index_of_set(Frame("ABC"), {"B", "A"})
    3
    """
    index = 0
    for label in members:
        index |= 1 << frame.position(label)
    return index


def set_of_index(frame: Frame, index: int) -> frozenset[str]:
    if not 0 <= index < frame.size:
        raise DSTError(f"index {index} out of range for a frame of {frame.n} elements")
    return frozenset(e for k, e in enumerate(frame.elements) if index >> k & 1)


def popcounts(n: int) -> np.ndarray:
    """Cardinality of every focal set over ``n`` elements, by index."""
    idx = np.arange(1 << n)
    counts = np.zeros(1 << n, dtype=np.int64)
    for k in range(n):
        counts += (idx >> k) & 1
    return counts


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MassFunction:
    """Basic belief assignment stored densely over all ``2**n`` subsets."""

    frame: Frame
    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values)
        if values.shape != (self.frame.size,):
            raise DSTError(
                f"expected {self.frame.size} mass values for {self.frame.n} elements, "
                f"got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise DSTError(f"mass values must be finite and non-negative: {values}")
        total = values.sum()
        if abs(total - 1.0) > MASS_TOL:
            raise DSTError(f"mass values sum to {total!r}, not 1")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_dict(cls, frame: Frame, masses: Mapping[Iterable[str], float]) -> "MassFunction":
        values = np.zeros(frame.size)
        for members, v in masses.items():
            values[index_of_set(frame, members)] += v
        return cls(frame, values)

    @classmethod
    def vacuous(cls, frame: Frame) -> "MassFunction":
        values = np.zeros(frame.size)
        values[-1] = 1.0
        return cls(frame, values)

    @classmethod
    def point(cls, frame: Frame, index: int) -> "MassFunction":
        values = np.zeros(frame.size)
        values[index] = 1.0
        return cls(frame, values)

    def __getitem__(self, members) -> float:
        if isinstance(members, (int, np.integer)):
            return float(self.values[members])
        return float(self.values[index_of_set(self.frame, members)])

    def focal_sets(self) -> dict[frozenset[str], float]:
        return {
            set_of_index(self.frame, i): float(v) for i, v in enumerate(self.values) if v > 0
        }

    def allclose(self, other: "MassFunction", atol: float = 1e-9) -> bool:
        return self.frame == other.frame and bool(
            np.allclose(self.values, other.values, rtol=0, atol=atol)
        )

    def __repr__(self):
        return f"MassFunction({list(self.frame.elements)}, {self.values.tolist()})"


@dataclass(frozen=True, eq=False)
class PossMF:
    """Per-element support degrees; non-support is ``1 - support``."""

    frame: Frame
    support: np.ndarray

    def __post_init__(self):
        support = _frozen(self.support)
        if support.shape != (self.frame.n,):
            raise DSTError(f"expected {self.frame.n} support values, got shape {support.shape}")
        if not np.all((support >= 0) & (support <= 1)):
            raise DSTError(f"support degrees must lie in [0, 1]: {support}")
        object.__setattr__(self, "support", support)

    @property
    def non_support(self) -> np.ndarray:
        return 1.0 - self.support


@dataclass(frozen=True, eq=False)
class Pignistic:
    frame: Frame
    probs: np.ndarray

    def __post_init__(self):
        probs = _frozen(self.probs)
        if probs.shape != (self.frame.n,) or np.any(probs < 0):
            raise DSTError(f"invalid pignistic probabilities {probs}")
        if abs(probs.sum() - 1.0) > MASS_TOL:
            raise DSTError(f"pignistic probabilities sum to {probs.sum()!r}")
        object.__setattr__(self, "probs", probs)

    def decision(self, tol: float = 1e-12) -> int:
        """Index of the most probable class; near-ties go to the lowest index."""
        return int(np.flatnonzero(self.probs >= self.probs.max() - tol)[0])

    def __getitem__(self, label: str) -> float:
        return float(self.probs[self.frame.position(label)])


def _common_frame(masses: Sequence[MassFunction]) -> Frame:
    if not masses:
        raise DSTError("no mass functions given")
    frame = masses[0].frame
    for m in masses[1:]:
        if m.frame != frame:
            raise FrameMismatchError(f"frames differ: {frame.elements} vs {m.frame.elements}")
    return frame


def negate(m: MassFunction) -> MassFunction:
    """Mass of each set moved to its complement."""
    full = m.frame.size - 1
    return MassFunction(m.frame, m.values[full ^ np.arange(m.frame.size)])


def _combine_pairwise(masses: Sequence[MassFunction], op) -> MassFunction:
    frame = _common_frame(masses)
    if len(masses) < 2:
        raise DSTError("combination needs at least two mass functions")
    idx = np.arange(frame.size)
    target = op(idx[:, None], idx[None, :]).ravel()

    def step(acc, m):
        joint = np.outer(acc, m.values).ravel()
        return np.bincount(target, weights=joint, minlength=frame.size)

    values = reduce(step, masses[1:], masses[0].values)
    return MassFunction(frame, values)


def combine_conjunctive(masses: Sequence[MassFunction]) -> MassFunction:
    """Unnormalized conjunctive rule: mass flows to intersections."""
    return _combine_pairwise(masses, np.bitwise_and)


def combine_disjunctive(masses: Sequence[MassFunction]) -> MassFunction:
    """Disjunctive rule: mass flows to unions."""
    return _combine_pairwise(masses, np.bitwise_or)


def combine_exclusive(m1: MassFunction, m2: MassFunction) -> MassFunction:
    """Exclusive disjunctive rule: mass flows to symmetric differences."""
    return _combine_pairwise([m1, m2], np.bitwise_xor)


def combine_rule(rule, masses: Mapping[str, MassFunction]) -> MassFunction:
    """Combine named masses under an arbitrary set-theoretic rule.

    ``rule`` is rule text or a parsed expression. Each tuple of source focal
    sets contributes the product of its masses to the set obtained by applying
    the rule's Boolean function bitwise to the tuple's indices.
    """
    from .rules import evaluate_bitwise, parse, variables

    if isinstance(rule, str):
        rule = parse(rule)
    names = variables(rule)
    missing = [v for v in names if v not in masses]
    if missing:
        from .rules import UnboundVariableError

        raise UnboundVariableError(missing[0])
    sources = [masses[v] for v in names]
    frame = _common_frame(sources)
    p = len(sources)
    if frame.n * p > MAX_ENUMERATION_BITS:
        raise DSTError(
            f"enumerating {p} masses over {frame.n} elements needs 2^{frame.n * p} tuples; "
            f"limit is 2^{MAX_ENUMERATION_BITS}"
        )
    size = frame.size
    # one axis per source; the grid enumerates every tuple of focal sets
    grids = np.meshgrid(*[np.arange(size)] * p, indexing="ij", sparse=True)
    joint = reduce(
        np.multiply,
        [m.values.reshape([-1 if r == s else 1 for r in range(p)]) for s, m in enumerate(sources)],
    )
    target = evaluate_bitwise(rule, dict(zip(names, grids)), frame.n)
    target = np.broadcast_to(target, joint.shape).ravel()
    values = np.bincount(target, weights=joint.ravel(), minlength=size)
    return MassFunction(frame, values)


def cdbft(poss: PossMF) -> MassFunction:
    """Mass as the per-element product of support and non-support degrees."""
    values = np.ones(1)
    for k in range(poss.frame.n):
        values = np.concatenate([values * poss.non_support[k], values * poss.support[k]])
    return MassFunction(poss.frame, values)


def betp(m: MassFunction) -> Pignistic:
    """Pignistic transform after discarding the conflict on the empty set."""
    # 1 - m(empty) taken as the non-empty total, which stays accurate near total conflict
    kept = float(m.values[1:].sum())
    if kept <= CONFLICT_TOL:
        raise TotalConflictError(float(m.values[0]), m)
    n = m.frame.n
    share = np.zeros_like(m.values)
    share[1:] = m.values[1:] / popcounts(n)[1:]
    idx = np.arange(m.frame.size)
    probs = np.array([share[(idx >> k) & 1 == 1].sum() for k in range(n)]) / kept
    return Pignistic(m.frame, probs)


# -- JSON mass files ---------------------------------------------------------


def _subset_key(frame: Frame, index: int) -> str:
    return ",".join(sorted(set_of_index(frame, index)))


def mass_to_json(m: MassFunction) -> dict:
    for label in m.frame.elements:
        if "," in label:
            raise DSTError(f"label {label!r} cannot be written: commas separate subset members")
    return {
        "elements": list(m.frame.elements),
        "masses": {
            _subset_key(m.frame, i): float(v) for i, v in enumerate(m.values) if v != 0
        },
    }


def mass_from_json(doc: Mapping) -> MassFunction:
    try:
        frame = Frame(doc["elements"])
        entries = doc["masses"]
    except (KeyError, TypeError) as exc:
        raise DSTError(f"mass document needs 'elements' and 'masses': {exc}") from None
    values = np.zeros(frame.size)
    seen = set()
    for key, v in entries.items():
        members = [s.strip() for s in key.split(",")] if key.strip() else []
        index = index_of_set(frame, members)
        if index in seen:
            raise DSTError(f"subset {key!r} listed twice")
        seen.add(index)
        values[index] = float(v)
    return MassFunction(frame, values)


def load_mass(path) -> MassFunction:
    with open(path) as f:
        return mass_from_json(json.load(f))


def save_mass(m: MassFunction, path) -> None:
    Path(path).write_text(json.dumps(mass_to_json(m), indent=2) + "\n")
