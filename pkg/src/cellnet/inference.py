"""Bayesian reasoning over compiled arrows: marginalization, forward
state push, predicate pullback, and conditioning.

States are distributions over the subsets of a wired interface;
predicates assign each subset a value in [0,1] (sharp events are the 0/1
special case).  Forward inference pushes a state through an arrow,
backward inference pulls a predicate back, and conditioning reweighs a
state by a predicate, normalising by the validity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import FileFormatError, InferenceError
from .kleisli import Dist, KleisliArrow, Wiring
from .nets import PlaceId


@dataclass(frozen=True, eq=False)
class State:
    """A distribution over the subsets of a wired place set."""

    wiring: Wiring
    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (self.wiring.size,):
            raise InferenceError(
                f"state vector of length {probs.shape} does not match wiring "
                f"{self.wiring.places}"
            )
        if probs.min(initial=0.0) < -1e-12:
            raise InferenceError(f"state has a negative probability: {probs.min()}")
        if abs(float(probs.sum()) - 1.0) > 1e-9:
            raise InferenceError(f"state probabilities sum to {probs.sum()}, expected 1")
        probs = probs.copy()
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_mapping(cls, wiring: Wiring, table: Mapping[frozenset[PlaceId], float]) -> "State":
        probs = np.zeros(wiring.size)
        for subset, p in table.items():
            probs[wiring.index(subset)] += p
        return cls(wiring, probs)

    @classmethod
    def point(cls, wiring: Wiring, subset: Iterable[PlaceId]) -> "State":
        probs = np.zeros(wiring.size)
        probs[wiring.index(subset)] = 1.0
        return cls(wiring, probs)

    def prob(self, subset: Iterable[PlaceId]) -> float:
        return float(self.probs[self.wiring.index(subset)])

    def to_dist(self) -> Dist:
        return Dist(
            {self.wiring.subset_at(k): float(v) for k, v in enumerate(self.probs) if v > 0}
        )

    def place_marginal(self, place: PlaceId) -> float:
        """Probability that the given place is marked."""
        self.wiring.position(place)
        return float(
            sum(v for k, v in enumerate(self.probs) if place in self.wiring.subset_at(k))
        )


@dataclass(frozen=True, eq=False)
class Predicate:
    """A [0,1]-valued function on the subsets of a wired place set;
    subsets not mentioned at construction default to 0."""

    wiring: Wiring
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.wiring.size,):
            raise InferenceError(
                f"predicate vector of length {values.shape} does not match wiring "
                f"{self.wiring.places}"
            )
        if values.min(initial=0.0) < -1e-12 or values.max(initial=0.0) > 1.0 + 1e-12:
            raise InferenceError("predicate values must lie in [0,1]")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def from_mapping(cls, wiring: Wiring, table: Mapping[frozenset[PlaceId], float]) -> "Predicate":
        values = np.zeros(wiring.size)
        for subset, v in table.items():
            values[wiring.index(subset)] = v
        return cls(wiring, values)

    @classmethod
    def always(cls, wiring: Wiring) -> "Predicate":
        return cls(wiring, np.ones(wiring.size))

    @classmethod
    def from_evidence(cls, wiring: Wiring, evidence: Mapping[PlaceId, bool]) -> "Predicate":
        """The sharp predicate holding exactly on subsets that agree
        with the observed presence/absence of tokens."""
        for place in evidence:
            wiring.position(place)
        values = np.zeros(wiring.size)
        for k in range(wiring.size):
            subset = wiring.subset_at(k)
            if all((place in subset) == bool(present) for place, present in evidence.items()):
                values[k] = 1.0
        return cls(wiring, values)

    def value(self, subset: Iterable[PlaceId]) -> float:
        return float(self.values[self.wiring.index(subset)])


def marginalize(arrow: KleisliArrow, keep: Iterable[PlaceId]) -> KleisliArrow:
    """Discard the output wires outside ``keep``, summing the columns
    that agree on the kept places."""
    keep = frozenset(keep)
    stray = keep - arrow.out_wiring.place_set
    if stray:
        raise InferenceError(f"cannot keep unknown output places {sorted(stray)}")
    new_out = Wiring(tuple(p for p in arrow.out_wiring.places if p in keep))
    matrix = np.zeros((arrow.in_wiring.size, new_out.size))
    for col in range(arrow.out_wiring.size):
        target = new_out.index(arrow.out_wiring.subset_at(col) & keep)
        matrix[:, target] += arrow.matrix[:, col]
    return KleisliArrow(arrow.in_wiring, new_out, matrix)


def restrict_state(state: State, keep: Iterable[PlaceId]) -> State:
    """Project a state down to the kept places (marginal distribution)."""
    keep = frozenset(keep)
    stray = keep - state.wiring.place_set
    if stray:
        raise InferenceError(f"cannot keep unknown places {sorted(stray)}")
    new_wiring = Wiring(tuple(p for p in state.wiring.places if p in keep))
    probs = np.zeros(new_wiring.size)
    for k, v in enumerate(state.probs):
        probs[new_wiring.index(state.wiring.subset_at(k) & keep)] += v
    return State(new_wiring, probs)


def forward(state: State, arrow: KleisliArrow) -> State:
    """Push a state through an arrow (vector-matrix product)."""
    if state.wiring != arrow.in_wiring:
        raise InferenceError(
            f"state wiring {state.wiring.places} does not match arrow input "
            f"{arrow.in_wiring.places}"
        )
    return State(arrow.out_wiring, state.probs @ arrow.matrix)


def pullback(arrow: KleisliArrow, predicate: Predicate) -> Predicate:
    """Pull a predicate on the outputs back to a predicate on the
    inputs: the expected value of the predicate under each row."""
    if predicate.wiring != arrow.out_wiring:
        raise InferenceError(
            f"predicate wiring {predicate.wiring.places} does not match arrow output "
            f"{arrow.out_wiring.places}"
        )
    return Predicate(arrow.in_wiring, arrow.matrix @ predicate.values)


def validity(state: State, predicate: Predicate) -> float:
    """Expected value of the predicate under the state (ω ⊨ p)."""
    if state.wiring != predicate.wiring:
        raise InferenceError("state and predicate are wired differently")
    return float(state.probs @ predicate.values)


def condition(state: State, predicate: Predicate) -> State:
    """Condition a state on a predicate: reweigh pointwise and divide by
    the validity.  Fails when the validity is zero."""
    norm = validity(state, predicate)
    if norm <= 0.0:
        raise InferenceError("cannot condition on a predicate of zero validity")
    return State(state.wiring, state.probs * predicate.values / norm)


# --------------------------------------------------------------------- #
# State file format
# --------------------------------------------------------------------- #

def parse_state(text: str) -> State:
    """State file: {"places": [...], "probabilities": {"p,q": 0.5, ...}}
    with subsets keyed by comma-joined place ids ("" for the empty
    subset) and the wiring taken from the ``places`` order."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"state file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or set(doc) != {"places", "probabilities"}:
        raise FileFormatError("state file needs exactly 'places' and 'probabilities'")
    places = doc["places"]
    probs = doc["probabilities"]
    if not isinstance(places, list) or not all(isinstance(p, str) and p for p in places):
        raise FileFormatError("'places' must be a list of non-empty strings")
    if not isinstance(probs, dict):
        raise FileFormatError("'probabilities' must be an object")
    wiring = Wiring(tuple(places))
    table: dict[frozenset[str], float] = {}
    for label, value in probs.items():
        subset = frozenset(label.split(",")) if label else frozenset()
        stray = subset - wiring.place_set
        if stray:
            raise FileFormatError(f"state mentions unknown places {sorted(stray)}")
        if subset in table:
            raise FileFormatError(f"duplicate subset {label!r} in state file")
        table[subset] = float(value)
    try:
        return State.from_mapping(wiring, table)
    except InferenceError as exc:
        raise FileFormatError(str(exc)) from exc


def load_state(path: str) -> State:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_state(handle.read())


def format_state(state: State) -> str:
    lines = []
    for k, v in enumerate(state.probs):
        if v > 0:
            label = ",".join(sorted(state.wiring.subset_at(k)))
            lines.append(f"{{{label}}}: {float(v):.12g}")
    return "\n".join(lines) + "\n"
