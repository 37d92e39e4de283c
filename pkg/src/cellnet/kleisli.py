"""Stochastic-matrix semantics for terms.

An interface of n places, once given a wiring (a total order on the
places), indexes the 2^n subsets of the interface: the first wired place
is the least-significant bit, so for places p < q the induced order is
{}, {p}, {q}, {p,q}.  A Kleisli arrow is then a row-stochastic matrix
from input subsets to output subsets; interpreting a term composes such
arrows with permutations, Kronecker products, matrix products and
row-stacking, with each cell constant contributing one row driven by the
δ table's distribution over its transactions.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Iterator, Mapping

import numpy as np

from .errors import DeltaError, FileFormatError, InterfaceWidthError, WiringError
from .nets import PlaceId
from .terms import (
    Constant,
    ConstantKey,
    Dead,
    Identity,
    Par,
    Seq,
    Sum,
    Term,
    TermType,
    render_place_set,
    typecheck,
)

DEFAULT_WIDTH_CAP = 20
_TOLERANCE_ENV = "CELLNET_TOLERANCE"


def stochastic_tolerance() -> float:
    """Row-sum tolerance for stochasticity checks (default 1e-9); can be
    overridden through the CELLNET_TOLERANCE environment variable."""
    raw = os.environ.get(_TOLERANCE_ENV)
    if raw is None:
        return 1e-9
    try:
        value = float(raw)
    except ValueError:
        raise WiringError(f"{_TOLERANCE_ENV} must be a float, got {raw!r}") from None
    if value <= 0:
        raise WiringError(f"{_TOLERANCE_ENV} must be positive, got {value}")
    return value


@dataclass(frozen=True)
class Wiring:
    """A repetition-free total order on a set of places."""

    places: tuple[PlaceId, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "places", tuple(self.places))
        if len(set(self.places)) != len(self.places):
            raise WiringError(f"wiring repeats places: {self.places}")

    @property
    def place_set(self) -> frozenset[PlaceId]:
        return frozenset(self.places)

    def __len__(self) -> int:
        return len(self.places)

    @property
    def size(self) -> int:
        """Number of indexed subsets, 2^|places|."""
        return 1 << len(self.places)

    def position(self, place: PlaceId) -> int:
        """1-based position of a place in the wiring."""
        try:
            return self.places.index(place) + 1
        except ValueError:
            raise WiringError(f"place {place!r} is not wired by {self.places}") from None

    def index(self, subset: Iterable[PlaceId]) -> int:
        """Subset index: sum of 2^(position-1) over the members."""
        total = 0
        for place in set(subset):
            total += 1 << (self.position(place) - 1)
        return total

    def subset_at(self, index: int) -> frozenset[PlaceId]:
        if not 0 <= index < self.size:
            raise WiringError(f"subset index {index} out of range for {self.places}")
        return frozenset(p for bit, p in enumerate(self.places) if index >> bit & 1)

    def subsets(self) -> Iterator[frozenset[PlaceId]]:
        """All subsets in index order."""
        for k in range(self.size):
            yield self.subset_at(k)


def lex_wiring(places: Iterable[PlaceId]) -> Wiring:
    """The default wiring: lexicographic order on place identifiers."""
    return Wiring(tuple(sorted(places)))


class Dist(Mapping):
    """An immutable finite probability distribution.

    Outcomes may be any hashable values (place subsets, transaction
    sets, configurations).  Probabilities must be non-negative and sum
    to one within 1e-9; zero-probability outcomes are dropped, so
    iterating yields exactly the support.
    """

    __slots__ = ("_table",)

    def __init__(self, table: Mapping[Hashable, float]) -> None:
        cleaned: dict[Hashable, float] = {}
        for outcome, prob in table.items():
            prob = float(prob)
            if prob < -1e-12:
                raise DeltaError(f"negative probability {prob} for {outcome!r}")
            if prob > 0:
                cleaned[outcome] = prob
        total = sum(cleaned.values())
        if abs(total - 1.0) > 1e-9:
            raise DeltaError(f"probabilities sum to {total}, expected 1")
        self._table = cleaned

    def __getitem__(self, outcome: Hashable) -> float:
        return self._table[outcome]

    def prob(self, outcome: Hashable) -> float:
        return self._table.get(outcome, 0.0)

    def __iter__(self) -> Iterator[Hashable]:
        return iter(self._table)

    def __len__(self) -> int:
        return len(self._table)

    @property
    def support(self) -> frozenset[Hashable]:
        return frozenset(self._table)

    def __repr__(self) -> str:
        inner = ", ".join(f"{k!r}: {v:.6g}" for k, v in sorted(self._table.items(), key=repr))
        return f"Dist({{{inner}}})"


def uniform_dist(outcomes: Iterable[Hashable]) -> Dist:
    outcomes = list(outcomes)
    if not outcomes:
        raise DeltaError("cannot build a uniform distribution over nothing")
    return Dist({o: 1.0 / len(outcomes) for o in outcomes})


@dataclass(frozen=True, eq=False)
class KleisliArrow:
    """A row-stochastic matrix from input subsets to output subsets,
    together with the wirings that fix the subset indexing."""

    in_wiring: Wiring
    out_wiring: Wiring
    matrix: np.ndarray

    def __post_init__(self) -> None:
        matrix = np.asarray(self.matrix, dtype=float)
        expected = (self.in_wiring.size, self.out_wiring.size)
        if matrix.shape != expected:
            raise WiringError(f"matrix shape {matrix.shape} does not match interfaces {expected}")
        tol = stochastic_tolerance()
        if matrix.min(initial=0.0) < -tol:
            raise WiringError(f"matrix has a negative entry: {matrix.min()}")
        sums = matrix.sum(axis=1)
        worst = float(np.abs(sums - 1.0).max(initial=0.0))
        if worst > tol:
            raise WiringError(f"matrix is not row-stochastic (worst row error {worst:.3e})")
        matrix = matrix.copy()
        matrix.flags.writeable = False
        object.__setattr__(self, "matrix", matrix)

    def entry(self, inp: Iterable[PlaceId], out: Iterable[PlaceId]) -> float:
        return float(self.matrix[self.in_wiring.index(inp), self.out_wiring.index(out)])

    def row_dist(self, inp: Iterable[PlaceId]) -> Dist:
        row = self.matrix[self.in_wiring.index(inp)]
        return Dist({self.out_wiring.subset_at(k): float(v) for k, v in enumerate(row) if v > 0})


def identity_arrow(wiring: Wiring) -> KleisliArrow:
    return KleisliArrow(wiring, wiring, np.eye(wiring.size))


def permutation_arrow(source: Wiring, target: Wiring) -> KleisliArrow:
    """The 0/1 arrow relabelling subset indices between two wirings of
    the same place set."""
    if source.place_set != target.place_set:
        raise WiringError(
            f"wirings order different sets: {source.places} vs {target.places}"
        )
    matrix = np.zeros((source.size, target.size))
    for k in range(source.size):
        matrix[k, target.index(source.subset_at(k))] = 1.0
    return KleisliArrow(source, target, matrix)


def tensor(a1: KleisliArrow, a2: KleisliArrow) -> KleisliArrow:
    """Kronecker-style product over juxtaposed wirings: the second
    factor's places occupy the higher bit positions."""
    shared_in = a1.in_wiring.place_set & a2.in_wiring.place_set
    shared_out = a1.out_wiring.place_set & a2.out_wiring.place_set
    if shared_in or shared_out:
        raise WiringError(f"tensor factors share places: {sorted(shared_in | shared_out)}")
    in_wiring = Wiring(a1.in_wiring.places + a2.in_wiring.places)
    out_wiring = Wiring(a1.out_wiring.places + a2.out_wiring.places)
    return KleisliArrow(in_wiring, out_wiring, np.kron(a2.matrix, a1.matrix))


def compose_arrows(a1: KleisliArrow, a2: KleisliArrow) -> KleisliArrow:
    if a1.out_wiring != a2.in_wiring:
        raise WiringError(
            f"cannot compose: output wiring {a1.out_wiring.places} differs from "
            f"input wiring {a2.in_wiring.places}"
        )
    return KleisliArrow(a1.in_wiring, a2.out_wiring, a1.matrix @ a2.matrix)


def copair(rows: list[KleisliArrow], in_wiring: Wiring) -> KleisliArrow:
    """Stack single-row arrows, row k describing input subset number k."""
    if len(rows) != in_wiring.size:
        raise WiringError(f"copair needs {in_wiring.size} rows, got {len(rows)}")
    out_wiring = rows[0].out_wiring
    for arrow in rows:
        if arrow.in_wiring.places != ():
            raise WiringError("copair rows must have the empty input wiring")
        if arrow.out_wiring != out_wiring:
            raise WiringError("copair rows must share one output wiring")
    return KleisliArrow(in_wiring, out_wiring, np.vstack([a.matrix for a in rows]))


def dead_arrow(places: Iterable[PlaceId], out_wiring: Wiring) -> KleisliArrow:
    """The arrow that never marks its outputs: mass 1 on the empty subset."""
    places = frozenset(places)
    if out_wiring.place_set != places:
        raise WiringError(f"wiring {out_wiring.places} does not wire {sorted(places)}")
    row = np.zeros((1, out_wiring.size))
    row[0, 0] = 1.0
    return KleisliArrow(Wiring(()), out_wiring, row)


@dataclass(frozen=True)
class DeltaTable:
    """Distributions over transactions, keyed by constant signature.

    Strict tables refuse to interpret a constant they do not cover;
    non-strict tables fall back to the uniform distribution over the
    constant's transactions.
    """

    entries: Mapping[str, Dist] = field(default_factory=dict)
    strict: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", dict(self.entries))

    def distribution_for(self, key: ConstantKey) -> Dist:
        dist = self.entries.get(key.signature)
        if dist is None:
            if self.strict:
                raise DeltaError(f"no δ entry for constant {key.signature!r}")
            return uniform_dist(p.transitions for p in key.transactions)
        allowed = {p.transitions for p in key.transactions}
        stray = dist.support - allowed
        if stray:
            labels = sorted(",".join(sorted(s)) for s in stray)
            raise DeltaError(
                f"δ for {key.signature!r} assigns probability outside the "
                f"transactions: {labels}"
            )
        return dist


@dataclass(frozen=True)
class DeltaProblem:
    signature: str
    kind: str  # "missing" | "support" | "normalization"
    detail: str

    def __str__(self) -> str:
        return f"{self.kind} [{self.signature}]: {self.detail}"


@dataclass(frozen=True)
class DeltaReport:
    problems: tuple[DeltaProblem, ...]
    filled_uniform: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.problems

    def __str__(self) -> str:
        lines = [str(p) for p in self.problems]
        lines += [f"filled uniform [{s}]" for s in self.filled_uniform]
        return "\n".join(lines) if lines else "OK"


def validate_delta(delta: DeltaTable, needed: Iterable[ConstantKey]) -> DeltaReport:
    """Check that a δ table covers every needed constant with a
    well-formed distribution over its transactions.  In non-strict mode
    missing entries are reported as filled with the uniform distribution
    instead of as errors."""
    problems: list[DeltaProblem] = []
    filled: list[str] = []
    for key in sorted(needed, key=lambda k: k.signature):
        dist = delta.entries.get(key.signature)
        if dist is None:
            if delta.strict:
                problems.append(DeltaProblem(key.signature, "missing", "no entry"))
            else:
                filled.append(key.signature)
            continue
        allowed = {p.transitions for p in key.transactions}
        stray = dist.support - allowed
        if stray:
            labels = sorted(",".join(sorted(s)) for s in stray)
            problems.append(
                DeltaProblem(key.signature, "support", f"unknown transactions {labels}")
            )
    return DeltaReport(tuple(problems), tuple(filled))


def load_delta(text: str, *, strict: bool = True) -> DeltaTable:
    """Parse the δ file format: a JSON list of entries

        {"signature": "e,g|e,h|f", "probabilities": {"f": 0.5, ...}}

    where each probability is keyed by a transaction's transition set
    (comma-joined, sorted).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"δ file is not valid JSON: {exc}") from exc
    if not isinstance(doc, list):
        raise FileFormatError("δ file must contain a JSON list of entries")
    entries: dict[str, Dist] = {}
    for item in doc:
        if not isinstance(item, dict) or set(item) != {"signature", "probabilities"}:
            raise FileFormatError("each δ entry needs exactly 'signature' and 'probabilities'")
        signature = item["signature"]
        probs = item["probabilities"]
        if not isinstance(signature, str) or not isinstance(probs, dict):
            raise FileFormatError(f"malformed δ entry for {signature!r}")
        if signature in entries:
            raise FileFormatError(f"duplicate δ entry for {signature!r}")
        try:
            table = {
                frozenset(label.split(",")) if label else frozenset(): float(p)
                for label, p in probs.items()
            }
            entries[signature] = Dist(table)
        except (DeltaError, ValueError) as exc:
            raise FileFormatError(f"bad δ entry for {signature!r}: {exc}") from exc
    return DeltaTable(entries, strict=strict)


def dump_delta(delta: DeltaTable) -> str:
    doc = [
        {
            "signature": signature,
            "probabilities": {
                ",".join(sorted(outcome)): prob for outcome, prob in sorted(
                    dist.items(), key=lambda kv: sorted(kv[0])
                )
            },
        }
        for signature, dist in sorted(delta.entries.items())
    ]
    return json.dumps(doc, indent=2) + "\n"


def constant_arrow(key: ConstantKey, delta: DeltaTable, out_wiring: Wiring) -> KleisliArrow:
    """One row over the constant's outputs: the entry at subset m is the
    total probability of the transactions whose final places are m."""
    if out_wiring.place_set != key.outputs:
        raise WiringError(
            f"wiring {out_wiring.places} does not wire the constant outputs "
            f"{sorted(key.outputs)}"
        )
    dist = delta.distribution_for(key)
    row = np.zeros((1, out_wiring.size))
    # sorted so that float accumulation is reproducible across runs
    for proc in sorted(key.transactions, key=lambda p: p.sort_key()):
        row[0, out_wiring.index(proc.final_places)] += dist.prob(proc.transitions)
    return KleisliArrow(Wiring(()), out_wiring, row)


SubWiringChooser = Callable[[frozenset[str]], Wiring]


def interpret(
    term: Term,
    delta: DeltaTable,
    in_wiring: Wiring | None = None,
    out_wiring: Wiring | None = None,
    *,
    suborder: SubWiringChooser = lex_wiring,
    width_cap: int = DEFAULT_WIDTH_CAP,
) -> KleisliArrow:
    """Interpret a well-typed term as a Kleisli arrow.

    ``in_wiring``/``out_wiring`` must wire the term's input/output
    interfaces (default: lexicographic).  ``suborder`` fixes the wirings
    chosen internally for tensor factors and sequential middles; by the
    permutation-conjugation property the result does not depend on it.
    """
    ty = typecheck(term)
    if in_wiring is None:
        in_wiring = lex_wiring(ty.inputs)
    if out_wiring is None:
        out_wiring = lex_wiring(ty.outputs)
    if in_wiring.place_set != ty.inputs:
        raise WiringError(
            f"input wiring {in_wiring.places} does not wire the term inputs {sorted(ty.inputs)}"
        )
    if out_wiring.place_set != ty.outputs:
        raise WiringError(
            f"output wiring {out_wiring.places} does not wire the term outputs {sorted(ty.outputs)}"
        )
    return _interpret(term, ty, delta, in_wiring, out_wiring, suborder, width_cap)


def _check_width(ty: TermType, cap: int) -> None:
    widest = max(len(ty.inputs), len(ty.outputs))
    if widest > cap:
        raise InterfaceWidthError(
            f"interface of width {widest} exceeds the cap {cap}: the dense matrix "
            f"would have 2^{widest} columns (exponential blowup); raise the cap "
            "explicitly if this is intended"
        )


def _interpret(
    term: Term,
    ty: TermType,
    delta: DeltaTable,
    pi: Wiring,
    rho: Wiring,
    suborder: SubWiringChooser,
    cap: int,
) -> KleisliArrow:
    _check_width(ty, cap)
    if isinstance(term, Identity):
        return permutation_arrow(pi, rho)
    if isinstance(term, Dead):
        return dead_arrow(term.places, rho)
    if isinstance(term, Constant):
        return constant_arrow(term.key, delta, rho)
    if isinstance(term, Par):
        t1 = typecheck(term.left)
        t2 = typecheck(term.right)
        pi1, pi2 = suborder(t1.inputs), suborder(t2.inputs)
        rho1, rho2 = suborder(t1.outputs), suborder(t2.outputs)
        left = _interpret(term.left, t1, delta, pi1, rho1, suborder, cap)
        right = _interpret(term.right, t2, delta, pi2, rho2, suborder, cap)
        inner = tensor(left, right)
        return compose_arrows(
            compose_arrows(permutation_arrow(pi, inner.in_wiring), inner),
            permutation_arrow(inner.out_wiring, rho),
        )
    if isinstance(term, Seq):
        t1 = typecheck(term.first)
        t2 = typecheck(term.second)
        gamma = suborder(t1.outputs)
        first = _interpret(term.first, t1, delta, pi, gamma, suborder, cap)
        second = _interpret(term.second, t2, delta, gamma, rho, suborder, cap)
        return compose_arrows(first, second)
    if isinstance(term, Sum):
        rows = []
        for k in range(pi.size):
            branch = term.branch(pi.subset_at(k))
            bty = typecheck(branch)
            rows.append(_interpret(branch, bty, delta, Wiring(()), rho, suborder, cap))
        return copair(rows, pi)
    raise WiringError(f"not a term: {term!r}")


# --------------------------------------------------------------------- #
# Matrix export
# --------------------------------------------------------------------- #

def arrow_to_json(arrow: KleisliArrow) -> str:
    doc = {
        "inputs": [sorted(s) for s in arrow.in_wiring.subsets()],
        "outputs": [sorted(s) for s in arrow.out_wiring.subsets()],
        "rows": [[float(v) for v in row] for row in arrow.matrix],
    }
    return json.dumps(doc, indent=2) + "\n"


def arrow_to_csv(arrow: KleisliArrow) -> str:
    header = [""] + [render_place_set(s) for s in arrow.out_wiring.subsets()]
    lines = [",".join('"%s"' % h for h in header)]
    for k, row in enumerate(arrow.matrix):
        label = render_place_set(arrow.in_wiring.subset_at(k))
        lines.append(",".join(['"%s"' % label] + [repr(float(v)) for v in row]))
    return "\n".join(lines) + "\n"


def format_arrow(arrow: KleisliArrow) -> str:
    """Human-readable table with subset-labelled rows and columns."""
    col_labels = [render_place_set(s) for s in arrow.out_wiring.subsets()]
    row_labels = [render_place_set(s) for s in arrow.in_wiring.subsets()]
    cells = [[f"{float(v):.6g}" for v in row] for row in arrow.matrix]
    widths = [
        max(len(col_labels[j]), *(len(cells[i][j]) for i in range(len(cells))))
        for j in range(len(col_labels))
    ]
    label_width = max(len(label) for label in row_labels)
    lines = [
        " ".join([" " * label_width] + [col_labels[j].rjust(widths[j]) for j in range(len(widths))])
    ]
    for i, row in enumerate(cells):
        lines.append(
            " ".join([row_labels[i].ljust(label_width)] + [row[j].rjust(widths[j]) for j in range(len(widths))])
        )
    return "\n".join(lines) + "\n"
