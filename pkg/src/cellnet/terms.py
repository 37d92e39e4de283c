"""The typed intermediate language that occurrence nets compile into.

Terms are built from identity wires, dead outputs, parallel and
sequential composition, cell constants (a fully-marked cell described by
its set of transactions) and marking-indexed sums (one branch per subset
of a cell's unmarked inputs).  A term's type is the triple
(inputs, nodes, outputs); typing is unique and ill-formed combinations
are rejected.

Normalization returns a canonical representative modulo the axioms of
the commutative monoidal pre-category (associativity/commutativity of +
with unit I{}, associativity and identity laws of ;, functoriality, and
the dead-wire laws Bot{} = I{} and Bot{s∪s'} = Bot{s} + Bot{s'}): the
term is decomposed into its atomic blocks, which are restratified into
layers by place dataflow and reassembled in a fixed order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping

from .errors import TermError, TermSyntaxError
from .nets import PlaceId, Process


def render_place_set(places: Iterable[str]) -> str:
    return "{" + ",".join(sorted(places)) + "}"


def subsets_lex(places: Iterable[str]) -> list[frozenset[str]]:
    """All subsets of a place set, in binary-counting order with the
    lexicographically first place as the least-significant bit."""
    ordered = sorted(places)
    out = []
    for k in range(1 << len(ordered)):
        out.append(frozenset(p for bit, p in enumerate(ordered) if k >> bit & 1))
    return out


@dataclass(frozen=True)
class ConstantKey:
    """Identity of a cell constant: the marked input places, the output
    places, and the set of transactions δ distributes over."""

    marked: frozenset[PlaceId]
    outputs: frozenset[PlaceId]
    transactions: frozenset[Process]

    def __post_init__(self) -> None:
        object.__setattr__(self, "marked", frozenset(self.marked))
        object.__setattr__(self, "outputs", frozenset(self.outputs))
        object.__setattr__(self, "transactions", frozenset(self.transactions))
        if not self.transactions:
            raise TermError("a cell constant needs at least one transaction")
        finals = frozenset().union(*(p.final_places for p in self.transactions))
        if finals != self.outputs:
            raise TermError(
                f"constant outputs {sorted(self.outputs)} do not match the union "
                f"of transaction final places {sorted(finals)}"
            )
        for proc in self.transactions:
            if not proc.initial_places <= self.marked:
                raise TermError(
                    f"transaction {proc.label} consumes unmarked places "
                    f"{sorted(proc.initial_places - self.marked)}"
                )

    @property
    def signature(self) -> str:
        """Canonical rendering of the transaction sets, e.g. ``e,g|e,h|f``."""
        return "|".join(sorted(p.label for p in self.transactions))

    @property
    def nodes(self) -> frozenset[str]:
        acc = frozenset(self.marked)
        for proc in self.transactions:
            acc |= proc.nodes
        return acc


class Term:
    """Base class of the term AST (all nodes are frozen dataclasses)."""


@dataclass(frozen=True)
class Identity(Term):
    places: frozenset[PlaceId]

    def __post_init__(self) -> None:
        object.__setattr__(self, "places", frozenset(self.places))


@dataclass(frozen=True)
class Dead(Term):
    places: frozenset[PlaceId]

    def __post_init__(self) -> None:
        object.__setattr__(self, "places", frozenset(self.places))


@dataclass(frozen=True)
class Par(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Seq(Term):
    first: Term
    second: Term


@dataclass(frozen=True)
class Constant(Term):
    key: ConstantKey


@dataclass(frozen=True)
class Sum(Term):
    """Case split over the subsets of ``inputs``; branches are stored
    sorted by subset so structurally equal sums compare equal."""

    inputs: frozenset[PlaceId]
    branches: tuple[tuple[frozenset[PlaceId], Term], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "inputs", frozenset(self.inputs))
        normalized = tuple(
            sorted(
                ((frozenset(m), t) for m, t in self.branches),
                key=lambda item: (len(item[0]), sorted(item[0])),
            )
        )
        object.__setattr__(self, "branches", normalized)

    def branch(self, m: frozenset[PlaceId]) -> Term:
        m = frozenset(m)
        for key, term in self.branches:
            if key == m:
                return term
        raise TermError(f"sum has no branch for {render_place_set(m)}")


def make_sum(inputs: Iterable[PlaceId], branches: Mapping[frozenset[PlaceId], Term]) -> Sum:
    return Sum(frozenset(inputs), tuple(branches.items()))


def par_all(terms: list[Term]) -> Term:
    """Left-associated parallel composition; empty list gives I{}."""
    if not terms:
        return Identity(frozenset())
    acc = terms[0]
    for t in terms[1:]:
        acc = Par(acc, t)
    return acc


@dataclass(frozen=True)
class TermType:
    """(inputs, nodes, outputs): unmarked input places, every place and
    transition mentioned, and output places."""

    inputs: frozenset[str]
    nodes: frozenset[str]
    outputs: frozenset[str]


@lru_cache(maxsize=65536)
def typecheck(term: Term) -> TermType:
    """Infer the unique type of a term, rejecting ill-formed ones:
    overlapping node sets under +, interface mismatches under ;, and
    sums with missing or inconsistently-typed branches."""
    if isinstance(term, Identity):
        return TermType(term.places, term.places, term.places)
    if isinstance(term, Dead):
        return TermType(frozenset(), term.places, term.places)
    if isinstance(term, Par):
        t1 = typecheck(term.left)
        t2 = typecheck(term.right)
        overlap = t1.nodes & t2.nodes
        if overlap:
            raise TermError(f"parallel terms share nodes {sorted(overlap)}")
        return TermType(t1.inputs | t2.inputs, t1.nodes | t2.nodes, t1.outputs | t2.outputs)
    if isinstance(term, Seq):
        t1 = typecheck(term.first)
        t2 = typecheck(term.second)
        if t1.outputs != t2.inputs:
            raise TermError(
                "sequential interface mismatch: "
                f"uncovered outputs {sorted(t1.outputs - t2.inputs)}, "
                f"unfed inputs {sorted(t2.inputs - t1.outputs)}"
            )
        middle = t1.nodes & t2.nodes
        if middle != t1.outputs:
            raise TermError(
                f"sequential terms share nodes beyond the interface: {sorted(middle ^ t1.outputs)}"
            )
        return TermType(t1.inputs, t1.nodes | t2.nodes, t2.outputs)
    if isinstance(term, Constant):
        key = term.key
        return TermType(frozenset(), key.marked | key.nodes, key.outputs)
    if isinstance(term, Sum):
        expected = set(subsets_lex(term.inputs))
        present = {m for m, _ in term.branches}
        missing = expected - present
        if missing:
            rendered = sorted(render_place_set(m) for m in missing)
            raise TermError(f"sum is missing branches for {rendered}")
        extra = present - expected
        if extra:
            rendered = sorted(render_place_set(m) for m in extra)
            raise TermError(f"sum has branches outside its input set: {rendered}")
        outputs: frozenset[str] | None = None
        nodes = frozenset(term.inputs)
        for m, sub in term.branches:
            ty = typecheck(sub)
            if ty.inputs:
                raise TermError(
                    f"sum branch {render_place_set(m)} has unfed inputs {sorted(ty.inputs)}"
                )
            if outputs is None:
                outputs = ty.outputs
            elif ty.outputs != outputs:
                raise TermError(
                    f"sum branch {render_place_set(m)} outputs {sorted(ty.outputs)} "
                    f"disagree with {sorted(outputs)}"
                )
            nodes |= ty.nodes
        assert outputs is not None
        return TermType(term.inputs, nodes, outputs)
    raise TermError(f"not a term: {term!r}")


def constants_of(term: Term) -> frozenset[ConstantKey]:
    """Every distinct cell constant occurring in the term: the schema a
    δ table must cover.  A signature naming two different keys would
    make δ ambiguous and is rejected."""
    typecheck(term)
    found: dict[str, ConstantKey] = {}

    def walk(t: Term) -> None:
        if isinstance(t, Constant):
            prior = found.get(t.key.signature)
            if prior is not None and prior != t.key:
                raise TermError(
                    f"two distinct constants share the signature {t.key.signature!r}"
                )
            found[t.key.signature] = t.key
        elif isinstance(t, Par):
            walk(t.left)
            walk(t.right)
        elif isinstance(t, Seq):
            walk(t.first)
            walk(t.second)
        elif isinstance(t, Sum):
            for _, sub in t.branches:
                walk(sub)

    walk(term)
    return frozenset(found.values())


# --------------------------------------------------------------------- #
# Normalization
# --------------------------------------------------------------------- #

@dataclass(frozen=True)
class _Atom:
    term: Term
    inputs: frozenset[str]
    outputs: frozenset[str]


def _atoms(term: Term) -> list[_Atom]:
    if isinstance(term, Identity):
        return []
    if isinstance(term, Dead):
        return [_Atom(Dead(frozenset({p})), frozenset(), frozenset({p})) for p in sorted(term.places)]
    if isinstance(term, (Par, Seq)):
        first, second = (term.left, term.right) if isinstance(term, Par) else (term.first, term.second)
        return _atoms(first) + _atoms(second)
    if isinstance(term, Constant):
        return [_Atom(term, frozenset(), term.key.outputs)]
    if isinstance(term, Sum):
        branches = {m: normalize(sub) for m, sub in term.branches}
        new_sum = make_sum(term.inputs, branches)
        ty = typecheck(new_sum)
        return [_Atom(new_sum, ty.inputs, ty.outputs)]
    raise TermError(f"not a term: {term!r}")


def normalize(term: Term) -> Term:
    """Canonical representative of the term modulo the monoidal axioms.

    The atomic blocks (constants, sums with normalized branches, and
    singleton dead wires) are extracted, stratified greedily by place
    dataflow, and reassembled layer by layer with identity padding, the
    blocks within a layer ordered by their rendering.  Idempotent, type
    preserving, and interpretation preserving.
    """
    ty = typecheck(term)
    atoms = _atoms(term)
    if not atoms:
        return Identity(ty.inputs)

    producer: dict[str, int] = {}
    consumer: dict[str, int] = {}
    for idx, atom in enumerate(atoms):
        for p in atom.outputs:
            if p in producer:
                raise TermError(f"place {p} is produced twice; cannot normalize")
            producer[p] = idx
        for p in atom.inputs:
            if p in consumer:
                raise TermError(f"place {p} is consumed twice; cannot normalize")
            consumer[p] = idx

    layer: dict[int, int] = {}

    def assign(idx: int, pending: tuple[int, ...] = ()) -> int:
        if idx in layer:
            return layer[idx]
        if idx in pending:
            raise TermError("cyclic place dataflow; cannot normalize")
        depths = []
        for p in atoms[idx].inputs:
            if p in ty.inputs:
                depths.append(0)
            elif p in producer:
                depths.append(assign(producer[p], pending + (idx,)))
            else:
                raise TermError(f"place {p} is consumed but never produced")
        layer[idx] = 1 + max(depths, default=0)
        return layer[idx]

    for idx in range(len(atoms)):
        assign(idx)
    depth = max(layer.values())

    interface_places = set(ty.inputs) | set(producer)
    pads: dict[int, set[str]] = {j: set() for j in range(1, depth + 1)}
    for p in sorted(interface_places):
        if p in ty.inputs and p in producer:
            raise TermError(f"input place {p} is also produced; cannot normalize")
        avail = 0 if p in ty.inputs else layer[producer[p]]
        if p in consumer:
            last = layer[consumer[p]] - 1
        elif p in ty.outputs:
            last = depth
        else:
            raise TermError(f"place {p} is neither consumed nor delivered as an output")
        for j in range(avail + 1, last + 1):
            pads[j].add(p)

    layers: list[Term] = []
    for j in range(1, depth + 1):
        blocks = sorted(
            (atoms[i].term for i in range(len(atoms)) if layer[i] == j),
            key=render_term,
        )
        if pads[j]:
            blocks.append(Identity(frozenset(pads[j])))
        layers.append(par_all(blocks))
    result = layers[0]
    for nxt in layers[1:]:
        result = Seq(result, nxt)
    return result


# --------------------------------------------------------------------- #
# Textual form
# --------------------------------------------------------------------- #
#
# term     := 'I' placeset | 'Bot' placeset
#           | '(' term '+' term ')' | '(' term ';' term ')'
#           | 'cell' '[' placeset '>' placeset ':' process (';' process)* ']'
#           | 'sum' placeset '[' branch (',' branch)* ']'
# branch   := placeset ':' term
# process  := idset ':' placeset '>' placeset ('|' placeset)?
# placeset := '{' (id (',' id)*)? '}'

def render_process(proc: Process) -> str:
    body = (
        f"{render_place_set(proc.transitions)}:"
        f"{render_place_set(proc.initial_places)}>"
        f"{render_place_set(proc.final_places)}"
    )
    if proc.internal_places:
        body += f"|{render_place_set(proc.internal_places)}"
    return body


def render_term(term: Term) -> str:
    if isinstance(term, Identity):
        return f"I{render_place_set(term.places)}"
    if isinstance(term, Dead):
        return f"Bot{render_place_set(term.places)}"
    if isinstance(term, Par):
        return f"({render_term(term.left)} + {render_term(term.right)})"
    if isinstance(term, Seq):
        return f"({render_term(term.first)} ; {render_term(term.second)})"
    if isinstance(term, Constant):
        key = term.key
        processes = "; ".join(
            render_process(p) for p in sorted(key.transactions, key=Process.sort_key)
        )
        return (
            f"cell[{render_place_set(key.marked)}>"
            f"{render_place_set(key.outputs)}: {processes}]"
        )
    if isinstance(term, Sum):
        branches = ", ".join(
            f"{render_place_set(m)}: {render_term(term.branch(m))}"
            for m in subsets_lex(term.inputs)
        )
        return f"sum{render_place_set(term.inputs)}[{branches}]"
    raise TermError(f"not a term: {term!r}")


_TOKEN = re.compile(r"\s*([{}()\[\]+;:>,|]|[A-Za-z0-9_.\-]+)")


class _Parser:
    def __init__(self, text: str) -> None:
        self.tokens = self._tokenize(text)
        self.pos = 0

    @staticmethod
    def _tokenize(text: str) -> list[str]:
        tokens = []
        pos = 0
        while pos < len(text):
            match = _TOKEN.match(text, pos)
            if match is None:
                if text[pos:].strip():
                    raise TermSyntaxError(f"unexpected character {text[pos]!r} at offset {pos}")
                break
            tokens.append(match.group(1))
            pos = match.end()
        return tokens

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, expected: str | None = None) -> str:
        tok = self.peek()
        if tok is None:
            raise TermSyntaxError(f"unexpected end of input (wanted {expected or 'a token'})")
        if expected is not None and tok != expected:
            raise TermSyntaxError(f"expected {expected!r}, found {tok!r}")
        self.pos += 1
        return tok

    def place_set(self) -> frozenset[str]:
        self.take("{")
        items = []
        if self.peek() != "}":
            items.append(self.take())
            while self.peek() == ",":
                self.take(",")
                items.append(self.take())
        self.take("}")
        for item in items:
            if item in "{}()[]+;:>,|":
                raise TermSyntaxError(f"expected an identifier, found {item!r}")
        if len(set(items)) != len(items):
            raise TermSyntaxError(f"duplicate identifiers in {{{','.join(items)}}}")
        return frozenset(items)

    def process(self) -> Process:
        transitions = self.place_set()
        self.take(":")
        initial = self.place_set()
        self.take(">")
        final = self.place_set()
        internal: frozenset[str] = frozenset()
        if self.peek() == "|":
            self.take("|")
            internal = self.place_set()
        return Process(transitions, initial, final, internal)

    def term(self) -> Term:
        tok = self.peek()
        if tok == "I":
            self.take()
            return Identity(self.place_set())
        if tok == "Bot":
            self.take()
            return Dead(self.place_set())
        if tok == "(":
            self.take("(")
            left = self.term()
            op = self.take()
            if op not in "+;":
                raise TermSyntaxError(f"expected '+' or ';', found {op!r}")
            right = self.term()
            self.take(")")
            return Par(left, right) if op == "+" else Seq(left, right)
        if tok == "cell":
            self.take()
            self.take("[")
            marked = self.place_set()
            self.take(">")
            outputs = self.place_set()
            self.take(":")
            processes = [self.process()]
            while self.peek() == ";":
                self.take(";")
                processes.append(self.process())
            self.take("]")
            try:
                key = ConstantKey(marked, outputs, frozenset(processes))
            except TermError as exc:
                raise TermSyntaxError(str(exc)) from exc
            return Constant(key)
        if tok == "sum":
            self.take()
            inputs = self.place_set()
            self.take("[")
            branches: dict[frozenset[str], Term] = {}
            while True:
                m = self.place_set()
                self.take(":")
                branches[m] = self.term()
                if self.peek() == ",":
                    self.take(",")
                    continue
                break
            self.take("]")
            return make_sum(inputs, branches)
        raise TermSyntaxError(f"cannot start a term with {tok!r}")


def parse_term(text: str) -> Term:
    parser = _Parser(text)
    term = parser.term()
    if parser.peek() is not None:
        raise TermSyntaxError(f"trailing input starting at {parser.peek()!r}")
    return term
