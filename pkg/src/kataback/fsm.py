"""Weighted finite-state acceptors and transducers over the (min, +) semiring.

Weights are costs, i.e. negative log probabilities, so they are non-negative
floats, path cost is the sum of arc costs plus the final-state cost, and the
best path is the cheapest one.  An acceptor is just a transducer whose arcs
all carry the same symbol on both sides.

Machines are built by calling ``add_state`` / ``add_arc`` / ``set_final`` and
should be treated as immutable afterwards; every algorithm here returns a new
machine and never mutates its inputs, so built machines can be shared freely
between threads.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Sequence

EPSILON = "<eps>"
EPSILON_ID = 0


class KatabackError(Exception):
    """Base class for errors raised by this package."""


class UnknownSymbolError(KatabackError):
    """An input used a symbol that is not registered in the relevant alphabet."""

    def __init__(self, label: str, table_name: str = "symbol table"):
        self.label = label
        super().__init__(f"unknown symbol {label!r} (not in {table_name})")


class AlphabetMismatchError(KatabackError):
    """Two machines were combined across incompatible alphabets."""


class SymbolTable:
    """Bijection between string labels and small integer ids for one alphabet.

    Id 0 is always the empty symbol ``<eps>``.
    """

    def __init__(self, name: str = "symbols"):
        self.name = name
        self._id_of: dict[str, int] = {EPSILON: EPSILON_ID}
        self._label_of: list[str] = [EPSILON]

    @classmethod
    def from_labels(cls, labels: Iterable[str], name: str = "symbols") -> "SymbolTable":
        table = cls(name)
        for label in labels:
            table.add(label)
        return table

    def add(self, label: str) -> int:
        """Register a label, returning its id.  Idempotent."""
        sym = self._id_of.get(label)
        if sym is None:
            sym = len(self._label_of)
            self._id_of[label] = sym
            self._label_of.append(label)
        return sym

    def id(self, label: str) -> int:
        try:
            return self._id_of[label]
        except KeyError:
            raise UnknownSymbolError(label, self.name) from None

    def label(self, sym: int) -> str:
        return self._label_of[sym]

    def ids(self, labels: Iterable[str]) -> list[int]:
        return [self.id(label) for label in labels]

    def __contains__(self, label: str) -> bool:
        return label in self._id_of

    def __len__(self) -> int:
        return len(self._label_of)

    def __iter__(self) -> Iterator[str]:
        return iter(self._label_of)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SymbolTable) and self._label_of == other._label_of

    def __repr__(self) -> str:
        return f"SymbolTable({self.name!r}, {len(self)} symbols)"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            for sym, label in enumerate(self._label_of):
                handle.write(f"{sym}\t{label}\n")

    @classmethod
    def load(cls, path, name: str = "symbols") -> "SymbolTable":
        table = cls(name)
        with open(path, encoding="utf-8") as handle:
            for line in handle:
                line = line.rstrip("\n")
                if not line:
                    continue
                sym_str, label = line.split("\t")
                sym = table.add(label)
                if sym != int(sym_str):
                    raise KatabackError(f"{path}: non-contiguous symbol ids")
        return table


class Arc(NamedTuple):
    ilabel: int
    olabel: int
    cost: float
    dst: int


def cost_of(prob: float) -> float:
    """Cost of a probability in (0, 1]."""
    if not 0.0 < prob <= 1.0:
        raise ValueError(f"probability out of range (0, 1]: {prob}")
    return -math.log(prob)


def prob_of(cost: float) -> float:
    return math.exp(-cost)


@dataclass
class Path:
    """A start-to-final walk through a machine."""

    arcs: list[tuple[int, Arc]]  # (source state, arc)
    total_cost: float
    input_labels: tuple[str, ...]  # epsilons removed
    output_labels: tuple[str, ...]

    @property
    def prob(self) -> float:
        return prob_of(self.total_cost)


@dataclass
class Wfst:
    """Weighted transducer: integer states, adjacency arc lists, final costs."""

    isyms: SymbolTable
    osyms: SymbolTable
    start: int = 0
    finals: dict[int, float] = field(default_factory=dict)
    arcs: list[list[Arc]] = field(default_factory=list)

    def __post_init__(self):
        if not self.arcs:
            self.arcs = [[]]  # the start state always exists

    @property
    def num_states(self) -> int:
        return len(self.arcs)

    @property
    def num_arcs(self) -> int:
        return sum(len(a) for a in self.arcs)

    def add_state(self) -> int:
        self.arcs.append([])
        return len(self.arcs) - 1

    def add_arc(self, src: int, ilabel: int, olabel: int, cost: float, dst: int) -> None:
        if cost < 0 or not math.isfinite(cost):
            raise ValueError(f"arc cost must be finite and >= 0, got {cost}")
        self.arcs[src].append(Arc(ilabel, olabel, cost, dst))

    def set_final(self, state: int, cost: float = 0.0) -> None:
        self.finals[state] = cost

    def is_acceptor(self) -> bool:
        return all(arc.ilabel == arc.olabel for state_arcs in self.arcs for arc in state_arcs)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Wfst)
            and self.start == other.start
            and self.finals == other.finals
            and self.arcs == other.arcs
            and self.isyms == other.isyms
            and self.osyms == other.osyms
        )

    def __repr__(self) -> str:
        return (
            f"Wfst({self.num_states} states, {self.num_arcs} arcs, "
            f"{len(self.finals)} final)"
        )


def linear_acceptor(seq: Sequence[str], table: SymbolTable) -> Wfst:
    """Chain acceptor for exactly ``seq``, all costs zero."""
    machine = Wfst(isyms=table, osyms=table)
    state = machine.start
    for label in seq:
        sym = table.id(label)
        nxt = machine.add_state()
        machine.add_arc(state, sym, sym, 0.0, nxt)
        state = nxt
    machine.set_final(state, 0.0)
    return machine


def invert(machine: Wfst) -> Wfst:
    """Swap input and output labels on every arc."""
    out = Wfst(isyms=machine.osyms, osyms=machine.isyms, start=machine.start)
    out.arcs = [
        [Arc(a.olabel, a.ilabel, a.cost, a.dst) for a in state_arcs]
        for state_arcs in machine.arcs
    ]
    out.finals = dict(machine.finals)
    return out


def project_output(machine: Wfst) -> Wfst:
    """Acceptor over the output alphabet: copy each arc's output to its input."""
    out = Wfst(isyms=machine.osyms, osyms=machine.osyms, start=machine.start)
    out.arcs = [
        [Arc(a.olabel, a.olabel, a.cost, a.dst) for a in state_arcs]
        for state_arcs in machine.arcs
    ]
    out.finals = dict(machine.finals)
    return out


def trim(machine: Wfst) -> Wfst:
    """Keep exactly the states and arcs on some start-to-final path.

    A machine with no start-to-final path trims to the explicit empty machine
    (one start state, no finals, no arcs).
    """
    n = machine.num_states
    # Forward reachability from the start.
    fwd = [False] * n
    stack = [machine.start]
    fwd[machine.start] = True
    while stack:
        state = stack.pop()
        for arc in machine.arcs[state]:
            if not fwd[arc.dst]:
                fwd[arc.dst] = True
                stack.append(arc.dst)
    # Backward reachability from the finals.
    rev: list[list[int]] = [[] for _ in range(n)]
    for src, state_arcs in enumerate(machine.arcs):
        for arc in state_arcs:
            rev[arc.dst].append(src)
    bwd = [False] * n
    stack = [s for s in machine.finals if fwd[s]]
    for s in stack:
        bwd[s] = True
    while stack:
        state = stack.pop()
        for src in rev[state]:
            if not bwd[src]:
                bwd[src] = True
                stack.append(src)

    keep = [s for s in range(n) if fwd[s] and bwd[s]]
    if machine.start not in keep:
        return Wfst(isyms=machine.isyms, osyms=machine.osyms)
    remap = {old: new for new, old in enumerate(keep)}
    out = Wfst(isyms=machine.isyms, osyms=machine.osyms, start=remap[machine.start])
    out.arcs = [[] for _ in keep]
    for old in keep:
        out.arcs[remap[old]] = [
            Arc(a.ilabel, a.olabel, a.cost, remap[a.dst])
            for a in machine.arcs[old]
            if a.dst in remap
        ]
    out.finals = {remap[s]: c for s, c in machine.finals.items() if s in remap}
    return out


def compose(first: Wfst, second: Wfst) -> Wfst:
    """Compose two transducers, matching ``first``'s outputs to ``second``'s inputs.

    Epsilon arcs are sequenced with the usual three-mode filter so that every
    pair of compatible paths is realized exactly once: in mode 0 either side
    may move alone or both may take an epsilon-pair move together; mode 1
    commits to advancing only ``first`` and mode 2 only ``second`` until the
    next shared symbol.
    """
    if first.osyms != second.isyms:
        raise AlphabetMismatchError(
            f"cannot compose: output alphabet {first.osyms!r} != "
            f"input alphabet {second.isyms!r}"
        )
    out = Wfst(isyms=first.isyms, osyms=second.osyms)

    # Index the second machine's arcs by input label for matching.
    by_ilabel: list[dict[int, list[Arc]]] = []
    for state_arcs in second.arcs:
        index: dict[int, list[Arc]] = {}
        for arc in state_arcs:
            index.setdefault(arc.ilabel, []).append(arc)
        by_ilabel.append(index)

    start_key = (first.start, second.start, 0)
    state_of = {start_key: out.start}
    stack = [start_key]
    while stack:
        key = stack.pop()
        qa, qb, mode = key
        src = state_of[key]

        def target(ka: int, kb: int, kmode: int) -> int:
            tkey = (ka, kb, kmode)
            state = state_of.get(tkey)
            if state is None:
                state = out.add_state()
                state_of[tkey] = state
                stack.append(tkey)
            return state

        if qa in first.finals and qb in second.finals:
            out.set_final(src, first.finals[qa] + second.finals[qb])

        b_index = by_ilabel[qb]
        b_eps = b_index.get(EPSILON_ID, ())
        for a in first.arcs[qa]:
            if a.olabel != EPSILON_ID:
                for b in b_index.get(a.olabel, ()):
                    out.add_arc(src, a.ilabel, b.olabel, a.cost + b.cost,
                                target(a.dst, b.dst, 0))
            else:
                if mode != 2:
                    out.add_arc(src, a.ilabel, EPSILON_ID, a.cost,
                                target(a.dst, qb, 1))
                if mode == 0:
                    for b in b_eps:
                        out.add_arc(src, a.ilabel, b.olabel, a.cost + b.cost,
                                    target(a.dst, b.dst, 0))
        if mode != 1:
            for b in b_eps:
                out.add_arc(src, EPSILON_ID, b.olabel, b.cost,
                            target(qa, b.dst, 2))
    return out


def _search(machine: Wfst, limit: int) -> Iterator[Path]:
    """Yield start-to-final paths in order of (cost, output labels, input labels).

    ``limit`` bounds how many times any one state may be expanded: 1 gives
    Dijkstra (single best path), k gives the k cheapest paths.  Costs are
    non-negative, so cyclic machines are fine.  Ties are broken by comparing
    the output label sequence, then the input label sequence, which makes the
    result deterministic and independent of arc insertion order.
    """
    olab = machine.osyms.label
    ilab = machine.isyms.label
    counter = 0
    # Heap entries: (cost, out_labels, in_labels, counter, state, arc_chain).
    # state None marks a finished path; arc_chain is a linked tuple of
    # (source, Arc) pairs, cheap to extend and shared between entries.
    heap: list[tuple] = [(0.0, (), (), counter, machine.start, None)]
    pops: dict[int, int] = {}
    while heap:
        cost, outs, ins, _, state, chain = heapq.heappop(heap)
        if state is None:
            arcs = []
            while chain is not None:
                chain, pair = chain
                arcs.append(pair)
            arcs.reverse()
            yield Path(arcs=arcs, total_cost=cost, input_labels=ins, output_labels=outs)
            continue
        seen = pops.get(state, 0)
        if seen >= limit:
            continue
        pops[state] = seen + 1
        final_cost = machine.finals.get(state)
        if final_cost is not None:
            counter += 1
            heapq.heappush(heap, (cost + final_cost, outs, ins, counter, None, chain))
        for arc in machine.arcs[state]:
            new_outs = outs if arc.olabel == EPSILON_ID else outs + (olab(arc.olabel),)
            new_ins = ins if arc.ilabel == EPSILON_ID else ins + (ilab(arc.ilabel),)
            counter += 1
            heapq.heappush(
                heap,
                (cost + arc.cost, new_outs, new_ins, counter, arc.dst, (chain, (state, arc))),
            )


def best_path(machine: Wfst) -> Path | None:
    """Cheapest start-to-final path, or None if the machine accepts nothing."""
    return next(_search(machine, limit=1), None)


def k_best(machine: Wfst, k: int, dedupe_outputs: bool = False) -> list[Path]:
    """The k cheapest paths in non-decreasing cost order (fewer if fewer exist).

    Paths are distinct as arc sequences.  With ``dedupe_outputs`` only the
    cheapest path per output label sequence is kept.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    paths: list[Path] = []
    seen_outputs: set[tuple[str, ...]] = set()
    for path in _search(machine, limit=k):
        if dedupe_outputs:
            if path.output_labels in seen_outputs:
                continue
            seen_outputs.add(path.output_labels)
        paths.append(path)
        if len(paths) == k:
            break
    return paths


def save_fsm(machine: Wfst, path) -> None:
    """Write the textual arc-list format.

    One arc per line, ``src<TAB>dst<TAB>inLabel<TAB>outLabel<TAB>cost``; final
    states as ``state<TAB>cost``; the first listed state is the start.  Costs
    are printed with repr, which round-trips floats exactly.

    A start state with no arcs and no final cost cannot head the listing, but
    such a machine accepts nothing, so it is written as the empty file (the
    explicit empty machine).
    """
    if not machine.arcs[machine.start] and machine.start not in machine.finals:
        open(path, "w", encoding="utf-8").close()
        return
    order = [machine.start] + [s for s in range(machine.num_states) if s != machine.start]
    with open(path, "w", encoding="utf-8") as handle:
        for state in order:
            for arc in machine.arcs[state]:
                handle.write(
                    f"{state}\t{arc.dst}\t{machine.isyms.label(arc.ilabel)}\t"
                    f"{machine.osyms.label(arc.olabel)}\t{arc.cost!r}\n"
                )
            if state in machine.finals:
                handle.write(f"{state}\t{machine.finals[state]!r}\n")


def load_fsm(path, isyms: SymbolTable, osyms: SymbolTable) -> Wfst:
    """Read the textual arc-list format written by :func:`save_fsm`.

    An empty file loads as the explicit empty machine.
    """
    arc_lines: list[tuple[int, int, str, str, float]] = []
    final_lines: list[tuple[int, float]] = []
    first_state: int | None = None
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) == 5:
                src, dst, ilabel, olabel, cost = fields
                arc_lines.append((int(src), int(dst), ilabel, olabel, float(cost)))
                if first_state is None:
                    first_state = int(src)
            elif len(fields) == 2:
                state, cost = fields
                final_lines.append((int(state), float(cost)))
                if first_state is None:
                    first_state = int(state)
            else:
                raise KatabackError(f"{path}:{lineno}: expected 2 or 5 tab-separated fields")
    machine = Wfst(isyms=isyms, osyms=osyms)
    if first_state is None:
        return machine
    max_state = max(
        [s for s, *_ in arc_lines] + [d for _, d, *_ in arc_lines] + [s for s, _ in final_lines]
    )
    while machine.num_states <= max_state:
        machine.add_state()
    machine.start = first_state
    for src, dst, ilabel, olabel, cost in arc_lines:
        machine.add_arc(src, isyms.id(ilabel), osyms.id(olabel), cost, dst)
    for state, cost in final_lines:
        machine.set_final(state, cost)
    return machine
