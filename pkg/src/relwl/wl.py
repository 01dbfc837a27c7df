"""Color refinement over knowledge graphs, for nodes and for node pairs.

Five tests share one engine.  ``rwl1`` refines nodes by the multiset of
(incoming neighbor color, relation) pairs; ``rawl2`` refines ordered pairs
``(u, v)`` by moving the second coordinate along incoming facts; ``rwl2``
additionally moves the first coordinate and keeps the two multisets
separate.  The ``+`` variants run the same rules on the graph augmented
with inverse relations.  Each round assigns fresh dense color ids to
distinct signatures (multisets canonicalized by sorting), so colorings are
meaningful only as partitions and only within one trace.

The node's own contribution to its signature is taken at iteration
``f(t)`` for a history function ``f`` (identity by default); neighbor
colors are always taken at iteration ``t``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

from .errors import PreconditionError, UnknownEntityError, ValidationError
from .graphs import KnowledgeGraph, augment

TEST_IDS = ("rwl1", "rawl2", "rwl2", "rawl2+", "rwl2+")
DEFAULT_MAX_PAIR_NODES = 64


class _UnknownVerdict:
    """Distinguishability could not be decided within the recorded horizon."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "UNKNOWN"


UNKNOWN = _UnknownVerdict()


@dataclass(frozen=True)
class HistoryFunction:
    """Non-decreasing map f with f(t) <= t selecting the self-color iteration.

    ``identity`` reads the previous iteration (standard refinement), ``zero``
    always reads the initial coloring, and ``table`` interpolates an explicit
    finite table covering iterations 0..len-1.
    """

    kind: str
    table: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("identity", "zero", "table"):
            raise ValidationError(f"unknown history kind {self.kind!r}")
        if (self.table is not None) != (self.kind == "table"):
            raise ValidationError("table must be given exactly for kind='table'")
        if self.table is not None:
            prev = 0
            for t, ft in enumerate(self.table):
                if ft > t:
                    raise ValidationError(f"history table has f({t})={ft} > {t}")
                if ft < prev:
                    raise ValidationError("history table must be non-decreasing")
                prev = ft

    def __call__(self, t: int) -> int:
        if self.kind == "identity":
            return t
        if self.kind == "zero":
            return 0
        assert self.table is not None
        if t >= len(self.table):
            raise ValidationError(
                f"history table covers iterations 0..{len(self.table) - 1}, "
                f"asked for {t}"
            )
        return self.table[t]

    @classmethod
    def identity(cls) -> "HistoryFunction":
        return cls("identity")

    @classmethod
    def zero(cls) -> "HistoryFunction":
        return cls("zero")

    @classmethod
    def from_table(cls, values: Sequence[int]) -> "HistoryFunction":
        return cls("table", tuple(values))


@dataclass(frozen=True)
class WLTrace:
    """Recorded colorings of one refinement run, indexed by iteration.

    ``colorings[t]`` assigns a dense color id to every index (nodes for
    arity 1, pairs ``u * n + v`` for arity 2).  ``stabilized_at`` is the
    first iteration whose partition equals its predecessor's, when that
    point was reached within the recorded horizon.
    """

    test_id: str
    arity: int
    n: int
    node_names: tuple[str, ...]
    colorings: tuple[tuple[int, ...], ...]
    stabilized_at: int | None

    @property
    def iterations(self) -> int:
        return len(self.colorings) - 1

    def index_of(self, x) -> int:
        if self.arity == 1:
            if isinstance(x, str):
                return self._node_id(x)
            if not 0 <= x < self.n:
                raise UnknownEntityError(f"node id {x} out of range")
            return int(x)
        u, v = x
        u = self._node_id(u) if isinstance(u, str) else int(u)
        v = self._node_id(v) if isinstance(v, str) else int(v)
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise UnknownEntityError(f"pair ({u},{v}) out of range")
        return u * self.n + v

    def _node_id(self, name: str) -> int:
        try:
            return self.node_names.index(name)
        except ValueError:
            raise UnknownEntityError(f"unknown node {name!r}") from None

    def coloring(self, t: int) -> tuple[int, ...]:
        return self.colorings[t]

    def keys(self) -> list:
        if self.arity == 1:
            return list(range(self.n))
        return [(u, v) for u in range(self.n) for v in range(self.n)]

    def partition(self, t: int) -> frozenset[frozenset]:
        classes: dict[int, list] = {}
        for key, color in zip(self.keys(), self.colorings[t]):
            classes.setdefault(color, []).append(key)
        return frozenset(frozenset(c) for c in classes.values())

    def to_json_dict(self) -> dict:
        partitions = []
        for cols in self.colorings:
            classes: dict[int, list] = {}
            for key, color in zip(self.keys(), cols):
                if self.arity == 1:
                    member = self.node_names[key]
                else:
                    member = [self.node_names[key[0]], self.node_names[key[1]]]
                classes.setdefault(color, []).append(member)
            partitions.append(sorted(classes.values()))
        return {
            "test": self.test_id,
            "iterations": self.iterations,
            "partitions": partitions,
            "stabilized_at": self.stabilized_at,
        }


def _as_assignment(coloring) -> dict:
    if isinstance(coloring, Mapping):
        return dict(coloring)
    if isinstance(coloring, Sequence) and not isinstance(coloring, (str, bytes)):
        return dict(enumerate(coloring))
    raise ValidationError(f"cannot interpret {type(coloring).__name__} as a coloring")


def refines(finer, coarser) -> bool:
    """True iff equal colors in ``finer`` imply equal colors in ``coarser``.

    Both arguments are mappings (or sequences, read as index -> color) over
    the same index set; values only need to be hashable.
    """
    a, b = _as_assignment(finer), _as_assignment(coarser)
    if a.keys() != b.keys():
        raise ValidationError("colorings are over different index sets")
    image: dict[Hashable, Hashable] = {}
    for key, color in a.items():
        target = b[key]
        if image.setdefault(color, target) != target:
            return False
    return True


def equivalent(a, b) -> bool:
    """Mutual refinement: the two colorings induce the same partition."""
    return refines(a, b) and refines(b, a)


def _dense_renumber(signatures: list) -> tuple[int, ...]:
    # Sorted-signature order keeps ids invariant under node permutations.
    order = {sig: i for i, sig in enumerate(sorted(set(signatures)))}
    return tuple(order[sig] for sig in signatures)


def run_test(
    test_id: str,
    G: KnowledgeGraph,
    history: HistoryFunction | None = None,
    horizon: int | str = "stabilize",
    *,
    allow_non_tnd: bool = False,
    max_pair_nodes: int = DEFAULT_MAX_PAIR_NODES,
) -> WLTrace:
    """Run one refinement test and record every iteration's coloring.

    ``horizon`` is either a fixed iteration count or ``"stabilize"``, which
    stops at the first iteration whose partition matches its predecessor's
    (guaranteed within |V| iterations for arity 1 and |V|^2 for arity 2).
    Arity-2 tests require a pair coloring satisfying target node
    distinguishability unless ``allow_non_tnd`` waives the check; they
    materialize all pairs, so graphs above ``max_pair_nodes`` are rejected.
    """
    if test_id not in TEST_IDS:
        raise ValidationError(f"unknown test {test_id!r}; expected one of {TEST_IDS}")
    history = history or HistoryFunction.identity()
    arity = 1 if test_id == "rwl1" else 2

    H = augment(G) if test_id.endswith("+") else G
    n = G.n
    if arity == 2:
        if G.pair_coloring is None:
            raise PreconditionError(f"{test_id} needs a pair coloring on the graph")
        if not G.pair_coloring.tnd_flag and not allow_non_tnd:
            raise PreconditionError(
                "pair coloring lacks target node distinguishability; "
                "pass allow_non_tnd=True to waive"
            )
        if n > max_pair_nodes:
            raise ValidationError(
                f"arity-2 tests materialize all pairs; |V|={n} exceeds the "
                f"cap of {max_pair_nodes}"
            )
        initial = G.pair_coloring.colors
    else:
        initial = G.node_colors

    incoming = [H.incoming(v) for v in range(n)]
    base = test_id.rstrip("+")

    def next_colors(cols: tuple[int, ...], own: tuple[int, ...]) -> tuple[int, ...]:
        sigs: list = []
        if base == "rwl1":
            for v in range(n):
                ms = sorted((cols[w], rel) for rel, w in incoming[v])
                sigs.append((own[v], tuple(ms)))
        elif base == "rawl2":
            for u in range(n):
                row = u * n
                for v in range(n):
                    ms = sorted((cols[row + w], rel) for rel, w in incoming[v])
                    sigs.append((own[row + v], tuple(ms)))
        else:  # rwl2: both coordinates move, multisets kept separate
            for u in range(n):
                row = u * n
                for v in range(n):
                    first = sorted((cols[w * n + v], rel) for rel, w in incoming[u])
                    second = sorted((cols[row + w], rel) for rel, w in incoming[v])
                    sigs.append((own[row + v], tuple(first), tuple(second)))
        return _dense_renumber(sigs)

    colorings = [_dense_renumber(list(initial))]
    stabilized_at: int | None = None
    if horizon == "stabilize":
        limit = len(initial) + 1
        for t in range(limit):
            nxt = next_colors(colorings[t], colorings[history(t)])
            colorings.append(nxt)
            if equivalent(nxt, colorings[t]):
                stabilized_at = t + 1
                break
        else:  # pragma: no cover - impossible by monotone refinement
            raise AssertionError("refinement failed to stabilize")
    else:
        if not isinstance(horizon, int) or horizon < 0:
            raise ValidationError("horizon must be 'stabilize' or an iteration count")
        for t in range(horizon):
            nxt = next_colors(colorings[t], colorings[history(t)])
            colorings.append(nxt)
            if stabilized_at is None and equivalent(nxt, colorings[t]):
                stabilized_at = t + 1
    return WLTrace(
        test_id, arity, n, G.node_names, tuple(colorings), stabilized_at
    )


def distinguishes(trace: WLTrace, x, y):
    """Earliest recorded iteration separating ``x`` from ``y``.

    Returns the iteration index, or ``None`` when the trace proves the two
    are never separated (requires a stabilized trace), or the ``UNKNOWN``
    sentinel when the horizon was too short to decide.
    """
    i, j = trace.index_of(x), trace.index_of(y)
    if i == j:
        return None
    for t, cols in enumerate(trace.colorings):
        if cols[i] != cols[j]:
            return t
    return None if trace.stabilized_at is not None else UNKNOWN
