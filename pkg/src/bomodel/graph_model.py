"""Exact sampling of preferential attachment graphs with initial attractiveness.

A stage-one graph on ``n`` nodes is grown one node at a time: node ``m``
attaches its single edge to an earlier node ``s`` with weight
``deg(s) - 1 + a`` or to itself (a loop) with weight ``a``.  The final graph
with ``t`` nodes and ``k*t`` edges is obtained by merging consecutive blocks
of ``k`` stage-one nodes.

The attachment weights are split into a uniform part (``a`` for every node,
total ``a*m``) and an excess part (``deg(s) - 1``, total ``m - 1``).  The
excess part is realised by :class:`ExcessRoster`, a list in which every node
appears ``deg - 1`` times, so a single uniform variate picks the target in
O(1) with no rejection step and no restriction to integer ``a``.

Nodes are labelled ``1..t``; ``degrees[s - 1]`` is the degree of node ``s``.
"""

import hashlib
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .rng import check_seed, stream

# uniforms drawn per block while growing a graph; bounds peak memory
BLOCK = 1 << 20


class ModelError(ValueError):
    """Invalid model parameters or graph input."""


@dataclass(frozen=True)
class ModelParams:
    a: float
    k: int = 1
    seed: int = 0

    def __post_init__(self):
        a = self.a
        if not (isinstance(a, (int, float)) or hasattr(a, "numerator")):
            raise ModelError(f"a must be a real number, got {a!r}")
        if not math.isfinite(float(a)) or float(a) <= 0:
            raise ModelError(f"a must be finite and > 0, got {a!r}")
        if int(self.k) != self.k or self.k < 1:
            raise ModelError(f"k must be a positive integer, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))
        try:
            object.__setattr__(self, "seed", check_seed(self.seed))
        except ValueError as exc:
            raise ModelError(str(exc)) from None


def _frozen(arr):
    arr = np.ascontiguousarray(arr, dtype=np.int64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MultiGraph:
    """Immutable multigraph with edges in creation order.

    ``heads[j]`` is the node that created edge ``j`` and ``targets[j]`` the
    node it attached to; ``heads[j] == targets[j]`` marks a loop.
    """

    node_count: int
    heads: np.ndarray
    targets: np.ndarray
    degrees: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "heads", _frozen(self.heads))
        object.__setattr__(self, "targets", _frozen(self.targets))
        object.__setattr__(self, "degrees", _frozen(self.degrees))

    @property
    def edge_count(self):
        return len(self.heads)

    @property
    def edges(self):
        return np.column_stack([self.heads, self.targets])

    def degree(self, s):
        return int(self.degrees[s - 1])

    def __eq__(self, other):
        if not isinstance(other, MultiGraph):
            return NotImplemented
        return (self.node_count == other.node_count
                and np.array_equal(self.heads, other.heads)
                and np.array_equal(self.targets, other.targets)
                and np.array_equal(self.degrees, other.degrees))

    __hash__ = None


class ExcessRoster:
    """Growable node list where node ``s`` appears ``deg(s) - 1`` times."""

    def __init__(self, capacity=16):
        self._entries = np.zeros(max(int(capacity), 1), dtype=np.int64)
        self._size = 0

    def __len__(self):
        return self._size

    @property
    def entries(self):
        return self._entries[:self._size]

    def append(self, node):
        if self._size == len(self._entries):
            grown = np.zeros(2 * len(self._entries), dtype=np.int64)
            grown[:self._size] = self._entries[:self._size]
            self._entries = grown
        self._entries[self._size] = node
        self._size += 1

    def __getitem__(self, j):
        if not 0 <= j < self._size:
            raise IndexError(j)
        return int(self._entries[j])

    def audit(self, degrees):
        """True iff every node ``s`` appears exactly ``degrees[s-1] - 1`` times."""
        degrees = np.asarray(degrees)
        counts = np.bincount(self.entries, minlength=len(degrees) + 1)
        if len(counts) > len(degrees) + 1 or counts[0] != 0:
            return False
        return bool(np.array_equal(counts[1:], degrees - 1))


@dataclass
class Stage1State:
    """Mutable stage-one graph under construction."""

    targets: list = field(default_factory=list)
    degrees: list = field(default_factory=list)
    roster: ExcessRoster = field(default_factory=ExcessRoster)

    @property
    def node_count(self):
        return len(self.targets)

    def graph(self):
        n = self.node_count
        return MultiGraph(n, np.arange(1, n + 1), np.array(self.targets, dtype=np.int64),
                          np.array(self.degrees, dtype=np.int64))


def new_seed_graph(params=None):
    """The only graph on one node: a single loop, degree 2.  ``params`` is unused."""
    return MultiGraph(1, [1], [1], [2])


def new_seed_state(params=None):
    state = Stage1State(targets=[1], degrees=[2])
    state.roster.append(1)
    return state


def attachment_probs(degrees, a):
    """Exact attachment law for the node added to a stage-one graph.

    ``degrees`` holds the degrees of nodes ``1..t-1``; the result has length
    ``t``, the last entry being the loop probability of the new node ``t``.
    """
    degrees = np.asarray(degrees, dtype=float)
    t = len(degrees) + 1
    total = (a + 1) * t - 1
    return np.append(degrees - 1 + a, a) / total


def _pick(u, m, a, roster):
    # u in [0, 1); node m is being added to m - 1 existing nodes
    total = (a + 1.0) * m - 1.0
    x = u * total
    uniform_mass = a * m
    if x < uniform_mass:
        s = int(x / a) + 1
        return m if s > m else s
    j = int(x - uniform_mass)
    if j > m - 2:
        j = m - 2
    return roster[j]


_pick_jit = numba.njit(cache=True, nogil=True)(_pick)


def stage1_step(state, params, rng):
    """Add the next node to ``state`` in place, consuming one uniform from ``rng``.

    Returns ``state`` for chaining.
    """
    m = state.node_count + 1
    if (params.a + 1) * m - 1 >= 2.0 ** 53:
        raise OverflowError(f"attachment mass exceeds double precision at node {m}")
    s = _pick(rng.random(), m, params.a, state.roster.entries)
    state.targets.append(s)
    if s == m:
        state.degrees.append(2)
        state.roster.append(m)
    else:
        state.degrees.append(1)
        state.degrees[s - 1] += 1
        state.roster.append(s)
    return state


@numba.njit(cache=True, nogil=True)
def grow(uniforms, first, a, targets, degrees, roster):
    """Add nodes ``first .. first + len(uniforms) - 1`` (1-based labels).

    ``targets``, ``degrees`` and ``roster`` are indexed by node label minus
    one and must already hold nodes ``1 .. first - 1``; the roster holds
    ``first - 1`` entries before the call.
    """
    for j in range(len(uniforms)):
        m = first + j
        s = _pick_jit(uniforms[j], m, a, roster)
        targets[m - 1] = s
        if s == m:
            degrees[m - 1] = 2
            roster[m - 1] = m
        else:
            degrees[m - 1] = 1
            degrees[s - 1] += 1
            roster[m - 1] = s


def generate_stage1(params, n, rng=None):
    """Sample from H_{a,1}^{(n)}.  O(n) time and memory.

    Draws come from ``rng`` if given, otherwise from the stream of
    ``params.seed``.  One uniform is consumed per added node, so the result
    equals ``n - 1`` calls of :func:`stage1_step` on the same generator.
    """
    n = int(n)
    if n < 1:
        raise ModelError(f"n must be >= 1, got {n}")
    if (params.a + 1) * n - 1 >= 2.0 ** 53:
        raise OverflowError("attachment mass exceeds double precision")
    if rng is None:
        rng = stream(params.seed)
    a = float(params.a)
    targets = np.empty(n, dtype=np.int64)
    degrees = np.empty(n, dtype=np.int64)
    roster = np.empty(n, dtype=np.int64)
    targets[0], degrees[0], roster[0] = 1, 2, 1
    m = 2
    while m <= n:
        size = min(BLOCK, n - m + 1)
        grow(rng.random(size), m, a, targets, degrees, roster)
        m += size
    del roster
    return MultiGraph(n, np.arange(1, n + 1, dtype=np.int64), targets, degrees)


def collapse(graph, k):
    """Merge nodes ``(j-1)k+1 .. jk`` into node ``j``, keeping every edge."""
    k = int(k)
    if k < 1:
        raise ModelError(f"k must be >= 1, got {k}")
    if graph.node_count % k:
        raise ModelError(f"node count {graph.node_count} is not divisible by k={k}")
    if k == 1:
        return graph
    t = graph.node_count // k
    heads = (graph.heads - 1) // k + 1
    targets = (graph.targets - 1) // k + 1
    degrees = graph.degrees.reshape(t, k).sum(axis=1)
    return MultiGraph(t, heads, targets, degrees)


def generate(params, t, rng=None):
    """Sample from H_{a,k}^{(t)} by growing k*t stage-one nodes and collapsing."""
    t = int(t)
    if t < 1:
        raise ModelError(f"t must be >= 1, got {t}")
    return collapse(generate_stage1(params, params.k * t, rng), params.k)


@numba.njit(cache=True, nogil=True)
def _grow_rows(uniforms, a, k, out):
    n = uniforms.shape[1] + 1
    targets = np.empty(n, dtype=np.int64)
    degrees = np.empty(n, dtype=np.int64)
    roster = np.empty(n, dtype=np.int64)
    for row in range(uniforms.shape[0]):
        targets[0], degrees[0], roster[0] = 1, 2, 1
        grow(uniforms[row], 2, a, targets, degrees, roster)
        for m in range(n):
            out[row, m] = (targets[m] - 1) // k + 1


def sample_targets(params, t, runs, rng=None):
    """Collapsed targets of ``runs`` independent draws of H_{a,k}^{(t)}, shape ``(runs, k t)``.

    Row ``i`` equals ``generate(params, t, rng).targets`` for the ``i``-th
    successive call on the same generator.  Meant for small graphs.
    """
    t, runs = int(t), int(runs)
    if t < 1 or runs < 0:
        raise ModelError("need t >= 1 and runs >= 0")
    if rng is None:
        rng = stream(params.seed)
    n = params.k * t
    out = np.empty((runs, n), dtype=np.int64)
    _grow_rows(rng.random((runs, n - 1)), float(params.a), params.k, out)
    return out


def degree_histogram(graph, d_max=None):
    """Array ``h`` with ``h[d]`` = number of nodes of degree ``d``."""
    d_max = int(graph.degrees.max()) if d_max is None else int(d_max)
    h = np.bincount(graph.degrees, minlength=d_max + 1)
    return h[:d_max + 1]


def degree_counts(graph):
    """R(d, t) as a dict over the degrees that occur."""
    h = np.bincount(graph.degrees)
    return {int(d): int(c) for d, c in enumerate(h) if c}


def count_X(graph, d1, d2):
    """Non-loop edges between degree ``d1`` and degree ``d2`` nodes, both orders."""
    keep = graph.heads != graph.targets
    du = graph.degrees[graph.heads[keep] - 1]
    dv = graph.degrees[graph.targets[keep] - 1]
    return int(np.count_nonzero((du == d1) & (dv == d2)) + np.count_nonzero((du == d2) & (dv == d1)))


def check_conservation(graph, k=None):
    """Raise AssertionError unless degree and edge totals are consistent."""
    deg_sum = int(graph.degrees.sum())
    if deg_sum != 2 * graph.edge_count:
        raise AssertionError(f"degree sum {deg_sum} != 2 * {graph.edge_count}")
    recount = np.bincount(graph.heads, minlength=graph.node_count + 1)[1:] \
        + np.bincount(graph.targets, minlength=graph.node_count + 1)[1:]
    if not np.array_equal(recount, graph.degrees):
        raise AssertionError("degrees do not match the edge list")
    if k is not None:
        if graph.edge_count != k * graph.node_count:
            raise AssertionError("edge count != k * t")
        if graph.degrees.min() < k:
            raise AssertionError("node of degree below k")


# ---------------------------------------------------------------- file I/O

@numba.njit(cache=True)
def _format_pairs(us, vs):
    n = len(us)
    out = np.empty(n * 42, dtype=np.uint8)
    digits = np.empty(20, dtype=np.uint8)
    pos = 0
    for j in range(n):
        for col in range(2):
            x = us[j] if col == 0 else vs[j]
            nd = 0
            while True:
                digits[nd] = 48 + x % 10
                x //= 10
                nd += 1
                if x == 0:
                    break
            for q in range(nd - 1, -1, -1):
                out[pos] = digits[q]
                pos += 1
            out[pos] = 32 if col == 0 else 10
            pos += 1
    return out[:pos]


def format_header(params, t):
    return f"# bograph a={params.a!r} k={params.k} t={t} seed={params.seed}\n"


def write_edge_list(graph, params, path):
    """Write the header line and one ``u v`` line per edge in creation order."""
    with open(path, "wb") as fh:
        fh.write(format_header(params, graph.node_count).encode("ascii"))
        for lo in range(0, graph.edge_count, BLOCK):
            hi = min(lo + BLOCK, graph.edge_count)
            fh.write(_format_pairs(graph.heads[lo:hi], graph.targets[lo:hi]).tobytes())


def parse_header(line):
    parts = line.split()
    if len(parts) != 6 or parts[0] != "#" or parts[1] != "bograph":
        raise ModelError(f"not a bograph header: {line!r}")
    fields = dict(p.split("=", 1) for p in parts[2:])
    try:
        params = ModelParams(a=float(fields["a"]), k=int(fields["k"]), seed=int(fields["seed"]))
        return params, int(fields["t"])
    except (KeyError, ValueError) as exc:
        raise ModelError(f"bad header field in {line!r}: {exc}") from None


def read_edge_list(path):
    """Inverse of :func:`write_edge_list`; returns ``(params, graph)``."""
    with open(path) as fh:
        params, t = parse_header(fh.readline())
        data = np.loadtxt(fh, dtype=np.int64, ndmin=2)
    if data.size == 0:
        data = np.zeros((0, 2), dtype=np.int64)
    if data.shape[1] != 2:
        raise ModelError("edge lines must hold two node labels")
    heads, targets = data[:, 0], data[:, 1]
    if len(heads) and (min(heads.min(), targets.min()) < 1 or max(heads.max(), targets.max()) > t):
        raise ModelError("node label out of range")
    degrees = np.bincount(heads, minlength=t + 1)[1:] + np.bincount(targets, minlength=t + 1)[1:]
    return params, MultiGraph(t, heads, targets, degrees)


def write_degree_csv(graph, path):
    with open(path, "w") as fh:
        fh.write("d,count\n")
        for d, c in degree_counts(graph).items():
            fh.write(f"{d},{c}\n")


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


__all__ = [
    "ModelError", "ModelParams", "MultiGraph", "ExcessRoster", "Stage1State",
    "new_seed_graph", "new_seed_state", "attachment_probs", "stage1_step",
    "generate_stage1", "collapse", "generate", "degree_histogram", "degree_counts",
    "count_X", "check_conservation", "write_edge_list", "read_edge_list",
    "write_degree_csv", "parse_header", "format_header", "file_digest", "grow", "sample_targets",
]
