"""Exact expectations by dynamic programming, and a brute-force enumerator.

The graph H_{a,k}^{(t+1)} is built from H_{a,k}^{(t)} by attaching a new
node ``t+1`` through ``k`` single-edge substeps.  Before substep ``i`` an old
node of degree ``d`` is chosen with probability ``(d + k(a-1)) / den`` and the
new node (current degree ``x``) with probability ``(x + (i-1)(a-1) + a) / den``,
where ``den = (a+1)(kt+i) - 1``.

Tracked quantities, all over the old nodes ``1..t`` only:

``r[d]``          expected number of nodes of degree d
``r2[d1, d2]``    expected number of ordered pairs s1 != s2 with those degrees
``f[d1, d2]``     expected pair-weighted edge multiplicity (E X at i = 1)
``r2p[d1, x]``    expected number of old nodes of degree d1 while the new node has degree x
``g[d1, x]``      like ``r2p`` but weighted by the edges joining the two nodes

Every update only reads cells with smaller or equal indices, so clipping the
degree axis at ``d_cap`` is exact for all retained cells.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .graph_model import ModelParams

DEFAULT_MEM_CAP_MB = 1024


class ResourceCapError(MemoryError):
    """A table or enumeration would exceed its configured budget."""


def _check_mem(nbytes, mem_cap_mb, what):
    if mem_cap_mb is not None and nbytes > mem_cap_mb * 2 ** 20:
        raise ResourceCapError(
            f"{what} needs {nbytes / 2 ** 20:.0f} MiB, above the cap of {mem_cap_mb} MiB")


# ------------------------------------------------------------------ new node

def newnode_degree_dist(params, t):
    """Distribution of the final degree of node ``t+1`` (indexed by degree, length 2k+1)."""
    if t < 1:
        raise ValueError("t must be >= 1")
    a, k = float(params.a), params.k
    p = np.zeros(k + 1)  # p[l] = probability of l loops so far
    p[0] = 1.0
    for i in range(1, k + 1):
        den = (a + 1) * (k * t + i) - 1
        loops = np.arange(k + 1)
        q = ((i - 1) + loops + (i - 1) * (a - 1) + a) / den
        new = p * (1 - q)
        new[1:] += p[:-1] * q[:-1]
        p = new
    out = np.zeros(2 * k + 1)
    out[k:] = p
    return out


def no_loop_probability(params, t):
    a, k = float(params.a), params.k
    return math.prod(1 - i * a / ((a + 1) * (k * t + i) - 1) for i in range(1, k + 1))


# ------------------------------------------------------------ recurrences

class RecurrenceEngine:
    """Expectation tables advanced one substep at a time.

    Starts at ``t = 1, i = 1``.  Call :meth:`substep` ``k`` times and then
    :meth:`next_node` to move to ``t + 1``; :meth:`advance_to` does both.
    """

    def __init__(self, params, d_cap, pairs=False, edges=False, mem_cap_mb=DEFAULT_MEM_CAP_MB):
        k = params.k
        if d_cap < 2 * k:
            raise ValueError(f"d_cap must be >= 2k = {2 * k}")
        self.params = params
        self.a = float(params.a)
        self.k = k
        self.d_cap = int(d_cap)
        self.pairs = pairs or edges
        self.edges = edges
        n = self.d_cap + 1
        grids = (1 if pairs else 0) + (1 if edges else 0)
        _check_mem(8 * n * n * 3 * grids + 8 * n * (2 * k + 1) * 4, mem_cap_mb, "recurrence tables")
        self.t = 1
        self.i = 1
        d = np.arange(n, dtype=float)
        self._v = d + k * (self.a - 1)
        self.r = np.zeros(n)
        self.r[2 * k] = 1.0
        self.r2 = np.zeros((n, n)) if pairs else None
        self.f = np.zeros((n, n)) if edges else None
        self._reset_new_node()

    def _reset_new_node(self):
        k = self.k
        if self.pairs:
            self.r2p = np.zeros((self.d_cap + 1, 2 * k + 1))
            self.r2p[:, 0] = self.r
        else:
            self.r2p = None
        self.g = np.zeros((self.d_cap + 1, 2 * k + 1)) if self.edges else None

    def den(self):
        return (self.a + 1) * (self.k * self.t + self.i) - 1

    def _pair_step(self, x, den):
        v = self._v
        new = x * (1 - (v[:, None] + v[None, :]) / den)
        new[1:, :] += x[:-1, :] * (v[:-1, None] / den)
        new[:, 1:] += x[:, :-1] * (v[None, :-1] / den)
        return new

    def _newnode_step(self, x, den, extra=None):
        # x[d1, deg] with deg the new node's degree
        v = self._v
        i, a = self.i, self.a
        w = np.arange(2 * self.k + 1) + (i - 1) * (a - 1) + a  # loop weight at new-node degree
        new = np.zeros_like(x)
        src = x if extra is None else x + extra
        new[1:, 1:] += src[:-1, :-1] * (v[:-1, None] / den)
        new[:, 2:] += x[:, :-2] * (w[None, :-2] / den)
        new[:, 1:] += x[:, :-1] * (1 - (v[:, None] + w[None, :-1]) / den)
        return new

    def substep(self):
        if self.i > self.k:
            raise RuntimeError("all k substeps done; call next_node()")
        den = self.den()
        v = self._v
        r = self.r
        new_r = r * (1 - v / den)
        new_r[1:] += r[:-1] * (v[:-1] / den)
        if self.pairs:
            self.r2 = self._pair_step(self.r2, den)
            if self.edges:
                self.f = self._pair_step(self.f, den)
                self.g = self._newnode_step(self.g, den, extra=self.r2p)
            self.r2p = self._newnode_step(self.r2p, den)
        self.r = new_r
        self.i += 1

    def next_node(self):
        if self.i != self.k + 1:
            raise RuntimeError("finish the k substeps first")
        k = self.k
        self.r = self.r.copy()
        self.r[:2 * k + 1] += newnode_degree_dist(self.params, self.t)
        if self.pairs:
            P = np.zeros_like(self.r2)
            P[:, :2 * k + 1] = self.r2p
            self.r2 = self.r2 + P + P.T
        if self.edges:
            G = np.zeros_like(self.f)
            G[:, :2 * k + 1] = self.g
            self.f = self.f + G + G.T
        self.t += 1
        self.i = 1
        self._reset_new_node()

    def advance_to(self, t, i=1):
        if (t, i) < (self.t, self.i):
            raise ValueError("cannot go backwards")
        while self.t < t:
            while self.i <= self.k:
                self.substep()
            self.next_node()
        while self.i < i:
            self.substep()
        return self


def _resolve_cap(params, t_max, d_cap):
    full = params.k * t_max + 3 * params.k
    return full if d_cap is None else int(d_cap)


@dataclass(frozen=True, eq=False)
class ExpectationTable:
    """Exact expectations for H_{a,k}^{(t)}.

    ``r[t-1, d]`` = r(d, t) for every stored ``t`` (only the last row when built
    without history).  ``r2`` and ``f`` hold r2(d1, d2, t_max) and
    E X(d1, d2, t_max) when requested.  Degree axes run ``0..d_cap``.
    """

    params: ModelParams
    t_max: int
    d_cap: int
    r: np.ndarray
    r2: Optional[np.ndarray] = None
    f: Optional[np.ndarray] = None

    @property
    def r_final(self):
        return self.r[-1]

    def r_at(self, t):
        if self.r.shape[0] == self.t_max:
            return self.r[t - 1]
        if t == self.t_max:
            return self.r[-1]
        raise KeyError(f"table holds only t={self.t_max}")

    def covariance(self):
        """cov(R(d1), R(d2)) = r2 + [d1 = d2] r - r r at t_max."""
        if self.r2 is None:
            raise ValueError("table built without r2")
        r = self.r_final
        return self.r2 + np.diag(r) - np.outer(r, r)


def compute_r(params, t_max, history=True, d_cap=None, mem_cap_mb=DEFAULT_MEM_CAP_MB):
    """r(d, t) for 1 <= t <= t_max.  O(k^2 t_max^2) time."""
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    k = params.k
    d_cap = params.k * t_max + 2 * k if d_cap is None else int(d_cap)
    d_cap = max(d_cap, 2 * k)
    rows = t_max if history else 1
    _check_mem(8 * rows * (d_cap + 1), mem_cap_mb, "r table")
    table = np.zeros((rows, d_cap + 1))
    eng = RecurrenceEngine(params, d_cap, mem_cap_mb=None)
    if history:
        table[0] = eng.r
    for t in range(2, t_max + 1):
        eng.advance_to(t)
        if history:
            table[t - 1] = eng.r
    if not history:
        table[0] = eng.r
    return ExpectationTable(params, t_max, d_cap, table)


def substep_rows(params, t, d_cap=None):
    """Rows r(d, t, i) for i = 1..k+1, shape (k+1, d_cap+1)."""
    d_cap = _resolve_cap(params, t, d_cap)
    eng = RecurrenceEngine(params, d_cap).advance_to(t)
    rows = [eng.r.copy()]
    for _ in range(params.k):
        eng.substep()
        rows.append(eng.r.copy())
    return np.array(rows)


def compute_r2prime(params, t, i, d_cap=None, mem_cap_mb=DEFAULT_MEM_CAP_MB):
    """r2'(d1, x, t, i) as an array of shape (d_cap+1, 2k+1)."""
    if not 1 <= i <= params.k + 1:
        raise ValueError("i must be in 1..k+1")
    d_cap = _resolve_cap(params, t, d_cap)
    eng = RecurrenceEngine(params, d_cap, pairs=True, mem_cap_mb=mem_cap_mb)
    return eng.advance_to(t, i).r2p.copy()


def compute_r2(params, t_max, d_cap=None, mem_cap_mb=DEFAULT_MEM_CAP_MB):
    """r2(d1, d2, t_max) and r(d, t_max)."""
    d_cap = _resolve_cap(params, t_max, d_cap)
    eng = RecurrenceEngine(params, d_cap, pairs=True, mem_cap_mb=mem_cap_mb).advance_to(t_max)
    return ExpectationTable(params, t_max, d_cap, eng.r[None, :].copy(), r2=eng.r2.copy())


def compute_f(params, t_max, d_cap=None, mem_cap_mb=DEFAULT_MEM_CAP_MB):
    """E X(d1, d2, t_max) (= f(d1, d2, t_max, 1)), together with r and r2."""
    d_cap = _resolve_cap(params, t_max, d_cap)
    eng = RecurrenceEngine(params, d_cap, pairs=True, edges=True, mem_cap_mb=mem_cap_mb)
    eng.advance_to(t_max)
    return ExpectationTable(params, t_max, d_cap, eng.r[None, :].copy(),
                            r2=eng.r2.copy(), f=eng.f.copy())


def f_trajectory(params, t_values, d_cap):
    """E X(d1, d2, t) on the clipped grid for each t in ``t_values`` (ascending)."""
    eng = RecurrenceEngine(params, d_cap, pairs=True, edges=True)
    out = []
    for t in t_values:
        eng.advance_to(t)
        out.append(eng.f.copy())
    return np.array(out)


# ------------------------------------------------------------ enumeration

DEFAULT_MAX_SEQUENCES = 10 ** 6


def _num(a, exact):
    return Fraction(a) if exact else float(a)


def enumerate_stage1(a, m, exact=False, max_sequences=DEFAULT_MAX_SEQUENCES):
    """All stage-one target sequences on ``m`` nodes with their probabilities.

    Returns ``{targets: probability}``; ``targets[j]`` is the node chosen by
    node ``j + 1``.  There are ``m!`` sequences.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if math.factorial(m) > max_sequences:
        raise ResourceCapError(f"{m}! outcome sequences exceed the cap of {max_sequences}")
    a = _num(a, exact)
    one = Fraction(1) if exact else 1.0
    out = {}
    degrees = [2]
    targets = [1]

    def visit(prob):
        n = len(degrees)
        if n == m:
            out[tuple(targets)] = prob
            return
        node = n + 1
        total = (a + 1) * node - 1
        for s in range(1, node + 1):
            w = a if s == node else degrees[s - 1] - 1 + a
            targets.append(s)
            if s == node:
                degrees.append(2)
            else:
                degrees.append(1)
                degrees[s - 1] += 1
            visit(prob * w / total)
            degrees.pop()
            targets.pop()
            if s != node:
                degrees[s - 1] -= 1

    visit(one)
    return out


def collapse_targets(targets, k):
    return tuple((s - 1) // k + 1 for s in targets)


def enumerate_exact(params, n, exact=False, max_sequences=DEFAULT_MAX_SEQUENCES):
    """Exact law of H_{a,k}^{(n)}: ``{collapsed targets: probability}``.

    Edge ``j`` of an outcome runs from node ``j // k + 1`` to ``key[j]``.
    """
    out = {}
    for seq, p in enumerate_stage1(params.a, params.k * n, exact, max_sequences).items():
        key = collapse_targets(seq, params.k)
        out[key] = out.get(key, 0) + p
    return out


def kstep_law(old_degrees, new_degree, i, params, exact=False):
    """Attachment law of substep ``i`` in the k-edge formulation.

    ``old_degrees`` are the current degrees of nodes ``1..t``; the result has
    length ``t + 1``, the last entry being the loop probability.
    """
    a, k = _num(params.a, exact), params.k
    t = len(old_degrees)
    den = (a + 1) * (k * t + i) - 1
    probs = [(d + k * (a - 1)) / den for d in old_degrees]
    probs.append((new_degree + (i - 1) * (a - 1) + a) / den)
    return probs


def enumerate_kstep(params, n, exact=False, max_states=DEFAULT_MAX_SEQUENCES):
    """Exact law of H_{a,k}^{(n)} using :func:`kstep_law` directly on merged nodes.

    Works breadth first and merges equal partial outcomes, which have the same
    future law, so the cost is the number of distinct outcomes (at most
    ``(n!)^k``) rather than ``(k n)!`` stage-one sequences.
    """
    k = params.k
    if n < 1:
        raise ValueError("n must be >= 1")
    states = {(1,) * k: Fraction(1) if exact else 1.0}
    for t in range(1, n):
        for i in range(1, k + 1):
            grown = {}
            for key, prob in states.items():
                degrees = [0] * (t + 1)
                for j, s in enumerate(key):
                    degrees[j // k] += 1
                    degrees[s - 1] += 1
                law = kstep_law(degrees[:t], degrees[t], i, params, exact)
                for s, p in enumerate(law, start=1):
                    nxt = key + (s,)
                    grown[nxt] = grown.get(nxt, 0) + prob * p
            states = grown
            if len(states) > max_states:
                raise ResourceCapError(f"more than {max_states} distinct outcomes")
    return states


def _edge_multiplicity(heads, targets, nodes):
    N = np.zeros((nodes + 1, nodes + 1), dtype=np.int64)
    for u, v in zip(heads, targets):
        if u != v:
            N[u, v] += 1
            N[v, u] += 1
    return N


@dataclass
class SubstepMarginals:
    r: np.ndarray
    r2: np.ndarray
    f: np.ndarray
    r2p: np.ndarray
    g: np.ndarray
    newnode: np.ndarray


def enumerate_substep(params, t, i, d_cap, exact=False, max_sequences=DEFAULT_MAX_SEQUENCES):
    """Every tracked quantity at (t, i), by summing over all stage-one outcomes.

    The stage-one graph has ``k t + i - 1`` nodes; node ``t + 1`` is the
    (possibly empty) group of the last ``i - 1`` of them.  ``newnode`` is the
    degree distribution of node ``t + 1``.
    """
    k = params.k
    m = k * t + i - 1
    n = d_cap + 1
    zero = Fraction(0) if exact else 0.0
    shape2 = (n, n)
    r = np.full(n, zero, dtype=object if exact else float)
    r2 = np.full(shape2, zero, dtype=object if exact else float)
    f = np.full(shape2, zero, dtype=object if exact else float)
    r2p = np.full((n, 2 * k + 1), zero, dtype=object if exact else float)
    g = np.full((n, 2 * k + 1), zero, dtype=object if exact else float)
    newnode = np.full(2 * k + 1, zero, dtype=object if exact else float)
    nodes = t + 1
    for seq, p in enumerate_stage1(params.a, m, exact, max_sequences).items():
        heads = [(u - 1) // k + 1 for u in range(1, m + 1)]
        tails = collapse_targets(seq, k)
        deg = np.zeros(nodes + 1, dtype=np.int64)
        for u, v in zip(heads, tails):
            deg[u] += 1
            deg[v] += 1
        N = _edge_multiplicity(heads, tails, nodes)
        x = deg[t + 1]
        newnode[x] += p
        for s1 in range(1, t + 1):
            d1 = deg[s1]
            if d1 > d_cap:
                continue
            r[d1] += p
            r2p[d1, x] += p
            g[d1, x] += p * int(N[t + 1, s1])
            for s2 in range(1, t + 1):
                if s2 == s1 or deg[s2] > d_cap:
                    continue
                r2[d1, deg[s2]] += p
                f[d1, deg[s2]] += p * int(N[s1, s2])
    return SubstepMarginals(r, r2, f, r2p, g, newnode)
