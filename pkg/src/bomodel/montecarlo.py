"""Replicated simulation and statistical comparison with exact targets.

Each replica ``i`` draws its uniforms from ``replica_stream(seed, i)`` and
writes its statistics into row ``i`` of a preallocated array; reductions run
over whole arrays in replica order.  Results are therefore bit-identical for
any number of workers.

Gates compare a sample mean with an exact target using a 4 standard error
window.  A campaign is judged on the number of failing cells against the
binomial budget of 4-sigma false alarms.
"""

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numba
import numpy as np
from scipy.stats import norm

from . import analytics
from .graph_model import ModelParams, check_conservation, degree_histogram, count_X, generate, grow
from .oracle import ResourceCapError, compute_f
from .rng import replica_stream

SCHEMA_VERSION = 1
STATISTICS = ("R", "cov", "X")
Z_GATE = 4.0
P_FALSE_ALARM = 2 * norm.sf(Z_GATE)
MAX_STEPS = 5 * 10 ** 9
# uniforms held in memory per chunk of replicas
CHUNK_DRAWS = 1 << 22
AUDIT_EVERY = 100


@numba.njit(cache=True, nogil=True)
def _replica_batch(uniforms, a, k, t, d_index, pair_index, R_out, X_out,
                   targets, degrees, roster, cdeg):
    n = k * t
    nd = len(d_index)
    npair = pair_index.shape[0]
    for row in range(uniforms.shape[0]):
        targets[0] = 1
        degrees[0] = 2
        roster[0] = 1
        grow(uniforms[row], 2, a, targets, degrees, roster)
        for j in range(t):
            cdeg[j] = 0
        for m in range(n):
            cdeg[m // k] += degrees[m]
        for j in range(t):
            d = cdeg[j]
            if d < nd and d_index[d] >= 0:
                R_out[row, d_index[d]] += 1
        if X_out.shape[1] > 0:
            for m in range(n):
                u = m // k
                v = (targets[m] - 1) // k
                if u != v:
                    du = cdeg[u]
                    dv = cdeg[v]
                    if du < npair and dv < npair:
                        idx = pair_index[du, dv]
                        if idx >= 0:
                            X_out[row, idx] += 1
                        idx = pair_index[dv, du]
                        if idx >= 0:
                            X_out[row, idx] += 1


def simulate(params, t, replicas, seed, d_values=(), pairs=(), workers=1, audit=True):
    """Per-replica R(d, t) for ``d_values`` and X(d1, d2, t) for ``pairs``.

    Returns ``(R, X)`` with shapes ``(replicas, len(d_values))`` and
    ``(replicas, len(pairs))``.  Every ``AUDIT_EVERY``-th replica is rebuilt
    through :func:`generate` and checked for conservation and agreement.
    """
    k = params.k
    n = k * t
    if n * replicas > MAX_STEPS:
        raise ResourceCapError(f"{n * replicas} growth steps exceed the cap of {MAX_STEPS}")
    d_values = [int(d) for d in d_values]
    pairs = [(int(d1), int(d2)) for d1, d2 in pairs]
    d_index = np.full(max(d_values, default=-1) + 1, -1, dtype=np.int64)
    for col, d in enumerate(d_values):
        d_index[d] = col
    pmax = max((max(p) for p in pairs), default=-1) + 1
    pair_index = np.full((pmax, pmax), -1, dtype=np.int64)
    for col, (d1, d2) in enumerate(pairs):
        pair_index[d1, d2] = col
    R = np.zeros((replicas, len(d_values)), dtype=np.int64)
    X = np.zeros((replicas, len(pairs)), dtype=np.int64)
    a = float(params.a)
    rows_per_chunk = max(1, CHUNK_DRAWS // max(n - 1, 1))
    chunks = [(lo, min(lo + rows_per_chunk, replicas)) for lo in range(0, replicas, rows_per_chunk)]

    def run(chunk):
        lo, hi = chunk
        u = np.empty((hi - lo, n - 1))
        for i in range(lo, hi):
            replica_stream(seed, i).random(out=u[i - lo])
        scratch = [np.empty(n, dtype=np.int64) for _ in range(3)]
        _replica_batch(u, a, k, t, d_index, pair_index, R[lo:hi], X[lo:hi],
                       *scratch, np.empty(t, dtype=np.int64))

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(run, chunks))
    else:
        for chunk in chunks:
            run(chunk)

    if audit:
        for i in range(0, replicas, AUDIT_EVERY):
            g = generate(params, t, rng=replica_stream(seed, i))
            check_conservation(g, k)
            h = degree_histogram(g, max(d_values, default=0))
            if any(h[d] != R[i, c] for c, d in enumerate(d_values)):
                raise AssertionError(f"replica {i}: kernel degree counts disagree with generate()")
            if any(count_X(g, d1, d2) != X[i, c] for c, (d1, d2) in enumerate(pairs)):
                raise AssertionError(f"replica {i}: kernel X counts disagree with count_X()")
    return R, X


# ------------------------------------------------------------------ report

def _summary(samples):
    n = samples.shape[0]
    mean = samples.mean(axis=0)
    var = samples.var(axis=0, ddof=1)
    return {"mean": mean, "var": var, "se": np.sqrt(var / n)}


def _cov_summary(R):
    n = R.shape[0]
    centred = R - R.mean(axis=0)
    cov = centred.T @ centred / (n - 1)
    # SE of each covariance cell from the spread of the centred products
    se = np.empty_like(cov)
    for j in range(R.shape[1]):
        prod = centred * centred[:, j:j + 1]
        se[:, j] = np.sqrt(prod.var(axis=0, ddof=1) / n)
    return {"cov": cov, "se": se}


@dataclass
class McReport:
    params: ModelParams
    t: int
    replicas: int
    seed: int
    statistics: list
    d_values: list = field(default_factory=list)
    pairs: list = field(default_factory=list)
    R: Optional[dict] = None
    cov: Optional[dict] = None
    X: Optional[dict] = None
    comparisons: dict = field(default_factory=dict)
    tail: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    samples: dict = field(default_factory=dict, repr=False, compare=False)

    def to_dict(self):
        def plain(x):
            if isinstance(x, dict):
                return {k: plain(v) for k, v in x.items()}
            if isinstance(x, (list, tuple)):
                return [plain(v) for v in x]
            if isinstance(x, np.ndarray):
                return plain(x.tolist())
            if isinstance(x, (np.integer,)):
                return int(x)
            if isinstance(x, np.floating):
                return plain(float(x))
            if isinstance(x, float) and not math.isfinite(x):
                return None
            return x

        out = {
            "schema_version": SCHEMA_VERSION,
            "params": {"a": float(self.params.a), "k": self.params.k, "seed": self.params.seed},
            "t": self.t,
            "replicas": self.replicas,
            "seed": self.seed,
            "statistics": list(self.statistics),
            "d_values": list(self.d_values),
            "pairs": [list(p) for p in self.pairs],
            "R": self.R,
            "cov": self.cov,
            "X": self.X,
            "comparisons": self.comparisons,
            "tail": self.tail,
            "notes": self.notes,
        }
        return plain(out)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, data):
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {data.get('schema_version')}")
        arr = lambda d: None if d is None else {k: np.asarray(v, dtype=float) for k, v in d.items()}
        p = data["params"]
        return cls(ModelParams(p["a"], p["k"], p["seed"]), data["t"], data["replicas"], data["seed"],
                   data["statistics"], data["d_values"], [tuple(x) for x in data["pairs"]],
                   arr(data["R"]), arr(data["cov"]), arr(data["X"]),
                   data["comparisons"], data["tail"], data["notes"])

    def gates_passed(self):
        return all(c.get("passed", True) for c in self.comparisons.values()) \
            and all(row["passed"] for row in self.tail)


def run_campaign(params, t, replicas, statistics=("R",), seed=None, d_values=None, pairs=(),
                 workers=1, keep_samples=False):
    """Simulate ``replicas`` graphs H_{a,k}^{(t)} and summarise the requested statistics.

    ``statistics`` is a subset of ``{"R", "cov", "X"}``.  ``d_values`` defaults
    to ``k .. k+20``; ``pairs`` lists the (d1, d2) cells for ``"X"``.
    """
    statistics = list(dict.fromkeys(statistics))
    unknown = set(statistics) - set(STATISTICS)
    if unknown:
        raise ValueError(f"unknown statistics {sorted(unknown)}")
    if replicas < 2:
        raise ValueError("need at least 2 replicas")
    seed = params.seed if seed is None else seed
    if d_values is None:
        d_values = list(range(params.k, params.k + 21))
    want_R = "R" in statistics or "cov" in statistics
    d_values = [int(d) for d in d_values] if want_R else []
    pairs = [tuple(int(x) for x in p) for p in pairs] if "X" in statistics else []
    if "X" in statistics and not pairs:
        raise ValueError("statistic X needs at least one (d1, d2) pair")
    R, X = simulate(params, t, replicas, seed, d_values, pairs, workers)
    report = McReport(params, t, replicas, seed, statistics, d_values, pairs)
    if "R" in statistics:
        report.R = _summary(R)
    if "cov" in statistics:
        report.cov = _cov_summary(R)
    if "X" in statistics:
        report.X = _summary(X)
    if keep_samples:
        report.samples = {"R": R, "X": X}
    return report


# ------------------------------------------------------------------- gates

def failure_budget(cells, p=P_FALSE_ALARM):
    """Largest failure count consistent with 4-sigma false alarms alone."""
    mean = cells * p
    return int(math.floor(mean + Z_GATE * math.sqrt(mean * (1 - p))))


def _gate(mean, target, se, replicas):
    # a zero-variance cell (nothing observed) still gets Poisson-scale slack
    se = np.where(se > 0, se, np.sqrt(np.abs(target) / replicas))
    diff = mean - target
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, diff / se, np.where(diff == 0, 0.0, np.inf))
    passed = np.abs(diff) <= Z_GATE * se + 1e-12
    return z, passed, se


def _check_match(report, table):
    if (float(report.params.a), report.params.k) != (float(table.params.a), table.params.k):
        raise ValueError("report and oracle table have different (a, k)")
    if report.t > table.t_max or (table.r.shape[0] == 1 and report.t != table.t_max):
        raise ValueError(f"oracle table does not cover t={report.t}")


def _cell(values, d):
    return float(values[d]) if d < len(values) else 0.0


def check_theorem1(report, table):
    """Degree-count means against the exact r(d, t), with the closed-form gap alongside."""
    _check_match(report, table)
    if report.R is None:
        raise ValueError("report has no R statistic")
    r = table.r_at(report.t)
    ds = np.array(report.d_values)
    target = np.array([_cell(r, d) for d in ds])
    z, passed, se = _gate(report.R["mean"], target, report.R["se"], report.replicas)
    closed = np.asarray(analytics.expected_R_main(ds, report.t, report.params))
    rows = [{"d": int(d), "mean": float(m), "se": float(s), "oracle": float(o),
             "closed_form": float(c), "z": float(zz), "gap_times_d": float(abs(o - c) * d),
             "passed": bool(p)}
            for d, m, s, o, c, zz, p in zip(ds, report.R["mean"], se, target, closed, z, passed)]
    return _verdict(report, "theorem1", rows)


def check_closed_form_R(report, gap):
    """Degree-count means against c(d) t within 4 SE plus the O(1/d) band ``gap / d``."""
    if report.R is None:
        raise ValueError("report has no R statistic")
    ds = np.array(report.d_values)
    target = np.asarray(analytics.expected_R_main(ds, report.t, report.params), dtype=float)
    se = np.asarray(report.R["se"])
    se = np.where(se > 0, se, np.sqrt(np.abs(target) / report.replicas))
    diff = report.R["mean"] - target
    band = Z_GATE * se + gap / ds
    rows = [{"d": int(d), "mean": float(m), "se": float(s), "closed_form": float(c),
             "band": float(b), "passed": bool(abs(e) <= b)}
            for d, m, s, c, b, e in zip(ds, report.R["mean"], se, target, band, diff)]
    return _verdict(report, "theorem1_closed_form", rows)


def check_theorem2(report, table, scale=None):
    """Empirical covariance grid against the exact covariance, plus the bound check."""
    _check_match(report, table)
    if report.cov is None:
        raise ValueError("report has no cov statistic")
    ds = report.d_values
    full = table.covariance()
    target = np.array([[full[d1, d2] if max(d1, d2) <= table.d_cap else 0.0 for d2 in ds] for d1 in ds])
    z, passed, se = _gate(report.cov["cov"], target, report.cov["se"], report.replicas)
    rows = []
    for i, d1 in enumerate(ds):
        for j, d2 in enumerate(ds):
            row = {"d1": d1, "d2": d2, "cov": float(report.cov["cov"][i, j]), "se": float(se[i, j]),
                   "oracle": float(target[i, j]), "z": float(z[i, j]), "passed": bool(passed[i, j])}
            if scale is not None:
                bound = analytics.cov_bound(d1, d2, report.t, report.params, scale)
                row["bound"] = float(bound)
                row["within_bound"] = bool(abs(row["cov"]) <= bound)
            rows.append(row)
    verdict = _verdict(report, "theorem2", rows)
    if scale is not None:
        verdict["all_within_bound"] = all(r["within_bound"] for r in rows)
        verdict["passed"] = verdict["passed"] and verdict["all_within_bound"]
        report.comparisons["theorem2"] = verdict
    return verdict


def _verdict(report, name, rows):
    failures = sum(not r["passed"] for r in rows)
    budget = failure_budget(len(rows))
    verdict = {"cells": len(rows), "failures": failures, "budget": budget,
               "pass_rate": 1 - failures / max(len(rows), 1),
               "passed": failures <= budget, "rows": rows}
    report.comparisons[name] = verdict
    return verdict


def check_X(report, table):
    """X means against the exact E X(d1, d2, t); the closed form c_X t is reported, not gated."""
    _check_match(report, table)
    if report.X is None or table.f is None:
        raise ValueError("need an X statistic and an f table")
    target = np.array([table.f[d1, d2] if max(d1, d2) <= table.d_cap else 0.0 for d1, d2 in report.pairs])
    z, passed, se = _gate(report.X["mean"], target, report.X["se"], report.replicas)
    rows = []
    for (d1, d2), m, s, o, zz, p in zip(report.pairs, report.X["mean"], se, target, z, passed):
        cx = analytics.coeff_cX(d1, d2, report.params) * report.t
        rows.append({"d1": d1, "d2": d2, "mean": float(m), "se": float(s), "oracle": float(o),
                     "closed_form": float(cx), "ratio_to_closed_form": float(m / cx) if cx > 0 else None,
                     "z": float(zz), "passed": bool(p)})
    return _verdict(report, "X", rows)


ORACLE_F_MAX_SUBSTEPS = 20000


def check_theorem4(params, d1, d2, t, replicas, c_grid, seed=None, ex=None, workers=1):
    """Empirical tail frequencies of |X - EX| >= c (d1+d2) sqrt(kt) against 2 exp(-c^2/8).

    ``EX`` comes from ``ex`` if given, else from the exact recurrence when
    ``k t`` is small enough, else from the campaign's own mean.
    """
    report = run_campaign(params, t, replicas, ("X",), seed, pairs=[(d1, d2)],
                          workers=workers, keep_samples=True)
    if ex is None:
        if params.k * t <= ORACLE_F_MAX_SUBSTEPS:
            ex = float(compute_f(params, t, d_cap=max(d1, d2, 2 * params.k)).f[d1, d2])
            report.notes.append("EX from exact recurrence")
        else:
            ex = float(report.X["mean"][0])
            report.notes.append("EX from campaign mean")
    else:
        report.notes.append("EX supplied by caller")
    x = report.samples["X"][:, 0]
    scale = (d1 + d2) * math.sqrt(params.k * t)
    rows = []
    for c in c_grid:
        freq = float(np.mean(np.abs(x - ex) >= c * scale))
        bound = float(analytics.azuma_tail_bound(c))
        se = math.sqrt(freq * (1 - freq) / replicas)
        rows.append({"c": float(c), "frequency": freq, "bound": bound, "se": se,
                     "passed": freq <= bound + Z_GATE * se})
    report.tail = rows
    report.comparisons["theorem4"] = {"EX": ex, "d1": d1, "d2": d2,
                                      "passed": all(r["passed"] for r in rows)}
    return report


def corollary1_violation_rate(params, d, t, replicas, seed=None, psi=None, workers=1):
    """Fraction of replicas with |R(d,t) - c(d) t| above the concentration window (psi = log t)."""
    psi = math.log(t) if psi is None else psi
    report = run_campaign(params, t, replicas, ("R",), seed, d_values=[d], workers=workers,
                          keep_samples=True)
    centre = analytics.expected_R_main(d, t, params)
    window = analytics.concentration_window(d, t, psi, params)
    return float(np.mean(np.abs(report.samples["R"][:, 0] - centre) > window))


def write_report_csv(report, prefix):
    """One CSV per table: ``<prefix>_R.csv``, ``_cov.csv``, ``_X.csv``, ``_tail.csv``."""
    paths = []
    if report.R is not None:
        paths.append(f"{prefix}_R.csv")
        with open(paths[-1], "w") as fh:
            fh.write("d,mean,var,se\n")
            for d, m, v, s in zip(report.d_values, report.R["mean"], report.R["var"], report.R["se"]):
                fh.write(f"{d},{m!r},{v!r},{s!r}\n")
    if report.cov is not None:
        paths.append(f"{prefix}_cov.csv")
        with open(paths[-1], "w") as fh:
            fh.write("d1,d2,cov,se\n")
            for i, d1 in enumerate(report.d_values):
                for j, d2 in enumerate(report.d_values):
                    fh.write(f"{d1},{d2},{report.cov['cov'][i, j]!r},{report.cov['se'][i, j]!r}\n")
    if report.X is not None:
        paths.append(f"{prefix}_X.csv")
        with open(paths[-1], "w") as fh:
            fh.write("d1,d2,mean,var,se\n")
            for (d1, d2), m, v, s in zip(report.pairs, report.X["mean"], report.X["var"], report.X["se"]):
                fh.write(f"{d1},{d2},{m!r},{v!r},{s!r}\n")
    if report.tail:
        paths.append(f"{prefix}_tail.csv")
        with open(paths[-1], "w") as fh:
            fh.write("c,frequency,bound,se,passed\n")
            for row in report.tail:
                fh.write(f"{row['c']!r},{row['frequency']!r},{row['bound']!r},{row['se']!r},{int(row['passed'])}\n")
    return paths
