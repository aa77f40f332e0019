import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bomodel.graph_model import (ExcessRoster, ModelError, ModelParams, MultiGraph, attachment_probs,
                                 check_conservation, collapse, count_X, degree_counts,
                                 degree_histogram, file_digest, generate, generate_stage1,
                                 new_seed_graph, new_seed_state, parse_header, read_edge_list,
                                 sample_targets, stage1_step, write_degree_csv, write_edge_list)
from bomodel.graph_model import _pick
from bomodel.rng import stream

a_values = st.sampled_from([0.05, 0.5, 1.0, 1.7, 3.0, 25.0])


def test_seed_graph_is_single_loop():
    g = new_seed_graph()
    assert g.node_count == 1
    assert g.edges.tolist() == [[1, 1]]
    assert g.degree(1) == 2


@pytest.mark.parametrize("bad", [dict(a=0), dict(a=-1), dict(a=math.nan), dict(a=math.inf),
                                 dict(a=1, k=0), dict(a=1, k=1.5), dict(a=1, seed=-1),
                                 dict(a=1, seed=2 ** 64), dict(a="1")])
def test_params_rejected(bad):
    with pytest.raises(ModelError):
        ModelParams(**bad)


def test_multigraph_is_read_only():
    g = generate(ModelParams(1.0, 2), 10)
    with pytest.raises(ValueError):
        g.degrees[0] = 7
    with pytest.raises(AttributeError):
        g.node_count = 3


def test_attachment_probs_two_nodes():
    # node 2 joins node 1 (degree 2): weights 1 + a for node 1, a for the loop
    assert np.allclose(attachment_probs([2], 1.0), [2 / 3, 1 / 3])
    assert np.allclose(attachment_probs([2], 0.5), [0.75, 0.25])


@given(st.integers(1, 40), a_values, st.integers(0, 1000))
def test_attachment_probs_normalised(n, a, seed):
    degrees = generate_stage1(ModelParams(a, 1, seed), n).degrees
    assert math.isclose(attachment_probs(degrees, a).sum(), 1.0, rel_tol=0, abs_tol=1e-12)


def test_pick_covers_the_law_exactly():
    # sweep u over a fine grid: the measure of each outcome matches the law
    a, degrees = 0.7, [3, 1, 2]
    roster = np.array([1, 1, 3])
    m = len(degrees) + 1
    grid = (np.arange(200000) + 0.5) / 200000
    picks = np.array([_pick(u, m, a, roster) for u in grid])
    freq = np.bincount(picks, minlength=m + 1)[1:] / len(grid)
    assert np.allclose(freq, attachment_probs(degrees, a), atol=1e-4)


def test_pick_clamps_at_top_of_interval():
    roster = np.array([1, 2, 2])
    assert _pick(np.nextafter(1.0, 0.0), 4, 1.0, roster) == 2
    assert _pick(np.nextafter(1.0, 0.0), 4, 1e-9, roster) == 2
    assert 1 <= _pick(0.0, 4, 1.0, roster) <= 4


def test_step_by_step_equals_bulk():
    params = ModelParams(0.8, 1, seed=5)
    rng = stream(5)
    state = new_seed_state()
    for _ in range(299):
        stage1_step(state, params, rng)
        assert state.roster.audit(state.degrees)
    assert state.graph() == generate_stage1(params, 300, stream(5))


def test_roster_audit_detects_tampering():
    r = ExcessRoster(2)
    for s in (1, 1, 2):
        r.append(s)
    assert r.audit([3, 2, 1])
    assert not r.audit([2, 2, 1])
    assert len(r) == 3 and r[2] == 2


@settings(max_examples=40, deadline=None)
@given(a_values, st.integers(1, 5), st.integers(1, 200), st.integers(0, 2 ** 32))
def test_conservation(a, k, t, seed):
    g = generate(ModelParams(a, k, seed), t)
    check_conservation(g, k)
    assert g.node_count == t and g.edge_count == k * t
    # degree-mass ledger
    counts = degree_counts(g)
    assert sum(counts.values()) == t
    assert sum(d * c for d, c in counts.items()) == 2 * k * t
    # edges only point backwards or loop
    assert np.all(g.targets <= g.heads)


@settings(max_examples=30, deadline=None)
@given(a_values, st.integers(1, 3), st.integers(2, 60), st.integers(0, 1000))
def test_count_X_symmetric_and_brute_force(a, k, t, seed):
    g = generate(ModelParams(a, k, seed), t)
    deg = g.degrees
    for d1 in range(k, k + 4):
        for d2 in range(k, k + 4):
            assert count_X(g, d1, d2) == count_X(g, d2, d1)
            brute = sum(int(deg[u - 1] == d1 and deg[v - 1] == d2) + int(deg[u - 1] == d2 and deg[v - 1] == d1)
                        for u, v in g.edges if u != v)
            assert count_X(g, d1, d2) == brute


def test_collapse_labels_and_degrees():
    g1 = generate_stage1(ModelParams(1.0), 12, stream(1))
    g3 = collapse(g1, 3)
    assert g3.heads.tolist() == [1, 1, 1, 2, 2, 2, 3, 3, 3, 4, 4, 4]
    assert np.array_equal(g3.targets, (g1.targets - 1) // 3 + 1)
    assert np.array_equal(g3.degrees, g1.degrees.reshape(4, 3).sum(axis=1))
    with pytest.raises(ModelError):
        collapse(g1, 5)


def test_determinism_and_seed_sensitivity():
    p = ModelParams(1.3, 2, seed=99)
    assert generate(p, 500) == generate(p, 500)
    assert generate(p, 500) != generate(ModelParams(1.3, 2, seed=100), 500)


def test_sample_targets_matches_generate():
    p = ModelParams(0.5, 2)
    rows = sample_targets(p, 4, 50, stream(8))
    rng = stream(8)
    for row in rows:
        assert np.array_equal(row, generate(p, 4, rng).targets)


def test_degree_histogram():
    g = MultiGraph(3, [1, 2, 3], [1, 1, 2], [3, 2, 1])
    assert degree_histogram(g).tolist() == [0, 1, 1, 1]
    assert degree_counts(g) == {1: 1, 2: 1, 3: 1}


def test_edge_file_round_trip(tmp_path):
    p = ModelParams(0.25, 3, seed=12345)
    g = generate(p, 2000)
    path = tmp_path / "g.txt"
    write_edge_list(g, p, path)
    with open(path) as fh:
        assert fh.readline() == "# bograph a=0.25 k=3 t=2000 seed=12345\n"
    params, back = read_edge_list(path)
    assert params == p
    assert back == g
    # same seed, same bytes
    write_edge_list(generate(p, 2000), p, tmp_path / "h.txt")
    assert file_digest(path) == file_digest(tmp_path / "h.txt")


def test_edge_file_matches_plain_formatting(tmp_path):
    p = ModelParams(1.0, 1)
    g = generate(p, 300)
    write_edge_list(g, p, tmp_path / "g.txt")
    lines = (tmp_path / "g.txt").read_text().splitlines()[1:]
    assert lines == [f"{u} {v}" for u, v in g.edges]


@pytest.mark.parametrize("line", ["", "# other a=1 k=1 t=1 seed=0", "# bograph a=1 k=1 t=x seed=0",
                                  "# bograph a=0 k=1 t=3 seed=0", "# bograph a=1 k=1 seed=0"])
def test_bad_headers(line):
    with pytest.raises(ModelError):
        parse_header(line)


def test_read_rejects_out_of_range(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("# bograph a=1.0 k=1 t=2 seed=0\n1 1\n2 3\n")
    with pytest.raises(ModelError):
        read_edge_list(path)


def test_degree_csv(tmp_path):
    g = MultiGraph(3, [1, 2, 3], [1, 1, 2], [3, 2, 1])
    write_degree_csv(g, tmp_path / "d.csv")
    assert (tmp_path / "d.csv").read_text() == "d,count\n1,1\n2,1\n3,1\n"


def test_invalid_sizes():
    with pytest.raises(ModelError):
        generate(ModelParams(1.0), 0)
    with pytest.raises(ModelError):
        generate_stage1(ModelParams(1.0), 0)
