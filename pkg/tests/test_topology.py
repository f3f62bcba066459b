import io

import numpy as np
import pytest

from flowsim.topology import Link, Topology, TopologyError, dump_topology, load_topology, make_uniform_capacity

from oracles import bfs_reachable

TRIANGLE = """\
nodes 3
0 1 1.0
1 2 1.0
0 2 1.0
"""


def load(text):
    return load_topology(io.StringIO(text))


def test_triangle_loads():
    topo = load(TRIANGLE)
    assert topo.node_count == 3
    assert topo.link_count == 3
    for node in range(3):
        assert len(topo.adjacency[node]) == 2


def test_link_ids_follow_file_order():
    topo = load(TRIANGLE)
    assert [l.id for l in topo.links] == [0, 1, 2]
    assert (topo.links[1].u, topo.links[1].v) == (1, 2)


def test_comments_and_blank_lines_ignored():
    topo = load("# a comment\n\nnodes 2\n0 1 2.5  # inline comment\n\n")
    assert topo.node_count == 2
    assert topo.links[0].capacity == 2.5


def test_self_loop_rejected():
    with pytest.raises(TopologyError, match="self-loop"):
        load("nodes 2\n0 0 1.0\n0 1 1.0\n")


def test_disconnected_graph_rejected():
    with pytest.raises(TopologyError, match="disconnected"):
        load("nodes 4\n0 1 1.0\n2 3 1.0\n")


def test_duplicate_edge_rejected():
    with pytest.raises(TopologyError, match="duplicate"):
        load("nodes 2\n0 1 1.0\n1 0 2.0\n")


def test_nonpositive_capacity_rejected():
    with pytest.raises(TopologyError, match="capacity"):
        load("nodes 2\n0 1 0.0\n")


def test_node_out_of_range_rejected():
    with pytest.raises(TopologyError, match="outside"):
        load("nodes 2\n0 2 1.0\n")


def test_malformed_line_reports_line_number():
    with pytest.raises(TopologyError, match="line 3"):
        load("nodes 2\n0 1 1.0\n0 1\n")


def test_missing_header():
    with pytest.raises(TopologyError, match="nodes"):
        load("0 1 1.0\n")
    with pytest.raises(TopologyError, match="header"):
        load("# only comments\n")


def test_round_trip():
    topo = load("nodes 4\n0 1 1.5\n1 2 0.25\n2 3 3.0\n0 3 1.0\n1 3 2.0\n")
    again = load(dump_topology(topo))
    assert again.node_count == topo.node_count
    assert again.links == topo.links


def test_adjacency_contains_each_link_once_per_endpoint():
    topo = load(TRIANGLE)
    for link in topo.links:
        for end in (link.u, link.v):
            hits = [lid for _, lid in topo.adjacency[end] if lid == link.id]
            assert hits == [link.id]


def test_uniform_capacity():
    topo = load("nodes 3\n0 1 1.0\n1 2 2.0\n0 2 3.0\n")
    uniform = make_uniform_capacity(topo, 1.0)
    assert all(l.capacity == 1.0 for l in uniform.links)
    assert [(l.u, l.v) for l in uniform.links] == [(l.u, l.v) for l in topo.links]
    # idempotent
    twice = make_uniform_capacity(uniform, 1.0)
    assert twice.links == uniform.links


def test_uniform_capacity_rejects_nonpositive():
    topo = load(TRIANGLE)
    with pytest.raises(TopologyError):
        make_uniform_capacity(topo, 0.0)
    with pytest.raises(TopologyError):
        make_uniform_capacity(topo, -1.0)


def test_connectivity_matches_bfs_oracle():
    rng = np.random.default_rng(7)
    for _ in range(200):
        n = int(rng.integers(2, 13))
        edges = set()
        for u in range(n):
            for v in range(u + 1, n):
                if rng.random() < 0.25:
                    edges.add((u, v))
        edge_list = sorted(edges)
        links = [Link(id=i, u=u, v=v, capacity=1.0) for i, (u, v) in enumerate(edge_list)]
        connected = len(bfs_reachable(n, edge_list)) == n
        if connected:
            topo = Topology(n, links)
            assert topo.node_count == n
        else:
            with pytest.raises(TopologyError):
                Topology(n, links)
