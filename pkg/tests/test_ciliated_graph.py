#!/usr/bin/env python3
"""Unit tests for ciliated graphs, fusion and local moves."""

import numpy as np
import pytest

from frpoisson.ciliated_graph import (
    CiliatedGraph,
    LocalMovePivot,
    Orientation,
    annulus_marked,
    applicable_local_moves,
    builtin_skeleton,
    disjoint_union,
    disk2,
    edge_id,
    from_json,
    fuse,
    fuse_skeleton,
    graph_equal,
    local_move,
    polygon_path,
    random_ciliated_graph,
    relabel,
    reverse_edge,
    sigma_n,
    three_marked_disk,
    to_json,
)
from frpoisson.lie_core import InvariantError


class TestCiliatedGraph:
    """Test the graph invariants."""

    def test_disk2_structure(self):
        """Test one edge a.0 (at v1) → a.1 (at v2)."""
        g, o = disk2()
        assert g.vertices == ("v1", "v2")
        assert g.edges == ("a.0:a.1",)
        assert g.vertex_of("a.0") == "v1"
        assert g.opposite("a.0") == "a.1"
        assert o.source("a.0:a.1") == "a.0"
        assert o.target_vertex("a.0:a.1") == "v2"
        assert not g.is_loop("a.0:a.1")

    def test_fixed_point_rejected(self):
        with pytest.raises(InvariantError, match="fixed point"):
            CiliatedGraph(["v"], ["a"], {"a": "a"}, {"a": "v"}, {"v": ["a"]})

    def test_non_involution_rejected(self):
        involution = {"a": "b", "b": "c", "c": "a"}
        incidence = {"a": "v", "b": "v", "c": "v"}
        with pytest.raises(InvariantError, match="not an involution"):
            CiliatedGraph(["v"], ["a", "b", "c"], involution, incidence, {"v": ["a", "b", "c"]})

    def test_order_must_list_incident_half_edges(self):
        with pytest.raises(InvariantError, match="orders: vertex 'v1'"):
            CiliatedGraph(
                ["v1", "v2"],
                ["a", "b"],
                {"a": "b", "b": "a"},
                {"a": "v1", "b": "v2"},
                {"v1": [], "v2": ["b"]},
            )

    def test_unknown_vertex_in_incidence(self):
        with pytest.raises(InvariantError, match="incidence"):
            CiliatedGraph(["v"], ["a", "b"], {"a": "b", "b": "a"}, {"a": "v", "b": "w"}, {"v": ["a"]})

    def test_colon_in_half_edge_id(self):
        with pytest.raises(InvariantError, match="must not contain ':'"):
            CiliatedGraph(["v"], ["a:1", "b"], {"a:1": "b", "b": "a:1"}, {"a:1": "v", "b": "v"}, {"v": ["a:1", "b"]})

    def test_edge_id_is_sorted(self):
        assert edge_id("b.1", "b.0") == "b.0:b.1"

    def test_unknown_edge(self):
        g, _ = disk2()
        with pytest.raises(ValueError, match="No edge"):
            g.half_edges_of("x.0:x.1")


class TestOrientation:
    """Test orientations and edge reversal."""

    def test_reverse_edge(self):
        g, o = disk2()
        reversed_o = reverse_edge(o, "a.0:a.1")
        assert reversed_o.source("a.0:a.1") == "a.1"
        assert reversed_o.sign("a.0") == -1
        assert o.sign("a.0") == 1
        assert reverse_edge(reversed_o, "a.0:a.1") == o

    def test_missing_source(self):
        g, _ = disk2()
        with pytest.raises(InvariantError, match="edges without a source"):
            Orientation(g, {})

    def test_foreign_source(self):
        g, _ = disk2()
        with pytest.raises(InvariantError, match="is not a half-edge"):
            Orientation(g, {"a.0:a.1": "b.0"})

    def test_default_orientation(self):
        g, o = sigma_n(2)
        assert Orientation.default(g) == o


class TestFusion:
    """Test vertex fusion and the named builders."""

    def test_fused_disk_is_annulus(self):
        """Test that fusing the endpoints of a disk gives the one-point annulus."""
        fused = fuse(disk2("a1", ("u1", "w1")).graph, "u1", "w1")
        annulus = annulus_marked(1).graph
        assert graph_equal(fused, annulus)
        assert fused == annulus
        assert annulus.vertices == ("u1=w1",)
        assert annulus.edges == ("a1.0:a1.1",)
        assert annulus.is_loop("a1.0:a1.1")

    def test_fuse_order_concatenates(self):
        g = fuse(sigma_n(2).graph, "v1", "v2")
        assert g.order_at("v1=v2") == ("e1.0", "e2.0", "e2.1", "e1.1")

    def test_fuse_errors(self):
        g, _ = disk2()
        with pytest.raises(ValueError, match="with itself"):
            fuse(g, "v1", "v1")
        with pytest.raises(ValueError, match="No vertex 'v9'"):
            fuse(g, "v1", "v9")

    def test_annulus_with_two_points(self):
        g, _ = annulus_marked(2)
        assert len(g.vertices) == 2
        assert len(g.edges) == 2
        assert not any(g.is_loop(e) for e in g.edges)

    def test_polygon_path(self):
        g, o = polygon_path(3)
        assert g.vertices == ("v0", "v1", "v2", "v3")
        assert g.order_at("v1") == ("e1.1", "e2.0")
        assert o.source_vertex("e3.0:e3.1") == "v2"

    def test_sigma_orders(self):
        g, _ = sigma_n(3)
        assert g.order_at("v1") == ("e1.0", "e2.0", "e3.0")
        assert g.order_at("v2") == ("e3.1", "e2.1", "e1.1")

    def test_disjoint_union_clash(self):
        with pytest.raises(InvariantError, match="not disjoint"):
            disjoint_union(disk2(), disk2())

    def test_relabel(self):
        s = relabel(disk2(), {"v1": "x"})
        assert s.graph.vertex_of("a.0") == "x"
        with pytest.raises(ValueError, match="not injective"):
            relabel(disk2(), {"v1": "v2"})

    def test_graph_equal_under_relabeling(self):
        g1 = disk2().graph
        g2 = disk2("b", ("x", "y")).graph
        assert not graph_equal(g1, g2)
        assert graph_equal(
            g1, g2, vertex_map={"v1": "x", "v2": "y"}, half_edge_map={"a.0": "b.0", "a.1": "b.1"}
        )

    def test_fuse_skeleton_keeps_orientation(self):
        s = fuse_skeleton(sigma_n(2), "v1", "v2")
        assert s.orientation.source("e1.0:e1.1") == "e1.0"

    @pytest.mark.parametrize(
        "name, vertices",
        [("disk2", 2), ("annulus_marked(3)", 3), ("sigma_n(4)", 2), ("polygon_path(2)", 3), ("three_marked_disk", 3)],
    )
    def test_builtin_skeleton(self, name, vertices):
        assert len(builtin_skeleton(name).graph.vertices) == vertices

    def test_unknown_builtin(self):
        with pytest.raises(ValueError, match="Unknown built-in graph"):
            builtin_skeleton("torus(1)")

    def test_json_record(self):
        s = three_marked_disk()
        restored = from_json(to_json(s))
        assert restored.graph == s.graph
        assert restored.orientation == s.orientation

    def test_json_record_missing_field(self):
        record = to_json(disk2())
        del record["orders"]
        with pytest.raises(ValueError, match="missing 'orders'"):
            from_json(record)


class TestLocalMoves:
    """Test the local change of skeletons."""

    def test_single_applicable_pivot(self):
        g, o = three_marked_disk()
        assert applicable_local_moves(g, o) == [
            LocalMovePivot("g1.0:g1.1", "g2.0:g2.1", False)
        ]

    def test_forward_move(self):
        g, o = three_marked_disk()
        result = local_move(g, o, LocalMovePivot("g1.0:g1.1", "g2.0:g2.1"))
        assert result.graph.vertex_of("g1.1") == "v3"
        assert result.graph.order_at("v3") == ("g1.1", "g2.1")
        assert result.graph.order_at("v2") == ("g2.0",)
        assert result.orientation.source("g1.0:g1.1") == "g1.0"

    def test_inverse_restores(self):
        """Test that the inverse move undoes the forward move."""
        g, o = three_marked_disk()
        forward = local_move(g, o, LocalMovePivot("g1.0:g1.1", "g2.0:g2.1"))
        inverse = LocalMovePivot("g1.0:g1.1", "g2.0:g2.1", True)
        assert inverse in applicable_local_moves(forward.graph, forward.orientation)
        restored = local_move(forward.graph, forward.orientation, inverse)
        assert restored.graph == g
        assert restored.orientation == o

    def test_pattern_mismatch(self):
        g, o = three_marked_disk()
        with pytest.raises(ValueError, match="does not match the local move pattern"):
            local_move(g, o, LocalMovePivot("g2.0:g2.1", "g1.0:g1.1"))

    def test_disk_has_no_moves(self):
        assert applicable_local_moves(*disk2()) == []


class TestRandomGraphs:
    """Test the random skeleton generator."""

    @pytest.mark.parametrize("seed", range(20))
    def test_random_graph_is_valid(self, seed):
        g, o = random_ciliated_graph(np.random.default_rng(seed))
        assert 1 <= len(g.edges) <= 6
        assert 1 <= len(g.vertices) <= 4
        assert set(o.sources) == set(g.edges)
        g.validate()

    def test_deterministic(self):
        first = random_ciliated_graph(np.random.default_rng(5))
        second = random_ciliated_graph(np.random.default_rng(5))
        assert first.graph == second.graph
        assert first.orientation == second.orientation

    def test_bounds(self):
        with pytest.raises(ValueError, match="positive bounds"):
            random_ciliated_graph(np.random.default_rng(0), max_vertices=0)


if __name__ == "__main__":
    pytest.main([__file__])
