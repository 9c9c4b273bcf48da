#!/usr/bin/env python3
"""Unit tests for the check registry."""

import logging
from fractions import Fraction

import pytest

from frpoisson.checks import (
    FAIL,
    PASS,
    REGISTRY,
    SAMPLED_PASS,
    CheckContext,
    register,
    run_check,
)
from frpoisson.ciliated_graph import (
    disjoint_union,
    disk2,
    fuse_skeleton,
    relabel,
    sigma_n,
    three_marked_disk,
    to_json,
)
from frpoisson.scenario import CHECKS, load_scenario, scenario_from_dict


@pytest.fixture
def context(config):
    def _context(name):
        return CheckContext(load_scenario(name), config)

    return _context


def _polyuble_doc(north_order):
    """Two parallel edges south → north with half-edges p0/p1 and q0/q1."""
    graph = {
        "vertices": ["south", "north"],
        "half_edges": ["p0", "p1", "q0", "q1"],
        "involution": {"p0": "p1", "p1": "p0", "q0": "q1", "q1": "q0"},
        "incidence": {"p0": "south", "q0": "south", "p1": "north", "q1": "north"},
        "orders": {"south": ["p0", "q0"], "north": north_order},
        "orientation": {"p0:p1": "p0", "q0:q1": "q0"},
    }
    return {
        "schema_version": "1",
        "name": "two_parallel_edges",
        "algebra": "sl2",
        "graph": graph,
        "r_matrices": {"south": "sl2_standard", "north": {"conjugate": "sl2_standard"}},
        "checks": ["polyuble_multiplicativity"],
    }


class TestRegistry:
    """Test registration and error handling."""

    def test_every_check_is_registered(self):
        assert set(REGISTRY) == set(CHECKS)

    def test_register_unknown_name(self):
        with pytest.raises(ValueError, match="not a registered check name"):
            register("bogus")

    def test_run_unknown_check(self, context):
        with pytest.raises(ValueError, match="No check named 'bogus'"):
            run_check("bogus", context("disk2_sl2"))

    def test_errors_become_failures(self, context, monkeypatch):
        def boom(ctx):
            raise RuntimeError("no convergence")

        monkeypatch.setitem(REGISTRY, "cyb", boom)
        result = run_check("cyb", context("disk2_sl2"))
        assert result.verdict == FAIL
        assert not result.passed
        assert result.details["error"] == "RuntimeError: no convergence"


class TestExactChecks:
    """Test checks decided by exact arithmetic."""

    def test_cyb(self, context):
        result = run_check("cyb", context("disk2_sl2"))
        assert result.verdict == PASS
        assert result.witness is None

    def test_corrupted_cyb(self, context):
        """Test that the corrupted r-matrix reports its 8·h∧e∧f defect."""
        result = run_check("cyb", context("corrupted_cyb_sl2"))
        assert result.verdict == FAIL
        detail = result.details["sl2_corrupted"]
        assert detail["holds"] is False
        assert Fraction(detail["defect"]["h^e^f"]) == 8
        assert result.witness == 8

    def test_corrupted_rgamma(self, context):
        result = run_check("rgamma_cyb", context("corrupted_cyb_sl2"))
        assert result.verdict == FAIL
        assert result.details["cyb"]["holds"] is False

    def test_section2(self, context):
        result = run_check("section2", context("three_marked_disk_sl2"))
        assert result.verdict == PASS
        assert all(d["failures"] == [] for d in result.details.values())

    def test_fusion_theorem(self, context):
        result = run_check("fusion_theorem", context("disk2_sl2"))
        assert result.verdict == PASS
        assert result.details["v1=v2:pi"]["holds"]
        assert result.details["v1=v2:action"]["holds"]

    def test_fusion_skips_conjugate_pairs(self, context):
        """Test that only v1 and v3 of the three-point disk share an r-matrix."""
        result = run_check("fusion_theorem", context("three_marked_disk_sl2"))
        assert result.verdict == PASS
        assert set(result.details) == {"v1=v3:pi", "v1=v3:action"}

    def test_qs_lambda_independence(self, context):
        result = run_check("qs_lambda_independence", context("annulus1_sl2"))
        assert result.verdict == PASS
        assert result.details["lambda"]["holds"]
        assert result.details["minus_lambda"]["holds"]
        assert "annulus_closed_form_matches" in result.details


class TestSampledChecks:
    """Test checks that evaluate fields at sampled points."""

    @pytest.mark.sampled
    def test_jacobi(self, context):
        result = run_check("jacobi", context("annulus1_sl2"))
        assert result.passed
        assert result.details["pi_pi"]["zero"]

    @pytest.mark.sampled
    def test_quasi(self, context):
        result = run_check("quasi", context("annulus1_sl2"))
        assert result.verdict == SAMPLED_PASS
        assert result.details["equals_q_s"]["holds"]
        assert result.details["round_trip"]["holds"]

    @pytest.mark.sampled
    def test_local_move(self, context):
        result = run_check("local_move_independence", context("three_marked_disk_sl2"))
        assert result.verdict == SAMPLED_PASS
        assert list(result.details) == ["g1.0:g1.1->g2.0:g2.1"]

    @pytest.mark.sampled
    def test_local_move_with_pendant_edge(self, config):
        """Test the local move embedded in a larger skeleton."""
        skeleton = fuse_skeleton(
            disjoint_union(three_marked_disk(), disk2("p", ("x", "v4"))), "v3", "x"
        )
        doc = {
            "schema_version": "1",
            "name": "pendant",
            "algebra": "sl2",
            "graph": to_json(relabel(skeleton, {"v3=x": "v3"})),
            "r_matrices": {"*": "sl2_standard"},
            "checks": ["local_move_independence"],
        }
        ctx = CheckContext(scenario_from_dict(doc), config)
        result = run_check("local_move_independence", ctx)
        assert result.verdict == SAMPLED_PASS
        assert "g1.0:g1.1->g2.0:g2.1" in result.details

    @pytest.mark.sampled
    def test_polyuble(self, context):
        result = run_check("polyuble_multiplicativity", context("sigma2_polyuble_sl2"))
        assert result.verdict == SAMPLED_PASS
        assert result.details["point_pairs"]["samples"] == 8

    @pytest.mark.sampled
    def test_polyuble_with_other_labels(self, config):
        """Test that sigma_n is recognised by structure, not by its ids."""
        doc = {
            "schema_version": "1",
            "name": "relabeled_sigma2",
            "algebra": "sl2",
            "graph": to_json(relabel(sigma_n(2), {"v1": "south", "v2": "north"})),
            "r_matrices": {"south": "sl2_standard", "north": {"conjugate": "sl2_standard"}},
            "checks": ["polyuble_multiplicativity"],
        }
        result = run_check("polyuble_multiplicativity", CheckContext(scenario_from_dict(doc), config))
        assert result.verdict == SAMPLED_PASS
        assert (result.details["source"], result.details["target"]) == ("south", "north")

    @pytest.mark.sampled
    def test_polyuble_with_renamed_half_edges(self, config):
        doc = _polyuble_doc(north_order=["q1", "p1"])
        result = run_check("polyuble_multiplicativity", CheckContext(scenario_from_dict(doc), config))
        assert result.verdict == SAMPLED_PASS

    @pytest.mark.sampled
    def test_gauge_equivariance(self, context):
        assert run_check("gauge_equivariance", context("polygon2_gl2")).verdict == SAMPLED_PASS


class TestNegativeControls:
    """Test that deliberate corruptions are detected."""

    @pytest.mark.sampled
    def test_corrupted_jacobi(self, context):
        """Test that the corrupted r-matrix breaks Jacobi for π as a field."""
        result = run_check("jacobi", context("corrupted_cyb_sl2"))
        assert result.verdict == FAIL
        assert result.details["pi_pi"]["zero"] is False
        assert result.witness > 1e-3

    @pytest.mark.sampled
    def test_zero_cobracket(self, context):
        result = run_check("gauge_poisson", context("zero_cobracket_sl2"))
        assert result.verdict == FAIL
        assert result.details["corruption"] == "zero_cobracket"
        assert result.details["action_defects"]["zero"] is False
        assert result.witness > 1e-3

    @pytest.mark.sampled
    def test_gauge_poisson_without_corruption(self, context):
        assert run_check("gauge_poisson", context("disk2_sl2")).passed

    @pytest.mark.sampled
    def test_skip_lambda_shift(self, context):
        result = run_check("quasi", context("skip_lambda_shift_sl2"))
        assert result.verdict == FAIL
        assert result.details["corruption"] == "skip_lambda_shift"
        assert result.details["equals_q_s"]["holds"] is False
        assert "round_trip" not in result.details
        assert result.witness > 1e-3


class TestVacuousChecks:
    """Test checks with nothing to verify on a graph."""

    def test_local_move_on_disk(self, context, caplog):
        with caplog.at_level(logging.WARNING, logger="frpoisson.checks"):
            result = run_check("local_move_independence", context("disk2_sl2"))
        assert result.verdict == PASS
        assert "vacuous" in result.details
        assert "is vacuous" in caplog.text

    def test_polyuble_on_annulus(self, context):
        result = run_check("polyuble_multiplicativity", context("annulus1_sl2"))
        assert result.verdict == PASS
        assert "sigma_n" in result.details["vacuous"]

    def test_polyuble_needs_reversed_target_order(self, config):
        doc = _polyuble_doc(north_order=["p1", "q1"])
        result = run_check("polyuble_multiplicativity", CheckContext(scenario_from_dict(doc), config))
        assert result.verdict == PASS
        assert "vacuous" in result.details

    def test_polyuble_needs_conjugate_at_target(self, config):
        doc = _polyuble_doc(north_order=["q1", "p1"])
        doc["r_matrices"] = {"*": "sl2_standard"}
        result = run_check("polyuble_multiplicativity", CheckContext(scenario_from_dict(doc), config))
        assert "vacuous" in result.details

    def test_fusion_on_single_vertex(self, context):
        result = run_check("fusion_theorem", context("annulus1_sl2"))
        assert result.details == {"vacuous": "no vertex pair shares an r-matrix"}


if __name__ == "__main__":
    pytest.main([__file__])
