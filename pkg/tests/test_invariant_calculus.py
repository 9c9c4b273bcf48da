#!/usr/bin/env python3
"""Unit tests for r_Γ, π_Γ and the invariant multivector calculus."""

import numpy as np
import pytest

from frpoisson.ciliated_graph import (
    Skeleton,
    annulus_marked,
    disjoint_union,
    disk2,
    fuse_skeleton,
    graph_equal,
    polygon_path,
    random_ciliated_graph,
    sigma_n,
)
from frpoisson.group_numerics import field_is_zero
from frpoisson.invariant_calculus import (
    InvariantMultivector,
    diag_gamma,
    double_algebra,
    fock_rosly,
    fuse_poisson,
    gauge_algebra,
    pi_gamma,
    poisson_action_defect,
    poisson_from_quasi,
    q_s,
    quasi_from_poisson,
    quasi_poisson_defects,
    r_gamma,
    rho_v,
    sigma_gamma,
    sigma_s_gamma,
    symmetric_part_formula,
    vertex_cobracket,
)
from frpoisson.lie_core import AlgebraMismatchError, bracket
from frpoisson.r_matrix import (
    RMatrix,
    builtin_r_matrix,
    cyb_check,
    delta_r,
    is_bialgebra_embedding,
)


def _standard(skeleton, r):
    return {v: r for v in skeleton.graph.vertices}


def _mixed(skeleton, r, partner):
    """Alternate r and its partner over the vertices."""
    return {
        v: (r if k % 2 == 0 else partner) for k, v in enumerate(skeleton.graph.vertices)
    }


def _annulus_pi(carrier, edge, r):
    """π for the one-point annulus: Λ_R + Λ_L + Σ c e_b,R ∧ e_a,L."""
    alg = r.algebra
    expected = carrier.right(edge, r.antisym) + carrier.left(edge, r.antisym)
    for (a, b), c in r.full.items():
        expected = expected + c * (
            carrier.right(edge, alg.basis_vector(b)) ^ carrier.left(edge, alg.basis_vector(a))
        )
    return expected


class TestDoubleAlgebra:
    """Test the algebra of invariant vector fields."""

    def test_right_fields_have_opposite_bracket(self, sl2):
        carrier = double_algebra(sl2, ("a.0:a.1",))
        e, f, h = (sl2.basis_vector(x) for x in "efh")
        edge = "a.0:a.1"
        assert bracket(carrier.left(edge, e), carrier.left(edge, f)) == carrier.left(edge, h)
        assert bracket(carrier.right(edge, e), carrier.right(edge, f)) == -carrier.right(edge, h)
        assert bracket(carrier.left(edge, e), carrier.right(edge, f)).is_zero()

    def test_unknown_edge(self, sl2):
        carrier = double_algebra(sl2, ("a.0:a.1",))
        with pytest.raises(ValueError, match="No edge"):
            carrier.left("b.0:b.1", sl2.basis_vector("e"))

    def test_carrier_mismatch(self, sl2, gl2):
        with pytest.raises(AlgebraMismatchError):
            InvariantMultivector(double_algebra(sl2, ("a.0:a.1",)), gl2.basis_vector("E11"))


class TestSigmaGamma:
    """Test the infinitesimal action of the half-edge gauge group."""

    def test_disk_signs(self, sl2):
        """Test source half-edges map to −x_R and target half-edges to +x_L."""
        g, o = disk2()
        sigma = sigma_gamma(g, o, sl2)
        gauge = sigma.source
        e = sl2.basis_vector("e")
        assert sigma(gauge.embed("a.0", e)) == -sigma.target.right("a.0:a.1", e)
        assert sigma(gauge.embed("a.1", e)) == sigma.target.left("a.0:a.1", e)

    def test_is_lie_morphism(self, sl2, test_skeletons):
        for name, (g, o) in test_skeletons.items():
            assert sigma_gamma(g, o, sl2).is_lie_morphism(), name

    def test_rho_is_lie_morphism(self, sl2, test_skeletons):
        for name, (g, o) in test_skeletons.items():
            assert rho_v(g, o, sl2).is_lie_morphism(), name

    def test_annulus_action(self, sl2):
        """Test ρ(x) = x_L − x_R on the one-point annulus."""
        g, o = annulus_marked(1)
        rho = rho_v(g, o, sl2)
        e = sl2.basis_vector("e")
        edge = "a1.0:a1.1"
        expected = rho.target.left(edge, e) - rho.target.right(edge, e)
        assert rho(rho.source.embed("u1=w1", e)) == expected

    def test_gauge_blocks_follow_cilia(self, sl2):
        g, _ = sigma_n(2)
        gauge = gauge_algebra(g, sl2)
        assert gauge.component_names == ("e1.0", "e2.0", "e2.1", "e1.1")
        assert gauge.block("v2") == (2, 2)


class TestRGamma:
    """Test the ciliated-graph r-matrix."""

    def test_disk_blocks(self, sl2, sl2_r):
        g, o = disk2()
        rg = r_gamma(g, o, _standard(Skeleton(g, o), sl2_r))
        gauge = rg.algebra
        assert rg.sym == gauge.embed("a.0", sl2_r.sym) - gauge.embed("a.1", sl2_r.sym)
        assert rg.antisym == gauge.embed("a.0", sl2_r.antisym) + gauge.embed("a.1", sl2_r.antisym)

    def test_quasitriangular_on_test_graphs(self, sl2_r, sl2_r_conj, test_skeletons):
        for name, skeleton in test_skeletons.items():
            assignment = _mixed(skeleton, sl2_r, sl2_r_conj)
            assert cyb_check(r_gamma(*skeleton, assignment)).holds, name

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", range(20))
    def test_quasitriangular_on_random_graphs(self, sl2_r, sl2_r_conj, seed):
        rng = np.random.default_rng(seed)
        skeleton = random_ciliated_graph(rng)
        assignment = {
            v: (sl2_r if rng.random() < 0.5 else sl2_r_conj) for v in skeleton.graph.vertices
        }
        assert cyb_check(r_gamma(*skeleton, assignment)).holds

    def test_symmetric_part_formula(self, sl2_r, sl2_r_conj, test_skeletons):
        for name, (g, o) in test_skeletons.items():
            rg = r_gamma(g, o, _mixed(Skeleton(g, o), sl2_r, sl2_r_conj))
            assert rg.sym == symmetric_part_formula(g, o, sl2_r.sym), name

    def test_diag_is_bialgebra_embedding(self, sl2, sl2_r, sl2_r_conj, test_skeletons):
        for name, (g, o) in test_skeletons.items():
            assignment = _mixed(Skeleton(g, o), sl2_r, sl2_r_conj)
            rg = r_gamma(g, o, assignment)
            assert is_bialgebra_embedding(
                diag_gamma(g, sl2), vertex_cobracket(g, assignment), delta_r(rg)
            ), name

    def test_missing_vertex(self, sl2_r):
        g, o = disk2()
        with pytest.raises(ValueError, match="without an assigned r-matrix"):
            r_gamma(g, o, {"v1": sl2_r})

    def test_mismatched_symmetric_parts(self, sl2_r):
        g, o = disk2()
        doubled = RMatrix(sl2_r.algebra, sl2_r.sym * 2, sl2_r.antisym)
        with pytest.raises(ValueError, match="mismatched symmetric parts"):
            r_gamma(g, o, {"v1": sl2_r, "v2": doubled})


class TestPiGamma:
    """Test the bivector and its worked examples."""

    def test_disk(self, sl2_r):
        g, o = disk2()
        pi = pi_gamma(g, o, _standard(Skeleton(g, o), sl2_r))
        edge = "a.0:a.1"
        assert pi.body == pi.carrier.right(edge, sl2_r.antisym) + pi.carrier.left(edge, sl2_r.antisym)

    def test_annulus(self, sl2_r):
        skeleton = annulus_marked(1)
        pi = pi_gamma(*skeleton, _standard(skeleton, sl2_r))
        assert pi.body == _annulus_pi(pi.carrier, "a1.0:a1.1", sl2_r)

    def test_abelian_zero(self, abelian2):
        """Test that the zero r-matrix gives a literally zero structure."""
        skeleton = annulus_marked(2)
        space = fock_rosly(skeleton, _standard(skeleton, builtin_r_matrix("abelian2_zero")))
        assert space.pi.is_zero()
        cobracket = vertex_cobracket(skeleton.graph, _standard(skeleton, builtin_r_matrix("abelian2_zero")))
        assert all(d.is_zero() for d in poisson_action_defect(space.pi, space.action, cobracket))

    @pytest.mark.sampled
    def test_jacobi_on_test_graphs(self, sl2_r, sl2_r_conj, test_skeletons, config):
        for name, skeleton in test_skeletons.items():
            pi = pi_gamma(*skeleton, _mixed(skeleton, sl2_r, sl2_r_conj))
            assert field_is_zero(pi.bracket(pi), skeleton, config).zero, name

    @pytest.mark.slow
    @pytest.mark.sampled
    @pytest.mark.parametrize("seed", range(20))
    def test_jacobi_on_random_graphs(self, sl2_r, sl2_r_conj, config, seed):
        rng = np.random.default_rng(seed)
        skeleton = random_ciliated_graph(rng)
        assignment = {
            v: (sl2_r if rng.random() < 0.5 else sl2_r_conj) for v in skeleton.graph.vertices
        }
        pi = pi_gamma(*skeleton, assignment)
        verdict = field_is_zero(pi.bracket(pi), skeleton, config.with_overrides(seed=seed))
        assert verdict.zero, (seed, verdict.witness)

    @pytest.mark.sampled
    def test_disk_jacobi_is_not_literal(self, sl2_r, config):
        """Test that [π, π] vanishes only as a field on the disk."""
        skeleton = disk2()
        pi = pi_gamma(*skeleton, _standard(skeleton, sl2_r))
        jacobi = pi.bracket(pi)
        assert not jacobi.is_zero()
        verdict = field_is_zero(jacobi, skeleton, config)
        assert verdict.zero and not verdict.exact

    @pytest.mark.sampled
    def test_gauge_action_is_poisson(self, sl2_r, sl2_r_conj, test_skeletons, config):
        for name, skeleton in test_skeletons.items():
            assignment = _mixed(skeleton, sl2_r, sl2_r_conj)
            space = fock_rosly(skeleton, assignment)
            defects = poisson_action_defect(
                space.pi, space.action, vertex_cobracket(skeleton.graph, assignment)
            )
            assert field_is_zero(defects, skeleton, config).zero, name

    @pytest.mark.sampled
    def test_symmetric_image_vanishes_as_field(self, sl2_r, config):
        skeleton = annulus_marked(1)
        image = sigma_s_gamma(*skeleton, sl2_r.sym)
        assert not image.is_zero()
        assert field_is_zero(image, skeleton, config).zero

    def test_poisson_action_domain_check(self, sl2_r):
        space = fock_rosly(disk2(), _standard(disk2(), sl2_r))
        other = fock_rosly(annulus_marked(1), _standard(annulus_marked(1), sl2_r))
        with pytest.raises(AlgebraMismatchError):
            poisson_action_defect(space.pi, other.action, delta_r(sl2_r))


class TestFusion:
    """Test fusion of Poisson spaces."""

    def test_fused_disk_is_annulus(self, sl2_r):
        """Test that fusing both ends of a disk yields the annulus exactly."""
        disk = disk2("a1", ("u1", "w1"))
        space = fock_rosly(disk, _standard(disk, sl2_r))
        fused = fuse_poisson(space.pi, space.action, sl2_r, ["u1", "w1"])
        annulus = annulus_marked(1)
        expected = fock_rosly(annulus, _standard(annulus, sl2_r))
        assert fused.pi == expected.pi
        assert fused.action == expected.action

    def test_two_disks_fuse_to_path(self, sl2_r):
        """Test that fusing the ends of two disks gives polygon_path(2) exactly."""
        union = disjoint_union(disk2("e1", ("v0", "v1")), disk2("e2", ("w", "v2")))
        space = fock_rosly(union, _standard(union, sl2_r))
        fused = fuse_poisson(space.pi, space.action, sl2_r, ["v1", "w"])
        skeleton = fuse_skeleton(union, "v1", "w")
        assert fused.pi == fock_rosly(skeleton, _standard(skeleton, sl2_r)).pi
        assert fused.action == rho_v(skeleton.graph, skeleton.orientation, sl2_r.algebra)
        path = polygon_path(2)
        assert graph_equal(skeleton.graph, path.graph, vertex_map={"v1=w": "v1"})
        assert fused.pi == pi_gamma(path.graph, path.orientation, _standard(path, sl2_r))

    def test_single_component_is_identity(self, sl2_r):
        space = fock_rosly(disk2(), _standard(disk2(), sl2_r))
        fused = fuse_poisson(space.pi, space.action, sl2_r, ["v1"])
        assert fused.pi == space.pi
        assert fused.action == space.action

    def test_component_mismatch(self, sl2_r):
        space = fock_rosly(disk2(), _standard(disk2(), sl2_r))
        with pytest.raises(ValueError, match="component mismatch"):
            fuse_poisson(space.pi, space.action, builtin_r_matrix("gl2_standard"), ["v1", "v2"])

    def test_repeated_component(self, sl2_r):
        space = fock_rosly(disk2(), _standard(disk2(), sl2_r))
        with pytest.raises(ValueError, match="must be distinct"):
            fuse_poisson(space.pi, space.action, sl2_r, ["v1", "v1"])


class TestQuasiPoisson:
    """Test the quasi-Poisson bivector Q_s."""

    def test_annulus_formula(self, sl2, sl2_r):
        """Test Q_s = Σ s_ab e_b,R ∧ e_a,L on the one-point annulus."""
        g, o = annulus_marked(1)
        qs = q_s(g, o, sl2_r.sym)
        edge = "a1.0:a1.1"
        expected = None
        for (a, b), c in sl2_r.sym.items():
            term = c * (
                qs.carrier.right(edge, sl2.basis_vector(b)) ^ qs.carrier.left(edge, sl2.basis_vector(a))
            )
            expected = term if expected is None else expected + term
        assert qs.body == expected

    def test_disk_is_zero(self, sl2_r):
        assert q_s(*disk2(), sl2_r.sym).is_zero()

    def test_shift_gives_q_s(self, sl2_r, sl2_r_conj, test_skeletons):
        """Test π − ρ(Σ Λ_v) = Q_s whichever r_v carry the common s."""
        for name, skeleton in test_skeletons.items():
            for assignment in (_standard(skeleton, sl2_r), _mixed(skeleton, sl2_r, sl2_r_conj)):
                space = fock_rosly(skeleton, assignment)
                q = quasi_from_poisson(space.pi, space.action, assignment)
                assert q == q_s(*skeleton, sl2_r.sym), name
                assert poisson_from_quasi(q, space.action, assignment) == space.pi

    def test_abelian_shift_is_trivial(self):
        """Test Q = π when every Λ vanishes."""
        r = builtin_r_matrix("abelian2_standard")
        skeleton = annulus_marked(1)
        assignment = _standard(skeleton, r)
        space = fock_rosly(skeleton, assignment)
        assert not space.pi.is_zero()
        assert quasi_from_poisson(space.pi, space.action, assignment) == space.pi

    def test_wrong_symmetric_partner(self, sl2_r):
        skeleton = disk2()
        space = fock_rosly(skeleton, _standard(skeleton, sl2_r))
        doubled = RMatrix(sl2_r.algebra, sl2_r.sym * 2, sl2_r.antisym)
        with pytest.raises(ValueError, match="wrong symmetric partner"):
            quasi_from_poisson(space.pi, space.action, {"v1": sl2_r, "v2": doubled})

    def test_non_quasitriangular_lambda(self, sl2_r, corrupted_r):
        skeleton = disk2()
        space = fock_rosly(skeleton, _standard(skeleton, sl2_r))
        with pytest.raises(ValueError, match="quasitriangular"):
            quasi_from_poisson(space.pi, space.action, {"v1": sl2_r, "v2": corrupted_r})

    def test_q_s_needs_invariant_s(self, sl2):
        with pytest.raises(ValueError, match="symmetric ad-invariant"):
            q_s(*disk2(), sl2.tensor({("h", "h"): 1}))

    @pytest.mark.sampled
    def test_quasi_poisson_identities(self, sl2_r, test_skeletons, config):
        for name, skeleton in test_skeletons.items():
            space = fock_rosly(skeleton, _standard(skeleton, sl2_r))
            q = q_s(*skeleton, sl2_r.sym)
            defects = quasi_poisson_defects(q, space.action, sl2_r.sym)
            assert field_is_zero(defects.jacobi, skeleton, config).zero, name
            assert field_is_zero(defects.invariance, skeleton, config).zero, name


if __name__ == "__main__":
    pytest.main([__file__])
