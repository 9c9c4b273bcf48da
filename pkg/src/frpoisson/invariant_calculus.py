"""Exact calculus of invariant multivector fields on ``G^{Γ_1}``.

Left- and right-invariant fields on one copy of ``G`` close under the bracket
into ``D = 𝔤_L ⊕ 𝔤_R`` with ``[x_L, y_L] = [x,y]_L``, ``[x_R, y_R] = −[x,y]_R``
and ``[x_L, y_R] = 0``. Multivector fields built from them are therefore
elements of ``∧^k D^{Γ_1}`` and every Schouten bracket stays exact. Whether
such an element vanishes *as a field* is decided pointwise by
:mod:`frpoisson.group_numerics`.
"""

import logging
from collections.abc import Mapping, Sequence
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

from .ciliated_graph import CiliatedGraph, Orientation, Skeleton
from .lie_core import (
    AlgebraMismatchError,
    AltTensor,
    Cobracket,
    DirectSum,
    LieAlgebra,
    LinearMap,
    Tensor,
    ad_invariant,
    phi_s,
    power,
    schouten,
)
from .r_matrix import (
    RMatrix,
    cyb_check,
    delta_r,
    mix_n,
    product_r_matrix,
    r_power,
)

_logger = logging.getLogger(__name__)


class DoubleAlgebra(DirectSum):
    """``D^E``: one ``𝔤_L ⊕ 𝔤_R`` pair per edge, edges in the given order."""

    def __init__(self, base: LieAlgebra, edges: Sequence[str]):
        self.base = base
        self.edges = tuple(edges)
        opposite = base.opposite()
        components, names = [], []
        for edge in self.edges:
            components += [base, opposite]
            names += [f"{edge}|L", f"{edge}|R"]
        super().__init__(components, names, name=f"D({base.name})^{len(self.edges)}")
        self._edge_index = {e: k for k, e in enumerate(self.edges)}

    def _slot(self, edge: str, right: bool) -> int:
        try:
            return 2 * self._edge_index[edge] + int(right)
        except KeyError:
            raise ValueError(f"No edge {edge!r} in {self.name}") from None

    def left_offset(self, edge: str) -> int:
        return self.offsets[self._slot(edge, False)]

    def right_offset(self, edge: str) -> int:
        return self.offsets[self._slot(edge, True)]

    def left(self, edge: str, element):
        """``x_L`` on ``edge``."""
        return self._place(edge, False, element)

    def right(self, edge: str, element):
        """``x_R`` on ``edge``."""
        return self._place(edge, True, element)

    def _place(self, edge: str, right: bool, element):
        if element.algebra != self.base:
            raise AlgebraMismatchError(f"{element.algebra.name} is not {self.base.name}")
        off = self.offsets[self._slot(edge, right)]
        return type(element)._trusted(
            self, element.degree, {tuple(i + off for i in k): v for k, v in element.items()}
        )


@lru_cache(maxsize=64)
def double_algebra(base: LieAlgebra, edges: tuple[str, ...]) -> DoubleAlgebra:
    return DoubleAlgebra(base, edges)


class GaugeAlgebra(DirectSum):
    """``𝔤^{Γ_{1/2}} = ⊕_v 𝔤^{Γ_v}``: one copy per half-edge.

    Half-edges are ordered by vertex (graph order), then by cilium, so every
    ``𝔤^{Γ_v}`` is a contiguous block.
    """

    def __init__(self, base: LieAlgebra, blocks: tuple[tuple[str, tuple[str, ...]], ...]):
        self.base = base
        self.blocks = blocks
        half_edges = [a for _, order in blocks for a in order]
        super().__init__([base] * len(half_edges), half_edges, name=f"{base.name}^Γ½")
        self._block_start = {}
        start = 0
        for v, order in blocks:
            self._block_start[v] = (start, len(order))
            start += len(order)

    def block(self, v: str) -> tuple[int, int]:
        """``(first component, size)`` of the block of vertex ``v``."""
        try:
            return self._block_start[v]
        except KeyError:
            raise ValueError(f"No vertex {v!r} in {self.name}") from None

    def embed_vertex_block(self, v: str, element):
        """Place an element of ``𝔤^{|Γ_v|}`` on the block of ``v``."""
        start, size = self.block(v)
        if element.algebra != power(self.base, size):
            raise AlgebraMismatchError(
                f"Expected an element of {self.base.name}^{size} for vertex {v!r}"
            )
        off = self.offsets[start]
        return type(element)._trusted(
            self, element.degree, {tuple(i + off for i in k): c for k, c in element.items()}
        )


def gauge_algebra(g: CiliatedGraph, base: LieAlgebra) -> GaugeAlgebra:
    return _gauge_algebra(base, tuple((v, g.orders[v]) for v in g.vertices))


@lru_cache(maxsize=64)
def _gauge_algebra(base, blocks) -> GaugeAlgebra:
    return GaugeAlgebra(base, blocks)


@lru_cache(maxsize=64)
def _vertex_algebra(base: LieAlgebra, vertices: tuple[str, ...]) -> DirectSum:
    return DirectSum([base] * len(vertices), vertices)


def vertex_algebra(g: CiliatedGraph, base: LieAlgebra) -> DirectSum:
    """``𝔤^V`` with one component per vertex, named by vertex id."""
    return _vertex_algebra(base, g.vertices)


class InvariantMultivector:
    """An element of ``∧^k D^{Γ_1}``, read as an invariant multivector field.

    Symmetric tensors such as ``σ_Γ(s_Γ)`` are carried with a :class:`Tensor`
    body; everything else uses an :class:`AltTensor`.
    """

    __slots__ = ("carrier", "body")

    def __init__(self, carrier: DoubleAlgebra, body: AltTensor | Tensor):
        if body.algebra != carrier:
            raise AlgebraMismatchError("Body does not live over the carrier")
        self.carrier = carrier
        self.body = body

    @property
    def degree(self) -> int:
        return self.body.degree

    def _other(self, other) -> "InvariantMultivector":
        if not isinstance(other, InvariantMultivector):
            raise TypeError("Expected an InvariantMultivector")
        if other.carrier != self.carrier:
            raise AlgebraMismatchError("Carrier mismatch")
        return other

    def __add__(self, other):
        return InvariantMultivector(self.carrier, self.body + self._other(other).body)

    def __sub__(self, other):
        return InvariantMultivector(self.carrier, self.body - self._other(other).body)

    def __neg__(self):
        return InvariantMultivector(self.carrier, -self.body)

    def __mul__(self, scalar):
        return InvariantMultivector(self.carrier, self.body * scalar)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, InvariantMultivector):
            return NotImplemented
        return self.carrier == other.carrier and self.body == other.body

    __hash__ = None

    def __repr__(self):
        return f"InvariantMultivector({self.body!r})"

    def is_zero(self) -> bool:
        return self.body.is_zero()

    def bracket(self, other: "InvariantMultivector") -> "InvariantMultivector":
        """Schouten bracket of invariant multivector fields."""
        return InvariantMultivector(self.carrier, schouten(self.body, self._other(other).body))


def _double_for(g: CiliatedGraph, base: LieAlgebra) -> DoubleAlgebra:
    return double_algebra(base, g.edges)


def sigma_gamma(g: CiliatedGraph, o: Orientation, base: LieAlgebra) -> LinearMap:
    """Derivative of ``σ_Γ(g, h)_γ = h_{α_γ}^{-1} g_γ h_{α̌_γ}`` at the identity.

    ``x`` at a source half-edge maps to ``−x_R``; ``x`` at a target half-edge
    maps to ``+x_L``.
    """
    source = gauge_algebra(g, base)
    target = _double_for(g, base)
    cols = {}
    for c, alpha in enumerate(source.component_names):
        edge = g.edge_of(alpha)
        off = source.offsets[c]
        if o.is_source(alpha):
            r_off = target.right_offset(edge)
            for a in range(base.dim):
                cols[off + a] = {r_off + a: Fraction(-1)}
        else:
            l_off = target.left_offset(edge)
            for a in range(base.dim):
                cols[off + a] = {l_off + a: Fraction(1)}
    return LinearMap(source, target, cols)


def _assignment(g: CiliatedGraph, assignment: Mapping[str, RMatrix]) -> list[RMatrix]:
    missing = [v for v in g.vertices if v not in assignment]
    if missing:
        raise ValueError(f"Vertices without an assigned r-matrix: {missing}")
    rs = [assignment[v] for v in g.vertices]
    base = rs[0].algebra
    for v, r in zip(g.vertices, rs, strict=True):
        if r.algebra != base:
            raise AlgebraMismatchError(
                f"r-matrix at {v!r} lives over {r.algebra.name}, not {base.name}"
            )
        if r.sym != rs[0].sym:
            raise ValueError(
                f"mismatched symmetric parts: r-matrix at {v!r} does not share s "
                f"with the one at {g.vertices[0]!r}"
            )
    return rs


def r_gamma(g: CiliatedGraph, o: Orientation, assignment: Mapping[str, RMatrix]) -> RMatrix:
    """``r_Γ = Σ_v (r_v^{(ε_v, Γ_v)})_v`` on the gauge algebra."""
    rs = _assignment(g, assignment)
    gauge = gauge_algebra(g, rs[0].algebra)
    sym = Tensor.zero(gauge, 2)
    antisym = AltTensor.zero(gauge, 2)
    for v, r in zip(g.vertices, rs, strict=True):
        eps = tuple(o.sign(alpha) for alpha in g.orders[v])
        if not eps:
            continue
        block = r_power(r, eps)
        sym = sym + gauge.embed_vertex_block(v, block.sym)
        antisym = antisym + gauge.embed_vertex_block(v, block.antisym)
    return RMatrix(gauge, sym, antisym, name="r_Gamma", validate=False)


def symmetric_part_formula(g: CiliatedGraph, o: Orientation, s: Tensor) -> Tensor:
    """``s_Γ = Σ_γ (s)_{α_γ} − (s)_{α̌_γ}``."""
    gauge = gauge_algebra(g, s.algebra)
    total = Tensor.zero(gauge, 2)
    for edge in g.edges:
        total = total + gauge.embed(o.source(edge), s) - gauge.embed(o.target(edge), s)
    return total


def pi_gamma(
    g: CiliatedGraph, o: Orientation, assignment: Mapping[str, RMatrix]
) -> InvariantMultivector:
    """The Fock–Rosly bivector, represented by ``σ_Γ(Λ_Γ)``."""
    rg = r_gamma(g, o, assignment)
    sigma = sigma_gamma(g, o, rg.algebra.base)
    return InvariantMultivector(sigma.target, sigma(rg.antisym))


def sigma_s_gamma(g: CiliatedGraph, o: Orientation, s: Tensor) -> InvariantMultivector:
    """``σ_Γ(s_Γ)``: zero as a field, not as an element of ``D^{⊗2}``."""
    sigma = sigma_gamma(g, o, s.algebra)
    return InvariantMultivector(sigma.target, sigma(symmetric_part_formula(g, o, s)))


def diag_gamma(g: CiliatedGraph, base: LieAlgebra) -> LinearMap:
    """``x`` at ``v`` ↦ ``Σ_{α∈Γ_v} (x)_α``."""
    source = vertex_algebra(g, base)
    target = gauge_algebra(g, base)
    cols = {}
    for c, v in enumerate(g.vertices):
        for a in range(base.dim):
            cols[source.offsets[c] + a] = {
                target.offset(alpha) + a: Fraction(1) for alpha in g.orders[v]
            }
    return LinearMap(source, target, cols)


def rho_v(g: CiliatedGraph, o: Orientation, base: LieAlgebra) -> LinearMap:
    """The infinitesimal gauge action ``ρ_V = σ_Γ ∘ diag_Γ``."""
    return sigma_gamma(g, o, base).compose(diag_gamma(g, base))


def vertex_r_matrix(g: CiliatedGraph, assignment: Mapping[str, RMatrix]) -> RMatrix:
    """``r = Σ_v (r_v)_v`` on ``𝔤^V``."""
    return product_r_matrix(_assignment(g, assignment), names=g.vertices)


def vertex_cobracket(g: CiliatedGraph, assignment: Mapping[str, RMatrix]) -> Cobracket:
    return delta_r(vertex_r_matrix(g, assignment))


def action_field(action: LinearMap, element) -> InvariantMultivector:
    """``ρ`` applied slot-wise to an element of the acting algebra."""
    return InvariantMultivector(action.target, action(element))


def poisson_action_defect(
    pi: InvariantMultivector, action: LinearMap, cobracket: Cobracket
) -> list[InvariantMultivector]:
    """``[ρ(x), π] − ρ(δ(x))`` for every basis ``x`` of the acting algebra."""
    if action.target != pi.carrier:
        raise AlgebraMismatchError("Action does not act on the carrier of pi")
    if cobracket.algebra != action.source:
        raise AlgebraMismatchError("Cobracket does not live over the acting algebra")
    defects = []
    for x in range(action.source.dim):
        field = action_field(action, action.source.basis_vector(x))
        defects.append(field.bracket(pi) - action_field(action, cobracket.images[x]))
    return defects


class PoissonSpace(NamedTuple):
    pi: InvariantMultivector
    action: LinearMap


def fuse_poisson(
    pi: InvariantMultivector, action: LinearMap, r: RMatrix, components: Sequence
) -> PoissonSpace:
    """Fuse the designated action components at ``(𝔤, r)^n``.

    ``π′ = π − ρ(Mix^n(r))`` on the designated components and
    ``ρ′ = ρ ∘ diag_n`` on them; other components are untouched. The merged
    component takes the place of the first one and joins the names with ``=``.
    """
    source = action.source
    if not isinstance(source, DirectSum):
        raise ValueError("fuse_poisson needs an action of a direct sum")
    if action.target != pi.carrier:
        raise AlgebraMismatchError("Action does not act on the carrier of pi")
    idx = [source.component_index(c) for c in components]
    if not idx:
        raise ValueError("fuse_poisson needs at least one component")
    if len(set(idx)) != len(idx):
        raise ValueError("fuse_poisson components must be distinct")
    for c in idx:
        if source.components[c] != r.algebra:
            raise ValueError(
                f"component mismatch: {source.component_names[c]!r} is "
                f"{source.components[c].name}, r lives over {r.algebra.name}"
            )
    n = len(idx)
    if n == 1:
        return PoissonSpace(pi, action)
    block = power(r.algebra, n)
    placement = LinearMap(
        block,
        source,
        {
            block.offsets[j] + a: {source.offsets[c] + a: Fraction(1)}
            for j, c in enumerate(idx)
            for a in range(r.algebra.dim)
        },
    )
    mix = placement(mix_n(r, n))
    fused_pi = pi - action_field(action, mix)

    merged = "=".join(source.component_names[c] for c in idx)
    components_out, names_out, columns = [], [], []
    for c, comp in enumerate(source.components):
        if c in idx[1:]:
            continue
        components_out.append(comp)
        if c == idx[0]:
            names_out.append(merged)
            columns.append(
                [
                    _merge_columns(action.column(source.offsets[j] + a) for j in idx)
                    for a in range(comp.dim)
                ]
            )
        else:
            names_out.append(source.component_names[c])
            columns.append(
                [dict(action.column(source.offsets[c] + a)) for a in range(comp.dim)]
            )
    new_source = DirectSum(components_out, names_out)
    cols = {}
    for c, comp_columns in enumerate(columns):
        for a, col in enumerate(comp_columns):
            cols[new_source.offsets[c] + a] = col
    _logger.debug("fuse_poisson: merged %s into %r", [source.component_names[c] for c in idx], merged)
    return PoissonSpace(fused_pi, LinearMap(new_source, action.target, cols))


def _merge_columns(columns) -> dict:
    out: dict[int, Fraction] = {}
    for col in columns:
        for j, c in col.items():
            out[j] = out.get(j, 0) + c
    return out


def _lambda_block(action: LinearMap, r_matrices) -> tuple[AltTensor, Tensor]:
    """``Σ_c (Λ_c)_c`` on the acting algebra and the common ``s``."""
    source = action.source
    if not isinstance(source, DirectSum):
        raise ValueError("The acting algebra must be a direct sum")
    if isinstance(r_matrices, Mapping):
        r_matrices = [r_matrices[name] for name in source.component_names]
    r_matrices = list(r_matrices)
    if len(r_matrices) != len(source.components):
        raise ValueError(
            f"Expected {len(source.components)} r-matrices, got {len(r_matrices)}"
        )
    s = r_matrices[0].sym
    total = AltTensor.zero(source, 2)
    for c, r in enumerate(r_matrices):
        if r.algebra != source.components[c]:
            raise AlgebraMismatchError(
                f"r-matrix for {source.component_names[c]!r} lives over the wrong algebra"
            )
        if r.sym != s:
            raise ValueError(
                f"wrong symmetric partner: Λ for {source.component_names[c]!r} does "
                "not come from an r-matrix with the common s"
            )
        if not cyb_check(r).holds:
            raise ValueError(
                f"Λ for {source.component_names[c]!r} does not come from a "
                "quasitriangular r-matrix"
            )
        total = total + source.embed(c, r.antisym)
    return total, s


def quasi_from_poisson(
    pi: InvariantMultivector, action: LinearMap, r_matrices
) -> InvariantMultivector:
    """``Q = π − ρ(Σ_v (Λ_v)_v)``.

    ``r_matrices`` lists the quasitriangular ``r_v`` (one per component of the
    acting algebra, or a mapping by component name); only their
    antisymmetric parts enter.
    """
    block, _ = _lambda_block(action, r_matrices)
    return pi - action_field(action, block)


def poisson_from_quasi(
    q: InvariantMultivector, action: LinearMap, r_matrices
) -> InvariantMultivector:
    """Inverse of :func:`quasi_from_poisson`."""
    block, _ = _lambda_block(action, r_matrices)
    return q + action_field(action, block)


def q_s(g: CiliatedGraph, o: Orientation, s: Tensor) -> InvariantMultivector:
    """``Q_s = −σ_Γ(Σ_v (Mix^{Γ_v}(s))_v)``, which depends only on ``s``."""
    if not s.is_symmetric() or not ad_invariant(s):
        raise ValueError("q_s needs a symmetric ad-invariant s")
    gauge = gauge_algebra(g, s.algebra)
    total = AltTensor.zero(gauge, 2)
    for v in g.vertices:
        n = len(g.orders[v])
        if n:
            total = total + gauge.embed_vertex_block(v, mix_n(s, n))
    sigma = sigma_gamma(g, o, s.algebra)
    return InvariantMultivector(sigma.target, -sigma(total))


class QuasiPoissonDefects(NamedTuple):
    """``[Q,Q] − ρ(φ)`` and ``[ρ(x), Q]`` per basis ``x``; all field-zero."""

    jacobi: InvariantMultivector
    invariance: list[InvariantMultivector]


def quasi_poisson_defects(
    q: InvariantMultivector, action: LinearMap, s: Tensor
) -> QuasiPoissonDefects:
    source = action.source
    if not isinstance(source, DirectSum):
        raise ValueError("The acting algebra must be a direct sum")
    phi = phi_s(s)
    block = AltTensor.zero(source, 3)
    for c in range(len(source.components)):
        block = block + source.embed(c, phi)
    jacobi = q.bracket(q) - action_field(action, block)
    invariance = [
        action_field(action, source.basis_vector(x)).bracket(q)
        for x in range(source.dim)
    ]
    return QuasiPoissonDefects(jacobi, invariance)


def fock_rosly(skeleton: Skeleton, assignment: Mapping[str, RMatrix]) -> PoissonSpace:
    """``(π_Γ, ρ_V)`` for a skeleton and a vertex assignment of r-matrices."""
    g, o = skeleton
    pi = pi_gamma(g, o, assignment)
    return PoissonSpace(pi, rho_v(g, o, pi.carrier.base))
