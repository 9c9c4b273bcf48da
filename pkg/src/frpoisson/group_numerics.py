"""Float evaluation of invariant multivector fields on ``G^{Γ_1}``.

Tangent spaces are left-trivialized: an ``L``-slot element ``a`` on edge ``γ``
evaluates to ``a`` and an ``R``-slot element ``b`` to ``Ad_{g_γ^{-1}} b``.
``Ad`` is computed in the representation and re-expanded in the algebra basis
through the pseudo-inverse of the flattened representation matrices.
"""

import logging
import os
import string
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, fields, replace
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .ciliated_graph import (
    LocalMoveResult,
    Skeleton,
    reverse_edge,
)
from .invariant_calculus import InvariantMultivector
from .lie_core import AltTensor, LieAlgebra, Tensor, power

_logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NumericsConfig:
    """Tolerances and sampling parameters of pointwise verdicts.

    Values can be overridden with ``FRPOISSON_TOL``, ``FRPOISSON_SAMPLES``,
    ``FRPOISSON_SEED``, ``FRPOISSON_SCALE``, ``FRPOISSON_CONDITION_CAP`` and
    ``FRPOISSON_INVERTIBILITY_CAP``.

    ``condition_cap`` bounds the condition number of sampled matrices; draws
    above it are redrawn. ``invertibility_cap`` bounds every matrix a point
    may hold, including products and gauge images of sampled ones.
    """

    tol: float = 1e-8
    samples: int = 8
    seed: int = 0
    scale: float = 0.5
    condition_cap: float = 1e6
    invertibility_cap: float = 1e12
    residual_tol: float = 1e-9
    max_resamples: int = 50

    _env = {"tol": "FRPOISSON_TOL", "samples": "FRPOISSON_SAMPLES",
            "seed": "FRPOISSON_SEED", "scale": "FRPOISSON_SCALE",
            "condition_cap": "FRPOISSON_CONDITION_CAP",
            "invertibility_cap": "FRPOISSON_INVERTIBILITY_CAP"}

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.scale < 0:
            raise ValueError(f"scale must be non-negative, got {self.scale}")
        if not 1 <= self.condition_cap <= self.invertibility_cap:
            raise ValueError(
                "condition caps must satisfy 1 <= condition_cap <= invertibility_cap, "
                f"got {self.condition_cap:g} and {self.invertibility_cap:g}"
            )

    @classmethod
    def from_env(cls, **overrides) -> "NumericsConfig":
        """Defaults, then environment variables, then non-``None`` overrides."""
        values = {}
        types = {f.name: f.type for f in fields(cls)}
        for name, var in cls._env.items():
            raw = os.getenv(var)
            if raw is None:
                continue
            cast = int if types[name] in (int, "int") else float
            try:
                values[name] = cast(raw)
            except ValueError:
                raise ValueError(f"Invalid value for {var}: {raw!r}") from None
            _logger.debug("NumericsConfig: %s=%s from %s", name, values[name], var)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def with_overrides(self, **overrides) -> "NumericsConfig":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


class AdjointKit:
    """Adjoint matrices of a represented algebra in its basis coordinates."""

    def __init__(self, algebra: LieAlgebra, residual_tol: float = 1e-9):
        if algebra.rep is None:
            raise ValueError(f"{algebra.name} has no representation")
        self.algebra = algebra
        self.basis = np.stack(algebra.rep)
        self.size = self.basis.shape[1]
        self.flat = self.basis.reshape(algebra.dim, -1).T
        self.pinv = np.linalg.pinv(self.flat)
        self.residual_tol = residual_tol

    def coordinates(self, matrices: np.ndarray) -> np.ndarray:
        """Basis coordinates of a stack of matrices, columns per matrix."""
        flat = matrices.reshape(matrices.shape[0], -1).T
        coords = self.pinv @ flat
        residual = np.abs(self.flat @ coords - flat).max() if flat.size else 0.0
        if residual > self.residual_tol * max(1.0, float(np.abs(flat).max())):
            raise ValueError(
                f"re-expansion residual {residual:.3e} in {self.algebra.name} exceeds "
                f"{self.residual_tol:.1e}; Ad does not preserve the algebra"
            )
        return coords

    def adjoint(self, g: np.ndarray, g_inv: np.ndarray | None = None) -> np.ndarray:
        """The matrix of ``Ad_g`` in basis coordinates."""
        if g_inv is None:
            g_inv = np.linalg.inv(g)
        return self.coordinates(g @ self.basis @ g_inv)

    def element(self, coeffs: np.ndarray) -> np.ndarray:
        return np.tensordot(coeffs, self.basis, axes=1)


@lru_cache(maxsize=32)
def adjoint_kit(algebra: LieAlgebra, residual_tol: float = 1e-9) -> AdjointKit:
    return AdjointKit(algebra, residual_tol)


@dataclass(frozen=True, eq=False)
class GroupPoint:
    """A point of ``G^{Γ_1}``: one invertible matrix per edge."""

    skeleton: Skeleton
    algebra: LieAlgebra
    matrices: Mapping[str, np.ndarray]
    invertibility_cap: float = NumericsConfig.invertibility_cap
    _inverses: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.algebra.rep is None:
            raise ValueError(f"{self.algebra.name} has no representation")
        size = self.algebra.rep[0].shape[0]
        edges = set(self.skeleton.graph.edges)
        if set(self.matrices) != edges:
            raise ValueError(
                f"Point must assign a matrix to exactly the edges {sorted(edges)}"
            )
        for edge, m in self.matrices.items():
            if m.shape != (size, size):
                raise ValueError(
                    f"Matrix on {edge!r} has shape {m.shape}, expected {(size, size)}"
                )
            if not np.all(np.isfinite(m)) or np.linalg.cond(m) > self.invertibility_cap:
                raise ValueError(
                    f"Matrix on {edge!r} is not invertible "
                    f"(condition number above {self.invertibility_cap:g})"
                )

    @property
    def graph(self):
        return self.skeleton.graph

    @property
    def orientation(self):
        return self.skeleton.orientation

    @property
    def edges(self) -> tuple[str, ...]:
        return self.skeleton.graph.edges

    def __getitem__(self, edge: str) -> np.ndarray:
        try:
            return self.matrices[edge]
        except KeyError:
            raise ValueError(f"No edge {edge!r} at this point") from None

    def inverse(self, edge: str) -> np.ndarray:
        if edge not in self._inverses:
            self._inverses[edge] = np.linalg.inv(self[edge])
        return self._inverses[edge]

    def with_matrices(self, skeleton: Skeleton, matrices: Mapping[str, np.ndarray]):
        return GroupPoint(skeleton, self.algebra, dict(matrices), self.invertibility_cap)


def identity_point(skeleton: Skeleton, algebra: LieAlgebra) -> GroupPoint:
    size = algebra.rep[0].shape[0] if algebra.rep else 0
    return GroupPoint(skeleton, algebra, {e: np.eye(size) for e in skeleton.graph.edges})


def random_point(
    skeleton: Skeleton,
    algebra: LieAlgebra,
    seed=None,
    scale: float = 0.5,
    config: NumericsConfig | None = None,
) -> GroupPoint:
    """``g = exp(X₁)·exp(X₂)`` per edge, coefficients uniform in ``[−scale, scale]``.

    Draws whose condition number exceeds the configured cap are redrawn.
    """
    if algebra.rep is None:
        raise ValueError(f"{algebra.name} has no representation; cannot sample points")
    config = config or NumericsConfig()
    rng = np.random.default_rng(seed)
    kit = adjoint_kit(algebra, config.residual_tol)
    matrices = {}
    for edge in skeleton.graph.edges:
        for attempt in range(config.max_resamples):
            x1, x2 = rng.uniform(-scale, scale, size=(2, algebra.dim))
            g = expm(kit.element(x1)) @ expm(kit.element(x2))
            if np.linalg.cond(g) <= config.condition_cap:
                break
            _logger.debug(
                "random_point: resampling %s (attempt %d, cond %.3e)",
                edge, attempt + 1, np.linalg.cond(g),
            )
        else:
            raise RuntimeError(
                f"Could not draw a matrix with condition number <= "
                f"{config.condition_cap:g} on {edge!r} after {config.max_resamples} attempts"
            )
        matrices[edge] = g
    return GroupPoint(skeleton, algebra, matrices, config.invertibility_cap)


def sample_points(
    skeleton: Skeleton, algebra: LieAlgebra, config: NumericsConfig, seed=None
) -> list[GroupPoint]:
    """``config.samples`` points with per-point seeds split from the master seed."""
    master = np.random.SeedSequence(config.seed if seed is None else seed)
    return [
        random_point(skeleton, algebra, child, config.scale, config)
        for child in master.spawn(config.samples)
    ]


# --------------------------------------------------------------------------
# Evaluation
# --------------------------------------------------------------------------


def _block(p: GroupPoint, edge: str) -> slice:
    d = p.algebra.dim
    k = p.edges.index(edge)
    return slice(k * d, (k + 1) * d)


def evaluation_matrix(carrier, p: GroupPoint, config: NumericsConfig | None = None) -> np.ndarray:
    """The ``N × dim D`` matrix taking carrier coordinates to tangent coordinates."""
    if carrier.base != p.algebra or carrier.edges != p.edges:
        raise ValueError("Multivector and point live over different graphs or algebras")
    config = config or NumericsConfig()
    kit = adjoint_kit(p.algebra, config.residual_tol)
    d = p.algebra.dim
    m = np.zeros((len(p.edges) * d, carrier.dim))
    for edge in p.edges:
        rows = _block(p, edge)
        left = carrier.left_offset(edge)
        right = carrier.right_offset(edge)
        m[rows, left : left + d] = np.eye(d)
        m[rows, right : right + d] = kit.adjoint(p.inverse(edge), p[edge])
    return m


def dense(body: AltTensor | Tensor) -> np.ndarray:
    """Dense array of a sparse (alternating) tensor."""
    k, n = body.degree, body.algebra.dim
    out = np.zeros((n,) * k)
    if isinstance(body, AltTensor):
        tensor = body.to_tensor()
    else:
        tensor = body
    for key, value in tensor.items():
        out[key] = float(value)
    return out


def transform(array: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """Apply ``matrix`` in every slot of ``array``."""
    k = array.ndim
    if k == 0:
        return array
    src, dst = string.ascii_lowercase[:k], string.ascii_lowercase[k : 2 * k]
    spec = ",".join(f"{dst[t]}{src[t]}" for t in range(k)) + f",{src}->{dst}"
    return np.einsum(spec, *([matrix] * k), array, optimize=True)


def evaluate(
    mv: InvariantMultivector, p: GroupPoint, config: NumericsConfig | None = None
) -> np.ndarray:
    """The field ``mv`` at ``p`` as a dense array over ``𝔤^{Γ_1}`` coordinates."""
    return transform(dense(mv.body), evaluation_matrix(mv.carrier, p, config))


def as_alt_tensor(array: np.ndarray, p: GroupPoint, tol: float = 0.0) -> AltTensor:
    """Read an evaluated alternating array back as a float :class:`AltTensor`."""
    algebra = power(p.algebra, len(p.edges))
    k = array.ndim
    coeffs = {}
    for index in zip(*np.nonzero(np.abs(array) > tol), strict=True):
        if list(index) == sorted(set(index)) and len(set(index)) == k:
            coeffs[tuple(int(i) for i in index)] = float(array[index])
    return AltTensor(algebra, k, coeffs)


@dataclass(frozen=True)
class FieldVerdict:
    """Outcome of a pointwise field-zero test."""

    zero: bool
    witness: float
    threshold: float
    samples: int
    exact: bool = False

    def __bool__(self):
        return self.zero


def field_is_zero(
    mvs: InvariantMultivector | Sequence[InvariantMultivector],
    skeleton: Skeleton,
    config: NumericsConfig | None = None,
    points: Sequence[GroupPoint] | None = None,
) -> FieldVerdict:
    """Decide whether multivectors vanish as fields by sampling points.

    A literal zero passes immediately (``exact=True``). Otherwise the verdict
    is ``max |coefficient| < tol·max(1, largest exact coefficient)`` over the
    sampled points, and the witness is that maximum.
    """
    config = config or NumericsConfig()
    if isinstance(mvs, InvariantMultivector):
        mvs = [mvs]
    mvs = [mv for mv in mvs if not mv.is_zero()]
    if not mvs:
        return FieldVerdict(True, 0.0, config.tol, 0, exact=True)
    scale = max(1.0, max(mv.body.max_abs() for mv in mvs))
    threshold = config.tol * scale
    carrier = mvs[0].carrier
    if points is None:
        points = sample_points(skeleton, carrier.base, config)
    witness = 0.0
    for p in points:
        m = evaluation_matrix(carrier, p, config)
        for mv in mvs:
            value = transform(dense(mv.body), m)
            witness = max(witness, float(np.abs(value).max()) if value.size else 0.0)
    zero = witness < threshold
    _logger.debug(
        "field_is_zero: witness=%.3e threshold=%.3e over %d point(s)",
        witness, threshold, len(points),
    )
    return FieldVerdict(zero, witness, threshold, len(points))


# --------------------------------------------------------------------------
# Words, gauge transformations and pushforwards
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PathWord:
    """A word in oriented edges; ``forward`` steps go from source to target."""

    start: str
    steps: tuple[tuple[str, bool], ...] = ()

    def endpoints(self, skeleton: Skeleton) -> tuple[str, str]:
        """``(θ(w), τ(w))``; raise if the word is not composable."""
        g, o = skeleton
        g.order_at(self.start)
        here = self.start
        for edge, forward in self.steps:
            tail, head = o.source_vertex(edge), o.target_vertex(edge)
            if not forward:
                tail, head = head, tail
            if here != tail:
                raise ValueError(
                    f"Word is not composable: step on {edge!r} starts at {tail!r}, "
                    f"not {here!r}"
                )
            here = head
        return self.start, here


def random_word(skeleton: Skeleton, rng: np.random.Generator, max_length: int = 4) -> PathWord:
    """A random walk along half-edges of length at most ``max_length``."""
    g, o = skeleton
    here = g.vertices[int(rng.integers(len(g.vertices)))]
    start = here
    steps = []
    for _ in range(int(rng.integers(0, max_length + 1))):
        order = g.orders[here]
        if not order:
            break
        alpha = order[int(rng.integers(len(order)))]
        edge = g.edge_of(alpha)
        steps.append((edge, o.is_source(alpha)))
        here = g.vertex_of(g.opposite(alpha))
    return PathWord(start, tuple(steps))


def _word_factors(p: GroupPoint, w: PathWord) -> list[np.ndarray]:
    w.endpoints(p.skeleton)
    return [p[edge] if forward else p.inverse(edge) for edge, forward in w.steps]


def ev_word(p: GroupPoint, w: PathWord) -> np.ndarray:
    """Holonomy of the word: edge matrices in order, inverses on backward steps."""
    size = p.algebra.rep[0].shape[0]
    out = np.eye(size)
    for m in _word_factors(p, w):
        out = out @ m
    return out


def act_half_edges(p: GroupPoint, h: Mapping[str, np.ndarray]) -> GroupPoint:
    """``σ_Γ(g, h)_γ = h_{α_γ}^{-1} g_γ h_{α̌_γ}`` for ``h`` on half-edges."""
    o = p.orientation
    matrices = {}
    for edge in p.edges:
        hs, ht = h[o.source(edge)], h[o.target(edge)]
        matrices[edge] = np.linalg.solve(hs, p[edge]) @ ht
    return p.with_matrices(p.skeleton, matrices)


def gauge_transform(p: GroupPoint, h: Mapping[str, np.ndarray]) -> GroupPoint:
    """Gauge transformation by ``h`` on vertices: ``g_γ ↦ h_{θ(γ)}^{-1} g_γ h_{τ(γ)}``."""
    g = p.graph
    missing = [v for v in g.vertices if v not in h]
    if missing:
        raise ValueError(f"Gauge element missing at vertices {missing}")
    return act_half_edges(p, {a: h[g.vertex_of(a)] for a in g.half_edges})


@dataclass(frozen=True)
class ReverseEdge:
    edge: str


def move_differential(p: GroupPoint, move: ReverseEdge | LocalMoveResult, config=None):
    """Image point and left-trivialized differential of a skeleton change."""
    config = config or NumericsConfig()
    kit = adjoint_kit(p.algebra, config.residual_tol)
    d = p.algebra.dim
    jac = np.eye(len(p.edges) * d)
    matrices = dict(p.matrices)
    if isinstance(move, ReverseEdge):
        edge = move.edge
        block = _block(p, edge)
        jac[block, block] = -kit.adjoint(p[edge], p.inverse(edge))
        matrices[edge] = p.inverse(edge)
        skeleton = Skeleton(p.graph, reverse_edge(p.orientation, edge))
    elif isinstance(move, LocalMoveResult):
        moved, along = move.pivot.moved, move.pivot.along
        b1, b2 = _block(p, moved), _block(p, along)
        g2, g2_inv = p[along], p.inverse(along)
        if move.pivot.inverse:
            ad_g2 = kit.adjoint(g2, g2_inv)
            jac[b1, b1] = ad_g2
            jac[b1, b2] = -ad_g2
            matrices[moved] = p[moved] @ g2_inv
        else:
            jac[b1, b1] = kit.adjoint(g2_inv, g2)
            jac[b1, b2] = np.eye(d)
            matrices[moved] = p[moved] @ g2
        skeleton = Skeleton(move.graph, move.orientation)
    else:
        raise ValueError(f"Unsupported move {move!r}")
    return p.with_matrices(skeleton, matrices), jac


def pushforward(p: GroupPoint, evaluated: np.ndarray, move, config=None):
    """Push an evaluated tensor at ``p`` through a skeleton change.

    Returns ``(image point, pushed tensor)``.
    """
    image, jac = move_differential(p, move, config)
    return image, transform(evaluated, jac)


# --------------------------------------------------------------------------
# Functions of holonomies
# --------------------------------------------------------------------------


def _step_gradients(p: GroupPoint, w: PathWord, contract) -> np.ndarray:
    """Left-trivialized differential of ``contract(ev_w)`` as an N-vector."""
    factors = _word_factors(p, w)
    basis = adjoint_kit(p.algebra).basis
    size = basis.shape[1]
    grad = np.zeros(len(p.edges) * p.algebra.dim)
    prefixes = [np.eye(size)]
    for m in factors:
        prefixes.append(prefixes[-1] @ m)
    suffix = np.eye(size)
    for s in range(len(factors) - 1, -1, -1):
        edge, forward = w.steps[s]
        if forward:
            tangents = p[edge] @ basis
        else:
            tangents = -basis @ p.inverse(edge)
        grad[_block(p, edge)] += contract(prefixes[s], tangents, suffix)
        suffix = factors[s] @ suffix
    return grad


def word_gradient(p: GroupPoint, w: PathWord, i: int, j: int) -> np.ndarray:
    """Differential of ``g ↦ ev_w(g)[i, j]`` in left-trivialized coordinates."""
    size = p.algebra.rep[0].shape[0]
    if not (0 <= i < size and 0 <= j < size):
        raise ValueError(f"Matrix index ({i}, {j}) out of range for size {size}")
    return _step_gradients(
        p, w, lambda pre, tangents, suf: np.einsum("p,apq,q->a", pre[i], tangents, suf[:, j])
    )


def trace_gradient(p: GroupPoint, w: PathWord) -> np.ndarray:
    """Differential of ``g ↦ tr ev_w(g)``."""
    return _step_gradients(
        p, w, lambda pre, tangents, suf: np.einsum("apq,qp->a", tangents, suf @ pre)
    )


def poisson_bracket(
    pi: InvariantMultivector, p: GroupPoint, df1: np.ndarray, df2: np.ndarray, config=None
) -> float:
    """``π(df1, df2)`` at ``p``."""
    if pi.degree != 2:
        raise ValueError("poisson_bracket needs a bivector")
    return float(df1 @ evaluate(pi, p, config) @ df2)


def poisson_bracket_entries(pi, p, w1, ij, w2, kl, config=None) -> float:
    """``{ev_{w1}[i,j], ev_{w2}[k,l]}`` at ``p``."""
    return poisson_bracket(
        pi, p, word_gradient(p, w1, *ij), word_gradient(p, w2, *kl), config
    )


# --------------------------------------------------------------------------
# Multiplicativity
# --------------------------------------------------------------------------


def multiply(p: GroupPoint, q: GroupPoint) -> GroupPoint:
    """Edge-wise product ``(pq)_γ = p_γ q_γ``."""
    if p.edges != q.edges or p.algebra != q.algebra:
        raise ValueError("Points live over different graphs or algebras")
    return p.with_matrices(p.skeleton, {e: p[e] @ q[e] for e in p.edges})


def multiplicativity_residual(mv: InvariantMultivector, p: GroupPoint, q: GroupPoint, config=None) -> float:
    """``max |A(pq) − A(q) − Ad_{q^{-1}}^{⊗k} A(p)|`` in left trivialization."""
    config = config or NumericsConfig()
    kit = adjoint_kit(p.algebra, config.residual_tol)
    n = len(p.edges) * p.algebra.dim
    ad_q_inv = np.zeros((n, n))
    for edge in q.edges:
        block = _block(q, edge)
        ad_q_inv[block, block] = kit.adjoint(q.inverse(edge), q[edge])
    expected = evaluate(mv, q, config) + transform(evaluate(mv, p, config), ad_q_inv)
    return float(np.abs(evaluate(mv, multiply(p, q), config) - expected).max())
