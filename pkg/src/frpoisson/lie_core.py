"""Exact multilinear algebra over finite-dimensional Lie algebras.

A Lie algebra is given by structure constants ``[e_i, e_j] = Σ_k c_ij^k e_k``
over exact rationals (``fractions.Fraction``). Elements of ``𝔤^{⊗k}`` are
:class:`Tensor` values, elements of ``∧^k 𝔤`` are :class:`AltTensor` values
(degree-1 alternating tensors double as plain vectors).

Wedge convention: ``x∧y = x⊗y − y⊗x`` and, in degree k, the unnormalised signed
sum over permutations. The coefficient of an :class:`AltTensor` at a strictly
increasing index tuple is therefore the matching entry of the alternating
tensor, and ``e_{i1}∧…∧e_{ik}`` evaluates to 1 on the dual basis tuple.
"""

import itertools
import logging
import math
import re
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from types import MappingProxyType
from typing import Union

import numpy as np
from scipy.linalg import block_diag

_logger = logging.getLogger(__name__)

Scalar = Union[Fraction, float]

REP_TOLERANCE = 1e-9


class InvariantError(ValueError):
    """An object violates one of its documented invariants."""


class AlgebraMismatchError(ValueError):
    """Operands do not live over the same Lie algebra."""


@dataclass(frozen=True)
class Arithmetic:
    """Equality semantics of a computation context.

    Exact mode compares literally; float mode compares with
    ``|a − b| ≤ tol·max(1, |a|, |b|)``.
    """

    exact: bool = True
    tol: float = 0.0

    def is_zero(self, value: Scalar) -> bool:
        if self.exact:
            return value == 0
        return abs(value) <= self.tol

    def equal(self, a: Scalar, b: Scalar) -> bool:
        if self.exact:
            return a == b
        return abs(a - b) <= self.tol * max(1.0, abs(a), abs(b))


EXACT = Arithmetic()


def floating(tol: float = 1e-8) -> Arithmetic:
    """Return the float-mode arithmetic context with the given tolerance."""
    return Arithmetic(exact=False, tol=tol)


def to_scalar(value) -> Scalar:
    """Coerce ``value`` to a :data:`Scalar`.

    Integers, rationals and ``"p/q"`` strings become fractions; floats stay
    floats.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(value, (Fraction, float)):
        return value
    if isinstance(value, int | Rational):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except ValueError as e:
            raise ValueError(f"Invalid rational literal: {value!r}") from e
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.integer):
        return Fraction(int(value))
    raise TypeError(f"Cannot interpret {value!r} as a scalar")


def scalar_to_json(value: Scalar) -> str | float:
    if isinstance(value, Fraction):
        return str(value)
    return float(value)


def sort_with_sign(indices: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
    """Sort ``indices`` and return ``(sign, sorted)``; sign 0 on a repeat."""
    n = len(indices)
    if len(set(indices)) < n:
        return 0, ()
    inversions = 0
    for a in range(n):
        for b in range(a + 1, n):
            if indices[a] > indices[b]:
                inversions += 1
    return (-1 if inversions % 2 else 1), tuple(sorted(indices))


def _permutation_sign(perm: tuple[int, ...]) -> int:
    return sort_with_sign(perm)[0]


class LieAlgebra:
    """A finite-dimensional Lie algebra given by structure constants.

    Parameters
    ----------
    name : str
        Human readable name, echoed in reports.
    basis : iterable of str
        Basis labels; their order fixes the basis indices.
    brackets : mapping
        ``(i, j) -> {k: c}`` giving ``[e_i, e_j] = Σ_k c e_k``. Only one of
        ``(i, j)``/``(j, i)`` needs to be given.
    rep : sequence of matrices, optional
        Images of the basis vectors under a faithful representation.
    validate : bool
        Check antisymmetry, the Jacobi identity and the representation.
    """

    def __init__(
        self,
        name: str,
        basis: Iterable[str],
        brackets: Mapping[tuple[int, int], Mapping[int, Scalar]],
        rep=None,
        validate: bool = True,
    ):
        self.name = name
        self.basis_labels = tuple(basis)
        if not self.basis_labels:
            raise ValueError("A Lie algebra needs a positive dimension")
        if len(set(self.basis_labels)) != len(self.basis_labels):
            raise ValueError(f"Duplicate basis labels in {name}")
        self.dim = len(self.basis_labels)
        self._label_index = {label: i for i, label in enumerate(self.basis_labels)}
        self._table = self._build_table(brackets)
        self.rep = None
        if rep is not None:
            self.rep = tuple(np.asarray(m, dtype=float) for m in rep)
        self._key = (
            self.basis_labels,
            tuple(
                (ij, tuple(sorted(out.items())))
                for ij, out in sorted(self._table.items())
                if ij[0] < ij[1]
            ),
        )
        self._hash = hash(self._key)
        if validate:
            self.validate()

    def _build_table(self, brackets) -> dict:
        table: dict[tuple[int, int], dict[int, Scalar]] = {}
        for (i, j), out in brackets.items():
            for idx in (i, j, *out):
                if not 0 <= idx < self.dim:
                    raise ValueError(
                        f"Structure constant index {idx} out of range for {self.name}"
                    )
            cleaned = {k: to_scalar(c) for k, c in out.items() if c != 0}
            if i == j:
                if cleaned:
                    raise InvariantError(
                        f"antisymmetry: [e_{i}, e_{i}] must vanish in {self.name}"
                    )
                continue
            negated = {k: -c for k, c in cleaned.items()}
            if (i, j) in table and table[(i, j)] != cleaned:
                raise InvariantError(
                    f"antisymmetry: c_({i},{j}) != -c_({j},{i}) in {self.name}"
                )
            if (j, i) in table and table[(j, i)] != negated:
                raise InvariantError(
                    f"antisymmetry: c_({i},{j}) != -c_({j},{i}) in {self.name}"
                )
            if cleaned:
                table[(i, j)] = cleaned
                table[(j, i)] = negated
        return table

    def __repr__(self):
        return f"LieAlgebra({self.name!r}, dim={self.dim})"

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, LieAlgebra):
            return NotImplemented
        return self._hash == other._hash and self._key == other._key

    def __hash__(self):
        return self._hash

    def structure(self, i: int, j: int) -> Mapping[int, Scalar]:
        """Return ``[e_i, e_j]`` as a sparse coefficient map."""
        return self._table.get((i, j), {})

    @property
    def structure_constants(self) -> Mapping[tuple[int, int], Mapping[int, Scalar]]:
        return MappingProxyType(self._table)

    def is_abelian(self) -> bool:
        return not self._table

    def index(self, label) -> int:
        if isinstance(label, int):
            if not 0 <= label < self.dim:
                raise ValueError(f"Basis index {label} out of range for {self.name}")
            return label
        try:
            return self._label_index[label]
        except KeyError:
            raise ValueError(f"Unknown basis label {label!r} in {self.name}") from None

    def basis_vector(self, label) -> "AltTensor":
        return AltTensor(self, 1, {(self.index(label),): Fraction(1)})

    def vector(self, coeffs: Mapping) -> "AltTensor":
        """Build a vector from ``{label_or_index: coefficient}``."""
        return AltTensor(
            self, 1, {(self.index(k),): to_scalar(c) for k, c in coeffs.items()}
        )

    def tensor(self, coeffs: Mapping, degree: int | None = None) -> "Tensor":
        """Build a :class:`Tensor` from ``{(label, ...): coefficient}``."""
        return Tensor(self, _infer_degree(coeffs, degree), self._index_keys(coeffs))

    def alt(self, coeffs: Mapping, degree: int | None = None) -> "AltTensor":
        """Build an :class:`AltTensor` from ``{(label, ...): coefficient}``."""
        return AltTensor(self, _infer_degree(coeffs, degree), self._index_keys(coeffs))

    def _index_keys(self, coeffs: Mapping) -> dict:
        return {
            tuple(self.index(x) for x in key): to_scalar(c)
            for key, c in coeffs.items()
        }

    def opposite(self) -> "LieAlgebra":
        """The algebra with negated bracket (right-invariant fields)."""
        table = {
            ij: {k: -c for k, c in out.items()}
            for ij, out in self._table.items()
            if ij[0] < ij[1]
        }
        return LieAlgebra(f"{self.name}^op", self.basis_labels, table, validate=False)

    def validate(self):
        """Check the structure constants and the representation.

        Raises
        ------
        InvariantError
            Naming the failing invariant.
        """
        for i, j, k in itertools.combinations(range(self.dim), 3):
            total: dict[int, Scalar] = {}
            for a, b, c in ((i, j, k), (j, k, i), (k, i, j)):
                for m, coeff in self.structure(a, b).items():
                    for n, coeff2 in self.structure(m, c).items():
                        total[n] = total.get(n, 0) + coeff * coeff2
            if any(v != 0 for v in total.values()):
                raise InvariantError(
                    f"Jacobi identity fails in {self.name} on "
                    f"({self.basis_labels[i]}, {self.basis_labels[j]}, "
                    f"{self.basis_labels[k]})"
                )
        if self.rep is not None:
            self._validate_rep()

    def _validate_rep(self):
        if len(self.rep) != self.dim:
            raise InvariantError(
                f"representation of {self.name} has {len(self.rep)} matrices, "
                f"expected {self.dim}"
            )
        size = self.rep[0].shape[0]
        for m in self.rep:
            if m.shape != (size, size):
                raise InvariantError(
                    f"representation of {self.name} must use square matrices of "
                    "one size"
                )
        flat = np.stack([m.ravel() for m in self.rep], axis=1)
        if np.linalg.matrix_rank(flat) != self.dim:
            raise InvariantError(f"representation of {self.name} is not faithful")
        scale = max(1.0, max(float(np.abs(m).max()) for m in self.rep))
        for i, j in itertools.combinations(range(self.dim), 2):
            commutator = self.rep[i] @ self.rep[j] - self.rep[j] @ self.rep[i]
            expected = np.zeros((size, size))
            for k, c in self.structure(i, j).items():
                expected += float(c) * self.rep[k]
            if np.abs(commutator - expected).max() > REP_TOLERANCE * scale**2:
                raise InvariantError(
                    f"representation of {self.name} does not respect "
                    f"[{self.basis_labels[i]}, {self.basis_labels[j]}]"
                )


def _infer_degree(coeffs: Mapping, degree: int | None) -> int:
    if degree is not None:
        return degree
    if not coeffs:
        raise ValueError("Cannot infer the degree of an empty tensor")
    return len(next(iter(coeffs)))


class _SparseTensor:
    """Shared arithmetic of :class:`Tensor` and :class:`AltTensor`."""

    __slots__ = ("algebra", "degree", "_coeffs")

    def __init__(self, algebra: LieAlgebra, degree: int, coeffs: Mapping | None = None):
        if degree < 0:
            raise ValueError("Tensor degree must be non-negative")
        self.algebra = algebra
        self.degree = degree
        self._coeffs = self._normalize(coeffs or {})

    @classmethod
    def _trusted(cls, algebra, degree, coeffs: dict):
        obj = cls.__new__(cls)
        obj.algebra = algebra
        obj.degree = degree
        obj._coeffs = {k: v for k, v in coeffs.items() if v != 0}
        return obj

    @classmethod
    def zero(cls, algebra: LieAlgebra, degree: int):
        return cls._trusted(algebra, degree, {})

    def _check_index(self, key: tuple[int, ...]):
        if len(key) != self.degree:
            raise ValueError(
                f"Index {key} does not match tensor degree {self.degree}"
            )
        for i in key:
            if not 0 <= i < self.algebra.dim:
                raise ValueError(
                    f"Index {i} out of range [0, {self.algebra.dim}) in {key}"
                )

    def _normalize(self, coeffs: Mapping) -> dict:
        raise NotImplementedError

    @property
    def coeffs(self) -> Mapping[tuple[int, ...], Scalar]:
        return MappingProxyType(self._coeffs)

    def items(self):
        return self._coeffs.items()

    def __len__(self):
        return len(self._coeffs)

    def __getitem__(self, key) -> Scalar:
        return self._coeffs.get(tuple(key), Fraction(0))

    def _same(self, other):
        if type(other) is not type(self):
            raise TypeError(
                f"Cannot combine {type(self).__name__} with {type(other).__name__}"
            )
        if self.algebra != other.algebra:
            raise AlgebraMismatchError(
                f"{self.algebra.name} and {other.algebra.name} differ"
            )
        if self.degree != other.degree:
            raise ValueError(f"Degree mismatch: {self.degree} vs {other.degree}")

    def __add__(self, other):
        self._same(other)
        out = dict(self._coeffs)
        for k, v in other._coeffs.items():
            out[k] = out.get(k, 0) + v
        return self._trusted(self.algebra, self.degree, out)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return self._trusted(
            self.algebra, self.degree, {k: -v for k, v in self._coeffs.items()}
        )

    def __mul__(self, scalar):
        if isinstance(scalar, _SparseTensor):
            return NotImplemented
        c = to_scalar(scalar)
        return self._trusted(
            self.algebra, self.degree, {k: c * v for k, v in self._coeffs.items()}
        )

    __rmul__ = __mul__

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return (
            self.degree == other.degree
            and self.algebra == other.algebra
            and self._coeffs == other._coeffs
        )

    __hash__ = None

    def equals(self, other, arithmetic: Arithmetic = EXACT) -> bool:
        """Compare coefficient-wise under ``arithmetic``."""
        self._same(other)
        keys = set(self._coeffs) | set(other._coeffs)
        return all(arithmetic.equal(self[k], other[k]) for k in keys)

    def is_zero(self, arithmetic: Arithmetic = EXACT) -> bool:
        return all(arithmetic.is_zero(v) for v in self._coeffs.values())

    def max_abs(self) -> float:
        if not self._coeffs:
            return 0.0
        return float(max(abs(v) for v in self._coeffs.values()))

    def labelled(self) -> dict[tuple[str, ...], Scalar]:
        labels = self.algebra.basis_labels
        return {tuple(labels[i] for i in k): v for k, v in sorted(self._coeffs.items())}

    def to_json(self) -> list:
        return [[*k, scalar_to_json(v)] for k, v in sorted(self._coeffs.items())]

    def __repr__(self):
        sep = "⊗" if isinstance(self, Tensor) else "∧"
        terms = " + ".join(f"{v}*{sep.join(k)}" for k, v in self.labelled().items())
        return f"{type(self).__name__}[{self.degree}]({terms or '0'})"


class Tensor(_SparseTensor):
    """An element of ``𝔤^{⊗k}`` with a sparse coefficient map."""

    __slots__ = ()

    def _normalize(self, coeffs: Mapping) -> dict:
        out = {}
        for key, value in coeffs.items():
            key = tuple(key)
            self._check_index(key)
            value = to_scalar(value)
            out[key] = out.get(key, 0) + value
        return {k: v for k, v in out.items() if v != 0}

    def transpose(self) -> "Tensor":
        return self.permute(tuple(reversed(range(self.degree))))

    def permute(self, perm: tuple[int, ...]) -> "Tensor":
        """Return the tensor whose slot ``a`` holds the old slot ``perm[a]``."""
        return self._trusted(
            self.algebra,
            self.degree,
            {tuple(k[p] for p in perm): v for k, v in self._coeffs.items()},
        )

    def is_symmetric(self, arithmetic: Arithmetic = EXACT) -> bool:
        return all(
            self.equals(self.permute(p), arithmetic)
            for p in itertools.permutations(range(self.degree))
        )

    def is_antisymmetric(self, arithmetic: Arithmetic = EXACT) -> bool:
        for p in itertools.permutations(range(self.degree)):
            sign = _permutation_sign(p)
            if not self.equals(sign * self.permute(p), arithmetic):
                return False
        return True

    def symmetric_part(self) -> "Tensor":
        if self.degree != 2:
            raise ValueError("symmetric_part is defined on 2-tensors")
        return (self + self.transpose()) * Fraction(1, 2)

    def antisymmetric_part(self) -> "AltTensor":
        """Project onto ``∧^k 𝔤``: coefficient ``(1/k!) Σ_σ sgn σ t_{Iσ}``."""
        out: dict[tuple[int, ...], Scalar] = {}
        for key, value in self._coeffs.items():
            sign, sorted_key = sort_with_sign(key)
            if sign:
                out[sorted_key] = out.get(sorted_key, 0) + sign * value
        factor = Fraction(1, math.factorial(self.degree))
        return AltTensor._trusted(
            self.algebra, self.degree, {k: v * factor for k, v in out.items()}
        )

    def outer(self, other: "Tensor") -> "Tensor":
        if self.algebra != other.algebra:
            raise AlgebraMismatchError("outer product across algebras")
        return self._trusted(
            self.algebra,
            self.degree + other.degree,
            {
                ka + kb: va * vb
                for ka, va in self._coeffs.items()
                for kb, vb in other._coeffs.items()
            },
        )


class AltTensor(_SparseTensor):
    """An element of ``∧^k 𝔤`` in the basis of increasing multi-indices."""

    __slots__ = ()

    def _normalize(self, coeffs: Mapping) -> dict:
        out = {}
        for key, value in coeffs.items():
            key = tuple(key)
            self._check_index(key)
            sign, sorted_key = sort_with_sign(key)
            if not sign:
                continue
            out[sorted_key] = out.get(sorted_key, 0) + sign * to_scalar(value)
        out = {k: v for k, v in out.items() if v != 0}
        if out and self.degree > self.algebra.dim:
            raise InvariantError(
                f"degree {self.degree} exceeds dim {self.algebra.dim}"
            )
        return out

    def wedge(self, other: "AltTensor") -> "AltTensor":
        if self.algebra != other.algebra:
            raise AlgebraMismatchError("wedge product across algebras")
        out: dict[tuple[int, ...], Scalar] = {}
        for ka, va in self._coeffs.items():
            for kb, vb in other._coeffs.items():
                sign, key = sort_with_sign(ka + kb)
                if sign:
                    out[key] = out.get(key, 0) + sign * va * vb
        return AltTensor._trusted(self.algebra, self.degree + other.degree, out)

    def __xor__(self, other):
        return self.wedge(other)

    def to_tensor(self) -> Tensor:
        """Expand into the alternating tensor (no ``1/k!`` factor)."""
        out = {}
        perms = [(p, _permutation_sign(p)) for p in itertools.permutations(range(self.degree))]
        for key, value in self._coeffs.items():
            for p, sign in perms:
                out[tuple(key[i] for i in p)] = sign * value
        return Tensor._trusted(self.algebra, self.degree, out)


def _as_vector(x, algebra: LieAlgebra | None = None) -> AltTensor:
    if isinstance(x, AltTensor):
        if x.degree != 1:
            raise ValueError("Expected a vector (degree-1 tensor)")
        return x
    if algebra is None:
        raise TypeError("A vector or an algebra is required")
    return algebra.basis_vector(x)


def bracket(x: AltTensor, y: AltTensor) -> AltTensor:
    """Lie bracket of two vectors."""
    x, y = _as_vector(x), _as_vector(y)
    if x.algebra != y.algebra:
        raise AlgebraMismatchError(
            f"Dimension mismatch: {x.algebra.name} and {y.algebra.name}"
        )
    alg = x.algebra
    out: dict[tuple[int], Scalar] = {}
    for (i,), ci in x.items():
        for (j,), cj in y.items():
            for k, c in alg.structure(i, j).items():
                out[(k,)] = out.get((k,), 0) + ci * cj * c
    return AltTensor._trusted(alg, 1, out)


def schouten(a: AltTensor, b: AltTensor) -> AltTensor:
    """Algebraic Schouten–Nijenhuis bracket ``∧^k ⊗ ∧^l → ∧^{k+l−1}``.

    On decomposable elements,
    ``[x_1∧…∧x_k, y_1∧…∧y_l] = Σ_{i,j} (−1)^{i+j} [x_i, y_j]∧x_1…x̂_i…x_k∧y_1…ŷ_j…y_l``,
    which is graded antisymmetric: ``[a, b] = −(−1)^{(k−1)(l−1)} [b, a]``.
    """
    if not isinstance(a, AltTensor) or not isinstance(b, AltTensor):
        raise TypeError("schouten expects AltTensor operands")
    if a.algebra != b.algebra:
        raise AlgebraMismatchError(
            f"schouten across {a.algebra.name} and {b.algebra.name}"
        )
    alg = a.algebra
    degree = max(a.degree + b.degree - 1, 0)
    if a.degree == 0 or b.degree == 0:
        return AltTensor.zero(alg, degree)
    out: dict[tuple[int, ...], Scalar] = {}
    for key_a, ca in a.items():
        for key_b, cb in b.items():
            coeff = ca * cb
            for i, x in enumerate(key_a):
                rest_a = key_a[:i] + key_a[i + 1 :]
                for j, y in enumerate(key_b):
                    br = alg.structure(x, y)
                    if not br:
                        continue
                    rest = rest_a + key_b[:j] + key_b[j + 1 :]
                    parity = -1 if (i + j) % 2 else 1
                    for z, cz in br.items():
                        sign, key = sort_with_sign((z,) + rest)
                        if sign:
                            out[key] = out.get(key, 0) + parity * sign * coeff * cz
    return AltTensor._trusted(alg, degree, out)


def ad(x, t: Tensor | AltTensor) -> Tensor | AltTensor:
    """Adjoint action of the vector (or basis label) ``x`` on ``t``, slot by slot."""
    x = _as_vector(x, t.algebra)
    if isinstance(t, AltTensor):
        return schouten(x, t)
    alg = t.algebra
    if x.algebra != alg:
        raise AlgebraMismatchError("ad across algebras")
    out: dict[tuple[int, ...], Scalar] = {}
    for (m,), cm in x.items():
        for key, value in t.items():
            for slot, i in enumerate(key):
                for z, cz in alg.structure(m, i).items():
                    new_key = key[:slot] + (z,) + key[slot + 1 :]
                    out[new_key] = out.get(new_key, 0) + cm * value * cz
    return Tensor._trusted(alg, t.degree, out)


def ad_invariant(t: Tensor | AltTensor, arithmetic: Arithmetic = EXACT) -> bool:
    """True iff the diagonal adjoint action of every basis vector kills ``t``."""
    return all(
        ad(m, t).is_zero(arithmetic) for m in range(t.algebra.dim)
    )


def phi_s(s: Tensor, arithmetic: Arithmetic = EXACT) -> AltTensor:
    """The Cartan 3-tensor ``φ_s(ξ, η, ζ) = 2⟨ξ, [s♯(η), s♯(ζ)]⟩``.

    ``s♯`` is the matrix of ``s`` in the chosen basis: ``s♯(e_j*) = Σ_b s_jb e_b``.

    Raises
    ------
    ValueError
        If ``s`` is not a symmetric 2-tensor, or (exact mode) not ad-invariant.
    """
    if not isinstance(s, Tensor) or s.degree != 2:
        raise ValueError("phi_s expects a 2-tensor")
    if not s.is_symmetric(arithmetic):
        raise ValueError("phi_s expects a symmetric 2-tensor")
    if not ad_invariant(s, arithmetic):
        if arithmetic.exact:
            raise ValueError("phi_s expects an ad-invariant symmetric tensor")
        _logger.warning("phi_s: s is not ad-invariant within tolerance %s", arithmetic.tol)
    alg = s.algebra
    rows: dict[int, dict[int, Scalar]] = {}
    for (j, b), c in s.items():
        rows.setdefault(j, {})[b] = c
    values: dict[tuple[int, int, int], Scalar] = {}
    for j, row_j in rows.items():
        for k, row_k in rows.items():
            for b, cb in row_j.items():
                for c, cc in row_k.items():
                    for i, ci in alg.structure(b, c).items():
                        key = (i, j, k)
                        values[key] = values.get(key, 0) + 2 * cb * cc * ci
    out: dict[tuple[int, int, int], Scalar] = {}
    for key, value in values.items():
        sign, sorted_key = sort_with_sign(key)
        if sign == 0:
            if not arithmetic.is_zero(value):
                raise InvariantError(f"phi_s is not alternating at {key}")
            continue
        for perm in itertools.permutations(range(3)):
            permuted = tuple(key[p] for p in perm)
            expected = _permutation_sign(perm) * value
            if not arithmetic.equal(values.get(permuted, 0), expected):
                raise InvariantError(f"phi_s is not alternating at {permuted}")
        if key == sorted_key:
            out[key] = value
    return AltTensor._trusted(alg, 3, out)


class Cobracket:
    """A linear map ``δ: 𝔤 → ∧²𝔤`` given on basis vectors."""

    def __init__(self, algebra: LieAlgebra, images):
        images = tuple(images)
        if len(images) != algebra.dim:
            raise ValueError(
                f"Cobracket needs {algebra.dim} images, got {len(images)}"
            )
        for image in images:
            if image.algebra != algebra or image.degree != 2:
                raise ValueError("Cobracket images must be bivectors over the algebra")
        self.algebra = algebra
        self.images = images

    @classmethod
    def zero(cls, algebra: LieAlgebra) -> "Cobracket":
        return cls(algebra, [AltTensor.zero(algebra, 2)] * algebra.dim)

    def __call__(self, x: AltTensor) -> AltTensor:
        x = _as_vector(x, self.algebra)
        out = AltTensor.zero(self.algebra, 2)
        for (i,), c in x.items():
            out = out + c * self.images[i]
        return out

    def __eq__(self, other):
        if not isinstance(other, Cobracket):
            return NotImplemented
        return self.algebra == other.algebra and self.images == other.images

    __hash__ = None

    def is_zero(self) -> bool:
        return all(image.is_zero() for image in self.images)

    def cocycle_defect(self) -> list[tuple[int, int, AltTensor]]:
        """Basis pairs where ``δ([x,y]) ≠ [x, δ(y)] + [δ(x), y]``."""
        failures = []
        for i, j in itertools.combinations(range(self.algebra.dim), 2):
            x, y = self.algebra.basis_vector(i), self.algebra.basis_vector(j)
            lhs = self(bracket(x, y))
            rhs = schouten(x, self.images[j]) + schouten(self.images[i], y)
            if lhs != rhs:
                failures.append((i, j, lhs - rhs))
        return failures

    def is_cocycle(self) -> bool:
        return not self.cocycle_defect()


class DirectSum(LieAlgebra):
    """Block-diagonal direct sum ``⊕_c 𝔤_c`` with embeddings ``(v)_c``."""

    def __init__(self, components, names=None, name: str | None = None):
        components = tuple(components)
        if not components:
            raise ValueError("direct_sum needs at least one algebra")
        names = tuple(str(n) for n in names) if names is not None else tuple(
            str(c) for c in range(len(components))
        )
        if len(names) != len(components):
            raise ValueError("One name per direct-sum component is required")
        self.components = components
        self.component_names = names
        self.offsets = tuple(
            itertools.accumulate((c.dim for c in components[:-1]), initial=0)
        )
        basis = [
            f"{label}@{cname}"
            for comp, cname in zip(components, names, strict=True)
            for label in comp.basis_labels
        ]
        table = {}
        for comp, off in zip(components, self.offsets, strict=True):
            for (i, j), out in comp.structure_constants.items():
                if i < j:
                    table[(i + off, j + off)] = {k + off: c for k, c in out.items()}
        rep = None
        if all(c.rep is not None for c in components):
            rep = []
            for idx, comp in enumerate(components):
                for m in comp.rep:
                    blocks = [np.zeros_like(c.rep[0]) for c in components]
                    blocks[idx] = m
                    rep.append(block_diag(*blocks))
        super().__init__(
            name or "⊕".join(c.name for c in components),
            basis,
            table,
            rep=rep,
            validate=False,
        )

    def component_index(self, component) -> int:
        if isinstance(component, int):
            if not 0 <= component < len(self.components):
                raise ValueError(f"No direct-sum component {component}")
            return component
        try:
            return self.component_names.index(str(component))
        except ValueError:
            raise ValueError(f"No direct-sum component named {component!r}") from None

    def offset(self, component) -> int:
        return self.offsets[self.component_index(component)]

    def locate(self, index: int) -> tuple[int, int]:
        """Return ``(component, local index)`` of a global basis index."""
        for c in range(len(self.components) - 1, -1, -1):
            if index >= self.offsets[c]:
                return c, index - self.offsets[c]
        raise ValueError(f"Index {index} out of range")

    def embed(self, component, element):
        """Place a vector or tensor of one component into the sum (``(v)_c``)."""
        c = self.component_index(component)
        if element.algebra != self.components[c]:
            raise AlgebraMismatchError(
                f"{element.algebra.name} is not component {c} of {self.name}"
            )
        off = self.offsets[c]
        return type(element)._trusted(
            self,
            element.degree,
            {tuple(i + off for i in k): v for k, v in element.items()},
        )

    embed_tensor = embed

    def inclusion(self, component) -> "LinearMap":
        c = self.component_index(component)
        off = self.offsets[c]
        comp = self.components[c]
        return LinearMap(
            comp, self, {i: {i + off: Fraction(1)} for i in range(comp.dim)}
        )


def direct_sum(algebras, names=None) -> DirectSum:
    """Direct sum of a nonempty list of algebras."""
    return DirectSum(algebras, names)


@lru_cache(maxsize=256)
def power(algebra: LieAlgebra, n: int) -> DirectSum:
    """``𝔤^n`` with components named ``1 … n``."""
    if n < 1:
        raise ValueError(f"power needs n >= 1, got {n}")
    return DirectSum([algebra] * n, names=[str(j) for j in range(1, n + 1)])


class LinearMap:
    """A linear map between Lie algebras, given column by column.

    ``columns[i]`` is the image of the source basis vector ``e_i`` as a sparse
    map ``{target index: coefficient}``. Calling the map on a vector or a
    (alternating) tensor applies it in every slot.
    """

    def __init__(self, source: LieAlgebra, target: LieAlgebra, columns: Mapping):
        self.source = source
        self.target = target
        cols = {}
        for i, col in columns.items():
            source.index(i)
            cleaned = {}
            for j, c in col.items():
                target.index(j)
                c = to_scalar(c)
                if c != 0:
                    cleaned[j] = cleaned.get(j, 0) + c
            if cleaned:
                cols[i] = cleaned
        self._columns = cols

    def column(self, i: int) -> Mapping[int, Scalar]:
        return self._columns.get(i, {})

    def __repr__(self):
        return f"LinearMap({self.source.name} -> {self.target.name})"

    def __eq__(self, other):
        if not isinstance(other, LinearMap):
            return NotImplemented
        return (
            self.source == other.source
            and self.target == other.target
            and self._columns == other._columns
        )

    __hash__ = None

    def __add__(self, other: "LinearMap") -> "LinearMap":
        if self.source != other.source or self.target != other.target:
            raise AlgebraMismatchError("Cannot add maps with different domains")
        cols = {i: dict(c) for i, c in self._columns.items()}
        for i, col in other._columns.items():
            target = cols.setdefault(i, {})
            for j, c in col.items():
                target[j] = target.get(j, 0) + c
        return LinearMap(self.source, self.target, cols)

    def __call__(self, element):
        if element.algebra != self.source:
            raise AlgebraMismatchError(
                f"{self!r} cannot act on an element of {element.algebra.name}"
            )
        is_alt = isinstance(element, AltTensor)
        out: dict[tuple[int, ...], Scalar] = {}
        for key, value in element.items():
            cols = [self._columns.get(i) for i in key]
            if any(c is None for c in cols):
                continue
            for combo in itertools.product(*(c.items() for c in cols)):
                coeff = value
                idx = []
                for j, c in combo:
                    coeff *= c
                    idx.append(j)
                idx = tuple(idx)
                if is_alt:
                    sign, idx = sort_with_sign(idx)
                    if not sign:
                        continue
                    coeff *= sign
                out[idx] = out.get(idx, 0) + coeff
        return type(element)._trusted(self.target, element.degree, out)

    def compose(self, inner: "LinearMap") -> "LinearMap":
        """Return ``self ∘ inner``."""
        if inner.target != self.source:
            raise AlgebraMismatchError("Cannot compose: target/source mismatch")
        cols = {}
        for i in range(inner.source.dim):
            column = {(j,): c for j, c in inner.column(i).items()}
            image = self(AltTensor._trusted(inner.target, 1, column))
            cols[i] = {j: c for (j,), c in image.items()}
        return LinearMap(inner.source, self.target, cols)

    def is_lie_morphism(self) -> bool:
        for i, j in itertools.combinations(range(self.source.dim), 2):
            x, y = self.source.basis_vector(i), self.source.basis_vector(j)
            if self(bracket(x, y)) != bracket(self(x), self(y)):
                return False
        return True


# --------------------------------------------------------------------------
# Built-in algebras
# --------------------------------------------------------------------------


def abelian(n: int) -> LieAlgebra:
    """The abelian algebra of dimension ``n`` represented by diagonal matrices."""
    if n < 1:
        raise ValueError(f"abelian(n) needs n >= 1, got {n}")
    rep = []
    for i in range(n):
        m = np.zeros((n, n))
        m[i, i] = 1.0
        rep.append(m)
    return LieAlgebra(f"abelian({n})", [f"a{i + 1}" for i in range(n)], {}, rep=rep)


def _elementary(n: int, i: int, j: int) -> np.ndarray:
    m = np.zeros((n, n), dtype=object)
    m[:, :] = Fraction(0)
    m[i, j] = Fraction(1)
    return m


def _matrix_algebra(name: str, labels, matrices, expand) -> LieAlgebra:
    table = {}
    for a, b in itertools.combinations(range(len(matrices)), 2):
        ma, mb = matrices[a], matrices[b]
        out = expand(ma.dot(mb) - mb.dot(ma))
        if out:
            table[(a, b)] = out
    rep = [m.astype(float) for m in matrices]
    return LieAlgebra(name, labels, table, rep=rep)


def gl(n: int) -> LieAlgebra:
    """``gl(n)`` in the basis ``E_ij`` (row-major)."""
    if n < 1:
        raise ValueError(f"gl(n) needs n >= 1, got {n}")
    pairs = [(i, j) for i in range(n) for j in range(n)]
    matrices = [_elementary(n, i, j) for i, j in pairs]
    labels = [f"E{i + 1}{j + 1}" for i, j in pairs]
    position = {p: k for k, p in enumerate(pairs)}

    def expand(m):
        return {position[(i, j)]: m[i, j] for i, j in pairs if m[i, j] != 0}

    return _matrix_algebra(f"gl({n})", labels, matrices, expand)


def sl(n: int) -> LieAlgebra:
    """``sl(n)`` in the basis ``H_1 … H_{n−1}, E_ij (i<j), E_ji (i<j)``.

    ``H_k = E_kk − E_{k+1,k+1}``. For ``n = 2`` the labels are ``h, e, f``.
    """
    if n < 2:
        raise ValueError(f"sl(n) needs n >= 2, got {n}")
    cartan = []
    for k in range(n - 1):
        m = _elementary(n, k, k) - _elementary(n, k + 1, k + 1)
        cartan.append(m)
    upper = [(i, j) for i in range(n) for j in range(i + 1, n)]
    lower = [(j, i) for i, j in upper]
    matrices = cartan + [_elementary(n, i, j) for i, j in upper + lower]
    if n == 2:
        labels = ["h", "e", "f"]
    else:
        labels = [f"H{k + 1}" for k in range(n - 1)] + [
            f"E{i + 1}{j + 1}" for i, j in upper + lower
        ]
    position = {p: n - 1 + k for k, p in enumerate(upper + lower)}

    def expand(m):
        out = {position[(i, j)]: m[i, j] for (i, j) in position if m[i, j] != 0}
        running = Fraction(0)
        for k in range(n - 1):
            running += m[k, k]
            if running != 0:
                out[k] = running
        return out

    return _matrix_algebra(f"sl({n})", labels, matrices, expand)


def sl2() -> LieAlgebra:
    return sl(2)


_BUILTIN_PATTERN = re.compile(r"^(abelian|sl|gl)\(?(\d+)\)?$")


@lru_cache(maxsize=32)
def builtin_algebra(name: str) -> LieAlgebra:
    """Resolve ``abelian(n)``/``abelianN``, ``sl(n)``/``slN``, ``gl(n)``/``glN``."""
    match = _BUILTIN_PATTERN.match(name.strip().replace(" ", ""))
    if not match:
        raise ValueError(f"Unknown built-in Lie algebra: {name!r}")
    family, n = match.group(1), int(match.group(2))
    return {"abelian": abelian, "sl": sl, "gl": gl}[family](n)


# --------------------------------------------------------------------------
# JSON records
# --------------------------------------------------------------------------


def algebra_to_record(algebra: LieAlgebra) -> dict:
    record = {
        "name": algebra.name,
        "dim": algebra.dim,
        "basis": list(algebra.basis_labels),
        "brackets": [
            [i, j, [[k, scalar_to_json(c)] for k, c in sorted(out.items())]]
            for (i, j), out in sorted(algebra.structure_constants.items())
            if i < j
        ],
    }
    if algebra.rep is not None:
        record["rep"] = [m.tolist() for m in algebra.rep]
    return record


def algebra_from_record(record) -> LieAlgebra:
    """Build an algebra from a built-in name or an inline JSON record."""
    if isinstance(record, str):
        return builtin_algebra(record)
    if not isinstance(record, Mapping):
        raise ValueError("A Lie algebra record must be a name or an object")
    for field in ("name", "dim", "basis", "brackets"):
        if field not in record:
            raise ValueError(f"Lie algebra record is missing {field!r}")
    basis = list(record["basis"])
    if len(basis) != record["dim"]:
        raise ValueError(
            f"Lie algebra record declares dim {record['dim']} but lists "
            f"{len(basis)} basis labels"
        )
    brackets = {}
    for entry in record["brackets"]:
        i, j, out = entry
        brackets[(int(i), int(j))] = {int(k): to_scalar(c) for k, c in out}
    return LieAlgebra(record["name"], basis, brackets, rep=record.get("rep"))
