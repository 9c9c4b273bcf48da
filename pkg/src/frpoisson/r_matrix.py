"""Quasitriangular r-matrices and their tensor-power constructions.

An :class:`RMatrix` stores ``r = s + Λ`` as the split ``(sym, antisym)`` and
derives ``full`` from it. The constructions here (``Mix^n``, ``r^{(ε,n)}``,
``Λ_r^{(n)}``, ``diag_n``) feed the ciliated-graph r-matrix ``r_Γ``.
"""

import itertools
import logging
import re
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache

from .lie_core import (
    EXACT,
    AlgebraMismatchError,
    AltTensor,
    Arithmetic,
    Cobracket,
    DirectSum,
    InvariantError,
    LieAlgebra,
    LinearMap,
    Tensor,
    ad,
    ad_invariant,
    algebra_from_record,
    algebra_to_record,
    builtin_algebra,
    phi_s,
    power,
    scalar_to_json,
    schouten,
    to_scalar,
)

_logger = logging.getLogger(__name__)


class RMatrix:
    """An element ``r = s + Λ ∈ 𝔤⊗𝔤`` with ad-invariant symmetric part.

    Parameters
    ----------
    algebra : LieAlgebra
        The algebra ``𝔤``.
    sym : Tensor
        The symmetric part ``s``; must be symmetric and ad-invariant.
    antisym : AltTensor
        The antisymmetric part ``Λ``.
    name : str, optional
        Label used in reports.
    validate : bool
        Check the invariants of ``sym`` on construction.
    """

    def __init__(
        self,
        algebra: LieAlgebra,
        sym: Tensor,
        antisym: AltTensor,
        name: str | None = None,
        validate: bool = True,
    ):
        if sym.algebra != algebra or antisym.algebra != algebra:
            raise AlgebraMismatchError(
                f"r-matrix parts do not live over {algebra.name}"
            )
        if sym.degree != 2 or antisym.degree != 2:
            raise ValueError("r-matrix parts must have degree 2")
        self.algebra = algebra
        self.sym = sym
        self.antisym = antisym
        self.name = name
        if validate:
            if not sym.is_symmetric():
                raise InvariantError(f"symmetric part of {self.label} is not symmetric")
            if not ad_invariant(sym):
                raise InvariantError(
                    f"symmetric part of {self.label} is not ad-invariant"
                )

    @classmethod
    def from_tensor(cls, full: Tensor, name: str | None = None, validate: bool = True):
        """Split a 2-tensor into its symmetric and antisymmetric parts."""
        if full.degree != 2:
            raise ValueError("An r-matrix is a 2-tensor")
        return cls(
            full.algebra,
            full.symmetric_part(),
            full.antisymmetric_part(),
            name=name,
            validate=validate,
        )

    @classmethod
    def zero(cls, algebra: LieAlgebra) -> "RMatrix":
        return cls(algebra, Tensor.zero(algebra, 2), AltTensor.zero(algebra, 2), "zero")

    @property
    def label(self) -> str:
        return self.name or f"r-matrix on {self.algebra.name}"

    @cached_property
    def full(self) -> Tensor:
        return self.sym + self.antisym.to_tensor()

    def __repr__(self):
        return f"RMatrix({self.label!r})"

    def __eq__(self, other):
        if not isinstance(other, RMatrix):
            return NotImplemented
        return (
            self.algebra == other.algebra
            and self.sym == other.sym
            and self.antisym == other.antisym
        )

    __hash__ = None

    def with_antisym(self, antisym: AltTensor, name: str | None = None) -> "RMatrix":
        return RMatrix(self.algebra, self.sym, antisym, name=name, validate=False)

    def is_quasitriangular(self) -> bool:
        return cyb_check(self).holds


@dataclass(frozen=True)
class SignFunction:
    """A sign function ``ε: {1, …, n} → {±1}``."""

    signs: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "signs", tuple(int(s) for s in self.signs))
        if not self.signs:
            raise ValueError("A sign function needs length n >= 1")
        if any(s not in (1, -1) for s in self.signs):
            raise ValueError(f"Sign values must be +1 or -1, got {self.signs}")

    def __len__(self):
        return len(self.signs)

    def __iter__(self):
        return iter(self.signs)

    def __str__(self):
        return "(" + ",".join("+" if s > 0 else "-" for s in self.signs) + ")"

    @classmethod
    def all_of_length(cls, n: int) -> list["SignFunction"]:
        return [cls(signs) for signs in itertools.product((1, -1), repeat=n)]


@dataclass(frozen=True)
class CYBResult:
    """Outcome of a classical Yang–Baxter check with its ``∧³`` defect."""

    holds: bool
    defect: AltTensor

    def __bool__(self):
        return self.holds


def cyb_check(r: RMatrix, arithmetic: Arithmetic = EXACT) -> CYBResult:
    """Check ``[Λ, Λ] + φ_s = 0`` and return the defect."""
    defect = schouten(r.antisym, r.antisym) + phi_s(r.sym, arithmetic)
    holds = defect.is_zero(arithmetic)
    _logger.debug("cyb_check(%s): holds=%s", r.label, holds)
    return CYBResult(holds, defect)


def delta_r(r: RMatrix, check_cocycle: bool = False) -> Cobracket:
    """The coboundary cobracket ``δ_r(x) = ad_x(r)``.

    Raises
    ------
    ValueError
        If some ``ad_x(r)`` is not antisymmetric, which means ``s`` is not
        ad-invariant.
    """
    images = []
    for x in range(r.algebra.dim):
        t = ad(x, r.full)
        if not t.is_antisymmetric():
            raise ValueError(
                f"delta_r({r.label}) is not antisymmetric at "
                f"{r.algebra.basis_labels[x]}; the symmetric part is not ad-invariant"
            )
        images.append(t.antisymmetric_part())
    cobracket = Cobracket(r.algebra, images)
    if check_cocycle:
        failures = cobracket.cocycle_defect()
        if failures:
            i, j, _ = failures[0]
            raise InvariantError(
                f"delta_r({r.label}) violates the cocycle condition at "
                f"({r.algebra.basis_labels[i]}, {r.algebra.basis_labels[j]})"
            )
    return cobracket


def _as_two_tensor(r) -> Tensor:
    if isinstance(r, RMatrix):
        return r.full
    if isinstance(r, AltTensor):
        return r.to_tensor()
    if isinstance(r, Tensor) and r.degree == 2:
        return r
    raise TypeError("Expected an RMatrix or a 2-tensor")


def mix_n(r, n: int) -> AltTensor:
    """``Mix^n(r) = Σ_{j<k} Σ_i (y_i)_j ∧ (x_i)_k`` on ``𝔤^n``.

    ``r`` may be an :class:`RMatrix` or any 2-tensor ``Σ_i x_i ⊗ y_i``.
    """
    if n < 1:
        raise ValueError(f"mix_n needs n >= 1, got {n}")
    t = _as_two_tensor(r)
    target = power(t.algebra, n)
    out: dict[tuple[int, int], Fraction] = {}
    for (a, b), c in t.items():
        for j, k in itertools.combinations(range(n), 2):
            key = (target.offsets[j] + b, target.offsets[k] + a)
            out[key] = out.get(key, 0) + c
    return AltTensor(target, 2, out)


def _diagonal_sum(t, n: int):
    """``(t, …, t)``: ``t`` placed on each of the ``n`` components."""
    target = power(t.algebra, n)
    total = type(t).zero(target, t.degree)
    for j in range(n):
        total = total + target.embed(j, t)
    return total


def lambda_r_n(r: RMatrix, n: int) -> AltTensor:
    """``Λ_r^{(n)} = (Λ, …, Λ) − Mix^n(r)``."""
    if n < 1:
        raise ValueError(f"lambda_r_n needs n >= 1, got {n}")
    return _diagonal_sum(r.antisym, n) - mix_n(r, n)


def r_power(r: RMatrix, eps, n: int | None = None) -> RMatrix:
    """``r^{(ε,n)} = (ε_1 s, …, ε_n s) + Λ_r^{(n)}`` on ``𝔤^n``."""
    eps = eps if isinstance(eps, SignFunction) else SignFunction(tuple(eps))
    n = len(eps) if n is None else n
    if len(eps) != n:
        raise ValueError(f"Sign function of length {len(eps)} does not match n={n}")
    target = power(r.algebra, n)
    sym = Tensor.zero(target, 2)
    for j, sign in enumerate(eps):
        sym = sym + target.embed(j, sign * r.sym)
    return RMatrix(
        target,
        sym,
        lambda_r_n(r, n),
        name=f"{r.label}^{eps}",
        validate=False,
    )


def conjugate(r: RMatrix) -> RMatrix:
    """The partner r-matrix ``s − Λ``."""
    return RMatrix(r.algebra, r.sym, -r.antisym, name=f"conj({r.label})", validate=False)


@lru_cache(maxsize=128)
def diag_map(algebra: LieAlgebra, n: int) -> LinearMap:
    """The diagonal embedding ``x ↦ (x, …, x)`` of ``𝔤`` into ``𝔤^n``."""
    target = power(algebra, n)
    return LinearMap(
        algebra,
        target,
        {a: {off + a: Fraction(1) for off in target.offsets} for a in range(algebra.dim)},
    )


def diag_n(t, n: int):
    """Apply the diagonal embedding in every slot of ``t``."""
    if n < 1:
        raise ValueError(f"diag_n needs n >= 1, got {n}")
    return diag_map(t.algebra, n)(t)


def block_embedding(algebra: LieAlgebra, m: int, total: int, start: int) -> LinearMap:
    """Identity of ``𝔤^m`` onto components ``start … start+m−1`` of ``𝔤^total``."""
    if start < 0 or start + m > total:
        raise ValueError(f"Block of size {m} at {start} does not fit in {total}")
    source, target = power(algebra, m), power(algebra, total)
    cols = {}
    for j in range(m):
        for a in range(algebra.dim):
            cols[source.offsets[j] + a] = {target.offsets[start + j] + a: Fraction(1)}
    return LinearMap(source, target, cols)


def fusion_mix(r, m: int, n: int) -> AltTensor:
    """``(diag_m, diag_n)(Mix²(r))`` on ``𝔤^{m+n}``.

    This is ``Σ_{k<m≤l} Σ_i (y_i)_k ∧ (x_i)_l``.
    """
    if m < 1 or n < 1:
        raise ValueError("fusion_mix needs m, n >= 1")
    t = _as_two_tensor(r)
    alg = t.algebra
    source, target = power(alg, 2), power(alg, m + n)
    cols = {}
    for a in range(alg.dim):
        cols[a] = {target.offsets[k] + a: Fraction(1) for k in range(m)}
        cols[source.offsets[1] + a] = {
            target.offsets[k] + a: Fraction(1) for k in range(m, m + n)
        }
    return LinearMap(source, target, cols)(mix_n(t, 2))


def is_bialgebra_embedding(
    f: LinearMap, delta_source: Cobracket, delta_target: Cobracket
) -> bool:
    """True iff ``f`` is a Lie morphism with ``δ_target ∘ f = (f∧f) ∘ δ_source``."""
    if delta_source.algebra != f.source or delta_target.algebra != f.target:
        raise AlgebraMismatchError("Cobrackets do not match the map's domains")
    if not f.is_lie_morphism():
        return False
    for x in range(f.source.dim):
        vector = f.source.basis_vector(x)
        if delta_target(f(vector)) != f(delta_source.images[x]):
            return False
    return True


def product_r_matrix(assignments: Sequence[RMatrix], names=None) -> RMatrix:
    """``r = Σ_v (r_v)_v`` on the direct sum of the ``r_v`` algebras."""
    assignments = list(assignments)
    if not assignments:
        raise ValueError("product_r_matrix needs at least one r-matrix")
    target = DirectSum([r.algebra for r in assignments], names=names)
    sym = Tensor.zero(target, 2)
    antisym = AltTensor.zero(target, 2)
    for c, r in enumerate(assignments):
        sym = sym + target.embed(c, r.sym)
        antisym = antisym + target.embed(c, r.antisym)
    return RMatrix(target, sym, antisym, name="product", validate=False)


# --------------------------------------------------------------------------
# Verification of the power constructions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerFailure:
    n: int
    eps: SignFunction | None
    clause: str
    detail: str
    defect: AltTensor | None = None


@dataclass
class PowerReport:
    """Result of :func:`verify_section2`: every clause for every ``(n, ε)``."""

    n_max: int
    checked: int = 0
    failures: list[PowerFailure] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def __bool__(self):
        return self.passed


def verify_section2(r: RMatrix, n_max: int = 3) -> PowerReport:
    """Verify the tensor-power clauses up to ``n_max``.

    For every ``1 ≤ n ≤ n_max`` and every sign function ``ε`` of length n:

    (a) ``r^{(ε,n)}`` satisfies the classical Yang–Baxter equation;
    (b) ``δ_{r^{(ε,n)}}`` does not depend on ``ε``;
    (c) ``Λ_r^{(n)} − diag_n(Λ) = −Mix^n(s)``;
    (d) ``(Λ_r^{(m)}, Λ_r^{(n)}) − (diag_m, diag_n)(Mix²(r)) = Λ_r^{(m+n)}``
        for ``m + n ≤ n_max``;
    (e) ``diag_n`` is a Lie bialgebra embedding ``(𝔤, δ_r) → (𝔤^n, δ^{(n)})``.
    """
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    report = PowerReport(n_max)
    delta = delta_r(r)
    lambdas = {}
    for n in range(1, n_max + 1):
        lambdas[n] = lambda_r_n(r, n)
        reference = None
        for eps in SignFunction.all_of_length(n):
            _logger.debug("verify_section2: n=%d eps=%s", n, eps)
            rp = r_power(r, eps, n)
            report.checked += 1
            result = cyb_check(rp)
            if not result.holds:
                report.failures.append(
                    PowerFailure(n, eps, "a", "classical Yang-Baxter fails", result.defect)
                )
            if rp.antisym != lambdas[n]:
                report.failures.append(
                    PowerFailure(n, eps, "b", "antisymmetric part depends on eps")
                )
            try:
                cobracket = delta_r(rp)
            except ValueError as e:
                report.failures.append(PowerFailure(n, eps, "b", str(e)))
                continue
            if reference is None:
                reference = cobracket
            elif cobracket != reference:
                report.failures.append(
                    PowerFailure(n, eps, "b", "cobracket depends on eps")
                )
        lemma = lambdas[n] - diag_n(r.antisym, n) + mix_n(r.sym, n)
        if not lemma.is_zero():
            report.failures.append(
                PowerFailure(n, None, "c", "Λ^(n) - diag_n(Λ) != -Mix^n(s)", lemma)
            )
        if reference is not None:
            embedding = diag_map(r.algebra, n)
            if not is_bialgebra_embedding(embedding, delta, reference):
                report.failures.append(
                    PowerFailure(n, None, "e", "diag_n is not a bialgebra embedding")
                )
    for m in range(1, n_max):
        for n in range(1, n_max - m + 1):
            total = m + n
            left = block_embedding(r.algebra, m, total, 0)(lambdas[m])
            right = block_embedding(r.algebra, n, total, m)(lambdas[n])
            defect = left + right - fusion_mix(r, m, n) - lambdas[total]
            report.checked += 1
            if not defect.is_zero():
                report.failures.append(
                    PowerFailure(
                        total, None, "d", f"additivity fails for m={m}, n={n}", defect
                    )
                )
    if report.failures:
        _logger.info(
            "verify_section2(%s): %d failing clause(s)", r.label, len(report.failures)
        )
    return report


# --------------------------------------------------------------------------
# Built-in r-matrices and JSON records
# --------------------------------------------------------------------------


def standard_r_matrix(algebra: LieAlgebra | str) -> RMatrix:
    """The standard quasitriangular r-matrix of ``gl(n)``, ``sl(n)`` or ``abelian(n)``.

    ``r = Σ_{i<j} E_ij⊗E_ji + ½·C₀`` where ``C₀`` is the Cartan part of the
    trace-form Casimir. On ``abelian(n)`` it is ``½ Σ a_i⊗a_i``.
    """
    if isinstance(algebra, str):
        algebra = builtin_algebra(algebra)
    match = re.match(r"^(abelian|sl|gl)\((\d+)\)$", algebra.name)
    if not match or builtin_algebra(algebra.name) != algebra:
        raise ValueError(f"No standard r-matrix for {algebra.name}")
    family, n = match.group(1), int(match.group(2))
    half = Fraction(1, 2)
    coeffs: dict[tuple[str, str], Fraction] = {}
    if family == "abelian":
        for label in algebra.basis_labels:
            coeffs[(label, label)] = half
    else:
        labels = {}
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                if i != j:
                    labels[(i, j)] = f"E{i}{j}"
        if family == "sl" and n == 2:
            labels = {(1, 2): "e", (2, 1): "f"}
        for i, j in itertools.combinations(range(1, n + 1), 2):
            coeffs[(labels[(i, j)], labels[(j, i)])] = Fraction(1)
        if family == "gl":
            for i in range(1, n + 1):
                coeffs[(f"E{i}{i}", f"E{i}{i}")] = half
        else:
            cartan = ["h"] if n == 2 else [f"H{k}" for k in range(1, n)]
            for k in range(1, n):
                for m in range(1, n):
                    inverse = Fraction(min(k, m) * (n - max(k, m)), n)
                    coeffs[(cartan[k - 1], cartan[m - 1])] = half * inverse
    full = algebra.tensor(coeffs, degree=2)
    return RMatrix.from_tensor(full, name=f"{algebra.name}_standard")


_BUILTIN_R_PATTERN = re.compile(r"^(abelian|sl|gl)(\d+)_(standard|zero)$")


@lru_cache(maxsize=32)
def _cached_builtin(name: str) -> RMatrix:
    match = _BUILTIN_R_PATTERN.match(name)
    if not match:
        raise ValueError(f"Unknown built-in r-matrix: {name!r}")
    algebra = builtin_algebra(f"{match.group(1)}({match.group(2)})")
    if match.group(3) == "zero":
        return RMatrix.zero(algebra)
    return standard_r_matrix(algebra)


def builtin_r_matrix(name: str) -> RMatrix:
    """Resolve ``sl2_standard``, ``gl2_standard``, ``abelian2_zero`` and friends.

    Every call returns a new object; only the validated parts are shared.
    """
    name = name.strip()
    r = _cached_builtin(name)
    return RMatrix(r.algebra, r.sym, r.antisym, name=name, validate=False)


def r_matrix_to_record(r: RMatrix) -> dict:
    return {
        "algebra": algebra_to_record(r.algebra),
        "s": [[i, j, scalar_to_json(c)] for (i, j), c in sorted(r.sym.items())],
        "lambda": [[i, j, scalar_to_json(c)] for (i, j), c in sorted(r.antisym.items())],
    }


def r_matrix_from_record(record, algebra: LieAlgebra | None = None) -> RMatrix:
    """Build an r-matrix from a built-in name or an inline record.

    ``algebra`` is used when the record does not name its own.
    """
    if isinstance(record, str):
        r = builtin_r_matrix(record)
        if algebra is not None and r.algebra != algebra:
            raise AlgebraMismatchError(
                f"r-matrix {record!r} lives over {r.algebra.name}, not {algebra.name}"
            )
        return r
    if not isinstance(record, Mapping):
        raise ValueError("An r-matrix record must be a name or an object")
    if "algebra" in record:
        alg = algebra_from_record(record["algebra"])
    elif algebra is not None:
        alg = algebra
    else:
        raise ValueError("r-matrix record is missing 'algebra'")
    for entry in record.get("lambda", []):
        if entry[0] >= entry[1]:
            raise ValueError(f"lambda entries need i < j, got {entry[:2]}")
    sym = Tensor(alg, 2, {(i, j): to_scalar(c) for i, j, c in record.get("s", [])})
    antisym = AltTensor(
        alg, 2, {(i, j): to_scalar(c) for i, j, c in record.get("lambda", [])}
    )
    return RMatrix(alg, sym, antisym, name=record.get("name"))
