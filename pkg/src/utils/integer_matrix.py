"""
Integer Lattices - exact kernels, images and quotients over ZZ via Smith normal form
"""
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

from sympy import Matrix, ZZ, eye, zeros
from sympy.matrices.normalforms import smith_normal_decomp

from src.core.errors import MalformedPresentationError


@dataclass(frozen=True)
class SmithDecomposition:
    """a == left * m * right with a diagonal; left/right unimodular."""
    diagonal_form: Matrix
    left: Matrix
    right: Matrix

    @property
    def invariants(self) -> Tuple[int, ...]:
        rows, cols = self.diagonal_form.shape
        values = (abs(int(self.diagonal_form[i, i])) for i in range(min(rows, cols)))
        return tuple(v for v in values if v != 0)

    @property
    def rank(self) -> int:
        return len(self.invariants)


@dataclass(frozen=True)
class AbelianInvariants:
    """Rank plus torsion divisor chain of a finitely generated abelian group."""
    free_rank: int = 0
    torsion: Tuple[int, ...] = ()

    def __str__(self) -> str:
        parts = ["Z"] * self.free_rank + [f"Z/{d}" for d in self.torsion]
        return " x ".join(parts) if parts else "0"

    @property
    def is_zero(self) -> bool:
        return self.free_rank == 0 and not self.torsion


def integer_matrix(rows: int, cols: int, entries: Optional[dict] = None) -> Matrix:
    """Dense integer matrix from a sparse {(row, col): value} table."""
    m = zeros(rows, cols)
    for (r, c), v in (entries or {}).items():
        m[r, c] += v
    return m


def hstack(rows: int, blocks: Iterable[Matrix]) -> Matrix:
    out = zeros(rows, 0)
    for block in blocks:
        if block.rows != rows:
            raise MalformedPresentationError(f"block with {block.rows} rows stacked onto {rows}")
        out = out.row_join(block)
    return out


def block_diagonal(blocks: Sequence[Matrix]) -> Matrix:
    rows = sum(b.rows for b in blocks)
    cols = sum(b.cols for b in blocks)
    out = zeros(rows, cols)
    r = c = 0
    for b in blocks:
        out[r:r + b.rows, c:c + b.cols] = b
        r += b.rows
        c += b.cols
    return out


def smith(m: Matrix) -> SmithDecomposition:
    if m.rows == 0 or m.cols == 0:
        return SmithDecomposition(m, eye(m.rows), eye(m.cols))
    a, s, t = smith_normal_decomp(m, domain=ZZ)
    return SmithDecomposition(a, s, t)


def _is_zero_column(m: Matrix, j: int) -> bool:
    return all(m[i, j] == 0 for i in range(m.rows))


def kernel_basis(m: Matrix) -> Matrix:
    """Z-basis (as columns) of {x in Z^n : m x = 0}."""
    if m.rows == 0:
        return eye(m.cols)
    if m.cols == 0:
        return zeros(0, 0)
    dec = smith(m)
    cols = [j for j in range(m.cols) if _is_zero_column(dec.diagonal_form, j)]
    return hstack(m.cols, (dec.right[:, j] for j in cols))


def lattice_basis(generators: Matrix) -> Matrix:
    """Z-basis of the column span of `generators`."""
    if generators.cols == 0 or generators.rows == 0:
        return zeros(generators.rows, 0)
    dec = smith(generators)
    image = generators * dec.right
    cols = [j for j in range(image.cols) if not _is_zero_column(dec.diagonal_form, j)]
    return hstack(generators.rows, (image[:, j] for j in cols))


def solve_columns(basis: Matrix, vectors: Matrix) -> Optional[Matrix]:
    """Integer Y with basis * Y == vectors from a single Smith decomposition, or None when some
    column lies outside the lattice.

    `basis` must have independent columns.
    """
    k, m = basis.cols, vectors.cols
    if m == 0:
        return zeros(k, 0)
    if k == 0:
        return zeros(0, m) if all(v == 0 for v in vectors) else None
    dec = smith(basis)
    rhs = dec.left * vectors
    w = zeros(k, m)
    for i in range(rhs.rows):
        d = int(dec.diagonal_form[i, i]) if i < k else 0
        for j in range(m):
            value = int(rhs[i, j])
            if d == 0:
                if value != 0:
                    return None
                continue
            q, r = divmod(value, d)
            if r != 0:
                return None
            w[i, j] = q
    y = dec.right * w
    if basis * y != vectors:
        return None
    return y


def solve_in_basis(basis: Matrix, vector: Matrix) -> Optional[Matrix]:
    """Integer coordinates y with basis * y == vector, or None when vector is outside the lattice."""
    return solve_columns(basis, vector)


def in_span(generators: Matrix, vector: Matrix) -> bool:
    return solve_in_basis(lattice_basis(generators), vector) is not None


def span_contains(big: Matrix, small: Matrix) -> bool:
    if all(v == 0 for v in small):
        return True
    return solve_columns(lattice_basis(big), small) is not None


def spans_equal(first: Matrix, second: Matrix) -> bool:
    return span_contains(first, second) and span_contains(second, first)


def quotient_invariants(relations: Matrix, ambient: int) -> AbelianInvariants:
    """Invariants of Z^ambient / span(relations)."""
    if relations.cols == 0 or ambient == 0:
        return AbelianInvariants(free_rank=ambient)
    dec = smith(relations)
    invariants = dec.invariants
    return AbelianInvariants(
        free_rank=ambient - len(invariants),
        torsion=tuple(sorted(d for d in invariants if d > 1)),
    )


@dataclass(frozen=True)
class PresentedGroup:
    """Z^generators / span(relations columns)."""
    generators: int
    relations: Matrix = field(default=None)

    def __post_init__(self):
        if self.relations is None:
            object.__setattr__(self, "relations", zeros(self.generators, 0))
        if self.relations.rows != self.generators:
            raise MalformedPresentationError(
                f"relation matrix has {self.relations.rows} rows for {self.generators} generators"
            )

    @classmethod
    def free(cls, rank: int) -> "PresentedGroup":
        return cls(rank, zeros(rank, 0))

    @classmethod
    def cyclic(cls, order: int) -> "PresentedGroup":
        if order == 0:
            return cls.free(1)
        return cls(1, Matrix([[order]]))

    def invariants(self) -> AbelianInvariants:
        return quotient_invariants(self.relations, self.generators)

    def is_zero_element(self, vector: Matrix) -> bool:
        return in_span(self.relations, vector)

    def __str__(self) -> str:
        return str(self.invariants())


def direct_sum(groups: Sequence[PresentedGroup]) -> PresentedGroup:
    return PresentedGroup(sum(g.generators for g in groups), block_diagonal([g.relations for g in groups]))


def check_homomorphism(source: PresentedGroup, target: PresentedGroup, matrix: Matrix) -> bool:
    """A matrix defines a map of presented groups iff it sends relations into relations."""
    if matrix.shape != (target.generators, source.generators):
        return False
    return span_contains(target.relations, matrix * source.relations)


def preimage_lift(matrix: Matrix, target_relations: Matrix) -> Matrix:
    """Generators of {x : matrix x in span(target_relations)}."""
    n = matrix.cols
    stacked = matrix.row_join(-target_relations)
    ker = kernel_basis(stacked)
    if ker.cols == 0:
        return zeros(n, 0)
    return ker[:n, :]


@dataclass(frozen=True)
class Subquotient:
    """Z-basis of a cycle lattice plus boundary coordinates in that basis.

    The represented group is Z^len(basis) / span(boundary_coordinates).
    """
    cycle_basis: Matrix
    boundary_coordinates: Matrix

    def as_group(self) -> PresentedGroup:
        return PresentedGroup(self.cycle_basis.cols, self.boundary_coordinates)

    def invariants(self) -> AbelianInvariants:
        return self.as_group().invariants()

    def coordinates(self, vectors: Matrix) -> Matrix:
        """Cycle-basis coordinates of one or more cycle columns."""
        y = solve_columns(self.cycle_basis, vectors)
        if y is None:
            raise MalformedPresentationError("vector is not a cycle")
        return y


def cohomology_subquotient(
    groups: Sequence[PresentedGroup],
    differentials: Sequence[Matrix],
    degree: int,
) -> Subquotient:
    """H^degree of C^0 -> C^1 -> ... with differentials[n]: C^n -> C^{n+1}.

    Requires differentials[degree] to exist. Cycles are {x : d x in R_{n+1}},
    boundaries are R_n + im d_{n-1}.
    """
    c = groups[degree]
    d = differentials[degree]
    nxt = groups[degree + 1]
    cycles = lattice_basis(preimage_lift(d, nxt.relations))
    boundary_blocks: List[Matrix] = [c.relations]
    if degree > 0:
        boundary_blocks.append(differentials[degree - 1])
    boundaries = hstack(c.generators, boundary_blocks)
    coords = solve_columns(cycles, boundaries)
    if coords is None:
        raise MalformedPresentationError(f"a boundary in degree {degree} is not a cycle")
    return Subquotient(cycles, coords)


def induced_map(source: Subquotient, target: Subquotient, chain_map: Matrix) -> Matrix:
    """Matrix of the map on subquotients induced by a map of ambient lattices."""
    return target.coordinates(chain_map * source.cycle_basis)


def direct_limit(
    groups: Sequence[PresentedGroup],
    arrows: Sequence[Tuple[int, int, Matrix]],
) -> PresentedGroup:
    """Colimit of a finite diagram of presented groups.

    `arrows` are (source index, target index, matrix). The colimit is the direct sum
    modulo relations and the identifications x ~ matrix(x).
    """
    total = direct_sum(groups)
    offsets = []
    acc = 0
    for g in groups:
        offsets.append(acc)
        acc += g.generators
    extra = []
    for src, dst, m in arrows:
        for j in range(groups[src].generators):
            col = zeros(total.generators, 1)
            col[offsets[src] + j, 0] -= 1
            for i in range(groups[dst].generators):
                col[offsets[dst] + i, 0] += m[i, j]
            extra.append(col)
    return PresentedGroup(total.generators, hstack(total.generators, [total.relations, *extra]))
