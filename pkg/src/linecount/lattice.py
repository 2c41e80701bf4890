"""The slicing lattice: construction, reduction, enumeration, residues.

For a form F and a base point y with nonzero gradient, the linear condition
grad F(y) . x = 0 carves out a saturated rank-(n-1) sublattice of Z^n: the
slicing lattice.  Everything downstream — exponential sums, complete sums
mod q, box counts — happens on this lattice, so this module provides:

  * the primitive coefficient vector of the linear condition,
  * a saturated kernel basis in Hermite-style echelon form,
  * exact-rational LLL reduction (Lovasz parameter 3/4),
  * a per-axis coefficient box containing all lattice points of sup-norm
    at most X (computed from the exact dual basis),
  * a deterministic point stream by recursive interval bounding, and
  * the image of the lattice modulo q with exact cardinality.

All arithmetic here is exact (int / Fraction); determinants are kept
squared so no square roots ever appear.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, List, Optional, Sequence, Tuple

from .errors import DimensionMismatch, ZeroVectorInput
from .forms import HomogeneousForm, gradient

IntVector = Sequence[int]


@dataclass(frozen=True)
class LinearSlice:
    """Primitive coefficient vector of the degree-1 slice condition.

    Fields:
        vector: integer vector l with content 1 and first nonzero entry
            positive; l is proportional to grad F(y).
        content: the positive integer g with grad F(y) = g * (sign) * l
            (0 when the gradient vanishes).
        all_zero: True when grad F(y) = 0 (degenerate base point; no
            slicing lattice exists).
    """

    vector: Tuple[int, ...]
    content: int
    all_zero: bool


@dataclass(frozen=True)
class IntegerLattice:
    """A saturated sublattice of Z^n given by basis rows.

    Fields:
        ambient_dim: n.
        rank: number of basis rows s.
        basis: s x n integer matrix, rows are basis vectors.
        covolume_sq: exact integer det(B B^T).
        minima_proxy: exact squared Euclidean norms of the basis rows, in
            storage order; after reduction these proxy the successive
            minima (all comparisons in this package are done on squares).
    """

    ambient_dim: int
    rank: int
    basis: Tuple[Tuple[int, ...], ...]
    covolume_sq: int
    minima_proxy: Tuple[int, ...]


@dataclass(frozen=True)
class BoxProfile:
    """Per-axis half-widths of the lattice-coordinate box for sup-norm X.

    half_widths[t] bounds |xi_t| for every lattice point x = sum xi_t b_t
    with |x|_inf <= X; they equal scale * X * (l1 norm of the t-th exact
    dual-basis row), so the box is sound by construction.
    """

    half_widths: Tuple[Fraction, ...]
    scale: Fraction

    @property
    def int_bounds(self) -> Tuple[int, ...]:
        """Integer truncations: xi_t ranges over [-b, b] with b = floor."""
        return tuple(int(w) for w in self.half_widths)

    @property
    def cardinality(self) -> int:
        """Number of integer vectors inside the box."""
        out = 1
        for b in self.int_bounds:
            out *= 2 * b + 1
        return out


@dataclass(frozen=True)
class ResidueImage:
    """The image of a lattice in (Z/q)^n, with exact cardinality.

    generators are the rows of the integer Hermite normal form of the
    stacked matrix [basis; q*I]; row t contributes multiples
    0, 1, ..., counts[t]-1, and the map
    (c_1, .., c_n) -> sum_t c_t * generators[t] mod q
    enumerates every residue exactly once.
    """

    ambient_dim: int
    modulus: int
    cardinality: int
    generators: Tuple[Tuple[int, ...], ...]
    counts: Tuple[int, ...]

    def __iter__(self) -> Iterator[Tuple[int, ...]]:
        q = self.modulus
        n = self.ambient_dim

        def rec(t: int, acc: Tuple[int, ...]):
            if t == len(self.generators):
                yield acc
                return
            row = self.generators[t]
            for c in range(self.counts[t]):
                nxt = tuple((a + c * r) % q for a, r in zip(acc, row))
                yield from rec(t + 1, nxt)

        yield from rec(0, (0,) * n)


# ---------------------------------------------------------------------------
# Exact integer linear algebra helpers
# ---------------------------------------------------------------------------

def hermite_normal_form(rows: Sequence[IntVector]) -> List[List[int]]:
    """Row-style Hermite normal form (pivots positive, entries above them
    reduced into [0, pivot)); zero rows are dropped.
    """
    matrix = [list(map(int, row)) for row in rows]
    if not matrix:
        return []
    ncols = len(matrix[0])
    pivot_row = 0
    for col in range(ncols):
        # find a row at or below pivot_row with nonzero entry in col, and
        # run a gcd sweep so only one survives
        r = pivot_row
        while True:
            nonzero = [i for i in range(pivot_row, len(matrix))
                       if matrix[i][col] != 0]
            if len(nonzero) <= 1:
                break
            nonzero.sort(key=lambda i: abs(matrix[i][col]))
            small, other = nonzero[0], nonzero[1]
            factor = matrix[other][col] // matrix[small][col]
            matrix[other] = [a - factor * b
                             for a, b in zip(matrix[other], matrix[small])]
        survivors = [i for i in range(pivot_row, len(matrix))
                     if matrix[i][col] != 0]
        if not survivors:
            continue
        r = survivors[0]
        matrix[pivot_row], matrix[r] = matrix[r], matrix[pivot_row]
        if matrix[pivot_row][col] < 0:
            matrix[pivot_row] = [-v for v in matrix[pivot_row]]
        pivot = matrix[pivot_row][col]
        for i in range(pivot_row):
            factor = matrix[i][col] // pivot  # floor => remainder in [0, pivot)
            if factor:
                matrix[i] = [a - factor * b
                             for a, b in zip(matrix[i], matrix[pivot_row])]
        pivot_row += 1
    return [row for row in matrix[:pivot_row]]


def gram_matrix(rows: Sequence[IntVector]) -> List[List[int]]:
    return [[sum(a * b for a, b in zip(u, v)) for v in rows] for u in rows]


def _det_fraction(matrix: Sequence[Sequence[int]]) -> Fraction:
    m = [[Fraction(v) for v in row] for row in matrix]
    size = len(m)
    det = Fraction(1)
    for col in range(size):
        pivot = next((r for r in range(col, size) if m[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        det *= m[col][col]
        for r in range(col + 1, size):
            if m[r][col]:
                factor = m[r][col] / m[col][col]
                m[r] = [a - factor * b for a, b in zip(m[r], m[col])]
    return det


def covolume_squared(rows: Sequence[IntVector]) -> int:
    """Exact det(B B^T) for integer basis rows."""
    det = _det_fraction(gram_matrix(rows))
    assert det.denominator == 1
    return int(det)


def _solve_fraction(matrix: List[List[Fraction]],
                    rhs: List[Fraction]) -> Optional[List[Fraction]]:
    """Solve a square exact system; None when singular."""
    size = len(matrix)
    m = [row[:] + [rhs[i]] for i, row in enumerate(matrix)]
    for col in range(size):
        pivot = next((r for r in range(col, size) if m[r][col] != 0), None)
        if pivot is None:
            return None
        m[col], m[pivot] = m[pivot], m[col]
        inv = 1 / m[col][col]
        m[col] = [v * inv for v in m[col]]
        for r in range(size):
            if r != col and m[r][col]:
                factor = m[r][col]
                m[r] = [a - factor * b for a, b in zip(m[r], m[col])]
    return [m[r][size] for r in range(size)]


def dual_basis(lattice: IntegerLattice) -> List[List[Fraction]]:
    """Rows d_t with d_t . b_u = delta_{tu}: the matrix (B B^T)^{-1} B."""
    gram = [[Fraction(v) for v in row] for row in gram_matrix(lattice.basis)]
    out = []
    for t in range(lattice.rank):
        rhs = [Fraction(1 if u == t else 0) for u in range(lattice.rank)]
        coeffs = _solve_fraction([row[:] for row in gram], rhs)
        if coeffs is None:  # cannot happen for independent rows
            raise ValueError("basis rows are dependent")
        out.append([
            sum(coeffs[u] * lattice.basis[u][i] for u in range(lattice.rank))
            for i in range(lattice.ambient_dim)
        ])
    return out


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def lattice_from_basis(rows: Sequence[IntVector]) -> IntegerLattice:
    """Package basis rows into an IntegerLattice with exact invariants."""
    basis = tuple(tuple(int(v) for v in row) for row in rows)
    if not basis:
        raise ZeroVectorInput("a lattice needs at least one basis vector")
    n = len(basis[0])
    if any(len(row) != n for row in basis):
        raise DimensionMismatch("basis rows have unequal lengths")
    cov_sq = covolume_squared(basis)
    if cov_sq == 0:
        raise ZeroVectorInput("basis rows are linearly dependent")
    return IntegerLattice(
        ambient_dim=n, rank=len(basis), basis=basis, covolume_sq=cov_sq,
        minima_proxy=tuple(sum(v * v for v in row) for row in basis))


def linear_slice_coefficients(form: HomogeneousForm,
                              y: IntVector) -> LinearSlice:
    """Primitive integer vector of the linear slice condition at y.

    The degree-1 slice of F along y is proportional to grad F(y) . x; this
    returns grad F(y) divided by its content, sign-normalised so the first
    nonzero entry is positive.

    Raises:
        ZeroVectorInput: y is the zero vector.
    """
    if len(y) != form.nvars:
        raise DimensionMismatch(
            f"base point has length {len(y)}, form has {form.nvars} variables")
    if all(v == 0 for v in y):
        raise ZeroVectorInput("the slicing lattice needs a nonzero base point")
    grad = gradient(form, y)
    content = 0
    for g in grad:
        content = math.gcd(content, abs(g))
    if content == 0:
        return LinearSlice(vector=tuple(0 for _ in grad), content=0,
                           all_zero=True)
    vec = [g // content for g in grad]
    first = next(v for v in vec if v != 0)
    if first < 0:
        vec = [-v for v in vec]
    return LinearSlice(vector=tuple(vec), content=content, all_zero=False)


def kernel_lattice(l: IntVector) -> IntegerLattice:
    """Saturated integer kernel of a single linear form, echelon basis.

    The kernel {x in Z^n : l . x = 0} is found by a unimodular column
    sweep that turns l into (g, 0, ..., 0); the transformation columns
    orthogonal to l form a saturated basis, which is then put into
    Hermite-style echelon form.

    Raises:
        ZeroVectorInput: l = 0 (no hyperplane to slice along).
    """
    l = [int(v) for v in l]
    n = len(l)
    if n < 2:
        raise ZeroVectorInput("need an ambient dimension of at least 2")
    if all(v == 0 for v in l):
        raise ZeroVectorInput("kernel of the zero form is not a hyperplane")
    # columns of m form the running unimodular transformation
    m = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    g = l[0]
    for i in range(1, n):
        if l[i] == 0:
            continue
        if g == 0:
            # swap roles: column i becomes the gcd carrier
            for row in m:
                row[0], row[i] = row[i], row[0]
            g = l[i]
            continue
        gg, a, b = _extended_gcd(g, l[i])
        u, v = g // gg, l[i] // gg
        for row in m:
            c0, ci = row[0], row[i]
            row[0] = a * c0 + b * ci
            row[i] = -v * c0 + u * ci
        g = gg
    kernel_rows = [[m[r][c] for r in range(n)] for c in range(1, n)]
    echelon = hermite_normal_form(kernel_rows)
    return lattice_from_basis(echelon)


def _extended_gcd(a: int, b: int) -> Tuple[int, int, int]:
    """(g, x, y) with a*x + b*y = g = gcd(a, b), g >= 0."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        quotient = old_r // r
        old_r, r = r, old_r - quotient * r
        old_s, s = s, old_s - quotient * s
        old_t, t = t, old_t - quotient * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def slicing_lattice(form: HomogeneousForm, y: IntVector) -> IntegerLattice:
    """Reduced slicing lattice at y in one call.

    Raises:
        ZeroVectorInput: y = 0, or grad F(y) = 0 (degenerate base point —
            callers that want to handle the degenerate case should inspect
            linear_slice_coefficients first).
    """
    sliced = linear_slice_coefficients(form, y)
    if sliced.all_zero:
        raise ZeroVectorInput(
            "gradient vanishes at y: no slicing hyperplane")
    return reduce_basis(kernel_lattice(sliced.vector))


# ---------------------------------------------------------------------------
# Reduction
# ---------------------------------------------------------------------------

_LOVASZ = Fraction(3, 4)


def _gram_schmidt(basis: List[List[int]]
                  ) -> Tuple[List[List[Fraction]], List[Fraction]]:
    s = len(basis)
    star: List[List[Fraction]] = []
    norms: List[Fraction] = []
    mu: List[List[Fraction]] = [[Fraction(0)] * s for _ in range(s)]
    for i in range(s):
        vec = [Fraction(v) for v in basis[i]]
        for j in range(i):
            if norms[j] == 0:
                continue
            mu[i][j] = Fraction(
                sum(Fraction(a) * b for a, b in zip(basis[i], star[j]))
            ) / norms[j]
            vec = [a - mu[i][j] * b for a, b in zip(vec, star[j])]
        star.append(vec)
        norms.append(sum(v * v for v in vec))
    return mu, norms


def lll_reduce(rows: Sequence[IntVector],
               lovasz: Fraction = _LOVASZ) -> List[List[int]]:
    """Textbook LLL over exact rationals; returns new basis rows."""
    basis = [list(map(int, row)) for row in rows]
    s = len(basis)
    if s <= 1:
        return basis
    k = 1
    while k < s:
        mu, norms = _gram_schmidt(basis)
        for j in range(k - 1, -1, -1):
            if abs(mu[k][j]) > Fraction(1, 2):
                r = _round_half_even(mu[k][j])
                basis[k] = [a - r * b for a, b in zip(basis[k], basis[j])]
                mu, norms = _gram_schmidt(basis)
        if norms[k] >= (lovasz - mu[k][k - 1] ** 2) * norms[k - 1]:
            k += 1
        else:
            basis[k], basis[k - 1] = basis[k - 1], basis[k]
            k = max(k - 1, 1)
    return basis


def _round_half_even(x: Fraction) -> int:
    floor = x.numerator // x.denominator
    rem = x - floor
    if rem > Fraction(1, 2):
        return floor + 1
    if rem < Fraction(1, 2):
        return floor
    return floor + (floor % 2)


def reduce_basis(lattice: IntegerLattice) -> IntegerLattice:
    """LLL-reduce the basis (Lovasz 3/4); covolume is unchanged.

    The reduced rows' squared norms populate minima_proxy and obey the
    quality bound prod |b_i|^2 <= 2^(s(s-1)/2) * covolume_sq.
    """
    reduced = lll_reduce(lattice.basis)
    out = lattice_from_basis(reduced)
    assert out.covolume_sq == lattice.covolume_sq
    return out


# ---------------------------------------------------------------------------
# Boxes and enumeration
# ---------------------------------------------------------------------------

def box_profile(lattice: IntegerLattice, x_bound: int,
                scale: Fraction = Fraction(1)) -> BoxProfile:
    """Sound per-axis coefficient box for sup-norm <= x_bound.

    half_widths[t] = scale * x_bound * ||dual row t||_1, which dominates
    |xi_t| for every lattice point in the cube, because
    xi_t = dual_t . x and |x|_inf <= x_bound.
    """
    if x_bound < 0:
        raise ValueError("x_bound must be >= 0")
    duals = dual_basis(lattice)
    widths = tuple(scale * x_bound * sum(abs(v) for v in row)
                   for row in duals)
    return BoxProfile(half_widths=widths, scale=scale)


def enumerate_points(lattice: IntegerLattice, x_bound: int,
                     leading_range: Optional[Tuple[int, int]] = None,
                     ) -> Iterator[Tuple[int, ...]]:
    """All lattice points with |x|_inf <= x_bound, each exactly once.

    The stream is deterministic: lexicographic in the lattice coordinates
    with respect to the stored basis, most significant coordinate first.
    Recursive interval bounding keeps the search exact: partial ambient
    sums are integers, unreachable tails are pruned with precomputed
    bounds, and a final exact sup-norm check guards the leaves.

    Args:
        lattice: the (preferably reduced) lattice.
        x_bound: sup-norm bound X >= 0.
        leading_range: optional inclusive (lo, hi) restriction on the first
            lattice coordinate, for partitioning across workers.

    Yields:
        Ambient integer points as tuples.
    """
    if x_bound < 0:
        return
    s = lattice.rank
    n = lattice.ambient_dim
    basis = lattice.basis
    box = box_profile(lattice, x_bound).int_bounds
    # tail_bound[t][i] = max possible |sum_{u >= t} xi_u * b_u[i]|
    tail_bound = [[0] * n for _ in range(s + 1)]
    for t in range(s - 1, -1, -1):
        for i in range(n):
            tail_bound[t][i] = tail_bound[t + 1][i] + box[t] * abs(basis[t][i])

    first_lo, first_hi = -box[0], box[0]
    if leading_range is not None:
        first_lo = max(first_lo, leading_range[0])
        first_hi = min(first_hi, leading_range[1])

    partial = [0] * n

    def rec(t: int) -> Iterator[Tuple[int, ...]]:
        if t == s:
            if all(abs(v) <= x_bound for v in partial):
                yield tuple(partial)
            return
        lo = first_lo if t == 0 else -box[t]
        hi = first_hi if t == 0 else box[t]
        row = basis[t]
        for i in range(n):
            b = row[i]
            slack = x_bound + tail_bound[t + 1][i]
            if b > 0:
                # partial[i] + xi*b must lie within +-slack
                lo = max(lo, _ceil_div(-slack - partial[i], b))
                hi = min(hi, _floor_div(slack - partial[i], b))
            elif b < 0:
                lo = max(lo, _ceil_div(slack - partial[i], b))
                hi = min(hi, _floor_div(-slack - partial[i], b))
            elif abs(partial[i]) > slack:
                return
        for xi in range(lo, hi + 1):
            for i in range(n):
                partial[i] += xi * row[i]
            yield from rec(t + 1)
            for i in range(n):
                partial[i] -= xi * row[i]

    yield from rec(0)


def _floor_div(a: int, b: int) -> int:
    return a // b


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def contains(lattice: IntegerLattice, x: IntVector) -> bool:
    """Exact membership: does x have integer lattice coordinates?"""
    if len(x) != lattice.ambient_dim:
        raise DimensionMismatch("point has wrong ambient dimension")
    gram = [[Fraction(v) for v in row] for row in gram_matrix(lattice.basis)]
    rhs = [Fraction(sum(b * xi for b, xi in zip(row, x)))
           for row in lattice.basis]
    coeffs = _solve_fraction(gram, rhs)
    if coeffs is None or any(c.denominator != 1 for c in coeffs):
        return False
    recon = [
        sum(int(c) * lattice.basis[t][i] for t, c in enumerate(coeffs))
        for i in range(lattice.ambient_dim)
    ]
    return all(a == b for a, b in zip(recon, x))


# ---------------------------------------------------------------------------
# Residue images
# ---------------------------------------------------------------------------

def residue_image(lattice: IntegerLattice, q: int) -> ResidueImage:
    """Image of the lattice in (Z/q)^n with exact cardinality.

    The Hermite normal form of the stacked matrix [basis; q*I] has n rows
    with positive diagonal d_i dividing q; the image is generated by those
    rows with strides q/d_i, and its cardinality is prod(q / d_i).
    """
    if q < 1:
        raise ValueError("modulus must be >= 1")
    n = lattice.ambient_dim
    stacked = [list(row) for row in lattice.basis]
    for i in range(n):
        stacked.append([q if j == i else 0 for j in range(n)])
    hnf = hermite_normal_form(stacked)
    assert len(hnf) == n
    diag = [hnf[i][i] for i in range(n)]
    counts = []
    card = 1
    for d in diag:
        assert d > 0 and q % d == 0, "diagonal must divide the modulus"
        counts.append(q // d)
        card *= q // d
    generators = tuple(tuple(v % q for v in row) for row in hnf)
    return ResidueImage(ambient_dim=n, modulus=q, cardinality=card,
                        generators=generators, counts=tuple(counts))


# ---------------------------------------------------------------------------
# Serialisation
# ---------------------------------------------------------------------------

def lattice_to_json(lattice: IntegerLattice) -> dict:
    """Debug dump with exact integers as decimal strings."""
    return {
        "ambient_dim": lattice.ambient_dim,
        "rank": lattice.rank,
        "basis": [[str(v) for v in row] for row in lattice.basis],
        "covolume_sq": str(lattice.covolume_sq),
        "minima_proxy": [str(v) for v in lattice.minima_proxy],
    }


def lattice_to_json_text(lattice: IntegerLattice) -> str:
    return json.dumps(lattice_to_json(lattice), indent=2, sort_keys=True)
