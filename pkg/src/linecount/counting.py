"""Exact enumeration of line-generating pairs and their Hessian strata.

Counts are always exact integers produced by explicit enumeration: the
x-side runs over the slicing lattice of the base point (or the full box in
the degenerate-gradient fallback) and applies the integer slice conditions;
the y-side scans the coefficient box for zeros of the form.  Vectorised
(numpy) evaluation is used for throughput, with exact object arithmetic as
the overflow fallback, so no float ever decides a count.
"""

from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    DomainError,
    NotOnHypersurface,
    ResourceLimit,
    ZeroVectorInput,
)
from .forms import (
    HomogeneousForm,
    _rational_rank,
    evaluate_batch,
    evaluate_form,
    hessian,
    integer_slice_form,
)
from .lattice import (
    box_profile,
    enumerate_points,
    kernel_lattice,
    linear_slice_coefficients,
    reduce_basis,
)

IntVector = Sequence[int]

_CHUNK_ROWS = 1 << 14


class FallbackFullBox(UserWarning):
    """The base point has vanishing gradient; scanning the full box."""


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PairCountReport:
    """Exact ordered-pair counts in the box |x| <= X, |y| <= Y."""

    x_bound: int
    y_bound: int
    total: int
    proportional_pairs: int
    stratum_rho: Optional[int] = None
    stratified: Optional[int] = None
    per_y_breakdown: Optional[Dict[Tuple[int, ...], int]] = None

    def to_json(self) -> dict:
        out = {
            "X": self.x_bound,
            "Y": self.y_bound,
            "total": self.total,
            "proportional": self.proportional_pairs,
        }
        if self.stratum_rho is not None:
            out["stratum_rho"] = self.stratum_rho
            out["stratified"] = self.stratified
        if self.per_y_breakdown is not None:
            out["per_y"] = {
                " ".join(str(v) for v in y): c
                for y, c in sorted(self.per_y_breakdown.items())
            }
        return out


@dataclass(frozen=True)
class StratumReport:
    """Count of base points with Hessian corank at least rho."""

    rho: int
    y_bound: int
    count: int
    fitted_exponent: float
    dyadic_counts: Tuple[Tuple[int, int], ...] = ()


@dataclass(frozen=True)
class M2Report:
    """Dimension of the second-order tangency space, two ways.

    ``span_dim`` comes from the span of the Hessian kernel together with the
    base point; ``system_dim`` from the rank of the degree-2 coefficient
    system restricted to the slicing lattice.  The two computations share no
    linear algebra, so agreement is a real consistency check.
    """

    span_dim: int
    system_dim: int

    @property
    def agree(self) -> bool:
        return self.span_dim == self.system_dim

    def __int__(self) -> int:
        return self.span_dim


# ---------------------------------------------------------------------------
# Budget accounting
# ---------------------------------------------------------------------------

class _Budget:
    """Mutable work meter shared across enumeration loops."""

    __slots__ = ("limit", "spent")

    def __init__(self, limit: Optional[int]) -> None:
        self.limit = limit
        self.spent = 0

    def charge(self, amount: int) -> None:
        self.spent += amount
        if self.limit is not None and self.spent > self.limit:
            raise ResourceLimit(
                f"enumeration needs more than {self.limit} point "
                f"evaluations", needed=self.spent, budget=self.limit)


# ---------------------------------------------------------------------------
# Shared enumeration plumbing
# ---------------------------------------------------------------------------

def _iter_box_chunks(nvars: int, bound: int,
                     chunk_rows: int = _CHUNK_ROWS) -> Iterator[np.ndarray]:
    """The integer box [-bound, bound]^nvars in row chunks (origin included)."""
    side = 2 * bound + 1
    total = side ** nvars
    for start in range(0, total, chunk_rows):
        idx = np.arange(start, min(start + chunk_rows, total), dtype=np.int64)
        coords = np.empty((idx.size, nvars), dtype=np.int64)
        rest = idx
        for i in range(nvars - 1, -1, -1):
            coords[:, i] = rest % side - bound
            rest = rest // side
        yield coords


def _iter_lattice_chunks(lattice, x_bound: int,
                         leading_range: Optional[Tuple[int, int]] = None,
                         chunk_rows: int = _CHUNK_ROWS,
                         ) -> Iterator[np.ndarray]:
    """Lattice points in the box, batched into integer row arrays."""
    buffer: List[Tuple[int, ...]] = []
    for point in enumerate_points(lattice, x_bound,
                                  leading_range=leading_range):
        buffer.append(point)
        if len(buffer) >= chunk_rows:
            yield np.array(buffer, dtype=np.int64)
            buffer = []
    if buffer:
        yield np.array(buffer, dtype=np.int64)


def _line_conditions(form: HomogeneousForm,
                     y: IntVector) -> List[object]:
    """Integer slice forms of degree 2..d that do not vanish identically.

    A point x of the slicing lattice spans a line with y exactly when all
    of these vanish at x (the degree-1 condition is lattice membership and
    the degree-0 condition is F(y) = 0, checked by the callers).
    """
    conditions = []
    for j in range(2, form.degree + 1):
        sliced = integer_slice_form(form, y, j)
        if not sliced.is_zero:
            conditions.append(sliced)
    return conditions


def _condition_mask(conditions, chunk: np.ndarray) -> np.ndarray:
    mask = np.ones(chunk.shape[0], dtype=bool)
    for condition in conditions:
        values = evaluate_batch(condition, chunk)
        mask &= (values == 0)
        if not mask.any():
            break
    return mask


def _point_chunks(form: HomogeneousForm, y: IntVector, x_bound: int,
                  leading_range: Optional[Tuple[int, int]] = None,
                  warn_fallback: bool = True) -> Iterator[np.ndarray]:
    """Chunks of candidate x for the pair condition with base point y.

    Normally the slicing lattice stream; when the gradient vanishes at y the
    lattice is undefined and the full box is scanned instead.
    """
    sliced = linear_slice_coefficients(form, y)
    if sliced.all_zero:
        if warn_fallback:
            warnings.warn(
                f"gradient vanishes at y={tuple(y)}; scanning the full box",
                FallbackFullBox, stacklevel=3)
        yield from _iter_box_chunks(form.nvars, x_bound)
        return
    lattice = reduce_basis(kernel_lattice(sliced.vector))
    yield from _iter_lattice_chunks(lattice, x_bound,
                                    leading_range=leading_range)


# ---------------------------------------------------------------------------
# Fixed-y counting
# ---------------------------------------------------------------------------

def count_fixed_y(form: HomogeneousForm, y: IntVector, x_bound: int, *,
                  workers: int = 1, budget: Optional[int] = None) -> int:
    """Exact number of x in [-X, X]^n spanning a (possibly degenerate)
    line with the base point y.

    Counts every x of the slicing lattice at which all slice conditions of
    degree 2..d vanish.  The zero vector and multiples of y are included;
    pair-level counts remove and tally them separately.

    Args:
        form: the form cutting out the hypersurface.
        y: nonzero integer base point (need not lie on the hypersurface).
        x_bound: sup-norm box bound X >= 0.
        workers: split the leading lattice coordinate across processes.
        budget: optional cap on the number of points examined.

    Raises:
        ZeroVectorInput: y = 0.
        ResourceLimit: the enumeration exceeded the budget.
    """
    if all(v == 0 for v in y):
        raise ZeroVectorInput("base point must be nonzero")
    if x_bound < 0:
        raise DomainError("x_bound must be nonnegative")
    if workers > 1:
        return _count_fixed_y_parallel(form, y, x_bound, workers, budget)
    meter = _Budget(budget)
    conditions = _line_conditions(form, y)
    count = 0
    for chunk in _point_chunks(form, y, x_bound):
        meter.charge(chunk.shape[0])
        count += int(_condition_mask(conditions, chunk).sum())
    return count


def _leading_ranges(lattice, x_bound: int,
                    parts: int) -> List[Tuple[int, int]]:
    """Split the first lattice coordinate's range into contiguous pieces."""
    radius = box_profile(lattice, x_bound).int_bounds[0]
    values = list(range(-radius, radius + 1))
    parts = max(1, min(parts, len(values)))
    step = math.ceil(len(values) / parts)
    return [(values[i], values[min(i + step, len(values)) - 1])
            for i in range(0, len(values), step)]


def _fixed_y_piece(form: HomogeneousForm, y: Tuple[int, ...], x_bound: int,
                   leading_range: Tuple[int, int],
                   budget: Optional[int]) -> int:
    meter = _Budget(budget)
    conditions = _line_conditions(form, y)
    count = 0
    for chunk in _point_chunks(form, y, x_bound,
                               leading_range=leading_range,
                               warn_fallback=False):
        meter.charge(chunk.shape[0])
        count += int(_condition_mask(conditions, chunk).sum())
    return count


def _count_fixed_y_parallel(form: HomogeneousForm, y: IntVector,
                            x_bound: int, workers: int,
                            budget: Optional[int]) -> int:
    sliced = linear_slice_coefficients(form, y)
    if sliced.all_zero:
        # degenerate base point: no lattice coordinate to partition on
        return count_fixed_y(form, y, x_bound, budget=budget)
    lattice = reduce_basis(kernel_lattice(sliced.vector))
    pieces = _leading_ranges(lattice, x_bound, workers)
    y = tuple(int(v) for v in y)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_fixed_y_piece, form, y, x_bound, piece,
                               budget)
                   for piece in pieces]
        return sum(f.result() for f in futures)


# ---------------------------------------------------------------------------
# Hessian rank stratification
# ---------------------------------------------------------------------------

def hessian_corank(form: HomogeneousForm, y: IntVector) -> int:
    """Exact dimension of the kernel of the Hessian at y (over Q)."""
    matrix = hessian(form, y)
    return form.nvars - _rational_rank([list(row) for row in matrix])


def _primitive(vector: Sequence[int]) -> Tuple[int, ...]:
    g = 0
    for v in vector:
        g = math.gcd(g, abs(int(v)))
    return tuple(int(v) // g for v in vector)


def _proportional_count(y: IntVector, x_bound: int) -> int:
    """Number of nonzero multiples of y inside [-X, X]^n.

    Every such x automatically spans a line with y once F(y) = 0, so this
    subcount never needs enumeration.
    """
    base = _primitive(y)
    reach = max(abs(v) for v in base)
    return 2 * (x_bound // reach)


def stratum_count(form: HomogeneousForm, y_bound: int,
                  rho: int) -> StratumReport:
    """Count base points on the hypersurface with Hessian corank >= rho.

    Scans 0 < |y| <= Y exactly, then reuses the collected sup-norms to build
    the dyadic growth table and a least-squares fitted exponent of the count
    against the box size (nan when fewer than two dyadic boxes are nonempty).
    """
    n = form.nvars
    if not 1 <= rho <= n:
        raise DomainError(f"rho must be in 1..{n}")
    if y_bound < 1:
        raise DomainError("y_bound must be positive")
    norms: List[int] = []
    for chunk in _iter_box_chunks(n, y_bound):
        values = evaluate_batch(form, chunk)
        for row in chunk[values == 0]:
            y = tuple(int(v) for v in row)
            if all(v == 0 for v in y):
                continue
            if hessian_corank(form, y) >= rho:
                norms.append(max(abs(v) for v in y))
    dyadic: List[Tuple[int, int]] = []
    size = 2
    while size <= y_bound:
        dyadic.append((size, sum(1 for m in norms if m <= size)))
        size *= 2
    fitted = float("nan")
    points = [(math.log(s), math.log(c)) for s, c in dyadic if c > 0]
    if len(points) >= 2:
        xs = np.array([p[0] for p in points])
        ys = np.array([p[1] for p in points])
        fitted = float(np.polyfit(xs, ys, 1)[0])
    return StratumReport(rho=rho, y_bound=y_bound, count=len(norms),
                         fitted_exponent=fitted,
                         dyadic_counts=tuple(dyadic))


# ---------------------------------------------------------------------------
# Second-order tangency dimension
# ---------------------------------------------------------------------------

def _nullspace_basis(matrix: Sequence[Sequence[int]]) -> List[List[Fraction]]:
    """Exact basis of the rational kernel of an integer matrix."""
    rows = [[Fraction(v) for v in row] for row in matrix]
    ncols = len(rows[0]) if rows else 0
    pivots: List[int] = []
    rank = 0
    for col in range(ncols):
        pivot = next((r for r in range(rank, len(rows))
                      if rows[r][col] != 0), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        scale = rows[rank][col]
        rows[rank] = [v / scale for v in rows[rank]]
        for r in range(len(rows)):
            if r != rank and rows[r][col]:
                factor = rows[r][col]
                rows[r] = [a - factor * b
                           for a, b in zip(rows[r], rows[rank])]
        pivots.append(col)
        rank += 1
    basis = []
    free = [c for c in range(ncols) if c not in pivots]
    for col in free:
        vector = [Fraction(0)] * ncols
        vector[col] = Fraction(1)
        for r, pivot_col in enumerate(pivots):
            vector[pivot_col] = -rows[r][col]
        basis.append(vector)
    return basis


def m2_dimension(form: HomogeneousForm, y: IntVector) -> M2Report:
    """Dimension of the space of second-order tangent directions at y.

    Computed two independent ways: (a) the span of the Hessian kernel
    together with y, and (b) the solution space of the degree-2 coefficient
    system written in the slicing-lattice basis.  The report carries both
    so callers can flag disagreement.

    Raises:
        ZeroVectorInput: y = 0.
        NotOnHypersurface: F(y) != 0.
        DomainError: the form has degree < 2.
    """
    if form.degree < 2:
        raise DomainError("second-order tangency needs degree >= 2")
    if all(v == 0 for v in y):
        raise ZeroVectorInput("base point must be nonzero")
    if evaluate_form(form, y) != 0:
        raise NotOnHypersurface(f"F{tuple(y)} != 0")
    matrix = [list(row) for row in hessian(form, y)]
    kernel = _nullspace_basis(matrix)
    stacked = [[Fraction(v) for v in vec] for vec in kernel]
    stacked.append([Fraction(v) for v in y])
    span_dim = _rational_rank(stacked)

    sliced = linear_slice_coefficients(form, y)
    if sliced.all_zero:
        basis = [[1 if i == k else 0 for k in range(form.nvars)]
                 for i in range(form.nvars)]
    else:
        basis = [list(row)
                 for row in reduce_basis(kernel_lattice(sliced.vector)).basis]
    # Gram-like system: M[a][b] = b_a . H . b_b; its kernel is the space of
    # lattice directions h with vanishing degree-2 coefficient vector.
    h_rows = [[sum(h * v for h, v in zip(matrix[i], b)) for b in basis]
              for i in range(form.nvars)]
    system = [[sum(basis[a][i] * h_rows[i][b] for i in range(form.nvars))
               for b in range(len(basis))] for a in range(len(basis))]
    system_dim = len(basis) - _rational_rank(system)
    return M2Report(span_dim=span_dim, system_dim=system_dim)


# ---------------------------------------------------------------------------
# Pair counting
# ---------------------------------------------------------------------------

def _pairs_slab(form: HomogeneousForm, x_bound: int, y_bound: int,
                first_lo: int, first_hi: int, exclude_proportional: bool,
                stratum_rho: Optional[int], breakdown: bool,
                budget: Optional[int]) -> Tuple[
                    int, int, int, Dict[Tuple[int, ...], int]]:
    """Accumulate pair counts over base points with y_1 in [lo, hi]."""
    n = form.nvars
    meter = _Budget(budget)
    total = 0
    proportional = 0
    stratified = 0
    per_y: Dict[Tuple[int, ...], int] = {}
    for first in range(first_lo, first_hi + 1):
        for tail in _iter_box_chunks(n - 1, y_bound):
            meter.charge(tail.shape[0])
            chunk = np.concatenate(
                [np.full((tail.shape[0], 1), first, dtype=np.int64), tail],
                axis=1)
            values = evaluate_batch(form, chunk)
            for row in chunk[values == 0]:
                y = tuple(int(v) for v in row)
                if all(v == 0 for v in y):
                    continue
                total_y, prop_y, strat_y = _pairs_at_base_point(
                    form, y, x_bound, exclude_proportional, stratum_rho,
                    meter)
                total += total_y
                proportional += prop_y
                stratified += strat_y
                if breakdown:
                    per_y[y] = total_y
    return total, proportional, stratified, per_y


def _pairs_at_base_point(form: HomogeneousForm, y: Tuple[int, ...],
                         x_bound: int, exclude_proportional: bool,
                         stratum_rho: Optional[int],
                         meter: _Budget) -> Tuple[int, int, int]:
    """Pair counts contributed by one base point on the hypersurface."""
    conditions = _line_conditions(form, y)
    prop_y = _proportional_count(y, x_bound)
    y_in_stratum = (stratum_rho is not None
                    and hessian_corank(form, y) >= stratum_rho)
    count = 0
    strat_count = 0
    for chunk in _point_chunks(form, y, x_bound, warn_fallback=False):
        meter.charge(chunk.shape[0])
        mask = _condition_mask(conditions, chunk)
        count += int(mask.sum())
        if y_in_stratum:
            for row in chunk[mask]:
                x = tuple(int(v) for v in row)
                if all(v == 0 for v in x):
                    continue
                if hessian_corank(form, x) >= stratum_rho:
                    strat_count += 1
    count -= 1  # the zero vector always satisfies every condition
    total_y = count - prop_y if exclude_proportional else count
    if y_in_stratum:
        # proportional x inherit the stratum membership of y exactly
        strat_y = (strat_count - prop_y if exclude_proportional
                   else strat_count)
    else:
        strat_y = 0
    return total_y, prop_y, strat_y


def count_pairs(form: HomogeneousForm, x_bound: int, y_bound: int, *,
                exclude_proportional: bool = False,
                stratum_rho: Optional[int] = None,
                breakdown: bool = False,
                workers: int = 1,
                budget: Optional[int] = None) -> PairCountReport:
    """Exact number of ordered pairs (x, y) of nonzero integer vectors with
    |x| <= X, |y| <= Y spanning a line inside the hypersurface.

    Proportional pairs (x parallel to y) are always tallied separately;
    ``exclude_proportional`` removes them from the total as well.  With
    ``stratum_rho`` set, the ``stratified`` field counts the pairs whose two
    points both have Hessian corank >= rho.  ``breakdown`` records the
    per-base-point counts, whose sum reproduces the total exactly.

    Raises:
        DomainError: X < 1 or Y < 1.
        ResourceLimit: the scan exceeded the budget.
    """
    if x_bound < 1 or y_bound < 1:
        raise DomainError("x_bound and y_bound must be at least 1")
    slabs = _first_coordinate_slabs(y_bound, workers)
    results = []
    if workers > 1 and len(slabs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_pairs_slab, form, x_bound, y_bound, lo, hi,
                            exclude_proportional, stratum_rho, breakdown,
                            budget)
                for lo, hi in slabs]
            results = [f.result() for f in futures]
    else:
        results = [_pairs_slab(form, x_bound, y_bound, -y_bound, y_bound,
                               exclude_proportional, stratum_rho, breakdown,
                               budget)]
    total = sum(r[0] for r in results)
    proportional = sum(r[1] for r in results)
    stratified = sum(r[2] for r in results) if stratum_rho is not None \
        else None
    per_y: Optional[Dict[Tuple[int, ...], int]] = None
    if breakdown:
        per_y = {}
        for r in results:
            per_y.update(r[3])
    return PairCountReport(
        x_bound=x_bound, y_bound=y_bound, total=total,
        proportional_pairs=proportional, stratum_rho=stratum_rho,
        stratified=stratified, per_y_breakdown=per_y)


def _first_coordinate_slabs(y_bound: int,
                            workers: int) -> List[Tuple[int, int]]:
    values = list(range(-y_bound, y_bound + 1))
    parts = max(1, min(workers, len(values)))
    step = math.ceil(len(values) / parts)
    return [(values[i], values[min(i + step, len(values)) - 1])
            for i in range(0, len(values), step)]


def export_breakdown_csv(report: PairCountReport, path: str) -> None:
    """One row per base point: coordinates then its pair count."""
    if report.per_y_breakdown is None:
        raise DomainError("report has no per-base-point breakdown")
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        n = len(next(iter(report.per_y_breakdown), ()))
        writer.writerow([f"y{i + 1}" for i in range(n)] + ["count"])
        for y, count in sorted(report.per_y_breakdown.items()):
            writer.writerow(list(y) + [count])


# ---------------------------------------------------------------------------
# Singular-point screen
# ---------------------------------------------------------------------------

def singular_points_in_box(form: HomogeneousForm,
                           x_bound: int) -> List[Tuple[int, ...]]:
    """All nonzero integer points of the box where the gradient vanishes.

    An empty list is necessary (not sufficient) evidence that the projective
    hypersurface is non-singular.
    """
    if x_bound < 0:
        raise DomainError("x_bound must be nonnegative")
    partials = _partial_derivative_forms(form)
    out: List[Tuple[int, ...]] = []
    for chunk in _iter_box_chunks(form.nvars, x_bound):
        mask = np.ones(chunk.shape[0], dtype=bool)
        for partial in partials:
            if partial.is_zero:
                continue
            mask &= (evaluate_batch(partial, chunk) == 0)
            if not mask.any():
                break
        for row in chunk[mask]:
            point = tuple(int(v) for v in row)
            if any(point):
                out.append(point)
    return sorted(out)


def _partial_derivative_forms(form: HomogeneousForm):
    """The n first partial derivatives as integer-coefficient forms."""
    from .forms import RationalForm
    out = []
    for i in range(form.nvars):
        coeffs = {}
        for exponents, coefficient in form.coeffs.items():
            e = exponents[i]
            if not e:
                continue
            reduced = tuple(v - 1 if k == i else v
                            for k, v in enumerate(exponents))
            value = coeffs.get(reduced, 0) + coefficient * e
            if value:
                coeffs[reduced] = Fraction(value)
            else:
                coeffs.pop(reduced, None)
        out.append(RationalForm(nvars=form.nvars,
                                degree=max(form.degree - 1, 0),
                                coeffs=coeffs))
    return out
