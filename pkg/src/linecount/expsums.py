"""Exponential sums over the slicing lattice and arc membership tests.

The module evaluates the two basic exponential sums of the counting
integral (the lattice-point sum T and its box-with-linear-twist companion
U), applies exact discrete differencing to their phases, measures
square-and-difference inequalities on small instances, and decides
major-arc membership — both the final single-denominator form and the
nested per-degree form steered by an exponent profile.

Phases are handled exactly for rational frequencies: the integer slice
values are combined with the rational frequencies and reduced mod 1 before
any rounding, so the only floating-point step is the evaluation of e(x)
itself.  Floating-point frequencies are converted to exact dyadic
rationals on input; arc comparisons then carry a documented 2^-40 slack.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np
from scipy.stats import qmc

from .counting import _Budget
from .errors import (
    DimensionMismatch,
    DomainError,
    IndexOutOfRange,
    ZeroVectorInput,
)
from .exponents import ExponentProfile, format_rational, parse_rational
from .forms import (
    HomogeneousForm,
    Polynomial,
    RationalForm,
    evaluate_batch,
    integer_slice_form,
    iterated_difference,
)
from .lattice import (
    IntegerLattice,
    box_profile,
    enumerate_points,
    slicing_lattice,
)

#: Comparison slack applied to arc membership when the input frequencies
#: arrived as binary floats rather than exact rationals.
FLOAT_SLACK = Fraction(1, 2 ** 40)

DEFAULT_WEYL_BUDGET = 10 ** 7
DEFAULT_ARC_BUDGET = 10 ** 5

RationalLike = Union[int, float, str, Fraction]


# ---------------------------------------------------------------------------
# Frequency points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FrequencyPoint:
    """Frequencies (alpha_2, ..., alpha_d), keyed by the degree index.

    Values are exact rationals reduced into [0, 1) on construction (the
    sums are 1-periodic in every coordinate, so the reduction loses
    nothing); floats are converted to the exact dyadic rational they
    denote, and ``dyadic_input`` records that so arc comparisons apply the
    documented slack.
    """

    alpha: Mapping[int, Fraction]
    dyadic_input: bool = False

    def __post_init__(self) -> None:
        if not self.alpha:
            raise DomainError("frequency point needs at least one entry")
        keys = sorted(self.alpha)
        if keys[0] < 2:
            raise DomainError("frequencies start at degree 2")
        if keys != list(range(2, keys[-1] + 1)):
            raise DomainError(
                "frequencies must cover the degrees 2..d exactly")
        table = {j: Fraction(value) % 1 for j, value in self.alpha.items()}
        object.__setattr__(self, "alpha", table)

    @property
    def degree(self) -> int:
        return max(self.alpha)

    def __getitem__(self, j: int) -> Fraction:
        return self.alpha[j]

    @classmethod
    def zero(cls, d: int) -> "FrequencyPoint":
        return cls({j: Fraction(0) for j in range(2, d + 1)})

    @classmethod
    def from_values(cls, values: Sequence[RationalLike]) -> "FrequencyPoint":
        """Build from (alpha_2, ..., alpha_d); floats become exact dyadics."""
        table: Dict[int, Fraction] = {}
        dyadic = False
        for j, value in enumerate(values, start=2):
            if isinstance(value, float):
                dyadic = True
                table[j] = Fraction(value)
            elif isinstance(value, str):
                table[j] = parse_rational(value)
            else:
                table[j] = Fraction(value)
        return cls(table, dyadic_input=dyadic)

    def to_json(self) -> dict:
        return {str(j): format_rational(v)
                for j, v in sorted(self.alpha.items())}


def _coerce_frequency(alpha, d: int) -> FrequencyPoint:
    if isinstance(alpha, FrequencyPoint):
        point = alpha
    else:
        point = FrequencyPoint({j: Fraction(v) for j, v in alpha.items()})
    if point.degree != d:
        raise DimensionMismatch(
            f"frequency point has degree {point.degree}, form has {d}")
    return point


# ---------------------------------------------------------------------------
# Shared slice machinery
# ---------------------------------------------------------------------------

def _nonzero_slices(form: HomogeneousForm,
                    y: Sequence[int]) -> List[Tuple[int, RationalForm]]:
    """Integer slice forms for degrees 2..d that are not identically zero."""
    out = []
    for j in range(2, form.degree + 1):
        sliced = integer_slice_form(form, y, j)
        if not sliced.is_zero:
            out.append((j, sliced))
    return out


def _phase_lattice(form: HomogeneousForm, y: Sequence[int]) -> IntegerLattice:
    return slicing_lattice(form, y)


def _box_fractions(slices: Sequence[Tuple[int, RationalForm]],
                   point: FrequencyPoint,
                   ambient: np.ndarray) -> np.ndarray:
    """Exact-mod-1 phase fractions for every row of ``ambient``, float64."""
    out = np.zeros(ambient.shape[0])
    for j, sliced in slices:
        coeff = point[j]
        if coeff == 0:
            continue
        values = evaluate_batch(sliced, ambient)
        p, q = coeff.numerator, coeff.denominator
        if values.dtype != object and p * (q - 1) >= 2 ** 62:
            values = values.astype(object)
        residues = (values % q) * p % q
        if residues.dtype == object:
            residues = residues.astype(np.float64)
        out += residues / float(q)
    return np.mod(out, 1.0)


# ---------------------------------------------------------------------------
# The exponential sums
# ---------------------------------------------------------------------------

def exponential_sum_T(form: HomogeneousForm, y: Sequence[int], alpha,
                      x_bound: int, *, precision: int = 120) -> mpmath.mpc:
    """The lattice-point exponential sum at a frequency point, exactly

        sum over x in the slicing lattice with |x| <= x_bound of
        e(sum_j alpha_j * c_j(x, y)),

    where c_j are the integer slice values.  Phases are reduced mod 1 in
    exact rational arithmetic; e(.) is evaluated and compensated-summed at
    the requested binary precision.

    Raises:
        ZeroVectorInput: y = 0 or the gradient vanishes at y.
        DomainError: x_bound < 1.
    """
    if x_bound < 1:
        raise DomainError("x_bound must be at least 1")
    point = _coerce_frequency(alpha, form.degree)
    slices = _nonzero_slices(form, y)
    lattice = _phase_lattice(form, y)
    real_parts: List[mpmath.mpf] = []
    imag_parts: List[mpmath.mpf] = []
    with mpmath.mp.workprec(precision):
        for x in enumerate_points(lattice, x_bound):
            phase = Fraction(0)
            for j, sliced in slices:
                coeff = point[j]
                if coeff:
                    phase += coeff * sliced(x)
            phase -= math.floor(phase)
            value = mpmath.expjpi(
                2 * mpmath.mpf(phase.numerator) / phase.denominator)
            real_parts.append(value.real)
            imag_parts.append(value.imag)
        return mpmath.mpc(mpmath.fsum(real_parts), mpmath.fsum(imag_parts))


def exponential_sum_U(form: HomogeneousForm, y: Sequence[int], alpha,
                      x_bound: int, eta_samples: int,
                      seed: int = 0) -> float:
    """Sampled supremum of the box sum with a linear twist.

    Evaluates |sum over box coordinates xi of e(phase(xi) + eta . xi)| at
    eta = 0 and at a low-discrepancy sample of eta values in the unit cube
    (the sample count is rounded up to a power of two for balance), and
    returns the maximum.  This is a certified lower bound for the true
    supremum over eta, and every consumer treats it as such.

    Raises:
        ZeroVectorInput: y = 0 or the gradient vanishes at y.
        DomainError: bad bounds or sample count.
    """
    if x_bound < 1:
        raise DomainError("x_bound must be at least 1")
    if eta_samples < 1:
        raise DomainError("eta_samples must be positive")
    point = _coerce_frequency(alpha, form.degree)
    lattice = _phase_lattice(form, y)
    grid = _box_grid(box_profile(lattice, x_bound).int_bounds)
    ambient = grid @ np.asarray(lattice.basis, dtype=np.int64)
    base = _box_fractions(_nonzero_slices(form, y), point, ambient)

    sampler = qmc.Sobol(d=lattice.rank, scramble=True, seed=seed)
    count = 1 << max(0, (eta_samples - 1).bit_length())
    etas = np.vstack([np.zeros(lattice.rank), sampler.random_base2(
        int(math.log2(count)))])
    best = 0.0
    for start in range(0, etas.shape[0], 64):
        chunk = etas[start:start + 64]
        phases = base[None, :] + chunk @ grid.T.astype(np.float64)
        sums = np.exp(2j * np.pi * phases).sum(axis=1)
        best = max(best, float(np.abs(sums).max()))
    return best


def _box_grid(bounds: Sequence[int]) -> np.ndarray:
    """All integer vectors of the product box, shape (m, len(bounds))."""
    axes = [np.arange(-b, b + 1, dtype=np.int64) for b in bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack(mesh, axis=-1).reshape(-1, len(bounds))


# ---------------------------------------------------------------------------
# Difference machinery and the square-and-difference check
# ---------------------------------------------------------------------------

def phase_polynomial(form: HomogeneousForm, y: Sequence[int],
                     basis: Sequence[Sequence[int]], alpha) -> Polynomial:
    """The phase as an exact polynomial in the lattice coordinates.

    Substitutes x = sum_m xi_m b_m into every integer slice and combines
    them with the frequencies: the result is the polynomial
    sum_j alpha_j c_j(B^T xi) with rational coefficients.
    """
    point = _coerce_frequency(alpha, form.degree)
    n = form.nvars
    if any(len(row) != n for row in basis):
        raise DimensionMismatch("basis rows must have the ambient length")
    s = len(basis)
    total: Dict[Tuple[int, ...], Fraction] = {}
    for j, sliced in _nonzero_slices(form, y):
        coeff = point[j]
        if coeff == 0:
            continue
        pulled = _pullback(sliced, basis, s)
        for exponents, value in pulled.items():
            acc = total.get(exponents, Fraction(0)) + coeff * value
            if acc:
                total[exponents] = acc
            else:
                total.pop(exponents, None)
    return Polynomial(nvars=s, coeffs=total)


def _pullback(sliced: RationalForm, basis: Sequence[Sequence[int]],
              s: int) -> Dict[Tuple[int, ...], Fraction]:
    """Coefficients of the slice composed with x = B^T xi."""
    linear = []
    for i in range(len(basis[0])):
        row = {}
        for m in range(s):
            if basis[m][i]:
                key = tuple(1 if t == m else 0 for t in range(s))
                row[key] = Fraction(basis[m][i])
        linear.append(row)
    zero_exp = (0,) * s
    total: Dict[Tuple[int, ...], Fraction] = {}
    for exponents, coefficient in sliced.coeffs.items():
        term: Dict[Tuple[int, ...], Fraction] = {zero_exp: Fraction(coefficient)}
        for i, e in enumerate(exponents):
            for _ in range(e):
                term = _dict_mul(term, linear[i], s)
                if not term:
                    break
            if not term:
                break
        for key, value in term.items():
            acc = total.get(key, Fraction(0)) + value
            if acc:
                total[key] = acc
            else:
                total.pop(key, None)
    return total


def _dict_mul(a: Dict[Tuple[int, ...], Fraction],
              b: Dict[Tuple[int, ...], Fraction],
              s: int) -> Dict[Tuple[int, ...], Fraction]:
    out: Dict[Tuple[int, ...], Fraction] = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            key = tuple(x + y for x, y in zip(ea, eb))
            acc = out.get(key, Fraction(0)) + ca * cb
            if acc:
                out[key] = acc
            else:
                out.pop(key, None)
    return out


def differenced_phase(form: HomogeneousForm, y: Sequence[int],
                      basis: Sequence[Sequence[int]], alpha,
                      h_list: Sequence[Sequence[int]]) -> Polynomial:
    """Exact iterated forward difference of the phase polynomial.

    Each difference step replaces p(xi) by p(xi + h) - p(xi), dropping the
    degree by one per nonzero shift; the linear coefficients of the fully
    differenced top-degree term recover the polarised slice coefficients.

    Raises:
        DimensionMismatch: shift vectors of the wrong length.
    """
    poly = phase_polynomial(form, y, basis, alpha)
    return iterated_difference(poly, [list(h) for h in h_list])


@dataclass(frozen=True)
class WeylReport:
    """Measured square-and-difference ratios for one configuration.

    ``ratios`` holds LHS / RHS-core per frequency point tried, where
    LHS = U^(2^i) (sampled sup) and RHS-core is the boxed sum of absolute
    differenced inner sums; the check passes when no ratio exceeds one
    beyond float tolerance.
    """

    i: int
    x_bound: int
    lattice_points: int
    trials: int
    seed: int
    ratios: Tuple[float, ...]
    max_ratio: float
    passed: bool

    def to_json(self) -> dict:
        return {
            "i": self.i,
            "x_bound": self.x_bound,
            "lattice_points": self.lattice_points,
            "trials": self.trials,
            "seed": self.seed,
            "ratios": list(self.ratios),
            "max_ratio": self.max_ratio,
            "passed": self.passed,
        }


def weyl_inequality_check(form: HomogeneousForm, y: Sequence[int], alpha,
                          i: int, x_bound: int, *, trials: int = 0,
                          seed: int = 0, eta_samples: int = 32,
                          budget: Optional[int] = DEFAULT_WEYL_BUDGET,
                          ) -> WeylReport:
    """Measure the i-fold square-and-difference inequality directly.

    For the given frequency point (plus ``trials`` random rational ones)
    the sampled-sup sum U is raised to the 2^i-th power and compared with

        (#B)^(2^i - i - 1) * sum over shifts h_1..h_i of |inner(h)|,

    where each shift ranges over the difference box (twice the box
    half-widths) and inner(h) sums e(differenced phase) over the exact
    shrunken window on which all subset shifts stay inside the box.  The
    differenced phase is evaluated by subset inclusion-exclusion on the
    exact base fractions, which agrees with the difference polynomial.

    Raises:
        IndexOutOfRange: i outside 1..d-1.
        ResourceLimit: the shift enumeration exceeds the budget.
    """
    d = form.degree
    if not 1 <= i <= d - 1:
        raise IndexOutOfRange(f"difference count {i} outside 1..{d - 1}")
    point = _coerce_frequency(alpha, d)
    lattice = _phase_lattice(form, y)
    bounds = box_profile(lattice, x_bound).int_bounds
    grid = _box_grid(bounds)
    ambient = grid @ np.asarray(lattice.basis, dtype=np.int64)
    slices = _nonzero_slices(form, y)
    box_count = grid.shape[0]
    ledger = _Budget(budget)

    rng = random.Random(seed)
    points = [point]
    for _ in range(trials):
        points.append(FrequencyPoint(
            {j: Fraction(rng.randrange(2 ** 16), 2 ** 16)
             for j in range(2, d + 1)}))

    shape = tuple(2 * b + 1 for b in bounds)
    signs = [(-1) ** (i - bin(mask).count("1")) for mask in range(1 << i)]
    ratios = []
    for trial_point in points:
        base = _box_fractions(slices, trial_point, ambient).reshape(shape)
        total_inner = 0.0
        for h_tuple in itertools.product(
                _box_grid([2 * b for b in bounds]), repeat=i):
            windows = _difference_window(bounds, h_tuple)
            if windows is None:
                continue
            size = 1
            for lo, hi in windows:
                size *= hi - lo + 1
            ledger.charge(size << i)
            phase = np.zeros(tuple(hi - lo + 1 for lo, hi in windows))
            for mask in range(1 << i):
                offset = [0] * len(bounds)
                for t in range(i):
                    if mask >> t & 1:
                        for c, v in enumerate(h_tuple[t]):
                            offset[c] += int(v)
                block = base[tuple(
                    slice(lo + off + b, hi + off + b + 1)
                    for (lo, hi), off, b in zip(windows, offset, bounds))]
                phase = phase + signs[mask] * block
            total_inner += float(
                np.abs(np.exp(2j * np.pi * phase).sum()))
        lhs = exponential_sum_U(form, y, trial_point, x_bound,
                                eta_samples, seed=seed) ** (2 ** i)
        rhs = box_count ** (2 ** i - i - 1) * total_inner
        ratios.append(lhs / rhs)
    max_ratio = max(ratios)
    return WeylReport(i=i, x_bound=x_bound, lattice_points=box_count,
                      trials=trials, seed=seed, ratios=tuple(ratios),
                      max_ratio=max_ratio,
                      passed=max_ratio <= 1 + 1e-9)


def _difference_window(bounds: Sequence[int],
                       h_tuple: Sequence[Sequence[int]],
                       ) -> Optional[List[Tuple[int, int]]]:
    """Inclusive per-axis window on which all subset shifts stay inside.

    Coordinate c admits xi_c in [-B_c - sum_t min(h_t[c], 0),
    B_c - sum_t max(h_t[c], 0)]; an empty axis yields None.
    """
    windows = []
    for c, b in enumerate(bounds):
        neg = sum(min(int(h[c]), 0) for h in h_tuple)
        pos = sum(max(int(h[c]), 0) for h in h_tuple)
        lo, hi = -b - neg, b - pos
        if lo > hi:
            return None
        windows.append((lo, hi))
    return windows


# ---------------------------------------------------------------------------
# Major-arc membership
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MajorArcWitness:
    """A single-denominator rational approximation certificate.

    q is at most the window W, the numerators satisfy 0 <= b_j <= q, and
    every distance |alpha_j - b_j / q| is within W * x_bound^-j (plus the
    dyadic slack when the input frequencies were floats).
    """

    q: int
    numerators: Dict[int, int]
    distances: Dict[int, Fraction]
    window: Fraction

    def to_json(self) -> dict:
        return {
            "q": self.q,
            "numerators": {str(j): b for j, b in
                           sorted(self.numerators.items())},
            "distances": {str(j): format_rational(v)
                          for j, v in sorted(self.distances.items())},
            "window": format_rational(self.window),
        }


def major_arc_witness(alpha, x_bound: int,
                      window: RationalLike) -> Optional[MajorArcWitness]:
    """Smallest-denominator approximation within the arc window, if any.

    Scans q = 1..floor(window) in order, rounds each q * alpha_j to the
    nearest integer, and returns the first q for which every distance
    |alpha_j - b_j/q| is at most window * x_bound^-j.  Deterministic: the
    smallest admissible q wins.  Returns None when no q qualifies.
    """
    if isinstance(alpha, FrequencyPoint):
        point = alpha
    else:
        point = FrequencyPoint({j: Fraction(v) for j, v in alpha.items()})
    window = Fraction(window) if not isinstance(window, str) \
        else parse_rational(window)
    if window < 1 or x_bound < 1:
        raise DomainError("window and x_bound must be at least 1")
    slack = FLOAT_SLACK if point.dyadic_input else Fraction(0)
    for q in range(1, math.floor(window) + 1):
        numerators: Dict[int, int] = {}
        distances: Dict[int, Fraction] = {}
        good = True
        for j, value in sorted(point.alpha.items()):
            b = round(q * value)
            distance = abs(value - Fraction(b, q))
            if distance > window * Fraction(1, x_bound ** j) + slack:
                good = False
                break
            numerators[j] = b
            distances[j] = distance
        if good:
            return MajorArcWitness(q=q, numerators=numerators,
                                   distances=distances, window=window)
    return None


# ---------------------------------------------------------------------------
# Nested per-degree arc membership
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NestedArcReport:
    """Outcome of the nested per-degree membership test.

    ``assignment`` maps each degree i to its chosen pair (q_i, a_i) when
    the point is a member; ``margins`` holds the exact relative margin of
    each distance condition along the accepted assignment, and ``slack``
    is their minimum.
    """

    member: bool
    start_degree: int
    assignment: Optional[Dict[int, Tuple[int, int]]]
    margins: Dict[int, Fraction]
    slack: Optional[Fraction]

    def to_json(self) -> dict:
        return {
            "member": self.member,
            "start_degree": self.start_degree,
            "assignment": None if self.assignment is None else {
                str(i): list(pair)
                for i, pair in sorted(self.assignment.items())},
            "margins": {str(i): format_rational(v)
                        for i, v in sorted(self.margins.items())},
            "slack": None if self.slack is None
            else format_rational(self.slack),
        }


def _int_root(value: int, k: int) -> int:
    """floor(value ** (1/k)) for nonnegative integers, exactly."""
    if value < 0 or k < 1:
        raise DomainError("root arguments out of range")
    if value in (0, 1) or k == 1:
        return value
    lo, hi = 1, 1 << (value.bit_length() // k + 1)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if mid ** k <= value:
            lo = mid
        else:
            hi = mid
    return lo


def _power_bound(x_bound: int, exponent: Fraction, y_sup: int, y_power: int,
                 mu1_sq: int, mu_power: int) -> Tuple[int, int]:
    """The bound X^exponent * y_sup^y_power * mu1^mu_power as (N, 2r).

    Returns integers (N, k) so that "value <= bound" can be decided as
    value^k <= N; k = 2 * denominator(exponent) clears both the fractional
    power of X and the square root in mu1.
    """
    p, r = exponent.numerator, exponent.denominator
    if p < 0:
        raise DomainError("negative exponent needs the rational comparator")
    n = (x_bound ** (2 * p)) * (y_sup ** (2 * r * y_power)) \
        * (mu1_sq ** (r * mu_power))
    return n, 2 * r


def _distance_bound(x_bound: int, omega: Fraction, degree: int, y_sup: int,
                    y_power: int, mu1_sq: int,
                    mu_power: int) -> Tuple[Fraction, int]:
    """The bound X^(omega - degree) * y_sup^y_power * mu1^mu_power.

    Returned as (B, k): the comparison "delta <= bound" is decided as
    delta^k <= B with k = 2 * denominator(omega); B is an exact rational
    (the X exponent may be negative).
    """
    p, r = omega.numerator, omega.denominator
    k = 2 * r
    x_exp = 2 * (p - degree * r)
    if x_exp >= 0:
        x_part = Fraction(x_bound ** x_exp)
    else:
        x_part = Fraction(1, x_bound ** (-x_exp))
    return (x_part * y_sup ** (k * y_power) * mu1_sq ** (r * mu_power)), k


def arc_geometry(form: HomogeneousForm, y: Sequence[int]) -> Tuple[int, int]:
    """(sup norm of y, squared first-minimum proxy of the slicing lattice)."""
    y_sup = max(abs(int(v)) for v in y)
    if y_sup == 0:
        raise ZeroVectorInput("base point must be nonzero")
    lattice = _phase_lattice(form, y)
    return y_sup, min(lattice.minima_proxy)


def nested_arc_membership(alpha, x_bound: int, profile: ExponentProfile,
                          y_sup: int, mu1_sq: int, *, start_degree: int = 2,
                          budget: Optional[int] = DEFAULT_ARC_BUDGET,
                          ) -> NestedArcReport:
    """Exact membership in the nested per-degree arc system.

    A frequency point belongs to the arcs started at ``start_degree`` when
    integers q_i, a_i exist for every degree i from d down to start_degree
    with

        1 <= q_i <= X^nu_i * |y|^(d-i) * mu_1,     0 <= a_i <= Q_i,
        |alpha_i Q_i - a_i| <= X^(omega_i - i) * |y|^(D_(d-i)) * mu_1^(d-i+1),

    where Q_i is the product of the chosen q_l for l >= i.  All constants
    are one; all comparisons clear the fractional exponents and the square
    root of the minimum proxy, so the decision is exact.  The search
    walks denominators depth-first from the top degree down.

    Raises:
        DomainError: invalid bounds or start degree.
        ResourceLimit: the denominator search exceeds the budget.
    """
    d = profile.d
    point = _coerce_frequency(alpha, d)
    if x_bound < 1 or y_sup < 1 or mu1_sq < 1:
        raise DomainError("x_bound, y_sup and mu1_sq must be at least 1")
    if not 2 <= start_degree <= d:
        raise DomainError(f"start degree {start_degree} outside 2..{d}")
    slack = FLOAT_SLACK if point.dyadic_input else Fraction(0)
    ledger = _Budget(budget)
    x_bits = max(1, x_bound.bit_length())
    y_bits = max(1, y_sup.bit_length())
    mu_bits = max(1, mu1_sq.bit_length())

    caps = {}
    bounds_table = {}
    for i in range(start_degree, d + 1):
        nu = profile.nu[i]
        ledger.charge(1 + (2 * nu.numerator * x_bits
                           + 2 * nu.denominator * (d - i) * y_bits
                           + nu.denominator * mu_bits) // 256)
        n, k = _power_bound(x_bound, nu, y_sup, d - i, mu1_sq, 1)
        caps[i] = _int_root(n, k)
        omega = profile.omega[i]
        p, r = omega.numerator, omega.denominator
        ledger.charge(1 + (2 * abs(p - i * r) * x_bits
                           + 2 * r * profile.D(d - i) * y_bits
                           + r * (d - i + 1) * mu_bits) // 256)
        bounds_table[i] = _distance_bound(x_bound, omega, i, y_sup,
                                          profile.D(d - i), mu1_sq,
                                          d - i + 1)

    assignment: Dict[int, Tuple[int, int]] = {}
    margins: Dict[int, Fraction] = {}

    def descend(i: int, q_product: int) -> bool:
        if i < start_degree:
            return True
        bound, k = bounds_table[i]
        for q in range(1, caps[i] + 1):
            big_q = q * q_product
            a = round(point[i] * big_q)
            delta = abs(point[i] * big_q - a)
            effective = max(Fraction(0), delta - slack)
            ledger.charge(1 + k * (effective.numerator.bit_length()
                                   + effective.denominator.bit_length())
                          // 256)
            lhs = effective ** k
            if lhs <= bound:
                assignment[i] = (q, a)
                margins[i] = 1 - lhs / bound if bound else Fraction(0)
                if descend(i - 1, big_q):
                    return True
                del assignment[i]
                del margins[i]
        return False

    if descend(d, 1):
        return NestedArcReport(member=True, start_degree=start_degree,
                               assignment=dict(assignment),
                               margins=dict(margins),
                               slack=min(margins.values()))
    return NestedArcReport(member=False, start_degree=start_degree,
                           assignment=None, margins={}, slack=None)
