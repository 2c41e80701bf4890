"""Exact algebra of integer homogeneous forms.

A homogeneous form F of degree d in n variables is stored sparsely as a map
from exponent tuples to coefficients.  Everything in this module is exact:
coefficients are Python ints or :class:`fractions.Fraction`, and no floating
point enters any computation.

The central identity is the pencil expansion.  Writing Phi for the symmetric
d-linear form with Phi(x, ..., x) = F(x), substituting a line u*x + v*y into
F and collecting powers gives

    F(u*x + v*y) = sum_{j=0}^{d} c_j(x, y) * u^j * v^(d-j),

where c_j(x, y) = binom(d, j) * Phi(x, ..., x, y, ..., y) with j slots x and
d - j slots y.  The pair (x, y) spans a line inside the hypersurface F = 0
exactly when every c_j vanishes.  For fixed y, the degree-j piece
x -> Phi(x, ..., x, y, ..., y) is the "slice" of F along y; the integer
rescaling binom(d, j) * slice is what all congruence and exponential-sum
code in this package works with, because its values are guaranteed integers.
"""

from __future__ import annotations

import ast
import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, List, Mapping, Sequence, Tuple

import numpy as np

from .errors import (
    BasisNotSpanning,
    DimensionMismatch,
    FormSyntaxError,
    IndexOutOfRange,
    NotHomogeneous,
    ZeroForm,
)

Exponent = Tuple[int, ...]
IntVector = Sequence[int]

_VARIABLE_RE = re.compile(r"^x([1-9][0-9]*)$")
_MAX_PARSED_EXPONENT = 1000


@dataclass(frozen=True)
class Monomial:
    """One term of a form: an exponent tuple and its nonzero coefficient."""

    exponents: Exponent
    coefficient: Fraction

    @property
    def total_degree(self) -> int:
        return sum(self.exponents)


def _graded_lex_key(exponents: Exponent) -> Tuple[int, Exponent]:
    return (sum(exponents), exponents)


def _sorted_items(coeffs: Mapping[Exponent, object]) -> List[Tuple[Exponent, object]]:
    return sorted(coeffs.items(), key=lambda item: _graded_lex_key(item[0]))


def _validate_coeffs(nvars: int, coeffs: Mapping[Exponent, object]) -> None:
    for exponents, coefficient in coeffs.items():
        if len(exponents) != nvars:
            raise DimensionMismatch(
                f"exponent tuple {exponents} has length {len(exponents)}, "
                f"expected {nvars}")
        if any(e < 0 for e in exponents):
            raise ValueError(f"negative exponent in {exponents}")
        if coefficient == 0:
            raise ValueError(f"stored zero coefficient at {exponents}")


@dataclass(frozen=True)
class HomogeneousForm:
    """Integer homogeneous polynomial of degree >= 1.

    Fields:
        nvars: number of variables n.
        degree: common total degree d of every monomial.
        coeffs: sparse map exponent tuple -> nonzero integer coefficient.
    """

    nvars: int
    degree: int
    coeffs: Mapping[Exponent, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.degree < 1:
            raise ValueError("a form must have degree >= 1")
        _validate_coeffs(self.nvars, self.coeffs)
        for exponents, coefficient in self.coeffs.items():
            if sum(exponents) != self.degree:
                raise NotHomogeneous(
                    f"monomial {exponents} has degree {sum(exponents)}, "
                    f"form degree is {self.degree}")
            if not isinstance(coefficient, int):
                raise ValueError("coefficients of a HomogeneousForm are ints")

    @property
    def monomials(self) -> Tuple[Monomial, ...]:
        """Terms in graded-lexicographic order (deterministic)."""
        return tuple(Monomial(e, Fraction(c)) for e, c in _sorted_items(self.coeffs))

    def __call__(self, point: IntVector) -> int:
        return evaluate_form(self, point)


@dataclass(frozen=True)
class RationalForm:
    """Homogeneous polynomial with exact rational coefficients.

    Used for slices of an integer form and other derived forms; the zero
    polynomial (empty coefficient map) is allowed here, and so is degree 0.
    """

    nvars: int
    degree: int
    coeffs: Mapping[Exponent, Fraction] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.degree < 0:
            raise ValueError("degree must be >= 0")
        _validate_coeffs(self.nvars, self.coeffs)
        for exponents in self.coeffs:
            if sum(exponents) != self.degree:
                raise NotHomogeneous(
                    f"monomial {exponents} has degree {sum(exponents)}, "
                    f"form degree is {self.degree}")

    @property
    def common_denominator(self) -> int:
        den = 1
        for coefficient in self.coeffs.values():
            den = den * coefficient.denominator // math.gcd(
                den, coefficient.denominator)
        return den

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def monomials(self) -> Tuple[Monomial, ...]:
        return tuple(Monomial(e, Fraction(c)) for e, c in _sorted_items(self.coeffs))

    def __call__(self, point: IntVector) -> Fraction:
        return evaluate_form(self, point)


@dataclass(frozen=True)
class Polynomial:
    """General (possibly inhomogeneous) sparse polynomial, exact rational."""

    nvars: int
    coeffs: Mapping[Exponent, Fraction] = field(default_factory=dict)

    def __post_init__(self) -> None:
        _validate_coeffs(self.nvars, self.coeffs)

    @property
    def degree(self) -> int:
        """Maximal total degree; the zero polynomial has degree -1."""
        if not self.coeffs:
            return -1
        return max(sum(e) for e in self.coeffs)

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def monomials(self) -> Tuple[Monomial, ...]:
        return tuple(Monomial(e, Fraction(c)) for e, c in _sorted_items(self.coeffs))

    def __call__(self, point: IntVector) -> Fraction:
        return evaluate_form(self, point)


@dataclass(frozen=True)
class PencilExpansion:
    """Coefficients of F(u*x + v*y) collected by powers of u.

    coefficients[j] is the exact integer multiplying u^j * v^(d-j); in
    particular coefficients[0] = F(y) and coefficients[d] = F(x).
    """

    degree: int
    coefficients: Tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.coefficients) != self.degree + 1:
            raise ValueError("need exactly degree + 1 coefficients")

    @property
    def is_line(self) -> bool:
        """True when the whole pencil lies inside the hypersurface."""
        return all(c == 0 for c in self.coefficients)


# ---------------------------------------------------------------------------
# Parsing and serialisation
# ---------------------------------------------------------------------------

def _collect_variables(tree: ast.AST) -> int:
    """Largest index among variables x1, x2, ...; 0 if none occur."""
    largest = 0
    for node in ast.walk(tree):
        if isinstance(node, ast.Name):
            match = _VARIABLE_RE.match(node.id)
            if match is None:
                raise FormSyntaxError(
                    f"unknown symbol {node.id!r}; variables are x1, x2, ...")
            largest = max(largest, int(match.group(1)))
    return largest


def _poly_mul(a: Dict[Exponent, Fraction], b: Dict[Exponent, Fraction],
              ) -> Dict[Exponent, Fraction]:
    out: Dict[Exponent, Fraction] = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            key = tuple(x + y for x, y in zip(ea, eb))
            value = out.get(key, Fraction(0)) + ca * cb
            if value:
                out[key] = value
            else:
                out.pop(key, None)
    return out


def _poly_add(a: Dict[Exponent, Fraction], b: Dict[Exponent, Fraction],
              sign: int = 1) -> Dict[Exponent, Fraction]:
    out = dict(a)
    for e, c in b.items():
        value = out.get(e, Fraction(0)) + sign * c
        if value:
            out[e] = value
        else:
            out.pop(e, None)
    return out


def _eval_expression(node: ast.AST, nvars: int) -> Dict[Exponent, Fraction]:
    zero = (0,) * nvars
    if isinstance(node, ast.Constant):
        if not isinstance(node.value, int):
            raise FormSyntaxError(
                f"only integer literals are allowed, got {node.value!r}")
        return {zero: Fraction(node.value)} if node.value else {}
    if isinstance(node, ast.Name):
        index = int(_VARIABLE_RE.match(node.id).group(1))
        e = tuple(1 if i == index - 1 else 0 for i in range(nvars))
        return {e: Fraction(1)}
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _eval_expression(node.operand, nvars)
        if isinstance(node.op, ast.UAdd):
            return inner
        return {e: -c for e, c in inner.items()}
    if isinstance(node, ast.BinOp):
        if isinstance(node.op, ast.Add):
            return _poly_add(_eval_expression(node.left, nvars),
                             _eval_expression(node.right, nvars))
        if isinstance(node.op, ast.Sub):
            return _poly_add(_eval_expression(node.left, nvars),
                             _eval_expression(node.right, nvars), sign=-1)
        if isinstance(node.op, ast.Mult):
            return _poly_mul(_eval_expression(node.left, nvars),
                             _eval_expression(node.right, nvars))
        if isinstance(node.op, ast.Pow):
            exponent_node = node.right
            if not (isinstance(exponent_node, ast.Constant)
                    and isinstance(exponent_node.value, int)
                    and exponent_node.value >= 0):
                raise FormSyntaxError(
                    "exponents must be literal non-negative integers")
            exponent = exponent_node.value
            if exponent > _MAX_PARSED_EXPONENT:
                raise FormSyntaxError(
                    f"exponent {exponent} exceeds the parser cap "
                    f"{_MAX_PARSED_EXPONENT}")
            base = _eval_expression(node.left, nvars)
            out: Dict[Exponent, Fraction] = {zero: Fraction(1)}
            for _ in range(exponent):
                out = _poly_mul(out, base)
            return out
        raise FormSyntaxError(
            f"operator {type(node.op).__name__} is not part of the grammar")
    raise FormSyntaxError(
        f"unsupported syntax element {type(node).__name__}")


def parse_form(text: str, n_hint: int | None = None) -> HomogeneousForm:
    """Parse an expression in x1..xn with integer literals, +, -, * and ^.

    Args:
        text: the expression, e.g. ``"x1^5 + x2^5 - 3*x1*x2^4"``.
        n_hint: optional variable count; may only widen the inferred count.

    Returns:
        The expanded form in canonical (graded-lexicographic) order.

    Raises:
        FormSyntaxError: the expression is malformed or uses foreign syntax.
        NotHomogeneous: monomials of different total degree survive expansion.
        ZeroForm: every term cancels.
    """
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise FormSyntaxError(f"cannot parse {text!r}: {exc.msg}") from exc
    inferred = _collect_variables(tree)
    nvars = max(inferred, n_hint or 0)
    if nvars == 0:
        raise FormSyntaxError("expression mentions no variables")
    coeffs = _eval_expression(tree.body, nvars)
    if not coeffs:
        raise ZeroForm(f"all terms of {text!r} cancel")
    degrees = {sum(e) for e in coeffs}
    if len(degrees) > 1:
        raise NotHomogeneous(
            f"mixed total degrees {sorted(degrees)} in {text!r}")
    degree = degrees.pop()
    if degree == 0:
        raise FormSyntaxError("a constant expression does not define a form")
    return HomogeneousForm(
        nvars=nvars, degree=degree,
        coeffs={e: int(c) for e, c in coeffs.items()})


def form_to_json(form: HomogeneousForm) -> dict:
    """Canonical JSON object for a form; round-trips losslessly.

    Coefficients are emitted as decimal strings so arbitrarily large values
    survive any 64-bit JSON reader.
    """
    return {
        "n": form.nvars,
        "d": form.degree,
        "monomials": [
            {"exp": list(e), "coef": str(c)}
            for e, c in _sorted_items(form.coeffs)
        ],
    }


def form_from_json(obj: dict) -> HomogeneousForm:
    """Inverse of :func:`form_to_json`; accepts int or string coefficients."""
    try:
        nvars = int(obj["n"])
        degree = int(obj["d"])
        coeffs: Dict[Exponent, int] = {}
        for entry in obj["monomials"]:
            e = tuple(int(v) for v in entry["exp"])
            c = int(entry["coef"])
            if c:
                coeffs[e] = coeffs.get(e, 0) + c
    except (KeyError, TypeError, ValueError) as exc:
        raise FormSyntaxError(f"malformed form object: {exc}") from exc
    coeffs = {e: c for e, c in coeffs.items() if c}
    if not coeffs:
        raise ZeroForm("form object carries no surviving monomials")
    return HomogeneousForm(nvars=nvars, degree=degree, coeffs=coeffs)


def load_form(path: str) -> HomogeneousForm:
    """Read a canonical JSON form file."""
    with open(path, "r", encoding="utf-8") as handle:
        return form_from_json(json.load(handle))


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _check_point(form, point: IntVector) -> None:
    if len(point) != form.nvars:
        raise DimensionMismatch(
            f"point has length {len(point)}, form has {form.nvars} variables")


def evaluate_form(form, point: IntVector):
    """Exact value of a form (or general polynomial) at an integer point.

    Args:
        form: HomogeneousForm, RationalForm or Polynomial.
        point: integer vector of length ``form.nvars``.

    Returns:
        int for integer forms, Fraction otherwise; always exact.
    """
    _check_point(form, point)
    total = 0
    for exponents, coefficient in form.coeffs.items():
        term = coefficient
        for value, e in zip(point, exponents):
            if e:
                term *= value ** e
        total += term
    return total


def compiled_monomials(form) -> Tuple[np.ndarray, List[int]]:
    """Exponent matrix and coefficient list in graded-lex order.

    Shared companion for the vectorised evaluators: row k of the matrix is
    the exponent tuple of the k-th monomial.
    """
    items = _sorted_items(form.coeffs)
    if items:
        matrix = np.array([e for e, _ in items], dtype=np.int64)
    else:
        matrix = np.zeros((0, form.nvars), dtype=np.int64)
    coefficients = [int(c) for _, c in items]
    return matrix, coefficients


def evaluate_batch(form, points: np.ndarray) -> np.ndarray:
    """Exact values of an integer-coefficient form on many points at once.

    Uses an int64 fast path when a preflight bound proves no intermediate
    can overflow, and falls back to object (arbitrary precision) arithmetic
    otherwise.  The result equals ``[evaluate_form(form, p) for p in points]``
    in all cases.

    Args:
        form: form with integer coefficients (rational forms must be scaled
            by their common denominator first).
        points: integer array of shape (m, nvars).

    Returns:
        Array of shape (m,), dtype int64 when safe, otherwise object.
    """
    points = np.asarray(points)
    if points.ndim != 2 or points.shape[1] != form.nvars:
        raise DimensionMismatch(
            f"points must have shape (m, {form.nvars})")
    matrix, coefficients = compiled_monomials(form)
    if any(Fraction(c).denominator != 1 for c in form.coeffs.values()):
        raise ValueError("evaluate_batch needs integer coefficients")
    if points.size == 0:
        return np.zeros(points.shape[0], dtype=np.int64)
    biggest = int(np.abs(points).max()) if points.size else 0
    biggest = max(biggest, 1)
    degree = max((int(row.sum()) for row in matrix), default=0)
    bound = sum(abs(c) for c in coefficients) * biggest ** degree
    if bound < 2 ** 62 and points.dtype != object:
        pts = points.astype(np.int64)
        values = np.zeros(pts.shape[0], dtype=np.int64)
        for row, coefficient in zip(matrix, coefficients):
            term = np.full(pts.shape[0], coefficient, dtype=np.int64)
            for i, e in enumerate(row):
                if e:
                    term = term * pts[:, i] ** int(e)
            values += term
        return values
    values = np.array(
        [evaluate_form(form, [int(v) for v in p]) for p in points],
        dtype=object)
    return values


# ---------------------------------------------------------------------------
# Pencil expansion and slices
# ---------------------------------------------------------------------------

def _interpolate_integer_coefficients(values: Sequence[int]) -> List[int]:
    """Coefficients of the degree <= d polynomial with g(i) = values[i].

    Newton divided differences on the nodes 0..d, expanded to the monomial
    basis; exact, and asserts the result is integral.
    """
    d = len(values) - 1
    table = [Fraction(v) for v in values]
    newton: List[Fraction] = [table[0]]
    for level in range(1, d + 1):
        table = [(table[i + 1] - table[i]) / level
                 for i in range(len(table) - 1)]
        # divided difference over nodes i..i+level has denominator level!
        # handled incrementally: after `level` passes each entry equals the
        # divided difference f[i, ..., i+level].
        newton.append(table[0])
    # expand sum_k newton[k] * prod_{i<k} (u - i)
    coefficients = [Fraction(0)] * (d + 1)
    basis = [Fraction(1)]  # coefficients of prod_{i<k} (u - i)
    for k in range(d + 1):
        for power, c in enumerate(basis):
            coefficients[power] += newton[k] * c
        next_basis = [Fraction(0)] * (len(basis) + 1)
        for power, c in enumerate(basis):
            next_basis[power] -= c * k
            next_basis[power + 1] += c
        basis = next_basis
    out = []
    for c in coefficients:
        if c.denominator != 1:
            raise ArithmeticError(f"non-integer pencil coefficient {c}")
        out.append(int(c))
    return out


def pencil_coefficients(form: HomogeneousForm, x: IntVector,
                        y: IntVector) -> PencilExpansion:
    """Exact coefficients c_j of u^j v^(d-j) in F(u*x + v*y).

    Computed by interpolating g(u) = F(u*x + y) at u = 0..d; each c_j is an
    integer because c_j = binom(d, j) * Phi(x, ..., x, y, ..., y).
    """
    _check_point(form, x)
    _check_point(form, y)
    d = form.degree
    values = [
        evaluate_form(form, [u * a + b for a, b in zip(x, y)])
        for u in range(d + 1)
    ]
    return PencilExpansion(degree=d,
                           coefficients=tuple(
                               _interpolate_integer_coefficients(values)))


def is_line_generator_pair(form: HomogeneousForm, x: IntVector,
                           y: IntVector) -> bool:
    """True when the whole pencil {u*x + v*y} lies inside F = 0."""
    return pencil_coefficients(form, x, y).is_line


def _bounded_compositions(bounds: Sequence[int], total: int,
                          ) -> Iterator[Tuple[int, ...]]:
    """All tuples k with 0 <= k_i <= bounds_i and sum k_i = total."""
    n = len(bounds)
    suffix = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix[i] = suffix[i + 1] + bounds[i]

    def rec(i: int, remaining: int, prefix: Tuple[int, ...]):
        if i == n:
            if remaining == 0:
                yield prefix
            return
        lo = max(0, remaining - suffix[i + 1])
        hi = min(bounds[i], remaining)
        for k in range(lo, hi + 1):
            yield from rec(i + 1, remaining - k, prefix + (k,))

    yield from rec(0, total, ())


def integer_slice_form(form: HomogeneousForm, y: IntVector,
                       j: int) -> RationalForm:
    """The integer-scaled slice binom(d, j) * Phi(x, .., x, y, .., y).

    This equals the coefficient of u^j in F(u*x + y) read as a polynomial in
    x, so its coefficients are integers; it is the degree-j polynomial whose
    vanishing (for j = 1..d) characterises x spanning a line with y.

    Args:
        form: the form F.
        y: integer base point (d - j slots).
        j: slice degree, 0 <= j <= d.

    Returns:
        Degree-j homogeneous form in x with integer coefficients (returned
        as a RationalForm; possibly the zero form).
    """
    _check_point(form, y)
    if not 0 <= j <= form.degree:
        raise IndexOutOfRange(
            f"slice degree {j} outside 0..{form.degree}")
    out: Dict[Exponent, Fraction] = {}
    for exponents, coefficient in form.coeffs.items():
        for k in _bounded_compositions(exponents, j):
            weight = coefficient
            for e, kk, yy in zip(exponents, k, y):
                weight *= math.comb(e, kk)
                if e - kk:
                    weight *= yy ** (e - kk)
            if weight == 0:
                continue
            value = out.get(k, Fraction(0)) + weight
            if value:
                out[k] = Fraction(value)
            else:
                out.pop(k, None)
    return RationalForm(nvars=form.nvars, degree=j, coeffs=out)


def slice_form(form: HomogeneousForm, y: IntVector, j: int) -> RationalForm:
    """The degree-j slice Phi(x, ..., x, y, ..., y) with j slots x.

    Satisfies binom(d, j) * slice_form(F, y, j)(x) = c_j(x, y) for every x,
    where c_j comes from :func:`pencil_coefficients`; at j = d the slice is
    F itself, and d * slice_form(F, y, 1)(x) equals gradient(F, y) . x.

    Returns:
        RationalForm of degree j (coefficients rational in general).
    """
    scaled = integer_slice_form(form, y, j)
    binom = math.comb(form.degree, j)
    return RationalForm(
        nvars=form.nvars, degree=j,
        coeffs={e: c / binom for e, c in scaled.coeffs.items()})


# ---------------------------------------------------------------------------
# Derivatives
# ---------------------------------------------------------------------------

def gradient(form: HomogeneousForm, point: IntVector) -> Tuple[int, ...]:
    """Exact gradient vector (dF/dx_1, ..., dF/dx_n) at an integer point."""
    _check_point(form, point)
    out = []
    for i in range(form.nvars):
        total = 0
        for exponents, coefficient in form.coeffs.items():
            e = exponents[i]
            if not e:
                continue
            term = coefficient * e
            for k, (value, ee) in enumerate(zip(point, exponents)):
                power = ee - 1 if k == i else ee
                if power:
                    term *= value ** power
            total += term
        out.append(total)
    return tuple(out)


def hessian(form: HomogeneousForm, point: IntVector,
            ) -> Tuple[Tuple[int, ...], ...]:
    """Exact symmetric Hessian matrix of F at an integer point."""
    _check_point(form, point)
    n = form.nvars
    rows = [[0] * n for _ in range(n)]
    for i in range(n):
        for jj in range(i, n):
            total = 0
            for exponents, coefficient in form.coeffs.items():
                ei, ej = exponents[i], exponents[jj]
                factor = ei * (ei - 1) if i == jj else ei * ej
                if not factor:
                    continue
                term = coefficient * factor
                for k, (value, ee) in enumerate(zip(point, exponents)):
                    power = ee - (2 if (k == i and i == jj) else
                                  (1 if k in (i, jj) else 0))
                    if power:
                        term *= value ** power
                total += term
            rows[i][jj] = rows[jj][i] = total
    return tuple(tuple(r) for r in rows)


# ---------------------------------------------------------------------------
# Differencing and polarisation
# ---------------------------------------------------------------------------

def _as_polynomial(p) -> Polynomial:
    if isinstance(p, Polynomial):
        return p
    return Polynomial(nvars=p.nvars,
                      coeffs={e: Fraction(c) for e, c in p.coeffs.items()})


def discrete_difference(p, h: IntVector) -> Polynomial:
    """Forward difference p(x + h) - p(x), exact.

    Accepts a HomogeneousForm, RationalForm or Polynomial; iterating the
    operator with shifts h_1, ..., h_k yields the k-fold difference, whose
    degree drops by one per nonzero shift.
    """
    poly = _as_polynomial(p)
    if len(h) != poly.nvars:
        raise DimensionMismatch(
            f"shift has length {len(h)}, polynomial has {poly.nvars} variables")
    out: Dict[Exponent, Fraction] = {}
    for exponents, coefficient in poly.coeffs.items():
        # expand prod_i (x_i + h_i)^{e_i} and subtract the original term
        for k in _all_subexponents(exponents):
            weight = coefficient
            for e, kk, hh in zip(exponents, k, h):
                weight *= math.comb(e, kk)
                if e - kk:
                    weight *= hh ** (e - kk)
            if k == exponents:
                weight -= coefficient
            if weight == 0:
                continue
            value = out.get(k, Fraction(0)) + weight
            if value:
                out[k] = value
            else:
                out.pop(k, None)
    return Polynomial(nvars=poly.nvars, coeffs=out)


def _all_subexponents(exponents: Exponent) -> Iterator[Exponent]:
    """All tuples k with 0 <= k_i <= e_i."""
    if not exponents:
        yield ()
        return
    head, tail = exponents[0], exponents[1:]
    for rest in _all_subexponents(tail):
        for k in range(head + 1):
            yield (k,) + rest


def iterated_difference(p, shifts: Sequence[IntVector]) -> Polynomial:
    """Apply :func:`discrete_difference` once per shift, left to right."""
    poly = _as_polynomial(p)
    for h in shifts:
        poly = discrete_difference(poly, h)
    return poly


def multilinear_evaluate(form: HomogeneousForm,
                         vectors: Sequence[IntVector]) -> Fraction:
    """The symmetric d-linear form Phi at (v_1, ..., v_d), exact.

    Phi is recovered from F by finite-difference polarisation:

        Phi(v_1, .., v_d) = (1/d!) * sum_{S nonempty} (-1)^(d-|S|) F(sum_S v_i),

    so d! * Phi(v_1, ..., v_d) is always an integer, and Phi(x, ..., x) = F(x).
    """
    d = form.degree
    if len(vectors) != d:
        raise DimensionMismatch(
            f"need exactly {d} vectors, got {len(vectors)}")
    for v in vectors:
        _check_point(form, v)
    n = form.nvars
    total = 0
    for mask in range(1, 1 << d):
        point = [0] * n
        bits = 0
        m = mask
        index = 0
        while m:
            if m & 1:
                bits += 1
                vec = vectors[index]
                for i in range(n):
                    point[i] += vec[i]
            m >>= 1
            index += 1
        value = evaluate_form(form, point)
        total += value if (d - bits) % 2 == 0 else -value
    return Fraction(total, math.factorial(d))


def b_coefficient_vector(form: HomogeneousForm, y: IntVector,
                         basis: Sequence[IntVector], j: int,
                         shifts: Sequence[IntVector]) -> Tuple[Fraction, ...]:
    """Linear coefficients of the polarised degree-j slice in lattice coordinates.

    Writing Psi_j(xi) for the slice Phi(x, .., x, y, .., y) pulled back
    through x = sum_m xi_m b_m (b_m the basis rows), the polar form of Psi_j
    evaluated at (e_m, h_1, ..., h_{j-1}) is

        B_m(h_1, .., h_{j-1}) = Phi(b_m, B^T h_1, .., B^T h_{j-1}, y, .., y),

    and Psi_j's polarisation satisfies
    Psi_j(xi, h_1, .., h_{j-1}) = sum_m xi_m B_m(h_1, .., h_{j-1}).

    Args:
        form: the form F.
        y: base point (fills the last d - j slots).
        basis: s linearly independent integer vectors orthogonal to
            gradient(F, y), rows of the lattice basis.
        j: slice degree, 2 <= j <= d.
        shifts: j - 1 lattice-coordinate vectors of length s.

    Returns:
        Tuple of s exact rationals (B_1, ..., B_s).

    Raises:
        IndexOutOfRange: j outside 2..d.
        BasisNotSpanning: basis not of rank n - 1 or not orthogonal to the
            gradient at y.
        DimensionMismatch: wrong shift count or lengths.
    """
    _check_point(form, y)
    if not 2 <= j <= form.degree:
        raise IndexOutOfRange(f"slice degree {j} outside 2..{form.degree}")
    n = form.nvars
    s = n - 1
    if len(basis) != s or any(len(row) != n for row in basis):
        raise BasisNotSpanning(
            f"basis must consist of {s} vectors of length {n}")
    grad = gradient(form, y)
    for row in basis:
        if sum(g * b for g, b in zip(grad, row)) != 0:
            raise BasisNotSpanning(
                "basis vector not orthogonal to the gradient at y")
    if _rational_rank([list(row) for row in basis]) != s:
        raise BasisNotSpanning("basis rows are linearly dependent")
    if len(shifts) != j - 1:
        raise DimensionMismatch(
            f"need {j - 1} shift vectors, got {len(shifts)}")
    for h in shifts:
        if len(h) != s:
            raise DimensionMismatch(
                f"shift vectors live in {s} lattice coordinates")
    ambient_shifts = [
        [sum(h[m] * basis[m][i] for m in range(s)) for i in range(n)]
        for h in shifts
    ]
    out = []
    for m in range(s):
        slots = [list(basis[m])] + ambient_shifts + [list(y)] * (form.degree - j)
        out.append(multilinear_evaluate(form, slots))
    return tuple(out)


def _rational_rank(rows: List[List[int]]) -> int:
    """Rank over the rationals by exact Gaussian elimination."""
    matrix = [[Fraction(v) for v in row] for row in rows]
    rank = 0
    col = 0
    ncols = len(matrix[0]) if matrix else 0
    while rank < len(matrix) and col < ncols:
        pivot = next((r for r in range(rank, len(matrix))
                      if matrix[r][col] != 0), None)
        if pivot is None:
            col += 1
            continue
        matrix[rank], matrix[pivot] = matrix[pivot], matrix[rank]
        for r in range(rank + 1, len(matrix)):
            if matrix[r][col]:
                factor = matrix[r][col] / matrix[rank][col]
                matrix[r] = [a - factor * b
                             for a, b in zip(matrix[r], matrix[rank])]
        rank += 1
        col += 1
    return rank
