"""Local densities, complete sums, and circle-method predictions.

Arithmetic ingredients (complete sums over residue images, truncated
singular series, p-adic densities) are computed in exact rational
arithmetic; archimedean ingredients (oscillatory integrals, window
densities) are scrambled quasi-Monte-Carlo estimates whose uncertainty is
measured across independent scrambles.  The two meet in the prediction
assemblers, which recombine the pieces exactly.

Every analytic output crosses the API as a :class:`DensityEstimate`
carrying either an exact rational value or (mean, stderr, samples, seed);
no bare floats leave the module.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import mpmath
import numpy as np
from scipy.stats import qmc

from .counting import _Budget
from .errors import DimensionMismatch, DomainError
from .expsums import _nonzero_slices, _pullback
from .forms import (
    HomogeneousForm,
    Polynomial,
    _bounded_compositions,
    compiled_monomials,
    evaluate_batch,
    form_to_json,
    integer_slice_form,
)
from .lattice import IntegerLattice, box_profile, slicing_lattice

DEFAULT_COUNT_BUDGET = 10 ** 7
SCRAMBLES = 16

KINDS = ("p-adic", "real", "series", "integral")


# ---------------------------------------------------------------------------
# Result types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DensityEstimate:
    """A local density: exact rational, or Monte-Carlo mean with stderr.

    Exactly one of the two shapes is populated: ``value`` alone for exact
    results, or ``mean``/``stderr``/``samples``/``seed`` together for
    sampled ones (stderr is the standard deviation of the independent
    scramble means divided by the square root of their number).
    """

    kind: str
    value: Optional[Fraction] = None
    mean: Optional[complex] = None
    stderr: Optional[float] = None
    samples: Optional[int] = None
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise DomainError(f"unknown density kind {self.kind!r}")
        exact = self.value is not None
        sampled = self.mean is not None
        if exact == sampled:
            raise DomainError(
                "density estimate must be exact or sampled, not both")
        if sampled and (self.stderr is None or self.samples is None
                        or self.seed is None):
            raise DomainError(
                "sampled estimates carry stderr, samples and seed")
        if exact and (self.stderr is not None or self.samples is not None):
            raise DomainError("exact values carry no sampling metadata")

    @property
    def is_exact(self) -> bool:
        return self.value is not None

    def magnitude(self) -> float:
        """The estimate as a plain magnitude, for display and tolerances."""
        if self.is_exact:
            return float(self.value)
        return abs(self.mean)

    def to_json(self) -> dict:
        out: Dict[str, object] = {"kind": self.kind}
        if self.is_exact:
            out["value"] = _format_fraction(self.value)
        else:
            mean = complex(self.mean)
            out["mean"] = (mean.real if mean.imag == 0
                           else [mean.real, mean.imag])
            out["stderr"] = self.stderr
            out["samples"] = self.samples
            out["seed"] = self.seed
        return out


@dataclass(frozen=True)
class Prediction:
    """A main-term prediction together with every ingredient that built it.

    ``main_term`` is the exact rational recombination of the components
    (Monte-Carlo means enter as the exact dyadic rationals they are), so
    dividing it back by the local factors recovers the power of the box
    size exactly.
    """

    main_term: Fraction
    tag: str
    components: Dict[str, object] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "main_term": _format_fraction(self.main_term),
            "main_term_float": float(self.main_term),
            "tag": self.tag,
            "components": self.components,
        }


def _format_fraction(value: Fraction) -> str:
    return (str(value.numerator) if value.denominator == 1
            else f"{value.numerator}/{value.denominator}")


# ---------------------------------------------------------------------------
# Pencil coefficient forms in the doubled variable set
# ---------------------------------------------------------------------------

def pencil_coefficient_form(form: HomogeneousForm, j: int) -> HomogeneousForm:
    """The coefficient of u^j in F(u x + y) as a form in the 2n variables.

    Variables 0..n-1 are the x block, n..2n-1 the y block; the result is
    homogeneous of the original degree with integer coefficients.
    """
    n = form.nvars
    d = form.degree
    if not 0 <= j <= d:
        raise DomainError(f"pencil index {j} outside 0..{d}")
    out: Dict[Tuple[int, ...], int] = {}
    for exponents, coefficient in form.coeffs.items():
        for k in _bounded_compositions(exponents, j):
            weight = coefficient
            for e, kk in zip(exponents, k):
                weight *= math.comb(e, kk)
            key = tuple(k) + tuple(e - kk for e, kk in zip(exponents, k))
            out[key] = out.get(key, 0) + weight
    cleaned = {e: c for e, c in out.items() if c}
    return HomogeneousForm(nvars=2 * n, degree=d, coeffs=cleaned)


# ---------------------------------------------------------------------------
# Residue enumeration
# ---------------------------------------------------------------------------

def _grid_chunks(nvars: int, modulus: int, total: int,
                 chunk_rows: int = 1 << 16) -> Iterator[np.ndarray]:
    """The grid {0..modulus-1}^nvars in row chunks (mixed-radix decode)."""
    for start in range(0, total, chunk_rows):
        stop = min(start + chunk_rows, total)
        idx = np.arange(start, stop, dtype=np.int64)
        block = np.empty((stop - start, nvars), dtype=np.int64)
        for t in range(nvars - 1, -1, -1):
            block[:, t] = idx % modulus
            idx //= modulus
        yield block


def _lattice_residue_chunks(lattice: IntegerLattice, q: int,
                            chunk_rows: int = 1 << 16
                            ) -> Iterator[np.ndarray]:
    """Ambient representatives of the lattice image mod q, in chunks."""
    basis = np.asarray(lattice.basis, dtype=np.int64)
    for block in _grid_chunks(lattice.rank, q, q ** lattice.rank,
                              chunk_rows):
        yield (block @ basis) % q


# ---------------------------------------------------------------------------
# Complete sums
# ---------------------------------------------------------------------------

def phase_histogram(form: HomogeneousForm, y: Sequence[int], q: int,
                    a: Sequence[int], *,
                    budget: Optional[int] = DEFAULT_COUNT_BUDGET
                    ) -> Dict[int, int]:
    """Counts of (sum_j a_j c_j(x, y)) mod q over the lattice image mod q.

    The histogram determines the complete sum exactly: the sum equals
    sum_r count[r] e(r / q).  Exposed separately so that algebraic
    identities (multiplicativity under coprime factorisation) can be
    verified in exact integer arithmetic.
    """
    if q < 1:
        raise DomainError("modulus must be at least 1")
    d = form.degree
    if len(a) != d - 1:
        raise DimensionMismatch(
            f"need {d - 1} phase coefficients, got {len(a)}")
    lattice = slicing_lattice(form, y)
    slices = _nonzero_slices(form, y)
    ledger = _Budget(budget)
    counts = np.zeros(q, dtype=np.int64)
    coeff = {j: int(a[j - 2]) % q for j in range(2, d + 1)}
    for block in _lattice_residue_chunks(lattice, q):
        ledger.charge(block.shape[0])
        total = np.zeros(block.shape[0], dtype=np.int64)
        for j, sliced in slices:
            if coeff[j] == 0:
                continue
            values = evaluate_batch(sliced, block)
            if values.dtype == object:
                values = (values % q).astype(np.int64)
            total = (total + coeff[j] * (values % q)) % q
        counts += np.bincount(total, minlength=q)
    return {r: int(c) for r, c in enumerate(counts) if c}


def complete_sum_S(form: HomogeneousForm, y: Sequence[int], q: int,
                   a: Sequence[int], *, precision: int = 120,
                   budget: Optional[int] = DEFAULT_COUNT_BUDGET
                   ) -> mpmath.mpc:
    """The complete exponential sum over the lattice residues mod q.

    Sums e((a_2 c_2(x) + ... + a_d c_d(x)) / q) over the image of the
    slicing lattice in (Z/q)^n, through an exact phase histogram; the only
    floating-point step is e(.) at the requested precision.

    Satisfies |S| <= q^rank, with equality at a = 0.

    Raises:
        ZeroVectorInput: degenerate base point.
        ResourceLimit: q^rank residues exceed the budget.
    """
    histogram = phase_histogram(form, y, q, a, budget=budget)
    with mpmath.mp.workprec(precision):
        real = []
        imag = []
        for r, count in sorted(histogram.items()):
            value = mpmath.expjpi(2 * mpmath.mpf(r) / q)
            real.append(count * value.real)
            imag.append(count * value.imag)
        return mpmath.mpc(mpmath.fsum(real), mpmath.fsum(imag))


# ---------------------------------------------------------------------------
# Congruence counting: direct scan and Hensel lifting
# ---------------------------------------------------------------------------

def _partial(poly: Polynomial, t: int) -> Polynomial:
    out: Dict[Tuple[int, ...], Fraction] = {}
    for exponents, coefficient in poly.coeffs.items():
        e = exponents[t]
        if e:
            key = tuple(v - 1 if i == t else v
                        for i, v in enumerate(exponents))
            acc = out.get(key, Fraction(0)) + e * coefficient
            if acc:
                out[key] = acc
            else:
                out.pop(key, None)
    return Polynomial(nvars=poly.nvars, coeffs=out)


def _rank_mod_p(matrix: List[List[int]], p: int) -> int:
    rows = [[v % p for v in row] for row in matrix]
    rank = 0
    cols = len(rows[0]) if rows else 0
    for col in range(cols):
        pivot = next((r for r in range(rank, len(rows))
                      if rows[r][col] % p), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        inv = pow(rows[rank][col], -1, p)
        rows[rank] = [v * inv % p for v in rows[rank]]
        for r in range(len(rows)):
            if r != rank and rows[r][col]:
                factor = rows[r][col]
                rows[r] = [(v - factor * w) % p
                           for v, w in zip(rows[r], rows[rank])]
        rank += 1
        if rank == len(rows):
            break
    return rank


def _solution_mask(polys: Sequence[Polynomial], block: np.ndarray,
                   modulus: int) -> np.ndarray:
    mask = np.ones(block.shape[0], dtype=bool)
    for poly in polys:
        values = evaluate_batch(poly, block)
        if values.dtype == object:
            residues = np.array([int(v) % modulus for v in values],
                                dtype=np.int64)
        else:
            residues = values % modulus
        mask &= residues == 0
        if not mask.any():
            break
    return mask


def count_congruence_solutions(polys: Sequence[Polynomial], nvars: int,
                               p: int, H: int, *,
                               budget: Optional[int] = DEFAULT_COUNT_BUDGET
                               ) -> int:
    """Number of solutions of the polynomial system mod p^H.

    Scans the full grid when p^(H * nvars) fits the budget.  Otherwise
    solutions mod p are classified by the rank of the Jacobian: points
    where it reaches the number of (non-trivial) equations lift to exactly
    p^((H-1)(nvars - rank)) solutions mod p^H, and the remaining singular
    fibers are enumerated exhaustively.

    Raises:
        ResourceLimit: the scan or a singular fiber exceeds the budget.
    """
    if p < 2 or H < 1:
        raise DomainError("need a modulus p >= 2 and H >= 1")
    ledger = _Budget(budget)
    modulus = p ** H
    # equations all of whose coefficients vanish mod p^H impose nothing
    active = [poly for poly in polys
              if not poly.is_zero
              and any(int(c) % modulus for c in poly.coeffs.values())]
    if not active:
        return modulus ** nvars
    direct = modulus ** nvars
    if budget is None or direct <= budget:
        ledger.charge(direct)
        total = 0
        for block in _grid_chunks(nvars, modulus, direct):
            total += int(_solution_mask(active, block, modulus).sum())
        return total

    # Hensel route: classify the mod-p solutions by Jacobian rank.
    base = p ** nvars
    ledger.charge(base)
    jacobian = [[_partial(poly, t) for t in range(nvars)]
                for poly in active]
    r = len(active)
    total = 0
    fiber = p ** ((H - 1) * nvars)
    for block in _grid_chunks(nvars, p, base):
        mask = _solution_mask(active, block, p)
        for point in block[mask]:
            rows = [[int(cell(tuple(int(v) for v in point)))
                     for cell in row] for row in jacobian]
            if _rank_mod_p(rows, p) == r:
                total += p ** ((H - 1) * (nvars - r))
            else:
                ledger.charge(fiber)
                lifted = 0
                for tail in _grid_chunks(nvars, p ** (H - 1), fiber):
                    pts = point[None, :] + p * tail
                    lifted += int(_solution_mask(active, pts,
                                                 modulus).sum())
                total += lifted
    return total


def _lattice_system(form: HomogeneousForm,
                    y: Sequence[int]) -> Tuple[List[Polynomial], int]:
    """Slice congruences pulled back to lattice coordinates."""
    lattice = slicing_lattice(form, y)
    s = lattice.rank
    polys = []
    for _, sliced in _nonzero_slices(form, y):
        coeffs = _pullback(sliced, lattice.basis, s)
        polys.append(Polynomial(nvars=s, coeffs=coeffs))
    return polys, s


def _fullspace_system(form: HomogeneousForm,
                      y: Sequence[int]) -> Tuple[List[Polynomial], int]:
    """Slice congruences for degrees 1..d in the ambient coordinates."""
    polys = []
    for j in range(1, form.degree + 1):
        sliced = integer_slice_form(form, y, j)
        if not sliced.is_zero:
            polys.append(Polynomial(nvars=form.nvars,
                                    coeffs=dict(sliced.coeffs)))
    return polys, form.nvars


def lattice_congruence_count(form: HomogeneousForm, y: Sequence[int],
                             modulus: int, *,
                             budget: Optional[int] = DEFAULT_COUNT_BUDGET
                             ) -> int:
    """#{x in the lattice image mod ``modulus``: all slice values vanish}.

    For prime-power moduli the count can fall through to Hensel lifting;
    general moduli are scanned directly.
    """
    factorised = _prime_power(modulus)
    polys, s = _lattice_system(form, y)
    if factorised is not None:
        return count_congruence_solutions(polys, s, factorised[0],
                                          factorised[1], budget=budget)
    ledger = _Budget(budget)
    total = 0
    for block in _grid_chunks(s, modulus, modulus ** s):
        ledger.charge(block.shape[0])
        total += (int(_solution_mask(polys, block, modulus).sum())
                  if polys else block.shape[0])
    return total


def _prime_power(q: int) -> Optional[Tuple[int, int]]:
    if q < 2:
        return None
    for p in range(2, q + 1):
        if p * p > q:
            return (q, 1)
        if q % p == 0:
            h = 0
            while q % p == 0:
                q //= p
                h += 1
            return (p, h) if q == 1 else None
    return None


# ---------------------------------------------------------------------------
# Truncated singular series
# ---------------------------------------------------------------------------

def singular_series_truncated(form: HomogeneousForm, y: Sequence[int],
                              window: int, *,
                              budget: Optional[int] = DEFAULT_COUNT_BUDGET
                              ) -> DensityEstimate:
    """Exact truncated singular series sum_{q <= window} q^{-s} A_y(q).

    A_y(q) is the sum of the complete sums over phase vectors a mod q with
    gcd(a_2, ..., a_d, q) = 1.  Grouping the a by their gcd with q shows

        A_y(q) = sum_{e | q, e squarefree} mu(e) e^s (q/e)^{d-1} N(q/e),

    where N(m) counts lattice residues mod m on which every slice value
    vanishes; each N(m) comes from an exact residue scan, so the result is
    an exact rational.

    Raises:
        ResourceLimit: the residue scans exceed the budget.
    """
    if window < 1:
        raise DomainError("window must be at least 1")
    lattice = slicing_lattice(form, y)
    s = lattice.rank
    d = form.degree
    counts = {m: lattice_congruence_count(form, y, m, budget=budget)
              for m in range(1, window + 1)}
    total = Fraction(0)
    for q in range(1, window + 1):
        inner = Fraction(0)
        for e in range(1, q + 1):
            if q % e:
                continue
            mu = _moebius(e)
            if mu == 0:
                continue
            m = q // e
            inner += mu * Fraction(e ** s) * m ** (d - 1) * counts[m]
        total += inner / Fraction(q ** s)
    return DensityEstimate(kind="series", value=total)


def _moebius(n: int) -> int:
    if n == 1:
        return 1
    result = 1
    p = 2
    while p * p <= n:
        if n % p == 0:
            n //= p
            if n % p == 0:
                return 0
            result = -result
        p += 1
    if n > 1:
        result = -result
    return result


# ---------------------------------------------------------------------------
# p-adic densities for fixed y
# ---------------------------------------------------------------------------

def chi_p_fixed_y(form: HomogeneousForm, y: Sequence[int], p: int, H: int,
                  *, display_convention: bool = False,
                  budget: Optional[int] = DEFAULT_COUNT_BUDGET
                  ) -> Tuple[Fraction, Fraction]:
    """Local density at p for the fixed-y slice system, both normalisations.

    Returns (lattice-normalised, full-space-normalised):

        p^(H (d - 1 - s)) * #{x in the lattice image mod p^H :
                              slice values 2..d all vanish},
        p^(H (d - n))     * #{x mod p^H : slice values 1..d all vanish}.

    The exponents are pinned by the partial-sum identity
    sum_{h <= H} p^{-h s} A_y(p^h) = p^(H(d-1-s)) N(p^H), which must hold
    for the series to factor through its own Euler product.  With
    ``display_convention`` the triangular number D = d(d+1)/2 replaces d in
    both exponents; that variant breaks the partial-sum identity and is
    provided only so the discrepancy can be demonstrated.

    Raises:
        ResourceLimit: counting exceeds the budget.
    """
    if H < 1:
        raise DomainError("H must be at least 1")
    if p < 2 or _prime_power(p) != (p, 1):
        raise DomainError("p must be prime")
    d = form.degree
    n = form.nvars
    D = d * (d + 1) // 2
    head = D if display_convention else d
    lattice_polys, s = _lattice_system(form, y)
    n_lattice = count_congruence_solutions(lattice_polys, s, p, H,
                                           budget=budget)
    full_polys, _ = _fullspace_system(form, y)
    n_full = count_congruence_solutions(full_polys, n, p, H, budget=budget)
    lattice_value = Fraction(p) ** (H * (head - 1 - s)) * n_lattice
    full_value = Fraction(p) ** (H * (head - n)) * n_full
    return lattice_value, full_value


# ---------------------------------------------------------------------------
# Quasi-Monte-Carlo machinery
# ---------------------------------------------------------------------------

def _scramble_batches(dim: int, samples: int, seed: int
                      ) -> Tuple[int, List[np.ndarray]]:
    """SCRAMBLES independent low-discrepancy batches in [0,1)^dim.

    The per-batch size is the smallest power of two giving at least
    ``samples`` points overall; returns (total points, batches).
    """
    per = max(1, -(-samples // SCRAMBLES))
    exponent = max(0, (per - 1).bit_length())
    batches = []
    for i in range(SCRAMBLES):
        sampler = qmc.Sobol(d=dim, scramble=True, seed=seed + i)
        batches.append(sampler.random_base2(exponent))
    return SCRAMBLES * (1 << exponent), batches


def _combine(kind: str, means: Sequence[complex], samples: int,
             seed: int) -> DensityEstimate:
    arr = np.asarray(means, dtype=complex)
    mean = complex(arr.mean())
    spread = float(np.sqrt(np.mean(np.abs(arr - arr.mean()) ** 2)))
    stderr = spread / math.sqrt(len(means))
    if abs(mean.imag) < 1e-12 * max(1.0, abs(mean.real)):
        mean = mean.real
    return DensityEstimate(kind=kind, mean=mean, stderr=stderr,
                           samples=samples, seed=seed)


def _float_values(form, points: np.ndarray) -> np.ndarray:
    """Float64 evaluation of an integer-coefficient form on many points."""
    matrix, coefficients = compiled_monomials(form)
    out = np.zeros(points.shape[0])
    for row, coefficient in zip(matrix, coefficients):
        term = np.full(points.shape[0], float(coefficient))
        for i, e in enumerate(row):
            if e:
                term = term * points[:, i] ** int(e)
        out += term
    return out


def _slab_geometry(form: HomogeneousForm, y: Sequence[int], x_bound):
    """Sampling box, basis matrix, and covolume for the slab at scale X."""
    lattice = slicing_lattice(form, y)
    profile = box_profile(lattice, 1)
    radii = np.array([float(h) * float(x_bound)
                      for h in profile.half_widths])
    basis = np.asarray(lattice.basis, dtype=np.float64)
    return lattice, radii, basis, math.sqrt(lattice.covolume_sq)


def _beta_table(beta, d: int) -> Dict[int, float]:
    if isinstance(beta, Mapping):
        table = {int(j): float(v) for j, v in beta.items()}
    else:
        table = {j: float(v) for j, v in enumerate(beta, start=2)}
    if sorted(table) != list(range(2, d + 1)):
        raise DimensionMismatch(
            f"need frequencies for degrees 2..{d}")
    return table


def oscillatory_v(form: HomogeneousForm, y: Sequence[int], beta,
                  x_bound, samples: int, seed: int = 0) -> DensityEstimate:
    """QMC estimate of the oscillatory slab integral v_y(beta, X).

    Integrates e(sum_j beta_j c_j(xi, y)) over the slab (slicing hyperplane
    intersected with the sup-norm box of radius X), with the surface
    measure realised through the lattice parametrisation: xi = B^T t, d
    sigma = sqrt(covolume^2) dt.  The mean is complex; the uncertainty is
    the spread across independent scrambles.

    Raises:
        ZeroVectorInput: degenerate base point.
        DomainError: fewer than 1000 samples.
    """
    if samples < 1000:
        raise DomainError("oscillatory integrals need at least 10^3 samples")
    d = form.degree
    table = _beta_table(beta, d)
    lattice, radii, basis, root_cov = _slab_geometry(form, y, x_bound)
    slices = _nonzero_slices(form, y)
    volume = float(np.prod(2 * radii))
    total, batches = _scramble_batches(lattice.rank, samples, seed)
    means = []
    for batch in batches:
        t = (2 * batch - 1) * radii
        ambient = t @ basis
        inside = np.max(np.abs(ambient), axis=1) <= float(x_bound)
        phase = np.zeros(ambient.shape[0])
        for j, sliced in slices:
            if table[j]:
                phase += table[j] * _float_values(sliced, ambient)
        values = np.where(inside, np.exp(2j * np.pi * phase), 0)
        means.append(complex(values.mean()) * volume * root_cov)
    return _combine("integral", means, total, seed)


def singular_integral_truncated(form: HomogeneousForm, y: Sequence[int],
                                window, samples: int, seed: int = 0
                                ) -> DensityEstimate:
    """QMC estimate of the truncated singular integral J_y(W).

    J_y(W) integrates v_y(beta, 1) / sqrt(covolume^2) over beta in
    [-W, W]^(d-1).  The beta integral factors exactly: each frequency
    contributes the kernel sin(2 pi W c) / (pi c) at its slice value, so a
    single slab-level QMC pass estimates the whole truncated integral (the
    covolume from the parametrisation cancels the normalisation).

    Raises:
        DomainError: bad window or sample count.
    """
    window = float(window)
    if window <= 0:
        raise DomainError("window must be positive")
    if samples < 1000:
        raise DomainError("singular integrals need at least 10^3 samples")
    lattice, radii, basis, _ = _slab_geometry(form, y, 1)
    slices = _nonzero_slices(form, y)
    volume = float(np.prod(2 * radii))
    total, batches = _scramble_batches(lattice.rank, samples, seed)
    means = []
    for batch in batches:
        t = (2 * batch - 1) * radii
        ambient = t @ basis
        inside = np.max(np.abs(ambient), axis=1) <= 1.0
        kernel = np.ones(ambient.shape[0])
        for _, sliced in slices:
            values = _float_values(sliced, ambient)
            kernel *= 2 * window * np.sinc(2 * window * values)
        means.append(float(np.mean(np.where(inside, kernel, 0.0)))
                     * volume)
    return _combine("integral", means, total, seed)


def real_density_window(form: HomogeneousForm, y: Sequence[int],
                        epsilon: Sequence[float], samples: int,
                        seed: int = 0) -> DensityEstimate:
    """Window-density estimate of the real local factor for fixed y.

    Measures the volume of xi in [-1, 1]^n with |c_j(xi, y)| <= eps_j / 2
    for every degree j = 1..d, normalised by the product of the window
    widths.  Fourier-free companion of the truncated singular integral.
    """
    d = form.degree
    n = form.nvars
    if len(epsilon) != d:
        raise DimensionMismatch(f"need {d} window widths, got {len(epsilon)}")
    eps = [float(e) for e in epsilon]
    if any(e <= 0 for e in eps):
        raise DomainError("window widths must be positive")
    slices = [integer_slice_form(form, y, j) for j in range(1, d + 1)]
    scale = 2.0 ** n / math.prod(eps)
    total, batches = _scramble_batches(n, samples, seed)
    means = []
    for batch in batches:
        points = 2 * batch - 1
        inside = np.ones(points.shape[0], dtype=bool)
        for width, sliced in zip(eps, slices):
            if sliced.is_zero:
                continue
            inside &= np.abs(_float_values(sliced, points)) <= width / 2
        means.append(float(inside.mean()) * scale)
    return _combine("real", means, total, seed)


# ---------------------------------------------------------------------------
# Global pair densities
# ---------------------------------------------------------------------------

def chi_global_padic(form: HomogeneousForm, p: int, H: int = 1, *,
                     budget: Optional[int] = 10 ** 9) -> DensityEstimate:
    """Exact pair-system density at p: all pencil coefficients vanish.

    Counts pairs (x, y) mod p^H with c_j(x, y) = 0 for j = 0..d and
    normalises by p^(H (d + 1 - 2n)) (d + 1 equations in 2n variables —
    a convention recorded with every prediction that uses it).

    Quadratic forms get a fast path: the outer coefficients select the
    residue solutions of F on each side, and the middle coefficient is a
    bilinear pairing counted with blocked integer matrix products.

    Raises:
        ResourceLimit: the pair scan exceeds the budget.
    """
    if H < 1:
        raise DomainError("H must be at least 1")
    if p < 2 or _prime_power(p) != (p, 1):
        raise DomainError("p must be prime")
    n = form.nvars
    d = form.degree
    modulus = p ** H
    ledger = _Budget(budget)
    if d == 2:
        count = _quadric_pair_count(form, modulus, ledger)
    else:
        pencil = [pencil_coefficient_form(form, j) for j in range(d + 1)]
        polys = [Polynomial(nvars=2 * n,
                            coeffs={e: Fraction(c)
                                    for e, c in g.coeffs.items()})
                 for g in pencil]
        ledger.charge(modulus ** (2 * n))
        count = 0
        for block in _grid_chunks(2 * n, modulus, modulus ** (2 * n)):
            count += int(_solution_mask(polys, block, modulus).sum())
    value = Fraction(p) ** (H * (d + 1 - 2 * n)) * count
    return DensityEstimate(kind="p-adic", value=value)


def _quadric_pair_count(form: HomogeneousForm, modulus: int,
                        ledger: _Budget) -> int:
    """Pairs (x, y) mod m with F(x), F(y) and the polar pairing all zero."""
    n = form.nvars
    ledger.charge(modulus ** n)
    solutions = []
    for block in _grid_chunks(n, modulus, modulus ** n):
        mask = _solution_mask([Polynomial(nvars=n,
                                          coeffs={e: Fraction(c)
                                                  for e, c
                                                  in form.coeffs.items()})],
                              block, modulus)
        solutions.append(block[mask])
    points = np.concatenate(solutions, axis=0)
    if points.shape[0] == 0:
        return 0
    gradient_rows = np.stack(
        [evaluate_batch(_partial(Polynomial(nvars=n,
                                            coeffs={e: Fraction(c)
                                                    for e, c
                                                    in form.coeffs.items()}),
                                 t), points) % modulus
         for t in range(n)], axis=1).astype(np.int64)
    ledger.charge(points.shape[0] ** 2)
    count = 0
    step = max(1, (1 << 22) // max(1, points.shape[0]))
    for start in range(0, points.shape[0], step):
        pairing = gradient_rows[start:start + step] @ points.T % modulus
        count += int((pairing == 0).sum())
    return count


def chi_global_real(form: HomogeneousForm, epsilon: Sequence[float],
                    samples: int, seed: int = 0) -> DensityEstimate:
    """Windowed real pair density over [-1, 1]^(2n).

    The d + 1 pencil coefficients are each confined to a centred window of
    the given width; the volume fraction is scaled by 4^n over the product
    of the widths.
    """
    d = form.degree
    n = form.nvars
    if len(epsilon) != d + 1:
        raise DimensionMismatch(
            f"need {d + 1} window widths, got {len(epsilon)}")
    eps = [float(e) for e in epsilon]
    if any(e <= 0 for e in eps):
        raise DomainError("window widths must be positive")
    pencil = [pencil_coefficient_form(form, j) for j in range(d + 1)]
    scale = 4.0 ** n / math.prod(eps)
    total, batches = _scramble_batches(2 * n, samples, seed)
    means = []
    for batch in batches:
        points = 2 * batch - 1
        inside = np.ones(points.shape[0], dtype=bool)
        for width, g in zip(eps, pencil):
            inside &= np.abs(_float_values(g, points)) <= width / 2
        means.append(float(inside.mean()) * scale)
    return _combine("real", means, total, seed)


def chi_global(form: HomogeneousForm, *, p: Optional[int] = None, H: int = 1,
               epsilon: Optional[Sequence[float]] = None,
               samples: Optional[int] = None, seed: int = 0,
               budget: int = 10 ** 9) -> DensityEstimate:
    """Local pair density at one place: pass p for p-adic, epsilon for real."""
    padic = p is not None
    real = epsilon is not None or samples is not None
    if padic == real:
        raise DomainError("pass either p or (epsilon, samples), not both")
    if padic:
        return chi_global_padic(form, p, H, budget=budget)
    if epsilon is None or samples is None:
        raise DomainError("real mode needs both epsilon and samples")
    return chi_global_real(form, epsilon, samples, seed)


# ---------------------------------------------------------------------------
# Predictions
# ---------------------------------------------------------------------------

def predict_fixed_y(form: HomogeneousForm, y: Sequence[int], x_bound: int,
                    window: int, samples: int, seed: int = 0, *,
                    budget: Optional[int] = DEFAULT_COUNT_BUDGET
                    ) -> Prediction:
    """Circle-method main term X^(s - D + 1) S_y(W) J_y(W) for fixed y.

    The series factor is exact; the integral factor is a QMC estimate whose
    dyadic mean enters the recombination exactly, so the returned main term
    divided by the two factors is exactly the power of X.
    """
    lattice = slicing_lattice(form, y)
    s = lattice.rank
    D = form.degree * (form.degree + 1) // 2
    series = singular_series_truncated(form, y, window, budget=budget)
    integral = singular_integral_truncated(form, y, window, samples, seed)
    power = Fraction(x_bound) ** (s - D + 1)
    main = power * series.value * Fraction(float(integral.mean.real
                                                 if isinstance(integral.mean,
                                                               complex)
                                                 else integral.mean))
    return Prediction(
        main_term=main,
        tag="fixed-y",
        components={
            "x_bound": x_bound,
            "window": window,
            "rank": s,
            "coefficient_count": D,
            "exponent": s - D + 1,
            "series": series.to_json(),
            "integral": integral.to_json(),
        })


def predict_pairs(form: HomogeneousForm, x_bound: int, y_bound: int,
                  p_max: int, H: int, epsilon: Sequence[float],
                  samples: int, seed: int = 0, *,
                  cache: Optional["EulerCache"] = None,
                  workers: int = 1,
                  budget: Optional[int] = 10 ** 9) -> Prediction:
    """Global pair-count prediction (XY)^(n - D) chi_inf prod_p chi_p.

    Local factors run over primes up to p_max at level H; the real factor
    is the windowed density.  The normalisation convention (d + 1 pencil
    equations over 2n variables) is recorded in the components.  Distinct
    primes are independent, so they are farmed out to ``workers`` threads.
    """
    n = form.nvars
    D = form.degree * (form.degree + 1) // 2
    chi_inf = chi_global_real(form, epsilon, samples, seed)
    primes = _primes_up_to(p_max)
    factors: Dict[int, DensityEstimate] = {}
    missing = []
    for p in primes:
        cached = cache.get(form, None, p, H) if cache else None
        if cached is not None:
            factors[p] = DensityEstimate(kind="p-adic", value=cached)
        else:
            missing.append(p)
    if workers > 1 and len(missing) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            computed = pool.map(
                lambda p: chi_global_padic(form, p, H, budget=budget),
                missing)
            for p, estimate in zip(missing, computed):
                factors[p] = estimate
    else:
        for p in missing:
            factors[p] = chi_global_padic(form, p, H, budget=budget)
    for p in missing:
        if cache:
            cache.put(form, None, p, H, factors[p].value)
    factors = {p: factors[p] for p in primes}
    main = Fraction(x_bound * y_bound) ** (n - D)
    main *= Fraction(float(chi_inf.mean.real
                           if isinstance(chi_inf.mean, complex)
                           else chi_inf.mean))
    for estimate in factors.values():
        main *= estimate.value
    return Prediction(
        main_term=main,
        tag="global",
        components={
            "x_bound": x_bound,
            "y_bound": y_bound,
            "p_max": p_max,
            "H": H,
            "exponent": n - D,
            "convention": "d+1 pencil equations over 2n variables",
            "chi_infinity": chi_inf.to_json(),
            "chi_p": {str(p): est.to_json() for p, est in factors.items()},
        })


def _primes_up_to(limit: int) -> List[int]:
    return [p for p in range(2, limit + 1) if _prime_power(p) == (p, 1)]


# ---------------------------------------------------------------------------
# Euler factor cache
# ---------------------------------------------------------------------------

class EulerCache:
    """Content-addressed store for exact local factors.

    Keys combine the form's coefficient table, the base point (or None for
    the global pair system), the prime, and the level, so a cache entry can
    never be replayed against different inputs.
    """

    def __init__(self, path: str) -> None:
        self.path = path
        self._table: Dict[str, str] = {}
        if os.path.exists(path):
            with open(path, "r", encoding="utf-8") as handle:
                self._table = json.load(handle)

    @staticmethod
    def _key(form: HomogeneousForm, y: Optional[Sequence[int]], p: int,
             H: int) -> str:
        payload = json.dumps(
            {"form": form_to_json(form),
             "y": None if y is None else [int(v) for v in y],
             "p": p, "H": H},
            sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def get(self, form: HomogeneousForm, y: Optional[Sequence[int]],
            p: int, H: int) -> Optional[Fraction]:
        raw = self._table.get(self._key(form, y, p, H))
        return None if raw is None else Fraction(raw)

    def put(self, form: HomogeneousForm, y: Optional[Sequence[int]],
            p: int, H: int, value: Fraction) -> None:
        self._table[self._key(form, y, p, H)] = _format_fraction(value)
        with open(self.path, "w", encoding="utf-8") as handle:
            json.dump(self._table, handle, indent=2, sort_keys=True)
