"""Brute-force pair counts, Hessian strata, and tangency dimensions."""

import csv
import itertools
import math
import random

import pytest

from linecount.counting import (
    FallbackFullBox,
    count_fixed_y,
    count_pairs,
    export_breakdown_csv,
    hessian_corank,
    m2_dimension,
    singular_points_in_box,
    stratum_count,
)
from linecount.errors import (
    DomainError,
    NotOnHypersurface,
    ResourceLimit,
    ZeroVectorInput,
)
from linecount.fixtures import (
    QUINTIC_BASE_POINT,
    fermat_form,
    fermat_quintic,
    random_dense_form,
)
from linecount.forms import is_line_generator_pair, parse_form

QUINTIC = fermat_quintic()
Y0 = QUINTIC_BASE_POINT
QUADRIC = parse_form("x1*x2 + x3*x4", n_hint=4)


def oracle_pair_count(form, x_bound, y_bound):
    """Direct double loop over the two boxes; shares no slicing logic."""
    n = form.nvars
    total = 0
    for x in itertools.product(range(-x_bound, x_bound + 1), repeat=n):
        if not any(x):
            continue
        for y in itertools.product(range(-y_bound, y_bound + 1), repeat=n):
            if not any(y):
                continue
            if is_line_generator_pair(form, x, y):
                total += 1
    return total


class TestCountFixedY:
    def test_quintic_fixture(self):
        assert count_fixed_y(QUINTIC, Y0, 3) == 49

    def test_quadric_fixture(self):
        assert count_fixed_y(QUADRIC, (1, 0, 0, 0), 3) == 91

    def test_x_zero(self):
        assert count_fixed_y(QUINTIC, Y0, 0) == 1
        assert count_fixed_y(QUADRIC, (1, 0, 0, 0), 0) == 1

    def test_quintic_closed_form(self):
        # solutions are exactly x2 = -x1, x4 = -x3
        for x_bound in (1, 2, 5):
            assert count_fixed_y(QUINTIC, Y0, x_bound) \
                == (2 * x_bound + 1) ** 2

    def test_zero_base_point_rejected(self):
        with pytest.raises(ZeroVectorInput):
            count_fixed_y(QUINTIC, (0, 0, 0, 0), 2)

    def test_oracle_equivalence_fixed_y(self):
        rng = random.Random(11)
        for form in (QUINTIC, QUADRIC, fermat_form(3, 3)):
            n = form.nvars
            for _ in range(5):
                y = tuple(rng.randint(-2, 2) for _ in range(n))
                if not any(y):
                    y = (1,) + (0,) * (n - 1)
                expected = 0
                for x in itertools.product(range(-2, 3), repeat=n):
                    pencil = [
                        c == 0
                        for c in _pencil_tail(form, x, y)
                    ]
                    if all(pencil):
                        expected += 1
                assert count_fixed_y(form, y, 2) == expected

    def test_fallback_full_box_warns(self):
        cusp = parse_form("x1^3", n_hint=2)
        with pytest.warns(FallbackFullBox):
            count = count_fixed_y(cusp, (0, 1), 2)
        # gradient vanishes at (0, 1); solutions are the x1 = 0 slab
        assert count == 5

    def test_workers_match_sequential(self):
        assert count_fixed_y(QUINTIC, Y0, 3, workers=2) == 49

    def test_budget_exhaustion(self):
        with pytest.raises(ResourceLimit) as info:
            count_fixed_y(QUINTIC, Y0, 20, budget=10)
        assert info.value.budget == 10
        assert info.value.needed > 10


def _pencil_tail(form, x, y):
    """Pencil coefficients of degree >= 1 in x, from the interpolation route
    (independent of the slice-form evaluation used by the counters)."""
    from linecount.forms import pencil_coefficients
    coeffs = pencil_coefficients(form, x, y).coefficients
    return coeffs[1:]


class TestCountPairs:
    def test_oracle_equivalence_small_boxes(self):
        cases = [
            (QUINTIC, 1, 1),
            (QUADRIC, 2, 1),
            (fermat_form(3, 3), 2, 2),
            (fermat_form(4, 3), 1, 1),
        ]
        for form, x_bound, y_bound in cases:
            report = count_pairs(form, x_bound, y_bound)
            assert report.total == oracle_pair_count(form, x_bound, y_bound)

    def test_oracle_equivalence_random_cubic(self):
        form = random_dense_form(3, 3, seed=5)
        report = count_pairs(form, 2, 2)
        assert report.total == oracle_pair_count(form, 2, 2)

    def test_breakdown_identity(self):
        for form, x_bound, y_bound in ((QUINTIC, 2, 1), (QUADRIC, 2, 2)):
            report = count_pairs(form, x_bound, y_bound, breakdown=True)
            assert report.total == sum(report.per_y_breakdown.values())

    def test_transpose_symmetry(self):
        assert count_pairs(QUINTIC, 1, 2).total \
            == count_pairs(QUINTIC, 2, 1).total
        assert count_pairs(QUADRIC, 1, 3).total \
            == count_pairs(QUADRIC, 3, 1).total

    def test_ordered_pairs_counted_both_ways(self):
        report = count_pairs(QUINTIC, 1, 1, breakdown=True)
        x, y = (1, -1, 0, 0), (0, 0, 1, -1)
        assert report.per_y_breakdown[y] > 0
        assert report.per_y_breakdown[x] > 0  # the reversed pair

    def test_proportional_subcount(self):
        report = count_pairs(QUINTIC, 1, 1)
        # 18 nonzero base points on the quintic in the unit box, each with
        # the two proportional partners +-y
        assert report.proportional_pairs == 36
        excluded = count_pairs(QUINTIC, 1, 1, exclude_proportional=True)
        assert excluded.total == report.total - 36
        assert excluded.proportional_pairs == 36

    def test_proportional_pairs_are_line_pairs(self):
        report = count_pairs(QUADRIC, 3, 2)
        assert report.proportional_pairs <= report.total
        # oracle: count proportional pairs directly
        direct = 0
        for x in itertools.product(range(-3, 4), repeat=4):
            if not any(x):
                continue
            for y in itertools.product(range(-2, 3), repeat=4):
                if not any(y):
                    continue
                rank_one = all(
                    x[i] * y[j] == x[j] * y[i]
                    for i in range(4) for j in range(i + 1, 4))
                if rank_one and is_line_generator_pair(QUADRIC, x, y):
                    direct += 1
        assert report.proportional_pairs == direct

    def test_stratified_count(self):
        report = count_pairs(QUINTIC, 1, 1, stratum_rho=2)
        # oracle: both points need corank >= 2 (at least two vanishing
        # coordinates for a diagonal form)
        direct = 0
        for x in itertools.product(range(-1, 2), repeat=4):
            if not any(x):
                continue
            if hessian_corank(QUINTIC, x) < 2:
                continue
            for y in itertools.product(range(-1, 2), repeat=4):
                if not any(y):
                    continue
                if hessian_corank(QUINTIC, y) < 2:
                    continue
                if is_line_generator_pair(QUINTIC, x, y):
                    direct += 1
        assert report.stratified == direct
        assert report.total == count_pairs(QUINTIC, 1, 1).total

    def test_workers_match_sequential(self):
        solo = count_pairs(QUADRIC, 2, 2, breakdown=True)
        multi = count_pairs(QUADRIC, 2, 2, breakdown=True, workers=2)
        assert solo == multi

    def test_bounds_validated(self):
        with pytest.raises(DomainError):
            count_pairs(QUINTIC, 0, 1)

    def test_budget_exhaustion(self):
        with pytest.raises(ResourceLimit):
            count_pairs(QUADRIC, 3, 3, budget=50)

    def test_csv_export(self, tmp_path):
        report = count_pairs(QUINTIC, 1, 1, breakdown=True)
        path = tmp_path / "breakdown.csv"
        export_breakdown_csv(report, str(path))
        with open(path, newline="") as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["y1", "y2", "y3", "y4", "count"]
        assert len(rows) - 1 == len(report.per_y_breakdown)
        total = sum(int(row[-1]) for row in rows[1:])
        assert total == report.total

    def test_csv_requires_breakdown(self, tmp_path):
        report = count_pairs(QUINTIC, 1, 1)
        with pytest.raises(DomainError):
            export_breakdown_csv(report, str(tmp_path / "x.csv"))


class TestHessianCorank:
    def test_fixture_values(self):
        assert hessian_corank(QUINTIC, Y0) == 2
        assert hessian_corank(QUINTIC, (1, 1, 1, 1)) == 0
        assert hessian_corank(QUINTIC, (0, 0, 0, 0)) == 4

    def test_fermat_closed_form(self):
        """For diagonal forms of degree >= 3 the corank counts the zero
        coordinates."""
        rng = random.Random(3)
        for degree in (3, 5):
            for n in (3, 4, 5):
                form = fermat_form(n, degree)
                for _ in range(20):
                    y = tuple(rng.choice([-2, -1, 0, 0, 1, 3])
                              for _ in range(n))
                    zeros = sum(1 for v in y if v == 0)
                    assert hessian_corank(form, y) == zeros

    def test_quadric_constant_hessian(self):
        assert hessian_corank(QUADRIC, (0, 0, 0, 0)) == 0
        assert hessian_corank(QUADRIC, (5, 2, -1, 7)) == 0


class TestStratumCount:
    def test_quintic_fixture(self):
        report = stratum_count(QUINTIC, 1, 2)
        assert report.count == 12

    def test_corank_n_empty(self):
        for y_bound in (1, 2):
            assert stratum_count(QUINTIC, y_bound, 4).count == 0

    def test_rho_one_matches_scan(self):
        report = stratum_count(QUINTIC, 1, 1)
        direct = sum(
            1 for y in itertools.product(range(-1, 2), repeat=4)
            if any(y) and sum(v ** 5 for v in y) == 0 and 0 in y)
        assert report.count == direct

    def test_monotone_in_rho(self):
        counts = [stratum_count(QUINTIC, 2, rho).count
                  for rho in (1, 2, 3, 4)]
        assert counts == sorted(counts, reverse=True)

    def test_fitted_exponent_desk_scale(self):
        report = stratum_count(QUINTIC, 8, 2)
        assert report.dyadic_counts[0][0] == 2
        assert report.fitted_exponent <= 4 - 2 + 0.5

    def test_fitted_exponent_nan_when_unfittable(self):
        report = stratum_count(QUINTIC, 1, 2)
        assert math.isnan(report.fitted_exponent)
        assert report.dyadic_counts == ()

    def test_rho_validated(self):
        with pytest.raises(DomainError):
            stratum_count(QUINTIC, 2, 0)
        with pytest.raises(DomainError):
            stratum_count(QUINTIC, 2, 5)


class TestM2Dimension:
    def test_quintic_fixture(self):
        report = m2_dimension(QUINTIC, Y0)
        assert report.span_dim == 3
        assert report.system_dim == 3
        assert report.agree
        assert int(report) == 3

    def test_corank_zero_gives_line(self):
        report = m2_dimension(QUINTIC, (1, 1, -1, -1))
        assert hessian_corank(QUINTIC, (1, 1, -1, -1)) == 0
        assert report.span_dim == 1
        assert report.agree

    def test_bounded_by_corank_plus_one(self):
        rng = random.Random(17)
        for _ in range(40):
            y = _random_fermat_zero(rng, 4)
            report = m2_dimension(QUINTIC, y)
            assert report.span_dim <= hessian_corank(QUINTIC, y) + 1

    def test_two_methods_agree_on_random_instances(self):
        rng = random.Random(29)
        checked = 0
        for degree in (3, 5):
            for n in (4, 6):
                form = fermat_form(n, degree)
                for _ in range(25):
                    y = _random_fermat_zero(rng, n)
                    report = m2_dimension(form, y)
                    assert report.agree, (degree, n, y, report)
                    checked += 1
        assert checked == 100

    def test_errors(self):
        with pytest.raises(ZeroVectorInput):
            m2_dimension(QUINTIC, (0, 0, 0, 0))
        with pytest.raises(NotOnHypersurface):
            m2_dimension(QUINTIC, (1, 1, 1, 1))


def _random_fermat_zero(rng, n):
    """Nonzero integer zero of the degree-odd diagonal form: coordinates in
    cancelling pairs, padded with zeros, randomly placed."""
    while True:
        values = []
        for _ in range(n // 2):
            a = rng.randint(-3, 3)
            values.extend([a, -a])
        values.extend([0] * (n - 2 * (n // 2)))
        rng.shuffle(values)
        if any(values):
            return tuple(values)


class TestSingularPoints:
    def test_quintic_smooth(self):
        assert singular_points_in_box(QUINTIC, 5) == []

    def test_cuspidal_curve(self):
        form = parse_form("x1^2*x2", n_hint=2)
        points = singular_points_in_box(form, 2)
        assert (0, 1) in points and (0, -1) in points
        assert (0, 2) in points and (0, -2) in points

    def test_monotone_in_box_size(self):
        form = parse_form("x1^2*x2", n_hint=2)
        small = set(singular_points_in_box(form, 2))
        large = set(singular_points_in_box(form, 4))
        assert small <= large

    def test_quadric_cone(self):
        cone = parse_form("x1^2 + x2^2 - x3^2", n_hint=3)
        assert singular_points_in_box(cone, 3) == []
        degenerate = parse_form("x1^2 + x2^2", n_hint=3)
        points = singular_points_in_box(degenerate, 2)
        assert points == [(0, 0, -2), (0, 0, -1), (0, 0, 1), (0, 0, 2)]
