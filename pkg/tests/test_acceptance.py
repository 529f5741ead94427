"""Acceptance gate: the thirteen headline checks, one printed line each.

Every rational assertion is exact (==); the only tolerances are the ones
stated with the checks (KL 1e-9 relative, Monte Carlo 3 standard errors,
convergence thresholds).  Run with ``pytest -v -s tests/test_acceptance.py``
to see the PASS lines.
"""
import math
import random
import time
from contextlib import contextmanager
from fractions import Fraction

from conftest import (
    alignment_distance,
    random_dist,
    random_full_multiset,
    random_metric,
    random_multiset,
)

from kanturn import (
    Dist,
    GroundMetric,
    Multiset,
    flrn,
    fractionality_check,
    hypergeometric,
    hypergeometric_via_dd,
    iid,
    kantorovich,
    kantorovich_cost,
    kl_divergence,
    kl_multinomial_check,
    kleisli_push,
    mn_moment,
    mset_kantorovich,
    multinomial,
    mzip,
    mzip_naive_distance,
    nested_kantorovich,
    polya,
    polya_via_seqpolya,
    sum_metric,
    tensor,
    tuple_dist,
    tvd,
    tvd_bound_check,
)
from kanturn.laws import (
    McConfig,
    check_polya_limit,
    isometry_check,
    large_draw_sweep,
    large_urn_sweep,
    polya_dirichlet_mc,
    polya_validity,
)

F = Fraction
ABS = GroundMetric.numeric()
DISCRETE = GroundMetric.discrete()


@contextmanager
def criterion(number: int, title: str):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"FAIL criterion {number:2d}: {title}")
        raise
    elapsed = time.perf_counter() - start
    print(f"PASS criterion {number:2d}: {title} ({elapsed:.2f}s)")


def test_c01_intro_urn_pair():
    with criterion(1, "intro urns: distance 1/2, draw pmfs, nested distance 1/2, <1s"):
        start = time.perf_counter()
        u1 = Multiset({"G": 8, "B": 2})
        u2 = Multiset({"R": 5, "G": 4, "B": 1})
        assert mset_kantorovich(u1, u2, DISCRETE).cost == F(1, 2)

        hg1 = hypergeometric(u1, 2)
        assert hg1.prob(Multiset({"G": 2})) == F(28, 45)
        assert hg1.prob(Multiset({"G": 1, "B": 1})) == F(16, 45)
        assert hg1.prob(Multiset({"B": 2})) == F(1, 45)

        hg2 = hypergeometric(u2, 2)
        assert hg2.prob(Multiset({"R": 2})) == F(2, 9)
        assert hg2.prob(Multiset({"R": 1, "G": 1})) == F(4, 9)
        assert hg2.prob(Multiset({"G": 2})) == F(2, 15)
        assert hg2.prob(Multiset({"R": 1, "B": 1})) == F(1, 9)
        assert hg2.prob(Multiset({"G": 1, "B": 1})) == F(4, 45)

        assert nested_kantorovich(hg1, hg2, DISCRETE).cost == F(1, 2)
        assert time.perf_counter() - start < 1.0


def test_c02_distance_certificates_and_vertex_fractionality():
    with criterion(2, "eight-point distance 15/4 with closing certificates; "
                      "quarter-step pair at 1/2 with fractional vertex"):
        omega = Dist({0: F(1, 2), 4: F(1, 2)})
        omega2 = Dist({2: F(1, 8), 3: F(1, 8), 6: F(1, 8), 7: F(5, 8)})
        result = kantorovich(omega, omega2, ABS)
        assert result.cost == F(15, 4)
        assert result.coupling.validity(lambda p: ABS(*p)) == F(15, 4)
        assert result.dual_value(omega, omega2) == F(15, 4)
        assert result.witness_gap(omega, omega2) == F(15, 4)
        assert result.verify(omega, omega2, ABS)

        small = Dist({1: F(3, 4), 2: F(1, 4)})
        small2 = Dist({1: F(1, 2), 2: F(1, 4), 3: F(1, 4)})
        assert kantorovich(small, small2, ABS).cost == F(1, 2)
        assert fractionality_check(small, small2, 4, ABS)


def test_c03_multiset_distance_with_integer_coupling():
    with criterion(3, "four-ball multisets: distance 1/2, integer coupling, "
                      "alignment oracle agrees"):
        phi = Multiset({1: 3, 2: 1})
        phi2 = Multiset({1: 2, 2: 1, 3: 1})
        result = mset_kantorovich(phi, phi2, ABS)
        assert result.cost == F(1, 2)
        assert all(isinstance(n, int) for _, n in result.coupling.items())
        assert result.coupling.size == 4
        assert alignment_distance(phi, phi2, ABS) == F(1, 2)


def test_c04_multinomial_isometry_instance():
    with criterion(4, "three-draw multinomials: displayed pmfs, nested = base = 1/2"):
        omega = Dist({0: F(1, 3), 2: F(2, 3)})
        omega2 = Dist({1: F(1, 2), 2: F(1, 2)})
        draws = multinomial(omega, 3)
        assert draws.prob(Multiset({0: 3})) == F(1, 27)
        assert draws.prob(Multiset({0: 2, 2: 1})) == F(2, 9)
        assert draws.prob(Multiset({0: 1, 2: 2})) == F(4, 9)
        assert draws.prob(Multiset({2: 3})) == F(8, 27)
        draws2 = multinomial(omega2, 3)
        assert draws2.prob(Multiset({1: 3})) == F(1, 8)
        assert draws2.prob(Multiset({1: 2, 2: 1})) == F(3, 8)
        assert draws2.prob(Multiset({1: 1, 2: 2})) == F(3, 8)
        assert draws2.prob(Multiset({2: 3})) == F(1, 8)

        base = kantorovich_cost(omega, omega2, ABS)
        nested = nested_kantorovich(draws, draws2, ABS).cost
        assert base == nested == F(1, 2)


def test_c05_polya_isometry_instance():
    with criterion(5, "Polya pair: base distance 15, displayed pmfs, nested 15"):
        u1 = Multiset({0: 3, 10: 1})
        u2 = Multiset({0: 1, 10: 2, 50: 1})
        assert mset_kantorovich(u1, u2, ABS).cost == 15

        p1 = polya(u1, 2)
        assert p1 == Dist({Multiset({0: 2}): F(3, 5),
                           Multiset({0: 1, 10: 1}): F(3, 10),
                           Multiset({10: 2}): F(1, 10)})
        p2 = polya(u2, 2)
        assert p2 == Dist({Multiset({0: 2}): F(1, 10),
                           Multiset({0: 1, 10: 1}): F(1, 5),
                           Multiset({10: 2}): F(3, 10),
                           Multiset({0: 1, 50: 1}): F(1, 10),
                           Multiset({10: 1, 50: 1}): F(1, 5),
                           Multiset({50: 2}): F(1, 10)})
        assert nested_kantorovich(p1, p2, ABS).cost == 15


def test_c06_mzip_mixture_and_averaging_gap():
    with criterion(6, "mzip mixture matches; averaged coupling cost 5 stays above "
                      "the size-scaled optimum 3"):
        phi = Multiset({1: 3, 3: 2})
        phi2 = Multiset({1: 1, 2: 3, 3: 1})
        out = mzip(phi, phi2)
        assert out == Dist({
            Multiset({(1, 2): 2, (1, 3): 1, (3, 1): 1, (3, 2): 1}): F(3, 10),
            Multiset({(1, 1): 1, (1, 2): 1, (1, 3): 1, (3, 2): 2}): F(3, 10),
            Multiset({(1, 2): 3, (3, 1): 1, (3, 3): 1}): F(1, 10),
            Multiset({(1, 1): 1, (1, 2): 2, (3, 2): 1, (3, 3): 1}): F(3, 10)})
        naive = mzip_naive_distance(phi, phi2, ABS)
        scaled_optimum = phi.size * mset_kantorovich(phi, phi2, ABS).cost
        assert naive == 5
        assert scaled_optimum == 3
        assert naive > scaled_optimum


def test_c07_randomized_isometry_suite():
    with criterion(7, "300 randomized isometry instances, all exactly equal, <5min"):
        start = time.perf_counter()
        rnd = random.Random(2024)
        for mode in ("mn", "hg", "pol"):
            for _ in range(100):
                labels = list(range(rnd.randint(2, 4)))
                metric = random_metric(rnd, labels)
                k = rnd.randint(1, 3)
                if mode == "mn":
                    left = random_dist(rnd, labels, max_denominator=12)
                    right = random_dist(rnd, labels, max_denominator=12)
                else:
                    size = rnd.randint(k, 6)
                    left = random_multiset(rnd, labels, size)
                    right = random_multiset(rnd, labels, size)
                report = isometry_check(mode, left, right, k, metric)
                assert report.matched, (mode, left, right, k)
        assert time.perf_counter() - start < 300.0


def test_c08_duality_and_metric_property_suite():
    with criterion(8, "certificates on 200 solves; tvd/discrete on 100; scaled "
                      "tvd bound; tensor/iid on 50; frequency pushforwards on "
                      "100; moments on 50"):
        rnd = random.Random(4096)
        for _ in range(200):
            labels = list(range(rnd.randint(2, 5)))
            metric = random_metric(rnd, labels)
            omega = random_dist(rnd, labels, max_denominator=16)
            omega2 = random_dist(rnd, labels, max_denominator=16)
            result = kantorovich(omega, omega2, metric)
            assert result.verify(omega, omega2, metric)
            lhs, rhs = tvd_bound_check(omega, omega2, metric)
            assert lhs == result.cost and lhs <= rhs

        for _ in range(100):
            omega = random_dist(rnd, "abcd")
            omega2 = random_dist(rnd, "abcd")
            assert kantorovich_cost(omega, omega2, DISCRETE) == tvd(omega, omega2)

        for _ in range(50):
            labels = list(range(rnd.randint(2, 3)))
            metric = random_metric(rnd, labels)
            w1, w2 = random_dist(rnd, labels), random_dist(rnd, labels)
            r1, r2 = random_dist(rnd, labels), random_dist(rnd, labels)
            pairwise = kantorovich_cost(tensor(w1, r1), tensor(w2, r2),
                                        sum_metric(metric, metric))
            assert pairwise == kantorovich_cost(w1, w2, metric) + \
                kantorovich_cost(r1, r2, metric)
            k = rnd.randint(1, 3)
            assert kantorovich_cost(iid(w1, k), iid(w2, k),
                                    lambda s, t: tuple_dist(s, t, metric)) == \
                k * kantorovich_cost(w1, w2, metric)

        for _ in range(100):
            labels = list("abc")[: rnd.randint(1, 3)]
            urn = random_multiset(rnd, labels, rnd.randint(1, 8))
            k = rnd.randint(1, min(4, urn.size))
            assert kleisli_push(flrn, hypergeometric(urn, k)) == flrn(urn)
            assert kleisli_push(flrn, polya(urn, k)) == flrn(urn)
            omega = random_dist(rnd, labels)
            assert kleisli_push(flrn, multinomial(omega, k)) == omega

        for _ in range(50):
            omega = random_dist(rnd, "abc")
            k = rnd.randint(1, 4)
            y = rnd.choice(omega.support)
            assert mn_moment(omega, k, "first", y) == k * omega.prob(y)
            assert mn_moment(omega, k, "factorial", y) == \
                k * (k - 1) * omega.prob(y) ** 2
            assert mn_moment(omega, k, "flrn_square", y) == \
                ((k - 1) * omega.prob(y) ** 2 + omega.prob(y)) / k
            if len(omega.support) > 1:
                z = rnd.choice([x for x in omega.support if x != y])
                assert mn_moment(omega, k, "cross", y, z) == \
                    k * (k - 1) * omega.prob(y) * omega.prob(z)


def test_c09_composite_channel_equalities():
    with criterion(9, "iterated draw-delete and sequence-Polya composites equal "
                      "the closed forms on 20 random urns each"):
        rnd = random.Random(515)
        for _ in range(20):
            urn = random_multiset(rnd, "abc", rnd.randint(1, 6))
            k = rnd.randint(0, urn.size)
            assert hypergeometric_via_dd(urn, k) == hypergeometric(urn, k)
        for _ in range(20):
            urn = random_multiset(rnd, "ab", rnd.randint(1, 4))
            k = rnd.randint(0, 3)
            assert polya_via_seqpolya(urn, k) == polya(urn, k)


def test_c10_kl_scaling():
    with criterion(10, "KL between K-draw multinomials is K times the base KL "
                       "(relative 1e-9, 25 pairs, K in 2..4)"):
        rnd = random.Random(77)
        checked = 0
        while checked < 25:
            labels = list("abc")[: rnd.randint(2, 3)]
            omega2 = flrn(random_full_multiset(rnd, labels, rnd.randint(len(labels), 9)))
            omega = random_dist(rnd, labels)
            base = kl_divergence(omega, omega2)
            if base == 0 or math.isinf(base):
                continue
            k = rnd.choice((2, 3, 4))
            lhs, rhs = kl_multinomial_check(omega, omega2, k)
            assert math.isclose(lhs, rhs, rel_tol=1e-9)
            assert math.isclose(lhs / base, k, rel_tol=1e-9)
            checked += 1


def test_c11_law_of_large_urns():
    with criterion(11, "thousandfold urn scaling: both distances drop by >10x, "
                       "pmf ratios within 0.05 of 1, <30s"):
        start = time.perf_counter()
        rows = large_urn_sweep(Multiset({"G": 8, "B": 2}), 2, DISCRETE,
                               [1, 10, 100, 1000], threshold_div=10)
        first, last = rows[0], rows[-1]
        assert last.hg_distance < first.hg_distance / 10
        assert last.pol_distance < first.pol_distance / 10
        assert last.hg_ratio_dev <= F(1, 20)
        assert last.pol_ratio_dev <= F(1, 20)
        assert time.perf_counter() - start < 30.0


def test_c12_law_of_large_draws():
    with criterion(12, "coin draws: values 1/2 and 1/4 at K=1,2; all under the "
                       "variance bound; K=16 below a third of K=1"):
        coin = Dist({"a": F(1, 2), "b": F(1, 2)})
        rows = large_draw_sweep(coin, DISCRETE, [1, 2, 4, 8, 16])
        by_k = {r.draw_size: r for r in rows}
        assert by_k[1].tvd_value == F(1, 2)
        assert by_k[2].tvd_value == F(1, 4)
        for row in rows:
            assert float(row.tvd_value) <= row.bound + 1e-12
        assert by_k[16].tvd_value < by_k[1].tvd_value / 3


def test_c13_polya_dirichlet_limit():
    with criterion(13, "uniform binary urn: MC matches the closed-form 1/4 within "
                       "3 standard errors; exact K=32 validity within 0.05"):
        urn = Multiset({"a": 1, "b": 1})
        estimate = polya_dirichlet_mc(urn, McConfig(sample_count=100_000, rng_seed=7))
        assert estimate.sample_count >= 100_000
        assert abs(estimate.mean - 0.25) <= 3 * estimate.stderr
        exact = polya_validity(urn, 32)
        assert abs(float(exact) - estimate.mean) <= 0.05
        check_polya_limit(exact, estimate, 32)
