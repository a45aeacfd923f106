"""Tests for the crossing-probability engines."""

import math

import numpy as np
import pytest
from scipy.integrate import dblquad

from slepian_bcp import (AffinePiece, DimensionTooLargeError, DomainError,
                         Estimate, GaussianVectorSpec, Partition,
                         PiecewiseAffineBoundary, ProcessParams,
                         affine_boundary, approximate, bcp_montecarlo,
                         bcp_quadrature, constant_boundary,
                         convergence_study, fdd_density,
                         noncross_affine_product, bcp_integrand)

PARAMS = ProcessParams(1.0, 2.0)

# Crossing probabilities for (q, d) = (1, 2) on the minimal partition,
# frozen from high-precision nested quadrature of the two-dimensional
# representation (the skeleton variables decorrelate at lag q, so the
# joint density is a product of standard normals).
CROSS_CONST_1 = 0.55426964756375817       # g = 1
CROSS_AFFINE = 0.59372048268812056        # g(t) = 0.5 + (t - q)

TWO_PIECE = PiecewiseAffineBoundary(
    PARAMS, (AffinePiece(1.0, 1.5, 1.0, -0.6), AffinePiece(1.5, 2.0, 0.7, 0.4)))


class TestPartition:
    def test_equidistant(self):
        part = Partition.equidistant(PARAMS, 4)
        np.testing.assert_allclose(part.times, [1.0, 1.25, 1.5, 1.75, 2.0])
        assert part.n == 4

    def test_from_boundary(self):
        part = Partition.from_boundary(TWO_PIECE)
        assert part.times == (1.0, 1.5, 2.0)

    def test_rejects_bad_endpoints(self):
        with pytest.raises(DomainError):
            Partition(PARAMS, (1.1, 2.0))
        with pytest.raises(DomainError):
            Partition(PARAMS, (1.0, 1.9))

    def test_rejects_non_monotone(self):
        with pytest.raises(DomainError):
            Partition(PARAMS, (1.0, 1.5, 1.5, 2.0))


class TestEstimate:
    def test_validates_probability(self):
        with pytest.raises(ValueError):
            Estimate(value=1.2, error=0.0, method="quadrature")
        with pytest.raises(ValueError):
            Estimate(value=0.5, error=-1.0, method="montecarlo")
        with pytest.raises(ValueError):
            Estimate(value=0.5, error=0.0, method="magic")


class TestBcpIntegrand:
    def test_factorization_matches_joint_density(self):
        # pair density x conditional chain == joint density, so the
        # integrand equals fdd * bridge factors
        rng = np.random.default_rng(31)
        part = Partition.equidistant(PARAMS, 2)
        spec = GaussianVectorSpec(PARAMS, part.times)
        bnd = constant_boundary(PARAMS, 1.0)
        for _ in range(100):
            x = rng.normal(size=3) * 1.5
            ours = bcp_integrand(part, bnd, x)
            factors = 1.0
            for i, (lo, hi) in enumerate(zip(part.times, part.times[1:])):
                b, a = bnd.local_affine(lo, hi)
                factors *= noncross_affine_product(PARAMS.q, hi - lo, b, a,
                                                   x[i], x[i + 1])
            ref = fdd_density(spec, x) * factors
            if ref > 0:
                assert abs(ours - ref) <= 1e-10 * ref

    def test_far_boundary_reduces_to_density(self):
        part = Partition.equidistant(PARAMS, 3)
        bnd = constant_boundary(PARAMS, 1e3)
        spec = GaussianVectorSpec(PARAMS, part.times)
        x = np.array([0.3, -0.1, 0.4, 0.0])
        assert bcp_integrand(part, bnd, x) == pytest.approx(
            fdd_density(spec, x), rel=1e-12)

    def test_vanishes_on_boundary(self):
        part = Partition.equidistant(PARAMS, 2)
        bnd = constant_boundary(PARAMS, 1.0)
        assert bcp_integrand(part, bnd, [0.0, 1.0, 0.0]) == 0.0

    def test_rejects_bad_input(self):
        part = Partition.equidistant(PARAMS, 2)
        bnd = constant_boundary(PARAMS, 1.0)
        with pytest.raises(DomainError):
            bcp_integrand(part, bnd, [0.0, 0.0])
        with pytest.raises(DomainError):
            bcp_integrand(part, bnd, [0.0, math.nan, 0.0])


class TestBcpQuadrature:
    def test_far_boundary_above(self):
        est = bcp_quadrature(constant_boundary(PARAMS, 10.0), tol=1e-9)
        assert est.value <= 1e-8

    def test_far_boundary_below(self):
        est = bcp_quadrature(constant_boundary(PARAMS, -10.0), tol=1e-9)
        assert est.value >= 1.0 - 1e-8

    def test_frozen_constant_value(self):
        est = bcp_quadrature(constant_boundary(PARAMS, 1.0), tol=1e-8)
        assert est.value == pytest.approx(CROSS_CONST_1, abs=1e-8)
        assert est.error <= 1e-8

    def test_frozen_affine_value(self):
        est = bcp_quadrature(affine_boundary(PARAMS, 0.5, 1.0), tol=1e-8)
        assert est.value == pytest.approx(CROSS_AFFINE, abs=1e-8)

    def test_matches_independent_nested_quadrature(self):
        # n = 1 at (q, d) = (1, 2): skeleton variables are independent
        # standard normals, bridge factor from the constant closed form.
        def integrand(x1, x0):
            dens = math.exp(-(x0 * x0 + x1 * x1) / 2) / (2 * math.pi)
            return dens * -math.expm1(-(1 - x0) * (1 - x1))

        nocross, err = dblquad(integrand, -10, 1, -10, 1, epsabs=1e-11)
        assert 1.0 - nocross == pytest.approx(CROSS_CONST_1, abs=1e-9)
        est = bcp_quadrature(constant_boundary(PARAMS, 1.0), tol=1e-8)
        assert est.value == pytest.approx(1.0 - nocross, abs=1e-7)

    def test_partition_invariance(self):
        bnd = constant_boundary(PARAMS, 1.0)
        e1 = bcp_quadrature(bnd, Partition.from_boundary(bnd), tol=1e-7)
        e3 = bcp_quadrature(bnd, Partition.equidistant(PARAMS, 3), tol=1e-7)
        assert abs(e1.value - e3.value) <= 5e-4

    def test_rescaling_invariance(self):
        params = ProcessParams(0.5, 0.9)
        bnd = affine_boundary(params, 0.8, -0.5)
        canonical_params = ProcessParams(1.0, params.e)
        canonical = affine_boundary(canonical_params, 0.8,
                                    -0.5 * params.q)
        v1 = bcp_quadrature(bnd, tol=1e-8).value
        v2 = bcp_quadrature(canonical, tol=1e-8).value
        assert v1 == pytest.approx(v2, abs=1e-7)

    def test_dimension_cap(self):
        bnd = constant_boundary(PARAMS, 1.0)
        with pytest.raises(DimensionTooLargeError):
            bcp_quadrature(bnd, Partition.equidistant(PARAMS, 5))

    def test_partition_must_contain_knots(self):
        part = Partition(PARAMS, (1.0, 1.4, 2.0))
        with pytest.raises(DomainError):
            bcp_quadrature(TWO_PIECE, part)

    def test_finer_partition_with_knots_included(self):
        base = bcp_quadrature(TWO_PIECE, tol=1e-7)
        finer = bcp_quadrature(TWO_PIECE, Partition.equidistant(PARAMS, 4),
                               tol=1e-7)
        assert base.value == pytest.approx(finer.value, abs=5e-6)


class TestBcpMontecarlo:
    def test_boundary_below_everything(self):
        est = bcp_montecarlo(constant_boundary(PARAMS, -10.0),
                             n_paths=10_000, seed=1)
        assert est.value == 1.0
        assert est.error == 0.0

    def test_agrees_with_quadrature(self):
        quad = bcp_quadrature(constant_boundary(PARAMS, 1.0), tol=1e-8)
        mc = bcp_montecarlo(constant_boundary(PARAMS, 1.0),
                            n_paths=200_000, seed=2)
        assert abs(mc.value - quad.value) <= 3.0 * mc.error

    def test_partition_refinement_leaves_estimand_unchanged(self):
        bnd = constant_boundary(PARAMS, 1.0)
        e2 = bcp_montecarlo(bnd, Partition.equidistant(PARAMS, 2),
                            n_paths=200_000, seed=3)
        e8 = bcp_montecarlo(bnd, Partition.equidistant(PARAMS, 8),
                            n_paths=200_000, seed=4)
        combined = math.hypot(e2.error, e8.error)
        assert abs(e2.value - e8.value) <= 3.0 * combined

    def test_reproducible(self):
        bnd = TWO_PIECE
        a = bcp_montecarlo(bnd, n_paths=50_000, seed=5)
        b = bcp_montecarlo(bnd, n_paths=50_000, seed=5)
        assert a == b

    def test_worker_count_does_not_change_result(self):
        bnd = TWO_PIECE
        a = bcp_montecarlo(bnd, n_paths=64_000, seed=6, workers=1,
                           block_size=8_000)
        b = bcp_montecarlo(bnd, n_paths=64_000, seed=6, workers=4,
                           block_size=8_000)
        assert a.value == b.value and a.error == b.error

    def test_paired_seed_monotonicity_is_exact(self):
        g1 = constant_boundary(PARAMS, 0.8)
        g2 = constant_boundary(PARAMS, 1.1)
        part = Partition.equidistant(PARAMS, 3)
        p1 = bcp_montecarlo(g1, part, n_paths=20_000, seed=7)
        p2 = bcp_montecarlo(g2, part, n_paths=20_000, seed=7)
        assert p1.value >= p2.value

    def test_quadrature_monotonicity(self):
        p1 = bcp_quadrature(constant_boundary(PARAMS, 0.8), tol=1e-8)
        p2 = bcp_quadrature(constant_boundary(PARAMS, 1.1), tol=1e-8)
        assert p1.value >= p2.value - 2e-8


class TestConvergenceStudy:
    def test_quad_and_mc_agree(self):
        rows_q = convergence_study(lambda t: t * t, PARAMS, [2, 4],
                                   method="quad", tol=1e-7)
        rows_m = convergence_study(lambda t: t * t, PARAMS, [2, 4],
                                   method="mc", n_paths=200_000, seed=8)
        for rq, rm in zip(rows_q, rows_m):
            assert abs(rq.estimate.value - rm.estimate.value) \
                <= 3.0 * rm.estimate.error

    def test_coupled_differences_have_small_errors(self):
        rows = convergence_study(lambda t: t * t, PARAMS, [2, 4, 8],
                                 method="mc", n_paths=100_000, seed=9)
        assert rows[0].diff_prev is None
        for row in rows[1:]:
            assert row.diff_se < row.estimate.error / 5.0

    def test_rejects_bad_counts(self):
        with pytest.raises(DomainError):
            convergence_study(lambda t: 1.0, PARAMS, [], method="mc")
