import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from samedge.errors import ContractViolation, ZeroGradientError
from samedge.objectives import QuadraticModel
from samedge.optim import (
    EdgeReport,
    OptimConfig,
    edge_ratio,
    gd_edge,
    gd_step,
    sam_edge,
    sam_step,
)
from samedge.quadlab import EigenDecomposition, closed_form_step_delta, random_psd


def quad1d(lam):
    return QuadraticModel([[lam]])


def textbook_sam_edge(eta, rho, g):
    return (g / (2 * rho)) * (math.sqrt(1 + 8 * rho / (eta * g)) - 1)


class TestGdStep:
    def test_one_dim(self):
        w = gd_step(quad1d(1.0), np.array([1.0]), OptimConfig(eta=0.1))
        assert w[0] == pytest.approx(0.9, abs=1e-15)

    def test_zero_step_size(self):
        w0 = np.array([0.3, -2.0])
        w = gd_step(QuadraticModel(np.diag([1.0, 5.0])), w0, OptimConfig(eta=0.0))
        np.testing.assert_array_equal(w, w0)

    def test_loss_increases_beyond_edge(self):
        model = quad1d(30.0)  # 30 > 2 / 0.1
        w0 = np.array([1.0])
        assert model.loss(gd_step(model, w0, OptimConfig(eta=0.1))) > model.loss(w0)


class TestSamStep:
    def test_rho_zero_is_gd_bitwise(self, rng):
        a = rng.standard_normal((6, 6))
        model = QuadraticModel(a @ a.T, rng.standard_normal(6))
        w = rng.standard_normal(6)
        cfg = OptimConfig(eta=0.07, rho=0.0)
        assert sam_step(model, w, cfg).tobytes() == gd_step(model, w, cfg).tobytes()

    def test_hand_arithmetic(self):
        w = sam_step(quad1d(1.0), np.array([1.0]), OptimConfig(eta=0.1, rho=0.1))
        assert w[0] == pytest.approx(0.89, abs=1e-15)

    def test_matches_closed_form(self, rng):
        eig = random_psd(5, rng)
        model = QuadraticModel.from_eigen(eig.eigenvalues, eig.eigenvectors,
                                          rng.standard_normal(5))
        w = rng.standard_normal(5)
        cfg = OptimConfig(eta=0.01, rho=0.1)
        simulated = model.loss(sam_step(model, w, cfg)) - model.loss(w)
        closed = closed_form_step_delta(EigenDecomposition.of(model.hessian),
                                        model.gradient(w), cfg.eta, cfg.rho)
        assert closed == pytest.approx(simulated, rel=1e-10)

    def test_zero_gradient(self):
        with pytest.raises(ZeroGradientError):
            sam_step(quad1d(1.0), np.array([0.0]), OptimConfig(eta=0.1, rho=0.1))


class TestEdges:
    @pytest.mark.parametrize("eta,expected", [(0.1, 20.0), (0.03, 200.0 / 3.0), (2.0, 1.0)])
    def test_gd_edge(self, eta, expected):
        assert gd_edge(eta) == pytest.approx(expected, rel=1e-15)

    def test_gd_edge_rejects_non_positive(self):
        with pytest.raises(ContractViolation):
            gd_edge(0.0)

    def test_sam_edge_perfect_square(self):
        assert sam_edge(0.1, 0.1, 1.0) == pytest.approx(10.0, rel=1e-15)

    def test_sam_edge_small_rho_limit(self):
        assert sam_edge(0.1, 1e-9, 1.0) == pytest.approx(20.0, rel=1e-7)

    def test_sam_edge_rho_zero_convention(self):
        assert sam_edge(0.1, 0.0, 1.0) == gd_edge(0.1)

    def test_sam_edge_matches_textbook_form(self, rng):
        for _ in range(200):
            eta, rho, g = np.exp(rng.uniform(np.log(1e-3), 0, 3))
            assert sam_edge(eta, rho, g) == pytest.approx(textbook_sam_edge(eta, rho, g),
                                                          rel=1e-10)

    def test_edge_report(self):
        r = EdgeReport.compute(0.1, 0.1, 1.0)
        assert (r.gd_edge, r.alpha) == (20.0, 0.5)
        assert r.sam_edge == pytest.approx(10.0) and r.ratio == pytest.approx(0.5)

    def test_grid_monotonicity_and_consistency(self):
        axis = np.geomspace(1e-3, 1.0, 20)
        for eta in axis:
            for rho in axis:
                edges = [sam_edge(eta, rho, g) for g in axis]
                assert all(e < gd_edge(eta) for e in edges)
                assert all(a < b for a, b in zip(edges, edges[1:]))
                for g, e in zip(axis, edges):
                    via_ratio = edge_ratio(eta * g / (2 * rho)) * gd_edge(eta)
                    assert via_ratio == pytest.approx(e, rel=1e-12)
            for g in axis:
                by_rho = [sam_edge(eta, rho, g) for rho in axis]
                assert all(a > b for a, b in zip(by_rho, by_rho[1:]))


class TestEdgeRatio:
    def test_perfect_square(self):
        assert edge_ratio(0.5) == pytest.approx(0.5, rel=1e-15)

    def test_large_alpha_limit(self):
        assert 1 - 1e-5 <= edge_ratio(1e6) <= 1.0

    def test_small_alpha_like_sqrt(self):
        assert edge_ratio(1e-6) / math.sqrt(1e-6) == pytest.approx(1.0, rel=0.01)

    def test_monotone_on_log_grid(self):
        vals = [edge_ratio(a) for a in np.geomspace(1e-8, 1e8, 10_000)]
        assert all(a < b for a, b in zip(vals, vals[1:]))
        assert 0 < vals[0] and vals[-1] <= 1

    def test_rejects_non_positive(self):
        with pytest.raises(ContractViolation):
            edge_ratio(0.0)


@settings(max_examples=200)
@given(eta=st.floats(1e-4, 10), rho=st.floats(1e-6, 10), g=st.floats(1e-6, 1e3))
def test_sam_edge_below_gd_edge(eta, rho, g):
    e = sam_edge(eta, rho, g)
    assert 0 < e < gd_edge(eta)
    assert 0 < e / gd_edge(eta) <= 1


def test_config_validation():
    with pytest.raises(ContractViolation):
        OptimConfig(eta=0.1, rho=-0.1)
    with pytest.raises(ContractViolation):
        OptimConfig(eta=-1.0)
    with pytest.raises(ContractViolation):
        OptimConfig(eta=0.1, max_steps=0)
