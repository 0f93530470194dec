import numpy as np
import pytest

from flowssl import (
    Graph,
    GraphError,
    hf_solve,
    laplacian,
    lr_solve,
    nearest_labeled,
    predict_all,
)
from flowssl.baselines import hf_system
from helpers import g2, random_connected_graph


class TestHarmonicFunctions:
    def test_g2_hand_solution(self):
        fu = hf_solve(laplacian(g2()), {0: -1.0, 3: 1.0})
        assert np.allclose(fu, [-1 / 3, 1 / 3])

    def test_constant_labels_stay_constant(self):
        g = random_connected_graph(np.random.default_rng(41), n=15, n_labeled=3)
        fu = hf_solve(laplacian(g), {i: 2.5 for i in g.labeled})
        assert np.allclose(fu, 2.5)

    def test_residual_invariant(self):
        g = random_connected_graph(np.random.default_rng(42), n=20, n_labeled=4)
        sys = hf_system(laplacian(g), g.label_map())
        assert sys.residual < 1e-10

    def test_agrees_with_flow_lambda0(self):
        g = random_connected_graph(np.random.default_rng(43), n=25, n_labeled=5)
        fu = hf_solve(laplacian(g), g.label_map())
        values = predict_all(g, 0.0).values()
        unlabeled = sorted(values)
        assert max(abs(values[p] - fu[i]) for i, p in enumerate(unlabeled)) < 1e-10

    def test_singular_component_raises(self):
        g = Graph(4, [(0, 1, 1.0), (2, 3, 1.0)], labeled=(0,), values=(1.0,))
        with pytest.raises(GraphError, match="singular|labels"):
            hf_solve(laplacian(g), g.label_map())


class TestLabelRegularization:
    def test_small_mu_approaches_harmonic(self):
        g = random_connected_graph(np.random.default_rng(44), n=15, n_labeled=3)
        lap = laplacian(g)
        f = lr_solve(lap, g.label_map(), mu=1e-8)
        fu = hf_solve(lap, g.label_map())
        unlabeled = [i for i in range(g.n) if i not in g.labeled]
        assert max(abs(f[p] - fu[i]) for i, p in enumerate(unlabeled)) < 1e-4

    def test_single_label_pulls_toward_value(self):
        g = random_connected_graph(np.random.default_rng(45), n=10, n_labeled=1)
        lap = laplacian(g)
        value = 3.0
        f = lr_solve(lap, {g.labeled[0]: value}, mu=1.0)
        assert np.all(f >= 0.0) and np.all(f <= value + 1e-12)

    def test_mu_validation(self):
        with pytest.raises(GraphError, match="mu"):
            lr_solve(laplacian(g2()), {0: 1.0}, mu=0.0)


class TestNearestLabeled:
    def test_g2_sinks(self):
        g = g2()
        assert nearest_labeled(g, 1) == (0, pytest.approx(1.0))
        assert nearest_labeled(g, 2) == (3, pytest.approx(1.0))

    def test_tie_breaks_to_smallest_id(self):
        g = Graph(3, [(0, 1, 2.0), (1, 2, 2.0)], labeled=(0, 2), values=(1.0, -1.0))
        assert nearest_labeled(g, 1)[0] == 0

    def test_unreachable_raises(self):
        g = Graph(4, [(0, 1, 1.0), (2, 3, 1.0)], labeled=(0,), values=(1.0,))
        with pytest.raises(GraphError, match="unreachable"):
            nearest_labeled(g, 2)

    def test_labeled_sink_rejected(self):
        with pytest.raises(GraphError, match="labeled"):
            nearest_labeled(g2(), 0)

    def test_directed_uses_edge_directions(self):
        # 0 -> 1 -> 2; from node 2's viewpoint only label 0 can reach it.
        g = Graph(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 5.0)], labeled=(0, 3), values=(1.0, -1.0), directed=True)
        assert nearest_labeled(g, 2) == (0, pytest.approx(2.0))
