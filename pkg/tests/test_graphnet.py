import numpy as np
import pytest

from fewgraph import autodiff as ad
from fewgraph import graphnet as gn


def make_net(in_dim, hidden=8, seed=0):
    return gn.EdgeNetwork(in_dim, hidden, rng=np.random.default_rng(seed))


def reference_normalized(a):
    """Independent dense recomputation of D^(-1/2) (A + I) D^(-1/2)."""
    a_hat = a + np.eye(len(a))
    d = a_hat.sum(axis=1)
    d_inv_sqrt = np.diag(1.0 / np.sqrt(d))
    return d_inv_sqrt @ a_hat @ d_inv_sqrt


def reference_softmax_rows(e):
    z = e - e.max(axis=1, keepdims=True)
    ez = np.exp(z)
    return ez / ez.sum(axis=1, keepdims=True)


class TestEdgeScore:
    def test_identical_inputs_score_zero(self):
        net = make_net(5)
        x = ad.constant(np.random.default_rng(1).normal(size=(1, 5)))
        assert gn.edge_score(net, x, x).value[0, 0] == 0.0

    def test_single_linear_layer_hand_case(self):
        net = make_net(2)
        net.weights = [ad.parameter(np.ones((2, 1)))]  # one linear layer, no hidden
        out = gn.edge_score(net, ad.constant([1.0, 2.0]), ad.constant([0.0, 0.0]))
        assert out.value[0, 0] == 3.0

    def test_symmetry(self):
        rng = np.random.default_rng(2)
        net = make_net(6, seed=3)
        for _ in range(20):
            xi = ad.constant(rng.normal(size=(1, 6)))
            xj = ad.constant(rng.normal(size=(1, 6)))
            assert gn.edge_score(net, xi, xj).value[0, 0] == gn.edge_score(net, xj, xi).value[0, 0]

    def test_width_mismatch(self):
        net = make_net(4)
        with pytest.raises(ad.DimensionError):
            gn.edge_score(net, ad.constant([1.0, 2.0]), ad.constant([1.0, 2.0]))


class TestBuildAdjacency:
    def test_identical_representations_uniform_rows(self):
        net = make_net(3)
        x = ad.constant(np.tile([0.3, -1.0, 2.0], (5, 1)))
        graph = gn.build_adjacency(net, x)
        np.testing.assert_array_equal(graph.scores.value, np.zeros((5, 5)))
        np.testing.assert_allclose(graph.adjacency.value, np.full((5, 5), 0.2), atol=1e-15)

    def test_two_node_hand_case(self):
        # E = 0 for identical nodes -> A uniform -> the normalized matrix
        # follows from A + I with every degree equal to 2.
        net = make_net(2)
        x = ad.constant([[1.0, 1.0], [1.0, 1.0]])
        graph = gn.build_adjacency(net, x)
        np.testing.assert_allclose(graph.adjacency.value, [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)
        np.testing.assert_allclose(graph.normalized.value, [[0.75, 0.25], [0.25, 0.75]], atol=1e-15)

    def test_row_stochastic_for_random_inputs(self):
        rng = np.random.default_rng(4)
        net = make_net(4, seed=5)
        for _ in range(25):
            x = ad.constant(rng.normal(size=(6, 4)))
            a = gn.build_adjacency(net, x).adjacency.value
            np.testing.assert_allclose(a.sum(axis=1), 1.0, atol=1e-9)
            assert np.all(a > 0) and np.all(a < 1)

    def test_scores_symmetric_exactly(self):
        rng = np.random.default_rng(6)
        net = make_net(5, seed=7)
        x = ad.constant(rng.normal(size=(7, 5)))
        e = gn.build_adjacency(net, x).scores.value
        np.testing.assert_array_equal(e, e.T)

    def test_normalized_matches_reference(self):
        rng = np.random.default_rng(8)
        net = make_net(3, seed=9)
        for _ in range(20):
            x = ad.constant(rng.normal(size=(5, 3)))
            graph = gn.build_adjacency(net, x)
            expected = reference_normalized(graph.adjacency.value)
            assert np.max(np.abs(graph.normalized.value - expected)) < 1e-12

    def test_adjacency_is_row_softmax_of_scores(self):
        rng = np.random.default_rng(10)
        net = make_net(4, seed=11)
        x = ad.constant(rng.normal(size=(4, 4)))
        graph = gn.build_adjacency(net, x)
        np.testing.assert_allclose(
            graph.adjacency.value, reference_softmax_rows(graph.scores.value), atol=1e-14
        )

    def test_degrees_at_least_one(self):
        rng = np.random.default_rng(12)
        net = make_net(3, seed=13)
        x = ad.constant(rng.normal(size=(6, 3)))
        a_hat = gn.build_adjacency(net, x).adjacency.value + np.eye(6)
        assert np.all(a_hat.sum(axis=1) >= 1.0)


class TestMessagePass:
    def test_single_node(self):
        net = make_net(3)
        xv = np.array([[0.5, -2.0, 1.0]])
        w = ad.parameter(np.random.default_rng(14).normal(size=(3, 2)))
        graph = gn.build_adjacency(net, ad.constant(xv))
        np.testing.assert_allclose(graph.normalized.value, [[1.0]], atol=1e-15)
        out = gn.message_pass(graph, w)
        np.testing.assert_allclose(out.value, np.maximum(xv @ w.value, 0.0), atol=1e-15)

    def test_identity_graph_identity_weight(self):
        xv = np.array([[1.0, -1.0], [-2.0, 3.0]])
        graph = gn.TextGraph(
            x=ad.constant(xv),
            scores=ad.constant(np.zeros((2, 2))),
            adjacency=ad.constant(np.full((2, 2), 0.5)),
            normalized=ad.constant(np.eye(2)),
        )
        out = gn.message_pass(graph, ad.constant(np.eye(2)))
        np.testing.assert_array_equal(out.value, np.maximum(xv, 0.0))

    def test_matches_dense_recomputation(self):
        rng = np.random.default_rng(15)
        net = make_net(4, seed=16)
        x = ad.constant(rng.normal(size=(4, 4)))
        w = ad.parameter(rng.normal(size=(4, 3)))
        graph = gn.build_adjacency(net, x)
        out = gn.message_pass(graph, w)
        expected = np.maximum(graph.normalized.value @ x.value @ w.value, 0.0)
        assert np.max(np.abs(out.value - expected)) < 1e-12


class TestRefine:
    def test_zero_iterations_identity(self):
        x = ad.constant(np.random.default_rng(17).normal(size=(4, 3)))
        out = gn.refine([], [], x, 0)
        assert out is x

    def test_one_iteration_equals_composition(self):
        rng = np.random.default_rng(18)
        net = make_net(3, seed=19)
        w = ad.parameter(rng.normal(size=(3, 2)))
        x = ad.constant(rng.normal(size=(5, 3)))
        refined = gn.refine([net], [w], x, 1)
        composed = gn.message_pass(gn.build_adjacency(net, x), w)
        np.testing.assert_array_equal(refined.value, composed.value)

    def test_gradient_flows_through_adjacency(self):
        rng = np.random.default_rng(20)
        net = make_net(3, hidden=4, seed=21)
        w = ad.parameter(rng.normal(size=(3, 2)))
        xv = rng.normal(size=(4, 3))

        def loss():
            out = gn.refine([net], [w], ad.constant(xv), 1)
            return ad.sum_all(ad.mul(out, out))

        params = {"theta0": net.weights[0], "theta1": net.weights[1], "w": w}
        ad.zero_grad(params.values())
        ad.backward(loss())
        for name, p in params.items():
            assert p.grad is not None and np.any(p.grad != 0), name
            # finite-difference oracle
            fd = np.zeros_like(p.value)
            h = 1e-5
            it = np.nditer(p.value, flags=["multi_index"])
            while not it.finished:
                ix = it.multi_index
                orig = p.value[ix]
                p.value[ix] = orig + h
                up = float(loss().value[0, 0])
                p.value[ix] = orig - h
                down = float(loss().value[0, 0])
                p.value[ix] = orig
                fd[ix] = (up - down) / (2 * h)
                it.iternext()
            denom = np.maximum(np.maximum(np.abs(fd), np.abs(p.grad)), 1e-6)
            assert np.max(np.abs(fd - p.grad) / denom) < 1e-4, name

    def test_two_iterations_need_matching_widths(self):
        rng = np.random.default_rng(22)
        nets = [make_net(3, seed=23), make_net(2, seed=24)]
        ws = [ad.parameter(rng.normal(size=(3, 2))), ad.parameter(rng.normal(size=(2, 2)))]
        x = ad.constant(rng.normal(size=(4, 3)))
        out = gn.refine(nets, ws, x, 2)
        assert out.value.shape == (4, 2)

    def test_width_mismatch_raises(self):
        rng = np.random.default_rng(25)
        nets = [make_net(3, seed=26), make_net(5, seed=27)]  # second net too wide
        ws = [ad.parameter(rng.normal(size=(3, 2))), ad.parameter(rng.normal(size=(2, 2)))]
        with pytest.raises(ad.DimensionError):
            gn.refine(nets, ws, ad.constant(rng.normal(size=(4, 3))), 2)

    def test_too_many_iterations_raises(self):
        net = make_net(3)
        w = ad.parameter(np.zeros((3, 2)))
        with pytest.raises(ad.DimensionError):
            gn.refine([net], [w], ad.constant(np.zeros((4, 3))), 2)

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(28)
        nets = [make_net(3, seed=29), make_net(2, seed=30)]
        ws = [ad.parameter(rng.normal(size=(3, 2))), ad.parameter(rng.normal(size=(2, 2)))]
        xv = rng.normal(size=(6, 3))
        perm = rng.permutation(6)
        out = gn.refine(nets, ws, ad.constant(xv), 2).value
        out_perm = gn.refine(nets, ws, ad.constant(xv[perm]), 2).value
        np.testing.assert_allclose(out_perm, out[perm], atol=1e-12)
