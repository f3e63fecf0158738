"""Multi-center assignment, target sharpening, KL loss, and score."""

import numpy as np
import pytest

from adclust import autodiff as ad
from adclust.multicluster import (MultiClusterState, kl_cluster_loss, kl_value,
                                  multi_anomaly_score, multi_distance_loss,
                                  student_t_assign, student_t_assign_values,
                                  target_distribution)

from oracles import central_grad, rel_err


class TestStudentTAssign:
    def test_single_center_is_constant_one(self):
        rng = np.random.default_rng(0)
        H = rng.normal(size=(20, 4))
        centers = rng.normal(size=(1, 4))
        q = student_t_assign_values(H, centers)
        np.testing.assert_allclose(q, 1.0, atol=1e-15)

    def test_equidistant_centers_split_evenly(self):
        H = np.array([[0.0, 0.0]])
        centers = np.array([[1.0, 0.0], [-1.0, 0.0]])
        q = student_t_assign_values(H, centers)
        np.testing.assert_allclose(q, [[0.5, 0.5]])

    def test_hand_value(self):
        # on one center, squared distance 1 to the other
        H = np.array([[0.0, 0.0]])
        centers = np.array([[0.0, 0.0], [1.0, 0.0]])
        q = student_t_assign_values(H, centers)
        np.testing.assert_allclose(q, [[2.0 / 3.0, 1.0 / 3.0]])

    def test_row_stochastic(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            H = rng.normal(size=(8, 3))
            centers = rng.normal(size=(int(rng.integers(1, 5)), 3))
            q = student_t_assign_values(H, centers)
            assert np.all(q > 0)
            np.testing.assert_allclose(q.sum(axis=1), 1.0, atol=1e-12)

    def test_tape_matches_numpy(self):
        rng = np.random.default_rng(5)
        H_vals = rng.normal(size=(6, 3))
        c_vals = rng.normal(size=(3, 3))
        t = ad.Tape()
        H = [t.leaf_vector(h) for h in H_vals]
        centers = [t.leaf_vector(c) for c in c_vals]
        q_nodes = student_t_assign(H, centers)
        got = np.array([[n.value for n in row] for row in q_nodes])
        np.testing.assert_allclose(got, student_t_assign_values(H_vals, c_vals),
                                   atol=1e-12)


class TestTargetDistribution:
    def test_uniform_fixed_point(self):
        q = np.full((4, 2), 0.5)
        np.testing.assert_allclose(target_distribution(q), 0.5)

    def test_identical_rows_are_a_fixed_point(self):
        # exact-fraction evaluation: column masses (1.8, 0.2) give
        # weights (0.45, 0.05) per row, which renormalize back to q
        q = np.array([[0.9, 0.1], [0.9, 0.1]])
        np.testing.assert_allclose(target_distribution(q), q, atol=1e-15)

    def test_confident_rows_sharpen(self):
        q = np.array([[0.9, 0.1], [0.6, 0.4]])
        p = target_distribution(q)
        assert p[0, 0] > q[0, 0]
        assert p[1, 0] < q[1, 0]

    def test_one_hot_stays_one_hot(self):
        q = np.array([[1.0, 0.0], [0.0, 1.0]])
        np.testing.assert_allclose(target_distribution(q), q)

    def test_row_stochastic_and_sharper(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            raw = rng.uniform(0.05, 1.0, size=(10, 3))
            q = raw / raw.sum(axis=1, keepdims=True)
            p = target_distribution(q)
            np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
            assert np.all(p >= 0)


class TestKlLoss:
    def test_zero_when_equal(self):
        q = np.array([[0.3, 0.7], [0.6, 0.4]])
        assert kl_value(q, q).sum() == pytest.approx(0.0, abs=1e-15)

    def test_hand_value(self):
        p = np.array([[1.0, 0.0]])
        q = np.array([[0.5, 0.5]])
        assert kl_value(p, q)[0] == pytest.approx(np.log(2.0), abs=1e-12)

    def test_nonnegative_on_random_pairs(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            a = rng.uniform(0.01, 1.0, size=4)
            b = rng.uniform(0.01, 1.0, size=4)
            p = a / a.sum()
            q = b / b.sum()
            assert kl_value(p[None, :], q[None, :])[0] >= -1e-12

    def test_tape_matches_numpy(self):
        rng = np.random.default_rng(8)
        raw_p = rng.uniform(0.1, 1.0, size=(5, 3))
        raw_q = rng.uniform(0.1, 1.0, size=(5, 3))
        p = raw_p / raw_p.sum(axis=1, keepdims=True)
        q = raw_q / raw_q.sum(axis=1, keepdims=True)
        t = ad.Tape()
        q_nodes = [[t.leaf(v) for v in row] for row in q]
        node = kl_cluster_loss(p, q_nodes)
        assert node.value == pytest.approx(kl_value(p, q).sum(), abs=1e-12)

    def test_gradient_wrt_centers_matches_fd(self):
        # through q, with the target fixed
        rng = np.random.default_rng(9)
        H_vals = rng.normal(size=(6, 3))
        c_vals = rng.normal(size=(2, 3))
        p = target_distribution(student_t_assign_values(H_vals, c_vals))

        def loss_at(flat):
            centers = flat.reshape(2, 3)
            q = student_t_assign_values(H_vals, centers)
            return float(kl_value(p, q).sum())

        t = ad.Tape()
        H = [t.leaf_vector(h) for h in H_vals]
        centers = [t.leaf_vector(c) for c in c_vals]
        ad.backward(kl_cluster_loss(p, student_t_assign(H, centers)))
        analytic = np.array([n.grad for c in centers for n in c])
        fd = central_grad(loss_at, c_vals.ravel())
        mask = np.abs(fd) > 1e-6
        assert np.all(rel_err(analytic[mask], fd[mask]) < 1e-4)


class TestMultiDistance:
    def test_zero_on_center(self):
        t = ad.Tape()
        c = t.leaf_vector([1.0, -1.0])
        H = [t.leaf_vector([1.0, -1.0]) for _ in range(3)]
        assert multi_distance_loss(H, [c], lam=0.0).value == pytest.approx(0.0)

    def test_hand_value(self):
        # T=1, two centers at squared distances 1 and 4
        t = ad.Tape()
        H = [t.leaf_vector([0.0])]
        centers = [t.leaf_vector([1.0]), t.leaf_vector([2.0])]
        assert multi_distance_loss(H, centers, lam=0.0).value == pytest.approx(5.0)

    def test_regularizer_only(self):
        t = ad.Tape()
        c = t.leaf_vector([0.5])
        H = [t.leaf_vector([0.5])]
        w = t.leaf_vector([3.0])
        assert multi_distance_loss(H, [c], lam=0.1, weight_nodes=w).value == pytest.approx(0.9)


class TestMultiScore:
    def test_zero_at_center_with_matching_target(self):
        H = np.array([[1.0, 2.0]])
        centers = np.array([[1.0, 2.0]])
        q = student_t_assign_values(H, centers)
        p = target_distribution(q)
        assert multi_anomaly_score(H, centers, q, p)[0] == pytest.approx(0.0, abs=1e-12)

    def test_single_center_reduces_to_distance(self):
        rng = np.random.default_rng(10)
        H = rng.normal(size=(12, 3))
        centers = rng.normal(size=(1, 3))
        q = student_t_assign_values(H, centers)
        p = target_distribution(q)
        scores = multi_anomaly_score(H, centers, q, p)
        np.testing.assert_allclose(scores, ((H - centers[0]) ** 2).sum(axis=1), atol=1e-12)

    def test_nonnegative(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            H = rng.normal(size=(5, 2))
            centers = rng.normal(size=(3, 2))
            q = student_t_assign_values(H, centers)
            p = target_distribution(q)
            assert np.all(multi_anomaly_score(H, centers, q, p) >= -1e-12)


class TestState:
    def test_requires_a_center(self):
        with pytest.raises(ValueError):
            MultiClusterState(centers=[])
