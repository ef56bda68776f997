import numpy as np
import pytest

from embedviz import DataError
from embedviz.tsne import TsneConfig, joint_p, kl_gradient, run
from embedviz.yoke import YokeConfig, YokedTSNE, alignment_penalty, displacement, yoked_cost, yoked_run

from oracles import central_diff, rel_err

SHORT = TsneConfig(perplexity=5.0, iterations=150, exaggeration_iters=50, seed=4)


def two_views(n=30, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 6))
    X[: n // 2] += 3
    return X @ rng.normal(size=(6, 5)), X @ rng.normal(size=(6, 5))


def test_lambda_zero_matches_independent_runs():
    A, B = two_views()
    res = yoked_run(A, B, YokeConfig(0.0, SHORT))
    ref_a = run(A, SHORT)
    ref_b = run(B, TsneConfig(**{**SHORT.to_dict(), "seed": SHORT.seed + 1}))
    assert res.map_a.coords.tobytes() == ref_a.coords.tobytes()
    assert res.map_b.coords.tobytes() == ref_b.coords.tobytes()
    assert res.map_a.kl_trace == ref_a.kl_trace


def test_identical_inputs_identical_seeds_stay_equal():
    A, _ = two_views()
    res = yoked_run(A, A.copy(), YokeConfig(0.5, SHORT), seed_b=SHORT.seed)
    assert res.map_a.coords.tobytes() == res.map_b.coords.tobytes()
    assert res.mean_displacement == 0.0


@pytest.mark.parametrize("seed", range(10))
def test_total_cost_gradient(seed):
    rng = np.random.default_rng(seed)
    n, lam = 6, rng.uniform(0.01, 2.0)
    cfg = TsneConfig(perplexity=3.0)
    P_a, _, _ = joint_p(rng.normal(size=(n, 4)), cfg)
    P_b, _, _ = joint_p(rng.normal(size=(n, 3)), cfg)
    Y_a, Y_b = rng.normal(size=(n, 2)), rng.normal(size=(n, 2))
    _, pen = alignment_penalty(Y_a, Y_b, lam)
    grad_a = kl_gradient(P_a, Y_a)[1] + pen
    grad_b = kl_gradient(P_b, Y_b)[1] - pen
    num_a = central_diff(lambda M: yoked_cost(P_a, P_b, M, Y_b, lam), Y_a)
    num_b = central_diff(lambda M: yoked_cost(P_a, P_b, Y_a, M, lam), Y_b)
    assert rel_err(grad_a, num_a) < 1e-4
    assert rel_err(grad_b, num_b) < 1e-4


def test_alignment_reduces_displacement():
    A, B = two_views(n=40, seed=2)
    free = yoked_run(A, B, YokeConfig(0.0, SHORT)).mean_displacement
    tied = yoked_run(A, B, YokeConfig(0.1, SHORT)).mean_displacement
    assert tied < free


def test_row_mismatch():
    A, B = two_views()
    with pytest.raises(DataError, match="row-count"):
        yoked_run(A, B[:-1], YokeConfig(0.1, SHORT))


def test_negative_lambda():
    with pytest.raises(DataError):
        YokeConfig(-1.0)


def test_displacement_identity_and_shift():
    rng = np.random.default_rng(0)
    Y = rng.normal(size=(12, 2))
    d, mean = displacement(Y, Y)
    assert not d.any() and mean == 0.0
    d, mean = displacement(Y, Y + np.array([3.0, -4.0]))
    np.testing.assert_allclose(d, 5.0, atol=1e-12)


def test_displacement_brute_force():
    rng = np.random.default_rng(1)
    A, B = rng.normal(size=(20, 2)), rng.normal(size=(20, 2))
    d, mean = displacement(A, B)
    expected = [((a0 - b0) ** 2 + (a1 - b1) ** 2) ** 0.5 for (a0, a1), (b0, b1) in zip(A.tolist(), B.tolist())]
    np.testing.assert_allclose(d, expected, rtol=1e-14)
    assert mean == pytest.approx(sum(expected) / 20, rel=1e-14)


def test_displacement_mismatch():
    with pytest.raises(DataError):
        displacement(np.zeros((3, 2)), np.zeros((4, 2)))


def test_estimator():
    A, B = two_views()
    est = YokedTSNE(lam=0.1, perplexity=5.0, n_iter=100, exaggeration_iters=30, random_state=1)
    Ya, Yb = est.fit_transform(A, B)
    assert Ya.shape == Yb.shape == (30, 2)
    assert est.mean_displacement_ == pytest.approx(displacement(Ya, Yb)[1])
