import math

import numpy as np
import pytest

from embedviz import DataError
from embedviz.mining import NTuple, Triplet, mine_batch_all, mine_npairs
from embedviz.objective import batch_loss, nca_grad, nca_loss

from oracles import anchored_embedding, central_diff, rel_err

# log(1 + e^-2) evaluated with mpmath at 30 digits
LOG1P_EXP_M2 = 0.126928011042972496443726806358


@pytest.mark.parametrize("s", [-0.7, 0.0, 0.3, 1.0])
def test_symmetric_single_negative(s):
    assert nca_loss(s, [s]) == pytest.approx(math.log(2), abs=1e-15)


def test_closed_form_value():
    assert nca_loss(1.0, [-1.0]) == pytest.approx(LOG1P_EXP_M2, abs=1e-15)


@pytest.mark.parametrize("k", [1, 2, 5, 31])
def test_uniform_negatives(k):
    assert nca_loss(0.4, [0.4] * k) == pytest.approx(math.log(k + 1), abs=1e-14)


def test_empty_negatives_error():
    with pytest.raises(DataError):
        nca_loss(0.5, [])
    with pytest.raises(DataError):
        nca_grad(0.5, [])


def test_small_temperature_is_stable():
    v = nca_loss(1.0, [-1.0, 0.9], temperature=1e-4)
    assert np.isfinite(v) and v >= 0
    assert np.all(np.isfinite(nca_grad(1.0, [-1.0, 0.9], temperature=1e-4)[1]))


def test_shift_invariance():
    rng = np.random.default_rng(1)
    for _ in range(50):
        s_ap, s_an, c = rng.uniform(-1, 1), rng.uniform(-1, 1, size=3), rng.uniform(-2, 2)
        assert nca_loss(s_ap + c, s_an + c) == pytest.approx(nca_loss(s_ap, s_an), abs=1e-12)


def test_loss_decreases_with_gap():
    gaps = np.linspace(-2, 10, 40)
    vals = [nca_loss(g, [0.0, -0.2], temperature=0.5) for g in gaps]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-8


def test_grad_symmetric_case():
    g_ap, g_an = nca_grad(0.2, [0.2])
    assert g_ap == pytest.approx(-0.5, abs=1e-15)
    np.testing.assert_allclose(g_an, [0.5], atol=1e-15)


def test_grad_sums_to_zero():
    rng = np.random.default_rng(2)
    for _ in range(100):
        g_ap, g_an = nca_grad(rng.uniform(-1, 1), rng.uniform(-1, 1, size=rng.integers(1, 6)))
        assert abs(g_ap + g_an.sum()) < 1e-12


def test_grad_finite_difference():
    rng = np.random.default_rng(3)
    h = 1e-5
    for _ in range(100):
        tau = rng.uniform(0.2, 2.0)
        x = rng.uniform(-1, 1, size=rng.integers(2, 6))
        g_ap, g_an = nca_grad(x[0], x[1:], tau)
        analytic = np.concatenate(([g_ap], g_an))
        numeric = np.empty_like(x)
        for i in range(x.size):
            xp, xm = x.copy(), x.copy()
            xp[i] += h
            xm[i] -= h
            numeric[i] = (nca_loss(xp[0], xp[1:], tau) - nca_loss(xm[0], xm[1:], tau)) / (2 * h)
        assert np.all(np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic)) < 1e-6)


def test_batch_loss_single_symmetric_triplet():
    Z = anchored_embedding([0.3, 0.3])
    loss, grad = batch_loss(Z, [Triplet(0, 1, 2)])
    assert loss == pytest.approx(math.log(2), abs=1e-15)
    assert grad.shape == Z.shape


def test_batch_loss_duplicated_units():
    rng = np.random.default_rng(4)
    Z = rng.normal(size=(6, 3))
    Z /= np.linalg.norm(Z, axis=1, keepdims=True)
    units = [Triplet(0, 1, 2), Triplet(3, 4, 5), Triplet(1, 0, 4)]
    l1, g1 = batch_loss(Z, units)
    l2, g2 = batch_loss(Z, units + units)
    assert l1 == pytest.approx(l2, abs=1e-15)
    np.testing.assert_allclose(g1, g2, atol=1e-15)


def test_batch_loss_empty():
    with pytest.raises(DataError):
        batch_loss(np.eye(3), [])


def test_batch_loss_matches_scalar_reference():
    rng = np.random.default_rng(6)
    Z = rng.normal(size=(6, 4))
    Z /= np.linalg.norm(Z, axis=1, keepdims=True)
    units = mine_npairs(Z, np.array([0, 0, 1, 1, 2, 2])) + mine_batch_all(Z, np.array([0, 0, 1, 1, 2, 2]))[:5]
    expected = 0.0
    for u in units:
        negs = list(u.negatives) if isinstance(u, NTuple) else [u.negative]
        expected += nca_loss(Z[u.anchor] @ Z[u.positive], [Z[u.anchor] @ Z[n] for n in negs], 0.7)
    assert batch_loss(Z, units, 0.7)[0] == pytest.approx(expected / len(units), abs=1e-14)


@pytest.mark.parametrize("seed", range(20))
def test_batch_loss_finite_difference(seed):
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(3), 2)
    Z = rng.normal(size=(6, 4))
    Z /= np.linalg.norm(Z, axis=1, keepdims=True)
    units = mine_batch_all(Z, labels) if seed % 2 else mine_npairs(Z, labels)
    tau = rng.uniform(0.3, 1.5)
    _, grad = batch_loss(Z, units, tau)
    numeric = central_diff(lambda M: batch_loss(M, units, tau)[0], Z)
    assert rel_err(grad, numeric) < 1e-5
