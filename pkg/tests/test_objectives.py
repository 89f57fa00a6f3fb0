import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hights import objectives as obj
from hights import tensor as T
from hights.tensor import Tensor

from conftest import finite_difference_error


def reference_contrastive(zm, zt, tau, include_positive=False):
    """Loop-by-loop evaluation of the two-direction cross-view loss."""
    B = len(zm)

    def cos(a, b):
        return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))

    total = 0.0
    for i in range(B):
        pos = math.exp(cos(zm[i], zt[i]) / tau)
        others = [j for j in range(B) if include_positive or j != i]
        row = sum(math.exp(cos(zm[i], zt[j]) / tau) for j in others)
        col = sum(math.exp(cos(zm[j], zt[i]) / tau) for j in others)
        total += -(math.log(pos / row) + math.log(pos / col))
    return 0.5 * total


class TestContrastive:
    def test_identical_embeddings_zero(self):
        z = np.ones((2, 3))
        assert obj.contrastive_loss(Tensor(z), Tensor(z), 0.2).item() == 0.0

    def test_orthonormal_unit_temperature(self):
        e = np.eye(2)
        assert obj.contrastive_loss(Tensor(e), Tensor(e), 1.0).item() == pytest.approx(-2.0, abs=1e-12)

    @pytest.mark.parametrize("include_positive", [False, True])
    def test_against_loop_reference(self, rng, include_positive):
        zm, zt = rng.normal(size=(5, 4)), rng.normal(size=(5, 4))
        got = obj.contrastive_loss(Tensor(zm), Tensor(zt), 0.3, include_positive).item()
        assert got == pytest.approx(reference_contrastive(zm, zt, 0.3, include_positive), abs=1e-10)

    def test_positive_similarity_monotone(self):
        # zm_0 tilts out of the span of the other targets, so only sim(zm_0, zt_0) moves
        zt = np.eye(4)[:3]
        vals = []
        for theta in (1.5, 1.0, 0.5, 0.0):
            zm = np.eye(4)[:3].copy()
            zm[0] = [math.cos(theta), 0.0, 0.0, math.sin(theta)]
            vals.append(obj.contrastive_loss(Tensor(zm), Tensor(zt), 0.5).item())
        assert all(a > b for a, b in zip(vals, vals[1:]))

    @settings(max_examples=40, deadline=None)
    @given(arrays(np.float64, (4, 3), elements=st.floats(-3, 3)),
           arrays(np.float64, (4, 3), elements=st.floats(-3, 3)),
           st.permutations(range(4)))
    def test_batch_permutation_invariance(self, zm, zt, perm):
        zm, zt = zm + 0.5, zt - 0.5
        if np.any(np.linalg.norm(zm, axis=1) < 1e-3) or np.any(np.linalg.norm(zt, axis=1) < 1e-3):
            return
        perm = list(perm)
        a = obj.contrastive_loss(Tensor(zm), Tensor(zt), 0.2).item()
        b = obj.contrastive_loss(Tensor(zm[perm]), Tensor(zt[perm]), 0.2).item()
        assert abs(a - b) < 1e-10

    def test_per_row_scale_invariance(self, rng):
        zm, zt = rng.normal(size=(6, 5)), rng.normal(size=(6, 5))
        a = obj.contrastive_loss(Tensor(zm), Tensor(zt), 0.2).item()
        b = obj.contrastive_loss(Tensor(zm * rng.uniform(0.1, 10, (6, 1))),
                                 Tensor(zt * rng.uniform(0.1, 10, (6, 1))), 0.2).item()
        assert abs(a - b) < 1e-10

    def test_can_be_negative(self, rng):
        z = np.eye(4)
        assert obj.contrastive_loss(Tensor(z), Tensor(z), 0.2).item() < 0

    def test_batch_of_one_rejected(self):
        with pytest.raises(ValueError):
            obj.contrastive_loss(Tensor(np.ones((1, 3))), Tensor(np.ones((1, 3))))

    def test_shape_mismatch(self):
        with pytest.raises(T.ShapeError):
            obj.contrastive_loss(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 4))))


class TestFuseClassify:
    def test_fused_width_and_layout(self, rng):
        fm, ft = Tensor(rng.normal(size=(2, 96))), Tensor(rng.normal(size=(2, 96)))
        r = obj.fuse(fm, ft)
        assert r.shape == (2, 192)
        np.testing.assert_array_equal(r.data[:, :96], fm.data)
        np.testing.assert_array_equal(r.data[:, 96:], ft.data)

    def test_single_branch(self, rng):
        fm = Tensor(rng.normal(size=(2, 8)))
        np.testing.assert_array_equal(obj.fuse(fm, None).data, fm.data)

    def test_zero_head_uniform(self):
        head = obj.Linear(4, 3, np.random.default_rng(0))
        head.weight.data[:] = 0
        p = obj.classify(Tensor(np.ones((1, 4))), head).data
        np.testing.assert_allclose(p, [[1 / 3, 1 / 3, 1 / 3]], rtol=0, atol=1e-15)

    def test_biased_head(self):
        head = obj.Linear(4, 2, np.random.default_rng(0))
        head.weight.data[:] = 0
        head.bias.data[:] = [10.0, 0.0]
        p = obj.classify(Tensor(np.ones((1, 4))), head).data[0]
        np.testing.assert_allclose(p, [1 / (1 + math.exp(-10)), math.exp(-10) / (1 + math.exp(-10))],
                                   rtol=0, atol=1e-15)
        np.testing.assert_allclose(p, [0.99995, 0.00005], atol=1e-5)

    def test_argmax_shift_invariant(self, rng):
        head = obj.Linear(4, 5, rng)
        r = Tensor(rng.normal(size=(6, 4)))
        a = obj.classify(r, head).data.argmax(axis=1)
        head.bias.data += 7.5
        np.testing.assert_array_equal(obj.classify(r, head).data.argmax(axis=1), a)


class TestCrossEntropy:
    def test_one_hot(self):
        assert obj.cross_entropy(Tensor([[0.0, 1.0, 0.0]]), [1]).item() <= 1e-11

    @pytest.mark.parametrize("C", [2, 3, 7])
    def test_uniform(self, C):
        ce = obj.cross_entropy(Tensor(np.full((4, C), 1.0 / C)), [0, 1, 0, 1]).item()
        assert abs(ce - math.log(C)) <= 1e-12

    def test_direct(self):
        assert obj.cross_entropy(Tensor([[0.7, 0.3]]), [0]).item() == pytest.approx(-math.log(0.7), abs=1e-15)
        assert -math.log(0.7) == pytest.approx(0.3567, abs=1e-4)

    def test_zero_probability_clamped(self):
        assert obj.cross_entropy(Tensor([[1.0, 0.0]]), [1]).item() == pytest.approx(-math.log(1e-12))

    def test_non_negative(self, rng):
        p = rng.dirichlet(np.ones(4), size=10)
        assert obj.cross_entropy(Tensor(p), rng.integers(0, 4, 10)).item() >= 0


class TestTotal:
    def test_zero_contrastive(self):
        ce = Tensor(0.42)
        assert obj.total_loss(ce, Tensor(0.0)).item() == 0.42
        assert obj.total_loss(ce, None) is ce

    def test_commutes(self):
        a, b = Tensor(1.25), Tensor(-3.5)
        assert obj.total_loss(a, b).item() == obj.total_loss(b, a).item()
        assert math.isfinite(obj.total_loss(a, b).item())


def test_gradients_heads_and_losses(rng):
    B, dm, dt, dc, C = 4, 6, 5, 3, 3
    fm, ft = Tensor(rng.normal(size=(B, dm)), True), Tensor(rng.normal(size=(B, dt)), True)
    pm, pt = obj.Linear(dm, dc, rng), obj.Linear(dt, dc, rng)
    head = obj.Linear(dm + dt, C, rng)
    for lin in (pm, pt, head):
        lin.bias.data = rng.normal(size=lin.bias.shape)
    y = np.array([0, 2, 1, 2])

    def loss():
        ce = obj.cross_entropy(obj.classify(obj.fuse(fm, ft), head), y)
        return obj.total_loss(ce, obj.contrastive_loss(pm(fm), pt(ft), 0.2))

    leaves = [fm, ft, pm.weight, pm.bias, pt.weight, pt.bias, head.weight, head.bias]
    assert finite_difference_error(loss, leaves) < 1e-4


def test_nt_xent_gradients(rng):
    zm, zt = Tensor(rng.normal(size=(4, 3)), True), Tensor(rng.normal(size=(4, 3)), True)
    err = finite_difference_error(lambda: obj.contrastive_loss(zm, zt, 0.5, include_positive=True),
                                  [zm, zt])
    assert err < 1e-4
