import numpy as np
import pytest

from tensor import autodiff as ad
from tensor.autodiff import Tape, Tensor, backward
from tensor.gradcheck import grad_check
from tensor.optim import AdamState, adam_step
from tensor.params import ParamStore
from utils.checkpoint import decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from utils.errors import CheckpointError, OptimError, ShapeError, UsageError


class TestTensor:
    def test_promotes_scalars_and_vectors(self):
        assert Tensor(3.0).shape == [1, 1]
        assert Tensor([1.0, 2.0]).shape == [1, 2]

    def test_empty_shape_rejected(self):
        with pytest.raises(ShapeError):
            Tensor(np.zeros((0, 3)))

    def test_values_are_read_only(self):
        t = Tensor(np.ones((2, 2)))
        with pytest.raises(ValueError):
            t.values[0, 0] = 5.0


class TestTape:
    def test_one_record_per_op(self):
        tape = Tape()
        x = tape.watch("x", np.ones((2, 2)))
        y = ad.tanh(ad.matmul(x, x))
        ad.sum_all(y)
        assert [r.op for r in tape.records] == ["matmul", "tanh", "sum_all"]

    def test_constants_record_nothing(self):
        x = Tensor(np.ones((2, 2)))
        out = ad.sigmoid(ad.add(x, x))
        assert out.tape is None

    def test_mixed_tapes_rejected(self):
        a = Tape().watch("a", np.ones((1, 1)))
        b = Tape().watch("b", np.ones((1, 1)))
        with pytest.raises(UsageError):
            ad.add(a, b)

    def test_backward_needs_scalar_loss(self):
        tape = Tape()
        x = tape.watch("x", np.ones((2, 2)))
        with pytest.raises(ShapeError):
            backward(tape, ad.tanh(x))

    def test_reused_parameter_accumulates(self):
        """d/dx of sum(x * x) through a shared leaf is 2x."""
        tape = Tape()
        x = tape.watch("x", np.array([[1.0, -2.0, 3.0]]))
        grads = backward(tape, ad.sum_all(ad.mul(x, tape.watch("x", None))))
        np.testing.assert_array_equal(grads["x"], [[2.0, -4.0, 6.0]])

    def test_untouched_parameter_gets_zero_gradient(self):
        tape = Tape()
        x = tape.watch("x", np.ones((1, 2)))
        tape.watch("unused", np.ones((3, 3)))
        grads = backward(tape, ad.sum_all(x))
        np.testing.assert_array_equal(grads["unused"], np.zeros((3, 3)))
        assert tape.touched_params() == ["x"]

    def test_replaying_a_graph_on_one_tape(self, rng):
        """A second forward pass on the same tape gets the same gradients as a fresh tape."""
        store = ParamStore(3)
        store.glorot("W", 4, 3)
        store.zeros("b", 1, 3)
        x = rng.standard_normal((5, 4))

        def forward(tape):
            h = ad.tanh(ad.add(ad.matmul(Tensor(x), store.bind(tape, "W")), store.bind(tape, "b")))
            return ad.sum_all(ad.mul(h, h))

        fresh = [backward(tape, forward(tape)) for tape in (Tape(), Tape())]
        shared = Tape()
        first, second = forward(shared), forward(shared)
        replayed = backward(shared, second)
        both = backward(shared, ad.add(first, second))
        for name in ("W", "b"):
            np.testing.assert_array_equal(fresh[0][name], fresh[1][name])
            np.testing.assert_array_equal(replayed[name], fresh[0][name])
            np.testing.assert_allclose(both[name], 2.0 * fresh[0][name], rtol=1e-12)


class TestGradients:
    """Every differentiable op agrees with central differences."""

    @pytest.fixture
    def inputs(self, rng):
        return {"a": rng.standard_normal((3, 4)), "b": rng.standard_normal((4, 2)), "c": rng.standard_normal((3, 4))}

    def test_matmul_add_bias(self, inputs, rng):
        bias = rng.standard_normal((1, 2))
        err = grad_check(
            lambda t: ad.sum_all(ad.tanh(ad.add(ad.matmul(t["a"], t["b"]), t["bias"]))),
            {"a": inputs["a"], "b": inputs["b"], "bias": bias},
        )
        assert err < 1e-6

    def test_elementwise(self, inputs):
        def f(t):
            x = ad.mul(ad.sigmoid(t["a"]), ad.sub(t["c"], ad.scalar_mul(t["a"], 0.5)))
            return ad.sum_all(ad.add_scalar(ad.tanh(x), 2.0))

        assert grad_check(f, {"a": inputs["a"], "c": inputs["c"]}) < 1e-6

    def test_concat_slice_transpose(self, inputs):
        def f(t):
            x = ad.concat_cols([t["a"], t["c"]])
            y = ad.slice_cols(x, 2, 6)
            return ad.sum_all(ad.tanh(ad.matmul(ad.transpose(y), t["c"])))

        assert grad_check(f, {"a": inputs["a"], "c": inputs["c"]}) < 1e-6

    def test_softmax_mean_rows(self, inputs, rng):
        w = rng.standard_normal((1, 4))
        assert grad_check(
            lambda t: ad.sum_all(ad.mul(ad.mean_rows(ad.softmax_rows(t["a"])), t["w"])),
            {"a": inputs["a"], "w": w},
        ) < 1e-6

    def test_take_rows_and_cross_entropy(self, inputs):
        def f(t):
            rows = ad.take_rows(t["a"], [2, 0, 2])
            return ad.cross_entropy(ad.matmul(rows, t["b"]), [1, 0, 1])

        assert grad_check(f, {"a": inputs["a"], "b": inputs["b"]}) < 1e-6


class TestOps:
    def test_softmax_rows_sum_to_one(self, rng):
        s = ad.softmax_rows(Tensor(rng.standard_normal((4, 5)))).values
        np.testing.assert_allclose(s.sum(axis=1), np.ones(4))

    def test_cross_entropy_of_uniform_logits(self):
        loss = ad.cross_entropy(Tensor(np.zeros((2, 4))), [0, 3])
        assert loss.item() == pytest.approx(2.0 * np.log(4.0))

    def test_take_rows_scatters_repeated_rows(self):
        tape = Tape()
        table = tape.watch("E", np.eye(3))
        grads = backward(tape, ad.sum_all(ad.take_rows(table, [1, 1, 2])))
        np.testing.assert_array_equal(grads["E"], [[0, 0, 0], [2, 2, 2], [1, 1, 1]])

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            ad.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))
        with pytest.raises(ShapeError):
            ad.add(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 2))))

    def test_unknown_activation(self):
        with pytest.raises(UsageError):
            ad.activation("gelu")


    def test_dropout_rate_zero_is_the_identity(self, rng):
        x = Tensor(rng.standard_normal((4, 3)))
        draws = np.random.default_rng(5)
        assert ad.dropout(x, 0.0, draws) is x
        # no mask was drawn
        assert draws.random() == np.random.default_rng(5).random()

    def test_dropout_masks_and_rescales(self, rng):
        values = rng.standard_normal((40, 30))
        tape = Tape()
        x = tape.watch("x", values)
        out = ad.dropout(x, 0.25, np.random.default_rng(11))
        mask = (np.random.default_rng(11).random(values.shape) >= 0.25) / 0.75
        np.testing.assert_array_equal(out.values, values * mask)
        kept = np.count_nonzero(mask) / mask.size
        assert 0.6 < kept < 0.9
        grads = backward(tape, ad.sum_all(out))
        np.testing.assert_array_equal(grads["x"], mask)

    def test_dropout_rate_range(self):
        x = Tensor(np.ones((2, 2)))
        for rate in (-0.1, 1.0):
            with pytest.raises(UsageError):
                ad.dropout(x, rate, np.random.default_rng(0))


class TestGradCheck:
    def test_eps_range(self):
        with pytest.raises(UsageError):
            grad_check(lambda t: ad.sum_all(t["x"]), {"x": np.ones((1, 1))}, eps=1e-2)

    def test_detects_a_wrong_gradient(self):
        """A constant-folded factor hides from backward; the check must notice."""

        def f(t):
            x = t["x"]
            return ad.sum_all(ad.mul(x, Tensor(x.values)))

        assert grad_check(f, {"x": np.array([[1.0, 2.0]])}) > 0.1


class TestParamStore:
    def test_glorot_bounds_and_determinism(self):
        a, b = ParamStore(seed=3), ParamStore(seed=3)
        a.glorot("W", 10, 6)
        b.glorot("W", 10, 6)
        np.testing.assert_array_equal(a["W"], b["W"])
        assert np.abs(a["W"]).max() <= np.sqrt(6.0 / 16.0)

    def test_duplicate_names_rejected(self):
        store = ParamStore()
        store.zeros("b", 1, 2)
        with pytest.raises(UsageError):
            store.zeros("b", 1, 2)

    def test_load_checks_names_and_shapes(self):
        store = ParamStore()
        store.zeros("b", 1, 2)
        with pytest.raises(UsageError):
            store.load({"b": np.zeros((2, 1))})
        with pytest.raises(UsageError):
            store.load({"c": np.zeros((1, 2))})

    def test_bind_without_tape_is_a_constant(self):
        store = ParamStore()
        store.zeros("b", 1, 2)
        assert store.bind(None, "b").tape is None
        assert store.num_scalars() == 2


class TestAdam:
    def test_first_step_moves_by_lr(self):
        """Bias correction makes the first update lr * sign(g) up to eps."""
        params = {"p": np.array([[1.0, -1.0]])}
        new, state = adam_step(params, {"p": np.array([[0.5, -2.0]])}, AdamState.zeros_like(params), lr=1e-3)
        np.testing.assert_allclose(new["p"], [[1.0 - 1e-3, -1.0 + 1e-3]], atol=1e-9)
        assert state.t == 1
        np.testing.assert_array_equal(params["p"], [[1.0, -1.0]])

    def test_missing_gradient_is_zero(self):
        params = {"p": np.ones((1, 1)), "q": np.ones((1, 1))}
        new, _ = adam_step(params, {"p": np.ones((1, 1))}, AdamState.zeros_like(params))
        np.testing.assert_array_equal(new["q"], params["q"])

    def test_rejects_bad_gradients(self):
        params = {"p": np.ones((1, 2))}
        state = AdamState.zeros_like(params)
        with pytest.raises(OptimError):
            adam_step(params, {"p": np.array([[np.nan, 0.0]])}, state)
        with pytest.raises(OptimError):
            adam_step(params, {"p": np.ones((2, 1))}, state)
        with pytest.raises(OptimError):
            adam_step(params, {"r": np.ones((1, 2))}, state)

    def test_converges_on_a_quadratic(self):
        """(x - 0.5)^2 from x = 0; a short momentum horizon settles within 100 steps."""
        params = {"x": np.zeros((1, 1))}
        state = AdamState.zeros_like(params)
        for _ in range(100):
            grads = {"x": 2.0 * (params["x"] - 0.5)}
            params, state = adam_step(params, grads, state, lr=0.1, beta1=0.5)
        assert abs(params["x"][0, 0] - 0.5) < 1e-3
        assert state.t == 100

    def test_zero_gradient_decays_the_moments(self):
        params = {"p": np.array([[1.0, -1.0]])}
        params, state = adam_step(params, {"p": np.array([[0.5, -2.0]])}, AdamState.zeros_like(params))
        after, decayed = adam_step(params, {"p": np.zeros((1, 2))}, state)
        np.testing.assert_allclose(decayed.m["p"], 0.9 * state.m["p"], rtol=1e-15)
        np.testing.assert_allclose(decayed.v["p"], 0.999 * state.v["p"], rtol=1e-15)
        # the first moment still carries the update forward
        assert after["p"][0, 0] < params["p"][0, 0]
        assert after["p"][0, 1] > params["p"][0, 1]


class TestCheckpoint:
    def test_round_trip_is_bit_exact(self, rng, tmp_path):
        params = {"encoder.W": rng.standard_normal((3, 4)), "b": np.array([[np.pi, -0.0, 1e-300]])}
        path = save_checkpoint(tmp_path / "m.ckpt", params)
        loaded = load_checkpoint(path)
        assert list(loaded) == list(params)
        for name in params:
            assert loaded[name].tobytes() == params[name].tobytes()

    def test_truncated_and_foreign_blobs(self, rng):
        blob = encode_checkpoint({"W": rng.standard_normal((2, 2))})
        with pytest.raises(CheckpointError, match="truncated"):
            decode_checkpoint(blob[:-3])
        with pytest.raises(CheckpointError, match="magic"):
            decode_checkpoint(b"NOTACKPT" + blob)

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "absent.ckpt")
