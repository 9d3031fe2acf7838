import numpy as np
import pytest

from fedoffload.errors import ConfigError, DomainError, FormatError, UsageError
from fedoffload.neural import (
    AdamState, ParamVector, adam_update, apply_update, export_params, forward, import_params,
    init_network, layer_spec, load_checkpoint, loss_and_gradients, param_count,
    save_checkpoint, stacked_spec,
)

from oracles import fd_gradient


def test_default_spec():
    assert layer_spec() == (6, 30, 64, 16, 32, 32, 3)


def test_stacked_spec_appends_blocks():
    assert stacked_spec(2) == (6, 30, 64, 16, 32, 32, 16, 32, 32, 16, 32, 32, 3)


def test_param_count_small():
    assert param_count((6, 4, 3)) == 43
    assert init_network((6, 4, 3), 0).values.size == 43


@pytest.mark.parametrize("spec", [(5, 4, 3), (6, 4, 2), (6, 0, 3), (6,)])
def test_invalid_spec(spec):
    with pytest.raises(ConfigError):
        init_network(spec, 0)


def test_init_deterministic():
    assert init_network(layer_spec(), 5).equals(init_network(layer_spec(), 5))
    assert not init_network(layer_spec(), 5).equals(init_network(layer_spec(), 6))


def test_init_zero_biases():
    for _, b in init_network(layer_spec(), 1).layers():
        assert not b.any()


def test_he_variance_first_layer():
    w = np.concatenate([init_network((6, 4, 3), s).layers()[0][0].ravel()
                        for s in range(10_000)])
    assert w.var() == pytest.approx(2 / 6, rel=0.1)


def test_zero_network_outputs_zero():
    p = ParamVector(np.zeros(43), (6, 4, 3))
    assert np.array_equal(forward(p, np.ones(6)), np.zeros(3))


def test_output_bias_passthrough():
    p = ParamVector(np.zeros(43), (6, 4, 3))
    p.layers()[-1][1][:] = [1.0, 2.0, 3.0]
    assert np.array_equal(forward(p, np.arange(6.0)), [1.0, 2.0, 3.0])


def test_single_layer_selects_inputs():
    p = ParamVector(np.zeros(param_count((6, 3))), (6, 3))
    w, _ = p.layers()[0]
    w[0, 0] = w[2, 1] = w[5, 2] = 1.0
    x = np.array([1.5, -2.0, 3.25, 4.0, 5.0, -6.5])
    assert np.array_equal(forward(p, x), [1.5, 3.25, -6.5])


def test_forward_batch_matches_rows():
    p = init_network(layer_spec(), 2)
    x = np.random.default_rng(0).normal(size=(7, 6))
    batch = forward(p, x)
    for i in range(7):
        np.testing.assert_allclose(batch[i], forward(p, x[i]), rtol=1e-13, atol=1e-15)


def test_forward_rejects_nonfinite():
    with pytest.raises(DomainError):
        forward(init_network((6, 4, 3), 0), [0, 0, np.nan, 0, 0, 0])


def test_perfect_fit_zero_loss_and_grad():
    p = init_network((6, 8, 3), 3)
    s = np.random.default_rng(1).normal(size=(5, 6))
    a = np.array([0, 1, 2, 1, 0])
    t = forward(p, s)[np.arange(5), a]
    loss, g = loss_and_gradients(p, s, a, t)
    assert loss == 0.0
    assert not g.values.any()


def test_loss_batch_order_invariant():
    p = init_network((6, 8, 3), 3)
    rng = np.random.default_rng(2)
    s, a, t = rng.normal(size=(9, 6)), rng.integers(0, 3, 9), rng.normal(size=9)
    perm = rng.permutation(9)
    l1, _ = loss_and_gradients(p, s, a, t)
    l2, _ = loss_and_gradients(p, s[perm], a[perm], t[perm])
    assert l1 == pytest.approx(l2, rel=1e-14)


def test_empty_batch_rejected():
    with pytest.raises(UsageError):
        loss_and_gradients(init_network((6, 4, 3), 0), np.zeros((0, 6)), [], [])


def test_gradient_matches_finite_differences_small():
    rng = np.random.default_rng(4)
    p = init_network((6, 5, 4, 3), rng)
    s, a, t = rng.normal(size=(6, 6)), rng.integers(0, 3, 6), rng.normal(size=6)
    _, g = loss_and_gradients(p, s, a, t)
    num = fd_gradient(lambda v: loss_and_gradients(ParamVector(v, p.sizes), s, a, t)[0],
                      p.values.copy())
    rel = np.abs(g.values - num) / np.maximum(1e-6, np.abs(g.values) + np.abs(num))
    assert rel.max() <= 1e-4


def test_zero_gradient_leaves_params():
    p = init_network((6, 4, 3), 0)
    adam = AdamState.zeros(43)
    q, adam2 = apply_update(p, ParamVector(np.zeros(43), p.sizes), adam)
    assert q.equals(p)


def test_step_counter_increments():
    p = init_network((6, 4, 3), 0)
    _, s1 = apply_update(p, p, AdamState.zeros(43))
    _, s2 = apply_update(p, p, s1)
    assert (s1.step, s2.step) == (1, 2)


def test_update_does_not_mutate_inputs():
    p = init_network((6, 4, 3), 0)
    before = p.copy()
    st = AdamState.zeros(43)
    apply_update(p, p, st)
    assert p.equals(before) and st.step == 0 and not st.m.any()


def test_shape_mismatch_rejected():
    p = init_network((6, 4, 3), 0)
    with pytest.raises(UsageError):
        apply_update(p, ParamVector(np.zeros(param_count((6, 3))), (6, 3)), AdamState.zeros(43))
    with pytest.raises(UsageError):
        adam_update(np.zeros(3), np.zeros(4), AdamState.zeros(3))


def test_adam_minimises_square():
    w = np.array([1.0])
    st = AdamState.zeros(1, lr=0.05)
    for _ in range(500):
        w, st = adam_update(w, 2 * w, st)
    assert abs(w[0]) < 0.01


def test_first_adam_step_moves_by_lr():
    w, _ = adam_update(np.array([1.0, -1.0]), np.array([3.0, -0.5]), AdamState.zeros(2))
    np.testing.assert_allclose(w, [1.0 - 1e-3, -1.0 + 1e-3], rtol=1e-6)


def test_training_reduces_loss_hundredfold():
    rng = np.random.default_rng(5)
    p = init_network(layer_spec(), rng)
    s, a = rng.normal(size=(32, 6)), rng.integers(0, 3, 32)
    t = rng.normal(size=32)
    st = AdamState.zeros(p.values.size)
    first, _ = loss_and_gradients(p, s, a, t)
    for _ in range(2000):
        loss, g = loss_and_gradients(p, s, a, t)
        p, st = apply_update(p, g, st)
    final, _ = loss_and_gradients(p, s, a, t)
    assert final * 100 <= first


def test_export_import_round_trip():
    p = init_network(layer_spec(), 9)
    q = import_params(export_params(p))
    assert q.equals(p)


def test_export_length_matches_count():
    p = init_network((6, 4, 3), 9)
    lines = export_params(p).splitlines()
    assert lines[0] == "layers 6 4 3"
    assert len(lines) - 1 == 43


def test_truncated_import_fails():
    text = export_params(init_network((6, 4, 3), 9))
    with pytest.raises(FormatError):
        import_params("\n".join(text.splitlines()[:-1]))


def test_import_shape_mismatch_fails():
    text = export_params(init_network((6, 4, 3), 9))
    with pytest.raises(FormatError):
        import_params(text, (6, 5, 3))


@pytest.mark.parametrize("text", ["", "weights 6 3\n", "layers 6 x 3\n",
                                  "layers 6 3\n" + "nan\n" * 21, "layers 6 3\n" + "a\n" * 21])
def test_import_malformed(text):
    with pytest.raises(FormatError):
        import_params(text)


def test_checkpoint_file_round_trip(tmp_path):
    p = init_network(stacked_spec(1), 3)
    path = save_checkpoint(p, tmp_path / "ckpt.txt")
    assert load_checkpoint(path, p.sizes).equals(p)
