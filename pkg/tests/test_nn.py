import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import sparse

from milpsat.cnf import FormulaPermutation, apply_permutation, example1
from milpsat.graph import RniConfig, apply_rni, batch, to_graph
from milpsat.milp import encode
from milpsat.nn import (
    AdamState, DimensionError, GnnConfig, GnnModel, Tensor, adam_step, backward, classify, forward, loss,
)
from milpsat.nn import tensor as T
from milpsat.wl import counterexample_pair

from conftest import random_formula, relu_margin


def numeric_grad(fn, x, h=1e-5):
    g = np.zeros_like(x)
    for i in np.ndindex(x.shape):
        old = x[i]
        x[i] = old + h
        up = fn()
        x[i] = old - h
        down = fn()
        x[i] = old
        g[i] = (up - down) / (2 * h)
    return g


@pytest.mark.parametrize("op", ["matmul", "relu", "sigmoid", "concat", "spmm", "broadcast", "segment", "mul"])
def test_op_gradients(op, rng):
    a = Tensor(rng.normal(size=(4, 3)), True)
    b = Tensor(rng.normal(size=(3, 2)), True)
    S = sparse.random(5, 4, density=0.5, random_state=1, format="csr")
    v = Tensor(rng.normal(size=3), True)

    def build():
        if op == "matmul":
            return a @ b
        if op == "relu":
            return T.relu(a)
        if op == "sigmoid":
            return T.sigmoid(a)
        if op == "concat":
            return T.concat([a, a * 2.0], axis=1)
        if op == "spmm":
            return T.spmm(S, a)
        if op == "broadcast":
            return T.broadcast_rows(v, 4) + a
        if op == "segment":
            return T.segment_sum(a, np.array([0, 1, 0, 1]), 2)
        return a * a

    w = rng.normal(size=build().shape)
    out = T.mean(build() * w)
    out.backward()
    for t in (a, b, v):
        if t.grad is None:
            continue
        num = numeric_grad(lambda: float(T.mean(build() * w).data), t.data)
        assert np.allclose(t.grad, num, atol=1e-7)


def test_shared_parent_gradient_accumulates():
    a = Tensor(np.array([2.0]), True)
    (a * a + a).backward(np.ones(1))
    assert a.grad.tolist() == [5.0]


def test_bce_and_mse_values():
    p = Tensor(np.array([0.5, 0.5]), True)
    assert float(T.bce(p, np.array([1, 0])).data) == pytest.approx(np.log(2))
    assert float(T.mse(p, np.array([1, 0])).data) == pytest.approx(0.25)
    # clamp keeps the loss finite at exact 0/1 predictions
    assert np.isfinite(T.bce(Tensor(np.array([0.0, 1.0])), np.array([1, 0])).data)
    assert float(T.bce(Tensor(np.array([0.0])), np.array([1])).data) == pytest.approx(-np.log(1e-12))


def test_zero_model_outputs_half():
    model = GnnModel.zeros(GnnConfig())
    g = to_graph(encode(example1()))
    assert forward(model, g).data.tolist() == [0.5]
    assert classify(0.5) == 0
    assert classify(np.array([0.5000001, 0.2])).tolist() == [1, 0]


@pytest.mark.parametrize("y", [0, 1])
def test_output_bias_gradient_at_zero_model(y):
    # d BCE(sigmoid(z), y) / dz = sigmoid(z) - y = 0.5 - y at z = 0
    model = GnnModel.zeros(GnnConfig())
    _, grads, _ = backward(model, to_graph(encode(example1())), [y])
    assert grads["out.b2"].tolist() == [pytest.approx(0.5 - y)]


def test_adam_first_step():
    p = {"w": Tensor(np.array([1.0, -2.0, 3.0]), True)}
    g = {"w": np.array([0.3, -1e-3, 0.0])}
    adam_step(p, g, AdamState(lr=0.01))
    expect = np.array([1.0, -2.0, 3.0]) - 0.01 * g["w"] / (np.abs(g["w"]) + 1e-8)
    assert np.allclose(p["w"].data, expect, rtol=0, atol=1e-12)


def test_adam_rejects_shape():
    with pytest.raises(DimensionError):
        adam_step({"w": Tensor(np.zeros(2), True)}, {"w": np.zeros(3)}, AdamState())


def test_parameter_count():
    d = 4
    mlp = lambda a, b: a * d + d + d * b + b
    want = mlp(1, d) + d + 2 * (2 * mlp(d, d) + 2 * mlp(2 * d, d)) + mlp(2 * d, 1)
    assert GnnModel(GnnConfig(d=d, rounds=2)).num_parameters() == want


def randomize(model, rng, scale=0.2):
    """Random values for every parameter; nonzero biases keep pre-activations off the ReLU kink."""
    model.set_state({k: rng.normal(scale=scale, size=v.shape) for k, v in model.get_state().items()})
    return model


GRAD_FLOOR = 1e-6  # below this, central differences are dominated by roundoff


def _relative_error(a, b):
    return np.abs(a - b) / np.maximum(GRAD_FLOOR, np.maximum(np.abs(a), np.abs(b)))


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("rni,kind", [(0.0, "bce"), (1.0, "mse"), (0.5, "bce")])
def test_model_gradcheck(seed, rni, kind):
    rng = np.random.default_rng(seed)
    while True:
        model = randomize(GnnModel(GnnConfig(d=4, rounds=2, rni_fraction=rni, loss=kind), seed=seed), rng)
        gs = [to_graph(encode(random_formula(rng, k=3, n_max=5))) for _ in range(2)]
        if rni:
            gs = [apply_rni(g, RniConfig(rni), rng) for g in gs]
        bg = batch(gs)
        if relu_margin(model, bg) > 1e-3:
            break
    y = np.array([1.0, 0.0])
    _, grads, _ = backward(model, bg, y, kind)
    for name, p in model.params.items():
        num = numeric_grad(lambda: float(loss(forward(model, bg), y, kind).data), p.data)
        assert (_relative_error(grads[name], num) <= 1e-4).all(), name


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    f = random_formula(rng, k=3, n_max=10)
    sigma = FormulaPermutation.random(f.m, f.n, rng)
    model = GnnModel(GnnConfig(d=8, rounds=3), seed=int(rng.integers(1 << 30)))
    a = forward(model, to_graph(encode(f))).data
    b = forward(model, to_graph(encode(apply_permutation(f, sigma)))).data
    assert np.abs(a - b).max() <= 1e-9


def test_wl_bound_on_counterexample():
    phi, psi = counterexample_pair()
    for s in range(5):
        model = GnnModel(GnnConfig(d=8, rounds=3), seed=s)
        assert abs(forward(model, to_graph(encode(phi))).data[0]
                   - forward(model, to_graph(encode(psi))).data[0]) <= 1e-9


def test_batch_neutral(rng):
    model = GnnModel(GnnConfig(d=8, rounds=2), seed=3)
    gs = [to_graph(encode(random_formula(rng, k=3, n_max=8))) for _ in range(10)]
    whole = forward(model, batch(gs)).data
    single = np.array([forward(model, g).data[0] for g in gs])
    assert np.abs(whole - single).max() <= 1e-9


def test_dimension_mismatch():
    g = to_graph(encode(example1()))
    with pytest.raises(DimensionError):
        forward(GnnModel(GnnConfig(rni_fraction=1.0)), g)
    with pytest.raises(DimensionError):
        forward(GnnModel(GnnConfig()), apply_rni(g, RniConfig(1.0)))


def test_checkpoint_roundtrip(tmp_path):
    model = GnnModel(GnnConfig(d=6, rounds=1, rni_fraction=0.5), seed=4)
    p = tmp_path / "m.json"
    model.save(p)
    back = GnnModel.load(p)
    g = apply_rni(to_graph(encode(example1())), RniConfig(0.5, seed=1))
    assert forward(back, g).data[0] == forward(model, g).data[0]
    with pytest.raises(DimensionError):
        GnnModel.load(p, expect=GnnConfig(d=7, rounds=1, rni_fraction=0.5))


def test_config_validation():
    with pytest.raises(ValueError):
        GnnConfig(loss="hinge")
    with pytest.raises(ValueError):
        GnnConfig(rni_fraction=2.0)
