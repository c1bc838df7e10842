import json
import math

import numpy as np
import pytest

from oracles import svm_dual_oracle
from stormgrid.svm import (
    KernelSpec,
    SvmError,
    SvmModel,
    boundary_csv,
    confusion,
    confusion_from_labels,
    decision_value,
    export_boundary,
    kernel_eval,
    kernel_matrix,
    predict,
    solve_dual,
    train,
)
from stormgrid.synthdata import Dataset

TWO_POINT = Dataset([[0, 0], [2, 2]], [-1, 1])
XOR = Dataset([[0, 0], [1, 1], [0, 1], [1, 0]], [-1, -1, 1, 1])
KERNELS = [
    KernelSpec("linear"),
    KernelSpec("polynomial", degree=2),
    KernelSpec("polynomial", degree=2, offset=1.0),
    KernelSpec("gaussian"),
]


def random_set(rng, m):
    X = rng.uniform(0, 5, size=(m, 2))
    y = np.where(rng.random(m) < 0.5, 1, -1)
    y[0], y[1] = 1, -1
    return Dataset(X, y)


def check_kkt(model, diag, data, tol=1e-4):
    a, c = model.alpha, model.c
    assert np.all(a > 0) and np.all(a <= c + 1e-8)
    assert abs(float(a @ model.support_y)) <= 1e-8
    yf = data.y * model.decision_function(data.X)
    # map full-sample alphas
    full = np.zeros(data.m)
    for xs, al in zip(model.support_x, a):
        full[np.flatnonzero(np.all(data.X == xs, axis=1))[0]] = al
    eps = 1e-8 * c
    free = (full > eps) & (full < c - eps)
    assert np.all(np.abs(yf[free] - 1) <= tol)
    assert np.all(yf[full <= eps] >= 1 - tol)
    assert np.all(yf[full >= c - eps] <= 1 + tol)
    assert np.allclose(diag.slacks, np.maximum(0, 1 - yf), atol=1e-8)


# -- kernels ---------------------------------------------------------------

def test_kernel_examples():
    u, v = (1, 2), (3, 4)
    assert kernel_eval(KernelSpec("linear"), u, v) == 11
    assert kernel_eval(KernelSpec("polynomial", degree=2), u, v) == 121
    assert kernel_eval(KernelSpec("polynomial", degree=2, offset=1), u, v) == 144
    for g in (0.1, 1, 7):
        assert kernel_eval(KernelSpec("gaussian", gamma=g), u, u) == 1.0
    with pytest.raises(ValueError):
        kernel_eval(KernelSpec("linear"), (1, 2), (1, 2, 3))
    with pytest.raises(ValueError):
        kernel_matrix(KernelSpec("linear"), np.ones((2, 2)), np.ones((2, 3)))


def test_kernel_spec_validation_and_parse():
    with pytest.raises(ValueError):
        KernelSpec("sigmoid")
    with pytest.raises(ValueError):
        KernelSpec("polynomial", degree=0)
    with pytest.raises(ValueError):
        KernelSpec("gaussian", gamma=0)
    assert KernelSpec.parse("quadratic") == KernelSpec("polynomial", degree=2)
    assert KernelSpec.parse("quadratic+1").label == "quadratic+1"
    assert KernelSpec.parse("cubic").degree == 3
    assert KernelSpec.parse("gaussian:2").gamma == 2.0
    assert KernelSpec.parse("poly4").label == "poly4"
    with pytest.raises(ValueError):
        KernelSpec.parse("banana")


def test_kernel_matrix_matches_scalar():
    rng = np.random.default_rng(0)
    A, B = rng.normal(size=(4, 2)), rng.normal(size=(3, 2))
    for spec in KERNELS:
        K = kernel_matrix(spec, A, B)
        for i in range(4):
            for j in range(3):
                assert K[i, j] == pytest.approx(kernel_eval(spec, A[i], B[j]), rel=1e-12)


# -- training --------------------------------------------------------------

def test_two_point_analytic():
    model, diag = train(TWO_POINT, KernelSpec("linear"), 10, scale=False)
    assert abs(decision_value(model, (1, 1))) < 1e-9
    assert diag.margin == pytest.approx(2 * math.sqrt(2), abs=1e-6)
    # w = sum a y x = (0.5, 0.5), b = -1
    w = (model.alpha * model.support_y) @ model.support_x
    assert np.allclose(w, [0.5, 0.5], atol=1e-9) and model.bias == pytest.approx(-1, abs=1e-9)
    assert predict(model, (2, 2)) == 1 and predict(model, (0, 0)) == -1
    assert predict(model, (1, 1)) == 1  # boundary tie-break
    assert predict(model, (0.5, 1.5)) == 1


def test_two_point_free_sv_margin_condition():
    model, _ = train(TWO_POINT, KernelSpec("linear"), 10, scale=False)
    for x, y in zip(model.support_x, model.support_y):
        assert abs(y * decision_value(model, x) - 1) < 1e-6


def test_xor_gaussian():
    model, diag = train(XOR, KernelSpec("gaussian", gamma=1.0), 10, scale=False)
    assert np.array_equal(predict(model, XOR.X), XOR.y)
    assert diag.converged


def test_small_c_matches_oracle():
    rng = np.random.default_rng(5)
    data = Dataset(rng.uniform(0, 5, size=(16, 2)), [1, -1] * 8)
    K = kernel_matrix(KernelSpec("linear"), data.X, data.X)
    a, b, *_ = solve_dual(K, data.y.astype(float), 1e-3)
    ao, bo, _ = svm_dual_oracle(K, data.y, 1e-3)
    assert np.allclose(a, ao, atol=1e-9)
    assert np.allclose(a, 1e-3)  # balanced classes: every alpha sits at the cap


def test_train_errors():
    with pytest.raises(SvmError):
        train(Dataset([[1, 1], [2, 2]], [1, 1]), KernelSpec("linear"), 1)
    with pytest.raises(SvmError):
        train(TWO_POINT, KernelSpec("linear"), 0)


def test_iteration_cap_reports_not_converged():
    rng = np.random.default_rng(2)
    data = random_set(rng, 40)
    model, diag = train(data, KernelSpec("gaussian"), 10, max_iter=3)
    assert not diag.converged and diag.iterations == 3
    assert np.isfinite(model.bias)


def test_kkt_on_corpus_models(sweep, corpus):
    _, tr, _ = corpus
    for spec in KERNELS:
        for c in (0.1, 1, 10):
            model, diag = train(tr.subset(np.arange(120)), spec, c)
            check_kkt(model, diag, tr.subset(np.arange(120)))


def test_determinism_and_label_swap():
    rng = np.random.default_rng(8)
    data = random_set(rng, 30)
    swapped = Dataset(data.X, -data.y)
    P = rng.uniform(0, 5, size=(50, 2))
    for spec in KERNELS:
        m1, _ = train(data, spec, 1)
        m2, _ = train(data, spec, 1)
        assert np.array_equal(m1.alpha, m2.alpha) and m1.bias == m2.bias
        ms, _ = train(swapped, spec, 1)
        assert np.allclose(ms.decision_function(P), -m1.decision_function(P), atol=1e-8)


def test_decision_continuity():
    model, _ = train(XOR, KernelSpec("gaussian"), 1)
    x = np.array([0.3, 0.7])
    steps = [model.decision_function(x + d)[0] for d in (1e-3, 1e-6, 1e-9)]
    f0 = decision_value(model, x)
    assert abs(steps[2] - f0) < abs(steps[0] - f0) + 1e-12
    assert abs(steps[2] - f0) < 1e-8


def test_dimension_mismatch():
    model, _ = train(TWO_POINT, KernelSpec("linear"), 1)
    with pytest.raises(ValueError):
        decision_value(model, (1, 2, 3))
    with pytest.raises(ValueError):
        predict(model, (1, 2, 3))


def test_model_json_round_trip(tmp_path):
    model, _ = train(XOR, KernelSpec("polynomial", degree=2, offset=1), 1)
    model.save(tmp_path / "m.json")
    back = SvmModel.load(tmp_path / "m.json")
    P = np.random.default_rng(0).uniform(-1, 2, size=(20, 2))
    assert np.array_equal(back.decision_function(P), model.decision_function(P))
    d = json.loads((tmp_path / "m.json").read_text())
    assert d["kernel"]["kind"] == "polynomial" and "bias" in d


def test_oracle_equivalence_small():
    """Spot check; the 50-case sweep lives in the acceptance suite."""
    rng = np.random.default_rng(3)
    for spec in KERNELS:
        data = random_set(rng, 12)
        K = kernel_matrix(spec, data.X, data.X)
        a, b, *_ = solve_dual(K, data.y.astype(float), 1.0)
        ao, bo, do = svm_dual_oracle(K, data.y, 1.0)
        ds = a.sum() - 0.5 * (a * data.y) @ K @ (a * data.y)
        assert abs(ds - do) <= 1e-6 * abs(do)


# -- metrics and export ---------------------------------------------------

def test_confusion_examples():
    y = np.array([-1, -1, 1, 1])
    perfect = confusion_from_labels(y, y)
    assert np.array_equal(perfect.percentages, [[100, 0], [0, 100]])
    always = confusion_from_labels(y, np.ones(4))
    assert np.array_equal(always.percentages, [[0, 100], [0, 100]])
    assert always.counts.sum() == 4
    csv = always.to_csv().splitlines()
    assert csv[0].startswith("actual,") and csv[1].startswith("normal,0.0,100.0")


def test_confusion_rows_sum_to_100(sweep, corpus):
    model, _, _ = sweep
    cm = confusion(model, corpus[2])
    assert cm.counts.sum() == 120
    assert np.allclose(cm.percentages.sum(1), 100, atol=0.1)
    with pytest.raises(ValueError):
        confusion(model, Dataset(np.zeros((0, 2)), []))


def test_boundary_export():
    model, _ = train(TWO_POINT, KernelSpec("linear"), 10, scale=False)
    a1, a2, F = export_boundary(model, (0, 2), (0, 2), 3)
    S = np.sign(np.round(F, 9))
    assert np.array_equal(S, -S[::-1, ::-1].T)  # antisymmetric about the anti-diagonal
    assert (F > 0).any() and (F < 0).any()
    c1, c2, F1 = export_boundary(model, (0, 2), (0, 4), 1)
    assert c1.tolist() == [1.0] and c2.tolist() == [2.0] and F1.shape == (1, 1)
    text = boundary_csv(a1, a2, F).splitlines()
    assert text[0] == "x1,x2,f" and len(text) == 10
    with pytest.raises(ValueError):
        export_boundary(model, (0, 1), (0, 1), 0)
