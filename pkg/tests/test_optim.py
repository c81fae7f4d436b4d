import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rankalign.errors import SolverInputError
from rankalign.optim import (
    FitResult,
    SolverConfig,
    fit_l1_linear,
    kkt_residual,
    objective,
)


def scalar_lasso(x, y, c):
    """Closed form for min |w| + c*sum((y - x*w)^2), no intercept.

    Stationarity of the smooth part gives gradient 2c*sum(x^2)*w -
    2c*sum(x*y); soft-thresholding that at 1 yields the minimizer.
    """
    a = 2.0 * c * float(np.dot(x, y))
    d = 2.0 * c * float(np.dot(x, x))
    return np.sign(a) * max(abs(a) - 1.0, 0.0) / d


def test_objective_zero_weights_hinge():
    X = np.array([[1.0, 2.0], [-1.0, 0.5], [0.3, -2.0]])
    y = np.array([1.0, -1.0, 1.0])
    cfg = SolverConfig(c=0.7, loss="squared_hinge")
    # every margin is 0, so every loss term is 1
    assert objective(X, y, np.zeros(2), 0.0, cfg) == pytest.approx(0.7 * 3, abs=1e-12)


def test_objective_perfect_fit_squared():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(10, 3))
    w = np.array([0.5, -2.0, 0.0])
    y = X @ w + 1.25
    cfg = SolverConfig(c=3.0, loss="squared", fit_intercept=True)
    assert objective(X, y, w, 1.25, cfg) == pytest.approx(2.5, abs=1e-9)


def test_objective_hand_evaluated_point():
    # margin y*(w.x) = 2, loss 0, |w| = 1
    cfg = SolverConfig(c=1.0, loss="squared_hinge")
    assert objective([[2.0]], [1.0], [1.0], 0.0, cfg) == 1.0


def test_objective_epsilon_insensitive_tube():
    cfg = SolverConfig(c=2.0, loss="epsilon_insensitive", epsilon=1.0)
    # residuals 0.5 and -0.9 sit inside the tube; 1.5 pokes out by 0.5
    X = np.array([[1.0], [1.0], [1.0]])
    y = np.array([0.5, -0.9, 1.5])
    assert objective(X, y, [0.0], 0.0, cfg) == pytest.approx(2.0 * 0.25, abs=1e-12)


def test_objective_input_validation():
    cfg = SolverConfig(c=1.0, loss="squared")
    with pytest.raises(SolverInputError):
        objective([[1.0]], [1.0], [1.0, 2.0], 0.0, cfg)
    with pytest.raises(SolverInputError):
        objective([[1.0]], [1.0, 2.0], [1.0], 0.0, cfg)
    with pytest.raises(SolverInputError):
        objective([[np.nan]], [1.0], [1.0], 0.0, cfg)
    with pytest.raises(SolverInputError):
        objective([[1.0]], [1.0], [np.inf], 0.0, cfg)


def test_solver_config_validation():
    with pytest.raises(SolverInputError):
        SolverConfig(c=0.0)
    with pytest.raises(SolverInputError):
        SolverConfig(c=-1.0)
    with pytest.raises(SolverInputError):
        SolverConfig(c=np.inf)
    with pytest.raises(SolverInputError):
        SolverConfig(c=1.0, loss="hinge")
    with pytest.raises(SolverInputError):
        SolverConfig(c=1.0, epsilon=-0.1)
    with pytest.raises(SolverInputError):
        SolverConfig(c=1.0, tol=0.0)
    with pytest.raises(SolverInputError):
        SolverConfig(c=1.0, max_epochs=0)


def test_fit_input_validation(jit_warm):
    cfg = SolverConfig(c=1.0, loss="squared_hinge")
    with pytest.raises(SolverInputError):
        fit_l1_linear(np.zeros((0, 2)), np.zeros(0), cfg)
    with pytest.raises(SolverInputError):
        fit_l1_linear([1.0, 2.0], [1.0, -1.0], cfg)  # 1-d X
    with pytest.raises(SolverInputError):
        fit_l1_linear([[1.0], [2.0]], [1.0], cfg)
    with pytest.raises(SolverInputError):
        fit_l1_linear([[1.0], [np.nan]], [1.0, -1.0], cfg)
    with pytest.raises(SolverInputError):
        fit_l1_linear([[1.0], [2.0]], [1.0, 0.5], cfg)  # hinge labels
    with pytest.raises(SolverInputError):
        fit_l1_linear([[1.0], [2.0]], [1.0, -1.0], cfg, w0=[1.0, 2.0])
    with pytest.raises(SolverInputError):
        fit_l1_linear([[1.0], [2.0]], [1.0, -1.0], cfg, w0=[np.nan])
    with pytest.raises(SolverInputError):
        fit_l1_linear([[1.0], [2.0]], [1.0, -1.0], cfg, b0=np.inf)


def test_separable_symmetric_pair(jit_warm):
    cfg = SolverConfig(c=100.0, loss="squared_hinge", fit_intercept=True)
    res = fit_l1_linear([[-1.0], [1.0]], [-1.0, 1.0], cfg)
    assert res.weights[0] > 0.0
    assert res.intercept == pytest.approx(0.0, abs=1e-6)
    assert res.converged and res.kkt_residual <= cfg.tol


def test_tiny_c_gives_exact_zero(jit_warm):
    rng = np.random.default_rng(1)
    X = rng.normal(size=(30, 5))
    y = np.where(rng.random(30) < 0.5, -1.0, 1.0)
    res = fit_l1_linear(X, y, SolverConfig(c=1e-9, loss="squared_hinge"))
    assert (res.weights == 0.0).all()
    assert res.converged


def test_scalar_closed_form(jit_warm):
    rng = np.random.default_rng(2)
    for _ in range(25):
        n = int(rng.integers(3, 50))
        x = rng.normal(size=(n, 1))
        y = rng.normal(scale=2.0, size=n)
        c = float(10.0 ** rng.uniform(-2, 1))
        res = fit_l1_linear(x, y, SolverConfig(c=c, loss="squared"))
        expect = scalar_lasso(x[:, 0], y, c)
        assert res.weights[0] == pytest.approx(expect, abs=1e-10)
        assert res.converged


@settings(max_examples=40, deadline=None, derandomize=True)
@given(
    data=st.lists(
        st.tuples(st.integers(-40, 40), st.integers(-50, 50)),
        min_size=2, max_size=20,
    ),
    c_exp=st.integers(-20, 10),
)
def test_scalar_closed_form_property(jit_warm, data, c_exp):
    x = np.array([d[0] for d in data], float) / 8.0
    y = np.array([d[1] for d in data], float) / 10.0
    if np.dot(x, x) < 1e-8:
        return  # degenerate column, solver rightly leaves w at 0
    c = 2.0 ** (c_exp / 4.0)
    res = fit_l1_linear(x[:, None], y, SolverConfig(c=c, loss="squared"))
    assert res.weights[0] == pytest.approx(scalar_lasso(x, y, c), abs=1e-8)


def test_scaling_relation(jit_warm):
    # dividing X by s while multiplying c by s rescales the scalar optimum by s
    rng = np.random.default_rng(3)
    x = rng.normal(size=(20, 1))
    y = rng.normal(scale=1.5, size=20)
    c, s = 0.4, 2.5
    base = fit_l1_linear(x, y, SolverConfig(c=c, loss="squared"))
    scaled = fit_l1_linear(x / s, y, SolverConfig(c=c * s, loss="squared"))
    assert scaled.weights[0] == pytest.approx(s * base.weights[0], abs=1e-8)


def test_descent_from_zero_start(jit_warm):
    rng = np.random.default_rng(4)
    for loss in ("squared_hinge", "squared", "epsilon_insensitive"):
        X = rng.normal(size=(40, 6))
        if loss == "squared_hinge":
            y = np.where(rng.random(40) < 0.5, -1.0, 1.0)
        else:
            y = rng.normal(scale=2.0, size=40)
        cfg = SolverConfig(c=0.5 / 40, loss=loss, fit_intercept=True)
        res = fit_l1_linear(X, y, cfg)
        assert res.objective <= objective(X, y, np.zeros(6), 0.0, cfg) + 1e-12
        assert res.objective == pytest.approx(
            objective(X, y, res.weights, res.intercept, cfg), abs=1e-9
        )
        assert res.converged and res.kkt_residual <= cfg.tol


def test_exact_zeros_on_redundant_features(jit_warm):
    rng = np.random.default_rng(5)
    X = rng.normal(size=(60, 6))
    y = 1.5 * X[:, 0] - 0.8 * X[:, 1] + rng.normal(scale=0.3, size=60)
    res = fit_l1_linear(X, y, SolverConfig(c=1.0 / 60, loss="squared"))
    zero = res.weights == 0.0
    assert zero.sum() >= 1  # the uninformative columns die exactly
    assert not zero[0] and not zero[1]


def test_numeric_first_order_optimality(jit_warm):
    # central finite differences of the full objective certify the optimum
    # against the loss definitions in objective(), independent of the solver
    rng = np.random.default_rng(6)
    X = rng.normal(size=(30, 4))
    y = rng.normal(scale=1.5, size=30)
    cfg = SolverConfig(c=0.8 / 30, loss="squared")
    res = fit_l1_linear(X, y, cfg)
    h = 1e-6
    for j in range(4):
        for direction in (+1.0, -1.0):
            w = res.weights.copy()
            w[j] += direction * h
            slope = (objective(X, y, w, 0.0, cfg) - res.objective) / h
            assert slope >= -1e-4


def test_kkt_residual_at_scalar_optimum(jit_warm):
    x = np.array([[0.5], [-1.2], [2.0], [0.7]])
    y = np.array([1.0, -2.0, 3.5, 0.2])
    c = 0.6
    w = np.array([scalar_lasso(x[:, 0], y, c)])
    cfg = SolverConfig(c=c, loss="squared")
    assert kkt_residual(x, y, w, 0.0, cfg) <= 1e-9
    assert kkt_residual(x, y, w + 0.1, 0.0, cfg) > 0.0


def test_kkt_residual_zero_inside_subgradient():
    # at w=0 the condition is |g| <= 1; make the gradient small via tiny c
    x = np.array([[1.0], [2.0]])
    y = np.array([0.5, -0.5])
    cfg = SolverConfig(c=0.01, loss="squared")
    assert kkt_residual(x, y, [0.0], 0.0, cfg) == 0.0


def test_kkt_residual_matches_hand_formula():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(15, 3))
    y = rng.normal(size=15)
    w = np.array([0.4, 0.0, -1.1])
    c = 0.3
    g = 2.0 * c * X.T @ (X @ w - y)
    expect = max(abs(g[0] + 1.0), max(abs(g[1]) - 1.0, 0.0), abs(g[2] - 1.0))
    cfg = SolverConfig(c=c, loss="squared")
    assert kkt_residual(X, y, w, 0.0, cfg) == pytest.approx(expect, rel=1e-12)


def test_intercept_absorbs_constant_target(jit_warm):
    X = np.random.default_rng(8).normal(size=(25, 3))
    y = np.full(25, 7.5)
    res = fit_l1_linear(X, y, SolverConfig(c=1.0, loss="squared", fit_intercept=True))
    assert (res.weights == 0.0).all()
    assert res.intercept == pytest.approx(7.5, abs=1e-6)


def test_epsilon_tube_swallows_small_targets(jit_warm):
    X = np.random.default_rng(9).normal(size=(20, 2))
    y = np.random.default_rng(10).uniform(-0.9, 0.9, 20)
    res = fit_l1_linear(X, y, SolverConfig(c=5.0, loss="epsilon_insensitive", epsilon=1.0))
    assert (res.weights == 0.0).all()
    assert res.objective == 0.0
    assert res.converged and res.kkt_residual == 0.0


def test_determinism(jit_warm):
    rng = np.random.default_rng(11)
    X = rng.normal(size=(50, 8))
    y = np.where(rng.random(50) < 0.4, -1.0, 1.0)
    cfg = SolverConfig(c=2.0 / 50, loss="squared_hinge", seed=3)
    a = fit_l1_linear(X, y, cfg)
    b = fit_l1_linear(X, y, cfg)
    assert isinstance(a, FitResult)
    assert np.array_equal(a.weights, b.weights)
    assert a.intercept == b.intercept
    assert a.objective == b.objective
    assert a.epochs_run == b.epochs_run


def test_warm_start_reaches_same_objective(jit_warm):
    rng = np.random.default_rng(12)
    X = rng.normal(size=(40, 5))
    y = rng.normal(scale=2.0, size=40)
    cfg = SolverConfig(c=0.5 / 40, loss="squared")
    cold = fit_l1_linear(X, y, cfg)
    nearby = fit_l1_linear(X, y, SolverConfig(c=0.7 / 40, loss="squared"))
    warm = fit_l1_linear(X, y, cfg, w0=nearby.weights, b0=nearby.intercept)
    assert warm.objective == pytest.approx(cold.objective, rel=1e-6)
    assert warm.converged
