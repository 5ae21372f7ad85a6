import numpy as np
import pytest
from scipy.linalg import solve_discrete_lyapunov

from rankvar import (
    InputError,
    NumericalError,
    VarModel,
    build_operator_matrices,
    fit_constrained_ls,
    green_matrices,
    residuals,
    simulate_var,
    unvec,
    vec,
)
from rankvar.var_algebra import _d_coefficients


def random_stationary(rng, d, p0, p1=None):
    """Random VAR(p0) scaled until the companion radius is below 0.9."""
    mats = [rng.standard_normal((d, d)) for _ in range(p0)]
    model = VarModel.from_matrices(mats, p1=p1)
    while not model.is_stationary(1e-3) or model.spectral_radius() > 0.9:
        mats = [0.7 * a for a in mats]
        model = VarModel.from_matrices(mats, p1=p1)
    return model


def test_vec_is_column_major():
    m = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(vec(m), [1.0, 3.0, 2.0, 4.0])
    assert np.array_equal(unvec(vec(m), 2), m)
    with pytest.raises(InputError):
        unvec(np.zeros(3), 2)


def test_model_validation():
    with pytest.raises(InputError):
        VarModel(d=2, p0=1, p1=1, theta=np.zeros(3))  # wrong length
    with pytest.raises(InputError):
        VarModel(d=2, p0=2, p1=1, theta=np.zeros(4))  # p0 > p1
    with pytest.raises(InputError):
        VarModel(d=2, p0=0, p1=1, theta=np.ones(4))  # nonzero beyond p0
    with pytest.raises(InputError):
        VarModel(d=2, p0=1, p1=1, theta=np.full(4, np.nan))


def test_from_matrices_and_coefficient():
    a1 = np.array([[0.3, 0.12], [-0.06, 0.24]])
    model = VarModel.from_matrices([a1], p1=3)
    assert (model.p0, model.p1) == (1, 3)
    assert np.array_equal(model.coefficient(1), a1)
    assert np.all(model.coefficient(2) == 0.0)
    assert np.array_equal(model.theta[:4], [0.3, -0.06, 0.12, 0.24])
    with pytest.raises(InputError):
        model.coefficient(4)


def test_spectral_radius():
    m1 = VarModel.from_matrices([np.array([[0.5]])])
    assert np.isclose(m1.spectral_radius(), 0.5)
    # AR(2) companion: roots of z^2 - 0.5 z - 0.24 are 0.8 and -0.3
    m2 = VarModel.from_matrices([np.array([[0.5]]), np.array([[0.24]])])
    assert np.isclose(m2.spectral_radius(), 0.8)
    assert m2.is_stationary()
    zero = VarModel(d=2, p0=0, p1=1, theta=np.zeros(4))
    assert zero.spectral_radius() == 0.0


def test_green_matrices_scalar_examples():
    g = green_matrices(VarModel.from_matrices([np.array([[0.5]])]), 3)
    assert np.allclose(g.ravel(), [1.0, 0.5, 0.25, 0.125])
    m2 = VarModel.from_matrices([np.array([[0.5]]), np.array([[0.24]])])
    g2 = green_matrices(m2, 4)
    assert np.allclose(g2.ravel(), [1.0, 0.5, 0.49, 0.365, 0.3001])


@pytest.mark.parametrize("trial", range(10))
def test_green_right_convolution(trial):
    # greens are built by the left recursion G_u = sum A_i G_{u-i}; the
    # right identity G_u = sum G_{u-i} A_i is an independent consequence
    rng = np.random.default_rng(1200 + trial)
    d = int(rng.integers(2, 4))
    p0 = int(rng.integers(1, 4))
    model = random_stationary(rng, d, p0)
    g = green_matrices(model, 12)
    for u in range(1, 13):
        acc = np.zeros((d, d))
        for i, a in enumerate(model.a_list, start=1):
            if u - i >= 0:
                acc += g[u - i] @ a
        assert np.max(np.abs(g[u] - acc)) < 1e-12


def test_d_coefficients_are_negated_transposes():
    rng = np.random.default_rng(17)
    model = random_stationary(rng, 3, 3)
    g = green_matrices(model, 3)
    for d_i, a_i in zip(_d_coefficients(g, 3), model.a_list):
        assert np.allclose(d_i, -a_i.T, atol=1e-12)


def test_operator_matrices_structure():
    rng = np.random.default_rng(5)
    model = random_stationary(rng, 2, 1, p1=3)
    n = 40
    ops = build_operator_matrices(model, n)
    d2 = 4
    # M blocks are kron(G_{r-c}', I)
    for r in range(1, 4):
        for c in range(1, 4):
            block = ops.M[(r - 1) * d2: r * d2, (c - 1) * d2: c * d2]
            want = np.kron(ops.greens[r - c].T, np.eye(2)) if r >= c else 0.0
            assert np.allclose(block, want)
    assert np.array_equal(ops.P, np.eye(d2 * 3))
    assert np.allclose(ops.T, ops.M.T @ ops.P.T @ ops.Q.T)
    assert np.allclose(ops.q_block(1), np.eye(d2 * 3)[:d2])
    assert np.allclose(ops.t_block(2), ops.T[:, d2: 2 * d2])


def test_identity_window_q_column_scalar():
    model = VarModel.from_matrices([np.array([[0.5]])])
    ops = build_operator_matrices(model, 10)
    col = ops.Q[:, 0]
    assert np.allclose(col[:5], [1.0, 0.5, 0.25, 0.125, 0.0625])


def test_t_invariant_to_fundamental_system():
    rng = np.random.default_rng(23)
    for trial in range(5):
        d = int(rng.integers(1, 4))
        p0 = int(rng.integers(1, 4))
        model = random_stationary(rng, d, p0, p1=p0 + int(rng.integers(0, 2)))
        t_id = build_operator_matrices(model, 60, fundamental="identity").T
        t_gr = build_operator_matrices(model, 60, fundamental="green").T
        scale = max(np.max(np.abs(t_id)), 1e-30)
        assert np.max(np.abs(t_id - t_gr)) / scale < 1e-8


def test_p0_zero_operator_matrices():
    model = VarModel(d=2, p0=0, p1=2, theta=np.zeros(8))
    ops = build_operator_matrices(model, 30)
    assert np.array_equal(ops.M, np.eye(8))
    assert ops.effective_lags == 2
    t_expected = np.zeros((8, 4 * 29))
    t_expected[:, :8] = np.eye(8)
    assert np.allclose(ops.T, t_expected)


def test_effective_lags_truncation():
    model = VarModel.from_matrices([np.array([[0.5]])])
    ops = build_operator_matrices(model, 500)
    assert ops.effective_lags < 100  # 0.5^t is below 1e-12 past t ~ 40
    tail = ops.Q[ops.effective_lags:]
    assert np.all(tail == 0.0)


def test_simulate_var_recursion_and_inversion():
    model = VarModel.from_matrices([np.array([[0.5]])])
    eps = np.array([[1.0], [0.0], [0.0]])
    x = simulate_var(model, 3, eps, burn_in=0)
    assert np.allclose(x.ravel(), [1.0, 0.5, 0.25])

    rng = np.random.default_rng(8)
    model2 = random_stationary(rng, 2, 2)
    eps2 = rng.standard_normal((50, 2))
    x2 = simulate_var(model2, 50, eps2, burn_in=0)
    # with zero initial values the filter inverts the simulation exactly
    assert np.allclose(residuals(x2, model2), eps2, atol=1e-12)


def test_simulate_var_validates():
    model = VarModel.from_matrices([np.array([[0.5]])])
    with pytest.raises(InputError):
        simulate_var(model, 10, np.zeros((5, 1)), burn_in=0)  # too few rows
    unstable = VarModel.from_matrices([np.array([[1.01]])])
    with pytest.raises(NumericalError):
        simulate_var(unstable, 10, np.zeros((10, 1)), burn_in=0)


def test_sample_covariance_matches_lyapunov():
    a1 = np.array([[0.3, 0.12], [-0.06, 0.24]])
    model = VarModel.from_matrices([a1])
    rng = np.random.default_rng(31)
    x = simulate_var(model, 40_000, rng.standard_normal((40_200, 2)))
    sigma = solve_discrete_lyapunov(a1, np.eye(2))
    sample = x.T @ x / x.shape[0]
    assert np.allclose(sample, sigma, atol=0.05)


def test_fit_recovers_coefficients():
    rng = np.random.default_rng(44)
    a1 = np.array([[0.3, 0.12], [-0.06, 0.24]])
    model = VarModel.from_matrices([a1], p1=2)
    x = simulate_var(model, 4000, rng.standard_normal((4200, 2)))
    fit = fit_constrained_ls(x, 1, p1=2)
    assert np.max(np.abs(fit.coefficient(1) - a1)) < 0.05
    assert np.all(fit.coefficient(2) == 0.0)
    # discretized estimate sits on the n^{-1/2}/100 lattice
    pitch = 4000 ** -0.5 / 100.0
    ratio = fit.theta / pitch
    assert np.allclose(ratio, np.round(ratio), atol=1e-8)
    raw = fit_constrained_ls(x, 1, p1=2, discretize=False)
    assert np.max(np.abs(raw.theta - fit.theta)) <= pitch


def test_fit_edge_cases():
    x = np.random.default_rng(2).standard_normal((100, 2))
    zero = fit_constrained_ls(x, 0, p1=2)
    assert zero.p0 == 0 and np.all(zero.theta == 0.0)
    with pytest.raises(InputError):
        fit_constrained_ls(x[:12], 1)  # too short
    with pytest.raises(InputError):
        fit_constrained_ls(x, 1, p1=0)
    const = np.ones((100, 2))
    with pytest.raises(NumericalError):
        fit_constrained_ls(const, 1)  # demeaned design is all zeros
