import numpy as np
import pytest

from rconmf.core import (
    AdmmConfig,
    ConfigError,
    ContractError,
    SceneMatrix,
    SolverConfig,
    as_matrix,
    is_feasible_abundance,
    l21_norm,
    objective,
)


def _objective_by_terms(A, X, Y, P, alpha, beta):
    # independent loop-based recomputation of every term
    d, n = Y.shape
    data = 0.0
    for i in range(d):
        for j in range(n):
            r = Y[i, j] - sum(A[i, k] * X[k, j] for k in range(A.shape[1]))
            data += r * r
    reg = sum(np.sqrt(sum(v * v for v in row)) for row in X)
    vol = sum((a - p) ** 2 for a, p in zip(A.ravel(), P.ravel()))
    return 0.5 * data + alpha * reg + 0.5 * beta * vol


class TestObjective:
    def test_exact_fit_without_regularizers_is_zero(self, rng):
        A = rng.random((4, 3))
        X = rng.random((3, 6))
        assert objective(A, X, A @ X, rng.random((4, 3)), 0.0, 0.0) == 0.0

    def test_zero_abundances_at_anchors(self, rng):
        Y = rng.random((4, 6))
        A = rng.random((4, 3))
        val = objective(A, np.zeros((3, 6)), Y, A, 0.7, 3.0)
        assert val == pytest.approx(0.5 * np.sum(Y**2), rel=1e-14)

    def test_matches_term_by_term_calculator(self, rng):
        Y, A, X, P = rng.random((4, 6)), rng.random((4, 3)), rng.random((3, 6)), rng.random((4, 3))
        expected = _objective_by_terms(A, X, Y, P, 0.5, 0.2)
        assert objective(A, X, Y, P, 0.5, 0.2) == pytest.approx(expected, rel=1e-12)

    def test_shape_mismatch_rejected(self, rng):
        with pytest.raises(ContractError):
            objective(rng.random((4, 3)), rng.random((2, 6)), rng.random((4, 6)), rng.random((4, 3)), 0, 0)

    def test_nonfinite_rejected(self, rng):
        Y = rng.random((4, 6))
        Y[0, 0] = np.nan
        with pytest.raises(ContractError):
            objective(rng.random((4, 3)), rng.random((3, 6)), Y, rng.random((4, 3)), 0, 0)


class TestL21:
    def test_zero(self):
        assert l21_norm(np.zeros((3, 4))) == 0.0

    def test_identity(self):
        assert l21_norm(np.eye(2)) == 2.0

    def test_pythagorean_row(self):
        assert l21_norm(np.array([[3.0, 4.0], [0.0, 0.0]])) == 5.0

    def test_against_loop(self, rng):
        X = rng.standard_normal((5, 7))
        expected = sum(np.sqrt(np.sum(r**2)) for r in X)
        assert l21_norm(X) == pytest.approx(expected, rel=1e-12)


class TestTypes:
    def test_scene_matrix_dimensions(self, rng):
        s = SceneMatrix(rng.random((5, 9)), wavelengths=np.arange(5.0))
        assert (s.d, s.n) == (5, 9)

    def test_scene_matrix_rejects_bad_wavelengths(self, rng):
        with pytest.raises(ContractError):
            SceneMatrix(rng.random((3, 4)), wavelengths=[1.0, 3.0, 2.0])
        with pytest.raises(ContractError):
            SceneMatrix(rng.random((3, 4)), wavelengths=[1.0, 2.0])

    def test_as_matrix_rejects_vectors_and_inf(self):
        with pytest.raises(ContractError):
            as_matrix(np.ones(3))
        with pytest.raises(ContractError):
            as_matrix(np.array([[1.0, np.inf]]))

    def test_feasibility_check(self):
        assert is_feasible_abundance(np.array([[0.3, 1.0], [0.7, 0.0]]))
        assert not is_feasible_abundance(np.array([[0.3], [0.6]]))
        assert not is_feasible_abundance(np.array([[1.1], [-0.1]]))

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"q": 0},
            {"q": 3, "alpha": -1.0},
            {"q": 3, "beta": -1.0},
            {"q": 3, "lambda_prox": 0.0},
            {"q": 3, "mu_prox": -2.0},
            {"q": 3, "max_outer_iters": 0},
            {"q": 3, "outer_tol": 0.0},
            {"q": 3, "seed": -1},
            {"q": 3, "seed": 2**64},
        ],
    )
    def test_solver_config_validation(self, kwargs):
        with pytest.raises(ConfigError):
            SolverConfig(**kwargs)

    @pytest.mark.parametrize("kwargs", [{"rho": 0.0}, {"max_iters": 0}, {"primal_tol": 0.0}, {"dual_tol": -1.0}])
    def test_admm_config_validation(self, kwargs):
        with pytest.raises(ConfigError):
            AdmmConfig(**kwargs)
