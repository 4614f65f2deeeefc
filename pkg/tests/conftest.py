import numpy as np
import pytest

# Lines reported by the acceptance suite, printed in the terminal summary.
_CRITERIA: dict = {}


@pytest.fixture
def report_criterion():
    def _report(key, passed, detail=""):
        _CRITERIA[key] = (bool(passed), detail)

    return _report


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA, key=lambda k: (len(k), k)):
        ok, detail = _CRITERIA[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_simplex(rng, q, n):
    X = rng.dirichlet(np.ones(q), size=n).T
    return X / X.sum(axis=0)


def toy_scene(rng, d=20, p=3, n=200, noise=0.0, pure=False):
    """Small LMM scene; with `pure=True` the first p pixels are the endmembers."""
    M = rng.uniform(0.05, 1.0, size=(d, p))
    S = random_simplex(rng, p, n)
    if pure:
        S[:, :p] = np.eye(p)
    Y = M @ S + noise * rng.standard_normal((d, n))
    return Y, M, S
