import numpy as np
import pytest

import fblin
from fblin.backends import numpy_backend as nb

try:
    from fblin.backends import _core
except ImportError:
    _core = None

needs_core = pytest.mark.skipif(_core is None, reason="compiled core not built")


def arrays(rng, n=2, N1=5, N2=4):
    return (
        rng.standard_normal((n, N1)),
        rng.standard_normal(N1),
        rng.standard_normal((N1, N2)),
        rng.standard_normal(N2),
        rng.standard_normal((N2, n)),
        rng.standard_normal(n),
    )


def test_backend_selected():
    assert fblin.backend_name in ("compiled", "numpy")


@needs_core
@pytest.mark.parametrize("act_code", [0, 1, 2])
def test_parity_forward(rng, act_code):
    arrs = arrays(rng)
    X = np.ascontiguousarray(rng.uniform(-1, 1, (60, 2)))
    a = np.asarray(_core.forward_batch(X, *arrs, act_code))
    b = nb.forward_batch(X, *arrs, act_code)
    assert np.max(np.abs(a - b)) <= 1e-13


@needs_core
@pytest.mark.parametrize("act_code", [0, 1, 2])
def test_parity_input_jacobian(rng, act_code):
    arrs = arrays(rng)
    X = np.ascontiguousarray(rng.uniform(-1, 1, (60, 2)))
    a = np.asarray(_core.input_jacobian_batch(X, *arrs, act_code))
    b = nb.input_jacobian_batch(X, *arrs, act_code)
    assert np.max(np.abs(a - b)) <= 1e-13


@needs_core
@pytest.mark.parametrize("act_code", [0, 1, 2])
def test_parity_param_jacobian(rng, act_code):
    arrs = arrays(rng)
    X = np.ascontiguousarray(rng.uniform(-1, 1, (60, 2)))
    a = np.asarray(_core.param_jacobian_batch(X, *arrs, act_code))
    b = nb.param_jacobian_batch(X, *arrs, act_code)
    assert np.max(np.abs(a - b)) <= 1e-13


def test_param_count():
    assert nb.param_count(2, 5, 5, 2) == 10 + 25 + 10 + 2 + 5 + 5
