"""Two-hidden-layer transformation network with analytic derivatives.

``NetworkParams`` holds the six weight/bias arrays.  The flat parameter
vector used by the optimizer concatenates, in this order:

    Wo column-major, W2 column-major, W1 column-major, bo, b2, b1

so entry (h, q) of Wo lands at position q*N2 + h, and so on.  All gradient
routines emit columns in the same order; ``flatten``/``with_flat`` round-trip
exactly.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import backends
from .backends import ACTIVATIONS
from .errors import ArchitectureMismatchError, DimensionError


@dataclass(frozen=True)
class NetworkParams:
    """Weights and biases of the transformation network.

    Shapes: W1 (n, N1), b1 (N1,), W2 (N1, N2), b2 (N2,), Wo (N2, n), bo (n,).
    """

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    Wo: np.ndarray
    bo: np.ndarray
    activation: str = "sigmoid"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise DimensionError(f"unknown activation {self.activation!r}")
        for name in ("W1", "b1", "W2", "b2", "Wo", "bo"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(arr)):
                raise DimensionError(f"non-finite entries in {name}")
            object.__setattr__(self, name, arr)
        n, N1 = self.W1.shape
        N2 = self.W2.shape[1]
        if self.W2.shape != (N1, N2) or self.Wo.shape != (N2, n):
            raise DimensionError("inconsistent layer shapes")
        if self.b1.shape != (N1,) or self.b2.shape != (N2,) or self.bo.shape != (n,):
            raise DimensionError("inconsistent bias shapes")

    @property
    def n(self):
        return self.W1.shape[0]

    @property
    def hidden_sizes(self):
        return self.W1.shape[1], self.W2.shape[1]

    @property
    def size(self):
        """Total number of free parameters."""
        n, (N1, N2) = self.n, self.hidden_sizes
        return backends.param_count(n, N1, N2, n)

    @classmethod
    def random(cls, n, N1=5, N2=5, seed=0, activation="sigmoid"):
        """Uniform [0, 1) initialization of every weight and bias."""
        rng = np.random.default_rng(seed)
        return cls(
            W1=rng.uniform(0.0, 1.0, (n, N1)),
            b1=rng.uniform(0.0, 1.0, N1),
            W2=rng.uniform(0.0, 1.0, (N1, N2)),
            b2=rng.uniform(0.0, 1.0, N2),
            Wo=rng.uniform(0.0, 1.0, (N2, n)),
            bo=rng.uniform(0.0, 1.0, n),
            activation=activation,
        )

    def flatten(self):
        return np.concatenate(
            [
                self.Wo.ravel(order="F"),
                self.W2.ravel(order="F"),
                self.W1.ravel(order="F"),
                self.bo,
                self.b2,
                self.b1,
            ]
        )

    def with_flat(self, vec):
        """New params with the same shapes, values taken from a flat vector."""
        vec = np.asarray(vec, dtype=float)
        n, (N1, N2) = self.n, self.hidden_sizes
        if vec.shape != (self.size,):
            raise DimensionError(f"expected {self.size} entries, got {vec.shape}")
        parts = np.split(vec, np.cumsum([n * N2, N1 * N2, n * N1, n, N2]))
        return replace(
            self,
            Wo=parts[0].reshape((N2, n), order="F"),
            W2=parts[1].reshape((N1, N2), order="F"),
            W1=parts[2].reshape((n, N1), order="F"),
            bo=parts[3].copy(),
            b2=parts[4].copy(),
            b1=parts[5].copy(),
        )

    def _arrays(self):
        return (
            self.W1,
            self.b1,
            self.W2,
            self.b2,
            self.Wo,
            self.bo,
            ACTIVATIONS[self.activation],
        )

    def save(self, path):
        """Write a text snapshot: header ``n N1 N2 activation``, one value per line."""
        n, (N1, N2) = self.n, self.hidden_sizes
        with open(path, "w") as fh:
            fh.write(f"{n} {N1} {N2} {self.activation}\n")
            for v in self.flatten():
                fh.write(format(v, ".17g") + "\n")

    @classmethod
    def load(cls, path, expect=None):
        """Read a snapshot written by ``save``.

        ``expect`` may be an (n, N1, N2) tuple; a mismatching header raises
        ArchitectureMismatchError.
        """
        with open(path) as fh:
            header = fh.readline().split()
            if len(header) != 4:
                raise ArchitectureMismatchError(f"malformed snapshot header in {path}")
            n, N1, N2 = (int(t) for t in header[:3])
            activation = header[3]
            if expect is not None and tuple(expect) != (n, N1, N2):
                raise ArchitectureMismatchError(
                    f"snapshot is ({n}, {N1}, {N2}), expected {tuple(expect)}"
                )
            values = np.array([float(line) for line in fh if line.strip()])
        template = cls(
            W1=np.zeros((n, N1)),
            b1=np.zeros(N1),
            W2=np.zeros((N1, N2)),
            b2=np.zeros(N2),
            Wo=np.zeros((N2, n)),
            bo=np.zeros(n),
            activation=activation,
        )
        if values.shape != (template.size,):
            raise ArchitectureMismatchError(
                f"snapshot holds {values.size} values, layout needs {template.size}"
            )
        return template.with_flat(values)


def forward(params, x):
    """Network output at a single state; returns a length-n vector."""
    X = np.ascontiguousarray(x, dtype=float).reshape(1, -1)
    return backends.forward_batch(X, *params._arrays())[0]


def forward_batch(params, X):
    """Network outputs for a batch of states, shape (M, n)."""
    return backends.forward_batch(np.ascontiguousarray(X, dtype=float), *params._arrays())


def input_jacobian(params, x):
    """d(output)/d(state) at a single state, shape (n, n)."""
    X = np.ascontiguousarray(x, dtype=float).reshape(1, -1)
    return backends.input_jacobian_batch(X, *params._arrays())[0]


def input_jacobian_batch(params, X):
    return backends.input_jacobian_batch(np.ascontiguousarray(X, dtype=float), *params._arrays())


def param_gradient(params, x, j):
    """Gradient of output component j with respect to the flat parameters."""
    X = np.ascontiguousarray(x, dtype=float).reshape(1, -1)
    return backends.param_jacobian_batch(X, *params._arrays())[0, j]


def param_jacobian(params, x):
    """All output components' parameter gradients at one state, (n, P)."""
    X = np.ascontiguousarray(x, dtype=float).reshape(1, -1)
    return backends.param_jacobian_batch(X, *params._arrays())[0]


def param_jacobian_batch(params, X):
    return backends.param_jacobian_batch(np.ascontiguousarray(X, dtype=float), *params._arrays())


def mixed_derivative(params, x, j, k):
    """d^2(output_j)/(dp dx_k) as a flat vector over the parameters."""
    return backends.mixed_jacobian(np.asarray(x, dtype=float), *params._arrays())[j, k]


def mixed_jacobian(params, x):
    """All mixed second derivatives at one state, shape (n, n, P)."""
    return backends.mixed_jacobian(np.asarray(x, dtype=float), *params._arrays())
