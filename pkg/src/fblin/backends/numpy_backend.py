"""Vectorized numpy kernels for the two-hidden-layer transformation network.

The network maps a state x in R^nin to an output in R^nout through

    z1 = W1.T x + b1      h1 = act(z1)        W1: (nin, N1)
    z2 = W2.T h1 + b2     h2 = act(z2)        W2: (N1, N2)
    T  = Wo.T h2 + bo                         Wo: (N2, nout)

All kernels take a batch X of shape (M, nin) and the six parameter arrays
plus an integer activation code (see ACTIVATIONS).  Parameter-gradient
kernels emit columns in the package-wide flattening order: Wo, W2, W1
column-major, then bo, b2, b1.  The compiled backend in ``_core.pyx``
implements the same signatures; parity between the two is enforced by the
test suite.
"""

import numpy as np

ACTIVATIONS = {"sigmoid": 0, "tanh": 1, "identity": 2}


def _act(z, code):
    """Activation value, first and second derivative, all elementwise."""
    if code == 0:
        # numerically stable sigmoid on both tails
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        d1 = out * (1.0 - out)
        d2 = d1 * (1.0 - 2.0 * out)
        return out, d1, d2
    if code == 1:
        t = np.tanh(z)
        d1 = 1.0 - t * t
        return t, d1, -2.0 * t * d1
    if code == 2:
        return z, np.ones_like(z), np.zeros_like(z)
    raise ValueError(f"unknown activation code {code}")


def _layers(X, W1, b1, W2, b2, act_code, order=1):
    Z1 = X @ W1 + b1
    H1, S1, Q1 = _act(Z1, act_code)
    Z2 = H1 @ W2 + b2
    H2, S2, Q2 = _act(Z2, act_code)
    if order == 2:
        return H1, S1, Q1, H2, S2, Q2
    return H1, S1, H2, S2


def forward_batch(X, W1, b1, W2, b2, Wo, bo, act_code):
    """Network outputs for a batch of states; returns (M, nout)."""
    _, _, H2, _ = _layers(X, W1, b1, W2, b2, act_code)
    return H2 @ Wo + bo


def hidden_features_batch(X, W1, b1, W2, b2, act_code):
    """Second-hidden-layer activations for a batch of states, (M, N2)."""
    _, _, H2, _ = _layers(X, W1, b1, W2, b2, act_code)
    return H2


def input_jacobian_batch(X, W1, b1, W2, b2, Wo, bo, act_code):
    """d(output_j)/d(x_k) for every batch point; returns (M, nout, nin)."""
    _, S1, _, S2 = _layers(X, W1, b1, W2, b2, act_code)
    # chain through the layers: Wo.T diag(S2) W2.T diag(S1) W1.T
    t = S1[:, :, None] * W1.T[None, :, :]          # (M, N1, nin)
    t = W2.T @ t                                   # (M, N2, nin)
    t = S2[:, :, None] * t
    return Wo.T @ t                                # (M, nout, nin)


def param_count(nin, N1, N2, nout):
    return nout * N2 + N2 * N1 + N1 * nin + nout + N2 + N1


def param_jacobian_batch(X, W1, b1, W2, b2, Wo, bo, act_code):
    """d(output_j)/dp for every batch point and every parameter p.

    Returns (M, nout, P) with P = param_count(...); the last axis follows
    the Wo/W2/W1/bo/b2/b1 column-major flattening order.
    """
    M = X.shape[0]
    nin, N1 = W1.shape
    N2, nout = Wo.shape
    H1, S1, H2, S2 = _layers(X, W1, b1, W2, b2, act_code)

    V2 = Wo.T[None, :, :] * S2[:, None, :]                     # (M, nout, N2)
    U1 = np.einsum("mjq,sq->mjs", V2, W2) * S1[:, None, :]     # (M, nout, N1)

    wo_block = np.zeros((M, nout, nout, N2))
    idx = np.arange(nout)
    wo_block[:, idx, idx, :] = H2[:, None, :]
    w2_block = np.einsum("mjq,mh->mjqh", V2, H1)
    w1_block = np.einsum("mjs,mk->mjsk", U1, X)
    bo_block = np.broadcast_to(np.eye(nout), (M, nout, nout))
    return np.concatenate(
        [
            wo_block.reshape(M, nout, nout * N2),
            w2_block.reshape(M, nout, N2 * N1),
            w1_block.reshape(M, nout, N1 * nin),
            bo_block,
            V2,
            U1,
        ],
        axis=2,
    )


def mixed_jacobian(x, W1, b1, W2, b2, Wo, bo, act_code):
    """d^2(output_j)/(dp dx_k) at a single state; returns (nout, nin, P).

    Cold path: this is evaluated once per residual-Jacobian assembly (at the
    equilibrium), so there is no compiled variant.
    """
    nin, N1 = W1.shape
    N2, nout = Wo.shape
    X = np.asarray(x, dtype=float).reshape(1, nin)
    H1, S1, Q1, H2, S2, Q2 = _layers(X, W1, b1, W2, b2, act_code, order=2)
    h1, s1, q1 = H1[0], S1[0], Q1[0]
    s2, q2 = S2[0], Q2[0]
    x = X[0]

    g = (W1 * s1[None, :]) @ W2        # (nin, N2): g[k,i] = sum_s W2[s,i] W1[k,s] s1[s]
    A1 = (Wo * q2[:, None]).T          # (nout, N2): Wo[i,j] q2[i]
    A2 = (Wo * s2[:, None]).T          # (nout, N2): Wo[i,j] s2[i]
    B1 = np.einsum("ji,ki,hi->jkh", A1, g, W2)   # (nout, nin, N1)
    B2 = A2 @ W2.T                                # (nout, N1)

    wo_block = np.zeros((nout, nin, nout, N2))
    idx = np.arange(nout)
    wo_block[idx, :, idx, :] = (g * s2[None, :])[None, :, :]
    w2_block = np.einsum("jq,kq,h->jkqh", A1, g, h1) + np.einsum(
        "jq,kh->jkqh", A2, W1 * s1[None, :]
    )
    w1_block = np.einsum("jkh,h,a->jkha", B1, s1, x) + np.einsum(
        "jh,kh,h,a->jkha", B2, W1, q1, x
    )
    for k in range(nin):
        w1_block[:, k, :, k] += B2 * s1[None, :]
    bo_block = np.zeros((nout, nin, nout))
    b2_block = np.einsum("jh,kh->jkh", A1, g)
    b1_block = B1 * s1[None, None, :] + np.einsum("jh,kh,h->jkh", B2, W1, q1)
    return np.concatenate(
        [
            wo_block.reshape(nout, nin, nout * N2),
            w2_block.reshape(nout, nin, N2 * N1),
            w1_block.reshape(nout, nin, N1 * nin),
            bo_block,
            b2_block,
            b1_block,
        ],
        axis=2,
    )
