"""Pure numpy LSTM recurrence; the reference the compiled kernel must agree with.

Gate layout in ``W`` (4H x (1+H)) and ``b`` (4H,): input, forget, candidate,
output. Column 0 of ``W`` multiplies the scalar input, the rest the previous
hidden state.
"""

import numpy as np


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def lstm_forward(W, b, X):
    """Run the recurrence over X (B x T) from zero state.

    Returns hs, cs (T+1 x B x H, index 0 is the zero state) and the activated
    gates (T x B x 4H).
    """
    B, T = X.shape
    H = W.shape[1] - 1
    wx = W[:, 0]
    Wh_t = np.ascontiguousarray(W[:, 1:].T)
    hs = np.zeros((T + 1, B, H))
    cs = np.zeros((T + 1, B, H))
    gates = np.empty((T, B, 4 * H))
    for t in range(T):
        z = hs[t] @ Wh_t
        z += X[:, t, None] * wx
        z += b
        a = gates[t]
        a[:, :2 * H] = _sigmoid(z[:, :2 * H])
        a[:, 2 * H:3 * H] = np.tanh(z[:, 2 * H:3 * H])
        a[:, 3 * H:] = _sigmoid(z[:, 3 * H:])
        cs[t + 1] = a[:, H:2 * H] * cs[t] + a[:, :H] * a[:, 2 * H:3 * H]
        hs[t + 1] = a[:, 3 * H:] * np.tanh(cs[t + 1])
    return hs, cs, gates


def lstm_backward(W, X, hs, cs, gates, dh_last):
    """Gradients of a loss w.r.t. W and b given dL/dh at the final step."""
    B, T = X.shape
    H = W.shape[1] - 1
    Wh = W[:, 1:]
    dW = np.zeros_like(W)
    db = np.zeros(4 * H)
    dh = dh_last.copy()
    dc = np.zeros((B, H))
    dz = np.empty((B, 4 * H))
    for t in range(T - 1, -1, -1):
        a = gates[t]
        i, f, g, o = a[:, :H], a[:, H:2 * H], a[:, 2 * H:3 * H], a[:, 3 * H:]
        tc = np.tanh(cs[t + 1])
        dc += dh * o * (1.0 - tc * tc)
        dz[:, :H] = dc * g * i * (1.0 - i)
        dz[:, H:2 * H] = dc * cs[t] * f * (1.0 - f)
        dz[:, 2 * H:3 * H] = dc * i * (1.0 - g * g)
        dz[:, 3 * H:] = dh * tc * o * (1.0 - o)
        dW[:, 0] += dz.T @ X[:, t]
        dW[:, 1:] += dz.T @ hs[t]
        db += dz.sum(axis=0)
        dh = dz @ Wh
        dc = dc * f
    return dW, db
