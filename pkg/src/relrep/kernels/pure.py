"""Numpy reference implementation of the kernel interface.

Shapes follow one convention throughout:

    x        (B, L, D)      batch of sentence matrices
    w        (F, width, D)  F filters, each seeing a width x D window
    out      (B, P, F)      P = L - width + 1 valid positions
    pooled   (B, F)         max over positions
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _windows(x: np.ndarray, width: int) -> np.ndarray:
    """im2col: (B, L, D) -> contiguous (B, P, width * D)."""
    b, length, dim = x.shape
    p = length - width + 1
    win = sliding_window_view(x, width, axis=1)        # (B, P, D, width), a view
    return np.ascontiguousarray(win.transpose(0, 1, 3, 2)).reshape(b, p, width * dim)


def conv1d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    n_filters, width, dim = w.shape
    win = _windows(x, width)
    out = win @ w.reshape(n_filters, width * dim).T
    out += b
    return out


def conv1d_backward(x: np.ndarray, w: np.ndarray, d_out: np.ndarray):
    """Gradients (d_x, d_w, d_b) of sum(conv1d_forward(x, w, b) * d_out)."""
    n_filters, width, dim = w.shape
    batch, length, _ = x.shape
    p = length - width + 1
    win = _windows(x, width).reshape(batch * p, width * dim)
    g = d_out.reshape(batch * p, n_filters)
    d_w = (g.T @ win).reshape(n_filters, width, dim)
    d_b = d_out.sum(axis=(0, 1))
    d_win = (g @ w.reshape(n_filters, width * dim)).reshape(batch, p, width, dim)
    d_x = np.zeros_like(x)
    for j in range(width):
        d_x[:, j:j + p, :] += d_win[:, :, j, :]
    return d_x, d_w, d_b


def maxpool_forward(a: np.ndarray):
    """Max over positions; argmax keeps the first maximal position on ties."""
    arg = a.argmax(axis=1)
    pooled = np.take_along_axis(a, arg[:, None, :], axis=1)[:, 0, :]
    return pooled, arg


def maxpool_backward(d_pooled: np.ndarray, arg: np.ndarray, positions: int) -> np.ndarray:
    batch, n_filters = d_pooled.shape
    d_a = np.zeros((batch, positions, n_filters), dtype=d_pooled.dtype)
    np.put_along_axis(d_a, arg[:, None, :], d_pooled[:, None, :], axis=1)
    return d_a
