"""Pure-numpy implementations of the hot numerical kernels.

Same contract as the compiled module `_ops`; used as the fallback backend.
"""

import numpy as np

BACKEND = "python"


def pairwise_sq_dists(X):
    """Squared euclidean distance matrix of the rows of X, exact zeros on the diagonal."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    sq = np.einsum("ij,ij->i", X, X)
    D = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(D, 0.0, out=D)
    np.fill_diagonal(D, 0.0)
    return D


def tsne_grad_kl(P, Y):
    """Gradient of KL(P || Q) under the Student-t low-dimensional kernel, plus the KL value.

    Q_ij is proportional to (1 + ||y_i - y_j||^2)^-1 with the diagonal excluded;
    grad_i = 4 * sum_j (P_ij - Q_ij) * W_ij * (y_i - y_j).
    """
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    n = Y.shape[0]
    W = 1.0 / (1.0 + pairwise_sq_dists(Y))
    np.fill_diagonal(W, 0.0)
    Z = W.sum()
    Q = W / Z
    PQW = (P - Q) * W
    grad = 4.0 * (np.diag(PQW.sum(axis=1)) - PQW) @ Y
    mask = P > 0.0
    kl = float(np.sum(P[mask] * np.log(P[mask] / np.maximum(Q[mask], 1e-300))))
    return grad, kl
