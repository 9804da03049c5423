"""L2-regularised logistic regression on sparse features.

One-vs-rest by default; a multinomial (softmax) variant is available.
Both minimise the summed log-loss plus ``l2/2 * ||W||^2`` with L-BFGS; the
intercepts are not penalised.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize
from scipy.special import expit, log_expit, logsumexp, softmax

from .errors import ValidationError

__all__ = ["LinearModel", "binary_loss_grad", "softmax_loss_grad", "train_logreg"]


def binary_loss_grad(params, X, y_pm, l2):
    """Loss and gradient for one binary problem; ``y_pm`` in {-1, +1}.

    ``params`` is ``[w_1 .. w_d, b]``.
    """
    w, b = params[:-1], params[-1]
    margin = y_pm * (X @ w + b)
    loss = -log_expit(margin).sum() + 0.5 * l2 * w.dot(w)
    coef = -y_pm * expit(-margin)
    grad = np.empty_like(params)
    grad[:-1] = X.T @ coef + l2 * w
    grad[-1] = coef.sum()
    return loss, grad


def softmax_loss_grad(params, X, y, n_classes, l2):
    """Multinomial loss and gradient; ``params`` is ``W`` (d x K) then ``b`` (K), flattened."""
    d = X.shape[1]
    W = params[:d * n_classes].reshape(d, n_classes)
    b = params[d * n_classes:]
    Z = np.asarray(X @ W) + b
    rows = np.arange(len(y))
    loss = (logsumexp(Z, axis=1) - Z[rows, y]).sum() + 0.5 * l2 * np.sum(W * W)
    P = softmax(Z, axis=1)
    P[rows, y] -= 1.0
    gW = np.asarray(X.T @ P) + l2 * W
    return loss, np.concatenate([gW.ravel(), P.sum(axis=0)])


@dataclass
class LinearModel:
    """``coef`` is (d x K), ``intercept`` (K,), ``classes`` the label of each column."""

    coef: np.ndarray
    intercept: np.ndarray
    classes: np.ndarray

    def decision_function(self, X) -> np.ndarray:
        return np.asarray(X @ self.coef) + self.intercept

    def predict(self, X) -> np.ndarray:
        return self.classes[np.argmax(self.decision_function(X), axis=1)]


def _as_features(X):
    if sp.issparse(X):
        X = sp.csr_matrix(X, dtype=np.float64)
        values = X.data
    else:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ValidationError("features must be a 2-D matrix")
        values = X
    if not np.all(np.isfinite(values)):
        raise ValidationError("features contain non-finite values")
    return X


def train_logreg(X, y, l2: float = 1.0, max_iter: int = 500,
                 multinomial: bool = False) -> LinearModel:
    """Fit a linear classifier on rows of ``X`` with class labels ``y``."""
    X = _as_features(X)
    y = np.asarray(y)
    if X.shape[0] != len(y):
        raise ValidationError(f"{X.shape[0]} feature rows but {len(y)} labels")
    if X.shape[1] == 0:
        raise ValidationError("feature matrix has no columns")
    classes, y_idx = np.unique(y, return_inverse=True)
    if len(classes) < 2:
        raise ValidationError("training split contains a single class; "
                              "use a stratified split so every class is represented")
    d, K = X.shape[1], len(classes)
    opts = {"maxiter": max_iter}
    if multinomial:
        res = minimize(softmax_loss_grad, np.zeros(d * K + K), args=(X, y_idx, K, l2),
                       jac=True, method="L-BFGS-B", options=opts)
        return LinearModel(res.x[:d * K].reshape(d, K).copy(), res.x[d * K:].copy(), classes)
    coef = np.zeros((d, K))
    intercept = np.zeros(K)
    for k in range(K):
        y_pm = np.where(y_idx == k, 1.0, -1.0)
        res = minimize(binary_loss_grad, np.zeros(d + 1), args=(X, y_pm, l2),
                       jac=True, method="L-BFGS-B", options=opts)
        coef[:, k] = res.x[:-1]
        intercept[k] = res.x[-1]
    return LinearModel(coef, intercept, classes)
