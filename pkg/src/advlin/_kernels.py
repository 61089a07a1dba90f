"""Coordinate-descent kernel for the L1 path fits.

This is the one hot inner loop of the package: the cross-validated L1
path solves it thousands of times per simulation table. The default
implementation is numba-compiled; set the environment variable
``ADVLIN_NUMBA=0`` to force the pure-numpy fallback (same algorithm,
same results, Python-loop speed). ``benchmarks/bench_lasso_kernel.py``
compares the two paths.

The kernel minimizes (1/2n)||y - X theta||^2 + lam ||theta||_1 using
covariance updates: it only sees gram = X'X/n and xty = X'y/n, and
warm-starts each penalty from the previous one on a decreasing path.
Between full passes over all coordinates it iterates on the current
active set, maintaining the gradient cache q = gram @ theta only on
active coordinates; a full pass rebuilds the cache and terminates the
penalty once no coordinate moves more than ``tol``.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


def numba_enabled() -> bool:
    """True when the compiled kernel will be used."""
    return _HAVE_NUMBA and os.environ.get("ADVLIN_NUMBA", "1") != "0"


def _cd_path_numpy(gram, xty, lambdas, tol, max_iter):
    p = gram.shape[0]
    n_lam = lambdas.shape[0]
    coefs = np.zeros((n_lam, p))
    iters = np.zeros(n_lam, dtype=np.int64)
    theta = np.zeros(p)
    diag = np.diag(gram).copy()
    for li in range(n_lam):
        lam = lambdas[li]
        passes = 0
        while passes < max_iter:
            # full pass: rebuild the gradient cache, visit every coordinate
            passes += 1
            active = np.flatnonzero(theta)
            q = gram[:, active] @ theta[active] if active.size else np.zeros(p)
            max_delta = 0.0
            for j in range(p):
                gjj = diag[j]
                if gjj <= 0.0:
                    continue
                old = theta[j]
                z = xty[j] - q[j] + gjj * old
                if z > lam:
                    new = (z - lam) / gjj
                elif z < -lam:
                    new = (z + lam) / gjj
                else:
                    new = 0.0
                d = new - old
                if d != 0.0:
                    theta[j] = new
                    q += gram[:, j] * d
                    max_delta = max(max_delta, abs(d))
            if max_delta <= tol:
                break
            # active-set passes: cache kept current on active entries only
            active = np.flatnonzero(theta)
            while passes < max_iter and active.size:
                passes += 1
                max_delta = 0.0
                for j in active:
                    gjj = diag[j]
                    old = theta[j]
                    z = xty[j] - q[j] + gjj * old
                    if z > lam:
                        new = (z - lam) / gjj
                    elif z < -lam:
                        new = (z + lam) / gjj
                    else:
                        new = 0.0
                    d = new - old
                    if d != 0.0:
                        theta[j] = new
                        q[active] += gram[active, j] * d
                        max_delta = max(max_delta, abs(d))
                if max_delta <= tol:
                    break
        iters[li] = passes
        coefs[li] = theta
    return coefs, iters


@njit(cache=True)
def _cd_path_numba(gram, xty, lambdas, tol, max_iter):  # pragma: no cover - compiled
    p = gram.shape[0]
    n_lam = lambdas.shape[0]
    coefs = np.zeros((n_lam, p))
    iters = np.zeros(n_lam, dtype=np.int64)
    theta = np.zeros(p)
    q = np.zeros(p)
    active = np.empty(p, dtype=np.int64)
    for li in range(n_lam):
        lam = lambdas[li]
        passes = 0
        while passes < max_iter:
            passes += 1
            for k in range(p):
                q[k] = 0.0
            for k in range(p):
                tk = theta[k]
                if tk != 0.0:
                    for i in range(p):
                        q[i] += gram[i, k] * tk
            max_delta = 0.0
            for j in range(p):
                gjj = gram[j, j]
                if gjj <= 0.0:
                    continue
                old = theta[j]
                z = xty[j] - q[j] + gjj * old
                if z > lam:
                    new = (z - lam) / gjj
                elif z < -lam:
                    new = (z + lam) / gjj
                else:
                    new = 0.0
                d = new - old
                if d != 0.0:
                    theta[j] = new
                    for k in range(p):
                        q[k] += gram[k, j] * d
                    ad = abs(d)
                    if ad > max_delta:
                        max_delta = ad
            if max_delta <= tol:
                break
            n_act = 0
            for k in range(p):
                if theta[k] != 0.0:
                    active[n_act] = k
                    n_act += 1
            while passes < max_iter and n_act > 0:
                passes += 1
                max_delta = 0.0
                for a in range(n_act):
                    j = active[a]
                    gjj = gram[j, j]
                    old = theta[j]
                    z = xty[j] - q[j] + gjj * old
                    if z > lam:
                        new = (z - lam) / gjj
                    elif z < -lam:
                        new = (z + lam) / gjj
                    else:
                        new = 0.0
                    d = new - old
                    if d != 0.0:
                        theta[j] = new
                        for b in range(n_act):
                            k = active[b]
                            q[k] += gram[k, j] * d
                        ad = abs(d)
                        if ad > max_delta:
                            max_delta = ad
                if max_delta <= tol:
                    break
        iters[li] = passes
        for k in range(p):
            coefs[li, k] = theta[k]
    return coefs, iters


def cd_path(gram: np.ndarray, xty: np.ndarray, lambdas: np.ndarray,
            tol: float, max_iter: int) -> tuple[np.ndarray, np.ndarray]:
    """Solve the L1 path for a decreasing penalty sequence.

    Returns (coefs, iters) where coefs[k] minimizes the objective at
    lambdas[k] and iters[k] counts the coordinate passes used.
    """
    gram = np.ascontiguousarray(gram, dtype=float)
    xty = np.ascontiguousarray(xty, dtype=float)
    lambdas = np.ascontiguousarray(lambdas, dtype=float)
    if numba_enabled():
        return _cd_path_numba(gram, xty, lambdas, float(tol), int(max_iter))
    return _cd_path_numpy(gram, xty, lambdas, float(tol), int(max_iter))
