"""Fused run loops for analytic oracles, JIT-compiled when numba is available.

Each kernel executes a full T-step optimizer run on one of the built-in
analytic objectives (0 = Rosenbrock, 1 = diagonal quadratic) with
pre-generated Gaussian noise, recording the trajectory at a fixed stride.
Every kernel exists in two functionally identical variants: the plain-Python
source and its numba ``@njit`` compilation. Which one runs is controlled by

    SGDOL_DISABLE_NUMBA=1   (environment, read at import)

or at runtime via ``set_backend``. The two variants execute the same
floating-point operations in the same order, so their outputs are
bit-for-bit identical; ``benchmarks/compare_backends.py`` measures the
speed difference.

The noise argument holds raw standard normals of shape (T, 2, d), scaled
inside by the per-coordinate sigma. Pre-generating the whole array consumes
the random stream exactly as the step-by-step oracle path does, so both
paths see identical gradient pairs under one stream.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    _HAVE_NUMBA = False

__all__ = ["numba_available", "numba_enabled", "set_backend", "get_kernel", "KERNEL_NAMES"]

_env_disabled = os.environ.get("SGDOL_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")
_use_numba = _HAVE_NUMBA and not _env_disabled


def numba_available() -> bool:
    return _HAVE_NUMBA


def numba_enabled() -> bool:
    """True when kernels dispatch to their JIT-compiled variants."""
    return _use_numba


def set_backend(use_numba: bool):
    """Select the JIT or plain-Python kernel variants at runtime."""
    global _use_numba
    if use_numba and not _HAVE_NUMBA:
        raise RuntimeError("numba is not available in this environment")
    _use_numba = bool(use_numba)


# Oracle ids shared with optimizers.run
ORACLE_ROSENBROCK = 0
ORACLE_QUADRATIC = 1


def _run_sgdol_global(oracle_id, diag, x, T, M, alpha, curv, sigma, noise, k_index, stride):
    """SGDOL with one global FTRL-learned stepsize.

    Returns recorded series plus the full per-step (eta, <g,g'>, ||g||^2,
    ||g'||^2) arrays needed for regret bookkeeping, the captured iterate
    x_k, and the final learner sums. x is updated in place.
    """
    d = x.shape[0]
    n_rec = (T + stride - 1) // stride
    rec_t = np.empty(n_rec, np.int64)
    rec_f = np.empty(n_rec)
    rec_gsq = np.empty(n_rec)
    rec_eta = np.empty(n_rec)
    rec_surr = np.empty(n_rec)
    rec_cum = np.empty(n_rec)
    etas = np.empty(T)
    inners = np.empty(T)
    sqs = np.empty(T)
    sqps = np.empty(T)
    grad = np.empty(d)
    g = np.empty(d)
    gp = np.empty(d)
    xk = np.empty(d)
    si = 0.0
    ss = 0.0
    cum = 0.0
    hi = 2.0 / M
    ri = 0
    for t0 in range(T):
        if oracle_id == ORACLE_ROSENBROCK:
            c = x[1] - x[0] * x[0]
            grad[0] = -2.0 * (1.0 - x[0]) - 400.0 * x[0] * c
            grad[1] = 200.0 * c
        else:
            for i in range(d):
                grad[i] = diag[i] * x[i]
        if t0 + 1 == k_index:
            for i in range(d):
                xk[i] = x[i]
        rec_here = t0 % stride == 0
        if rec_here:
            if oracle_id == ORACLE_ROSENBROCK:
                a1 = 1.0 - x[0]
                cc = x[1] - x[0] * x[0]
                fv = a1 * a1 + 100.0 * (cc * cc)
            else:
                acc = 0.0
                for i in range(d):
                    acc += diag[i] * (x[i] * x[i])
                fv = 0.5 * acc
            gsq = 0.0
            for i in range(d):
                gsq += grad[i] * grad[i]
        eta = (alpha + si) / (alpha + curv * ss) / M
        if eta < 0.0:
            eta = 0.0
        elif eta > hi:
            eta = hi
        for i in range(d):
            g[i] = grad[i] + sigma[i] * noise[t0, 0, i]
            gp[i] = grad[i] + sigma[i] * noise[t0, 1, i]
        for i in range(d):
            x[i] = x[i] - eta * g[i]
        b = 0.0
        a = 0.0
        ap = 0.0
        for i in range(d):
            b += g[i] * gp[i]
            a += g[i] * g[i]
            ap += gp[i] * gp[i]
        loss = 0.5 * curv * M * eta * eta * a - eta * b
        cum += loss
        si += b
        ss += a
        etas[t0] = eta
        inners[t0] = b
        sqs[t0] = a
        sqps[t0] = ap
        if rec_here:
            rec_t[ri] = t0 + 1
            rec_f[ri] = fv
            rec_gsq[ri] = gsq
            rec_eta[ri] = eta
            rec_surr[ri] = loss
            rec_cum[ri] = cum
            ri += 1
    return rec_t, rec_f, rec_gsq, rec_eta, rec_surr, rec_cum, xk, etas, inners, sqs, sqps, si, ss


def _run_sgdol_coord(oracle_id, diag, x, T, M, alpha, sigma, noise, k_index, stride):
    """SGDOL with one FTRL learner per coordinate. x is updated in place."""
    d = x.shape[0]
    n_rec = (T + stride - 1) // stride
    rec_t = np.empty(n_rec, np.int64)
    rec_f = np.empty(n_rec)
    rec_gsq = np.empty(n_rec)
    rec_eta_mean = np.empty(n_rec)
    rec_eta = np.empty((n_rec, d))
    rec_surr = np.empty(n_rec)
    rec_cum = np.empty(n_rec)
    grad = np.empty(d)
    g = np.empty(d)
    gp = np.empty(d)
    eta = np.empty(d)
    xk = np.empty(d)
    si = np.zeros(d)
    ss = np.zeros(d)
    cum = 0.0
    hi = 2.0 / M
    ri = 0
    for t0 in range(T):
        if oracle_id == ORACLE_ROSENBROCK:
            c = x[1] - x[0] * x[0]
            grad[0] = -2.0 * (1.0 - x[0]) - 400.0 * x[0] * c
            grad[1] = 200.0 * c
        else:
            for i in range(d):
                grad[i] = diag[i] * x[i]
        if t0 + 1 == k_index:
            for i in range(d):
                xk[i] = x[i]
        rec_here = t0 % stride == 0
        if rec_here:
            if oracle_id == ORACLE_ROSENBROCK:
                a1 = 1.0 - x[0]
                cc = x[1] - x[0] * x[0]
                fv = a1 * a1 + 100.0 * (cc * cc)
            else:
                acc = 0.0
                for i in range(d):
                    acc += diag[i] * (x[i] * x[i])
                fv = 0.5 * acc
            gsq = 0.0
            for i in range(d):
                gsq += grad[i] * grad[i]
        for i in range(d):
            raw = (alpha + si[i]) / (alpha + ss[i]) / M
            if raw < 0.0:
                raw = 0.0
            elif raw > hi:
                raw = hi
            eta[i] = raw
        loss = 0.0
        for i in range(d):
            g[i] = grad[i] + sigma[i] * noise[t0, 0, i]
            gp[i] = grad[i] + sigma[i] * noise[t0, 1, i]
        for i in range(d):
            x[i] = x[i] - eta[i] * g[i]
        for i in range(d):
            b = g[i] * gp[i]
            a = g[i] * g[i]
            loss += 0.5 * M * eta[i] * eta[i] * a - eta[i] * b
            si[i] += b
            ss[i] += a
        cum += loss
        if rec_here:
            rec_t[ri] = t0 + 1
            rec_f[ri] = fv
            rec_gsq[ri] = gsq
            mean_eta = 0.0
            for i in range(d):
                rec_eta[ri, i] = eta[i]
                mean_eta += eta[i]
            rec_eta_mean[ri] = mean_eta / d
            rec_surr[ri] = loss
            rec_cum[ri] = cum
            ri += 1
    return rec_t, rec_f, rec_gsq, rec_eta_mean, rec_eta, rec_surr, rec_cum, xk, si, ss


def _run_sgd(oracle_id, diag, x, T, lr, sigma, noise, k_index, stride):
    """Constant-stepsize SGD (also covers the precomputed-stepsize variant)."""
    d = x.shape[0]
    n_rec = (T + stride - 1) // stride
    rec_t = np.empty(n_rec, np.int64)
    rec_f = np.empty(n_rec)
    rec_gsq = np.empty(n_rec)
    grad = np.empty(d)
    xk = np.empty(d)
    ri = 0
    for t0 in range(T):
        if oracle_id == ORACLE_ROSENBROCK:
            c = x[1] - x[0] * x[0]
            grad[0] = -2.0 * (1.0 - x[0]) - 400.0 * x[0] * c
            grad[1] = 200.0 * c
        else:
            for i in range(d):
                grad[i] = diag[i] * x[i]
        if t0 + 1 == k_index:
            for i in range(d):
                xk[i] = x[i]
        if t0 % stride == 0:
            if oracle_id == ORACLE_ROSENBROCK:
                a1 = 1.0 - x[0]
                cc = x[1] - x[0] * x[0]
                fv = a1 * a1 + 100.0 * (cc * cc)
            else:
                acc = 0.0
                for i in range(d):
                    acc += diag[i] * (x[i] * x[i])
                fv = 0.5 * acc
            gsq = 0.0
            for i in range(d):
                gsq += grad[i] * grad[i]
            rec_t[ri] = t0 + 1
            rec_f[ri] = fv
            rec_gsq[ri] = gsq
            ri += 1
        for i in range(d):
            gi = grad[i] + sigma[i] * noise[t0, 0, i]
            x[i] = x[i] - lr * gi
    return rec_t, rec_f, rec_gsq, xk


def _run_adagrad_global(oracle_id, diag, x, T, lr, sigma, noise, k_index, stride):
    """AdaGrad with one shared stepsize lr / sqrt(sum of squared grad norms)."""
    d = x.shape[0]
    n_rec = (T + stride - 1) // stride
    rec_t = np.empty(n_rec, np.int64)
    rec_f = np.empty(n_rec)
    rec_gsq = np.empty(n_rec)
    rec_eta = np.empty(n_rec)
    grad = np.empty(d)
    g = np.empty(d)
    xk = np.empty(d)
    accum = 0.0
    ri = 0
    for t0 in range(T):
        if oracle_id == ORACLE_ROSENBROCK:
            c = x[1] - x[0] * x[0]
            grad[0] = -2.0 * (1.0 - x[0]) - 400.0 * x[0] * c
            grad[1] = 200.0 * c
        else:
            for i in range(d):
                grad[i] = diag[i] * x[i]
        if t0 + 1 == k_index:
            for i in range(d):
                xk[i] = x[i]
        rec_here = t0 % stride == 0
        if rec_here:
            if oracle_id == ORACLE_ROSENBROCK:
                a1 = 1.0 - x[0]
                cc = x[1] - x[0] * x[0]
                fv = a1 * a1 + 100.0 * (cc * cc)
            else:
                acc = 0.0
                for i in range(d):
                    acc += diag[i] * (x[i] * x[i])
                fv = 0.5 * acc
            gsq = 0.0
            for i in range(d):
                gsq += grad[i] * grad[i]
        a = 0.0
        for i in range(d):
            g[i] = grad[i] + sigma[i] * noise[t0, 0, i]
            a += g[i] * g[i]
        accum += a
        if accum > 0.0:
            coef = lr / math.sqrt(accum)
        else:
            coef = 0.0
        for i in range(d):
            x[i] = x[i] - coef * g[i]
        if rec_here:
            rec_t[ri] = t0 + 1
            rec_f[ri] = fv
            rec_gsq[ri] = gsq
            rec_eta[ri] = coef
            ri += 1
    return rec_t, rec_f, rec_gsq, rec_eta, xk, accum


def _run_adagrad_coord(oracle_id, diag, x, T, lr, sigma, noise, k_index, stride):
    """AdaGrad with a per-coordinate accumulator."""
    d = x.shape[0]
    n_rec = (T + stride - 1) // stride
    rec_t = np.empty(n_rec, np.int64)
    rec_f = np.empty(n_rec)
    rec_gsq = np.empty(n_rec)
    rec_eta_mean = np.empty(n_rec)
    rec_eta = np.empty((n_rec, d))
    grad = np.empty(d)
    g = np.empty(d)
    coef = np.empty(d)
    xk = np.empty(d)
    accum = np.zeros(d)
    ri = 0
    for t0 in range(T):
        if oracle_id == ORACLE_ROSENBROCK:
            c = x[1] - x[0] * x[0]
            grad[0] = -2.0 * (1.0 - x[0]) - 400.0 * x[0] * c
            grad[1] = 200.0 * c
        else:
            for i in range(d):
                grad[i] = diag[i] * x[i]
        if t0 + 1 == k_index:
            for i in range(d):
                xk[i] = x[i]
        rec_here = t0 % stride == 0
        if rec_here:
            if oracle_id == ORACLE_ROSENBROCK:
                a1 = 1.0 - x[0]
                cc = x[1] - x[0] * x[0]
                fv = a1 * a1 + 100.0 * (cc * cc)
            else:
                acc = 0.0
                for i in range(d):
                    acc += diag[i] * (x[i] * x[i])
                fv = 0.5 * acc
            gsq = 0.0
            for i in range(d):
                gsq += grad[i] * grad[i]
        for i in range(d):
            g[i] = grad[i] + sigma[i] * noise[t0, 0, i]
            accum[i] += g[i] * g[i]
            if accum[i] > 0.0:
                coef[i] = lr / math.sqrt(accum[i])
            else:
                coef[i] = 0.0
            x[i] = x[i] - coef[i] * g[i]
        if rec_here:
            rec_t[ri] = t0 + 1
            rec_f[ri] = fv
            rec_gsq[ri] = gsq
            mean_eta = 0.0
            for i in range(d):
                rec_eta[ri, i] = coef[i]
                mean_eta += coef[i]
            rec_eta_mean[ri] = mean_eta / d
            ri += 1
    return rec_t, rec_f, rec_gsq, rec_eta_mean, rec_eta, xk, accum


def _run_adam(oracle_id, diag, x, T, lr, beta1, beta2, eps, sigma, noise, k_index, stride):
    """Adam with standard bias-corrected moment estimates."""
    d = x.shape[0]
    n_rec = (T + stride - 1) // stride
    rec_t = np.empty(n_rec, np.int64)
    rec_f = np.empty(n_rec)
    rec_gsq = np.empty(n_rec)
    grad = np.empty(d)
    g = np.empty(d)
    m = np.zeros(d)
    v = np.zeros(d)
    xk = np.empty(d)
    p1 = 1.0
    p2 = 1.0
    ri = 0
    for t0 in range(T):
        if oracle_id == ORACLE_ROSENBROCK:
            c = x[1] - x[0] * x[0]
            grad[0] = -2.0 * (1.0 - x[0]) - 400.0 * x[0] * c
            grad[1] = 200.0 * c
        else:
            for i in range(d):
                grad[i] = diag[i] * x[i]
        if t0 + 1 == k_index:
            for i in range(d):
                xk[i] = x[i]
        if t0 % stride == 0:
            if oracle_id == ORACLE_ROSENBROCK:
                a1 = 1.0 - x[0]
                cc = x[1] - x[0] * x[0]
                fv = a1 * a1 + 100.0 * (cc * cc)
            else:
                acc = 0.0
                for i in range(d):
                    acc += diag[i] * (x[i] * x[i])
                fv = 0.5 * acc
            gsq = 0.0
            for i in range(d):
                gsq += grad[i] * grad[i]
            rec_t[ri] = t0 + 1
            rec_f[ri] = fv
            rec_gsq[ri] = gsq
            ri += 1
        p1 *= beta1
        p2 *= beta2
        bc1 = 1.0 - p1
        bc2 = 1.0 - p2
        for i in range(d):
            g[i] = grad[i] + sigma[i] * noise[t0, 0, i]
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i]
            v[i] = beta2 * v[i] + (1.0 - beta2) * (g[i] * g[i])
            x[i] = x[i] - lr * (m[i] / bc1) / (math.sqrt(v[i] / bc2) + eps)
    return rec_t, rec_f, rec_gsq, xk, m, v, p1, p2


_IMPLS = {
    "sgdol_global": _run_sgdol_global,
    "sgdol_coord": _run_sgdol_coord,
    "sgd": _run_sgd,
    "adagrad_global": _run_adagrad_global,
    "adagrad_coord": _run_adagrad_coord,
    "adam": _run_adam,
}

KERNEL_NAMES = tuple(_IMPLS)

if _HAVE_NUMBA:
    _JITTED = {name: numba.njit(cache=True)(fn) for name, fn in _IMPLS.items()}
else:  # pragma: no cover
    _JITTED = {}


def get_kernel(name: str):
    """Return the active variant (JIT or plain Python) of the named kernel."""
    if _use_numba:
        return _JITTED[name]
    return _IMPLS[name]
