"""Inner-loop kernels with an optional numba path.

Every kernel exists twice: a numba ``@njit`` loop version and a vectorised
numpy version.  Which one the public names point to is decided once at import
time:

* ``THERMOSEP_DISABLE_NUMBA=1`` forces the numpy path,
* otherwise numba is used when it can be imported.

Both variants are always importable under explicit names (``*_numba`` /
``*_numpy``) so tests and ``benchmarks/bench_kernels.py`` can compare them.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("THERMOSEP_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:  # pragma: no cover - exercised implicitly
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


USE_NUMBA = HAVE_NUMBA and not _DISABLED


# ---------------------------------------------------------------------------
# partial transpose on the second factor
# ---------------------------------------------------------------------------


def partial_transpose_numpy(rho: np.ndarray, da: int, db: int) -> np.ndarray:
    t = rho.reshape(da, db, da, db)
    return t.transpose(0, 3, 2, 1).reshape(da * db, da * db)


@njit(cache=True, nogil=True)
def partial_transpose_numba(rho, da, db):
    n = da * db
    out = np.empty((n, n), dtype=rho.dtype)
    for i in range(da):
        for a in range(db):
            r = i * db + a
            for j in range(da):
                for b in range(db):
                    out[r, j * db + b] = rho[i * db + b, j * db + a]
    return out


# ---------------------------------------------------------------------------
# realignment  R[(i,j),(a,b)] = rho[(i,a),(j,b)]
# ---------------------------------------------------------------------------


def realign_numpy(rho: np.ndarray, da: int, db: int) -> np.ndarray:
    t = rho.reshape(da, db, da, db)
    return t.transpose(0, 2, 1, 3).reshape(da * da, db * db)


@njit(cache=True, nogil=True)
def realign_numba(rho, da, db):
    out = np.empty((da * da, db * db), dtype=rho.dtype)
    for i in range(da):
        for a in range(db):
            for j in range(da):
                for b in range(db):
                    out[i * da + j, a * db + b] = rho[i * db + a, j * db + b]
    return out


# ---------------------------------------------------------------------------
# CHSH see-saw: alternating sign(.) updates of dichotomic observables
# ---------------------------------------------------------------------------


def _sign_numpy(x):
    w, v = np.linalg.eigh(x)
    s = np.where(w >= 0.0, 1.0, -1.0)
    return (v * s) @ v.conj().T


def _chsh_value_numpy(t, a1, a2, b1, b2):
    # t[i, a, j, b] = rho[(i,a),(j,b)];  <A x B> = sum t[i,a,j,b] A[j,i] B[b,a]
    def corr(A, B):
        return np.einsum("iajb,ji,ba->", t, A, B).real

    return corr(a1, b1) + corr(a1, b2) + corr(a2, b1) - corr(a2, b2)


def chsh_ascent_numpy(rho, da, db, a1, a2, b1, b2, max_iter, tol):
    t = rho.reshape(da, db, da, db)
    value = _chsh_value_numpy(t, a1, a2, b1, b2)
    it = 0
    for it in range(1, max_iter + 1):
        xp = np.einsum("iajb,ba->ij", t, b1 + b2)
        xm = np.einsum("iajb,ba->ij", t, b1 - b2)
        a1 = _sign_numpy(xp)
        a2 = _sign_numpy(xm)
        yp = np.einsum("iajb,ji->ab", t, a1 + a2)
        ym = np.einsum("iajb,ji->ab", t, a1 - a2)
        b1 = _sign_numpy(yp)
        b2 = _sign_numpy(ym)
        new = _chsh_value_numpy(t, a1, a2, b1, b2)
        if abs(new - value) <= tol:
            value = new
            break
        value = new
    return value, it, a1, a2, b1, b2


@njit(cache=True, nogil=True)
def _sign_numba(x):
    w, v = np.linalg.eigh(x)
    n = x.shape[0]
    out = np.zeros((n, n), dtype=np.complex128)
    for k in range(n):
        s = 1.0 if w[k] >= 0.0 else -1.0
        for i in range(n):
            vi = v[i, k] * s
            for j in range(n):
                out[i, j] += vi * np.conj(v[j, k])
    return out


@njit(cache=True, nogil=True)
def _reduce_b_numba(rho, da, db, B):
    # X[i,j] = sum_{a,b} rho[(i,a),(j,b)] B[b,a]
    X = np.zeros((da, da), dtype=np.complex128)
    for i in range(da):
        for j in range(da):
            acc = 0j
            for a in range(db):
                for b in range(db):
                    acc += rho[i * db + a, j * db + b] * B[b, a]
            X[i, j] = acc
    return X


@njit(cache=True, nogil=True)
def _reduce_a_numba(rho, da, db, A):
    # Y[a,b] = sum_{i,j} rho[(i,a),(j,b)] A[j,i]
    Y = np.zeros((db, db), dtype=np.complex128)
    for a in range(db):
        for b in range(db):
            acc = 0j
            for i in range(da):
                for j in range(da):
                    acc += rho[i * db + a, j * db + b] * A[j, i]
            Y[a, b] = acc
    return Y


@njit(cache=True, nogil=True)
def _trace_prod_numba(X, A):
    n = X.shape[0]
    acc = 0j
    for i in range(n):
        for j in range(n):
            acc += X[i, j] * A[j, i]
    return acc.real


@njit(cache=True, nogil=True)
def _chsh_value_numba(rho, da, db, a1, a2, b1, b2):
    xp = _reduce_b_numba(rho, da, db, b1 + b2)
    xm = _reduce_b_numba(rho, da, db, b1 - b2)
    return _trace_prod_numba(xp, a1) + _trace_prod_numba(xm, a2)


@njit(cache=True, nogil=True)
def chsh_ascent_numba(rho, da, db, a1, a2, b1, b2, max_iter, tol):
    value = _chsh_value_numba(rho, da, db, a1, a2, b1, b2)
    it = 0
    for it in range(1, max_iter + 1):
        a1 = _sign_numba(_reduce_b_numba(rho, da, db, b1 + b2))
        a2 = _sign_numba(_reduce_b_numba(rho, da, db, b1 - b2))
        b1 = _sign_numba(_reduce_a_numba(rho, da, db, a1 + a2))
        b2 = _sign_numba(_reduce_a_numba(rho, da, db, a1 - a2))
        new = _chsh_value_numba(rho, da, db, a1, a2, b1, b2)
        if abs(new - value) <= tol:
            value = new
            break
        value = new
    return value, it, a1, a2, b1, b2


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

if USE_NUMBA:
    partial_transpose = partial_transpose_numba
    realign = realign_numba
    chsh_ascent = chsh_ascent_numba
else:
    partial_transpose = partial_transpose_numpy
    realign = realign_numpy
    chsh_ascent = chsh_ascent_numpy


def backend() -> str:
    """Name of the active kernel backend (``"numba"`` or ``"numpy"``)."""
    return "numba" if USE_NUMBA else "numpy"
