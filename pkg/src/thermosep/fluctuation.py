"""Mean-field fluctuation algebras, their linearised dynamics and Gaussian states.

Coordinates are ordered ``(S_rx, S_ry, S_lx, S_ly)``.  The commutators are
``[S_i, S_j] = i Omega[i, j]`` with

    Omega = blockdiag((1 - alpha) s_z J, alpha s_z J),    J = [[0, 1], [-1, 0]].

A linear flow ``dS/dt = G S`` is generated by the quadratic Hamiltonian
``H = 1/2 S^T M S`` with ``M = Omega^{-1} G``; it is Hamiltonian iff ``M`` is
symmetric.  For ``H = nu (x^2 + p^2)`` with ``[x, p] = i`` the thermal second
moments are ``<x^2> = <p^2> = coth(beta nu) / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize

from .records import ScanRecord
from .separability import Tag, Verdict
from .spin import meanfield_h2, site_operator, build_hamiltonian
from .thermal import Spectrum

J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])
STATE_TOL = 1e-10
NEAR_DEGENERATE = 1e-3


class FluctuationError(ValueError):
    """Degenerate algebra, unstable dynamics or a non-positive frequency."""


@dataclass(frozen=True)
class MeanFieldParams:
    c: float
    beta: float
    lam: float = 2.0
    alpha: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if math.isnan(self.beta) or self.beta < 0:
            raise ValueError(f"beta must be >= 0 (inf allowed), got {self.beta}")


# ---------------------------------------------------------------------------
# self-consistent single-site state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FixedPoint:
    s_z: float
    a_eff: float
    multiple: bool
    n_roots: int

    def __iter__(self):
        return iter((self.s_z, self.a_eff))


def _count_roots(g, n: int = 4001) -> int:
    s = np.linspace(-1.0, 1.0, n)
    v = g(s)
    sign = np.sign(v)
    return int(np.count_nonzero(sign == 0) + np.count_nonzero(sign[:-1] * sign[1:] < 0))


def selfconsistent_sz(
    c: float, beta: float, lam: float = 2.0, tol: float = 1e-13, max_iter: int = 10000, damping: float = 0.5
) -> FixedPoint:
    """Solve ``s = -tanh(beta (c + lam s))`` starting from ``s = 0``.

    Damped iteration first; bisection (brentq) on ``[-1, 1]`` if that stalls.
    ``beta = inf`` uses the closed-form ground-state limit.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if math.isnan(beta) or beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    if math.isinf(beta):
        if lam > 0 and abs(c) <= lam:
            s = -c / lam
            return FixedPoint(s, c + lam * s, False, 1)
        s = -1.0 if c >= 0 else 1.0
        return FixedPoint(s, c + lam * s, lam < 0 and abs(c) < abs(lam), 1)

    def g(s):
        return s + np.tanh(beta * (c + lam * s))

    n_roots = _count_roots(g)
    s = 0.0
    for _ in range(max_iter):
        new = (1.0 - damping) * s - damping * math.tanh(beta * (c + lam * s))
        if abs(new - s) < 0.1 * tol:
            s = new
            break
        s = new
    if abs(g(s)) > tol:
        try:
            s = optimize.brentq(g, -1.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
        except ValueError as exc:
            raise FluctuationError(f"self-consistency failed for c={c}, beta={beta}, lambda={lam}") from exc
        if abs(g(s)) > tol:
            raise FluctuationError(f"self-consistency residual {abs(g(s)):.3g} above tol")
    return FixedPoint(float(s), float(c + lam * s), n_roots > 1, n_roots)


@dataclass
class FactorizationReport:
    n_values: list[int]
    connected: list[float]
    s_z: list[float]
    decreasing: bool

    def __bool__(self) -> bool:
        return self.decreasing


def factorized_state_check(
    c: float, beta: float, coupling: float = 1.0, n_values=(2, 4, 6, 8), slack: float = 1e-12
) -> FactorizationReport:
    """Largest connected two-site correlator of the finite-N Gibbs state versus N.

    Uses the all-to-all Hamiltonian ``c sum sigma_z + coupling/N sum_{k != l} sigma_k . sigma_l``.
    """
    conn, sz = [], []
    for n in n_values:
        if not 2 <= n <= 8:
            raise ValueError("factorization check supports 2 <= N <= 8")
        sp = Spectrum(build_hamiltonian(meanfield_h2(n, c=c, coupling=coupling)))
        rho = sp.gibbs(beta).matrix
        worst = 0.0
        for a in ("x", "y", "z"):
            A0 = site_operator(a, 0, n).matrix
            A1 = site_operator(a, 1, n).matrix
            e01 = np.trace(rho @ A0 @ A1).real
            e0 = np.trace(rho @ A0).real
            e1 = np.trace(rho @ A1).real
            worst = max(worst, abs(e01 - e0 * e1))
        conn.append(float(worst))
        sz.append(float(np.trace(rho @ site_operator("z", 0, n).matrix).real))
    dec = all(b <= a + slack for a, b in zip(conn, conn[1:]))
    return FactorizationReport(list(n_values), conn, sz, dec)


# ---------------------------------------------------------------------------
# algebra, generator, normal modes
# ---------------------------------------------------------------------------


@dataclass
class FluctuationAlgebra:
    s_z: float
    alpha: float
    symplectic_form: np.ndarray
    near_degenerate: bool = False

    @property
    def weights(self) -> tuple[float, float]:
        """Commutator weights ``(right, left)``."""
        return (1.0 - self.alpha) * self.s_z, self.alpha * self.s_z

    def canonical_map(self) -> np.ndarray:
        """``L`` with ``S = L q``, ``q`` canonical (``[x, p] = i`` per pair)."""
        out = []
        for w in self.weights:
            r = math.sqrt(abs(w))
            out += [r, math.copysign(r, w)]
        return np.diag(out)


def build_fluctuation_algebra(s_z: float, alpha: float) -> FluctuationAlgebra:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if s_z == 0.0 or abs(s_z) > 1.0:
        raise FluctuationError(f"degenerate fluctuation algebra: s_z = {s_z}")
    wr, wl = (1.0 - alpha) * s_z, alpha * s_z
    omega = np.zeros((4, 4))
    omega[:2, :2] = wr * J2
    omega[2:, 2:] = wl * J2
    near = min(abs(wr), abs(wl)) < NEAR_DEGENERATE
    return FluctuationAlgebra(float(s_z), float(alpha), omega, near)


def linearized_generator(c: float, s_z: float, alpha: float, lam: float = 2.0, raw: bool = False) -> np.ndarray:
    """Generator ``G`` of ``dS/dt = G S`` after replacing bulk z-sums by their means.

    Right block: ``dS_rx = -(c + lam alpha s) S_ry - lam (1-alpha) s S_ly`` and
    ``dS_ry = (c + lam alpha s) S_rx + lam (1-alpha) s S_lx``; the left block
    mirrors it with ``alpha -> 1 - alpha``.  ``raw=True`` keeps the printed
    index pattern, where both y-equations couple to the partner's y operator
    with a minus sign; that flow is not Hamiltonian.
    """
    wr, wl = lam * (1.0 - alpha) * s_z, lam * alpha * s_z
    fr, fl = c + lam * alpha * s_z, c + lam * (1.0 - alpha) * s_z
    G = np.zeros((4, 4))
    G[0, 1], G[0, 3] = -fr, -wr
    G[2, 3], G[2, 1] = -fl, -wl
    if raw:
        G[1, 0], G[1, 3] = fr, -wr
        G[3, 2], G[3, 1] = fl, -wl
    else:
        G[1, 0], G[1, 2] = fr, wr
        G[3, 2], G[3, 0] = fl, wl
    return G


def _check_flow(G: np.ndarray, omega: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    ev = np.linalg.eigvals(G)
    if np.max(np.abs(ev.real)) > tol:
        raise FluctuationError(f"non-oscillatory generator; spectrum {np.round(ev, 12).tolist()}")
    M = np.linalg.solve(omega, G)
    asym = float(np.max(np.abs(M - M.T)))
    if asym > 1e-9 * max(1.0, float(np.max(np.abs(M)))):
        raise FluctuationError(f"generator does not preserve the symplectic form (asymmetry {asym:.3g})")
    return 0.5 * (M + M.T)


@dataclass
class NormalModes:
    nu1: float
    nu2: float
    a1: float
    b1: float
    a2: float
    b2: float
    transform: np.ndarray = field(repr=False)  # rows give (x, p, y, q) in S-coordinates
    algebra: FluctuationAlgebra = field(repr=False)
    y_residual: float = 0.0

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([self.nu1, self.nu2])

    @property
    def orthogonality(self) -> float:
        return self.a1 * self.b1 + self.a2 * self.b2

    def generator(self) -> np.ndarray:
        """Rebuild ``G`` from ``H = nu1 (x^2 + p^2) + nu2 (y^2 + q^2)``."""
        D = np.diag([self.nu1, self.nu1, self.nu2, self.nu2]) * 2.0
        M = self.transform.T @ D @ self.transform
        return self.algebra.symplectic_form @ M


def _williamson(Mc: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``Mc = S^T diag(t1, t1, t2, t2) S`` with ``S J S^T = J``; needs ``Mc > 0``."""
    w = np.linalg.eigvalsh(Mc)
    if w[0] <= 1e-12 * max(1.0, abs(w[-1])):
        raise FluctuationError(
            f"zero or negative mode frequency: quadratic form eigenvalues {np.round(w, 12).tolist()}"
        )
    K = linalg.sqrtm(Mc).real
    K = 0.5 * (K + K.T)
    Jc = linalg.block_diag(J2, J2)
    A = K @ Jc @ K
    T, Z = linalg.schur(0.5 * (A - A.T), output="real")
    t = np.empty(2)
    for k in range(2):
        i = 2 * k
        t[k] = T[i, i + 1]
        if t[k] < 0:
            Z[:, [i, i + 1]] = Z[:, [i + 1, i]]
            t[k] = -t[k]
    order = np.argsort(t)
    perm = np.concatenate([[2 * k, 2 * k + 1] for k in order])
    Z, t = Z[:, perm], t[order]
    D = np.repeat(t, 2)
    S = (Z / np.sqrt(D)).T @ K
    return S, t


def normal_modes(G: np.ndarray, algebra: FluctuationAlgebra) -> NormalModes:
    """Symplectic diagonalisation of the flow ``G``.

    Each mode is rotated in its own phase plane so that ``x`` and ``y`` carry
    no ``S_ry`` component; ``(a_k, b_k)`` are then the ``S_rx`` and ``S_lx``
    coefficients.
    """
    omega = algebra.symplectic_form
    M = _check_flow(np.asarray(G, dtype=float), omega)
    L = algebra.canonical_map()
    Mc = L.T @ M @ L
    S, t = _williamson(0.5 * (Mc + Mc.T))
    T = S @ np.linalg.inv(L)
    resid = 0.0
    for k in range(2):
        x, p = T[2 * k].copy(), T[2 * k + 1].copy()
        phi = math.atan2(-x[1], p[1]) if abs(p[1]) + abs(x[1]) > 0 else 0.0
        co, si = math.cos(phi), math.sin(phi)
        T[2 * k] = co * x + si * p
        T[2 * k + 1] = -si * x + co * p
        if T[2 * k, 0] < 0 or (T[2 * k, 0] == 0 and T[2 * k, 2] < 0):
            T[2 * k : 2 * k + 2] *= -1.0
        resid = max(resid, abs(T[2 * k, 1]), abs(T[2 * k, 3]))
    nu = t / 2.0
    return NormalModes(
        float(nu[0]), float(nu[1]), float(T[0, 0]), float(T[0, 2]), float(T[2, 0]), float(T[2, 2]),
        T, algebra, float(resid),
    )


# ---------------------------------------------------------------------------
# Gaussian states and separability tests
# ---------------------------------------------------------------------------


@dataclass
class GaussianState:
    mean: np.ndarray
    covariance: np.ndarray

    def uncertainty_min_eig(self, algebra: FluctuationAlgebra) -> float:
        return float(np.linalg.eigvalsh(self.covariance + 0.5j * algebra.symplectic_form)[0])


def _half_coth(x: float) -> float:
    if math.isinf(x):
        return 0.5
    return 0.5 / math.tanh(x)


def gaussian_kms_state(modes: NormalModes, beta: float) -> GaussianState:
    """Thermal (or ground, ``beta = inf``) state of the two oscillators."""
    if modes.nu1 <= 0 or modes.nu2 <= 0:
        raise FluctuationError("frequencies must be positive")
    if math.isnan(beta) or beta <= 0:
        raise ValueError(f"beta must be > 0 or inf, got {beta}")
    d = [_half_coth(beta * modes.nu1)] * 2 + [_half_coth(beta * modes.nu2)] * 2
    Tinv = np.linalg.inv(modes.transform)
    V = Tinv @ np.diag(d) @ Tinv.T
    V = 0.5 * (V + V.T)
    state = GaussianState(np.zeros(4), V)
    lo = state.uncertainty_min_eig(modes.algebra)
    if lo < -STATE_TOL:
        raise FluctuationError(f"covariance violates the uncertainty constraint (min eig {lo:.3g})")
    return state


def uncertainty_check(state: GaussianState, algebra: FluctuationAlgebra, tol: float = STATE_TOL) -> bool:
    V = state.covariance
    wr, wl = algebra.weights
    return bool(V[0, 0] + V[1, 1] >= abs(wr) - tol and V[2, 2] + V[3, 3] >= abs(wl) - tol)


def inequality_23(
    state: GaussianState, s_z: float, variant: str = "corrected", tol: float = STATE_TOL
) -> tuple[float, float, bool]:
    """``<(S_lx + S_rx)^2> + <(S_ly - S_ry)^2> >= |s_z|`` for separable states.

    ``variant="paper_literal"`` replaces the second combination by ``S_ly - S_lx``.
    """
    u = np.array([1.0, 0.0, 1.0, 0.0])
    if variant == "corrected":
        v = np.array([0.0, -1.0, 0.0, 1.0])
    elif variant == "paper_literal":
        v = np.array([0.0, 0.0, -1.0, 1.0])
    else:
        raise ValueError(f"unknown variant {variant!r}")
    V = state.covariance
    lhs = float(u @ V @ u + v @ V @ v)
    rhs = abs(float(s_z))
    return lhs, rhs, lhs >= rhs - tol


def gaussian_ppt(state: GaussianState, algebra: FluctuationAlgebra, tol: float = STATE_TOL) -> Verdict:
    """Time-reverse the left pair (``S_ly -> -S_ly``) and test the uncertainty constraint."""
    P = np.diag([1.0, 1.0, 1.0, -1.0])
    Vt = P @ state.covariance @ P
    lo = float(np.linalg.eigvalsh(Vt + 0.5j * algebra.symplectic_form)[0])
    return Verdict.from_min_eig(lo, tol)


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def sweep_point(c: float, lam: float, alpha: float, beta: float, raw: bool = False) -> ScanRecord:
    key = {"c": float(c), "lambda": float(lam), "alpha": float(alpha), "beta": float(beta)}
    rec = ScanRecord("fluctuation_sweep", key)
    try:
        if beta == 0:
            raise FluctuationError("beta = 0 gives s_z = 0, a degenerate algebra")
        fp = selfconsistent_sz(c, beta, lam)
        rec.values.update(s_z=fp.s_z, a_eff=fp.a_eff)
        alg = build_fluctuation_algebra(fp.s_z, alpha)
        G = linearized_generator(c, fp.s_z, alpha, lam, raw=raw)
        modes = normal_modes(G, alg)
        st = gaussian_kms_state(modes, beta)
        lhs, rhs, ok = inequality_23(st, fp.s_z, "corrected")
        llhs, _, lok = inequality_23(st, fp.s_z, "paper_literal")
        v = gaussian_ppt(st, alg)
        rec.values.update(
            nu1=modes.nu1, nu2=modes.nu2, a1b1_a2b2=modes.orthogonality,
            ineq23_lhs=lhs, ineq23_rhs=rhs, ineq23_holds=ok,
            ineq23_literal_lhs=llhs, ineq23_literal_holds=lok,
            uncertainty_ok=uncertainty_check(st, alg), gaussian_pt_min_eig=v.criterion_value,
        )
        rec.verdict = str(v.tag)
    except (FluctuationError, ValueError, np.linalg.LinAlgError) as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
    return rec


def alpha_beta_sweep(c: float, lam: float, alphas, betas, raw: bool = False) -> list[ScanRecord]:
    """Grid order: alpha outer, beta inner."""
    return [sweep_point(c, lam, a, b, raw) for a in alphas for b in betas]


def shipped_grid() -> dict:
    """Parameter grid used by the acceptance sweep and ``configs/fluctuation_sweep.json``."""
    return {
        "c": [0.2, 1.0],
        "lambda": [1.0, 2.0],
        "alpha": [round(0.1 * k, 1) for k in range(1, 10)],
        "beta": [float(b) for b in np.geomspace(0.2, 20.0, 12)] + [math.inf],
    }


__all__ = [
    "FactorizationReport", "FixedPoint", "FluctuationAlgebra", "FluctuationError", "GaussianState",
    "MeanFieldParams", "NormalModes", "Tag", "alpha_beta_sweep", "build_fluctuation_algebra",
    "factorized_state_check", "gaussian_kms_state", "gaussian_ppt", "inequality_23",
    "linearized_generator", "normal_modes", "selfconsistent_sz", "shipped_grid", "sweep_point",
    "uncertainty_check",
]
