"""Quasifree (Gaussian) fermion and boson states on a finite mode space.

Conventions
-----------
The symbol ``A`` is defined by ``w(a*(f) a(g)) = <g|A|f>``; in the site basis
``w(a*_x a_y) = A[y, x]``.  Together with the pairing ``B`` it forms the
generalised symbol

    Gamma = [[A, B], [B^dagger, 1 -/+ conj(A)]]      (- fermions, + bosons)

which is positive for every state.  A Bogoliubov map ``alpha' = W alpha``
acting on ``alpha = (a_1..a_n, a*_1..a*_n)`` sends ``Gamma -> W Gamma W^dagger``.

Partial transposition on region 2 swaps the roles of ``g`` and ``conj(g)`` in
every entry that couples region 1 to region 2 and conjugates the region-2
block.  For ``B = 0`` this yields the two corner blocks

    [[A11, A12], [A21, 1 - A22]]   and   [[A22, A21], [A12, 1 - A11]]

(with ``1 + A`` for bosons); positivity of both is the scalar condition
``a11 (1 - a22) >= |a12|^2`` read as an operator inequality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from .records import ScanRecord
from .separability import PPT_TOL, Tag, Verdict


@dataclass
class OneParticleHamiltonian:
    V: np.ndarray
    labels: list = field(default_factory=list)

    def __post_init__(self):
        self.V = np.asarray(self.V, dtype=complex)
        if self.V.ndim != 2 or self.V.shape[0] != self.V.shape[1]:
            raise ValueError("V must be square")
        if np.max(np.abs(self.V - self.V.conj().T), initial=0.0) > 1e-12:
            raise ValueError("V is not Hermitian")
        if not self.labels:
            self.labels = list(range(self.V.shape[0]))

    @property
    def n(self) -> int:
        return self.V.shape[0]


def hopping_chain(n: int, t: float = 1.0, onsite=0.0, periodic: bool = False) -> OneParticleHamiltonian:
    """Nearest-neighbour hopping ``-t`` with on-site energies (scalar or length-n)."""
    if n < 2:
        raise ValueError("a chain needs n >= 2")
    V = np.zeros((n, n), dtype=complex)
    V[np.diag_indices(n)] = np.broadcast_to(np.asarray(onsite, dtype=float), (n,))
    for k in range(n - 1):
        V[k, k + 1] = V[k + 1, k] = -t
    if periodic and n > 2:
        V[0, n - 1] = V[n - 1, 0] = -t
    return OneParticleHamiltonian(V)


def _hermitian(V) -> np.ndarray:
    V = V.V if isinstance(V, OneParticleHamiltonian) else np.asarray(V, dtype=complex)
    if np.max(np.abs(V - V.conj().T), initial=0.0) > 1e-12:
        raise ValueError("V is not Hermitian")
    return V


@dataclass
class QuasifreeSymbol:
    A: np.ndarray
    B: np.ndarray
    statistics: str  # "fermi" or "bose"

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=complex)
        self.B = np.zeros_like(self.A) if self.B is None else np.asarray(self.B, dtype=complex)
        if self.statistics not in ("fermi", "bose"):
            raise ValueError(f"statistics must be 'fermi' or 'bose', got {self.statistics!r}")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def sign(self) -> float:
        return -1.0 if self.statistics == "fermi" else 1.0

    def gamma(self) -> np.ndarray:
        n = self.n
        top = np.hstack([self.A, self.B])
        bottom = np.hstack([self.B.conj().T, np.eye(n) + self.sign * self.A.conj()])
        return np.vstack([top, bottom])

    @classmethod
    def from_gamma(cls, gamma: np.ndarray, statistics: str) -> "QuasifreeSymbol":
        n = gamma.shape[0] // 2
        return cls(gamma[:n, :n].copy(), gamma[:n, n:].copy(), statistics)

    def check(self, tol: float = 1e-10) -> None:
        if np.max(np.abs(self.A - self.A.conj().T), initial=0.0) > tol:
            raise ValueError("A is not Hermitian")
        w = np.linalg.eigvalsh(self.A)
        if w[0] < -tol:
            raise ValueError(f"A has negative eigenvalue {w[0]:.3g}")
        if self.statistics == "fermi" and w[-1] > 1 + tol:
            raise ValueError(f"fermionic A exceeds 1 ({w[-1]:.3g})")
        g = self.gamma()
        lo = np.linalg.eigvalsh(0.5 * (g + g.conj().T))[0]
        if lo < -tol:
            raise ValueError(f"generalised symbol is not positive (min eig {lo:.3g})")

    @property
    def gauge_invariant(self) -> bool:
        return bool(np.max(np.abs(self.B), initial=0.0) == 0.0)


def fermi_symbol(V, beta: float) -> QuasifreeSymbol:
    """``A = (1 + e^{beta V})^{-1}``; gauge invariant, so ``B = 0``."""
    V = _hermitian(V)
    if beta < 0 or not np.isfinite(beta):
        raise ValueError("beta must be finite and >= 0")
    e, U = np.linalg.eigh(V)
    occ = special.expit(-beta * e)
    A = (U * occ) @ U.conj().T
    return QuasifreeSymbol(0.5 * (A + A.conj().T), None, "fermi")


def bose_symbol(V, beta: float, mu: float) -> QuasifreeSymbol:
    """``A = (e^{beta V + mu} - 1)^{-1}``; needs ``beta V + mu > 0``."""
    V = _hermitian(V)
    e, U = np.linalg.eigh(V)
    x = beta * e + mu
    if x.min() <= 0:
        raise ValueError(f"Bose occupation diverges: beta*V + mu has eigenvalue {x.min():.3g} <= 0")
    occ = 1.0 / np.expm1(x)
    A = (U * occ) @ U.conj().T
    return QuasifreeSymbol(0.5 * (A + A.conj().T), None, "bose")


@dataclass(frozen=True)
class RegionProjection:
    S1: tuple[int, ...]
    S2: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "S1", tuple(int(i) for i in self.S1))
        object.__setattr__(self, "S2", tuple(int(i) for i in self.S2))
        if not self.S1 or not self.S2:
            raise ValueError("regions must be nonempty")
        if set(self.S1) & set(self.S2):
            raise ValueError(f"regions overlap: {self.S1} and {self.S2}")

    def check(self, n: int) -> None:
        for i in self.S1 + self.S2:
            if not 0 <= i < n:
                raise ValueError(f"mode {i} out of range for {n} modes")


def _regions(regions) -> RegionProjection:
    return regions if isinstance(regions, RegionProjection) else RegionProjection(*regions)


def transposed_gamma(sym: QuasifreeSymbol, regions) -> np.ndarray:
    """Generalised symbol of ``S1 + S2`` after partial transposition on ``S2``.

    Ordering of the result: ``(S1, S2, conj S1, conj S2)``.
    """
    reg = _regions(regions)
    reg.check(sym.n)
    idx = list(reg.S1) + list(reg.S2)
    n, m, m1 = sym.n, len(idx), len(reg.S1)
    full = sym.gamma()
    sel = idx + [n + i for i in idx]
    G = full[np.ix_(sel, sel)]
    in2 = np.zeros(2 * m, dtype=bool)
    in2[m1:m] = True
    in2[m + m1:] = True
    swap = np.arange(2 * m)
    swap[m1:m] = np.arange(m + m1, 2 * m)
    swap[m + m1:] = np.arange(m1, m)
    out = G.copy()
    one, two = ~in2, in2
    out[np.ix_(one, two)] = G[np.ix_(one, swap[two])]
    out[np.ix_(two, one)] = G[np.ix_(swap[two], one)]
    out[np.ix_(two, two)] = G[np.ix_(two, two)].conj()
    return out


def _blocks(sym: QuasifreeSymbol, regions, sign: float) -> tuple[np.ndarray, np.ndarray]:
    reg = _regions(regions)
    reg.check(sym.n)
    s1, s2 = list(reg.S1), list(reg.S2)
    A = sym.A
    A11, A12 = A[np.ix_(s1, s1)], A[np.ix_(s1, s2)]
    A21, A22 = A[np.ix_(s2, s1)], A[np.ix_(s2, s2)]
    I1, I2 = np.eye(len(s1)), np.eye(len(s2))
    m_fg = np.block([[A11, A12], [A21, I2 + sign * A22]])
    m_gf = np.block([[A22, A21], [A12, I1 + sign * A11]])
    return m_fg, m_gf


def fermion_pt_blocks(sym: QuasifreeSymbol, regions) -> tuple[np.ndarray, np.ndarray]:
    """Corner blocks of the partially transposed two-point matrix (``B = 0`` path)."""
    return _blocks(sym, regions, -1.0)


def _pt_verdict(sym: QuasifreeSymbol, regions, tol: float) -> Verdict:
    g = transposed_gamma(sym, regions)
    lo = float(np.linalg.eigvalsh(0.5 * (g + g.conj().T))[0])
    return Verdict.from_min_eig(lo, tol)


def fermion_pt_test(sym: QuasifreeSymbol, regions, tol: float = PPT_TOL) -> Verdict:
    """NPT iff the transposed two-point matrix has an eigenvalue below ``-tol``.

    ``PPT_pass`` means the pair is at least not distillably entangled.
    """
    if sym.statistics != "fermi":
        raise ValueError("fermion_pt_test needs a Fermi symbol")
    return _pt_verdict(sym, regions, tol)


def boson_pt_test(sym: QuasifreeSymbol, regions, tol: float = PPT_TOL) -> Verdict:
    if sym.statistics != "bose":
        raise ValueError("boson_pt_test needs a Bose symbol")
    return _pt_verdict(sym, regions, tol)


def boson_pt_blocks(sym: QuasifreeSymbol, regions) -> tuple[np.ndarray, np.ndarray]:
    return _blocks(sym, regions, 1.0)


# ---------------------------------------------------------------------------
# Bogoliubov transformations
# ---------------------------------------------------------------------------


def _check_bogoliubov(W: np.ndarray, statistics: str, atol: float = 1e-10) -> None:
    n = W.shape[0] // 2
    U, V = W[:n, :n], W[:n, n:]
    if not (np.allclose(W[n:, :n], V.conj(), atol=atol) and np.allclose(W[n:, n:], U.conj(), atol=atol)):
        raise ValueError("transformation does not map creation operators to adjoints of annihilators")
    if statistics == "fermi":
        ok = np.allclose(W @ W.conj().T, np.eye(2 * n), atol=atol)
    else:
        J = np.diag(np.r_[np.ones(n), -np.ones(n)])
        ok = np.allclose(W @ J @ W.conj().T, J, atol=atol)
    if not ok:
        raise ValueError(f"transformation does not preserve the {'CAR' if statistics == 'fermi' else 'CCR'}")


def bogoliubov_transform(sym: QuasifreeSymbol, W: np.ndarray) -> QuasifreeSymbol:
    W = np.asarray(W, dtype=complex)
    if W.shape != (2 * sym.n, 2 * sym.n):
        raise ValueError(f"W must be {2 * sym.n} x {2 * sym.n}")
    _check_bogoliubov(W, sym.statistics)
    g = W @ sym.gamma() @ W.conj().T
    return QuasifreeSymbol.from_gamma(0.5 * (g + g.conj().T), sym.statistics)


def bogoliubov_matrix(n: int, theta: Sequence[tuple[int, int, float]], statistics: str) -> np.ndarray:
    """Product of elementary mode-pair mixings, applied left to right.

    Fermions: ``b_i = cos t a_i + sin t a*_j``, ``b_j = cos t a_j - sin t a*_i``
    (``i == j`` is a particle-hole flip and needs ``sin t cos t = 0``).
    Bosons: ``b_i = cosh r a_i + sinh r a*_j``, ``b_j = cosh r a_j + sinh r a*_i``.
    """
    W = np.eye(2 * n, dtype=complex)
    for i, j, t in theta:
        E = np.eye(2 * n, dtype=complex)
        if statistics == "fermi":
            c, s = np.cos(t), np.sin(t)
            s_j = -s
        else:
            c, s = np.cosh(t), np.sinh(t)
            s_j = s
        if i == j:
            E[i, i] = E[n + i, n + i] = c
            E[i, n + i] = E[n + i, i] = s
        else:
            E[i, i] = E[j, j] = E[n + i, n + i] = E[n + j, n + j] = c
            E[i, n + j] = E[n + i, j] = s
            E[j, n + i] = E[n + j, i] = s_j
        W = E @ W
    return W


def bogoliubov_rotate(sym: QuasifreeSymbol, theta: Sequence[tuple[int, int, float]]) -> QuasifreeSymbol:
    return bogoliubov_transform(sym, bogoliubov_matrix(sym.n, theta, sym.statistics))


def inverse_angles(theta: Sequence[tuple[int, int, float]]) -> list[tuple[int, int, float]]:
    return [(i, j, -t) for i, j, t in reversed(list(theta))]


def two_mode_squeezed(r: float) -> QuasifreeSymbol:
    """Bose symbol of the two-mode squeezed vacuum (an entangled test state)."""
    vac = QuasifreeSymbol(np.zeros((2, 2)), None, "bose")
    return bogoliubov_rotate(vac, [(0, 1, r)])


# ---------------------------------------------------------------------------
# temperature scan
# ---------------------------------------------------------------------------


def quasifree_beta_scan(
    V,
    regions,
    betas: Sequence[float],
    tol: float = PPT_TOL,
    bisect_tol: float = 1e-4,
) -> tuple[list[ScanRecord], float | None]:
    """Fermion PT verdict along an ascending grid; the first crossing is bisected."""
    betas = [float(b) for b in betas]
    if any(b1 < b0 for b0, b1 in zip(betas, betas[1:])):
        raise ValueError("beta grid must be ascending")
    reg = _regions(regions)
    V = _hermitian(V)

    def verdict(b: float) -> Verdict:
        return fermion_pt_test(fermi_symbol(V, b), reg, tol)

    records = []
    first = None
    prev = None
    for b in betas:
        v = verdict(b)
        records.append(
            ScanRecord(
                "quasifree_scan",
                {"statistics": "fermi", "n_modes": V.shape[0], "beta": b,
                 "region1": "-".join(map(str, reg.S1)), "region2": "-".join(map(str, reg.S2))},
                {"min_block_eig": v.criterion_value},
                str(v.tag),
            )
        )
        if first is None and v.entangled and prev is not None:
            lo, hi = prev, b
            while hi - lo > bisect_tol:
                mid = 0.5 * (lo + hi)
                if verdict(mid).entangled:
                    hi = mid
                else:
                    lo = mid
            first = 0.5 * (lo + hi)
        elif first is None and v.entangled:
            first = b
        prev = b
    return records, first


# ---------------------------------------------------------------------------
# many-body cross-check (Jordan-Wigner, small n)
# ---------------------------------------------------------------------------


def jw_annihilators(n: int) -> list[np.ndarray]:
    """``a_k`` on ``2^n`` Fock space; occupied state is basis index 1 per site."""
    lower = np.array([[0, 1], [0, 0]], dtype=complex)
    Z = np.diag([1.0, -1.0]).astype(complex)
    eye = np.eye(2, dtype=complex)
    out = []
    for k in range(n):
        factors = [Z] * k + [lower] + [eye] * (n - k - 1)
        out.append(reduce(np.kron, factors))
    return out


def many_body_from_symbol(sym: QuasifreeSymbol) -> np.ndarray:
    """Gauge-invariant quasifree density matrix rebuilt from ``A`` alone.

    Diagonalising ``A = U diag(nu) U^dagger`` gives normal modes
    ``b_k = sum_y conj(U[y, k]) a_y`` and
    ``rho = prod_k (nu_k n_k + (1 - nu_k)(1 - n_k))``; every moment then
    follows Wick's rule from ``A``.
    """
    if sym.statistics != "fermi" or not sym.gauge_invariant:
        raise ValueError("needs a gauge-invariant Fermi symbol")
    n = sym.n
    if n > 10:
        raise ValueError("many-body reconstruction limited to n <= 10 modes")
    nu, U = np.linalg.eigh(sym.A)
    a = jw_annihilators(n)
    D = 2**n
    rho = np.eye(D, dtype=complex)
    for k in range(n):
        b = sum(np.conj(U[y, k]) * a[y] for y in range(n))
        nk = b.conj().T @ b
        rho = rho @ (nu[k] * nk + (1.0 - nu[k]) * (np.eye(D) - nk))
    return 0.5 * (rho + rho.conj().T)


def many_body_gibbs(V, beta: float) -> np.ndarray:
    """Direct ``exp(-beta sum V_xy a*_x a_y) / Z`` on Fock space."""
    V = _hermitian(V)
    a = jw_annihilators(V.shape[0])
    H = sum(V[x, y] * a[x].conj().T @ a[y] for x in range(len(a)) for y in range(len(a)))
    e, U = np.linalg.eigh(0.5 * (H + H.conj().T))
    w = np.exp(-beta * (e - e[0]))
    return (U * (w / w.sum())) @ U.conj().T


def two_point(rho: np.ndarray, n: int) -> np.ndarray:
    """``A[y, x] = tr(rho a*_x a_y)``."""
    a = jw_annihilators(n)
    A = np.empty((n, n), dtype=complex)
    for x in range(n):
        for y in range(n):
            A[y, x] = np.trace(rho @ a[x].conj().T @ a[y])
    return A


# ---------------------------------------------------------------------------
# continuum modes
# ---------------------------------------------------------------------------


@dataclass
class ModeFunction:
    """A one-particle mode known in momentum and position space.

    ``hat(p)`` uses the unitary transform ``(2 pi)^{-1/2} int e^{-ipx} f(x) dx``.
    ``support`` is the closed position-space interval outside which ``f``
    vanishes (or is negligible below 1e-16 for Gaussian families).
    """

    hat: Callable[[np.ndarray], np.ndarray]
    position: Callable[[np.ndarray], np.ndarray]
    support: tuple[float, float]
    label: str = "mode"
    breaks: tuple[float, ...] = ()

    def scaled(self, s: float) -> "ModeFunction":
        """``hat -> sqrt(s) hat(s p)``, i.e. ``f -> f(x/s)/sqrt(s)``."""
        if s <= 0:
            raise ValueError("scale factor must be positive")
        h, f = self.hat, self.position
        lo, hi = self.support
        return ModeFunction(
            lambda p: np.sqrt(s) * h(s * np.asarray(p)),
            lambda x: f(np.asarray(x) / s) / np.sqrt(s),
            (lo * s, hi * s),
            f"{self.label}*{s:g}",
            tuple(b * s for b in self.breaks),
        )

    def combine(self, ca: complex, other: "ModeFunction", cb: complex, label: str = "") -> "ModeFunction":
        h1, h2, f1, f2 = self.hat, other.hat, self.position, other.position
        return ModeFunction(
            lambda p: ca * h1(p) + cb * h2(p),
            lambda x: ca * f1(x) + cb * f2(x),
            (min(self.support[0], other.support[0]), max(self.support[1], other.support[1])),
            label or f"{self.label}+{other.label}",
            tuple(sorted(set(self.breaks) | set(other.breaks))),
        )


def gaussian_mode(center: float = 0.0, width: float = 1.0) -> ModeFunction:
    w, c = float(width), float(center)
    norm_x = (np.pi * w * w) ** -0.25
    norm_p = (w * w / np.pi) ** 0.25
    reach = 9.0 * w
    return ModeFunction(
        lambda p: norm_p * np.exp(-0.5 * (np.asarray(p) * w) ** 2 - 1j * np.asarray(p) * c),
        lambda x: norm_x * np.exp(-0.5 * ((np.asarray(x) - c) / w) ** 2),
        (c - reach, c + reach),
        f"gauss({c:g},{w:g})",
    )


def hermite1_mode(center: float = 0.0, width: float = 1.0) -> ModeFunction:
    """First Hermite-Gauss function; orthogonal to ``gaussian_mode`` at the same center."""
    w, c = float(width), float(center)
    norm_x = (np.pi * w * w) ** -0.25 * np.sqrt(2.0)
    norm_p = (w * w / np.pi) ** 0.25 * np.sqrt(2.0)
    reach = 10.0 * w
    return ModeFunction(
        lambda p: -1j * norm_p * (np.asarray(p) * w) * np.exp(-0.5 * (np.asarray(p) * w) ** 2 - 1j * np.asarray(p) * c),
        lambda x: norm_x * ((np.asarray(x) - c) / w) * np.exp(-0.5 * ((np.asarray(x) - c) / w) ** 2),
        (c - reach, c + reach),
        f"hermite1({c:g},{w:g})",
    )


def cosine_mode(center: float = 0.0, half_width: float = 1.0) -> ModeFunction:
    """``L^{-1/2} cos(pi (x-c) / 2L)`` on ``[c-L, c+L]``."""
    L, c = float(half_width), float(center)
    k = np.pi / (2.0 * L)

    def hat(p):
        p = np.asarray(p, dtype=float)
        den = k * k - p * p
        near = np.abs(den) < 1e-9
        safe = np.where(near, 1.0, den)
        core = np.where(near, L, np.cos(p * L) * 2.0 * k / safe)
        return core * np.exp(-1j * p * c) / np.sqrt(2.0 * np.pi * L)

    def pos(x):
        x = np.asarray(x, dtype=float)
        u = x - c
        return np.where(np.abs(u) <= L, np.cos(k * u) / np.sqrt(L), 0.0)

    return ModeFunction(hat, pos, (c - L, c + L), f"cosine({c:g},{L:g})", (c - L, c, c + L))


MODE_FAMILIES = {"gaussian": gaussian_mode, "hermite1": hermite1_mode, "cosine": cosine_mode}


def position_overlap(f: ModeFunction, g: ModeFunction) -> complex:
    """``<f|g>`` in position space by adaptive quadrature."""
    lo = max(f.support[0], g.support[0])
    hi = min(f.support[1], g.support[1])
    if hi <= lo:
        return 0j
    pts = [b for b in sorted(set(f.breaks) | set(g.breaks)) if lo < b < hi] or None

    def re(x):
        return float(np.real(np.conj(f.position(x)) * g.position(x)))

    def im(x):
        return float(np.imag(np.conj(f.position(x)) * g.position(x)))

    r = integrate.quad(re, lo, hi, points=pts, limit=400, epsabs=1e-13, epsrel=1e-12)[0]
    i = integrate.quad(im, lo, hi, points=pts, limit=400, epsabs=1e-13, epsrel=1e-12)[0]
    return complex(r, i)


def orthogonalize(f: ModeFunction, g: ModeFunction) -> ModeFunction:
    """Gram-Schmidt: component of ``g`` orthogonal to ``f``, renormalised."""
    ov = position_overlap(f, g)
    raw = g.combine(1.0, f, -ov, label=f"{g.label}⊥")
    nrm = np.sqrt(position_overlap(raw, raw).real)
    return raw.combine(1.0 / nrm, raw, 0.0, label=raw.label)


def fermi_weight(p: np.ndarray, beta: float) -> np.ndarray:
    return special.expit(-beta * np.asarray(p) ** 2)


def momentum_cutoff(beta: float, tail: float = 1e-12) -> float:
    """``P`` with Fermi factor ``< tail`` for ``|p| > P``."""
    return float(np.sqrt(np.log(1.0 / tail) / beta))


def _gl_integrate(fun, P: float, panels: int, order: int) -> np.ndarray:
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(-P, P, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return fun(nodes, weights)


class QuadratureError(RuntimeError):
    pass


def continuum_mode_kernel(
    f: ModeFunction,
    g: ModeFunction,
    beta: float,
    *,
    P: float | None = None,
    panels: int = 8,
    order: int = 32,
    tol: float = 1e-8,
    max_panels: int = 4096,
    check_orthogonal: bool = True,
    orth_tol: float = 1e-8,
) -> np.ndarray:
    """2x2 matrix ``A[i, j] = int conj(phi_i(p)) phi_j(p) / (1 + e^{beta p^2}) dp``.

    Composite Gauss-Legendre on ``[-P, P]``; the panel count doubles until two
    successive results agree to ``tol`` entrywise.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if check_orthogonal:
        ov = abs(position_overlap(f, g))
        if ov > orth_tol:
            raise ValueError(f"modes are not orthogonal: |<f|g>| = {ov:.3g}")
    P = momentum_cutoff(beta) if P is None else float(P)

    def fun(nodes, weights):
        phi = np.vstack([f.hat(nodes), g.hat(nodes)])
        wt = weights * fermi_weight(nodes, beta)
        return (phi.conj() * wt) @ phi.T

    prev = _gl_integrate(fun, P, panels, order)
    while panels < max_panels:
        panels *= 2
        cur = _gl_integrate(fun, P, panels, order)
        if np.max(np.abs(cur - prev)) <= tol:
            return 0.5 * (cur + cur.conj().T)
        prev = cur
    raise QuadratureError(f"quadrature did not converge to {tol} with {max_panels} panels")


def scale_mode(f: ModeFunction, beta: float, variant: str = "exact") -> ModeFunction:
    """Rescale a mode for inverse temperature ``beta``.

    ``"exact"`` uses ``beta^{1/4} f(sqrt(beta) p)``, which keeps ``beta p^2``
    invariant under the substitution ``q = sqrt(beta) p``;
    ``"literal"`` uses ``sqrt(beta) f(beta p)``.  Both preserve the norm.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if variant == "exact":
        return f.scaled(np.sqrt(beta))
    if variant == "literal":
        return f.scaled(beta)
    raise ValueError(f"unknown scaling variant {variant!r}")


def mode_block_min_eig(A: np.ndarray) -> float:
    sym = QuasifreeSymbol(A, None, "fermi")
    m1, m2 = fermion_pt_blocks(sym, ((0,), (1,)))
    return float(min(np.linalg.eigvalsh(m1)[0], np.linalg.eigvalsh(m2)[0]))


@dataclass
class ScalingReport:
    reference: np.ndarray
    kernels: dict[float, np.ndarray]
    deviations: dict[float, float]
    verdicts: dict[float, Tag]
    tol: float

    @property
    def max_deviation(self) -> float:
        return max(self.deviations.values(), default=0.0)

    @property
    def passed(self) -> bool:
        same = len({self.verdicts[b] for b in self.verdicts}) <= 1
        return self.max_deviation <= self.tol and same


def scaling_invariance_check(
    f: ModeFunction,
    g: ModeFunction,
    betas: Sequence[float],
    *,
    variant: str = "exact",
    scale_partner: bool = True,
    tol: float = 1e-6,
    ppt_tol: float = PPT_TOL,
) -> ScalingReport:
    """Compare the beta = 1 kernel of ``(f, g)`` with the kernel of the rescaled pair at each beta."""
    ref = continuum_mode_kernel(f, g, 1.0)
    kernels, devs, verdicts = {}, {}, {}
    for b in betas:
        fb = scale_mode(f, b, variant)
        gb = scale_mode(g, b, variant) if scale_partner else g
        A = continuum_mode_kernel(fb, gb, b, check_orthogonal=False)
        kernels[b] = A
        devs[b] = float(np.max(np.abs(A - ref)))
        verdicts[b] = Verdict.from_min_eig(mode_block_min_eig(A), ppt_tol).tag
    return ScalingReport(ref, kernels, devs, verdicts, tol)


def mode_pair(family: str, **params) -> tuple[ModeFunction, ModeFunction]:
    """Shipped orthogonal mode pairs, one right-localised and one left-localised where possible."""
    if family == "gaussian":
        c, w = params.get("center", 2.0), params.get("width", 1.0)
        f = gaussian_mode(c, w)
        return f, orthogonalize(f, gaussian_mode(-c, w))
    if family == "cosine":
        L = params.get("half_width", 1.0)
        return cosine_mode(L, L), cosine_mode(-L, L)
    if family == "hermite1":
        w = params.get("width", 1.0)
        return gaussian_mode(0.0, w), hermite1_mode(0.0, w)
    raise ValueError(f"unknown mode family {family!r}; choose from gaussian, cosine, hermite1")
