"""Entanglement criteria for bipartite states and the order classification.

All criteria operate on a :class:`~thermosep.thermal.DensityMatrix` carrying
exactly two subsystem dimensions (use :func:`restrict_to_pair` first for
lattice states).
"""

from __future__ import annotations

import enum
import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _kernels
from .spin import ModelSpec, Operator, build_hamiltonian
from .thermal import DensityMatrix, RegionPair, Spectrum, restrict_to_pair

log = logging.getLogger(__name__)

PPT_TOL = 1e-10
BETA_TOL = 1e-6


class Tag(str, enum.Enum):
    NPT_ENTANGLED = "NPT_entangled"
    PPT_PASS = "PPT_pass"
    SEPARABLE_CERTIFIED = "separable_certified"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Verdict:
    tag: Tag
    criterion_value: float
    tolerance: float

    @property
    def entangled(self) -> bool:
        return self.tag is Tag.NPT_ENTANGLED

    @classmethod
    def from_min_eig(cls, value: float, tol: float = PPT_TOL) -> "Verdict":
        tag = Tag.NPT_ENTANGLED if value < -tol else Tag.PPT_PASS
        return cls(tag, float(value), float(tol))


def _bipartite(rho: DensityMatrix) -> tuple[np.ndarray, int, int]:
    if len(rho.subsystem_dims) != 2:
        raise ValueError(f"expected a bipartite state, got dims {rho.subsystem_dims}")
    da, db = rho.subsystem_dims
    return np.ascontiguousarray(rho.matrix, dtype=np.complex128), da, db


def partial_transpose(rho: DensityMatrix) -> np.ndarray:
    """Transpose on the second factor."""
    m, da, db = _bipartite(rho)
    return _kernels.partial_transpose(m, da, db)


def _pt_spectrum(rho: DensityMatrix) -> np.ndarray:
    pt = partial_transpose(rho)
    return np.linalg.eigvalsh(0.5 * (pt + pt.conj().T))


def ppt_min_eig(rho: DensityMatrix, tol: float = PPT_TOL) -> tuple[float, Verdict]:
    lo = float(_pt_spectrum(rho)[0])
    return lo, Verdict.from_min_eig(lo, tol)


def negativity(rho: DensityMatrix) -> float:
    w = _pt_spectrum(rho)
    return float(max(0.0, (np.abs(w).sum() - 1.0) / 2.0))


def ccnr_realignment(rho: DensityMatrix) -> float:
    """Trace norm of the realigned matrix; values above 1 witness entanglement."""
    m, da, db = _bipartite(rho)
    r = _kernels.realign(m, da, db)
    return float(np.linalg.svd(r, compute_uv=False).sum())


def separable_ball_radius(D: int) -> float:
    """Frobenius radius around ``I/D`` inside which every state is separable."""
    return 1.0 / np.sqrt(D * (D - 1.0))


def tracial_ball_check(rho: DensityMatrix) -> bool:
    m, _, _ = _bipartite(rho)
    D = m.shape[0]
    return bool(np.linalg.norm(m - np.eye(D) / D) <= separable_ball_radius(D))


def diagonal_certificate(rho: DensityMatrix, atol: float = 1e-14) -> bool:
    """A state diagonal in a product basis is a mixture of product states."""
    m = rho.matrix
    return bool(np.max(np.abs(m - np.diag(np.diag(m))), initial=0.0) <= atol)


def certify(rho: DensityMatrix, tol: float = PPT_TOL) -> Verdict:
    """PPT verdict, upgraded to ``separable_certified`` by a sufficient condition."""
    lo, v = ppt_min_eig(rho, tol)
    if not v.entangled and (diagonal_certificate(rho) or tracial_ball_check(rho)):
        return Verdict(Tag.SEPARABLE_CERTIFIED, lo, tol)
    return v


# ---------------------------------------------------------------------------
# CHSH
# ---------------------------------------------------------------------------


@dataclass
class CHSHResult:
    value: float
    converged: bool
    iterations: int
    observables: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray] = field(repr=False, default=None)

    def __float__(self) -> float:
        return self.value


def _random_dichotomic(rng: np.random.Generator, d: int) -> np.ndarray:
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    x = x + x.conj().T
    w, v = np.linalg.eigh(x)
    return np.ascontiguousarray((v * np.where(w >= 0, 1.0, -1.0)) @ v.conj().T)


def chsh_max(
    rho: DensityMatrix,
    restarts: int = 16,
    max_iter: int = 500,
    tol: float = 1e-13,
    seed: int = 0,
) -> CHSHResult:
    """Best CHSH value over dichotomic observables by see-saw ascent.

    Each half-step replaces Alice's (Bob's) pair by the optimal ``±1``
    observables for Bob's (Alice's) current pair, so the value never
    decreases.  Works in any local dimension. Values above 2 certify
    entanglement; values at or below 2 are inconclusive.
    """
    m, da, db = _bipartite(rho)
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        a1, a2 = _random_dichotomic(rng, da), _random_dichotomic(rng, da)
        b1, b2 = _random_dichotomic(rng, db), _random_dichotomic(rng, db)
        value, it, *obs = _kernels.chsh_ascent(m, da, db, a1, a2, b1, b2, max_iter, tol)
        res = CHSHResult(float(value), it < max_iter, int(it), tuple(obs))
        if best is None or res.value > best.value:
            best = res
    if not best.converged:
        log.warning("CHSH ascent hit max_iter=%d; best value %.12f", max_iter, best.value)
    return best


# ---------------------------------------------------------------------------
# regions and entanglement order
# ---------------------------------------------------------------------------


def contiguous_regions(n_sites: int, size: int, periodic: bool = True) -> list[tuple[int, ...]]:
    starts = range(n_sites) if periodic and size < n_sites else range(n_sites - size + 1)
    return [tuple((s + k) % n_sites for k in range(size)) for s in starts]


def all_regions(n_sites: int, size: int) -> list[tuple[int, ...]]:
    return list(itertools.combinations(range(n_sites), size))


def enumerate_pairs(
    n_sites: int,
    max_size: int,
    periodic: bool = True,
    contiguous: bool = True,
    min_size: int = 1,
) -> list[RegionPair]:
    """Unordered disjoint region pairs with both sizes in ``[min_size, max_size]``.

    Each unordered pair appears once, with ``region1`` lexicographically
    smaller; the list is sorted lexicographically.
    """
    regions: list[tuple[int, ...]] = []
    for s in range(min_size, max_size + 1):
        regions += contiguous_regions(n_sites, s, periodic) if contiguous else all_regions(n_sites, s)
    regions = sorted(set(regions))
    pairs = []
    for r1, r2 in itertools.combinations(regions, 2):
        if set(r1) & set(r2):
            continue
        a, b = (r1, r2) if r1 < r2 else (r2, r1)
        pairs.append(RegionPair(a, b))
    return sorted(pairs, key=lambda p: (p.region1, p.region2))


@dataclass
class PairRecord:
    pair: RegionPair
    level: int
    distance: int
    min_pt_eig: float
    negativity: float
    verdict: Verdict


@dataclass
class OrderReport:
    max_checked_N: int
    first_entangled_N: int | None
    witness_pair: RegionPair | None
    records: list[PairRecord]

    @property
    def entangled(self) -> bool:
        return self.first_entangled_N is not None


class BudgetExceeded(RuntimeError):
    pass


def entanglement_order(
    state_source: DensityMatrix | Callable[[], DensityMatrix],
    N_max: int,
    n_sites: int | None = None,
    periodic: bool = True,
    contiguous: bool = True,
    tol: float = PPT_TOL,
    max_pairs: int = 20000,
) -> OrderReport:
    """Classify the smallest region size at which some pair of regions is NPT.

    Level ``N`` holds the pairs whose larger region has exactly ``N`` sites, so
    scanning levels ``1..N`` covers every pair with both sizes ``<= N``.
    """
    if N_max < 1:
        raise ValueError("N_max must be >= 1")
    rho = state_source() if callable(state_source) else state_source
    n = rho.n_sites if n_sites is None else n_sites
    if 2 > n:
        raise ValueError("need at least two sites")
    N_eff = min(N_max, n - 1)
    pairs = enumerate_pairs(n, N_eff, periodic=periodic, contiguous=contiguous)
    if len(pairs) > max_pairs:
        raise BudgetExceeded(f"{len(pairs)} region pairs exceed the budget of {max_pairs}")
    by_level: dict[int, list[RegionPair]] = {}
    for p in pairs:
        by_level.setdefault(max(p.sizes), []).append(p)
    records: list[PairRecord] = []
    first, witness = None, None
    for level in range(1, N_eff + 1):
        for p in by_level.get(level, []):
            red = restrict_to_pair(rho, p)
            lo, v = ppt_min_eig(red, tol)
            rec = PairRecord(p, level, p.distance(n, periodic), lo, negativity(red), v)
            records.append(rec)
            if v.entangled and first is None:
                first, witness = level, p
    return OrderReport(N_max, first, witness, records)


# ---------------------------------------------------------------------------
# critical inverse temperature
# ---------------------------------------------------------------------------


def _as_spectrum(model) -> Spectrum:
    if isinstance(model, Spectrum):
        return model
    if isinstance(model, ModelSpec):
        return Spectrum(build_hamiltonian(model))
    if isinstance(model, Operator):
        return Spectrum(model)
    raise TypeError(f"cannot build a spectrum from {type(model).__name__}")


def pair_min_eig(spectrum: Spectrum, pair: RegionPair, beta: float) -> float:
    return ppt_min_eig(restrict_to_pair(spectrum.gibbs(beta), pair))[0]


def beta_threshold(
    model,
    pair: RegionPair,
    beta_lo: float,
    beta_hi: float,
    tol_beta: float = BETA_TOL,
    n_grid: int = 64,
    tol: float = PPT_TOL,
) -> float | None:
    """First inverse temperature above ``beta_lo`` where ``pair`` turns NPT.

    A uniform grid locates the first NPT point coming from the high-temperature
    side, then bisection refines it to ``tol_beta``.  Returns ``None`` when the
    pair stays PPT on the whole bracket.
    """
    if not beta_hi > beta_lo >= 0:
        raise ValueError(f"invalid bracket [{beta_lo}, {beta_hi}]")
    sp = _as_spectrum(model)

    def npt(b: float) -> bool:
        return pair_min_eig(sp, pair, b) < -tol

    if npt(beta_lo):
        raise ValueError(f"pair {pair.label()} is already NPT at beta_lo = {beta_lo}")
    grid = np.linspace(beta_lo, beta_hi, n_grid)
    prev = grid[0]
    for b in grid[1:]:
        if npt(b):
            lo, hi = prev, b
            while hi - lo > tol_beta:
                mid = 0.5 * (lo + hi)
                if npt(mid):
                    hi = mid
                else:
                    lo = mid
            return 0.5 * (lo + hi)
        prev = b
    return None


def beta_thresholds(
    model,
    pairs: Sequence[RegionPair],
    beta_lo: float,
    beta_hi: float,
    tol_beta: float = BETA_TOL,
    n_grid: int = 64,
    tol: float = PPT_TOL,
) -> dict[RegionPair, float | None]:
    """:func:`beta_threshold` for many pairs, sharing one Gibbs state per grid point."""
    if not beta_hi > beta_lo >= 0:
        raise ValueError(f"invalid bracket [{beta_lo}, {beta_hi}]")
    sp = _as_spectrum(model)
    pending = list(pairs)
    out: dict[RegionPair, float | None] = {p: None for p in pending}
    grid = np.linspace(beta_lo, beta_hi, n_grid)
    rho = sp.gibbs(grid[0])
    for p in pending:
        if ppt_min_eig(restrict_to_pair(rho, p))[0] < -tol:
            raise ValueError(f"pair {p.label()} is already NPT at beta_lo = {beta_lo}")
    for prev, b in zip(grid[:-1], grid[1:]):
        if not pending:
            break
        rho = sp.gibbs(b)
        still = []
        for p in pending:
            if ppt_min_eig(restrict_to_pair(rho, p))[0] < -tol:
                out[p] = beta_threshold(sp, p, prev, b, tol_beta=tol_beta, n_grid=2, tol=tol)
            else:
                still.append(p)
        pending = still
    return out


def scan_pairs(
    model,
    pairs: Iterable[RegionPair],
    betas: Sequence[float],
    tol: float = PPT_TOL,
) -> list[tuple[float, RegionPair, float, float, Verdict]]:
    """``(beta, pair, min_pt_eig, negativity, verdict)`` for every grid point."""
    sp = _as_spectrum(model)
    pairs = list(pairs)
    out = []
    for b in betas:
        rho = sp.gibbs(float(b))
        for p in pairs:
            red = restrict_to_pair(rho, p)
            lo, v = ppt_min_eig(red, tol)
            out.append((float(b), p, lo, negativity(red), v))
    return out
