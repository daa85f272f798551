"""Gibbs states, complex-time evolution and reduced states on region pairs."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .spin import Operator, translate_operator

BETA_MAX = 50.0


@dataclass
class DensityMatrix:
    matrix: np.ndarray
    subsystem_dims: list[int]

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        self.subsystem_dims = [int(d) for d in self.subsystem_dims]
        if self.matrix.shape != (self.dim, self.dim):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match dims {self.subsystem_dims}")

    @property
    def dim(self) -> int:
        return int(np.prod(self.subsystem_dims))

    @property
    def n_sites(self) -> int:
        return len(self.subsystem_dims)

    def validate(self, atol: float = 1e-12, eig_tol: float = 1e-10) -> None:
        m = self.matrix
        herm = float(np.max(np.abs(m - m.conj().T)))
        if herm > atol:
            raise ValueError(f"density matrix not Hermitian (defect {herm:.3g})")
        tr = np.trace(m).real
        if abs(tr - 1.0) > atol:
            raise ValueError(f"density matrix trace {tr!r} != 1")
        lo = float(np.linalg.eigvalsh(m)[0])
        if lo < -eig_tol:
            raise ValueError(f"density matrix has negative eigenvalue {lo:.3g}")

    def to_json(self) -> str:
        """Row-major ``[re, im]`` pairs; no binary payloads."""
        flat = [[float(z.real), float(z.imag)] for z in self.matrix.ravel()]
        return json.dumps({"subsystem_dims": self.subsystem_dims, "data": flat})

    @classmethod
    def from_json(cls, text: str) -> "DensityMatrix":
        obj = json.loads(text)
        dims = obj["subsystem_dims"]
        D = int(np.prod(dims))
        arr = np.array([complex(re, im) for re, im in obj["data"]]).reshape(D, D)
        return cls(arr, dims)


@dataclass(frozen=True)
class RegionPair:
    region1: tuple[int, ...]
    region2: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "region1", tuple(int(s) for s in self.region1))
        object.__setattr__(self, "region2", tuple(int(s) for s in self.region2))
        if not self.region1 or not self.region2:
            raise ValueError("regions must be nonempty")
        if len(set(self.region1)) != len(self.region1) or len(set(self.region2)) != len(self.region2):
            raise ValueError("repeated site inside a region")
        if set(self.region1) & set(self.region2):
            raise ValueError(f"regions overlap: {self.region1} and {self.region2}")

    def check_range(self, n_sites: int) -> None:
        for s in self.region1 + self.region2:
            if not 0 <= s < n_sites:
                raise ValueError(f"site {s} out of range for {n_sites} sites")

    @property
    def sizes(self) -> tuple[int, int]:
        return len(self.region1), len(self.region2)

    def distance(self, n_sites: int | None = None, periodic: bool = True) -> int:
        """Smallest site separation between the regions (ring metric if periodic)."""
        best = None
        for a in self.region1:
            for b in self.region2:
                dd = abs(a - b)
                if periodic and n_sites:
                    dd = min(dd, n_sites - dd)
                best = dd if best is None else min(best, dd)
        return int(best)

    def label(self) -> str:
        return "-".join(map(str, self.region1)) + "|" + "-".join(map(str, self.region2))


class Spectrum:
    """Cached eigendecomposition of a Hermitian operator."""

    def __init__(self, H: Operator | np.ndarray, dims: Sequence[int] | None = None):
        if isinstance(H, Operator):
            dims = H.subsystem_dims
            H = H.matrix
        H = np.asarray(H, dtype=complex)
        _check_hermitian(H)
        self.dims = list(dims) if dims is not None else [H.shape[0]]
        self.energies, self.vectors = np.linalg.eigh(H)

    def gibbs(self, beta: float) -> DensityMatrix:
        _check_beta(beta)
        w = np.exp(-beta * (self.energies - self.energies[0]))
        w /= w.sum()
        m = (self.vectors * w) @ self.vectors.conj().T
        return DensityMatrix(0.5 * (m + m.conj().T), self.dims)

    def to_eigenbasis(self, A: np.ndarray) -> np.ndarray:
        return self.vectors.conj().T @ A @ self.vectors

    def from_eigenbasis(self, A: np.ndarray) -> np.ndarray:
        return self.vectors @ A @ self.vectors.conj().T


def _check_hermitian(H: np.ndarray, atol: float = 1e-10) -> None:
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("operator must be a square matrix")
    defect = float(np.max(np.abs(H - H.conj().T), initial=0.0))
    if defect > atol * max(1.0, float(np.max(np.abs(H), initial=0.0))):
        raise ValueError(f"operator is not Hermitian (defect {defect:.3g})")


def _check_beta(beta: float) -> None:
    if not np.isfinite(beta) or beta < 0:
        raise ValueError(f"beta must be finite and >= 0, got {beta!r}")
    if beta > BETA_MAX:
        raise ValueError(f"beta = {beta} exceeds supported range [0, {BETA_MAX}]")


def gibbs_state(H: Operator, beta: float) -> DensityMatrix:
    """``exp(-beta H)/Z`` with the ground energy shifted out before exponentiation."""
    return Spectrum(H).gibbs(beta)


def _matrix_of(A) -> np.ndarray:
    return A.matrix if isinstance(A, (Operator, DensityMatrix)) else np.asarray(A, dtype=complex)


def evolve_complex_time(H: Operator, A: Operator, z: complex, spectrum: Spectrum | None = None) -> Operator:
    """``alpha_z(A) = e^{izH} A e^{-izH}`` computed exactly in the eigenbasis of ``H``."""
    sp = spectrum or Spectrum(H)
    E = sp.energies
    phase = 1j * complex(z) * (E[:, None] - E[None, :])
    if np.max(phase.real, initial=0.0) > 700.0:
        raise OverflowError("complex-time evolution overflows; reduce |Im z| * spectral width")
    At = sp.to_eigenbasis(_matrix_of(A)) * np.exp(phase)
    dims = A.subsystem_dims if isinstance(A, Operator) else sp.dims
    return Operator(sp.from_eigenbasis(At), dims)


def kms_defect(
    H: Operator, beta: float, A, B, spectrum: Spectrum | None = None, state: DensityMatrix | None = None
) -> float:
    """``|w(AB) - w(B alpha_{i beta}(A))|`` for the Gibbs state ``w`` at ``beta``.

    Both sides are summed in the eigenbasis of ``H``.  For the Gibbs state the
    weight ``p_i`` and the factor ``e^{-beta (E_j - E_i)}`` from ``alpha_{i beta}``
    are combined in the exponent before multiplying, so no intermediate grows
    like ``e^{beta * spectral width}``.  Passing ``state`` evaluates the right
    side literally against that state instead (for negative controls).
    """
    sp = spectrum or Spectrum(H)
    _check_beta(beta)
    Am, Bm = _matrix_of(A), _matrix_of(B)
    At, Bt = sp.to_eigenbasis(Am), sp.to_eigenbasis(Bm)
    E = sp.energies
    if state is None:
        logw = -beta * (E - E[0])
        logp = logw - np.log(np.exp(logw).sum())
        lhs = np.einsum("i,ij,ji->", np.exp(logp), At, Bt)
        if np.array_equal(Am, Am[0, 0] * np.eye(Am.shape[0])):
            rhs = np.einsum("i,ij,ji->", np.exp(logp), Bt, At)
        else:
            # w_ij = p_i * exp(-beta (E_j - E_i)), evaluated in log space
            w = np.exp(logp[:, None] - beta * (E[None, :] - E[:, None]))
            rhs = np.einsum("ij,ij,ji->", w, Bt, At)
        return float(abs(lhs - rhs))
    rho = sp.to_eigenbasis(_matrix_of(state))
    lhs = np.trace(rho @ At @ Bt)
    alpha_a = evolve_complex_time(H, Am, 1j * beta, spectrum=sp).matrix
    rhs = np.trace(rho @ Bt @ sp.to_eigenbasis(alpha_a))
    return float(abs(lhs - rhs))


def partial_trace(rho: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    """Reduced state on ``keep`` (in the given order)."""
    dims = rho.subsystem_dims
    n = len(dims)
    keep = [int(k) for k in keep]
    if not keep:
        raise ValueError("keep must name at least one site")
    if len(set(keep)) != len(keep) or any(not 0 <= k < n for k in keep):
        raise ValueError(f"invalid site list {keep} for {n} sites")
    traced = [k for k in range(n) if k not in keep]
    dk = int(np.prod([dims[k] for k in keep]))
    dt = int(np.prod([dims[k] for k in traced])) if traced else 1
    t = rho.matrix.reshape(dims + dims)
    order = keep + traced
    t = t.transpose(order + [n + k for k in order]).reshape(dk, dt, dk, dt)
    red = np.einsum("ajbj->ab", t)
    return DensityMatrix(red, [dims[k] for k in keep])


def restrict_to_pair(rho: DensityMatrix, pair: RegionPair) -> DensityMatrix:
    """Reduced state on ``region1 + region2`` viewed as a bipartite state."""
    pair.check_range(rho.n_sites)
    red = partial_trace(rho, list(pair.region1) + list(pair.region2))
    d1 = int(np.prod([rho.subsystem_dims[s] for s in pair.region1]))
    d2 = int(np.prod([rho.subsystem_dims[s] for s in pair.region2]))
    return DensityMatrix(red.matrix, [d1, d2])


def product_state(site_states: Sequence[np.ndarray]) -> DensityMatrix:
    mats = [np.asarray(s, dtype=complex) for s in site_states]
    return DensityMatrix(reduce(np.kron, mats), [m.shape[0] for m in mats])


def translation_average(site_states: Sequence[np.ndarray], period: int, n_sites: int | None = None) -> DensityMatrix:
    """Average of all cyclic shifts of the product of ``site_states`` repeated over the ring.

    ``site_states`` covers one period; it is tiled to ``n_sites`` (default: one
    period) and the tiled product is averaged over ``period`` shifts.
    """
    if len(site_states) != period:
        raise ValueError(f"expected {period} site states for one period, got {len(site_states)}")
    n = period if n_sites is None else int(n_sites)
    if n % period:
        raise ValueError(f"period {period} does not divide n_sites {n}")
    tiled = [site_states[k % period] for k in range(n)]
    base = product_state(tiled)
    op = Operator(base.matrix, base.subsystem_dims)
    acc = sum(translate_operator(op, l).matrix for l in range(period)) / period
    return DensityMatrix(acc, base.subsystem_dims)
