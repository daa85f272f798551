"""Finite spin-lattice operators.

Site ``0`` is always the leftmost Kronecker factor.  Chains are rings by
default (``boundary="periodic"``); open chains are available for testing and
for the two-site models where a ring would double-count the single bond.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence, Union

import numpy as np

MatrixId = Union[str, np.ndarray]

_PAULI = {
    "sigma_x": np.array([[0, 1], [1, 0]], dtype=complex),
    "sigma_y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "sigma_z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_ALIASES = {"x": "sigma_x", "y": "sigma_y", "z": "sigma_z", "id": "identity", "I": "identity"}

MAX_DIM = 4096


def single_site_matrix(mid: MatrixId, d: int = 2) -> np.ndarray:
    """Return the ``d x d`` matrix for a site-operator id.

    ``mid`` is ``"identity"``, one of the Pauli names (``"sigma_x"`` or the
    short forms ``"x"``, ``"y"``, ``"z"``) or an explicit Hermitian array.
    """
    if isinstance(mid, np.ndarray):
        m = np.asarray(mid, dtype=complex)
        if m.shape != (d, d):
            raise ValueError(f"custom site matrix has shape {m.shape}, expected {(d, d)}")
        if not np.allclose(m, m.conj().T, atol=1e-12):
            raise ValueError("custom site matrix is not Hermitian")
        return m
    name = _ALIASES.get(mid, mid)
    if name == "identity":
        return np.eye(d, dtype=complex)
    if name in _PAULI:
        if d != 2:
            raise ValueError(f"{name} requires d = 2, got d = {d}")
        return _PAULI[name].copy()
    raise ValueError(f"unknown site-matrix id {mid!r}")


@dataclass(frozen=True)
class LocalTerm:
    """``coefficient * prod_k M_k`` with ``M_k`` acting on ``base + offset_k``."""

    coefficient: float
    factors: tuple[tuple[int, MatrixId], ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple((int(o), m) for o, m in self.factors))
        offsets = [o for o, _ in self.factors]
        if len(set(offsets)) != len(offsets):
            raise ValueError(f"repeated offsets in local term: {offsets}")
        if not np.isfinite(self.coefficient):
            raise ValueError("coefficient must be finite")

    @property
    def span(self) -> int:
        if not self.factors:
            return 1
        offs = [o for o, _ in self.factors]
        return max(offs) - min(offs) + 1


@dataclass(frozen=True)
class ModelSpec:
    """Translation-invariant lattice model: ``H = sum_k tau^k h``.

    ``mean_field_terms`` holds ``(site_matrix_id, coupling)`` pairs that add
    ``coupling / n * sum_{k != l} M^k M^l`` (ordered pairs, no diagonal).
    """

    n_sites: int
    terms: tuple[LocalTerm, ...] = ()
    site_dim: int = 2
    boundary: str = "periodic"
    mean_field_terms: tuple[tuple[MatrixId, float], ...] = ()
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "mean_field_terms", tuple(self.mean_field_terms))
        if self.n_sites < 1:
            raise ValueError("n_sites must be positive")
        if self.site_dim < 2:
            raise ValueError("site_dim must be >= 2 for spin models")
        if self.boundary not in ("periodic", "open"):
            raise ValueError(f"boundary must be 'periodic' or 'open', got {self.boundary!r}")
        if self.site_dim ** self.n_sites > MAX_DIM:
            raise ValueError(f"Hilbert space dimension {self.site_dim}^{self.n_sites} exceeds {MAX_DIM}")
        for t in self.terms:
            if t.span > self.n_sites:
                raise ValueError(f"term spans {t.span} sites but chain has {self.n_sites}")

    @property
    def dim(self) -> int:
        return self.site_dim ** self.n_sites

    @property
    def dims(self) -> list[int]:
        return [self.site_dim] * self.n_sites


@dataclass
class Operator:
    matrix: np.ndarray
    subsystem_dims: list[int] = field(default_factory=list)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if not self.subsystem_dims:
            self.subsystem_dims = [self.matrix.shape[0]]
        self.subsystem_dims = [int(d) for d in self.subsystem_dims]
        if self.matrix.shape != (self.dim, self.dim):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match dims {self.subsystem_dims}")

    @property
    def dim(self) -> int:
        return int(np.prod(self.subsystem_dims))

    @property
    def n_sites(self) -> int:
        return len(self.subsystem_dims)

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0)) <= atol


def _place(site_ops: dict[int, np.ndarray], n: int, d: int) -> np.ndarray:
    eye = np.eye(d, dtype=complex)
    return reduce(np.kron, [site_ops.get(k, eye) for k in range(n)], np.ones((1, 1), dtype=complex))


def _sites_for(term: LocalTerm, base: int, model: ModelSpec) -> list[int]:
    n = model.n_sites
    sites = []
    for off, _ in term.factors:
        s = base + off
        if model.boundary == "periodic":
            s %= n
        elif not 0 <= s < n:
            raise IndexError(f"site {s} outside open chain of {n} sites")
        sites.append(s)
    if len(set(sites)) != len(sites):
        raise ValueError(f"term factors collide on sites {sites}")
    return sites


def embed_term(term: LocalTerm, base_site: int, model: ModelSpec) -> Operator:
    """Embed ``term`` with its zero offset at ``base_site``."""
    d, n = model.site_dim, model.n_sites
    sites = _sites_for(term, base_site, model)
    ops = {s: single_site_matrix(m, d) for s, (_, m) in zip(sites, term.factors)}
    return Operator(term.coefficient * _place(ops, n, d), model.dims)


def _fits(term: LocalTerm, base: int, model: ModelSpec) -> bool:
    if model.boundary == "periodic":
        return True
    return all(0 <= base + o < model.n_sites for o, _ in term.factors)


def build_hamiltonian(model: ModelSpec) -> Operator:
    n, d = model.n_sites, model.site_dim
    h = np.zeros((model.dim, model.dim), dtype=complex)
    for term in model.terms:
        for base in range(n):
            if _fits(term, base, model):
                h += embed_term(term, base, model).matrix
    for mid, coupling in model.mean_field_terms:
        m = single_site_matrix(mid, d)
        singles = [_place({k: m}, n, d) for k in range(n)]
        total = sum(singles)
        # sum_{k != l} M^k M^l = (sum_k M^k)^2 - sum_k (M^k)^2
        pair_sum = total @ total - sum(s @ s for s in singles)
        h += (coupling / n) * pair_sum
    return Operator(0.5 * (h + h.conj().T), model.dims)


def translate_operator(op: Operator, shift: int) -> Operator:
    """Conjugate by the cyclic shift moving site ``j`` to ``j + shift``."""
    dims = op.subsystem_dims
    if len(set(dims)) != 1:
        raise ValueError(f"translation needs equal site dimensions, got {dims}")
    n = len(dims)
    s = shift % n
    if s == 0:
        return Operator(op.matrix.copy(), list(dims))
    t = op.matrix.reshape(dims + dims)
    perm = [(k - s) % n for k in range(n)]
    t = t.transpose(perm + [n + p for p in perm])
    return Operator(t.reshape(op.dim, op.dim), list(dims))


def site_operator(mid: MatrixId, site: int, n_sites: int, d: int = 2) -> Operator:
    """Single-site operator ``M`` at ``site`` on an ``n_sites`` chain."""
    return Operator(_place({site: single_site_matrix(mid, d)}, n_sites, d), [d] * n_sites)


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------


def ising(n: int, J: float = 1.0, boundary: str = "periodic") -> ModelSpec:
    """``H = -J sum_k sz^k sz^{k+1}``."""
    return ModelSpec(n, (LocalTerm(-J, ((0, "z"), (1, "z"))),), boundary=boundary, name="ising")


def heisenberg(n: int, J: float = 1.0, boundary: str = "periodic") -> ModelSpec:
    """Antiferromagnetic for ``J > 0``: ``H = J sum_k s^k . s^{k+1}``."""
    terms = tuple(LocalTerm(J, ((0, a), (1, a))) for a in ("x", "y", "z"))
    return ModelSpec(n, terms, boundary=boundary, name="heisenberg")


def transverse_ising(n: int, J: float = 1.0, h: float = 1.0, boundary: str = "periodic") -> ModelSpec:
    terms = (LocalTerm(-J, ((0, "z"), (1, "z"))), LocalTerm(-h, ((0, "x"),)))
    return ModelSpec(n, terms, boundary=boundary, name="transverse_ising")


def meanfield_h1(n: int, a: float = 1.0) -> ModelSpec:
    """Free spins in an effective field, ``H = a sum_k sz^k``."""
    return ModelSpec(n, (LocalTerm(a, ((0, "z"),)),), name="meanfield_h1")


def meanfield_h2(n: int, c: float = 1.0, coupling: float = 1.0) -> ModelSpec:
    """``H = c sum_k sz^k + (coupling/n) sum_{k != l} s^k . s^l``."""
    return ModelSpec(
        n,
        (LocalTerm(c, ((0, "z"),)),),
        mean_field_terms=(("x", coupling), ("y", coupling), ("z", coupling)),
        name="meanfield_h2",
    )


PRESETS = {
    "ising": ising,
    "heisenberg": heisenberg,
    "transverse_ising": transverse_ising,
    "meanfield_h1": meanfield_h1,
    "meanfield_h2": meanfield_h2,
}


def preset(name: str, n_sites: int, **params) -> ModelSpec:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return factory(n_sites, **params)


def terms_from_spec(raw: Sequence[dict]) -> tuple[LocalTerm, ...]:
    """Build terms from ``[{"coefficient": c, "factors": [[offset, id], ...]}, ...]``."""
    out = []
    for t in raw:
        out.append(LocalTerm(float(t["coefficient"]), tuple((int(o), str(m)) for o, m in t["factors"])))
    return tuple(out)
