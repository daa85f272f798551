"""Analytic high-temperature bounds and their comparison with exact thresholds.

The perturbative construction writes the state on matrix units as
``sum_n (K + L)^n delta`` with ``|K| = 1/(d+1)`` and the printed bound

    |L| <= (d+1)^2 * 2 beta h / (1 - 2 beta h),

where ``h`` is a norm of the local interaction.  The series surely converges
when ``|K| + |L| < 1``, which fixes :func:`series_beta_max`.  Only the norms are
modelled here; the kernel ``L`` itself is not.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .separability import BETA_TOL, PPT_TOL, beta_thresholds, enumerate_pairs
from .spin import ModelSpec, single_site_matrix
from .thermal import RegionPair

NORM_CAVEAT = (
    "interaction norm is a per-cell sum of term operator norms; whether the same norm "
    "enters the |L| bound and the convergence statement is not specified"
)


def k_norm(d: int) -> float:
    if d < 2:
        raise ValueError(f"site dimension must be >= 2, got {d}")
    return 1.0 / (d + 1)


def l_bound(beta: float, h_norm: float, d: int) -> float:
    x = 2.0 * beta * h_norm
    if beta < 0 or h_norm < 0:
        raise ValueError("beta and h_norm must be nonnegative")
    if x >= 1.0:
        raise ValueError(f"bound diverges: 2*beta*h = {x} >= 1")
    return (d + 1) ** 2 * x / (1.0 - x)


def series_beta_max(d: int, h_norm: float) -> float:
    """Largest beta with ``k_norm(d) + l_bound(beta, h, d) <= 1``.

    With ``x = 2 beta h`` and ``r = d/(d+1)`` the condition
    ``(d+1)^2 x/(1-x) = r`` gives ``x = r / ((d+1)^2 + r)``.
    """
    k_norm(d)
    if h_norm <= 0:
        raise ValueError("h_norm must be positive")
    r = d / (d + 1.0)
    x = r / ((d + 1) ** 2 + r)
    return x / (2.0 * h_norm)


def _op_norm(mid, d: int) -> float:
    return float(np.linalg.norm(single_site_matrix(mid, d), 2))


def interaction_norm_surrogate(model: ModelSpec, mean_field: str = "reject") -> float:
    """Sum over local terms of ``|coefficient| * prod ||factor||``.

    Mean-field couplings are not finite-range; they raise unless
    ``mean_field="per_site"``, which adds each site's share
    ``(n-1)/n * 2 * |g| * ||M||^2`` of the ``g/n sum_{k != l}`` coupling.
    """
    d = model.site_dim
    h = 0.0
    for t in model.terms:
        h += abs(t.coefficient) * float(np.prod([_op_norm(m, d) for _, m in t.factors]))
    if model.mean_field_terms:
        if mean_field != "per_site":
            raise ValueError("mean-field couplings have no finite-range interaction norm")
        n = model.n_sites
        for mid, g in model.mean_field_terms:
            h += (n - 1) / n * 2.0 * abs(g) * _op_norm(mid, d) ** 2
    return h


@dataclass
class BoundReport:
    model: str
    d: int
    h_norm: float
    k_norm: float
    beta_star_analytic: float
    beta_star_numeric: float | None
    consistent: bool
    pair_thresholds: dict[str, float | None] = field(default_factory=dict)
    l_bound_curve: list[tuple[float, float]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "d": self.d,
            "h_norm": self.h_norm,
            "k_norm": self.k_norm,
            "beta_star_analytic": self.beta_star_analytic,
            "beta_star_numeric": self.beta_star_numeric,
            "consistent": self.consistent,
            "pair_thresholds": self.pair_thresholds,
            "l_bound_curve": [list(p) for p in self.l_bound_curve],
            "notes": self.notes,
        }


def bound_vs_numeric(
    model: ModelSpec,
    pairs: Sequence[RegionPair] | None = None,
    max_region: int = 2,
    beta_hi: float = 10.0,
    n_grid: int = 64,
    tol_beta: float = BETA_TOL,
    tol: float = PPT_TOL,
    h_norm: float | None = None,
    curve_points: int = 16,
) -> BoundReport:
    """Check that the analytic threshold never exceeds any exact NPT threshold."""
    d = model.site_dim
    notes = [NORM_CAVEAT]
    if h_norm is None:
        mf = "per_site" if model.mean_field_terms else "reject"
        if model.mean_field_terms:
            notes.append("mean-field couplings counted by their per-site share")
        h_norm = interaction_norm_surrogate(model, mean_field=mf)
    if h_norm > 0:
        b_an = series_beta_max(d, h_norm)
    else:
        b_an = float("inf")
    if pairs is None:
        pairs = enumerate_pairs(model.n_sites, max_region, periodic=model.boundary == "periodic")
    found_by_pair = beta_thresholds(model, pairs, 0.0, beta_hi, tol_beta=tol_beta, n_grid=n_grid, tol=tol)
    thresholds = {p.label(): b for p, b in found_by_pair.items()}
    found = [b for b in thresholds.values() if b is not None]
    b_num = min(found) if found else None
    consistent = all(b >= b_an for b in found)
    curve = []
    if np.isfinite(b_an) and h_norm > 0:
        bmax = 0.5 / h_norm
        for b in np.linspace(0.0, 0.95 * bmax, curve_points):
            curve.append((float(b), l_bound(float(b), h_norm, d)))
    return BoundReport(model.name, d, h_norm, k_norm(d), b_an, b_num, consistent, thresholds, curve, notes)
