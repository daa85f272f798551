import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermosep.separability import (
    BudgetExceeded,
    Tag,
    beta_threshold,
    beta_thresholds,
    ccnr_realignment,
    certify,
    chsh_max,
    contiguous_regions,
    entanglement_order,
    enumerate_pairs,
    negativity,
    partial_transpose,
    ppt_min_eig,
    scan_pairs,
    separable_ball_radius,
    tracial_ball_check,
)
from thermosep.spin import build_hamiltonian, heisenberg, ising
from thermosep.thermal import DensityMatrix, RegionPair, Spectrum, product_state

from conftest import random_state

BELL = np.zeros((4, 4))
BELL[np.ix_([0, 3], [0, 3])] = 0.5
BELL = DensityMatrix(BELL, [2, 2])


def werner(p):
    return DensityMatrix(p * BELL.matrix + (1 - p) * np.eye(4) / 4, [2, 2])


def test_bell_state_criteria():
    lo, v = ppt_min_eig(BELL)
    assert lo == pytest.approx(-0.5, abs=1e-14)
    assert v.tag is Tag.NPT_ENTANGLED
    assert negativity(BELL) == pytest.approx(0.5, abs=1e-14)
    assert ccnr_realignment(BELL) == pytest.approx(2.0, abs=1e-12)


def test_tracial_state_certified():
    rho = DensityMatrix(np.eye(4) / 4, [2, 2])
    assert ccnr_realignment(rho) == pytest.approx(0.5)
    assert certify(rho).tag is Tag.SEPARABLE_CERTIFIED
    assert tracial_ball_check(rho)


def test_werner_threshold():
    # entangled iff p > 1/3; min PT eigenvalue is (1 - 3p)/4
    for p in (0.2, 1 / 3 - 1e-6, 1 / 3 + 1e-6, 0.9):
        lo, v = ppt_min_eig(werner(p))
        assert lo == pytest.approx((1 - 3 * p) / 4, abs=1e-13)
        assert v.entangled == (p > 1 / 3)


def test_ball_radius_boundary():
    D = 4
    r = separable_ball_radius(D)
    assert r == pytest.approx(1 / math.sqrt(12))
    # Werner state at the ball radius is still PPT
    p = r / np.linalg.norm(BELL.matrix - np.eye(4) / 4)
    assert tracial_ball_check(werner(p * (1 - 1e-9)))
    assert not ppt_min_eig(werner(p))[1].entangled


def test_partial_transpose_involution(rng):
    rho = DensityMatrix(random_state(rng, 6), [2, 3])
    pt = partial_transpose(rho)
    assert np.allclose(partial_transpose(DensityMatrix(pt, [2, 3])), rho.matrix)


@given(st.integers(0, 2**31 - 1), st.sampled_from([(2, 2), (2, 3), (3, 3)]))
@settings(max_examples=30, deadline=None)
def test_product_states_are_ppt(seed, dims):
    rng = np.random.default_rng(seed)
    rho = product_state([random_state(rng, dims[0]), random_state(rng, dims[1])])
    assert not ppt_min_eig(rho)[1].entangled
    assert negativity(rho) <= 1e-12
    assert ccnr_realignment(rho) <= 1 + 1e-10


def test_chsh_bell_and_product(rng):
    res = chsh_max(BELL, restarts=4)
    assert res.value == pytest.approx(2 * math.sqrt(2), abs=1e-9)
    prod = product_state([random_state(rng, 2), random_state(rng, 2)])
    assert chsh_max(prod, restarts=4).value <= 2 + 1e-9


def test_chsh_werner_horodecki():
    # optimum for Werner states is 2 sqrt(2) p
    assert chsh_max(werner(0.8), restarts=6).value == pytest.approx(2 * math.sqrt(2) * 0.8, abs=1e-8)


def test_chsh_qutrit_at_least_trivial_strategy(rng):
    # all observables = identity already score 2
    rho = DensityMatrix(random_state(rng, 9), [3, 3])
    assert chsh_max(rho, restarts=4).value >= 2 - 1e-9


def test_region_enumeration():
    assert contiguous_regions(4, 2) == [(0, 1), (1, 2), (2, 3), (3, 0)]
    assert contiguous_regions(4, 2, periodic=False) == [(0, 1), (1, 2), (2, 3)]
    pairs = enumerate_pairs(4, 1)
    assert [p.label() for p in pairs] == ["0|1", "0|2", "0|3", "1|2", "1|3", "2|3"]
    pairs = enumerate_pairs(6, 2)
    assert len(set(pairs)) == len(pairs)
    assert all(p.region1 < p.region2 for p in pairs)


def test_entanglement_order_product_and_heisenberg():
    rho = product_state([np.eye(2) / 2] * 4)
    rep = entanglement_order(rho, 2)
    assert rep.first_entangled_N is None and not rep.entangled
    sp = Spectrum(build_hamiltonian(heisenberg(4)))
    rep = entanglement_order(sp.gibbs(2.0), 2)
    assert rep.first_entangled_N == 1
    assert rep.witness_pair == RegionPair((0,), (1,))


def test_entanglement_order_budget():
    rho = product_state([np.eye(2) / 2] * 6)
    with pytest.raises(BudgetExceeded):
        entanglement_order(rho, 2, max_pairs=3)


def test_two_site_threshold_matches_closed_form():
    # singlet weight e^{3b}/(e^{3b} + 3 e^{-b}) crosses 1/2 at b = ln(3)/4
    b = beta_threshold(heisenberg(2, boundary="open"), RegionPair((0,), (1,)), 0.0, 2.0)
    assert b == pytest.approx(math.log(3) / 4, abs=1e-6)


def test_threshold_none_and_already_npt():
    pair = RegionPair((0,), (1,))
    assert beta_threshold(ising(4), pair, 0.0, 5.0) is None
    with pytest.raises(ValueError):
        beta_threshold(heisenberg(2, boundary="open"), pair, 1.0, 2.0)


def test_batched_thresholds_agree():
    m = heisenberg(4)
    pairs = enumerate_pairs(4, 1)
    batch = beta_thresholds(m, pairs, 0.0, 5.0)
    for p in pairs:
        single = beta_threshold(m, p, 0.0, 5.0)
        if single is None:
            assert batch[p] is None
        else:
            assert batch[p] == pytest.approx(single, abs=2e-6)


def test_scan_pairs_rows():
    rows = scan_pairs(ising(4), enumerate_pairs(4, 1), [0.0, 1.0])
    assert len(rows) == 12
    assert all(not r[4].entangled for r in rows)
