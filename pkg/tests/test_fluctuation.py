import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize
from scipy.linalg import expm

from thermosep.fluctuation import (
    FluctuationError,
    GaussianState,
    MeanFieldParams,
    alpha_beta_sweep,
    build_fluctuation_algebra,
    factorized_state_check,
    gaussian_kms_state,
    gaussian_ppt,
    inequality_23,
    linearized_generator,
    normal_modes,
    selfconsistent_sz,
    sweep_point,
    uncertainty_check,
)
from thermosep.separability import Tag


def modes_for(c=1.0, s=-0.3, alpha=0.5, lam=2.0):
    alg = build_fluctuation_algebra(s, alpha)
    return alg, normal_modes(linearized_generator(c, s, alpha, lam), alg)


# --- self-consistency ---------------------------------------------------------


def test_fixed_point_against_bisection_oracle():
    fp = selfconsistent_sz(1.0, 1.0, 1.0)
    ref = optimize.bisect(lambda s: s + math.tanh(1.0 + s), -1, 1, xtol=1e-15)
    assert fp.s_z == pytest.approx(ref, abs=1e-12)
    assert fp.a_eff == pytest.approx(1.0 + fp.s_z)


@pytest.mark.parametrize("beta", [0.3, 1.0, 7.0])
def test_symmetric_and_tracial_cases(beta):
    assert selfconsistent_sz(0.0, beta, 1.0).s_z == 0.0
    assert selfconsistent_sz(0.7, 0.0, 2.0).s_z == 0.0


def test_ground_state_limit():
    fp = selfconsistent_sz(0.2, math.inf, 2.0)
    assert fp.s_z == pytest.approx(-0.1) and fp.a_eff == pytest.approx(0.0)
    assert selfconsistent_sz(3.0, math.inf, 2.0).s_z == -1.0
    # large finite beta approaches the limit
    assert selfconsistent_sz(0.2, 200.0, 2.0).s_z == pytest.approx(-0.1, abs=1e-2)


def test_multiplicity_flag_ferromagnetic():
    fp = selfconsistent_sz(0.0, 3.0, -1.0)
    assert fp.multiple and fp.n_roots == 3
    assert fp.s_z == 0.0


@given(st.floats(-2, 2), st.floats(0.01, 30), st.floats(-3, 3))
@settings(max_examples=80, deadline=None)
def test_fixed_point_residual(c, beta, lam):
    fp = selfconsistent_sz(c, beta, lam, tol=1e-12)
    assert abs(fp.s_z + math.tanh(beta * (c + lam * fp.s_z))) <= 1e-12


def test_params_validation():
    with pytest.raises(ValueError):
        MeanFieldParams(c=1.0, beta=1.0, alpha=1.0)
    with pytest.raises(ValueError):
        selfconsistent_sz(1.0, -1.0)


def test_factorization_trend():
    rep = factorized_state_check(0.5, 1.0, n_values=(2, 4, 6, 8))
    assert rep.decreasing and bool(rep)
    assert rep.connected[-1] < rep.connected[0]
    zero = factorized_state_check(0.5, 0.0, n_values=(2, 4))
    assert max(zero.connected) < 1e-14


# --- algebra and generator ----------------------------------------------------


def test_algebra_weights():
    alg = build_fluctuation_algebra(-1.0, 0.5)
    assert alg.weights == (-0.5, -0.5)
    assert alg.symplectic_form[0, 1] == -0.5 and alg.symplectic_form[2, 3] == -0.5
    assert build_fluctuation_algebra(0.5, 1e-4).near_degenerate
    with pytest.raises(FluctuationError):
        build_fluctuation_algebra(0.0, 0.3)


def test_canonical_map_reproduces_form():
    alg = build_fluctuation_algebra(-0.4, 0.3)
    L = alg.canonical_map()
    Jc = np.kron(np.eye(2), [[0, 1], [-1, 0]])
    assert np.allclose(L @ Jc @ L.T, alg.symplectic_form)


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.8])
def test_flow_preserves_form(alpha):
    alg = build_fluctuation_algebra(-0.3, alpha)
    G = linearized_generator(1.0, -0.3, alpha)
    for t in (0.1, 1.0, 10.0):
        E = expm(G * t)
        assert np.max(np.abs(E @ alg.symplectic_form @ E.T - alg.symplectic_form)) <= 1e-10


def test_swap_symmetry_at_half():
    G = linearized_generator(0.7, -0.4, 0.5)
    P = np.kron([[0, 1], [1, 0]], np.eye(2))
    assert np.allclose(P @ G @ P, G)


def test_small_sz_decouples():
    G = linearized_generator(1.0, 1e-12, 0.3)
    assert np.allclose(np.sort(np.abs(np.linalg.eigvals(G).imag)), [1, 1, 1, 1])


def test_raw_generator_rejected():
    alg = build_fluctuation_algebra(-0.3, 0.3)
    with pytest.raises(FluctuationError):
        normal_modes(linearized_generator(1.0, -0.3, 0.3, raw=True), alg)


# --- normal modes -------------------------------------------------------------


@pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
def test_modes_round_trip_and_orthogonality(alpha):
    alg, m = modes_for(alpha=alpha)
    G = linearized_generator(1.0, -0.3, alpha)
    assert np.max(np.abs(m.generator() - G)) <= 1e-9
    assert m.nu1 > 0 and m.nu2 > 0
    if alpha == 0.5:
        assert abs(m.orthogonality) <= 1e-10
    assert m.y_residual <= 1e-10


def test_modes_canonical():
    alg, m = modes_for(alpha=0.3)
    T = m.transform
    Jc = np.kron(np.eye(2), [[0, 1], [-1, 0]])
    # the new coordinates have [x, p] = i: T Omega T^T = J
    assert np.allclose(T @ alg.symplectic_form @ T.T, Jc)


def test_decoupled_frequencies():
    # with lambda = 0 both sides rotate at frequency c, i.e. H = (c/2)(x^2 + p^2) per side
    alg = build_fluctuation_algebra(-0.5, 0.4)
    m = normal_modes(linearized_generator(0.8, -0.5, 0.4, lam=0.0), alg)
    assert (m.nu1, m.nu2) == pytest.approx((0.4, 0.4))


def test_zero_frequency_reported():
    alg = build_fluctuation_algebra(-0.1, 0.3)
    with pytest.raises(FluctuationError, match="frequency"):
        normal_modes(linearized_generator(0.2, -0.1, 0.3, lam=2.0), alg)


# --- Gaussian states ----------------------------------------------------------


def test_ground_state_and_high_temperature():
    alg, m = modes_for(alpha=0.3)
    g = gaussian_kms_state(m, math.inf)
    Tg = m.transform @ g.covariance @ m.transform.T
    assert np.allclose(Tg, 0.5 * np.eye(4))
    hot = gaussian_kms_state(m, 1e-4)
    Th = m.transform @ hot.covariance @ m.transform.T
    assert Th[0, 0] == pytest.approx(1 / (2 * 1e-4 * m.nu1), rel=1e-6)
    assert np.all(np.linalg.eigvalsh(hot.covariance) > 0)


def test_state_invariant_and_uncertainty():
    alg, m = modes_for(alpha=0.7)
    for b in (0.1, 1.0, 10.0, math.inf):
        st_ = gaussian_kms_state(m, b)
        assert st_.uncertainty_min_eig(alg) >= -1e-10
        assert uncertainty_check(st_, alg)


def test_uncertainty_violating_fixture():
    alg = build_fluctuation_algebra(-1.0, 0.5)
    bad = GaussianState(np.zeros(4), 0.01 * np.eye(4))
    assert not uncertainty_check(bad, alg)
    assert bad.uncertainty_min_eig(alg) < 0


def test_gaussian_kms_state_errors():
    alg, m = modes_for()
    with pytest.raises(ValueError):
        gaussian_kms_state(m, 0.0)
    m.nu1 = -1.0
    with pytest.raises(FluctuationError):
        gaussian_kms_state(m, 1.0)


def test_inequality_and_ppt_on_known_states():
    alg = build_fluctuation_algebra(-1.0, 0.5)
    vac = GaussianState(np.zeros(4), 0.25 * np.eye(4))  # product of minimum-uncertainty states
    lhs, rhs, ok = inequality_23(vac, -1.0)
    assert (lhs, rhs, ok) == (1.0, 1.0, True)
    assert gaussian_ppt(vac, alg).tag is Tag.PPT_PASS
    # EPR-correlated state: squeeze S_lx + S_rx and S_ly - S_ry
    r = 1.0
    u = np.array([1, 0, 1, 0]) / math.sqrt(2)
    v = np.array([0, -1, 0, 1]) / math.sqrt(2)
    w1 = np.array([1, 0, -1, 0]) / math.sqrt(2)
    w2 = np.array([0, 1, 0, 1]) / math.sqrt(2)
    V = 0.25 * (math.exp(-2 * r) * (np.outer(u, u) + np.outer(v, v)) + math.exp(2 * r) * (np.outer(w1, w1) + np.outer(w2, w2)))
    epr = GaussianState(np.zeros(4), V)
    assert epr.uncertainty_min_eig(alg) >= -1e-12
    lhs, rhs, ok = inequality_23(epr, -1.0)
    assert not ok and lhs == pytest.approx(math.exp(-2 * r))
    assert gaussian_ppt(epr, alg).tag is Tag.NPT_ENTANGLED
    assert inequality_23(epr, -1.0, "paper_literal")[0] != lhs
    with pytest.raises(ValueError):
        inequality_23(epr, -1.0, "bogus")


# --- sweep --------------------------------------------------------------------


def test_sweep_point_fields():
    rec = sweep_point(1.0, 2.0, 0.5, 2.0)
    assert rec.error is None and rec.verdict in ("PPT_pass", "NPT_entangled")
    assert rec.values["ineq23_holds"] is True
    assert abs(rec.values["a1b1_a2b2"]) <= 1e-10


def test_sweep_errors_recorded_per_row():
    recs = alpha_beta_sweep(0.2, 2.0, [0.3], [1.0, math.inf])
    assert recs[0].error is None
    assert recs[1].error and "frequency" in recs[1].error
    assert sweep_point(0.2, 2.0, 0.3, 0.0).error


def test_sweep_violation_implies_npt():
    recs = alpha_beta_sweep(1.0, 1.0, [0.2, 0.5, 0.8], [0.5, 5.0])
    for r in recs:
        if r.values.get("ineq23_holds") is False:
            assert r.verdict == "NPT_entangled"
