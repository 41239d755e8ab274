import math

import numpy as np
import pytest

from katlind.errors import IllConditionedPairing, RankMismatch
from katlind.evolve import integrate_rk
from katlind.fock import FockConfig, cat_state, coherent_state, fock_state, kernel_basis, max_principal_angle, projector
from katlind.invariants import (
    adjoint_residuals,
    cat_eigen_check,
    explicit_invariant_labels,
    explicit_invariants,
    kernel_leakage,
    numeric_invariants,
    predict_limit,
    residue_blocks,
)
from katlind.lindblad import apply_adjoint, interior_dim, random_density
from katlind.numerics import trace_distance

from conftest import quiet_cfg


def flat(mats):
    return np.column_stack([m.ravel() for m in mats])


@pytest.fixture(scope="module")
def inv_k2():
    cfg = FockConfig(46, 2, 1.5)
    return cfg, numeric_invariants(cfg)


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_explicit_count_and_form(k):
    cfg = FockConfig(30, k, 1.0) if k < 4 else quiet_cfg(30, k, 1.0)
    invs = explicit_invariants(cfg)
    assert len(invs) == k
    assert sum(lbl.startswith("cos") for lbl in invs) == math.ceil((k - 1) / 2) + 1
    for Q in invs.values():
        assert np.count_nonzero(Q - np.diag(np.diag(Q))) == 0
        assert np.all(np.abs(np.diag(Q)) <= 1)
        assert np.linalg.norm(apply_adjoint(cfg, Q)[: interior_dim(cfg), : interior_dim(cfg)]) <= 1e-8


def test_explicit_examples():
    assert np.array_equal(explicit_invariants(FockConfig(10, 1, 0.5))["cos_0"], np.eye(10))
    par = explicit_invariants(FockConfig(30, 2, 1.0))["cos_1"]
    assert np.allclose(np.diag(par), (-1.0) ** np.arange(30))
    c = np.diag(explicit_invariants(FockConfig(30, 3, 1.0))["cos_1"]).real
    assert np.allclose(c[:6], [1, -0.5, -0.5, 1, -0.5, -0.5])
    assert explicit_invariant_labels(3) == ["cos_0", "cos_1", "sin_1"]


def test_residue_blocks_partition():
    cfg = FockConfig(30, 3, 1.0)
    blocks = residue_blocks(cfg)
    assert len(blocks) == 9
    assert sorted(np.concatenate(blocks).tolist()) == list(range(900))


def test_numeric_k1():
    cfg = FockConfig(35, 1, 1.0)
    inv = numeric_invariants(cfg)
    assert inv.size == 1
    Q, s = inv.observables[0], inv.steady_basis[0]
    assert np.allclose(Q / Q[0, 0], np.eye(35), atol=1e-8)
    coh = projector(coherent_state(cfg, 1.0))
    assert np.allclose(s / np.trace(s), coh, atol=1e-8)


def test_numeric_k2_contains_explicit(inv_k2):
    cfg, inv = inv_k2
    assert inv.size == 4 and inv.gap_ratio > 1e3
    assert inv.condition_number < 1e3
    explicit = list(explicit_invariants(cfg).values())
    assert max_principal_angle(flat(explicit), flat(inv.observables)) <= 1e-4
    assert max(adjoint_residuals(cfg, inv)) <= 1e-6


def test_numeric_k2_dim50():
    cfg = FockConfig(50, 2, 1.5)
    inv = numeric_invariants(cfg)
    assert inv.size == 4
    assert max_principal_angle(flat(explicit_invariants(cfg).values()), flat(inv.observables)) <= 1e-4


def test_steady_basis_lives_on_kernel(inv_k2):
    cfg, inv = inv_k2
    for s in inv.steady_basis:
        assert kernel_leakage(cfg, s) <= 1e-8


def test_blocked_and_full_svd_agree():
    cfg = FockConfig(18, 2, 0.8)
    a = numeric_invariants(cfg, blocked=True)
    b = numeric_invariants(cfg, blocked=False)
    np.testing.assert_allclose(a.singular_values[5:], b.singular_values[5:], rtol=1e-10)
    assert max_principal_angle(flat(a.observables), flat(b.observables)) <= 1e-6


def test_rank_mismatch_below_guard_band():
    with pytest.raises(RankMismatch, match="gap ratio"):
        numeric_invariants(quiet_cfg(10, 2, 1.5))


def test_predict_cat_is_fixed(inv_k2):
    cfg, inv = inv_k2
    for ell in range(2):
        rho0 = projector(cat_state(cfg, ell))
        assert np.max(np.abs(predict_limit(cfg, inv, rho0) - rho0)) <= 1e-6


def test_predict_vacuum_parity(inv_k2):
    cfg, inv = inv_k2
    rho_bar = predict_limit(cfg, inv, projector(fock_state(cfg, 0)))
    parity = explicit_invariants(cfg)["cos_1"]
    assert np.trace(parity @ rho_bar).real == pytest.approx(1.0, abs=1e-6)
    assert np.trace(rho_bar).real == pytest.approx(1.0, abs=1e-8)
    assert np.linalg.eigvalsh(rho_bar)[0] >= -1e-6


def test_predict_matches_long_integration(inv_k2):
    cfg, inv = inv_k2
    rho0 = projector(fock_state(cfg, 0))
    end = integrate_rk(cfg, rho0, 8.0, t_eval=[]).final
    assert trace_distance(predict_limit(cfg, inv, rho0), end) <= 1e-3


def test_predict_is_linear(inv_k2, rng):
    cfg, inv = inv_k2
    a = random_density(cfg.dim, rng, support=interior_dim(cfg))
    b = random_density(cfg.dim, rng, support=interior_dim(cfg))
    mix = predict_limit(cfg, inv, 0.3 * a + 0.7 * b)
    parts = 0.3 * predict_limit(cfg, inv, a) + 0.7 * predict_limit(cfg, inv, b)
    assert np.max(np.abs(mix - parts)) <= 1e-10


def test_predict_refuses_ill_conditioned_pairing(inv_k2):
    cfg, inv = inv_k2
    with pytest.raises(IllConditionedPairing):
        predict_limit(cfg, inv, projector(fock_state(cfg, 0)), max_cond=0.5)


def test_cat_eigen_k2():
    entries = {(e.ell, e.invariant): e for e in cat_eigen_check(FockConfig(46, 2, 1.5))}
    assert entries[(0, "cos_1")].measured == pytest.approx(1.0, abs=1e-9)
    assert entries[(1, "cos_1")].measured == pytest.approx(-1.0, abs=1e-9)
    assert all(e.is_eigenvector and e.magnitude_ok for e in entries.values())


def test_cat_eigen_k3_sign_is_reported():
    entries = {(e.ell, e.invariant): e for e in cat_eigen_check(FockConfig(44, 3, 1.0))}
    c, s = entries[(1, "cos_1")], entries[(1, "sin_1")]
    assert abs(c.measured) == pytest.approx(0.5, abs=1e-9)
    assert abs(s.measured) == pytest.approx(math.sqrt(3) / 2, abs=1e-9)
    # support on n = -ell (mod k) flips the sine relative to +sin(2 pi ell m / k)
    assert s.measured == pytest.approx(-math.sin(2 * math.pi / 3), abs=1e-9)
    assert not s.sign_agrees and c.sign_agrees
    assert all(e.is_eigenvector and e.magnitude_ok for e in entries.values())


def test_cat_eigen_needs_alpha():
    with pytest.raises(ValueError):
        cat_eigen_check(FockConfig(20, 2, 0.0))


def test_kernel_leakage():
    cfg = FockConfig(46, 2, 1.5)
    assert kernel_leakage(cfg, projector(kernel_basis(cfg)[0])) <= 1e-12
    assert kernel_leakage(cfg, projector(fock_state(cfg, 20))) > 0.9
