import math
import warnings

import numpy as np
import pytest

from katlind.errors import TailTooHeavy
from katlind.fock import (
    FockConfig,
    TruncationWarning,
    annihilation,
    cat_state,
    coherent_legs,
    coherent_state,
    commutator_M,
    creation,
    default_dim,
    fock_state,
    guard_dim,
    kernel_basis,
    ladder_sum_bound,
    lindblad_L,
    max_principal_angle,
    number_op,
    operators,
    svd_kernel,
    weight_S,
)

from conftest import quiet_cfg

# frozen: exp(-1/2), the vacuum amplitude of a unit coherent state
C0_UNIT = 0.6065306597126334
# frozen: symbolic expansion of (n+1)...(n+k) - n(n-1)...(n-k+1), highest power first
M_POLY = {1: [1], 2: [4, 2], 3: [9, 9, 6], 4: [16, 24, 56, 24]}


def test_default_dims():
    assert [default_dim(*c) for c in [(1, 1.0), (2, 1.5), (3, 1.0), (1, 0.0)]] == [35, 46, 44, 24]
    assert guard_dim(2, 1.5) == pytest.approx(25.25)


def test_config_validation_and_warning():
    with pytest.raises(ValueError):
        FockConfig(0, 1, 1.0)
    with pytest.raises(ValueError):
        FockConfig(10, 0, 1.0)
    with pytest.raises(ValueError):
        FockConfig(10, 1, -1.0)
    with pytest.warns(TruncationWarning):
        FockConfig(10, 2, 1.5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        FockConfig(46, 2, 1.5)
    assert FockConfig.with_default_dim(2, 1.5).dim == 46
    assert FockConfig(30, 3, 1.2).drive == pytest.approx(1.2 ** 3)


def test_annihilation_examples():
    assert np.array_equal(annihilation(quiet_cfg(2, 1, 0.0)), np.array([[0, 1], [0, 0]], dtype=complex))
    cfg = FockConfig(10, 1, 0.0)
    a = annihilation(cfg)
    assert np.allclose(a @ fock_state(cfg, 0), 0)
    assert np.allclose(a @ fock_state(cfg, 4), 2 * fock_state(cfg, 3))


def test_number_operator_and_truncation_artifact():
    cfg = FockConfig(10, 1, 0.0)
    a, ad, N = annihilation(cfg), creation(cfg), number_op(cfg)
    assert np.allclose(N @ fock_state(cfg, 3), 3 * fock_state(cfg, 3))
    assert np.allclose(ad @ a, N, atol=1e-14)
    aad = a @ ad
    assert np.allclose(aad[:-1, :-1], (N + np.eye(10))[:-1, :-1], atol=1e-14)
    assert aad[-1, -1] == 0  # would be dim in infinite dimension


def test_lindblad_L_examples():
    cfg = FockConfig(10, 1, 0.0)
    assert np.array_equal(lindblad_L(cfg), annihilation(cfg))
    cfg = quiet_cfg(10, 2, 1.0)
    assert np.allclose(lindblad_L(cfg) @ fock_state(cfg, 1), -fock_state(cfg, 1))
    cfg = FockConfig(40, 2, 1.0)
    assert np.linalg.norm(lindblad_L(cfg) @ coherent_state(cfg, 1.0)) <= 1e-8


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_commutator_matches_symbolic_oracle(k):
    cfg = quiet_cfg(25, k, 1.0)
    n = np.arange(cfg.dim)
    expected = np.polyval(M_POLY[k], n)
    assert np.array_equal(np.diag(commutator_M(cfg)).real, expected.astype(float))


def test_commutator_spot_values():
    cfg = FockConfig(30, 3, 1.0)
    d = np.diag(commutator_M(cfg)).real
    assert d[0] == 6 and d[2] == 60
    assert np.array_equal(np.diag(commutator_M(FockConfig(20, 1, 0.5))), np.ones(20))


@pytest.mark.parametrize("k, dtype, tol", [(1, complex, 1e-12), (2, complex, 1e-12), (3, np.clongdouble, 1e-12)])
def test_commutator_brute_force_interior(k, dtype, tol):
    cfg = FockConfig(30, k, 1.0)
    L = lindblad_L(cfg, dtype)
    Ld = L.conj().T
    n = cfg.dim - k
    diff = (L @ Ld - Ld @ L - commutator_M(cfg, dtype))[:n, :n]
    assert np.max(np.abs(diff)) <= tol


def test_commutator_breaks_on_top_levels():
    cfg = FockConfig(30, 2, 1.0)
    L = lindblad_L(cfg)
    C = L @ L.conj().T - L.conj().T @ L
    assert np.diag(C)[-1].real < 0


@pytest.mark.parametrize("k", [2, 3])
def test_lyapunov_estimate_on_M(k):
    n = np.arange(60)
    M = np.diag(commutator_M(quiet_cfg(60, k, 1.0))).real
    assert np.all(M >= math.factorial(k) * (n + 1))


def test_lyapunov_estimate_fails_for_k1():
    # M = I for k = 1, so M >= k!(N+1) only holds at n = 0; M >= k! I still holds
    M = np.diag(commutator_M(FockConfig(20, 1, 1.0))).real
    assert M[0] >= 1 and np.all(M[1:] < np.arange(2, 21))
    for k in (1, 2, 3):
        assert np.all(np.diag(commutator_M(quiet_cfg(40, k, 1.0))).real >= math.factorial(k))


def test_weight_S():
    cfg = FockConfig(12, 1, 0.0)
    assert np.allclose(weight_S(cfg), np.diag(np.sqrt(1 + np.arange(12))))
    cfg = FockConfig(30, 2, 1.2)
    S = weight_S(cfg)
    LdL = operators(cfg).LdL
    assert np.linalg.norm(S @ S - np.eye(30) - LdL) <= 1e-10 * np.linalg.norm(LdL)
    w, G = np.linalg.eigh(LdL)
    assert np.allclose(S @ G, G * np.sqrt(1 + w), atol=1e-9)


def test_weight_S_quadratic_form(rng):
    cfg = FockConfig(30, 2, 1.2)
    S, L = weight_S(cfg), lindblad_L(cfg)
    psi = rng.normal(size=30) + 1j * rng.normal(size=30)
    lhs = np.vdot(psi, S @ S @ psi).real
    assert lhs == pytest.approx(np.vdot(psi, psi).real + np.linalg.norm(L @ psi) ** 2, rel=1e-10)


def test_coherent_state_oracles():
    cfg = FockConfig(40, 1, 1.0)
    assert np.allclose(coherent_state(cfg, 0), fock_state(cfg, 0))
    c = coherent_state(cfg, 1.0)
    assert c[0].real == pytest.approx(C0_UNIT, abs=1e-12)
    for n in (1, 2, 5):
        assert c[n].real == pytest.approx(C0_UNIT / math.sqrt(math.factorial(n)), abs=1e-12)
    v = coherent_state(cfg, 1.5)
    assert np.linalg.norm(annihilation(cfg) @ v - 1.5 * v) <= 1e-7
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-14)


def test_coherent_tail_guard():
    with pytest.raises(TailTooHeavy):
        coherent_state(quiet_cfg(20, 1, 3.0), 3.0)


def test_cat_states():
    cfg = FockConfig(35, 1, 1.0)
    assert np.allclose(cat_state(cfg, 0), coherent_state(cfg, 1.0))
    cfg = FockConfig(46, 2, 1.5)
    even = cat_state(cfg, 0)
    assert np.max(np.abs(even[1::2])) <= 1e-12
    assert np.linalg.norm(even) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ValueError):
        cat_state(FockConfig(30, 2, 0.0), 0)


@pytest.mark.parametrize("k", [2, 3])
def test_cat_residue_support(k):
    cfg = FockConfig.with_default_dim(k, 1.0)
    n = np.arange(cfg.dim)
    for ell in range(k):
        v = cat_state(cfg, ell)
        off = (n % k) != ((-ell) % k)
        assert np.max(np.abs(v[off])) <= 1e-12


@pytest.mark.parametrize("k, alpha", [(1, 1.0), (2, 1.5), (3, 1.0)])
def test_kernel_basis(k, alpha):
    cfg = FockConfig.with_default_dim(k, alpha)
    basis = kernel_basis(cfg)
    assert len(basis) == k
    B = np.column_stack(basis)
    assert np.allclose(B.conj().T @ B, np.eye(k), atol=1e-13)
    n = np.arange(cfg.dim)
    for r, v in enumerate(basis):
        assert np.all(v[(n % k) != r] == 0)
        assert np.linalg.norm(lindblad_L(cfg) @ v) <= 1e-7
    assert max_principal_angle(B, coherent_legs(cfg)) <= 1e-6
    svd = svd_kernel(cfg)
    assert svd.null_count == k
    assert max_principal_angle(B, svd.null_space) <= 1e-6


def test_kernel_basis_k1_is_coherent():
    cfg = FockConfig(35, 1, 1.0)
    v = kernel_basis(cfg)[0]
    assert abs(np.vdot(v, coherent_state(cfg, 1.0))) == pytest.approx(1.0, abs=1e-12)


def test_svd_kernel_jacobi_agrees():
    cfg = FockConfig(30, 2, 1.0)
    a, b = svd_kernel(cfg), svd_kernel(cfg, method="jacobi")
    assert a.null_count == b.null_count == 2
    assert max_principal_angle(a.null_space, b.null_space) <= 1e-6


def test_principal_angles():
    e = np.eye(4)
    assert max_principal_angle(e[:, :2], e[:, [1, 0]]) == 0.0
    assert max_principal_angle(e[:, :1], e[:, 1:2]) == pytest.approx(math.pi / 2)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_ladder_bound_random_vectors(rng, k):
    cfg = FockConfig(40, k, 1.0)
    for _ in range(200):
        s = int(rng.integers(1, cfg.dim - k + 1))
        psi = np.zeros(cfg.dim, dtype=complex)
        psi[:s] = rng.normal(size=s) + 1j * rng.normal(size=s)
        lhs, rhs = ladder_sum_bound(cfg, psi)
        assert lhs <= rhs


def test_ladder_bound_requires_free_top_levels():
    cfg = FockConfig(20, 2, 0.5)
    with pytest.raises(ValueError):
        ladder_sum_bound(cfg, np.ones(20))
