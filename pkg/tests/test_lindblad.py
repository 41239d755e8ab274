import math

import numpy as np
import pytest

from katlind.errors import DimensionTooLarge, InvalidState, NotHermitian
from katlind.fock import FockConfig, cat_state, fock_state, kernel_basis, number_op, operators, projector
from katlind.lindblad import (
    adjoint_generator,
    apply_A,
    apply_adjoint,
    apply_generator,
    dissipation_rate,
    interior_dim,
    l_norm,
    lyapunov_V,
    random_density,
    random_hermitian,
    unvec,
    validate_density,
    vec,
    vectorize_generator,
)
from katlind.numerics import trace_norm

from conftest import quiet_cfg


def test_vec_is_column_stacking():
    X = np.array([[1, 2], [3, 4]])
    assert vec(X).tolist() == [1, 3, 2, 4]
    assert np.array_equal(unvec(vec(X), 2), X)


def test_generator_kills_kernel_states():
    cfg = FockConfig(46, 2, 1.5)
    for v in kernel_basis(cfg):
        assert np.linalg.norm(apply_generator(cfg, projector(v))) <= 1e-7
    assert np.linalg.norm(apply_generator(cfg, projector(cat_state(cfg, 1)))) <= 1e-7


def test_generator_is_traceless_and_hermitian(rng):
    cfg = FockConfig(20, 2, 1.0)
    X = random_hermitian(20, rng)
    G = apply_generator(cfg, X)
    assert abs(np.trace(G)) <= 1e-12 * np.linalg.norm(X) * np.linalg.norm(operators(cfg).LdL)
    assert np.array_equal(G, G.conj().T)
    assert np.allclose(apply_A(cfg, X) + G, 0)


def test_generator_rejects_non_hermitian():
    cfg = FockConfig(10, 1, 0.5)
    with pytest.raises(NotHermitian):
        apply_generator(cfg, np.triu(np.ones((10, 10))))


def test_superoperator_matches_direct_action(rng):
    cfg = quiet_cfg(12, 2, 1.0)
    Lm = vectorize_generator(cfg)
    for _ in range(5):
        X = random_hermitian(12, rng)
        assert np.linalg.norm(Lm @ vec(X) - vec(apply_generator(cfg, X))) <= 1e-12 * np.linalg.norm(Lm) * np.linalg.norm(X)


def test_adjoint_duality(rng):
    cfg = quiet_cfg(10, 2, 1.0)
    for _ in range(50):
        Q, X = random_hermitian(10, rng), random_hermitian(10, rng)
        lhs = np.trace(Q @ apply_generator(cfg, X))
        rhs = np.trace(apply_adjoint(cfg, Q) @ X)
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))
    Ad = adjoint_generator(cfg)
    Q = random_hermitian(10, rng)
    assert np.allclose(Ad @ vec(Q), vec(apply_adjoint(cfg, Q)))
    assert np.linalg.norm(apply_adjoint(cfg, np.eye(10))) <= 1e-12


def test_adjoint_photon_loss():
    cfg = FockConfig(12, 1, 0.0)
    N = number_op(cfg)
    assert np.allclose(apply_adjoint(cfg, N), -N, atol=1e-13)


def test_memory_guard():
    with pytest.raises(DimensionTooLarge):
        vectorize_generator(FockConfig(201, 1, 0.0))


def test_l_norm_examples():
    cfg = FockConfig(10, 1, 0.0)
    assert l_norm(cfg, projector(fock_state(cfg, 0))) == pytest.approx(1.0)
    assert l_norm(cfg, projector(fock_state(cfg, 1))) == pytest.approx(2.0)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_l_norm_is_one_plus_V(rng, k):
    cfg = FockConfig(30, k, 1.0)
    for _ in range(5):
        rho = random_density(30, rng)
        assert l_norm(cfg, rho) == pytest.approx(1.0 + lyapunov_V(cfg, rho), rel=1e-9)


def test_l_norm_dominates_trace_norm(rng):
    cfg = FockConfig(20, 2, 1.0)
    for _ in range(10):
        X = random_hermitian(20, rng)
        assert l_norm(cfg, X) >= trace_norm(X) - 1e-9


def test_lyapunov_examples():
    cfg = FockConfig(46, 2, 1.5)
    vac = projector(fock_state(cfg, 0))
    kern = projector(kernel_basis(cfg)[0])
    assert lyapunov_V(cfg, vac) == pytest.approx(1.5 ** 4)
    assert lyapunov_V(cfg, kern) <= 1e-10
    assert lyapunov_V(cfg, 0.5 * vac + 0.5 * kern) == pytest.approx(1.5 ** 4 / 2, abs=1e-7)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_dissipation_inequality(rng, k):
    cfg = FockConfig(30, k, 1.0)
    for _ in range(100):
        rho = random_density(30, rng, support=interior_dim(cfg))
        V = lyapunov_V(cfg, rho)
        assert dissipation_rate(cfg, rho) <= -math.factorial(k) * V + 1e-8 * max(1.0, V)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_weighted_commutator_identity(rng, k):
    # tr(S A(rho) S) = tr(sqrt(M) L rho L^dag sqrt(M)) on interior-supported states
    cfg = FockConfig(30, k, 1.0)
    ops = operators(cfg)
    sM = np.diag(np.sqrt(np.diag(ops.M).real))
    for _ in range(5):
        rho = random_density(30, rng, support=interior_dim(cfg))
        lhs = np.trace(ops.S @ apply_A(cfg, rho) @ ops.S).real
        rhs = np.trace(sM @ ops.L @ rho @ ops.Ld @ sM).real
        assert lhs == pytest.approx(rhs, rel=1e-10)


def test_validate_density():
    good = np.diag([0.5, 0.5, 0.0]).astype(complex)
    assert np.array_equal(validate_density(good), good)
    with pytest.raises(InvalidState):
        validate_density(np.diag([0.5, 0.6, 0.0]))
    with pytest.raises(InvalidState):
        validate_density(np.diag([1.1, -0.1, 0.0]))
    with pytest.raises(InvalidState):
        validate_density(np.array([[0.5, 0.1], [0.0, 0.5]]))
    with pytest.raises(InvalidState):
        validate_density(np.ones(3))


def test_random_density_support(rng):
    rho = random_density(10, rng, support=4)
    validate_density(rho)
    assert np.all(rho[4:, :] == 0) and np.all(rho[:, 4:] == 0)
    with pytest.raises(ValueError):
        random_density(10, rng, support=11)
