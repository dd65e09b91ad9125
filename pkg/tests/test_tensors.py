"""Tensor-core tests.

The reaction and realification checks compare against independent
brute-force oracles written with explicit Python loops, so they do not
share code paths with the library implementations they validate.
"""

import numpy as np
import pytest

from curvlab.errors import InvalidInputError
from curvlab.rng import derive_rng
from curvlab.samplers import flat, fubini_study, direct_sum, sphere
from curvlab.tensors import (
    CONSTRUCTION_TOL,
    KAHLER_REACTION_REALIFY_SCALE,
    Frame,
    KahlerTensor,
    RiemannTensor,
    bianchi_residual,
    conjugate,
    curvature_operator,
    frame_value,
    make_kahler,
    make_riemann,
    operator_to_riemann,
    reaction_kahler,
    reaction_riemann,
    reaction_riemann_bianchi_residual,
    realify,
    ricci,
    ricci_eigenvalues,
    scalar,
)


def random_riemann_raw(n, seed):
    return derive_rng(seed).standard_normal((n, n, n, n))


def random_kahler_raw(n, seed):
    rng = derive_rng(seed)
    return rng.standard_normal((n, n, n, n)) + 1j * rng.standard_normal((n, n, n, n))


# ---------------------------------------------------------------------------
# independent oracles (loops only, no shared code with the library)


def oracle_lambda2_matrix(c):
    """Curvature operator on unit-norm e_i ^ e_j, i < j, by explicit loops."""
    n = c.shape[0]
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    m = np.zeros((len(pairs), len(pairs)))
    for a, (i, j) in enumerate(pairs):
        for b, (k, l) in enumerate(pairs):
            m[a, b] = c[i, j, k, l]
    return pairs, m


def oracle_reaction_riemann(c):
    """2 * (M^2 + M#) written out with loops and explicit structure constants."""
    n = c.shape[0]
    pairs, m = oracle_lambda2_matrix(c)
    N = len(pairs)

    def basis_matrix(a):
        i, j = pairs[a]
        E = np.zeros((n, n))
        E[i, j], E[j, i] = 1.0, -1.0
        return E

    # structure constants of the commutator; the antisymmetric-matrix inner
    # product is <A,B> = tr(A^T B)/2, in which basis_matrix is unit-norm
    cc = np.zeros((N, N, N))
    for a in range(N):
        Ea = basis_matrix(a)
        for b in range(N):
            Eb = basis_matrix(b)
            Cm = Ea @ Eb - Eb @ Ea
            for g in range(N):
                cc[a, b, g] = 0.5 * np.sum(Cm * basis_matrix(g))
    sharp = np.zeros((N, N))
    for a in range(N):
        for b in range(N):
            acc = 0.0
            for g in range(N):
                for d in range(N):
                    for e in range(N):
                        for z in range(N):
                            acc += cc[a, g, d] * cc[b, e, z] * m[g, e] * m[d, z]
            sharp[a, b] = 0.5 * acc
    out_m = 2.0 * (m @ m + sharp)
    out = np.zeros((n, n, n, n))
    for a, (i, j) in enumerate(pairs):
        for b, (k, l) in enumerate(pairs):
            v = out_m[a, b]
            out[i, j, k, l] = v
            out[j, i, k, l] = -v
            out[i, j, l, k] = -v
            out[j, i, l, k] = v
    return out


def oracle_reaction_kahler(c):
    """Quadratic reaction term of the Kahler flow, by explicit loops."""
    n = c.shape[0]
    out = np.zeros((n, n, n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    acc = 0.0
                    for p in range(n):
                        for q in range(n):
                            acc += (
                                c[i, j, q, p] * c[p, q, k, l]
                                + c[i, l, q, p] * c[p, q, k, j]
                                - c[i, p, k, q] * c[p, j, q, l]
                            )
                    out[i, j, k, l] = acc
    return out


def oracle_realify(K):
    """Real tensor of a Kahler one on R^2n, via R(X,Y,Z,W) loops.

    Real vector (a, b) represents the holomorphic vector (a - i b)/sqrt(2)
    in the convention where e_k corresponds to (d/dx_k, d/dy_k).
    """
    n = K.dim
    c = K.components

    def curv(X, Y, Z, W):
        # complexify: real 2n-vector -> holomorphic n-vector
        def holo(V):
            return (V[:n] - 1j * V[n:]) / np.sqrt(2.0)

        x, y, z, w = holo(X), holo(Y), holo(Z), holo(W)
        # R(X,Y,Z,W) from the (1,1)-part of the Kahler tensor
        acc = 0.0
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    for l in range(n):
                        term = c[i, j, k, l] * (
                            x[i] * np.conj(y[j]) - y[i] * np.conj(x[j])
                        ) * (z[k] * np.conj(w[l]) - w[k] * np.conj(z[l]))
                        acc += term
        return -np.real(acc)

    N = 2 * n
    out = np.zeros((N, N, N, N))
    eye = np.eye(N)
    for i in range(N):
        for j in range(N):
            for k in range(N):
                for l in range(N):
                    out[i, j, k, l] = curv(eye[i], eye[j], eye[k], eye[l])
    return out


# ---------------------------------------------------------------------------
# construction and symmetry


@pytest.mark.parametrize("n", [2, 3, 4])
def test_make_riemann_idempotent(n):
    T = make_riemann(random_riemann_raw(n, 10 + n))
    T2 = make_riemann(T.components)
    assert np.max(np.abs(T.components - T2.components)) < 1e-14


def test_make_riemann_fixes_valid_input():
    S = sphere(4, 1.3)
    T = make_riemann(S.components)
    assert np.max(np.abs(T.components - S.components)) < 1e-14


@pytest.mark.parametrize("n", [1, 2, 3])
def test_make_kahler_idempotent(n):
    K = make_kahler(random_kahler_raw(n, 20 + n))
    K2 = make_kahler(K.components)
    assert np.max(np.abs(K.components - K2.components)) < 1e-14


def test_make_kahler_fixes_fubini_study_raw():
    n = 2
    eye = np.eye(n)
    raw = np.einsum("ij,kl->ijkl", eye, eye) + np.einsum("il,kj->ijkl", eye, eye)
    K = make_kahler(raw.astype(complex))
    assert np.max(np.abs(K.components - raw)) < 1e-14


def test_make_riemann_symmetries_and_bianchi():
    T = make_riemann(random_riemann_raw(4, 3))
    c = T.components
    n = 4
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    assert abs(c[i, j, k, l] + c[j, i, k, l]) < 1e-13
                    assert abs(c[i, j, k, l] + c[i, j, l, k]) < 1e-13
                    assert abs(c[i, j, k, l] - c[k, l, i, j]) < 1e-13
                    assert abs(c[i, j, k, l] + c[i, k, l, j] + c[i, l, j, k]) < 1e-12
    assert bianchi_residual(T) < CONSTRUCTION_TOL * max(T.norm, 1.0)


def test_make_kahler_symmetries():
    K = make_kahler(random_kahler_raw(3, 4))
    c = K.components
    assert np.max(np.abs(c - c.transpose(2, 1, 0, 3))) < 1e-13
    assert np.max(np.abs(c - c.transpose(0, 3, 2, 1))) < 1e-13
    assert np.max(np.abs(np.conj(c) - c.transpose(1, 0, 3, 2))) < 1e-13


def test_zero_input_gives_zero_tensor():
    assert make_riemann(np.zeros((3,) * 4)).norm == 0.0
    assert make_kahler(np.zeros((2,) * 4, dtype=complex)).norm == 0.0


def test_make_riemann_shape_errors():
    with pytest.raises(InvalidInputError):
        make_riemann(np.zeros((3, 3, 3)))
    with pytest.raises(InvalidInputError):
        make_riemann(np.zeros((2, 3, 3, 3)))


def test_validate_rejects_broken_symmetry():
    T = sphere(3, 1.0)
    bad = T.components.copy()
    bad[0, 1, 0, 1] += 0.5
    with pytest.raises(InvalidInputError):
        RiemannTensor(3, bad).validate()


# ---------------------------------------------------------------------------
# ricci / scalar / fixtures


@pytest.mark.parametrize("n", [3, 5, 7])
def test_sphere_ricci_scalar(n):
    S = sphere(n, 1.0)
    assert np.allclose(ricci(S), (n - 1) * np.eye(n), atol=1e-12)
    assert abs(scalar(S) - n * (n - 1)) < 1e-12
    # every sectional curvature equals c
    rng = derive_rng(77)
    for _ in range(5):
        q, _ = np.linalg.qr(rng.standard_normal((n, 2)))
        F = Frame("orthonormal-real", q.T)
        assert abs(frame_value(S, F, "sectional") - 1.0) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 4])
def test_fubini_study_ricci_scalar(n):
    K = fubini_study(n, 1.0)
    assert np.allclose(ricci(K), (n + 1) * np.eye(n), atol=1e-12)
    assert abs(scalar(K) - n * (n + 1)) < 1e-12


def test_ricci_eigenvalues_sorted():
    T = make_riemann(random_riemann_raw(5, 8))
    lam = ricci_eigenvalues(T)
    assert np.all(np.diff(lam) >= 0)
    assert np.allclose(lam, np.linalg.eigvalsh(ricci(T)))


def test_direct_sum_blocks():
    P = direct_sum(sphere(2, 1.0), sphere(3, 1.0))
    assert P.dim == 5
    r = ricci(P)
    assert np.allclose(np.diag(r), [1, 1, 2, 2, 2], atol=1e-12)
    # mixed-plane sectional curvatures vanish
    e = np.eye(5)
    F = Frame("orthonormal-real", np.stack([e[0], e[3]]))
    assert abs(frame_value(P, F, "sectional")) < 1e-14


# ---------------------------------------------------------------------------
# curvature operator


def test_curvature_operator_matches_loop_oracle():
    T = make_riemann(random_riemann_raw(4, 5))
    pairs, m = oracle_lambda2_matrix(T.components)
    assert np.allclose(curvature_operator(T), m, atol=1e-13)
    # Scal = 2 tr(M) in this convention
    assert abs(scalar(T) - 2.0 * np.trace(m)) < 1e-11


def test_operator_round_trip():
    T = make_riemann(random_riemann_raw(5, 6))
    back = operator_to_riemann(curvature_operator(T), 5)
    assert np.max(np.abs(back - T.components)) < 1e-13


def test_sphere_operator_spectrum():
    S = sphere(4, 2.5)
    w = np.linalg.eigvalsh(curvature_operator(S))
    assert np.allclose(w, 2.5, atol=1e-12)


def test_product_operator_spectrum():
    P = direct_sum(sphere(2, 1.0), sphere(3, 1.0))
    w = np.sort(np.linalg.eigvalsh(curvature_operator(P)))
    expect = np.sort([1.0] * 4 + [0.0] * 6)
    assert np.allclose(np.sort(w), expect, atol=1e-12)


# ---------------------------------------------------------------------------
# frame functionals


def test_frame_value_isotropic_examples():
    S = sphere(4, 1.0)
    F = Frame("orthonormal-real", np.eye(4))
    assert abs(frame_value(S, F, "isotropic", 1.0) - 4.0) < 1e-12
    assert abs(frame_value(S, F, "isotropic", 0.0) - 2.0) < 1e-12
    assert abs(frame_value(S, F, "isotropic") - 4.0) < 1e-12
    assert abs(frame_value(S, F, "four-frame-sum") - 4.0) < 1e-12


def test_frame_value_orthogonal_bisectional_fs():
    K = fubini_study(2, 1.0)
    F = Frame("unitary-complex", np.eye(2, dtype=complex))
    assert abs(frame_value(K, F, "orthogonal-bisectional") - 1.0) < 1e-12
    # without orthogonality: 1 + |<X, Ybar>|^2
    x = np.array([1.0, 0.0], dtype=complex)
    y = np.array([np.sqrt(0.5), np.sqrt(0.5)], dtype=complex)
    G = Frame("unit-complex", np.stack([x, y]))
    assert abs(frame_value(K, G, "bisectional") - 1.5) < 1e-12


def test_frame_value_three_frame_sum():
    S = sphere(3, 2.0)
    F = Frame("orthonormal-real", np.eye(3))
    assert abs(frame_value(S, F, "three-frame-sum") - 4.0) < 1e-12


def test_frame_value_size_errors():
    S = sphere(4, 1.0)
    F3 = Frame("orthonormal-real", np.eye(4)[:3])
    with pytest.raises(InvalidInputError):
        frame_value(S, F3, "isotropic")
    with pytest.raises(InvalidInputError):
        frame_value(S, F3, "sectional")
    F4 = Frame("orthonormal-real", np.eye(4))
    with pytest.raises(InvalidInputError):
        frame_value(S, F4, "pic1")  # lam required
    with pytest.raises(InvalidInputError):
        frame_value(S, F4, "pic1", 1.5)


def test_frame_orthonormality_enforced():
    v = np.eye(3)[:2].copy()
    v[1, 0] = 0.1
    with pytest.raises(InvalidInputError):
        Frame("orthonormal-real", v)
    with pytest.raises(InvalidInputError):
        Frame("diagonal", np.eye(2))


# ---------------------------------------------------------------------------
# conjugation


def _random_orthogonal(n, seed):
    q, r = np.linalg.qr(derive_rng(seed).standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def _random_unitary(n, seed):
    rng = derive_rng(seed)
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(a)
    return q * np.exp(-1j * np.angle(np.diag(r)))


@pytest.mark.parametrize("seed", range(5))
def test_conjugate_group_action_riemann(seed):
    T = make_riemann(random_riemann_raw(4, 100 + seed))
    Q = _random_orthogonal(4, seed)
    back = conjugate(conjugate(T, Q), Q.T)
    assert np.max(np.abs(back.components - T.components)) < 1e-12
    assert abs(scalar(conjugate(T, Q)) - scalar(T)) < 1e-11
    # ricci equivariance
    assert np.allclose(ricci(conjugate(T, Q)), Q.T @ ricci(T) @ Q, atol=1e-11)


@pytest.mark.parametrize("seed", range(5))
def test_conjugate_group_action_kahler(seed):
    K = make_kahler(random_kahler_raw(3, 200 + seed))
    U = _random_unitary(3, seed)
    back = conjugate(conjugate(K, U), U.conj().T)
    assert np.max(np.abs(back.components - K.components)) < 1e-12
    assert abs(scalar(conjugate(K, U)) - scalar(K)) < 1e-11


def test_conjugate_identity_and_errors():
    T = sphere(3, 1.0)
    same = conjugate(T, np.eye(3))
    assert np.max(np.abs(same.components - T.components)) == 0.0
    with pytest.raises(InvalidInputError):
        conjugate(T, 2.0 * np.eye(3))
    with pytest.raises(InvalidInputError):
        conjugate(T, np.eye(4))


# ---------------------------------------------------------------------------
# realify


def test_realify_fs1_is_constant_curvature():
    R = realify(fubini_study(1, 1.0))
    S = sphere(2, 2.0)
    assert np.max(np.abs(R.components - S.components)) < 1e-12


def test_realify_matches_loop_oracle():
    K = make_kahler(random_kahler_raw(2, 9))
    R = realify(K)
    assert np.max(np.abs(R.components - oracle_realify(K))) < 1e-10
    R.validate()


@pytest.mark.parametrize("seed", range(10))
def test_realify_j_invariance(seed):
    n = 2
    K = make_kahler(random_kahler_raw(n, 300 + seed))
    R = realify(K).components
    # J maps x_k -> y_k, y_k -> -x_k
    J = np.zeros((2 * n, 2 * n))
    J[n:, :n] = np.eye(n)
    J[:n, n:] = -np.eye(n)
    rotated = np.einsum("ijkl,ia,jb->abkl", R, J, J)
    assert np.max(np.abs(rotated - R)) < 1e-12 * max(np.linalg.norm(R), 1.0)


def test_realify_zero():
    assert realify(flat(3, "kahler")).norm == 0.0


# ---------------------------------------------------------------------------
# reaction terms


def test_reaction_riemann_matches_loop_oracle():
    T = make_riemann(random_riemann_raw(3, 11))
    got = reaction_riemann(T).components
    want = make_riemann(oracle_reaction_riemann(T.components)).components
    assert np.max(np.abs(got - want)) < 1e-10 * max(T.norm**2, 1.0)


def test_reaction_riemann_sphere_ray():
    # reaction(sphere(3,1)) = kappa(3) * sphere(3,1) with kappa(3) = 4
    S = sphere(3, 1.0)
    R = reaction_riemann(S)
    resid = R.components - 4.0 * S.components
    assert np.max(np.abs(resid)) < 1e-12 * max(np.linalg.norm(R.components), 1.0)
    # scaling: reaction(c*S) = c^2 * reaction(S)
    R2 = reaction_riemann(sphere(3, 2.0))
    assert np.max(np.abs(R2.components - 16.0 * S.components)) < 1e-11


@pytest.mark.parametrize("n", [3, 4, 5])
def test_reaction_riemann_scalar_trace(n):
    # d(scal)/dt along the reaction equals 2|Ric|^2
    T = make_riemann(random_riemann_raw(n, 40 + n))
    r = ricci(T)
    assert abs(scalar(reaction_riemann(T)) - 2.0 * np.sum(r * r)) < 1e-9 * max(T.norm**2, 1.0)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_reaction_riemann_bianchi_before_projection(n):
    for i in range(3):
        T = make_riemann(random_riemann_raw(n, 50 + 10 * n + i))
        resid = reaction_riemann_bianchi_residual(T)
        assert resid <= 1e-10 * max(T.norm**2, 1.0)


def test_reaction_kahler_matches_loop_oracle():
    K = make_kahler(random_kahler_raw(2, 12))
    got = reaction_kahler(K).components
    want = oracle_reaction_kahler(K.components)
    assert np.max(np.abs(got - want)) < 1e-10 * max(K.norm**2, 1.0)


def test_reaction_kahler_fs_ray():
    # reaction(FS(2,1)) = 3 * FS(2,1): the Kahler ray constant at n_C = 2
    K = fubini_study(2, 1.0)
    Q = reaction_kahler(K)
    resid = Q.components - 3.0 * K.components
    assert np.max(np.abs(resid)) < 1e-12 * max(np.linalg.norm(Q.components), 1.0)


@pytest.mark.parametrize("n", [2, 3])
def test_reaction_kahler_symmetries_hold_unprojected(n):
    K = make_kahler(random_kahler_raw(n, 60 + n))
    c = oracle_reaction_kahler(K.components)
    # the quadratic formula preserves all invariants without projection
    assert np.max(np.abs(c - c.transpose(2, 1, 0, 3))) < 1e-12 * max(K.norm**2, 1.0)
    assert np.max(np.abs(np.conj(c) - c.transpose(1, 0, 3, 2))) < 1e-12 * max(K.norm**2, 1.0)


@pytest.mark.parametrize("n", [2, 3])
def test_reaction_kahler_ricci_trace(n):
    # tracing the quadratic reaction contracts to sum_pq R_{ij qp} Ric_{pq}
    K = make_kahler(random_kahler_raw(n, 70 + n))
    r = ricci(K)
    got = ricci(reaction_kahler(K))
    want = np.einsum("ijqp,pq->ij", K.components, r)
    assert np.max(np.abs(got - want)) < 1e-12 * max(K.norm**2, 1.0)
    # scalar trace: |Ric|^2
    assert abs(scalar(reaction_kahler(K)) - np.real(np.sum(r * np.conj(r)))) < 1e-10 * max(K.norm**2, 1.0)


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("n", [1, 2])
def test_reaction_cross_convention_scale(n, seed):
    # realify(reaction_kahler(K)) = s * reaction_riemann(realify(K)), s = 1/2
    K = make_kahler(random_kahler_raw(n, 80 + 10 * n + seed))
    lhs = realify(reaction_kahler(K)).components
    rhs = KAHLER_REACTION_REALIFY_SCALE * reaction_riemann(realify(K)).components
    denom = max(np.linalg.norm(rhs), 1e-30)
    assert np.linalg.norm(lhs - rhs) / denom < 1e-8


def test_reaction_zero():
    assert reaction_riemann(flat(3)).norm == 0.0
    assert reaction_kahler(flat(2, "kahler")).norm == 0.0
