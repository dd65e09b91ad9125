"""Algebraic curvature tensors and their quadratic reactions.

Two tensor kinds are supported.  A Riemannian tensor R stores real
components R[i,j,k,l] with the sign convention that R[i,j,i,j] is the
sectional curvature of span{e_i, e_j}; the unit round sphere has value 1.
A Kahler tensor stores complex components K[i,j,k,l] read as the mixed
curvature R(E_i, conj E_j, E_k, conj E_l) of a unitary frame, with the
Fubini-Study normalization R(X, conj X, X, conj X) = 2 for unit X.

The curvature operator acts on two-forms in the basis {e_i ^ e_j : i < j}
with each basis element given unit norm, so its matrix entries are plain
components R[i,j,k,l] and the scalar curvature equals twice its trace.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._contract import _es
from .errors import InvalidInputError

# Residual allowed when validating symmetries of externally supplied components.
CONSTRUCTION_TOL = 1e-12

# realify(reaction_kahler(K)) == KAHLER_REACTION_REALIFY_SCALE * reaction_riemann(realify(K)).
# The Kahler reaction normalizes time against the metric flowing by -Ricci,
# the Riemannian one against the metric flowing by -2 Ricci, hence the 1/2.
KAHLER_REACTION_REALIFY_SCALE = 0.5


# ---------------------------------------------------------------------------
# index bookkeeping


@lru_cache(maxsize=32)
def _pair_maps(n):
    """Index/sign maps for the i<j pair basis of two-forms on R^n."""
    npairs = n * (n - 1) // 2
    idx = np.zeros((n, n), dtype=np.intp)
    sgn = np.zeros((n, n))
    pairs = []
    a = 0
    for i in range(n):
        for j in range(i + 1, n):
            idx[i, j] = a
            idx[j, i] = a
            sgn[i, j] = 1.0
            sgn[j, i] = -1.0
            pairs.append((i, j))
            a += 1
    assert a == npairs
    return idx, sgn, tuple(pairs)


@lru_cache(maxsize=32)
def _sym_maps(n):
    """Index map for unordered pairs {i,k} (i <= k), used by Kahler storage."""
    idx = np.zeros((n, n), dtype=np.intp)
    pairs = []
    a = 0
    for i in range(n):
        for k in range(i, n):
            idx[i, k] = a
            idx[k, i] = a
            pairs.append((i, k))
            a += 1
    return idx, tuple(pairs)


def _canonical_riemann(T):
    """Rebuild T from its i<j, k<l representatives.

    The output carries the two antisymmetries and the pair-exchange
    symmetry exactly (every symmetric image reads the same stored entry).
    """
    n = T.shape[0]
    idx, sgn, pairs = _pair_maps(n)
    rows = [i for (i, j) in pairs]
    cols = [j for (i, j) in pairs]
    P = len(pairs)
    M = np.empty((P, P))
    for a, (i, j) in enumerate(pairs):
        M[a] = T[i, j][rows, cols]
    M = (M + M.T) / 2.0
    return sgn[:, :, None, None] * sgn[None, None, :, :] * M[idx[:, :, None, None], idx[None, None, :, :]]


def _canonical_kahler(T):
    """Rebuild K from an exactly Hermitian matrix over unordered index
    pairs {i,k} x {j,l}, making the slot symmetries and the Hermitian
    symmetry hold exactly."""
    n = T.shape[0]
    idx, pairs = _sym_maps(n)
    P = len(pairs)
    H = np.empty((P, P), dtype=complex)
    rows = [j for (j, l) in pairs]
    cols = [l for (j, l) in pairs]
    for a, (i, k) in enumerate(pairs):
        H[a] = T[i, :, k, :][rows, cols]
    H = (H + H.conj().T) / 2.0
    # out[i,j,k,l] = H[{i,k},{j,l}]: slots 0,2 read the first pair, 1,3 the second
    return H[idx[:, None, :, None], idx[None, :, None, :]]


# ---------------------------------------------------------------------------
# tensor classes


def _freeze(arr):
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class RiemannTensor:
    """Immutable real algebraic curvature tensor on R^dim."""

    dim: int
    components: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.components, dtype=float)
        if c.shape != (self.dim,) * 4:
            raise InvalidInputError(f"components shape {c.shape} does not match dim {self.dim}")
        object.__setattr__(self, "components", _freeze(c))

    @property
    def norm(self):
        return float(np.linalg.norm(self.components))

    def validate(self, tol=CONSTRUCTION_TOL):
        """Raise unless all symmetries hold to tol * max(norm, 1)."""
        c = self.components
        scale = max(self.norm, 1.0)
        checks = {
            "first-pair antisymmetry": c + c.transpose(1, 0, 2, 3),
            "second-pair antisymmetry": c + c.transpose(0, 1, 3, 2),
            "pair exchange": c - c.transpose(2, 3, 0, 1),
            "cyclic sum": c + c.transpose(0, 2, 3, 1) + c.transpose(0, 3, 1, 2),
        }
        for name, resid in checks.items():
            r = np.max(np.abs(resid))
            if r > tol * scale:
                raise InvalidInputError(f"riemann {name} residual {r:.3e} exceeds {tol:.1e}*scale")
        return self


@dataclass(frozen=True)
class KahlerTensor:
    """Immutable Kahler curvature tensor on C^dim (dim = complex dimension)."""

    dim: int
    components: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.components, dtype=complex)
        if c.shape != (self.dim,) * 4:
            raise InvalidInputError(f"components shape {c.shape} does not match dim {self.dim}")
        object.__setattr__(self, "components", _freeze(c))

    @property
    def norm(self):
        return float(np.linalg.norm(self.components))

    def validate(self, tol=CONSTRUCTION_TOL):
        c = self.components
        scale = max(self.norm, 1.0)
        checks = {
            "first-slot symmetry": c - c.transpose(2, 1, 0, 3),
            "second-slot symmetry": c - c.transpose(0, 3, 2, 1),
            "hermitian symmetry": c.conj() - c.transpose(1, 0, 3, 2),
        }
        for name, resid in checks.items():
            r = np.max(np.abs(resid))
            if r > tol * scale:
                raise InvalidInputError(f"kahler {name} residual {r:.3e} exceeds {tol:.1e}*scale")
        return self


def norm(T):
    return T.norm


def scale_of(T):
    """Norm floored at 1, the reference for relative tolerances."""
    return max(T.norm, 1.0)


# ---------------------------------------------------------------------------
# constructors


def make_riemann(raw) -> RiemannTensor:
    """Orthogonal projection of an arbitrary 4-array onto curvature tensors.

    First averages over the signed pair-symmetry group (8 elements), then
    removes the fully antisymmetric part via the cyclic sum, which on the
    pair-symmetric subspace is exactly 3x the orthogonal projection onto
    4-forms.  The composite is the orthogonal projection onto tensors
    satisfying the first Bianchi identity.
    """
    T = np.asarray(raw, dtype=float)
    if T.ndim != 4 or len(set(T.shape)) != 1:
        raise InvalidInputError("make_riemann expects an (n,n,n,n) array")
    S = T.copy()
    S = S - S.transpose(1, 0, 2, 3)
    S = S - S.transpose(0, 1, 3, 2)
    S = S + S.transpose(2, 3, 0, 1)
    S /= 8.0
    cyc = S + S.transpose(0, 2, 3, 1) + S.transpose(0, 3, 1, 2)
    S = S - cyc / 3.0
    return RiemannTensor(T.shape[0], _canonical_riemann(S))


def make_kahler(raw) -> KahlerTensor:
    """Average an arbitrary complex 4-array over the Kahler symmetry group."""
    T = np.asarray(raw, dtype=complex)
    if T.ndim != 4 or len(set(T.shape)) != 1:
        raise InvalidInputError("make_kahler expects an (n,n,n,n) array")
    S = (T + T.transpose(2, 1, 0, 3) + T.transpose(0, 3, 2, 1) + T.transpose(2, 3, 0, 1)) / 4.0
    S = (S + S.transpose(1, 0, 3, 2).conj()) / 2.0
    return KahlerTensor(T.shape[0], _canonical_kahler(S))


def bianchi_residual(raw):
    """Max-norm of the cyclic (first Bianchi) sum of a real 4-array or tensor."""
    c = np.asarray(getattr(raw, "components", raw))
    return float(np.max(np.abs(c + c.transpose(0, 2, 3, 1) + c.transpose(0, 3, 1, 2))))


# ---------------------------------------------------------------------------
# contractions


def ricci(T):
    """Ricci matrix: real symmetric for Riemannian input, Hermitian for Kahler."""
    c = T.components
    if isinstance(T, RiemannTensor):
        # Ric_ij = sum_k R[i,k,j,k]
        return _es("ikjk->ij", c)
    # Ric_ij = sum_k K[i,j,k,k]
    return _es("ijkk->ij", c)


def ricci_eigenvalues(T):
    """Ascending eigenvalues of the Ricci matrix."""
    return np.linalg.eigvalsh(ricci(T))


def scalar(T) -> float:
    s = np.trace(ricci(T))
    return float(np.real(s))


# ---------------------------------------------------------------------------
# frames and frame functionals


_REAL_FRAME_KINDS = ("orthonormal-real",)
_COMPLEX_FRAME_KINDS = ("unitary-complex", "unit-complex")


@dataclass(frozen=True)
class Frame:
    """A k-tuple of vectors, stored as rows of ``vectors``.

    kind 'orthonormal-real' and 'unitary-complex' enforce pairwise
    orthonormality; 'unit-complex' enforces unit norms only (used for
    bisectional pairs, which need not be orthogonal).
    """

    kind: str
    vectors: np.ndarray

    def __post_init__(self):
        if self.kind in _REAL_FRAME_KINDS:
            v = np.asarray(self.vectors, dtype=float)
        elif self.kind in _COMPLEX_FRAME_KINDS:
            v = np.asarray(self.vectors, dtype=complex)
        else:
            raise InvalidInputError(f"unknown frame kind {self.kind!r}")
        if v.ndim != 2:
            raise InvalidInputError("frame vectors must form a (k, dim) array")
        g = v @ v.conj().T
        if self.kind == "unit-complex":
            resid = np.max(np.abs(np.diag(g) - 1.0))
        else:
            resid = np.max(np.abs(g - np.eye(v.shape[0])))
        if resid > 1e-12:
            raise InvalidInputError(f"frame orthonormality residual {resid:.3e}")
        object.__setattr__(self, "vectors", _freeze(v))

    @property
    def size(self):
        return self.vectors.shape[0]

    @property
    def dim(self):
        return self.vectors.shape[1]


def _sectional(c, e1, e2):
    return _es("ijkl,i,j,k,l->", c, e1, e2, e1, e2)


def frame_value(T, frame: Frame, functional: str, lam: float | None = None) -> float:
    """Evaluate a curvature functional on a frame.

    functional is one of: 'sectional', 'bisectional',
    'orthogonal-bisectional', 'isotropic' (lam in [0,1], default 1),
    'pic1' (same expression, lam required), 'three-frame-sum',
    'four-frame-sum', 'complex-sectional'.
    """
    c = T.components
    v = frame.vectors
    if v.shape[1] != T.dim:
        raise InvalidInputError("frame dimension does not match tensor dimension")

    def need(k, kinds):
        if frame.size != k:
            raise InvalidInputError(f"{functional} needs a {k}-frame, got {frame.size}")
        if frame.kind not in kinds:
            raise InvalidInputError(f"{functional} needs frame kind in {kinds}")

    if functional == "sectional":
        need(2, _REAL_FRAME_KINDS)
        return float(_sectional(c, v[0], v[1]))
    if functional in ("bisectional", "orthogonal-bisectional"):
        if not isinstance(T, KahlerTensor):
            raise InvalidInputError("bisectional functionals need a Kahler tensor")
        need(2, _COMPLEX_FRAME_KINDS)
        x, y = v[0], v[1]
        val = _es("ijkl,i,j,k,l->", c, x, x.conj(), y, y.conj())
        return float(np.real(val))
    if functional == "complex-sectional":
        if not isinstance(T, RiemannTensor):
            raise InvalidInputError("complex-sectional needs a Riemannian tensor")
        need(2, ("unitary-complex",))
        x, y = v[0], v[1]
        val = _es("ijkl,i,j,k,l->", c.astype(complex), x, y, x.conj(), y.conj())
        return float(np.real(val))
    if functional in ("isotropic", "pic1"):
        need(4, _REAL_FRAME_KINDS)
        if lam is None:
            if functional == "pic1":
                raise InvalidInputError("pic1 needs lam in [0, 1]")
            lam = 1.0
        if not 0.0 <= lam <= 1.0:
            raise InvalidInputError(f"{functional} needs lam in [0, 1]")
        e1, e2, e3, e4 = v
        return float(
            _sectional(c, e1, e3) + lam**2 * _sectional(c, e1, e4) + _sectional(c, e2, e3)
            + lam**2 * _sectional(c, e2, e4)
            - 2.0 * lam * _es("ijkl,i,j,k,l->", c, e1, e2, e3, e4)
        )
    if functional == "three-frame-sum":
        need(3, _REAL_FRAME_KINDS)
        e1, e2, e3 = v
        return float(_sectional(c, e1, e3) + _sectional(c, e2, e3))
    if functional == "four-frame-sum":
        need(4, _REAL_FRAME_KINDS)
        e1, e2, e3, e4 = v
        return float(
            _sectional(c, e1, e3) + _sectional(c, e1, e4)
            + _sectional(c, e2, e3) + _sectional(c, e2, e4)
        )
    raise InvalidInputError(f"unknown functional {functional!r}")


# ---------------------------------------------------------------------------
# basis change


def conjugate(T, U):
    """Re-express T in the frame whose vectors are the columns of U.

    U must be orthogonal (Riemannian) or unitary (Kahler).  The returned
    tensor has components T'(i,j,k,l) = T(u_i, u_j, u_k, u_l), with the
    Kahler convention conjugating the barred slots.
    """
    U = np.asarray(U)
    if U.shape != (T.dim, T.dim):
        raise InvalidInputError("conjugating matrix has wrong shape")
    resid = np.max(np.abs(U.conj().T @ U - np.eye(T.dim)))
    if resid > 1e-10:
        raise InvalidInputError(f"conjugating matrix is not unitary (residual {resid:.3e})")
    c = T.components
    if isinstance(T, RiemannTensor):
        U = np.real(U)
        out = _es("abcd,ai,bj,ck,dl->ijkl", c, U, U, U, U)
        return RiemannTensor(T.dim, _canonical_riemann(out))
    U = U.astype(complex)
    out = _es("abcd,ai,bj,ck,dl->ijkl", c, U, U.conj(), U, U.conj())
    return KahlerTensor(T.dim, _canonical_kahler(out))


# ---------------------------------------------------------------------------
# realification


def realify(K: KahlerTensor) -> RiemannTensor:
    """Real curvature tensor on R^{2n} underlying a Kahler tensor on C^n.

    The unitary frame E_k = (x_k - i y_k)/sqrt(2) identifies C^n with the
    span of the orthonormal real frame {x_1..x_n, y_1..y_n}; components of
    mixed type are the only nonzero ones and expand complex-bilinearly.
    The overall sign is fixed so that positive holomorphic sectional
    curvature realifies to positive sectional curvature (the complex
    projective line with holomorphic sectional curvature 2 maps to the
    round 2-sphere of Gauss curvature 2).
    """
    n = K.dim
    c = K.components
    Z = np.zeros((2 * n, n), dtype=complex)
    Z[:n] = np.eye(n) / np.sqrt(2.0)
    Z[n:] = -1j * np.eye(n) / np.sqrt(2.0)
    T1 = _es("ijkl,ai,bj,ck,dl->abcd", c, Z, Z.conj(), Z, Z.conj())
    S = T1 - T1.transpose(1, 0, 2, 3)
    S = S - S.transpose(0, 1, 3, 2)
    imag_max = float(np.max(np.abs(S.imag)))
    if imag_max > 1e-10 * max(K.norm, 1.0):
        raise InvalidInputError(f"realify produced imaginary residual {imag_max:.3e}")
    out = -S.real
    return RiemannTensor(2 * n, _canonical_riemann(out))


# ---------------------------------------------------------------------------
# curvature operator on two-forms, and the quadratic reactions


def curvature_operator(T: RiemannTensor):
    """Symmetric matrix of T on the unit-norm i<j wedge basis."""
    idx, sgn, pairs = _pair_maps(T.dim)
    c = T.components
    P = len(pairs)
    M = np.empty((P, P))
    rows = [i for (i, j) in pairs]
    cols = [j for (i, j) in pairs]
    for a, (i, j) in enumerate(pairs):
        M[a] = c[i, j][rows, cols]
    return (M + M.T) / 2.0


def operator_to_riemann(M, n) -> np.ndarray:
    """Raw 4-array whose i<j,k<l entries are M; inverse of curvature_operator
    up to the Bianchi part (the result need not satisfy first Bianchi)."""
    idx, sgn, pairs = _pair_maps(n)
    M = (M + M.T) / 2.0
    return sgn[:, :, None, None] * sgn[None, None, :, :] * M[idx[:, :, None, None], idx[None, None, :, :]]


@lru_cache(maxsize=32)
def _structure_constants(n):
    """c[a,b,g] = <[L_b, L_g], L_a> / 2 for the unit wedge basis of so(n).

    L_ij = E_ij - E_ji has Hilbert-Schmidt norm sqrt(2); dividing the
    trace pairing by 2 makes the basis orthonormal, matching the
    two-forms inner product used by ``curvature_operator``.
    """
    idx, sgn, pairs = _pair_maps(n)
    P = len(pairs)
    mats = np.zeros((P, n, n))
    for a, (i, j) in enumerate(pairs):
        mats[a, i, j] = 1.0
        mats[a, j, i] = -1.0
    comm = _es("bxy,gyz->bgxz", mats, mats) - np.einsum("gxy,byz->bgxz", mats, mats)
    c = np.einsum("bgxz,axz->abg", comm, mats) / 2.0
    return _freeze(c)


def _sharp(M, n):
    """Lie-algebra square: (M#)_ab = 1/2 c_agd c_bez M_ge M_dz."""
    c = _structure_constants(n)
    A = _es("agd,ge->ade", c, M)
    B = _es("bez,dz->bde", c, M)
    return 0.5 * _es("ade,bde->ab", A, B)


def reaction_riemann(T: RiemannTensor) -> RiemannTensor:
    """Quadratic reaction of the curvature ODE in the evolving-frame gauge.

    Computes the square plus Lie-algebra square of the curvature operator
    on two-forms and doubles it, which normalizes time so that the scalar
    curvature of the output equals 2 |Ric|^2.  The result is projected
    back onto the first Bianchi identity (the drift is at rounding level).
    """
    n = T.dim
    M = curvature_operator(T)
    out = 2.0 * (M @ M + _sharp(M, n))
    raw = operator_to_riemann(out, n)
    return make_riemann(raw)


def reaction_riemann_bianchi_residual(T: RiemannTensor) -> float:
    """First-Bianchi residual of the reaction before re-projection."""
    n = T.dim
    M = curvature_operator(T)
    out = 2.0 * (M @ M + _sharp(M, n))
    return bianchi_residual(operator_to_riemann(out, n))


def reaction_kahler(K: KahlerTensor) -> KahlerTensor:
    """Quadratic reaction of the Kahler curvature ODE.

    Q[i,j,k,l] = sum_pq ( K[i,j,q,p] K[p,q,k,l] + K[i,l,q,p] K[p,q,k,j]
                          - K[i,p,k,q] K[p,j,q,l] ).
    The output symmetries hold identically (verified, then canonicalized
    for exactness); no projection is involved.
    """
    c = K.components
    q1 = _es("ijqp,pqkl->ijkl", c, c)
    q2 = _es("ilqp,pqkj->ijkl", c, c)
    q3 = _es("ipkq,pjql->ijkl", c, c)
    out = q1 + q2 - q3
    probe = KahlerTensor(K.dim, out)
    probe.validate(tol=1e-12 * max(K.norm**2, 1.0) / max(probe.norm, 1.0))
    return KahlerTensor(K.dim, _canonical_kahler(out))
