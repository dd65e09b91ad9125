"""Curvature cone membership via frame-functional minimization.

A cone is the set of tensors whose defining frame functional is
nonnegative on every admissible frame.  ``defect`` returns the minimum of
that functional: membership is defect >= 0, and -defect measures the
distance to the cone along the relevant identity direction.

Frame cones run a multi-start projected-gradient descent on the (real or
complex) Stiefel manifold with QR retraction and Armijo line search; all
restarts advance in lockstep as one batched computation, so results are
bit-reproducible for a given seed.  Eigenvalue cones are solved exactly.
A Haar sampling oracle provides an independent upper bound on each
minimum; the best sampled frame also seeds one optimizer restart, which
guarantees optimizer <= oracle.
"""

from dataclasses import dataclass, field
from functools import lru_cache
import re

import numpy as np

from ._contract import _es
from .errors import InvalidInputError
from .rng import derive_rng
from .tensors import Frame, KahlerTensor, RiemannTensor, curvature_operator, ricci

ARMIJO_C1 = 1e-4
MAX_HALVINGS = 45



@dataclass
class OptimizerConfig:
    max_restarts: int = 64
    iterations: int = 200
    polish_iterations: int = 800
    oracle_samples: int = 2048
    seed: int = 0
    warm_frames: np.ndarray | None = None  # extra start frames, shape (m, n, k)
    warm_lams: np.ndarray | None = None


@dataclass
class ConeReport:
    cone: str
    defect: float
    witness: Frame | None
    lam: float | None
    restarts: int
    converged: bool
    oracle_defect: float | None
    grad_norm: float | None = None

    def to_dict(self):
        w = None
        if self.witness is not None:
            vecs = self.witness.vectors
            if np.iscomplexobj(vecs):
                vecs = np.stack([vecs.real, vecs.imag], axis=-1)
            w = {"kind": self.witness.kind, "vectors": vecs.tolist()}
            if self.lam is not None:
                w["lambda"] = self.lam
        return {
            "cone": self.cone,
            "defect": self.defect,
            "witness": w,
            "restarts": self.restarts,
            "converged": self.converged,
            "oracle_defect": self.oracle_defect,
        }


# ---------------------------------------------------------------------------
# cone registry


@dataclass(frozen=True)
class ConeSpec:
    name: str
    kind: str              # 'riemann', 'kahler', or 'both'
    family: str            # 'frame' or 'eigen'
    frame_size: int | None
    complex_frames: bool
    min_dim: int
    ricci_k: int | None = None


_FRAME_CONES = {
    "nob": ConeSpec("nob", "kahler", "frame", 2, True, 2),
    "bisectional": ConeSpec("bisectional", "kahler", "frame", 2, True, 2),
    "complex-sectional": ConeSpec("complex-sectional", "riemann", "frame", 2, True, 2),
    "pic": ConeSpec("pic", "riemann", "frame", 4, False, 4),
    "pic1": ConeSpec("pic1", "riemann", "frame", 4, False, 4),
    "wpic1-3frame": ConeSpec("wpic1-3frame", "riemann", "frame", 3, False, 3),
    "sum4": ConeSpec("sum4", "riemann", "frame", 4, False, 4),
}


def cone_spec(cone: str, dim: int | None = None) -> ConeSpec:
    """Resolve a cone token ('nob', 'pic', ..., 'ricci<k>', 'op-2nonneg')."""
    cone = str(cone).lower().strip()
    m = re.fullmatch(r"ricci(\d+)", cone)
    if m:
        k = int(m.group(1))
        if k < 1:
            raise InvalidInputError("ricci<k> needs k >= 1")
        spec = ConeSpec(cone, "both", "eigen", None, False, k, ricci_k=k)
    elif cone == "op-2nonneg":
        spec = ConeSpec(cone, "riemann", "eigen", None, False, 2)
    elif cone in _FRAME_CONES:
        spec = _FRAME_CONES[cone]
    else:
        raise InvalidInputError(f"unknown cone {cone!r}")
    if dim is not None and dim < spec.min_dim:
        raise InvalidInputError(f"cone {cone!r} needs dim >= {spec.min_dim}, got {dim}")
    return spec


def _check_kind(T, spec):
    is_k = isinstance(T, KahlerTensor)
    if spec.kind == "kahler" and not is_k:
        raise InvalidInputError(f"cone {spec.name!r} needs a Kahler tensor")
    if spec.kind == "riemann" and is_k:
        raise InvalidInputError(f"cone {spec.name!r} needs a Riemannian tensor")


def shift_slope(cone: str, dim: int) -> float | None:
    """Defect change per unit shift along the identity direction, when the
    shift acts affinely on the defect; None means use bisection."""
    spec = cone_spec(cone, dim)
    if spec.family == "eigen":
        if spec.name == "op-2nonneg":
            return 2.0
        return spec.ricci_k * (dim - 1)  # Riemannian ricci shift; Kahler handled by caller
    return {
        "nob": 1.0,
        "bisectional": None,
        "complex-sectional": 1.0,
        "pic": 4.0,
        "pic1": None,
        "wpic1-3frame": 2.0,
        "sum4": 4.0,
    }[spec.name]


def shift_slope_for(T, cone: str) -> float | None:
    """shift_slope resolved against an actual tensor (Kahler Ricci shifts
    scale with dim+1 because the identity there is the projective tensor)."""
    spec = cone_spec(cone, T.dim)
    if spec.family == "eigen" and spec.ricci_k is not None and isinstance(T, KahlerTensor):
        return spec.ricci_k * (T.dim + 1.0)
    return shift_slope(cone, T.dim)


def frame_manifold_dim(cone: str, dim: int) -> int:
    """Effective dimension of the search manifold, used by the sampling
    oracle's discretization bound (gauge directions removed)."""
    spec = cone_spec(cone, dim)
    n = dim
    if spec.family == "eigen":
        k = 2 if spec.name == "op-2nonneg" else spec.ricci_k
        m = n * (n - 1) // 2 if spec.name == "op-2nonneg" else n
        return max(k * m - k * (k + 1) // 2, 1)
    if spec.name in ("nob", "bisectional"):
        return max(4 * n - 6, 1)
    if spec.name == "complex-sectional":
        return max(4 * n - 6, 1)
    if spec.name in ("pic", "sum4"):
        return max(4 * n - 12, 1)
    if spec.name == "pic1":
        return max(4 * n - 11, 1)
    if spec.name == "wpic1-3frame":
        return max(3 * n - 6, 1)
    raise InvalidInputError(spec.name)


# ---------------------------------------------------------------------------
# batched frame evaluation and gradients


def _haar_frames(rng, count, n, k, complex_frames):
    z = rng.standard_normal((count, n, k))
    if complex_frames:
        z = z + 1j * rng.standard_normal((count, n, k))
    q, r = np.linalg.qr(z)
    d = np.einsum("...ii->...i", r)
    s = np.where(np.abs(d) == 0, 1.0, d / np.where(np.abs(d) == 0, 1.0, np.abs(d)))
    return q * s[:, None, :]


def _unit_pairs(rng, count, n):
    z = rng.standard_normal((count, n, 2)) + 1j * rng.standard_normal((count, n, 2))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return z


def _values_nob(c, W):
    X, Y = W[:, :, 0], W[:, :, 1]
    A = _es("ijkl,bk,bl->bji", c, Y, Y.conj())
    return np.real(_es("bji,bj,bi->b", A, X.conj(), X))


def _grads_nob(c, W):
    # real gradient of the Hermitian form: 2 A(Y) X and 2 B(X) Y
    X, Y = W[:, :, 0], W[:, :, 1]
    A = _es("ijkl,bk,bl->bji", c, Y, Y.conj())
    B = _es("ijkl,bi,bj->blk", c, X, X.conj())
    gx = 2.0 * np.einsum("bji,bi->bj", A, X)
    gy = 2.0 * np.einsum("blk,bk->bl", B, Y)
    return np.stack([gx, gy], axis=-1)


def _values_complex_sectional(c, W):
    V, U = W[:, :, 0], W[:, :, 1]
    M = _es("abcd,Bb,Bd->Bca", c, U, U.conj())
    return np.real(_es("Bca,Bc,Ba->B", M, V.conj(), V))


def _grads_complex_sectional(c, W):
    V, U = W[:, :, 0], W[:, :, 1]
    M = _es("abcd,Bb,Bd->Bca", c, U, U.conj())
    M2 = _es("abcd,Ba,Bc->Bdb", c, V, V.conj())
    gv = 2.0 * np.einsum("Bca,Ba->Bc", M, V)
    gu = 2.0 * np.einsum("Bdb,Bb->Bd", M2, U)
    return np.stack([gv, gu], axis=-1)


def _sec_matrix(c, E):
    """M[b,i,k] = sum_jl c[i,j,k,l] E_j E_l for batched vectors E."""
    return _es("ijkl,bj,bl->bik", c, E, E)


def _values_real_family(c, W, weights, cross):
    # weights: list of ((a, b), w) sectional terms; cross: coefficient of
    # R(e1,e2,e3,e4) (arrays broadcast over the batch).
    out = 0.0
    for (a, b), w in weights:
        Ea, Eb = W[:, :, a], W[:, :, b]
        M = _sec_matrix(c, Eb)
        out = out + w * _es("bik,bi,bk->b", M, Ea, Ea)
    if cross is not None:
        q = _es("ijkl,bi,bj,bk,bl->b", c, W[:, :, 0], W[:, :, 1], W[:, :, 2], W[:, :, 3])
        out = out + cross * q
    return out


def _bcast(w):
    # scalar weight or per-batch array; make it broadcast over vector entries
    return np.asarray(w)[..., None] if np.ndim(w) else w


def _grads_real_family(c, W, weights, cross):
    G = np.zeros_like(W)
    for (a, b), w in weights:
        Ea, Eb = W[:, :, a], W[:, :, b]
        M = _sec_matrix(c, Eb)
        G[:, :, a] += _bcast(w) * 2.0 * np.einsum("bik,bk->bi", M, Ea)
        M2 = _es("ijkl,bi,bk->bjl", c, Ea, Ea)
        G[:, :, b] += _bcast(w) * 2.0 * np.einsum("bjl,bl->bj", M2, Eb)
    if cross is not None and np.any(np.asarray(cross) != 0.0):
        e = [W[:, :, i] for i in range(4)]
        cr = _bcast(cross)
        G[:, :, 0] += cr * _es("ijkl,bj,bk,bl->bi", c, e[1], e[2], e[3])
        G[:, :, 1] += cr * _es("ijkl,bi,bk,bl->bj", c, e[0], e[2], e[3])
        G[:, :, 2] += cr * _es("ijkl,bi,bj,bl->bk", c, e[0], e[1], e[3])
        G[:, :, 3] += cr * _es("ijkl,bi,bj,bk->bl", c, e[0], e[1], e[2])
    return G


def _family_for(spec, lam=None):
    if spec.name == "pic":
        return [((0, 2), 1.0), ((0, 3), 1.0), ((1, 2), 1.0), ((1, 3), 1.0)], -2.0
    if spec.name == "sum4":
        return [((0, 2), 1.0), ((0, 3), 1.0), ((1, 2), 1.0), ((1, 3), 1.0)], None
    if spec.name == "wpic1-3frame":
        return [((0, 2), 1.0), ((1, 2), 1.0)], None
    if spec.name == "pic1":
        l2 = lam**2
        return [((0, 2), 1.0), ((0, 3), l2), ((1, 2), 1.0), ((1, 3), l2)], -2.0 * lam
    raise InvalidInputError(spec.name)


def _pic1_lambda_terms(c, W):
    """Coefficients (alpha, beta) with value = base + alpha lam^2 - 2 beta lam."""
    e1, e2, e3, e4 = (W[:, :, i] for i in range(4))
    s14 = _es("bik,bi,bk->b", _sec_matrix(c, e4), e1, e1)
    s24 = _es("bik,bi,bk->b", _sec_matrix(c, e4), e2, e2)
    base = (_es("bik,bi,bk->b", _sec_matrix(c, e3), e1, e1)
            + _es("bik,bi,bk->b", _sec_matrix(c, e3), e2, e2))
    q = _es("ijkl,bi,bj,bk,bl->b", c, e1, e2, e3, e4)
    return base, s14 + s24, q


def _pic1_best_lambda(alpha, beta):
    """Per-batch argmin over lam in [0,1] of alpha lam^2 - 2 beta lam.

    Ties against an endpoint break toward the endpoint (interior candidate
    only retained when strictly better than both endpoints).
    """
    lam = np.zeros_like(alpha)
    v0 = np.zeros_like(alpha)
    v1 = alpha - 2.0 * beta
    lam = np.where(v1 < v0, 1.0, 0.0)
    vend = np.minimum(v0, v1)
    with np.errstate(divide="ignore", invalid="ignore"):
        linterior = np.where(alpha > 0, beta / np.where(alpha > 0, alpha, 1.0), 0.0)
    ok = (alpha > 0) & (linterior > 0.0) & (linterior < 1.0)
    vint = np.where(ok, alpha * linterior**2 - 2.0 * beta * linterior, np.inf)
    take = ok & (vint < vend - 1e-15 * (1.0 + np.abs(vend)))
    return np.where(take, linterior, lam)


# ---------------------------------------------------------------------------
# batched Stiefel descent


def _retract(W):
    q, r = np.linalg.qr(W)
    d = np.einsum("...ii->...i", r)
    ad = np.abs(d)
    s = np.where(ad == 0, 1.0, d / np.where(ad == 0, 1.0, ad))
    return q * s[:, None, :]


def _project_tangent(W, G):
    WtG = np.einsum("bik,bil->bkl", W.conj(), G)
    sym = 0.5 * (WtG + np.conj(np.swapaxes(WtG, 1, 2)))
    return G - np.einsum("bik,bkl->bil", W, sym)


def _project_spheres(W, G):
    ip = np.real(np.einsum("bik,bik->bk", W.conj(), G))
    return G - W * ip[:, None, :]


def _retract_spheres(W):
    return W / np.linalg.norm(W, axis=1, keepdims=True)


def _descend(value_fn, grad_fn, W0, gtol, iterations, retract=None, project=None, adapt=None):
    """Batched projected-gradient descent with Armijo backtracking.

    Returns (W, values, grad_norms).  value_fn/grad_fn map (B,n,k) arrays
    to (B,) values and (B,n,k) Euclidean gradients; ``project`` maps them
    to the tangent space and ``retract`` returns steps to the manifold
    (Stiefel by default).  ``adapt``, if given, runs once per iteration,
    may mutate closure state of value_fn/grad_fn, and returns refreshed
    values.
    """
    retract = retract or _retract
    project = project or _project_tangent
    W = W0.copy()
    B = W.shape[0]
    v = value_fn(W)
    eta = np.full(B, 0.5)
    alive = np.ones(B, dtype=bool)
    gn = np.full(B, np.inf)
    for _ in range(iterations):
        if adapt is not None:
            v = adapt(W)
        G = project(W, grad_fn(W))
        gn = np.sqrt(np.sum(np.abs(G) ** 2, axis=(1, 2)))
        alive &= gn > gtol
        if not alive.any():
            break
        need = alive.copy()
        accepted = np.zeros(B, dtype=bool)
        for _ in range(MAX_HALVINGS):
            cand = retract(W - (eta * need)[:, None, None] * G)
            vc = value_fn(cand)
            good = need & (vc <= v - ARMIJO_C1 * eta * gn**2)
            if good.any():
                W[good] = cand[good]
                v[good] = vc[good]
                accepted |= good
                need &= ~good
            if not need.any():
                break
            eta[need] *= 0.5
            dead = need & (eta < 1e-18)
            if dead.any():
                alive &= ~dead
                need &= ~dead
            if not need.any():
                break
        eta[accepted] = np.minimum(eta[accepted] * 1.8, 2.0)
    if adapt is not None:
        v = adapt(W)
        G = project(W, grad_fn(W))
        gn = np.sqrt(np.sum(np.abs(G) ** 2, axis=(1, 2)))
    return W, v, gn


def _descend_pic1(c, W0, lam0, gtol, iterations):
    """PIC1 descent: each frame step is followed by an exact lambda update."""
    lam = lam0.copy()

    def val(W):
        base, alpha, beta = _pic1_lambda_terms(c, W)
        return base + alpha * lam**2 - 2.0 * beta * lam

    def grad(W):
        weights = [((0, 2), 1.0), ((0, 3), lam**2), ((1, 2), 1.0), ((1, 3), lam**2)]
        return _grads_real_family(c, W, weights, -2.0 * lam)

    def adapt(W):
        base, alpha, beta = _pic1_lambda_terms(c, W)
        lam[:] = _pic1_best_lambda(alpha, beta)
        return base + alpha * lam**2 - 2.0 * beta * lam

    W, v, gn = _descend(val, grad, W0, gtol, iterations, adapt=adapt)
    return W, lam, v, gn


# ---------------------------------------------------------------------------
# oracle


def _sample_values(T, spec, m, rng, want_frames=False):
    """Evaluate the cone functional at m admissible Haar samples."""
    if spec.family == "eigen":
        if spec.name == "op-2nonneg":
            M = curvature_operator(T)
            n, k, herm = M.shape[0], 2, False
        else:
            M = ricci(T)
            n, k, herm = M.shape[0], spec.ricci_k, isinstance(T, KahlerTensor)
        F = _haar_frames(rng, m, n, k, herm)
        vals = np.real(_es("bic,ij,bjc->b", F.conj(), M, F))
        return (vals, F, None) if want_frames else (vals, None, None)
    c = T.components
    lam = None
    if spec.name == "bisectional":
        W = _unit_pairs(rng, m, T.dim)
        vals = _values_nob(c, W)
    elif spec.name == "nob":
        W = _haar_frames(rng, m, T.dim, 2, True)
        vals = _values_nob(c, W)
    elif spec.name == "complex-sectional":
        W = _haar_frames(rng, m, T.dim, 2, True)
        vals = _values_complex_sectional(c.astype(complex), W)
    elif spec.name == "pic1":
        W = _haar_frames(rng, m, T.dim, 4, False)
        lam = rng.uniform(0.0, 1.0, m)
        base, alpha, beta = _pic1_lambda_terms(c, W)
        vals = base + alpha * lam**2 - 2.0 * beta * lam
    else:
        W = _haar_frames(rng, m, T.dim, spec.frame_size, False)
        weights, cross = _family_for(spec)
        vals = _values_real_family(c, W, weights, cross)
    return (vals, W, lam) if want_frames else (vals, None, None)


def _oracle_part_minima(T, spec, samples, seed, parts=4, chunk=20000):
    """Minima over ``parts`` equal disjoint blocks of one sample stream."""
    per = max(samples // parts, 1)
    minima = np.empty(parts)
    for p in range(parts):
        best = np.inf
        done, t = 0, 0
        while done < per:
            m = min(chunk, per - done)
            vals, _, _ = _sample_values(T, spec, m, derive_rng(seed, p, t))
            best = min(best, float(np.min(vals)))
            done += m
            t += 1
        minima[p] = best
    return minima


def oracle_defect(T, cone: str, samples: int, seed: int = 0):
    """Minimum of the cone functional over Haar-random admissible frames.

    Independent of the optimizer; an upper bound on the true minimum.
    """
    spec = cone_spec(cone, T.dim)
    _check_kind(T, spec)
    return float(np.min(_oracle_part_minima(T, spec, samples, seed)))


def oracle_discretization_bound(T, cone: str, samples: int, seed: int = 0):
    """(oracle minimum, bound on its overshoot above the true minimum).

    The sample stream is split into four equal blocks.  Coverage of N
    Haar samples on a D-manifold has radius ~ N^(-1/D), so a block's
    overshoot scales like (N/4)^(-2/D); the average excess of the block
    minima over the combined minimum estimates that, and dividing by
    4^(2/D)-1 converts it to the full-stream overshoot.  A safety factor
    of 4 and a floor of 1e-4 * scale absorb the randomness.  On flat
    landscapes all blocks agree and the bound collapses to the floor.
    """
    spec = cone_spec(cone, T.dim)
    _check_kind(T, spec)
    scale = max(T.norm, 1.0)
    minima = _oracle_part_minima(T, spec, samples, seed)
    o_full = float(np.min(minima))
    excess = float(np.mean(minima) - o_full)
    D = frame_manifold_dim(cone, T.dim)
    factor = 1.0 / (4.0 ** (2.0 / D) - 1.0)
    return o_full, 4.0 * factor * excess + 1e-4 * scale


# ---------------------------------------------------------------------------
# defect


def defect(T, cone: str, config: OptimizerConfig | None = None) -> ConeReport:
    """Minimum of the cone's frame functional; membership iff defect >= 0."""
    cfg = config or OptimizerConfig()
    spec = cone_spec(cone, T.dim)
    _check_kind(T, spec)
    if spec.family == "eigen":
        return _defect_eigen(T, spec, cfg)
    return _defect_frames(T, spec, cfg)


def _defect_eigen(T, spec, cfg):
    if spec.name == "op-2nonneg":
        M = curvature_operator(T)
        k = 2
        kind = "orthonormal-real"
    else:
        M = ricci(T)
        k = spec.ricci_k
        kind = "unitary-complex" if isinstance(T, KahlerTensor) else "orthonormal-real"
        if k > T.dim:
            raise InvalidInputError(f"{spec.name} needs dim >= {k}")
    w, V = np.linalg.eigh(M)
    val = float(np.sum(w[:k]))
    witness = Frame(kind, V[:, :k].T)
    oracle = None
    if cfg.oracle_samples > 0:
        oracle = oracle_defect(T, spec.name, min(cfg.oracle_samples, 4096), cfg.seed)
    return ConeReport(spec.name, val, witness, None, 0, True, oracle, 0.0)


def _defect_frames(T, spec, cfg):
    c = T.components if not spec.complex_frames or isinstance(T, KahlerTensor) else T.components.astype(complex)
    n = T.dim
    scale = max(T.norm, 1.0)
    rng = derive_rng(cfg.seed, 0)
    B = max(cfg.max_restarts, 1)
    k = spec.frame_size
    cx = spec.complex_frames

    # sampling oracle; its best frame seeds one restart
    oracle = None
    seed_frame = None
    seed_lam = None
    if cfg.oracle_samples > 0:
        oracle, seed_frame, seed_lam = _oracle_with_best(T, spec, cfg.oracle_samples, cfg.seed + 101)

    if spec.name == "bisectional":
        W0 = _unit_pairs(rng, B, n)
    else:
        W0 = _haar_frames(rng, B, n, k, cx)
    if seed_frame is not None:
        W0[0] = seed_frame
    if cfg.warm_frames is not None:
        warm = np.asarray(cfg.warm_frames, dtype=W0.dtype)
        m = min(len(warm), B - 1)
        W0[1 : 1 + m] = warm[:m]

    gtol_b = 1e-9 * scale
    gtol_p = 1e-10 * scale

    if spec.name == "pic1":
        lam0 = rng.uniform(0.0, 1.0, B)
        if seed_lam is not None:
            lam0[0] = seed_lam
        if cfg.warm_lams is not None:
            wl = np.asarray(cfg.warm_lams, dtype=float)
            m = min(len(wl), B - 1)
            lam0[1 : 1 + m] = wl[:m]
        W, lam, v, gn = _descend_pic1(c, W0, lam0, gtol_b, cfg.iterations)
        b = int(np.argmin(v))
        Wb, lamb = W[b : b + 1].copy(), lam[b : b + 1].copy()
        Wb, lamb, vb, gnb = _descend_pic1(c, Wb, lamb, gtol_p, cfg.polish_iterations)
        val = float(vb[0])
        witness = Frame("orthonormal-real", Wb[0].T)
        return ConeReport(spec.name, val, witness, float(lamb[0]), B, bool(gnb[0] <= 1e-8 * scale), oracle, float(gnb[0]))

    if spec.name in ("nob", "bisectional"):
        val_fn = lambda W: _values_nob(c, W)
        grad_fn = lambda W: _grads_nob(c, W)
    elif spec.name == "complex-sectional":
        cc = c.astype(complex)
        val_fn = lambda W: _values_complex_sectional(cc, W)
        grad_fn = lambda W: _grads_complex_sectional(cc, W)
    else:
        weights, cross = _family_for(spec)
        val_fn = lambda W: _values_real_family(c, W, weights, cross)
        grad_fn = lambda W: _grads_real_family(c, W, weights, cross)

    if spec.name == "bisectional":
        descend = _descend_spheres
    else:
        descend = _descend

    W, v, gn = descend(val_fn, grad_fn, W0, gtol_b, cfg.iterations)
    b = int(np.argmin(v))
    Wb = W[b : b + 1].copy()
    Wb, vb, gnb = descend(val_fn, grad_fn, Wb, gtol_p, cfg.polish_iterations)
    val = float(vb[0])
    kind = "unitary-complex" if cx else "orthonormal-real"
    if spec.name == "bisectional":
        kind = "unit-complex"
    witness = Frame(kind, Wb[0].T)
    return ConeReport(spec.name, val, witness, None, B, bool(gnb[0] <= 1e-8 * scale), oracle, float(gnb[0]))


def _descend_spheres(value_fn, grad_fn, W0, gtol, iterations):
    """Descent over a product of unit spheres (columns independent)."""
    return _descend(value_fn, grad_fn, W0, gtol, iterations,
                    retract=_retract_spheres, project=_project_spheres)


def _oracle_with_best(T, spec, samples, seed, chunk=20000):
    """Like oracle_defect but also returns the best frame (and lambda)."""
    best = np.inf
    best_frame = None
    best_lam = None
    done, t = 0, 0
    while done < samples:
        m = min(chunk, samples - done)
        vals, W, lam = _sample_values(T, spec, m, derive_rng(seed, 0, t), want_frames=True)
        i = int(np.argmin(vals))
        if vals[i] < best:
            best = float(vals[i])
            best_frame = W[i].copy()
            best_lam = float(lam[i]) if lam is not None else None
        done += m
        t += 1
    return best, best_frame, best_lam


# ---------------------------------------------------------------------------
# shift functional and rank-one characterization


def nob_shift(K: KahlerTensor, config: OptimizerConfig | None = None) -> float:
    """Least t such that K + t * (projective identity) lies in the nob cone.

    The identity tensor contributes exactly 1 to every orthogonal
    bisectional value, so this is minus the nob defect.
    """
    return -defect(K, "nob", config).defect


def witness_basis(frame: Frame) -> np.ndarray:
    """Unitary/orthogonal matrix whose leading columns are the frame vectors.

    The orthogonal complement is completed deterministically (eigenvectors
    of the projector off the frame span), so conjugating a tensor by the
    result re-expresses it with the witness vectors as the first basis
    elements — the frame every stationarity identity is stated in.
    """
    v = frame.vectors
    k, n = v.shape
    if k >= n:
        Q = v.T.astype(complex if np.iscomplexobj(v) else float)
    else:
        P = np.eye(n, dtype=v.dtype) - v.T @ v.conj()
        w, U = np.linalg.eigh(P)
        comp = U[:, w > 0.5]
        Q = np.concatenate([v.T, comp], axis=1)
    # QR cleanup keeps the leading columns (up to phase) and exact orthonormality
    Q, R = np.linalg.qr(Q)
    d = np.diag(R)
    return Q * np.where(np.real(d) < 0, -1.0, 1.0)[None, :]


@dataclass
class NobRank1Report(ConeReport):
    """ConeReport whose defect is the rank-one infimum u (possibly -inf)."""

    attained: bool = False
    stratum: str = "none"         # 'interior', 'nilpotent', or 'none'
    nilpotent_min: float = 0.0
    mu: complex | None = None

    @property
    def u(self):
        return self.defect

    def to_dict(self):
        d = super().to_dict()
        d.update(attained=self.attained, stratum=self.stratum,
                 nilpotent_min=self.nilpotent_min)
        return d

    def decomposition(self, K):
        """(v, u_part, w_part) matrices at the witness with v = u + w.

        v is the witness endomorphism x (y,.) scaled so its eigenvalue has
        modulus one (when nonzero), u the diagonalizable part along x, and
        w the nilpotent remainder; None when no witness."""
        if self.witness is None:
            return None
        x, y = self.witness.vectors
        mu = np.vdot(y, x)  # eigenvalue of the rank-one endomorphism
        v = np.outer(x, y.conj())
        if abs(mu) > 1e-14:
            v = v / abs(mu)
            beta = (mu / abs(mu)) / np.vdot(x, x).real
            u_part = beta * np.outer(x, x.conj())
            w_part = v - u_part
        else:
            u_part = np.zeros_like(v)
            w_part = v
        return v, u_part, w_part


def rank1_form(K: KahlerTensor, v: np.ndarray, w: np.ndarray | None = None) -> complex:
    """Hermitian form Q on rank-one endomorphisms, Q(v, w̄) with w defaulting
    to v.  For v with entries v[i,k] = x_i * conj(y_k) (the endomorphism
    u -> <u,y> x, eigenvalue <x,y>), Q(v, v̄) is the bisectional value of
    (x, y); nilpotent v are exactly the orthogonal pairs."""
    if w is None:
        w = v
    return complex(_es("ijkl,il,jk->", K.components, v, w.conj()))


def _nilpotent_minimum(c, n, cfg, scale):
    rng = derive_rng(cfg.seed, 7)
    B = max(cfg.max_restarts, 1)
    X = rng.standard_normal((B, n)) + 1j * rng.standard_normal((B, n))
    Y = rng.standard_normal((B, n)) + 1j * rng.standard_normal((B, n))

    def feas(X, Y):
        X = X / np.linalg.norm(X, axis=1, keepdims=True)
        inner = np.einsum("bi,bi->b", Y, X.conj())  # <Y, X> Hermitian
        Y = Y - inner[:, None] * X
        Y = Y / np.linalg.norm(Y, axis=1, keepdims=True)
        return X, Y

    X, Y = feas(X, Y)

    def value(X, Y):
        A = _es("ijkl,bk,bl->bji", c, Y, Y.conj())
        return np.real(_es("bji,bj,bi->b", A, X.conj(), X))

    v = value(X, Y)
    eta = np.full(B, 0.5)
    for _ in range(cfg.iterations):
        A = _es("ijkl,bk,bl->bji", c, Y, Y.conj())
        Bm = _es("ijkl,bi,bj->blk", c, X, X.conj())
        gx = 2.0 * np.einsum("bji,bi->bj", A, X)
        gy = 2.0 * np.einsum("blk,bk->bl", Bm, Y)
        gn = np.sqrt(np.sum(np.abs(gx) ** 2 + np.abs(gy) ** 2, axis=1))
        if np.all(gn <= 1e-10 * scale):
            break
        moved = np.zeros(B, dtype=bool)
        need = gn > 1e-10 * scale
        for _ in range(MAX_HALVINGS):
            Xc, Yc = feas(X - (eta * need)[:, None] * gx, Y - (eta * need)[:, None] * gy)
            vc = value(Xc, Yc)
            good = need & (vc <= v - ARMIJO_C1 * eta * gn**2 * 0.1)
            X[good], Y[good], v[good] = Xc[good], Yc[good], vc[good]
            moved |= good
            need &= ~good
            if not need.any():
                break
            eta[need] *= 0.5
            need &= eta > 1e-18
            if not need.any():
                break
        eta[moved] = np.minimum(eta[moved] * 1.5, 2.0)
    b = int(np.argmin(v))
    return float(v[b]), X[b], Y[b]


def nob_rank1(K: KahlerTensor, config: OptimizerConfig | None = None) -> NobRank1Report:
    """Infimum of the rank-one Hermitian form over endomorphisms x (y,.)
    whose nonzero eigenvalue <x,y> has modulus at most 1.

    The infimum splits over two strata: nilpotent directions (<x,y> = 0,
    i.e. orthogonal pairs), where any negative value scales to -inf, and
    the unit-eigenvalue boundary, handled by minimizing the quotient
    Q(v)/|<x,y>|^2 over unit vectors.  Zero is always a limit value, so
    the result is never positive, and it is >= 0 exactly when the
    bisectional functional is nonnegative.
    """
    cfg = config or OptimizerConfig()
    c = K.components
    n = K.dim
    scale = max(K.norm, 1.0)
    nil_min, xn, yn = _nilpotent_minimum(c, n, cfg, scale)
    if nil_min < -1e-9 * scale:
        witness = Frame("unit-complex", np.stack([xn, yn]))
        return NobRank1Report("nob-rank1", float("-inf"), witness, None, cfg.max_restarts,
                              True, None, attained=False, stratum="nilpotent",
                              nilpotent_min=nil_min, mu=0.0)

    rng = derive_rng(cfg.seed, 8)
    B = max(cfg.max_restarts, 1)
    X = rng.standard_normal((B, n)) + 1j * rng.standard_normal((B, n))
    Y = rng.standard_normal((B, n)) + 1j * rng.standard_normal((B, n))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    Y /= np.linalg.norm(Y, axis=1, keepdims=True)

    def value(X, Y):
        A = _es("ijkl,bk,bl->bji", c, Y, Y.conj())
        q = np.real(_es("bji,bj,bi->b", A, X.conj(), X))
        mu2 = np.abs(np.einsum("bi,bi->b", X, Y.conj())) ** 2
        return q / np.maximum(mu2, 1e-300)

    v = value(X, Y)
    eta = np.full(B, 0.2)
    # near-nilpotent pairs overflow the quotient; those proposals are
    # rejected by the finiteness mask, so the noise is expected
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for _ in range(cfg.iterations):
            A = _es("ijkl,bk,bl->bji", c, Y, Y.conj())
            Bm = _es("ijkl,bi,bj->blk", c, X, X.conj())
            q = np.real(_es("bji,bj,bi->b", A, X.conj(), X))
            mu = np.einsum("bi,bi->b", X, Y.conj())  # eigenvalue <X, Y>
            mu2 = np.maximum(np.abs(mu) ** 2, 1e-300)
            gq_x = 2.0 * np.einsum("bji,bi->bj", A, X)
            gq_y = 2.0 * np.einsum("blk,bk->bl", Bm, Y)
            gm_x = 2.0 * mu[:, None] * Y
            gm_y = 2.0 * np.conj(mu)[:, None] * X
            gx = (gq_x * mu2[:, None] - q[:, None] * gm_x) / (mu2**2)[:, None]
            gy = (gq_y * mu2[:, None] - q[:, None] * gm_y) / (mu2**2)[:, None]
            ipx = np.real(np.einsum("bi,bi->b", X.conj(), gx))
            ipy = np.real(np.einsum("bi,bi->b", Y.conj(), gy))
            gx = gx - ipx[:, None] * X
            gy = gy - ipy[:, None] * Y
            gn = np.sqrt(np.sum(np.abs(gx) ** 2 + np.abs(gy) ** 2, axis=1))
            if np.all(gn <= 1e-10 * scale):
                break
            moved = np.zeros(B, dtype=bool)
            need = gn > 1e-10 * scale
            for _ in range(MAX_HALVINGS):
                Xc = X - (eta * need)[:, None] * gx
                Yc = Y - (eta * need)[:, None] * gy
                Xc /= np.linalg.norm(Xc, axis=1, keepdims=True)
                Yc /= np.linalg.norm(Yc, axis=1, keepdims=True)
                vc = value(Xc, Yc)
                good = need & (vc <= v - ARMIJO_C1 * eta * gn**2 * 0.1) & np.isfinite(vc)
                X[good], Y[good], v[good] = Xc[good], Yc[good], vc[good]
                moved |= good
                need &= ~good
                if not need.any():
                    break
                eta[need] *= 0.5
                need &= eta > 1e-18
                if not need.any():
                    break
            eta[moved] = np.minimum(eta[moved] * 1.5, 1.0)
    b = int(np.argmin(v))
    best = float(v[b])
    mu_b = complex(np.vdot(Y[b], X[b]))
    if best < -1e-12 * scale:
        witness = Frame("unit-complex", np.stack([X[b], Y[b]]))
        return NobRank1Report("nob-rank1", best, witness, None, cfg.max_restarts, True,
                              None, attained=True, stratum="interior",
                              nilpotent_min=nil_min, mu=mu_b)
    return NobRank1Report("nob-rank1", 0.0, None, None, cfg.max_restarts, True, None,
                          attained=False, stratum="none", nilpotent_min=nil_min)
