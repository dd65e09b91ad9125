"""Seeded random curvature tensors, cone-conditioned sampling, fixtures.

Sampling is deterministic: every tensor is a pure function of
(kind, config, index).  Cone conditioning shifts a raw sample along the
constant-curvature direction (Riemannian) or the projective-space
direction (Kahler); where that shift moves the defect affinely the
target margin is hit exactly, otherwise a bracketed root search drives
the defect to the margin from above.
"""

from dataclasses import dataclass, field

import numpy as np

from . import cones as _cones
from .errors import InvalidInputError, SamplerError
from .rng import derive_rng
from .tensors import (
    KahlerTensor,
    RiemannTensor,
    _canonical_kahler,
    _canonical_riemann,
    make_kahler,
    make_riemann,
)


@dataclass
class SamplerConfig:
    dim: int
    seed: int = 0
    scale: float = 1.0          # component standard deviation before projection
    cone: str | None = None
    margin: float = 0.0         # target defect for cone-conditioned draws
    max_bisection: int = 60
    optimizer: _cones.OptimizerConfig = field(default_factory=_cones.OptimizerConfig)

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidInputError("dim must be >= 1")
        if self.scale < 0:
            raise InvalidInputError("scale must be >= 0")
        if self.cone is not None and self.margin < 0:
            raise InvalidInputError("margin must be >= 0 when a cone is set")


# ---------------------------------------------------------------------------
# fixtures


def flat(dim: int, kind: str = "riemann"):
    """Zero curvature tensor."""
    if kind == "riemann":
        return RiemannTensor(dim, np.zeros((dim,) * 4))
    if kind == "kahler":
        return KahlerTensor(dim, np.zeros((dim,) * 4, dtype=complex))
    raise InvalidInputError(f"unknown tensor kind {kind!r}")


def sphere(dim: int, curv: float = 1.0) -> RiemannTensor:
    """Constant sectional curvature ``curv`` on R^dim.

    This is also the identity direction used by Riemannian cone shifts.
    """
    if dim < 2:
        raise InvalidInputError("sphere fixture needs dim >= 2")
    eye = np.eye(dim)
    c = curv * (np.einsum("ik,jl->ijkl", eye, eye) - np.einsum("il,jk->ijkl", eye, eye))
    return RiemannTensor(dim, _canonical_riemann(c))


def fubini_study(dim: int, curv: float = 1.0) -> KahlerTensor:
    """Projective-space tensor with holomorphic sectional curvature 2*curv.

    Components curv * (d_ij d_kl + d_il d_kj); Ricci = (dim+1)*curv * Id.
    This is also the identity direction used by Kahler cone shifts.
    """
    if dim < 1:
        raise InvalidInputError("fubini_study fixture needs dim >= 1")
    eye = np.eye(dim)
    c = curv * (np.einsum("ij,kl->ijkl", eye, eye) + np.einsum("il,kj->ijkl", eye, eye))
    return KahlerTensor(dim, _canonical_kahler(c.astype(complex)))


def direct_sum(*parts):
    """Block direct sum; all mixed components vanish.

    Parts must share a kind.  For Riemannian parts this is the curvature
    tensor of a metric product; for Kahler parts, of a product of Kahler
    manifolds.
    """
    if not parts:
        raise InvalidInputError("direct_sum needs at least one part")
    kinds = {type(p) for p in parts}
    if len(kinds) > 1:
        raise InvalidInputError("direct_sum parts must share a tensor kind")
    dims = [p.dim for p in parts]
    n = sum(dims)
    is_kahler = isinstance(parts[0], KahlerTensor)
    out = np.zeros((n,) * 4, dtype=complex if is_kahler else float)
    off = 0
    for p in parts:
        d = p.dim
        sl = slice(off, off + d)
        out[sl, sl, sl, sl] = p.components
        off += d
    if is_kahler:
        return KahlerTensor(n, _canonical_kahler(out))
    return RiemannTensor(n, _canonical_riemann(out))


product = direct_sum


def fixture(name: str, *params):
    """Dispatch by fixture name: flat, sphere, fubini_study, product."""
    table = {"flat": flat, "sphere": sphere, "fubini_study": fubini_study,
             "fubini-study": fubini_study, "product": direct_sum}
    if name not in table:
        raise InvalidInputError(f"unknown fixture {name!r}")
    return table[name](*params)


# ---------------------------------------------------------------------------
# random tensors


def random_riemann(dim: int, seed: int, index: int = 0, scale: float = 1.0) -> RiemannTensor:
    """Projection of an iid Gaussian 4-array with entry deviation ``scale``."""
    rng = derive_rng(seed, index)
    return make_riemann(scale * rng.standard_normal((dim,) * 4))


def random_kahler(dim: int, seed: int, index: int = 0, scale: float = 1.0) -> KahlerTensor:
    rng = derive_rng(seed, index)
    raw = rng.standard_normal((dim,) * 4) + 1j * rng.standard_normal((dim,) * 4)
    return make_kahler(scale * raw)


def random_tensor(kind: str, cfg: SamplerConfig, index: int = 0):
    if kind == "riemann":
        return random_riemann(cfg.dim, cfg.seed, index, cfg.scale)
    if kind == "kahler":
        return random_kahler(cfg.dim, cfg.seed, index, cfg.scale)
    raise InvalidInputError(f"unknown tensor kind {kind!r}")


# ---------------------------------------------------------------------------
# cone conditioning


def _shift_direction(T):
    if isinstance(T, KahlerTensor):
        return fubini_study(T.dim, 1.0)
    return sphere(T.dim, 1.0)


def _shifted(T, beta):
    comps = T.components + beta * _shift_direction(T).components
    if isinstance(T, KahlerTensor):
        return KahlerTensor(T.dim, comps)
    return RiemannTensor(T.dim, comps)


def _opt_variant(base, seed, light):
    if light:
        return _cones.OptimizerConfig(max_restarts=16, iterations=80, polish_iterations=200,
                                      oracle_samples=512, seed=seed)
    return _cones.OptimizerConfig(max_restarts=base.max_restarts, iterations=base.iterations,
                                  polish_iterations=base.polish_iterations,
                                  oracle_samples=base.oracle_samples, seed=seed)


# smallest possible defect increase per unit shift, for post-hoc corrections
_MIN_SLOPE = {"pic1": 2.0, "bisectional": 1.0}


def _root_shift(T0, cone, target, cfg, seed):
    """Find beta with defect(T0 + beta*id) ~= target for non-affine cones.

    The defect is a minimum of functionals affine increasing in beta, so
    it is concave and strictly increasing; a bracketed secant (Illinois)
    search converges fast.  Search iterations run a light optimizer; the
    returned beta is the upper end of the final bracket.
    """
    light = _opt_variant(cfg.optimizer, seed, light=True)

    def d(beta):
        return _cones.defect(_shifted(T0, beta), cone, light).defect

    lo, dlo = 0.0, d(0.0)
    if dlo >= target:
        hi, dhi = 0.0, dlo
        lo, dlo = -1.0, d(-1.0)
        while dlo >= target:
            hi, dhi = lo, dlo
            lo *= 2.0
            if lo < -1e6:
                raise SamplerError("shift bracket failed (low side)")
            dlo = d(lo)
    else:
        hi, dhi = 1.0, d(1.0)
        while dhi < target:
            lo, dlo = hi, dhi
            hi *= 2.0
            if hi > 1e6:
                raise SamplerError("shift bracket failed (high side)")
            dhi = d(hi)
    tol = 1e-8 * max(np.linalg.norm(T0.components), 1.0)
    last_side = 0
    for _ in range(cfg.max_bisection):
        if dhi - dlo <= 0 or hi - lo < 1e-15:
            break
        mid = lo + (target - dlo) * (hi - lo) / (dhi - dlo)
        mid = min(max(mid, lo + 0.05 * (hi - lo)), hi - 0.05 * (hi - lo))
        dm = d(mid)
        if dm < target:
            lo, dlo = mid, dm
            if last_side == -1:
                dhi = 0.5 * (dhi + target)  # Illinois damping
            last_side = -1
        else:
            hi, dhi = mid, dm
            if last_side == 1:
                dlo = 0.5 * (dlo + target)
            last_side = 1
        if abs(dm - target) < 0.25 * tol:
            break
    return hi


def sample_in_cone(kind: str, cfg: SamplerConfig, index: int = 0):
    """A random tensor conditioned to have cone defect == cfg.margin.

    Returns (tensor, report), where report is an independent defect call
    on the shifted tensor with a fresh optimizer seed.  For cones whose
    defect is affine in the identity shift the margin is exact; otherwise
    the defect lands in [margin - 1e-6*scale, margin + search slack].
    """
    if cfg.cone is None:
        raise InvalidInputError("sample_in_cone requires cfg.cone")
    cone = cfg.cone
    spec = _cones.cone_spec(cone, cfg.dim)
    if spec.kind != "both" and kind != spec.kind:
        raise InvalidInputError(f"cone {cone!r} needs tensor kind {spec.kind!r}, got {kind!r}")
    T0 = random_tensor(kind, cfg, index)
    opt = _opt_variant(cfg.optimizer, int(derive_rng(cfg.seed, index, 1).integers(2**31)), light=False)
    slope = _cones.shift_slope_for(T0, cone)
    target = cfg.margin
    if slope is not None:
        d0 = _cones.defect(T0, cone, opt).defect
        beta = (target - d0) / slope
    else:
        beta = _root_shift(T0, cone, target, cfg, int(derive_rng(cfg.seed, index, 3).integers(2**31)))
    T1 = _shifted(T0, beta)
    scale = max(T1.norm, 1.0)
    tol = 1e-6 * scale
    check = _opt_variant(cfg.optimizer, int(derive_rng(cfg.seed, index, 2).integers(2**31)), light=False)
    report = _cones.defect(T1, cone, check)
    if slope is None:
        # root search used a light optimizer; nudge up if the full one dug deeper
        min_slope = _MIN_SLOPE.get(cone, 1.0)
        for _ in range(4):
            if report.defect >= target - 0.5 * tol:
                break
            beta += (target - report.defect) / min_slope + 0.1 * tol
            T1 = _shifted(T0, beta)
            report = _cones.defect(T1, cone, check)
    ok_hi = target + (tol if slope is not None else max(1e-3 * scale, 10 * tol))
    if not (target - tol <= report.defect <= ok_hi):
        raise SamplerError(
            f"conditioned defect {report.defect:.6e} missed margin {target:.6e} "
            f"for cone {cone!r} (allowed [{target - tol:.3e}, {ok_hi:.3e}])"
        )
    return T1, report
