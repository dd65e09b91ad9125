"""Adaptive integration of the curvature reaction ODE.

The flow moves an algebraic curvature tensor by its quadratic reaction
term, ``dT/dt = reaction(T)``.  Solutions blow up in finite time (a round
ray reaches its pole at t = 1/(kappa * c)), so the integrator is an
embedded Dormand-Prince 4(5) pair with PI step-size control and a
scalar-curvature stop guard instead of a fixed horizon.

Two conventions keep the numerics honest:

* Local error is measured in the Frobenius norm, which is invariant under
  orthogonal/unitary conjugation.  Conjugated initial data therefore take
  *identical* step sequences, and equivariance of trajectories holds to
  rounding error rather than to integration tolerance.
* Riemannian states are re-projected onto the Bianchi-symmetric subspace
  after every accepted step, with the pre-projection residual recorded;
  Kahler states are never projected and their symmetry drift is watched
  directly.  Drift past ``DRIFT_TOL * scale`` aborts with IntegrityError.

Functionals (scalar curvature, lowest Ricci eigenvalue sums, cone
defects, the least identity shift into the nob cone) are recorded at
every accepted step; full tensor states are kept every tenth step plus
both endpoints.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cones import OptimizerConfig, cone_spec, defect
from .errors import BlowUpError, IntegrityError, InvalidInputError, SamplerError
from .rng import derive_rng, task_seed
from .samplers import SamplerConfig, sample_in_cone
from .tensors import (
    KahlerTensor,
    RiemannTensor,
    make_riemann,
    reaction_kahler,
    reaction_riemann,
    ricci_eigenvalues,
    scalar,
)

DRIFT_TOL = 1e-6            # symmetry drift that aborts the run
STATE_STRIDE = 10           # full tensors kept every this many accepted steps
MIN_DT = 1e-14              # below this the trajectory is declared blown up
GAP_TOL = 1e-7              # eigenvalue-gap floor for finite differences
INEQUALITY_TOL = 1e-5       # slack for the discrete differential inequalities

_BASE_FUNCTIONALS = ("scal", "ric_min", "ric_min2", "norm")
_EIGEN_FUNCTIONALS = {"ric_min": 1, "ric_min2": 2, "ric_min3": 3}

# Dormand-Prince 4(5) coefficients.  The last stage sits at the fifth-order
# solution, but we re-evaluate after projection instead of reusing it.
_DP_A = (
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
)
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_DP_E = _DP_B5 - _DP_B4

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


# ---------------------------------------------------------------------------
# step control and traces


@dataclass(frozen=True)
class StepControl:
    """Tolerances and stopping rules for the adaptive integrator."""

    dt_init: float = 1e-3
    rtol: float = 1e-8
    atol: float = 1e-10
    max_steps: int = 4000
    stop_multiple: float = 10.0     # halt once scal >= this * max(scal(0), 1)
    t_end: float | None = None      # optional fixed horizon (exact landing)
    dt_max: float | None = None

    def __post_init__(self):
        if not (self.dt_init > 0.0 and np.isfinite(self.dt_init)):
            raise InvalidInputError(f"dt_init must be positive, got {self.dt_init}")
        for name in ("rtol", "atol"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise InvalidInputError(f"{name} must lie in (0, 1), got {v}")
        if self.max_steps < 1:
            raise InvalidInputError(f"max_steps must be >= 1, got {self.max_steps}")
        if not self.stop_multiple > 1.0:
            raise InvalidInputError(
                f"stop_multiple must exceed 1, got {self.stop_multiple}"
            )
        if self.t_end is not None and not self.t_end > 0.0:
            raise InvalidInputError(f"t_end must be positive, got {self.t_end}")
        if self.dt_max is not None and not self.dt_max > 0.0:
            raise InvalidInputError(f"dt_max must be positive, got {self.dt_max}")


@dataclass
class FlowTrace:
    """Record of one trajectory: functionals per step, states every tenth.

    ``stopped`` is one of ``"scal"`` (blow-up guard), ``"t_end"``,
    ``"max_steps"`` or ``"blowup"`` (partial trace attached to the error).
    ``state_index`` holds positions of the saved tensors inside ``times``.
    """

    kind: str
    dim: int
    times: np.ndarray
    functionals: dict
    states: list
    state_index: np.ndarray
    stopped: str
    meta: dict = field(default_factory=dict)

    @property
    def state_times(self):
        return self.times[self.state_index]

    @property
    def final_state(self):
        return self.states[-1]

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    def functional(self, fid: str) -> np.ndarray:
        try:
            return self.functionals[fid]
        except KeyError:
            raise InvalidInputError(
                f"functional {fid!r} was not tracked; have {sorted(self.functionals)}"
            ) from None

    def to_csv(self) -> str:
        """Delimited dump: t, scal, ric_min, ric_min2, then the rest sorted."""
        head = ["t", "scal", "ric_min", "ric_min2"]
        rest = sorted(k for k in self.functionals if k not in head)
        cols = [self.times] + [self.functionals[k] for k in head[1:] + rest]
        lines = [",".join(head + rest)]
        for row in zip(*cols):
            lines.append(",".join(f"{v:.16e}" for v in row))
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# functional tracking


def _kind_of(T) -> str:
    if isinstance(T, KahlerTensor):
        return "kahler"
    if isinstance(T, RiemannTensor):
        return "riemann"
    raise InvalidInputError(f"expected a curvature tensor, got {type(T).__name__}")


class _Tracker:
    """Evaluates one functional id, keeping optimizer warm starts between calls.

    Cone-valued ids (``defect:<cone>`` and ``nob_shift``) run a strong
    cold search on the first call and a warm-started light search after,
    seeded from the previous witness frame.
    """

    def __init__(self, fid: str, kind: str, dim: int, seed: int):
        self.fid = fid
        self.seed = int(seed)
        self.cone = None
        self.sign = 1.0
        if fid.startswith("defect:"):
            self.cone = fid.split(":", 1)[1]
        elif fid == "nob_shift":
            # least identity shift into the nob cone == minus the defect
            self.cone, self.sign = "nob", -1.0
        elif fid not in _EIGEN_FUNCTIONALS and fid not in ("scal", "norm"):
            raise InvalidInputError(f"unknown functional id {fid!r}")
        if self.cone is not None:
            spec = cone_spec(self.cone, dim)
            if spec.kind != "both" and spec.kind != kind:
                raise InvalidInputError(
                    f"functional {fid!r} needs a {spec.kind} tensor, got {kind}"
                )
        self.warm = None

    def _config(self) -> OptimizerConfig:
        if self.warm is None:
            return OptimizerConfig(
                max_restarts=8,
                iterations=120,
                polish_iterations=400,
                oracle_samples=512,
                seed=self.seed,
            )
        return OptimizerConfig(
            max_restarts=4,
            iterations=60,
            polish_iterations=150,
            oracle_samples=128,
            seed=self.seed,
            warm_frames=self.warm,
        )

    def __call__(self, T) -> float:
        if self.fid == "scal":
            return scalar(T)
        if self.fid == "norm":
            return T.norm
        if self.cone is None:
            lam = ricci_eigenvalues(T)
            k = _EIGEN_FUNCTIONALS[self.fid]
            return float(np.sum(lam[: min(k, lam.size)]))
        rep = defect(T, self.cone, self._config())
        w = getattr(rep, "witness", None)
        if w is not None and getattr(w, "vectors", None) is not None:
            self.warm = w.vectors.T[None, :, :]
        return self.sign * rep.defect


def _build_trackers(tracked, kind, dim, seed):
    fids = list(_BASE_FUNCTIONALS)
    for fid in tracked:
        if fid not in fids:
            fids.append(fid)
    return {fid: _Tracker(fid, kind, dim, task_seed(seed, 11, i)) for i, fid in enumerate(fids)}


def functional_value(T, fid: str, seed: int = 0) -> float:
    """One functional evaluated from scratch (full-strength defect search)."""
    return _Tracker(fid, _kind_of(T), T.dim, seed)(T)


# ---------------------------------------------------------------------------
# the integrator


def _rhs(kind: str, dim: int, y: np.ndarray) -> np.ndarray:
    if kind == "riemann":
        return reaction_riemann(RiemannTensor(dim, y)).components
    return reaction_kahler(KahlerTensor(dim, y)).components


def _kahler_drift(y: np.ndarray) -> float:
    r1 = np.max(np.abs(y - y.transpose(2, 1, 0, 3)))
    r2 = np.max(np.abs(y - y.transpose(0, 3, 2, 1)))
    r3 = np.max(np.abs(y.conj() - y.transpose(1, 0, 3, 2)))
    return float(max(r1, r2, r3))


def _dp_step(kind, dim, y, k1, dt):
    """One embedded step: returns (fifth-order state, error estimate)."""
    ks = [k1]
    for i in range(1, 7):
        incr = sum(a * k for a, k in zip(_DP_A[i], ks))
        ks.append(_rhs(kind, dim, y + dt * incr))
    y5 = y + dt * sum(b * k for b, k in zip(_DP_B5, ks))
    err = dt * sum(e * k for e, k in zip(_DP_E, ks))
    return y5, err


def integrate(T0, ctrl: StepControl | None = None, tracked=(), seed: int = 0) -> FlowTrace:
    """Integrate dT/dt = reaction(T) from T0 under adaptive step control.

    ``tracked`` lists extra functional ids (``defect:<cone>``,
    ``nob_shift``, ``ric_min3``) on top of the always-recorded scal,
    ric_min, ric_min2 and norm.  Raises BlowUpError (with the partial
    trace attached) once the step size underflows, and IntegrityError if
    the state drifts off the curvature symmetry class.
    """
    ctrl = ctrl if ctrl is not None else StepControl()
    kind = _kind_of(T0)
    dim = T0.dim
    T0.validate()
    trackers = _build_trackers(tracked, kind, dim, seed)

    y = np.array(T0.components)
    t = 0.0
    T = T0
    times = [0.0]
    rows = {fid: [tr(T)] for fid, tr in trackers.items()}
    states = [T]
    state_index = [0]
    scal0 = rows["scal"][0]
    stop_level = ctrl.stop_multiple * max(scal0, 1.0)

    dt = ctrl.dt_init
    if ctrl.dt_max is not None:
        dt = min(dt, ctrl.dt_max)
    accepted = rejected = 0
    max_drift = 0.0
    err_prev = None
    stopped = None

    def _trace(reason):
        idx = list(state_index)
        kept = list(states)
        if idx[-1] != len(times) - 1:
            idx.append(len(times) - 1)
            kept.append(T)
        return FlowTrace(
            kind=kind,
            dim=dim,
            times=np.array(times),
            functionals={fid: np.array(v) for fid, v in rows.items()},
            states=kept,
            state_index=np.array(idx),
            stopped=reason,
            meta={
                "accepted": accepted,
                "rejected": rejected,
                "max_drift": max_drift,
                "stop_level": stop_level,
                "seed": seed,
            },
        )

    k1 = _rhs(kind, dim, y)
    while accepted < ctrl.max_steps:
        if ctrl.t_end is not None:
            gap = ctrl.t_end - t
            if gap <= 1e-12 * max(ctrl.t_end, 1.0):
                stopped = "t_end"
                break
            dt = min(dt, gap)
        if dt < MIN_DT:
            raise BlowUpError(
                f"step size underflow at t={t:.12e} (dt={dt:.3e}); "
                "the trajectory has reached its blow-up time",
                trace=_trace("blowup"),
            )
        y5, err = _dp_step(kind, dim, y, k1, dt)
        ny = np.linalg.norm(y)
        n5 = np.linalg.norm(y5)
        e = np.linalg.norm(err) / (ctrl.atol + ctrl.rtol * max(ny, n5))
        if not np.isfinite(e) or e > 1.0:
            rejected += 1
            fac = _MIN_FACTOR if not np.isfinite(e) else max(_MIN_FACTOR, _SAFETY * e ** -0.2)
            dt *= fac
            continue

        # accepted: police the symmetry class, then record
        t += dt
        accepted += 1
        scale = max(n5, 1.0)
        if kind == "riemann":
            proj = make_riemann(y5).components
            drift = float(np.max(np.abs(y5 - proj))) / scale
            y = proj
        else:
            drift = _kahler_drift(y5) / scale
            y = y5
        max_drift = max(max_drift, drift)
        if drift > DRIFT_TOL:
            raise IntegrityError(
                f"state drifted off the curvature symmetry class at t={t:.6e} "
                f"(residual {drift:.3e} of scale, tolerance {DRIFT_TOL:.1e})"
            )
        T = RiemannTensor(dim, y) if kind == "riemann" else KahlerTensor(dim, y)
        times.append(t)
        for fid, tr in trackers.items():
            rows[fid].append(tr(T))
        if accepted % STATE_STRIDE == 0:
            states.append(T)
            state_index.append(len(times) - 1)
        if rows["scal"][-1] >= stop_level:
            stopped = "scal"
            break

        k1 = _rhs(kind, dim, y)
        if e == 0.0:
            fac = _MAX_FACTOR
        elif err_prev is None:
            fac = _SAFETY * e ** -0.2
        else:
            fac = _SAFETY * e ** -0.14 * err_prev ** 0.08
        err_prev = max(e, 1e-12)
        dt *= min(_MAX_FACTOR, max(_MIN_FACTOR, fac))
        if ctrl.dt_max is not None:
            dt = min(dt, ctrl.dt_max)
    if stopped is None:
        stopped = "max_steps"
    return _trace(stopped)


# ---------------------------------------------------------------------------
# finite differences on the accepted-step grid


def fd_derivative(times, values, order: int = 2):
    """Derivative of a sampled series on a non-uniform grid.

    Fits the ``order + 1`` nearest samples around each interior point and
    differentiates exactly; order 2 is the classical three-point central
    stencil.  Endpoints are dropped: the result aligns with
    ``times[order//2 : len(times) - order//2]``.
    """
    if order not in (2, 4):
        raise InvalidInputError(f"order must be 2 or 4, got {order}")
    t = np.asarray(times, dtype=float)
    f = np.asarray(values, dtype=float)
    half = order // 2
    m = t.size
    if m < order + 1:
        return np.empty(0)
    out = np.empty(m - 2 * half)
    for i in range(half, m - half):
        d = t[i - half : i + half + 1] - t[i]
        h = np.max(np.abs(d))
        u = d / h
        V = np.vander(u, order + 1, increasing=True).T
        b = np.zeros(order + 1)
        b[1] = 1.0
        w = np.linalg.solve(V, b)
        out[i - half] = w @ f[i - half : i + half + 1] / h
    return out


# ---------------------------------------------------------------------------
# cone invariance ensembles


@dataclass
class InvarianceReport:
    """Worst normalized defect excursion over an ensemble of trajectories."""

    cone: str
    dim: int
    count: int
    worst_excursion: float
    excursions: np.ndarray
    margins: np.ndarray
    blowups: int
    steps: np.ndarray
    filtered: int = 0
    traces: list | None = None


def _experiment_kind(cone: str, sample_cone: str, dim: int) -> str:
    spec = cone_spec(sample_cone, dim)
    if spec.kind != "both":
        return spec.kind
    spec = cone_spec(cone, dim)
    return spec.kind if spec.kind != "both" else "riemann"


def trajectory_task(params) -> dict:
    """One ensemble member: draw, filter, integrate, summarize.

    Top-level and driven by a single picklable tuple so worker pools can
    run members independently; everything inside derives from
    (seed, index), which is what makes the ensemble reproducible at any
    worker count.
    """
    cone, sample_cone, kind, dim, ctrl, seed, index, margin, keep_trace = params
    rng = derive_rng(seed, 7, index)
    m = 0.0 if margin is None and rng.random() < 0.7 else margin
    if m is None:
        m = 0.25 * rng.random()
    fid = f"defect:{cone}"
    filtered = 0
    for attempt in range(30):
        cfg = SamplerConfig(
            dim=dim, seed=task_seed(seed, 7, index, attempt), cone=sample_cone, margin=float(m)
        )
        T0, _ = sample_in_cone(kind, cfg)
        if sample_cone == cone:
            break
        d0 = functional_value(T0, fid, seed=task_seed(seed, 9, index, attempt))
        if d0 >= -1e-8 * max(T0.norm, 1.0):
            break
        filtered += 1
    else:
        raise SamplerError(
            f"could not draw a {sample_cone} member inside {cone} after 30 tries"
        )
    blew = False
    try:
        trace = integrate(T0, ctrl, tracked=(fid,), seed=task_seed(seed, 8, index))
    except BlowUpError as err:
        blew = True
        trace = err.trace
    s = np.maximum(trace.functionals["norm"], 1.0)
    return {
        "excursion": float(np.min(trace.functionals[fid] / s)),
        "margin": float(m),
        "steps": int(trace.meta["accepted"]),
        "blowup": blew,
        "filtered": filtered,
        "trace": trace if keep_trace else None,
    }


def invariance_tasks(
    cone: str,
    dim: int,
    count: int,
    ctrl: StepControl | None = None,
    seed: int = 0,
    sample_cone: str | None = None,
    margin: float | None = None,
    keep_traces: bool = False,
) -> list:
    """Parameter tuples for :func:`trajectory_task`, one per ensemble member."""
    if count < 1:
        raise InvalidInputError(f"count must be >= 1, got {count}")
    ctrl = ctrl if ctrl is not None else StepControl(stop_multiple=2.0, max_steps=600)
    sample_cone = sample_cone if sample_cone is not None else cone
    kind = _experiment_kind(cone, sample_cone, dim)
    return [
        (cone, sample_cone, kind, dim, ctrl, seed, i, margin, keep_traces)
        for i in range(count)
    ]


def assemble_invariance(cone: str, dim: int, results) -> InvarianceReport:
    """Fold per-trajectory summaries (in index order) into one report."""
    results = list(results)
    excursions = np.array([r["excursion"] for r in results])
    traces = [r["trace"] for r in results]
    return InvarianceReport(
        cone=cone,
        dim=dim,
        count=len(results),
        worst_excursion=float(np.min(excursions)),
        excursions=excursions,
        margins=np.array([r["margin"] for r in results]),
        blowups=sum(r["blowup"] for r in results),
        steps=np.array([r["steps"] for r in results], dtype=int),
        filtered=sum(r["filtered"] for r in results),
        traces=traces if any(t is not None for t in traces) else None,
    )


def invariance_experiment(
    cone: str,
    dim: int,
    count: int,
    ctrl: StepControl | None = None,
    seed: int = 0,
    sample_cone: str | None = None,
    margin: float | None = None,
    keep_traces: bool = False,
    mapper=map,
) -> InvarianceReport:
    """Flow boundary-biased members of a cone and watch the tracked defect.

    Draws ``count`` tensors conditioned into ``sample_cone`` (default: the
    tracked cone itself), integrates each until the scalar curvature
    doubles, and reports the most negative value of defect/scale seen at
    any accepted step of any trajectory.  Blow-ups are recorded, not
    fatal.  A fixed ``margin`` conditions every draw at that defect;
    ``None`` mixes exact boundary (70%) with small interior margins.

    When sampling from one cone but tracking another, the question is
    whether membership of the tracked cone persists, so draws that start
    outside it are rejected and redrawn (the count appears as
    ``filtered``).

    ``mapper`` has the signature of the ``map`` builtin and exists so a
    process pool can spread trajectories over workers; results are merged
    by index, keeping the report identical at any worker count.
    """
    tasks = invariance_tasks(cone, dim, count, ctrl, seed, sample_cone, margin, keep_traces)
    return assemble_invariance(cone, dim, mapper(trajectory_task, tasks))


# ---------------------------------------------------------------------------
# discrete differential inequalities


@dataclass
class InequalityReport:
    """Worst finite-difference margin of one differential inequality."""

    which: str
    cone: str
    dim: int
    tol: float
    worst_margin: float
    margins: np.ndarray
    times: np.ndarray
    evaluated: int
    skipped: int
    constant: float | None
    trace: FlowTrace

    @property
    def passed(self) -> bool:
        return bool(self.worst_margin >= -self.tol)

    @property
    def skip_fraction(self) -> float:
        total = self.evaluated + self.skipped
        return self.skipped / total if total else 0.0


# which -> (tensor kind, membership cone, tracked functional, inequality form)
_INEQUALITIES = {
    "EQ53": ("kahler", "nob", "ric_min", "quadratic"),
    "EQ59": ("riemann", "sum4", "ric_min2", "quadratic"),
    "SIXKEY": ("kahler", "nob", "nob_shift", "shift"),
}


def _resolve_inequality(which: str) -> str:
    key = which.upper().replace("-", "").replace("_", "").replace(".", "")
    if key not in _INEQUALITIES:
        raise InvalidInputError(
            f"unknown inequality {which!r}; choose from {sorted(_INEQUALITIES)}"
        )
    return key


def differential_inequality_check(
    T0,
    which: str,
    ctrl: StepControl | None = None,
    constant: float | None = None,
    seed: int = 0,
) -> InequalityReport:
    """Check a differential inequality along the flow by finite differences.

    ``EQ53``: d(lambda_1)/dt >= lambda_1^2 for the lowest Kahler-Ricci
    eigenvalue, starting inside the nob cone.  ``EQ59``: the same with
    lambda_1 + lambda_2 and its square, starting weakly PIC (sum4 cone).
    ``SIXKEY``: the least nob shift obeys dl/dt <= scal * l + C * l^2;
    ``constant`` overrides the empirically calibrated C.

    Derivatives come from second-order central differences on the accepted
    time grid, so each margin carries a quadratic tolerance
    ``INEQUALITY_TOL * scale^2``.  Interior points where the relevant
    eigenvalue gap closes below GAP_TOL * scale are skipped and counted:
    the minimum is not differentiable across a crossing.  A gap that is
    closed at *every* interior point is a permanent degeneracy (a
    symmetric ray, say), where the lowest eigenvalue follows one smooth
    branch; nothing is skipped in that case.
    """
    key = _resolve_inequality(which)
    kind, cone, fid, form = _INEQUALITIES[key]
    if _kind_of(T0) != kind:
        raise InvalidInputError(f"{key} needs a {kind} tensor, got {_kind_of(T0)}")
    pre = defect(
        T0,
        cone,
        OptimizerConfig(max_restarts=16, iterations=150, polish_iterations=600,
                        oracle_samples=512, seed=task_seed(seed, 5)),
    )
    s0 = max(T0.norm, 1.0)
    if pre.defect < -1e-5 * s0:
        raise InvalidInputError(
            f"initial tensor lies outside the {cone} cone "
            f"(defect {pre.defect:.3e} at scale {s0:.3e}); {key} does not apply"
        )

    tracked = (fid, "ric_min3") if key == "EQ59" else (fid,)
    ctrl = ctrl if ctrl is not None else StepControl()
    try:
        trace = integrate(T0, ctrl, tracked=tracked, seed=seed)
    except BlowUpError as err:
        trace = err.trace

    C = None
    if form == "shift":
        C = constant
        if C is None:
            from .verifiers import _empirical_sixkey_constant

            C = _empirical_sixkey_constant(T0.dim, task_seed(seed, 6))

    t = trace.times
    f = trace.functional(fid)
    s = np.maximum(trace.functionals["norm"], 1.0)
    if t.size < 3:
        return InequalityReport(key, cone, T0.dim, INEQUALITY_TOL, 0.0, np.empty(0),
                                np.empty(0), 0, 0, C, trace)

    fp = fd_derivative(t, f, order=2)
    inner = slice(1, t.size - 1)
    if form == "quadratic":
        margin = (fp - f[inner] ** 2) / s[inner] ** 2
    else:
        scal = trace.functionals["scal"][inner]
        margin = (scal * f[inner] + C * f[inner] ** 2 - fp) / s[inner] ** 2

    if key == "EQ53":
        gap = trace.functionals["ric_min2"] - 2.0 * trace.functionals["ric_min"]
    elif key == "EQ59":
        gap = (trace.functionals["ric_min3"] + trace.functionals["ric_min"]
               - 2.0 * trace.functionals["ric_min2"])
    else:
        gap = None
    if gap is None:
        keep = np.ones(margin.size, dtype=bool)
    else:
        keep = gap[inner] >= GAP_TOL * s[inner]
        if not keep.any():
            keep = np.ones(margin.size, dtype=bool)
    margins = margin[keep]
    worst = float(np.min(margins)) if margins.size else 0.0
    return InequalityReport(
        which=key,
        cone=cone,
        dim=T0.dim,
        tol=INEQUALITY_TOL,
        worst_margin=worst,
        margins=margins,
        times=t[inner][keep],
        evaluated=int(margins.size),
        skipped=int(margin.size - margins.size),
        constant=C,
        trace=trace,
    )
