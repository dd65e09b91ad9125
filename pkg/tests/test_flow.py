"""Reaction-flow tests: ray solutions against closed forms, step control,
symmetry preservation, blow-up detection, and the experiment drivers.
"""

import numpy as np
import pytest

from curvlab import flow
from curvlab.errors import BlowUpError, IntegrityError, InvalidInputError
from curvlab.flow import StepControl, differential_inequality_check, fd_derivative
from curvlab.samplers import (
    SamplerConfig,
    flat,
    fubini_study,
    random_kahler,
    random_riemann,
    sample_in_cone,
    sphere,
)
from curvlab.tensors import (
    conjugate,
    reaction_kahler,
    reaction_riemann,
    realify,
    ricci,
)

# the sphere ray c(t) = c0 / (1 - kappa*c0*t) has kappa = 2(n-1);
# the Fubini-Study ray has kappa = n+1 in complex dimension n
SPHERE_KAPPA = lambda n: 2 * (n - 1)
FS_KAPPA = lambda n: n + 1


# ---------------------------------------------------------------------------
# step control


@pytest.mark.parametrize(
    "kwargs",
    [
        {"dt_init": 0.0},
        {"dt_init": -1.0},
        {"rtol": 0.0},
        {"rtol": 1.0},
        {"atol": 1.5},
        {"max_steps": 0},
        {"stop_multiple": 1.0},
        {"t_end": -0.5},
        {"dt_max": 0.0},
    ],
)
def test_step_control_rejects_bad_values(kwargs):
    with pytest.raises(InvalidInputError):
        StepControl(**kwargs)


def test_step_control_defaults_valid():
    ctrl = StepControl()
    assert ctrl.dt_init > 0 and 0 < ctrl.rtol < 1 and 0 < ctrl.atol < 1


# ---------------------------------------------------------------------------
# fixed points and rays


def test_zero_tensor_is_stationary():
    trace = flow.integrate(flat(4), StepControl(t_end=1.0, max_steps=100))
    assert trace.stopped == "t_end"
    assert trace.final_state.norm == 0.0
    assert np.all(trace.functionals["scal"] == 0.0)
    assert np.all(np.diff(trace.times) > 0)


@pytest.mark.parametrize("n", [3, 5])
def test_sphere_ray_matches_closed_form(n):
    c0 = 1.0
    trace = flow.integrate(sphere(n, c0))
    assert trace.stopped == "scal"
    kappa = SPHERE_KAPPA(n)
    ray = sphere(n, 1.0).components
    for pos, state in zip(trace.state_index, trace.states):
        t = trace.times[pos]
        c_pred = c0 / (1.0 - kappa * c0 * t)
        off = np.linalg.norm(state.components - c_pred * ray)
        assert off <= 1e-6 * np.linalg.norm(state.components)
    # scalar curvature follows the scalar ODE solution to 1e-6 relative
    c_fin = c0 / (1.0 - kappa * c0 * trace.final_time)
    scal_pred = n * (n - 1) * c_fin
    assert abs(trace.functionals["scal"][-1] - scal_pred) <= 1e-6 * scal_pred


@pytest.mark.parametrize("n,c0", [(2, 1.0), (3, 0.5)])
def test_fubini_study_ray_matches_scalar_ode(n, c0):
    trace = flow.integrate(fubini_study(n, c0))
    kappa = FS_KAPPA(n)
    for pos in trace.state_index:
        t = trace.times[pos]
        c_pred = c0 / (1.0 - kappa * c0 * t)
        scal_pred = n * (n + 1) * c_pred
        assert abs(trace.functionals["scal"][pos] - scal_pred) <= 1e-6 * scal_pred
    # the doubling guard engaged: final scal sits at (or just past) 10x
    assert trace.stopped == "scal"
    assert trace.functionals["scal"][-1] >= 10 * n * (n + 1) * c0


def test_realified_kahler_trajectory_is_half_speed_riemannian():
    # d(realify K)/dt = realify(reaction(K)) = 1/2 reaction(realify K),
    # so realifying the Kahler flow at time t matches the Riemannian flow
    # of the realified start run to time t/2.
    K0 = random_kahler(2, seed=42, scale=0.6)
    t_end = 0.15
    guard = 1e9
    trK = flow.integrate(K0, StepControl(t_end=t_end, stop_multiple=guard, max_steps=4000))
    trR = flow.integrate(
        realify(K0), StepControl(t_end=0.5 * t_end, stop_multiple=guard, max_steps=4000)
    )
    A = realify(trK.final_state).components
    B = trR.final_state.components
    assert np.linalg.norm(A - B) <= 1e-8 * max(np.linalg.norm(A), 1.0)


# ---------------------------------------------------------------------------
# trace bookkeeping


def test_trace_times_states_and_recomputation():
    trace = flow.integrate(random_riemann(4, seed=5), StepControl(stop_multiple=3.0))
    assert np.all(np.diff(trace.times) > 0)
    assert trace.state_index[0] == 0
    assert trace.state_index[-1] == trace.times.size - 1
    assert np.array_equal(trace.state_times, trace.times[trace.state_index])
    for state in trace.states:
        state.validate()
    for pos, state in zip(trace.state_index, trace.states):
        for fid in ("scal", "ric_min", "ric_min2", "norm"):
            ref = flow.functional_value(state, fid)
            assert abs(ref - trace.functionals[fid][pos]) <= 1e-8 * max(abs(ref), 1.0)


def test_trace_csv_layout():
    trace = flow.integrate(
        sphere(3, 1.0), StepControl(t_end=0.05, stop_multiple=1e9, max_steps=500)
    )
    text = trace.to_csv()
    lines = text.strip().split("\n")
    header = lines[0].split(",")
    assert header[:4] == ["t", "scal", "ric_min", "ric_min2"]
    assert "norm" in header
    assert len(lines) == 1 + trace.times.size
    row = [float(v) for v in lines[1].split(",")]
    assert row[0] == 0.0
    assert abs(row[1] - trace.functionals["scal"][0]) <= 1e-12
    # full precision survives the round trip
    last = [float(v) for v in lines[-1].split(",")]
    assert last[0] == pytest.approx(trace.final_time, rel=1e-15)


def test_unknown_functional_requests_fail():
    with pytest.raises(InvalidInputError):
        flow.integrate(flat(3), StepControl(max_steps=1), tracked=("bogus",))
    with pytest.raises(InvalidInputError):
        flow.integrate(flat(3), StepControl(max_steps=1), tracked=("defect:no-such-cone",))
    with pytest.raises(InvalidInputError):
        # nob is a Kahler cone; feeding it a Riemannian trajectory is a user error
        flow.integrate(sphere(3, 1.0), StepControl(max_steps=1), tracked=("defect:nob",))
    trace = flow.integrate(flat(3), StepControl(max_steps=1))
    with pytest.raises(InvalidInputError):
        trace.functional("absent")


def test_max_steps_stop_reason():
    trace = flow.integrate(sphere(4, 1.0), StepControl(max_steps=5))
    assert trace.stopped == "max_steps"
    assert trace.meta["accepted"] == 5
    assert trace.times.size == 6


def test_dt_max_caps_the_grid():
    trace = flow.integrate(
        sphere(3, 1.0), StepControl(t_end=0.03, dt_max=1e-3, stop_multiple=1e9, max_steps=500)
    )
    assert np.max(np.diff(trace.times)) <= 1e-3 + 1e-15


# ---------------------------------------------------------------------------
# accuracy and symmetry invariants


def test_refinement_convergence_on_sphere():
    base = 1e-6
    finals = {}
    for r in (base, base / 2, base / 4):
        ctrl = StepControl(rtol=r, atol=r * 1e-2, t_end=0.2, stop_multiple=1e9, max_steps=4000)
        finals[r] = flow.integrate(sphere(3, 1.0), ctrl).final_state.components
    scale = np.linalg.norm(finals[base])
    d1 = np.linalg.norm(finals[base] - finals[base / 2]) / scale
    d2 = np.linalg.norm(finals[base / 2] - finals[base / 4]) / scale
    assert d1 <= 10 * base
    assert d2 <= 0.8 * d1


def test_gauge_equivariance_under_conjugation():
    T0 = random_riemann(5, seed=3, scale=0.8)
    ctrl = StepControl(t_end=0.05, stop_multiple=1e9, max_steps=2000)
    ref = flow.integrate(T0, ctrl)
    rng = np.random.default_rng(7)
    for _ in range(5):
        Q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
        rotated = flow.integrate(conjugate(T0, Q), ctrl)
        want = conjugate(ref.final_state, Q).components
        got = rotated.final_state.components
        s = max(np.linalg.norm(want), 1.0)
        assert np.linalg.norm(want - got) <= 1e-7 * s


def test_riemann_projection_residual_stays_small():
    trace = flow.integrate(random_riemann(5, seed=13, scale=0.7), StepControl(stop_multiple=4.0))
    assert trace.meta["max_drift"] <= 1e-8


def test_kahler_symmetries_hold_without_projection():
    trace = flow.integrate(random_kahler(3, seed=9, scale=1.0), StepControl(stop_multiple=5.0))
    assert trace.meta["max_drift"] <= 1e-8
    trace.final_state.validate()


@pytest.mark.parametrize("kind", ["riemann", "kahler"])
def test_scal_derivative_equals_reaction_trace(kind):
    if kind == "riemann":
        T0, reac = random_riemann(5, seed=13, scale=0.7), reaction_riemann
    else:
        T0, reac = random_kahler(3, seed=2, scale=0.7), reaction_kahler
    trace = flow.integrate(T0, StepControl(stop_multiple=4.0, rtol=1e-10, atol=1e-13))
    deriv = fd_derivative(trace.times, trace.functionals["scal"], order=4)
    checked = 0
    for pos, state in zip(trace.state_index, trace.states):
        if pos < 2 or pos >= trace.times.size - 2:
            continue
        pred = float(np.real(np.trace(ricci(reac(state)))))
        assert abs(deriv[pos - 2] - pred) <= 1e-6 * max(abs(pred), 1e-12)
        checked += 1
    assert checked >= 3


# ---------------------------------------------------------------------------
# failure modes


def test_blow_up_carries_partial_trace():
    with pytest.raises(BlowUpError) as err:
        flow.integrate(sphere(3, 1.0), StepControl(stop_multiple=1e30, max_steps=20000))
    trace = err.value.trace
    assert trace.stopped == "blowup"
    # kappa = 4 at n = 3, so the pole sits at t = 1/4
    assert abs(trace.final_time - 0.25) <= 1e-6
    assert trace.functionals["scal"][-1] > 1e9
    assert np.all(np.diff(trace.times) > 0)


def test_integrity_error_on_corrupted_derivative(monkeypatch):
    def bad_rhs(kind, dim, y):
        junk = np.zeros((dim,) * 4)
        junk[0, 0, 0, 0] = 1.0  # violates first-pair antisymmetry
        return junk

    monkeypatch.setattr(flow, "_rhs", bad_rhs)
    with pytest.raises(IntegrityError):
        flow.integrate(sphere(3, 1.0), StepControl(max_steps=10))


def test_rejects_non_tensor_input():
    with pytest.raises(InvalidInputError):
        flow.integrate(np.eye(4), StepControl(max_steps=1))


# ---------------------------------------------------------------------------
# finite differences


def test_fd_derivative_exact_on_polynomials():
    rng = np.random.default_rng(0)
    t = np.cumsum(0.1 + rng.random(12))
    quad = 2.0 - 3.0 * t + 0.5 * t**2
    got = fd_derivative(t, quad, order=2)
    want = -3.0 + t[1:-1]
    assert np.max(np.abs(got - want)) <= 1e-10
    quart = 1.0 + t - t**3 + 0.25 * t**4
    got4 = fd_derivative(t, quart, order=4)
    want4 = (1.0 - 3.0 * t**2 + t**3)[2:-2]
    assert np.max(np.abs(got4 - want4)) <= 1e-8


def test_fd_derivative_guards():
    with pytest.raises(InvalidInputError):
        fd_derivative([0.0, 1.0, 2.0], [0.0, 1.0, 2.0], order=3)
    assert fd_derivative([0.0, 1.0], [1.0, 1.0], order=2).size == 0


# ---------------------------------------------------------------------------
# invariance ensembles


def test_invariance_experiment_nob_boundary():
    rep = flow.invariance_experiment("nob", 2, count=3, seed=4)
    assert rep.worst_excursion >= -1e-6
    assert rep.blowups == 0
    assert rep.count == 3 and rep.excursions.size == 3
    assert np.all(rep.steps > 0)


def test_invariance_interior_margin_never_halves():
    delta = 0.3
    rep = flow.invariance_experiment(
        "nob", 2, count=2, seed=12, margin=delta, keep_traces=True
    )
    for trace in rep.traces:
        assert np.min(trace.functionals["defect:nob"]) >= 0.5 * delta


def test_invariance_cross_seeded_filters_bad_starts():
    # lowest Ricci eigenvalue along trajectories seeded from the nob cone
    rep = flow.invariance_experiment("ricci1", 2, count=3, seed=5, sample_cone="nob")
    assert rep.worst_excursion >= -1e-6
    assert rep.filtered >= 0


def test_invariance_rejects_bad_count():
    with pytest.raises(InvalidInputError):
        flow.invariance_experiment("nob", 2, count=0)


# ---------------------------------------------------------------------------
# differential inequalities


def test_eq53_on_fubini_study_ray():
    rep = differential_inequality_check(fubini_study(2, 1.0), "EQ53")
    assert rep.passed
    assert rep.worst_margin >= 0.0
    assert rep.skipped == 0
    assert rep.evaluated >= 40


def test_eq59_on_sphere_ray():
    rep = differential_inequality_check(sphere(5, 1.0), "EQ59")
    assert rep.passed
    assert rep.worst_margin >= 0.0
    assert rep.skipped == 0


def test_inequalities_trivial_on_zero():
    rep = differential_inequality_check(
        flat(2, "kahler"), "EQ53", StepControl(t_end=0.5, max_steps=60)
    )
    assert rep.passed and rep.worst_margin == 0.0


def test_sixkey_from_boundary_member():
    K0, _ = sample_in_cone("kahler", SamplerConfig(dim=2, seed=31, cone="nob", margin=0.0))
    rep = differential_inequality_check(K0, "SIXKEY", StepControl(stop_multiple=2.0, max_steps=300))
    assert rep.passed
    assert rep.constant is not None and rep.constant > 0
    assert rep.skip_fraction == 0.0


def test_inequality_precondition_and_dispatch():
    from curvlab.samplers import _shifted

    bad = _shifted(random_kahler(2, seed=1), -5.0)
    with pytest.raises(InvalidInputError):
        differential_inequality_check(bad, "EQ53")
    with pytest.raises(InvalidInputError):
        differential_inequality_check(fubini_study(2, 1.0), "EQ99")
    with pytest.raises(InvalidInputError):
        # EQ53 concerns Kahler trajectories
        differential_inequality_check(sphere(5, 1.0), "EQ53")
    # alias forms resolve to the same inequality
    rep = differential_inequality_check(
        fubini_study(2, 1.0), "eq-5.3", StepControl(max_steps=30)
    )
    assert rep.which == "EQ53"
