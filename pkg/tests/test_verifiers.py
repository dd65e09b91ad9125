"""Tests for the claim registry and its two-phase verification drivers."""

import numpy as np
import pytest

from curvlab.errors import InvalidInputError
from curvlab.samplers import direct_sum, sphere
from curvlab.tensors import (
    RiemannTensor,
    conjugate,
    make_riemann,
    reaction_riemann,
    ricci,
    scalar,
)
from curvlab.verifiers import (
    VerifierReport,
    claim_ids,
    reevaluate,
    registry_csv,
    resolve_claim,
    verify,
    verify_all,
    verify_conditional,
    verify_identity,
)


def test_registry_has_all_claims():
    tags = claim_ids()
    assert len(tags) == 17
    assert len(set(tags)) == 17


@pytest.mark.parametrize("name,expected", [
    ("ID_32", "ID_32"),
    ("id-32", "ID_32"),
    ("lemma-4.1", "LEMMA41"),
    ("LEMMA41", "LEMMA41"),
    ("eq-5.9-reaction", "EQ59_REACTION"),
    ("Sixkey-III", "SIXKEY_III"),
    ("mu-bound", "MU_BOUND"),
])
def test_claim_aliases_resolve(name, expected):
    assert resolve_claim(name) == expected


def test_unknown_claim_rejected():
    with pytest.raises(InvalidInputError):
        resolve_claim("lemma-9.9")


@pytest.mark.parametrize("tag,dim", [
    ("ID_32", 4),
    ("ID_32", 5),
    ("ID_1212", 4),
    ("KAHLER_RIC_REACTION", 2),
    ("KAHLER_RIC_REACTION", 3),
])
def test_identity_claims_hold(tag, dim):
    report = verify_identity(tag, dim, samples=60, seed=5)
    assert report.threshold == 1e-10
    assert report.max_violation <= report.threshold
    assert report.samples_tested == 60
    assert abs(reevaluate(report) - report.max_violation) <= 1e-12


def test_identity_rejects_conditional_tag():
    with pytest.raises(InvalidInputError):
        verify_identity("LEMMA41", 5, samples=1)
    with pytest.raises(InvalidInputError):
        verify_conditional("ID_32", 5, samples=1)
    with pytest.raises(InvalidInputError):
        verify("ID_32", 5, falsified=True)


def test_round_sphere_trace_arithmetic():
    # n = 5, unit curvature: scalar 20, diagonal Ricci entries 4, plane
    # curvatures 1; both sides of the corner-trace identity equal 4
    T = sphere(5, 1.0)
    c = T.components
    r = ricci(T)
    lhs = scalar(T) - 2.0 * r[4, 4] - 2.0 * r[0, 0]
    mid = c[1:4, 1:4, 1:4, 1:4]
    rhs = -2.0 * c[0, 4, 0, 4] + np.einsum("klkl->", mid)
    assert abs(lhs - 4.0) < 1e-12
    assert abs(rhs - 4.0) < 1e-12


@pytest.mark.parametrize("tag,dim", [
    ("LEMMA31_P1", 5),
    ("THM32_REACTION", 5),
    ("EQ33_KERNEL", 5),
    ("LEMMA41", 5),
    ("NOB_2NONNEG_RICCI", 4),
    ("ALT_SCAL_BOUND", 2),
    ("SIXKEY_I", 2),
    ("SIXKEY_PINCH", 3),
])
def test_conditional_claims_small_budget(tag, dim):
    report = verify_conditional(tag, dim, samples=3, search_restarts=1, seed=11)
    assert report.passed
    assert report.asserting
    assert report.samples_tested > 0
    assert abs(reevaluate(report) - report.max_violation) <= 1e-12


def test_mu_bound_small_budget():
    report = verify_conditional("MU_BOUND", 2, samples=4, search_restarts=1, seed=6)
    assert report.passed
    assert report.threshold == 1e-5
    assert {"v", "u", "w"} <= set(report.witness)
    assert abs(reevaluate(report) - report.max_violation) <= 1e-12


def test_probe_dimension_reports_without_asserting():
    report = verify_conditional("NOB_2NONNEG_RICCI", 3, samples=3,
                                search_restarts=1, seed=2)
    assert not report.asserting
    assert report.passed  # non-asserting reports never fail


@pytest.mark.parametrize("tag,dim", [
    ("LEMMA41", 4),
    ("PROP42_REACTION", 4),
    ("EQ59_REACTION", 4),
    ("LEMMA31_P2", 4),
])
def test_dimension_validity(tag, dim):
    with pytest.raises(InvalidInputError):
        verify(tag, dim, samples=1, search_restarts=0)


def test_verify_all_needs_dim_five():
    with pytest.raises(InvalidInputError):
        verify_all(4)


def _pair_bound_terms(T):
    """The three expression routes for the smallest-two-eigenvalue bound."""
    lam, Q = np.linalg.eigh(ricci(T))
    Tw = conjugate(T, Q)
    c = Tw.components
    n = T.dim
    s = max(T.norm, 1.0)
    lem = -sum((c[0, k, 0, k] + c[1, k, 1, k]) * (2 * lam[k] - lam[0] - lam[1])
               for k in range(2, n)) / s**2
    quad = ((lam[0] + lam[1]) ** 2
            - 2 * sum((c[0, k, 0, k] + c[1, k, 1, k]) * lam[k]
                      for k in range(n))) / s**2
    rq = ricci(reaction_riemann(Tw))
    reac = ((lam[0] + lam[1]) ** 2 - rq[0, 0] - rq[1, 1]) / s**2
    return lem, quad, reac


def test_pair_bound_routes_agree():
    # the direct sum, the completed square, and the reaction-operator route
    # are the same polynomial in the curvature; check on generic tensors
    rng = np.random.default_rng(77)
    for _ in range(5):
        T = make_riemann(rng.standard_normal((5,) * 4))
        lem, quad, reac = _pair_bound_terms(T)
        assert abs(lem - quad) < 1e-10
        assert abs(quad - reac) < 1e-10


def test_pair_bound_sharp_on_plane_block_fixture():
    # two-plane with curvature -1 summed with a unit 3-sphere sits exactly on
    # the quadruple-sum boundary and makes the pair bound an equality
    kappa = -1.0
    c2 = np.zeros((2, 2, 2, 2))
    c2[0, 1, 0, 1] = c2[1, 0, 1, 0] = kappa
    c2[0, 1, 1, 0] = c2[1, 0, 0, 1] = -kappa
    T = direct_sum(RiemannTensor(2, c2), sphere(3, 1.0))
    lem, quad, reac = _pair_bound_terms(T)
    assert abs(lem) < 1e-12
    assert abs(quad) < 1e-12
    assert abs(reac) < 1e-12


@pytest.mark.parametrize("tag", ["LEMMA41", "NOB_2NONNEG_RICCI"])
def test_falsified_variant_finds_violation(tag):
    report = verify(tag, 5, samples=5, search_restarts=4, seed=11, falsified=True)
    assert report.max_violation >= 1e-2
    assert not report.asserting
    assert report.notes.get("falsified") is True


def test_reports_are_deterministic():
    a = verify("THM32_REACTION", 5, samples=2, search_restarts=1, seed=9)
    b = verify("THM32_REACTION", 5, samples=2, search_restarts=1, seed=9)
    assert a.max_violation == b.max_violation
    assert a.samples_tested == b.samples_tested
    c = verify("THM32_REACTION", 5, samples=2, search_restarts=1, seed=10)
    assert c.max_violation != a.max_violation


def test_stratum_empty_falls_back_to_fixtures():
    report = verify_conditional("EQ33_KERNEL", 4, samples=0, search_restarts=0,
                                seed=0)
    assert report.stratum_empty
    assert report.samples_tested == 2
    assert report.passed


def test_report_serialization():
    report = verify_identity("KAHLER_RIC_REACTION", 2, samples=3, seed=1)
    d = report.to_dict()
    assert d["claim"] == "KAHLER_RIC_REACTION"
    assert d["passed"] is True
    assert set(d["witness"]["components"]) == {"re", "im"}
    assert isinstance(d["witness"]["components"]["re"], list)


def test_registry_csv_format():
    reports = [
        VerifierReport("ID_32", 5, 10, 1e-16, None, 0, 1e-10),
        VerifierReport("NOB_2NONNEG_RICCI", 3, 4, -0.5, None, 2, 1e-6,
                       asserting=False),
        VerifierReport("LEMMA41", 5, 4, 0.25, None, 2, 1e-6),
    ]
    text = registry_csv(reports)
    lines = text.strip().split("\n")
    assert lines[0] == "claim,dim,samples_tested,max_violation,status"
    assert lines[1].endswith("pass")
    assert lines[2].endswith("probe")
    assert lines[3].endswith("fail")
    assert "2.5000000000000000e-01" in lines[3]
