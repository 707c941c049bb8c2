"""Smoke tests for the python bindings: known closed-form values and a small
end-to-end Monte-Carlo run."""

import math

import numpy as np
import pytest

import evarkit as ek


def test_gauss_calculus():
    assert ek.d_gauss(np.eye(3)) == pytest.approx(0.0)
    assert ek.d_gauss(2.0 * np.eye(2)) == pytest.approx(1.0 - math.log(2.0))
    # bernoulli two-sample effective dimension at (0.95, 0.05)
    sq = np.array([[0.95 * 0.05 * 2]])
    sp = np.array([[0.5]])
    assert ek.trace_ratio(sq, sp) == pytest.approx(0.19)
    assert ek.gaussian_kl(np.zeros(1), np.eye(1), np.ones(1), np.eye(1)) == \
        pytest.approx(0.5)


def test_family_registry():
    assert set(ek.family_names()) == {
        "bernoulli", "poisson", "exponential", "gauss-loc", "gauss-loc-scale",
        "gamma",
    }
    bern = ek.make_family("bernoulli")
    d = bern.kl(np.array([0.95]), np.array([0.5])) + \
        bern.kl(np.array([0.05]), np.array([0.5]))
    assert d == pytest.approx(0.9893, abs=1e-4)

    expo = ek.make_family("exponential")
    d = expo.kl(np.array([2.0]), np.array([4.0 / 3.0])) + \
        expo.kl(np.array([2.0 / 3.0]), np.array([4.0 / 3.0]))
    assert d == pytest.approx(math.log(4.0 / 3.0))

    with pytest.raises(ek.DomainError):
        ek.make_family("landau")


def test_two_sample_curves():
    spec = ek.TwoSampleSpec("bernoulli", 2.0 * math.log(19.0))
    assert spec.anchor.mu_a == pytest.approx(0.95)
    assert spec.anchor.mu_b == pytest.approx(0.05)
    p = spec.curve(1.3)
    assert spec.effect_size(p) == pytest.approx(2.0 * math.log(19.0))

    expo = ek.TwoSampleSpec("exponential", -1.0)
    assert expo.anchor.mu_a == pytest.approx(2.0)
    assert expo.anchor.mu_b == pytest.approx(2.0 / 3.0)
    assert expo.kl_q_vs_null(expo.anchor) == pytest.approx(math.log(4.0 / 3.0))


def test_classify():
    assert ek.classify_two_sample("bernoulli", 1.0, 0.3, 1.7)["verdict"] == \
        "strictly simple"
    assert ek.classify_two_sample("exponential", -1.0, 0.7, 5.0)["verdict"] == \
        "strictly anti-simple"


def test_solver_certificate():
    comps = np.log(np.array([[0.7, 0.2, 0.1], [0.1, 0.3, 0.6], [0.3, 0.4, 0.3]]))
    target = np.log(0.5 * np.exp(comps[0]) + 0.5 * np.exp(comps[1]))
    weights, cert = ek.solve_mixture_kl(target, comps, tol=1e-10)
    assert cert["converged"]
    assert cert["kl"] <= 1e-10
    assert weights[0] == pytest.approx(0.5, abs=1e-3)


def test_validity_and_cond_expectation():
    prob = ek.TwoSampleProblem("bernoulli", 2.0 * math.log(19.0), prior_atoms=41)
    assert prob.brute_expectation("cond", 1.0, 3) == pytest.approx(1.0, abs=1e-9)
    assert prob.brute_expectation("ui-plugin", 1.0, 3) <= 1.0 + 1e-9


def test_monte_carlo_round_trip():
    prob = ek.GaussianLocationProblem(np.zeros(1), 2.0 * np.eye(1), np.eye(1))
    out = ek.monte_carlo(prob, ["ui-simple", "cond", "seq-rip"], [2, 10],
                         replicates=4000, seed=3, simple_q=True)
    assert out["per_obs_kl"] == pytest.approx(0.5 * (1.0 - math.log(2.0)))
    for row in out["rows"]:
        if row["kind"] == "seq-rip":
            assert row["mean_log_s"] == 0.0  # anti-simple triviality
        else:
            assert abs(row["mean_log_s"] - row["predicted"]) < 4.5 * row["se"]


def test_eprocess_counterexample():
    rep = ek.eprocess_gaussian(0.0, 2.0, 1.0, 2)
    assert rep["conclusive"]
    assert max(rep["expect_forward"], rep["expect_backward"]) > 1.0 + 1e-4


def test_predicted_epower():
    value, exact = ek.predicted_epower("thm2-cond", 10, 0.3)
    assert value == pytest.approx(2.7)
    assert exact
