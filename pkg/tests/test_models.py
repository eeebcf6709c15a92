"""Model layer: rate tables, pseudo-generating functions, PGF evaluation.

Closed forms are cross-checked against generic backward-ODE integration
(the closed form stripped off the model), and special parameter choices
against hand-derivable solutions.
"""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from branchprob.models import (ModelSpec, PgfQuery, TwoTypeRates, backward_rhs,
                               bds_model, default_time, hsc_model, named_model,
                               pgf_eval, pgf_eval_batch, pseudo_gf)


def strip_closed_form(model):
    return ModelSpec(model.name, model.rates, model.params, None)


def circle_points(rng, count):
    ang = rng.uniform(0, 2 * np.pi, (2, count))
    return np.exp(1j * ang[0]), np.exp(1j * ang[1])


class TestRateTables:
    def test_from_events_fills_diagonals(self):
        r = TwoTypeRates.from_events({(2, 0): 0.125, (0, 1): 0.104},
                                     {(0, 0): 0.147})
        assert r.rates1[(1, 0)] == pytest.approx(-0.229)
        assert r.rates2[(0, 1)] == pytest.approx(-0.147)
        assert math.fsum(r.rates1.values()) == pytest.approx(0.0, abs=1e-15)
        assert math.fsum(r.rates2.values()) == pytest.approx(0.0, abs=1e-15)

    def test_rejects_negative_event_rate(self):
        with pytest.raises(ValueError):
            TwoTypeRates({(2, 0): -0.1, (1, 0): 0.1}, {(0, 1): 0.0})

    def test_rejects_positive_diagonal(self):
        with pytest.raises(ValueError):
            TwoTypeRates({(1, 0): 0.5}, {(0, 1): 0.0})

    def test_rejects_nonzero_sum(self):
        with pytest.raises(ValueError):
            TwoTypeRates({(2, 0): 0.5, (1, 0): -0.3}, {(0, 1): 0.0})

    def test_rejects_negative_offspring_counts(self):
        with pytest.raises(ValueError):
            TwoTypeRates({(-1, 0): 0.5, (1, 0): -0.5}, {(0, 1): 0.0})

    def test_events_lists_positive_offdiagonals(self, hsc):
        assert hsc.rates.events(1) == [(0, 1, 0.104), (2, 0, 0.125)]
        assert hsc.rates.events(2) == [(0, 0, 0.147)]


class TestPseudoGf:
    def test_hsc_value(self, hsc):
        # u_1 = rho s1^2 + nu s2 - (rho + nu) s1, u_2 = mu (1 - s2)
        s1, s2 = 0.3 + 0.4j, -0.6 + 0.1j
        u1 = 0.125 * s1 ** 2 + 0.104 * s2 - 0.229 * s1
        u2 = 0.147 * (1 - s2)
        assert_allclose(pseudo_gf(hsc.rates, 1, s1, s2), u1, atol=1e-15)
        assert_allclose(pseudo_gf(hsc.rates, 2, s1, s2), u2, atol=1e-15)

    def test_bds_value(self, bds):
        s1, s2 = 0.9, 0.2
        u1 = 0.0156 * s1 * s2 + 0.00426 * s2 + 0.0187 - 0.03856 * s1
        u2 = 0.0156 * s2 ** 2 + 0.0187 - 0.0343 * s2
        assert_allclose(pseudo_gf(bds.rates, 1, s1, s2), u1, atol=1e-15)
        assert_allclose(pseudo_gf(bds.rates, 2, s1, s2), u2, atol=1e-15)

    def test_vanishes_at_one_one(self, rng):
        # conservation: every zero-sum rate table gives u_i(1, 1) = 0
        for _ in range(20):
            ev1 = {(2, 0): rng.uniform(0, 2), (0, 1): rng.uniform(0, 2),
                   (0, 0): rng.uniform(0, 2), (1, 2): rng.uniform(0, 2)}
            ev2 = {(0, 0): rng.uniform(0, 2), (0, 2): rng.uniform(0, 2),
                   (1, 1): rng.uniform(0, 2)}
            rates = TwoTypeRates.from_events(ev1, ev2)
            one = np.array([1.0 + 0j])
            assert abs(pseudo_gf(rates, 1, one, one)[0]) < 1e-12
            assert abs(pseudo_gf(rates, 2, one, one)[0]) < 1e-12

    def test_rejects_bad_particle_type(self, hsc):
        with pytest.raises(ValueError):
            pseudo_gf(hsc.rates, 3, 1.0, 1.0)

    def test_backward_rhs_requires_even_state(self, hsc):
        f = backward_rhs(hsc.rates)
        with pytest.raises(ValueError):
            f(0.0, np.ones(3, dtype=complex))


class TestQueryValidation:
    def test_rejects_negative_time(self):
        with pytest.raises(ValueError):
            PgfQuery(-0.1, 1, 0, 0.5, 0.5)

    def test_rejects_negative_counts(self):
        with pytest.raises(ValueError):
            PgfQuery(1.0, -1, 0, 0.5, 0.5)

    def test_rejects_s_outside_disc(self):
        with pytest.raises(ValueError):
            PgfQuery(1.0, 1, 0, 1.5, 0.5)

    def test_batch_rejects_mismatched_shapes(self, hsc):
        with pytest.raises(ValueError):
            pgf_eval_batch(hsc, 1.0, 1, 0, np.ones(3, dtype=complex),
                           np.ones(4, dtype=complex))


class TestClosedForms:
    def test_hsc_phi2_formula(self, hsc):
        s2 = np.array([0.3 - 0.7j])
        val = hsc.closed_form_phi2(1.0, s2)[0]
        assert_allclose(val, 1 + (s2[0] - 1) * math.exp(-0.147), atol=1e-15)

    @pytest.mark.parametrize("name,t", [("hsc", 1.0), ("bds", 0.35),
                                        ("hsc", 2.0), ("bds", 1.3)])
    def test_phi2_matches_generic_ode(self, name, t, rng):
        model = named_model(name)
        generic = strip_closed_form(model)
        s1, s2 = circle_points(rng, 10)
        closed, _ = pgf_eval_batch(model, t, 0, 1, s1, s2)
        via_ode, _ = pgf_eval_batch(generic, t, 0, 1, s1, s2)
        assert_allclose(closed, via_ode, atol=1e-8)

    def test_bds_equal_rates_limit_matches_ode(self, rng):
        beta = 0.02
        model = bds_model(beta, 0.004, beta)
        generic = strip_closed_form(model)
        s1, s2 = circle_points(rng, 8)
        closed, _ = pgf_eval_batch(model, 0.7, 0, 1, s1, s2)
        via_ode, _ = pgf_eval_batch(generic, 0.7, 0, 1, s1, s2)
        assert_allclose(closed, via_ode, atol=1e-8)

    def test_bds_phi2_at_s2_equal_one(self, bds):
        vals, solves = pgf_eval_batch(bds, 0.35, 0, 3,
                                      np.array([1.0 + 0j]),
                                      np.array([1.0 + 0j]))
        assert vals[0] == 1.0 + 0.0j
        assert solves == 0


class TestPgfEval:
    @pytest.mark.parametrize("name", ["hsc", "bds"])
    @pytest.mark.parametrize("t", [0.1, 0.35, 1.0, 2.0])
    def test_normalization_at_one(self, name, t):
        val = pgf_eval(named_model(name), PgfQuery(t, 1, 1, 1.0, 1.0))
        assert abs(val - 1.0) < 1e-8

    @pytest.mark.parametrize("name", ["hsc", "bds"])
    def test_bounded_on_unit_circle(self, name, rng):
        model = named_model(name)
        for _ in range(12):
            t = float(rng.uniform(0.05, 2.0))
            j, k = int(rng.integers(0, 6)), int(rng.integers(0, 6))
            s1, s2 = circle_points(rng, 8)
            vals, _ = pgf_eval_batch(model, t, j, k, s1, s2)
            assert np.abs(vals).max() <= 1.0 + 1e-8

    @pytest.mark.parametrize("name", ["hsc", "bds"])
    def test_multiplicativity_over_ancestors(self, name):
        model = named_model(name)
        t, s1, s2 = default_time(name), 0.4 + 0.5j, -0.3 + 0.2j
        p21 = pgf_eval(model, PgfQuery(t, 2, 1, s1, s2))
        p10 = pgf_eval(model, PgfQuery(t, 1, 0, s1, s2))
        p01 = pgf_eval(model, PgfQuery(t, 0, 1, s1, s2))
        assert abs(p21 - p10 ** 2 * p01) < 1e-10

    @pytest.mark.parametrize("name", ["hsc", "bds"])
    def test_time_derivative_solves_backward_equation(self, name):
        # d/dt phi_{10} = u_1(phi_10, phi_01) along the solution
        model = named_model(name)
        t, s1, s2 = 0.8, 0.3 + 0.4j, -0.2 + 0.1j
        h = 1e-5
        fd = (pgf_eval(model, PgfQuery(t + h, 1, 0, s1, s2))
              - pgf_eval(model, PgfQuery(t - h, 1, 0, s1, s2))) / (2 * h)
        u1 = pseudo_gf(model.rates, 1,
                       pgf_eval(model, PgfQuery(t, 1, 0, s1, s2)),
                       pgf_eval(model, PgfQuery(t, 0, 1, s1, s2)))
        assert abs(fd - u1) < 1e-5

    def test_hsc_without_renewal_has_analytic_phi1(self):
        # rho = 0: phi_1' = nu (phi_2 - phi_1) is linear with known solution
        nu, mu, t = 0.104, 0.147, 1.3
        model = hsc_model(0.0, nu, mu)
        s1, s2 = 0.25 - 0.6j, 0.8 + 0.3j
        expected = (math.exp(-nu * t) * s1 + (1 - math.exp(-nu * t))
                    + nu * (s2 - 1)
                    * (math.exp(-mu * t) - math.exp(-nu * t)) / (nu - mu))
        got = pgf_eval(model, PgfQuery(t, 1, 0, s1, s2))
        assert abs(got - expected) < 1e-9

    def test_shortcut_solve_counts(self, hsc):
        s1, s2 = np.full(5, 0.5 + 0j), np.full(5, 0.5 + 0j)
        vals, solves = pgf_eval_batch(hsc, 1.0, 0, 0, s1, s2)
        assert solves == 0 and np.all(vals == 1.0)
        vals, solves = pgf_eval_batch(hsc, 0.0, 2, 3, s1, s2)
        assert solves == 0
        assert_allclose(vals, s1 ** 2 * s2 ** 3, atol=1e-15)
        vals, solves = pgf_eval_batch(hsc, 1.0, 0, 2, s1, s2)
        assert solves == 0  # closed-form phi_2 only
        vals, solves = pgf_eval_batch(hsc, 1.0, 1, 0, s1, s2)
        assert solves == 5

    def test_endpoint_rounding_regression(self, bds):
        # previously raised a spurious step underflow at the very endpoint
        s1 = np.array([0.8930358727849931 - 0.4499854774536015j,
                       -0.011004756186679208 - 0.9999394458372326j,
                       0.6408135068636374 - 0.7676965868239398j,
                       0.01792659898936441 + 0.9998393056129943j,
                       0.6313695720887175 + 0.7754820845387144j,
                       -0.48141309557511897 - 0.8764938285058151j,
                       -0.2204816946398603 - 0.9753911124921815j,
                       0.49789672359549514 + 0.8672363303234425j])
        s2 = np.array([-0.792296227800817 + 0.6101366137289221j,
                       0.8451879227541548 - 0.53446924629067j,
                       -0.9265005484809641 - 0.37629341432514163j,
                       -0.8812957868794401 - 0.47256506010130334j,
                       0.34387737719305556 + 0.9390145629620581j,
                       -0.9866631991617795 - 0.16277509459325376j,
                       -0.9891790659756837 - 0.1467132421953587j,
                       0.8478923971424355 + 0.5301683533256719j])
        vals, _ = pgf_eval_batch(bds, 1.8733912263861479, 3, 5, s1, s2)
        assert np.abs(vals).max() <= 1.0 + 1e-8


class TestNamedModels:
    def test_unknown_name_rejected(self):
        with pytest.raises(ValueError):
            named_model("bd")

    def test_unknown_rate_rejected(self):
        with pytest.raises(ValueError):
            named_model("hsc", {"gamma": 0.1})

    def test_rate_override(self):
        model = named_model("hsc", {"mu": 0.5})
        assert model.params == {"rho": 0.125, "nu": 0.104, "mu": 0.5}

    def test_default_rates_and_horizons(self, hsc, bds):
        assert hsc.params == {"rho": 0.125, "nu": 0.104, "mu": 0.147}
        assert bds.params == {"beta": 0.0156, "sigma": 0.00426,
                              "delta": 0.0187}
        assert default_time("hsc") == 1.0
        assert default_time("bds") == 0.35

    def test_negative_rate_rejected(self):
        with pytest.raises(ValueError):
            hsc_model(-0.1, 0.1, 0.1)
        with pytest.raises(ValueError):
            bds_model(0.1, -0.1, 0.1)
