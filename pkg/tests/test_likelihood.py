import math

import numpy as np
import pytest

from branchprob.inversion import invert_model
from branchprob.likelihood import ObservationSeries, observed_log_likelihood
from branchprob.models import hsc_model


def baseline_backend(model, n):
    def backend(dt, origin):
        grid, _ = invert_model(model, dt, origin[0], origin[1], n)
        return grid.values
    return backend


class TestSeries:
    def test_intervals(self):
        s = ObservationSeries(times=(0.0, 1.0, 3.0),
                              states=((2, 0), (1, 1), (0, 0)))
        assert s.intervals == [(1.0, (2, 0), (1, 1)), (2.0, (1, 1), (0, 0))]

    def test_validation(self):
        with pytest.raises(ValueError):
            ObservationSeries(times=(0.0,), states=((1, 0),))
        with pytest.raises(ValueError):
            ObservationSeries(times=(0.0, 0.0), states=((1, 0), (1, 0)))
        with pytest.raises(ValueError):
            ObservationSeries(times=(1.0, 0.5), states=((1, 0), (1, 0)))
        with pytest.raises(ValueError):
            ObservationSeries(times=(0.0, 1.0), states=((1, 0), (-1, 0)))
        with pytest.raises(ValueError):
            ObservationSeries(times=(0.0, 1.0), states=((1, 0),))


class TestLogLikelihood:
    def test_pure_death_series_analytic(self):
        # type-2 particle: survive one unit, then die within the next
        mu = 0.147
        model = hsc_model(0.0, 0.0, mu)
        series = ObservationSeries(times=(0.0, 1.0, 2.0),
                                   states=((0, 1), (0, 1), (0, 0)))
        total, parts = observed_log_likelihood(
            series, baseline_backend(model, 8))
        expected = math.log(math.exp(-mu)) + math.log(1 - math.exp(-mu))
        assert total == pytest.approx(expected, abs=1e-9)
        assert parts[0].probability == pytest.approx(math.exp(-mu), abs=1e-9)

    def test_total_is_sum_of_parts(self, hsc):
        series = ObservationSeries(
            times=(0.0, 0.4, 1.0, 1.7),
            states=((3, 1), (3, 2), (2, 3), (2, 2)))
        total, parts = observed_log_likelihood(
            series, baseline_backend(hsc, 16))
        assert len(parts) == 3
        assert total == pytest.approx(
            sum(p.log_probability for p in parts))

    def test_impossible_transition_gives_minus_inf(self):
        # a pure-death process cannot grow; the uniformization law is
        # structurally zero there (the Fourier route would leave roundoff)
        from branchprob.oracle import build_generator, transition_row
        model = hsc_model(0.0, 0.0, 0.147)
        gen = build_generator(model.rates, 8)
        series = ObservationSeries(times=(0.0, 1.0),
                                   states=((0, 1), (0, 5)))
        total, parts = observed_log_likelihood(
            series, lambda dt, origin: transition_row(gen, dt, origin).grid)
        assert total == -math.inf
        assert parts[0].log_probability == -math.inf
        assert parts[0].probability == 0.0

    def test_target_outside_window_gives_minus_inf(self, hsc):
        series = ObservationSeries(times=(0.0, 1.0),
                                   states=((1, 0), (20, 0)))
        total, _ = observed_log_likelihood(
            series, baseline_backend(hsc, 8))
        assert total == -math.inf

    def test_backend_receives_interval_and_origin(self):
        calls = []

        def recording_backend(dt, origin):
            calls.append((dt, origin))
            g = np.full((4, 4), 1 / 16)
            return g

        series = ObservationSeries(times=(0.5, 1.0, 2.5),
                                   states=((1, 1), (2, 0), (3, 3)))
        total, _ = observed_log_likelihood(series, recording_backend)
        assert calls == [(0.5, (1, 1)), (1.5, (2, 0))]
        assert total == pytest.approx(2 * math.log(1 / 16))
