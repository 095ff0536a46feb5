import csv

import numpy as np
import pytest

from trimsindy.chatter import (ChatterModel, band, critical_depth, default_frequency_grid,
                               lobes_to_csv, percentile_models, propagate_uncertainty,
                               scaled_determinant, stability_boundary, state_space)
from trimsindy.systems import ChatterParams

P = ChatterParams()


@pytest.fixture(scope="module")
def lobes():
    return stability_boundary(P, default_frequency_grid(P, 2000, 1.0), range(0, 20))


class TestStateSpace:
    def test_entries(self):
        ss = state_space(P, 50.0)
        w2 = P.omega_n**2
        c1 = 2 * P.zeta * P.omega_n + P.rho * w2
        np.testing.assert_allclose(ss.A1, [[0, 1], [-(1 + P.kappa) * w2 / 2500, -c1 / 50]])
        np.testing.assert_allclose(ss.A2, [[0, 0], [P.kappa * w2 / 2500, 0]])

    def test_zero_depth_has_no_delay_term(self):
        np.testing.assert_array_equal(state_space(P, 80.0, kappa=0.0).A2, 0.0)

    def test_rejects_bad_speed(self):
        with pytest.raises(ValueError):
            state_space(P, 0.0)


class TestModel:
    def test_coefficient_round_trip(self):
        c = P.coefficients()
        m = ChatterModel.from_coefficients(c, zeta=P.zeta)
        assert m.omega_n == pytest.approx(P.omega_n)
        assert m.kappa == pytest.approx(P.kappa)
        assert m.f == pytest.approx(P.f)
        assert m.rho == pytest.approx(P.rho)
        for key, val in m.coefficients().items():
            assert val == pytest.approx(c[key])

    def test_without_damping_split(self):
        m = ChatterModel.from_coefficients(list(P.coefficients().values()))
        assert m.rho == 0.0 and "rho_assumed_zero" in m.flags
        assert m.c1 == pytest.approx(ChatterModel.from_params(P).c1)

    def test_invalid_oscillator(self):
        with pytest.raises(ValueError):
            ChatterModel.from_coefficients({"1": 0.0, "x": 1.0, "xdot": -1.0, "x_tau": 0.0})


class TestBoundary:
    def test_points_satisfy_determinant_condition(self, lobes):
        for lb in lobes:
            assert lb.residual.max() < 1e-6
            for i in range(0, lb.omega_spindle.size, 97):
                ss = state_space(P, lb.omega_spindle[i], lb.kappa[i])
                w = lb.chatter_freq[i] / lb.omega_spindle[i]
                assert scaled_determinant(ss, w, lb.mu[i]) < 1e-6

    def test_lobes_are_ordered_by_speed(self, lobes):
        assert [lb.lobe_index for lb in lobes] == list(range(20))
        assert lobes[0].omega_spindle.min() > lobes[1].omega_spindle.min()
        for lb in lobes:
            assert np.all(np.diff(lb.omega_spindle) >= 0)
            assert np.all((lb.mu > 0.5) & (lb.mu < 1.0))

    def test_table_operating_point_is_unstable(self, lobes):
        assert critical_depth(lobes, 1.0 / P.tau)[0] < P.kappa

    def test_minimum_depth(self, lobes):
        m = ChatterModel.from_params(P)
        zeta_eff = m.c1 / (2 * m.omega_n)
        expected = 2 * zeta_eff * (1 + zeta_eff)
        kmin = min(lb.kappa.min() for lb in lobes)
        assert kmin == pytest.approx(expected, rel=0.02)

    def test_outside_lobes_is_infinite(self, lobes):
        assert np.isinf(lobes[0].kappa_at(1e6))
        assert np.isinf(critical_depth([], [10.0])).all()

    def test_grid_below_natural_frequency(self):
        with pytest.warns(UserWarning):
            assert stability_boundary(P, [1.0, 2.0]) == []
        with pytest.raises(ValueError):
            stability_boundary(P, [])


class TestUncertainty:
    def test_band_contains_nominal_and_is_ordered(self, lobes):
        c = P.coefficients()
        labels = list(c)
        q = np.array([[c[t] * (0.97 if t != "x" else 1.0) for t in labels],
                      [c[t] * (1.03 if t != "x" else 1.0) for t in labels]])
        bounds = percentile_models(q, labels)
        grid = default_frequency_grid(P, 2000, 1.0)
        blobes = propagate_uncertainty(bounds, grid, range(0, 20))
        Om = np.linspace(60, 200, 50)
        lo, hi = band(blobes, Om)
        nominal = critical_depth(lobes, Om)
        assert np.all(lo <= hi)
        assert np.mean((lo <= nominal * 1.001) & (nominal <= hi * 1.001)) > 0.9

    def test_degenerate_ensemble_gives_zero_width(self):
        c = P.coefficients()
        q = np.tile(list(c.values()), (2, 1))
        blobes = propagate_uncertainty(percentile_models(q, list(c)),
                                       default_frequency_grid(P, 500), range(0, 3))
        lo, hi = band(blobes, np.linspace(100, 300, 20))
        np.testing.assert_array_equal(lo, hi)

    def test_missing_terms_default_to_zero(self):
        out = percentile_models([[1.0, 2.0]], ["x", "junk"], (50,))
        assert out[50] == {"1": 0.0, "x": 1.0, "xdot": 0.0, "x_tau": 0.0}

    def test_invalid_bound_is_dropped(self):
        with pytest.warns(UserWarning):
            out = propagate_uncertainty({5: {"1": 0, "x": 1.0, "xdot": -1, "x_tau": 0}},
                                        [1.0, 2.0])
        assert out == {}


def test_lobes_csv(tmp_path, lobes):
    lobes_to_csv(lobes[:2], tmp_path / "l.csv", {"a": lobes[:2], "b": lobes[:2]})
    rows = list(csv.reader(open(tmp_path / "l.csv")))
    assert rows[0] == ["lobe_index", "Omega", "kappa_crit", "omega", "mu", "kappa_lower",
                       "kappa_upper"]
    assert len(rows) == 1 + lobes[0].omega_spindle.size + lobes[1].omega_spindle.size


def test_band_widens_with_damping_spread():
    c = P.coefficients()
    labels = list(c)
    grid = default_frequency_grid(P, 1500, 1.0)
    Om = np.linspace(60, 200, 40)
    bands = []
    for spread in (0.01, 0.03, 0.1):
        q = np.array([[c[t] * (1 - spread) if t == "xdot" else c[t] for t in labels],
                      [c[t] * (1 + spread) if t == "xdot" else c[t] for t in labels]])
        bands.append(band(propagate_uncertainty(percentile_models(q, labels), grid,
                                                range(0, 20)), Om))
    for (lo_a, hi_a), (lo_b, hi_b) in zip(bands, bands[1:]):
        assert np.all(lo_b <= lo_a * (1 + 1e-9)) and np.all(hi_b >= hi_a * (1 - 1e-9))
