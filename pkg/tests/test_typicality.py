from fractions import Fraction

import numpy as np
import pytest

from pwexpand.density import stationary_density, ulam_matrix
from pwexpand.family import instantiate, xi
from pwexpand.typicality import (OrbitStatistics, birkhoff_F, empirical_cdf,
                                 grid_floats, ks_distance, limsup_bound_check,
                                 orbit_points, orbit_statistics, sweep)


def test_golden_grid_is_inside_and_ordered(lambda4):
    g = grid_floats(lambda4, 50)
    assert np.all(np.diff(g) > 0)
    assert 0 < g[0] < 0.1 / 50 and g[-1] < 0.1


def test_ks_distance_of_exact_histogram(doubling):
    d = stationary_density(ulam_matrix(doubling, 64))
    assert ks_distance(np.full(64, 10), d) == pytest.approx(0.0, abs=1e-12)
    counts = np.zeros(64)
    counts[:32] = 1
    assert ks_distance(counts, d) == pytest.approx(0.5)
    assert empirical_cdf([0, 0])[-1] == 0
    with pytest.raises(ValueError):
        ks_distance(np.ones(10), d)


def test_float_and_exact_orbits_agree(lambda4):
    a = 0.0371
    xs = orbit_points(lambda4, a, 20)
    xe = orbit_points(lambda4, Fraction("0.0371"), 20, engine="exact")
    ref = [xi(lambda4, a, j) for j in range(1, 21)]
    assert np.allclose(xs[:15], ref[:15], atol=1e-6)
    assert np.allclose(xe[:15], ref[:15], atol=1e-6)
    with pytest.raises(ValueError):
        orbit_points(lambda4, a, 5, engine="quantum")


def test_doubling_needs_the_exact_engine(doubling_family):
    xs = orbit_points(doubling_family, 0.1234, 200)
    assert len(xs) < 200  # float bit shifts reach 0 after about 53 steps
    # a float parameter is a dyadic rational: its exact orbit dies too
    assert len(orbit_points(doubling_family, 0.1234, 200, engine="exact")) < 200
    v, cut = birkhoff_F(doubling_family, Fraction("0.1234"), (0.0, 1.0), 5000,
                        return_flag=True)
    assert not cut and v == pytest.approx(0.5, abs=0.03)


def test_small_sweeps(lambda4, doubling_family):
    rep = sweep(lambda4, 6, n=20_000, bins=256, threshold=0.05)
    assert len(rep.rows) == 6 and rep.fraction_below == 1.0
    assert rep.to_csv().splitlines()[0] == "a,ks,min_density,max_density,flags"
    s = rep.summary()
    assert s["parameters"] == 6 and s["burn_in"] == 141
    rep = sweep(doubling_family, 3, n=5000, bins=128, threshold=0.05)
    assert all("exact" in r["flags"] for r in rep.rows)
    assert rep.fraction_below == 1.0
    assert '"fraction_below": 1.0' in rep.to_json()


def test_orbit_statistics_and_limsup(lambda4):
    st = orbit_statistics(lambda4, 0.0371, 20_000, bins=256)
    assert isinstance(st, OrbitStatistics)
    assert st.kept == 20_000 and st.mass == 1.0 and st.ks < 0.05
    assert st.frequency(-1, 1) == pytest.approx(1.0)
    out = limsup_bound_check(lambda4, 0.0371, [(-0.5, 0.0), (0.1, 0.3)], [1000, 10_000])
    assert out["pass"] and len(out["records"]) == 4


def test_instantiated_density_matches_sweep_reference(lambda4):
    rep = sweep(lambda4, [0.05], n=2000, bins=128, check=False)
    d = stationary_density(ulam_matrix(instantiate(lambda4, 0.05), 128))
    assert rep.rows[0]["min_density"] == pytest.approx(d.bounds()[0])


def test_periodic_marked_point_is_atypical(lambda4):
    # X(1/20) = 1/20 -> 1/5 -> 4/5 -> 1/5: a period-2 orbit
    xs = orbit_points(lambda4, Fraction(1, 20), 50, engine="exact")
    assert np.allclose(xs[1::2], 0.8) and np.allclose(xs[2::2], 0.2)
    st = orbit_statistics(lambda4, Fraction(1, 20), 5000, bins=256, engine="exact")
    assert st.ks > 0.5
