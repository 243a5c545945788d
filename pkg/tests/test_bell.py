"""Count tables, CHSH statistics, visibility fits, and Poisson simulation."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from fourphoton import bell

ALPHAS = (0.0, math.pi / 2)
BETAS = (math.pi / 4, 3 * math.pi / 4)

# four-fold coincidences from the reference sixteen-setting measurement
REFERENCE_COUNTS = {
    (0.0, math.pi / 4): 77,
    (0.0, 5 * math.pi / 4): 295,
    (0.0, 3 * math.pi / 4): 271,
    (0.0, 7 * math.pi / 4): 63,
    (math.pi, math.pi / 4): 371,
    (math.pi, 5 * math.pi / 4): 58,
    (math.pi, 3 * math.pi / 4): 107,
    (math.pi, 7 * math.pi / 4): 364,
    (math.pi / 2, math.pi / 4): 331,
    (math.pi / 2, 5 * math.pi / 4): 139,
    (math.pi / 2, 3 * math.pi / 4): 333,
    (math.pi / 2, 7 * math.pi / 4): 54,
    (3 * math.pi / 2, math.pi / 4): 129,
    (3 * math.pi / 2, 5 * math.pi / 4): 327,
    (3 * math.pi / 2, 3 * math.pi / 4): 97,
    (3 * math.pi / 2, 7 * math.pi / 4): 296,
}


def reference_table() -> bell.CountTable:
    table = bell.CountTable()
    for (alpha, beta), counts in REFERENCE_COUNTS.items():
        table.add(alpha, beta, counts)
    return table


def test_angle_key_reduces_modulo_two_pi():
    assert bell.angle_key(0.0) == bell.angle_key(2 * math.pi)
    assert bell.angle_key(-math.pi / 2) == bell.angle_key(3 * math.pi / 2)
    assert bell.angle_key(5 * math.pi) == bell.angle_key(math.pi)


def test_count_table_round_trip():
    table = reference_table()
    parsed = bell.CountTable.from_csv(table.to_csv())
    assert parsed.entries == table.entries
    assert parsed.duration == table.duration


def test_count_table_validation():
    table = bell.CountTable()
    with pytest.raises(ValueError):
        table.add(0.0, 0.0, -1)
    with pytest.raises(KeyError):
        table.get(0.3, 0.4)
    with pytest.raises(ValueError):
        bell.CountTable.from_csv("alpha,beta\n0,0\n")
    with pytest.raises(ValueError):
        bell.CountTable.from_csv("alpha,beta,counts,duration_s\n0,0,notanint,60\n")


def test_joint_probabilities_reference_point():
    table = reference_table()
    probs = bell.joint_probabilities(table, 0.0, math.pi / 4)
    total = 77 + 371 + 295 + 58
    assert probs[(1, 1)] == pytest.approx(77 / total)
    assert probs[(-1, 1)] == pytest.approx(371 / total)
    assert probs[(1, -1)] == pytest.approx(295 / total)
    assert probs[(-1, -1)] == pytest.approx(58 / total)
    assert sum(probs.values()) == pytest.approx(1.0, abs=1e-15)


def test_joint_probabilities_missing_and_empty():
    table = bell.CountTable()
    with pytest.raises(KeyError):
        bell.joint_probabilities(table, 0.0, 0.0)
    for da in (0.0, math.pi):
        for db in (0.0, math.pi):
            table.add(da, db, 0)
    with pytest.raises(ZeroDivisionError):
        bell.joint_probabilities(table, 0.0, 0.0)


def test_correlation_exact_fractions():
    table = reference_table()
    expected = {
        (0.0, math.pi / 4): Fraction(77 - 371 - 295 + 58, 801),
        (0.0, 3 * math.pi / 4): Fraction(271 - 107 - 63 + 364, 805),
        (math.pi / 2, math.pi / 4): Fraction(331 - 129 - 139 + 327, 926),
        (math.pi / 2, 3 * math.pi / 4): Fraction(333 - 97 - 54 + 296, 780),
    }
    for (alpha, beta), frac in expected.items():
        result = bell.correlation(table, alpha, beta)
        assert result.E == pytest.approx(float(frac), abs=1e-15)
        assert abs(result.E) <= 1.0
        assert result.sigma_E > 0


def test_correlation_sigma_oracle():
    # independent delta-method computation for one correlation term
    table = reference_table()
    counts = (77, 371, 295, 58)
    total = sum(counts)
    diff = counts[0] - counts[1] - counts[2] + counts[3]
    var = sum(
        ((sign * total - diff) / total**2) ** 2 * n
        for n, sign in zip(counts, (1, -1, -1, 1))
    )
    result = bell.correlation(table, 0.0, math.pi / 4)
    assert result.sigma_E == pytest.approx(math.sqrt(var), rel=1e-12)


def test_chsh_reference_values():
    result = bell.chsh(reference_table(), ALPHAS, BETAS)
    assert result.S == pytest.approx(2.2745, abs=5e-4)
    assert result.sigma_S == pytest.approx(0.0567, abs=2e-3)
    assert result.violates
    assert result.violation_sigmas > 4.0
    assert result.S_best_signs >= result.S
    # S recomputable from the stored terms
    es = [result.terms[(a, b)].E for a in ALPHAS for b in BETAS]
    assert result.S == pytest.approx(abs(-es[0] + es[1] + es[2] + es[3]), abs=1e-15)


def test_chsh_flat_counts_no_violation():
    table = bell.CountTable()
    for alpha in (0.0, math.pi / 2, math.pi, 3 * math.pi / 2):
        for beta in (math.pi / 4, 3 * math.pi / 4, 5 * math.pi / 4, 7 * math.pi / 4):
            table.add(alpha, beta, 100)
    result = bell.chsh(table, ALPHAS, BETAS)
    assert result.S == pytest.approx(0.0, abs=1e-12)
    assert not result.violates


def test_visibility_fit_recovers_noiseless_fringe():
    betas = np.linspace(0, 2 * math.pi, 16, endpoint=False)
    sweep = [(float(b), 200 * (1 + 0.8 * math.cos(b + 0.4))) for b in betas]
    result = bell.visibility(sweep)
    assert result.method == "fit"
    assert result.V == pytest.approx(0.8, abs=1e-9)
    assert result.offset == pytest.approx(200, rel=1e-9)
    assert result.sigma_V > 0


def test_visibility_extrema_method():
    betas = np.linspace(0, 2 * math.pi, 16, endpoint=False)
    sweep = [(float(b), 200 * (1 + 0.5 * math.cos(b))) for b in betas]
    result = bell.visibility(sweep, method="extrema")
    assert result.method == "extrema"
    assert result.V == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ValueError):
        bell.visibility(sweep, method="bogus")


def test_visibility_rejects_bad_sweeps():
    with pytest.raises(bell.FitError):
        bell.visibility([(0.0, 1.0), (1.0, 2.0)])
    # a sweep confined to a third of the period leaves the circle uncovered
    betas = np.linspace(0, 2 * math.pi / 3, 12)
    with pytest.raises(bell.FitError):
        bell.visibility([(float(b), 1.0) for b in betas])


def test_visibility_accepts_multi_period_sweep_reduced_modulo_two_pi():
    betas = np.linspace(0, 4 * math.pi, 32, endpoint=False) % (2 * math.pi)
    sweep = [(float(b), 100 * (1 + 0.7 * math.cos(b))) for b in betas]
    assert bell.visibility(sweep).V == pytest.approx(0.7, abs=1e-9)


def test_s_from_visibility_algebra():
    s, sigma = bell.s_from_visibility(0.828, 0.018)
    assert s == pytest.approx(2.342, abs=5e-4)
    assert sigma == pytest.approx(0.051, abs=5e-4)
    assert bell.s_from_visibility(1.0, 0.0)[0] == pytest.approx(2 * math.sqrt(2))
    with pytest.raises(ValueError):
        bell.s_from_visibility(1.2, 0.0)


def test_noise_model_validation():
    with pytest.raises(ValueError):
        bell.NoiseModel(1.5, 1.0)
    with pytest.raises(ValueError):
        bell.NoiseModel(0.5, -1.0)


def test_fringe_mean_formula():
    noise = bell.NoiseModel(0.78, 6.5)
    assert bell.fringe_mean(noise, 0.0, 0.0, 60.0) == pytest.approx(
        0.5 * 6.5 * (1 + 0.78) * 60.0
    )
    assert bell.fringe_mean(noise, 0.0, math.pi, 60.0) == pytest.approx(
        0.5 * 6.5 * (1 - 0.78) * 60.0
    )


def test_simulate_counts_reproducible_and_seed_sensitive():
    grid = bell.chsh_settings_grid(ALPHAS, BETAS)
    noise = bell.NoiseModel(0.78, 6.5)
    first = bell.simulate_counts(grid, noise, 60.0, seed=11)
    second = bell.simulate_counts(grid, noise, 60.0, seed=11)
    other = bell.simulate_counts(grid, noise, 60.0, seed=12)
    assert first.entries == second.entries
    assert first.entries != other.entries
    with pytest.raises(ValueError):
        bell.simulate_counts(grid, noise, 0.0, seed=1)


def test_simulate_counts_matches_mean_at_large_duration():
    noise = bell.NoiseModel(0.5, 10.0)
    table = bell.simulate_counts([(0.0, 0.0)], noise, 1e5, seed=3)
    mean = bell.fringe_mean(noise, 0.0, 0.0, 1e5)
    assert table.get(0.0, 0.0) == pytest.approx(mean, rel=5e-3)


def test_simulate_counts_custom_rate_fn():
    table = bell.simulate_counts(
        [(0.0, 0.0)], bell.NoiseModel(0.0, 0.0), 10.0, seed=5,
        rate_fn=lambda a, b: 100.0,
    )
    assert table.get(0.0, 0.0) == pytest.approx(1000, rel=0.2)


def test_chsh_settings_grid_has_sixteen_unique_pairs():
    grid = bell.chsh_settings_grid(ALPHAS, BETAS)
    assert len(grid) == 16
    keys = {(bell.angle_key(a), bell.angle_key(b)) for a, b in grid}
    assert len(keys) == 16


def test_lhv_bound_is_two():
    assert bell.lhv_bound_check() == 2.0


def test_reports_contain_key_quantities():
    result = bell.chsh(reference_table(), ALPHAS, BETAS)
    report = bell.chsh_report(result)
    assert "S = 2.2745" in report
    assert "standard deviations" in report
    csv_text = bell.chsh_csv(result)
    assert csv_text.splitlines()[0] == "term,E,sigma_E"
    assert "S,sigma_S,violation_sigmas" in csv_text


@given(
    counts=st.tuples(*[st.integers(min_value=0, max_value=2000)] * 4).filter(
        lambda c: sum(c) > 0
    )
)
@hsettings(max_examples=50, deadline=None)
def test_correlation_consistent_with_probabilities(counts):
    table = bell.CountTable()
    for (da, db), n in zip(((0, 0), (math.pi, 0), (0, math.pi), (math.pi, math.pi)), counts):
        table.add(da, db, n)
    probs = bell.joint_probabilities(table, 0.0, 0.0)
    e_from_probs = (
        probs[(1, 1)] - probs[(-1, 1)] - probs[(1, -1)] + probs[(-1, -1)]
    )
    result = bell.correlation(table, 0.0, 0.0)
    assert result.E == pytest.approx(e_from_probs, abs=1e-12)
    assert abs(result.E) <= 1.0
