import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from families import ARITH, shipped
from gmeasure.analysis import (
    INCONCLUSIVE,
    SATISFIED,
    VIOLATED,
    LipschitzSpec,
    ThetaTail,
    block_law,
    block_lengths_from_trajectory,
    cff_criterion,
    cftp_concentration_bound,
    empirical_deviation,
    entropy_noise_floor,
    ergodic_rate_check,
    fp_concentration_bound,
    relative_entropy_rate,
    renewal_block_oracle,
    sample_block_lengths,
    uniqueness_criteria,
    wilson_interval,
)
from gmeasure.cftp import forward_fixed_past
from gmeasure.errors import BlockTooLong, InfiniteMeanBlock, InsufficientTail, InvalidParams
from gmeasure.kernels import (
    AutoregressiveKernel,
    BKKernel,
    PFamily,
    RenewalKernel,
    XiFamily,
    two_state_markov,
)
from gmeasure.past import MINUS, Past

KERNELS = shipped()
UNIFORM100 = LipschitzSpec(np.full(100, 0.02))


# ---------------------------------------------------------------- functionals

def test_lipschitz_norms():
    assert UNIFORM100.l1 == pytest.approx(2.0) and UNIFORM100.l2sq == pytest.approx(0.04)
    bm = LipschitzSpec.block_mean(10, 3, 2.0)
    # each block average changes by at most h_range / (n - k + 1) per covering block
    assert bm.delta[0] == pytest.approx(2 / 8) and bm.delta[4] == pytest.approx(3 * 2 / 8)
    assert LipschitzSpec.block_mean(5).l1 == pytest.approx(1.0)
    assert LipschitzSpec.indicator(5, 2).l2sq == 1.0
    with pytest.raises(InvalidParams):
        LipschitzSpec(np.array([0.1, -0.1]))
    with pytest.raises(InvalidParams):
        LipschitzSpec.block_mean(3, 4)


# ---------------------------------------------------------------- bounds

def test_cftp_bound_example():
    # independent evaluation: 4 exp(-2 * 0.25 / (9 * 9 * 0.04)) = 4 exp(-0.5 / 3.24)
    raw = cftp_concentration_bound(2.0, 0.5, UNIFORM100, cap=False)
    assert raw == pytest.approx(4 * math.exp(-0.5 / 3.24), rel=1e-14)
    assert raw == pytest.approx(3.42799, abs=1e-5)
    assert cftp_concentration_bound(2.0, 0.5, UNIFORM100) == 1.0


def test_cftp_bound_limits():
    assert cftp_concentration_bound(2.0, 1e-9, UNIFORM100, cap=False) == pytest.approx(4.0)
    assert cftp_concentration_bound(2.0, 0.5, LipschitzSpec(np.full(100, 1e-6))) < 1e-100
    assert cftp_concentration_bound(2.0, 0.5, LipschitzSpec(np.zeros(3))) == 0.0
    with pytest.raises(InvalidParams):
        cftp_concentration_bound(-1.0, 0.5, UNIFORM100)


@settings(max_examples=200)
@given(st.floats(0, 50), st.floats(0.01, 2), st.floats(1e-3, 0.1), st.floats(1.01, 3))
def test_cftp_bound_monotone(mean, eps, scale, grow):
    spec = LipschitzSpec(np.full(50, scale))
    wider = LipschitzSpec(np.full(50, scale * grow))
    b = cftp_concentration_bound(mean, eps, spec, cap=False)
    assert cftp_concentration_bound(mean, eps * grow, spec, cap=False) <= b
    assert cftp_concentration_bound(mean * grow + 0.1, eps, spec, cap=False) >= b
    assert cftp_concentration_bound(mean, eps, wider, cap=False) >= b


def test_fp_bound_reduces_to_cftp_bound():
    thetas = np.random.default_rng(0).geometric(0.4, size=5000) - 1
    tail = ThetaTail.from_samples(thetas)
    fp = fp_concentration_bound(tail, math.inf, 0, 0.3, UNIFORM100, cap=False)
    assert fp.premise_ok is True
    assert fp.bound == cftp_concentration_bound(tail.mean, 0.3, UNIFORM100, cap=False)
    # the finite partial sum over the full support is the same mean
    full = fp_concentration_bound(tail, len(tail.survival), 0, 0.3, UNIFORM100, cap=False)
    assert full.bound == pytest.approx(fp.bound, rel=1e-12)


def test_fp_bound_degenerate_and_factor():
    zero = ThetaTail(np.zeros(0), 0.0, True)
    b = fp_concentration_bound(zero, 0, 0, 0.5, UNIFORM100, cap=False)
    assert b.bound == pytest.approx(4 * math.exp(-2 * 0.25 / (9 * 0.04)))
    t = ThetaTail(np.array([1.0, 0.5, 0.25]))
    res = fp_concentration_bound(t, 3, 1, 0.5, UNIFORM100, cap=False)
    assert res.factor**2 == pytest.approx(14.0625)
    assert res.premise_ok is None  # P(theta >= 4) is unknown
    with pytest.raises(InsufficientTail):
        fp_concentration_bound(t, 5, 0, 0.5, UNIFORM100)


def test_theta_tail_validation():
    with pytest.raises(InvalidParams):
        ThetaTail(np.array([0.5, 0.7]))
    with pytest.raises(InvalidParams):
        ThetaTail.from_samples([1, -1])


# ---------------------------------------------------------------- empirical checks

def test_wilson_interval_values():
    lo, hi = wilson_interval(5, 100)
    assert lo == pytest.approx(0.02154, abs=1e-4) and hi == pytest.approx(0.11175, abs=1e-4)


def test_deviation_identical_runs():
    est = empirical_deviation(np.full(200, 0.3), 0.01)
    assert est.fraction == 0.0 and est.ci_low == 0.0


def test_deviation_gaussian_calibration():
    f = np.random.default_rng(1).standard_normal(200_000)
    est = empirical_deviation(f, 1.96 * f.std())
    assert abs(est.fraction - 0.05) < 0.003
    assert est.ci_low <= 0.05 <= est.ci_high
    with pytest.raises(InvalidParams):
        empirical_deviation(f[:50], 1.0)


def test_ergodic_constant_and_hoeffding():
    rng = np.random.default_rng(2)
    bits = rng.integers(0, 2, size=(500, 1000))
    const = ergodic_rate_check(bits, lambda b: np.ones(b.shape[:-1]), 1, 0.1)
    assert np.all(const.frequencies == 0)
    rate = ergodic_rate_check(bits, lambda b: b[..., 0].astype(float), 1, 0.1, expected=0.5,
                              ns=[10, 30, 100, 1000])
    assert rate.frequencies[-1] <= 2 * math.exp(-2 * 1000 * 0.01)
    assert rate.slope is not None and rate.slope < 0
    with pytest.raises(InvalidParams):
        ergodic_rate_check(bits[:, :1], lambda b: b[..., 0], 2, 0.1)


def test_ergodic_two_block_frequency():
    from gmeasure.cftp import sample_windows
    from gmeasure.decomposition import GreedyDecomposition

    k = two_state_markov(0.7, 0.4)
    wins, _, _ = sample_windows(GreedyDecomposition(k, K=1), 400, 300, seed=3)
    target = (4 / 7) * 0.7  # stationary P(X_j = 2, X_{j+1} = 2)
    pair = lambda b: ((b[..., 0] == 2) & (b[..., 1] == 2)).astype(float)
    rate = ergodic_rate_check(wins, pair, 2, 0.05, expected=target, ns=[10, 100, 400])
    assert rate.frequencies[-1] < rate.frequencies[0]
    # unbiased: every window is an exact stationary draw
    means = pair(np.stack([wins[:, :-1], wins[:, 1:]], axis=-1)).mean(axis=1)
    assert abs(means.mean() - target) < 4 * means.std() / math.sqrt(means.size)


# ---------------------------------------------------------------- entropy rate

def test_entropy_rate_identity_and_kl():
    x = np.random.default_rng(4).integers(1, 3, size=(50, 200))
    assert relative_entropy_rate(x, x, 3) == 0.0
    X = np.array([[1, 2] * 500_000])
    Y = np.array([[1, 1, 1, 2] * 250_000])
    kl = 0.5 * math.log(2) + 0.5 * math.log(2 / 3)
    assert kl == pytest.approx(0.1438, abs=1e-4)
    assert relative_entropy_rate(X, Y, 0) == pytest.approx(kl, abs=1e-5)
    with pytest.raises(BlockTooLong):
        relative_entropy_rate(x, x, 13)


def test_entropy_noise_floor_calibration():
    rng = np.random.default_rng(5)
    n, N = 2, 4000
    ests = [relative_entropy_rate(rng.integers(1, 3, size=(N, n + 1)), rng.integers(1, 3, size=(N, n + 1)), n)
            for _ in range(200)]
    floor = entropy_noise_floor(N, N, n)
    assert np.mean(ests) == pytest.approx(floor, rel=0.2)


# ---------------------------------------------------------------- uniqueness criteria

def test_johansson_oberg_power_law():
    rep = uniqueness_criteria(AutoregressiveKernel(XiFamily("power", (1.0, 2.0))))
    assert rep["johansson_oberg"]["verdict"] == SATISFIED
    slow = uniqueness_criteria(AutoregressiveKernel(XiFamily("power", (1.0, 1.4))))
    assert slow["johansson_oberg"]["verdict"] == INCONCLUSIVE


def test_fernandez_maillard_geometric():
    k = AutoregressiveKernel(XiFamily("geometric", (0.8, 0.5)))
    assert k.sensitivity * k.xi.total() == pytest.approx(0.8)
    rep = uniqueness_criteria(k)
    assert rep["fernandez_maillard"]["verdict"] == SATISFIED
    assert rep["fernandez_maillard"]["half_osc_sum"] == pytest.approx(0.8)


def test_cff_slow_variation_is_violated():
    k = RenewalKernel(PFamily("capped_power", (1.0, 1.0, 0.0, 0.25)))
    assert k.var_bound(16) == pytest.approx(0.5)
    rep = cff_criterion(k)
    assert rep["verdict"] == VIOLATED
    sums = [float(v) for v in rep["partial_sums"].values()]
    assert sums[-1] - sums[-2] < 1e-6  # the partial sums have stopped growing


def test_cff_other_verdicts():
    assert cff_criterion(KERNELS["bk_unique"])["verdict"] == SATISFIED
    assert cff_criterion(KERNELS["markov"])["verdict"] == SATISFIED
    assert cff_criterion(KERNELS["renewal"])["verdict"] == VIOLATED
    assert cff_criterion(KERNELS["ar_power"])["verdict"] == SATISFIED
    assert cff_criterion(KERNELS["bk_fast"])["verdict"] == INCONCLUSIVE


def test_criteria_report_shape():
    rep = uniqueness_criteria(KERNELS["bk_unique"])
    assert set(rep) >= {"johansson_oberg", "fernandez_maillard", "cff", "strongly_non_null"}
    for key in ("johansson_oberg", "fernandez_maillard", "cff"):
        assert rep[key]["verdict"] in (SATISFIED, VIOLATED, INCONCLUSIVE)
    # renewal kernels are not strongly non-null, so square-summability alone decides nothing
    assert uniqueness_criteria(KERNELS["renewal"])["johansson_oberg"]["verdict"] == INCONCLUSIVE


# ---------------------------------------------------------------- renewal oracle

def test_block_law_geometric():
    law = block_law(PFamily("constant", (0.5,)))
    assert law.mean == pytest.approx(2.0, abs=1e-12)
    assert np.allclose(law.pmf(10), 0.5 ** np.arange(1, 11))


def test_block_law_capped_harmonic_has_finite_mean():
    law = block_law(PFamily("capped_harmonic", (0.5, 2.0, 2.0)))
    assert math.isfinite(law.mean) and law.mean == pytest.approx(2.25, abs=1e-4)
    assert law.tail_exponent == pytest.approx(2.0, abs=0.01)


def test_block_law_infinite_mean():
    with pytest.raises(InfiniteMeanBlock):
        block_law(PFamily("capped_harmonic", (0.5, 1.0, 2.0)))


def test_block_histogram_matches_law():
    p = PFamily("capped_harmonic", (0.5, 2.0, 2.0))
    law = block_law(p)
    L = sample_block_lengths(p, 100_000, seed=6, law=law)
    for k in range(1, 9):
        q = float(law.pmf(k)[-1])
        freq = np.mean(L == k)
        assert abs(freq - q) <= 3 * math.sqrt(q * (1 - q) / L.size)


def test_oracle_trajectory_layout():
    p = PFamily("constant", (0.5,))
    tr = renewal_block_oracle(p, 5000, seed=7, stationary=False)
    assert tr.symbols[0] == MINUS
    assert np.array_equal(np.sort(block_lengths_from_trajectory(tr.symbols, False)[:-1]),
                          np.sort(tr.block_lengths[:-1]))
    st_tr = renewal_block_oracle(p, 5000, seed=7)
    assert set(np.unique(st_tr.symbols)) <= {1, 2}
    with pytest.raises(InvalidParams):
        renewal_block_oracle(p, 0, 1)


def test_stationary_start_frequency():
    # the stationary chain has P(x_0 = -1) = 1 / E[block length]
    p = PFamily("capped_harmonic", (0.5, 2.0, 2.0))
    law = block_law(p)
    first = np.array([renewal_block_oracle(p, 1, seed=s, law=law).symbols[0] for s in range(5_000)])
    q = 1 / law.mean
    assert abs(np.mean(first == MINUS) - q) <= 4 * math.sqrt(q * (1 - q) / first.size)


def test_forward_renewal_matches_oracle_for_short_blocks():
    p = PFamily("capped_harmonic", (0.5, 2.0, 2.0))
    k = RenewalKernel(p)
    traj = forward_fixed_past(k, Past((MINUS,), MINUS), 300_000, seed=8)
    fw = block_lengths_from_trajectory(traj)[:-1]
    law = block_law(p)
    cells = np.array([np.sum(fw == j) for j in range(1, 9)] + [np.sum(fw > 8)])
    probs = np.append(law.pmf(8), law.survival[8])
    assert stats.chisquare(cells, probs * cells.sum()).pvalue > 1e-3


def test_smoothing_floor_scale():
    from gmeasure.analysis import smoothing_bias_floor

    assert smoothing_bias_floor(100, 100, 0) == pytest.approx(2 * 0.5 * 2 * 0.02)
    # about twice the chi-square mean at alpha = 1/2 for many cells
    assert smoothing_bias_floor(10**4, 10**4, 9) / entropy_noise_floor(10**4, 10**4, 9) == pytest.approx(2, rel=1e-3)
