import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from illiqcorr.exceptions import InvalidConfig, UnsupportedForGarch
from illiqcorr.simulate import (
    DEFAULT_THINNING_THRESHOLD,
    LITERAL_THINNING_THRESHOLD,
    DgpConfig,
    Garch11,
    generate,
    probability_shift,
    thinned_partial_moment,
    true_curves,
    variance_path,
)


def test_default_threshold_gives_ninety_percent():
    p = 2 * stats.norm.sf(DEFAULT_THINNING_THRESHOLD)
    assert p == pytest.approx(0.9, abs=1e-12)


def test_literal_threshold_zeroes_only_five_percent():
    # P(|N(0,1)| <= 0.063) by quadrature of the density is ~0.050, not 0.10
    dens = lambda x: np.exp(-x * x / 2) / np.sqrt(2 * np.pi)  # noqa: E731
    p, _ = integrate.quad(dens, -LITERAL_THINNING_THRESHOLD, LITERAL_THINNING_THRESHOLD)
    assert p == pytest.approx(0.0502, abs=5e-4)


def test_zero_fraction_a1():
    s = generate(DgpConfig.from_code("a1", n=100_000, seed=1)).observed
    assert abs(s.zero_fraction - 0.55) < 0.01


def test_zero_fraction_garch_median():
    s = generate(DgpConfig.from_code("b", n=100_000, seed=2)).observed
    assert 0.49 < s.zero_fraction < 0.51


def test_garch_variance():
    p = generate(DgpConfig.from_code("b", n=100_000, seed=3))
    assert abs(p.latent.var() / 0.1 - 1) < 0.2
    assert Garch11().unconditional_variance == pytest.approx(0.1)


def test_garch_stationarity_enforced():
    with pytest.raises(InvalidConfig):
        Garch11(alpha=0.3, beta=0.7)


def test_true_prob_c2_at_point_nine():
    cfg = DgpConfig.from_code("c2", n=1000)
    prob, _ = true_curves(cfg)
    assert prob[899] == pytest.approx(0.81, abs=1e-12)


def test_moment_closed_forms():
    c = DEFAULT_THINNING_THRESHOLD
    # E(|eta|; |eta| > c) = 2 phi(c); E(eta^2; |eta| > c) = 2 (c phi(c) + 1 - Phi(c))
    assert thinned_partial_moment(1.0, c) == pytest.approx(2 * stats.norm.pdf(c), rel=1e-10)
    assert thinned_partial_moment(2.0, c) == pytest.approx(2 * (c * stats.norm.pdf(c) + stats.norm.sf(c)), rel=1e-10)


def test_moment_curve_a1_range():
    _, m = true_curves(DgpConfig.from_code("a1", n=50), 1.0)
    assert np.all((m > 0.35) & (m < 0.45))
    assert np.ptp(m) == 0


@pytest.mark.parametrize("delta", [1.0, 2.0, 0.5])
def test_moment_ratio_c(delta):
    n = 1000
    cfg = DgpConfig.from_code("c2", n=n)
    prob, m = true_curves(cfg, delta)
    i9, i2 = 899, 199
    assert m[i9] / m[i2] == pytest.approx(2**delta * prob[i9] / prob[i2], rel=1e-12)


def test_moment_curve_matches_simulation():
    cfg = DgpConfig.from_code("c1", n=400)
    _, m = true_curves(cfg, 1.0)
    acc = np.zeros(400)
    for s in range(400):
        acc += np.abs(generate(cfg.with_(seed=s)).observed.values)
    assert np.max(np.abs(acc / 400 / m - 1)[300:]) < 0.25
    assert abs(acc[300:].mean() / 400 / m[300:].mean() - 1) < 0.02


def test_garch_moment_unsupported():
    cfg = DgpConfig.from_code("b", n=100)
    with pytest.raises(UnsupportedForGarch):
        true_curves(cfg)
    prob, m = true_curves(cfg, moment=False)
    assert m is None and np.all(prob == 0.5)
    assert generate(cfg).true_moment_curve is None


@pytest.mark.parametrize(
    "kw",
    [
        {"volatility": "d"},
        {"probability": "3"},
        {"n": 5},
        {"volatility": "b", "probability": "2"},
        {"median": "mode"},
        {"thinning_threshold": -1.0},
    ],
)
def test_invalid_config(kw):
    with pytest.raises(InvalidConfig):
        DgpConfig(**kw)


def test_codes():
    assert DgpConfig.from_code("b").code == "b1"
    assert DgpConfig.from_code("C2").code == "c2"
    with pytest.raises(InvalidConfig):
        DgpConfig.from_code("abc")


def test_piecewise_functions():
    assert variance_path([0.2, 0.5, 0.9]).tolist() == [1.0, 1.5, 2.0]
    assert probability_shift([0.2, 0.9]).tolist() == [0.2, 0.9]
    assert probability_shift(0.5) == pytest.approx(0.55)


def test_probability_path_monotone():
    u = np.linspace(0.001, 1, 5000)
    assert np.all(np.diff(probability_shift(u)) >= 0)


@given(st.sampled_from(["a1", "a2", "b", "c1", "c2"]), st.integers(0, 2**32 - 1), st.integers(10, 300))
def test_panel_invariants(code, seed, n):
    cfg = DgpConfig.from_code(code, n=n, seed=seed)
    p = generate(cfg)
    assert np.array_equal(p.observed.values, p.latent * p.observed.indicators)
    assert p.true_prob_curve.shape == (n,)
    q = generate(cfg)
    assert np.array_equal(p.latent, q.latent)
    assert np.array_equal(p.observed.indicators, q.observed.indicators)


def test_thinning_uses_same_innovation():
    p = generate(DgpConfig.from_code("a1", n=5000, seed=9))
    kept = p.observed.indicators == 1
    assert np.all(np.abs(p.latent[kept]) > DEFAULT_THINNING_THRESHOLD)
    off = generate(DgpConfig.from_code("a1", n=5000, seed=9, thinning=False))
    assert np.min(np.abs(off.observed.nonzero)) < DEFAULT_THINNING_THRESHOLD


def test_panel_csv(tmp_path):
    p = generate(DgpConfig.from_code("a2", n=20, seed=1))
    p.to_csv(tmp_path / "p.csv")
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "t,latent,observed,a,true_prob"
    assert len(lines) == 21
    row = lines[5].split(",")
    assert float(row[2]) == p.observed.values[4]
