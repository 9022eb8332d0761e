import math

import numpy as np
import pytest

from sinodiff.diffusion import linear_schedule, q_sample

# Independently derived terminal coefficient for the default schedule
# (see tests/oracles/schedule_product_oracle.py: log1p-space product).
ORACLE_ALPHA_BAR_T = 4.035829765375687e-05


def test_default_schedule_endpoints():
    s = linear_schedule()
    assert s.T == 1000
    assert s.beta[1] == 1e-4
    assert s.beta[1000] == 0.02
    assert s.alpha_bar[0] == 1.0


def test_alpha_bar_strictly_decreasing():
    s = linear_schedule()
    assert (np.diff(s.alpha_bar) < 0).all()


def test_terminal_alpha_bar_matches_oracle():
    s = linear_schedule()
    assert s.alpha_bar[1000] == pytest.approx(ORACLE_ALPHA_BAR_T, rel=1e-12)
    assert s.alpha_bar[1000] < 1e-4


def test_single_step_schedule():
    s = linear_schedule(T=1, beta_start=1e-4, beta_end=0.02)
    assert s.beta[1] == 1e-4
    assert s.alpha_bar[1] == 1.0 - 1e-4


def test_schedule_rejects_bad_range():
    with pytest.raises(ValueError):
        linear_schedule(T=10, beta_start=0.0, beta_end=0.02)
    with pytest.raises(ValueError):
        linear_schedule(T=10, beta_start=0.02, beta_end=0.01)
    with pytest.raises(ValueError):
        linear_schedule(T=10, beta_start=0.5, beta_end=1.0)
    with pytest.raises(ValueError):
        linear_schedule(T=0)


def test_q_sample_identity_at_t0(rng):
    s = linear_schedule()
    x0 = rng.standard_normal((7, 5))
    out = q_sample(x0, 0, np.zeros_like(x0), s)
    assert np.array_equal(out.z_t, x0)


def test_q_sample_zero_noise(rng):
    s = linear_schedule()
    x0 = rng.standard_normal((4, 4))
    t = 400
    out = q_sample(x0, t, np.zeros_like(x0), s)
    assert np.allclose(out.z_t, np.sqrt(s.alpha_bar[t]) * x0)
    assert out.t == t


def test_q_sample_shape_mismatch():
    s = linear_schedule()
    with pytest.raises(ValueError):
        q_sample(np.zeros((3, 3)), 5, np.zeros((3, 4)), s)


def test_q_sample_t_out_of_range():
    s = linear_schedule()
    with pytest.raises(ValueError):
        q_sample(np.zeros(3), 1001, np.zeros(3), s)
    with pytest.raises(ValueError):
        q_sample(np.zeros(3), -1, np.zeros(3), s)


def test_q_sample_monte_carlo_moments():
    # 1e5 scalar draws at a fixed t: mean within 3 sigma of sqrt(ab)*x0,
    # variance within 5% of (1 - ab)
    s = linear_schedule()
    n = 100_000
    t = 600
    x0 = 0.7
    noise = np.random.default_rng(2024).standard_normal(n)
    z = q_sample(np.full(n, x0), t, noise, s).z_t
    ab = s.alpha_bar[t]
    sigma = math.sqrt(1.0 - ab)
    assert abs(z.mean() - math.sqrt(ab) * x0) <= 3.0 * sigma / math.sqrt(n)
    assert abs(z.var() - (1.0 - ab)) <= 0.05 * (1.0 - ab)


def test_q_sample_keeps_noise():
    s = linear_schedule()
    noise = np.random.default_rng(0).standard_normal((3, 3))
    out = q_sample(np.zeros((3, 3)), 10, noise, s)
    assert out.eps is noise or np.array_equal(out.eps, noise)
