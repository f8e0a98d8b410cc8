from fractions import Fraction

import pytest

from nls2d.exponents import optimal_tau, run_schedule, step_bound, thresholds


def test_thresholds_exact_s2():
    b0, b1 = thresholds(2)
    assert b0 == Fraction(1, 6)
    assert b1 == Fraction(3, 4)
    assert isinstance(b0, Fraction)


@pytest.mark.parametrize("s", [Fraction(1, 2), 1, 2, 8])
def test_thresholds_straddle_half(s):
    b0, b1 = thresholds(s)
    assert b0 < Fraction(1, 2) < b1


def test_thresholds_large_s_limit():
    _, b1 = thresholds(10**6)
    assert abs(float(b1) - 1.0) < 1e-5


def test_thresholds_reject_nonpositive():
    with pytest.raises(ValueError):
        thresholds(0)
    with pytest.raises(ValueError):
        thresholds(-1)


def test_step_bound_values():
    c_max, admissible = step_bound(2, Fraction(7, 10))
    assert c_max == Fraction(1, 65)  # (2 - 0.4 * 4)/26 = 0.4/26
    assert admissible


@pytest.mark.parametrize("s", [1, 2, 3])
def test_step_bound_vanishes_at_beta1(s):
    _, b1 = thresholds(s)
    c_max, admissible = step_bound(s, b1)
    assert c_max == 0
    assert not admissible


def test_step_bound_beta_half():
    for s in (Fraction(1, 2), 1, 2, 5):
        c_max, admissible = step_bound(s, Fraction(1, 2))
        assert c_max == Fraction(s, 9 * s + 8)
        assert admissible


def test_optimal_tau():
    assert optimal_tau(2, Fraction(2, 5)) == Fraction(12, 26)
    assert optimal_tau(3, Fraction(-4, 5)) == 0


def test_optimal_tau_balances_exponents():
    # tau (2 + 2/s) - 1 = (5 eta - tau)/4 at the optimizer
    s, eta = Fraction(2), Fraction(3, 10)
    tau = optimal_tau(s, eta)
    assert tau * (2 + 2 / s) - 1 == (5 * eta - tau) / 4


def test_run_schedule_converges():
    sched = run_schedule(2, Fraction(7, 10))
    assert sched.verdict == "converged"
    assert sched.eta0 == Fraction(2, 5)
    # default c = c_max / 2 = 1/130; eta0 / c = 52 steps
    assert sched.steps == 52
    assert sched.etas[-1] <= 0
    # arithmetic progression, exactly
    diffs = {sched.etas[k] - sched.etas[k + 1] for k in range(len(sched.etas) - 1)}
    assert diffs == {sched.c}


def test_run_schedule_diverges_at_beta1():
    sched = run_schedule(2, Fraction(3, 4))
    assert sched.verdict == "diverged"


def test_run_schedule_trivial_below_half():
    sched = run_schedule(2, Fraction(2, 5))
    assert sched.verdict == "converged"
    assert sched.steps == 0


def test_run_schedule_exact_rational_path():
    sched = run_schedule(Fraction(3), Fraction(7, 10), c=Fraction(1, 100))
    assert all(isinstance(e, Fraction) for e in sched.etas)
    assert all(isinstance(t, Fraction) for t in sched.taus)


def test_final_alpha_sup():
    sched = run_schedule(2, Fraction(7, 10))
    assert sched.final_alpha_sup == Fraction(2, 26)


def test_verdict_matches_beta1_on_grid():
    import numpy as np

    for s in np.linspace(0.2, 8.0, 10):
        _, b1 = thresholds(float(s))
        for beta in np.linspace(0.05, 0.95, 10):
            sched = run_schedule(float(s), float(beta))
            assert (sched.verdict == "converged") == (beta < float(b1))


def test_decimal_strings_are_exact():
    sched = run_schedule("2", "0.7")
    assert sched.eta0 == Fraction(2, 5)
    assert isinstance(sched.c, Fraction)
