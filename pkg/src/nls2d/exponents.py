"""Bootstrap exponent arithmetic for the mean-field scaling range.

Thresholds: beta0(s) = s/(4(s+1)) and beta1(s) = (s+1)/(s+2); seed
eta0 = 2 beta - 1; admissible step constants 0 < c < c_max with
c_max = (s - (2 beta - 1)(s + 2)) / (9 s + 8); per-step optimal cutoff
exponent tau = s (5 eta + 4) / (9 s + 8); final rate supremum
alpha_sup = s / (9 s + 8).

Inputs given as int / Fraction / decimal strings run in exact rational
arithmetic; floats run in floating point.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from math import ceil

Number = float | Fraction


def _coerce(x) -> Number:
    """Exact Fraction for int/Fraction/decimal-string inputs, float otherwise."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    return float(x)


def thresholds(s) -> tuple[Number, Number]:
    """(beta0, beta1) = (s/(4(s+1)), (s+1)/(s+2))."""
    s = _coerce(s)
    if s <= 0:
        raise ValueError(f"trap exponent s must be > 0, got {s}")
    return s / (4 * (s + 1)), (s + 1) / (s + 2)


def step_bound(s, beta) -> tuple[Number, bool]:
    """(c_max, admissible): c_max = (s - (2b-1)(s+2))/(9s+8); a positive
    c exists exactly when beta < beta1(s)."""
    s = _coerce(s)
    beta = _coerce(beta)
    if s <= 0 or beta <= 0:
        raise ValueError("s and beta must be > 0")
    c_max = (s - (2 * beta - 1) * (s + 2)) / (9 * s + 8)
    return c_max, c_max > 0


def optimal_tau(s, eta) -> Number:
    """tau = s (5 eta + 4) / (9 s + 8)."""
    s = _coerce(s)
    eta = _coerce(eta)
    return s * (5 * eta + 4) / (9 * s + 8)


@dataclass(frozen=True)
class ExponentSchedule:
    s: Number
    beta: Number
    eta0: Number
    c: Number | None
    taus: list = dc_field(default_factory=list)
    etas: list = dc_field(default_factory=list)
    verdict: str = "converged"  # converged | diverged

    def __post_init__(self):
        if self.verdict not in ("converged", "diverged"):
            raise ValueError(f"bad verdict {self.verdict!r}")
        if self.verdict == "converged":
            if self.etas and not self.etas[-1] <= 0:
                raise ValueError("converged schedule must end with eta <= 0")
        for a, b in zip(self.etas, self.etas[1:]):
            if self.c is not None and b != a - self.c:
                raise ValueError("etas must decrease by exactly c per step")

    @property
    def steps(self) -> int:
        return max(len(self.etas) - 1, 0)

    @property
    def final_alpha_sup(self) -> Number:
        s = self.s
        return s / (9 * s + 8)


def run_schedule(s, beta, c=None, max_steps: int = 100_000) -> ExponentSchedule:
    """Iterate eta <- eta - c from eta0 = 2 beta - 1 down to eta <= 0.

    Default c = c_max / 2.  Returns a diverged schedule when no positive
    step constant exists (beta >= beta1); beta <= 1/2 converges in zero
    steps since the seed eta0 is already nonpositive.
    """
    s = _coerce(s)
    beta = _coerce(beta)
    if s <= 0 or beta <= 0:
        raise ValueError("s and beta must be > 0")
    eta0 = 2 * beta - 1
    if eta0 <= 0:
        return ExponentSchedule(s=s, beta=beta, eta0=eta0, c=None,
                                taus=[], etas=[eta0], verdict="converged")
    c_max, admissible = step_bound(s, beta)
    if not admissible:
        return ExponentSchedule(s=s, beta=beta, eta0=eta0, c=None,
                                taus=[], etas=[eta0], verdict="diverged")
    if c is None:
        c = c_max / 2
    else:
        c = _coerce(c)
        if not 0 < c < c_max:
            raise ValueError(f"c must lie in (0, {c_max}), got {c}")
    budget = ceil(eta0 / c)
    if budget > max_steps:
        raise RuntimeError(
            f"schedule needs {budget} steps > max_steps = {max_steps}"
        )
    etas = [eta0]
    taus = []
    eta = eta0
    while eta > 0:
        taus.append(optimal_tau(s, eta))
        eta = eta - c
        etas.append(eta)
        # allow one extra step beyond the real-arithmetic budget: with float
        # inputs roundoff can leave eta a few ulp above 0 after the last step
        if len(etas) > budget + 2:
            raise RuntimeError("schedule overran its arithmetic step budget")
    return ExponentSchedule(s=s, beta=beta, eta0=eta0, c=c,
                            taus=taus, etas=etas, verdict="converged")
