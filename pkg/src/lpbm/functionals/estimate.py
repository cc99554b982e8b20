from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Estimate:
    """A functional value with its Monte Carlo standard error.

    ``approximate`` marks values computed on a circumscribed grid polytope
    (or by grid quadrature) instead of an exact route; such values are
    biased upward by at most the grid error.

    ``influence`` holds the centred, linearized per-sample contributions
    (value - mean) of a Monte Carlo estimate.  Estimates drawn from the same
    sample stream can then be combined with their covariance taken into
    account (see ``combined_stderr``).
    """

    value: float
    stderr: float = 0.0
    approximate: bool = False
    influence: np.ndarray | None = field(default=None, repr=False, compare=False)

    def power(self, e: float) -> Estimate:
        """value**e with the delta-method standard error."""
        v = self.value ** e
        if not self.stderr and self.influence is None:
            return Estimate(float(v), 0.0, self.approximate)
        d = e * self.value ** (e - 1.0)
        infl = None if self.influence is None else d * self.influence
        return Estimate(float(v), float(abs(d) * self.stderr), self.approximate, infl)

    def scaled(self, c: float) -> Estimate:
        infl = None if self.influence is None else c * self.influence
        return Estimate(c * self.value, abs(c) * self.stderr, self.approximate, infl)

    def __float__(self):
        return float(self.value)


def mc_mean(samples: np.ndarray) -> tuple[float, float]:
    """Sample mean and its standard error."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        return float(x.mean()), 0.0
    return float(x.mean()), float(x.std(ddof=1) / np.sqrt(x.size))


def mc_estimate(samples: np.ndarray, g=None, dg=None, approximate: bool = False) -> Estimate:
    """Estimate of g(E[X]) from samples of X, with delta-method error.

    Without ``g`` this is the plain sample mean.
    """
    x = np.asarray(samples, dtype=float)
    m, se = mc_mean(x)
    if g is None:
        return Estimate(m, se, approximate, x - m)
    d = float(dg(m))
    return Estimate(float(g(m)), abs(d) * se, approximate, d * (x - m))


def combined_stderr(coeffs, estimates) -> float:
    """Standard error of sum_k coeffs[k] * estimates[k].value.

    Estimates with matching influence arrays are treated as paired samples
    (their covariance enters); the rest are combined as independent.
    """
    paired = None
    indep = 0.0
    for c, e in zip(coeffs, estimates):
        if e.influence is not None and (paired is None or len(paired) == len(e.influence)):
            paired = c * e.influence if paired is None else paired + c * e.influence
        else:
            indep += (c * e.stderr) ** 2
    if paired is not None and len(paired) > 1:
        indep += float(paired.var(ddof=1) / len(paired))
    return float(np.sqrt(indep))
