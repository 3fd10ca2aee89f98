"""Correlation decay, boundary-law identifiability, and the one-dimensional
non-Gibbs mixture.

Correlations between events in two distant sub-volumes factor through powers
of the fuzzy chain along the connecting path, which yields both the exact
covariance and a total-variation bound on it. Identifiability compares
single-bond marginals, which separate boundary laws up to cyclic shifts. The
chain-mixture on the integer line shows what goes wrong without the
boundary-law structure: its conditional single-bond probabilities drift with
the size of the conditioning window.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .chains import FuzzyChain, mixing_profile, second_eigenvalue_modulus, tv_distance
from .errors import PeriodMismatch
from .measures import GGMSpec, event_prob_pinned, single_bond_marginal
from .model import IncrementWindow, PeriodicBoundaryLaw, TransferOperator

__all__ = [
    "CounterexampleChain",
    "correlation_and_bound",
    "decay_envelope",
    "identifiability_check",
    "counterexample_conditional_ratio",
    "conditional_ratio_closed",
    "conditional_ratio_enumerated",
    "path_mixture_prob",
    "bond_marginals_by_position",
]


def correlation_and_bound(spec: GGMSpec, volA: Iterable[int], volB: Iterable[int],
                          zetaA: Mapping[tuple[int, int], int],
                          zetaB: Mapping[tuple[int, int], int],
                          n: int) -> tuple[float, float]:
    """Exact covariance of two windowed cylinder events at distance n, and the
    total-variation bound through the n-step fuzzy chain.

    The joint probability factors as (event A pinned at its near vertex) times
    n chain steps times (event B pinned at its near vertex); the bound is
    twice the A-probability times the worst n-step distance to stationarity
    times the largest pinned B-probability.
    """
    volume = spec.volume
    kernel = spec.kernel
    chain = spec.chain
    A = set(volA)
    B = set(volB)
    if A & B:
        raise ValueError("the two sub-volumes must be disjoint")
    u, w, dist = min(
        ((a, b, volume.distance(a, b)) for a in A for b in B),
        key=lambda t: t[2],
    )
    if dist != n:
        raise ValueError(f"sub-volumes are {dist} apart, not {n}")
    q = kernel.q
    pA = np.array([event_prob_pinned(kernel, volume, A, u, s, zetaA) for s in range(q)])
    pB = np.array([event_prob_pinned(kernel, volume, B, w, s, zetaB) for s in range(q)])
    step_n = np.linalg.matrix_power(chain.matrix, n)
    joint = float(chain.alpha @ (pA * (step_n @ pB)))
    margA = float(chain.alpha @ pA)
    margB = float(chain.alpha @ pB)
    cov = joint - margA * margB
    tv = max(tv_distance(step_n[s], chain.alpha) for s in range(q))
    bound = 2.0 * margA * tv * float(pB.max())
    if abs(cov) > bound + 1e-14:
        raise AssertionError(f"covariance {cov} escaped its bound {bound}")
    return cov, bound


def decay_envelope(chain: FuzzyChain, n_max: int) -> tuple[float, float, np.ndarray]:
    """Geometric envelope C * delta**n dominating the mixing profile.

    delta is the modulus of the second-largest eigenvalue; C is fitted from
    the first two total-variation values.
    """
    delta = second_eigenvalue_modulus(chain.matrix)
    profile = mixing_profile(chain, max(n_max, 2))
    if delta == 0.0:
        return 0.0, 0.0, np.zeros(n_max)
    c = max(profile[0] / delta, profile[1] / delta**2)
    return c, delta, c * delta ** np.arange(1, n_max + 1)


def identifiability_check(op: TransferOperator, l1: PeriodicBoundaryLaw,
                          l2: PeriodicBoundaryLaw,
                          window: IncrementWindow | None = None,
                          gap_tol: float = 1e-10) -> tuple[bool, float]:
    """Compare the single-bond marginals of two boundary laws.

    Returns (distinguishable, witness gap); the marginals coincide exactly
    when one law is a cyclic shift of the other.
    """
    if l1.q != l2.q:
        raise PeriodMismatch(f"periods {l1.q} and {l2.q} differ")
    if window is None:
        w1 = IncrementWindow.for_model(op, l1)
        w2 = IncrementWindow.for_model(op, l2)
        window = w1 if w1.cutoff >= w2.cutoff else w2
    m1 = single_bond_marginal(op, l1, window)
    m2 = single_bond_marginal(op, l2, window)
    gap = float(np.max(np.abs(m1 - m2)))
    return gap > gap_tol, gap


# ---------------------------------------------------------------------------
# the one-dimensional counterexample


@dataclass(frozen=True)
class CounterexampleChain:
    """Two-layer chain on the integers with steps in {-1, 0, 1}.

    At layer parity s the step is +-1 with probability eps_s each and 0 with
    probability 1 - 2 eps_s. The layer-dependence is not induced by any
    boundary law, so the stationary mixture of the pinned walks is
    translation invariant but loses the conditional structure of a gradient
    measure.
    """

    eps0: float
    eps1: float

    def __post_init__(self):
        for e in (self.eps0, self.eps1):
            if not 0.0 < e < 0.5:
                raise ValueError("eps values must lie in (0, 1/2)")
        if self.eps0 == self.eps1:
            raise ValueError("the two layers must differ")

    def step_prob(self, layer: int, zeta: int) -> float:
        eps = self.eps1 if layer % 2 else self.eps0
        if zeta == 0:
            return 1.0 - 2.0 * eps
        if abs(zeta) == 1:
            return eps
        return 0.0

    def alpha(self) -> np.ndarray:
        # stationary layer weights: alpha(1)/alpha(0) = eps0/eps1
        total = self.eps0 + self.eps1
        return np.array([self.eps1 / total, self.eps0 / total])

    def fuzzy_matrix(self) -> np.ndarray:
        return np.array([
            [1.0 - 2.0 * self.eps0, 2.0 * self.eps0],
            [2.0 * self.eps1, 1.0 - 2.0 * self.eps1],
        ])

    def growth_constant(self) -> float:
        return (1.0 - 2.0 * self.eps1) / (1.0 - 2.0 * self.eps0)


def path_mixture_prob(ce: CounterexampleChain, zeta: Sequence[int]) -> float:
    """Probability of a full increment configuration along a path under the
    stationary mixture of the pinned walks."""
    alpha = ce.alpha()
    total = 0.0
    for s in (0, 1):
        p = alpha[s]
        layer = s
        for z in zeta:
            p *= ce.step_prob(layer, int(z))
            layer = (layer + int(z)) % 2
        total += p
    return float(total)


def conditional_ratio_closed(ce: CounterexampleChain, len_left: int,
                             len_right: int) -> float:
    """Closed form of the ratio P(middle bond flat | flanks flat) over
    P(middle bond steps | flanks flat)."""
    a = ce.alpha()
    c = ce.growth_constant()
    num = (a[1] * (1.0 - 2.0 * ce.eps1) * c ** (len_left + len_right)
           + a[0] * (1.0 - 2.0 * ce.eps0))
    den = a[1] * ce.eps1 * c**len_left + a[0] * ce.eps0 * c**len_right
    return float(num / den)


def conditional_ratio_enumerated(ce: CounterexampleChain, len_left: int,
                                 len_right: int) -> float:
    """Same ratio from raw path probabilities: the conditioning pins every
    flank increment to zero, so only the middle bond varies."""
    flat = [0] * len_left + [0] + [0] * len_right
    up = [0] * len_left + [1] + [0] * len_right
    return path_mixture_prob(ce, flat) / path_mixture_prob(ce, up)


def counterexample_conditional_ratio(ce: CounterexampleChain, len_left: int,
                                     len_right: int) -> float:
    """Conditional ratio with the closed form checked against enumeration."""
    if len_left < 0 or len_right < 0:
        raise ValueError("flank lengths must be >= 0")
    closed = conditional_ratio_closed(ce, len_left, len_right)
    enum = conditional_ratio_enumerated(ce, len_left, len_right)
    if abs(closed - enum) > 1e-10 * max(1.0, abs(closed)):
        raise AssertionError(f"closed form {closed} disagrees with enumeration {enum}")
    return closed


def bond_marginals_by_position(ce: CounterexampleChain, n_edges: int) -> np.ndarray:
    """Single-bond marginals P(zeta_i = v) for every position i and
    v in {-1, 0, 1}, by full enumeration; translation invariance makes the
    rows identical."""
    out = np.zeros((n_edges, 3))
    for combo in itertools.product((-1, 0, 1), repeat=n_edges):
        p = path_mixture_prob(ce, combo)
        for i, z in enumerate(combo):
            out[i, z + 1] += p
    return out
