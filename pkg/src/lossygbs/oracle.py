"""Exact reference probabilities for small photon numbers.

This module evaluates the pre-split Gaussian expectation directly instead
of expanding it: the probability of a pattern is, up to the per-mode
normalisation constants, the expectation of a product of ``2M`` linear
forms in the zero-mean auxiliary variables, which by the Isserlis/Wick
theorem equals the sum over all ``(2M - 1)!!`` perfect matchings of
pairwise covariances.  None of the trace-engine machinery is used here;
agreement between the two paths is what the tests check.

The matching sum grows factorially, so patterns are capped at six photons
(10395 matchings).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .model import ModelParams
from .traces import OutputPattern
from .unitary import UnitaryMatrix

__all__ = [
    "MAX_EXACT_PHOTONS",
    "GaussianForm",
    "PairingSum",
    "iter_pairings",
    "exact_probability",
    "enumerate_patterns",
    "normalization_check",
]

MAX_EXACT_PHOTONS = 6

# Tags for the two families of auxiliary variables: one enters through the
# ket-side exponential with plain matrix columns, the other through the
# bra side with conjugated columns.
KET = "xi"
BRA = "xi_tilde"


@dataclass(frozen=True)
class GaussianForm:
    """One linear form ``sum_i coeffs[i] * v_i`` in the tagged variables."""

    kind: str
    coeffs: np.ndarray


@dataclass(frozen=True)
class PairingSum:
    """A product of zero-mean Gaussian linear forms awaiting Wick evaluation.

    ``sigma`` is the 2x2 per-mode covariance of the variable pair; forms of
    the same kind pair through ``sigma[0, 0]``, forms of different kinds
    through ``sigma[0, 1]``, and variables of distinct modes are
    independent, which the coefficient dot product accounts for.
    """

    forms: tuple[GaussianForm, ...]
    sigma: np.ndarray

    def covariance(self, a: int, b: int) -> complex:
        fa, fb = self.forms[a], self.forms[b]
        scale = self.sigma[0, 0] if fa.kind == fb.kind else self.sigma[0, 1]
        return scale * np.dot(fa.coeffs, fb.coeffs)

    def expectation(self) -> complex:
        """Sum over all perfect matchings of pairwise covariances.

        Recursion pairs the lowest-indexed live form with every partner;
        memory stays linear in the number of forms.  An odd number of forms
        has no perfect matching, so the expectation is zero.
        """
        count = len(self.forms)
        if count % 2:
            return 0.0j
        cov = [
            [self.covariance(a, b) for b in range(count)] for a in range(count)
        ]

        def recurse(alive: list[int]) -> complex:
            if not alive:
                return 1.0 + 0.0j
            first, rest = alive[0], alive[1:]
            row = cov[first]
            total = 0.0j
            for i, partner in enumerate(rest):
                total += row[partner] * recurse(rest[:i] + rest[i + 1 :])
            return total

        return recurse(list(range(count)))


def iter_pairings(items: Sequence[int]) -> Iterator[list[tuple[int, int]]]:
    """Yield every perfect matching of ``items`` as a list of pairs.

    The first element is paired with each remaining element in turn, then
    the rest are matched recursively; for ``2M`` items this yields exactly
    ``(2M - 1)!!`` matchings, and nothing when the count is odd.
    """
    items = list(items)
    if not items:
        yield []
        return
    if len(items) % 2:
        return
    first, rest = items[0], items[1:]
    for i, partner in enumerate(rest):
        for tail in iter_pairings(rest[:i] + rest[i + 1 :]):
            yield [(first, partner)] + tail


def _pairing_sum(u: UnitaryMatrix, params: ModelParams, pattern: OutputPattern) -> PairingSum:
    forms = []
    for j, n_j in enumerate(pattern.counts):
        ket = GaussianForm(kind=KET, coeffs=params.c * u.entries[:, j])
        bra = GaussianForm(kind=BRA, coeffs=params.c * u.entries[:, j].conjugate())
        forms += [ket] * n_j + [bra] * n_j
    return PairingSum(forms=tuple(forms), sigma=params.sigma)


def exact_probability(
    u: UnitaryMatrix, params: ModelParams, pattern: OutputPattern
) -> float:
    """Exact pattern probability via the perfect-matching sum.

    Limited to ``pattern.total <= 6``; beyond that the matching count makes
    the sum impractical and a ``ValueError`` signals the resource limit.
    """
    if len(pattern.counts) != u.n:
        raise ValueError(f"pattern has {len(pattern.counts)} modes, matrix has {u.n}")
    total = pattern.total
    if total > MAX_EXACT_PHOTONS:
        raise ValueError(
            f"pattern holds {total} photons; the exact pairing sum is "
            f"limited to {MAX_EXACT_PHOTONS}"
        )
    expectation = _pairing_sum(u, params, pattern).expectation()
    fact = math.prod(math.factorial(n) for n in pattern.counts)
    scale = (params.norm_per_mode * params.prefactor_per_mode) ** u.n / fact
    value = scale * expectation
    if abs(value.imag) > 1e-10 * (1.0 + abs(value.real)):
        raise FloatingPointError(
            f"exact probability acquired an imaginary residue {value.imag:.3e}"
        )
    return float(value.real)


def enumerate_patterns(n: int, total_photons: int) -> list[OutputPattern]:
    """All ways to place ``total_photons`` photons into ``n`` modes.

    Ordered with the leading mode's count descending, e.g. for two modes and
    two photons: ``(2, 0), (1, 1), (0, 2)``.
    """
    if n < 1:
        raise ValueError(f"mode count must be at least 1, got {n}")
    if total_photons < 0:
        raise ValueError(f"photon total must be >= 0, got {total_photons}")

    def build(modes: int, left: int) -> Iterator[tuple[int, ...]]:
        if modes == 1:
            yield (left,)
            return
        for first in range(left, -1, -1):
            for rest in build(modes - 1, left - first):
                yield (first,) + rest

    return [OutputPattern(counts) for counts in build(n, total_photons)]


def normalization_check(
    u: UnitaryMatrix, params: ModelParams, max_photons: int
) -> float:
    """Total exact probability over every pattern with at most ``max_photons``.

    Approaches 1 from below as the cutoff grows; how fast depends on the
    photon-number tail, i.e. on the squeezing and the loss level.
    """
    if max_photons > MAX_EXACT_PHOTONS:
        raise ValueError(
            f"max_photons={max_photons} exceeds the exact budget of {MAX_EXACT_PHOTONS}"
        )
    total = 0.0
    for m in range(max_photons + 1):
        for pattern in enumerate_patterns(u.n, m):
            total += exact_probability(u, params, pattern)
    return total
