"""One-time tables shared by every Monte Carlo sample.

The correction sums contract the interferometer matrix with itself; those
contractions depend only on the matrix, never on the sampled field, so they
are built once.  Falling factorials ``m!/(m-p)!`` appear in every insertion
trace and are tabulated up to the largest photon count of the target
pattern, with entries for ``p > m`` pinned to zero so that insertions past
the occupancy vanish without special-casing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .traces import OutputPattern
from .unitary import UnitaryMatrix

__all__ = ["PrecomputeTables", "build_tables", "unitary_contractions", "falling_factorials"]


@dataclass(frozen=True)
class PrecomputeTables:
    """Unitary self-contractions plus the falling-factorial table.

    ``t2[j, k] = sum_i U_ij U_ik`` (symmetric),
    ``m2[j, k] = sum_i U_ij conj(U_ik)`` (Hermitian; the identity when U is
    unitary), ``q4[k, l, m, n] = sum_i U_ik U_il conj(U_im) conj(U_in)``,
    and ``factorials[m, p] = m!/(m-p)!`` with zeros for ``p > m``.
    """

    t2: np.ndarray
    m2: np.ndarray
    q4: np.ndarray
    factorials: np.ndarray

    def __post_init__(self):
        for arr in (self.t2, self.m2, self.q4, self.factorials):
            arr.setflags(write=False)


def unitary_contractions(u: UnitaryMatrix) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rank-2 and rank-4 self-contractions of the matrix (pattern independent)."""
    m = u.entries
    t2 = m.T @ m
    m2 = m.T @ m.conjugate()
    # q4 as a single (n^2 x n) @ (n x n^2) product over the coincident index.
    n = u.n
    pairs = np.einsum("ik,il->ikl", m, m).reshape(n, n * n)
    q4 = (pairs.T @ pairs.conjugate()).reshape(n, n, n, n)
    return t2, m2, q4


def falling_factorials(max_count: int) -> np.ndarray:
    """Table ``F[m, p] = m!/(m-p)!`` for ``0 <= p, m <= max_count``."""
    size = max_count + 1
    f = np.zeros((size, size))
    f[:, 0] = 1.0
    for p in range(1, size):
        for m in range(p, size):
            f[m, p] = (m - p + 1) * f[m, p - 1]
    return f


def build_tables(u: UnitaryMatrix, pattern: OutputPattern) -> PrecomputeTables:
    """Build every table needed to evaluate samples for ``(u, pattern)``."""
    if len(pattern.counts) != u.n:
        raise ValueError(
            f"pattern has {len(pattern.counts)} modes, matrix has {u.n}"
        )
    t2, m2, q4 = unitary_contractions(u)
    factorials = falling_factorials(max(pattern.counts, default=0))
    return PrecomputeTables(t2=t2, m2=m2, q4=q4, factorials=factorials)
