"""Closed-form pattern traces and the per-sample integrand.

For one draw of the shared field ``xi0`` the engine needs the overlap of a
rank-one exponential state with the target photon pattern, optionally with
extra creation/annihilation operators inserted.  Writing
``S_j = sum_i x_i U_ij`` with ``x = c * xi0``, every such trace factorises
over modes:

    trace(q, p) = prod_j S_j**(n_j - q_j) * conj(S_j)**(n_j - p_j)
                  * n_j! / ((n_j - p_j)! * (n_j - q_j)!)

where ``q_j`` counts creation insertions on mode ``j`` and ``p_j``
annihilation insertions.  The factor is zero whenever an insertion exceeds
the occupancy, and only non-negative powers of ``S_j`` ever appear, so the
expressions stay finite for any ``xi0`` including exact zeros.

The integrand assembles the trace combinations weighted by the analytic
fluctuation moments: order 0 is the bare trace, order 2 adds one creation
pair, one annihilation pair and one mixed insertion, order 4 adds the
double-insertion terms.  Sums over insertion indices run only over modes
with nonzero counts, since every other index kills its trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, TYPE_CHECKING

import numpy as np

from .model import ModelParams
from .unitary import UnitaryMatrix

if TYPE_CHECKING:  # circular at runtime: precompute imports OutputPattern
    from .precompute import PrecomputeTables

__all__ = [
    "OutputPattern",
    "LinearForms",
    "linear_forms",
    "base_trace",
    "insertion_trace",
    "integrand",
]

# Assembled integrand values must be real up to rounding noise; anything
# larger indicates a cancellation bug and is treated as a hard failure.
_IMAG_TOL = 1e-9


@dataclass(frozen=True)
class OutputPattern:
    """Target photon counts per output mode."""

    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if any(c < 0 for c in counts):
            raise ValueError(f"photon counts must be non-negative, got {counts}")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class LinearForms:
    """The per-output-mode linear forms ``S = U^T x`` for one field draw."""

    s_vals: np.ndarray

    def __post_init__(self):
        self.s_vals.setflags(write=False)


def linear_forms(u: UnitaryMatrix, x: Sequence[float]) -> LinearForms:
    xv = np.asarray(x, dtype=float)
    if xv.shape != (u.n,):
        raise ValueError(f"expected a length-{u.n} vector, got shape {xv.shape}")
    return LinearForms(s_vals=u.entries.T @ xv)


def base_trace(forms: LinearForms, pattern: OutputPattern) -> float:
    """``prod_j |S_j|**(2 n_j) / n_j!``; zero if any occupied mode has S_j = 0."""
    value = 1.0
    for s, n in zip(forms.s_vals, pattern.counts):
        if n:
            value *= (s.real * s.real + s.imag * s.imag) ** n / math.factorial(n)
    return value


def _mode_factor(s: complex, n: int, q: int, p: int) -> complex:
    if q > n or p > n:
        return 0.0j
    coef = math.factorial(n) / (math.factorial(n - p) * math.factorial(n - q))
    value = complex(coef)
    if n - q:
        if s == 0:
            return 0.0j
        value *= s ** (n - q)
    if n - p:
        if s == 0:
            return 0.0j
        value *= s.conjugate() ** (n - p)
    return value


def insertion_trace(
    forms: LinearForms,
    pattern: OutputPattern,
    p: Sequence[int],
    q: Sequence[int],
) -> complex:
    """Trace with ``q_j`` creation insertions (left) and ``p_j`` annihilation
    insertions (right) against the pattern projector.

    Returns zero whenever any ``p_j`` or ``q_j`` exceeds the occupancy,
    which is how insertions past the vacuum annihilate.  With ``p = q = 0``
    this equals :func:`base_trace`.
    """
    value = 1.0 + 0.0j
    for s, n, pj, qj in zip(forms.s_vals, pattern.counts, p, q):
        value *= _mode_factor(s, n, int(qj), int(pj))
        if value == 0:
            return 0.0j
    return value


class _RowKernel:
    """Evaluates the integrand for batches of ``xi0`` rows.

    The hot path divides by the linear forms, which is safe and loses no
    precision while they are nonzero; rows containing an exact zero on an
    occupied mode are recomputed through the non-negative-power route.
    """

    def __init__(
        self,
        tables: "PrecomputeTables",
        params: ModelParams,
        u: UnitaryMatrix,
        pattern: OutputPattern,
    ):
        counts = np.asarray(pattern.counts)
        if counts.shape != (u.n,):
            raise ValueError(f"pattern has {counts.size} modes, matrix has {u.n}")
        supp = np.flatnonzero(counts > 0)
        self.c = params.c
        self.supp = supp
        self.counts = counts[supp]
        self.u_supp = np.ascontiguousarray(u.entries[:, supp])
        if supp.size:
            self.f1 = tables.factorials[self.counts, 1]
        else:
            self.f1 = np.zeros(0)
        self.fact_prod = float(np.prod([math.factorial(int(k)) for k in self.counts]))

        ix2 = np.ix_(supp, supp)
        self.t_sub = tables.t2[ix2]
        self.t_diag = np.diagonal(self.t_sub).copy()
        self.m_sub = tables.m2[ix2]
        self.m_sq = self.m_sub * self.m_sub
        q_sub = tables.q4[np.ix_(supp, supp, supp, supp)]
        self.q_sub = q_sub
        self.q_kkmn = np.einsum("kkmn->kmn", q_sub)
        self.q_klmm = np.einsum("klmm->klm", q_sub)
        self.q_kkmm = np.einsum("kkmm->km", q_sub)

        nu, h, c2 = params.var_chi, params.h, params.c * params.c
        self.co_pair = 0.5 * nu * c2
        self.co_mix = h * c2
        self.co_tt = 0.25 * nu * nu * c2 * c2
        # Both double-insertion contributions that involve the rank-4
        # contraction carry h^2 c^4 / 2: the coincident part of the
        # squared-fluctuation moments, and the distinct-mode cross moments
        # evaluated as (full factorised product) - (coincident part).
        self.co_q = 0.5 * h * h * c2 * c2
        self.co_cross = 0.5 * h * h * c2 * c2

    def forms(self, xi0: np.ndarray) -> np.ndarray:
        """Linear forms on the occupied modes for a batch of field rows."""
        return (xi0 @ self.u_supp) * self.c

    def evaluate(self, xi0: np.ndarray, order: int) -> np.ndarray:
        if order not in (0, 2, 4):
            raise ValueError(f"order must be 0, 2 or 4, got {order}")
        rows = xi0.shape[0]
        if self.supp.size == 0:
            return np.ones(rows)

        s = self.forms(xi0)
        abs2 = s.real * s.real + s.imag * s.imag
        base = np.prod(abs2 ** self.counts, axis=1) / self.fact_prod
        if order == 0:
            return base

        zero_rows = np.flatnonzero(np.any(abs2 == 0.0, axis=1))
        safe = s
        if zero_rows.size:
            safe = s.copy()
            safe[zero_rows] = 1.0  # placeholder; rows recomputed exactly below

        gq = self.f1 / safe
        gp = gq.conjugate()
        dq = -self.f1 / (safe * safe)
        dp = dq.conjugate()

        # Insertion-pair sums with the (j == k) coincidence corrected via
        # n_j (n_j - 1) in place of n_j^2.
        c2q = np.einsum("bj,jk,bk->b", gq, self.t_sub, gq) + dq @ self.t_diag
        c2p = (
            np.einsum("bj,jk,bk->b", gp, self.t_sub.conjugate(), gp)
            + dp @ self.t_diag.conjugate()
        )
        c2m = np.einsum("bj,jk,bk->b", gq, self.m_sub, gp)
        value = 1.0 + self.co_pair * (c2q + c2p) + self.co_mix * c2m

        if order == 4:
            mgp = gp @ self.m_sub.T
            mtgq = gq @ self.m_sub
            mm = (
                c2m * c2m
                + np.sum(dq * mgp * mgp, axis=1)
                + np.sum(dp * mtgq * mtgq, axis=1)
                + np.einsum("bk,km,bm->b", dq, self.m_sq, dp)
            )
            qq = (
                np.einsum("klmn,bk,bl,bm,bn->b", self.q_sub, gq, gq, gp, gp)
                + np.einsum("kmn,bk,bm,bn->b", self.q_kkmn, dq, gp, gp)
                + np.einsum("klm,bk,bl,bm->b", self.q_klmm, gq, gq, dp)
                + np.einsum("km,bk,bm->b", self.q_kkmm, dq, dp)
            )
            value = value + self.co_tt * (c2q * c2p) + self.co_q * qq + self.co_cross * (mm - qq)

        out = base * value
        for idx in zero_rows:
            out[idx] = self._exact_row(s[idx], order)

        bad = np.abs(out.imag) > _IMAG_TOL * (1.0 + np.abs(out.real))
        if bad.any():
            idx = int(np.argmax(np.abs(out.imag)))
            raise FloatingPointError(
                f"integrand acquired an imaginary residue {out.imag[idx]:.3e} "
                f"(real part {out.real[idx]:.3e}); cancellation failure"
            )
        return np.ascontiguousarray(out.real)

    def _exact_row(self, s_row: np.ndarray, order: int) -> complex:
        """Non-negative-power evaluation for a single row (handles zeros)."""
        m = s_row.size
        counts = self.counts

        def trace(qv: dict[int, int], pv: dict[int, int]) -> complex:
            value = 1.0 + 0.0j
            for j in range(m):
                value *= _mode_factor(
                    complex(s_row[j]), int(counts[j]), qv.get(j, 0), pv.get(j, 0)
                )
                if value == 0:
                    return 0.0j
            return value

        value = trace({}, {})
        t, mm, q4 = self.t_sub, self.m_sub, self.q_sub
        for j in range(m):
            for k in range(m):
                qv = {j: 1}
                qv[k] = qv.get(k, 0) + 1
                value += self.co_pair * t[j, k] * trace(qv, {})
                value += self.co_pair * t[j, k].conjugate() * trace({}, qv)
                value += self.co_mix * mm[j, k] * trace({j: 1}, {k: 1})
        if order == 4:
            for k in range(m):
                for l in range(m):
                    qv = {k: 1}
                    qv[l] = qv.get(l, 0) + 1
                    for a in range(m):
                        for b in range(m):
                            pv = {a: 1}
                            pv[b] = pv.get(b, 0) + 1
                            weight = (
                                self.co_tt * t[k, l] * t[a, b].conjugate()
                                + self.co_q * q4[k, l, a, b]
                                + self.co_cross
                                * (mm[k, a] * mm[l, b] - q4[k, l, a, b])
                            )
                            value += weight * trace(qv, pv)
        return value


def integrand(
    tables: "PrecomputeTables",
    params: ModelParams,
    u: UnitaryMatrix,
    pattern: OutputPattern,
    xi0: Sequence[float],
    order: int,
) -> float:
    """Integrand value for one field draw ``xi0`` at the given order.

    Order 0 is exactly :func:`base_trace` of the forms built from
    ``c * xi0``; orders 2 and 4 add the analytically integrated fluctuation
    corrections.  The assembled value is real up to rounding; an imaginary
    residue beyond ``1e-9 * (1 + |Re|)`` raises ``FloatingPointError``.
    """
    row = np.asarray(xi0, dtype=float)
    if row.shape != (u.n,):
        raise ValueError(f"expected a length-{u.n} field vector, got {row.shape}")
    kernel = _RowKernel(tables, params, u, pattern)
    return float(kernel.evaluate(row[None, :], order)[0])
