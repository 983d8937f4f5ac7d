"""Generation, validation and serialisation of the interferometer matrix.

Row ``i`` of the matrix addresses input mode ``i``, column ``j`` output mode
``j``.  The on-disk format is JSON: an object with fields ``"n"`` and
``"entries"``, the latter an ``n x n`` array of ``[re, im]`` pairs.  Floats
are written with shortest round-trip precision, so save/load is bit-exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "UnitaryMatrix",
    "haar_random",
    "check_unitary",
    "save_unitary",
    "load_unitary",
]


@dataclass(frozen=True)
class UnitaryMatrix:
    """An ``n x n`` complex interferometer matrix.

    Construction only checks the shape; use :func:`check_unitary` to measure
    how far the matrix is from unitarity.
    """

    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        if m.shape[0] < 1:
            raise ValueError("mode count must be at least 1")
        object.__setattr__(self, "entries", m)
        m.setflags(write=False)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def haar_random(n: int, seed: int) -> UnitaryMatrix:
    """Draw an ``n x n`` unitary from the Haar measure, deterministically.

    A complex Gaussian matrix is orthonormalised by QR; each column is then
    multiplied by the conjugate phase of the triangular factor's diagonal to
    remove the residual phase freedom of the decomposition, so a given
    ``(n, seed)`` always yields the same matrix.
    """
    if n < 1:
        raise ValueError(f"mode count must be at least 1, got {n}")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    q = q * (d.conjugate() / np.abs(d))
    return UnitaryMatrix(q)


def check_unitary(u: UnitaryMatrix) -> float:
    """Max-norm of ``U^dag U - I``; ~1e-15 for a clean unitary."""
    m = u.entries
    residual = m.conjugate().T @ m - np.eye(u.n)
    return float(np.abs(residual).max())


def save_unitary(u: UnitaryMatrix, path: str | Path) -> None:
    entries = [
        [[float(z.real), float(z.imag)] for z in row] for row in u.entries
    ]
    Path(path).write_text(json.dumps({"n": u.n, "entries": entries}) + "\n")


def load_unitary(path: str | Path) -> UnitaryMatrix:
    """Parse a unitary file; raises ``ValueError`` naming the offending cell."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "n" not in doc or "entries" not in doc:
        raise ValueError(f"{path}: expected an object with 'n' and 'entries'")
    n = doc["n"]
    rows = doc["entries"]
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"{path}: 'n' must be a positive integer, got {n!r}")
    if not isinstance(rows, list) or len(rows) != n:
        raise ValueError(
            f"{path}: expected {n} rows of entries, got {len(rows) if isinstance(rows, list) else type(rows).__name__}"
        )
    matrix = np.empty((n, n), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            raise ValueError(f"{path}: row {i} must hold {n} entries")
        for j, cell in enumerate(row):
            if (
                not isinstance(cell, list)
                or len(cell) != 2
                or not all(isinstance(v, (int, float)) for v in cell)
            ):
                raise ValueError(
                    f"{path}: entry at row {i}, column {j} is not a [re, im] pair"
                )
            matrix[i, j] = complex(cell[0], cell[1])
    return UnitaryMatrix(matrix)
