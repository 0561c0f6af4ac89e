"""Direct LU solver for banded systems with partial pivoting inside the band.

Storage follows the LAPACK general-band layout: for a matrix ``A`` with
``kl`` sub- and ``ku`` super-diagonals, entry ``A[i, j]`` lives at
``ab[kl + ku + i - j, j]`` and the top ``kl`` rows of ``ab`` are workspace
for pivoting fill-in, so ``ab`` has shape ``(2*kl + ku + 1, n)``.
"""

from __future__ import annotations

import numpy as np

try:
    from scipy.linalg import LinAlgError as _ScipyLinAlgError
    from scipy.linalg import solve_banded as _scipy_solve_banded
except ImportError:  # pragma: no cover
    _scipy_solve_banded = None
    _ScipyLinAlgError = ()

from .errors import SingularSystem

PIVOT_RTOL = 1e-12


class BandedMatrix:
    """Mutable banded matrix builder plus factor/solve."""

    def __init__(self, n: int, kl: int, ku: int):
        self.n = n
        self.kl = kl
        self.ku = ku
        self.ab = np.zeros((2 * kl + ku + 1, n))

    def set(self, i: int, j: int, value: float) -> None:
        if not (-self.ku <= i - j <= self.kl):
            raise ValueError(f"entry ({i}, {j}) outside band (kl={self.kl}, ku={self.ku})")
        self.ab[self.kl + self.ku + i - j, j] = value

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """Band-aware A @ x (uses only the true band, not the fill rows)."""
        n, kl, ku = self.n, self.kl, self.ku
        y = np.zeros(n)
        for off in range(-kl, ku + 1):
            if off >= 0:
                i = np.arange(0, n - off)
            else:
                i = np.arange(-off, n)
            j = i + off
            y[i] += self.ab[kl + ku - off, j] * x[j]
        return y

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Solve A x = b; LAPACK gbsv when scipy is present, else the
        pure-Python banded LU below.  Exactly singular systems raise
        :class:`SingularSystem` on either path."""
        if _scipy_solve_banded is not None:
            try:
                return _scipy_solve_banded(
                    (self.kl, self.ku), self.ab[self.kl:, :], np.asarray(b, float))
            except (_ScipyLinAlgError, np.linalg.LinAlgError) as exc:
                raise SingularSystem(str(exc)) from exc
        return self.solve_pure(b)

    def solve_pure(self, b: np.ndarray) -> np.ndarray:
        ab = self.ab.copy()
        x = np.asarray(b, dtype=float).copy()
        _factor_and_solve_inplace(ab, x, self.kl, self.ku)
        return x


def _factor_and_solve_inplace(ab: np.ndarray, b: np.ndarray, kl: int, ku: int) -> None:
    """Banded LU with partial pivoting, forward/back substitution in place.

    Raises :class:`SingularSystem` when the pivot magnitude falls below
    ``PIVOT_RTOL`` times the infinity norm of its row.
    """
    n = b.shape[0]
    kuf = kl + ku  # upper bandwidth after fill
    diag = kl + ku  # band-row index of the diagonal in LAPACK layout

    for k in range(n):
        lm = min(kl, n - 1 - k)
        col = ab[diag:diag + lm + 1, k]
        p = int(np.argmax(np.abs(col)))
        jmax = min(k + kuf, n - 1)
        js = np.arange(k, jmax + 1)
        if p != 0:
            r1 = diag + k - js
            r2 = diag + (k + p) - js
            tmp = ab[r1, js].copy()
            ab[r1, js] = ab[r2, js]
            ab[r2, js] = tmp
            b[k], b[k + p] = b[k + p], b[k]
        pivot = ab[diag, k]
        row_norm = np.max(np.abs(ab[diag + k - js, js]))
        if abs(pivot) < PIVOT_RTOL * max(row_norm, 1.0) or pivot == 0.0:
            raise SingularSystem(
                f"pivot {pivot!r} below tolerance at column {k} (row norm {row_norm!r})"
            )
        if lm > 0:
            m = ab[diag + 1:diag + lm + 1, k] / pivot
            ab[diag + 1:diag + lm + 1, k] = m
            if k + 1 <= jmax:
                js_u = np.arange(k + 1, jmax + 1)
                rows_u = diag + k - js_u
                u_row = ab[rows_u, js_u]
                row_idx = rows_u[None, :] + 1 + np.arange(lm)[:, None]
                col_idx = np.broadcast_to(js_u[None, :], row_idx.shape)
                ab[row_idx, col_idx] -= m[:, None] * u_row[None, :]
            b[k + 1:k + lm + 1] -= m * b[k]

    # back substitution on U (upper bandwidth kl + ku)
    for i in range(n - 1, -1, -1):
        jmax = min(i + kuf, n - 1)
        if jmax > i:
            js = np.arange(i + 1, jmax + 1)
            b[i] -= float(np.dot(ab[diag + i - js, js], b[js]))
        b[i] /= ab[diag, i]
