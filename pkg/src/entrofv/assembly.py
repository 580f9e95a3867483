"""Fixed-pattern sparse assembly shared by the two schemes."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp


class SparsePattern:
    """CSR pattern for repeated assembly from (row, col) triplet lists.

    Duplicate entries are summed. The pattern is computed once; ``assemble``
    only scatters values.
    """

    def __init__(self, rows: np.ndarray, cols: np.ndarray, n: int):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        keys, self._inverse = np.unique(rows * n + cols, return_inverse=True)
        self._inverse = self._inverse.ravel()
        self.n = n
        self._indices = (keys % n).astype(np.int32)
        self._indptr = np.searchsorted(keys // n, np.arange(n + 1)).astype(np.int32)
        self._nnz = len(keys)

    def assemble(self, values: np.ndarray) -> sp.csr_matrix:
        data = np.bincount(self._inverse, weights=values, minlength=self._nnz)
        return sp.csr_matrix((data, self._indices.copy(), self._indptr.copy()), shape=(self.n, self.n))
