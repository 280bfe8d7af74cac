"""
Spatial weight matrices and the contemporaneous spatial operator.

A weight matrix W encodes neighbor influence between n locations. We build
it from a symmetric binary adjacency (queen contiguity on a lattice, or a
user-supplied edge list), zero the diagonal, and row-standardize so every
row sums to 1. The model's contemporaneous operator is

    A0 = I - phi0 * W

and three quantities involving A0 recur in the likelihood:

    ln|A0|             = sum_i ln(1 - phi0 * tau_i)
    tr(W A0^{-1})      = sum_i tau_i / (1 - phi0 * tau_i)
    tr((W A0^{-1})^2)  = sum_i tau_i^2 / (1 - phi0 * tau_i)^2

where tau_1 >= ... >= tau_n are the eigenvalues of W. Because W comes from
a symmetric adjacency A with degree matrix D, W = D^{-1} A is similar to
the symmetric matrix D^{-1/2} A D^{-1/2}, so its spectrum is real and can
be computed once with a stable symmetric eigensolver (Ord's device). After
that one decomposition, every log-determinant and trace is O(n).

A0 is strictly diagonally dominant, hence invertible, whenever
|phi0| < 1 / max_i |tau_i| (= 1 for a row-standardized connected graph).
Linear solves with A0 use a sparse LU factorization; eigenvectors are
never materialized.
"""

from __future__ import annotations

import csv

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = [
    "WeightMatrix",
    "build_queen_lattice",
    "from_adjacency",
    "read_adjacency_csv",
]

# Row sums of a standardized matrix must hit 1 to this tolerance.
ROW_SUM_TOL = 1e-12


class WeightMatrix:
    """Immutable row-standardized spatial weight matrix with cached spectrum.

    Parameters
    ----------
    adjacency : scipy.sparse matrix or ndarray
        Symmetric nonnegative adjacency with zero diagonal. Typically
        binary; weighted symmetric adjacencies are accepted.
    lattice_dims : (n1, n2) or None
        Set when the locations form a regular lattice in row-major order.
    standardize : bool
        Row-standardize (divide each row by its sum). The escape hatch
        ``standardize=False`` keeps the raw symmetric weights; boundedness
        of row sums is still validated.

    Attributes
    ----------
    n : int
        Number of locations.
    W : scipy.sparse.csr_matrix
        The (standardized) weight matrix.
    eigenvalues : ndarray
        Real spectrum of W, sorted descending.
    tau_max : float
        max_i |tau_i|; the admissible phi0 interval is (-1/tau_max, 1/tau_max).
    """

    def __init__(self, adjacency, lattice_dims=None, standardize=True):
        A = sp.csr_matrix(adjacency, dtype=float)
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"adjacency must be square, got {A.shape}")
        n = A.shape[0]
        if A.diagonal().any():
            raise ValueError("adjacency has nonzero diagonal entries")
        if (A != A.T).nnz:
            raise ValueError("adjacency must be symmetric")
        if A.nnz and A.data.min() < 0:
            raise ValueError("adjacency weights must be nonnegative")

        degrees = np.asarray(A.sum(axis=1)).ravel()
        isolated = np.flatnonzero(degrees == 0)
        if isolated.size:
            shown = ", ".join(map(str, isolated[:10]))
            more = "" if isolated.size <= 10 else f" (+{isolated.size - 10} more)"
            raise ValueError(
                f"isolated location(s) with no neighbors: {shown}{more}; "
                "row standardization is undefined for them"
            )

        if standardize:
            W = sp.diags(1.0 / degrees) @ A
            # tau(D^{-1} A) = tau(D^{-1/2} A D^{-1/2}); the right side is
            # symmetric, so the spectrum is real by construction.
            d = 1.0 / np.sqrt(degrees)
            S = (A.multiply(d[:, None]).multiply(d[None, :])).toarray()
        else:
            W = A
            S = A.toarray()
        eigenvalues = np.linalg.eigvalsh(S)[::-1].copy()

        W = sp.csr_matrix(W)
        rowsums = np.asarray(W.sum(axis=1)).ravel()
        if standardize:
            if np.max(np.abs(rowsums - 1.0)) > ROW_SUM_TOL:
                raise ValueError("row standardization failed to reach tolerance")
            if W.data.min() < 0.0 or W.data.max() > 1.0:
                raise ValueError("standardized weights must lie in [0, 1]")
            if np.max(np.abs(eigenvalues)) > 1.0 + 1e-10:
                raise ValueError("row-standardized spectrum exceeds 1 in modulus")

        self.n = n
        self.W = W
        self.eigenvalues = eigenvalues
        self.eigenvalues.setflags(write=False)
        self.lattice_dims = tuple(lattice_dims) if lattice_dims else None
        self.standardized = bool(standardize)
        self.tau_max = float(np.max(np.abs(eigenvalues)))
        self.s0 = float(W.sum())

    def __repr__(self):
        dims = f", lattice={self.lattice_dims}" if self.lattice_dims else ""
        return f"WeightMatrix(n={self.n}{dims}, tau_max={self.tau_max:.6g})"

    # ------------------------------------------------------------------
    # A0 = I - phi0 W algebra
    # ------------------------------------------------------------------

    def _check_phi0(self, phi0):
        bound = 1.0 / self.tau_max
        if not -bound < phi0 < bound:
            raise ValueError(
                f"phi0={phi0} outside the admissible interval "
                f"(-{bound:.6g}, {bound:.6g}); A0 would be singular or "
                "sign-indefinite"
            )

    def log_det_a0(self, phi0):
        """ln|I - phi0 W| via the cached eigenvalues."""
        self._check_phi0(phi0)
        return float(np.sum(np.log1p(-phi0 * self.eigenvalues)))

    def trace_w_a0inv(self, phi0, power=1):
        """tr(W A0^{-1}) for power=1, tr((W A0^{-1})^2) for power=2."""
        self._check_phi0(phi0)
        if power not in (1, 2):
            raise ValueError("power must be 1 or 2")
        r = self.eigenvalues / (1.0 - phi0 * self.eigenvalues)
        return float(np.sum(r**power))

    def a0_matrix(self, phi0, sparse=True):
        """Assemble A0 = I - phi0 W (sparse CSC by default)."""
        A0 = sp.identity(self.n, format="csc") - phi0 * self.W.tocsc()
        return A0 if sparse else A0.toarray()

    def a0_factor(self, phi0):
        """Sparse LU factorization of A0; returns an object with .solve(b)."""
        self._check_phi0(phi0)
        return spla.splu(self.a0_matrix(phi0))

    def solve_a0(self, phi0, b):
        """Solve (I - phi0 W) x = b.

        Accepts a vector of length n or an (n, k) block of right-hand sides.
        """
        self._check_phi0(phi0)
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.n:
            raise ValueError(f"right-hand side has length {b.shape[0]}, expected {self.n}")
        return self.a0_factor(phi0).solve(b)


def build_queen_lattice(n1, n2, standardize=True):
    """Queen-contiguity weights on an n1 x n2 lattice.

    Two cells are neighbors when their Chebyshev distance is 1, so interior
    cells have 8 neighbors (weight 1/8 each), non-corner edge cells 5, and
    corners 3. Locations are numbered row-major: s = i * n2 + j.
    """
    n1, n2 = int(n1), int(n2)
    if n1 < 1 or n2 < 1:
        raise ValueError("lattice dimensions must be positive")
    if n1 * n2 < 2:
        raise ValueError("1x1 lattice has an isolated location with no neighbors")

    rows, cols = [], []
    for i in range(n1):
        for j in range(n2):
            s = i * n2 + j
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    if di == 0 and dj == 0:
                        continue
                    ii, jj = i + di, j + dj
                    if 0 <= ii < n1 and 0 <= jj < n2:
                        rows.append(s)
                        cols.append(ii * n2 + jj)
    data = np.ones(len(rows))
    A = sp.coo_matrix((data, (rows, cols)), shape=(n1 * n2, n1 * n2))
    return WeightMatrix(A, lattice_dims=(n1, n2), standardize=standardize)


def from_adjacency(pairs, n, standardize=True):
    """Weights from an undirected edge list.

    Parameters
    ----------
    pairs : iterable of (i, j)
        Undirected edges, 0-based. Each pair is symmetrized; duplicates
        collapse to a single edge.
    n : int
        Number of locations. Every location must gain at least one
        neighbor, otherwise the isolated nodes are reported and rejected.
    """
    n = int(n)
    rows, cols = [], []
    for i, j in pairs:
        i, j = int(i), int(j)
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"edge ({i}, {j}) out of range for n={n}")
        if i == j:
            raise ValueError(f"self-pair ({i}, {j}) not allowed")
        rows += [i, j]
        cols += [j, i]
    A = sp.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n)).tocsr()
    A.data[:] = 1.0  # collapse duplicate edges
    return WeightMatrix(A, standardize=standardize)


def read_adjacency_csv(path, n, standardize=True):
    """Load an edge list CSV with header ``i,j`` (0-based, one edge per line)."""
    pairs = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip().lower() for c in header[:2]] != ["i", "j"]:
            raise ValueError(f"{path}: expected header 'i,j'")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            try:
                pairs.append((int(row[0]), int(row[1])))
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{path}: malformed edge at line {lineno}: {row}") from exc
    return from_adjacency(pairs, n, standardize=standardize)
