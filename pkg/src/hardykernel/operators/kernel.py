"""The kernel ``(1 - z conj(lam))^-alpha`` and its discretization on a PolarGrid."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ..geometry import TWO_PI
from ..grid import GridFunction, PolarGrid

NEAR_SINGULAR = 1e-14


class NearSingularWarning(RuntimeWarning):
    pass


def kernel_of_product(w, alpha: float):
    """``(1 - w)^-alpha`` on the principal branch, where ``w = z conj(lam)``."""
    return (1.0 - np.asarray(w, dtype=complex)) ** (-alpha)


def kernel(alpha: float, z, lam):
    """Evaluate the kernel at points of the open disk (broadcasting)."""
    z = np.asarray(z, dtype=complex)
    lam = np.asarray(lam, dtype=complex)
    if np.any(np.abs(z) >= 1) or np.any(np.abs(lam) >= 1):
        raise ValueError("kernel needs |z| < 1 and |lam| < 1")
    d = 1.0 - z * np.conj(lam)
    if np.any(np.abs(d) < NEAR_SINGULAR):
        warnings.warn("|1 - z conj(lam)| below 1e-14", NearSingularWarning, stacklevel=2)
    out = d ** (-alpha)
    return complex(out) if out.ndim == 0 else out


def _ring_diagonal(grid: PolarGrid, alpha: float) -> np.ndarray:
    """Self-interaction value of one cell per ring.

    Averages the kernel over ordered pairs of distinct 2x2 Gauss sub-nodes of
    the cell; the average is real because both orders of each pair appear.
    """
    nodes = grid.sub_nodes()[grid.ring_offset[:-1]]
    vals = kernel_of_product(nodes[:, :, None] * np.conj(nodes[:, None, :]), alpha)
    off = ~np.eye(4, dtype=bool)
    return vals[:, off].mean(axis=1).real


@dataclass
class KernelOperator:
    """Matrix ``K[i, j] = kernel(z_i, z_j)`` on the cell centers of a grid.

    ``matvec`` applies it exactly in ``O(R N log N)`` (R rings) using that
    every ring is rotation-uniform: the block between two rings is a union of
    circulants. ``dense`` builds the same matrix entry by entry.
    """

    grid: PolarGrid
    alpha: float
    _blocks: dict = field(init=False, repr=False)
    diagonal: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.diagonal = _ring_diagonal(self.grid, self.alpha)
        self._blocks = {}
        g = self.grid
        # rings are grouped into shells of equal angular count
        shells = []
        for i in range(g.n_rings):
            if not shells or g.ring_n[shells[-1][0]] != g.ring_n[i]:
                shells.append([])
            shells[-1].append(i)
        self._shells = [np.array(s) for s in shells]
        rho = np.abs(g.centers[g.ring_offset[:-1]])
        for T, tr in enumerate(self._shells):
            for S, sr in enumerate(self._shells):
                nt, ns = int(g.ring_n[tr[0]]), int(g.ring_n[sr[0]])
                rr = rho[tr][:, None, None, None] * rho[sr][None, :, None, None]
                dt, ds = TWO_PI / nt, TWO_PI / ns
                if nt >= ns:
                    L = nt // ns
                    q = np.arange(L)[None, None, :, None]
                    m = np.arange(ns)[None, None, None, :]
                    phase = (q + 0.5) * dt - 0.5 * ds + m * ds
                else:
                    L = ns // nt
                    q = np.arange(L)[None, None, :, None]
                    m = np.arange(nt)[None, None, None, :]
                    phase = 0.5 * dt - (q + 0.5) * ds + m * dt
                vals = kernel_of_product(rr * np.exp(1j * phase), self.alpha)
                if T == S:
                    for a, ring in enumerate(tr):
                        vals[a, a, 0, 0] = self.diagonal[ring]
                self._blocks[T, S] = (nt >= ns, L, np.fft.fft(vals, axis=-1))

    def matvec(self, x: np.ndarray) -> np.ndarray:
        g = self.grid
        x = np.asarray(x, dtype=complex)
        y = np.zeros(g.size, dtype=complex)
        xs = [x[g.ring_offset[sr[0]]:g.ring_offset[sr[-1] + 1]].reshape(len(sr), -1) for sr in self._shells]
        spectra = {}
        for T, tr in enumerate(self._shells):
            nt = int(g.ring_n[tr[0]])
            acc = np.zeros((len(tr), nt), dtype=complex)
            for S, sr in enumerate(self._shells):
                up, L, G = self._blocks[T, S]
                if up:
                    key = (S, 1)
                    if key not in spectra:
                        spectra[key] = np.fft.fft(xs[S], axis=-1)
                    Y = np.fft.ifft(np.einsum("tsln,sn->tln", G, spectra[key]), axis=-1)
                    acc += Y.transpose(0, 2, 1).reshape(len(tr), nt)
                else:
                    key = (S, L)
                    if key not in spectra:
                        xr = xs[S].reshape(len(sr), nt, L).transpose(0, 2, 1)
                        spectra[key] = np.fft.fft(xr, axis=-1)
                    acc += np.fft.ifft(np.einsum("tsln,sln->tn", G, spectra[key]), axis=-1)
            y[g.ring_offset[tr[0]]:g.ring_offset[tr[-1] + 1]] = acc.ravel()
        return y

    def dense(self) -> np.ndarray:
        z = self.grid.centers
        K = kernel_of_product(z[:, None] * np.conj(z)[None, :], self.alpha)
        np.fill_diagonal(K, self.diagonal[self.grid.ring_of_cell])
        return K


def dense_matvec(grid: PolarGrid, alpha: float, x: np.ndarray, chunk: int = 512) -> np.ndarray:
    """Entry-by-entry ``K x`` in row chunks; the O(N^2) reference path."""
    z = grid.centers
    diag = _ring_diagonal(grid, alpha)[grid.ring_of_cell]
    x = np.asarray(x, dtype=complex)
    out = np.empty(grid.size, dtype=complex)
    for s in range(0, grid.size, chunk):
        rows = slice(s, min(s + chunk, grid.size))
        K = kernel_of_product(z[rows, None] * np.conj(z)[None, :], alpha)
        i = np.arange(rows.start, rows.stop)
        K[i - s, i] = diag[i]
        out[rows] = K @ x
    return out


_operator_cache: dict = {}


def kernel_operator(grid: PolarGrid, alpha: float) -> KernelOperator:
    key = (grid, float(alpha))
    op = _operator_cache.get(key)
    if op is None:
        if len(_operator_cache) > 8:
            _operator_cache.clear()
        op = _operator_cache[key] = KernelOperator(grid, float(alpha))
    return op


def apply_K(alpha: float, f: GridFunction, dense: bool = False) -> GridFunction:
    """``(K_alpha f)(z_i) = sum_j f(z_j) kernel(z_i, z_j) |cell_j|``."""
    x = f.values * f.grid.areas
    if dense:
        return GridFunction(f.grid, dense_matvec(f.grid, alpha, x))
    return GridFunction(f.grid, kernel_operator(f.grid, alpha).matvec(x))


def apply_K_sigma(alpha: float, f: GridFunction, sigma_masses: np.ndarray) -> GridFunction:
    """``K_alpha(sigma f)`` with the measure ``sigma dA`` discretized by cell masses."""
    return GridFunction(f.grid, kernel_operator(f.grid, alpha).matvec(f.values * sigma_masses))
