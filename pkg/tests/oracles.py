"""Brute-force reference implementations used as test oracles.

Every routine loops over nodes explicitly and shares no code with the fast
paths beyond ``GridSpec`` coordinates.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import linalg


def ball_offsets(n: int, r_cells: float) -> list[tuple[int, ...]]:
    """Integer offsets with Euclidean length at most ``r_cells`` (ties included)."""
    m = int(math.floor(r_cells + 1e-9))
    out = []
    for off in itertools.product(range(-m, m + 1), repeat=n):
        if sum(o * o for o in off) <= r_cells * r_cells + 1e-9:
            out.append(off)
    return out


def _shift(idx, off, N):
    return tuple((i + o) % N for i, o in zip(idx, off))


def nodes(N: int, n: int):
    return itertools.product(range(N), repeat=n)


def circular_convolution(f: np.ndarray, k_centered: np.ndarray, h: float) -> np.ndarray:
    """``out[i] = sum_j k(x_i - y_j) f[j] h^n`` with the kernel origin at index ``N//2``."""
    N, n = f.shape[0], f.ndim
    out = np.zeros_like(f, dtype=float)
    for i in nodes(N, n):
        s = 0.0
        for j in nodes(N, n):
            kidx = tuple((a - b + N // 2) % N for a, b in zip(i, j))
            s += k_centered[kidx] * f[j]
        out[i] = s * h**n
    return out


def ball_mean(f: np.ndarray, r_cells: float) -> np.ndarray:
    N, n = f.shape[0], f.ndim
    offs = ball_offsets(n, r_cells)
    out = np.zeros_like(f, dtype=float)
    for i in nodes(N, n):
        out[i] = sum(f[_shift(i, o, N)] for o in offs) / len(offs)
    return out


def morrey_norm(f: np.ndarray, h: float, p: float, lam: float, radii: list[float]) -> float:
    N, n = f.shape[0], f.ndim
    best = 0.0
    for r in radii:
        offs = ball_offsets(n, r / h)
        m = len(offs) * h**n
        for i in nodes(N, n):
            integral = sum(abs(f[_shift(i, o, N)]) ** p for o in offs) * h**n
            best = max(best, m ** (-lam / (p * n)) * integral ** (1 / p))
    return best


def bmo_norm(f: np.ndarray, h: float, radii: list[float]) -> float:
    N, n = f.shape[0], f.ndim
    best = 0.0
    for r in radii:
        offs = ball_offsets(n, r / h)
        for i in nodes(N, n):
            vals = [f[_shift(i, o, N)] for o in offs]
            mean = sum(vals) / len(vals)
            best = max(best, sum(abs(v - mean) for v in vals) / len(vals))
    return best


def weak_lp_norm(f: np.ndarray, h: float, p: float) -> float:
    """``max_k a_k (#{|f| >= a_k} h^n)^{1/p}`` over the distinct magnitudes ``a_k``."""
    a = np.abs(f).ravel()
    best = 0.0
    for s in set(a.tolist()):
        count = sum(1 for v in a if v >= s)
        best = max(best, s * (count * h ** f.ndim) ** (1 / p))
    return best


def dft_laplacian(N: int, L: float) -> np.ndarray:
    """Dense periodic spectral ``-d^2/dx^2`` built from the explicit DFT matrix (n = 1)."""
    k = 2 * np.pi * np.fft.fftfreq(N, d=L / N)
    F = np.exp(-2j * np.pi * np.outer(np.arange(N), np.arange(N)) / N)
    return np.real(np.conj(F).T @ np.diag(k**2) @ F) / N


def heat_matrix(N: int, L: float, t: float) -> np.ndarray:
    return linalg.expm(-t * dft_laplacian(N, L))


def schrodinger_matrix(N: int, L: float, V: np.ndarray, t: float) -> np.ndarray:
    return linalg.expm(-t * (dft_laplacian(N, L) + np.diag(V)))


def sharp_maximal_heat(f: np.ndarray, L: float, radii: list[float]) -> np.ndarray:
    """``max over r, centers c with |c - x| <= r`` of ``mean_{B(c, r)} |f - e^{-r^2 L} f|`` (n = 1, periodic)."""
    N = f.shape[0]
    h = L / N
    out = np.zeros(N)
    for r in radii:
        g = np.abs(f - heat_matrix(N, L, r * r) @ f)
        offs = ball_offsets(1, r / h)
        D = np.array([sum(g[(c + o[0]) % N] for o in offs) / len(offs) for c in range(N)])
        for x in range(N):
            for o in offs:
                out[x] = max(out[x], D[(x + o[0]) % N])
    return out
