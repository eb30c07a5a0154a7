"""Independent reference implementations used only by the tests.

None of these import from the package's numerical internals: they restate
the physics from the definitions with different algorithms (fixed-rule
composite Gauss-Legendre on a Cartesian or spherical grid, naive pairing
recursion, nonnegative least squares, mpmath arithmetic).
"""

from __future__ import annotations

import itertools
import math

import mpmath
import numpy as np
from scipy import optimize, stats


# ---------------------------------------------------------------- kernels


def kernel_mp(kind: str, k, mass=1.0, hbar=1.0, kT=0.5, dps=40):
    """Mode variance at 40 digits."""
    with mpmath.workdps(dps):
        k, m, h, t = (mpmath.mpf(v) for v in (k, mass, hbar, kT))
        w = mpmath.sqrt(k * k + m * m)
        if kind == "vacuum":
            return h / (2 * w)
        if kind == "classical":
            return t / (w * w)
        return h / (2 * w) * mpmath.coth(h * w / (2 * t))


def S_numpy(kind: str, k, mass=1.0, hbar=1.0, kT=0.5):
    w = np.sqrt(np.asarray(k, float) ** 2 + mass**2)
    if kind == "vacuum":
        return hbar / (2 * w)
    if kind == "classical":
        return kT / w**2
    return hbar / (2 * w) / np.tanh(hbar * w / (2 * kT))


# ---------------------------------------------------------------- packets


def packet_ft(center, width, carrier, amplitude, kvec):
    """f~(k) of A exp(-|x-x0|^2/2s^2) cos(k0.x), written out from Euler's formula."""
    kvec = np.asarray(kvec, float)
    x0 = np.asarray(center, float)
    k0 = np.asarray(carrier, float)
    d = x0.size
    g = lambda q: (2 * math.pi * width**2) ** (d / 2) * np.exp(-0.5 * width**2 * np.sum(q * q, -1))
    plus = g(kvec - k0) * np.exp(-1j * ((kvec - k0) @ x0))
    minus = g(kvec + k0) * np.exp(-1j * ((kvec + k0) @ x0))
    return 0.5 * amplitude * (plus + minus)


def _gl_panels(a, b, panels, order=24):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    lo, hi = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (hi - lo) * x + 0.5 * (hi + lo)).ravel()
    weights = (0.5 * (hi - lo) * w).ravel()
    return nodes, weights


def spectral_integral_grid(g, f, S, mass=1.0, dt=0.0, panels=400, kmax=None):
    """int d^dk/(2pi)^d g~* f~ S(|k|) e^{-i omega dt} on a fixed grid.

    ``g`` and ``f`` are (center, width, carrier, amplitude) tuples.  d = 1 uses
    a Cartesian composite rule over [-K, K]; d = 2, 3 use polar / spherical
    coordinates with Gauss-Legendre in r and cos(theta) and a trapezoid rule
    (spectrally accurate for periodic integrands) in the azimuth.
    """
    d = len(g[0])
    if kmax is None:
        kmax = max(np.linalg.norm(g[2]) + 14 / g[1], np.linalg.norm(f[2]) + 14 / f[1])

    def body(kvec):
        kabs = np.linalg.norm(kvec, axis=-1)
        om = np.sqrt(kabs**2 + mass**2)
        return np.conj(packet_ft(*g, kvec)) * packet_ft(*f, kvec) * S(kabs) * np.exp(-1j * om * dt)

    if d == 1:
        k, w = _gl_panels(-kmax, kmax, panels)
        return np.sum(w * body(k[:, None])) / (2 * math.pi)
    r, wr = _gl_panels(0.0, kmax, panels)
    nphi = 128
    phi = 2 * math.pi * np.arange(nphi) / nphi
    ct, wt = np.polynomial.legendre.leggauss(64)
    st = np.sqrt(1 - ct**2)
    total = 0j
    for lo in range(0, r.size, 64):
        rr, ww = r[lo : lo + 64], wr[lo : lo + 64]
        if d == 2:
            kv = np.stack([rr[:, None] * np.cos(phi), rr[:, None] * np.sin(phi)], -1)
            shell = body(kv).sum(axis=1) * (2 * math.pi / nphi)
            total += np.sum(ww * rr * shell) / (2 * math.pi) ** 2
        else:
            R = rr[:, None, None]
            kv = np.stack(
                [R * st[None, :, None] * np.cos(phi), R * st[None, :, None] * np.sin(phi),
                 R * ct[None, :, None] * np.ones_like(phi)],
                -1,
            )
            shell = (body(kv) * wt[None, :, None]).sum(axis=(1, 2)) * (2 * math.pi / nphi)
            total += np.sum(ww * rr * rr * shell) / (2 * math.pi) ** 3
    return total


def lattice_variance(center, width, carrier, amplitude, S, N, a):
    """Exact variance of a^d sum_x Phi(x) f(x) for the periodic 1D lattice field.

    Cov Phi(x) Phi(y) = (1/L) sum_k S(k) e^{ik(x-y)}, hence
    Var = (1/L) sum_k S(k) |a sum_x f(x) e^{-ikx}|^2.
    """
    x = a * np.arange(N)
    fx = amplitude * np.exp(-((x - center[0]) ** 2) / (2 * width**2)) * np.cos(carrier[0] * x)
    k = 2 * math.pi * np.fft.fftfreq(N, d=a)
    F = a * np.fft.fft(fx)
    return float(np.sum(S(np.abs(k)) * np.abs(F) ** 2) / (N * a))


# ---------------------------------------------------------------- pairings


def all_pairings(items):
    """Every perfect matching of a list of positions, by plain recursion."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for i in range(len(rest)):
        for tail in all_pairings(rest[:i] + rest[i + 1 :]):
            yield [(first, rest[i])] + tail


def brute_moment(C, indices):
    """Isserlis sum over all (n-1)!! matchings of positions, no memoization."""
    idx = list(indices)
    if len(idx) % 2:
        return 0 * C[0][0]
    total = 0 * C[0][0]
    for matching in all_pairings(list(range(len(idx)))):
        term = 1 + 0 * C[0][0]
        for p, q in matching:
            term = term * C[idx[p]][idx[q]]
        total = total + term
    return total


# ---------------------------------------------------------------- Bell


def joint_matrix():
    """Rows (i, j, a, b), columns (a1, a2, b1, b2), outcome order (+1, -1)."""
    out = (1, -1)
    rows = []
    for i, j, ia, ib in itertools.product(range(2), repeat=4):
        rows.append(
            [
                1.0 if (a1, a2)[i] == out[ia] and (b1, b2)[j] == out[ib] else 0.0
                for a1, a2, b1, b2 in itertools.product(out, repeat=4)
            ]
        )
    return np.array(rows)


def nnls_feasible(tables, tol=1e-9):
    """Feasible iff the nonnegative least-squares residual of [A; 1] q = [p; 1] vanishes."""
    A = joint_matrix()
    system = np.vstack([A, np.ones(16)])
    target = np.concatenate([np.asarray(tables, float).reshape(-1), [1.0]])
    q, _ = optimize.nnls(system, target)
    return float(np.abs(system @ q - target).max()) <= tol, q


def orthant_sign_correlation(rho):
    """E[sgn X sgn Y] for a standard bivariate normal, via the orthant probability."""
    if abs(rho) == 1:
        return float(np.sign(rho))
    p_pp = stats.multivariate_normal(mean=[0, 0], cov=[[1, rho], [rho, 1]]).cdf([0, 0])
    return 4 * p_pp - 1


def vertex_feasible(tables, tol=1e-9):
    """Exhaustive basic-solution check for {q >= 0, A q = p, sum q = 1}.

    By Caratheodory a solution exists iff one exists on some set of linearly
    independent columns of the rank-9 system; every 9-column subset is tried.
    """
    A = np.vstack([joint_matrix(), np.ones(16)])
    b = np.concatenate([np.asarray(tables, float).reshape(-1), [1.0]])
    rank = np.linalg.matrix_rank(A)
    for cols in itertools.combinations(range(16), rank):
        sub = A[:, cols]
        if np.linalg.matrix_rank(sub) < rank:
            continue
        x, *_ = np.linalg.lstsq(sub, b, rcond=None)
        if x.min() >= -tol and np.abs(sub @ x - b).max() <= tol:
            q = np.zeros(16)
            q[list(cols)] = np.clip(x, 0, None)
            return True, q
    return False, None


def chsh_max_from_tables(tables):
    """Largest of the eight CHSH forms, from correlators written out by hand."""
    t = np.asarray(tables, float)
    E = t[:, :, 0, 0] + t[:, :, 1, 1] - t[:, :, 0, 1] - t[:, :, 1, 0]
    best = -np.inf
    for odd in range(4):
        for sign in (1, -1):
            s = np.ones((2, 2))
            s.flat[odd] = -1
            best = max(best, sign * float(np.sum(s * E)))
    return best
