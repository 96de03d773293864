"""Pure-Python row sweeps for the implicit lattice updates.

Both functions return ``(new_row, sweeps)``; ``sweeps = -1`` signals that the
fixed point was not reached or an update left the domain of the map.
"""

from __future__ import annotations

import math

import numpy as np


def toda_hirota_row(u0, u1, a2: float, tol: float = 1e-12, max_sweeps: int = 100, twist: float = 0.0):
    """Solve ``exp(u0-u1) - exp(u1-u2) = a2 (exp(u2[n-1]-u1) - exp(u1-u0[n+1]))`` for ``u2``.

    The row is swept left to right (``u2[n-1]`` is the implicit neighbour) and
    repeated around the ring until the largest update is below ``tol``.
    ``twist`` is the jump ``u[n + N] - u[n]`` of a ring carrying net strain.
    """
    n_sites = len(u1)
    u0 = [float(x) for x in u0]
    u1 = [float(x) for x in u1]
    u2 = [2 * b - a for a, b in zip(u0, u1)]
    for sweep in range(1, max_sweeps + 1):
        change = 0.0
        for n in range(n_sites):
            left = u2[n - 1] - (twist if n == 0 else 0.0)
            right = u0[n + 1] if n < n_sites - 1 else u0[0] + twist
            arg = math.exp(u0[n] - u1[n]) - a2 * math.exp(left - u1[n]) + a2 * math.exp(u1[n] - right)
            if arg <= 0.0:
                return np.array(u2), -1
            new = u1[n] - math.log(arg)
            change = max(change, abs(new - u2[n]))
            u2[n] = new
        if change < tol:
            return np.array(u2), sweep
    return np.array(u2), -1


def hietarinta_row(u0, e1: float, e2: float, o1: float, o2: float, tol: float = 1e-12, max_sweeps: int = 100):
    """Advance one row of the Hietarinta map by corner solves ``u[n+1, m+1]``."""
    n_sites = len(u0)
    u0 = [float(x) for x in u0]
    u1 = list(u0)
    for sweep in range(1, max_sweeps + 1):
        change = 0.0
        for n in range(n_sites):
            k = (n + 1) % n_sites
            u, u10, u01 = u0[n], u0[k], u1[n]
            q = (1 + e2 * u10) / (1 + o1 * u10) * (1 + o2 * u01) / (1 + e1 * u01) * (1 + e1 * u) / (1 + e2 * u)
            den = o2 - q * o1
            if den == 0.0:
                return np.array(u1), -1
            new = (q - 1) / den
            change = max(change, abs(new - u1[k]))
            u1[k] = new
        if change < tol:
            return np.array(u1), sweep
    return np.array(u1), -1
