"""Backend dispatch for the hot lattice-stepping loops.

The compiled extension is preferred; a vectorized numpy fallback with the
identical operation order is used when the build is unavailable.  The
selected backend is reported in ``BACKEND``.
"""

from __future__ import annotations

import numpy as np

try:  # pragma: no cover - exercised indirectly via BACKEND
    from . import _kernels

    BACKEND = "compiled"
except ImportError:  # pragma: no cover
    _kernels = None
    BACKEND = "numpy"

__all__ = ["BACKEND", "advance_etl", "advance_kg"]


def _lap(v):
    return (
        np.roll(v, 1, axis=0)
        + np.roll(v, -1, axis=0)
        + np.roll(v, 1, axis=1)
        + np.roll(v, -1, axis=1)
        - 4.0 * v
    )


def _advance_etl_np(Q, P, dt, nsteps, w, alpha, beta):
    for _ in range(nsteps):
        for wc in w:
            h = wc * dt
            hh = 0.5 * h
            P -= hh * (Q + alpha * Q * Q + beta * Q * Q * Q)
            Q -= h * _lap(P)
            P -= hh * (Q + alpha * Q * Q + beta * Q * Q * Q)


def _advance_kg_np(Q, P, dt, nsteps, w, m2, beta):
    for _ in range(nsteps):
        for wc in w:
            h = wc * dt
            hh = 0.5 * h
            P += hh * (_lap(Q) - m2 * Q - beta * Q * Q * Q)
            Q += h * P
            P += hh * (_lap(Q) - m2 * Q - beta * Q * Q * Q)


def advance_etl(Q, P, dt, nsteps, w, alpha, beta):
    """Advance the transversal lattice in place by nsteps composed KDK steps."""
    if _kernels is not None:
        _kernels.advance_etl(Q, P, float(dt), int(nsteps), w, float(alpha), float(beta))
    else:
        _advance_etl_np(Q, P, float(dt), int(nsteps), w, float(alpha), float(beta))


def advance_kg(Q, P, dt, nsteps, w, m2, beta):
    """Advance the Klein-Gordon lattice in place by nsteps composed KDK steps."""
    if _kernels is not None:
        _kernels.advance_kg(Q, P, float(dt), int(nsteps), w, float(m2), float(beta))
    else:
        _advance_kg_np(Q, P, float(dt), int(nsteps), w, float(m2), float(beta))
