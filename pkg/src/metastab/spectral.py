"""Fourier conventions, weighted mode norms, and discrete symbol calculus.

Two grid families are used throughout the package:

* *lattice* grids hold samples of Z^2-periodic lattice states on
  (2*N1+1) x (2*N2+1) sites and are transformed with the unitary DFT
  (prefactor 1/sqrt(N) in both directions), so Parseval holds with
  constant one;
* *torus* grids hold samples of [-1,1]^2-periodic fields written as

      f(y) = 1/2 * sum_h c_h exp(i*pi*(h1*y1 + h2*y2)),

  sampled at y = 2*m/n, m = 0..n-1 per axis.

Mode indices are signed integers stored in FFT wrap-around order along
each axis; ``signed_modes`` gives the index vector for one axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GridField2D",
    "TorusGrid",
    "WeightedNormParams",
    "delta1_apply",
    "delta1_symbol",
    "delta1_symbol_table",
    "fold_coeffs",
    "forward_transform",
    "galerkin_project",
    "inverse_transform",
    "mode_radii",
    "signed_modes",
    "translate_coeffs",
    "weighted_norm",
]


def signed_modes(n):
    """Signed mode indices of an n-point axis in FFT storage order.

    For n = 2*N+1 this is [0, 1, ..., N, -N, ..., -1]; for even n the
    unpaired Nyquist index -n/2 is included once.
    """
    return np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)


def mode_radii(n1, n2):
    """Euclidean mode radius |h| on an (n1, n2) grid, FFT order."""
    h1 = signed_modes(n1)[:, None].astype(float)
    h2 = signed_modes(n2)[None, :].astype(float)
    return np.hypot(h1, h2)


@dataclass
class GridField2D:
    """A 2D periodic field, either sampled values or Fourier data.

    Parameters
    ----------
    values : ndarray
        2D array, real samples or complex coefficients (FFT order).
    domain : str
        "lattice" for Z^2-periodic site data, "torus" for [-1,1]^2 fields.
    spectral : bool
        Whether `values` holds Fourier data instead of point samples.
    """

    values: np.ndarray
    domain: str = "torus"
    spectral: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.ndim != 2:
            raise ValueError("GridField2D requires a 2D array")
        if self.domain not in ("lattice", "torus"):
            raise ValueError(f"unknown domain tag {self.domain!r}")

    @property
    def shape(self):
        return self.values.shape

    def copy(self):
        return GridField2D(self.values.copy(), self.domain, self.spectral)


def _require_odd(shape):
    if shape[0] % 2 == 0 or shape[1] % 2 == 0:
        raise ValueError(f"lattice grids must have odd extents, got {shape}")


def forward_transform(field):
    """Analysis transform of a GridField2D; returns a spectral GridField2D.

    Lattice fields use the unitary DFT; torus fields return the series
    coefficients c_h of f = 1/2 * sum_h c_h e^{i pi h.y}.
    """
    if field.spectral:
        raise ValueError("field is already spectral")
    v = field.values
    if field.domain == "lattice":
        _require_odd(v.shape)
        out = np.fft.fft2(v, norm="ortho")
    else:
        out = np.fft.fft2(v) * (2.0 / (v.shape[0] * v.shape[1]))
    return GridField2D(out, field.domain, spectral=True)


def inverse_transform(field):
    """Synthesis transform; inverse of :func:`forward_transform`."""
    if not field.spectral:
        raise ValueError("field is not spectral")
    c = field.values
    if field.domain == "lattice":
        _require_odd(c.shape)
        out = np.fft.ifft2(c, norm="ortho")
    else:
        out = np.fft.ifft2(c) * (c.shape[0] * c.shape[1] / 2.0)
    return GridField2D(out, field.domain, spectral=False)


def fold_coeffs(c, m1, m2):
    """Coherently re-index torus coefficients onto an (m1, m2) mode set.

    Each target mode collects the *sum* of all source coefficients whose
    signed index is congruent to it modulo (m1, m2).  With m >= n this is
    zero-padding; with m < n it folds aliases coherently.  Complexity is
    O(n1*n2) independent of the target size.
    """
    c = np.asarray(c, dtype=complex)
    n1, n2 = c.shape
    r1 = np.mod(signed_modes(n1), m1)
    r2 = np.mod(signed_modes(n2), m2)
    out = np.zeros((m1, m2), dtype=complex)
    np.add.at(out, (r1[:, None], r2[None, :]), c)
    return out


def translate_coeffs(c, a1, a2=0.0):
    """Coefficients of f(y1 - a1, y2 - a2) given those of f."""
    c = np.asarray(c, dtype=complex)
    h1 = signed_modes(c.shape[0])[:, None]
    h2 = signed_modes(c.shape[1])[None, :]
    return c * np.exp(-1j * np.pi * (h1 * a1 + h2 * a2))


class TorusGrid:
    """Uniform n1 x n2 sampling grid for [-1,1]^2-periodic fields.

    Holds the signed mode tables and the standard first-derivative /
    anti-derivative symbols; all transforms follow the half-sum series
    convention (see module docstring).
    """

    def __init__(self, n1, n2):
        if n1 < 2 or n2 < 1:
            raise ValueError(f"torus grid extents too small: {(n1, n2)}")
        self.n1 = int(n1)
        self.n2 = int(n2)
        self.h1 = signed_modes(self.n1)[:, None].astype(float)
        self.h2 = signed_modes(self.n2)[None, :].astype(float)
        self.y1 = 2.0 * np.arange(self.n1) / self.n1
        self.y2 = 2.0 * np.arange(self.n2) / self.n2
        # d/dy1 symbol and its (mode-zero-safe) inverse
        self.d1 = 1j * np.pi * self.h1 * np.ones((1, self.n2))
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = np.where(self.h1 != 0.0, 1.0 / (1j * np.pi * self.h1), 0.0)
        self.d1inv = inv * np.ones((1, self.n2))
        self.d2 = 1j * np.pi * self.h2 * np.ones((self.n1, 1))

    @property
    def shape(self):
        return (self.n1, self.n2)

    def coeffs(self, f):
        """Series coefficients of sampled values f."""
        return np.fft.fft2(np.asarray(f)) * (2.0 / (self.n1 * self.n2))

    def field(self, c, real=True):
        """Point samples from coefficients c; real part by default."""
        v = np.fft.ifft2(np.asarray(c, dtype=complex)) * (self.n1 * self.n2 / 2.0)
        return v.real if real else v

    def integral(self, f):
        """Integral of sampled values over [-1,1]^2 (trapezoid = 4*mean)."""
        return 4.0 * float(np.mean(np.asarray(f).real)) if np.isrealobj(f) \
            else 4.0 * complex(np.mean(f))

    def l2sq(self, c):
        """Parseval form of the squared L2 norm, int |f|^2 dy = sum |c_h|^2."""
        c = np.asarray(c)
        return float(np.sum(np.abs(c) ** 2))

    def pad(self, c, factor=2):
        """Coefficients embedded on a grid enlarged by `factor` per axis."""
        return fold_coeffs(c, factor * self.n1, factor * self.n2)

    def dealias_mask(self, rule):
        """Boolean keep-mask for products: "quadratic" keeps |h1| <= n1/3
        (2/3-rule), "cubic" keeps |h1| <= n1/4 (1/2-rule); axis-1 only."""
        frac = {"quadratic": 3.0, "cubic": 4.0}[rule]
        return (np.abs(self.h1) <= self.n1 / frac) * np.ones((1, self.n2), dtype=bool)

    def dealias_mask_2d(self, rule):
        """Keep-mask limiting both axes (for genuinely 2D nonlinearities)."""
        frac = {"quadratic": 3.0, "cubic": 4.0}[rule]
        return (np.abs(self.h1) <= self.n1 / frac) & (np.abs(self.h2) <= self.n2 / frac)


@dataclass(frozen=True)
class WeightedNormParams:
    """Exponential-polynomial mode weight: |v_n|^2 e^{2 rho |n|} |n|^{2 s}."""

    rho: float = 1.0
    s: float = 1.0

    def __post_init__(self):
        if self.rho < 0.0 or self.s < 0.0:
            raise ValueError("weight parameters must be nonnegative")


def _spectral_values(obj):
    if isinstance(obj, GridField2D):
        if not obj.spectral:
            raise ValueError("expected spectral data; apply forward_transform first")
        return obj.values
    return np.asarray(obj)


def weighted_norm(spectral, w):
    """Weighted l2 norm of Fourier data, zero mode excluded.

    norm^2 = sum_{n != 0} |v_n|^2 * exp(2*rho*|n|) * |n|^(2*s)
    with |n| the Euclidean mode radius.

    Parameters
    ----------
    spectral : GridField2D or ndarray
        Fourier data in FFT order.
    w : WeightedNormParams
    """
    c = _spectral_values(spectral)
    r = mode_radii(*c.shape)
    mask = r > 0.0
    rm = r[mask]
    total = np.sum(np.abs(c[mask]) ** 2 * np.exp(2.0 * w.rho * rm) * rm ** (2.0 * w.s))
    return float(np.sqrt(total))


def galerkin_project(spectral, M):
    """Zero all Fourier modes with Euclidean radius |n| > M.

    Accepts and returns either a spectral GridField2D or a raw array.
    Idempotent and norm-contractive.
    """
    if M < 0:
        raise ValueError("cutoff must be nonnegative")
    if isinstance(spectral, GridField2D):
        out = spectral.copy()
        out.values = galerkin_project(out.values, M)
        return out
    c = np.array(spectral, dtype=complex)
    c[mode_radii(*c.shape) > M] = 0.0
    return c


def delta1_symbol(k, sizes):
    """Eigenvalue of the nearest-neighbour Laplacian at signed mode k.

    Delta_1 e_k = -(4 sin^2(pi k1/n1) + 4 sin^2(pi k2/n2)) e_k on an
    (n1, n2) = (2*N1+1, 2*N2+1) lattice; `sizes` is (N1, N2).
    """
    N1, N2 = sizes
    k1, k2 = k
    if abs(k1) > N1 or abs(k2) > N2:
        raise ValueError(f"mode {k} out of range for (N1, N2) = {sizes}")
    n1, n2 = 2 * N1 + 1, 2 * N2 + 1
    return -4.0 * (np.sin(np.pi * k1 / n1) ** 2 + np.sin(np.pi * k2 / n2) ** 2)


def delta1_symbol_table(N1, N2):
    """All Delta_1 eigenvalues on the (2*N1+1, 2*N2+1) lattice, FFT order."""
    n1, n2 = 2 * N1 + 1, 2 * N2 + 1
    s1 = np.sin(np.pi * signed_modes(n1) / n1) ** 2
    s2 = np.sin(np.pi * signed_modes(n2) / n2) ** 2
    return -4.0 * (s1[:, None] + s2[None, :])


def delta1_apply(values):
    """Nearest-neighbour (5-point) periodic Laplacian of a sample array."""
    v = np.asarray(values)
    return (
        np.roll(v, 1, axis=0)
        + np.roll(v, -1, axis=0)
        + np.roll(v, 1, axis=1)
        + np.roll(v, -1, axis=1)
        - 4.0 * v
    )
