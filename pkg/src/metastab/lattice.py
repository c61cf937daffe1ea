"""Lattice models, symplectic integrators, and mode-energy spectra.

Two Hamiltonian site models on periodic (2*N1+1) x (2*N2+1) grids:

* ``etl`` (electrical transmission lattice):
      H = sum_j [ -P (Delta_1 P)/2 + Q^2/2 + alpha Q^3/3 + beta Q^4/4 ],
      Qdot = -Delta_1 P,   Pdot = -Q - alpha Q^2 - beta Q^3;
* ``kg`` (Klein-Gordon):
      H = sum_j [ P^2/2 + |grad Q|^2-type coupling via -Q(Delta_1 Q)/2
                  + m^2 Q^2/2 + beta Q^4/4 ],
      Qdot = P,   Pdot = Delta_1 Q - m^2 Q - beta Q^3.

Both split into two exactly solvable pieces, so kick-drift-kick leapfrog
and its fourth-order triple-jump composition are exactly time reversible.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .spectral import delta1_apply, delta1_symbol_table, signed_modes

__all__ = [
    "BlowupError",
    "LatticeParams",
    "LatticeState",
    "ModeSpectrum",
    "SCHEMES",
    "advance_to",
    "default_dt",
    "etl_rhs",
    "kg_rhs",
    "mode_energies",
    "quadratic_energy",
    "save_state_csv",
    "single_mode_data",
    "step_leapfrog",
    "total_energy",
]

# KG step cap; the carrier frequency is ~sqrt(m^2 + 8), and the triple-jump
# composition needs roughly omega*dt <= 0.03 to hold energy drift near 1e-9
# over 10^5-step runs.
_DT_KG_CAP = 0.01
# ETL acoustic band is O(mu), so mu/10 resolves the fastest mode comfortably.
_DT_ETL_FACTOR = 0.1

# Fourth-order triple jump: w1, 1 - 2*w1, w1.
_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
SCHEMES = {
    "leapfrog": np.array([1.0]),
    "yoshida4": np.array([_W1, 1.0 - 2.0 * _W1, _W1]),
}


class BlowupError(RuntimeError):
    """Raised when an integration produces non-finite site values."""

    def __init__(self, t):
        super().__init__(f"non-finite lattice state at t = {t:.6g}")
        self.t = t


@dataclass(frozen=True)
class LatticeParams:
    """Static description of one lattice run."""

    model: str
    N1: int
    N2: int
    alpha: float = 0.0
    beta: float = 0.0
    m: float = 1.0

    def __post_init__(self):
        if self.model not in ("etl", "kg"):
            raise ValueError(f"unknown model {self.model!r}")
        if not (1 <= self.N1 <= self.N2):
            raise ValueError(f"need 1 <= N1 <= N2, got ({self.N1}, {self.N2})")
        if self.m <= 0.0:
            raise ValueError("mass must be positive")

    @classmethod
    def from_aspect(cls, model, N1, sigma, alpha=0.0, beta=0.0, m=1.0):
        """Choose N2 so that (N1 + 1/2)^sigma is realized as N2 + 1/2
        up to integer rounding."""
        N2 = int(round((N1 + 0.5) ** sigma - 0.5))
        return cls(model, N1, N2, alpha, beta, m)

    @property
    def shape(self):
        return (2 * self.N1 + 1, 2 * self.N2 + 1)

    @property
    def nsites(self):
        return (2 * self.N1 + 1) * (2 * self.N2 + 1)

    @property
    def mu(self):
        return 2.0 / (2 * self.N1 + 1)

    @property
    def sigma(self):
        """Realized anisotropy exponent: (N1+1/2)^sigma = N2+1/2 exactly."""
        return np.log(self.N2 + 0.5) / np.log(self.N1 + 0.5)

    def kappa(self, k1, k2):
        """Specific mode vector kappa(k) = (k1/(N1+1/2), k2/(N2+1/2))."""
        return (k1 / (self.N1 + 0.5), k2 / (self.N2 + 0.5))


@functools.lru_cache(maxsize=32)
def _omega2(params):
    """Squared mode frequencies, FFT order: -Delta_1 symbol (+ m^2 for kg)."""
    w2 = -delta1_symbol_table(params.N1, params.N2)
    if params.model == "kg":
        w2 = w2 + params.m**2
    w2.setflags(write=False)
    return w2


@dataclass
class LatticeState:
    """Site data (Q, P) at time t; arrays are (2N1+1) x (2N2+1) floats."""

    Q: np.ndarray
    P: np.ndarray
    t: float = 0.0

    def copy(self):
        return LatticeState(self.Q.copy(), self.P.copy(), self.t)


def etl_rhs(state, params):
    """Right-hand side (Qdot, Pdot) of the transversal lattice."""
    if params.model != "etl":
        raise ValueError("etl_rhs called with non-etl params")
    Q, P = state.Q, state.P
    dQ = -delta1_apply(P)
    dP = -(Q + params.alpha * Q * Q + params.beta * Q * Q * Q)
    return dQ, dP


def kg_rhs(state, params):
    """Right-hand side (Qdot, Pdot) of the Klein-Gordon lattice."""
    if params.model != "kg":
        raise ValueError("kg_rhs called with non-kg params")
    Q, P = state.Q, state.P
    dQ = P.copy()
    dP = delta1_apply(Q) - params.m**2 * Q - params.beta * Q * Q * Q
    return dQ, dP


def step_leapfrog(state, params, dt):
    """One kick-drift-kick step; returns a new LatticeState.

    Reference implementation (the chunked walks in :func:`advance_to` use
    the same operation order through the kernel backend).
    """
    out = state.copy()
    w = SCHEMES["leapfrog"]
    if params.model == "etl":
        kernels.advance_etl(out.Q, out.P, dt, 1, w, params.alpha, params.beta)
    else:
        kernels.advance_kg(out.Q, out.P, dt, 1, w, params.m**2, params.beta)
    out.t = state.t + dt
    if not (np.all(np.isfinite(out.Q)) and np.all(np.isfinite(out.P))):
        raise BlowupError(out.t)
    return out


def default_dt(params):
    """CLI-default integration step for the given model."""
    if params.model == "etl":
        return _DT_ETL_FACTOR * params.mu
    omega_max = float(np.sqrt(params.m**2 + 8.0))
    return min(_DT_KG_CAP, 1.0 / (4.0 * omega_max))


def advance_to(state, params, t_target, dt=None, scheme="yoshida4"):
    """Advance `state` in place to t_target with uniform steps.

    The step count is round((t_target - t)/dt) (at least one), and the
    effective step is adjusted so the interval is landed exactly, keeping
    run schedules deterministic.
    """
    if dt is None:
        dt = default_dt(params)
    span = t_target - state.t
    if span == 0.0:
        return state
    if span < 0.0:
        raise ValueError("cannot integrate backwards through advance_to")
    nsteps = max(1, int(round(span / dt)))
    dt_eff = span / nsteps
    w = SCHEMES[scheme]
    if params.model == "etl":
        kernels.advance_etl(state.Q, state.P, dt_eff, nsteps, w, params.alpha, params.beta)
    else:
        kernels.advance_kg(state.Q, state.P, dt_eff, nsteps, w, params.m**2, params.beta)
    state.t = t_target
    if not (np.all(np.isfinite(state.Q)) and np.all(np.isfinite(state.P))):
        raise BlowupError(state.t)
    return state


def total_energy(state, params):
    """Full Hamiltonian of the state."""
    Q, P = state.Q, state.P
    a, b = params.alpha, params.beta
    if params.model == "etl":
        kin = -0.5 * np.sum(P * delta1_apply(P))
        pot = np.sum(Q * Q / 2.0 + a * Q**3 / 3.0 + b * Q**4 / 4.0)
    else:
        kin = np.sum(P * P) / 2.0
        pot = -0.5 * np.sum(Q * delta1_apply(Q)) + np.sum(
            params.m**2 * Q * Q / 2.0 + b * Q**4 / 4.0
        )
    return float(kin + pot)


def quadratic_energy(state, params):
    """Harmonic part of the Hamiltonian (alpha = beta = 0 terms)."""
    quad = replace(params, alpha=0.0, beta=0.0)
    return total_energy(state, quad)


@dataclass
class ModeSpectrum:
    """Per-mode harmonic energies of a lattice state.

    ``energies`` is the signed-mode table E_k (FFT order); the folded
    accessors sum each sign orbit {(+-k1, +-k2)} once and attach the
    specific normalization E/((N1+1/2)(N2+1/2)).
    """

    energies: np.ndarray
    t: float
    params: LatticeParams
    _folded: np.ndarray = field(default=None, repr=False)

    @property
    def folded(self):
        """(N1+1) x (N2+1) table over k1, k2 >= 0, sign orbits summed."""
        if self._folded is None:
            N1, N2 = self.params.N1, self.params.N2
            E = self.energies
            F = E[: N1 + 1, : N2 + 1].copy()
            F[1:, :] += E[: -N1 - 1 : -1, : N2 + 1]
            F[:, 1:] += E[: N1 + 1, : -N2 - 1 : -1]
            F[1:, 1:] += E[: -N1 - 1 : -1, : -N2 - 1 : -1]
            self._folded = F
        return self._folded

    @property
    def specific(self):
        """Folded energies per specific mode, E/((N1+1/2)(N2+1/2))."""
        N1, N2 = self.params.N1, self.params.N2
        return self.folded / ((N1 + 0.5) * (N2 + 0.5))

    def table(self):
        """Flat folded table (k1, k2, kappa1, kappa2, specific energy).

        Row order: k1 = 0..N1 outer, k2 = 0..N2 inner.
        """
        N1, N2 = self.params.N1, self.params.N2
        k1 = np.repeat(np.arange(N1 + 1), N2 + 1)
        k2 = np.tile(np.arange(N2 + 1), N1 + 1)
        spec = self.specific.ravel()
        return k1, k2, k1 / (N1 + 0.5), k2 / (N2 + 0.5), spec

    def specific_at(self, k1, k2):
        return float(self.specific[k1, k2])


def mode_energies(state, params):
    """Harmonic energy per signed Fourier mode.

    etl:  E_k = (omega_k^2 |P_k|^2 + |Q_k|^2)/2,  omega_k^2 = -Delta_1 symbol;
    kg:   E_k = (|P_k|^2 + omega_k^2 |Q_k|^2)/2,  omega_k^2 = m^2 - Delta_1 symbol.
    Sums over all signed modes reproduce the harmonic energy exactly.
    """
    Qh = np.fft.fft2(state.Q, norm="ortho")
    Ph = np.fft.fft2(state.P, norm="ortho")
    w2 = _omega2(params)
    if params.model == "etl":
        E = 0.5 * (w2 * np.abs(Ph) ** 2 + np.abs(Qh) ** 2)
    else:
        E = 0.5 * (np.abs(Ph) ** 2 + w2 * np.abs(Qh) ** 2)
    return ModeSpectrum(E, state.t, params)


def single_mode_data(params, k0, C0, phase=0.0, energy_power=None):
    """Cosine-profile initial data carrying prescribed specific energy.

    Places Q_j = A cos(2 pi k01 j1/n1) cos(2 pi k02 j2/n2) (plus the
    conjugate momentum for nonzero `phase`, which moves the state along
    its harmonic orbit) with A chosen so the folded specific energy at k0
    equals C0 * mu^p.  The default power p is 4 for etl and 2 for kg.

    Parameters
    ----------
    params : LatticeParams
    k0 : (int, int)
        Seeded mode, 0 <= k0i <= Ni; (0, 0) is rejected for etl.
    C0 : float
        Specific-energy constant.
    phase : float
        Harmonic phase offset (0 gives P = 0).
    energy_power : float, optional
        Override for the mu exponent p.
    """
    k01, k02 = k0
    if not (0 <= k01 <= params.N1 and 0 <= k02 <= params.N2):
        raise ValueError(f"mode {k0} out of range")
    if params.model == "etl" and k01 == 0 and k02 == 0:
        raise ValueError("zero mode carries no etl oscillation")
    p = energy_power if energy_power is not None else (4.0 if params.model == "etl" else 2.0)
    n1, n2 = params.shape
    nzero = int(k01 == 0) + int(k02 == 0)
    target = C0 * params.mu**p
    A = np.sqrt(target / 2.0 ** (nzero - 1))
    w2 = _omega2(params)[k01, k02]
    omega = np.sqrt(w2)
    if params.model == "kg":
        A /= omega

    j1 = np.arange(n1)[:, None]
    j2 = np.arange(n2)[None, :]
    profile = np.cos(2.0 * np.pi * k01 * j1 / n1) * np.cos(2.0 * np.pi * k02 * j2 / n2)
    Q = A * np.cos(phase) * profile
    if phase == 0.0:
        P = np.zeros_like(Q)
    else:
        # Harmonic orbit: Qhat = C cos(phi) with Phat = -(C/omega) sin(phi)
        # for etl (Qhatdot = omega^2 Phat) and -(C omega) sin(phi) for kg.
        factor = -np.sin(phase) * (1.0 / omega if params.model == "etl" else omega)
        P = A * factor * profile
    return LatticeState(Q, np.ascontiguousarray(P), 0.0)


def save_state_csv(state, params, path):
    """Write site data as CSV with signed indices, j1 = -N1..N1 outer."""
    n1, n2 = params.shape
    o1 = np.argsort(signed_modes(n1))
    o2 = np.argsort(signed_modes(n2))
    j1 = signed_modes(n1)[o1]
    j2 = signed_modes(n2)[o2]
    Q = state.Q[np.ix_(o1, o2)]
    P = state.P[np.ix_(o1, o2)]
    with open(path, "w") as fh:
        fh.write(
            f"# model={params.model} N1={params.N1} N2={params.N2} "
            f"alpha={params.alpha:.17g} beta={params.beta:.17g} t={state.t:.17g}\n"
        )
        fh.write("j1,j2,Q,P\n")
        for i in range(n1):
            for j in range(n2):
                fh.write(f"{j1[i]},{j2[j]},{Q[i, j]:.17g},{P[i, j]:.17g}\n")
