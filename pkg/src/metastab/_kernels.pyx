# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Tight leapfrog loops for the lattice integrators.

Both advancers run `nsteps` composed kick-drift-kick sweeps in place and
release the GIL for the whole walk.  `w` holds the substep weights of the
composition (length 1 for plain leapfrog, 3 for the fourth-order triple
jump); each weighted substep is one full KDK stage with step w[c]*dt.
"""

import numpy as np

cimport cython


def advance_etl(double[:, ::1] Q, double[:, ::1] P, double dt, Py_ssize_t nsteps,
                double[::1] w, double alpha, double beta):
    """In-place symplectic walk of Qdot = -Delta1 P, Pdot = -Q - alpha Q^2 - beta Q^3."""
    cdef Py_ssize_t n1 = Q.shape[0]
    cdef Py_ssize_t n2 = Q.shape[1]
    cdef Py_ssize_t nw = w.shape[0]
    cdef Py_ssize_t s, c, i, j, im, ip, jm, jp
    cdef double h, hh, q
    with nogil:
        for s in range(nsteps):
            for c in range(nw):
                h = w[c] * dt
                hh = 0.5 * h
                for i in range(n1):
                    for j in range(n2):
                        q = Q[i, j]
                        P[i, j] -= hh * (q + alpha * q * q + beta * q * q * q)
                for i in range(n1):
                    im = n1 - 1 if i == 0 else i - 1
                    ip = 0 if i == n1 - 1 else i + 1
                    for j in range(n2):
                        jm = n2 - 1 if j == 0 else j - 1
                        jp = 0 if j == n2 - 1 else j + 1
                        Q[i, j] -= h * (P[im, j] + P[ip, j] + P[i, jm] + P[i, jp]
                                        - 4.0 * P[i, j])
                for i in range(n1):
                    for j in range(n2):
                        q = Q[i, j]
                        P[i, j] -= hh * (q + alpha * q * q + beta * q * q * q)


def advance_kg(double[:, ::1] Q, double[:, ::1] P, double dt, Py_ssize_t nsteps,
               double[::1] w, double m2, double beta):
    """In-place symplectic walk of Qdot = P, Pdot = Delta1 Q - m^2 Q - beta Q^3."""
    cdef Py_ssize_t n1 = Q.shape[0]
    cdef Py_ssize_t n2 = Q.shape[1]
    cdef Py_ssize_t nw = w.shape[0]
    cdef Py_ssize_t s, c, i, j, im, ip, jm, jp
    cdef double h, hh, q
    with nogil:
        for s in range(nsteps):
            for c in range(nw):
                h = w[c] * dt
                hh = 0.5 * h
                for i in range(n1):
                    im = n1 - 1 if i == 0 else i - 1
                    ip = 0 if i == n1 - 1 else i + 1
                    for j in range(n2):
                        jm = n2 - 1 if j == 0 else j - 1
                        jp = 0 if j == n2 - 1 else j + 1
                        q = Q[i, j]
                        P[i, j] += hh * (Q[im, j] + Q[ip, j] + Q[i, jm] + Q[i, jp]
                                         - 4.0 * q - m2 * q - beta * q * q * q)
                for i in range(n1):
                    for j in range(n2):
                        Q[i, j] += h * P[i, j]
                for i in range(n1):
                    im = n1 - 1 if i == 0 else i - 1
                    ip = 0 if i == n1 - 1 else i + 1
                    for j in range(n2):
                        jm = n2 - 1 if j == 0 else j - 1
                        jp = 0 if j == n2 - 1 else j + 1
                        q = Q[i, j]
                        P[i, j] += hh * (Q[im, j] + Q[ip, j] + Q[i, jm] + Q[i, jp]
                                         - 4.0 * q - m2 * q - beta * q * q * q)
