# cython: boundscheck=False, wraparound=False, cdivision=True
"""Typed element-loop kernels.

Signature-compatible with the numpy fallback in _py.py. Element matrices
are accumulated on the lower triangle and mirrored, so they are exactly
symmetric entry for entry.
"""

import numpy as np


def mass_entries(double[::1] detj, double[::1] qw, double[:, ::1] phi,
                 double[:, ::1] wvals):
    cdef Py_ssize_t ne = detj.shape[0]
    cdef Py_ssize_t nq = qw.shape[0]
    cdef Py_ssize_t nv = phi.shape[1]
    out = np.zeros((ne, nv, nv))
    cdef double[:, :, ::1] o = out
    cdef Py_ssize_t e, q, i, j
    cdef double c
    for e in range(ne):
        for q in range(nq):
            c = detj[e] * qw[q] * wvals[e, q]
            for i in range(nv):
                for j in range(i + 1):
                    o[e, i, j] += c * phi[q, i] * phi[q, j]
        for i in range(nv):
            for j in range(i):
                o[e, j, i] = o[e, i, j]
    return out


def stiffness_entries(double[::1] scale, double[:, :, ::1] grads):
    cdef Py_ssize_t ne = scale.shape[0]
    cdef Py_ssize_t nv = grads.shape[1]
    cdef Py_ssize_t nd = grads.shape[2]
    out = np.zeros((ne, nv, nv))
    cdef double[:, :, ::1] o = out
    cdef Py_ssize_t e, i, j, d
    cdef double acc
    for e in range(ne):
        for i in range(nv):
            for j in range(i + 1):
                acc = 0.0
                for d in range(nd):
                    acc += grads[e, i, d] * grads[e, j, d]
                o[e, i, j] = scale[e] * acc
        for i in range(nv):
            for j in range(i):
                o[e, j, i] = o[e, i, j]
    return out


def load_entries(double[::1] detj, double[::1] qw, double[:, ::1] phi,
                 double[:, ::1] fvals):
    cdef Py_ssize_t ne = detj.shape[0]
    cdef Py_ssize_t nq = qw.shape[0]
    cdef Py_ssize_t nv = phi.shape[1]
    out = np.zeros((ne, nv))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t e, q, i
    cdef double c
    for e in range(ne):
        for q in range(nq):
            c = detj[e] * qw[q] * fvals[e, q]
            for i in range(nv):
                o[e, i] += c * phi[q, i]
    return out


def pair_integral(double[::1] detj, double[::1] qw, double[:, ::1] avals,
                  double[:, ::1] bvals):
    cdef Py_ssize_t ne = detj.shape[0]
    cdef Py_ssize_t nq = qw.shape[0]
    cdef Py_ssize_t e, q
    cdef double total = 0.0
    cdef double row
    for e in range(ne):
        row = 0.0
        for q in range(nq):
            row += qw[q] * avals[e, q] * bvals[e, q]
        total += detj[e] * row
    return total
