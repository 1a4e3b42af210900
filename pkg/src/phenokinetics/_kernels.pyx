# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot inner-loop kernels.

Semantics match :mod:`phenokinetics._kernels_py` element for element; only
the accumulation strategy differs (single fused C loops instead of NumPy
temporaries).
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()


def kernel_apply(double[::1] band_rev, long offset_lo, double[::1] fw):
    """Banded Toeplitz apply with the band supplied in reversed order:
    out[k] = sum_m band_rev[nb-1-m] * fw[k - offset_lo - m].

    The reversed layout makes the inner loop a forward dot product, so both
    arrays stream contiguously.
    """
    cdef Py_ssize_t n = fw.shape[0]
    cdef Py_ssize_t nb = band_rev.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_arr = np.zeros(n)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t k, i, base, i_lo, i_hi
    cdef double acc
    for k in range(n):
        # source index i = k - offset_lo - m runs over the grid window
        base = k - offset_lo - (nb - 1)
        i_lo = base if base > 0 else 0
        i_hi = k - offset_lo
        if i_hi > n - 1:
            i_hi = n - 1
        acc = 0.0
        for i in range(i_lo, i_hi + 1):
            acc += band_rev[i - base] * fw[i]
        out[k] = acc
    return out_arr


def pde_step(double[::1] g, double[::1] rvals, double rho, double alpha,
             double beta, double dt, double dv, bint upwind):
    """One explicit Euler step of the advection-diffusion-reaction stencil."""
    cdef Py_ssize_t n = g.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_arr = np.zeros(n)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t k
    cdef double adv, diff
    for k in range(1, n - 1):
        if alpha > 0.0 and upwind:
            adv = (g[k] - g[k - 1]) / dv
        elif alpha < 0.0 and upwind:
            adv = (g[k + 1] - g[k]) / dv
        elif alpha != 0.0:
            adv = (g[k + 1] - g[k - 1]) / (2.0 * dv)
        else:
            adv = 0.0
        diff = (g[k + 1] - 2.0 * g[k] + g[k - 1]) / (dv * dv)
        out[k] = g[k] + dt * ((rvals[k] - rho) * g[k] - alpha * adv + 0.5 * beta * diff)
    return out_arr


def abm_resolve(cnp.uint8_t[::1] comp, double[::1] phen, long[::1] partner,
                double[::1] u_prolif, double[::1] u_death, double[::1] u_mut,
                double[::1] z, double p_prolif, double[::1] death_prob,
                double p_mut, double shift, double sd, double v0):
    """Resolve one synchronous agent-model step from a pre-step snapshot."""
    cdef Py_ssize_t n = comp.shape[0]
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] comp_new_arr = np.empty(n, dtype=np.uint8)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] phen_new_arr = np.empty(n)
    cdef cnp.uint8_t[::1] comp_new = comp_new_arr
    cdef double[::1] phen_new = phen_new_arr
    cdef Py_ssize_t i
    cdef long j
    for i in range(n):
        comp_new[i] = comp[i]
        phen_new[i] = phen[i]
        if comp[i] == 0:
            j = partner[i]
            if u_prolif[i] < p_prolif and comp[j] == 1:
                comp_new[i] = 1
                phen_new[i] = phen[j]
        else:
            if u_death[i] < death_prob[i]:
                comp_new[i] = 0
                phen_new[i] = v0
            elif u_mut[i] < p_mut:
                phen_new[i] = phen[i] + shift + sd * z[i]
    return comp_new_arr, phen_new_arr
