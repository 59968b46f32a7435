# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Euler-Maruyama stepping over a bilinear drift table.

The arithmetic here must stay bit-identical to pyfallback.integrate_block:
same operation order, no fused multiply-adds (built with -ffp-contract=off),
same clip-then-branch boundary handling.  Any change must be mirrored there.
"""

from libc.math cimport floor, isfinite

import numpy as np


def integrate_block(double[::1] x,
                    const double[:, ::1] drift,
                    const long long[::1] it_idx,
                    const double[::1] it_frac,
                    double x_min,
                    double x_max,
                    double inv_dx,
                    long long n_x,
                    double dt,
                    double sigma_dt,
                    const double[:, ::1] noise,
                    long long k0,
                    long long record_every,
                    int boundary,
                    double[:, ::1] out,
                    double[::1] absorbed_step):
    """Advance every path through noise.shape[1] steps, recording strided slices.

    x            : current positions, mutated in place (shape n_paths)
    drift        : drift table b[t_slice, x_node] (shape n_t, n_x)
    it_idx/it_frac glue each global step k to a drift-table row pair:
                   b(t_k, .) = (1-it_frac[k])*drift[it_idx[k]] + it_frac[k]*drift[it_idx[k]+1]
    noise        : standard normals, noise[p, i] drives path p at global step k0+i
    k0           : global index of the first step in this block
    boundary     : 0 = reflect, 1 = absorb (freeze at wall, stamp absorbed_step)
    out          : recorded positions (n_paths, n_records); caller owns out[:, 0]
    absorbed_step: NaN while alive; set to the global step number on absorption
                   or on a non-finite update (path then freezes forever)
    """
    cdef Py_ssize_t n_paths = x.shape[0]
    cdef Py_ssize_t n_steps = noise.shape[1]
    cdef Py_ssize_t p, i
    cdef long long k, it, ix, rec
    cdef double xc, asp, pos, fx, wl, ft, b0, b1, b, xn

    with nogil:
        for p in range(n_paths):
            xc = x[p]
            asp = absorbed_step[p]
            for i in range(n_steps):
                k = k0 + i
                if asp == asp:  # already frozen (absorbed or invalid)
                    pass
                else:
                    it = it_idx[k]
                    ft = it_frac[k]
                    pos = (xc - x_min) * inv_dx
                    ix = <long long>floor(pos)
                    if ix < 0:
                        ix = 0
                    elif ix > n_x - 2:
                        ix = n_x - 2
                    fx = pos - <double>ix
                    wl = 1.0 - fx
                    b0 = wl * drift[it, ix] + fx * drift[it, ix + 1]
                    b1 = wl * drift[it + 1, ix] + fx * drift[it + 1, ix + 1]
                    b = (1.0 - ft) * b0 + ft * b1
                    xn = xc + (b * dt + sigma_dt * noise[p, i])
                    if not isfinite(xn):
                        asp = <double>k
                    elif boundary == 0:
                        if xn < x_min:
                            xn = x_min + (x_min - xn)
                        if xn > x_max:
                            xn = x_max - (xn - x_max)
                        if xn < x_min:
                            xn = x_min
                        if xn > x_max:
                            xn = x_max
                        xc = xn
                    else:
                        if xn <= x_min:
                            xc = x_min
                            asp = <double>k
                        elif xn >= x_max:
                            xc = x_max
                            asp = <double>k
                        else:
                            xc = xn
                if (k + 1) % record_every == 0:
                    rec = (k + 1) // record_every
                    out[p, rec] = xc
            x[p] = xc
            absorbed_step[p] = asp
