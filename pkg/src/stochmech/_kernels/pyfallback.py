"""Pure-numpy twin of the compiled stepping kernel.

Must stay bit-identical to _core.integrate_block: vectorised over paths but
with the exact same per-step arithmetic and operation order.  IEEE addition
and multiplication are deterministic, so elementwise numpy ops reproduce the
scalar loop exactly as long as no expression is reassociated.
"""

import numpy as np


def integrate_block(x, drift, it_idx, it_frac, x_min, x_max, inv_dx, n_x,
                    dt, sigma_dt, noise, k0, record_every, boundary, out,
                    absorbed_step):
    """Advance every path through noise.shape[1] steps, recording strided slices.

    See _core.pyx for the parameter contract; this mirrors it operation for
    operation with path-vectorised numpy.
    """
    n_steps = noise.shape[1]
    cur = x.copy()
    asp = absorbed_step
    for i in range(n_steps):
        k = k0 + i
        alive = np.isnan(asp)
        it = it_idx[k]
        ft = it_frac[k]
        pos = (cur - x_min) * inv_dx
        ix = np.floor(pos).astype(np.int64)
        np.clip(ix, 0, n_x - 2, out=ix)
        fx = pos - ix.astype(np.float64)
        wl = 1.0 - fx
        row0 = drift[it]
        row1 = drift[it + 1]
        b0 = wl * row0[ix] + fx * row0[ix + 1]
        b1 = wl * row1[ix] + fx * row1[ix + 1]
        b = (1.0 - ft) * b0 + ft * b1
        xn = cur + (b * dt + sigma_dt * noise[:, i])
        finite = np.isfinite(xn)
        if boundary == 0:
            xn = np.where(xn < x_min, x_min + (x_min - xn), xn)
            xn = np.where(xn > x_max, x_max - (xn - x_max), xn)
            xn = np.where(xn < x_min, x_min, xn)
            xn = np.where(xn > x_max, x_max, xn)
            stepped = alive & finite
            cur = np.where(stepped, xn, cur)
            newly_bad = alive & ~finite
            asp = np.where(newly_bad, float(k), asp)
        else:
            hit_lo = finite & (xn <= x_min)
            hit_hi = finite & (xn >= x_max)
            inside = finite & ~hit_lo & ~hit_hi
            cur = np.where(alive & inside, xn, cur)
            cur = np.where(alive & hit_lo, x_min, cur)
            cur = np.where(alive & hit_hi, x_max, cur)
            newly_frozen = alive & (~finite | hit_lo | hit_hi)
            asp = np.where(newly_frozen, float(k), asp)
        if (k + 1) % record_every == 0:
            out[:, (k + 1) // record_every] = cur
    x[:] = cur
    absorbed_step[:] = asp
