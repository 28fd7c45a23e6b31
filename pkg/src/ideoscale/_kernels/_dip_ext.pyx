# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled dip kernels; same contract as ``_dip_py``."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()


cdef double _dip(const double* x0, Py_ssize_t n) noexcept nogil:
    cdef const double* x
    cdef int *mn
    cdef int *mj
    cdef int *gcm
    cdef int *lcm
    cdef int j, k, i, mnj, mnmnj, mjk, mjmjk, low, high, ig, ih, ix, iv
    cdef int l_gcm, l_lcm, gcmix, lcmiv, gcmi1, lcmiv1, jb, je, jj
    cdef double dip, d, dx, dip_l, dip_u, max_t, c, t

    if n < 2 or x0[n - 1] == x0[0]:
        return 1.0 / (2 * n) if n > 0 else 0.0

    x = x0 - 1
    mn = <int*> malloc((n + 1) * sizeof(int))
    mj = <int*> malloc((n + 1) * sizeof(int))
    gcm = <int*> malloc((n + 2) * sizeof(int))
    lcm = <int*> malloc((n + 2) * sizeof(int))

    mn[1] = 1
    for j in range(2, n + 1):
        mn[j] = j - 1
        while True:
            mnj = mn[j]
            mnmnj = mn[mnj]
            if mnj == 1 or (x[j] - x[mnj]) * (mnj - mnmnj) < (x[mnj] - x[mnmnj]) * (j - mnj):
                break
            mn[j] = mnmnj

    mj[n] = n
    for k in range(n - 1, 0, -1):
        mj[k] = k + 1
        while True:
            mjk = mj[k]
            mjmjk = mj[mjk]
            if mjk == n or (x[k] - x[mjk]) * (mjk - mjmjk) < (x[mjk] - x[mjmjk]) * (k - mjk):
                break
            mj[k] = mjmjk

    low = 1
    high = <int> n
    dip = 1.0
    while True:
        gcm[1] = high
        i = 1
        while gcm[i] > low:
            gcm[i + 1] = mn[gcm[i]]
            i += 1
        ig = i
        l_gcm = i
        ix = ig - 1

        lcm[1] = low
        i = 1
        while lcm[i] < high:
            lcm[i + 1] = mj[lcm[i]]
            i += 1
        ih = i
        l_lcm = i
        iv = 2

        d = 0.0
        if l_gcm != 2 or l_lcm != 2:
            while True:
                gcmix = gcm[ix]
                lcmiv = lcm[iv]
                if gcmix > lcmiv:
                    gcmi1 = gcm[ix + 1]
                    dx = (lcmiv - gcmi1 + 1) - (x[lcmiv] - x[gcmi1]) * (gcmix - gcmi1) / (x[gcmix] - x[gcmi1])
                    iv += 1
                    if dx >= d:
                        d = dx
                        ig = ix + 1
                        ih = iv - 1
                else:
                    lcmiv1 = lcm[iv - 1]
                    dx = (x[gcmix] - x[lcmiv1]) * (lcmiv - lcmiv1) / (x[lcmiv] - x[lcmiv1]) - (gcmix - lcmiv1 - 1)
                    ix -= 1
                    if dx >= d:
                        d = dx
                        ig = ix + 1
                        ih = iv
                if ix < 1:
                    ix = 1
                if iv > l_lcm:
                    iv = l_lcm
                if gcm[ix] == lcm[iv]:
                    break
        else:
            d = 1.0

        if d < dip:
            break

        dip_l = 0.0
        for j in range(ig, l_gcm):
            max_t = 1.0
            jb = gcm[j + 1]
            je = gcm[j]
            if je - jb > 1 and x[je] != x[jb]:
                c = (je - jb) / (x[je] - x[jb])
                for jj in range(jb, je + 1):
                    t = (jj - jb + 1) - (x[jj] - x[jb]) * c
                    if t > max_t:
                        max_t = t
            if max_t > dip_l:
                dip_l = max_t

        dip_u = 0.0
        for j in range(ih, l_lcm):
            max_t = 1.0
            jb = lcm[j]
            je = lcm[j + 1]
            if je - jb > 1 and x[je] != x[jb]:
                c = (je - jb) / (x[je] - x[jb])
                for jj in range(jb, je + 1):
                    t = (x[jj] - x[jb]) * c - (jj - jb - 1)
                    if t > max_t:
                        max_t = t
            if max_t > dip_u:
                dip_u = max_t

        if dip_u > dip_l:
            dip_l = dip_u
        if dip_l > dip:
            dip = dip_l

        if low == gcm[ig] and high == lcm[ih]:
            break
        low = gcm[ig]
        high = lcm[ih]

    free(mn)
    free(mj)
    free(gcm)
    free(lcm)
    return dip / (2 * n)


def dip_sorted(x):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double out
    with nogil:
        out = _dip(&xv[0], xv.shape[0]) if xv.shape[0] > 0 else 0.0
    return out


def dip_batch(rows):
    """Dip of every row of a 2-D array whose rows are each sorted; releases the GIL."""
    cdef const double[:, ::1] xv = np.ascontiguousarray(rows, dtype=np.float64)
    cdef Py_ssize_t r, nr = xv.shape[0], n = xv.shape[1]
    res = np.empty(nr, dtype=np.float64)
    cdef double[::1] out = res
    if n == 0:
        res[:] = 0.0
        return res
    with nogil:
        for r in range(nr):
            out[r] = _dip(&xv[r, 0], n)
    return res
