# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: initializedcheck=False, language_level=3
"""Compiled d=2 twin of the numpy backend.

Same table contract and the same fixed accumulation order as the fallback
(entry-major, then row-major, then column sweep), so results of repeated
runs are bitwise reproducible.  Row-sliding layout: per table entry and per
slot-0 row, the two separable cubic interpolations collapse to short FIR
passes over contiguous memory, the bracket is formed pointwise, and the
scatter becomes sixteen shifted AXPY row updates per slot.
"""

from libc.math cimport fabs, log, sqrt

cdef double LOG_SWITCH = 1e-8


cdef inline double logmean(double a, double b) noexcept nogil:
    cdef double g = log(a) - log(b)
    cdef double x
    if fabs(g) < LOG_SWITCH:
        x = 0.5 * g
        return sqrt(a * b) * (1.0 + x * x / 6.0 + (x * x) * (x * x) / 120.0)
    return (a - b) / g


def scatter_apply_2d(int mode,
                     double[:, ::1] fi, double[:, ::1] fj,
                     double alpha_i, double alpha_j,
                     double[:, ::1] xi_i, double[:, ::1] xi_j,
                     int[:, ::1] ints, double[::1] wb,
                     double[:, :, ::1] wi, double[:, :, ::1] wj,
                     double scale, bint deposit_j, double floor_prod,
                     double[:, ::1] q_i, double[:, ::1] q_j,
                     double[::1] buf):
    cdef Py_ssize_t ne = ints.shape[0]
    cdef Py_ssize_t n = fi.shape[0]
    cdef Py_ssize_t seg = n + 8
    cdef Py_ssize_t e, a0, b0, c1, x, r, l, r1, lo0, hi0, lo1
    cdef Py_ssize_t ib0, ib1, jb0, jb1
    cdef int dx, dy, bi0, bi1, bj0, bj1
    cdef double swb, w, fa, fb, pi, pj, ap, bp, g, lam
    cdef double wia0, wia1, wia2, wia3, wib0, wib1, wib2, wib3
    cdef double wja0, wja1, wja2, wja3, wjb0, wjb1, wjb2, wjb3
    cdef double *trow = &buf[0]
    cdef double *pin = &buf[seg]
    cdef double *pjn = &buf[2 * seg]
    cdef double *pxin = &buf[3 * seg]
    cdef double *pxjn = &buf[4 * seg]
    cdef double *yrow = &buf[5 * seg]

    with nogil:
        for e in range(ne):
            dx = ints[e, 0]; dy = ints[e, 1]
            lo0 = ints[e, 2]; lo1 = ints[e, 3]
            hi0 = ints[e, 4]
            r1 = ints[e, 5] - lo1 + 1
            bi0 = ints[e, 6]; bi1 = ints[e, 7]
            bj0 = ints[e, 8]; bj1 = ints[e, 9]
            swb = scale * wb[e]
            wia0 = wi[e, 0, 0]; wia1 = wi[e, 0, 1]
            wia2 = wi[e, 0, 2]; wia3 = wi[e, 0, 3]
            wib0 = wi[e, 1, 0]; wib1 = wi[e, 1, 1]
            wib2 = wi[e, 1, 2]; wib3 = wi[e, 1, 3]
            wja0 = wj[e, 0, 0]; wja1 = wj[e, 0, 1]
            wja2 = wj[e, 0, 2]; wja3 = wj[e, 0, 3]
            wjb0 = wj[e, 1, 0]; wjb1 = wj[e, 1, 1]
            wjb2 = wj[e, 1, 2]; wjb3 = wj[e, 1, 3]

            for a0 in range(lo0, hi0 + 1):
                b0 = a0 - dx
                c1 = lo1 - dy

                if mode == 0 or mode == 1:
                    # slot-0 state interpolant: rows then columns
                    ib0 = a0 + bi0
                    ib1 = lo1 + bi1
                    for x in range(r1 + 3):
                        trow[x] = (wia0 * fi[ib0, ib1 + x]
                                   + wia1 * fi[ib0 + 1, ib1 + x]
                                   + wia2 * fi[ib0 + 2, ib1 + x]
                                   + wia3 * fi[ib0 + 3, ib1 + x])
                    for x in range(r1):
                        pin[x] = (wib0 * trow[x] + wib1 * trow[x + 1]
                                  + wib2 * trow[x + 2] + wib3 * trow[x + 3])
                    # slot-1 state interpolant
                    jb0 = b0 + bj0
                    jb1 = c1 + bj1
                    for x in range(r1 + 3):
                        trow[x] = (wja0 * fj[jb0, jb1 + x]
                                   + wja1 * fj[jb0 + 1, jb1 + x]
                                   + wja2 * fj[jb0 + 2, jb1 + x]
                                   + wja3 * fj[jb0 + 3, jb1 + x])
                    for x in range(r1):
                        pjn[x] = (wjb0 * trow[x] + wjb1 * trow[x + 1]
                                  + wjb2 * trow[x + 2] + wjb3 * trow[x + 3])

                if mode != 0:
                    ib0 = a0 + bi0
                    ib1 = lo1 + bi1
                    for x in range(r1 + 3):
                        trow[x] = (wia0 * xi_i[ib0, ib1 + x]
                                   + wia1 * xi_i[ib0 + 1, ib1 + x]
                                   + wia2 * xi_i[ib0 + 2, ib1 + x]
                                   + wia3 * xi_i[ib0 + 3, ib1 + x])
                    for x in range(r1):
                        pxin[x] = (wib0 * trow[x] + wib1 * trow[x + 1]
                                   + wib2 * trow[x + 2] + wib3 * trow[x + 3])
                    jb0 = b0 + bj0
                    jb1 = c1 + bj1
                    for x in range(r1 + 3):
                        trow[x] = (wja0 * xi_j[jb0, jb1 + x]
                                   + wja1 * xi_j[jb0 + 1, jb1 + x]
                                   + wja2 * xi_j[jb0 + 2, jb1 + x]
                                   + wja3 * xi_j[jb0 + 3, jb1 + x])
                    for x in range(r1):
                        pxjn[x] = (wjb0 * trow[x] + wjb1 * trow[x + 1]
                                   + wjb2 * trow[x + 2] + wjb3 * trow[x + 3])

                if mode == 0:
                    for x in range(r1):
                        fa = fi[a0, lo1 + x]
                        fb = fj[b0, c1 + x]
                        pi = pin[x]
                        if pi < 0.0:
                            pi = 0.0
                        pj = pjn[x]
                        if pj < 0.0:
                            pj = 0.0
                        ap = pi * pj * (1.0 + alpha_i * fa) * (1.0 + alpha_j * fb)
                        bp = fa * fb * (1.0 + alpha_i * pi) * (1.0 + alpha_j * pj)
                        yrow[x] = swb * (ap - bp)
                elif mode == 1:
                    for x in range(r1):
                        fa = fi[a0, lo1 + x]
                        fb = fj[b0, c1 + x]
                        pi = pin[x]
                        if pi < 0.0:
                            pi = 0.0
                        pj = pjn[x]
                        if pj < 0.0:
                            pj = 0.0
                        ap = pi * pj * (1.0 + alpha_i * fa) * (1.0 + alpha_j * fb)
                        bp = fa * fb * (1.0 + alpha_i * pi) * (1.0 + alpha_j * pj)
                        g = (pxin[x] + pxjn[x] - xi_i[a0, lo1 + x]
                             - xi_j[b0, c1 + x])
                        if ap > floor_prod and bp > floor_prod:
                            lam = logmean(ap, bp)
                        else:
                            lam = 0.0
                        yrow[x] = swb * lam * g
                else:
                    for x in range(r1):
                        yrow[x] = swb * (pxin[x] + pxjn[x]
                                         - xi_i[a0, lo1 + x]
                                         - xi_j[b0, c1 + x])

                # deposits at unprimed nodes
                for x in range(r1):
                    q_i[a0, lo1 + x] += yrow[x]
                if deposit_j:
                    for x in range(r1):
                        q_j[b0, c1 + x] += yrow[x]
                # scatter across the primed-point stencils
                ib0 = a0 + bi0
                ib1 = lo1 + bi1
                for r in range(4):
                    if r == 0:
                        w = wia0
                    elif r == 1:
                        w = wia1
                    elif r == 2:
                        w = wia2
                    else:
                        w = wia3
                    for x in range(r1):
                        q_i[ib0 + r, ib1 + x] -= (w * wib0) * yrow[x]
                    for x in range(r1):
                        q_i[ib0 + r, ib1 + 1 + x] -= (w * wib1) * yrow[x]
                    for x in range(r1):
                        q_i[ib0 + r, ib1 + 2 + x] -= (w * wib2) * yrow[x]
                    for x in range(r1):
                        q_i[ib0 + r, ib1 + 3 + x] -= (w * wib3) * yrow[x]
                if deposit_j:
                    jb0 = b0 + bj0
                    jb1 = c1 + bj1
                    for r in range(4):
                        if r == 0:
                            w = wja0
                        elif r == 1:
                            w = wja1
                        elif r == 2:
                            w = wja2
                        else:
                            w = wja3
                        for x in range(r1):
                            q_j[jb0 + r, jb1 + x] -= (w * wjb0) * yrow[x]
                        for x in range(r1):
                            q_j[jb0 + r, jb1 + 1 + x] -= (w * wjb1) * yrow[x]
                        for x in range(r1):
                            q_j[jb0 + r, jb1 + 2 + x] -= (w * wjb2) * yrow[x]
                        for x in range(r1):
                            q_j[jb0 + r, jb1 + 3 + x] -= (w * wjb3) * yrow[x]


def pair_quadrature_2d(int mode,
                       double[:, ::1] fi, double[:, ::1] fj,
                       double alpha_i, double alpha_j,
                       double[:, ::1] xi_i, double[:, ::1] xi_j,
                       bint has_phi,
                       double[:, ::1] phi_i, double[:, ::1] phi_j,
                       int[:, ::1] ints, double[::1] wb,
                       double[:, :, ::1] wi, double[:, :, ::1] wj,
                       double scale2, double floor_prod,
                       double[::1] buf):
    """Returns (weak_or_qform, dissipation); see the numpy twin."""
    cdef Py_ssize_t ne = ints.shape[0]
    cdef Py_ssize_t n = fi.shape[0]
    cdef Py_ssize_t seg = n + 8
    cdef Py_ssize_t e, a0, b0, c1, x, r1, lo0, hi0, lo1
    cdef Py_ssize_t ib0, ib1, jb0, jb1
    cdef int dx, dy, bi0, bi1, bj0, bj1
    cdef double swb, fa, fb, pi, pj, ap, bp, g, lam, core, gphi
    cdef double wk = 0.0, dis = 0.0
    cdef double wia0, wia1, wia2, wia3, wib0, wib1, wib2, wib3
    cdef double wja0, wja1, wja2, wja3, wjb0, wjb1, wjb2, wjb3
    cdef double *trow = &buf[0]
    cdef double *pin = &buf[seg]
    cdef double *pjn = &buf[2 * seg]
    cdef double *pxin = &buf[3 * seg]
    cdef double *pxjn = &buf[4 * seg]
    cdef double *phin = &buf[5 * seg]
    cdef double *phjn = &buf[6 * seg]

    with nogil:
        for e in range(ne):
            dx = ints[e, 0]; dy = ints[e, 1]
            lo0 = ints[e, 2]; lo1 = ints[e, 3]
            hi0 = ints[e, 4]
            r1 = ints[e, 5] - lo1 + 1
            bi0 = ints[e, 6]; bi1 = ints[e, 7]
            bj0 = ints[e, 8]; bj1 = ints[e, 9]
            swb = scale2 * wb[e]
            wia0 = wi[e, 0, 0]; wia1 = wi[e, 0, 1]
            wia2 = wi[e, 0, 2]; wia3 = wi[e, 0, 3]
            wib0 = wi[e, 1, 0]; wib1 = wi[e, 1, 1]
            wib2 = wi[e, 1, 2]; wib3 = wi[e, 1, 3]
            wja0 = wj[e, 0, 0]; wja1 = wj[e, 0, 1]
            wja2 = wj[e, 0, 2]; wja3 = wj[e, 0, 3]
            wjb0 = wj[e, 1, 0]; wjb1 = wj[e, 1, 1]
            wjb2 = wj[e, 1, 2]; wjb3 = wj[e, 1, 3]

            for a0 in range(lo0, hi0 + 1):
                b0 = a0 - dx
                c1 = lo1 - dy

                if mode == 0 or mode == 1:
                    ib0 = a0 + bi0
                    ib1 = lo1 + bi1
                    for x in range(r1 + 3):
                        trow[x] = (wia0 * fi[ib0, ib1 + x]
                                   + wia1 * fi[ib0 + 1, ib1 + x]
                                   + wia2 * fi[ib0 + 2, ib1 + x]
                                   + wia3 * fi[ib0 + 3, ib1 + x])
                    for x in range(r1):
                        pin[x] = (wib0 * trow[x] + wib1 * trow[x + 1]
                                  + wib2 * trow[x + 2] + wib3 * trow[x + 3])
                    jb0 = b0 + bj0
                    jb1 = c1 + bj1
                    for x in range(r1 + 3):
                        trow[x] = (wja0 * fj[jb0, jb1 + x]
                                   + wja1 * fj[jb0 + 1, jb1 + x]
                                   + wja2 * fj[jb0 + 2, jb1 + x]
                                   + wja3 * fj[jb0 + 3, jb1 + x])
                    for x in range(r1):
                        pjn[x] = (wjb0 * trow[x] + wjb1 * trow[x + 1]
                                  + wjb2 * trow[x + 2] + wjb3 * trow[x + 3])

                if mode != 0:
                    ib0 = a0 + bi0
                    ib1 = lo1 + bi1
                    for x in range(r1 + 3):
                        trow[x] = (wia0 * xi_i[ib0, ib1 + x]
                                   + wia1 * xi_i[ib0 + 1, ib1 + x]
                                   + wia2 * xi_i[ib0 + 2, ib1 + x]
                                   + wia3 * xi_i[ib0 + 3, ib1 + x])
                    for x in range(r1):
                        pxin[x] = (wib0 * trow[x] + wib1 * trow[x + 1]
                                   + wib2 * trow[x + 2] + wib3 * trow[x + 3])
                    jb0 = b0 + bj0
                    jb1 = c1 + bj1
                    for x in range(r1 + 3):
                        trow[x] = (wja0 * xi_j[jb0, jb1 + x]
                                   + wja1 * xi_j[jb0 + 1, jb1 + x]
                                   + wja2 * xi_j[jb0 + 2, jb1 + x]
                                   + wja3 * xi_j[jb0 + 3, jb1 + x])
                    for x in range(r1):
                        pxjn[x] = (wjb0 * trow[x] + wjb1 * trow[x + 1]
                                   + wjb2 * trow[x + 2] + wjb3 * trow[x + 3])

                if has_phi:
                    ib0 = a0 + bi0
                    ib1 = lo1 + bi1
                    for x in range(r1 + 3):
                        trow[x] = (wia0 * phi_i[ib0, ib1 + x]
                                   + wia1 * phi_i[ib0 + 1, ib1 + x]
                                   + wia2 * phi_i[ib0 + 2, ib1 + x]
                                   + wia3 * phi_i[ib0 + 3, ib1 + x])
                    for x in range(r1):
                        phin[x] = (wib0 * trow[x] + wib1 * trow[x + 1]
                                   + wib2 * trow[x + 2] + wib3 * trow[x + 3])
                    jb0 = b0 + bj0
                    jb1 = c1 + bj1
                    for x in range(r1 + 3):
                        trow[x] = (wja0 * phi_j[jb0, jb1 + x]
                                   + wja1 * phi_j[jb0 + 1, jb1 + x]
                                   + wja2 * phi_j[jb0 + 2, jb1 + x]
                                   + wja3 * phi_j[jb0 + 3, jb1 + x])
                    for x in range(r1):
                        phjn[x] = (wjb0 * trow[x] + wjb1 * trow[x + 1]
                                   + wjb2 * trow[x + 2] + wjb3 * trow[x + 3])

                for x in range(r1):
                    if mode == 0 or mode == 1:
                        fa = fi[a0, lo1 + x]
                        fb = fj[b0, c1 + x]
                        pi = pin[x]
                        if pi < 0.0:
                            pi = 0.0
                        pj = pjn[x]
                        if pj < 0.0:
                            pj = 0.0
                        ap = pi * pj * (1.0 + alpha_i * fa) * (1.0 + alpha_j * fb)
                        bp = fa * fb * (1.0 + alpha_i * pi) * (1.0 + alpha_j * pj)

                    if mode == 0:
                        if ap > floor_prod and bp > floor_prod:
                            lam = logmean(ap, bp)
                            g = log(ap) - log(bp)
                        else:
                            lam = 0.0
                            g = 0.0
                        # weak pairing takes a - b unmasked (transpose of
                        # the scatter route); dissipation keeps the floored
                        # logarithmic factorization
                        core = ap - bp
                        dis += swb * lam * g * g
                    else:
                        g = (pxin[x] + pxjn[x] - xi_i[a0, lo1 + x]
                             - xi_j[b0, c1 + x])
                        if mode == 1:
                            if ap > floor_prod and bp > floor_prod:
                                lam = logmean(ap, bp)
                            else:
                                lam = 0.0
                            core = lam * g
                        else:
                            core = g
                        dis += swb * core * g

                    if has_phi:
                        gphi = (phin[x] + phjn[x] - phi_i[a0, lo1 + x]
                                - phi_j[b0, c1 + x])
                        wk += swb * core * gphi

    if mode == 0:
        return -wk, dis
    return wk, dis
