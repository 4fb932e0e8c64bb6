# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled identification loop; mirrors _loop_py.run_loop step for step."""

import numpy as np

cimport cython
from libc.math cimport fabs, isfinite


cdef inline void _push(double[:, ::1] X, double[::1] ws, double[:, ::1] A,
                       double[::1] B, double[::1] C, double D, double s,
                       double[::1] scratch) nogil:
    cdef Py_ssize_t ns = X.shape[0]
    cdef Py_ssize_t n = X.shape[1]
    cdef Py_ssize_t j, a, b
    cdef double acc, w
    ws[0] = s
    for j in range(ns):
        acc = 0.0
        for a in range(n):
            acc += X[j, a] * C[a]
        ws[j + 1] = acc + D * ws[j]
    for j in range(ns):
        w = ws[j]
        for a in range(n):
            acc = 0.0
            for b in range(n):
                acc += A[a, b] * X[j, b]
            scratch[a] = acc + B[a] * w
        for a in range(n):
            X[j, a] = scratch[a]


def run_loop(structure, A, B, C, D, n_sections, u, y, theta0, F0,
             lam1, lam2, freeze, feed_prior, div_limit, traj_stride):
    cdef int struct_c = int(structure)
    cdef double[:, ::1] A_v = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[::1] B_v = np.ascontiguousarray(B, dtype=np.float64)
    cdef double[::1] C_v = np.ascontiguousarray(C, dtype=np.float64)
    cdef double D_c = float(D)
    cdef double[::1] u_v = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[::1] y_v = np.ascontiguousarray(y, dtype=np.float64)
    theta_arr = np.array(theta0, dtype=np.float64, copy=True).reshape(-1)
    F_arr = np.array(F0, dtype=np.float64, copy=True)
    cdef double[::1] theta = theta_arr
    cdef double[:, ::1] F = F_arr
    cdef double lam1_c = float(lam1), lam2_c = float(lam2)
    cdef bint freeze_c = bool(freeze), feed_prior_c = bool(feed_prior)
    cdef double div_c = float(div_limit)
    cdef long stride = int(traj_stride)

    cdef Py_ssize_t ns = int(n_sections)
    cdef Py_ssize_t n = B_v.shape[0]
    cdef Py_ssize_t m = ns * n
    cdef Py_ssize_t N = y_v.shape[0]
    cdef Py_ssize_t d = theta.shape[0]

    Xy_arr = np.zeros((ns, n)); Xu_arr = np.zeros((ns, n))
    Xe_arr = np.zeros((ns if struct_c == 1 else 1, n))
    cdef double[:, ::1] Xy = Xy_arr
    cdef double[:, ::1] Xu = Xu_arr
    cdef double[:, ::1] Xe = Xe_arr
    ws_arr = np.empty(ns + 1); scratch_arr = np.empty(n)
    cdef double[::1] ws = ws_arr
    cdef double[::1] scratch = scratch_arr

    eps_arr = np.empty(max(N - 1, 0)); eps_post_arr = np.empty(max(N - 1, 0))
    cdef double[::1] eps = eps_arr
    cdef double[::1] eps_post = eps_post_arr
    sum_arr = np.zeros(d); phi_arr = np.empty(d); g_arr = np.empty(d)
    cdef double[::1] sum_eps_phi = sum_arr
    cdef double[::1] phi = phi_arr
    cdef double[::1] g = g_arr

    traj = []
    traj_idx = []

    cdef double yhat_feed = 0.0
    cdef double e_feed = y_v[0] if (struct_c == 1 and N > 0) else 0.0
    cdef bint diverged = False
    cdef Py_ssize_t steps = 0
    cdef Py_ssize_t t, i, j
    cdef double e_ap, e_po, s_quad, acc, denom, mx

    for t in range(N - 1):
        _push(Xy, ws, A_v, B_v, C_v, D_c,
              yhat_feed if struct_c == 2 else y_v[t], scratch)
        _push(Xu, ws, A_v, B_v, C_v, D_c, u_v[t], scratch)
        for i in range(ns):
            for j in range(n):
                phi[i * n + j] = -Xy[i, j]
                phi[m + i * n + j] = Xu[i, j]
        if struct_c == 1:
            _push(Xe, ws, A_v, B_v, C_v, D_c, e_feed, scratch)
            for i in range(ns):
                for j in range(n):
                    phi[2 * m + i * n + j] = Xe[i, j]

        acc = 0.0
        for i in range(d):
            acc += theta[i] * phi[i]
        e_ap = y_v[t + 1] - acc

        if freeze_c:
            e_po = e_ap
        else:
            s_quad = 0.0
            for i in range(d):
                acc = 0.0
                for j in range(d):
                    acc += F[i, j] * phi[j]
                g[i] = acc
                s_quad += phi[i] * acc
            e_po = e_ap / (1.0 + s_quad)
            for i in range(d):
                theta[i] += g[i] * e_po
            if lam2_c > 0.0:
                denom = lam1_c / lam2_c + s_quad
                for i in range(d):
                    for j in range(d):
                        F[i, j] = (F[i, j] - g[i] * g[j] / denom) / lam1_c
            elif lam1_c != 1.0:
                for i in range(d):
                    for j in range(d):
                        F[i, j] = F[i, j] / lam1_c

        eps[t] = e_ap
        eps_post[t] = e_po
        for i in range(d):
            sum_eps_phi[i] += e_po * phi[i]
        steps = t + 1

        yhat_feed = y_v[t + 1] - e_po
        e_feed = e_ap if feed_prior_c else e_po

        if stride > 0 and (steps % stride == 0 or t == N - 2):
            traj.append(theta_arr.copy())
            traj_idx.append(steps)

        mx = 0.0
        for i in range(d):
            if fabs(theta[i]) > mx:
                mx = fabs(theta[i])
        if not isfinite(e_ap) or mx > div_c:
            diverged = True
            break

    return {
        "eps": eps_arr[:steps],
        "eps_post": eps_post_arr[:steps],
        "theta": theta_arr,
        "F": F_arr,
        "sum_eps_phi": sum_arr,
        "traj": np.array(traj) if traj else None,
        "traj_idx": np.array(traj_idx, dtype=np.int64) if traj_idx else None,
        "diverged": diverged,
        "steps": steps,
    }
