# cython: language_level=3
# cython: boundscheck=False
# cython: wraparound=False
# cython: cdivision=True
# cython: initializedcheck=False
"""Compiled kernels.

Semantic twin of mixeq._kernels_py: same branch structure, tie-breaks and
stopping rules, with the hot loops released from the GIL so multi-threaded
sweeps actually run in parallel. Outputs agree with the reference backend to
solver tolerances (not bitwise; summation orders differ).
"""

from libc.math cimport INFINITY, fabs, pow, sqrt

import numpy as np

BACKEND = "compiled"

# support-search stack bounds: at most 20 paths, so at most 2*20+1 stacked
# rows and 20+2 unknowns
cdef enum:
    P_CAP = 20
    COL_CAP = 22
    ROW_CAP = 41


cdef inline double _plpow(double f, double n) nogil:
    if n == 1.0:
        return f
    if f <= 0.0:
        return 0.0
    return pow(f, n)


# ---------------------------------------------------------------------------
# away-step Frank-Wolfe on the scaled simplex
# ---------------------------------------------------------------------------

cdef double _dphi(const double[::1] w, const double[::1] bb, const double[::1] nn,
                  const double[::1] f_fixed, const double[::1] f_own,
                  const double[::1] df, double g, Py_ssize_t n_links) nogil:
    cdef double acc = 0.0
    cdef double ff
    cdef Py_ssize_t l
    for l in range(n_links):
        ff = f_fixed[l] + f_own[l] + g * df[l]
        if ff < 0.0:
            ff = 0.0
        acc += df[l] * (w[l] * _plpow(ff, nn[l]) + bb[l])
    return acc


cdef double _exact_step(const double[::1] w, const double[::1] bb, const double[::1] nn,
                        const double[::1] f_fixed, const double[::1] f_own,
                        const double[::1] df, double g_max, Py_ssize_t n_links) nogil:
    cdef double lo = 0.0
    cdef double hi = g_max
    cdef double mid
    cdef int i
    if _dphi(w, bb, nn, f_fixed, f_own, df, g_max, n_links) <= 0.0:
        return g_max
    for i in range(80):
        mid = 0.5 * (lo + hi)
        if _dphi(w, bb, nn, f_fixed, f_own, df, mid, n_links) <= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def fw_simplex(const double[:, ::1] delta, const double[::1] kk, const double[::1] bb,
               const double[::1] nn, const double[::1] f_fixed, double demand,
               bint marginal, double[::1] x, double tol, int max_iter):
    """Away-step Frank-Wolfe on {x >= 0, sum x = demand}, updating x in place.

    Compiled counterpart of mixeq._kernels_py.fw_simplex; see there for the
    full contract. Returns (gap, iterations, converged).
    """
    cdef Py_ssize_t n_links = delta.shape[0]
    cdef Py_ssize_t n_paths = delta.shape[1]
    cdef Py_ssize_t l, p, s, v
    cdef double total, cx, gap, best_gap, gap_away, g_max, gamma, denom, tl, rest, gap_dir
    cdef bint converged = False
    cdef bint linear = True
    cdef bint full_fw
    cdef int it = 0
    cdef int best_iter = 0

    if demand <= 0.0:
        for p in range(n_paths):
            x[p] = 0.0
        return 0.0, 0, True

    w_arr = np.empty(n_links)
    f_own_arr = np.empty(n_links)
    df_arr = np.empty(n_links)
    c_arr = np.empty(n_paths)
    d_arr = np.empty(n_paths)
    best_arr = np.empty(n_paths)
    cdef double[::1] w = w_arr
    cdef double[::1] f_own = f_own_arr
    cdef double[::1] df = df_arr
    cdef double[::1] c = c_arr
    cdef double[::1] d_vec = d_arr
    cdef double[::1] best_x = best_arr

    with nogil:
        # defensive renormalization of the warm start
        total = 0.0
        for p in range(n_paths):
            if x[p] < 0.0:
                x[p] = 0.0
            total += x[p]
        if total <= 0.0:
            for p in range(n_paths):
                x[p] = 0.0
            x[0] = demand
        else:
            for p in range(n_paths):
                x[p] *= demand / total

        for l in range(n_links):
            w[l] = (nn[l] + 1.0) * kk[l] if marginal else kk[l]
            if nn[l] != 1.0:
                linear = False

        for l in range(n_links):
            tl = 0.0
            for p in range(n_paths):
                tl += delta[l, p] * x[p]
            f_own[l] = tl

        best_gap = INFINITY
        gap = INFINITY
        s = 0
        v = 0
        for p in range(n_paths):
            best_x[p] = x[p]

        for it in range(1, max_iter + 1):
            if it % 512 == 0:
                for l in range(n_links):
                    tl = 0.0
                    for p in range(n_paths):
                        tl += delta[l, p] * x[p]
                    f_own[l] = tl
            # path gradient c = delta^T (w f^n + b)
            for p in range(n_paths):
                c[p] = 0.0
            for l in range(n_links):
                tl = w[l] * _plpow(f_fixed[l] + f_own[l], nn[l]) + bb[l]
                for p in range(n_paths):
                    c[p] += delta[l, p] * tl
            cx = 0.0
            for p in range(n_paths):
                cx += c[p] * x[p]
            s = 0
            for p in range(1, n_paths):
                if c[p] < c[s]:
                    s = p
            gap = cx - demand * c[s]
            if gap < best_gap:
                best_gap = gap
                for p in range(n_paths):
                    best_x[p] = x[p]
                best_iter = it
            if gap <= tol * (1.0 if fabs(cx) < 1.0 else fabs(cx)):
                converged = True
                break
            if it - best_iter > 300:
                break

            # away vertex: worst gradient on the support, lowest index on ties
            v = -1
            for p in range(n_paths):
                if x[p] > 0.0 and (v < 0 or c[p] > c[v]):
                    v = p
            if v < 0:
                v = 0
            gap_away = demand * c[v] - cx

            full_fw = gap >= gap_away
            if full_fw:
                g_max = 1.0
                gap_dir = gap
                for p in range(n_paths):
                    d_vec[p] = -x[p]
                d_vec[s] += demand
            else:
                rest = demand - x[v]
                g_max = x[v] / rest if rest > 1e-300 else 1e12
                gap_dir = gap_away
                for p in range(n_paths):
                    d_vec[p] = x[p]
                d_vec[v] -= demand
            for l in range(n_links):
                tl = 0.0
                for p in range(n_paths):
                    tl += delta[l, p] * d_vec[p]
                df[l] = tl

            if linear:
                denom = 0.0
                for l in range(n_links):
                    denom += w[l] * df[l] * df[l]
                if denom <= 0.0:
                    gamma = g_max
                else:
                    gamma = gap_dir / denom
                    if gamma > g_max:
                        gamma = g_max
            else:
                gamma = _exact_step(w, bb, nn, f_fixed, f_own, df, g_max, n_links)
            if gamma <= 0.0:
                break

            for p in range(n_paths):
                x[p] += gamma * d_vec[p]
            for l in range(n_links):
                f_own[l] += gamma * df[l]
                if f_own[l] < 0.0:
                    f_own[l] = 0.0
            if full_fw and gamma >= 1.0:
                for p in range(n_paths):
                    x[p] = 0.0
                x[s] = demand
                for l in range(n_links):
                    f_own[l] = delta[l, s] * demand
            elif (not full_fw) and gamma >= g_max * (1.0 - 1e-15):
                x[v] = 0.0
            for p in range(n_paths):
                if x[p] < 0.0:
                    x[p] = 0.0

        if (not converged) and best_gap < gap:
            for p in range(n_paths):
                x[p] = best_x[p]
            gap = best_gap
        total = 0.0
        for p in range(n_paths):
            total += x[p]
        if total > 0.0:
            for p in range(n_paths):
                x[p] *= demand / total

    return gap, it, converged


# ---------------------------------------------------------------------------
# two-class support enumeration (linear path costs)
# ---------------------------------------------------------------------------

cdef bint _next_comb(int* idx, int k, int n) nogil:
    # advance an ascending k-subset of range(n) to its lexicographic successor
    cdef int i = k - 1
    cdef int j
    while i >= 0 and idx[i] == n - k + i:
        i -= 1
    if i < 0:
        return False
    idx[i] += 1
    for j in range(i + 1, k):
        idx[j] = idx[j - 1] + 1
    return True


cdef void _jacobi(double* b, double* v, int m) nogil:
    # cyclic Jacobi eigendecomposition of the symmetric m x m matrix b
    # (row stride COL_CAP); leaves eigenvalues on the diagonal of b and the
    # eigenvectors in the columns of v
    cdef int i, p, q, sweep
    cdef double norm0, off, apq, theta, t, cth, sth, bp, bq
    for i in range(m):
        for p in range(m):
            v[i * COL_CAP + p] = 1.0 if i == p else 0.0
    norm0 = 0.0
    for p in range(m):
        for q in range(m):
            norm0 += b[p * COL_CAP + q] * b[p * COL_CAP + q]
    if norm0 <= 0.0:
        return
    for sweep in range(60):
        off = 0.0
        for p in range(m - 1):
            for q in range(p + 1, m):
                off += b[p * COL_CAP + q] * b[p * COL_CAP + q]
        if off <= 1e-30 * norm0:
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = b[p * COL_CAP + q]
                if apq == 0.0:
                    continue
                theta = 0.5 * (b[q * COL_CAP + q] - b[p * COL_CAP + p]) / apq
                t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                cth = 1.0 / sqrt(t * t + 1.0)
                sth = t * cth
                for i in range(m):
                    bp = b[i * COL_CAP + p]
                    bq = b[i * COL_CAP + q]
                    b[i * COL_CAP + p] = cth * bp - sth * bq
                    b[i * COL_CAP + q] = sth * bp + cth * bq
                for i in range(m):
                    bp = b[p * COL_CAP + i]
                    bq = b[q * COL_CAP + i]
                    b[p * COL_CAP + i] = cth * bp - sth * bq
                    b[q * COL_CAP + i] = sth * bp + cth * bq
                for i in range(m):
                    bp = v[i * COL_CAP + p]
                    bq = v[i * COL_CAP + q]
                    v[i * COL_CAP + p] = cth * bp - sth * bq
                    v[i * COL_CAP + q] = sth * bp + cth * bq


cdef bint _try_pair_c(const double[:, ::1] m_path, const double[::1] c0, double alpha,
                      const int* vh, int size_h, const int* va, int size_a,
                      double slack, double clamp,
                      double* x, double* lam_h_out, double* lam_a_out) nogil:
    cdef int p_count = <int> c0.shape[0]
    cdef bint insup[P_CAP]
    cdef int colof[P_CAP]
    cdef int support[P_CAP]
    cdef double a_mat[ROW_CAP * COL_CAP]
    cdef double rhs[ROW_CAP]
    cdef double bsq[COL_CAP * COL_CAP]
    cdef double vmat[COL_CAP * COL_CAP]
    cdef double g[COL_CAP]
    cdef double sol[COL_CAP]
    cdef double chv[P_CAP]
    cdef double cav[P_CAP]
    cdef int n_u = 0
    cdef int i, j, r, p, m, rows
    cdef bint disjoint
    cdef double acc, lam_max, cut, lam, proj, val, total_x, sum_h, sum_a, lam_h, lam_a

    for i in range(p_count):
        insup[i] = False
    for i in range(size_h):
        insup[vh[i]] = True
    for i in range(size_a):
        insup[va[i]] = True
    for i in range(p_count):
        if insup[i]:
            colof[i] = n_u
            support[n_u] = i
            n_u += 1
    m = n_u + 2
    # with no shared path the equal-cost rows leave one degree of freedom,
    # pinned by anchoring the human mass; shared paths make that an
    # inequality instead, checked after solving
    disjoint = n_u == size_h + size_a
    rows = size_h + size_a + 1 + (1 if disjoint else 0)

    # stacked equal-cost system: human rows, autonomous rows, mass row(s)
    for r in range(rows):
        for j in range(m):
            a_mat[r * COL_CAP + j] = 0.0
    r = 0
    for i in range(size_h):
        p = vh[i]
        for j in range(n_u):
            a_mat[r * COL_CAP + j] = m_path[p, support[j]]
        a_mat[r * COL_CAP + n_u] = -1.0
        rhs[r] = -c0[p]
        r += 1
    for i in range(size_a):
        p = va[i]
        for j in range(n_u):
            a_mat[r * COL_CAP + j] = 2.0 * m_path[p, support[j]]
        a_mat[r * COL_CAP + n_u + 1] = -1.0
        rhs[r] = -c0[p]
        r += 1
    for j in range(n_u):
        a_mat[r * COL_CAP + j] = 1.0
    rhs[r] = 1.0
    if disjoint:
        r += 1
        for i in range(size_h):
            a_mat[r * COL_CAP + colof[vh[i]]] = 1.0
        rhs[r] = 1.0 - alpha

    # minimum-norm least squares through the eigen-pinv of the normal matrix;
    # the eigenvalue cut 1e-20 * lam_max matches an SVD cutoff of 1e-10 on
    # singular values
    for i in range(m):
        acc = 0.0
        for r in range(rows):
            acc += a_mat[r * COL_CAP + i] * rhs[r]
        g[i] = acc
        for j in range(i, m):
            acc = 0.0
            for r in range(rows):
                acc += a_mat[r * COL_CAP + i] * a_mat[r * COL_CAP + j]
            bsq[i * COL_CAP + j] = acc
            bsq[j * COL_CAP + i] = acc
    _jacobi(bsq, vmat, m)
    lam_max = 0.0
    for i in range(m):
        if bsq[i * COL_CAP + i] > lam_max:
            lam_max = bsq[i * COL_CAP + i]
    if lam_max <= 0.0:
        return False
    cut = 1e-20 * lam_max
    for i in range(m):
        sol[i] = 0.0
    for j in range(m):
        lam = bsq[j * COL_CAP + j]
        if lam > cut:
            proj = 0.0
            for i in range(m):
                proj += vmat[i * COL_CAP + j] * g[i]
            proj /= lam
            for i in range(m):
                sol[i] += vmat[i * COL_CAP + j] * proj

    for i in range(p_count):
        x[i] = 0.0
    for j in range(n_u):
        val = sol[j]
        if val < -clamp:
            return False
        x[support[j]] = val if val > 0.0 else 0.0
    total_x = 0.0
    for i in range(p_count):
        total_x += x[i]
    if fabs(total_x - 1.0) > slack:
        return False

    # equilibrium conditions verified on the clamped solution
    for i in range(p_count):
        acc = 0.0
        for j in range(p_count):
            acc += m_path[i, j] * x[j]
        chv[i] = acc + c0[i]
        cav[i] = 2.0 * acc + c0[i]
    lam_h = chv[0]
    lam_a = cav[0]
    for i in range(1, p_count):
        if chv[i] < lam_h:
            lam_h = chv[i]
        if cav[i] < lam_a:
            lam_a = cav[i]
    for i in range(size_h):
        if chv[vh[i]] > lam_h + slack:
            return False
    for i in range(size_a):
        if cav[va[i]] > lam_a + slack:
            return False
    sum_h = 0.0
    for i in range(size_h):
        sum_h += x[vh[i]]
    if sum_h < (1.0 - alpha) - slack:
        return False
    sum_a = 0.0
    for i in range(size_a):
        sum_a += x[va[i]]
    if sum_a < alpha - slack:
        return False
    lam_h_out[0] = lam_h
    lam_a_out[0] = lam_a
    return True


def mixed_support_search(const double[:, ::1] m_path, const double[::1] c0,
                         double alpha, double slack, double clamp):
    """Two-class support enumeration for linear path costs.

    Compiled counterpart of mixeq._kernels_py.mixed_support_search; identical
    candidate order and acceptance tests. Instances beyond the compiled path
    bound (20 paths) are delegated to the reference backend.
    """
    cdef int p_count = <int> c0.shape[0]
    if p_count > P_CAP:
        import mixeq._kernels_py as ref
        return ref.mixed_support_search(np.asarray(m_path), np.asarray(c0),
                                        alpha, slack, clamp)

    cdef int vh_idx[P_CAP]
    cdef int va_idx[P_CAP]
    cdef double x_buf[P_CAP]
    cdef double lam_h = 0.0
    cdef double lam_a = 0.0
    cdef long long n_tried = 0
    cdef int total, size_h, size_a, lo, hi, i
    cdef bint found = False
    cdef bint more_h, more_a

    with nogil:
        for total in range(2, 2 * p_count + 1):
            lo = total - p_count
            if lo < 1:
                lo = 1
            hi = total - 1
            if hi > p_count:
                hi = p_count
            for size_h in range(lo, hi + 1):
                size_a = total - size_h
                for i in range(size_h):
                    vh_idx[i] = i
                more_h = True
                while more_h:
                    for i in range(size_a):
                        va_idx[i] = i
                    more_a = True
                    while more_a:
                        n_tried += 1
                        if _try_pair_c(m_path, c0, alpha, vh_idx, size_h,
                                       va_idx, size_a, slack, clamp,
                                       x_buf, &lam_h, &lam_a):
                            found = True
                            break
                        more_a = _next_comb(va_idx, size_a, p_count)
                    if found:
                        break
                    more_h = _next_comb(vh_idx, size_h, p_count)
                if found:
                    break
            if found:
                break

    x_out = np.zeros(p_count)
    vh_mask = np.zeros(p_count, dtype=np.uint8)
    va_mask = np.zeros(p_count, dtype=np.uint8)
    if not found:
        return False, x_out, float("nan"), float("nan"), vh_mask, va_mask, int(n_tried)
    cdef double[::1] xv = x_out
    cdef unsigned char[::1] hm = vh_mask
    cdef unsigned char[::1] am = va_mask
    for i in range(p_count):
        xv[i] = x_buf[i]
    for i in range(size_h):
        hm[vh_idx[i]] = 1
    for i in range(size_a):
        am[va_idx[i]] = 1
    return True, x_out, lam_h, lam_a, vh_mask, va_mask, int(n_tried)
