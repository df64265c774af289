"""Compiled inner loops for pulse evaluation and propagation.

The Hamiltonian is real, tridiagonal, with a time-independent
off-diagonal (the RF coupling) and a diagonal that is affine in the
drive frequency.  The kernels exploit that structure and never form
5x5 matrices.
"""

import numba
import numpy as np

# fourth-order commutator-free Magnus weights (two exponentials per step)
_A1 = (3.0 - 2.0 * np.sqrt(3.0)) / 12.0
_A2 = (3.0 + 2.0 * np.sqrt(3.0)) / 12.0
GAUSS_OFFSETS = (0.5 - np.sqrt(3.0) / 6.0, 0.5 + np.sqrt(3.0) / 6.0)

_TAYLOR_TOL = 1e-17
_TAYLOR_MAX = 64


@numba.njit(cache=True, nogil=True)
def modulation(t, amp_re, amp_im, nu, t_offset, t_sign):
    """sum_h 2 Re[A_h (1 + i nu_h tau) exp(i nu_h tau)], tau = off_h + sign_h t."""
    out = np.zeros(t.shape[0])
    for j in range(t.shape[0]):
        s = 0.0
        for h in range(nu.shape[0]):
            tau = t_offset[h] + t_sign[h] * t[j]
            ph = nu[h] * tau
            c = np.cos(ph)
            sn = np.sin(ph)
            s += amp_re[h] * (c - ph * sn) - amp_im[h] * (sn + ph * c)
        out[j] = 2.0 * s
    return out


@numba.njit(cache=True, inline="always")
def _expmv(d0, d1, d2, d3, d4, o0, o1, o2, o3, tau, x0, x1, x2, x3, x4):
    # x <- exp(-i tau H) x by Taylor series; |tau H| is kept small by the caller
    t0 = x0
    t1 = x1
    t2 = x2
    t3 = x3
    t4 = x4
    for k in range(1, _TAYLOR_MAX):
        c = -1j * tau / k
        u0 = c * (d0 * t0 + o0 * t1)
        u1 = c * (o0 * t0 + d1 * t1 + o1 * t2)
        u2 = c * (o1 * t1 + d2 * t2 + o2 * t3)
        u3 = c * (o2 * t2 + d3 * t3 + o3 * t4)
        u4 = c * (o3 * t3 + d4 * t4)
        x0 += u0
        x1 += u1
        x2 += u2
        x3 += u3
        x4 += u4
        t0 = u0
        t1 = u1
        t2 = u2
        t3 = u3
        t4 = u4
        nrm = (abs(u0.real) + abs(u0.imag) + abs(u1.real) + abs(u1.imag)
               + abs(u2.real) + abs(u2.imag) + abs(u3.real) + abs(u3.imag)
               + abs(u4.real) + abs(u4.imag))
        if nrm < _TAYLOR_TOL:
            break
    return x0, x1, x2, x3, x4


@numba.njit(cache=True, nogil=True)
def _split_count(h0, dg, off, fa, fb, h):
    # number of equal sub-steps keeping |h H / 2| <= 0.5 for the Taylor series
    m = 0.0
    for f in (fa, fb):
        for i in range(5):
            v = abs(h0[i] + dg[i] * f)
            if v > m:
                m = v
    m += 2.0 * (abs(off[0]) + abs(off[1]) + abs(off[2]) + abs(off[3]))
    n = int(np.ceil(h * m))
    return max(n, 1)


@numba.njit(cache=True, nogil=True)
def propagate_vectors(h0, dg, off, f1, f2, h, psi0, record):
    """Evolve each row of ``psi0`` through the steps ``h``.

    ``f1``/``f2`` hold the drive frequency at the two Gauss points of each
    step.  ``record[j]`` marks steps after which the state is stored; the
    returned array has shape (record.sum() + 1, r, 5) with the initial
    state first.  Returns the states and the index of the first step at
    which a non-finite value appeared (-1 if none).
    """
    r = psi0.shape[0]
    nrec = 1
    for j in range(record.shape[0]):
        if record[j]:
            nrec += 1
    out = np.empty((nrec, r, 5), np.complex128)
    for a in range(r):
        for i in range(5):
            out[0, a, i] = psi0[a, i]
    o0 = off[0]
    o1 = off[1]
    o2 = off[2]
    o3 = off[3]
    bad = -1
    for a in range(r):
        x0 = psi0[a, 0]
        x1 = psi0[a, 1]
        x2 = psi0[a, 2]
        x3 = psi0[a, 3]
        x4 = psi0[a, 4]
        k = 1
        for j in range(h.shape[0]):
            fa = 2.0 * (_A2 * f1[j] + _A1 * f2[j])
            fb = 2.0 * (_A1 * f1[j] + _A2 * f2[j])
            nsub = _split_count(h0, dg, off, fa, fb, h[j])
            tau = 0.5 * h[j] / nsub
            for _ in range(nsub):
                x0, x1, x2, x3, x4 = _expmv(
                    h0[0] + dg[0] * fa, h0[1] + dg[1] * fa, h0[2] + dg[2] * fa,
                    h0[3] + dg[3] * fa, h0[4] + dg[4] * fa,
                    o0, o1, o2, o3, tau, x0, x1, x2, x3, x4)
            for _ in range(nsub):
                x0, x1, x2, x3, x4 = _expmv(
                    h0[0] + dg[0] * fb, h0[1] + dg[1] * fb, h0[2] + dg[2] * fb,
                    h0[3] + dg[3] * fb, h0[4] + dg[4] * fb,
                    o0, o1, o2, o3, tau, x0, x1, x2, x3, x4)
            if bad < 0 and not (np.isfinite(x0.real) and np.isfinite(x0.imag)
                                and np.isfinite(x4.real) and np.isfinite(x4.imag)):
                bad = j
            if record[j]:
                out[k, a, 0] = x0
                out[k, a, 1] = x1
                out[k, a, 2] = x2
                out[k, a, 3] = x3
                out[k, a, 4] = x4
                k += 1
    return out, bad


@numba.njit(cache=True, inline="always")
def _gksl_rhs(diag, off, gam, rho, out):
    # -i[H, rho] - (g_n + g_m) rho_nm for n != m
    for n in range(5):
        for m in range(5):
            hr = diag[n] * rho[n, m]
            if n > 0:
                hr += off[n - 1] * rho[n - 1, m]
            if n < 4:
                hr += off[n] * rho[n + 1, m]
            rh = rho[n, m] * diag[m]
            if m > 0:
                rh += rho[n, m - 1] * off[m - 1]
            if m < 4:
                rh += rho[n, m + 1] * off[m]
            v = -1j * (hr - rh)
            if n != m:
                v -= (gam[n] + gam[m]) * rho[n, m]
            out[n, m] = v


@numba.njit(cache=True, nogil=True)
def gksl_rk4(h0, dg, off, gam, fa, fm, fb, h, rho0, record):
    """Classical RK4 for the dephasing GKSL equation.

    ``fa``, ``fm``, ``fb`` are the drive frequency at the start, middle and
    end of each step.  Output layout matches ``propagate_vectors``.
    """
    nrec = 1
    for j in range(record.shape[0]):
        if record[j]:
            nrec += 1
    out = np.empty((nrec, 5, 5), np.complex128)
    rho = rho0.copy()
    out[0] = rho
    k1 = np.empty((5, 5), np.complex128)
    k2 = np.empty((5, 5), np.complex128)
    k3 = np.empty((5, 5), np.complex128)
    k4 = np.empty((5, 5), np.complex128)
    tmp = np.empty((5, 5), np.complex128)
    da = np.empty(5)
    dm = np.empty(5)
    db = np.empty(5)
    k = 1
    bad = -1
    for j in range(h.shape[0]):
        for i in range(5):
            da[i] = h0[i] + dg[i] * fa[j]
            dm[i] = h0[i] + dg[i] * fm[j]
            db[i] = h0[i] + dg[i] * fb[j]
        hj = h[j]
        _gksl_rhs(da, off, gam, rho, k1)
        for n in range(5):
            for m in range(5):
                tmp[n, m] = rho[n, m] + 0.5 * hj * k1[n, m]
        _gksl_rhs(dm, off, gam, tmp, k2)
        for n in range(5):
            for m in range(5):
                tmp[n, m] = rho[n, m] + 0.5 * hj * k2[n, m]
        _gksl_rhs(dm, off, gam, tmp, k3)
        for n in range(5):
            for m in range(5):
                tmp[n, m] = rho[n, m] + hj * k3[n, m]
        _gksl_rhs(db, off, gam, tmp, k4)
        for n in range(5):
            for m in range(5):
                rho[n, m] += hj / 6.0 * (k1[n, m] + 2.0 * k2[n, m] + 2.0 * k3[n, m] + k4[n, m])
        if bad < 0 and not np.isfinite(rho[0, 0].real):
            bad = j
        if record[j]:
            out[k] = rho
            k += 1
    return out, bad


_GAUSS_HALF = np.sqrt(3.0) / 6.0


@numba.njit(cache=True, nogil=True)
def _mod_point(t, amp_re, amp_im, nu, t_offset, t_sign):
    s = 0.0
    for h in range(nu.shape[0]):
        ph = nu[h] * (t_offset[h] + t_sign[h] * t)
        c = np.cos(ph)
        sn = np.sin(ph)
        s += amp_re[h] * (c - ph * sn) - amp_im[h] * (sn + ph * c)
    return 2.0 * s


@numba.njit(cache=True, nogil=True)
def _gauss_pair(t0, hstep, carrier, lo, hi, amp_re, amp_im, nu, t_offset, t_sign):
    tm = t0 + 0.5 * hstep
    d = _GAUSS_HALF * hstep
    a = _mod_point(tm - d, amp_re, amp_im, nu, t_offset, t_sign)
    b = _mod_point(tm + d, amp_re, amp_im, nu, t_offset, t_sign)
    fa = min(max(carrier * (1.0 + a), lo), hi)
    fb = min(max(carrier * (1.0 + b), lo), hi)
    return fa, fb


@numba.njit(cache=True, nogil=True)
def _bisect_edge(ta, tb, edge, carrier, amp_re, amp_im, nu, t_offset, t_sign):
    ga = carrier * (1.0 + _mod_point(ta, amp_re, amp_im, nu, t_offset, t_sign)) - edge
    for _ in range(80):
        tmid = 0.5 * (ta + tb)
        if tmid <= ta or tmid >= tb:
            break
        gm = carrier * (1.0 + _mod_point(tmid, amp_re, amp_im, nu, t_offset, t_sign)) - edge
        if (gm > 0.0) == (ga > 0.0):
            ta = tmid
            ga = gm
        else:
            tb = tmid
    return 0.5 * (ta + tb)


@numba.njit(cache=True, nogil=True)
def drive_grid(T, dt, n, carrier, lo, hi, amp_re, amp_im, nu, t_offset, t_sign):
    """Integration grid for a clamped pulse.

    Regular steps of ``dt`` (the last one ends at T) are split wherever
    the unclamped drive crosses ``lo`` or ``hi``.  Returns the step
    boundaries, the clamped drive at the two Gauss points of every step,
    and for every step the index of the regular node it ends on (-1 for
    split points).
    """
    nh = nu.shape[0]
    # Gauss samples of the regular steps; one sin/cos per harmonic per step
    g1 = np.empty(n)
    g2 = np.empty(n)
    for j in range(n):
        t0 = j * dt
        hstep = (T - t0) if j == n - 1 else dt
        tm = t0 + 0.5 * hstep
        d = _GAUSS_HALF * hstep
        sa = 0.0
        sb = 0.0
        for q in range(nh):
            ph = nu[q] * (t_offset[q] + t_sign[q] * tm)
            dp = nu[q] * t_sign[q] * d
            c = np.cos(ph)
            s = np.sin(ph)
            cd = np.cos(dp)
            sd = np.sin(dp)
            # phase ph - dp and ph + dp
            ca = c * cd + s * sd
            sa_ = s * cd - c * sd
            cb = c * cd - s * sd
            sb_ = s * cd + c * sd
            pa = ph - dp
            pb = ph + dp
            sa += amp_re[q] * (ca - pa * sa_) - amp_im[q] * (sa_ + pa * ca)
            sb += amp_re[q] * (cb - pb * sb_) - amp_im[q] * (sb_ + pb * cb)
        g1[j] = carrier * (1.0 + 2.0 * sa)
        g2[j] = carrier * (1.0 + 2.0 * sb)
    # sign changes along 0, g1_0, g2_0, g1_1, ..., g2_{n-1}, T
    r0 = carrier * (1.0 + _mod_point(0.0, amp_re, amp_im, nu, t_offset, t_sign))
    rT = carrier * (1.0 + _mod_point(T, amp_re, amp_im, nu, t_offset, t_sign))
    roots = np.empty(4 * n + 4)
    nroot = 0
    if nh > 0:
        for e in range(2):
            edge = lo if e == 0 else hi
            prev_t = 0.0
            prev_v = r0 - edge
            for idx in range(2 * n + 1):
                if idx < 2 * n:
                    j = idx // 2
                    t0 = j * dt
                    hstep = (T - t0) if j == n - 1 else dt
                    off = (0.5 - _GAUSS_HALF) if idx % 2 == 0 else (0.5 + _GAUSS_HALF)
                    cur_t = t0 + off * hstep
                    cur_v = (g1[j] if idx % 2 == 0 else g2[j]) - edge
                else:
                    cur_t = T
                    cur_v = rT - edge
                if (cur_v > 0.0) != (prev_v > 0.0) and cur_v != 0.0 and prev_v != 0.0:
                    roots[nroot] = _bisect_edge(prev_t, cur_t, edge, carrier,
                                                amp_re, amp_im, nu, t_offset, t_sign)
                    nroot += 1
                prev_t = cur_t
                prev_v = cur_v
    roots = np.sort(roots[:nroot])
    # merge: boundaries = regular nodes plus roots not within 1e-6 dt of a node
    cap = n + nroot
    bounds = np.empty(cap + 1)
    labels = np.empty(cap, np.int64)
    f1 = np.empty(cap)
    f2 = np.empty(cap)
    bounds[0] = 0.0
    m = 0
    r = 0
    for j in range(n):
        t0 = j * dt
        t1 = T if j == n - 1 else (j + 1) * dt
        start = t0
        split = False
        while r < nroot and roots[r] < t1:
            tr = roots[r]
            r += 1
            if tr - start > 1e-6 * dt and t1 - tr > 1e-6 * dt:
                fa, fb = _gauss_pair(start, tr - start, carrier, lo, hi,
                                     amp_re, amp_im, nu, t_offset, t_sign)
                f1[m] = fa
                f2[m] = fb
                labels[m] = -1
                m += 1
                bounds[m] = tr
                start = tr
                split = True
        if split:
            fa, fb = _gauss_pair(start, t1 - start, carrier, lo, hi,
                                 amp_re, amp_im, nu, t_offset, t_sign)
        else:
            fa = min(max(g1[j], lo), hi)
            fb = min(max(g2[j], lo), hi)
        f1[m] = fa
        f2[m] = fb
        labels[m] = j + 1
        m += 1
        bounds[m] = t1
    return bounds[:m + 1], f1[:m], f2[:m], labels[:m]


@numba.njit(cache=True, nogil=True)
def _liouville_expmv(diag, off, gam, tau, rho, term, tmp):
    # rho <- exp(tau L) rho, L = -i[H, .] + dephasing; Taylor series
    for n in range(5):
        for m in range(5):
            term[n, m] = rho[n, m]
    for k in range(1, _TAYLOR_MAX):
        _gksl_rhs(diag, off, gam, term, tmp)
        c = tau / k
        nrm = 0.0
        for n in range(5):
            for m in range(5):
                v = c * tmp[n, m]
                term[n, m] = v
                rho[n, m] += v
                nrm += abs(v.real) + abs(v.imag)
        if nrm < _TAYLOR_TOL:
            break


@numba.njit(cache=True, nogil=True)
def gksl_magnus(h0, dg, off, gam, f1, f2, h, rho0, record):
    """Dephasing GKSL equation with the same two-exponential Magnus step.

    Both exponentials carry half of the dissipator, so every factor is
    itself a dephasing semigroup.  Output layout matches ``gksl_rk4``.
    """
    nrec = 1
    for j in range(record.shape[0]):
        if record[j]:
            nrec += 1
    out = np.empty((nrec, 5, 5), np.complex128)
    rho = rho0.copy()
    out[0] = rho
    term = np.empty((5, 5), np.complex128)
    tmp = np.empty((5, 5), np.complex128)
    da = np.empty(5)
    db = np.empty(5)
    gmax = 0.0
    for i in range(5):
        if gam[i] > gmax:
            gmax = gam[i]
    k = 1
    bad = -1
    for j in range(h.shape[0]):
        fa = 2.0 * (_A2 * f1[j] + _A1 * f2[j])
        fb = 2.0 * (_A1 * f1[j] + _A2 * f2[j])
        for i in range(5):
            da[i] = h0[i] + dg[i] * fa
            db[i] = h0[i] + dg[i] * fb
        nsub = _split_count(h0, dg, off, fa, fb, h[j])
        nsub = max(nsub, int(np.ceil(h[j] * gmax)))
        tau = 0.5 * h[j] / nsub
        for _ in range(nsub):
            _liouville_expmv(da, off, gam, tau, rho, term, tmp)
        for _ in range(nsub):
            _liouville_expmv(db, off, gam, tau, rho, term, tmp)
        if bad < 0 and not np.isfinite(rho[0, 0].real):
            bad = j
        if record[j]:
            out[k] = rho
            k += 1
    return out, bad
