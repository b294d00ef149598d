"""Compiled numerical kernels for the arm metric and geodesic integration.

Everything here is a plain-array mirror of the public dynamics/geodesic
operations, jitted so that shooting solves stay interactive.  Parameter
packing:

``P`` (len 14): l_u, l_f, m_u, com_u, Iu_t1, Iu_t2, Iu_a,
                m_f, com_f, If_t1, If_t2, If_a, reg, couple_shoulder(0/1)

``RP`` (len 14): d0, pr_mode(0 normalized / 1 degrees / 2 radians),
                 6 elevation/depression coeffs, 3 protraction coeffs,
                 3 radial-scale coeffs

All angles in radians except inside the rhythm polynomials (degrees).
No fastmath: results must be bitwise reproducible across runs and threads.
"""

import math

import numpy as np
from numba import njit

DEG = math.pi / 180.0


@njit(cache=True, inline="always")
def _horner(c, lo, hi, x):
    r = 0.0
    for i in range(lo, hi):
        r = r * x + c[i]
    return r


@njit(cache=True, inline="always")
def _horner_deriv(c, lo, hi, x):
    # derivative of the degree-(hi-lo-1) polynomial with coefficients c[lo:hi]
    n = hi - lo - 1
    r = 0.0
    for i in range(lo, hi - 1):
        r = r * x + c[i] * (n - (i - lo))
    return r


@njit(cache=True)
def gh_dtheta(theta_rad, rp, out):
    """d(GH center)/d(theta_rad), meters per radian, into out (3,)."""
    theta = theta_rad / DEG
    if theta < 0.0:
        theta = 0.0
    elif theta > 180.0:
        theta = 180.0

    d0 = rp[0]
    mode = rp[1]
    phi_ed = _horner(rp, 2, 8, theta)
    dphi_ed = _horner_deriv(rp, 2, 8, theta)

    if mode == 1.0:
        x_pr = theta
        dx_pr = 1.0
    elif mode == 2.0:
        x_pr = theta * DEG
        dx_pr = DEG
    else:
        x_pr = theta / 180.0
        dx_pr = 1.0 / 180.0
    # protraction poly has degree 3..1 with no constant term
    phi_pr = (_horner(rp, 8, 11, x_pr)) * x_pr
    dphi_pr = (3.0 * rp[8] * x_pr * x_pr + 2.0 * rp[9] * x_pr + rp[10]) * dx_pr

    d_sg = d0 * _horner(rp, 11, 14, theta)
    dd_sg = d0 * _horner_deriv(rp, 11, 14, theta)

    e = phi_ed * DEG
    p = phi_pr * DEG
    ce = math.cos(e)
    se = math.sin(e)
    cp = math.cos(p)
    sp = math.sin(p)

    de = dphi_ed * DEG
    dp = dphi_pr * DEG
    # d/d(theta_deg) of d_sg * (ce*sp, ce*cp, se), then to per-radian
    out[0] = (dd_sg * ce * sp + d_sg * (-se * sp * de + ce * cp * dp)) / DEG
    out[1] = (dd_sg * ce * cp + d_sg * (-se * cp * de - ce * sp * dp)) / DEG
    out[2] = (dd_sg * se + d_sg * ce * de) / DEG


@njit(cache=True)
def mass_matrix(q, P, rp):
    """Generalized inertia M(q) of the two-link arm, (4, 4)."""
    lu = P[0]
    lf = P[1]
    mu = P[2]
    ru = P[3]
    mf = P[7]
    rf = P[8]
    reg = P[12]
    couple = P[13] != 0.0

    st = math.sin(q[0])
    ct = math.cos(q[0])
    sn = math.sin(q[1])
    cn = math.cos(q[1])
    sz = math.sin(q[2])
    cz = math.cos(q[2])
    sp = math.sin(q[3])
    cp = math.cos(q[3])

    u = np.empty(3)
    e2 = np.empty(3)
    e3 = np.empty(3)
    du_dn = np.empty(3)
    de2_dn = np.empty(3)
    de3_dn = np.empty(3)
    u[0] = -st * sn
    u[1] = st * cn
    u[2] = -ct
    e2[0] = -ct * sn
    e2[1] = ct * cn
    e2[2] = st
    e3[0] = cn
    e3[1] = sn
    e3[2] = 0.0
    du_dn[0] = -st * cn
    du_dn[1] = -st * sn
    du_dn[2] = 0.0
    de2_dn[0] = -ct * cn
    de2_dn[1] = -ct * sn
    de2_dn[2] = 0.0
    de3_dn[0] = -sn
    de3_dn[1] = cn
    de3_dn[2] = 0.0

    w = np.empty(3)
    nel = np.empty(3)
    f = np.empty(3)
    for i in range(3):
        w[i] = cz * e2[i] + sz * e3[i]
        nel[i] = cz * e3[i] - sz * e2[i]
        f[i] = cp * u[i] + sp * w[i]

    dxsh = np.zeros(3)
    if couple:
        gh_dtheta(q[0], rp, dxsh)

    # position Jacobians of the two centers of mass
    Jvu = np.zeros((3, 4))
    Jvf = np.zeros((3, 4))
    for i in range(3):
        Jvu[i, 0] = ru * lu * e2[i] + dxsh[i]
        Jvu[i, 1] = ru * lu * du_dn[i]
        df_dt = cp * e2[i] - sp * cz * u[i]
        df_dn = cp * du_dn[i] + sp * (cz * de2_dn[i] + sz * de3_dn[i])
        Jvf[i, 0] = dxsh[i] + lu * e2[i] + rf * lf * df_dt
        Jvf[i, 1] = lu * du_dn[i] + rf * lf * df_dn
        Jvf[i, 2] = rf * lf * sp * nel[i]
        Jvf[i, 3] = rf * lf * (cp * w[i] - sp * u[i])

    # angular velocity Jacobians (world frame): columns are joint axes
    Jwu = np.zeros((3, 4))
    Jwf = np.zeros((3, 4))
    for i in range(3):
        Jwu[i, 0] = e3[i]
        Jwu[i, 2] = u[i]
        Jwf[i, 0] = e3[i]
        Jwf[i, 2] = u[i]
        Jwf[i, 3] = nel[i]
    Jwu[2, 1] = 1.0
    Jwf[2, 1] = 1.0

    M = np.zeros((4, 4))

    # translational terms m * Jv^T Jv
    for i in range(4):
        for j in range(4):
            su = 0.0
            sf = 0.0
            for k in range(3):
                su += Jvu[k, i] * Jvu[k, j]
                sf += Jvf[k, i] * Jvf[k, j]
            M[i, j] += mu * su + mf * sf

    # rotational terms J_w^T (R diag(I) R^T) J_w, expanded over the principal
    # axes: body frames are {w, nel, u} (upper) and {cp*w - sp*u, nel, f}
    fx = np.empty(3)
    for i in range(3):
        fx[i] = cp * w[i] - sp * u[i]

    g = np.empty(4)
    for a in range(3):
        if a == 0:
            axu = w
            Iu = P[4]
        elif a == 1:
            axu = nel
            Iu = P[5]
        else:
            axu = u
            Iu = P[6]
        for j in range(4):
            g[j] = axu[0] * Jwu[0, j] + axu[1] * Jwu[1, j] + axu[2] * Jwu[2, j]
        for i in range(4):
            for j in range(4):
                M[i, j] += Iu * g[i] * g[j]

    for a in range(3):
        if a == 0:
            axf = fx
            If = P[9]
        elif a == 1:
            axf = nel
            If = P[10]
        else:
            axf = f
            If = P[11]
        for j in range(4):
            g[j] = axf[0] * Jwf[0, j] + axf[1] * Jwf[1, j] + axf[2] * Jwf[2, j]
        for i in range(4):
            for j in range(4):
                M[i, j] += If * g[i] * g[j]

    for i in range(4):
        M[i, i] += reg
    return M


@njit(cache=True)
def dmass_fd(q, P, rp, h):
    """Central finite-difference metric derivative dM[k] = dM/dq_k, (4, 4, 4)."""
    dM = np.empty((4, 4, 4))
    qq = q.copy()
    for k in range(4):
        qk = q[k]
        qq[k] = qk + h
        Mp = mass_matrix(qq, P, rp)
        qq[k] = qk - h
        Mm = mass_matrix(qq, P, rp)
        qq[k] = qk
        inv2h = 0.5 / h
        for i in range(4):
            for j in range(4):
                dM[k, i, j] = (Mp[i, j] - Mm[i, j]) * inv2h
    return dM


@njit(cache=True)
def coriolis_matrix(q, qd, P, rp, h):
    """Coriolis matrix from the Christoffel combination of dM, (4, 4)."""
    dM = dmass_fd(q, P, rp, h)
    C = np.zeros((4, 4))
    for i in range(4):
        for j in range(4):
            s = 0.0
            for k in range(4):
                s += (dM[k, i, j] + dM[j, i, k] - dM[i, j, k]) * qd[k]
            C[i, j] = 0.5 * s
    return C


@njit(cache=True, inline="always")
def _spd_solve4(A, b, x):
    """Solve A x = b for SPD 4x4 A by Cholesky (A, b untouched)."""
    L = np.zeros((4, 4))
    y = np.empty(4)
    for i in range(4):
        for j in range(i + 1):
            s = A[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            if i == j:
                L[i, i] = math.sqrt(s)
            else:
                L[i, j] = s / L[j, j]
    for i in range(4):
        s = b[i]
        for k in range(i):
            s -= L[i, k] * y[k]
        y[i] = s / L[i, i]
    for i in range(3, -1, -1):
        s = y[i]
        for k in range(i + 1, 4):
            s -= L[k, i] * x[k]
        x[i] = s / L[i, i]


@njit(cache=True)
def geodesic_accel(q, qd, P, rp, h, blend_s):
    """q'' = -M_s^{-1} C_s q' with M_s = (1-s) I + s M, C_s = s C."""
    M = mass_matrix(q, P, rp)
    C = coriolis_matrix(q, qd, P, rp, h)
    b = np.empty(4)
    for i in range(4):
        s = 0.0
        for j in range(4):
            s += C[i, j] * qd[j]
        b[i] = -blend_s * s
    if blend_s != 1.0:
        for i in range(4):
            for j in range(4):
                M[i, j] *= blend_s
            M[i, i] += 1.0 - blend_s
    out = np.empty(4)
    _spd_solve4(M, b, out)
    return out


@njit(cache=True)
def integrate_rk4(q0, v0, n_steps, P, rp, h_fd, blend_s):
    """Classical fixed-step RK4 of the geodesic system over lambda in [0, 1].

    Returns (qs, vs, fail) where fail is the index of the first step whose
    state went non-finite, or -1 on success.
    """
    qs = np.empty((n_steps + 1, 4))
    vs = np.empty((n_steps + 1, 4))
    q = q0.copy()
    v = v0.copy()
    for j in range(4):
        qs[0, j] = q[j]
        vs[0, j] = v[j]
    h = 1.0 / n_steps
    qt = np.empty(4)
    vt = np.empty(4)
    for i in range(n_steps):
        k1v = geodesic_accel(q, v, P, rp, h_fd, blend_s)
        for j in range(4):
            qt[j] = q[j] + 0.5 * h * v[j]
            vt[j] = v[j] + 0.5 * h * k1v[j]
        k2v = geodesic_accel(qt, vt, P, rp, h_fd, blend_s)
        k2q = vt.copy()
        for j in range(4):
            qt[j] = q[j] + 0.5 * h * k2q[j]
            vt[j] = v[j] + 0.5 * h * k2v[j]
        k3v = geodesic_accel(qt, vt, P, rp, h_fd, blend_s)
        k3q = vt.copy()
        for j in range(4):
            qt[j] = q[j] + h * k3q[j]
            vt[j] = v[j] + h * k3v[j]
        k4v = geodesic_accel(qt, vt, P, rp, h_fd, blend_s)
        k4q = vt.copy()
        ok = True
        for j in range(4):
            q[j] = q[j] + h * (v[j] + 2.0 * k2q[j] + 2.0 * k3q[j] + k4q[j]) / 6.0
            v[j] = v[j] + h * (k1v[j] + 2.0 * k2v[j] + 2.0 * k3v[j] + k4v[j]) / 6.0
            qs[i + 1, j] = q[j]
            vs[i + 1, j] = v[j]
            if not (math.isfinite(q[j]) and math.isfinite(v[j])):
                ok = False
        if not ok:
            return qs, vs, i + 1
    return qs, vs, -1


@njit(cache=True)
def speed_squared_along(qs, vs, P, rp, blend_s):
    """v^T M_s(q) v at every sample of a path, (n,)."""
    n = qs.shape[0]
    out = np.empty(n)
    for i in range(n):
        M = mass_matrix(qs[i], P, rp)
        s = 0.0
        for a in range(4):
            row = 0.0
            for b in range(4):
                row += M[a, b] * vs[i, b]
            s += vs[i, a] * row
        if blend_s != 1.0:
            vv = 0.0
            for a in range(4):
                vv += vs[i, a] * vs[i, a]
            s = blend_s * s + (1.0 - blend_s) * vv
        out[i] = s
    return out
