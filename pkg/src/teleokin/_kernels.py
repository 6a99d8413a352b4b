"""Compiled numeric core: forward kinematics, Jacobians, constraint rows,
and the dense active-set QP solver, plus the fused per-tick loop.

Everything here operates on plain float64 arrays so the whole control loop
compiles under numba. The public modules (kinematics, constraints, qp,
controller, sim) are thin wrappers over these functions; batch simulation
and the step-by-step API share the exact same compiled code paths, which is
what makes replay and batch telemetry bit-identical.

Conventions: quaternions are (w, x, y, z) arrays; joints are standard DH
rows (a, alpha, d, theta_offset) with kind 0 = revolute, 1 = prismatic.
Solver status codes: 0 = optimal, 1 = max_iter, 2 = infeasible_input.
"""

import math

import numpy as np
from numba import njit

N_JOINTS = 9

STATUS_OPTIMAL = 0
STATUS_MAX_ITER = 1
STATUS_INFEASIBLE = 2


# ---------------------------------------------------------------------------
# quaternion primitives (array based)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _qmul(a, b):
    out = np.empty(4)
    out[0] = a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]
    out[1] = a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2]
    out[2] = a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1]
    out[3] = a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]
    return out


@njit(cache=True)
def _qrotvec(r, v):
    # R(r) @ v without building the matrix
    w, x, y, z = r[0], r[1], r[2], r[3]
    vx, vy, vz = v[0], v[1], v[2]
    out = np.empty(3)
    out[0] = (1 - 2 * (y * y + z * z)) * vx + 2 * (x * y - w * z) * vy + 2 * (x * z + w * y) * vz
    out[1] = 2 * (x * y + w * z) * vx + (1 - 2 * (x * x + z * z)) * vy + 2 * (y * z - w * x) * vz
    out[2] = 2 * (x * z - w * y) * vx + 2 * (y * z + w * x) * vy + (1 - 2 * (x * x + y * y)) * vz
    return out


@njit(cache=True)
def _zaxis(r):
    w, x, y, z = r[0], r[1], r[2], r[3]
    out = np.empty(3)
    out[0] = 2 * (x * z + w * y)
    out[1] = 2 * (y * z - w * x)
    out[2] = 1 - 2 * (x * x + y * y)
    return out


@njit(cache=True)
def _switching_error(r, r_d):
    """conj(r)*r_d -/+ 1, whichever branch is closer to zero (tie: minus)."""
    rc = np.empty(4)
    rc[0] = r[0]
    rc[1] = -r[1]
    rc[2] = -r[2]
    rc[3] = -r[3]
    e = _qmul(rc, r_d)
    nm = (e[0] - 1.0) ** 2 + e[1] ** 2 + e[2] ** 2 + e[3] ** 2
    np_ = (e[0] + 1.0) ** 2 + e[1] ** 2 + e[2] ** 2 + e[3] ** 2
    out = np.empty(4)
    if nm <= np_:
        out[0] = e[0] - 1.0
    else:
        out[0] = e[0] + 1.0
    out[1] = e[1]
    out[2] = e[2]
    out[3] = e[3]
    return out


# ---------------------------------------------------------------------------
# forward kinematics and Jacobians
# ---------------------------------------------------------------------------

@njit(cache=True)
def _fk_frames(dh, kind, q, base_r, base_t):
    """All link frames for a standard-DH chain.

    Returns rs (10,4) and ts (10,3); row k is the frame after applying the
    first k DH rows, row 0 is the base pose.
    """
    n = dh.shape[0]
    rs = np.empty((n + 1, 4))
    ts = np.empty((n + 1, 3))
    rs[0] = base_r
    ts[0] = base_t
    step_t = np.empty(3)
    step_r = np.empty(4)
    for k in range(n):
        a = dh[k, 0]
        alpha = dh[k, 1]
        d = dh[k, 2]
        theta = dh[k, 3]
        if kind[k] == 0:
            theta += q[k]
        else:
            d += q[k]
        ct = math.cos(0.5 * theta)
        st = math.sin(0.5 * theta)
        ca = math.cos(0.5 * alpha)
        sa = math.sin(0.5 * alpha)
        # rz(theta) * rx(alpha)
        step_r[0] = ct * ca
        step_r[1] = ct * sa
        step_r[2] = st * sa
        step_r[3] = st * ca
        # Rz(theta) Tz(d) Tx(a): origin offset in the parent frame
        step_t[0] = a * math.cos(theta)
        step_t[1] = a * math.sin(theta)
        step_t[2] = d
        ts[k + 1] = ts[k] + _qrotvec(rs[k], step_t)
        rs[k + 1] = _qmul(rs[k], step_r)
    return rs, ts


@njit(cache=True)
def _jacobians(rs, ts, kind):
    """Task Jacobians at the end effector.

    Jt (3,9) maps qdot to the translation rate; Jr (4,9) maps qdot to the
    rate of the quaternion coordinates, using rdot = 0.5 * omega * r with
    omega the spatial angular velocity.
    """
    n = kind.shape[0]
    r_ee = rs[n]
    p_ee = ts[n]
    Jt = np.zeros((3, n))
    Jr = np.zeros((4, n))
    zq = np.empty(4)
    for j in range(n):
        z = _zaxis(rs[j])
        if kind[j] == 0:
            dx = p_ee[0] - ts[j, 0]
            dy = p_ee[1] - ts[j, 1]
            dz = p_ee[2] - ts[j, 2]
            Jt[0, j] = z[1] * dz - z[2] * dy
            Jt[1, j] = z[2] * dx - z[0] * dz
            Jt[2, j] = z[0] * dy - z[1] * dx
            zq[0] = 0.0
            zq[1] = z[0]
            zq[2] = z[1]
            zq[3] = z[2]
            zr = _qmul(zq, r_ee)
            Jr[0, j] = 0.5 * zr[0]
            Jr[1, j] = 0.5 * zr[1]
            Jr[2, j] = 0.5 * zr[2]
            Jr[3, j] = 0.5 * zr[3]
        else:
            Jt[0, j] = z[0]
            Jt[1, j] = z[1]
            Jt[2, j] = z[2]
    return Jt, Jr


@njit(cache=True)
def _shaft(rs, ts, shaft_idx):
    """Anchor point and unit direction of the instrument shaft centerline."""
    p = ts[shaft_idx + 1].copy()
    l = _zaxis(rs[shaft_idx + 1])
    return p, l


@njit(cache=True)
def _line_sqdist(p, l, c):
    ex = c[0] - p[0]
    ey = c[1] - p[1]
    ez = c[2] - p[2]
    dot = ex * l[0] + ey * l[1] + ez * l[2]
    return ex * ex + ey * ey + ez * ez - dot * dot


@njit(cache=True)
def _es_row(rs, ts, kind, shaft_idx, c):
    """Square distance D from the shaft line to point c and its Jacobian.

    Chain rule through the shaft frame: with e = c - p and
    e_perp = e - <e,l> l,
        Ddot = -2 <e_perp, pdot> - 2 <e,l> <e, ldot>,
    where pdot and ldot per joint follow the usual geometric columns.
    Joints distal to the shaft frame do not move the line.
    """
    n = kind.shape[0]
    p, l = _shaft(rs, ts, shaft_idx)
    e = np.empty(3)
    e[0] = c[0] - p[0]
    e[1] = c[1] - p[1]
    e[2] = c[2] - p[2]
    el = e[0] * l[0] + e[1] * l[1] + e[2] * l[2]
    D = e[0] * e[0] + e[1] * e[1] + e[2] * e[2] - el * el
    ep = np.empty(3)
    ep[0] = e[0] - el * l[0]
    ep[1] = e[1] - el * l[1]
    ep[2] = e[2] - el * l[2]
    Jd = np.zeros(n)
    for j in range(shaft_idx + 1):
        z = _zaxis(rs[j])
        if kind[j] == 0:
            # pdot_j = z x (p - t_j), ldot_j = z x l
            dx = p[0] - ts[j, 0]
            dy = p[1] - ts[j, 1]
            dz = p[2] - ts[j, 2]
            pdx = z[1] * dz - z[2] * dy
            pdy = z[2] * dx - z[0] * dz
            pdz = z[0] * dy - z[1] * dx
            ldx = z[1] * l[2] - z[2] * l[1]
            ldy = z[2] * l[0] - z[0] * l[2]
            ldz = z[0] * l[1] - z[1] * l[0]
            Jd[j] = -2.0 * (ep[0] * pdx + ep[1] * pdy + ep[2] * pdz) \
                    - 2.0 * el * (e[0] * ldx + e[1] * ldy + e[2] * ldz)
        else:
            Jd[j] = -2.0 * (ep[0] * z[0] + ep[1] * z[1] + ep[2] * z[2])
    return D, Jd


# ---------------------------------------------------------------------------
# QP assembly
# ---------------------------------------------------------------------------

@njit(cache=True)
def _assemble_hg(Jt, Jr, terr, rerr, alpha, eta, lam_r, lam_f, eps_reg):
    """Hessian and gradient of the weighted tracking objective.

    H = 2 (alpha Jt'Jt + (1-alpha) Jr'Jr + Lambda'Lambda) + eps_reg I
    g = 2 eta (alpha Jt' terr + (1-alpha) Jr' rerr)
    with Lambda = diag(lam_r * I6, lam_f * I3).
    """
    n = Jt.shape[1]
    H = np.empty((n, n))
    g = np.empty(n)
    b = 1.0 - alpha
    for i in range(n):
        for j in range(i, n):
            s = 0.0
            for k in range(3):
                s += alpha * Jt[k, i] * Jt[k, j]
            for k in range(4):
                s += b * Jr[k, i] * Jr[k, j]
            s *= 2.0
            H[i, j] = s
            H[j, i] = s
        lam = lam_r if i < 6 else lam_f
        H[i, i] += 2.0 * lam * lam + eps_reg
        s = 0.0
        for k in range(3):
            s += alpha * Jt[k, i] * terr[k]
        for k in range(4):
            s += b * Jr[k, i] * rerr[k]
        g[i] = 2.0 * eta * s
    return H, g


@njit(cache=True)
def _constraint_rows(q, qmin, qmax, jl_on, rs, ts, kind, shaft_idx,
                     es_c, es_dsafe, es_etad, es_on):
    """Stacked inequality rows W qdot <= w: joint limits then entry spheres.

    Joint limit blocks: -qdot <= q - qmin and qdot <= qmax - q, so the zero
    velocity stays feasible anywhere inside the limits. Entry-sphere rows
    bound the square-distance rate: Jd qdot <= eta_d (D_safe - D).
    """
    n = q.shape[0]
    n_es = es_c.shape[0] if es_on else 0
    m = (2 * n if jl_on else 0) + n_es
    W = np.zeros((m, n))
    w = np.empty(m)
    d_es = np.empty(max(n_es, 1))
    row = 0
    if jl_on:
        for i in range(n):
            W[row + i, i] = -1.0
            w[row + i] = q[i] - qmin[i]
            W[row + n + i, i] = 1.0
            w[row + n + i] = qmax[i] - q[i]
        row = 2 * n
    if es_on:
        for s in range(n_es):
            D, Jd = _es_row(rs, ts, kind, shaft_idx, es_c[s])
            for j in range(n):
                W[row + s, j] = Jd[j]
            w[row + s] = es_etad[s] * (es_dsafe[s] - D)
            d_es[s] = D
    return W, w, d_es


# ---------------------------------------------------------------------------
# dense active-set QP solver
# ---------------------------------------------------------------------------

@njit(cache=True)
def _chol(H):
    n = H.shape[0]
    L = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            s = H[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            if i == j:
                L[i, i] = math.sqrt(s) if s > 0.0 else math.sqrt(1e-300)
            else:
                L[i, j] = s / L[j, j]
    return L


@njit(cache=True)
def _chol_solve(L, b):
    n = L.shape[0]
    y = np.empty(n)
    for i in range(n):
        s = b[i]
        for j in range(i):
            s -= L[i, j] * y[j]
        y[i] = s / L[i, i]
    x = np.empty(n)
    for i in range(n - 1, -1, -1):
        s = y[i]
        for j in range(i + 1, n):
            s -= L[j, i] * x[j]
        x[i] = s / L[i, i]
    return x


@njit(cache=True)
def _refined_solve(L, H, b):
    """Cholesky solve with two rounds of iterative refinement.

    The tracking Hessian is legitimately ill conditioned (the instrument
    damping can be zero, leaving only the tiny convexity ridge along
    task-null directions), so plain triangular solves lose most of their
    digits; refinement restores a small residual.
    """
    n = L.shape[0]
    x = _chol_solve(L, b)
    for _ in range(2):
        r = np.empty(n)
        for i in range(n):
            s = -b[i]
            for j in range(n):
                s += H[i, j] * x[j]
            r[i] = s
        d = _chol_solve(L, r)
        for i in range(n):
            x[i] -= d[i]
    return x


@njit(cache=True)
def _qr_full(M):
    """Householder QR of an n x k matrix (k <= n): M = Q R.

    Returns Q (n,n) explicit and R (n,k); columns k..n-1 of Q span the
    orthogonal complement of the column space when R has full rank.
    """
    n, k = M.shape
    Q = np.eye(n)
    R = M.copy()
    v = np.empty(n)
    for j in range(k):
        normx = 0.0
        for i in range(j, n):
            normx += R[i, j] * R[i, j]
        normx = math.sqrt(normx)
        if normx < 1e-300:
            continue
        alpha = -normx if R[j, j] >= 0.0 else normx
        vnorm2 = 0.0
        for i in range(j, n):
            v[i] = R[i, j]
            if i == j:
                v[i] -= alpha
            vnorm2 += v[i] * v[i]
        if vnorm2 < 1e-300:
            continue
        for col in range(j, k):
            s = 0.0
            for i in range(j, n):
                s += v[i] * R[i, col]
            s = 2.0 * s / vnorm2
            for i in range(j, n):
                R[i, col] -= s * v[i]
        for row in range(n):
            s = 0.0
            for i in range(j, n):
                s += v[i] * Q[row, i]
            s = 2.0 * s / vnorm2
            for i in range(j, n):
                Q[row, i] -= s * v[i]
    return Q, R


@njit(cache=True)
def _restore_feasible(W, w, feas_tol):
    """Find a point satisfying W x <= w when x = 0 does not.

    Semismooth Newton on min 0.5||(Wx - w)_+||^2 + 0.5 rho ||x||^2: each
    pass solves least squares on the currently violated rows, pushing a
    feas_tol margin inside. Returns (x, ok); when ok is False, x is the
    last iterate and doubles as the violation-minimizing command.
    """
    m, n = W.shape
    x = np.zeros(n)
    wscale = 1.0
    for i in range(m):
        if abs(w[i]) > wscale:
            wscale = abs(w[i])
    push = max(10.0 * feas_tol, 1e-9 * wscale)
    for _ in range(60):
        worst = 0.0
        for i in range(m):
            r = -w[i]
            for j in range(n):
                r += W[i, j] * x[j]
            if r > worst:
                worst = r
        if worst <= 0.25 * push:
            return x, True
        # normal equations on near-violated rows
        A = np.zeros((n, n))
        bvec = np.zeros(n)
        scale = 0.0
        for i in range(m):
            r = -w[i]
            for j in range(n):
                r += W[i, j] * x[j]
            if r > -0.5 * push:
                target = w[i] - push
                for a in range(n):
                    for bcol in range(n):
                        A[a, bcol] += W[i, a] * W[i, bcol]
                    bvec[a] += W[i, a] * target
                    scale += W[i, a] * W[i, a]
        rho = 1e-12 * max(scale, 1e-30)
        for a in range(n):
            A[a, a] += rho
        L = _chol(A)
        x = _chol_solve(L, bvec)
    return x, False


@njit(cache=True)
def _solve_qp(H, g, W, w, ws0, feas_tol, max_iter):
    """Primal active-set method for min 0.5 x'Hx + g'x s.t. Wx <= w.

    H must be positive definite. Starts from x = 0 whenever that is
    feasible (each control step guarantees it away from constraint
    boundaries); otherwise restores feasibility first and only reports
    infeasible when restoration fails, in which case the returned x
    minimizes the violation in least squares.

    Returns (x, mu, status, ws). ws is the final working set, usable to
    warm start the next, nearby problem.
    """
    n = H.shape[0]
    m = W.shape[0]
    mu_full = np.zeros(m)
    ws = np.zeros(m, dtype=np.bool_)
    x = np.zeros(n)

    weff = w.copy()
    worst = 0.0
    for i in range(m):
        if -weff[i] > worst:
            worst = -weff[i]
    restored = worst > feas_tol
    if restored:
        x, ok = _restore_feasible(W, w, feas_tol)
        if not ok:
            return x, mu_full, STATUS_INFEASIBLE, ws
    else:
        # within-tolerance negativity is treated as exactly active
        for i in range(m):
            if weff[i] < 0.0:
                weff[i] = 0.0
        for i in range(m):
            if ws0[i]:
                # warm set must be active at the start point
                if abs(weff[i]) <= 1e-11:
                    ws[i] = True

    gmax = 0.0
    for i in range(n):
        if abs(g[i]) > gmax:
            gmax = abs(g[i])
    stat_tol = 1e-10 * (1.0 + gmax)

    any_ws = False
    for i in range(m):
        if ws[i]:
            any_ws = True
            break
    if not any_ws and not restored:
        # fast path: accept the unconstrained optimum when it is feasible,
        # stationary, and would not trigger any blocking row
        L = _chol(H)
        ng = np.empty(n)
        for i in range(n):
            ng[i] = -g[i]
        xu = _refined_solve(L, H, ng)
        ok = True
        for i in range(n):
            s = g[i]
            for j in range(n):
                s += H[i, j] * xu[j]
            if abs(s) > stat_tol:
                ok = False
                break
        if ok:
            for i in range(m):
                wp = 0.0
                for j in range(n):
                    wp += W[i, j] * xu[j]
                if wp > 1e-13 and wp > weff[i]:
                    ok = False
                    break
        if ok:
            return xu, mu_full, STATUS_OPTIMAL, ws

    idx = np.empty(m, dtype=np.int64)
    status = STATUS_MAX_ITER
    c = np.empty(n)
    full_steps = 0      # consecutive unblocked full steps on one working set
    for _ in range(max_iter):
        for i in range(n):
            s = g[i]
            for j in range(n):
                s += H[i, j] * x[j]
            c[i] = s
        k = 0
        for i in range(m):
            if ws[i]:
                idx[k] = i
                k += 1
        # null-space method: steps satisfy A p = 0 by construction, which
        # keeps working-set rows exactly satisfied no matter how badly H is
        # conditioned (with zero instrument damping its condition number is
        # around 1e10). A = W[idx], factored as A' = Q R.
        A_t = np.empty((n, k))
        for a in range(k):
            for i in range(n):
                A_t[i, a] = W[idx[a], i]
        Q, R = _qr_full(A_t)
        rank_bad = -1
        for a in range(k):
            if abs(R[a, a]) <= 1e-12:
                rank_bad = a
                break
        if rank_bad >= 0:
            # degenerate working set (can only come from a warm start)
            ws[idx[rank_bad]] = False
            full_steps = 0
            continue
        nz = n - k
        # reduced gradient Z'c; never passes through H^{-1}
        zc = np.empty(max(nz, 1))
        rmax = 0.0
        for a in range(nz):
            s = 0.0
            for i in range(n):
                s += Q[i, k + a] * c[i]
            zc[a] = s
            if abs(s) > rmax:
                rmax = abs(s)

        if rmax <= stat_tol or full_steps >= 2:
            # stationary on this working set (full_steps >= 2 means the
            # exact minimizer was reached and the remaining reduced
            # gradient is roundoff); check the multiplier signs.
            mu_act = np.zeros(max(k, 1))
            if k > 0:
                # mu = -R1^{-1} Q1' c (least squares stationarity)
                qc = np.empty(k)
                for a in range(k):
                    s = 0.0
                    for i in range(n):
                        s += Q[i, a] * c[i]
                    qc[a] = -s
                for a in range(k - 1, -1, -1):
                    s = qc[a]
                    for b in range(a + 1, k):
                        s -= R[a, b] * mu_act[b]
                    mu_act[a] = s / R[a, a]
            drop = -1
            mu_min = -1e-10
            for a in range(k):
                if mu_act[a] < mu_min:
                    mu_min = mu_act[a]
                    drop = a
            if drop < 0:
                for a in range(k):
                    mu_full[idx[a]] = mu_act[a] if mu_act[a] > 0.0 else 0.0
                status = STATUS_OPTIMAL
                break
            ws[idx[drop]] = False
            full_steps = 0
            continue

        # reduced Newton step: p = Z y, (Z'HZ) y = -Z'c
        HZ = np.empty((n, nz))
        for i in range(n):
            for b in range(nz):
                s = 0.0
                for j in range(n):
                    s += H[i, j] * Q[j, k + b]
                HZ[i, b] = s
        Hz = np.empty((nz, nz))
        for a in range(nz):
            for b in range(a, nz):
                s = 0.0
                for i in range(n):
                    s += Q[i, k + a] * HZ[i, b]
                Hz[a, b] = s
                Hz[b, a] = s
        Lz = _chol(Hz)
        nzc = np.empty(nz)
        for a in range(nz):
            nzc[a] = -zc[a]
        y = _refined_solve(Lz, Hz, nzc)
        p = np.empty(n)
        for i in range(n):
            s = 0.0
            for a in range(nz):
                s += Q[i, k + a] * y[a]
            p[i] = s

        # ratio test over inactive rows
        alpha = 1.0
        blocking = -1
        for i in range(m):
            if ws[i]:
                continue
            wp = 0.0
            for j in range(n):
                wp += W[i, j] * p[j]
            if wp > 1e-13:
                resid = weff[i]
                for j in range(n):
                    resid -= W[i, j] * x[j]
                ai = resid / wp
                if ai < 0.0:
                    ai = 0.0
                if ai < alpha:
                    alpha = ai
                    blocking = i
        for i in range(n):
            x[i] += alpha * p[i]
        if blocking >= 0 and alpha < 1.0:
            ws[blocking] = True
            full_steps = 0
        else:
            full_steps += 1
    return x, mu_full, status, ws


# ---------------------------------------------------------------------------
# fused control step and simulation tick
# ---------------------------------------------------------------------------

@njit(cache=True)
def _control_step(dh, kind, qmin, qmax, base_r, base_t, shaft_idx,
                  q, prev_r, tgt_t, tgt_r,
                  alpha, eta, lam_r, lam_f, eps_reg,
                  jl_on, es_on, es_c, es_dsafe, es_etad,
                  ws0, feas_tol, max_iter):
    """One constrained differential-IK solve.

    Returns (qdot, status, nact, ws, d_es, w_es, terr, rerr, r_cur, t_cur)
    where r_cur is the end-effector quaternion sign-aligned with prev_r,
    and d_es / w_es refer to the first entry sphere (NaN when disabled).
    """
    rs, ts = _fk_frames(dh, kind, q, base_r, base_t)
    n = q.shape[0]
    r_cur = rs[n].copy()
    dot = (r_cur[0] * prev_r[0] + r_cur[1] * prev_r[1]
           + r_cur[2] * prev_r[2] + r_cur[3] * prev_r[3])
    if dot < 0.0:
        for i in range(4):
            r_cur[i] = -r_cur[i]
    t_cur = ts[n].copy()

    terr = np.empty(3)
    terr[0] = t_cur[0] - tgt_t[0]
    terr[1] = t_cur[1] - tgt_t[1]
    terr[2] = t_cur[2] - tgt_t[2]
    rerr = _switching_error(r_cur, tgt_r)

    Jt, Jr = _jacobians(rs, ts, kind)
    H, g = _assemble_hg(Jt, Jr, terr, rerr, alpha, eta, lam_r, lam_f, eps_reg)
    W, w, d_es_arr = _constraint_rows(q, qmin, qmax, jl_on, rs, ts, kind,
                                      shaft_idx, es_c, es_dsafe, es_etad, es_on)
    x, mu, status, ws = _solve_qp(H, g, W, w, ws0, feas_tol, max_iter)
    nact = 0
    for i in range(ws.shape[0]):
        if ws[i]:
            nact += 1
    if es_on and es_c.shape[0] > 0:
        d_es = d_es_arr[0]
        w_es = w[w.shape[0] - es_c.shape[0]]
    else:
        d_es = np.nan
        w_es = np.nan
    return x, status, nact, ws, d_es, w_es, terr, rerr, r_cur, t_cur


@njit(cache=True)
def _tick(dh, kind, qmin, qmax, base_r, base_t, shaft_idx,
          q, prev_r, tgt_t, tgt_r,
          alpha, eta, lam_r, lam_f, eps_reg,
          jl_on, es_on, es_c, es_dsafe, es_etad,
          ws0, feas_tol, max_iter, dt):
    """Control step + explicit Euler integration + post-step bookkeeping.

    Mutates q in place. Returns the velocity command, solver info, the
    post-step pose/errors/distance for telemetry, and the largest clamp
    correction (zero whenever the limit rows were respected).
    """
    n = q.shape[0]
    (qdot, status, nact, ws, d_es_pre, w_es, terr_pre, rerr_pre,
     r_cur, t_cur) = _control_step(
        dh, kind, qmin, qmax, base_r, base_t, shaft_idx,
        q, prev_r, tgt_t, tgt_r,
        alpha, eta, lam_r, lam_f, eps_reg,
        jl_on, es_on, es_c, es_dsafe, es_etad,
        ws0, feas_tol, max_iter)
    if status == STATUS_INFEASIBLE:
        # surface the failure but keep the arm still for this tick
        for i in range(n):
            qdot[i] = 0.0
    clamp = 0.0
    for i in range(n):
        q[i] = q[i] + qdot[i] * dt
        if q[i] < qmin[i]:
            if qmin[i] - q[i] > clamp:
                clamp = qmin[i] - q[i]
            q[i] = qmin[i]
        elif q[i] > qmax[i]:
            if q[i] - qmax[i] > clamp:
                clamp = q[i] - qmax[i]
            q[i] = qmax[i]

    rs, ts = _fk_frames(dh, kind, q, base_r, base_t)
    r_post = rs[n].copy()
    dot = (r_post[0] * r_cur[0] + r_post[1] * r_cur[1]
           + r_post[2] * r_cur[2] + r_post[3] * r_cur[3])
    if dot < 0.0:
        for i in range(4):
            r_post[i] = -r_post[i]
    t_post = ts[n].copy()
    terr = np.empty(3)
    terr[0] = t_post[0] - tgt_t[0]
    terr[1] = t_post[1] - tgt_t[1]
    terr[2] = t_post[2] - tgt_t[2]
    rerr = _switching_error(r_post, tgt_r)
    if es_on and es_c.shape[0] > 0:
        p, l = _shaft(rs, ts, shaft_idx)
        d_es = _line_sqdist(p, l, es_c[0])
    else:
        d_es = np.nan
    return qdot, status, nact, ws, d_es, w_es, terr, rerr, r_post, t_post, clamp


@njit(cache=True)
def _simulate_arm(dh, kind, qmin, qmax, base_r, base_t, shaft_idx,
                  q0, tgt_t, tgt_r,
                  alpha, eta, lam_r, lam_f, eps_reg,
                  jl_on, es_on, es_c, es_dsafe, es_etad,
                  feas_tol, max_iter, dt,
                  out_q, out_qd, out_terr, out_tnorm, out_rnorm,
                  out_des, out_wes, out_nact, out_status):
    """Run a full scripted trajectory for one arm, filling telemetry arrays.

    The loop body is exactly _tick, so stepping the simulation one tick at a
    time from Python produces bit-identical numbers. Returns the final q,
    the final hemisphere-aligned end-effector quaternion, the final working
    set, and the largest joint clamp seen.
    """
    steps = tgt_t.shape[0]
    n = q0.shape[0]
    q = q0.copy()
    rs, ts = _fk_frames(dh, kind, q, base_r, base_t)
    prev_r = rs[n].copy()
    m = (2 * n if jl_on else 0) + (es_c.shape[0] if es_on else 0)
    ws = np.zeros(m, dtype=np.bool_)
    clamp_max = 0.0
    for kstep in range(steps):
        (qdot, status, nact, ws, d_es, w_es, terr, rerr,
         prev_r, t_post, clamp) = _tick(
            dh, kind, qmin, qmax, base_r, base_t, shaft_idx,
            q, prev_r, tgt_t[kstep], tgt_r[kstep],
            alpha, eta, lam_r, lam_f, eps_reg,
            jl_on, es_on, es_c, es_dsafe, es_etad,
            ws, feas_tol, max_iter, dt)
        if clamp > clamp_max:
            clamp_max = clamp
        for i in range(n):
            out_q[kstep, i] = q[i]
            out_qd[kstep, i] = qdot[i]
        out_terr[kstep, 0] = terr[0]
        out_terr[kstep, 1] = terr[1]
        out_terr[kstep, 2] = terr[2]
        out_tnorm[kstep] = math.sqrt(terr[0] ** 2 + terr[1] ** 2 + terr[2] ** 2)
        out_rnorm[kstep] = math.sqrt(rerr[0] ** 2 + rerr[1] ** 2
                                     + rerr[2] ** 2 + rerr[3] ** 2)
        out_des[kstep] = d_es
        out_wes[kstep] = w_es
        out_nact[kstep] = nact
        out_status[kstep] = status
    return q, prev_r, ws, clamp_max
