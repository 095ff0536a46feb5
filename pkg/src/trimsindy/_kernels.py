"""Compiled inner loops: Gram-form coordinate descent and the trimmed-lasso alternation."""

import numpy as np
from numba import njit


@njit(cache=True)
def trim_gradient(xi, k, lam):
    P = xi.size
    g = np.zeros(P)
    if k <= 0:
        return g
    order = np.argsort(-np.abs(xi), kind="mergesort")
    for r in range(min(k, P)):
        i = order[r]
        g[i] = lam * np.sign(xi[i])
    return g


@njit(cache=True)
def trimmed_penalty(xi, k):
    P = xi.size
    if k >= P:
        return 0.0
    a = np.sort(np.abs(xi))
    return a[: P - k].sum()


@njit(cache=True)
def kkt_gap(G, c, alpha, gamma, xi):
    return _gap_from_q(G @ xi, c, alpha, gamma, xi)


@njit(cache=True)
def _gap_from_q(q, c, alpha, gamma, xi):
    gap = 0.0
    for i in range(xi.size):
        g = q[i] - c[i] - gamma[i]
        if xi[i] > 0:
            r = abs(g + alpha[i])
        elif xi[i] < 0:
            r = abs(g - alpha[i])
        else:
            r = abs(g) - alpha[i]
            if r < 0:
                r = 0.0
        if r > gap:
            gap = r
    return gap


@njit(cache=True)
def lasso_objective(G, c, alpha, gamma, xi):
    """``0.5 x'Gx - c'x + sum alpha |x| - gamma'x`` (zero entries add nothing)."""
    f = 0.5 * (xi @ (G @ xi)) - c @ xi - gamma @ xi
    for i in range(xi.size):
        if xi[i] != 0.0:
            f += alpha[i] * abs(xi[i])
    return f


@njit(cache=True)
def polish(G, c, alpha, gamma, xi):
    """Active-set step on the current support and sign pattern.

    Solves the stationarity conditions restricted to the nonzero entries with
    their present signs. If some entries would change sign, the step stops
    at the first sign crossing and that entry is set to zero; along the
    segment the objective is a convex quadratic decreasing towards the
    restricted solution, so the step never increases the objective.
    """
    idx = np.flatnonzero(xi)
    out = xi.copy()
    if idx.size == 0:
        return out
    n = idx.size
    Ga = np.empty((n, n))
    r = np.empty(n)
    for a in range(n):
        i = idx[a]
        r[a] = c[i] + gamma[i] - alpha[i] * np.sign(xi[i])
        for b in range(n):
            Ga[a, b] = G[i, idx[b]]
    sol = np.linalg.lstsq(Ga, r, -1.0)[0]
    t = 1.0
    hit = -1
    for a in range(n):
        x0 = xi[idx[a]]
        if np.sign(sol[a]) != np.sign(x0):
            ta = x0 / (x0 - sol[a])
            if ta < t:
                t = ta
                hit = a
    for a in range(n):
        out[idx[a]] = xi[idx[a]] + t * (sol[a] - xi[idx[a]])
    if hit >= 0:
        out[idx[hit]] = 0.0
    return out


@njit(cache=True)
def cd_lasso(G, c, alpha, gamma, xi, tol, max_sweeps):
    """Minimise 0.5 x'Gx - c'x + sum alpha|x| - gamma'x in place; returns (gap, sweeps).

    Cyclic coordinate descent interleaved, every few sweeps, with an
    active-set step on the current support; the step is kept when it lowers
    the objective. This finishes ill-conditioned problems quickly.
    """
    P = c.size
    q = G @ xi
    gap = np.inf
    for sweep in range(max_sweeps):
        for i in range(P):
            gii = G[i, i]
            old = xi[i]
            rho = c[i] + gamma[i] - q[i] + gii * old
            a = alpha[i]
            if rho > a:
                new = (rho - a) / gii
            elif rho < -a:
                new = (rho + a) / gii
            else:
                new = 0.0
            if new != old:
                d = new - old
                for j in range(P):
                    q[j] += G[j, i] * d
                xi[i] = new
        gap = _gap_from_q(q, c, alpha, gamma, xi)
        if gap <= tol:
            gap = kkt_gap(G, c, alpha, gamma, xi)
            if gap <= tol:
                return gap, sweep + 1
        if sweep % 5 == 4:
            q = G @ xi
            cand = polish(G, c, alpha, gamma, xi)
            if lasso_objective(G, c, alpha, gamma, cand) <= lasso_objective(G, c, alpha, gamma, xi):
                xi[:] = cand
                q = G @ xi
                gap = _gap_from_q(q, c, alpha, gamma, xi)
                if gap <= tol:
                    return gap, sweep + 1
    return gap, max_sweeps


@njit(cache=True)
def trim_objective(G, c, yy, xi, k, lam, eta):
    fit = 0.5 * (xi @ (G @ xi)) - c @ xi + 0.5 * yy
    if fit < 0.0:
        fit = 0.0
    return fit + lam * trimmed_penalty(xi, k) + eta * np.abs(xi).sum()


@njit(cache=True)
def trim_alternate(G, c, yy, k, lam, eta, xi, tol, max_alt, kkt_tol, max_sweeps):
    """Difference-of-convex alternation for one penalty level; xi is updated in place.

    Returns (objective, alternations, converged_inner, last_gap).
    """
    P = c.size
    alpha = np.full(P, eta + lam)
    f_prev = trim_objective(G, c, yy, xi, k, lam, eta)
    gap = 0.0
    s = 0
    for s in range(1, max_alt + 1):
        gamma = trim_gradient(xi, k, lam)
        gap, _ = cd_lasso(G, c, alpha, gamma, xi, kkt_tol, max_sweeps)
        if gap > kkt_tol:
            return trim_objective(G, c, yy, xi, k, lam, eta), s, False, gap
        f = trim_objective(G, c, yy, xi, k, lam, eta)
        if f_prev - f <= tol * max(abs(f_prev), 1e-300):
            return f, s, True, gap
        f_prev = f
    return f_prev, s, True, gap


@njit(cache=True)
def stls_gram(G, c, phi, max_iter):
    """Sequential thresholding with restricted normal-equation solves.

    Returns (xi, ok); ok is False when a restricted Gram block is singular.
    """
    P = c.size
    xi = np.zeros(P)
    mask = np.ones(P, dtype=np.bool_)
    for it in range(max_iter + 1):
        idx = np.flatnonzero(mask)
        xi[:] = 0.0
        if idx.size > 0:
            Gs = np.empty((idx.size, idx.size))
            cs = np.empty(idx.size)
            for a in range(idx.size):
                cs[a] = c[idx[a]]
                for b in range(idx.size):
                    Gs[a, b] = G[idx[a], idx[b]]
            try:
                sol = np.linalg.solve(Gs, cs)
            except Exception:
                return xi, False
            for a in range(idx.size):
                xi[idx[a]] = sol[a]
        new_mask = np.abs(xi) >= phi
        same = True
        for i in range(P):
            if new_mask[i] != mask[i]:
                same = False
                break
        if same:
            return xi, True
        mask = new_mask
    return xi, True


@njit(cache=True)
def _delayed(x, n_shift, j, frac, hist):
    """Value of x at grid position (j + frac) - n_shift using history before index 0."""
    pos = j - n_shift
    if pos + frac < 0.0:
        return hist
    if frac == 0.0:
        return x[pos]
    # cubic Lagrange on four neighbouring samples, shifted to stay on t >= 0
    lo = pos - 1
    if lo < 0:
        lo = 0
    if lo + 3 > j:
        lo = j - 3
    s = pos + frac - lo
    v = 0.0
    for a in range(4):
        w = 1.0
        for b in range(4):
            if b != a:
                w *= (s - b) / (a - b)
        v += w * x[lo + a]
    return v


@njit(cache=True)
def dde_rk4(c0, cx, cv, cd, n_shift, dt, n_steps, hist, x0, v0):
    """RK4 for x'' = c0 + cx x + cv x' + cd x(t - tau) with tau = n_shift * dt.

    Returns (x, v, blow_up_index); blow_up_index is -1 when the run stayed finite.
    """
    x = np.zeros(n_steps + 1)
    v = np.zeros(n_steps + 1)
    x[0] = x0
    v[0] = v0
    for j in range(n_steps):
        d0 = _delayed(x, n_shift, j, 0.0, hist)
        dh = _delayed(x, n_shift, j, 0.5, hist)
        d1 = _delayed(x, n_shift, j + 1, 0.0, hist) if n_shift >= 1 else dh
        xa = x[j]
        va = v[j]
        k1x = va
        k1v = c0 + cx * xa + cv * va + cd * d0
        k2x = va + 0.5 * dt * k1v
        k2v = c0 + cx * (xa + 0.5 * dt * k1x) + cv * k2x + cd * dh
        k3x = va + 0.5 * dt * k2v
        k3v = c0 + cx * (xa + 0.5 * dt * k2x) + cv * k3x + cd * dh
        k4x = va + dt * k3v
        k4v = c0 + cx * (xa + dt * k3x) + cv * k4x + cd * d1
        x[j + 1] = xa + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        v[j + 1] = va + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        if not (np.isfinite(x[j + 1]) and np.isfinite(v[j + 1])):
            return x, v, j + 1
    return x, v, -1
