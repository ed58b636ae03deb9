"""Independent reference implementations the dual-route tests compare against.

Nothing here imports from sunstack: the point is that these answers are
derived by a different route (dense QP over the stacked coefficient pairs,
exhaustive split enumeration) so agreement is evidence, not tautology.
"""

from __future__ import annotations

import numpy as np

SPLIT_GATE_TOL = 1e-10


def project_box_sum(v: np.ndarray, a: np.ndarray, upper: float) -> np.ndarray:
    """Project v onto {0 <= th <= upper, a @ th = 0} for a in {+1, -1}^m.

    The projection is clip(v - lam * a, 0, upper) for the multiplier lam
    that zeroes the constraint; g(lam) = a @ clip(...) is piecewise linear
    and nonincreasing, so lam is found exactly from the sorted breakpoints.
    """
    bps = np.concatenate(
        [v[a > 0], v[a > 0] - upper, -v[a < 0], upper - v[a < 0]]
    )
    if bps.size == 0:
        return np.clip(v, 0.0, upper)
    lams = np.sort(bps)
    candidates = np.clip(v[None, :] - lams[:, None] * a[None, :], 0.0, upper)
    gs = candidates @ a
    if gs[0] <= 0.0:
        return candidates[0]
    if gs[-1] >= 0.0:
        return candidates[-1]
    k = int(np.argmax(gs <= 0.0)) - 1  # last lam with positive constraint value
    g0, g1 = gs[k], gs[k + 1]
    lam = lams[k] if g1 == g0 else lams[k] + (lams[k + 1] - lams[k]) * g0 / (g0 - g1)
    return np.clip(v - lam * a, 0.0, upper)


def svr_dual_oracle(K, y, box, eps, max_iter=20000) -> float:
    """Optimal dual objective of the tube-regression QP, solved brute force.

    Works on the stacked nonnegative pair formulation: minimize
    0.5 th'Q th + p'th with Q = [[K, -K], [-K, K]], th in [0, box]^2n,
    sum(th[:n]) == sum(th[n:]).  Accelerated projected gradient with exact
    projections, then an active-set refinement solving the free-coordinate
    equality-constrained system exactly.
    """
    K = np.asarray(K, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = len(y)
    Q = np.block([[K, -K], [-K, K]])
    p = np.concatenate([eps - y, eps + y])
    a = np.concatenate([np.ones(n), -np.ones(n)])
    lipschitz = max(float(np.linalg.eigvalsh(Q).max()), 1e-9)

    def obj(th):
        return 0.5 * th @ Q @ th + p @ th

    th = project_box_sum(np.zeros(2 * n), a, box)
    z = th.copy()
    tk = 1.0
    best = obj(th)
    stall = 0
    for it in range(max_iter):
        th_new = project_box_sum(z - (Q @ z + p) / lipschitz, a, box)
        tk_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tk * tk))
        z = th_new + (tk - 1.0) / tk_new * (th_new - th)
        th, tk = th_new, tk_new
        if (it + 1) % 250 == 0:
            cur = obj(th)
            if best - cur < 1e-14 * max(1.0, abs(best)):
                stall += 1
                if stall >= 2:
                    break
            else:
                stall = 0
            best = min(best, cur)
    best = min(best, obj(th))

    # Freeze near-boundary coordinates, solve the interior exactly, and
    # accept the refined point only if it stays feasible and improves.
    delta = 1e-7 * box
    free = (th > delta) & (th < box - delta)
    th_ref = np.where(th <= delta, 0.0, np.where(th >= box - delta, box, th))
    if free.any():
        F = np.flatnonzero(free)
        B = np.flatnonzero(~free)
        nf = len(F)
        A = np.zeros((nf + 1, nf + 1))
        A[:nf, :nf] = Q[np.ix_(F, F)]
        A[:nf, nf] = a[F]
        A[nf, :nf] = a[F]
        rhs = np.zeros(nf + 1)
        rhs[:nf] = -p[F] - Q[np.ix_(F, B)] @ th_ref[B]
        rhs[nf] = -a[B] @ th_ref[B]
        sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
        cand = th_ref.copy()
        cand[F] = sol[:nf]
        feasible = (
            np.all(cand >= -1e-12)
            and np.all(cand <= box + 1e-12)
            and abs(a @ cand) < 1e-9 * max(1.0, box)
        )
        if feasible:
            best = min(best, obj(np.clip(cand, 0.0, box)))
    return float(best)


def noaa_elevation(ts, lat_deg, lon_deg) -> float:
    """Solar elevation by the NOAA spreadsheet series (no refraction).

    Uses the Julian-century polynomial ephemeris: geometric mean longitude
    and anomaly, equation of center, apparent longitude, corrected
    obliquity.  A different derivation from any low-order Fourier fit, so
    agreement within a fraction of a degree is a real cross-check.
    """
    unix = np.datetime64(ts, "s").astype(np.int64)
    jd = unix / 86400.0 + 2440587.5
    T = (jd - 2451545.0) / 36525.0
    d = np.radians

    L0 = (280.46646 + T * (36000.76983 + 0.0003032 * T)) % 360.0
    M = 357.52911 + T * (35999.05029 - 0.0001537 * T)
    e = 0.016708634 - T * (0.000042037 + 0.0000001267 * T)
    C = (
        np.sin(d(M)) * (1.914602 - T * (0.004817 + 0.000014 * T))
        + np.sin(d(2 * M)) * (0.019993 - 0.000101 * T)
        + np.sin(d(3 * M)) * 0.000289
    )
    true_long = L0 + C
    omega = 125.04 - 1934.136 * T
    lam = true_long - 0.00569 - 0.00478 * np.sin(d(omega))
    eps0 = 23.0 + (26.0 + (21.448 - T * (46.815 + T * (0.00059 - T * 0.001813))) / 60.0) / 60.0
    eps = eps0 + 0.00256 * np.cos(d(omega))
    decl = np.arcsin(np.sin(d(eps)) * np.sin(d(lam)))

    y2 = np.tan(d(eps) / 2.0) ** 2
    eqtime = 4.0 * np.degrees(
        y2 * np.sin(2 * d(L0))
        - 2.0 * e * np.sin(d(M))
        + 4.0 * e * y2 * np.sin(d(M)) * np.cos(2 * d(L0))
        - 0.5 * y2 * y2 * np.sin(4 * d(L0))
        - 1.25 * e * e * np.sin(2 * d(M))
    )
    minutes_utc = (unix % 86400) / 60.0
    tst = (minutes_utc + eqtime + 4.0 * lon_deg) % 1440.0
    hour_angle = d(tst / 4.0 - 180.0)
    lat = d(lat_deg)
    cos_zenith = np.sin(lat) * np.sin(decl) + np.cos(lat) * np.cos(decl) * np.cos(
        hour_angle
    )
    return 90.0 - np.degrees(np.arccos(np.clip(cos_zenith, -1.0, 1.0)))


def oracle_best_split(X, y, min_leaf):
    """Exhaustive best SSE-decrease split with midpoint thresholds.

    Mirrors the production tie-breaking contract: a candidate must beat
    the incumbent by more than SPLIT_GATE_TOL * max(1, parent SSE), so the
    first (feature, threshold) in scan order wins ties.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = len(y)
    if n < 2 * min_leaf or n < 2:
        return None
    parent_sse = float(np.sum((y - y.mean()) ** 2))
    gate = SPLIT_GATE_TOL * max(1.0, parent_sse)
    best_dec, best_f, best_thr = 0.0, -1, 0.0
    for f in range(X.shape[1]):
        values = np.unique(X[:, f])
        for lo, hi in zip(values[:-1], values[1:]):
            thr = 0.5 * (lo + hi)
            if thr >= hi:  # adjacent floats whose midpoint rounds up
                thr = lo
            lmask = X[:, f] <= thr
            nl = int(lmask.sum())
            if nl < min_leaf or n - nl < min_leaf:
                continue
            dec = (
                parent_sse
                - np.sum((y[lmask] - y[lmask].mean()) ** 2)
                - np.sum((y[~lmask] - y[~lmask].mean()) ** 2)
            )
            if dec > best_dec + gate:
                best_dec, best_f, best_thr = float(dec), f, float(thr)
    if best_f < 0:
        return None
    return best_f, best_thr, best_dec


def oracle_tree(X, y, rows, min_leaf):
    """Recursive exhaustive CART, as ('split', f, thr, L, R) / ('leaf', mean, n)."""
    sub_y = y[rows]
    split = oracle_best_split(X[rows], sub_y, min_leaf)
    if split is None:
        return ("leaf", float(sub_y.mean()), len(rows))
    f, thr, _dec = split
    lmask = X[rows, f] <= thr
    return (
        "split",
        f,
        thr,
        oracle_tree(X, y, rows[lmask], min_leaf),
        oracle_tree(X, y, rows[~lmask], min_leaf),
    )


def tree_to_nested(tree, node=0):
    """Convert a production Tree's arrays to the oracle's nested shape."""
    if tree.feature[node] < 0:
        return ("leaf", float(tree.value[node]), int(tree.n_node[node]))
    return (
        "split",
        int(tree.feature[node]),
        float(tree.threshold[node]),
        tree_to_nested(tree, int(tree.left[node])),
        tree_to_nested(tree, int(tree.right[node])),
    )


def svr_instance(i: int):
    """Seeded tiny regression instance #i for solver cross-checks.

    Five points in two dimensions, targets in the unit interval, and a
    (C, gamma) pair cycling through loose and tight kernel widths so both
    bound-active and interior solutions appear in the sample.
    """
    gen = np.random.default_rng(7000 + i)
    X = gen.uniform(0.0, 1.0, (5, 2))
    y = gen.uniform(0.0, 1.0, 5)
    C = (1.0, 10.0)[i % 2]
    gamma = (0.5, 8.0)[(i // 2) % 2]
    eps = (0.01, 0.05)[(i // 4) % 2]
    return X, y, C, gamma, eps


def oracle_tree_instance(i: int):
    """Seeded 10x3 regression instance #i for tree cross-checks."""
    gen = np.random.default_rng(9000 + i)
    X = gen.uniform(0.0, 1.0, (10, 3))
    # duplicate some feature values so threshold collapse paths get exercised
    X[gen.integers(0, 10), i % 3] = X[gen.integers(0, 10), i % 3]
    if i % 3 == 0:
        X[:5, 0] = X[5:, 0]
    y = gen.normal(0.5, 0.3, 10)
    min_leaf = (1, 2)[i % 2]
    return X, y, min_leaf
