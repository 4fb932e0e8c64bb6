"""Pure-python identification loop.

Reference implementation of the streamed regressor + recursive gain
update; the compiled extension mirrors this step for step.  Structure
codes: 0 = output feedback from measurements with no residual channel,
1 = adds the residual channel, 2 = output feedback from the model's own
one-step prediction.

Step t (predicting y[t+1]):
  1. push sample t into the banks, read the stacked states as phi(t)
  2. prior error    eps = y[t+1] - theta . phi
  3. posterior step eps_p = eps / (1 + phi.F.phi),
                    theta += (F phi) eps_p,
                    F <- (F - F phi phi' F / (lam1/lam2 + phi.F.phi)) / lam1
  4. feeds for t+1: prediction feedback y[t+1] - eps_p, residual feed
     eps_p (or eps when feed_prior is set)

With freeze set the gain is null: theta and F stay put and the posterior
error equals the prior one.  The sum of eps_p * phi is accumulated as a
stationarity diagnostic.
"""
from __future__ import annotations

import numpy as np

ARX, ARMAX, OE = 0, 1, 2


def run_loop(structure, A, B, C, D, n_sections, u, y, theta0, F0,
             lam1, lam2, freeze, feed_prior, div_limit, traj_stride):
    A = np.ascontiguousarray(A, dtype=float)
    B = np.ascontiguousarray(B, dtype=float)
    C = np.ascontiguousarray(C, dtype=float)
    D = float(D)
    u = np.ascontiguousarray(u, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    theta = np.array(theta0, dtype=float, copy=True).reshape(-1)
    F = np.array(F0, dtype=float, copy=True)
    ns = int(n_sections)
    n = B.size
    m = ns * n
    N = y.size
    A_T = A.T.copy()

    Xy = np.zeros((ns, n))
    Xu = np.zeros((ns, n))
    Xe = np.zeros((ns, n)) if structure == ARMAX else None
    ws = np.empty(ns + 1)

    def push(X, s):
        ws[0] = s
        co = X @ C
        for j in range(ns):
            ws[j + 1] = co[j] + D * ws[j]
        X[:] = X @ A_T + np.outer(ws[:ns], B)

    d = theta.size
    eps = np.empty(max(N - 1, 0))
    eps_post = np.empty(max(N - 1, 0))
    sum_eps_phi = np.zeros(d)
    phi = np.empty(d)

    traj = []
    traj_idx = []

    yhat_feed = 0.0
    e_feed = y[0] if (structure == ARMAX and N > 0) else 0.0
    diverged = False
    steps = 0

    for t in range(N - 1):
        push(Xy, yhat_feed if structure == OE else y[t])
        push(Xu, u[t])
        phi[:m] = -Xy.reshape(-1)
        phi[m:2 * m] = Xu.reshape(-1)
        if structure == ARMAX:
            push(Xe, e_feed)
            phi[2 * m:] = Xe.reshape(-1)

        e_ap = y[t + 1] - float(theta @ phi)
        if freeze:
            e_po = e_ap
        else:
            g = F @ phi
            s = float(phi @ g)
            e_po = e_ap / (1.0 + s)
            theta += g * e_po
            if lam2 > 0.0:
                F -= np.outer(g, g) / (lam1 / lam2 + s)
                F /= lam1
            elif lam1 != 1.0:
                F /= lam1

        eps[t] = e_ap
        eps_post[t] = e_po
        sum_eps_phi += e_po * phi
        steps = t + 1

        yhat_feed = y[t + 1] - e_po
        e_feed = e_ap if feed_prior else e_po

        if traj_stride > 0 and (steps % traj_stride == 0 or t == N - 2):
            traj.append(theta.copy())
            traj_idx.append(steps)

        if not np.isfinite(e_ap) or np.max(np.abs(theta)) > div_limit:
            diverged = True
            break

    return {
        "eps": eps[:steps],
        "eps_post": eps_post[:steps],
        "theta": theta,
        "F": F,
        "sum_eps_phi": sum_eps_phi,
        "traj": np.array(traj) if traj else None,
        "traj_idx": np.array(traj_idx, dtype=np.int64) if traj_idx else None,
        "diverged": diverged,
        "steps": steps,
    }
