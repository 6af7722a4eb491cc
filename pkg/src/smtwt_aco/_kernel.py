"""JIT-compiled inner loop for schedule construction.

This mirrors the step-by-step reference path in construction.py exactly:
same arithmetic, same random-number consumption (two uniforms per
position), same tie handling. Keep the two in sync; the test suite pins
them to bitwise-identical outputs.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def construct(
    tau,        # (n, n) float64; mutated in place when do_local
    p,          # (n) float64 processing times
    d,          # (n) float64 due dates
    w,          # (n) float64 weights
    eta_due,    # (n) float64 EDD desirabilities (ignored when use_mdd)
    alpha,
    beta,
    q0,
    use_sum,    # summation rule: sum of tau over rows 0..i instead of tau[i]
    use_mdd,
    do_local,   # per-placement pheromone decay toward tau0 (matrix source)
    rho,
    tau0,
    u,          # (2n) float64 uniforms: u[2i] rule choice, u[2i+1] selection
    order_out,  # (n) int64
    prefix,     # (n) float64 workspace
    desir,      # (n) float64 workspace
):
    """Build one schedule, returning its total weighted tardiness."""
    n = tau.shape[0]
    scheduled = np.zeros(n, dtype=np.bool_)
    for j in range(n):
        prefix[j] = 0.0
    elapsed = 0.0
    twt = 0.0
    for i in range(n):
        if use_sum:
            for j in range(n):
                prefix[j] += tau[i, j]
        best = -1.0
        n_best = 0
        total = 0.0
        remaining = 0
        for j in range(n):
            if scheduled[j]:
                desir[j] = 0.0
                continue
            remaining += 1
            if use_mdd:
                completion = elapsed + p[j]
                due = d[j]
                eta = 1.0 / ((completion if completion > due else due) - elapsed)
            else:
                eta = eta_due[j]
            t = prefix[j] if use_sum else tau[i, j]
            if alpha == 1.0:
                ta = t
            elif alpha == 2.0:
                ta = t * t
            else:
                ta = t ** alpha
            if beta == 1.0:
                eb = eta
            elif beta == 2.0:
                eb = eta * eta
            else:
                eb = eta ** beta
            v = ta * eb
            desir[j] = v
            total += v
            if v > best:
                best = v
                n_best = 1
            elif v == best:
                n_best += 1
        u_rule = u[2 * i]
        u_sel = u[2 * i + 1]
        pick = -1
        if u_rule < q0:
            want = int(u_sel * n_best)
            if want >= n_best:
                want = n_best - 1
            seen = 0
            for j in range(n):
                if not scheduled[j] and desir[j] == best:
                    if seen == want:
                        pick = j
                        break
                    seen += 1
        elif total > 0.0:
            target = u_sel * total
            cum = 0.0
            for j in range(n):
                if scheduled[j]:
                    continue
                cum += desir[j]
                if cum > target:
                    pick = j
                    break
        if pick < 0:
            # numerical fallback: uniform over what is left
            want = int(u_sel * remaining)
            if want >= remaining:
                want = remaining - 1
            seen = 0
            for j in range(n):
                if not scheduled[j]:
                    if seen == want:
                        pick = j
                        break
                    seen += 1
        order_out[i] = pick
        scheduled[pick] = True
        if do_local:
            old = tau[i, pick]
            new = (1.0 - rho) * old + rho * tau0
            tau[i, pick] = new
            if use_sum:
                prefix[pick] += new - old
        elapsed += p[pick]
        late = elapsed - d[pick]
        if late > 0.0:
            twt += w[pick] * late
    return twt
