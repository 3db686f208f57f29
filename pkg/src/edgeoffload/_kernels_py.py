"""Pure-Python pair-scoring kernel, used when the compiled extension is unavailable.

Must stay operation-for-operation identical to ``_kernels.pyx`` so both
paths pick the same pair bit for bit.
"""
import math

DAPA = 0
UE = 1


def best_pair(mode, weight, data_mbit, cycles, data_mb, covered, u, cap, v, mem,
              bw, cpu, alpha, gamma, ap_load, srv_load, lf):
    """Return ``(i, j, score)`` of the lowest-scoring feasible pair, or ``(-1, -1, inf)``.

    Ties keep the lexicographically smallest (i, j).
    """
    m = len(bw)
    covered = covered.tolist()
    u = u.tolist()
    cap = cap.tolist()
    v = v.tolist()
    mem = mem.tolist()
    bw = bw.tolist()
    cpu = cpu.tolist()
    alpha = alpha.tolist()
    gamma = gamma.tolist()
    ap_load = ap_load.tolist()
    srv_load = srv_load.tolist()
    lf = lf.tolist()
    aps = [i for i in range(m) if covered[i] and u[i] + 1 <= cap[i]]
    servers = [j for j in range(m) if data_mb <= mem[j]]
    if not aps or not servers:
        return -1, -1, math.inf

    own_t = [0.0] * m
    ext_t = [0.0] * m
    for i in aps:
        own_t[i] = data_mbit * (u[i] + 1) / bw[i]
        if mode == DAPA:
            ext_t[i] = alpha[i] * (ap_load[i] / bw[i])
    own_c = [0.0] * m
    ext_c = [0.0] * m
    for j in servers:
        own_c[j] = cycles * (v[j] + 1) / cpu[j]
        if mode == DAPA:
            ext_c[j] = gamma[j] * (srv_load[j] / cpu[j])

    best = math.inf
    bi = bj = -1
    for i in aps:
        row = lf[i]
        for j in servers:
            own = (own_t[i] + 2.0 * row[j]) + own_c[j]
            if mode == DAPA:
                s = (ext_t[i] + ext_c[j]) + weight * own
            else:
                s = own
            if s < best:
                best = s
                bi, bj = i, j
    return bi, bj, best
