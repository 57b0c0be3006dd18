"""Pure-Python twins of the compiled kernels (same signatures, same results)."""

OED = 0
GREEDY = 1


def max_local_excess(rounds, W, beta, rho, threshold):
    rounds = [int(x) for x in rounds]
    rows = [[int(x) for x in row] for row in W]
    beta = [int(x) for x in beta]
    rho = int(rho)
    best, bi, bj = int(threshold), -1, -1
    K = len(rows)
    if K == 0:
        return best, bi, bj
    totals = [sum(row) for row in rows]
    D = [0] * K
    D[-1] = None
    for i in range(K - 2, -1, -1):
        tail = D[i + 1] if D[i + 1] is not None and D[i + 1] > 0 else 0
        D[i] = totals[i + 1] - rho * (rounds[i + 1] - rounds[i]) + tail
    n = len(beta)
    for i in range(K):
        acc = [0] * n
        for j in range(i, K):
            row = rows[j]
            ex = 0
            for f in range(n):
                a = acc[f] + row[f]
                acc[f] = a
                if a > beta[f]:
                    ex += a - beta[f]
            F = ex - rho * (rounds[j] - rounds[i] + 1)
            if F > best:
                best, bi, bj = F, i, j
            if j == K - 1 or F + D[j] <= best:
                break
    return best, bi, bj


def _decide(protocol, here, there):
    if protocol == OED:
        return here > there or (here == there and here % 2 == 1)
    return here > 0


def run_rounds(loads, inj, protocol, capacity, hist):
    n = len(loads)
    cur = [int(x) for x in loads]
    delivered = 0
    for t in range(len(inj)):
        row = inj[t]
        for i in range(n):
            cur[i] += int(row[i])
        hist[t] = cur
        sent = [0] * n
        for i in range(n):
            nxt = cur[i + 1] if i + 1 < n else 0
            if cur[i] > 0 and _decide(protocol, cur[i], nxt):
                sent[i] = min(cur[i], capacity)
        for i in range(n):
            cur[i] -= sent[i]
            if i + 1 < n:
                cur[i + 1] += sent[i]
            else:
                delivered += sent[i]
    loads[:] = cur
    return delivered
