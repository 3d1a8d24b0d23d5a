"""Independent reference implementations on plain Python sets.

Nothing here imports the package: these are the slow, literal versions the
tests compare against.
"""

import itertools


def subsets(items):
    items = sorted(items)
    for r in range(len(items) + 1):
        yield from (frozenset(c) for c in itertools.combinations(items, r))


def interference(cov, A):
    return {i for i in range(len(cov)) if i not in A
            and sum(1 for t in A if i in cov[t]) >= 2}


def shadow(cov, A):
    return {i for i in range(len(cov)) if not any(i in cov[t] for t in A)}


def zone(cov, A, i):
    return set(cov[i]) - set(A) - interference(cov, A)


def wants(has, n):
    return [set(range(n)) - set(h) for h in has]


def decodable_for(has_j, wants_j, kappa):
    return len(set(kappa) & wants_j) == 1


def delay_table(has, n, cov, p, A, kappa):
    """Per-device probability of one delay unit in this slot.

    ``kappa`` maps each transmitter to the set of packets it XORs.
    """
    w = wants(has, n)
    T = interference(cov, A)
    S = shadow(cov, A)
    out = [0.0] * len(cov)
    for j in range(len(cov)):
        if not w[j]:
            continue
        if j in A or j in T or j in S:
            out[j] = 1.0
            continue
        (i,) = [t for t in A if j in cov[t]]
        k = kappa.get(i, set())
        if not (k and decodable_for(has[j], w[j], k)):
            out[j] = 1.0 - p[i][j]
    return out


def expected(has, n, cov, p, A, kappa):
    return sum(delay_table(has, n, cov, p, A, kappa))


def brute_force_min_delay(has, n, cov, p):
    """Minimum expected delay over every transmitter set and every joint
    choice of combinations (no per-transmitter decoupling)."""
    best = float("inf")
    m = len(cov)
    for A in subsets(range(m)):
        choices = [list(subsets(has[i])) for i in sorted(A)]
        for combo in itertools.product(*choices):
            kappa = dict(zip(sorted(A), combo))
            best = min(best, expected(has, n, cov, p, A, kappa))
    return best


def brute_force_clique(weights, edges):
    """(weight, members) of a maximum-weight clique, preferring the
    lexicographically smallest member tuple among ties."""
    adj = {frozenset(e) for e in edges}
    best = (0.0, ())
    for r in range(1, len(weights) + 1):
        for c in itertools.combinations(range(len(weights)), r):
            if all(frozenset((a, b)) in adj for a, b in itertools.combinations(c, 2)):
                w = sum(weights[v] for v in c)
                if w > best[0] + 1e-9 or (abs(w - best[0]) <= 1e-9 and c < best[1]):
                    best = (w, c)
    return best


def total_coverage(cov, Z):
    out = set()
    for z in Z:
        out |= set(cov[z])
    return out


def cohesive(cov, Z):
    """Every split of Z into two nonempty halves leaves overlapping coverages."""
    Z = sorted(Z)
    if not Z:
        return False
    for part in subsets(Z):
        rest = set(Z) - part
        if part and rest and not (total_coverage(cov, part) & total_coverage(cov, rest)):
            return False
    return True


def clusters(cov, A):
    """Connected components of the coverage-overlap relation, via union-find."""
    parent = {a: a for a in A}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in itertools.combinations(sorted(A), 2):
        if set(cov[a]) & set(cov[b]):
            parent[find(a)] = find(b)
    groups = {}
    for a in A:
        groups.setdefault(find(a), set()).add(a)
    return {frozenset(g) for g in groups.values()}


def best_single_combination(has, n, p, i, opportunity):
    """Max over every kappa subset of H_i of the summed delivery probability
    to the devices that can decode it instantly."""
    w = wants(has, n)
    best = 0.0
    for kappa in subsets(has[i]):
        if not kappa:
            continue
        val = sum(1.0 - p[i][j] for j in opportunity if w[j] and decodable_for(has[j], w[j], kappa))
        best = max(best, val)
    return best
