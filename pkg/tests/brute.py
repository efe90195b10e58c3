"""Loop-level reference computations with no numpy and no package code.

Used to freeze the reference values in the example tests.  States are plain
lists of complex numbers, big-endian, Alice's qubits first.
"""
import cmath
import math


def channel_state(coefs):
    """sum_j coef_j |j>_A |j>_B for one (2 coefs) or two (4 coefs) pairs."""
    n = len(coefs)
    psi = [0j] * (n * n)
    for j, c in enumerate(coefs):
        psi[j * n + j] = complex(c)
    return psi


def collapse(psi, bra_vec):
    """Bob's unnormalized residual after Alice projects on bra_vec (qubits A first)."""
    n = len(bra_vec)
    out = [0j] * n
    for k in range(n):
        for j in range(n):
            out[j] += bra_vec[k].conjugate() * psi[k * n + j]
    return out


def norm2(v):
    return sum(abs(x) ** 2 for x in v)


def real1q_basis(al, be, a, b):
    c1 = 1 / math.sqrt(b * b * al * al + a * a * be * be)
    return [[complex(c1 * al * b), complex(c1 * be * a)], [complex(c1 * be * a), complex(-c1 * al * b)]]


def real2q_basis(t, ch):
    al, be, ga, de = t
    a, b, c, d = ch
    w = [b * c * d * al, a * c * d * be, a * b * d * ga, a * b * c * de]
    k = 1 / math.sqrt(sum(x * x for x in w))
    rows = [[w[0], w[1], w[2], w[3]], [w[1], -w[0], -w[3], w[2]],
            [w[2], w[3], -w[0], -w[1]], [-w[3], w[2], -w[1], w[0]]]
    return [[complex(k * x) for x in r] for r in rows]


def filter_pass(collapsed, pattern):
    """Ancilla-|0> probability of the minimal distortion-removing filter, by loops."""
    d = [abs(c) / abs(p) for c, p in zip(collapsed, pattern)]
    dmin = min(d)
    f = [dmin / x for x in d]
    kept = [fi * c for fi, c in zip(f, collapsed)]
    return norm2(kept) / norm2(collapsed), f


def total_success_real(basis, coefs, patterns):
    psi = channel_state(coefs)
    total = 0.0
    probs, passes = [], []
    for row, pat in zip(basis, patterns):
        res = collapse(psi, row)
        p = norm2(res)
        q = 1.0 if pat is None else filter_pass(res, pat)[0]
        probs.append(p)
        passes.append(q)
        total += p * q
    return total, probs, passes


def overlap2(u, v):
    s = sum(x.conjugate() * y for x, y in zip(u, v))
    nu, nv = norm2(u), norm2(v)
    return abs(s) ** 2 / (nu * nv)


def phase(x):
    return cmath.exp(1j * x)
