#!/usr/bin/env python3
"""Computes the pinned W' regression constants with an external SDP solver.

Everything here is rebuilt from numpy primitives so it shares no code path
with the C++ library. Run once; the printed values are committed in
tests/pinned_constants.hpp.

    python3 tools/pin_constants.py
"""
import itertools

import cvxpy as cp
import numpy as np

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)


def proj(v):
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


INPUTS = [
    proj(KET0 + KET1),
    proj(KET0 - KET1),
    proj(KET0 + 1j * KET1),
    proj(KET0 - 1j * KET1),
    proj(KET0),
    proj(KET1),
]


def bell_kets():
    # (polarization, path) ordering, H=|0>, V=|1>
    k = lambda p, q: np.kron([KET0, KET1][p], [KET0, KET1][q])
    s = 1 / np.sqrt(2)
    return [
        s * (k(0, 1) + k(1, 0)),  # Psi+
        s * (k(0, 1) - k(1, 0)),  # Psi-
        s * (k(0, 0) + k(1, 1)),  # Phi+
        s * (k(0, 0) - k(1, 1)),  # Phi-
    ]


def bsm(phase=0.0, visibility=1.0):
    u = np.kron(np.eye(2), np.diag([1, np.exp(1j * phase)]))
    out = []
    for k in bell_kets():
        e = u.conj().T @ proj(k) @ u
        out.append(visibility * e + (1 - visibility) * np.eye(4) / 4)
    return out


def swap_2x2(m):
    # (pol, path) -> (path, pol)
    t = m.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2)
    return t.reshape(4, 4)


def werner(lam):
    psi = bell_kets()[0]
    return lam * proj(psi) + (1 - lam) * np.eye(4) / 4


def correlations(rho, povm_a, povm_b):
    p = np.zeros((4, 4, 6, 6))
    for x, y in itertools.product(range(6), range(6)):
        state = np.kron(np.kron(INPUTS[x], rho), INPUTS[y])
        for a, b in itertools.product(range(4), range(4)):
            op = np.kron(swap_2x2(povm_a[a]), povm_b[b])
            p[a, b, x, y] = np.real(np.trace(op @ state))
    return p


def w_prime_cvxpy(p):
    total = 0.0
    for a, b in itertools.product(range(4), range(4)):
        pi = cp.Variable((4, 4), hermitian=True)
        sp = cp.Variable((4, 4), hermitian=True)
        sm = cp.Variable((4, 4), hermitian=True)
        cons = [pi >> 0, sp >> 0, sm >> 0,
                sp - sm - cp.partial_transpose(pi, [2, 2], 0) == 0]
        for x, y in itertools.product(range(6), range(6)):
            tt = np.kron(INPUTS[x], INPUTS[y])
            cons.append(cp.real(cp.trace(pi @ tt)) == p[a, b, x, y])
        prob = cp.Problem(cp.Minimize(cp.real(cp.trace(sm))), cons)
        prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12,
                   tol_feas=1e-12)
        total += prob.value
    return -total


def w_prime_closed_form(p):
    # Tomographic inversion of each Pi_ab followed by the negative part of
    # its partial transpose.
    basis = np.array([np.kron(INPUTS[x], INPUTS[y]).conj().reshape(-1)
                      for x, y in itertools.product(range(6), range(6))])
    total = 0.0
    for a, b in itertools.product(range(4), range(4)):
        rhs = np.array([p[a, b, x, y] for x, y in itertools.product(range(6), range(6))])
        vec, *_ = np.linalg.lstsq(basis, rhs.astype(complex), rcond=None)
        pi = vec.reshape(4, 4)
        pi = (pi + pi.conj().T) / 2
        pt = pi.reshape(2, 2, 2, 2).transpose(2, 1, 0, 3).reshape(4, 4)
        ev = np.linalg.eigvalsh(pt)
        total += -ev[ev < 0].sum()
    return -total


def main():
    ideal = bsm()
    lams = [1.0, 1.0 / 3.0] + [round(0.35 + 0.05 * i, 2) for i in range(14)]
    for lam in lams:
        p = correlations(werner(lam), ideal, ideal)
        print(f"ideal lambda={lam!r:22} cvxpy={w_prime_cvxpy(p):.12f} "
              f"closed_form={w_prime_closed_form(p):.12f}")
    noisy = bsm(0.05, 0.97)
    for lam in (1.0, 0.94, 0.45):
        p = correlations(werner(lam), noisy, noisy)
        print(f"imperfect(0.05,0.97) lambda={lam} cvxpy={w_prime_cvxpy(p):.12f} "
              f"closed_form={w_prime_closed_form(p):.12f}")


if __name__ == "__main__":
    main()
