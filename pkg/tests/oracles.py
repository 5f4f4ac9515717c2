"""Reference implementations that share no code with the package."""

import numpy as np
from scipy.linalg import expm


def svd_trace_norm(a):
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


def pt_by_loops(rho):
    out = np.zeros_like(rho)
    for a1 in range(3):
        for b1 in range(3):
            for a2 in range(3):
                for b2 in range(3):
                    out[3 * a1 + b1, 3 * a2 + b2] = rho[3 * a2 + b1, 3 * a1 + b2]
    return out


def realign_by_loops(rho):
    out = np.zeros_like(rho)
    for a1 in range(3):
        for b1 in range(3):
            for a2 in range(3):
                for b2 in range(3):
                    out[3 * a1 + a2, 3 * b1 + b2] = rho[3 * a1 + b1, 3 * a2 + b2]
    return out


def liouvillian(g1, g2):
    """Column-stacking superoperator of the damping generator."""
    c = np.diag([1.0, np.sqrt(2.0)], 1)
    eye3 = np.eye(3)
    eye9 = np.eye(9)
    total = np.zeros((81, 81), dtype=complex)
    for g, op in ((g1, np.kron(c, eye3)), (g2, np.kron(eye3, c))):
        cd = op.conj().T
        cdc = cd @ op
        # vec(A X B) = (B^T kron A) vec(X)
        total += g * np.kron(op.conj(), op)
        total -= 0.5 * g * (np.kron(eye9, cdc) + np.kron(cdc.T, eye9))
    return total


def exact_state(rho0, t, g1=1.0, g2=1.0):
    vec = rho0.reshape(-1, order="F")
    return (expm(liouvillian(g1, g2) * t) @ vec).reshape(9, 9, order="F")
