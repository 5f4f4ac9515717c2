"""Small dense Hermitian eigensolver and trace norm.

Everything here operates on matrices of size at most ~10, so a cyclic Jacobi
sweep compiled with numba is both accurate and fast enough to be called at
every sample of an evolution.
"""

import numba
import numpy as np

from qutrit_esd.errors import DomainError

HERMITIAN_TOL = 1e-10
OFFDIAG_REL_TOL = 1e-13
MAX_SWEEPS = 60


@numba.njit(cache=True)
def _jacobi_sweeps(a, rel_tol, max_sweeps):
    n = a.shape[0]
    fro2 = 0.0
    for i in range(n):
        for j in range(n):
            fro2 += a[i, j].real ** 2 + a[i, j].imag ** 2
    target = (rel_tol * rel_tol) * fro2
    for sweep in range(max_sweeps):
        off2 = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off2 += a[i, j].real ** 2 + a[i, j].imag ** 2
        if off2 <= target:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                b = a[p, q]
                r = abs(b)
                if r == 0.0:
                    continue
                e = b / r
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * r)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                ec = e.conjugate()
                # A <- U^H A U with U = [[c, s], [-s conj(e), c conj(e)]] on (p, q)
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * ec * akq
                    a[k, q] = s * akp + c * ec * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * e * aqk
                    a[q, k] = s * apk + c * e * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
    return -1


def hermitian_eigenvalues(a, tol=HERMITIAN_TOL):
    """Ascending eigenvalues of a Hermitian matrix by cyclic Jacobi rotations.

    Sweeps continue until the off-diagonal Frobenius mass is below
    ``1e-13 * ||A||_F``. Raises :class:`DomainError` if ``a`` is not Hermitian
    within ``tol`` (absolute, entrywise).
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {a.shape}")
    defect = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
    if defect > tol:
        raise DomainError(f"matrix is not Hermitian (defect {defect:.3e} > {tol:.1e})")
    work = np.array((a + a.conj().T) / 2, dtype=np.complex128)
    sweeps = _jacobi_sweeps(work, OFFDIAG_REL_TOL, MAX_SWEEPS)
    if sweeps < 0:
        raise ArithmeticError("Jacobi iteration did not converge")
    return np.sort(work.diagonal().real)


def trace_norm(a):
    """Sum of singular values, ``tr sqrt(A A^dagger)``."""
    a = np.asarray(a, dtype=np.complex128)
    evals = hermitian_eigenvalues(a @ a.conj().T)
    # A A^dagger is PSD; rounding may leave tiny negatives.
    return float(np.sum(np.sqrt(np.clip(evals, 0.0, None))))
