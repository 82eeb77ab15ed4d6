"""Dense complex matrix kernel for small Hilbert spaces (dim <= ~64).

Hermitian eigendecomposition, SVD, tensor algebra, partial trace,
purification and the state-distance functionals everything else is
built on. All logarithms in this package are base 2; entropic outputs
are in qubits/bits.
"""

import numpy as np

# Hermiticity / orthonormality checks
HERM_TOL = 1e-9
# Eigenvalues in (PSD_CLIP, 0) are treated as numerical noise and clipped
# to zero; anything more negative is an error.
PSD_CLIP = -1e-10


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conjugate(m.T)


def is_hermitian(m: np.ndarray, tol: float = HERM_TOL) -> bool:
    return m.shape[0] == m.shape[1] and np.max(np.abs(m - dagger(m))) <= tol


def tensor(*mats: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more matrices/vectors, left to right."""
    out = np.asarray(mats[0], dtype=complex)
    for m in mats[1:]:
        out = np.kron(out, np.asarray(m, dtype=complex))
    return out


def _canonical_phases(vecs: np.ndarray) -> np.ndarray:
    # Fix the global phase of each column: largest-magnitude entry made
    # real positive. Keeps repeated runs byte-identical.
    out = vecs.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        i = int(np.argmax(np.abs(col)))
        a = col[i]
        if np.abs(a) > 0:
            out[:, j] = col * (np.conj(a) / np.abs(a))
    return out


def eig_hermitian(m: np.ndarray, tol: float = HERM_TOL):
    """Eigendecomposition of a Hermitian matrix.

    Parameters
    ----------
    m : np.ndarray
        Square Hermitian matrix (checked within ``tol``).

    Returns
    -------
    eigenvalues : np.ndarray
        Real eigenvalues in ascending order.
    eigenvectors : np.ndarray
        Orthonormal eigenvector columns, paired index-wise with the
        eigenvalues, each column phase-canonicalized for reproducibility.

    Raises
    ------
    ValueError
        If ``m`` is not square or not Hermitian within ``tol``.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not is_hermitian(m, tol):
        raise ValueError("matrix is not Hermitian within tolerance")
    w, v = np.linalg.eigh((m + dagger(m)) / 2.0)
    return w, _canonical_phases(v)


def svd(m: np.ndarray):
    """SVD ``m = U @ diag(s) @ Vh`` with singular values descending."""
    m = np.asarray(m, dtype=complex)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    u, s, vh = np.linalg.svd(m)
    return u, s, vh


def clip_psd_spectrum(w: np.ndarray) -> np.ndarray:
    """Clip tiny negative eigenvalues to zero; reject genuinely negative ones."""
    if np.min(w) < PSD_CLIP:
        raise ValueError(f"matrix is not PSD: min eigenvalue {np.min(w):.3e}")
    return np.maximum(w, 0.0)


def psd_power(m: np.ndarray, power: float, support_tol: float = 1e-12) -> np.ndarray:
    """Matrix power of a PSD matrix on its support (pseudo-power).

    Negative powers invert only the eigenvalues above ``support_tol``;
    the kernel is mapped to zero. Used for sqrt, inverse sqrt and
    pseudo-inverse of density operators and POVM elements.
    """
    w, v = eig_hermitian(m)
    w = clip_psd_spectrum(w)
    out_w = np.zeros_like(w)
    mask = w > support_tol
    out_w[mask] = w[mask] ** power
    if power >= 0:
        # non-negative powers act on the sub-threshold part too (continuity)
        out_w[~mask] = np.maximum(w[~mask], 0.0) ** power if power > 0 else 0.0
    return (v * out_w) @ dagger(v)


def support_projector(m: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    w, v = eig_hermitian(m)
    keep = v[:, w > tol]
    return keep @ dagger(keep)


def partial_trace(mat: np.ndarray, dims, keep) -> np.ndarray:
    """Partial trace of a matrix over a tensor factorization.

    Parameters
    ----------
    mat : np.ndarray
        Square matrix on the full space ``prod(dims)``.
    dims : sequence of int
        Dimensions of the tensor factors, in order.
    keep : int or sequence of int
        Indices of factors to keep (0-indexed); all others are traced out.

    Returns
    -------
    np.ndarray
        Matrix on the kept factors, in their original relative order.
    """
    dims = list(dims)
    if isinstance(keep, (int, np.integer)):
        keep = [int(keep)]
    keep = sorted(int(k) for k in keep)
    n = len(dims)
    total = int(np.prod(dims))
    mat = np.asarray(mat, dtype=complex)
    if mat.shape != (total, total):
        raise ValueError(f"matrix shape {mat.shape} does not match dims {dims}")
    for k in keep:
        if k < 0 or k >= n:
            raise ValueError(f"keep index {k} out of range for {n} factors")
    t = mat.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # trace highest index first so axis numbering stays valid
    for idx in sorted(traced, reverse=True):
        t = np.trace(t, axis1=idx, axis2=idx + (t.ndim // 2))
    d_keep = int(np.prod([dims[i] for i in keep])) if keep else 1
    return t.reshape(d_keep, d_keep)


def purify(rho: np.ndarray, support_tol: float = 1e-12) -> np.ndarray:
    """Purification of a density matrix.

    Returns a vector on ``A x R`` (A-major ordering) with ``|R| = rank(rho)``
    and Schmidt coefficients equal to the square roots of the nonzero
    eigenvalues of ``rho``.
    """
    w, v = eig_hermitian(rho)
    w = clip_psd_spectrum(w)
    idx = np.argsort(w)[::-1]
    w, v = w[idx], v[:, idx]
    rank = max(1, int(np.sum(w > support_tol)))
    d = rho.shape[0]
    psi = np.zeros((d, rank), dtype=complex)
    for r in range(rank):
        psi[:, r] = np.sqrt(w[r]) * v[:, r]
    return psi.reshape(d * rank)


def trace_norm(m: np.ndarray) -> float:
    """Sum of singular values; for Hermitian m, the sum of |eigenvalues|."""
    if is_hermitian(m, 1e-8):
        w, _ = eig_hermitian(m, tol=1e-8)
        return float(np.sum(np.abs(w)))
    return float(np.sum(np.linalg.svd(np.asarray(m, dtype=complex), compute_uv=False)))


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """One-norm distance ``||a - b||_1`` (unnormalized, in [0, 2] for states)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return trace_norm(a - b)


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """Fidelity ``F(a, b) = || sqrt(a) sqrt(b) ||_1`` for PSD a, b with trace <= 1."""
    sa = psd_power(a, 0.5)
    sb = psd_power(b, 0.5)
    return float(np.sum(np.linalg.svd(sa @ sb, compute_uv=False)))


def generalized_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """Fidelity extended to sub-states by the missing-trace term."""
    f = fidelity(a, b)
    ta = min(1.0, float(np.real(np.trace(a))))
    tb = min(1.0, float(np.real(np.trace(b))))
    return f + np.sqrt(max(0.0, 1.0 - ta) * max(0.0, 1.0 - tb))
