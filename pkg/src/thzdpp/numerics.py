"""Small complex linear-algebra kernels and quadrature.

Matrices are plain numpy arrays. Every routine that works on a single
matrix also accepts a stack of matrices with shape ``(..., rows, cols)``,
which is how the per-subcarrier loops elsewhere in the package stay
vectorized.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import simpson

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 60


@dataclass(frozen=True)
class SvdResult:
    """Thin, ordered SVD ``a = U @ diag(s) @ V^H``.

    For an ``(m, n)`` input with ``r = min(m, n)`` the shapes are
    ``U: (m, r)``, ``s: (r,)`` and ``V: (n, r)`` (plus leading batch axes).
    """

    left_vectors: np.ndarray
    singular_values: np.ndarray
    right_vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u, s, v = self.left_vectors, self.singular_values, self.right_vectors
        return (u * s[..., None, :]) @ np.swapaxes(v, -1, -2).conj()


def _as_matrix(a, name: str = "a") -> np.ndarray:
    arr = np.asarray(a)
    if arr.ndim < 2:
        raise ValueError(f"{name} must be at least 2-D, got shape {arr.shape}")
    return arr.astype(np.complex128, copy=False)


def matmul(a, b) -> np.ndarray:
    """Complex matrix product with an explicit shape check."""
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    if a.shape[-1] != b.shape[-2]:
        raise ValueError(f"shape mismatch: {a.shape} @ {b.shape}")
    return a @ b


def _jacobi_columns(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One-sided (Hestenes) Jacobi on the columns of a batch of matrices.

    Returns the rotated matrix, whose columns are mutually orthogonal, and
    the accumulated unitary ``V`` with ``a_in @ V = a_out``.
    """
    w = a.copy()
    n = w.shape[-1]
    v = np.broadcast_to(np.eye(n, dtype=np.complex128), w.shape[:-2] + (n, n)).copy()
    for _ in range(JACOBI_MAX_SWEEPS):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                wp = w[..., :, p]
                wq = w[..., :, q]
                alpha = np.einsum("...i,...i->...", wp.conj(), wp).real
                beta = np.einsum("...i,...i->...", wq.conj(), wq).real
                gamma = np.einsum("...i,...i->...", wp.conj(), wq)
                mag = np.abs(gamma)
                scale = np.sqrt(alpha * beta)
                active = (scale > 0) & (mag > JACOBI_TOL * scale)
                if not np.any(active):
                    continue
                rotated = True
                safe = np.where(active, mag, 1.0)
                zeta = (beta - alpha) / (2.0 * safe)
                t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                c = np.where(active, c, 1.0)[..., None]
                s = np.where(active, s, 0.0)[..., None]
                phase = np.where(active, gamma / safe, 1.0)[..., None]
                for mat in (w, v):
                    colp = mat[..., :, p].copy()
                    colq = mat[..., :, q] * phase.conj()
                    mat[..., :, p] = c * colp - s * colq
                    mat[..., :, q] = s * colp + c * colq
        if not rotated:
            break
    return w, v


def _complete_basis(u: np.ndarray, keep: int) -> np.ndarray:
    """Replace columns ``keep:`` of ``u`` with an orthonormal complement."""
    m, r = u.shape
    q, _ = np.linalg.qr(np.hstack([u[:, :keep], np.eye(m, dtype=np.complex128)]))
    out = u.copy()
    out[:, keep:] = q[:, keep:r]
    return out


def svd(a) -> SvdResult:
    """Ordered thin SVD via one-sided Jacobi rotations.

    Singular values come out descending; ties keep the Jacobi column order.
    Wide matrices are handled through their conjugate transpose so the
    rotations always act on the smaller dimension.
    """
    a = _as_matrix(a)
    if a.shape[-1] == 0 or a.shape[-2] == 0:
        raise ValueError("svd needs at least one row and one column")
    if not np.all(np.isfinite(a)):
        raise ValueError("svd input contains non-finite entries")
    rows, cols = a.shape[-2:]
    if cols > rows:
        res = svd(np.swapaxes(a, -1, -2).conj())
        return SvdResult(res.right_vectors, res.singular_values, res.left_vectors)

    w, v = _jacobi_columns(a)
    sigma = np.linalg.norm(w, axis=-2)
    order = np.argsort(-sigma, axis=-1, kind="stable")
    sigma = np.take_along_axis(sigma, order, axis=-1)
    w = np.take_along_axis(w, order[..., None, :], axis=-1)
    v = np.take_along_axis(v, order[..., None, :], axis=-1)

    top = sigma[..., :1]
    good = sigma > np.maximum(top, np.finfo(float).tiny) * 1e-13
    u = w / np.where(good, sigma, 1.0)[..., None, :]

    if not np.all(good):
        flat_u = u.reshape((-1,) + u.shape[-2:])
        flat_good = good.reshape((-1, good.shape[-1]))
        for i in range(flat_u.shape[0]):
            k = int(flat_good[i].sum())
            if k < cols:
                flat_u[i] = _complete_basis(flat_u[i], k)
                flat_good[i] = True
        u = flat_u.reshape(u.shape)
        sigma = np.where(good, sigma, 0.0)
    return SvdResult(u, sigma, v)


def logdet_hermitian_psd(a) -> np.ndarray | float:
    """log2 of the determinant of a Hermitian positive-definite matrix.

    Uses a Cholesky factorization of the symmetrized input. Raises
    ``ValueError`` when the input is visibly non-Hermitian or not positive
    definite.
    """
    a = _as_matrix(a)
    if a.shape[-1] != a.shape[-2]:
        raise ValueError(f"logdet needs square matrices, got {a.shape}")
    ah = np.swapaxes(a, -1, -2).conj()
    if np.max(np.abs(a - ah), initial=0.0) > 1e-9 * max(1.0, float(np.max(np.abs(a), initial=0.0))):
        raise ValueError("matrix is not Hermitian")
    try:
        chol = np.linalg.cholesky(0.5 * (a + ah))
    except np.linalg.LinAlgError as exc:
        raise ValueError("matrix is not positive definite") from exc
    diag = np.diagonal(chol, axis1=-2, axis2=-1).real
    out = 2.0 * np.sum(np.log2(diag), axis=-1)
    return float(out) if out.ndim == 0 else out


def integrate_uniform(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, n: int) -> float:
    """Composite Simpson rule with ``n`` panels (rounded up to even).

    ``f`` is called once on the whole node array and must be vectorized.
    """
    if not lo < hi:
        raise ValueError(f"need lo < hi, got lo={lo}, hi={hi}")
    if n < 2:
        raise ValueError(f"need n >= 2 panels, got {n}")
    n += n % 2
    x = np.linspace(lo, hi, n + 1)
    y = np.asarray(f(x), dtype=float)
    if y.shape != x.shape:
        y = np.broadcast_to(y, x.shape)
    return float(simpson(y, x=x))
