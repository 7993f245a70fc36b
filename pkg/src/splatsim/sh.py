"""Real spherical harmonics for view-dependent splat color, degrees 0..3.

Basis ordering is band-major with m ascending inside each band; the constants
and signs follow the common splat-training convention, which equals the
textbook real SH table multiplied by (-1)^m (Condon-Shortley phase). Flat
color uses the usual +0.5 DC offset and a non-negativity clamp:

    rgb = clamp(sum_k c_k * Y_k(d) + 0.5, 0, inf)
"""

from __future__ import annotations

import numpy as np

SH_C0 = 0.28209479177387814
SH_C1 = 0.4886025119029199
SH_C2 = (1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
         -1.0925484305920792, 0.5462742152960396)
SH_C3 = (-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
         0.3731763325901154, -0.4570457994644658, 1.445305721320277,
         -0.5900435899266435)

MAX_DEGREE = 3


def sh_basis(directions: np.ndarray, degree: int) -> np.ndarray:
    """Evaluate the (degree+1)^2 basis functions at unit directions (..., 3)."""
    if not 0 <= degree <= MAX_DEGREE:
        raise ValueError(f"unsupported SH degree {degree}")
    d = np.asarray(directions, dtype=np.float64)
    x, y, z = d[..., 0], d[..., 1], d[..., 2]
    out = np.empty(d.shape[:-1] + ((degree + 1) ** 2,), dtype=np.float64)
    out[..., 0] = SH_C0
    if degree >= 1:
        out[..., 1] = -SH_C1 * y
        out[..., 2] = SH_C1 * z
        out[..., 3] = -SH_C1 * x
    if degree >= 2:
        xx, yy, zz = x * x, y * y, z * z
        out[..., 4] = SH_C2[0] * x * y
        out[..., 5] = SH_C2[1] * y * z
        out[..., 6] = SH_C2[2] * (2 * zz - xx - yy)
        out[..., 7] = SH_C2[3] * x * z
        out[..., 8] = SH_C2[4] * (xx - yy)
    if degree >= 3:
        out[..., 9] = SH_C3[0] * y * (3 * xx - yy)
        out[..., 10] = SH_C3[1] * x * y * z
        out[..., 11] = SH_C3[2] * y * (4 * zz - xx - yy)
        out[..., 12] = SH_C3[3] * z * (2 * zz - 3 * xx - 3 * yy)
        out[..., 13] = SH_C3[4] * x * (4 * zz - xx - yy)
        out[..., 14] = SH_C3[5] * z * (xx - yy)
        out[..., 15] = SH_C3[6] * x * (xx - 3 * yy)
    return out


def sh_eval(coeffs: np.ndarray, direction: np.ndarray) -> np.ndarray:
    """Color from SH coefficients (..., K, 3) at unit direction(s) (..., 3).

    Broadcasts over leading axes; K determines the degree.
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    k = coeffs.shape[-2]
    degree = int(round(np.sqrt(k))) - 1
    if (degree + 1) ** 2 != k:
        raise ValueError(f"{k} coefficients is not a complete SH degree set")
    basis = sh_basis(direction, degree)
    rgb = np.einsum("...kc,...k->...c", coeffs, basis) + 0.5
    return np.maximum(rgb, 0.0)
