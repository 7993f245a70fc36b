"""Gaussian primitive and scene container.

A scene stores one struct-of-arrays block per feature so renderers can work on
whole-scene numpy arrays. `Gaussian` is a scalar view used by the kernel-level
API and by tests; both share the same math.

Conventions:
  * quaternions are (w, x, y, z), renormalized on construction when off-unit
    by more than 1e-6 (so freshly exported float32 files survive bit-exact
    round-trips);
  * scales live in log space; exp(log_scale) is clamped to >= MIN_SCALE at
    load so the precision matrix always exists;
  * opacity / intensity / segmentation bits are stored as logits, matching
    the usual splat-training parameterization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Similarity, quat_to_matrix

# Smallest admissible metric scale (meters); keeps covariances invertible.
MIN_SCALE = 1e-7
LOG_MIN_SCALE = float(np.log(MIN_SCALE))

SEG_BITS = 6
NO_LABEL = 255  # sentinel segmentation ID for "no hit"

QUAT_NORM_TOL = 1e-6


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


def logit(p):
    p = np.asarray(p, dtype=np.float64)
    out = np.log(p / (1.0 - p))
    return out if out.ndim else float(out)


def sh_coeff_count(degree: int) -> int:
    return (degree + 1) ** 2


def sh_degree_from_count(count: int) -> int:
    degree = int(round(np.sqrt(count))) - 1
    if sh_coeff_count(degree) != count:
        raise ValueError(f"{count} SH coefficients is not a complete degree set")
    return degree


@dataclass
class Gaussian:
    """One splat. Arrays are copied and validated on construction."""

    mean: np.ndarray
    rotation: np.ndarray                 # unit quaternion (w, x, y, z)
    log_scale: np.ndarray
    opacity_logit: float = 0.0
    color_sh: np.ndarray = None          # (K, 3), K = (degree+1)^2
    intensity_logit: float = 0.0
    seg_bit_logits: np.ndarray = None

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64).reshape(3)
        rotation = np.asarray(self.rotation, dtype=np.float64).reshape(4)
        norm = np.linalg.norm(rotation)
        if norm == 0 or not np.isfinite(norm):
            raise ValueError("invalid quaternion")
        if abs(norm - 1.0) > QUAT_NORM_TOL:
            rotation = rotation / norm
        self.rotation = rotation
        self.log_scale = np.maximum(np.asarray(self.log_scale, dtype=np.float64).reshape(3), LOG_MIN_SCALE)
        self.opacity_logit = float(self.opacity_logit)
        if self.color_sh is None:
            self.color_sh = np.zeros((1, 3))
        self.color_sh = np.asarray(self.color_sh, dtype=np.float64).reshape(-1, 3)
        sh_degree_from_count(self.color_sh.shape[0])
        self.intensity_logit = float(self.intensity_logit)
        if self.seg_bit_logits is None:
            self.seg_bit_logits = np.zeros(SEG_BITS)
        self.seg_bit_logits = np.asarray(self.seg_bit_logits, dtype=np.float64).reshape(SEG_BITS)
        fields = np.concatenate([self.mean, self.log_scale, [self.opacity_logit, self.intensity_logit],
                                 self.color_sh.ravel(), self.seg_bit_logits])
        if not np.all(np.isfinite(fields)):
            raise ValueError("non-finite Gaussian parameters")

    @property
    def scale(self) -> np.ndarray:
        return np.exp(self.log_scale)

    @property
    def opacity(self) -> float:
        return float(sigmoid(self.opacity_logit))

    def rotation_matrix(self) -> np.ndarray:
        return quat_to_matrix(self.rotation)


def gaussian_normal(g: Gaussian) -> np.ndarray:
    """Unit normal: rotation column of the smallest scale axis.

    Ties pick the lowest axis index. The sign is whatever the stored rotation
    gives; renderers orient it per ray.
    """
    axis = int(np.argmin(np.exp(g.log_scale)))
    return g.rotation_matrix()[:, axis].copy()


def covariance(g: Gaussian) -> np.ndarray:
    """3x3 covariance R diag(s^2) R^T."""
    r = g.rotation_matrix()
    return (r * np.exp(g.log_scale) ** 2) @ r.T


class SplatScene:
    """Immutable-by-convention collection of Gaussians (struct of arrays)."""

    def __init__(self, means, rotations, log_scales, opacity_logits, color_sh,
                 intensity_logits=None, seg_bit_logits=None, label_names=None,
                 world_from_scene: Similarity | None = None):
        self.means = np.ascontiguousarray(means, dtype=np.float64).reshape(-1, 3)
        n = self.means.shape[0]
        rotations = np.ascontiguousarray(rotations, dtype=np.float64).reshape(n, 4)
        norms = np.linalg.norm(rotations, axis=1)
        if np.any(norms == 0) or not np.all(np.isfinite(norms)):
            raise ValueError("invalid quaternion in scene")
        off = np.abs(norms - 1.0) > QUAT_NORM_TOL
        if np.any(off):
            rotations = rotations.copy()
            rotations[off] /= norms[off, None]
        self.rotations = rotations
        self.log_scales = np.maximum(
            np.ascontiguousarray(log_scales, dtype=np.float64).reshape(n, 3), LOG_MIN_SCALE)
        self.opacity_logits = np.ascontiguousarray(opacity_logits, dtype=np.float64).reshape(n)
        self.color_sh = np.ascontiguousarray(color_sh, dtype=np.float64).reshape(n, -1, 3)
        sh_degree_from_count(self.color_sh.shape[1])
        self.intensity_logits = (np.zeros(n) if intensity_logits is None
                                 else np.ascontiguousarray(intensity_logits, dtype=np.float64).reshape(n))
        self.seg_bit_logits = (np.zeros((n, SEG_BITS)) if seg_bit_logits is None
                               else np.ascontiguousarray(seg_bit_logits, dtype=np.float64).reshape(n, SEG_BITS))
        self.label_names = dict(label_names) if label_names else None
        self.world_from_scene = world_from_scene or Similarity.identity()
        payload = [self.means, self.rotations, self.log_scales, self.opacity_logits,
                   self.color_sh, self.intensity_logits, self.seg_bit_logits]
        for arr in payload:
            if not np.all(np.isfinite(arr)):
                idx = int(np.flatnonzero(~np.all(np.isfinite(arr.reshape(n, -1)), axis=1))[0])
                raise ValueError(f"non-finite values at element {idx}")

    def __len__(self) -> int:
        return self.means.shape[0]

    @property
    def sh_degree(self) -> int:
        return sh_degree_from_count(self.color_sh.shape[1])

    def gaussian(self, i: int) -> Gaussian:
        return Gaussian(self.means[i], self.rotations[i], self.log_scales[i],
                        self.opacity_logits[i], self.color_sh[i],
                        self.intensity_logits[i], self.seg_bit_logits[i])

    @classmethod
    def from_gaussians(cls, gaussians, label_names=None) -> "SplatScene":
        gaussians = list(gaussians)
        if gaussians:
            k = max(g.color_sh.shape[0] for g in gaussians)
            sh = np.zeros((len(gaussians), k, 3))
            for i, g in enumerate(gaussians):
                sh[i, :g.color_sh.shape[0]] = g.color_sh
        else:
            sh = np.zeros((0, 1, 3))
        return cls(
            means=np.array([g.mean for g in gaussians]).reshape(-1, 3),
            rotations=np.array([g.rotation for g in gaussians]).reshape(-1, 4),
            log_scales=np.array([g.log_scale for g in gaussians]).reshape(-1, 3),
            opacity_logits=np.array([g.opacity_logit for g in gaussians]),
            color_sh=sh,
            intensity_logits=np.array([g.intensity_logit for g in gaussians]),
            seg_bit_logits=np.array([g.seg_bit_logits for g in gaussians]).reshape(-1, SEG_BITS),
            label_names=label_names,
        )

    # Vectorized derived quantities -------------------------------------

    def scales(self) -> np.ndarray:
        return np.exp(self.log_scales)

    def opacities(self) -> np.ndarray:
        return sigmoid(self.opacity_logits)

    def rotation_matrices(self) -> np.ndarray:
        return quat_to_matrix(self.rotations)

    def normals(self) -> np.ndarray:
        """(N, 3) per-splat normals (smallest-scale rotation column)."""
        rot = self.rotation_matrices()
        axes = np.argmin(self.scales(), axis=1)
        return rot[np.arange(len(self)), :, axes]

    def covariances(self) -> np.ndarray:
        rot = self.rotation_matrices()
        return np.einsum("nij,nj,nkj->nik", rot, self.scales() ** 2, rot)

    def world_means(self) -> np.ndarray:
        if self.world_from_scene.is_identity:
            return self.means
        return self.world_from_scene.apply(self.means)

    def in_world_frame(self) -> "SplatScene":
        """Bake world_from_scene into the stored parameters."""
        if self.world_from_scene.is_identity:
            return self
        sim = self.world_from_scene
        rot = sim.rotation
        new_rots = np.einsum("ij,njk->nik", rot, self.rotation_matrices())
        from .geometry import matrix_to_quat
        quats = np.stack([matrix_to_quat(m) for m in new_rots])
        return SplatScene(
            means=sim.apply(self.means),
            rotations=quats,
            log_scales=self.log_scales + np.log(sim.scale),
            opacity_logits=self.opacity_logits,
            color_sh=self.color_sh,
            intensity_logits=self.intensity_logits,
            seg_bit_logits=self.seg_bit_logits,
            label_names=self.label_names,
        )

    def extent(self):
        """(min, max) corner of the mean positions; zeros for empty scenes."""
        if len(self) == 0:
            return np.zeros(3), np.zeros(3)
        w = self.world_means()
        return w.min(axis=0), w.max(axis=0)
