"""Quaternion and rigid/similarity transform helpers shared across the package.

Quaternions are stored (w, x, y, z). All rotation matrices are world-from-local
unless stated otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def normalize(v: np.ndarray, axis: int = -1) -> np.ndarray:
    """Unit-normalize vectors along `axis`; zero vectors are left as zeros."""
    n = np.linalg.norm(v, axis=axis, keepdims=True)
    return np.divide(v, n, out=np.zeros_like(np.asarray(v, dtype=float)), where=n > 0)


def quat_normalize(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    n = np.linalg.norm(q, axis=-1, keepdims=True)
    if np.any(n == 0):
        raise ValueError("zero quaternion")
    return q / n


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    """Rotation matrix from quaternion(s) (w, x, y, z). Supports (..., 4) input."""
    q = quat_normalize(q)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    m = np.empty(q.shape[:-1] + (3, 3), dtype=np.float64)
    m[..., 0, 0] = 1 - 2 * (y * y + z * z)
    m[..., 0, 1] = 2 * (x * y - w * z)
    m[..., 0, 2] = 2 * (x * z + w * y)
    m[..., 1, 0] = 2 * (x * y + w * z)
    m[..., 1, 1] = 1 - 2 * (x * x + z * z)
    m[..., 1, 2] = 2 * (y * z - w * x)
    m[..., 2, 0] = 2 * (x * z - w * y)
    m[..., 2, 1] = 2 * (y * z + w * x)
    m[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return m


def matrix_to_quat(m: np.ndarray) -> np.ndarray:
    """Quaternion (w, x, y, z) from a proper rotation matrix, w >= 0."""
    m = np.asarray(m, dtype=np.float64)
    t = np.trace(m)
    if t > 0:
        s = np.sqrt(t + 1.0) * 2
        q = np.array([0.25 * s, (m[2, 1] - m[1, 2]) / s,
                      (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s])
    else:
        i = int(np.argmax(np.diag(m)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(max(m[i, i] - m[j, j] - m[k, k] + 1.0, 0.0)) * 2
        q = np.empty(4)
        q[0] = (m[k, j] - m[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (m[j, i] + m[i, j]) / s
        q[1 + k] = (m[k, i] + m[i, k]) / s
    if q[0] < 0:
        q = -q
    return quat_normalize(q)


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    bw, bx, by, bz = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ], axis=-1)


@dataclass(frozen=True)
class Pose:
    """Rigid world-from-local transform (camera, sensor or object pose)."""

    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    quaternion: np.ndarray = field(default_factory=lambda: np.array([1.0, 0, 0, 0]))

    def __post_init__(self):
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=np.float64).reshape(3))
        object.__setattr__(self, "quaternion", quat_normalize(np.asarray(self.quaternion, dtype=np.float64).reshape(4)))

    @property
    def rotation(self) -> np.ndarray:
        return quat_to_matrix(self.quaternion)

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points) @ self.rotation.T + self.translation

    def rotate(self, vectors: np.ndarray) -> np.ndarray:
        return np.asarray(vectors) @ self.rotation.T

    def compose(self, other: "Pose") -> "Pose":
        """self ∘ other: apply `other` first, then `self`."""
        return Pose(self.apply(other.translation), quat_multiply(self.quaternion, other.quaternion))

    def inverse(self) -> "Pose":
        r_inv = self.rotation.T
        q = self.quaternion * np.array([1.0, -1, -1, -1])
        return Pose(-r_inv @ self.translation, q)

    @classmethod
    def identity(cls) -> "Pose":
        return cls()

    @classmethod
    def from_json(cls, obj: dict) -> "Pose":
        t = obj.get("translation", obj.get("position", [0, 0, 0]))
        q = obj.get("quaternion", [1, 0, 0, 0])
        return cls(np.asarray(t, dtype=np.float64), np.asarray(q, dtype=np.float64))

    def to_json(self) -> dict:
        return {"translation": self.translation.tolist(), "quaternion": self.quaternion.tolist()}


@dataclass(frozen=True)
class Similarity:
    """Similarity transform p -> scale * R @ p + t."""

    rotation: np.ndarray
    translation: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=np.float64).reshape(3, 3))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=np.float64).reshape(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        return self.scale * (np.asarray(points) @ self.rotation.T) + self.translation

    def compose(self, other: "Similarity") -> "Similarity":
        return Similarity(self.rotation @ other.rotation,
                          self.scale * self.rotation @ other.translation + self.translation,
                          self.scale * other.scale)

    @property
    def is_identity(self) -> bool:
        return (self.scale == 1.0 and np.array_equal(self.rotation, np.eye(3))
                and np.array_equal(self.translation, np.zeros(3)))

    @classmethod
    def identity(cls) -> "Similarity":
        return cls(np.eye(3), np.zeros(3), 1.0)

    @classmethod
    def from_json(cls, obj: dict) -> "Similarity":
        if "quaternion" in obj:
            rot = quat_to_matrix(np.asarray(obj["quaternion"], dtype=np.float64))
        else:
            rot = np.asarray(obj["rotation"], dtype=np.float64)
        return cls(rot, np.asarray(obj.get("translation", [0, 0, 0]), dtype=np.float64),
                   float(obj.get("scale", 1.0)))

    def to_json(self) -> dict:
        return {
            "rotation": self.rotation.tolist(),
            "quaternion": matrix_to_quat(self.rotation).tolist(),
            "translation": self.translation.tolist(),
            "scale": float(self.scale),
        }
