"""Quaternion arithmetic on arrays ``(w, x, y, z)`` with ``i * j = k``."""

import numpy as np

from .errors import NotUnitQuaternion

ONE = np.array([1.0, 0.0, 0.0, 0.0])
I = np.array([0.0, 1.0, 0.0, 0.0])
J = np.array([0.0, 0.0, 1.0, 0.0])
K = np.array([0.0, 0.0, 0.0, 1.0])
UNITS = (I, J, K)


def mul(p, q):
    """Hamilton product."""
    a1, b1, c1, d1 = p
    a2, b2, c2, d2 = q
    return np.array([
        a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
        a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
        a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
        a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
    ])


def conj(q):
    return np.array([q[0], -q[1], -q[2], -q[3]])


def from_vector(v):
    """Pure imaginary quaternion with imaginary part ``v``."""
    return np.array([0.0, v[0], v[1], v[2]])


def sandwich(q, x):
    """``q x q̄`` for quaternions ``q`` and ``x``."""
    return mul(mul(q, x), conj(q))


def check_unit(q, tol=1e-9, name="quaternion"):
    q = np.asarray(q, dtype=float)
    if q.shape != (4,):
        raise ValueError(f"{name} must have four components")
    if abs(np.linalg.norm(q) - 1.0) > tol:
        raise NotUnitQuaternion(f"{name} has norm {np.linalg.norm(q)}")
    return q


def normalize(q):
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q)


def exp_imag(v):
    """``exp`` of the pure imaginary quaternion with imaginary part ``v``."""
    v = np.asarray(v, dtype=float)
    angle = np.linalg.norm(v)
    if angle == 0.0:
        return ONE.copy()
    return np.concatenate(([np.cos(angle)], np.sin(angle) * v / angle))


def rotation_matrix(q):
    """Matrix of ``x ↦ q x q̄`` on imaginary quaternions."""
    return np.column_stack([sandwich(q, u)[1:] for u in UNITS])


def random_unit(rng, size=None):
    """Uniformly distributed unit quaternions."""
    shape = (4,) if size is None else (size, 4)
    x = rng.standard_normal(shape)
    return x / np.linalg.norm(x, axis=-1, keepdims=True)
