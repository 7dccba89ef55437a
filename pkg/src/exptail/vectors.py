"""Sign-vector combinatorics, octant geometry, and log-space accumulation.

Everything here is a pure function of immutable inputs; no shared state.
Sign vectors are plain float arrays with entries in {-1.0, +1.0}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import DimensionCapError, ShapeMismatchError

#: Hard cap on dimensions that trigger 2^d enumerations.
DIMENSION_CAP = 16


def enumerate_sign_vectors(d: int, cap: int = DIMENSION_CAP) -> np.ndarray:
    """All 2^d sign vectors as a (2^d, d) array in binary-counting order.

    Bit j of the row index decides coordinate j (0 -> +1, 1 -> -1), least
    significant bit first; row 0 is therefore the all-ones vector.
    """
    if not isinstance(d, (int, np.integer)) or isinstance(d, bool):
        raise DimensionCapError(f"dimension must be an integer, got {d!r}")
    if not 1 <= d <= cap:
        raise DimensionCapError(f"dimension must be in [1, {cap}], got {d}")
    idx = np.arange(2**d, dtype=np.uint32)
    bits = (idx[:, None] >> np.arange(d, dtype=np.uint32)[None, :]) & 1
    return 1.0 - 2.0 * bits.astype(float)


def is_sign_vector(eps) -> bool:
    """True when every entry of ``eps`` is exactly +1 or -1."""
    eps = np.asarray(eps, dtype=float)
    return eps.ndim == 1 and eps.size > 0 and bool(np.all(np.abs(eps) == 1.0))


def coordinatewise_product(eps, x) -> np.ndarray:
    """Coordinatewise product eps (x) x; an involution in eps."""
    eps = np.asarray(eps, dtype=float)
    x = np.asarray(x, dtype=float)
    if eps.shape != x.shape[-eps.ndim:]:
        raise ShapeMismatchError(f"shapes {eps.shape} and {x.shape} do not align")
    return eps * x


def octant_contains(eps, x) -> bool:
    """Membership test for the closed octant Z(eps) = {x : eps_j x_j >= 0}."""
    eps = np.asarray(eps, dtype=float)
    x = np.asarray(x, dtype=float)
    if eps.shape != x.shape:
        raise ShapeMismatchError(f"shapes {eps.shape} and {x.shape} do not align")
    return bool(np.all(eps * x >= 0.0))


def octants_containing(x, cap: int = DIMENSION_CAP) -> np.ndarray:
    """Rows of all sign vectors whose octant contains ``x``.

    A point with k zero coordinates lies in exactly 2^k octants.
    """
    x = np.asarray(x, dtype=float)
    signs = enumerate_sign_vectors(x.shape[0], cap=cap)
    mask = np.all(signs * x[None, :] >= 0.0, axis=1)
    return signs[mask]


def log_mean_exp(values) -> float:
    """log((1/n) sum exp(v_i)), stabilized by shifting with the array max.

    Entries of -inf contribute zero mass; an all(-inf) array yields -inf.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("log_mean_exp of an empty array")
    m = float(np.max(v))
    if math.isinf(m):
        return m
    return m + math.log(float(np.mean(np.exp(v - m))))


def log_mean_exp_se(values) -> float:
    """Delta-method standard error of log_mean_exp over i.i.d. terms."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size < 2:
        return math.inf
    m = float(np.max(v))
    w = np.exp(v - m)
    mean = float(np.mean(w))
    sd = float(np.std(w, ddof=1))
    return sd / (math.sqrt(v.size) * mean)


@dataclass(frozen=True)
class LogValue:
    """A real number s * exp(m) stored as (m, s) to dodge overflow.

    ``sign`` is -1, 0, or +1; zero is represented as (-inf, 0).
    """

    log_magnitude: float
    sign: int = 1

    @classmethod
    def from_value(cls, x: float) -> "LogValue":
        if x == 0.0:
            return cls(-math.inf, 0)
        return cls(math.log(abs(x)), 1 if x > 0 else -1)

    def value(self) -> float:
        """Convert back to a float; overflows saturate to +-inf."""
        if self.sign == 0:
            return 0.0
        if self.log_magnitude > 709.0:
            return math.inf * self.sign
        return self.sign * math.exp(self.log_magnitude)

    def __mul__(self, other: "LogValue") -> "LogValue":
        s = self.sign * other.sign
        if s == 0:
            return LogValue(-math.inf, 0)
        return LogValue(self.log_magnitude + other.log_magnitude, s)

    def scaled(self, power: float) -> "LogValue":
        """|self|^power with the sign kept (sign must be nonnegative power use)."""
        if self.sign == 0:
            return self
        return LogValue(self.log_magnitude * power, self.sign)


def sphere_directions(d: int, count: int) -> np.ndarray:
    """Deterministic low-discrepancy directions on the unit sphere in R^d.

    A Kronecker lattice (generalized golden ratio) on [0,1)^d is pushed
    through the normal quantile and normalized, giving a reproducible,
    well-spread direction set without any RNG.
    """
    if d < 1 or count < 1:
        raise ValueError("d and count must be positive")
    if d == 1:
        out = np.ones((count, 1))
        out[1::2, 0] = -1.0
        return out
    # plastic-constant style alphas: x^(d+1) = x + 1
    g = 1.5
    for _ in range(60):
        g = (1.0 + g) ** (1.0 / (d + 1))
    alpha = g ** -(1.0 + np.arange(d))
    u = ((np.arange(1, count + 1)[:, None]) * alpha[None, :] + 0.5) % 1.0
    u = np.clip(u, 1e-12, 1.0 - 1e-12)
    z = ndtri(u)
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return z / norms
