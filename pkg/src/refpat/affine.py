"""Affine maps between parametric spaces of dimension 0 to 3.

An :class:`AffineTransform` maps ``x`` (length ``cols``) to ``A @ x + B``
(length ``rows``). Zero-dimensional spaces are legal: a map from a point
has an empty matrix and only a translation, a map onto a point has no
output at all.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractError

TOL = 1e-10


@dataclass(frozen=True, eq=False)
class AffineTransform:
    """Immutable affine map ``x -> matrix @ x + translation``.

    Parameters
    ----------
    matrix : array_like, shape (rows, cols)
    translation : array_like, shape (rows,)
    """

    matrix: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        a = np.array(self.matrix, dtype=float)
        b = np.array(self.translation, dtype=float).reshape(-1)
        if a.ndim != 2:
            a = a.reshape(b.size, -1) if a.size else np.zeros((b.size, 0))
        if a.shape[0] != b.size:
            raise ContractError(
                f"matrix has {a.shape[0]} rows but translation has {b.size} entries")
        if a.shape[0] > 3 or a.shape[1] > 3:
            raise ContractError(f"dimensions above 3 are not supported: {a.shape}")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "matrix", a)
        object.__setattr__(self, "translation", b)

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]

    @classmethod
    def identity(cls, n: int) -> "AffineTransform":
        return cls(np.eye(n), np.zeros(n))

    @classmethod
    def constant(cls, value, cols: int = 0) -> "AffineTransform":
        value = np.asarray(value, dtype=float).reshape(-1)
        return cls(np.zeros((value.size, cols)), value)

    def __call__(self, x):
        return apply(self, x)

    def __matmul__(self, inner: "AffineTransform") -> "AffineTransform":
        return compose(self, inner)

    def is_identity(self, tol: float = TOL) -> bool:
        return (self.rows == self.cols
                and np.allclose(self.matrix, np.eye(self.rows), rtol=0, atol=tol)
                and np.allclose(self.translation, 0.0, rtol=0, atol=tol))

    def is_projection(self, tol: float = TOL) -> bool:
        """True if applying the map twice equals applying it once."""
        if self.rows != self.cols:
            return False
        return allclose(compose(self, self), self, tol)

    def __repr__(self):
        return (f"AffineTransform({self.rows}x{self.cols}, "
                f"A={self.matrix.tolist()}, B={self.translation.tolist()})")


def apply(t: AffineTransform, x) -> np.ndarray:
    """Evaluate ``t`` at a point, or at each row of a 2-D array of points."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 2:
        if x.shape[1] != t.cols:
            raise ContractError(f"expected points of length {t.cols}, got {x.shape[1]}")
        return x @ t.matrix.T + t.translation
    x = x.reshape(-1)
    if x.size != t.cols:
        raise ContractError(f"expected a vector of length {t.cols}, got {x.size}")
    return t.matrix @ x + t.translation


def compose(outer: AffineTransform, inner: AffineTransform) -> AffineTransform:
    """Return the map that applies ``inner`` first, then ``outer``."""
    if outer.cols != inner.rows:
        raise ContractError(
            f"cannot compose {outer.rows}x{outer.cols} after {inner.rows}x{inner.cols}")
    return AffineTransform(outer.matrix @ inner.matrix,
                           outer.matrix @ inner.translation + outer.translation)


def allclose(a: AffineTransform, b: AffineTransform, tol: float = TOL) -> bool:
    return (a.matrix.shape == b.matrix.shape
            and np.allclose(a.matrix, b.matrix, rtol=0, atol=tol)
            and np.allclose(a.translation, b.translation, rtol=0, atol=tol))


def fit_l2(samples: Iterable[tuple[Sequence[float], Sequence[float]]]) -> AffineTransform:
    """Least-squares affine map through ``(source, target)`` sample pairs.

    Minimises ``sum ||y_i - (A x_i + B)||^2``. When the sources span a
    lower-dimensional affine subspace the minimum-norm solution is
    returned, so directions the samples do not probe map with zero slope.

    Raises
    ------
    ContractError
        If there are no samples or their dimensions disagree.
    """
    samples = list(samples)
    if not samples:
        raise ContractError("fit_l2 needs at least one sample")
    xs = [np.asarray(x, dtype=float).reshape(-1) for x, _ in samples]
    ys = [np.asarray(y, dtype=float).reshape(-1) for _, y in samples]
    n, m = xs[0].size, ys[0].size
    if any(x.size != n for x in xs) or any(y.size != m for y in ys):
        raise ContractError("fit_l2 samples have inconsistent dimensions")
    x = np.array(xs).reshape(len(xs), n)
    y = np.array(ys).reshape(len(ys), m)
    # centring decouples B from A and keeps lstsq well conditioned
    xc = x.mean(axis=0)
    yc = y.mean(axis=0)
    if n == 0 or m == 0:
        return AffineTransform(np.zeros((m, n)), yc)
    sol, *_ = np.linalg.lstsq(x - xc, y - yc, rcond=1e-12)
    a = sol.T
    return AffineTransform(a, yc - a @ xc)


def fit_residual(t: AffineTransform, samples) -> float:
    """Largest pointwise error of ``t`` over ``samples``."""
    worst = 0.0
    for x, y in samples:
        worst = max(worst, float(np.max(np.abs(apply(t, x) - np.asarray(y, dtype=float)),
                                        initial=0.0)))
    return worst
