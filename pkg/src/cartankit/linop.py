"""Complex-linear operators on a triple space, stored as dense coordinate matrices."""

from __future__ import annotations

import numpy as np

from .errors import SpaceMismatchError


class LinearOp:
    __slots__ = ("space", "matrix")

    def __init__(self, space, matrix):
        m = np.asarray(matrix, dtype=complex)
        if m.shape != (space.dim, space.dim):
            raise ValueError(f"operator matrix must be {space.dim}x{space.dim}, got {m.shape}")
        m = m.copy()
        m.setflags(write=False)
        self.space = space
        self.matrix = m

    @classmethod
    def identity(cls, space) -> "LinearOp":
        return cls(space, np.eye(space.dim))

    @classmethod
    def zero(cls, space) -> "LinearOp":
        return cls(space, np.zeros((space.dim, space.dim)))

    @classmethod
    def from_function(cls, space, fn) -> "LinearOp":
        """Tabulate a (complex-linear) map given as Element -> Element."""
        from .triple import Element

        cols = [fn(Element.from_coords(space, col)).coords for col in np.eye(space.dim)]
        return cls(space, np.array(cols).T)

    def _same(self, other):
        if other.space != self.space:
            raise SpaceMismatchError("operators act on different spaces")

    def apply(self, x):
        from .triple import Element

        if x.space != self.space:
            raise SpaceMismatchError("operator and element live in different spaces")
        return Element.from_coords(self.space, self.matrix @ x.coords)

    __call__ = apply

    def __matmul__(self, other):
        if isinstance(other, LinearOp):
            self._same(other)
            return LinearOp(self.space, self.matrix @ other.matrix)
        return self.apply(other)

    def __add__(self, other):
        self._same(other)
        return LinearOp(self.space, self.matrix + other.matrix)

    def __sub__(self, other):
        self._same(other)
        return LinearOp(self.space, self.matrix - other.matrix)

    def __neg__(self):
        return LinearOp(self.space, -self.matrix)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return LinearOp(self.space, scalar * self.matrix)

    __rmul__ = __mul__

    @property
    def H(self) -> "LinearOp":
        return LinearOp(self.space, self.matrix.conj().T)

    def euclidean_norm(self) -> float:
        """Spectral norm w.r.t. the Frobenius structure (not the JB*-norm)."""
        return float(np.linalg.norm(self.matrix, 2))

    def distance(self, other) -> float:
        self._same(other)
        return float(np.linalg.norm(self.matrix - other.matrix, 2))

    def inverse(self) -> "LinearOp":
        return LinearOp(self.space, np.linalg.inv(self.matrix))

    def __repr__(self):
        return f"LinearOp({self.space}, dim={self.space.dim})"
