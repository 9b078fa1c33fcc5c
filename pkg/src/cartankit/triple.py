"""JB*-triple spaces built from Cartan factors of types I-IV.

A :class:`TripleSpace` is a finite l-infinity sum of factors.  Elements keep
one dense block per factor: an ``s x r`` matrix for rectangular factors, an
``r x r`` matrix for symmetric and antisymmetric factors, and a length ``n``
vector for spin factors.  Linear operators act on *coordinates*, which are
taken with respect to a Frobenius-orthonormal basis of each factor, so the
adjoint of an operator is its conjugate transpose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import SpaceMismatchError, UnsupportedOperationError, ValidationError
from .linop import LinearOp

KINDS = ("rect", "sym", "antisym", "spin")
_ALIASES = {
    "rect": "rect", "rectmatrix": "rect", "i": "rect",
    "sym": "sym", "symmatrix": "sym", "iii": "sym",
    "antisym": "antisym", "antisymmatrix": "antisym", "ii": "antisym",
    "spin": "spin", "iv": "spin",
}


@dataclass(frozen=True)
class FactorDesc:
    """One Cartan factor.  ``dims`` is ``(s, r)`` for rect, ``(r,)`` otherwise."""

    kind: str
    dims: tuple[int, ...]

    def __post_init__(self):
        kind = _ALIASES.get(str(self.kind).lower())
        if kind is None:
            raise ValidationError(f"unknown factor kind {self.kind!r}")
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "dims", dims)
        want = 2 if kind == "rect" else 1
        if len(dims) != want or any(d < 1 for d in dims):
            raise ValidationError(f"bad dims {dims} for {kind}")
        if kind == "spin" and dims[0] < 3:
            raise ValidationError("spin factor needs n >= 3")
        if kind == "antisym" and dims[0] < 4:
            raise ValidationError("antisymmetric factor needs r >= 4")

    @classmethod
    def rect(cls, s: int, r: int) -> "FactorDesc":
        return cls("rect", (s, r))

    @classmethod
    def disc(cls) -> "FactorDesc":
        return cls("rect", (1, 1))

    @classmethod
    def sym(cls, r: int) -> "FactorDesc":
        return cls("sym", (r,))

    @classmethod
    def antisym(cls, r: int) -> "FactorDesc":
        return cls("antisym", (r,))

    @classmethod
    def spin(cls, n: int) -> "FactorDesc":
        return cls("spin", (n,))

    @property
    def is_matrix(self) -> bool:
        return self.kind != "spin"

    @property
    def shape(self) -> tuple[int, ...]:
        if self.kind == "rect":
            return self.dims
        if self.kind == "spin":
            return self.dims
        return (self.dims[0], self.dims[0])

    @property
    def dim(self) -> int:
        if self.kind == "rect":
            return self.dims[0] * self.dims[1]
        r = self.dims[0]
        if self.kind == "sym":
            return r * (r + 1) // 2
        if self.kind == "antisym":
            return r * (r - 1) // 2
        return r

    @property
    def rank(self) -> int:
        if self.kind == "rect":
            return min(self.dims)
        r = self.dims[0]
        if self.kind == "sym":
            return r
        if self.kind == "antisym":
            return r // 2
        return 2

    @cached_property
    def basis(self) -> np.ndarray:
        """Columns are the flattened basis blocks (orthonormal, Frobenius)."""
        n = int(np.prod(self.shape))
        if self.kind in ("rect", "spin"):
            return np.eye(n, dtype=complex)
        r = self.dims[0]
        cols = []
        if self.kind == "sym":
            for i in range(r):
                for j in range(i, r):
                    m = np.zeros((r, r), dtype=complex)
                    if i == j:
                        m[i, i] = 1.0
                    else:
                        m[i, j] = m[j, i] = 1 / math.sqrt(2)
                    cols.append(m.ravel())
        else:
            for i in range(r):
                for j in range(i + 1, r):
                    m = np.zeros((r, r), dtype=complex)
                    m[i, j] = 1 / math.sqrt(2)
                    m[j, i] = -1 / math.sqrt(2)
                    cols.append(m.ravel())
        b = np.array(cols).T
        b.setflags(write=False)
        return b

    def to_dict(self) -> dict:
        return {"kind": self.kind, "dims": list(self.dims)}

    def __str__(self):
        if self.kind == "rect":
            return f"rect:{self.dims[0]}x{self.dims[1]}"
        return f"{self.kind}:{self.dims[0]}"

    @classmethod
    def parse(cls, text: str) -> "FactorDesc":
        text = text.strip().lower()
        if text == "disc":
            return cls.disc()
        kind, _, rest = text.partition(":")
        if not rest:
            raise ValidationError(f"cannot parse factor {text!r}")
        return cls(kind, tuple(int(p) for p in rest.split("x")))


@dataclass(frozen=True)
class TripleSpace:
    """Finite l-infinity sum of Cartan factors."""

    factors: tuple[FactorDesc, ...]

    def __post_init__(self):
        facs = tuple(self.factors)
        if not facs:
            raise ValidationError("a triple space needs at least one factor")
        object.__setattr__(self, "factors", facs)

    @classmethod
    def of(cls, *factors: FactorDesc) -> "TripleSpace":
        return cls(tuple(factors))

    @classmethod
    def parse(cls, text: str) -> "TripleSpace":
        """Parse strings like ``"disc+disc"`` or ``"rect:3x2+spin:5"``."""
        return cls(tuple(FactorDesc.parse(p) for p in text.split("+")))

    @classmethod
    def from_dict(cls, data: dict) -> "TripleSpace":
        return cls(tuple(FactorDesc(f["kind"], tuple(f["dims"])) for f in data["factors"]))

    def to_dict(self) -> dict:
        return {"factors": [f.to_dict() for f in self.factors]}

    def __str__(self):
        return "+".join(str(f) for f in self.factors)

    @property
    def dim(self) -> int:
        return sum(f.dim for f in self.factors)

    total_dim = dim

    @property
    def rank(self) -> int:
        return sum(f.rank for f in self.factors)

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        out = [0]
        for f in self.factors:
            out.append(out[-1] + f.dim)
        return tuple(out)

    def summand(self, index: int) -> "TripleSpace":
        return TripleSpace((self.factors[self._check_index(index)],))

    def _check_index(self, index: int) -> int:
        if not 0 <= index < len(self.factors):
            raise IndexError(f"summand index {index} out of range for {self}")
        return index

    def zero(self) -> "Element":
        return Element(self, tuple(np.zeros(f.shape, dtype=complex) for f in self.factors))

    def basis_element(self, k: int) -> "Element":
        c = np.zeros(self.dim, dtype=complex)
        c[k] = 1.0
        return Element.from_coords(self, c)


def _clean_block(f: FactorDesc, block) -> np.ndarray:
    b = np.array(block, dtype=complex)
    if b.shape != f.shape:
        if f.kind == "rect" and f.dims == (1, 1) and b.size == 1:
            b = b.reshape(1, 1)
        else:
            raise ValidationError(f"block of shape {b.shape} does not fit {f}")
    if f.kind == "sym":
        b = (b + b.T) / 2
    elif f.kind == "antisym":
        b = (b - b.T) / 2
    b.setflags(write=False)
    return b


class Element:
    """A point of a triple space.  Immutable."""

    __slots__ = ("space", "blocks", "_coords")

    def __init__(self, space: TripleSpace, blocks):
        blocks = tuple(blocks)
        if len(blocks) != len(space.factors):
            raise ValidationError("number of blocks does not match number of factors")
        self.space = space
        self.blocks = tuple(_clean_block(f, b) for f, b in zip(space.factors, blocks))
        self._coords = None

    @classmethod
    def from_coords(cls, space: TripleSpace, coords) -> "Element":
        coords = np.asarray(coords, dtype=complex).reshape(-1)
        if coords.size != space.dim:
            raise ValidationError(f"expected {space.dim} coordinates, got {coords.size}")
        blocks = []
        for f, lo, hi in zip(space.factors, space.offsets, space.offsets[1:]):
            blocks.append((f.basis @ coords[lo:hi]).reshape(f.shape))
        return cls(space, blocks)

    @classmethod
    def scalar(cls, value: complex) -> "Element":
        """Point of the unit disc (1 x 1 rectangular factor)."""
        return cls(TripleSpace.of(FactorDesc.disc()), [np.array([[value]])])

    @property
    def coords(self) -> np.ndarray:
        if self._coords is None:
            parts = [f.basis.conj().T @ b.ravel() for f, b in zip(self.space.factors, self.blocks)]
            c = np.concatenate(parts)
            c.setflags(write=False)
            self._coords = c
        return self._coords

    def _check(self, other: "Element"):
        if not isinstance(other, Element):
            return NotImplemented
        if other.space != self.space:
            raise SpaceMismatchError(f"{self.space} vs {other.space}")
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Element(self.space, [a + b for a, b in zip(self.blocks, other.blocks)])

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Element(self.space, [a - b for a, b in zip(self.blocks, other.blocks)])

    def __neg__(self):
        return Element(self.space, [-a for a in self.blocks])

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return Element(self.space, [scalar * a for a in self.blocks])

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def inner(self, other: "Element") -> complex:
        """Frobenius inner product, linear in ``self``."""
        self._check(other)
        return complex(np.vdot(other.coords, self.coords))

    def euclidean_norm(self) -> float:
        return float(np.linalg.norm(self.coords))

    def allclose(self, other: "Element", atol: float = 1e-10) -> bool:
        return (self - other).euclidean_norm() <= atol

    def to_dict(self) -> dict:
        c = self.coords
        data = np.empty(2 * c.size)
        data[0::2] = c.real
        data[1::2] = c.imag
        return {"space": self.space.to_dict(), "data": data.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Element":
        space = TripleSpace.from_dict(data["space"])
        raw = np.asarray(data["data"], dtype=float)
        if raw.size != 2 * space.dim:
            raise ValidationError("element data length does not match its space")
        return cls.from_coords(space, raw[0::2] + 1j * raw[1::2])

    def __repr__(self):
        return f"Element({self.space}, {np.array2string(self.coords, precision=4)})"


def _spin_inner(x, y):
    return np.vdot(y, x)


def _factor_triple(kind: str, a, b, c):
    if kind == "spin":
        return 0.5 * (_spin_inner(a, b) * c + _spin_inner(c, b) * a - np.dot(a, c) * b.conj())
    bh = b.conj().T
    return 0.5 * (a @ bh @ c + c @ bh @ a)


def triple_product(a: Element, b: Element, c: Element) -> Element:
    """The Jordan triple product {a, b, c}."""
    if a.space != b.space or a.space != c.space:
        raise SpaceMismatchError("triple product operands live in different spaces")
    return Element(a.space, [
        _factor_triple(f.kind, x, y, z)
        for f, x, y, z in zip(a.space.factors, a.blocks, b.blocks, c.blocks)
    ])


def _factor_box_matrix(f: FactorDesc, a, b) -> np.ndarray:
    if f.kind == "spin":
        n = f.dims[0]
        return 0.5 * (_spin_inner(a, b) * np.eye(n) + np.outer(a, b.conj()) - np.outer(b.conj(), a))
    s, r = a.shape
    full = 0.5 * (np.kron(a @ b.conj().T, np.eye(r)) + np.kron(np.eye(s), (b.conj().T @ a).T))
    if f.kind == "rect":
        return full
    p = f.basis
    return p.conj().T @ full @ p


def _block_diag(blocks) -> np.ndarray:
    n = sum(b.shape[0] for b in blocks)
    out = np.zeros((n, n), dtype=complex)
    i = 0
    for b in blocks:
        k = b.shape[0]
        out[i:i + k, i:i + k] = b
        i += k
    return out


def box_operator(a: Element, b: Element) -> LinearOp:
    """Matrix of x -> {a, b, x} in coordinates."""
    if a.space != b.space:
        raise SpaceMismatchError("box operator operands live in different spaces")
    mats = [_factor_box_matrix(f, x, y) for f, x, y in zip(a.space.factors, a.blocks, b.blocks)]
    return LinearOp(a.space, _block_diag(mats))


def _spin_norm(z) -> float:
    # Rotate so that z^T z is real; then z = x + iy with x orthogonal to y and
    # ||z|| = (|x| + |y|) / sqrt(2).  Equal to the usual
    # sqrt((<z,z> + sqrt(<z,z>^2 - |z^T z|^2)) / 2) without its cancellation.
    q = np.dot(z, z)
    w = z * np.exp(-0.5j * np.angle(q)) if q != 0 else z
    return float((np.linalg.norm(w.real) + np.linalg.norm(w.imag)) / math.sqrt(2))


def factor_norm(f: FactorDesc, block) -> float:
    if f.kind == "spin":
        return _spin_norm(block)
    if block.size == 1:
        return float(abs(block.flat[0]))
    return float(np.linalg.svd(block, compute_uv=False)[0])


def jb_norm(z: Element) -> float:
    """The JB*-norm: operator norm on matrix factors, spin norm, max over summands."""
    return max(factor_norm(f, b) for f, b in zip(z.space.factors, z.blocks))


def summand_norms(z: Element) -> list[float]:
    return [factor_norm(f, b) for f, b in zip(z.space.factors, z.blocks)]


def spin_conjugate(z: Element) -> Element:
    """Componentwise conjugation on spin summands."""
    if any(f.kind != "spin" for f in z.space.factors):
        raise UnsupportedOperationError("spin conjugation needs every summand to be a spin factor")
    return Element(z.space, [b.conj() for b in z.blocks])


def random_element(space: TripleSpace, seed=None, radius: float = 1.0, *, exact_norm: bool = False) -> Element:
    """Random element with ``jb_norm <= radius``.

    ``seed`` may be an int or a ``numpy.random.Generator``.  With
    ``exact_norm`` the result is scaled to norm ``radius`` exactly.
    """
    if radius < 0:
        raise ValidationError("radius must be non-negative")
    rng = np.random.default_rng(seed)
    blocks = [rng.standard_normal(f.shape) + 1j * rng.standard_normal(f.shape) for f in space.factors]
    # vary the per-summand scale so that l-infinity sums are not always balanced
    if len(blocks) > 1:
        blocks = [b * rng.uniform(0.2, 1.0) for b in blocks]
    z = Element(space, blocks)
    n = jb_norm(z)
    if n == 0.0 or radius == 0.0:
        return space.zero()
    target = radius if exact_norm else radius * rng.uniform(0.0, 1.0)
    z = z * (target / n)
    # guard the ulp
    n = jb_norm(z)
    if n > radius:
        z = z * (radius / n)
    return z


def inject_summand(space: TripleSpace, index: int, x: Element) -> Element:
    """Embed an element of summand ``index`` into the full sum."""
    index = space._check_index(index)
    if x.space != space.summand(index):
        raise SpaceMismatchError("element does not belong to the requested summand")
    blocks = [np.zeros(f.shape, dtype=complex) for f in space.factors]
    blocks[index] = x.blocks[0]
    return Element(space, blocks)


def project_summand(z: Element, index: int) -> Element:
    index = z.space._check_index(index)
    return Element(z.space.summand(index), [z.blocks[index]])


def split_summands(z: Element) -> list[Element]:
    return [project_summand(z, i) for i in range(len(z.space.factors))]


def join_summands(space: TripleSpace, parts) -> Element:
    parts = list(parts)
    if len(parts) != len(space.factors):
        raise ValidationError("wrong number of summands")
    for i, p in enumerate(parts):
        if p.space != space.summand(i):
            raise SpaceMismatchError(f"summand {i} has the wrong space")
    return Element(space, [p.blocks[0] for p in parts])
