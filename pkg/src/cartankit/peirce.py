"""Tripotents, spectral decompositions and (joint) Peirce projections."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DecompositionError, SpaceMismatchError, ValidationError
from .linop import LinearOp
from .triple import Element, FactorDesc, TripleSpace, box_operator, jb_norm, triple_product

TRIPOTENT_TOL = 1e-9
ORTHO_TOL = 1e-8
CLUSTER_TOL = 1e-8
MINIMAL_GAP = 1e6


def is_tripotent(e: Element, tol: float = TRIPOTENT_TOL) -> bool:
    return (triple_product(e, e, e) - e).euclidean_norm() <= tol


def are_orthogonal(a: Element, b: Element, tol: float = ORTHO_TOL) -> bool:
    return box_operator(a, b).euclidean_norm() <= tol


def quadratic_rank(e: Element, gap: float = MINIMAL_GAP) -> int:
    """Complex dimension of {e, V, e}.

    v -> {e, v, e} is conjugate-linear, so its rank is read off the real
    matrix acting on (Re v, Im v).
    """
    space = e.space
    cols = []
    for k in range(space.dim):
        for unit in (1.0, 1j):
            c = np.zeros(space.dim, dtype=complex)
            c[k] = unit
            w = triple_product(e, Element.from_coords(space, c), e).coords
            cols.append(np.concatenate([w.real, w.imag]))
    s = np.linalg.svd(np.array(cols).T, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > s[0] / gap)) // 2


def is_minimal(e: Element, gap: float = MINIMAL_GAP) -> bool:
    return quadratic_rank(e, gap) == 1


@dataclass(frozen=True)
class Tripotent:
    e: Element
    minimal: bool = False

    @classmethod
    def check(cls, e: Element, tol: float = TRIPOTENT_TOL) -> "Tripotent":
        if not is_tripotent(e, tol):
            raise ValidationError("element is not a tripotent")
        return cls(e, e.euclidean_norm() > 0 and is_minimal(e))


@dataclass(frozen=True)
class SpectralDecomp:
    """``source = sum(alpha_i * e_i)`` with mutually orthogonal tripotents."""

    pairs: tuple[tuple[float, Element], ...]
    source: Element

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([a for a, _ in self.pairs])

    @property
    def tripotents(self) -> list[Element]:
        return [e for _, e in self.pairs]

    def __len__(self):
        return len(self.pairs)

    def reconstruct(self) -> Element:
        out = self.source.space.zero()
        for a, e in self.pairs:
            out = out + a * e
        return out

    def frame(self) -> "Frame":
        return Frame(tuple(self.tripotents))

    def to_dict(self) -> dict:
        return {
            "source": self.source.to_dict(),
            "pairs": [{"alpha": float(a), "e": e.to_dict()} for a, e in self.pairs],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SpectralDecomp":
        pairs = tuple((float(p["alpha"]), Element.from_dict(p["e"])) for p in data["pairs"])
        return cls(pairs, Element.from_dict(data["source"]))

    def validate(self, tol: float = 1e-8) -> list[str]:
        """Return a list of violated invariants (empty when valid)."""
        problems = []
        if (self.reconstruct() - self.source).euclidean_norm() > tol * max(1.0, jb_norm(self.source)):
            problems.append("reconstruction")
        es = self.tripotents
        for i, j in itertools.combinations(range(len(es)), 2):
            if not are_orthogonal(es[i], es[j], tol):
                problems.append(f"orthogonality {i},{j}")
        for i, e in enumerate(es):
            if not is_tripotent(e, max(tol, TRIPOTENT_TOL)):
                problems.append(f"tripotent {i}")
        if es and abs(max(self.coefficients) - jb_norm(self.source)) > tol:
            problems.append("leading coefficient")
        return problems


@dataclass(frozen=True)
class Frame:
    """Mutually orthogonal (minimal) tripotents."""

    tripotents: tuple[Element, ...]
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "tripotents", tuple(self.tripotents))
        spaces = {e.space for e in self.tripotents}
        if len(spaces) > 1:
            raise SpaceMismatchError("frame tripotents live in different spaces")

    def __len__(self):
        return len(self.tripotents)

    def __getitem__(self, i):
        return self.tripotents[i]

    @property
    def space(self) -> TripleSpace:
        return self.tripotents[0].space

    def validate(self, tol: float = ORTHO_TOL, require_minimal: bool = True) -> None:
        for i, e in enumerate(self.tripotents):
            if not is_tripotent(e):
                raise ValidationError(f"frame member {i} is not a tripotent")
            if require_minimal and not is_minimal(e):
                raise ValidationError(f"frame member {i} is not minimal")
        for i, j in itertools.combinations(range(len(self)), 2):
            if not are_orthogonal(self.tripotents[i], self.tripotents[j], tol):
                raise ValidationError(f"frame members {i} and {j} are not orthogonal")

    def sum(self) -> Element:
        out = self.space.zero()
        for e in self.tripotents:
            out = out + e
        return out

    def combination(self, coeffs) -> Element:
        out = self.space.zero()
        for c, e in zip(coeffs, self.tripotents):
            out = out + c * e
        return out


# -- spectral decomposition -------------------------------------------------


def _drop_tol(norm: float) -> float:
    return 1e-13 * max(1.0, norm)


def _rect_pairs(block):
    u, s, vh = np.linalg.svd(block)
    return [(float(s[i]), np.outer(u[:, i], vh[i])) for i in range(s.size)]


def _takagi(block):
    """Takagi vectors of a complex symmetric matrix: block = W diag(s) W^T."""
    b, c = block.real, block.imag
    m = np.block([[b, c], [c, -b]])
    vals, vecs = np.linalg.eigh(m)
    n = block.shape[0]
    order = np.argsort(vals)[::-1][:n]
    s = vals[order]
    w = vecs[:n, order] + 1j * vecs[n:, order]
    return np.clip(s, 0.0, None), w


def _sym_pairs(block):
    s, w = _takagi(block)
    return [(float(s[i]), np.outer(w[:, i], w[:, i])) for i in range(s.size)]


def _antisym_pairs(block, tol):
    """Split an antisymmetric matrix into minimal tripotents u v^T - v u^T."""
    h = block @ block.conj().T
    vals, vecs = np.linalg.eigh((h + h.conj().T) / 2)
    vals = np.clip(vals[::-1], 0.0, None)
    vecs = vecs[:, ::-1]
    pairs = []
    scale = max(vals[0], 1e-300) if vals.size else 1.0
    i = 0
    while i < vals.size and vals[i] > tol ** 2:
        j = i
        while j < vals.size and abs(vals[j] - vals[i]) <= CLUSTER_TOL * scale:
            j += 1
        basis = vecs[:, i:j]
        proj = basis @ basis.conj().T
        sigma = math.sqrt(float(np.mean(vals[i:j])))
        e = proj @ block / sigma
        e = (e - e.T) / 2
        # peel off minimal pieces; each consumes two basis directions
        used = np.zeros((block.shape[0], 0), dtype=complex)
        for _ in range((j - i) // 2):
            rest = basis - used @ (used.conj().T @ basis)
            k = int(np.argmax(np.linalg.norm(rest, axis=0)))
            u = rest[:, k] / np.linalg.norm(rest[:, k])
            v = -e @ u.conj()
            v = v / np.linalg.norm(v)
            f = np.outer(u, v) - np.outer(v, u)
            # own coefficient: clustered values are only equal up to CLUSTER_TOL
            alpha = float(np.vdot(f, block).real / np.vdot(f, f).real)
            pairs.append((alpha, f))
            used = np.column_stack([used, u, v])
            used, _ = np.linalg.qr(used)
        i = j
    return pairs


def _spin_pairs(z):
    """Closed form z = alpha1 * e1 + alpha2 * e2 with e2 a phase times e1*."""
    n = z.size
    q = np.dot(z, z)
    phase = np.exp(0.5j * np.angle(q)) if abs(q) > 0 else 1.0
    zp = z / phase
    x, y = zp.real, zp.imag
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx < ny:
        # keep |x| >= |y|: multiply by -i (phase shift by pi/2)
        phase = phase * 1j
        zp = z / phase
        x, y = zp.real, zp.imag
        nx, ny = ny, nx
    if nx == 0.0:
        return []
    xh = x / nx
    if ny > 1e-300:
        yh = y - np.dot(y, xh) * xh
        nyh = np.linalg.norm(yh)
        yh = yh / nyh if nyh > 0 else None
    else:
        yh = None
    if yh is None:
        # any real unit vector orthogonal to x
        k = int(np.argmin(np.abs(xh)))
        t = np.zeros(n)
        t[k] = 1.0
        yh = t - np.dot(t, xh) * xh
        yh /= np.linalg.norm(yh)
    d = (xh + 1j * yh) / math.sqrt(2)
    a1 = (nx + ny) / math.sqrt(2)
    a2 = (nx - ny) / math.sqrt(2)
    return [(float(a1), phase * d), (float(a2), phase * d.conj())]


def spin_frame(z) -> tuple[np.ndarray, np.ndarray, float, float]:
    """Full spin frame (e1, e2, alpha1, alpha2) even when alpha2 is zero."""
    pairs = _spin_pairs(np.asarray(z, dtype=complex))
    if not pairs:
        n = np.asarray(z).size
        d = np.zeros(n, dtype=complex)
        d[0], d[1] = 1 / math.sqrt(2), 1j / math.sqrt(2)
        return d, d.conj(), 0.0, 0.0
    (a1, e1), (a2, e2) = pairs
    return e1, e2, a1, a2


def _factor_pairs(f: FactorDesc, block, tol):
    if f.kind == "rect":
        pairs = _rect_pairs(block)
    elif f.kind == "sym":
        pairs = _sym_pairs(block)
    elif f.kind == "antisym":
        pairs = _antisym_pairs(block, tol)
    else:
        pairs = _spin_pairs(block)
    return [(a, e) for a, e in pairs if a > tol]


def spectral_decompose(z: Element, order: str = "coefficient") -> SpectralDecomp:
    """Decompose ``z`` into positive multiples of orthogonal minimal tripotents.

    ``order="coefficient"`` sorts by decreasing coefficient (ties keep the
    summand order); ``order="factor"`` keeps tripotents grouped by summand.
    """
    if not all(np.all(np.isfinite(b)) for b in z.blocks):
        raise DecompositionError("non-finite entries in element")
    tol = _drop_tol(jb_norm(z))
    pairs = []
    for idx, (f, block) in enumerate(zip(z.space.factors, z.blocks)):
        for a, e in _factor_pairs(f, block, tol):
            blocks = [np.zeros(g.shape, dtype=complex) for g in z.space.factors]
            blocks[idx] = e
            pairs.append((idx, a, Element(z.space, blocks)))
    if order == "coefficient":
        pairs.sort(key=lambda t: -t[1])
    elif order != "factor":
        raise ValueError(f"unknown order {order!r}")
    return SpectralDecomp(tuple((a, e) for _, a, e in pairs), z)


def coarse_spectral_decompose(z: Element, cluster_tol: float = CLUSTER_TOL) -> SpectralDecomp:
    """Factor-agnostic decomposition from the eigenspaces of z□z.

    z only has components in the eigenspaces with eigenvalue alpha_i**2, so
    projecting z onto each eigenspace of z□z and dividing by the square root
    of the eigenvalue yields alpha * e with e a (not necessarily minimal)
    tripotent.
    """
    n = jb_norm(z)
    if n == 0.0:
        return SpectralDecomp((), z)
    m = box_operator(z, z).matrix
    vals, vecs = np.linalg.eigh((m + m.conj().T) / 2)
    thresh = cluster_tol * n * n
    pairs = []
    i = len(vals) - 1
    c = z.coords
    while i >= 0 and vals[i] > thresh:
        j = i
        while j - 1 >= 0 and vals[i] - vals[j - 1] <= thresh:
            j -= 1
        v = vecs[:, j:i + 1]
        part = v @ (v.conj().T @ c)
        if np.linalg.norm(part) > 1e-12 * max(1.0, np.linalg.norm(c)):
            alpha = math.sqrt(float(np.mean(vals[j:i + 1])))
            pairs.append((alpha, Element.from_coords(z.space, part / alpha)))
        i = j - 1
    pairs.sort(key=lambda t: -t[0])
    return SpectralDecomp(tuple(pairs), z)


def refine_to_minimal_frame(d: SpectralDecomp) -> SpectralDecomp:
    """Split every non-minimal tripotent into orthogonal minimal ones."""
    out = []
    for a, e in d.pairs:
        if is_minimal(e):
            out.append((a, e))
            continue
        for b, f in spectral_decompose(e).pairs:
            # b == 1 for a tripotent; keep the residual scale honest
            out.append((a * b, f))
    out.sort(key=lambda t: -t[0])
    return SpectralDecomp(tuple(out), d.source)


# -- Peirce projections -----------------------------------------------------


def peirce_projections(e: Element, tol: float = TRIPOTENT_TOL) -> tuple[LinearOp, LinearOp, LinearOp]:
    """(P0, P1, P2) for a tripotent ``e``."""
    if not is_tripotent(e, tol):
        raise ValidationError("Peirce projections need a tripotent")
    ee = box_operator(e, e).matrix
    ee2 = ee @ ee
    ident = np.eye(e.space.dim)
    p2 = 2 * ee2 - ee
    p1 = 4 * (ee - ee2)
    # equals B(e, e) = 1 - 3 e□e + 2 (e□e)^2 for a tripotent
    p0 = ident - p1 - p2
    return tuple(LinearOp(e.space, p) for p in (p0, p1, p2))


def peirce_projection(e: Element, k: int) -> LinearOp:
    if k not in (0, 1, 2):
        raise ValueError("Peirce index must be 0, 1 or 2")
    return peirce_projections(e)[k]


def _frame_tripotents(frame) -> tuple[Element, ...]:
    if isinstance(frame, Frame):
        return frame.tripotents
    return tuple(frame)


def joint_peirce_projections(frame, validate: bool = True) -> dict[tuple[int, int], LinearOp]:
    """All joint Peirce projections ``P_ij`` (0 <= i <= j <= n) of a frame.

    Index 0 is the "outside" slot; tripotents are numbered from 1.
    """
    es = _frame_tripotents(frame)
    if not es:
        raise ValidationError("empty frame")
    space = es[0].space
    if validate:
        for i, j in itertools.combinations(range(len(es)), 2):
            if not are_orthogonal(es[i], es[j]):
                raise ValidationError(f"frame members {i + 1} and {j + 1} are not orthogonal")
    proj = [peirce_projections(e) for e in es]
    n = len(es)
    p0 = [p[0].matrix for p in proj]
    p1 = [p[1].matrix for p in proj]
    p2 = [p[2].matrix for p in proj]
    ident = np.eye(space.dim, dtype=complex)

    def prod(mats):
        out = ident
        for m in mats:
            out = out @ m
        return out

    out = {}
    out[(0, 0)] = prod(p0)
    for i in range(1, n + 1):
        out[(i, i)] = p2[i - 1]
        out[(0, i)] = p1[i - 1] @ prod(p0[k] for k in range(n) if k != i - 1)
        for j in range(i + 1, n + 1):
            out[(i, j)] = p1[i - 1] @ p1[j - 1]
    return {k: LinearOp(space, v) for k, v in out.items()}


def joint_peirce_projection(frame, i: int, j: int) -> LinearOp:
    es = _frame_tripotents(frame)
    n = len(es)
    if not (0 <= i <= n and 0 <= j <= n):
        raise ValidationError(f"indices ({i}, {j}) out of range for a frame of size {n}")
    i, j = min(i, j), max(i, j)
    if isinstance(frame, Frame):
        cache = frame._cache
        if "joint" not in cache:
            cache["joint"] = joint_peirce_projections(frame)
        return cache["joint"][(i, j)]
    return joint_peirce_projections(es)[(i, j)]


def rank_of(space: TripleSpace) -> int:
    return space.rank
