"""Bergmann operators, Moebius transformations and the Kobayashi distance."""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, SingularityError, SpaceMismatchError, ValidationError
from .linop import LinearOp
from .peirce import joint_peirce_projections, spectral_decompose, spin_frame
from .triple import (
    Element,
    FactorDesc,
    TripleSpace,
    _block_diag,
    _factor_box_matrix,
    _factor_triple,
    factor_norm,
    jb_norm,
    triple_product,
)

BOUNDARY_GUARD = 1e-12
ALLOWED_POWERS = (1, -1, 0.5, -0.5)


# -- Bergmann operator ------------------------------------------------------


def _factor_bergmann_matrix(f: FactorDesc, a, b) -> np.ndarray:
    if f.kind == "spin":
        n = f.dims[0]
        cols = []
        for k in range(n):
            x = np.zeros(n, dtype=complex)
            x[k] = 1.0
            q = _factor_triple("spin", b, x, b)
            cols.append(x - 2 * _factor_triple("spin", a, b, x) + _factor_triple("spin", a, q, a))
        return np.array(cols).T
    s, r = a.shape
    full = np.kron(np.eye(s) - a @ b.conj().T, (np.eye(r) - b.conj().T @ a).T)
    if f.kind == "rect":
        return full
    p = f.basis
    return p.conj().T @ full @ p


def bergmann(a: Element, b: Element) -> LinearOp:
    """B(a, b) x = x - 2{a, b, x} + {a, {b, x, b}, a}."""
    if a.space != b.space:
        raise SpaceMismatchError("Bergmann operator operands live in different spaces")
    mats = [_factor_bergmann_matrix(f, x, y) for f, x, y in zip(a.space.factors, a.blocks, b.blocks)]
    return LinearOp(a.space, _block_diag(mats))


def bergmann_apply(a: Element, b: Element, x: Element) -> Element:
    """B(a, b) x straight from the triple product."""
    return x - 2 * triple_product(a, b, x) + triple_product(a, triple_product(b, x, b), a)


def _one_minus_sq(s):
    s = np.asarray(s, dtype=float)
    return (1.0 - s) * (1.0 + s)


class _FactorPower:
    """Closed-form B(a, a)^t for one factor, in a frame adapted to ``a``."""

    def __init__(self, f: FactorDesc, block, t: float):
        self.kind = f.kind
        if f.kind == "spin":
            e1, e2, a1, a2 = spin_frame(block)
            self.frame = (e1, e2)
            c = _one_minus_sq([a1, a2])
            self.coef = _power(c, t)
            self.alphas = (a1, a2)
        else:
            u, s, vh = np.linalg.svd(block)
            k = s.size
            cs = np.ones(block.shape[0])
            cr = np.ones(block.shape[1])
            p = _power(_one_minus_sq(s), t)
            cs[:k] = p
            cr[:k] = p
            self.u, self.vh = u, vh
            self.weights = np.outer(cs, cr)
            self.alphas = tuple(s)

    def apply(self, x):
        if self.kind == "spin":
            e1, e2 = self.frame
            c1, c2 = self.coef
            p1 = np.vdot(e1, x) * e1
            p2 = np.vdot(e2, x) * e2
            return c1 * c1 * p1 + c2 * c2 * p2 + c1 * c2 * (x - p1 - p2)
        u, vh = self.u, self.vh
        return u @ (self.weights * (u.conj().T @ x @ vh.conj().T)) @ vh


def _power(c, t):
    c = np.asarray(c, dtype=float)
    if t < 0 and np.any(c <= 0):
        raise SingularityError("Bergmann operator is singular (element on the boundary)")
    return np.where(c > 0, np.abs(c) ** t, 0.0) if t > 0 else c ** t


class BergmannPower:
    """B(a, a)^t evaluated in the spectral frame of ``a`` (cheap to apply)."""

    def __init__(self, a: Element, t: float):
        if t not in ALLOWED_POWERS:
            raise ValidationError(f"power {t} not supported; use one of {ALLOWED_POWERS}")
        n = jb_norm(a)
        if t < 0 and 1.0 - n < BOUNDARY_GUARD:
            raise SingularityError(f"negative Bergmann power needs ||a|| < 1 (got {n!r})")
        if t > 0 and n > 1.0 + BOUNDARY_GUARD:
            raise DomainError(f"Bergmann square root needs ||a|| <= 1 (got {n!r})")
        self.a = a
        self.t = t
        self._parts = [_FactorPower(f, b, t) for f, b in zip(a.space.factors, a.blocks)]

    def __call__(self, x: Element) -> Element:
        if x.space != self.a.space:
            raise SpaceMismatchError("operand lives in a different space")
        return Element(x.space, [p.apply(b) for p, b in zip(self._parts, x.blocks)])

    def as_linop(self) -> LinearOp:
        return LinearOp.from_function(self.a.space, self)


def bergmann_power_spectral(coeffs, frame, t: float) -> LinearOp:
    """sum_{i<=j} (1-|l_i|^2)^t (1-|l_j|^2)^t P_ij for a = sum l_i e_i."""
    lam = np.concatenate([[0.0], np.abs(np.asarray(coeffs, dtype=complex))])
    c = _power(_one_minus_sq(lam), t)
    projs = joint_peirce_projections(frame)
    space = next(iter(projs.values())).space
    out = np.zeros((space.dim, space.dim), dtype=complex)
    for (i, j), p in projs.items():
        out += c[i] * c[j] * p.matrix
    return LinearOp(space, out)


def bergmann_power(a: Element, t: float, method: str = "spectral") -> LinearOp:
    """B(a, a)^t as a dense operator.

    ``"spectral"`` sums joint Peirce projections of the spectral frame of a,
    ``"dense"`` takes the principal matrix power of B(a, a) by
    eigendecomposition, ``"closed"`` tabulates :class:`BergmannPower`.
    """
    if t not in ALLOWED_POWERS:
        raise ValidationError(f"power {t} not supported; use one of {ALLOWED_POWERS}")
    n = jb_norm(a)
    if t < 0 and 1.0 - n < BOUNDARY_GUARD:
        raise SingularityError(f"negative Bergmann power needs ||a|| < 1 (got {n!r})")
    if method == "closed":
        return BergmannPower(a, t).as_linop()
    if method == "spectral":
        d = spectral_decompose(a)
        if len(d) == 0:
            return LinearOp.identity(a.space)
        return bergmann_power_spectral(d.coefficients, d.frame(), t)
    if method == "dense":
        m = bergmann(a, a).matrix
        m = (m + m.conj().T) / 2
        vals, vecs = np.linalg.eigh(m)
        if t < 0 and vals.min() <= 0:
            raise SingularityError("Bergmann operator is singular")
        vals = np.clip(vals, 0.0, None) if t > 0 else vals
        return LinearOp(a.space, (vecs * vals ** t) @ vecs.conj().T)
    raise ValueError(f"unknown method {method!r}")


# -- Moebius transformations ------------------------------------------------


def _factor_resolvent_solve(f: FactorDesc, z, a):
    """Solve (1 + z□a) w = z for one factor."""
    try:
        if f.kind == "spin":
            m = np.eye(z.size) + _factor_box_matrix(f, z, a)
            w = np.linalg.solve(m, z)
        elif z.size == 1:
            with np.errstate(divide="ignore", invalid="ignore"):
                w = z / (1.0 + z * a.conj())
        else:
            # w = (1 + z a*)^{-1} z = z (1 + a* z)^{-1}, so w + (z a* w + w a* z)/2 = z
            w = np.linalg.solve(np.eye(z.shape[0]) + z @ a.conj().T, z)
    except np.linalg.LinAlgError as exc:
        raise SingularityError("resolvent (1 + z□a) is singular") from exc
    if not np.all(np.isfinite(w)):
        raise SingularityError("resolvent (1 + z□a) is singular")
    return w


def resolvent_apply(z: Element, a: Element) -> Element:
    """(1 + z□a)^{-1} z."""
    if z.space != a.space:
        raise SpaceMismatchError("operands live in different spaces")
    return Element(z.space, [_factor_resolvent_solve(f, x, y) for f, x, y in zip(z.space.factors, z.blocks, a.blocks)])


def _check_closed_ball(z: Element, name: str = "z"):
    if jb_norm(z) > 1.0 + 1e-12:
        raise DomainError(f"{name} lies outside the closed unit ball")


class MobiusMap:
    """g_a(z) = a + B(a, a)^{1/2} (1 + z□a)^{-1} z, for ||a|| < 1."""

    def __init__(self, a: Element):
        if jb_norm(a) >= 1.0:
            raise DomainError("Moebius transformation needs ||a|| < 1")
        self.a = a
        self.sqrt = BergmannPower(a, 0.5)

    @property
    def space(self) -> TripleSpace:
        return self.a.space

    def __call__(self, z: Element) -> Element:
        _check_closed_ball(z)
        return self._apply(z)

    def _apply(self, z: Element) -> Element:
        return self.a + self.sqrt(resolvent_apply(z, self.a))

    def inverse(self) -> "MobiusMap":
        return MobiusMap(-self.a)


def mobius_apply(a: Element, z: Element) -> Element:
    return MobiusMap(a)(z)


def mobius_inverse_apply(a: Element, z: Element) -> Element:
    return MobiusMap(-a)(z)


def _check_open_ball(*xs):
    for x in xs:
        if jb_norm(x) >= 1.0:
            raise DomainError("point lies on or outside the boundary")


def kobayashi_distance(x: Element, y: Element) -> float:
    """tanh^{-1} ||g_{-x}(y)||."""
    _check_open_ball(x, y)
    r = jb_norm(mobius_inverse_apply(x, y))
    if r >= 1.0:
        return math.inf
    return math.atanh(r)


def kobayashi_ball_contains(center: Element, r: float, x: Element) -> bool:
    """x lies in the Kobayashi ball {kappa(., center) < atanh r}."""
    if not 0.0 < r < 1.0:
        raise DomainError("radius parameter must lie in (0, 1)")
    _check_open_ball(center, x)
    return jb_norm(mobius_inverse_apply(center, x)) < r


def kobayashi_ball_point(center: Element, r: float, w: Element) -> Element:
    """Image of w in D under the affine parametrisation of the Kobayashi ball.

    (1 - r^2) B(rz, rz)^{-1/2} z + r B(z, z)^{1/2} B(rz, rz)^{-1/2} w
    """
    z = center
    inv = BergmannPower(r * z, -0.5)
    root = BergmannPower(z, 0.5)
    return (1 - r * r) * inv(z) + r * root(inv(w))


# -- operator norm with respect to the JB*-norm ------------------------------


class _Coords:
    """JB*-norm geometry on raw coordinate vectors of a space."""

    def __init__(self, space: TripleSpace):
        self.parts = []
        for f, lo, hi in zip(space.factors, space.offsets, space.offsets[1:]):
            basis = None if f.kind in ("rect", "spin") else f.basis
            self.parts.append((f.kind, f.shape, lo, hi, basis))

    def _block(self, c, part):
        kind, shape, lo, hi, basis = part
        v = c[lo:hi]
        return v.reshape(shape) if basis is None else (basis @ v).reshape(shape)

    def _coords(self, block, part):
        basis = part[4]
        return block.reshape(-1) if basis is None else basis.conj().T @ block.reshape(-1)

    def _norm(self, block, kind):
        if kind == "spin":
            return _spin_block_norm(block)
        if block.size == 1:
            return abs(block.flat[0])
        return np.linalg.svd(block, compute_uv=False)[0]

    def norm(self, c) -> float:
        return max(self._norm(self._block(c, p), p[0]) for p in self.parts)

    def subgradient(self, c):
        """G with Re<c, G> = ||c|| and dual norm 1 (supported on one summand)."""
        blocks = [self._block(c, p) for p in self.parts]
        norms = [self._norm(b, p[0]) for b, p in zip(blocks, self.parts)]
        idx = int(np.argmax(norms))
        out = np.zeros(c.size, dtype=complex)
        part, b = self.parts[idx], blocks[idx]
        if norms[idx] == 0.0:
            return out
        kind, _, lo, hi, _ = part
        if kind == "spin":
            g = spin_frame(b)[0]
        else:
            u, sv, vh = np.linalg.svd(b)
            g = np.outer(u[:, 0], vh[0])
            if kind != "rect":
                # project onto the subtriple, rescale so that Re<c, G> = ||c||
                g = (g + g.T) / 2 if kind == "sym" else (g - g.T) / 2
                val = np.vdot(g, b).real
                if val > 0:
                    g = g * (sv[0] / val)
        out[lo:hi] = self._coords(g, part)
        return out

    def dual_argmax(self, g):
        """A point of the closed unit ball maximising Re<x, g>."""
        out = np.zeros(g.size, dtype=complex)
        for part in self.parts:
            kind, _, lo, hi, _ = part
            b = self._block(g, part)
            if not np.any(b):
                continue
            if kind == "spin":
                gr, gi = b.real, b.imag
                _, vecs = np.linalg.eigh(np.outer(gr, gr) + np.outer(gi, gi))
                v = vecs[:, -1]
                w = np.dot(v, b.conj())
                ph = np.conj(w) / abs(w) if abs(w) > 0 else 1.0
                x = math.sqrt(2) * ph * v
            else:
                u, sv, vh = np.linalg.svd(b, full_matrices=False)
                keep = sv > 1e-12 * sv[0]
                x = u[:, keep] @ vh[keep]
            out[lo:hi] = self._coords(x, part)
        n = self.norm(out)
        return out / n if n > 1.0 else out


def _spin_block_norm(z) -> float:
    return factor_norm(FactorDesc("spin", (z.size,)), z)


def jb_operator_norm(op: LinearOp, n_random: int = 32, seed=0, starts=(), n_ascend: int = 6,
                     max_iter: int = 200, rtol: float = 1e-15) -> float:
    """Estimate sup ||T x|| / ||x|| over the JB*-unit sphere.

    Ascent step: from x, take a norming functional G of T x and jump to the
    unit-ball maximiser of Re<x, T^* G>; the value never decreases along a
    run.  Candidates are random extreme points, normalised basis vectors and
    the Euclidean top singular vector; every candidate is scored, the best
    ``n_ascend`` of them and all supplied ``starts`` are then ascended.
    """
    space = op.space
    geo = _Coords(space)
    rng = np.random.default_rng(seed)
    mat = op.matrix
    adj = mat.conj().T

    def ratio(x):
        nx = geo.norm(x)
        if nx == 0.0:
            return None, 0.0
        x = x / nx
        return x, geo.norm(mat @ x)

    cands = list(np.eye(space.dim, dtype=complex))
    _, _, vh = np.linalg.svd(mat)
    cands.append(vh[0].conj())
    for _ in range(n_random):
        c = rng.standard_normal(space.dim) + 1j * rng.standard_normal(space.dim)
        cands.append(geo.dual_argmax(c))
    scored = sorted((ratio(x) for x in cands), key=lambda p: -p[1])
    runs = scored[:n_ascend] + [ratio(np.asarray(x.coords if isinstance(x, Element) else x)) for x in starts]

    best = scored[0][1] if scored else 0.0
    for x, val in runs:
        if x is None:
            continue
        for _ in range(max_iter):
            x_new, new_val = ratio(geo.dual_argmax(adj @ geo.subgradient(mat @ x)))
            if x_new is None or new_val <= val * (1 + rtol):
                val = max(val, new_val)
                break
            x, val = x_new, new_val
        best = max(best, val)
    return float(best)


def gab_operator(a: Element, z: Element) -> LinearOp:
    """B(a, a)^{-1/2} B(a, z) B(z, z)^{-1/2}."""
    _check_open_ball(a, z)
    left = BergmannPower(a, -0.5).as_linop()
    right = BergmannPower(z, -0.5).as_linop()
    return left @ bergmann(a, z) @ right


def _frame_starts(*points):
    out = []
    for p in points:
        d = spectral_decompose(p)
        if len(d):
            out.append(d.tripotents[0])
            out.append(d.frame().sum())
    return out


def gab_ratio(a: Element, z: Element, **kw) -> float:
    """JB*-operator norm of B(a, a)^{-1/2} B(a, z) B(z, z)^{-1/2}."""
    op = gab_operator(a, z)
    w = mobius_inverse_apply(z, a)
    starts = _frame_starts(a, z, w, mobius_inverse_apply(a, z))
    return jb_operator_norm(op, starts=tuple(starts) + tuple(kw.pop("starts", ())), **kw)
