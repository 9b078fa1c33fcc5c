"""Holomorphic self-maps of the ball, their fixed points, Wolff points and orbits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bergmann import MobiusMap, kobayashi_distance
from .errors import ConvergenceError, DomainError, FixedPointError, ValidationError
from .horoball import ApproachSequence, WolffSigmas, wolff_sigmas
from .linop import LinearOp
from .peirce import Frame, is_tripotent, peirce_projections, spectral_decompose
from .triple import (
    Element,
    TripleSpace,
    jb_norm,
    join_summands,
    random_element,
    split_summands,
    triple_product,
)

# -- map expressions ----------------------------------------------------------


class MapExpr:
    """Base class of map expression nodes.  Nodes are immutable and callable."""

    def __call__(self, z: Element) -> Element:
        return eval_map(self, z)

    def to_dict(self) -> dict:
        raise NotImplementedError


def _check_space(node, z: Element, space: TripleSpace):
    if z.space != space:
        raise ValidationError(f"{type(node).__name__} expects a point of {space}, got {z.space}")


@dataclass(frozen=True, eq=False)
class Mobius(MapExpr):
    a: Element
    _map: MobiusMap = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_map", MobiusMap(self.a))

    def _eval(self, z):
        _check_space(self, z, self.a.space)
        # eval_map has already checked that z lies in the closed ball
        return self._map._apply(z)

    def to_dict(self):
        return {"type": "mobius", "a": self.a.to_dict()}


@dataclass(frozen=True, eq=False)
class LinearIsometry(MapExpr):
    """A triple automorphism given by its coordinate matrix."""

    op: LinearOp

    def _eval(self, z):
        _check_space(self, z, self.op.space)
        return self.op(z)

    def check(self, samples: int = 8, seed=0, tol: float = 1e-9) -> float:
        """Largest residual of U{a,b,c} = {Ua,Ub,Uc}; raises if above ``tol``."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(samples):
            a, b, c = (random_element(self.op.space, rng) for _ in range(3))
            u = self.op
            d = u(triple_product(a, b, c)) - triple_product(u(a), u(b), u(c))
            worst = max(worst, d.euclidean_norm())
        if worst > tol:
            raise ValidationError(f"linear map is not a triple automorphism (residual {worst:.3g})")
        return worst

    @classmethod
    def phase(cls, space: TripleSpace, theta: float) -> "LinearIsometry":
        return cls(LinearOp(space, np.exp(1j * theta) * np.eye(space.dim)))

    @classmethod
    def factor_action(cls, space: TripleSpace, index: int, u, v=None) -> "LinearIsometry":
        """Act on summand ``index`` by x -> u x v (rect), u x u^T (sym, antisym) or u x (spin, u real orthogonal)."""
        f = space.factors[space._check_index(index)]
        u = np.asarray(u, dtype=complex)
        if f.kind == "rect":
            v = np.eye(f.dims[1]) if v is None else np.asarray(v, dtype=complex)
            fn = lambda b: u @ b @ v  # noqa: E731
        elif f.kind in ("sym", "antisym"):
            fn = lambda b: u @ b @ u.T  # noqa: E731
        else:
            if np.abs(u.imag).max() > 0:
                raise ValidationError("spin factor automorphisms here use real orthogonal matrices")
            fn = lambda b: u @ b  # noqa: E731

        def act(x):
            blocks = list(x.blocks)
            blocks[index] = fn(blocks[index])
            return Element(space, blocks)

        out = cls(LinearOp.from_function(space, act))
        out.check()
        return out

    def to_dict(self):
        m = self.op.matrix
        return {
            "type": "linear_isometry",
            "space": self.op.space.to_dict(),
            "re": m.real.tolist(),
            "im": m.imag.tolist(),
        }


@dataclass(frozen=True, eq=False)
class ScalarScale(MapExpr):
    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValidationError("scale factor must lie in (0, 1]")

    def _eval(self, z):
        return self.alpha * z

    def to_dict(self):
        return {"type": "scale", "alpha": self.alpha}


@dataclass(frozen=True, eq=False)
class Compose(MapExpr):
    """outer o inner."""

    outer: MapExpr
    inner: MapExpr

    def _eval(self, z):
        return eval_map(self.outer, eval_map(self.inner, z))

    def to_dict(self):
        return {"type": "compose", "outer": self.outer.to_dict(), "inner": self.inner.to_dict()}


@dataclass(frozen=True, eq=False)
class DirectSumMap(MapExpr):
    """One map per summand of the space."""

    maps: tuple[MapExpr, ...]

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))

    def _eval(self, z):
        parts = split_summands(z)
        if len(parts) != len(self.maps):
            raise ValidationError(f"direct sum map has {len(self.maps)} parts, space has {len(parts)} summands")
        return join_summands(z.space, [eval_map(m, p) for m, p in zip(self.maps, parts)])

    def to_dict(self):
        return {"type": "direct_sum", "maps": [m.to_dict() for m in self.maps]}


@dataclass(frozen=True, eq=False)
class Constant(MapExpr):
    c: Element

    def __post_init__(self):
        if jb_norm(self.c) >= 1.0:
            raise DomainError("constant map value must lie in the open ball")

    def _eval(self, z):
        _check_space(self, z, self.c.space)
        return self.c

    def to_dict(self):
        return {"type": "constant", "c": self.c.to_dict()}


def eval_map(f: MapExpr, z: Element) -> Element:
    if not isinstance(f, MapExpr) or not hasattr(f, "_eval"):
        raise ValidationError(f"not a map expression: {f!r}")
    if jb_norm(z) > 1.0 + 1e-12:
        raise DomainError("maps are evaluated on the closed unit ball")
    return f._eval(z)


def map_from_dict(data: dict) -> MapExpr:
    try:
        kind = data["type"]
        if kind == "mobius":
            return Mobius(Element.from_dict(data["a"]))
        if kind == "linear_isometry":
            space = TripleSpace.from_dict(data["space"])
            m = np.asarray(data["re"], dtype=float) + 1j * np.asarray(data["im"], dtype=float)
            return LinearIsometry(LinearOp(space, m))
        if kind == "scale":
            return ScalarScale(float(data["alpha"]))
        if kind == "compose":
            return Compose(map_from_dict(data["outer"]), map_from_dict(data["inner"]))
        if kind == "direct_sum":
            return DirectSumMap(tuple(map_from_dict(m) for m in data["maps"]))
        if kind == "constant":
            return Constant(Element.from_dict(data["c"]))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed map description: {exc}") from exc
    raise ValidationError(f"unknown map type {data.get('type')!r}")


def compose(*maps: MapExpr) -> MapExpr:
    """compose(f, g, h) = f o g o h."""
    out = maps[-1]
    for m in reversed(maps[:-1]):
        out = Compose(m, out)
    return out


# -- fixed points -------------------------------------------------------------


@dataclass(frozen=True)
class FixedPoint:
    point: Element
    iterations: int
    residual: float


def earle_hamilton_fixed_point(f: MapExpr, alpha: float, tol: float = 1e-14, max_iter: int = 100_000,
                               start: Element | None = None, full_output: bool = False):
    """Fixed point of alpha * f by Picard iteration (from 0 unless ``start`` is given).

    alpha f maps the ball strictly inside itself, hence is a strict
    contraction for the Kobayashi distance and the iteration converges.
    Iteration stops once the step is below ``tol``, or once it stops
    shrinking while already at roundoff level.
    """
    if not 0.0 < alpha < 1.0:
        raise ValidationError("alpha must lie in (0, 1)")
    z = start
    if z is None:
        z = _space_of(f).zero()
    best = math.inf
    stall = 0
    for n in range(1, max_iter + 1):
        w = alpha * eval_map(f, z)
        step = (w - z).euclidean_norm()
        z = w
        if step <= tol:
            break
        if step < best:
            best, stall = step, 0
        else:
            stall += 1
            if best <= 1e3 * tol and stall >= 20:
                break
    else:
        raise ConvergenceError(f"Picard iteration did not settle within {max_iter} steps", last=z, iterations=max_iter)
    if not full_output:
        return z
    return FixedPoint(z, n, (z - alpha * eval_map(f, z)).euclidean_norm())


def _space_of(f: MapExpr) -> TripleSpace:
    if isinstance(f, Mobius):
        return f.a.space
    if isinstance(f, Constant):
        return f.c.space
    if isinstance(f, LinearIsometry):
        return f.op.space
    if isinstance(f, Compose):
        try:
            return _space_of(f.inner)
        except ValidationError:
            return _space_of(f.outer)
    if isinstance(f, DirectSumMap):
        factors = []
        for m in f.maps:
            factors.extend(_space_of(m).factors)
        return TripleSpace(tuple(factors))
    raise ValidationError("cannot infer the space of this map; pass it explicitly")


def schedule(k: int, base: float = 2.0) -> float:
    return 1.0 - base ** (-k)


@dataclass(frozen=True)
class WolffData:
    alphas: tuple[float, ...]
    points: tuple[Element, ...]
    xi: Element
    sigmas: WolffSigmas
    residuals: tuple[float, ...]
    iterations: tuple[int, ...]

    @property
    def frame(self) -> Frame:
        return self.sigmas.frame

    @property
    def sequence(self) -> ApproachSequence:
        return ApproachSequence(self.points, self.xi)

    @property
    def tripotent(self) -> Element:
        """e = sum of the frame tripotents with positive sigma."""
        return self.frame.sum()


FIXED_POINT_GAP = 1e-3


def _settles_inside(depth, runs: int = 3, ratio: float = 0.75, step: float = 1e-2) -> bool:
    """True once kappa(0, z_k) visibly converges to a finite limit inside the gap.

    Without an interior fixed point kappa(0, z_k) grows without bound and its
    increments stay near a positive constant; with one, they shrink
    geometrically.  Waiting for z_K at K = 30 in that case would cost about
    2^K Picard steps, since alpha_k f then contracts only at rate alpha_k.
    """
    d = np.diff(depth)
    if len(d) < runs + 1 or abs(d[-1]) > step:
        return False
    r = []
    for prev, cur in zip(d[-runs - 1:-1], d[-runs:]):
        if abs(prev) == 0.0:
            if abs(cur) != 0.0:
                return False
            r.append(0.0)
        else:
            r.append(abs(cur) / abs(prev))
    if max(r) > ratio:
        return False
    limit = depth[-1] + abs(d[-1]) * max(r) / (1.0 - max(r))
    return limit < math.atanh(1.0 - FIXED_POINT_GAP)


def wolff_data(f: MapExpr, K: int = 30, base: float = 2.0, tol: float = 1e-14, space: TripleSpace | None = None) -> WolffData:
    """Fixed points z_k of (1 - base^-k) f for k = 1..K, their limit and sigma data."""
    start = (space or _space_of(f)).zero()
    alphas, pts, res, its = [], [], [], []
    depth = []
    for k in range(1, K + 1):
        a = schedule(k, base)
        try:
            fp = earle_hamilton_fixed_point(f, a, tol=tol, start=start, full_output=True)
        except ConvergenceError as exc:
            # contraction of alpha_k f degrades like sqrt(1 - alpha_k) at parabolic boundary points
            raise ConvergenceError(f"{exc} at k = {k} (alpha = {a!r}); try a smaller K", last=exc.last,
                                   iterations=exc.iterations) from exc
        alphas.append(a)
        pts.append(fp.point)
        res.append(fp.residual)
        its.append(fp.iterations)
        depth.append(math.atanh(min(jb_norm(fp.point), 1.0 - 1e-16)))
        if _settles_inside(depth):
            raise FixedPointError(
                f"fixed points of alpha_k f converge inside the ball (kappa(0, z_{k}) = {depth[-1]:.6g}); the map has a fixed point"
            )
    last = jb_norm(pts[-1])
    if last < 1.0 - FIXED_POINT_GAP:
        raise FixedPointError(f"fixed points of alpha_k f stay inside the ball (||z_K|| = {last:.6g}); the map has a fixed point")
    seq = ApproachSequence(tuple(pts))
    return WolffData(tuple(alphas), tuple(pts), seq.xi, wolff_sigmas(seq), tuple(res), tuple(its))


def schedule_stability(f: MapExpr, K: int = 30) -> float:
    """Distance between the Wolff limits found with bases 2 and 3 (reported, not asserted)."""
    k3 = math.ceil(K * math.log(2) / math.log(3))
    a = wolff_data(f, K=K, base=2.0)
    b = wolff_data(f, K=k3, base=3.0)
    return jb_norm(a.xi - b.xi)


# -- boundary components -------------------------------------------------------


@dataclass(frozen=True)
class BoundaryComponent:
    """K_e = e + (V_0(e) n D); its closure is e + P_0(e)(closed ball)."""

    e: Element
    p0: LinearOp

    def contains_closure(self, x: Element, tol: float = 1e-9) -> bool:
        dev, nrm = distance_to_component_closure(x, self)
        return dev <= tol and nrm <= 1.0 + tol


def boundary_component(e: Element) -> BoundaryComponent:
    if not is_tripotent(e) or jb_norm(e) == 0.0:
        raise ValidationError("boundary components are attached to non-zero tripotents")
    p0, _, _ = peirce_projections(e)
    return BoundaryComponent(e, p0)


def distance_to_component_closure(x: Element, comp) -> tuple[float, float]:
    """(||d - P_0(e) d||, ||P_0(e) d||) with d = x - e."""
    if not isinstance(comp, BoundaryComponent):
        comp = boundary_component(comp)
    d = x - comp.e
    p = comp.p0(d)
    return jb_norm(d - p), jb_norm(p)


# -- orbits -------------------------------------------------------------------


@dataclass(frozen=True)
class OrbitRecord:
    x0: Element
    points: tuple[Element, ...]
    boundary_gaps: tuple[float, ...]
    slice_deviations: tuple[float, ...] | None = None
    slice_norms: tuple[float, ...] | None = None

    def kobayashi_steps(self) -> list[float]:
        """kappa(f^{n+1} x0, f^n x0); inf once points are numerically on the boundary."""
        out = []
        for p, q in zip(self.points, self.points[1:]):
            try:
                out.append(kobayashi_distance(p, q))
            except DomainError:
                out.append(math.inf)
        return out


def iterate_orbit(f: MapExpr, x0: Element, N: int, component=None) -> OrbitRecord:
    """x0, f(x0), ..., f^N(x0) with distances to the boundary and to a boundary component."""
    if jb_norm(x0) >= 1.0:
        raise DomainError("orbit must start inside the ball")
    pts = [x0]
    for _ in range(N):
        pts.append(eval_map(f, pts[-1]))
    gaps = tuple(1.0 - jb_norm(p) for p in pts)
    if component is None:
        return OrbitRecord(x0, tuple(pts), gaps)
    if not isinstance(component, BoundaryComponent):
        component = boundary_component(component)
    dist = [distance_to_component_closure(p, component) for p in pts]
    return OrbitRecord(x0, tuple(pts), gaps, tuple(d for d, _ in dist), tuple(n for _, n in dist))


# -- Moebius iterates in closed form -----------------------------------------


def disc_mobius(alpha: complex, beta: complex) -> complex:
    """(beta + alpha) / (1 + conj(alpha) beta)."""
    return (beta + alpha) / (1 + np.conj(alpha) * beta)


def disc_mobius_power(alpha: complex, beta: complex, n: int) -> complex:
    for _ in range(n):
        beta = disc_mobius(alpha, beta)
    return beta


@dataclass(frozen=True)
class JointFrame:
    """a = sum alpha_j e_j and x = sum beta_j e_j on one orthogonal frame."""

    frame: Frame
    alphas: tuple[complex, ...]
    betas: tuple[complex, ...]


_PROBES = (0.1234567, 0.0713, 0.2718281, 0.0457)


def joint_frame(a: Element, x: Element, tol: float = 1e-9) -> JointFrame:
    """Find a frame diagonalising both a and x, or raise ValidationError."""
    if a.space != x.space:
        raise ValidationError("a and x live in different spaces")
    for c in _PROBES:
        d = spectral_decompose(a + c * x)
        es = d.tripotents
        if not es:
            if jb_norm(a) == 0.0 and jb_norm(x) == 0.0:
                return JointFrame(Frame(()), (), ())
            continue
        al = tuple(complex(a.inner(e) / e.inner(e)) for e in es)
        be = tuple(complex(x.inner(e) / e.inner(e)) for e in es)
        fr = Frame(tuple(es))
        ra = jb_norm(a - fr.combination(al))
        rx = jb_norm(x - fr.combination(be))
        if ra <= tol and rx <= tol:
            # rotate each e_j so that the coefficients of a are real and >= 0
            ph = [v / abs(v) if abs(v) > ZERO_COEFF else 1.0 for v in al]
            return JointFrame(
                Frame(tuple(p * e for p, e in zip(ph, es))),
                tuple(complex(abs(v)) if abs(v) > ZERO_COEFF else v for v in al),
                tuple(complex(b * np.conj(p)) for b, p in zip(be, ph)),
            )
    raise ValidationError("x is not diagonal on a frame of a")


def closed_form_mobius_iterates(a: Element, x: Element, n: int, jf: JointFrame | None = None) -> Element:
    """g_a^n(x) = sum G_{alpha_j}^n(beta_j) e_j with G the Moebius map of the disc."""
    if n < 0:
        raise ValidationError("n must be non-negative")
    jf = jf or joint_frame(a, x)
    vals = [disc_mobius_power(al, be, n) for al, be in zip(jf.alphas, jf.betas)]
    if not jf.frame.tripotents:
        return x
    return jf.frame.combination(vals)


@dataclass(frozen=True)
class LimitDescriptor:
    """Limit of g_a^n(x): e + sum_{alpha_j = 0} beta_j e_j with e = sum_{alpha_j != 0} phase_j e_j."""

    kind: str
    e: Element
    limit: Element
    alphas: tuple[complex, ...]
    betas: tuple[complex, ...]
    gammas: tuple[complex, ...]

    def to_dict(self) -> dict:
        c = lambda z: [float(np.real(z)), float(np.imag(z))]  # noqa: E731
        return {
            "kind": self.kind,
            "e": self.e.to_dict(),
            "limit": self.limit.to_dict(),
            "alphas": [c(v) for v in self.alphas],
            "betas": [c(v) for v in self.betas],
            "gammas": [c(v) for v in self.gammas],
        }


ZERO_COEFF = 1e-12


def mobius_iterate_limit(a: Element, x: Element, jf: JointFrame | None = None) -> LimitDescriptor:
    jf = jf or joint_frame(a, x)
    gam = []
    for al, be in zip(jf.alphas, jf.betas):
        gam.append(be if abs(al) <= ZERO_COEFF else al / abs(al))
    space = a.space
    e = space.zero()
    for al, g, t in zip(jf.alphas, gam, jf.frame.tripotents):
        if abs(al) > ZERO_COEFF:
            e = e + g * t
    limit = jf.frame.combination(gam) if jf.frame.tripotents else space.zero()
    if jb_norm(e) == 0.0:
        kind = "interior"
    else:
        p0, _, _ = peirce_projections(e)
        kind = "maximal_tripotent" if np.abs(p0.matrix).max() < 1e-9 else "boundary_component_slice"
    return LimitDescriptor(kind, e, limit, jf.alphas, jf.betas, tuple(gam))


# -- Denjoy-Wolff report ------------------------------------------------------


@dataclass(frozen=True)
class DenjoyWolffReport:
    e: Element
    N: int
    tail_deviations: tuple[float, ...]
    tail_slice_norms: tuple[float, ...]
    tolerance: float

    @property
    def max_deviation(self) -> float:
        return max(self.tail_deviations) if self.tail_deviations else 0.0

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance and all(s <= 1.0 + 1e-9 for s in self.tail_slice_norms)


def denjoy_wolff_report(f: MapExpr, starts, N: int, wolff: WolffData | None = None, tolerance: float = 1e-3) -> DenjoyWolffReport:
    """Distance of f^N(x0) to the closure of K_e, e = sum_{j in J} e_j."""
    wd = wolff or wolff_data(f)
    comp = boundary_component(wd.tripotent)
    devs, norms = [], []
    for x0 in starts:
        rec = iterate_orbit(f, x0, N, comp)
        devs.append(rec.slice_deviations[-1])
        norms.append(rec.slice_norms[-1])
    return DenjoyWolffReport(wd.tripotent, N, tuple(devs), tuple(norms), tolerance)
