"""Invariant domains H(xi, lambda) and horoballs at a boundary point."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .bergmann import MobiusMap, bergmann_power_spectral, gab_ratio
from .errors import (
    DomainError,
    FrameAlignmentError,
    UnsupportedOperationError,
    ValidationError,
)
from .linop import LinearOp
from .peirce import Frame, SpectralDecomp, spectral_decompose
from .triple import Element, jb_norm

TAIL = 10
K_MIN = 20
SPREAD_TOL = 1e-4
SIGMA_FLOOR = 1e-6
SNAP_BAND = 1e-3
MARGIN = 1e-9


@dataclass(frozen=True)
class ApproachSequence:
    """Points z_k of the ball with ||z_k|| increasing to 1 and limit xi."""

    points: tuple[Element, ...]
    xi: Element = None

    def __post_init__(self):
        pts = tuple(self.points)
        if not pts:
            raise ValidationError("approach sequence is empty")
        object.__setattr__(self, "points", pts)
        norms = [jb_norm(z) for z in pts]
        if max(norms) >= 1.0:
            raise DomainError("approach sequence must stay inside the open ball")
        if self.xi is None:
            object.__setattr__(self, "xi", pts[-1] / norms[-1])

    def __len__(self):
        return len(self.points)

    @cached_property
    def norms(self) -> np.ndarray:
        return np.array([jb_norm(z) for z in self.points])

    @cached_property
    def decompositions(self) -> tuple[SpectralDecomp, ...]:
        return tuple(spectral_decompose(z) for z in self.points)

    @cached_property
    def _inverse_maps(self) -> dict:
        return {}

    def inverse_map(self, k: int) -> MobiusMap:
        """g_{-z_k}, built once per point."""
        maps = self._inverse_maps
        if k not in maps:
            maps[k] = MobiusMap(-self.points[k])
        return maps[k]

    def tail(self, t: int = TAIL) -> range:
        return range(max(0, len(self) - t), len(self))

    def radii(self, lam: float) -> np.ndarray:
        """r_k with 1 - r_k^2 = lambda (1 - ||z_k||^2), nan where undefined."""
        v = 1.0 - lam * (1.0 - self.norms) * (1.0 + self.norms)
        return np.where(v > 0, np.sqrt(np.clip(v, 0, None)), np.nan)


@dataclass(frozen=True)
class TailEstimate:
    """limsup of a sequence estimated by the max over its recorded tail."""

    value: float
    spread: float
    tail: tuple[float, ...] = field(repr=False)

    @property
    def converged(self) -> bool:
        return self.spread <= SPREAD_TOL

    def __float__(self):
        return self.value


def _tail_estimate(values) -> TailEstimate:
    v = tuple(float(x) for x in values)
    return TailEstimate(max(v), max(v) - min(v), v)


def _one_minus_sq(r):
    return (1.0 - r) * (1.0 + r)


def big_F(x: Element, seq: ApproachSequence, t: int = TAIL, k_min: int = K_MIN) -> TailEstimate:
    """limsup_k (1 - ||z_k||^2) / (1 - ||g_{-z_k}(x)||^2)."""
    if jb_norm(x) >= 1.0:
        raise DomainError("F is only defined inside the open ball")
    if len(seq) < k_min:
        raise ValidationError(f"approach sequence needs at least {k_min} points")
    vals = []
    for k in seq.tail(t):
        w = jb_norm(seq.inverse_map(k)(x))
        vals.append(_one_minus_sq(seq.norms[k]) / _one_minus_sq(w))
    return _tail_estimate(vals)


def big_F_gab(x: Element, seq: ApproachSequence, t: int = TAIL, **kw) -> TailEstimate:
    """Same limsup via the Bergmann norm ||B(x,x)^{-1/2} B(x,z_k) B(z_k,z_k)^{-1/2}||."""
    if jb_norm(x) >= 1.0:
        raise DomainError("F is only defined inside the open ball")
    vals = [gab_ratio(x, seq.points[k], **kw) * _one_minus_sq(seq.norms[k]) for k in seq.tail(t)]
    return _tail_estimate(vals)


def h_domain_contains(x: Element, seq: ApproachSequence, lam: float, margin: float = MARGIN) -> bool:
    if lam <= 0:
        raise ValidationError("lambda must be positive")
    return big_F(x, seq).value < 1.0 / lam - margin


# -- sigma_j and the limit frame --------------------------------------------


@dataclass(frozen=True)
class WolffSigmas:
    """Limit frame {e_j : j in J} with sigma_j; ``raw_max`` before snapping."""

    frame: Frame
    sigmas: tuple[float, ...]
    alphas: tuple[float, ...]
    raw_max: float
    spreads: tuple[float, ...]


def _clusters(values, tol):
    out = []
    for i, v in enumerate(values):
        if out and abs(values[out[-1][0]] - v) <= tol:
            out[-1].append(i)
        else:
            out.append([i])
    return out


def _aligned_alphas(final: SpectralDecomp, d: SpectralDecomp) -> np.ndarray:
    """Coefficients of ``d`` re-indexed by the tripotents of ``final``.

    Tripotents of equal final coefficient are only defined up to rotation
    inside their cluster, so matching is done cluster by cluster: each
    tripotent of ``d`` goes to the cluster carrying most of its mass, and
    coefficients inside a cluster are assigned in decreasing order.
    """
    fin = final.tripotents
    clusters = _clusters(final.coefficients, 1e-8)
    buckets = [[] for _ in clusters]
    for a, e in d.pairs:
        ee = e.inner(e).real
        mass = [sum(abs(fin[j].inner(e)) ** 2 / (fin[j].inner(fin[j]).real * ee) for j in c) for c in clusters]
        best = int(np.argmax(mass))
        if mass[best] < 0.5:
            # small coefficients of vanishing final weight carry no direction
            if a < 1e-6:
                continue
            raise FrameAlignmentError(f"tripotent with coefficient {a:.6g} matches no limit direction")
        buckets[best].append(a)
    out = np.zeros(len(fin))
    for c, b in zip(clusters, buckets):
        if len(b) > len(c):
            raise FrameAlignmentError("more tripotents than limit directions in a cluster")
        b = sorted(b, reverse=True) + [0.0] * (len(c) - len(b))
        out[c] = b
    return out


def wolff_sigmas(seq: ApproachSequence, t: int = TAIL, floor: float = SIGMA_FLOOR) -> WolffSigmas:
    """sigma_j = limsup_k (1 - ||z_k||^2) / (1 - alpha_jk^2) on the frame of the last point.

    Directions whose sigma estimate falls below ``floor`` are dropped from
    J: they contribute nothing to the horoball centre.
    """
    final = seq.decompositions[-1]
    if len(final) == 0:
        raise ValidationError("approach sequence ends at the origin")
    rows = []
    for k in seq.tail(t):
        alphas = _aligned_alphas(final, seq.decompositions[k])
        rows.append(_one_minus_sq(seq.norms[k]) / _one_minus_sq(alphas))
    rows = np.array(rows)
    raw = rows.max(axis=0)
    spread = raw - rows.min(axis=0)
    keep = [j for j in range(len(raw)) if raw[j] >= floor]
    raw_max = float(raw.max())
    if not 1.0 - SNAP_BAND <= raw_max <= 1.0 + 1e-6:
        raise ValidationError(f"largest sigma estimate {raw_max:.6g} is not 1; the sequence is not close enough to the boundary")
    sig = [float(min(1.0, raw[j] / raw_max)) for j in keep]
    return WolffSigmas(
        Frame(tuple(final.tripotents[j] for j in keep)),
        tuple(sig),
        tuple(float(final.coefficients[j]) for j in keep),
        raw_max,
        tuple(float(spread[j]) for j in keep),
    )


# -- horoballs in closed form -----------------------------------------------


@dataclass(frozen=True)
class HoroballParams:
    """S_0(xi, lambda) = c + B(a, a)^{1/2}(D), a = sum sqrt(mu_j) e_j, mu_j = s_j lam / (1 + s_j lam)."""

    frame: Frame
    sigmas: tuple[float, ...]
    lam: float

    def __post_init__(self):
        if self.lam <= 0:
            raise ValidationError("lambda must be positive")
        s = np.asarray(self.sigmas, dtype=float)
        if len(s) != len(self.frame) or len(s) == 0:
            raise ValidationError("need one sigma per frame tripotent")
        if np.any(s < 0) or np.any(s > 1 + 1e-12) or abs(s.max() - 1.0) > 1e-6:
            raise ValidationError("sigmas must lie in [0, 1] with maximum 1")

    @cached_property
    def mus(self) -> np.ndarray:
        s = np.asarray(self.sigmas) * self.lam
        return s / (1.0 + s)

    @cached_property
    def center(self) -> Element:
        return self.frame.combination(self.mus)

    @cached_property
    def scale(self) -> LinearOp:
        return bergmann_power_spectral(np.sqrt(self.mus), self.frame, 0.5)

    @cached_property
    def inverse_scale(self) -> LinearOp:
        return bergmann_power_spectral(np.sqrt(self.mus), self.frame, -0.5)

    def phi(self, w: Element) -> Element:
        return self.center + self.scale(w)

    def phi_inverse(self, x: Element) -> Element:
        return self.inverse_scale(x - self.center)


def horoball_params(frame, sigmas, lam: float) -> HoroballParams:
    if not isinstance(frame, Frame):
        frame = Frame(tuple(frame))
    return HoroballParams(frame, tuple(float(s) for s in sigmas), float(lam))


def horoball_contains(p: HoroballParams, x: Element, tol: float = 0.0) -> bool:
    if jb_norm(x) >= 1.0:
        raise DomainError("point lies on or outside the boundary")
    return jb_norm(p.phi_inverse(x)) < 1.0 - tol


def horoball_margin(p: HoroballParams, x: Element) -> float:
    """1 - ||phi^{-1}(x)||; positive inside the horoball."""
    return 1.0 - jb_norm(p.phi_inverse(x))


# -- the non-emptiness bound --------------------------------------------------


def corollary_bound(t: float) -> float:
    return math.sqrt((1 - t) / (1 + t)) + t * (1 - t) / (1 + t)


def corollary_h_check(xi: Element, seq: ApproachSequence, t: float, tail: int = TAIL) -> tuple[float, float]:
    """Tail estimate of ||B(x,x)^{-1/2} B(x,z_k) B(z_k,z_k)^{-1/2}|| (1 - ||z_k||^2) at x = t xi, and the bound."""
    if any(f.kind not in ("rect", "sym", "antisym") for f in xi.space.factors):
        raise UnsupportedOperationError("the bound is checked on matrix factors only")
    if not 0.0 < t < 1.0:
        raise ValidationError("t must lie in (0, 1)")
    lhs = big_F_gab(t * xi, seq, tail).value
    return lhs, corollary_bound(t)


def invariance_violations(f, seq: ApproachSequence, lam: float, samples, margin: float = MARGIN) -> int:
    """Count samples x in H(xi, lambda) whose image f(x) leaves it."""
    bad = 0
    thresh = 1.0 / lam
    for x in samples:
        if big_F(x, seq).value < thresh - margin and not big_F(f(x), seq).value < thresh + margin:
            bad += 1
    return bad


__all__ = [
    "ApproachSequence",
    "TailEstimate",
    "WolffSigmas",
    "HoroballParams",
    "big_F",
    "big_F_gab",
    "h_domain_contains",
    "wolff_sigmas",
    "horoball_params",
    "horoball_contains",
    "horoball_margin",
    "corollary_bound",
    "corollary_h_check",
    "invariance_violations",
]
