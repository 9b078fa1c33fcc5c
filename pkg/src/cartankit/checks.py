"""Numerical checks of the structural identities, collected into reports."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .bergmann import (
    BergmannPower,
    bergmann,
    bergmann_power,
    gab_ratio,
    jb_operator_norm,
    kobayashi_ball_point,
    mobius_apply,
    mobius_inverse_apply,
)
from .errors import DomainError
from .linop import LinearOp
from .peirce import (
    Frame,
    joint_peirce_projections,
    peirce_projections,
    spectral_decompose,
)
from .triple import Element, _spin_inner, box_operator, jb_norm, random_element, triple_product


@dataclass(frozen=True)
class CheckRecord:
    name: str
    passed: bool
    measured: float
    tolerance: float
    identity: str

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "measured": self.measured,
            "tolerance": self.tolerance,
            "identity": self.identity,
        }


@dataclass
class Report:
    title: str
    records: list[CheckRecord] = field(default_factory=list)

    def add(self, name: str, measured: float, tolerance: float, identity: str, passed: bool | None = None):
        if passed is None:
            passed = bool(measured <= tolerance)
        self.records.append(CheckRecord(name, passed, float(measured), float(tolerance), identity))

    def extend(self, other: "Report"):
        self.records.extend(other.records)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "status": "pass" if self.passed else "fail",
            "records": [r.to_dict() for r in self.records],
        }


def _rng(seed):
    return np.random.default_rng(seed)


# -- triple axioms ------------------------------------------------------------


def flipped_triple_product(a: Element, b: Element, c: Element) -> Element:
    """Deliberately wrong product: the symmetrising term enters with a minus sign."""
    blocks = []
    for f, x, y, z in zip(a.space.factors, a.blocks, b.blocks, c.blocks):
        if f.kind == "spin":
            blocks.append(0.5 * (_spin_inner(x, y) * z + _spin_inner(z, y) * x + _spin_inner(x, z.conj()) * y.conj()))
        else:
            blocks.append(0.5 * (x @ y.conj().T @ z - z @ y.conj().T @ x))
    return Element(a.space, blocks)


def _box(product, a, b) -> LinearOp:
    return LinearOp.from_function(a.space, lambda x: product(a, b, x))


def axiom_suite(space, samples: int = 200, seed=0, product=triple_product) -> Report:
    """Jordan identity, positivity of a□a and ||a□a|| = ||a||^2."""
    rng = _rng(seed)
    rep = Report(f"axioms on {space}")
    worst_id = worst_iv = 0.0
    worst_spec = math.inf
    worst_herm = 0.0
    for _ in range(samples):
        x, y, a, b, c = (random_element(space, rng, 1.0, exact_norm=True) for _ in range(5))
        p = product
        lhs = p(x, y, p(a, b, c))
        rhs = p(p(x, y, a), b, c) - p(a, p(y, x, b), c) + p(a, b, p(x, y, c))
        worst_id = max(worst_id, jb_norm(lhs - rhs))
        m = _box(p, a, a).matrix
        worst_herm = max(worst_herm, np.abs(m - m.conj().T).max())
        vals = np.linalg.eigvals(m)
        worst_spec = min(worst_spec, float(vals.real.min()))
        worst_spec = min(worst_spec, -float(np.abs(vals.imag).max()))
        worst_iv = max(worst_iv, abs(np.abs(vals).max() - jb_norm(a) ** 2))
    rep.add("triple identity", worst_id, 1e-10,
            "{x,y,{a,b,c}} = {{x,y,a},b,c} - {a,{y,x,b},c} + {a,b,{x,y,c}} (relative, unit-norm samples)")
    rep.add("box hermitian", worst_herm, 1e-10, "a□a is hermitian for the trace inner product")
    rep.add("box spectrum", -worst_spec, 1e-10, "a□a has real non-negative spectrum")
    rep.add("norm of a□a", worst_iv, 1e-8, "||a□a|| = ||a||^2")
    return rep


# -- Peirce algebra -----------------------------------------------------------


def _opdist(p: LinearOp, q: LinearOp) -> float:
    return float(np.linalg.norm(p.matrix - q.matrix, 2))


def _sum_ops(space, ops) -> LinearOp:
    m = np.zeros((space.dim, space.dim), dtype=complex)
    for o in ops:
        m = m + o.matrix
    return LinearOp(space, m)


def _random_frame(space, rng) -> Frame:
    z = random_element(space, rng, 1.0, exact_norm=True)
    return spectral_decompose(z).frame()


def peirce_suite(space, samples: int = 20, seed=0) -> Report:
    rng = _rng(seed)
    rep = Report(f"Peirce algebra on {space}")
    w_sub = w_pij = w_mult = w_box = w_sum = w_l61 = 0.0
    for _ in range(samples):
        fr = _random_frame(space, rng)
        r = len(fr)
        full = joint_peirce_projections(fr)
        w_sum = max(w_sum, _opdist(_sum_ops(space, full.values()), LinearOp.identity(space)))
        # P_ij(e_k)
        for (i, j), p in full.items():
            for k, e in enumerate(fr.tripotents, start=1):
                want = e if (i == j == k) else space.zero()
                w_pij = max(w_pij, jb_norm(p(e) - want))
        # sub-frames
        if r >= 2:
            size = int(rng.integers(1, r))
            J = sorted(rng.choice(np.arange(1, r + 1), size=size, replace=False).tolist())
            sub = joint_peirce_projections(Frame(tuple(fr[k - 1] for k in J)))
            pos = {k: n + 1 for n, k in enumerate(J)}
            out = [0] + [k for k in range(1, r + 1) if k not in J]
            for i, j in itertools.combinations_with_replacement(J, 2):
                w_sub = max(w_sub, _opdist(sub[(pos[i], pos[j])], full[(i, j)]))
            for j in J:
                want = _sum_ops(space, [full[tuple(sorted((i, j)))] for i in out])
                w_sub = max(w_sub, _opdist(sub[(0, pos[j])], want))
            want = _sum_ops(space, [full[(i, j)] for i, j in itertools.combinations_with_replacement(out, 2)])
            w_sub = max(w_sub, _opdist(sub[(0, 0)], want))
        # multiplication rules on random index triples
        idx = list(full.keys())
        for _ in range(4):
            i, j = idx[rng.integers(len(idx))]
            k = int(rng.integers(0, r + 1))
            l = int(rng.integers(0, r + 1))
            pij = full[(i, j)]
            pjk = full[tuple(sorted((j, k)))]
            pkl = full[tuple(sorted((k, l)))]
            pil = full[tuple(sorted((i, l)))]
            x, y, z = (random_element(space, rng) for _ in range(3))
            t = triple_product(pij(x), pjk(y), pkl(z))
            w_mult = max(w_mult, jb_norm(pil(t) - t))
            # V_ij □ V_pq = 0 when {i, j} and {p, q} are disjoint
            p_, q_ = idx[rng.integers(len(idx))]
            if not {i, j} & {p_, q_}:
                w_box = max(w_box, float(np.abs(box_operator(pij(x), full[(p_, q_)](y)).matrix).max()))
        # (V_0(e))_0(c) = V_0(e + c) for orthogonal tripotents e, c
        if r >= 2:
            e, c = fr[0], fr[1]
            p00 = joint_peirce_projections(Frame((e, c)))[(0, 0)]
            p0, _, _ = peirce_projections(e + c)
            w_l61 = max(w_l61, _opdist(p00, p0))
    rep.add("joint projections sum to 1", w_sum, 1e-9, "sum_{i<=j} P_ij = 1")
    rep.add("P_ij(e_k)", w_pij, 1e-10, "P_ij(e_k) = delta_ik e_k if i = j, else 0")
    rep.add("sub-frame projections", w_sub, 1e-9, "joint projections of a sub-frame are sums of those of the frame")
    rep.add("Peirce multiplication", w_mult, 1e-9, "{V_ij, V_jk, V_kl} in V_il")
    rep.add("Peirce orthogonality", w_box, 1e-9, "V_ij □ V_pq = 0 for disjoint index pairs")
    rep.add("Peirce-0 of a sum", w_l61, 1e-9, "(V_0(e))_0(c) = V_0(e + c)")
    return rep


# -- Bergmann operators ---------------------------------------------------------


def bergmann_suite(space, samples: int = 100, seed=0, radius: float = 0.9, norm_samples: int | None = None) -> Report:
    rng = _rng(seed)
    rep = Report(f"Bergmann operators on {space}")
    w_loos = w_pow = w_sq = w_inv = w_baa = 0.0
    n_norm = samples if norm_samples is None else norm_samples
    for s in range(samples):
        a = random_element(space, rng, radius)
        definitional = bergmann(a, a)
        spec = bergmann_power(a, 1, "spectral")
        w_loos = max(w_loos, np.abs(spec.matrix - definitional.matrix).max())
        for t in (0.5, -0.5, -1):
            w_pow = max(w_pow, np.abs(bergmann_power(a, t, "spectral").matrix - bergmann_power(a, t, "dense").matrix).max())
        root = bergmann_power(a, 0.5)
        inv_root = bergmann_power(a, -0.5)
        w_sq = max(w_sq, np.abs((root @ root).matrix - definitional.matrix).max())
        w_inv = max(w_inv, np.abs((root @ inv_root).matrix - np.eye(space.dim)).max())
        if s < n_norm:
            n = jb_norm(a)
            est = jb_operator_norm(BergmannPower(a, -0.5).as_linop(), seed=s)
            w_baa = max(w_baa, abs(est - 1.0 / ((1 - n) * (1 + n))))
    rep.add("Loos form of B(a,a)", w_loos, 1e-8, "B(a,a) = sum (1-|l_i|^2)(1-|l_j|^2) P_ij")
    rep.add("spectral vs dense powers", w_pow, 1e-8, "sum (1-|l_i|^2)^t (1-|l_j|^2)^t P_ij = principal power of B(a,a)")
    rep.add("square root squared", w_sq, 1e-8, "(B(a,a)^{1/2})^2 = B(a,a)")
    rep.add("inverse square root", w_inv, 1e-8, "B(a,a)^{1/2} B(a,a)^{-1/2} = 1")
    rep.add("norm of B(a,a)^{-1/2}", w_baa, 1e-6, "||B(a,a)^{-1/2}|| = 1/(1-||a||^2)")
    return rep


# -- Moebius maps ---------------------------------------------------------------


def _orthogonal_pair(space, rng):
    fr = _random_frame(space, rng)
    if len(fr) < 2:
        return None
    k = len(fr)
    split = int(rng.integers(1, k))
    c = rng.uniform(0.05, 0.9, k) * np.exp(2j * np.pi * rng.uniform(size=k))
    u = fr.combination(c[:split])
    v = Frame(fr.tripotents[split:]).combination(c[split:])
    return u, v


def mobius_suite(space, samples: int = 100, seed=0, radius: float = 0.9, gab_samples: int | None = None,
                 pick_pairs: int = 1000) -> Report:
    rng = _rng(seed)
    rep = Report(f"Moebius maps on {space}")
    w_round = w_sum = w_y = w_gab = 0.0
    n_gab = samples if gab_samples is None else gab_samples
    for s in range(samples):
        a = random_element(space, rng, radius)
        z = random_element(space, rng, radius)
        w_round = max(w_round, jb_norm(mobius_inverse_apply(a, mobius_apply(a, z)) - z))
        pair = _orthogonal_pair(space, rng)
        if pair is not None:
            u, v = pair
            w_sum = max(w_sum, jb_norm(mobius_apply(u + v, z) - mobius_apply(u, mobius_apply(v, z))))
        r = float(rng.uniform(0.05, 0.95))
        x = random_element(space, rng, 1.0)
        w_y = max(w_y, jb_norm(mobius_apply(z, r * x) - kobayashi_ball_point(z, r, mobius_apply(r * z, x))))
        if s < n_gab:
            g = gab_ratio(a, z, seed=s)
            m = jb_norm(mobius_inverse_apply(z, a))
            want = 1.0 / ((1 - m) * (1 + m))
            w_gab = max(w_gab, abs(g - want) / want)
    rep.add("inverse", w_round, 1e-8, "g_{-a} o g_a = id")
    rep.add("orthogonal sums", w_sum, 1e-8, "g_{u+v} = g_u o g_v for orthogonal u, v")
    rep.add("ball parametrisation", w_y, 1e-8,
            "g_z(rx) = (1-r^2) B(rz,rz)^{-1/2} z + r B(z,z)^{1/2} B(rz,rz)^{-1/2} g_{rz}(x)")
    rep.add("Bergmann norm identity", w_gab, 1e-6, "1/(1-||g_{-z}(a)||^2) = ||B(a,a)^{-1/2} B(a,z) B(z,z)^{-1/2}|| (relative)")
    viol, worst = schwarz_pick_violations(space, pick_pairs, rng)
    rep.add("Schwarz-Pick violations", viol, 0, "holomorphic self-maps do not increase the Kobayashi distance",
            passed=viol == 0)
    return rep


def random_self_map(space, rng):
    """A random map expression built from Moebius maps, scalings and phases."""
    from .dynamics import Compose, LinearIsometry, Mobius, ScalarScale

    kind = int(rng.integers(0, 3))
    m = Mobius(random_element(space, rng, 0.9))
    if kind == 0:
        return m
    if kind == 1:
        return Compose(ScalarScale(float(rng.uniform(0.3, 1.0))), m)
    return Compose(Mobius(random_element(space, rng, 0.9)), Compose(LinearIsometry.phase(space, float(rng.uniform(0, 6.3))), m))


def kobayashi_pair_ratio(x: Element, y: Element) -> float:
    return jb_norm(mobius_inverse_apply(x, y))


def schwarz_pick_violations(space, pairs: int, rng, slack: float = 1e-9, maps: int = 10, radius: float = 0.95):
    """Count pairs with kappa(f x, f y) > kappa(x, y) + slack."""
    rng = _rng(rng)
    fs = [random_self_map(space, rng) for _ in range(maps)]
    bad = 0
    worst = -math.inf
    for n in range(pairs):
        f = fs[n % maps]
        x = random_element(space, rng, radius)
        y = random_element(space, rng, radius)
        try:
            d0 = math.atanh(kobayashi_pair_ratio(x, y))
            d1 = math.atanh(kobayashi_pair_ratio(f(x), f(y)))
        except (DomainError, ValueError):
            continue
        worst = max(worst, d1 - d0)
        if d1 > d0 + slack:
            bad += 1
    return bad, worst
