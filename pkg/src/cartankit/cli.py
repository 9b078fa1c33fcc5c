"""Command-line interface: ``cartankit <command> [options]``.

Exit codes: 0 all checks passed, 1 an invariant failed, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .bergmann import kobayashi_distance, mobius_apply
from .checks import Report, axiom_suite, bergmann_suite, mobius_suite, peirce_suite
from .dynamics import boundary_component, iterate_orbit, map_from_dict, wolff_data
from .errors import CartanError, FixedPointError
from .horoball import big_F, horoball_contains, horoball_params
from .peirce import spectral_decompose
from .triple import Element, TripleSpace, jb_norm, random_element

log = logging.getLogger("cartankit")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# -- output ---------------------------------------------------------------------


def dumps(obj, digits: int = 17) -> str:
    """JSON text with floats at a fixed number of significant digits."""

    def enc(o):
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            x = float(o)
            if math.isnan(x) or math.isinf(x):
                return json.dumps(str(x))
            return format(x, f".{digits}g")
        if isinstance(o, str):
            return json.dumps(o)
        if isinstance(o, dict):
            return "{" + ", ".join(f"{json.dumps(str(k))}: {enc(v)}" for k, v in o.items()) + "}"
        if isinstance(o, (list, tuple)):
            return "[" + ", ".join(enc(v) for v in o) + "]"
        raise TypeError(f"cannot serialise {type(o).__name__}")

    return enc(obj)


def _emit(text: str, out: str | None):
    if out:
        try:
            with open(out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise UsageError(f"cannot write {out}: {exc}") from exc
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def _load_element(path: str) -> Element:
    data = _load_json(path)
    try:
        return Element.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{path} does not describe an element: {exc}") from exc


def _load_map(path: str):
    data = _load_json(path)
    try:
        return map_from_dict(data.get("map", data))
    except CartanError as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _space(text: str | None) -> TripleSpace:
    if not text:
        raise UsageError("--space is required")
    try:
        return TripleSpace.parse(text)
    except (CartanError, ValueError) as exc:
        raise UsageError(f"bad --space {text!r}: {exc}") from exc


def _spaces(text: str | None) -> list[TripleSpace]:
    if not text:
        raise UsageError("--space is required")
    return [_space(t) for t in text.split(",")]


def _complex_list(z: Element):
    return [[float(v.real), float(v.imag)] for v in z.coords]


# -- commands -----------------------------------------------------------------


def _run_suite(job):
    name, space_text, kw = job
    space = TripleSpace.parse(space_text)
    fn = {"axioms": axiom_suite, "peirce": peirce_suite, "bergmann": bergmann_suite, "mobius": mobius_suite}[name]
    return fn(space, **kw)


def _map_jobs(jobs, parallel: int):
    if parallel and parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(_run_suite, jobs))
    return [_run_suite(j) for j in jobs]


def _collect(report: Report, parts):
    for r in parts:
        for x in r.records:
            report.add(f"{r.title}: {x.name}", x.measured, x.tolerance, x.identity, x.passed)


def cmd_axioms(args) -> int:
    jobs = [("axioms", str(s), {"samples": args.samples, "seed": args.seed}) for s in _spaces(args.space)]
    report = Report("axioms")
    _collect(report, _map_jobs(jobs, args.parallel))
    _emit(dumps(report.to_dict()), args.out)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_report(args) -> int:
    jobs = []
    for s in _spaces(args.space):
        n = args.samples
        jobs += [
            ("axioms", str(s), {"samples": n, "seed": args.seed}),
            ("peirce", str(s), {"samples": max(1, n // 10), "seed": args.seed}),
            ("bergmann", str(s), {"samples": max(1, n // 4), "seed": args.seed}),
            ("mobius", str(s), {"samples": max(1, n // 4), "seed": args.seed, "pick_pairs": n}),
        ]
    report = Report("report")
    _collect(report, _map_jobs(jobs, args.parallel))
    _emit(dumps(report.to_dict()), args.out)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_spectral(args) -> int:
    if args.element:
        z = _load_element(args.element)
    else:
        z = random_element(_space(args.space), args.seed, 1.0)
    d = spectral_decompose(z)
    problems = d.validate(args.tol)
    out = {
        "space": str(z.space),
        "norm": jb_norm(z),
        "coefficients": [float(a) for a in d.coefficients],
        "tripotents": [_complex_list(e) for e in d.tripotents],
        "problems": problems,
        "status": "pass" if not problems else "fail",
    }
    _emit(dumps(out), args.out)
    return EXIT_OK if not problems else EXIT_FAIL


def cmd_distance(args) -> int:
    x, y = _load_element(args.x), _load_element(args.y)
    _emit(format(kobayashi_distance(x, y), ".17g"), args.out)
    return EXIT_OK


def cmd_mobius(args) -> int:
    a, z = _load_element(args.a), _load_element(args.z)
    w = mobius_apply(a, z)
    _emit(dumps(w.to_dict()), args.out)
    return EXIT_OK


def _wolff(f, args):
    space = TripleSpace.parse(args.space) if getattr(args, "space", None) else None
    return wolff_data(f, K=args.K, space=space)


def cmd_wolff(args) -> int:
    f = _load_map(args.map)
    try:
        wd = _wolff(f, args)
    except FixedPointError as exc:
        _emit(dumps({"status": "fail", "error": "fixed_point", "message": str(exc)}), args.out)
        return EXIT_FAIL
    out = {
        "status": "pass",
        "space": str(wd.xi.space),
        "xi": wd.xi.to_dict(),
        "xi_norm": jb_norm(wd.xi),
        "boundary_gap": 1.0 - jb_norm(wd.points[-1]),
        "sigmas": list(wd.sigmas.sigmas),
        "frame": [e.to_dict() for e in wd.frame.tripotents],
        "alpha_last": wd.alphas[-1],
        "max_residual": max(wd.residuals),
        "max_iterations": max(wd.iterations),
    }
    _emit(dumps(out), args.out)
    return EXIT_OK


def _horoball_sample(job):
    f_dict, space_text, K, lam, seeds = job
    f = map_from_dict(f_dict)
    space = TripleSpace.parse(space_text)
    wd = wolff_data(f, K=K, space=space)
    p = horoball_params(wd.frame, wd.sigmas.sigmas, lam)
    seq = wd.sequence
    rows = []
    for s in seeds:
        x = random_element(space, s, 0.999)
        F = big_F(x, seq).value
        inside_h = F < 1.0 / lam
        rows.append((F, inside_h, horoball_contains(p, x), big_F(f(x), seq).value if inside_h else None))
    return rows


def cmd_horoball(args) -> int:
    f = _load_map(args.map)
    try:
        wd = _wolff(f, args)
    except FixedPointError as exc:
        _emit(dumps({"status": "fail", "error": "fixed_point", "message": str(exc)}), args.out)
        return EXIT_FAIL
    lam = args.lam
    p = horoball_params(wd.frame, wd.sigmas.sigmas, lam)
    space = wd.xi.space
    seeds = [args.seed * 1_000_003 + i for i in range(args.samples)]
    chunks = [seeds[i::max(1, args.parallel)] for i in range(max(1, args.parallel))]
    jobs = [(f.to_dict(), str(space), args.K, lam, c) for c in chunks]
    if args.parallel and args.parallel > 1:
        with ProcessPoolExecutor(max_workers=args.parallel) as pool:
            parts = list(pool.map(_horoball_sample, jobs))
    else:
        parts = [_horoball_sample(j) for j in jobs]
    rows = [r for part in parts for r in part]
    band = 1e-3
    counted = agree = violations = 0
    for F, inside_h, inside_s, F_image in rows:
        if inside_h and not F_image < 1.0 / lam + 1e-9:
            violations += 1
        if abs(F * lam - 1.0) > band:
            counted += 1
            agree += inside_h == inside_s
    rate = agree / counted if counted else 1.0
    ok = violations == 0 and rate >= 0.999
    out = {
        "status": "pass" if ok else "fail",
        "lambda": lam,
        "frame": [e.to_dict() for e in p.frame.tripotents],
        "sigmas": list(p.sigmas),
        "center": p.center.to_dict(),
        "samples": len(rows),
        "compared": counted,
        "agreement_rate": rate,
        "invariance_violations": violations,
    }
    _emit(dumps(out), args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_iterate(args) -> int:
    f = _load_map(args.map)
    x0 = _load_element(args.x0)
    comp = None
    try:
        comp = boundary_component(wolff_data(f, K=args.K, space=x0.space).tripotent)
    except FixedPointError:
        log.info("map has an interior fixed point; slice deviations left empty")
    rec = iterate_orbit(f, x0, args.n, comp)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["n"]
    for k in range(x0.space.dim):
        header += [f"re{k}", f"im{k}"]
    w.writerow(header + ["one_minus_norm", "slice_deviation"])
    g = lambda v: format(float(v), ".17g")  # noqa: E731
    for n, pt in enumerate(rec.points):
        row = [n]
        for c in pt.coords:
            row += [g(c.real), g(c.imag)]
        row.append(g(rec.boundary_gaps[n]))
        row.append(g(rec.slice_deviations[n]) if rec.slice_deviations else "")
        w.writerow(row)
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cartankit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, space=False, samples=None):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", type=float, default=1e-8)
        sp.add_argument("--out", default=None, help="write output here instead of stdout")
        sp.add_argument("--parallel", type=int, default=0, metavar="N", help="worker processes for sampling")
        if space:
            sp.add_argument("--space", default=None, help='e.g. "disc+disc" or "rect:3x2+spin:5"; comma separates runs')
        if samples is not None:
            sp.add_argument("--samples", type=int, default=samples)

    s = sub.add_parser("axioms", help="triple product axiom suite")
    common(s, space=True, samples=200)
    s.set_defaults(func=cmd_axioms)

    s = sub.add_parser("report", help="all identity checks on one or more spaces")
    common(s, space=True, samples=100)
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("spectral", help="spectral decomposition of an element")
    common(s, space=True)
    s.add_argument("element", nargs="?", help="element JSON (random element of --space if omitted)")
    s.set_defaults(func=cmd_spectral)

    s = sub.add_parser("distance", help="Kobayashi distance of two points")
    common(s)
    s.add_argument("x")
    s.add_argument("y")
    s.set_defaults(func=cmd_distance)

    s = sub.add_parser("mobius", help="Moebius transformation g_a(z)")
    common(s)
    s.add_argument("a")
    s.add_argument("z")
    s.set_defaults(func=cmd_mobius)

    for name, func in (("wolff", cmd_wolff), ("horoball", cmd_horoball), ("iterate", cmd_iterate)):
        s = sub.add_parser(name)
        common(s, space=True, samples=1000 if name == "horoball" else None)
        s.add_argument("--map", required=True, help="map expression JSON")
        s.add_argument("--K", type=int, default=30, help="length of the fixed point schedule")
        if name == "horoball":
            s.add_argument("--lambda", dest="lam", type=float, default=1.0)
        if name == "iterate":
            s.add_argument("--x0", required=True, help="start point JSON")
            s.add_argument("--n", type=int, default=100)
        s.set_defaults(func=func)
    return p


def _setup_logging():
    level = os.environ.get("CARTANKIT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "tol", 1.0) <= 0:
        parser.error("--tol must be positive")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"cartankit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CartanError as exc:
        print(f"cartankit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
