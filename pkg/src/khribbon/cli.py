"""Command line: ``khribbon kh | map | verify | construct``.

Every command prints one JSON report line on stdout.  Exit codes: 0 ok,
1 a check failed, 2 unparseable input, 3 invalid diagram, 4 invalid movie.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .constructions import build_companion, bundled_movie, load_diagram, trefoil_ears
from .diagram import DiagramError, MalformedCrossing, parse_diagram
from .khcomplex import (
    CheckFailed,
    HomologyF2,
    KhError,
    build_complex,
    induced_matrices,
    integral_homology,
    integral_records,
    khovanov_homology,
    reduced_complex,
    verify_shumakovitch,
    x_action,
)
from .movie import (
    MovieError,
    dumps_movie,
    induced_homology_map,
    is_ribbon,
    loads_movie,
    movie_chain_map,
    restrict_reduced,
    reverse,
)
from .steenrod import check_module_map_sq1, check_naturality_sq1, sq1, sq1_of_diagram

SCHEMA_VERSION = 1

EXIT_OK, EXIT_FAILED, EXIT_PARSE, EXIT_INVALID, EXIT_MOVIE = 0, 1, 2, 3, 4

BUNDLED = ("unknot", "trefoil", "figure8", "granny")


class _Abort(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _digest(text):
    return hashlib.sha256(text.encode()).hexdigest()


def _threads():
    try:
        return max(1, int(os.environ.get("KH_THREADS", "1")))
    except ValueError:
        return 1


def default_basepoint(d):
    """Diagram basepoint if set, else the smallest edge on the first component."""
    if d.basepoint is not None:
        return d.basepoint
    return min(d.components[0])


class Report:
    def __init__(self, argv):
        self.data = {
            "schema_version": SCHEMA_VERSION,
            "command": list(argv),
            "inputs": {},
            "checks": [],
            "timings": {},
            "result": None,
        }
        self._t0 = time.perf_counter()

    def input(self, name, text):
        self.data["inputs"][name] = _digest(text)

    def check(self, name, passed, detail=None, bidegree=None, move=None):
        rec = {"name": name, "passed": bool(passed)}
        if detail is not None:
            rec["detail"] = detail
        if bidegree is not None:
            rec["bidegree"] = list(bidegree)
        if move is not None:
            rec["move"] = move
        self.data["checks"].append(rec)
        return passed

    def timed(self, name, fn, *args):
        t = time.perf_counter()
        out = fn(*args)
        self.data["timings"][name] = round(time.perf_counter() - t, 6)
        return out

    @property
    def ok(self):
        return all(c["passed"] for c in self.data["checks"])

    def dumps(self):
        self.data["timings"]["total"] = round(time.perf_counter() - self._t0, 6)
        return json.dumps(self.data, sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------------------
# inputs


def _read(target):
    p = Path(target)
    if p.is_file():
        return p.read_text()
    return None


def load_target(target, report):
    """Return ``("diagram", d)`` or ``("movie", mv)`` for a file or bundled name."""
    text = _read(target)
    try:
        if text is None:
            if target in BUNDLED:
                d = load_diagram(target)
                report.input(target, d.serialize())
                return "diagram", d
            if target.startswith("companion_"):
                try:
                    n = int(target.split("_", 1)[1])
                except ValueError:
                    raise _Abort(EXIT_PARSE, f"bad bundle name {target!r}") from None
                mv = bundled_movie(n) if n in (1, 2, 3) else build_companion([trefoil_ears()] * n).movie
                report.input(target, dumps_movie(mv))
                return "movie", mv
            raise _Abort(EXIT_PARSE, f"no such file or bundled input: {target}")
        report.input(target, text)
        if text.lstrip().startswith("{"):
            return "movie", loads_movie(text)
        return "diagram", parse_diagram(text)
    except MalformedCrossing as exc:
        raise _Abort(EXIT_PARSE, str(exc)) from None
    except DiagramError as exc:
        raise _Abort(EXIT_INVALID, str(exc)) from None
    except MovieError as exc:
        raise _Abort(EXIT_MOVIE, str(exc)) from None


def _want(kind, obj, needed, target):
    if kind != needed:
        raise _Abort(EXIT_PARSE, f"{target} is a {kind}, expected a {needed}")
    return obj


def _matrix_records(mats):
    return [
        {"i": i, "j": j, "rank": m.rank(), "shape": list(m.shape), "matrix": m.to_dense()}
        for (i, j), m in sorted(mats.items())
    ]


# ---------------------------------------------------------------------------
# commands


def cmd_kh(args, report):
    kind, d = load_target(args.target, report)
    d = _want(kind, d, "diagram", args.target)
    bp = args.bp if args.bp is not None else default_basepoint(d)
    if bp not in d.edges:
        raise _Abort(EXIT_INVALID, f"basepoint {bp} is not an edge")
    ring = args.ring.upper()
    if ring == "F2":
        h = report.timed("homology", khovanov_homology, d, "F2", args.reduced, bp)
        report.data["result"] = {"ring": "F2", "reduced": args.reduced, "dims": h.records()}
    else:
        c = build_complex(d, "Z")
        if args.reduced:
            c = reduced_complex(c, bp)
        h = report.timed("homology", integral_homology, c)
        report.data["result"] = {"ring": "Z", "reduced": args.reduced, "groups": integral_records(h)}
    if args.reduced:
        report.data["result"]["basepoint"] = bp
    return EXIT_OK


def cmd_map(args, report):
    kind, mv = load_target(args.target, report)
    mv = _want(kind, mv, "movie", args.target)
    if args.reverse:
        mv = reverse(mv)
    f = report.timed("chain_map", movie_chain_map, mv)
    if args.reduced:
        bp = args.bp if args.bp is not None else default_basepoint(mv.start)
        f = restrict_reduced(f, bp)
    mats = report.timed("induced", induced_homology_map, f)
    hs = HomologyF2(f.source)
    ht = HomologyF2(f.target)
    di, dj = f.shift
    injective = all(m.rank() == m.ncols for m in mats.values())
    surjective = all(
        (mats[(i - di, j - dj)].rank() if (i - di, j - dj) in mats else 0) == n
        for (i, j), n in ht.dims.items()
    )
    report.data["result"] = {
        "moves": len(mv.moves),
        "shift": [di, dj],
        "source_dims": hs.records(),
        "target_dims": ht.records(),
        "maps": _matrix_records(mats),
        "injective": injective,
        "surjective": surjective,
    }
    return EXIT_OK


def _first_bad(mats, pred):
    for bd, m in sorted(mats.items()):
        if not pred(m):
            return bd
    return None


def _suite_shumakovitch(report, kind, obj, bp):
    ds = [obj] if kind == "diagram" else [obj.start, obj.end]
    for k, d in enumerate(ds):
        b = bp if bp is not None else default_basepoint(d)
        try:
            verify_shumakovitch(d, b)
            report.check(f"shumakovitch[{k}]", True)
        except CheckFailed as exc:
            report.check(f"shumakovitch[{k}]", False, str(exc), exc.bidegree)


def _suite_ribbon(report, kind, mv, bp):
    if kind != "movie":
        report.check("ribbon", False, "ribbon suite needs a movie")
        return
    report.check("no_deaths", is_ribbon(mv))
    report.check("euler_char", mv.euler_char == 0, f"chi = {mv.euler_char}")
    bp = bp if bp is not None else default_basepoint(mv.start)
    f = movie_chain_map(mv)
    g = movie_chain_map(reverse(mv))
    report.check("chain_map", f.is_chain_map() and g.is_chain_map())
    for tag, ff, gg in (("", f, g), ("reduced_", restrict_reduced(f, bp), restrict_reduced(g, bp))):
        mats = induced_homology_map(ff)
        bad = _first_bad(mats, lambda m: m.rank() == m.ncols)
        report.check(f"{tag}injective", bad is None, bidegree=bad)
        back = induced_homology_map(ff.compose(gg))
        bad = _first_bad(back, lambda m: m == m.identity(m.nrows))
        report.check(f"{tag}left_inverse", bad is None, bidegree=bad)
    hs, ht = HomologyF2(f.source), HomologyF2(f.target)
    lhs = induced_matrices(f.compose(x_action(f.target, bp)), hs, ht)
    rhs = induced_matrices(x_action(f.source, bp).compose(f), hs, ht)
    bad = None
    for bd in sorted(set(lhs) | set(rhs)):
        a, b = lhs.get(bd), rhs.get(bd)
        if a is None or b is None:
            if not (a or b).is_zero():
                bad = bd
                break
        elif a != b:
            bad = bd
            break
    report.check("x_module_map", bad is None, bidegree=bad)


def _suite_steenrod(report, kind, obj, bp):
    ds = [obj] if kind == "diagram" else [obj.start, obj.end]
    for k, d in enumerate(ds):
        b = bp if bp is not None else default_basepoint(d)
        s = sq1_of_diagram(d)
        report.check(f"sq1_squared_zero[{k}]", s.squares_to_zero())
        again = sq1(build_complex(d, "Z"), seed=k + 1)
        bad = next((bd for bd in sorted(s.matrices) if again.matrices[bd] != s.matrices[bd]), None)
        report.check(f"sq1_lift_independent[{k}]", bad is None, bidegree=bad)
        report.check(f"sq1_module_map[{k}]", check_module_map_sq1(d, b))
        if kind == "movie":
            nz = s.nonzero()
            report.check(f"sq1_nonzero[{k}]", bool(nz), detail=f"nonzero at {[list(x) for x in nz]}")
    if kind == "movie":
        report.check("sq1_naturality", check_naturality_sq1(obj))


SUITES = {
    "shumakovitch": _suite_shumakovitch,
    "ribbon": _suite_ribbon,
    "steenrod": _suite_steenrod,
}


def cmd_verify(args, report):
    kind, obj = load_target(args.target, report)
    names = list(SUITES) if args.suite == "all" else [args.suite]
    if args.suite == "all" and kind == "diagram":
        names.remove("ribbon")
    # suites write to private reports so that the merged order is fixed
    subs = [Report([]) for _ in names]

    def run(k):
        t = time.perf_counter()
        SUITES[names[k]](subs[k], kind, obj, args.bp)
        return time.perf_counter() - t

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        spent = list(pool.map(run, range(len(names))))
    for name, sub, t in zip(names, subs, spent):
        for c in sub.data["checks"]:
            c["suite"] = name
            report.data["checks"].append(c)
        report.data["timings"][name] = round(t, 6)
    report.data["result"] = {"suites": names, "passed": report.ok}
    return EXIT_OK if report.ok else EXIT_FAILED


def cmd_construct(args, report):
    if args.n < 0:
        raise _Abort(EXIT_PARSE, "n must be non-negative")
    from .constructions import trivial_tangle

    tangles = [trefoil_ears()] * args.n if args.n else [trivial_tangle()]
    b = report.timed("build", build_companion, tangles)
    files = {
        f"composite_{args.n}.pd": b.composite.serialize() + "\n",
        f"companion_{args.n}.pd": b.companion.serialize() + "\n",
        f"companion_{args.n}.movie": dumps_movie(b.movie),
    }
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            (out / name).write_text(text)
    report.data["result"] = {
        "n": args.n,
        "basepoint": b.basepoint,
        "composite_crossings": b.composite.n_crossings,
        "companion_crossings": b.companion.n_crossings,
        "files": {k: _digest(v) for k, v in files.items()},
        "composite": b.composite.serialize(),
        "companion": b.companion.serialize(),
    }
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="khribbon", description="Khovanov homology workbench")
    sub = p.add_subparsers(dest="cmd", required=True)

    kh = sub.add_parser("kh", help="Khovanov homology of a diagram")
    kh.add_argument("target", help="PD file or bundled name")
    kh.add_argument("--ring", choices=["f2", "z"], default="f2")
    kh.add_argument("--reduced", action="store_true")
    kh.add_argument("--bp", type=int, default=None)
    kh.set_defaults(fn=cmd_kh)

    mp = sub.add_parser("map", help="homology map of a movie")
    mp.add_argument("target", help="movie file or companion_<n>")
    mp.add_argument("--reverse", action="store_true", help="use the reversed movie")
    mp.add_argument("--reduced", action="store_true")
    mp.add_argument("--bp", type=int, default=None)
    mp.set_defaults(fn=cmd_map)

    vf = sub.add_parser("verify", help="run a check suite")
    vf.add_argument("suite", choices=["shumakovitch", "ribbon", "steenrod", "all"])
    vf.add_argument("target", help="PD file, movie file or bundled name")
    vf.add_argument("--bp", type=int, default=None)
    vf.set_defaults(fn=cmd_verify)

    co = sub.add_parser("construct", help="companion bundle for n trefoil summands")
    co.add_argument("n", type=int)
    co.add_argument("--out", default=None, help="directory for the bundle files")
    co.set_defaults(fn=cmd_construct)
    return p


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    report = Report(argv)
    try:
        code = args.fn(args, report)
    except _Abort as exc:
        code = exc.code
        report.data["error"] = str(exc)
    except MovieError as exc:
        code = EXIT_MOVIE
        report.data["error"] = str(exc)
    except (DiagramError, KhError) as exc:
        code = EXIT_INVALID
        report.data["error"] = str(exc)
    report.data["exit_code"] = code
    print(report.dumps())
    return code


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
