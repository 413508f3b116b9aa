"""Batch verification commands over serialized complexes and towers.

Each verb loads UTF-8 JSON files in the formats of the serialize
module, runs one check, and reports on standard output.  Exit code 0
means the property holds or the computation succeeded, 1 means the
property failed and the report carries a witness, 2 means the input
or command line could not be used.  Reports are deterministic, and
``--json`` switches to a machine-readable object whose integers are
decimal strings.
"""

from __future__ import annotations

import argparse
import json
import random

from .chains import (
    GradedMap,
    cone,
    find_null_homotopy,
    homology,
    is_contractible,
)
from .diagrams import nilpotency_degree
from .exact_linalg import Matrix, Ring, ShapeMismatch, ZZ, smith_normal_form
from .fuzz import random_complex, random_graded_map, random_reduced_ladder
from .ladder import check_an_local, check_bn_local, classify, factor_through_acyclic
from .orders import annihilator_exponent, homology_order, rational_acyclicity
from .serialize import (
    FormatError,
    InvalidObject,
    dump_blocks,
    dump_ring,
    load_any,
    load_complex,
    load_d0complex,
    load_d0morphism,
    load_dcomplex,
    load_graded_map,
    load_ring,
    load_scenario,
    loads,
)
from .splittings import (
    delta_differential,
    derive_splittings,
    invert_homotopy,
    t_differential_holds,
    t_operator,
)


def _read_payload(path: str) -> dict:
    with open(path, encoding="utf-8") as handle:
        text = handle.read()
    try:
        return loads(text)
    except FormatError as err:
        raise FormatError(f"{path}: {err}") from err


def _emit(args, code: int, lines, report: dict) -> int:
    if args.json:
        body = {"verb": args.verb, "exit": str(code)}
        body.update(report)
        print(json.dumps(body, sort_keys=True))
    else:
        for line in lines:
            print(line)
    return code


def _format_homology(ring: Ring, s) -> str:
    parts = []
    if ring.kind == "Q":
        if s.betti:
            parts.append("Q" if s.betti == 1 else f"Q^{s.betti}")
    elif ring.kind == "Zmod":
        if s.betti:
            name = f"Z/{ring.modulus}"
            parts.append(name if s.betti == 1 else f"({name})^{s.betti}")
        parts.extend(f"Z/{t}" for t in s.torsion)
    else:
        if s.betti:
            parts.append("Z" if s.betti == 1 else f"Z^{s.betti}")
        parts.extend(f"Z/{t}" for t in s.torsion)
    return " + ".join(parts) if parts else "0"


def _homology_payload(ring: Ring, table) -> dict:
    out = {}
    for n, s in sorted(table.items()):
        entry = {"betti": str(s.betti), "torsion": [str(t) for t in s.torsion]}
        entry["display"] = _format_homology(ring, s)
        out[str(n)] = entry
    return out


def _nontrivial(table) -> list:
    return [(n, s) for n, s in sorted(table.items()) if not s.is_trivial()]


# ---------------------------------------------------------------------------
# Verb handlers


def _cmd_verify(args) -> int:
    payload = _read_payload(args.file)
    try:
        kind, value = load_any(payload)
    except InvalidObject as err:
        return _emit(
            args, 1, [f"invalid: {err}"], {"verdict": "fail", "message": str(err)}
        )
    lines = []
    report = {"verdict": "pass", "kind": kind}
    if kind == "complex":
        lines.append(
            f"valid complex over {dump_ring(value.ring)}; ranks {value.describe()}"
        )
        report["ranks"] = {str(n): str(r) for n, r in value.ranks}
    elif kind == "map":
        chain = value.leibniz().is_zero()
        lines.append(f"valid graded map of degree {value.degree}")
        lines.append(f"chain map: {'yes' if chain else 'no'}")
        report["degree"] = str(value.degree)
        report["chain_map"] = "yes" if chain else "no"
    elif kind == "dcomplex":
        lines.append(
            f"valid diagram realization with {len(value.diagram.vertices)} vertices"
            f" and {len(value.diagram.edges)} edges"
        )
        report["vertices"] = str(len(value.diagram.vertices))
        report["edges"] = str(len(value.diagram.edges))
    elif kind == "d0complex":
        lines.append(
            f"valid tower with {value.top_index + 1} levels,"
            f" stabilization index {value.stabilization}"
        )
        report["levels"] = str(value.top_index + 1)
        report["stabilization"] = str(value.stabilization)
    elif kind == "morphism":
        lines.append(
            f"valid tower morphism across {value.source.top_index + 1} levels"
        )
        report["levels"] = str(value.source.top_index + 1)
    else:
        probe, target = value
        lines.append(
            f"valid splitting scenario: probe with {probe.top_index + 1} levels,"
            f" target with {target.top_index + 1} levels"
        )
        report["probe_levels"] = str(probe.top_index + 1)
        report["target_levels"] = str(target.top_index + 1)
    return _emit(args, 0, lines, report)


def _cmd_homology(args) -> int:
    c = load_complex(_read_payload(args.file))
    table = homology(c)
    nontrivial = _nontrivial(table)
    if nontrivial:
        lines = [f"H_{n} = {_format_homology(c.ring, s)}" for n, s in nontrivial]
    else:
        lines = ["acyclic"]
    report = {
        "verdict": "pass",
        "ring": dump_ring(c.ring),
        "homology": _homology_payload(c.ring, {n: s for n, s in nontrivial}),
    }
    return _emit(args, 0, lines, report)


def _cmd_homotopy(args) -> int:
    f = load_graded_map(_read_payload(args.file))
    witness = find_null_homotopy(f)
    if witness is None:
        return _emit(
            args,
            1,
            ["null-homotopic: no"],
            {"verdict": "fail", "null_homotopic": "no"},
        )
    degrees = ", ".join(str(n) for n, _ in witness.blocks) or "none"
    lines = ["null-homotopic: yes", f"witness blocks in degrees: {degrees}"]
    report = {
        "verdict": "pass",
        "null_homotopic": "yes",
        "witness": dump_blocks(witness),
    }
    return _emit(args, 0, lines, report)


def _cmd_cone(args) -> int:
    f = load_graded_map(_read_payload(args.file))
    folded = cone(f).complex
    table = homology(folded)
    nontrivial = _nontrivial(table)
    report = {
        "ring": dump_ring(folded.ring),
        "cone_ranks": {str(n): str(r) for n, r in folded.ranks},
        "homology": _homology_payload(folded.ring, {n: s for n, s in nontrivial}),
    }
    if not nontrivial:
        report["verdict"] = "pass"
        return _emit(
            args, 0, ["cone is acyclic; the map is a homology equivalence"], report
        )
    report["verdict"] = "fail"
    lines = ["cone has nonzero homology; the map is not a homology equivalence"]
    lines.extend(f"H_{n} = {_format_homology(folded.ring, s)}" for n, s in nontrivial)
    return _emit(args, 1, lines, report)


def _cmd_nilpotency(args) -> int:
    x = load_dcomplex(_read_payload(args.file))
    n = nilpotency_degree(x, args.max_n)
    if n is None:
        lines = [f"no degree found with composites up to length {args.max_n + 1}"]
        return _emit(args, 1, lines, {"verdict": "fail", "max_n": str(args.max_n)})
    return _emit(args, 0, [f"degree {n}"], {"verdict": "pass", "degree": str(n)})


def _cmd_classify(args) -> int:
    d = load_d0complex(_read_payload(args.file))
    n = args.n if args.n is not None else d.top_index
    verdict = classify(d, n)
    lines = [
        f"cut index {verdict.n}",
        f"constant up to homotopy from the cut: {'yes' if verdict.in_bn else 'no'}",
        f"cut level contractible as well: {'yes' if verdict.in_an else 'no'}",
        f"reduced descents: {'yes' if verdict.reduced else 'no'}",
    ]
    report = {
        "verdict": "pass",
        "n": str(verdict.n),
        "in_bn": "yes" if verdict.in_bn else "no",
        "in_an": "yes" if verdict.in_an else "no",
        "reduced": "yes" if verdict.reduced else "no",
    }
    return _emit(args, 0, lines, report)


def _cmd_bn_local(args) -> int:
    d = load_d0complex(_read_payload(args.file))
    n = args.n if args.n is not None else d.top_index
    rep = check_bn_local(d, n)
    report = {"n": str(n)}
    if rep.kernel_route is not None:
        report["kernel_route"] = "yes" if rep.kernel_route else "no"
    if rep.holds:
        report["verdict"] = "pass"
        return _emit(args, 0, [f"levels 0..{n} are all contractible"], report)
    failing = rep.failing_level
    table = homology(d.level(failing))
    lines = [f"level {failing} is not contractible"]
    lines.extend(
        f"H_{m} = {_format_homology(d.bimodule.base, s)}" for m, s in _nontrivial(table)
    )
    report["verdict"] = "fail"
    report["failing_level"] = str(failing)
    report["witness_homology"] = _homology_payload(
        d.bimodule.base, {m: s for m, s in _nontrivial(table)}
    )
    return _emit(args, 1, lines, report)


def _cmd_an_local(args) -> int:
    d = load_d0complex(_read_payload(args.file))
    if args.n is not None:
        n = args.n
    else:
        n = d.top_index - 1 if args.bound == "inclusive" else d.top_index
    rep = check_an_local(d, n, args.bound)
    report = {
        "n": str(n),
        "bound": rep.bound,
        "square_route": "yes" if rep.square_holds else "no",
    }
    if rep.holds:
        report["verdict"] = "pass"
        lines = [
            f"kernel ascents are equivalences through the {rep.bound} range at n = {n}",
            f"exact-square route agrees: {'yes' if rep.square_holds else 'no'}",
        ]
        return _emit(args, 0, lines, report)
    lines = [f"fails at m = {rep.failing_index}", "cone homology:"]
    ring = d.bimodule.base
    witness = rep.witness_homology or ()
    lines.extend(f"H_{m} = {_format_homology(ring, s)}" for m, s in witness)
    report["verdict"] = "fail"
    report["failing_m"] = str(rep.failing_index)
    report["cone_homology"] = _homology_payload(ring, dict(witness))
    return _emit(args, 1, lines, report)


def _cmd_factor(args) -> int:
    f = load_d0morphism(_read_payload(args.file))
    data = factor_through_acyclic(f, args.n)
    for i, g in enumerate(f.components):
        got = data.right.components[i] @ data.left.components[i]
        if got != g:
            raise AssertionError(f"factorization failed to reproduce level {i}")
    lines = [
        f"factored through a tower with {data.mid.top_index + 1} levels",
        "every middle level is contractible (witnessed)",
        "composite reproduces the map exactly",
    ]
    report = {
        "verdict": "pass",
        "mid_levels": str(data.mid.top_index + 1),
        "composite_exact": "yes",
    }
    return _emit(args, 0, lines, report)


def _cmd_tp_check(args) -> int:
    probe, target = load_scenario(_read_payload(args.file))
    s = derive_splittings(probe, target)
    lines = []
    results = {}
    ok = True
    room = s.top_index - 2
    for p in range(min(args.max_n, room) + 1):
        holds = t_differential_holds(s, p)
        vanishes = t_operator(s, p).map.is_zero()
        ok = ok and holds
        state = "holds" if holds else "FAILS"
        tail = "operator vanishes" if vanishes else "operator is nonzero"
        lines.append(f"p = {p}: differential relation {state}; {tail}")
        results[str(p)] = {
            "relation": "pass" if holds else "fail",
            "vanishes": "yes" if vanishes else "no",
        }
    if args.max_n > room:
        lines.append(
            f"p > {room} not expressible on a tower with {s.top_index + 1} levels"
        )
    report = {
        "verdict": "pass" if ok else "fail",
        "relations": results,
        "expressible_max": str(room),
    }
    return _emit(args, 0 if ok else 1, lines, report)


def _cmd_delta_check(args) -> int:
    probe, target = load_scenario(_read_payload(args.file))
    s = derive_splittings(probe, target)
    rng = random.Random(args.seed)
    f = random_graded_map(rng, s.total.complex, s.kernel, args.n, bound=2)
    once = delta_differential(s, f)
    twice = delta_differential(s, once)
    ok = twice.is_zero()
    lines = [
        f"seeded map of degree {args.n} (seed {args.seed})",
        f"twisted differential applied twice vanishes: {'yes' if ok else 'no'}",
        f"single application {'is zero' if once.is_zero() else 'is nonzero'}",
    ]
    report = {
        "verdict": "pass" if ok else "fail",
        "degree": str(args.n),
        "seed": str(args.seed),
        "square_zero": "yes" if ok else "no",
    }
    return _emit(args, 0 if ok else 1, lines, report)


def _cmd_invert(args) -> int:
    probe, target = load_scenario(_read_payload(args.file))
    s = derive_splittings(probe, target)
    rng = random.Random(args.seed)
    raw = random_graded_map(rng, s.total.complex, s.kernel, args.n + 1, bound=2)
    cycle = delta_differential(s, raw)
    preimage = invert_homotopy(s, s.total, cycle)
    again = delta_differential(s, preimage)
    if again != cycle:
        raise AssertionError("inversion failed to reproduce the seeded cycle")
    lines = [
        f"seeded cycle of degree {args.n} (seed {args.seed})"
        + (" is zero" if cycle.is_zero() else ""),
        "inversion reproduces the cycle exactly",
    ]
    report = {
        "verdict": "pass",
        "degree": str(args.n),
        "seed": str(args.seed),
        "cycle_zero": "yes" if cycle.is_zero() else "no",
    }
    return _emit(args, 0, lines, report)


def _cmd_order(args) -> int:
    c = load_complex(_read_payload(args.file))
    rep = homology_order(c)
    if rep.finite:
        return _emit(
            args,
            0,
            [f"order = {rep.order}"],
            {"verdict": "pass", "finite": "yes", "order": str(rep.order)},
        )
    table = homology(c)
    degrees = ", ".join(str(n) for n, s in sorted(table.items()) if s.betti)
    lines = ["homology is infinite; no finite order", f"free part in degrees: {degrees}"]
    return _emit(args, 1, lines, {"verdict": "fail", "finite": "no"})


def _cmd_annihilator(args) -> int:
    c = load_complex(_read_payload(args.file))
    rep = annihilator_exponent(c)
    if rep.exponent is None:
        lines = ["no finite exponent; homology is infinite"]
        return _emit(args, 1, lines, {"verdict": "fail", "exponent": "none"})
    lines = [
        f"exponent = {rep.exponent}",
        "witness solves dH = exponent times the identity",
    ]
    report = {
        "verdict": "pass",
        "exponent": str(rep.exponent),
        "witness": dump_blocks(rep.witness),
    }
    return _emit(args, 0, lines, report)


def _cmd_q_acyclic(args) -> int:
    c = load_complex(_read_payload(args.file))
    if rational_acyclicity(c):
        return _emit(
            args, 0, ["rationally acyclic: yes"], {"verdict": "pass", "acyclic": "yes"}
        )
    table = homology(c)
    degrees = ", ".join(str(n) for n, s in sorted(table.items()) if s.betti)
    lines = ["rationally acyclic: no", f"free homology in degrees: {degrees}"]
    return _emit(args, 1, lines, {"verdict": "fail", "acyclic": "no"})


def _divisibility_ok(diagonal) -> bool:
    for a, b in zip(diagonal, diagonal[1:]):
        if a == 0:
            if b != 0:
                return False
        elif b % a != 0:
            return False
    return True


def _cmd_fuzz(args) -> int:
    ring = load_ring(args.ring, "--ring")
    rng = random.Random(args.seed)
    count = args.n
    failures = []

    for i in range(count):
        rows, cols = rng.randint(0, 4), rng.randint(0, 4)
        m = Matrix.from_rows(
            ZZ, [[rng.randint(-9, 9) for _ in range(cols)] for _ in range(rows)]
        ) if rows else Matrix.zero(ZZ, 0, cols)
        snf = smith_normal_form(m)
        if snf.p @ m @ snf.q != snf.d:
            failures.append(f"smith instance {i}: factorization mismatch")
        if snf.p @ snf.pinv != Matrix.identity(ZZ, rows) or snf.q @ snf.qinv != Matrix.identity(ZZ, cols):
            failures.append(f"smith instance {i}: recorded inverses are wrong")
        if not _divisibility_ok(snf.diagonal):
            failures.append(f"smith instance {i}: diagonal divisibility broken")

    n_complexes = max(1, count // 2)
    for i in range(n_complexes):
        made = random_complex(rng, ring)
        c = made.complex
        c.validate()
        if homology(c) != made.expected:
            failures.append(f"complex instance {i}: homology differs from construction")
        if not is_contractible(cone(GradedMap.identity(c)).complex):
            failures.append(f"complex instance {i}: cone of the identity not contractible")

    n_towers = max(1, count // 5)
    for i in range(n_towers):
        tower = random_reduced_ladder(rng, ring, n_levels=3).complex
        rep = check_bn_local(tower, tower.top_index)
        direct = all(
            is_contractible(tower.level(j)) for j in range(tower.top_index + 1)
        )
        if rep.holds != direct:
            failures.append(f"tower instance {i}: locality verdict disagrees with levels")

    lines = [
        f"smith contract: {count} instances",
        f"complex invariants: {n_complexes} instances over {dump_ring(ring)}",
        f"tower locality agreement: {n_towers} instances",
    ]
    lines.extend(failures)
    lines.append("all invariants held" if not failures else f"{len(failures)} failures")
    report = {
        "verdict": "pass" if not failures else "fail",
        "seed": str(args.seed),
        "ring": dump_ring(ring),
        "instances": {
            "smith": str(count),
            "complexes": str(n_complexes),
            "towers": str(n_towers),
        },
        "failures": failures,
    }
    return _emit(args, 0 if not failures else 1, lines, report)


# ---------------------------------------------------------------------------
# Parser


def _seed(value: str) -> int:
    got = int(value)
    if not 0 <= got < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return got


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chainbench",
        description="Exact checks on serialized chain complexes and towers.",
    )
    sub = parser.add_subparsers(dest="verb", required=True, metavar="verb")

    def add(name, handler, help_text, needs_file=True):
        p = sub.add_parser(name, help=help_text)
        if needs_file:
            p.add_argument("file", help="UTF-8 JSON input file")
        p.add_argument("--json", action="store_true", help="machine-readable report")
        p.set_defaults(handler=handler)
        return p

    add("verify", _cmd_verify, "validate a serialized object of any supported kind")
    add("homology", _cmd_homology, "homology of a complex, one line per degree")

    add("homotopy", _cmd_homotopy, "solve for a null-homotopy of a chain map")
    add("cone", _cmd_cone, "mapping cone homology; passes when acyclic")

    p = add("nilpotency", _cmd_nilpotency, "least degree with long composites bounding")
    p.add_argument("--max-n", type=int, default=6, help="largest degree to try")

    p = add("classify", _cmd_classify, "tower membership verdicts at a cut index")
    p.add_argument("--n", type=int, default=None, help="cut index (default: top level)")

    p = add("bn-local", _cmd_bn_local, "contractibility of all levels through a cut")
    p.add_argument("--n", type=int, default=None, help="cut index (default: top level)")

    p = add("an-local", _cmd_an_local, "kernel-ascent equivalences over a range")
    p.add_argument("--n", type=int, default=None, help="range bound (default: largest legal)")
    p.add_argument(
        "--bound", choices=("strict", "inclusive"), default="inclusive",
        help="whether the bound index itself is checked",
    )

    p = add("factor", _cmd_factor, "factor a tower morphism through a contractible tower")
    p.add_argument("--n", type=int, required=True, help="cut index for the factorization")

    p = add("tp-check", _cmd_tp_check, "contraction-operator differential relations")
    p.add_argument("--max-n", type=int, default=4, help="largest operator index to check")

    p = add("delta-check", _cmd_delta_check, "twisted differential squares to zero")
    p.add_argument("--seed", type=_seed, default=0, help="seed for the probe map")
    p.add_argument("--n", type=int, default=0, help="degree of the probe map")

    p = add("invert", _cmd_invert, "invert the twisted differential on a seeded cycle")
    p.add_argument("--seed", type=_seed, default=0, help="seed for the probe map")
    p.add_argument("--n", type=int, default=0, help="degree of the seeded cycle")

    add("order", _cmd_order, "order of the total homology of an integer complex")
    add("annihilator", _cmd_annihilator, "least multiple of the identity that bounds")
    add("q-acyclic", _cmd_q_acyclic, "acyclicity after tensoring with the rationals")

    p = add("fuzz", _cmd_fuzz, "randomized invariant suite", needs_file=False)
    p.add_argument("--seed", type=_seed, default=0, help="seed for all instances")
    p.add_argument("--n", type=int, default=20, help="instance count")
    p.add_argument("--ring", default="Z", help="coefficients: Z, Q, or Z/<m>")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except FormatError as err:
        return _emit(args, 2, [f"input error: {err}"], {"verdict": "error", "message": str(err)})
    except InvalidObject as err:
        return _emit(args, 2, [f"invalid input: {err}"], {"verdict": "error", "message": str(err)})
    except OSError as err:
        return _emit(args, 2, [f"input error: {err}"], {"verdict": "error", "message": str(err)})
    except (ValueError, ShapeMismatch) as err:
        return _emit(args, 2, [f"unusable input: {err}"], {"verdict": "error", "message": str(err)})
    except AssertionError as err:
        return _emit(
            args, 1, [f"internal invariant violated: {err}"], {"verdict": "fail", "message": str(err)}
        )


if __name__ == "__main__":
    raise SystemExit(main())
