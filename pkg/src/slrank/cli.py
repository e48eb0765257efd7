"""Experiment runner: every module behind a reproducible subcommand.

Outputs are written atomically, carry the seed, and are byte-identical for
identical configuration and seed.  Exit codes: 0 all assertions pass,
1 assertion failure, 2 invalid input, 3 resource cap exceeded.

A plain-text config file of key=value lines may supply defaults for any
flag (``--config``); explicit command-line flags win.  The environment
variable SLRANK_CAP overrides the group-order and matrix-size caps.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import __version__
from . import concentration as cc
from . import embed as em
from . import folner as fo
from . import groups as gr
from . import matgf as mg
from .errors import NumericError, ResourceCapError, UsageError
from .field import (
    FieldCtx,
    PrimePower,
    build_tower,
    validate_conjugation,
    validate_field_axioms,
)


@dataclass
class RunConfig:
    """Resolved invocation: subcommand, parameters, output destination."""

    command: str
    params: dict
    out: Optional[str]
    fmt: str
    seed: int


@dataclass
class Payload:
    kind: str                      # "csv" or "json"
    header: list = dc_field(default_factory=list)
    rows: list = dc_field(default_factory=list)
    obj: dict = dc_field(default_factory=dict)
    method: str = ""


def _env_cap(default: int) -> int:
    raw = os.environ.get("SLRANK_CAP")
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise UsageError(f"SLRANK_CAP must be an integer, got {raw!r}") from exc


def _field_for(q: int) -> FieldCtx:
    pp = PrimePower.from_q(q)
    return FieldCtx(pp.p, pp.h)


def _fraction(text) -> Fraction:
    if isinstance(text, Fraction):
        return text
    return Fraction(str(text))


# ---------------------------------------------------------------------------
# subcommand runners: each returns (ok, Payload)


def run_field_check(args) -> tuple[bool, Payload]:
    rng = np.random.default_rng(args.seed)
    tower = build_tower(args.q, args.depth)
    levels = []
    ok = True
    for k in range(tower.depth + 1):
        F = tower.field(k)
        axioms = validate_field_axioms(F, rng)
        entry = {"level": k, "q": F.q, "axioms": axioms}
        if k > 0:
            ext = tower.levels[k - 1]
            entry["alpha"] = ext.alpha
            entry["beta"] = ext.beta
            entry["irreducibility_method"] = ext.method
            entry["conjugation"] = validate_conjugation(ext)
            ok = ok and entry["conjugation"].get("ok", True)
        ok = ok and axioms["ok"]
        levels.append(entry)
    rebuilt = build_tower(args.q, args.depth)
    deterministic = all(
        (a.alpha, a.beta) == (b.alpha, b.beta)
        for a, b in zip(tower.levels, rebuilt.levels)
    )
    ok = ok and deterministic
    obj = {
        "q": args.q,
        "depth": args.depth,
        "ground_field": json.loads(tower.ground.to_json()),
        "levels": levels,
        "deterministic": deterministic,
        "ok": ok,
    }
    return ok, Payload("json", obj=obj, method="tower")


def run_embed_verify(args) -> tuple[bool, Payload]:
    rng = np.random.default_rng(args.seed)
    tower = build_tower(args.q, args.m)
    top = tower.field(args.m)
    dim = 2 ** args.n
    failures = 0
    max_disc = 0
    for _ in range(args.trials):
        g = mg.sample_sl(dim, top, rng)
        h = mg.sample_sl(dim, top, rng)
        lg = em.chain_embed(g.mat, tower)
        lh = em.chain_embed(h.mat, tower)
        lp = em.chain_embed(mg.mmul(g.mat, h.mat), tower)
        if lp.elem.mat != mg.mmul(lg.elem.mat, lh.elem.mat):
            failures += 1
        if mg.det(lg.elem.mat) != 1:
            failures += 1
        # per-stage rank doubling on the difference
        diff = mg.msub(g.mat, h.mat)
        r = mg.rank(diff)
        stage = diff
        ok_stage = True
        for _k in range(args.m):
            stage = em.quad_embed(stage)
            r2 = mg.rank(stage)
            disc = abs(r2 - 2 * r)
            max_disc = max(max_disc, disc)
            if disc:
                ok_stage = False
            r = r2
        if not ok_stage:
            failures += 1
    ok = failures == 0
    obj = {
        "config": {"q": args.q, "n": args.n, "m": args.m,
                   "trials": args.trials, "seed": args.seed},
        "trials": args.trials,
        "failures": failures,
        "max_rank_discrepancy": max_disc,
        "ok": ok,
    }
    return ok, Payload("json", obj=obj, method="chain-embed")


def run_diameter(args) -> tuple[bool, Payload]:
    rng = np.random.default_rng(args.seed)
    field = _field_for(args.q)
    prof = cc.chain_profile(args.n, field, args.samples, rng)
    rows = [
        [args.n, args.q, i + 1, str(a), args.samples]
        for i, a in enumerate(prof.diameters)
    ]
    ok = prof.failures == 0
    payload = Payload(
        "csv",
        header=["n", "q", "level", "diameter_bound", "samples"],
        rows=rows,
        method="stabilizer-reduce",
    )
    payload.obj = {"length_bound": prof.length_bound, "failures": prof.failures}
    return ok, payload


def run_chartab(args) -> tuple[bool, Payload]:
    field = _field_for(args.q)
    G = gr.enumerate_group(args.n, field, cap=_env_cap(gr.DEFAULT_ORDER_CAP))
    table = gr.character_table(G, seed=args.seed)
    obj = gr.chartab_to_json(G, table)
    obj["ok"] = True
    return True, Payload("json", obj=obj, method="dixon-numeric")


def run_gluck(args) -> tuple[bool, Payload]:
    field = _field_for(args.q)
    G = gr.enumerate_group(args.n, field, cap=_env_cap(gr.DEFAULT_ORDER_CAP))
    table = gr.character_table(G, seed=args.seed)
    try:
        report = gr.gluck_check(G, table)
        ok = True
    except NumericError:
        return False, Payload("json", obj={"ok": False}, method="dixon-numeric")
    rows = []
    cl = table.classes
    for k, cmax in report.per_class:
        rep_el = mg.sl_element(G.matrix(cl.reps[k]), check=False)
        delta, _ = mg.central_distance(rep_el)
        rows.append([
            args.q, args.n, _mat_line(G.matrix(cl.reps[k])), str(delta),
            "gluck_max_ratio", repr(cmax),
        ])
    payload = Payload(
        "csv",
        header=["q", "n", "class_rep", "delta", "metric", "value"],
        rows=rows,
        method="dixon-numeric",
    )
    return ok, payload


def run_covering(args) -> tuple[bool, Payload]:
    field = _field_for(args.q)
    G = gr.enumerate_group(args.n, field, cap=_env_cap(gr.DEFAULT_ORDER_CAP))
    classes = gr.conjugacy_classes(G)
    rows = []
    ok = True
    for k in range(classes.n_classes):
        m = gr.covering_number(G, classes, k)
        rep_el = mg.sl_element(G.matrix(classes.reps[k]), check=False)
        delta, _ = mg.central_distance(rep_el)
        central = classes.is_central(k)
        if central and m is not None:
            ok = False
        if not central and m is None:
            ok = False
        rows.append([
            args.q, args.n, _mat_line(G.matrix(classes.reps[k])), str(delta),
            "covering_number", "" if m is None else m,
        ])
    payload = Payload(
        "csv",
        header=["q", "n", "class_rep", "delta", "metric", "value"],
        rows=rows,
        method="class-product-support",
    )
    return ok, payload


def run_pdf_lemma(args) -> tuple[bool, Payload]:
    rng = np.random.default_rng(args.seed)
    field = _field_for(args.q)
    G = gr.enumerate_group(args.n, field, cap=_env_cap(gr.DEFAULT_ORDER_CAP))
    table = gr.character_table(G, seed=args.seed)
    classes = table.classes
    noncentral = [k for k in range(classes.n_classes) if not classes.is_central(k)]
    rows = []
    ok = True
    applicable_count = 0
    for i in range(args.count):
        base = gr.random_pdf(G, rng)
        t = float(rng.uniform(0.0, 0.4))
        psi = gr.mix_pdfs([(1.0 - t, gr.trivial_pdf(G)), (t, base)])
        g_cls = int(rng.choice(noncentral))
        g_id = classes.reps[g_cls]
        eps = gr.premise_epsilon(G, psi, g_id) + 1e-9
        report = gr.pdf_lemma_check(G, table, psi, g_id, eps, rng=rng)
        passed = report.passed()
        ok = ok and passed
        applicable_count += int(report.applicable)
        rows.append([
            i, report.applicable, passed, repr(report.epsilon), repr(report.lam),
            repr(report.lam_lower), repr(report.chi_dev_max), repr(report.t),
            repr(report.density), report.factorization_ok,
            repr(report.star_max_violation), repr(report.conclusion_max),
            repr(report.conclusion_bound),
        ])
    ok = ok and applicable_count > 0
    payload = Payload(
        "csv",
        header=["index", "applicable", "passed", "epsilon", "lambda",
                "lambda_lower", "chi_dev_max", "chi_dev_bound", "density",
                "factorization_ok", "star_violation", "conclusion_max",
                "conclusion_bound"],
        rows=rows,
        method="conjugation-average",
    )
    return ok, payload


def run_levy(args) -> tuple[bool, Payload]:
    rng = np.random.default_rng(args.seed)
    field = _field_for(args.q)
    r_list = (
        [_fraction(tok) for tok in args.r_list.split(",")]
        if args.r_list
        else list(cc.DEFAULT_R_GRID)
    )
    report = cc.lipschitz_concentration(
        args.n, field, args.f, r_list, args.samples, rng,
        cert_pairs=args.cert_pairs,
    )
    rows = [
        [row.n, row.q, str(row.r), repr(row.bound), repr(row.empirical),
         repr(row.stderr), row.samples, args.seed]
        for row in report.rows
    ]
    ok = not report.violations
    payload = Payload(
        "csv",
        header=["n", "q", "r_or_eps", "bound", "empirical", "stderr",
                "samples", "seed"],
        rows=rows,
        method=f"lipschitz:{args.f}",
    )
    payload.obj = {"median": str(report.median)}
    return ok, payload


def run_ramsey(args) -> tuple[bool, Payload]:
    rng = np.random.default_rng(args.seed)
    field = _field_for(args.q)
    cover = cc.uniform_cover(args.m, _fraction(args.eps))
    F = [mg.sample_sl(args.n, field, rng).mat for _ in range(args.k)]
    report = cc.ramsey_search(args.n, field, cover, F, args.trials, rng,
                              max_attempts=args.max_attempts)
    ok = True
    if report.bound_applies:
        ok = (
            report.successes == report.trials
            and report.good_freq >= report.good_bound - 3.0 * report.good_stderr
        )
    rows = [[
        report.n, report.q, str(report.eps), repr(report.good_bound),
        repr(report.good_freq), repr(report.good_stderr),
        report.total_samples, args.seed,
    ]]
    payload = Payload(
        "csv",
        header=["n", "q", "r_or_eps", "bound", "empirical", "stderr",
                "samples", "seed"],
        rows=rows,
        method="functional-cover",
    )
    payload.obj = {
        "successes": report.successes,
        "trials": report.trials,
        "threshold": report.threshold,
        "bound_applies": report.bound_applies,
        "mean_samples_to_success": report.mean_samples_to_success,
    }
    return ok, payload


def _parse_group(text: str) -> fo.FolnerSpec:
    if text == "heisenberg":
        return fo.FolnerSpec(fo.heisenberg())
    if text.startswith("z:"):
        return fo.FolnerSpec(fo.free_abelian(int(text.split(":", 1)[1])))
    raise UsageError(f"unknown group {text!r} (use z:<d> or heisenberg)")


def _parse_coded(text: str) -> tuple:
    return tuple(int(t) for t in text.split(","))


def _parse_ring(text: str, field) -> fo.GroupRingElement:
    coeffs = {}
    for entry in text.split(";"):
        entry = entry.strip()
        if not entry:
            continue
        coeff_text, support_text = entry.split("@", 1)
        coeffs[tuple(int(t) for t in support_text.split(","))] = int(coeff_text)
    return fo.GroupRingElement(field, coeffs)


def run_folner(args) -> tuple[bool, Payload]:
    spec = _parse_group(args.group)
    field = _field_for(args.q)
    cap = _env_cap(fo.FOLNER_CAP_GF2 if args.q == 2 else fo.FOLNER_CAP_GENERIC)
    rows = []
    ok = True
    if args.ring:
        elem = _parse_ring(args.ring, field)
        for n in range(1, args.levels + 1):
            N = spec.size(n)
            lsize = len(fo.l_set(spec, elem.support, n))
            nr = fo.normalized_rank(elem, spec, n, cap=cap)
            if not elem.is_zero() and spec.group.kind == "free-abelian":
                ok = ok and nr >= Fraction(lsize, N)
            rows.append([n, N, lsize, int(nr * N), str(nr)])
        method = "ring-rep"
    elif args.elements and len(args.elements) == 2:
        g, h = (_parse_coded(t) for t in args.elements)
        profile = fo.discreteness_profile(g, h, spec, args.levels, field, cap=cap)
        for n, dist in enumerate(profile, start=1):
            N = spec.size(n)
            rows.append([n, N, fo.l_set_size(spec, g, n),
                         int(dist * N), str(dist)])
        method = "discreteness-profile"
    else:
        elems = [_parse_coded(t) for t in (args.elements or ["1"])]
        if len(elems) != 1:
            raise UsageError("give one element (rank mode) or two (distance mode)")
        h = elems[0]
        for n in range(1, args.levels + 1):
            N = spec.size(n)
            M = fo.folner_rep(h, spec, n, field, cap=cap)
            r = mg.rank(M)
            lsize = fo.l_set_size(spec, h, n)
            ok = ok and r == lsize
            ok = ok and Fraction(lsize, N) >= fo.folner_lower_bound(spec, h, n)
            rows.append([n, N, lsize, r, str(Fraction(r, N))])
        method = "folner-rep"
    payload = Payload(
        "csv",
        header=["level", "set_size", "l_size", "rank",
                "normalized_rank_or_distance"],
        rows=rows,
        method=method,
    )
    return ok, payload


def run_center(args) -> tuple[bool, Payload]:
    field = _field_for(args.q)
    G = gr.enumerate_group(args.n, field, cap=_env_cap(gr.DEFAULT_ORDER_CAP))
    center = gr.group_center(G)  # raises NumericError on mismatch
    obj = {
        "n": args.n,
        "q": args.q,
        "order": G.order,
        "center_size": len(center),
        "center": [_mat_line(G.matrix(i)) for i in center],
        "ok": True,
    }
    return True, Payload("json", obj=obj, method="centralizer-scan")


def _mat_line(M: mg.MatF) -> str:
    """Single-line matrix rendering for CSV cells."""
    from .field import format_element

    return ";".join(
        " ".join(format_element(M.field, int(c)) for c in M.data[i])
        for i in range(M.rows)
    )


# ---------------------------------------------------------------------------
# output plumbing


def render(payload: Payload, seed: int) -> str:
    if payload.kind == "json":
        obj = dict(payload.obj)
        obj["seed"] = seed
        obj["version"] = __version__
        obj["method"] = payload.method
        return json.dumps(obj, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(payload.header)
    for row in payload.rows:
        writer.writerow(row)
    buf.write(f"# seed={seed}, version={__version__}, method={payload.method}\n")
    return buf.getvalue()


def write_output(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    tmp = out + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, out)


# ---------------------------------------------------------------------------
# argument parsing


def _read_config(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"config line {line!r} is not key=value")
            key, value = line.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slrank",
        description="rank-metric experiments on finite special linear groups",
    )
    parser.add_argument("--config", help="key=value defaults file")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--format", dest="fmt", choices=["csv", "json"])

    p = sub.add_parser("field-check", help="field axioms and tower checks")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--depth", type=int, default=2)
    common(p)

    p = sub.add_parser("embed-verify", help="embedding exactness experiment")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--trials", type=int, default=1000)
    common(p)

    p = sub.add_parser("diameter", help="chain diameter witnesses")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--samples", type=int, default=50)
    common(p)

    p = sub.add_parser("chartab", help="character table export")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--n", type=int, default=2)
    common(p)

    p = sub.add_parser("gluck", help="normalized character bound scan")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--n", type=int, default=2)
    common(p)

    p = sub.add_parser("covering", help="conjugacy covering numbers")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--n", type=int, default=2)
    common(p)

    p = sub.add_parser("pdf-lemma", help="positive definite function lemma")
    p.add_argument("--q", type=int, default=7)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--count", type=int, default=100)
    common(p)

    p = sub.add_parser("levy", help="Lipschitz concentration tails")
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--r-list", dest="r_list", default="")
    p.add_argument("--f", default="dist_to_identity")
    p.add_argument("--cert-pairs", dest="cert_pairs", type=int, default=10_000)
    common(p)

    p = sub.add_parser("ramsey", help="metric Ramsey experiment")
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--n", type=int, default=512)
    p.add_argument("--eps", default="0.5")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--max-attempts", dest="max_attempts", type=int, default=1000)
    common(p)

    p = sub.add_parser("folner", help="Folner representations and ranks")
    p.add_argument("--group", default="z:1", help="z:<d> or heisenberg")
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--levels", type=int, default=8)
    p.add_argument("--elements", nargs="*", help="coded tuples, e.g. 1 or 1,0")
    p.add_argument("--ring", default="", help="entries coeff@tuple;... e.g. 1@0;1@1;1@2")
    common(p)

    p = sub.add_parser("center", help="group center determination")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--n", type=int, default=2)
    common(p)

    return parser


HANDLERS = {
    "field-check": run_field_check,
    "embed-verify": run_embed_verify,
    "diameter": run_diameter,
    "chartab": run_chartab,
    "gluck": run_gluck,
    "covering": run_covering,
    "pdf-lemma": run_pdf_lemma,
    "levy": run_levy,
    "ramsey": run_ramsey,
    "folner": run_folner,
    "center": run_center,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    # config files supply defaults; explicit flags override
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    pre, _ = probe.parse_known_args(argv)
    if pre.config:
        try:
            parser.set_defaults(**_read_config(pre.config))
        except OSError as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    config = RunConfig(args.command, vars(args), args.out, args.fmt or "", args.seed)
    try:
        ok, payload = HANDLERS[config.command](args)
        if args.fmt and args.fmt != payload.kind:
            if args.fmt == "json" and payload.kind == "csv":
                payload = Payload(
                    "json",
                    obj={
                        "header": payload.header,
                        "rows": [[str(c) for c in row] for row in payload.rows],
                        "extra": {k: str(v) for k, v in payload.obj.items()},
                        "ok": ok,
                    },
                    method=payload.method,
                )
            else:
                raise UsageError(
                    f"{config.command} cannot render its report as {config.fmt}"
                )
        write_output(render(payload, config.seed), config.out)
        if not ok:
            print(f"{config.command}: assertions failed", file=sys.stderr)
        return 0 if ok else 1
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"assertion failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
