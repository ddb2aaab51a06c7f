"""Command line: ``csl run``, ``csl sweep`` and ``csl demo``."""
from __future__ import annotations

import argparse
import os
import sys

from . import harness as hs
from .czd import cz_decompose
from .dyadic import dump_family
from .errors import CarlesonError
from .functionals import carleson
from .sparse import build_sparse_family, check_sparse_domination


def _config(args) -> hs.RunConfig:
    cfg = hs.load_config(args.config) if args.config else hs.RunConfig()
    if getattr(args, "out", None):
        cfg = hs.replace(cfg, out_dir=args.out)
    return cfg


def cmd_run(args) -> int:
    cfg = _config(args)
    suites = cfg.suite_list() if args.suite is None else ((args.suite,) if args.suite != "all" else hs.SUITES)
    os.makedirs(cfg.out_dir, exist_ok=True)
    report = hs.Report(config=hs.config_text(cfg))
    for s in suites:
        report.extend(hs.run_suite(cfg, s))
    tag = args.suite or "all"
    hs.emit_report(report, "csv", os.path.join(cfg.out_dir, f"{tag}.csv"))
    text = hs.emit_report(report, "text", os.path.join(cfg.out_dir, f"{tag}.log"))
    sys.stdout.write(text)
    return 0 if report.passed else 1


def cmd_sweep(args) -> int:
    cfg = _config(args)
    os.makedirs(cfg.out_dir, exist_ok=True)
    table = hs.sweep_weights(cfg)
    text = table.csv()
    with open(os.path.join(cfg.out_dir, "sweep.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    sys.stdout.write(text)
    ok = all(s <= max(1.0, p - 1) + cfg.tol("slope_margin") for (_, p), s in table.slopes.items())
    return 0 if ok else 1


def demo_czd(cfg: hs.RunConfig) -> str:
    inst = hs.corpus_for(cfg)[0]
    f = inst.field
    g = f.grid
    out = [f"field {inst.name} on {g!r}"]
    for lam in hs.good_lambda_levels(f, 3):
        cz = cz_decompose(f, lam)
        cg = float(carleson(cz.good, "dyadic").values.max())
        out.append(f"lambda={lam:.6g}: {len(cz.cubes)} selected cubes, ||C^D g||_inf / lambda = {cg / lam:.4f}"
                   + (" (truncation limited)" if cz.truncation_limited else ""))
        exact = cz.exact_bad_integrals(f)
        for q in cz.cubes:
            out.append(f"  {g.cube(q).to_text()} mean={cz.means[q]:.6g} bad integral={exact[q]}")
    return "\n".join(out) + "\n"


def demo_sparse(cfg: hs.RunConfig) -> str:
    k = hs.kernels_for(cfg)[0]
    inst = hs.corpus_for(cfg)[0]
    f = inst.field
    g = f.grid
    b = build_sparse_family(k, f)
    d = check_sparse_domination(k, f, b)
    out = [f"kernel {k.name}, field {inst.name} on {g!r}",
           f"c = {b.c:g} after {len(b.attempts)} doublings; {len(b.family.members)} cubes",
           "# cube density stopping covered c"]
    out.extend(lg.line(g) for lg in b.log)
    out.append(f"sparse: {bool(b.verify(g))}; domination constant {d.constant:.6g}, violations {d.violations}")
    out.append("# family")
    out.append(dump_family(b.family, g).rstrip("\n"))
    return "\n".join(out) + "\n"


def cmd_demo(args) -> int:
    cfg = _config(args)
    sys.stdout.write(demo_czd(cfg) if args.which == "czd" else demo_sparse(cfg))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="csl", description="Carleson-sparse domination experiments")
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run acceptance suites")
    r.add_argument("--config")
    r.add_argument("--suite", help="suite name or 'all' (default: the config's suites)")
    r.add_argument("--out")
    r.set_defaults(func=cmd_run)
    s = sub.add_parser("sweep", help="weighted non-tangential sweep")
    s.add_argument("--config")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)
    d = sub.add_parser("demo", help="narrated CZ decomposition or sparse build")
    d.add_argument("which", choices=("czd", "sparse"))
    d.add_argument("--config")
    d.set_defaults(func=cmd_demo)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CarlesonError, OSError) as exc:
        sys.stderr.write(f"csl: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
