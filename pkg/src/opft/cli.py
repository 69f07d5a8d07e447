"""Command line interface.

Exit codes: 0 no fine tuning / valid, 10 fine tuned, 2 an operational
equation failed, 1 usage or parse error, 3 a certificate or functor law
did not check out.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io
from .assumptions import ASSUMPTIONS, normalize_assumptions
from .category import build_subcategory, check_functor_laws
from .errors import HashMismatch, InvalidCertificate, OpftError, PremiseFailed
from .experiment import build_comb
from .finetune import _experiments, build_models, candidate_ks, check_scenario, compile_equations
from .ontology import canonical_lift, ontic_space
from .prob import format_rational
from .scenarios import BUILTIN
from .solver import verify

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PREMISE = 2
EXIT_CHECK_FAILED = 3
EXIT_FINE_TUNED = 10


def _assumption_list(text):
    if text is None:
        return None
    if text.strip() in ("", "none"):
        return ()
    return normalize_assumptions(a.strip() for a in text.split(",") if a.strip())


def cmd_validate(args, out) -> int:
    sc = io.load_scenario(args.path)
    out.write(f"valid: {sc.name}\n")
    for E in sc.experiments.values():
        out.write(f"  experiment {E.label}: p({','.join(E.T.names)}|{','.join(E.S.names)})\n")
    out.write(f"  equations: {len(sc.equations)}\n")
    out.write(f"  assumptions: {','.join(sc.assumptions) or 'none'}\n")
    out.write(f"  lambda: {sc.lam.describe()}\n")
    return EXIT_OK


def cmd_check(args, out) -> int:
    sc = io.load_scenario(args.path)
    assumptions = _assumption_list(args.assumptions)
    lam = io.parse_lambda_option(args.lam) if args.lam else None
    try:
        verdict = check_scenario(sc, assumptions, lam)
    except PremiseFailed as exc:
        out.write(f"PREMISE-FAILED {exc}\n")
        for cell in exc.differences[:20]:
            o, i, a, b = cell
            out.write(f"  out={o} in={i}: {format_rational(a)} != {format_rational(b)}\n")
        return EXIT_PREMISE
    out.write(verdict.summary() + "\n")
    out.write(f"  scenario: {sc.name}\n")
    for eq in verdict.equations:
        out.write(
            f"  equation {eq.label}: {eq.lhs.experiment.label}:{eq.lhs.comb.name} == "
            f"{eq.rhs.experiment.label}:{eq.rhs.comb.name}\n"
        )
    system = verdict.system
    out.write(f"  system: {len(system.unknowns)} unknowns, {len(system)} constraints\n")
    if verdict.fine_tuned:
        cert = verdict.verdict
        out.write(f"  certificate: combined right-hand side {format_rational(cert.combined_rhs)} > 0\n")
    else:
        support = sum(1 for v in verdict.witness.values.values() if v)
        out.write(f"  witness: {support} nonzero weights\n")
    out.write(f"  verified: {verdict.verify()}\n")
    out.write(f"  note: {verdict.caveat}\n")
    if args.emit_certificate:
        Path(args.emit_certificate).write_text(io.dumps_verdict_file(sc.name, verdict), encoding="ascii")
    return EXIT_FINE_TUNED if verdict.fine_tuned else EXIT_OK


def cmd_scenarios(args, out) -> int:
    if args.action == "list":
        for name, make in BUILTIN.items():
            out.write(f"{name}: {make().description}\n")
        return EXIT_OK
    if args.name not in BUILTIN:
        out.write(f"unknown scenario {args.name!r}; choose from {', '.join(BUILTIN)}\n")
        return EXIT_USAGE
    if not args.dest:
        out.write("scenarios export needs a destination path\n")
        return EXIT_USAGE
    text = io.dumps_scenario(BUILTIN[args.name]())
    Path(args.dest).write_text(text, encoding="ascii")
    return EXIT_OK


def cmd_verify_certificate(args, out) -> int:
    sc = io.load_scenario(args.path)
    data = io.load_verdict_file(Path(args.certificate).read_text(encoding="ascii"))
    models = build_models(_experiments(sc.equations), data["assumptions"], data["lambda"])
    attempts = data["attempts"]
    if not attempts:
        raise InvalidCertificate("certificate lists no attempts")
    for k, verdict in attempts:
        system = compile_equations(sc.equations, data["assumptions"], data["lambda"], k, models).system
        if verdict.system_hash != system.hash():
            raise HashMismatch(f"certificate for k={k} was issued for a different constraint system")
        if not verify(system, verdict):
            raise InvalidCertificate(f"verdict for k={k} does not re-check")
    claimed_fine_tuned = data.get("verdict") == "FINE-TUNED"
    if claimed_fine_tuned:
        if any(v.feasible for _, v in attempts):
            raise InvalidCertificate("a FINE-TUNED claim cannot contain a witness")
        expected, _ = candidate_ks(sc.equations, models, data["lambda"])
        if sorted(map(str, expected)) != sorted(str(k) for k, _ in attempts):
            raise InvalidCertificate("certificates do not cover every ontic relabeling")
    elif not attempts[-1][1].feasible:
        raise InvalidCertificate("a NO-FINE-TUNING claim needs a witness")
    out.write(f"certificate ok: {data.get('verdict')} for {sc.name}\n")
    return EXIT_OK


def cmd_functor_check(args, out) -> int:
    sc = io.load_scenario(args.path)
    spec = sc.functor
    if spec is None:
        out.write("scenario has no functor section\n")
        return EXIT_USAGE
    E = sc.experiments[spec["experiment"]]
    gens = [build_comb(g, E.S, E.T) for g in spec["generators"]]
    cat = build_subcategory(gens, int(spec.get("bound", 8)))
    Lam = ontic_space(int(spec.get("lambda_size", 2)))
    k = spec.get("k")
    report = check_functor_laws(lambda f: canonical_lift(f, Lam, k), cat)
    out.write(f"subcategory: {len(cat.objects)} objects, {len(cat)} morphisms\n")
    out.write(report.text() + "\n")
    return EXIT_OK if report.ok else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="opft", description="Exact operational fine-tuning checks.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="parse and validate a scenario file")
    v.add_argument("path")
    v.set_defaults(func=cmd_validate)

    c = sub.add_parser("check", help="decide whether the scenario's equations are fine tuned")
    c.add_argument("path")
    c.add_argument(
        "--assumptions",
        help=f"comma-separated subset of {', '.join(ASSUMPTIONS)}, or 'none' (default: from the file)",
    )
    c.add_argument("--lambda", dest="lam", help="auto, deterministic or stochastic:N (default: from the file)")
    c.add_argument("--emit-certificate", metavar="PATH", help="write the witness or certificates here")
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("scenarios", help="list or export the built-in scenarios")
    s.add_argument("action", choices=["list", "export"])
    s.add_argument("name", nargs="?")
    s.add_argument("dest", nargs="?")
    s.set_defaults(func=cmd_scenarios)

    r = sub.add_parser("verify-certificate", help="re-check a stored verdict against a scenario file")
    r.add_argument("path")
    r.add_argument("certificate")
    r.set_defaults(func=cmd_verify_certificate)

    f = sub.add_parser("functor-check", help="check the lift's functor laws on the file's generators")
    f.add_argument("path")
    f.set_defaults(func=cmd_functor_check)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args, out)
    except (HashMismatch, InvalidCertificate) as exc:
        out.write(f"{type(exc).__name__}: {exc}\n")
        return EXIT_CHECK_FAILED
    except (OpftError, OSError) as exc:
        out.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
