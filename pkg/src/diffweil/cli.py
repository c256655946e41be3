"""diffweil: batch front end over the library.

    diffweil run <file> [--json] [--stable] [--order-bound S] [--budget N]
                        [--check-certificates]
    diffweil bounds <n> <r> <m> [--budget N]
    diffweil parse <file>

Exit codes: 0 all tasks pass, 1 some task failed, 2 parse or validation
failure.  Reports are deterministic; under --json --stable the timing
field is suppressed so two runs on the same input are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from .diffpoly import (
    AlgPoly,
    DiffPoly,
    RankedSet,
    compare_autoreduced,
    h_of_set,
    leader_data,
    rank_of,
    theta_set,
)
from .errors import DiffWeilError, ParseError
from .field import validate_field
from .kernels import (
    ackermann,
    alpha_beta,
    bound_C,
    index_maps,
    leaders,
    validate_kernel,
)
from .parser import parse_taskfile
from .prolong import (
    gamma_set,
    jet_system_off_H,
    prolongation_equations,
    tau1_explicit,
    ucm_instance,
)
from .reduction import Inconsistent, autoreduce, divide, membership_test
from .weil import (
    BRing,
    DiffPresentation,
    check_unit_map_identity,
    descend_presentation,
    standardize_descent,
    validate_extension,
    w_namer,
)

SCHEMA = 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="diffweil", description="exact differential-algebra task runner")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a task file")
    p_run.add_argument("file")
    p_run.add_argument("--json", action="store_true", help="machine-readable output")
    p_run.add_argument("--stable", action="store_true", help="suppress timing for byte-stable output")
    p_run.add_argument("--order-bound", type=int, default=2, help="working order bound for descent tasks")
    p_run.add_argument("--budget", type=int, default=10 ** 6, help="work budget for bound computations")
    p_run.add_argument("--check-certificates", action="store_true",
                       help="re-expand division certificates and descent identities")

    p_bounds = sub.add_parser("bounds", help="print C^n_{r,m}")
    p_bounds.add_argument("n", type=int)
    p_bounds.add_argument("r", type=int)
    p_bounds.add_argument("m", type=int)
    p_bounds.add_argument("--budget", type=int, default=10 ** 6)

    p_parse = sub.add_parser("parse", help="syntax-check a task file")
    p_parse.add_argument("file")

    args = parser.parse_args(argv)
    if args.command == "bounds":
        try:
            print(bound_C(args.n, args.r, args.m, args.budget))
            return 0
        except DiffWeilError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    if args.command == "parse":
        try:
            source = open(args.file, encoding="utf-8").read()
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        try:
            parse_taskfile(source)
        except ParseError as exc:
            print(exc.pretty(args.file), file=sys.stderr)
            return 2
        print("ok")
        return 0
    return run_file(args)


def run_file(args) -> int:
    try:
        source = open(args.file, encoding="utf-8").read()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        tf = parse_taskfile(source)
    except ParseError as exc:
        print(exc.pretty(args.file), file=sys.stderr)
        return 2
    started = time.monotonic()
    try:
        runner = _Runner(tf, args)
        results = runner.run_all()
    except ParseError as exc:
        print(exc.pretty(args.file), file=sys.stderr)
        return 2
    elapsed_ms = int((time.monotonic() - started) * 1000)
    failed = any(r["status"] != "ok" for r in results)
    if args.json:
        payload = {"schema": SCHEMA, "tasks": results}
        if not args.stable:
            payload["elapsed_ms"] = elapsed_ms
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(f"schema {SCHEMA}")
        for r in results:
            print(f"task {r['index']}: {r['name']}")
            print(f"  {r['status']}")
            for line in r["lines"]:
                print(f"  {line}")
        if not args.stable:
            print(f"elapsed_ms {elapsed_ms}")
    return 1 if failed else 0


class _Runner:
    def __init__(self, tf, args):
        self.tf = tf
        self.args = args
        self.base = tf.base
        self.ext = tf.ext
        self.check = args.check_certificates
        self.fmt_names = self.base.gen_names

    def run_all(self):
        out = []
        for idx, task in enumerate(self.tf.tasks, start=1):
            name = task.label or f"{task.op}"
            argtext = " ".join(self._arg_text(a) for a in task.args)
            display = f"{task.op} {argtext}".strip()
            if task.label:
                display += f" as {task.label}"
            entry = {"index": idx, "name": display, "status": "ok", "lines": [], "payload": None}
            try:
                lines, payload = self._dispatch(task)
                entry["lines"] = lines
                entry["payload"] = payload
            except DiffWeilError as exc:
                entry["status"] = "error"
                entry["lines"] = [f"{type(exc).__name__}: {exc}"]
            out.append(entry)
        return out

    def _arg_text(self, a):
        if isinstance(a, list):
            return " ".join(str(x) for x in a)
        if isinstance(a, tuple) and len(a) == 2 and isinstance(a[1], int):
            return "{" + "; ".join(str(p) for p in a[0]) + "}"
        return str(a)

    # ---------------------------------------------------------------- helpers

    def _ranked_set(self, name):
        obj = self.tf.decls[name]
        if isinstance(obj, tuple) and obj[0] == "set":
            _, polys, n = obj
            lam = RankedSet(polys, autoreduced=True)
            self.tf.decls[name] = ("set_built", lam)
            return lam
        if isinstance(obj, tuple) and obj[0] == "set_built":
            return obj[1]
        raise ParseError(f"{name!r} is not a ranked set", 1, 1)

    def _poly(self, name) -> DiffPoly:
        obj = self.tf.decls[name]
        if not isinstance(obj, DiffPoly):
            raise ParseError(f"{name!r} is not a differential polynomial", 1, 1)
        return obj

    def _system(self, name):
        obj = self.tf.decls[name]
        if not (isinstance(obj, tuple) and obj[0] == "system"):
            raise ParseError(f"{name!r} is not a system", 1, 1)
        _, polys, n = obj
        if self.ext is None:
            raise ParseError("descent tasks need an extension block", 1, 1)
        gen_names = [f"x{i}" for i in range(1, n + 1)]
        bring = BRing(self.ext)
        coerced = []
        for p in polys:
            if isinstance(p.ring, BRing):
                coerced.append(p)
            else:
                coerced.append(_lift_to_b(p, bring, n))
        return DiffPresentation(gen_names, coerced)

    def _kernel(self, name):
        from .kernels import KernelPresentation

        obj = self.tf.decls[name]
        if not isinstance(obj, KernelPresentation):
            raise ParseError(f"{name!r} is not a kernel presentation", 1, 1)
        return obj

    def _fmt_poly(self, p, namer=None):
        return p.fmt(namer)

    # ---------------------------------------------------------------- dispatch

    def _dispatch(self, task):
        op = task.op
        method = getattr(self, f"_op_{op}", None)
        if method is None:
            raise ParseError(f"task {op!r} is not implemented", task.line, 1)
        return method(task)

    def _op_validate_field(self, task):
        rej = validate_field(self.base)
        if rej is None:
            return ["valid"], {"valid": True}
        return [str(rej)], {"valid": False, "witness": str(rej)}

    def _op_validate_extension(self, task):
        if self.ext is None:
            raise ParseError("no extension block", task.line, 1)
        rej = validate_extension(self.ext)
        if rej is None:
            return ["valid"], {"valid": True}
        return [str(rej)], {"valid": False, "witness": str(rej)}

    def _require_valid_descent(self, task):
        if self.ext is None:
            raise ParseError("descent tasks need an extension block", task.line, 1)
        rej = validate_extension(self.ext)
        if rej is not None:
            raise ParseError(f"invalid extension: {rej}", task.line, 1)

    def _op_descend(self, task):
        self._require_valid_descent(task)
        pres = self._system(task.args[0])
        bound = max(self.args.order_bound, pres.order)
        out = descend_presentation(pres, self.ext, bound)
        nm = w_namer(self.ext.ell)
        lines = []
        gens = [f"{_theta_name(theta, g, i, self.ext.ell)}" for (theta, g, i) in out.generators]
        lines.append("generators: " + ", ".join(gens))
        for (ridx, i, g) in out.ideal_gens:
            lines.append(f"ideal_gen[{ridx}][{i}]: {g.fmt(nm)}")
        for d in sorted(out.der_images):
            for (theta, g, i) in out.generators:
                img = out.der_images[d][(theta, g, i)]
                lines.append(f"der{d} {_theta_name(theta, g, i, self.ext.ell)} -> {img.fmt(nm)}")
        if self.check:
            defects = _descent_identity_defects(self.ext, pres, out)
            if defects:
                raise DiffWeilError(f"descent identity check failed: {defects[0]}")
            lines.append("certificates: descent identities re-expand to zero")
        payload = {
            "generators": gens,
            "ideal_gens": [
                {"relation": ridx, "coordinate": i, "poly": g.fmt(nm)} for (ridx, i, g) in out.ideal_gens
            ],
            "der_images": {
                str(d): {
                    _theta_name(theta, g, i, self.ext.ell): out.der_images[d][(theta, g, i)].fmt(nm)
                    for (theta, g, i) in out.generators
                }
                for d in sorted(out.der_images)
            },
            "unit_table": {
                f"t_{list(theta)}(gen {g})": [c.fmt(nm) for c in coords]
                for (theta, g), coords in sorted(out.unit_table.items(), key=lambda kv: (kv[0][0], kv[0][1]))
            },
        }
        return lines, payload

    def _op_standardize(self, task):
        self._require_valid_descent(task)
        pres = self._system(task.args[0])
        bound = max(self.args.order_bound, pres.order)
        out = descend_presentation(pres, self.ext, bound)
        std = standardize_descent(out)
        namer = _y_namer()
        lines = [p.fmt(namer) for p in std]
        if self.check:
            defects = _descent_identity_defects(self.ext, pres, out)
            if defects:
                raise DiffWeilError(f"descent identity check failed: {defects[0]}")
        return lines, {"equations": lines}

    def _op_unit_table(self, task):
        self._require_valid_descent(task)
        pres = self._system(task.args[0])
        bound = max(self.args.order_bound, pres.order)
        out = descend_presentation(pres, self.ext, bound)
        nm = w_namer(self.ext.ell)
        lines = []
        for (theta, g), coords in sorted(out.unit_table.items(), key=lambda kv: (sum(kv[0][0]), kv[0][0], kv[0][1])):
            lines.append(
                f"W(t_{list(theta)} of gen {g}) = [" + ", ".join(c.fmt(nm) for c in coords) + "]"
            )
        return lines, {"unit_table": lines}

    def _op_counit(self, task):
        from .weil import counit_map

        self._require_valid_descent(task)
        p = self._poly(task.args[0])
        if isinstance(p.ring, BRing):
            raise ParseError("counit expects a polynomial in the descended variables", task.line, 1)
        res = counit_map(p, self.ext, p.n)
        return [str(res)], {"poly": str(res)}

    def _op_divide(self, task):
        f = self._poly(task.args[0])
        lam = self._ranked_set(task.args[1])
        cert = divide(f, lam)
        if self.check and not cert.check():
            raise DiffWeilError("division certificate failed to re-expand to zero")
        lines = [
            f"ell: {cert.ell}",
            f"remainder: {cert.remainder}",
        ]
        cof_payload = []
        for (idx, xi), cof in sorted(cert.cofactors.items(), key=lambda kv: (kv[0][0], kv[0][1])):
            lines.append(f"cofactor on d^{list(xi)} member[{idx}]: {cof}")
            cof_payload.append({"f_index": idx, "xi": list(xi), "poly": str(cof)})
        payload = {"ell": cert.ell, "cofactors": cof_payload, "remainder": str(cert.remainder)}
        return lines, payload

    def _op_membership(self, task):
        f = self._poly(task.args[0])
        lam = self._ranked_set(task.args[1])
        verdict = membership_test(f, lam)
        if self.check and not verdict.certificate.check():
            raise DiffWeilError("membership certificate failed to re-expand to zero")
        lines = [
            "member" if verdict.member else "nonmember",
            "caveat: nonmember verdicts are conclusive only for characteristic sets",
        ]
        payload = {
            "member": verdict.member,
            "complete_only_for_characteristic_sets": True,
            "certificate": {
                "ell": verdict.certificate.ell,
                "cofactors": [
                    {"f_index": idx, "xi": list(xi), "poly": str(cof)}
                    for (idx, xi), cof in sorted(
                        verdict.certificate.cofactors.items(), key=lambda kv: (kv[0][0], kv[0][1])
                    )
                ],
                "remainder": str(verdict.certificate.remainder),
            },
        }
        return lines, payload

    def _op_autoreduce(self, task):
        polys = [self._poly(nm) for nm in task.args[0]]
        res = autoreduce(polys)
        if isinstance(res, Inconsistent):
            return [f"inconsistent (witness {res.witness})"], {"inconsistent": True, "witness": str(res.witness)}
        lines = [str(f) for f in res]
        return lines, {"inconsistent": False, "members": lines}

    def _op_theta(self, task):
        lam = self._ranked_set(task.args[0])
        out = theta_set(lam, task.args[1])
        lines = [str(f) for f in out]
        return lines, {"members": lines}

    def _op_ucm(self, task):
        lam = self._ranked_set(task.args[0])
        inst = ucm_instance(lam, task.args[1])
        lines = [f"eq: {e}" for e in inst.system] + [f"ineq: {inst.h_pol}"]
        payload = {
            "vars": [[list(v.xi), v.i] for v in gamma_set(lam.n, lam.m, inst.r)],
            "eqs": [str(e) for e in inst.system],
            "ineq": str(inst.h_pol),
            "differential_side": [str(f) for f in lam] + [f"H: {inst.h}"],
        }
        return lines, payload

    def _op_jet(self, task):
        lam = self._ranked_set(task.args[0])
        system, h = jet_system_off_H(lam, task.args[1])
        lines = [f"eq: {e}" for e in system] + [f"off: {h}"]
        payload = {
            "localized": True,
            "eqs": [str(e) for e in system],
            "ineq": str(h),
        }
        return lines, payload

    def _op_theta_partition(self, task):
        from .prolong import theta_partition

        lam = self._ranked_set(task.args[0])
        th1, th2 = theta_partition(lam, task.args[1], task.args[2])
        l1 = [f"x{v.i}[{','.join(map(str, v.xi))}]" for v in th1]
        l2 = [f"x{v.i}[{','.join(map(str, v.xi))}]" for v in th2]
        return ["theta1: " + ", ".join(l1), "theta2: " + ", ".join(l2)], {"theta1": l1, "theta2": l2}

    def _op_prolong(self, task):
        r = task.args[0]
        polys, n = task.args[1]
        system = prolongation_equations(polys, r)
        return self._system_report(system)

    def _op_tau1(self, task):
        polys, n = task.args[0]
        system = tau1_explicit(polys)
        return self._system_report(system)

    def _system_report(self, system):
        lines = [f"eq: {e}" for e in system.equations]
        payload = {
            "vars": [[list(v.xi), v.i] for v in system.variables],
            "eqs": [str(e) for e in system.equations],
            "tags": [
                {"generator": j, "xi": list(xi), "cleared_factor": fact}
                for (j, xi, fact) in system.tags
            ],
        }
        return lines, payload

    def _op_gamma(self, task):
        n, m, r = task.args
        gs = gamma_set(n, m, r)
        lines = [", ".join(f"({list(v.xi)}, {v.i})" for v in gs)]
        return lines, {"gamma": [[list(v.xi), v.i] for v in gs], "size": len(gs)}

    def _op_bounds(self, task):
        n, r, m = task.args
        val = bound_C(n, r, m, self.args.budget)
        return [str(val)], {"C": val}

    def _op_alpha_beta(self, task):
        n, m = task.args
        a, b = alpha_beta(n, m, self.args.budget)
        return [f"alpha: {a}", f"beta: {b}"], {"alpha": a, "beta": b}

    def _op_ackermann(self, task):
        x, y = task.args
        val = ackermann(x, y, self.args.budget)
        return [str(val)], {"A": val}

    def _op_index_maps(self, task):
        n, m = task.args
        maps = index_maps(n, m, self.args.budget)
        lines = [
            f"alpha: {maps.alpha}",
            f"beta: {maps.beta}",
            f"pi: {maps.pi}",
            f"psi: {maps.psi}",
            f"phi: {maps.phi}",
        ]
        payload = {
            "alpha": maps.alpha,
            "beta": maps.beta,
            "pi": maps.pi,
            "psi": maps.psi,
            "phi": maps.phi,
            "phi_injective": maps.phi_injective(),
        }
        return lines, payload

    def _op_leaders(self, task):
        pres = self._kernel(task.args[0])
        lead, minimal = leaders(pres)
        fmt = lambda vs: [f"a{v.i}[{','.join(map(str, v.xi))}]" for v in vs]
        return (
            ["leaders: " + ", ".join(fmt(lead)), "minimal: " + ", ".join(fmt(minimal))],
            {"leaders": fmt(lead), "minimal_leaders": fmt(minimal)},
        )

    def _op_validate_kernel(self, task):
        pres = self._kernel(task.args[0])
        rej = validate_kernel(pres)
        if rej is None:
            return ["valid"], {"valid": True}
        return [str(rej)], {"valid": False, "witness": str(rej)}

    def _op_leader_data(self, task):
        f = self._poly(task.args[0])
        ld = leader_data(f)
        lines = [
            f"leader: {f.var_name(ld.leader)}",
            f"degree: {ld.degree}",
            f"separant: {ld.separant}",
            f"initial: {ld.initial}",
        ]
        return lines, {
            "leader": f.var_name(ld.leader),
            "degree": ld.degree,
            "separant": str(ld.separant),
            "initial": str(ld.initial),
        }

    def _op_h_of_set(self, task):
        lam = self._ranked_set(task.args[0])
        h = h_of_set(lam)
        return [str(h)], {"H": str(h)}

    def _op_compare(self, task):
        l1 = self._ranked_set(task.args[0])
        l2 = self._ranked_set(task.args[1])
        c = compare_autoreduced(l1, l2)
        word = {(-1): "lower", 0: "equal", 1: "higher"}[c]
        return [word], {"compare": c}


def _lift_to_b(p: DiffPoly, bring: BRing, n: int) -> DiffPoly:
    out = {}
    for mono, c in p.terms.items():
        out[mono] = bring.coerce(c)
    lifted = DiffPoly(bring, n, p.m, out)
    if p.n != n:
        lifted = DiffPoly(bring, n, p.m, dict(lifted.terms))
    return lifted


def _theta_name(theta, g, i, ell):
    parts = []
    for d, e in enumerate(theta, start=1):
        if e == 0:
            continue
        parts.append(f"d{d}" if e == 1 else f"d{d}^{e}")
    parts.append(f"x{g}({i})")
    return " ".join(parts)


def _y_namer():
    def name(v):
        parts = []
        for d, e in enumerate(v.xi, start=1):
            if e == 0:
                continue
            parts.append(f"d{d}" if e == 1 else f"d{d}^{e}")
        parts.append(f"y{v.i}")
        return " ".join(parts)

    return name


def _descent_identity_defects(ext, pres, out):
    """Claim-level identity checks used by --check-certificates."""
    defects = []
    bring = BRing(ext)
    for f in pres.relations:
        for d in range(1, ext.base.m + 1):
            diffs = check_unit_map_identity(ext, f, d)
            for i, diff in enumerate(diffs, start=1):
                if not diff.is_zero():
                    defects.append(f"relation {f}, derivation {d}, coordinate {i}")
    return defects


if __name__ == "__main__":
    sys.exit(main())