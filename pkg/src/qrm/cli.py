"""Command-line entry point ``qrm``.

Exit codes: 0 on success, 2 for invalid input (including usage errors),
3 for numerical failures.  JSON goes to stdout unless --out is given.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import NumericError, ValidationError
from .points import INF, as_point, is_inf

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC = 0, 2, 3


class _Encoder(json.JSONEncoder):
    def default(self, o):
        if o is INF:
            return "inf"
        if isinstance(o, complex):
            return [o.real, o.imag]
        if isinstance(o, Fraction):
            return f"{o.numerator}/{o.denominator}"
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.complexfloating):
            return [float(o.real), float(o.imag)]
        if isinstance(o, np.bool_):
            return bool(o)
        if hasattr(o, "to_json"):
            return o.to_json()
        return super().default(o)


def _finite_floats(obj):
    """Replace inf/nan floats by strings so the output is strict JSON."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, dict):
        return {k: _finite_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_floats(v) for v in obj]
    return obj


def _emit(data, out=None):
    text = json.dumps(_finite_floats(json.loads(json.dumps(data, cls=_Encoder))), indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


# -- argument parsing helpers ------------------------------------------------------


def _complex(text):
    try:
        z = as_point(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from exc
    if is_inf(z):
        raise argparse.ArgumentTypeError("∞ is not allowed here")
    return z


def _pair(text):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected a,b")
    return complex(float(parts[0]), float(parts[1]))


def _float_list(text):
    try:
        return [float(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from exc


def _load_map(text):
    from .sphere import RationalMap2

    if text.startswith("@"):
        text = Path(text[1:]).read_text()
    elif not text.lstrip().startswith(("{", "[")) and Path(text).exists():
        text = Path(text).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"--map is not JSON: {exc}") from exc
    return RationalMap2.from_json(data)


def _rho(text):
    """Exact Gaussian rational when possible, otherwise a complex number."""
    from .percurves import exact_number

    exact_number(text)  # validates
    return text


# -- subcommands ----------------------------------------------------------------


def cmd_fix(args):
    from .local import fixed_point_records

    g = _load_map(args.map)
    recs = fixed_point_records(g)
    total = sum(r.index for r in recs)
    return {
        "fixed_points": [r.to_json() for r in recs],
        "index_sum": total,
        "multiplicity_sum": sum(r.multiplicity for r in recs),
    }


def cmd_cycles(args):
    from .cycles import cycles

    g = _load_map(args.map)
    return {"period": args.n, "cycles": [c.to_json() for c in cycles(g, args.n, seed=args.seed)]}


def cmd_classify(args):
    from .render import classify_parameter

    g = _load_map(args.map)
    return classify_parameter(g, max_iter=args.max_iter, tol=args.tol).to_json()


def cmd_moduli(args):
    from .moduli import eigen_triple, moduli_point

    g = _load_map(args.map)
    t = eigen_triple(g)
    pt = moduli_point(t)
    return {"X": pt.X, "Y": pt.Y, "eigen": list(t.values), "abc_residual": t.residual()}


def cmd_convert(args):
    from .moduli import F_to_f, FNormalForm, ModuliPoint, f_to_F, fNormalForm, from_moduli

    if args.src == "f":
        if args.alpha is None or args.beta is None:
            raise ValidationError("--from f needs --alpha and --beta")
        nf = fNormalForm(args.alpha, args.beta)
        F, phi = f_to_F(nf, branch=args.branch)
        return {
            "f": nf.to_json(),
            "F": F.to_json(),
            "phi": [phi.p, phi.q, phi.r, phi.s],
            "map": F.to_map().to_json(),
        }
    if args.src == "F":
        if args.gamma is None or args.delta is None:
            raise ValidationError("--from F needs --gamma and --delta")
        F = FNormalForm(args.gamma, args.delta)
        nf = F_to_f(F)
        return {"F": F.to_json(), "f": nf.to_json(), "map": nf.to_map().to_json()}
    if args.X is None or args.Y is None:
        raise ValidationError("--from moduli needs --X and --Y")
    g = from_moduli(ModuliPoint(args.X, args.Y))
    return {"X": args.X, "Y": args.Y, "map": g.to_json()}


def cmd_per(args):
    from . import percurves as pc

    if args.action == "eval":
        curve = pc.per_curve(args.n, args.rho)
        out = {"curve": curve.to_json()}
        if args.X is not None and args.Y is not None:
            out["value"] = curve(1, args.X, args.Y)
            out["normalized"] = curve.affine_value(args.X, args.Y)
        if args.map is not None:
            out["member"] = pc.member(_load_map(args.map), args.n, args.rho, report=True)
        return out
    if args.action == "intersect":
        c1 = pc.per_curve(args.n1, args.rho1)
        c2 = pc.per_curve(args.n2, args.rho2)
        return pc.intersect(c1, c2).to_json()
    if args.action == "infinity":
        return pc.intersect_at_infinity(pc.per_curve(args.n, args.rho)).to_json()
    if args.action == "divides":
        c1 = _curve_arg(args.expr1, args.n1, args.rho1)
        c2 = _curve_arg(args.expr2, args.n2, args.rho2)
        return {"divides": pc.divides(c1, c2), "C1": c1.to_json(), "C2": c2.to_json()}
    if args.action == "dn":
        return {"n": args.n, "d": pc.d_of_n(args.n)}
    raise ValidationError(f"unknown per action {args.action}")


def _curve_arg(expr, n, rho):
    from . import percurves as pc

    if expr is not None:
        import sympy as sp

        try:
            e = sp.sympify(expr, locals={"W": pc.W, "X": pc.X, "Y": pc.Y, "i": sp.I})
        except (sp.SympifyError, TypeError) as exc:
            raise ValidationError(f"cannot parse curve {expr!r}") from exc
        return pc.ProjectiveCurve.from_expr(e, label=expr)
    if n is None or rho is None:
        raise ValidationError("give a curve as --exprK or as --nK with --rhoK")
    return pc.per_curve(n, rho)


def cmd_degen(args):
    from .degeneration import DegenerationPath, degen_report

    eps = args.eps if args.eps is not None else args.eps_list
    if not eps:
        raise ValidationError("give --eps or --eps-list")
    path = DegenerationPath(args.p, args.q, args.tau, args.higher)
    report = degen_report(path, eps, r=args.r, n=args.track)
    if args.count:
        from .degeneration import q_cycle_count

        report["q_cycle_count"] = [
            {"eps": e, **q_cycle_count(path, e, r=args.count_r, report=True, center_disc=args.center_disc)} for e in eps
        ]
    return report


_PLANE_ALIASES = {"gk": "gk-kappa", "gk-kappa": "gk-kappa", "per2": "per2-zero-slice", "per2-zero-slice": "per2-zero-slice"}


def cmd_render(args):
    from .render import RenderJob, render

    plane = _PLANE_ALIASES.get(args.plane)
    if plane is None:
        raise ValidationError(f"unknown plane {args.plane!r}")
    kw = {"resolution": args.res, "max_iter": args.max_iter, "tol": args.tol, "center": args.center}
    if args.width is not None:
        kw["width"] = args.width
    job = RenderJob.default(plane, **kw)
    result = render(job)
    out = result.sidecar()
    if args.image:
        out["sidecar"] = result.write(args.image)
        out["image"] = args.image
    return out


def cmd_audit(args):
    from .local import fs_audit, index_sum_audit
    from .moduli import boundedness_audit, eigen_triple

    g = _load_map(args.map)
    t = eigen_triple(g)
    return {
        "index_sum_error": index_sum_audit(g),
        "abc_residual": t.residual(),
        "fatou_shishikura": fs_audit(g, args.nmax),
        "boundedness": boundedness_audit([g]),
    }


# -- parser -----------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_VALIDATION)


def build_parser():
    p = _Parser(prog="qrm", description="Quadratic rational map toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_text, needs_map=False):
        sp = sub.add_parser(name, help=help_text)
        sp.set_defaults(func=func)
        sp.add_argument("--out", help="write JSON here instead of stdout")
        if needs_map:
            sp.add_argument("--map", required=True, help='JSON {"coeffs": [[re,im] x 6]}, a file, or @file')
        return sp

    add("fix", cmd_fix, "fixed points with multiplicity, index and class", True)
    sp = add("cycles", cmd_cycles, "exact-period cycles", True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp = add("classify", cmd_classify, "hyperbolic type from the critical orbits", True)
    sp.add_argument("--max-iter", type=int, default=20000)
    sp.add_argument("--tol", type=float, default=1e-8)
    add("moduli", cmd_moduli, "eigenvalue triple and (X, Y)", True)

    sp = add("convert", cmd_convert, "between the f and F normal forms and (X, Y)")
    sp.add_argument("--from", dest="src", choices=["f", "F", "moduli"], required=True)
    for name in ("alpha", "beta", "gamma", "delta", "X", "Y"):
        sp.add_argument(f"--{name}", type=_complex)
    sp.add_argument("--branch", type=int, choices=[1, -1], default=1)

    sp = add("per", cmd_per, "the curves Per_n(rho)")
    sp.add_argument("action", choices=["eval", "intersect", "infinity", "divides", "dn"])
    sp.add_argument("--n", type=int)
    sp.add_argument("--rho", type=_rho)
    sp.add_argument("--n1", type=int)
    sp.add_argument("--rho1", type=_rho)
    sp.add_argument("--n2", type=int)
    sp.add_argument("--rho2", type=_rho)
    sp.add_argument("--expr1")
    sp.add_argument("--expr2")
    sp.add_argument("--X", type=_complex)
    sp.add_argument("--Y", type=_complex)
    sp.add_argument("--map")

    sp = add("degen", cmd_degen, "degenerating paths to an ideal point")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--tau", type=_complex, required=True)
    sp.add_argument("--higher", type=_complex, default=0j, help="coefficient of the ε term of α")
    sp.add_argument("--eps", type=_float_list)
    sp.add_argument("--eps-list", type=_float_list)
    sp.add_argument("--r", type=float, default=1.0, help="test circle radius for the sup-error")
    sp.add_argument("--track", type=int, help="track cycles of this period")
    sp.add_argument("--count", action="store_true", help="include the q-cycle count")
    sp.add_argument("--count-r", type=float, default=10.0)
    sp.add_argument("--center-disc", action="store_true", help="also exclude the disc about 1 when counting")
    sp.add_argument("--report", choices=["json"], default="json")

    sp = add("render", cmd_render, "bifurcation-locus image")
    sp.add_argument("--plane", required=True, help="gk (gk-kappa) or per2 (per2-zero-slice)")
    sp.add_argument("--center", type=_pair, default=0j)
    sp.add_argument("--width", type=float)
    sp.add_argument("--res", type=int, default=512)
    sp.add_argument("--max-iter", type=int, default=20000)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--image", help="PPM output path; the job is written next to it as .json")

    sp = add("audit", cmd_audit, "index sum, eigenvalue relation and nonrepelling census", True)
    sp.add_argument("--nmax", type=int, default=6)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_VALIDATION
    try:
        data = args.func(args)
        _emit(data, args.out)
    except ValidationError as exc:
        sys.stderr.write(f"qrm: invalid input: {exc}\n")
        return EXIT_VALIDATION
    except NumericError as exc:
        sys.stderr.write(f"qrm: numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except (OSError, ValueError) as exc:
        sys.stderr.write(f"qrm: {exc}\n")
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
