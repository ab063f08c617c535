"""Command-line front end: every pipeline as a subcommand with JSON on stdout.

Exit codes: 0 ok / certified, 2 refuted, 3 inconclusive, 64 bad arguments,
65 domain could not be loaded.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources

import numpy as np

from .einstein import canonical, round_sig
from .forms import FormSpace, GeometryError

SCHEMA = 1
EX_OK, EX_REFUTED, EX_INCONCLUSIVE, EX_USAGE, EX_DATAERR = 0, 2, 3, 64, 65


class UsageError(Exception):
    pass


class DomainLoadError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _clean(x):
    """JSON-ready copy with floats rounded to 12 significant digits."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        v = round_sig(float(x))
        return v if np.isfinite(v) else str(v)
    return x


def dumps(obj):
    return json.dumps(_clean({"schema": SCHEMA, **obj}), sort_keys=True, indent=1) + "\n"


def _pair(text, name):
    try:
        a, b = (int(t) for t in text.split(","))
    except ValueError:
        raise UsageError(f"{name} expects two integers like 1,2") from None
    return a, b


def fixture_path(name):
    return str(resources.files("einkit") / "fixtures" / name)


def _limit_threads():
    n = os.environ.get("EINKIT_THREADS")
    if not n:
        return None
    try:
        n = max(1, int(n))
    except ValueError:
        raise UsageError("EINKIT_THREADS must be an integer") from None
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return None
    return threadpool_limits(n)


# ------------------------------------------------------------------ domain loading

def load_domain(data, sig=None):
    """DomainOracle from a JSON description (see README for the families)."""
    from . import causal, domains, exceptional

    if data is None:
        if sig is None:
            raise DomainLoadError("need --in or --sig")
        return domains.diamond_oracle(domains.standard_diamond(*sig))
    try:
        fam = data.get("family", "diamond")
        if fam == "diamond":
            p, q = data["sig"]
            sp = FormSpace.ein(p, q, data.get("basis", "orthonormal"))
            if "V0" in data:
                spec = domains.DiamondSpec.from_json(sp, data)
            else:
                spec = domains.standard_diamond(p, q, sp)
            return domains.diamond_oracle(spec)
        if fam in ("causal-diamond", "truncated-causal-diamond"):
            ch = causal.lorentzian_chart(int(data["n"]))
            x = causal.CausalPoint(data["x"], ch)
            y = causal.CausalPoint(data["y"], ch)
            if fam == "causal-diamond":
                return causal.causal_diamond(x, y)
            return causal.truncated_causal_diamond(x, y, causal.CausalPoint(data["cut"], ch))
        if fam == "b22":
            return exceptional.b22_oracle(data.get("beta"))
        if fam == "chart":
            return domains.chart_domain(FormSpace.ein(*data["sig"]))
    except (KeyError, TypeError, ValueError, GeometryError) as e:
        raise DomainLoadError(f"cannot build domain: {e}") from e
    raise DomainLoadError(f"unknown domain family {fam!r}")


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise DomainLoadError(f"cannot read {path}: {e}") from e


def _domain_from_args(args):
    data = _read_json(args.input) if args.input else None
    if data is not None and "domain" in data:
        data = data["domain"]
    return load_domain(data, args.sig)


# ------------------------------------------------------------------ subcommands

def cmd_distance(args, rng):
    from .markowitz import distance_report

    data = _read_json(args.input) if args.input else {}
    dom = load_domain(data.get("domain"), args.sig)
    spec = dom.diamond
    if "pairs" in data:
        try:
            pairs = np.asarray(data["pairs"], float)
            if pairs.ndim != 3 or pairs.shape[1:] != (2, dom.space.dim):
                raise ValueError("pairs must be a list of [x, y] lifts")
            if not dom.member(pairs.reshape(-1, dom.space.dim)).all():
                raise ValueError("pair points must be members")
        except (TypeError, ValueError) as e:
            raise DomainLoadError(str(e)) from e
    else:
        from .domains import sample_members

        pts = sample_members(dom, 2 * args.n, rng)
        pairs = pts.reshape(-1, 2, dom.space.dim)
    kset = dom.k_sampler(args.ksamples, rng) if dom.k_sampler is not None else None
    reps = []
    for x, y in pairs:
        r = distance_report(dom, x, y, kset=kset, spec=spec, budget=args.budget, rng=rng)
        d = r.to_dict()
        d.pop("chain", None)
        if r.chain is not None:
            d["chain_index"] = r.chain.index
        reps.append({"x": canonical(x), "y": canonical(y), **d})
    return {"command": "distance", "domain": dom.to_json(), "reports": reps}, EX_OK


def cmd_certify(args, rng):
    from .rigidity import certify_diamond

    dom = _domain_from_args(args)
    rep = certify_diamond(dom, budget=args.budget, rng=rng)
    code = {"certified-diamond": EX_OK, "refuted": EX_REFUTED}.get(rep.verdict, EX_INCONCLUSIVE)
    return {"command": "certify-diamond", "domain": dom.to_json(), "report": rep.to_dict()}, code


def cmd_dual_convexity(args, rng):
    from .domains import boundary_points, dual_convexity_check, sample_members

    dom = _domain_from_args(args)
    cloud = sample_members(dom, 2048, rng)
    _, M, dirs = boundary_points(dom, args.n, rng)
    # step just past the exit so every point is a non-member of the closure
    m0 = dom.chart.project_lift(dom.basepoint[None])[0]
    step = 1e-12
    for _ in range(30):
        inside = dom.member(canonical(dom.chart.embed_lift(M)))
        if not inside.any():
            break
        M[inside] += step * np.linalg.norm(M[inside] - m0, axis=1)[:, None] * dirs[inside]
        step *= 2
    pts = dom.chart.embed_lift(M)
    found, margins = 0, []
    for a in pts:
        try:
            r = dual_convexity_check(dom, a, budget=args.budget, rng=rng, cloud=cloud)
        except GeometryError:
            continue
        if r.vertex is not None:
            found += 1
            margins.append(r.margin)
    tested = len(pts)
    out = {"command": "dual-convexity", "domain": dom.to_json(), "boundary_points": tested,
           "supported": found, "min_margin": min(margins) if margins else None}
    if found == tested and tested:
        return out, EX_OK
    return out, EX_INCONCLUSIVE


def cmd_causal(args, rng):
    from .causal import CausalPoint, causal_convexity_check, rebuild_diamond
    from .domains import sample_members

    dom = _domain_from_args(args)
    if dom.space.ein_sig.p != 1:
        raise DomainLoadError("causal-check needs a Lorentzian domain (p = 1)")
    from .causal import lorentzian_chart

    ch = dom.chart if dom.chart.sig.p == 1 else lorentzian_chart(dom.space.dim - 2)
    x = CausalPoint.from_lift(ch, dom.basepoint)
    conv = causal_convexity_check(dom, budget=args.budget, rng=rng)
    end = rebuild_diamond(dom, x, budget=args.budget, rng=rng)
    test = np.vstack([sample_members(end.diamond, 5000, rng), sample_members(dom, 5000, rng)])
    mism = int((dom.member(test) != end.diamond.member(test)).sum())
    out = {"command": "causal-check", "domain": dom.to_json(),
           "causally_convex": conv.ok, "pairs_tested": conv.pairs_tested,
           "past_vertex": end.past.point.m, "future_vertex": end.future.point.m,
           "classes": [end.past_class, end.future_class], "mismatches": mism, "tested": len(test)}
    return out, EX_OK if (conv.ok and mism == 0) else EX_REFUTED


def cmd_dynamics(args, rng):
    from .dynamics import is_contracting, sequence_from_json, transport_compact
    from .einstein import AffineChart

    if not args.input:
        raise UsageError("dynamics needs --in with a sequence description")
    try:
        seq = sequence_from_json(_read_json(args.input))
    except (KeyError, TypeError, ValueError, GeometryError) as e:
        raise DomainLoadError(f"cannot build sequence: {e}") from e
    rep = is_contracting(seq)
    # a small compact ball in the standard chart
    ch = AffineChart.standard(seq[0].space)
    cloud = ch.embed_lift(0.1 * rng.standard_normal((64, ch.dim)))
    tr = transport_compact(seq, cloud, eps=args.tol)
    out = {"command": "dynamics", "contracting": rep.contracting, "message": rep.message,
           "final_ratios": rep.ratios[-1], "diameters": tr.diameters,
           "converged": tr.converged, "limit": tr.limit,
           "repeller": tr.repeller if isinstance(tr.repeller, str) else canonical(tr.repeller)}
    return out, EX_OK


def cmd_plucker(args, rng):
    from . import exceptional as ex
    from .forms import inertia

    sp = ex.wedge_space()
    if args.input:
        try:
            planes = [v.basis for v in ex.read_planes_csv(args.input)]
        except (OSError, ValueError, GeometryError) as e:
            raise DomainLoadError(f"cannot read planes: {e}") from e
        planes = np.array(planes)
    else:
        planes = ex.random_planes(args.n, rng)
    L = canonical(ex.plucker_lifts(planes))
    iso = float(np.abs(sp.q(L)).max())
    eq_err = 0.0
    for V in planes[: args.budget]:
        g = rng.standard_normal((4, 4))
        if np.linalg.det(g) < 0:
            g[0] *= -1
        M = ex.tau(g).mat
        a = canonical(ex.plucker_lifts(V @ g.T))
        b = canonical(ex.plucker_lifts(V) @ M.T)
        eq_err = max(eq_err, float(np.abs(a - b).max()))
    ine = inertia(sp.gram)
    W = ex.Plane2(rng.standard_normal((2, 4)))
    rank, om = ex.transversality_tests(list(planes), W)
    out = {"command": "plucker-check", "planes": len(planes), "isotropy_max": iso,
           "equivariance_max": eq_err, "omega_inertia": list(ine),
           "transverse": int(rank.sum()), "agree": int((rank == om).sum())}
    ok = iso <= 1e-12 and eq_err <= 1e-10 and tuple(ine) == (3, 3, 0) and bool((rank == om).all())
    return out, EX_OK if ok else EX_REFUTED


def cmd_components(args, rng):
    from .domains import classify_splitting_components

    s0 = _pair(args.sig0, "--sig0")
    s1 = _pair(args.sig1, "--sig1")
    try:
        info = classify_splitting_components(s0, s1)
    except GeometryError as e:
        raise UsageError(str(e)) from e
    return {"command": "components", "sig0": s0, "sig1": s1, "count": info.count,
            "proper": list(info.proper), "description": info.description}, EX_OK


COMMANDS = {
    "distance": cmd_distance,
    "certify-diamond": cmd_certify,
    "dual-convexity": cmd_dual_convexity,
    "causal-check": cmd_causal,
    "dynamics": cmd_dynamics,
    "plucker-check": cmd_plucker,
    "components": cmd_components,
}
LORENTZIAN = {"causal-check"}


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--sig", nargs=2, type=int, metavar=("P", "Q"))
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=1e-6)
    common.add_argument("--budget", type=int, default=64)
    common.add_argument("--n", type=int, default=8, help="number of samples or pairs")
    common.add_argument("--in", dest="input", metavar="FILE")
    common.add_argument("--out", metavar="FILE")
    ap = _Parser(prog="einkit", description="Conformal geometry of Einstein universes.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name, parents=[common])
        if name == "distance":
            s.add_argument("--ksamples", type=int, default=1000)
        if name == "components":
            s.add_argument("--sig0", required=True)
            s.add_argument("--sig1", required=True)
    return ap


def parse(argv):
    args = build_parser().parse_args(argv)
    if args.sig is not None:
        p, q = args.sig
        if p < 0 or q < 0 or p + q < 1:
            raise UsageError("--sig needs p, q >= 0 with p + q >= 1")
        if args.command in LORENTZIAN and p != 1:
            raise UsageError(f"{args.command} needs a Lorentzian signature (P = 1)")
    if not 0 <= args.seed < 2 ** 64:
        raise UsageError("--seed must fit in 64 bits")
    if args.budget < 1 or args.n < 1 or args.tol <= 0:
        raise UsageError("--budget and --n must be positive, --tol > 0")
    return args


def run(argv):
    """(exit code, JSON text)."""
    try:
        args = parse(argv)
    except UsageError as e:
        return EX_USAGE, dumps({"error": str(e)})
    rng = np.random.default_rng(args.seed)
    try:
        limit = _limit_threads()
        try:
            out, code = COMMANDS[args.command](args, rng)
        finally:
            if limit is not None:
                limit.restore_original_limits()
    except UsageError as e:
        return EX_USAGE, dumps({"error": str(e)})
    except DomainLoadError as e:
        return EX_DATAERR, dumps({"error": str(e)})
    out["config"] = {"sig": args.sig, "seed": args.seed, "budget": args.budget, "tol": args.tol,
                     "n": args.n}
    text = dumps(out)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    return code, text


def main(argv=None):
    code, text = run(sys.argv[1:] if argv is None else argv)
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
