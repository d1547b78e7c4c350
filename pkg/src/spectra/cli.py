"""Command-line front end: ``spectra <group> <command> ...``.

Exit codes: 0 on success, 1 when a check fails, 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import manifolds as mf
from . import perm_core as pc
from . import spectral as sp
from . import spectral_fn as sf
from . import strata as st
from . import verify as vf

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# parsing helpers ------------------------------------------------------------


def _vector(text: str) -> np.ndarray:
    text = text.strip()
    if text.startswith("["):
        return np.array(json.loads(text), dtype=float)
    return np.array([float(t) for t in text.replace(",", " ").split()], dtype=float)


def _partition(text: str, n: int | None = None) -> pc.Partition:
    """A partition given as JSON blocks ``[[1,2],[3]]`` or as cycle notation."""
    text = text.strip()
    if text.startswith("["):
        return pc.Partition(json.loads(text), n)
    return pc.parse_cycles(text, n).partition()


def _perm(text: str, n: int | None = None) -> pc.Permutation:
    text = text.strip()
    if text.startswith("["):
        return pc.Permutation(json.loads(text))
    return pc.parse_cycles(text, n)


def _perm_or_partition(text: str, n: int | None = None):
    t = text.strip()
    if t.startswith("[[") or t.startswith("[ ["):
        return _partition(t, n)
    return _perm(t, n)


def _perm_pair(a: str, b: str, n: int | None):
    p, q = _perm(a, n), _perm(b, n)
    if n is None and p.n != q.n:
        m = max(p.n, q.n)
        p, q = _perm(a, m), _perm(b, m)
    return p, q


def _fmt_partition(P: pc.Partition) -> str:
    return "{" + ",".join("{" + ",".join(map(str, b)) + "}" for b in P.blocks) + "}"


def _cell(v):
    return v if isinstance(v, (str, int, float, bool)) or v is None else json.dumps(v)


def _render(obj: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(obj, indent=2) + "\n"
    if fmt == "pretty":
        return "".join(f"{k}: {_cell(v)}\n" for k, v in obj.items())
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(obj), lineterminator="\n")
    w.writeheader()
    w.writerow({k: _cell(v) for k, v in obj.items()})
    return buf.getvalue()


def _emit(a, obj: dict, out: str | None = None):
    """Structured result: JSON by default; files are always JSON."""
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(_render(obj, "json"))
    else:
        sys.stdout.write(_render(obj, a.format or "json"))


def _say(a, text: str, **fields):
    """One-line result; ``--format`` switches to the structured fields instead."""
    if a.format is None:
        print(text)
    else:
        sys.stdout.write(_render(fields, a.format))


# perm -----------------------------------------------------------------------


def cmd_perm_order(a):
    s2, s = _perm_pair(a.sigma2, a.sigma, a.n)
    o = pc.much_smaller(s2, s).name
    _say(a, o, order=o)
    return EXIT_OK


def cmd_perm_meet(a):
    s, t = _perm_or_partition(a.sigma, a.n), _perm_or_partition(a.sigma2, a.n)
    if a.n is None and s.n != t.n:
        m = max(s.n, t.n)
        s, t = _perm_or_partition(a.sigma, m), _perm_or_partition(a.sigma2, m)
    P = pc.meet(s, t)
    _say(a, _fmt_partition(P), partition=P.to_json())
    return EXIT_OK


def cmd_perm_conjugate(a):
    t, s = _perm_pair(a.tau, a.sigma, a.n)
    c = pc.format_cycles(pc.conjugate(t, s))
    _say(a, c, conjugate=c)
    return EXIT_OK


def cmd_perm_s_succsim(a):
    s = _perm(a.sigma, a.n)
    if a.count:
        k = pc.card_S_succsim(s)
        _say(a, str(k), count=k)
    else:
        elems = [pc.format_cycles(g) for g in pc.enumerate_S_succsim(s)]
        _say(a, "\n".join(elems), elements=elems)
    return EXIT_OK


def cmd_perm_fm_split(a):
    ref = _partition(a.reference, a.n)
    split = pc.FMSplit.from_reference(ref)
    out = {"F": list(split.f_indices), "M": list(split.m_indices), "kappa_star": split.kappa_star}
    if a.x:
        xf, xm = pc.canonical_split(_vector(a.x), split)
        out["xF"], out["xM"] = xf.tolist(), xm.tolist()
    if a.perm:
        sf_, sm_ = pc.fm_decompose_perm(_perm(a.perm, ref.n), split)
        out["sigmaF"], out["sigmaM"] = pc.format_cycles(sf_), pc.format_cycles(sm_)
    _emit(a, out)
    return EXIT_OK


# strata ---------------------------------------------------------------------


def cmd_strata_verify(a):
    rep = st.verify_stratification_properties(a.n, seed=a.seed)
    obj = {"seed": a.seed, **rep.to_json()}
    if a.report:
        _emit(a, obj, a.report)
    cases, status = sum(rep.checks.values()), "PASS" if rep.passed else "FAIL"
    _say(a, f"n={a.n} cases={cases} {status}", seed=a.seed, n=a.n, cases=cases, status=status)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_strata_project(a):
    x = _vector(a.x)
    P = _partition(a.partition, x.size)
    y = st.project_perp(P, x) if a.perp else st.project_perpperp(P, x)
    _emit(a, {"partition": P.to_json(), "x": x.tolist(), "perp" if a.perp else "perpperp": y.tolist()})
    return EXIT_OK


def cmd_strata_radius(a):
    r = float(st.ball_preservation_radius(_vector(a.x)))
    _say(a, repr(r), radius=r)
    return EXIT_OK


# spectral -------------------------------------------------------------------


def _load_matrix(a) -> np.ndarray:
    if a.matrix:
        with open(a.matrix, encoding="utf-8") as fh:
            obj = json.load(fh)
        return sp.matrix_from_json(obj.get("matrix", obj))
    if a.data:
        return np.array(json.loads(a.data), dtype=float)
    raise UsageError("give --matrix FILE or --data JSON")


def cmd_spectral_lift(a):
    x = _vector(a.x)
    U = sp.random_orthogonal(x.size, a.seed)
    X = sp.lift_point(x, U)
    _emit(a, {"seed": a.seed, "x": x.tolist(), "trace": float(np.trace(X)), "matrix": sp.matrix_to_json(X)}, a.out)
    return EXIT_OK


def cmd_spectral_eig(a):
    lam = sp.eigenvalues(_load_matrix(a))
    _emit(a, {"eigenvalues": lam.tolist()})
    return EXIT_OK


def cmd_spectral_orbit_dim(a):
    x = _vector(a.x)
    closed, numeric = sp.orbit_dimension(x), sp.orbit_dimension_numeric(x)
    status = "PASS" if closed == numeric else "FAIL"
    _say(a, f"closed_form={closed} commutator_rank={numeric} {status}",
         closed_form=closed, commutator_rank=numeric, status=status)
    return EXIT_OK if closed == numeric else EXIT_FAIL


# specfn ---------------------------------------------------------------------


def cmd_specfn_gradcheck(a):
    try:
        f = sf.builtin(a.f)
    except KeyError as exc:
        raise UsageError(str(exc)) from None
    rng = np.random.default_rng(a.seed)
    worst = 0.0
    for k in range(a.trials):
        X = vf.spectral_test_matrix(a.f, a.n, rng, k)
        worst = max(worst, sf.gradcheck(f, X))
    ok = worst < 1e-6
    _emit(a, {"seed": a.seed, "f": a.f, "n": a.n, "trials": a.trials, "max_rel_error": worst,
           "status": "PASS" if ok else "FAIL"})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_specfn_symmetrize(a):
    p = sf.Polynomial.from_json(json.loads(a.poly), a.n)
    q = sf.symmetrize(p)
    _emit(a, {"symmetric": q.is_symmetric(), "polynomial": q.to_json()})
    return EXIT_OK


# manifold -------------------------------------------------------------------


def _manifold_from_args(a) -> mf.ManifoldDescriptor:
    bp = _vector(a.base_point) if a.base_point else None
    if a.spec:
        M = mf.load_descriptor(a.spec)
        return M if bp is None else M.with_base_point(bp)
    if not a.builtin:
        raise UsageError("give --builtin KIND or --spec FILE")
    if a.builtin == "constant_support":
        if a.n is None or a.r is None:
            raise UsageError("constant_support needs --n and --r")
        return mf.constant_support(a.n, a.r, bp)
    if not a.partition:
        raise UsageError(f"{a.builtin} needs --partition")
    P = _partition(a.partition, a.n)
    if a.builtin == "stratum":
        return mf.stratum(P, bp)
    if a.builtin == "affine":
        return mf.affine_perpperp(P, bp)
    center = _vector(a.center) if a.center and ("," in a.center or "[" in a.center) else float(a.center or 0.0)
    return mf.sphere_in_perpperp(P, center, a.radius, bp)


def cmd_manifold_dimcheck(a):
    M = _manifold_from_args(a)
    c = mf.dimension_check(M, seed=a.seed, n_samples=a.samples)
    row = {"seed": a.seed, **c.row()}
    if a.out:
        with open(a.out, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=list(row))
            w.writeheader()
            w.writerow(row)
    _say(a, f"predicted={c.predicted} estimated={c.estimated} {c.status}", **row)
    return EXIT_OK if c.passed else EXIT_FAIL


def cmd_manifold_characteristic(a):
    M = _manifold_from_args(a)
    chi = mf.characteristic_permutation(M, seed=a.seed)
    _emit(a, {"seed": a.seed, "partition": chi.partition.to_json(), "kappa_star": chi.kappa_star,
              "m_star": chi.m_star})
    return EXIT_OK


def cmd_manifold_symmetry(a):
    M = _manifold_from_args(a)
    rep = mf.verify_tangent_normal_symmetry(M)
    _emit(a, rep.to_json())
    return EXIT_OK if rep.ok else EXIT_FAIL


# verify ---------------------------------------------------------------------


def cmd_verify_run(a):
    config = {}
    if a.config:
        with open(a.config, encoding="utf-8") as fh:
            config = json.load(fh)
    if a.seed is not None:
        config["seed"] = a.seed
    if a.n:
        config["n"] = a.n
    if a.only:
        config["checks"] = a.only
    if a.inject_fault:
        config["inject_fault"] = a.inject_fault
    if a.jobs:
        config["jobs"] = a.jobs
    if a.timings:
        config["timings"] = True
    report = vf.run_suite(config)
    text = vf.report_to_json(report)
    if a.out:
        with open(a.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        s = report["summary"]
        print(f"pass={s['pass']} fail={s['fail']} error={s['error']}")
    else:
        sys.stdout.write(text)
    return EXIT_OK if report["all_passed"] else EXIT_FAIL


def cmd_verify_y_rank(a):
    y = json.loads(a.y) if a.y.strip().startswith("[") else [float(t) if "." in t else int(t)
                                                             for t in a.y.replace(",", " ").split()]
    Y = vf.build_Y(y)
    r = vf.rank_Y(Y)
    rows, cols = Y.rows.shape
    _say(a, f"rows={rows} cols={cols} rank={r}", rows=rows, cols=cols, rank=r)
    return EXIT_OK


def cmd_verify_corollary(a):
    P = _partition(a.partition, a.n)
    y = None
    if a.y:
        y = [int(t) if t.lstrip("-").isdigit() else float(t) for t in a.y.replace(",", " ").split()]
    ok = vf.check_corollary_A2(P, y, trials=a.trials, seed=a.seed)
    _say(a, "trivial kernel" if ok else "nontrivial kernel", seed=a.seed, partition=P.to_json(),
         trivial_kernel=ok)
    return EXIT_OK if ok else EXIT_FAIL


# parser ---------------------------------------------------------------------


def _manifold_args(p):
    p.add_argument("--builtin", choices=["stratum", "affine", "sphere", "constant_support"])
    p.add_argument("--spec", help="JSON manifold descriptor")
    p.add_argument("--partition")
    p.add_argument("--n", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--center")
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--base-point")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spectra", description="Spectral sets and manifolds toolkit")
    ap.add_argument("--format", choices=["json", "csv", "pretty"],
                    help="output format (default: plain line or JSON, per command)")
    groups = ap.add_subparsers(dest="group", required=True)

    perm = groups.add_parser("perm", help="permutations and partitions").add_subparsers(dest="cmd", required=True)
    p = perm.add_parser("order", help="classify sigma2 against sigma")
    p.add_argument("sigma2"), p.add_argument("sigma"), p.add_argument("--n", type=int)
    p.set_defaults(func=cmd_perm_order)
    p = perm.add_parser("meet", help="finest common coarsening of two partitions")
    p.add_argument("sigma"), p.add_argument("sigma2"), p.add_argument("--n", type=int)
    p.set_defaults(func=cmd_perm_meet)
    p = perm.add_parser("conjugate", help="tau sigma tau^-1")
    p.add_argument("tau"), p.add_argument("sigma"), p.add_argument("--n", type=int)
    p.set_defaults(func=cmd_perm_conjugate)
    p = perm.add_parser("s-succsim", help="block-preserving permutations")
    p.add_argument("sigma"), p.add_argument("--n", type=int), p.add_argument("--count", action="store_true")
    p.set_defaults(func=cmd_perm_s_succsim)
    p = perm.add_parser("fm-split", help="fixed-point / moved split of a reference partition")
    p.add_argument("reference"), p.add_argument("--n", type=int)
    p.add_argument("--x", help="vector to split"), p.add_argument("--perm", help="permutation to decompose")
    p.set_defaults(func=cmd_perm_fm_split)

    strata = groups.add_parser("strata", help="stratification of R^n").add_subparsers(dest="cmd", required=True)
    p = strata.add_parser("verify")
    p.add_argument("--n", type=int, required=True), p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report")
    p.set_defaults(func=cmd_strata_verify)
    p = strata.add_parser("project")
    p.add_argument("--partition", required=True), p.add_argument("--x", required=True)
    p.add_argument("--perp", action="store_true")
    p.set_defaults(func=cmd_strata_project)
    p = strata.add_parser("radius")
    p.add_argument("--x", required=True)
    p.set_defaults(func=cmd_strata_radius)

    spec = groups.add_parser("spectral", help="eigenvalues and lifts").add_subparsers(dest="cmd", required=True)
    p = spec.add_parser("lift")
    p.add_argument("--x", required=True), p.add_argument("--seed", type=int, default=0), p.add_argument("--out")
    p.set_defaults(func=cmd_spectral_lift)
    p = spec.add_parser("eig")
    p.add_argument("--matrix"), p.add_argument("--data")
    p.set_defaults(func=cmd_spectral_eig)
    p = spec.add_parser("orbit-dim")
    p.add_argument("--x", required=True)
    p.set_defaults(func=cmd_spectral_orbit_dim)

    fn = groups.add_parser("specfn", help="spectral functions").add_subparsers(dest="cmd", required=True)
    p = fn.add_parser("gradcheck")
    p.add_argument("--f", required=True, help=", ".join(sorted(sf.BUILTIN_FUNCTIONS)))
    p.add_argument("--n", type=int, default=4), p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_specfn_gradcheck)
    p = fn.add_parser("symmetrize")
    p.add_argument("--poly", required=True, help='e.g. [{"exponents":[1,0],"coeff":1}]')
    p.add_argument("--n", type=int)
    p.set_defaults(func=cmd_specfn_symmetrize)

    man = groups.add_parser("manifold", help="locally symmetric manifolds").add_subparsers(dest="cmd", required=True)
    p = man.add_parser("dimcheck")
    _manifold_args(p)
    p.add_argument("--samples", type=int), p.add_argument("--out", help="CSV report")
    p.set_defaults(func=cmd_manifold_dimcheck)
    p = man.add_parser("characteristic")
    _manifold_args(p)
    p.set_defaults(func=cmd_manifold_characteristic)
    p = man.add_parser("symmetry")
    _manifold_args(p)
    p.set_defaults(func=cmd_manifold_symmetry)

    ver = groups.add_parser("verify", help="property suite and the matrix Y").add_subparsers(dest="cmd", required=True)
    p = ver.add_parser("run")
    p.add_argument("--config"), p.add_argument("--out"), p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int, nargs="+"), p.add_argument("--only", nargs="+", help="check ids or prefixes")
    p.add_argument("--inject-fault", nargs="+"), p.add_argument("--jobs", type=int)
    p.add_argument("--timings", action="store_true", help="record runtimes (makes output non-repeatable)")
    p.set_defaults(func=cmd_verify_run)
    p = ver.add_parser("y-rank")
    p.add_argument("--y", required=True)
    p.set_defaults(func=cmd_verify_y_rank)
    p = ver.add_parser("corollary")
    p.add_argument("--partition", required=True), p.add_argument("--n", type=int)
    p.add_argument("--y"), p.add_argument("--trials", type=int, default=1), p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify_corollary)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, pc.CycleParseError, pc.CapExceededError, pc.DimensionMismatchError,
            mf.ManifoldError, sp.NotSymmetricError, ValueError, KeyError, OSError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
