"""Command-line surface: JSON matrix I/O, one subcommand per public
operation, and deterministic certificate reports.

Exit codes: 0 accepted/pass, 2 rejected/refuted, 3 inconclusive, 1 input
error. Reports go to stdout as JSON; matrix artifacts go to --out DIR.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, commutative, cpmap, discrete_roots, fixtures, semigroups
from .cpmap import CMap
from .discrete_roots import Inconclusive
from .errors import CPRootsError, NotIdempotent, NotUNCP, OrderOutOfRange
from .numerics import Tolerance
from .semigroups import GeneratorSpec, GridShiftSpec, NotApplicable, Refuted

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_REJECTED = 2
EXIT_INCONCLUSIVE = 3


class InputError(Exception):
    pass


# -- matrix file format ----------------------------------------------------------


def write_matrix(path: Path, m: np.ndarray) -> None:
    a = np.asarray(m, dtype=complex)
    data = [[float(z.real), float(z.imag)] for z in a.reshape(-1)]  # row-major
    payload = {"rows": int(a.shape[0]), "cols": int(a.shape[1]), "data": data}
    path.write_text(json.dumps(payload))


def read_matrix(path: str) -> np.ndarray:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(
            f"malformed JSON in {path}: {exc.msg} at line {exc.lineno} column {exc.colno}"
        ) from exc
    if isinstance(payload, list):  # bare array: a vector
        vec = np.asarray(payload, dtype=float)
        return vec
    for key in ("rows", "cols", "data"):
        if key not in payload:
            raise InputError(f"{path}: missing field {key!r}")
    rows, cols, data = payload["rows"], payload["cols"], payload["data"]
    if len(data) != rows * cols:
        raise InputError(f"{path}: data length {len(data)} != rows*cols = {rows * cols}")
    flat = np.array([complex(re, im) for re, im in data])
    if not np.all(np.isfinite(flat.real)) or not np.all(np.isfinite(flat.imag)):
        raise InputError(f"{path}: non-finite entries")
    return flat.reshape(rows, cols)


def parse_prob_vector(spec: str) -> np.ndarray:
    """Probability vector from an inline tuple like '(1/2,1/3,1/6)' or a file."""
    s = spec.strip()
    if s.startswith("("):
        if not s.endswith(")"):
            raise InputError(f"unbalanced parentheses in {spec!r}")
        parts = [p for p in s[1:-1].split(",") if p.strip()]
        try:
            return np.array([float(Fraction(p.strip())) for p in parts])
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"cannot parse probability entry in {spec!r}: {exc}") from exc
    m = read_matrix(spec)
    return m.reshape(-1).real


def parse_times(spec: str) -> list[float]:
    try:
        return [float(t) for t in spec.split(",") if t.strip()]
    except ValueError as exc:
        raise InputError(f"cannot parse time list {spec!r}: {exc}") from exc


def file_sha256(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def load_map(path: str, tol: Tolerance) -> CMap:
    m = read_matrix(path)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InputError(f"{path}: expected a square superoperator matrix")
    try:
        return cpmap.from_superop(m, tol)
    except CPRootsError as exc:
        raise InputError(f"{path}: {exc}") from exc


def load_state(path: str, tol: Tolerance) -> cpmap.StateSpec:
    m = read_matrix(path)
    try:
        return cpmap.make_state(m)
    except (CPRootsError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc


# -- reporting -------------------------------------------------------------------


def emit(report: dict, code: int) -> int:
    print(json.dumps(report, indent=2, sort_keys=True, default=_json_default))
    return code


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (complex, np.complexfloating)):
        return [obj.real, obj.imag]
    raise TypeError(f"not JSON serializable: {type(obj)}")


def base_report(command: str, inputs: dict, seed=None) -> dict:
    return {
        "command": command,
        "inputs": inputs,
        "seed": seed,
        "tool_version": __version__,
    }


def artifact_dir(args) -> Path | None:
    if args.out is None:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- subcommand handlers ------------------------------------------------------------


def cmd_check_cp(args) -> int:
    tol = Tolerance(args.tol, args.tol) if args.tol else Tolerance()
    m = load_map(args.map, tol)
    flag, min_eig = cpmap.is_cp(m, tol)
    report = base_report("check-cp", {"map": file_sha256(args.map), "tol": args.tol})
    report.update(
        {
            "dim": m.dim,
            "cp": flag,
            "choi_min_eig": min_eig,
            "unital": cpmap.is_unital(m, tol),
            "idempotent": cpmap.is_idempotent(m, tol),
            "verdict": "accepted" if flag else "rejected",
        }
    )
    return emit(report, EXIT_OK if flag else EXIT_REJECTED)


def cmd_support(args) -> int:
    tol = Tolerance()
    m = load_map(args.map, tol)
    try:
        proj = cpmap.support_projection(m, tol)
    except NotUNCP as exc:
        return emit(
            {**base_report("support", {"map": file_sha256(args.map)}),
             "verdict": "rejected", "reason": str(exc)},
            EXIT_REJECTED,
        )
    report = base_report("support", {"map": file_sha256(args.map)})
    report.update({"dim": m.dim, "rank": proj.rank, "verdict": "accepted"})
    out = artifact_dir(args)
    if out is not None:
        write_matrix(out / "support_projection.json", proj.matrix)
        report["artifacts"] = {"projection": str(out / "support_projection.json")}
    return emit(report, EXIT_OK)


def cmd_root_state(args) -> int:
    tol = Tolerance()
    state = load_state(args.density, tol)
    inputs = {"density": file_sha256(args.density), "n": args.n}
    report = base_report("root state", inputs, seed=args.seed)
    try:
        tau, cert = discrete_roots.construct_state_root(state, args.n)
    except (OrderOutOfRange, CPRootsError) as exc:
        report.update({"verdict": "rejected", "reason": str(exc)})
        return emit(report, EXIT_REJECTED)
    report.update({"dim": state.dim, "support_rank": state.support_rank,
                   "certificate": cert.to_dict(), "verdict": cert.to_dict()["verdict"]})
    out = artifact_dir(args)
    if out is not None:
        write_matrix(out / "tau_superop.json", tau.superop)
        report["artifacts"] = {"tau_superop": str(out / "tau_superop.json")}
    return emit(report, EXIT_OK if cert.accepted else EXIT_REJECTED)


def cmd_root_stochastic(args) -> int:
    p = commutative.make_prob_vector(parse_prob_vector(args.p))
    inputs = {"p": list(map(float, p.entries)), "n": args.n}
    report = base_report("root stochastic", inputs)
    try:
        tau, cert = commutative.construct_commutative_root(p, args.n)
    except CPRootsError as exc:
        report.update({"verdict": "rejected", "reason": str(exc)})
        return emit(report, EXIT_REJECTED)
    report.update({"dim": p.dim, "support_rank": p.support_rank,
                   "certificate": cert.to_dict(), "verdict": cert.to_dict()["verdict"]})
    out = artifact_dir(args)
    if out is not None:
        write_matrix(out / "tau_stochastic.json", tau.entries.astype(complex))
        report["artifacts"] = {"tau": str(out / "tau_stochastic.json")}
    return emit(report, EXIT_OK if cert.accepted else EXIT_REJECTED)


def cmd_root_search(args) -> int:
    tol = Tolerance()
    phi = load_map(args.map, tol)
    report = base_report(
        "root search",
        {"map": file_sha256(args.map), "n": args.n, "restarts": args.restarts},
        seed=args.seed,
    )
    try:
        result = discrete_roots.search_root_numeric(
            phi, args.n, restarts=args.restarts, seed=args.seed
        )
    except NotUNCP as exc:
        report.update({"verdict": "rejected", "reason": str(exc)})
        return emit(report, EXIT_REJECTED)
    if isinstance(result, Inconclusive):
        report.update(
            {
                "verdict": "inconclusive",
                "best_residual": result.best_residual,
                "note": result.message,
            }
        )
        return emit(report, EXIT_INCONCLUSIVE)
    tau, cert = result
    report.update({"certificate": cert.to_dict(), "verdict": "accepted"})
    out = artifact_dir(args)
    if out is not None:
        write_matrix(out / "tau_superop.json", tau.superop)
        report["artifacts"] = {"tau_superop": str(out / "tau_superop.json")}
    return emit(report, EXIT_OK)


def cmd_verify_root(args) -> int:
    tol = Tolerance()
    tau = load_map(args.tau, tol)
    phi = load_map(args.phi, tol)
    cert = discrete_roots.verify_proper_root(tau, phi, args.n, tol)
    report = base_report(
        "verify-root",
        {"tau": file_sha256(args.tau), "phi": file_sha256(args.phi), "n": args.n},
    )
    report.update({"certificate": cert.to_dict(), "verdict": cert.to_dict()["verdict"]})
    if not cert.accepted:
        report["reason"] = cert.reason
    return emit(report, EXIT_OK if cert.accepted else EXIT_REJECTED)


def cmd_asymptotic(args) -> int:
    tol = Tolerance()
    phi = load_map(args.map, tol)
    report = base_report("asymptotic", {"map": file_sha256(args.map)})
    try:
        gen = semigroups.asymptotic_root(phi, tol)
    except (NotIdempotent, NotUNCP) as exc:
        report.update({"verdict": "refuted", "reason": str(exc)})
        return emit(report, EXIT_REJECTED)
    times = parse_times(args.times) if args.times else [0.1, 0.5, 1.0, 5.0, 20.0]
    rng = np.random.default_rng(0)
    x = rng.standard_normal((phi.dim, phi.dim)) + 1j * rng.standard_normal((phi.dim, phi.dim))
    residuals = semigroups.asymptotic_rate_check(gen, phi, x, times)
    report.update(
        {
            "verdict": "accepted",
            "ccp": gen.ccp_flag,
            "ccp_witness": gen.ccp_witness,
            "unital_residual": gen.unital_residual,
            "rate_residuals": dict(zip(map(str, times), residuals.tolist())),
        }
    )
    out = artifact_dir(args)
    if out is not None:
        write_matrix(out / "generator.json", gen.generator)
        report["artifacts"] = {"generator": str(out / "generator.json")}
    return emit(report, EXIT_OK)


def cmd_continuous(args) -> int:
    tol = Tolerance()
    phi = load_map(args.map, tol)
    report = base_report("continuous", {"map": file_sha256(args.map)})
    result = semigroups.continuous_root_candidate(phi, tol)
    if isinstance(result, Refuted):
        report.update(
            {
                "verdict": "refuted",
                "reason": result.reason,
                "heuristic": result.heuristic,
                "detail": result.detail,
            }
        )
        return emit(report, EXIT_REJECTED)
    report.update(
        {
            "verdict": "accepted",
            "ccp": result.ccp_flag,
            "ccp_witness": result.ccp_witness,
            "unital_residual": result.unital_residual,
            "generator_eigenvalues": sorted(
                np.linalg.eigvals(result.generator).tolist(), key=lambda z: (z.real, z.imag)
            ),
        }
    )
    out = artifact_dir(args)
    if out is not None:
        write_matrix(out / "generator.json", result.generator)
        report["artifacts"] = {"generator": str(out / "generator.json")}
    return emit(report, EXIT_OK)


def cmd_shift_demo(args) -> int:
    family = semigroups.grid_shift_root(GridShiftSpec(args.m))
    m = args.m
    phi = family.phi
    law = []
    for j in range(m + 1):
        for k in range(m + 1 - j):
            lhs = family.at(j / m).superop @ family.at(k / m).superop
            law.append(float(np.linalg.norm(lhs - family.at((j + k) / m).superop, 2)))
    uncp_min = min(mp.flags.cp_min_eig for mp in family._maps)
    t1_resid = float(np.linalg.norm(family.at(1.0).superop - phi.superop, 2))
    times = parse_times(args.times) if args.times else family.times
    invariance = semigroups.state_invariance_check(family, phi, times)
    rng = np.random.default_rng(1)
    psi = cpmap.random_uncp(family.spec.dim, 2, rng)
    absorption = semigroups.absorption_check(psi, family, [1.0, 1.5, 2.0])
    report = base_report("shift-demo", {"m": m})
    report.update(
        {
            "verdict": "accepted",
            "semigroup_law_max_residual": max(law),
            "choi_min_eig_worst": uncp_min,
            "tau_1_equals_phi_residual": t1_resid,
            "invariance_max_residual": float(invariance.max()),
            "absorption_max_residual": float(absorption.max()),
        }
    )
    return emit(report, EXIT_OK)


def cmd_fixtures(args) -> int:
    rows = []

    def add(name: str, passed: bool, detail: str):
        rows.append({"fixture": name, "status": "pass" if passed else "FAIL", "detail": detail})

    swap, restrict, half = fixtures.diag_swap(), fixtures.diag_restrict(), fixtures.offdiag_scale()
    flip = fixtures.flip_scale()

    cert = discrete_roots.verify_proper_root(swap, restrict, 2)
    add("diag-restrict square root", cert.accepted, cert.reason)

    ok = True
    for n in range(2, 7):
        c = discrete_roots.verify_proper_root(fixtures.offdiag_scale_root(n), half, n)
        ok = ok and c.accepted
    add("offdiag-half roots n=2..6", ok, "scaling roots verified")

    verdict = fixtures.swap_family_root_oracle(0.0, 2)
    search = discrete_roots.search_root_numeric(
        swap, 2, restarts=args.restarts, seed=args.seed
    )
    agreed = (not verdict.exists) and isinstance(search, Inconclusive)
    add(
        "diag-swap no square root",
        agreed,
        f"oracle margin {verdict.margin:.3g}; search inconclusive: "
        f"{isinstance(search, Inconclusive)}",
    )

    cube = discrete_roots.search_root_numeric(flip, 3, restarts=args.restarts, seed=args.seed)
    found = not isinstance(cube, Inconclusive)
    add("flip-half cube root by search", found,
        "accepted certificate" if found else f"best residual {cube.best_residual:.3e}")
    even = fixtures.swap_family_root_oracle(0.5, 2)
    add("flip-half even-order obstruction", not even.exists, even.witness)

    result = semigroups.continuous_root_candidate(half)
    ok = isinstance(result, GeneratorSpec)
    if ok:
        ev = np.sort_complex(np.linalg.eigvals(result.generator))
        target = np.sort_complex(np.array([0.0, 0.0, -np.log(2.0), -np.log(2.0)]))
        ok = bool(np.abs(ev - target).max() < 1e-9)
    add("offdiag-half continuous generator", ok, "eigenvalues {0, 0, -ln 2, -ln 2}")

    p = commutative.make_prob_vector([0.5, 1 / 3, 1 / 6])
    _, ccert = commutative.construct_commutative_root(p, 2)
    add("stochastic root d=3 n=2", ccert.accepted, ccert.reason)

    passed = all(r["status"] == "pass" for r in rows)
    report = base_report("fixtures", {"restarts": args.restarts}, seed=args.seed)
    report.update({"table": rows, "verdict": "accepted" if passed else "rejected"})
    return emit(report, EXIT_OK if passed else EXIT_REJECTED)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cproots",
        description="Construct and verify roots of unital completely positive maps.",
    )
    parser.add_argument("--out", help="directory for matrix artifacts", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-cp", help="complete-positivity check of a superoperator")
    p.add_argument("--map", required=True)
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=cmd_check_cp)

    p = sub.add_parser("support", help="support projection of a UNCP map")
    p.add_argument("--map", required=True)
    p.set_defaults(func=cmd_support)

    root = sub.add_parser("root", help="root constructions and search")
    rsub = root.add_subparsers(dest="root_command", required=True)

    p = rsub.add_parser("state", help="proper n-th root of a state map on M_d")
    p.add_argument("--density", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_root_state)

    p = rsub.add_parser("stochastic", help="proper n-th root of a rank-one stochastic matrix")
    p.add_argument("--p", required=True, help="file, or inline tuple like '(1/2,1/3,1/6)'")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_root_stochastic)

    p = rsub.add_parser("search", help="heuristic numerical root search")
    p.add_argument("--map", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_root_search)

    p = sub.add_parser("verify-root", help="certify tau^n = phi with properness")
    p.add_argument("--tau", required=True)
    p.add_argument("--phi", required=True)
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_verify_root)

    p = sub.add_parser("asymptotic", help="asymptotic continuous root of an idempotent map")
    p.add_argument("--map", required=True)
    p.add_argument("--times", default=None)
    p.set_defaults(func=cmd_asymptotic)

    p = sub.add_parser("continuous", help="principal-branch continuous-root candidate")
    p.add_argument("--map", required=True)
    p.set_defaults(func=cmd_continuous)

    p = sub.add_parser("shift-demo", help="grid realization of the pure-state shift root")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--times", default=None)
    p.set_defaults(func=cmd_shift_demo)

    p = sub.add_parser("fixtures", help="run the reference-map suite")
    p.add_argument("--restarts", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_fixtures)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(json.dumps({"error": str(exc), "verdict": "input-error"}))
        return EXIT_INPUT
    except (ValueError, OSError) as exc:
        print(json.dumps({"error": str(exc), "verdict": "input-error"}))
        return EXIT_INPUT
    except CPRootsError as exc:
        print(json.dumps({"error": str(exc), "verdict": "rejected"}))
        return EXIT_REJECTED


if __name__ == "__main__":
    sys.exit(main())
