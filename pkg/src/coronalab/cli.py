"""Command-line entry point: instance generation, check suites, reports.

Instances are stored as canonical JSON (sorted keys, coefficients as
[re, im] pairs ordered by multi-index) so that write -> read -> write is
byte-identical.  Every subcommand emits a tab-separated table with one
row per executed check and a machine-readable pass column; the process
exits 0 iff every executed check passed.  Stdout rows carry a runtime
column; files written via -o omit it so identical seeds give identical
bytes.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass

import numpy as np

from .matpoly import AntiPoly, MatPoly
from .pointwise import (CoronaInstance, check_identities_grid, delta_range,
                        identity_check_disk_grid)
from .potential import verify_potentials
from .quad import (functional_L, make_quadrature, xi_circle_norm,
                   xi_embedding_check)
from .solver import dual_functional_bound, solve_and_report
from . import hardy

SCHEMA_VERSION = 1


# ----------------------------------------------------------------------
# instance files
# ----------------------------------------------------------------------
def _poly_to_json(P: MatPoly) -> list:
    entries = []
    for alpha in sorted(P.coeffs):
        mat = P.coeffs[alpha]
        entries.append({
            "index": list(alpha),
            "matrix": [[[float(v.real), float(v.imag)] for v in row] for row in mat],
        })
    return entries


def _poly_from_json(entries: list, rows: int, cols: int, nvars: int) -> MatPoly:
    coeffs = {}
    for e in entries:
        mat = np.array([[complex(re, im) for re, im in row] for row in e["matrix"]])
        coeffs[tuple(e["index"])] = mat
    return MatPoly(rows, cols, nvars, coeffs)


def instance_to_json(inst: CoronaInstance) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "name": inst.name,
        "nvars": inst.nvars,
        "rows": inst.rows,
        "cols": inst.cols,
        "degree": max(inst.F.degrees()),
        "p": inst.p if inst.p != math.inf else "inf",
        "delta_sq": inst.delta_sq,
        "F": _poly_to_json(inst.F),
        "g": _poly_to_json(inst.g),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def instance_from_json(text: str) -> CoronaInstance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError(f"malformed instance file: line {e.lineno}, column {e.colno}: {e.msg}") from e
    for key in ("schema_version", "name", "nvars", "rows", "cols", "delta_sq", "F", "g"):
        if key not in doc:
            raise ValueError(f"malformed instance file: missing field '{key}'")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {doc['schema_version']}")
    nvars, rows, cols = doc["nvars"], doc["rows"], doc["cols"]
    F = _poly_from_json(doc["F"], rows, cols, nvars)
    g = _poly_from_json(doc["g"], rows, 1, nvars)
    p = math.inf if doc.get("p") == "inf" else float(doc.get("p", 2.0))
    return CoronaInstance(F, g, float(doc["delta_sq"]), p, doc["name"])


def save_instance(path: str, inst: CoronaInstance):
    with open(path, "w") as fh:
        fh.write(instance_to_json(inst))


def load_instance(path: str) -> CoronaInstance:
    with open(path) as fh:
        return instance_from_json(fh.read())


def generate_instance(rows: int, cols: int, nvars: int, degree: int,
                      delta_target: float, seed: int, p: float = 2.0,
                      name: str | None = None) -> CoronaInstance:
    """Random corona data F = s [c I | G(z)] with a certified delta_sq.

    The identity block makes F F* >= (s c)^2 I exactly; the scale s
    enforces F F* <= I from the grid estimate of the supremum.  The
    right-hand side g is a random polynomial with unit boundary norm.
    """
    if cols <= rows:
        raise ValueError("need cols >= rows + 1 (room for a kernel)")
    if not 0.0 < delta_target < 1.0:
        raise ValueError("delta_target must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    base = np.zeros((rows, cols), dtype=complex)
    base[:, :rows] = delta_target * np.eye(rows)
    coeffs = {(0,) * nvars: base}
    for alpha in np.ndindex(*((degree + 1,) * nvars)):
        tail = np.zeros((rows, cols), dtype=complex)
        tail[:, rows:] = (rng.standard_normal((rows, cols - rows))
                          + 1j * rng.standard_normal((rows, cols - rows))) / math.sqrt(2.0)
        tail[:, rows:] *= 0.5 / math.sqrt((degree + 1) ** nvars)
        coeffs[alpha] = coeffs.get(alpha, 0) + tail
    F0 = MatPoly(rows, cols, nvars, coeffs)
    _, sup = delta_range(F0, 8)
    scale = 1.0 / math.sqrt(sup * (1 + 1e-6))
    F = F0.scale(scale)
    delta_sq = (delta_target * scale) ** 2
    gc = {}
    for alpha in np.ndindex(*((min(degree, 2) + 1,) * nvars)):
        gc[alpha] = (rng.standard_normal((rows, 1)) + 1j * rng.standard_normal((rows, 1)))
    g = MatPoly(rows, 1, nvars, gc)
    g = g.scale(1.0 / g.l2_norm())
    label = name or f"gen-r{rows}-m{cols}-n{nvars}-d{degree}-s{seed}"
    return CoronaInstance(F, g, delta_sq, p, label)


def random_anti_poly(inst: CoronaInstance, degree: int, seed: int) -> AntiPoly:
    """Random anti-analytic vector polynomial with h(0) = 0."""
    rng = np.random.default_rng(seed)
    coeffs = {}
    for alpha in np.ndindex(*((degree + 1,) * inst.nvars)):
        if all(a == 0 for a in alpha):
            continue
        coeffs[alpha] = 0.5 * (rng.standard_normal((inst.cols, 1))
                               + 1j * rng.standard_normal((inst.cols, 1)))
    return AntiPoly.from_coeffs(inst.cols, 1, inst.nvars, coeffs)


# ----------------------------------------------------------------------
# report rows
# ----------------------------------------------------------------------
@dataclass
class ReportRow:
    instance: str
    check: str
    value: float | None
    bound: float | None
    passed: bool | None
    runtime_ms: int = 0


def _fmt(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, bool):
        return "pass" if x else "fail"
    return f"{x:.12g}"


def format_report(rows: list[ReportRow], include_runtime: bool) -> str:
    headers = ["instance", "check", "value", "bound", "passed"]
    if include_runtime:
        headers.append("runtime_ms")
    lines = ["\t".join(headers)]
    for r in rows:
        passed = "-" if r.passed is None else ("pass" if r.passed else "fail")
        cells = [r.instance, r.check, _fmt(r.value), _fmt(r.bound), passed]
        if include_runtime:
            cells.append(str(r.runtime_ms))
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def _timed(rows: list[ReportRow], instance: str, check: str, fn):
    t0 = time.perf_counter()
    value, bound, passed = fn()
    ms = int(round(1000 * (time.perf_counter() - t0)))
    rows.append(ReportRow(instance, check, value, bound, passed, ms))


# ----------------------------------------------------------------------
# subcommand bodies
# ----------------------------------------------------------------------
def _check_identities(inst: CoronaInstance, grid: int, tol: float) -> list[ReportRow]:
    rows: list[ReportRow] = []
    Z = identity_check_disk_grid(grid)
    for var in range(1, inst.nvars + 1):
        if inst.nvars == 1:
            Zv = Z
        else:
            # freeze the other variables at a fixed interior point
            fill = np.full((Z.shape[0], inst.nvars), 0.3 + 0.1j, dtype=complex)
            fill[:, var - 1] = Z[:, 0]
            Zv = fill
        rep = check_identities_grid(inst.F, Zv, h_step=1e-5, var=var)
        for key, val in rep.residuals.items():
            rows.append(ReportRow(inst.name, f"identity:{key}:var{var}", val, tol, val < tol))
    return rows


def _check_potentials(inst: CoronaInstance, grid: int) -> list[ReportRow]:
    rep = verify_potentials(inst, grid_density=max(12, grid // 2))
    rows = [
        ReportRow(inst.name, "potential:phi_min", rep.min_phi, -1e-8, rep.min_phi >= -1e-8),
        ReportRow(inst.name, "potential:phi_max", rep.max_phi, rep.K + 1e-8, rep.max_phi <= rep.K + 1e-8),
        ReportRow(inst.name, "potential:psi_min", rep.min_psi, -1e-8, rep.min_psi >= -1e-8),
        ReportRow(inst.name, "potential:psi_max", rep.max_psi, rep.L + 1e-8, rep.max_psi <= rep.L + 1e-8),
        ReportRow(inst.name, "potential:gap_phi", rep.worst_gap_phi, -1e-8, rep.worst_gap_phi >= -1e-8),
        ReportRow(inst.name, "potential:gap_psi", rep.worst_gap_psi, -1e-8, rep.worst_gap_psi >= -1e-8),
    ]
    if not rep.hypothesis_ok:
        rows.append(ReportRow(inst.name, "potential:hypothesis_delta_le_1_over_e",
                              inst.delta_sq, 1.0 / math.e, None))
    return rows


def _check_embedding(inst: CoronaInstance, seed: int, grid: int) -> list[ReportRow]:
    if inst.nvars != 1:
        raise ValueError("embedding checks run on one-variable instances")
    Q = make_quadrature(max(32, grid // 2), max(64, grid))
    h = random_anti_poly(inst, 3, seed)
    r1, r2 = xi_embedding_check(inst, h, Q)
    return [
        ReportRow(inst.name, "embedding:lap_phi_xi", r1.ratio, r1.bound, r1.passed),
        ReportRow(inst.name, "embedding:dbar_xi", r2.ratio, r2.bound, r2.passed),
    ]


def _check_functional(inst: CoronaInstance, seed: int, grid: int, tol: float) -> list[ReportRow]:
    if inst.nvars != 1:
        raise ValueError("functional checks run on one-variable instances")
    Q = make_quadrature(max(32, grid // 2), max(64, grid))
    h = random_anti_poly(inst, 3, seed)
    out = functional_L(inst, h, Q)
    cap = dual_functional_bound(inst.rows, inst.delta_sq) * xi_circle_norm(inst, h, Q) * inst.g.l2_norm()
    return [
        ReportRow(inst.name, "functional:split_residual", out.split_residual, tol,
                  out.split_residual < tol),
        ReportRow(inst.name, "functional:dual_bound", abs(out.boundary_value), cap,
                  abs(out.boundary_value) <= cap),
    ]


def _solve(inst: CoronaInstance, trunc: int | None, p: float) -> list[ReportRow]:
    rep = solve_and_report(inst, trunc, p)
    rows = [ReportRow(inst.name, f"solve:norm_p{p:g}", rep.achieved_norm,
                      rep.bound_value, rep.passed),
            ReportRow(inst.name, "solve:residual", rep.residual_l2, 1e-9,
                      rep.residual_l2 < 1e-9 if rep.hypothesis_ok else None)]
    if rep.trent_bound is not None:
        rows.append(ReportRow(inst.name, "solve:bound_beats_comparison",
                              rep.bound_value, rep.trent_bound,
                              rep.bound_value < rep.trent_bound))
    return rows


def _decompose(inst: CoronaInstance, band: int, seed: int, tol: float) -> list[ReportRow]:
    if inst.nvars < 2:
        raise ValueError("decomposition checks need a polydisk instance")
    rng = np.random.default_rng(seed)
    shape = (2 * band + 1,) * inst.nvars + (inst.cols,)
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    c[(slice(band, None),) * inst.nvars] = 0.0
    h = hardy.FourierTensor(inst.nvars, band, inst.cols, c)
    parts = hardy.decompose_hperp(h)
    total = parts[0]
    for pc in parts[1:]:
        total = total + pc
    rec_err = float(np.max(np.abs(total.coeffs - h.coeffs)))
    rows = [ReportRow(inst.name, "decompose:hperp_reconstruction", rec_err, 0.0, rec_err == 0.0)]

    grid = hardy.default_grid_size(band, inst.nvars)
    xi = hardy.apply_pi(inst.F, h, grid_size=grid)
    xi = xi.scale(1.0 / xi.norm2())
    dec = hardy.decompose_K(xi, inst.F, tol=tol, grid_size=grid)
    pyth = abs(xi.norm2() ** 2 - sum(p_.norm2() ** 2 for p_ in dec.parts))
    rows.append(ReportRow(inst.name, "decompose:pythagoras", pyth, 1e-4, pyth < 1e-4))
    rows.append(ReportRow(inst.name, "decompose:remainder", dec.residual, None, None))
    for q in (4.0 / 3.0, 4.0):
        cq = 1.0 / math.sin(math.pi / q)
        xq = xi.lq_norm(q, grid)
        worst = max(p_.lq_norm(q, grid) - cq ** j * xq
                    for j, p_ in enumerate(dec.parts, start=1))
        rows.append(ReportRow(inst.name, f"decompose:lq_growth_q{q:g}", worst, 1e-4,
                              worst <= 1e-4))
    return rows


def _riesz(p: float, band: int, trials: int, seed: int) -> list[ReportRow]:
    val = hardy.riesz_norm_empirical(p, band=band, trials=trials, seed=seed)
    cap = 1.0 / math.sin(math.pi / p)
    return [ReportRow("-", f"riesz:empirical_p{p:g}", val, cap + 1e-6, val <= cap + 1e-6)]


# ----------------------------------------------------------------------
# argument parsing and dispatch
# ----------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coronalab",
                                 description="corona problem laboratory")
    sub = ap.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a random certified instance")
    gen.add_argument("--rows", type=int, default=1)
    gen.add_argument("--cols", type=int, default=3)
    gen.add_argument("--nvars", type=int, default=1)
    gen.add_argument("--degree", type=int, default=2)
    gen.add_argument("--delta-target", type=float, default=0.5)
    gen.add_argument("--p", type=float, default=2.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("-o", "--output", required=True)

    def common(p_, with_seed=True):
        p_.add_argument("--instance", required=True, action="append",
                        help="instance file (repeatable)")
        p_.add_argument("--tol", type=float, default=1e-6)
        p_.add_argument("--grid", type=int, default=32)
        if with_seed:
            p_.add_argument("--seed", type=int, default=0)
        p_.add_argument("-o", "--output")

    ci = sub.add_parser("check-identities", help="derivative identities of Pi and Phi")
    common(ci, with_seed=False)
    cp = sub.add_parser("check-potentials", help="potential bounds and Laplacian gaps")
    common(cp, with_seed=False)
    ce = sub.add_parser("check-embedding", help="Carleson embeddings for xi = Pi h")
    common(ce)
    cf = sub.add_parser("check-functional", help="dual functional split and bound")
    common(cf)

    so = sub.add_parser("solve", help="least-norm corona solve with bound report")
    so.add_argument("--instance", required=True, action="append")
    so.add_argument("--trunc", type=int)
    so.add_argument("--p", type=float, default=2.0)
    so.add_argument("-o", "--output")

    de = sub.add_parser("decompose", help="polydisk decompositions")
    de.add_argument("--instance", required=True, action="append")
    de.add_argument("--band", type=int, default=8)
    de.add_argument("--seed", type=int, default=0)
    de.add_argument("--tol", type=float, default=1e-6)
    de.add_argument("-o", "--output")

    ri = sub.add_parser("riesz", help="empirical Riesz projection norm")
    ri.add_argument("--p", type=float, default=2.0)
    ri.add_argument("--band", type=int, default=128)
    ri.add_argument("--trials", type=int, default=100)
    ri.add_argument("--seed", type=int, default=0)
    ri.add_argument("-o", "--output")

    re_ = sub.add_parser("report", help="full check battery on instances")
    common(re_)
    re_.add_argument("--trunc", type=int)
    re_.add_argument("--p", type=float, default=2.0)
    return ap


def _run_rows(args) -> list[ReportRow]:
    rows: list[ReportRow] = []
    cmd = args.command

    if cmd == "riesz":
        t0 = time.perf_counter()
        rows.extend(_riesz(args.p, args.band, args.trials, args.seed))
        rows[-1].runtime_ms = int(round(1000 * (time.perf_counter() - t0)))
        return rows

    for path in args.instance:
        inst = load_instance(path)
        t0 = time.perf_counter()
        if cmd == "check-identities":
            batch = _check_identities(inst, args.grid, args.tol)
        elif cmd == "check-potentials":
            batch = _check_potentials(inst, args.grid)
        elif cmd == "check-embedding":
            batch = _check_embedding(inst, args.seed, args.grid * 4)
        elif cmd == "check-functional":
            batch = _check_functional(inst, args.seed, args.grid * 4, 1e-5)
        elif cmd == "solve":
            batch = _solve(inst, args.trunc, args.p)
        elif cmd == "decompose":
            batch = _decompose(inst, args.band, args.seed, args.tol)
        elif cmd == "report":
            batch = _check_identities(inst, args.grid, args.tol)
            batch += _check_potentials(inst, args.grid)
            if inst.nvars == 1:
                batch += _check_embedding(inst, args.seed, args.grid * 4)
                batch += _check_functional(inst, args.seed, args.grid * 4, 1e-5)
            batch += _solve(inst, args.trunc, args.p)
            if inst.nvars >= 2:
                batch += _decompose(inst, 8, args.seed, args.tol)
        else:
            raise ValueError(f"unknown command {cmd}")
        ms = int(round(1000 * (time.perf_counter() - t0)))
        if batch:
            batch[0].runtime_ms = ms
        rows.extend(batch)
    return rows


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "gen":
        inst = generate_instance(args.rows, args.cols, args.nvars, args.degree,
                                 args.delta_target, args.seed, args.p)
        save_instance(args.output, inst)
        print(f"wrote {args.output}: {inst.name} delta_sq={inst.delta_sq:.6g}")
        return 0
    try:
        rows = _run_rows(args)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    sys.stdout.write(format_report(rows, include_runtime=True))
    if getattr(args, "output", None):
        with open(args.output, "w") as fh:
            fh.write(format_report(rows, include_runtime=False))
    return 0 if all(r.passed is not False for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
