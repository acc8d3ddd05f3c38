"""Command-line front end.

::

    doublepole run --config ep.json [--outdir ./out] [--seed 0] [--quiet]
    doublepole validate --config ep.json

``run`` writes ``trace.csv``, ``result.json`` and ``summary.txt``.  Exit codes:
0 success, 2 invalid or unreadable config (nothing is written), 3 numerical
failure (non-convergence, a loop hitting a branch point, a singular
resolvent).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from . import __version__
from . import config as cfg
from .branch import classify, find_branch_point, known_branch_points
from .continuation import PERIOD_TOL, Convention, continue_eigensystem, eigenvalue_surface_scan
from .eigensystem import eig_complex_symmetric
from .errors import ContinuityError, ContractViolation, DoublePoleError, LoopHitsEPError, SingularityError
from .model import EffectiveHamiltonianModel, ParameterPoint, TwoLevelModel, build_hamiltonian, two_level_effective_model
from .scattering import double_pole_smoothness, find_poles, scan, trapping_sweep, two_level_family

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


class NumericalFailure(ArithmeticError):
    """A computation finished without a trustworthy answer."""


class Outcome:
    """Columns, rows and the structured result of one experiment."""

    def __init__(self, columns: List[str]):
        self.columns = columns
        self.rows: List[list] = []
        self.result: Dict = {}
        self.flags: Dict[str, bool] = {}
        self.lines: List[str] = []

    def add(self, row: Dict) -> None:
        flat = {}
        for k, v in row.items():
            if isinstance(v, (complex, np.complexfloating)):
                flat[k + "_re"] = float(v.real)
                flat[k + "_im"] = float(v.imag)
            else:
                flat[k] = v
        self.rows.append([flat[c] for c in self.columns])


def _split(names) -> List[str]:
    # complex columns are listed with a trailing '*'
    out = []
    for n in names:
        if n.endswith("*"):
            out += [n[:-1] + "_re", n[:-1] + "_im"]
        else:
            out.append(n)
    return out


# ---------------------------------------------------------------- serialization


def fmt_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (tuple, list)):
        return ";".join(str(x) for x in v)
    return "" if v is None else str(v)


def trace_csv(out: Outcome) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(out.columns)
    for row in out.rows:
        w.writerow([fmt_cell(v) for v in row])
    return buf.getvalue()


def jsonable(obj):
    """Plain-JSON form: non-finite floats become null, complex become [re, im]."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (complex, np.complexfloating)):
        return [jsonable(obj.real), jsonable(obj.imag)]
    if hasattr(obj, "value") and isinstance(obj.value, str):
        return obj.value
    return obj


def dump_json(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _pair_matrix(m) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m, dtype=complex)]


# ---------------------------------------------------------------- experiments


def _two_level_point(model, exp) -> EffectiveHamiltonianModel:
    if isinstance(model, TwoLevelModel):
        return two_level_effective_model(model, cfg.point(exp["point"]))
    return model


def _eig_row(es) -> Dict:
    row = {}
    for k, val in enumerate(es.values, start=1):
        row[f"E_{k}"] = val.energy
        row[f"Gamma_{k}"] = val.width
    for k, a in enumerate(es.a_metrics, start=1):
        row[f"A_{k}"] = float(a)
    row["B_12"] = float(es.b_metrics[0, 1])
    return row


_EIG_COLS = ["E_1", "Gamma_1", "E_2", "Gamma_2", "A_1", "A_2", "B_12"]


def run_sweep(model: TwoLevelModel, exp, rng) -> Outcome:
    lam = cfg.grid(exp["lambda"])
    omega = float(exp.get("omega", model.omega))
    out = Outcome(["step", "lambda", "omega"] + _EIG_COLS + ["flags"])
    gaps = []
    for k, x in enumerate(lam):
        p = ParameterPoint(float(x), omega)
        es = eig_complex_symmetric(build_hamiltonian(model, p))
        z = es.eigenvalues
        gaps.append(abs(z[1] - z[0]))
        out.add(dict(step=k, **{"lambda": p.lam, "omega": omega}, **_eig_row(es), flags="ep" if es.ep_flag else ""))
    j = int(np.argmin(gaps))
    reg = classify(model, omega)
    out.result = {
        "regime": reg.regime.value,
        "f_real_at_crossing": reg.f_real_at_crossing,
        "min_gap": float(gaps[j]),
        "min_gap_lambda": float(lam[j]),
    }
    out.lines = [f"regime at omega={omega:g}: {reg.regime.value}", f"smallest gap {gaps[j]:.6g} at lambda={lam[j]:g}"]
    return out


def run_surface(model: TwoLevelModel, exp, rng) -> Outcome:
    lam, om = cfg.grid(exp["lambda"]), cfg.grid(exp["omega"])
    sc = eigenvalue_surface_scan(model, lam, om, exp.get("delta_min", 1e-3))
    out = Outcome(["step", "i_omega", "i_lambda", "lambda", "omega", "E_1", "Gamma_1", "E_2", "Gamma_2", "flags"])
    k = 0
    for i in range(om.size):
        for j in range(lam.size):
            e, g = sc.energies[i, j], sc.widths[i, j]
            out.add(
                {
                    "step": k, "i_omega": i, "i_lambda": j, "lambda": float(lam[j]), "omega": float(om[i]),
                    "E_1": e[0], "Gamma_1": g[0], "E_2": e[1], "Gamma_2": g[1],
                    "flags": "near-branch-point" if sc.flags[i, j] else "",
                }
            )
            k += 1
    out.result = {"nodes": int(lam.size * om.size), "flagged_nodes": int(sc.flags.sum())}
    out.lines = [f"{lam.size} x {om.size} nodes, {int(sc.flags.sum())} flagged near a branch point"]
    return out


def run_classify(model: TwoLevelModel, exp, rng) -> Outcome:
    om = cfg.grid(exp["omega"])
    out = Outcome(["step", "omega", "f_real", "regime"])
    regimes = []
    for k, w in enumerate(om):
        r = classify(model, float(w))
        regimes.append(r.regime.value)
        out.add({"step": k, "omega": float(w), "f_real": r.f_real_at_crossing, "regime": r.regime.value})
    out.result = {"lambda_cr": model.lambda_cr, "omega_cr": model.omega_cr, "regimes": regimes}
    out.lines = [f"omega={w:g}: {r}" for w, r in zip(om, regimes)]
    return out


def run_find_ep(model: TwoLevelModel, exp, rng) -> Outcome:
    init = exp.get("initial", "random")
    if init == "random":
        box = exp.get("box", {"lambda": [-1.0, 1.0], "omega": [0.0, 1.0]})
        n = int(exp.get("starts", 8))
        starts = [
            ParameterPoint(float(rng.uniform(*box["lambda"])), float(rng.uniform(*box["omega"])))
            for _ in range(n)
        ]
    else:
        starts = [cfg.point(init)]
    out = Outcome(["step", "lambda0", "omega0", "lambda", "omega", "residual", "iterations", "converged"])
    found = []
    for k, p0 in enumerate(starts):
        bp = find_branch_point(model, p0)
        found.append(bp)
        out.add(
            {
                "step": k, "lambda0": p0.lam, "omega0": p0.omega, "lambda": bp.location.lam,
                "omega": bp.location.omega, "residual": bp.residual, "iterations": bp.iterations,
                "converged": bp.converged,
            }
        )
    good = [b for b in found if b.converged]
    if not good:
        raise NumericalFailure(f"branch-point search did not converge from any of {len(starts)} starts")
    # report the root with nonnegative coupling when both signs are found
    best = min(good, key=lambda b: (b.location.omega < 0, b.residual, b.location.omega))
    out.result = {
        "lambda_cr": best.location.lam,
        "omega_cr": best.location.omega,
        "coalesced_value": best.coalesced_value.value,
        "residual": best.residual,
        "converged_starts": len(good),
        "starts": len(starts),
    }
    out.flags["converged"] = True
    out.lines = [
        f"branch point at lambda={best.location.lam:.12g}, omega={best.location.omega:.12g}",
        f"coalesced eigenvalue {best.coalesced_value.value:.12g}",
        f"{len(good)}/{len(starts)} starts converged",
    ]
    return out


def _loop_outcome(model, exp, turns: int) -> tuple:
    path = cfg.build_path(exp).with_turns(turns)
    declared = [cfg.point(p) for p in exp.get("branch_points", [])]
    rep = continue_eigensystem(
        model, path, Convention(exp.get("convention", Convention.CPRODUCT.value)), exp.get("delta_min", 1e-3), declared
    )
    out = Outcome(
        ["step", "s", "lambda", "omega"] + _EIG_COLS + ["min_overlap", "bisection_depth", "flags"]
    )
    for ts in rep.trace:
        row = {"step": ts.step, "s": ts.s, "lambda": ts.point.lam, "omega": ts.point.omega}
        for k, z in enumerate(ts.eigenvalues, start=1):
            row[f"E_{k}"] = float(z.real)
            row[f"Gamma_{k}"] = float(-2.0 * z.imag)
        row.update(A_1=float(ts.a_metrics[0]), A_2=float(ts.a_metrics[1]), B_12=ts.b12)
        row.update(min_overlap=ts.min_overlap, bisection_depth=ts.depth, flags=ts.flags)
        out.add(row)
    return rep, out


def run_loop(model, exp, rng) -> Outcome:
    rep, out = _loop_outcome(model, exp, int(exp.get("turns", 1)))
    out.result = {
        "convention": rep.convention.value,
        "monodromy": _pair_matrix(rep.phase_matrix),
        "continuity_matrix": _pair_matrix(rep.continuity_matrix),
        "branch_permutation": list(rep.branch_permutation),
        "period": rep.period,
        "initial_eigenvalues": [[float(z.real), float(z.imag)] for z in rep.initial_eigenvalues],
        "final_eigenvalues": [[float(z.real), float(z.imag)] for z in rep.final_eigenvalues],
        "crossings": [
            {"step": c.step, "omega": c.omega, "regime": c.regime.value, "direction": c.direction}
            for c in rep.crossings
        ],
    }
    out.flags["phased_permutation"] = rep.is_phased_permutation
    out.flags["permutation_consistent"] = rep.permutation_consistent
    m = np.round(rep.phase_matrix, 9) + 0.0
    out.lines = [
        f"convention: {rep.convention.value}",
        f"branch permutation: {rep.branch_permutation}",
        "monodromy matrix:",
        *[f"  {row}" for row in m.tolist()],
        f"period: {rep.period}",
    ]
    return out


def run_period(model, exp, rng) -> Outcome:
    max_turns = int(exp.get("max_turns", 8))
    rep, out = _loop_outcome(model, exp, max_turns)
    eye = np.eye(rep.phase_matrix.shape[0])
    period = None
    for p, mp in enumerate(rep.turn_matrices, start=1):
        if np.abs(mp - eye).max() < PERIOD_TOL:
            period = p
            break
    out.result = {
        "convention": rep.convention.value,
        "period": period,
        "max_turns": max_turns,
        "turn_matrices": [_pair_matrix(m) for m in rep.turn_matrices],
    }
    out.flags["period_found"] = period is not None
    out.lines = [f"convention: {rep.convention.value}", f"measured period: {period} (searched 1..{max_turns})"]
    return out


def run_smatrix(model, exp, rng) -> Outcome:
    m = _two_level_point(model, exp)
    e = cfg.grid(exp["energies"])
    sc = scan(m, e)
    nc = m.n_channels
    names = [f"S_{i + 1}{j + 1}" for i in range(nc) for j in range(nc)]
    out = Outcome(["step", "energy"] + _split(n + "*" for n in names) + ["unitarity_defect", "symmetry_defect"])
    for k in range(e.size):
        row = {"step": k, "energy": float(e[k])}
        for i in range(nc):
            for j in range(nc):
                row[f"S_{i + 1}{j + 1}"] = complex(sc.s_matrices[k, i, j])
        row.update(unitarity_defect=float(sc.unitarity_defect[k]), symmetry_defect=float(sc.symmetry_defect[k]))
        out.add(row)
    ud, sd = float(sc.unitarity_defect.max()), float(sc.symmetry_defect.max())
    out.result = {"max_unitarity_defect": ud, "max_symmetry_defect": sd, "points": int(e.size)}
    out.flags["unitary"] = ud < 1e-8
    out.flags["symmetric"] = sd < 1e-10
    out.lines = [f"max ||S^+S - I|| = {ud:.3g}", f"max ||S - S^T|| = {sd:.3g}"]
    return out


def run_poles(model, exp, rng) -> Outcome:
    m = _two_level_point(model, exp)
    ps = find_poles(m)
    if not all(ps.converged):
        raise NumericalFailure("pole fixed-point iteration did not converge for every resonance")
    nc = m.n_channels
    out = Outcome(
        ["step", "E", "Gamma"] + _split(f"g_{c + 1}*" for c in range(nc)) + ["iterations", "converged"]
    )
    poles = []
    for k, p in enumerate(ps.poles):
        row = {"step": k, "E": p.energy, "Gamma": p.width, "iterations": ps.fixed_point_iterations[k],
               "converged": ps.converged[k]}
        for c in range(nc):
            row[f"g_{c + 1}"] = complex(ps.couplings[k, c])
        out.add(row)
        poles.append(
            {
                "energy": p.energy,
                "width": p.width,
                "couplings": [[float(z.real), float(z.imag)] for z in ps.couplings[k]],
                "residue": _pair_matrix(ps.residues[k]),
            }
        )
    out.result = {"poles": poles, "energy_independent": m.energy_independent}
    out.flags["converged"] = True
    out.lines = [f"pole {k}: E={p.energy:.10g}, Gamma={p.width:.10g}" for k, p in enumerate(ps.poles)]
    return out


def run_trapping(model, exp, rng) -> Outcome:
    m = _two_level_point(model, exp) if "point" in exp else model
    if isinstance(m, TwoLevelModel):
        raise ContractViolation("trapping needs an n-level model or a parameter point")
    alphas = cfg.grid(exp["alpha"])
    energy = float(exp.get("energy", 0.0))
    tr = trapping_sweep(m, alphas, energy)
    w2 = float(np.sum(m.coupling(energy) ** 2))
    n = m.n_states
    out = Outcome(["step", "alpha"] + [f"Gamma_{k + 1}" for k in range(n)] + ["width_sum", "sum_rule_defect"])
    defects = []
    for k, a in enumerate(alphas):
        d = abs(tr.width_sums[k] - a * a * w2)
        defects.append(d)
        row = {"step": k, "alpha": float(a), "width_sum": float(tr.width_sums[k]), "sum_rule_defect": float(d)}
        row.update({f"Gamma_{j + 1}": float(tr.widths[k, j]) for j in range(n)})
        out.add(row)
    gmin = tr.widths[:, -1]
    out.result = {
        "sum_w2": w2,
        "max_sum_rule_defect": float(max(defects)),
        "min_width": gmin.tolist(),
        "max_width": tr.widths[:, 0].tolist(),
    }
    scale = max(1.0, float(alphas.max() ** 2 * w2))
    out.flags["sum_rule"] = max(defects) <= 1e-12 * scale
    out.lines = [f"alpha={a:g}: widths {np.round(tr.widths[k], 8).tolist()}" for k, a in enumerate(alphas)]
    return out


def run_smoothness(model: TwoLevelModel, exp, rng) -> Outcome:
    ep = cfg.point(exp["ep"]) if "ep" in exp else known_branch_points(model)[0]
    fam = two_level_family(model, ep, tuple(exp.get("direction", (0.0, 1.0))))
    deltas = [float(d) for d in exp["deltas"]]
    curve = double_pole_smoothness(fam, deltas, cfg.grid(exp["energies"]))
    out = Outcome(["step", "delta", "deviation", "max_unitarity_defect"])
    for k, d in enumerate(deltas):
        out.add({"step": k, "delta": d, "deviation": float(curve.deviation[k]),
                 "max_unitarity_defect": float(curve.unitarity[k])})
    order = np.argsort(curve.deltas)[::-1]
    dev_sorted = curve.deviation[order]
    positive = curve.deltas[order] > 0
    out.result = {
        "ep": {"lambda": ep.lam, "omega": ep.omega},
        "deltas": curve.deltas.tolist(),
        "deviation": curve.deviation.tolist(),
    }
    out.flags["decreasing"] = bool(np.all(np.diff(dev_sorted[positive]) < 0))
    out.flags["zero_at_ep"] = bool(np.all(curve.deviation[curve.deltas == 0] == 0))
    out.lines = [f"delta={d:g}: d={v:.6g}" for d, v in zip(curve.deltas, curve.deviation)]
    return out


RUNNERS: Dict[str, Callable] = {
    "sweep": run_sweep,
    "surface": run_surface,
    "classify": run_classify,
    "find-ep": run_find_ep,
    "loop": run_loop,
    "period": run_period,
    "smatrix": run_smatrix,
    "poles": run_poles,
    "trapping": run_trapping,
    "smoothness": run_smoothness,
}


def execute(doc: dict, seed: int = 0) -> Outcome:
    """Run a validated config in memory."""
    model = cfg.build_model(doc["model"])
    exp = doc["experiment"]
    out = RUNNERS[exp["type"]](model, exp, np.random.default_rng(seed))
    out.result = {
        "experiment": exp["type"],
        "seed": int(seed),
        "version": __version__,
        "rows": len(out.rows),
        "result": out.result,
        "acceptance": out.flags,
    }
    return out


# ---------------------------------------------------------------- entry points


def _err(msg: str) -> None:
    print(f"doublepole: {msg}", file=sys.stderr)


def _load_valid(path: str):
    try:
        doc = cfg.load(path)
    except cfg.ConfigError as exc:
        _err(str(exc))
        return None, None
    rep = cfg.validate(doc)
    return doc, rep


def cmd_validate(args) -> int:
    doc, rep = _load_valid(args.config)
    if rep is None:
        return EXIT_INVALID
    if args.json:
        print(dump_json(rep.as_dict()), end="")
    else:
        for v in rep.violations:
            print(f"error {v.path or '/'}: {v.message}")
        for w in rep.warnings:
            print(f"warning {w.path or '/'}: {w.message}")
        if rep.ok and not args.quiet:
            print(f"{args.config}: valid ({len(rep.warnings)} warning(s))")
    return EXIT_OK if rep.ok else EXIT_INVALID


def cmd_run(args) -> int:
    doc, rep = _load_valid(args.config)
    if rep is None:
        return EXIT_INVALID
    if not rep.ok:
        for v in rep.violations:
            _err(f"{v.path or '/'}: {v.message}")
        return EXIT_INVALID
    if args.seed < 0 or args.seed >= 2 ** 64:
        _err("--seed must be an unsigned 64-bit integer")
        return EXIT_INVALID
    for w in rep.warnings:
        _err(f"warning {w.path}: {w.message}")
    try:
        out = execute(doc, args.seed)
    except ContractViolation as exc:
        _err(f"invalid config: {exc}")
        return EXIT_INVALID
    except (NumericalFailure, LoopHitsEPError, ContinuityError, SingularityError, DoublePoleError) as exc:
        _err(f"numerical failure: {exc}")
        return EXIT_NUMERICAL

    outdir = Path(args.outdir or doc.get("output", {}).get("directory", "out"))
    formats = doc.get("output", {}).get("formats", list(cfg.FORMATS))
    outdir.mkdir(parents=True, exist_ok=True)
    if "csv" in formats:
        (outdir / "trace.csv").write_text(trace_csv(out), encoding="utf-8")
    if "json" in formats:
        (outdir / "result.json").write_text(dump_json(out.result), encoding="utf-8")
    summary = "\n".join(
        [f"experiment: {doc['experiment']['type']}", f"seed: {args.seed}", *out.lines]
        + [f"check {k}: {'pass' if v else 'FAIL'}" for k, v in sorted(out.flags.items())]
    ) + "\n"
    if "txt" in formats:
        (outdir / "summary.txt").write_text(summary, encoding="utf-8")
    if not args.quiet:
        print(summary, end="")
        print(f"outputs in {outdir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="doublepole", description="Exceptional points, loop monodromy and resonance S matrices.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the experiment described by a config file")
    r.add_argument("--config", required=True)
    r.add_argument("--outdir", default=None, help="output directory (default: config output.directory or ./out)")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--quiet", action="store_true")
    r.set_defaults(func=cmd_run)
    v = sub.add_parser("validate", help="check a config file without running it")
    v.add_argument("--config", required=True)
    v.add_argument("--json", action="store_true", help="print the report as JSON")
    v.add_argument("--quiet", action="store_true")
    v.set_defaults(func=cmd_validate)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
