"""Command-line entry: scenario-driven experiments with CSV/JSON outputs.

    cocycle-lab <command> --scenario PATH [--out DIR] [--seed N]
                [--set section.key=value ...] [--jobs N]

Commands: spectrum, bunching, pinching, twisting, monotone, perturb, sweep.
Exit codes: 0 success / positive verdict, 2 non-positive or inconclusive
verdict, 1 error (schema violations list every offending field).
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from .cocycle import (CocycleFactor, CocycleField, lebesgue_sampler,
                      lyapunov_spectrum, restrict_to_leaf)
from .diagnostics import (epsilon_monotonicity_test, weak_pinching_test,
                          weak_twisting_test)
from .fields import TrigPolynomial
from .holonomy import HomoclinicLoop, certify_fiber_bunching
from .perturb import positivity_search, rotate_perturbation, shear_perturbation
from .report import build_report, write_csv, write_report, REPORT_SCHEMA
from .scenario import ScenarioError, load_scenario


def _add_common(sub):
    sub.add_argument("--scenario", required=True, help="scenario TOML file")
    sub.add_argument("--out", default="out", help="output directory")
    sub.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    sub.add_argument("--set", dest="overrides", action="append", default=[],
                     metavar="K=V", help="override a scenario entry (repeatable)")
    sub.add_argument("--jobs", type=int, default=None,
                     help="worker threads (default: COCYCLE_LAB_JOBS or 1)")


def _jobs(args):
    if args.jobs is not None:
        return max(1, args.jobs)
    return max(1, int(os.environ.get("COCYCLE_LAB_JOBS", "1")))


def _emit(args, scenario, command, results, rows, columns, t0, ledger=(), notes=()):
    os.makedirs(args.out, exist_ok=True)
    report = build_report(command, scenario, results, time.time() - t0,
                          ledger=ledger, notes=notes)
    write_report(os.path.join(args.out, "report.json"), report)
    with open(os.path.join(args.out, "report.schema.json"), "w", encoding="utf-8") as fh:
        json.dump(REPORT_SCHEMA, fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_csv(os.path.join(args.out, f"{command}.csv"), columns, rows)


def _spectrum_columns(dim):
    return ([f"lambda_{i + 1}" for i in range(dim)]
            + [f"stderr_{i + 1}" for i in range(dim)]
            + ["symmetry_defect", "n", "orbits", "seed"])


def _spectrum_row(rep):
    return ([float(v) for v in rep.exponents] + [float(v) for v in rep.stderr]
            + [rep.symmetry_defect, rep.n, rep.orbits, rep.seed])


def cmd_spectrum(args, scenario):
    t0 = time.time()
    skew = scenario.make_skew()
    A = scenario.make_cocycle()
    node = scenario.section("spectrum")
    qr = node.get("qr_interval") or None
    rep = lyapunov_spectrum(A, skew, lebesgue_sampler, int(node["n"]),
                            int(node["orbits"]), scenario.seed,
                            qr_interval=qr, jobs=_jobs(args))
    _emit(args, scenario, "spectrum", {"spectrum": rep.to_dict()},
          [_spectrum_row(rep)], _spectrum_columns(A.dim), t0)
    return 0


def cmd_bunching(args, scenario):
    t0 = time.time()
    node = scenario.section("bunching")
    cert = certify_fiber_bunching(scenario.make_cocycle(), scenario.make_skew(),
                                  int(node["n_max"]), tuple(node["grid"]))
    rows = [[n + 1, float(v)] for n, v in enumerate(cert.curve)]
    _emit(args, scenario, "bunching", {"certificate": cert.to_dict()},
          rows, ["n", "sup_product"], t0)
    return 0 if cert.passed else 2


def cmd_pinching(args, scenario):
    t0 = time.time()
    skew = scenario.make_skew()
    node = scenario.section("pinching")
    verdict = weak_pinching_test(scenario.make_cocycle(), skew,
                                 scenario.make_leaf(skew), int(node["n"]),
                                 int(node["orbits"]), scenario.seed,
                                 grid=int(node["grid"]))
    row = [verdict.estimate, verdict.stderr, verdict.verdict, verdict.route,
           verdict.positive_fraction]
    _emit(args, scenario, "pinching", {"pinching": verdict.to_dict()},
          [row], ["estimate", "stderr", "verdict", "route", "positive_fraction"], t0)
    return 0 if verdict.verdict == "positive" else 2


def cmd_twisting(args, scenario):
    t0 = time.time()
    skew = scenario.make_skew()
    A = scenario.make_cocycle()
    leaf = scenario.make_leaf(skew)
    pnode = scenario.section("pinching")
    pin = weak_pinching_test(A, skew, leaf, int(pnode["n"]), int(pnode["orbits"]),
                             scenario.seed, grid=int(pnode["grid"]))
    results = {"pinching": pin.to_dict()}
    if pin.verdict != "positive":
        _emit(args, scenario, "twisting", results, [[0, "inconclusive", 0.0]],
              ["j", "verdict", "fraction"], t0,
              notes=["twisting skipped: pinching verdict was not positive"])
        return 2
    bnode = scenario.section("bunching")
    cert = certify_fiber_bunching(A, skew, int(bnode["n_max"]), tuple(bnode["grid"]))
    results["certificate"] = cert.to_dict()
    if not cert.passed:
        _emit(args, scenario, "twisting", results, [[0, "inconclusive", 0.0]],
              ["j", "verdict", "fraction"], t0,
              notes=["twisting skipped: fiber bunching certificate failed"])
        return 2
    loop = HomoclinicLoop(A, skew, leaf, scenario.make_homoclinic(skew), cert)
    tnode = scenario.section("twisting")
    verdict = weak_twisting_test(A, skew, loop, pin, int(tnode["j_max"]),
                                 int(tnode["samples"]), float(tnode["eps_angle"]),
                                 scenario.seed, frame_window=int(tnode["frame_window"]))
    results["twisting"] = verdict.to_dict()
    rows = [[j + 1, verdict.verdict if j + 1 == verdict.j_used else "-", f]
            for j, f in enumerate(verdict.fractions)]
    _emit(args, scenario, "twisting", results, rows, ["j", "verdict", "fraction"], t0)
    return 0 if verdict.verdict == "positive" else 2


def _monotone_cocycle(scenario, skew):
    node = scenario.section("monotone")
    if node["builtin"] == "full_rotation":
        A = CocycleField(1, [CocycleFactor(np.array([[0.0, 1.0], [-1.0, 0.0]]),
                                           TrigPolynomial.constant_field(0.0),
                                           winding=(0, 0, 1))])
        return restrict_to_leaf(A, skew, scenario.make_leaf(skew))
    return restrict_to_leaf(scenario.make_cocycle(), skew, scenario.make_leaf(skew))


def cmd_monotone(args, scenario):
    t0 = time.time()
    skew = scenario.make_skew()
    node = scenario.section("monotone")
    B = _monotone_cocycle(scenario, skew)
    res = epsilon_monotonicity_test(B, float(node["epsilon"]), int(node["grid"]),
                                    int(node["directions"]), scenario.seed,
                                    window=float(node["window"]))
    _emit(args, scenario, "monotone", {"monotone": res.to_dict()},
          [[res.margin, res.epsilon, res.passed, res.grid]],
          ["margin", "epsilon", "passed", "grid"], t0)
    return 0 if res.passed else 2


def _stage_log_lines(rep):
    lines = []
    for stage in rep.stages:
        name = stage["stage"]
        if "verdict" in stage and isinstance(stage["verdict"], dict):
            detail = stage["verdict"].get("verdict", "")
        elif "certificate" in stage:
            detail = "passed" if stage["certificate"]["passed"] else "failed"
        elif "report" in stage:
            detail = "top=" + format(stage["report"]["exponents"][0], ".6g")
        else:
            detail = stage.get("outcome", "")
        extras = " ".join(f"{k}={stage[k]}" for k in ("theta", "round", "t_prime")
                          if k in stage)
        lines.append(f"stage={name} result={detail}" + (f" {extras}" if extras else ""))
    lines.append(f"sizes={rep.sizes} total={rep.total_size:.6g} "
                 f"budget_ok={rep.budget_ok} success={rep.success}")
    return lines


def cmd_perturb(args, scenario):
    t0 = time.time()
    rep = positivity_search(scenario.make_cocycle(), scenario.make_skew(),
                            scenario.pipeline_settings())
    ledger = [{"operator": k, "size": float(v)} for k, v in rep.sizes.items()]
    rows = []
    if rep.final_spectrum is not None:
        rows.append(_spectrum_row(rep.final_spectrum))
        columns = _spectrum_columns(len(rep.final_spectrum.exponents))
    else:
        rows.append([0.0])
        columns = ["no_final_spectrum"]
    _emit(args, scenario, "perturb", {"pipeline": rep.to_dict()}, rows, columns,
          t0, ledger=ledger)
    with open(os.path.join(args.out, "perturb.log"), "w", encoding="utf-8") as fh:
        for line in _stage_log_lines(rep):
            fh.write(line + "\n")
    return 0 if rep.success else 2


def _scale_cocycle(A, s):
    factors = []
    for f in A.factors:
        fld = f.field
        scaled = TrigPolynomial(fld.constant * s, fld.freqs,
                                fld.cos_coeffs * s, fld.sin_coeffs * s,
                                ndim=fld.ndim)
        factors.append(CocycleFactor(f.generator, scaled, f.winding))
    return A.with_factors(factors)


def cmd_sweep(args, scenario):
    t0 = time.time()
    skew = scenario.make_skew()
    A = scenario.make_cocycle()
    leaf = scenario.make_leaf(skew)
    node = scenario.section("sweep")
    pnode = scenario.section("pinching")
    cfg = scenario.pipeline_settings()
    grid = [float(v) for v in node["grid"]]
    parameter = node["parameter"]
    mode = node["mode"]

    base = A
    applied_shear = False
    if parameter == "rotation_angle" and mode == "pipeline":
        bare = [weak_pinching_test(rotate_perturbation(A, th), skew, leaf,
                                   int(pnode["n"]), int(pnode["orbits"]),
                                   scenario.seed, grid=int(pnode["grid"])).verdict
                for th in grid]
        if "positive" not in bare:
            base = shear_perturbation(A, cfg.shear_coefficient)
            applied_shear = True

    rows = []
    results = []
    for value in grid:
        if parameter == "rotation_angle":
            cand = rotate_perturbation(base, value)
        else:
            cand = _scale_cocycle(base, value)
        verdict = weak_pinching_test(cand, skew, leaf, int(pnode["n"]),
                                     int(pnode["orbits"]), scenario.seed,
                                     grid=int(pnode["grid"]))
        rows.append([value] + [float(v) for v in verdict.spectrum]
                    + [verdict.stderr, verdict.n, verdict.verdict])
        results.append({"parameter": value, "verdict": verdict.to_dict()})
    dim = A.dim
    columns = (["parameter"] + [f"lambda_{i + 1}" for i in range(dim)]
               + ["stderr", "n", "verdict"])
    notes = ["leaf shear fallback applied before the rotation sweep"] if applied_shear else []
    _emit(args, scenario, "sweep", {"sweep": results, "parameter": parameter},
          rows, columns, t0, notes=notes)
    return 0


_COMMANDS = {
    "spectrum": cmd_spectrum,
    "bunching": cmd_bunching,
    "pinching": cmd_pinching,
    "twisting": cmd_twisting,
    "monotone": cmd_monotone,
    "perturb": cmd_perturb,
    "sweep": cmd_sweep,
}


def main(argv=None):
    parser = argparse.ArgumentParser(prog="cocycle-lab", description=__doc__)
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sub = subparsers.add_parser(name)
        _add_common(sub)
    args = parser.parse_args(argv)
    try:
        scenario = load_scenario(args.scenario, args.overrides, args.seed)
        return _COMMANDS[args.command](args, scenario)
    except ScenarioError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:            # keep the contract: errors exit 1
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
