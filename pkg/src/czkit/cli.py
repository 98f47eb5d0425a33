"""``czkit`` command line: set-based estimation and fault-diagnosis workflows.

Exit codes: 0 success, 1 containment check failed, 2 bad input, 3 the
measurements emptied the estimate, 4 no separating input / not separated.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .afd import InputSequence, augment, build_tensors, design_input, output_sets, separation_problem, verify_input
from .estimator import DescriptorEstimator, InconsistentMeasurementError, RegularityError
from .scenario import ScenarioError, load_scenario
from .setops import ConstrainedZonotope, contains_point, interval_hull, linear_map, mc_volume, radius, support

log = logging.getLogger("czkit")

EXIT_OK = 0
EXIT_NOT_CONTAINED = 1
EXIT_INPUT = 2
EXIT_EMPTY = 3
EXIT_NOT_SEPARATED = 4

ESTIMATION_COLUMNS = [
    "k",
    "cz_radius",
    "zono_radius",
    "cz_vol",
    "cz_vol_stderr",
    "zono_vol",
    "zono_vol_stderr",
    "x3_lo_cz",
    "x3_hi_cz",
    "x3_lo_zono",
    "x3_hi_zono",
    "x3_true",
    "contained",
]
CONTAINMENT_TOL = 1e-7
SUPPORT_DIRECTIONS = 64


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return repr(float(v))


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def cmd_estimate(args):
    sc = load_scenario(args.spec)
    if sc.x0 is None:
        raise ScenarioError("x0: required for estimation")
    horizon = sc.horizon if args.horizon is None else args.horizon
    seed = sc.seed if args.seed is None else args.seed
    m = sc.model
    coord = (min(3, m.n) if args.coord is None else args.coord) - 1
    if not 0 <= coord < m.n:
        raise ScenarioError(f"--coord: must be between 1 and {m.n}")
    inputs = sc.inputs
    if inputs is not None and inputs.shape[0] not in (1, horizon + 1):
        raise ScenarioError(f"inputs: expected 1 or {horizon + 1} rows, got {inputs.shape[0]}")
    if inputs is not None and inputs.shape[0] == 1:
        inputs = inputs[0]
    est = DescriptorEstimator(m, sc.bounds, sc.limits)
    traj = est.simulate(sc.x0, inputs, horizon=horizon, seed=seed)
    cz, zb = est.run(traj, baseline=True)
    rows = []
    all_in = True
    for k, (a, z) in enumerate(zip(cz, zb)):
        ok = contains_point(a.Xhat, traj.states[k], CONTAINMENT_TOL)
        all_in &= ok
        ha, hz = interval_hull(a.Xhat), interval_hull(z.Xhat)
        va = mc_volume(a.Xhat, args.samples, seed + k)
        vz = mc_volume(z.Xhat, args.samples, seed + k)
        rows.append(
            [
                k,
                radius(a.Xhat),
                radius(z.Xhat),
                va[0],
                va[1],
                vz[0],
                vz[1],
                ha.lower[coord],
                ha.upper[coord],
                hz.lower[coord],
                hz.upper[coord],
                traj.states[k, coord],
                ok,
            ]
        )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "estimation.csv", ESTIMATION_COLUMNS, rows)
    if not all_in:
        log.error("the true state left the estimate at some step")
        return EXIT_NOT_CONTAINED
    return EXIT_OK


def _boundary(Z: ConstrainedZonotope, dirs):
    return [support(Z, d)[1] for d in dirs]


def _set_rows(model_index, name, Z, dirs):
    rows = []
    P = np.eye(Z.dim)[: min(2, Z.dim)]
    Zp = linear_map(P, Z)
    hull = interval_hull(Zp)
    pad = [np.nan] * (2 - Zp.dim)
    rows.append([model_index, name, "hull", 0, *hull.lower, *pad])
    rows.append([model_index, name, "hull", 1, *hull.upper, *pad])
    if Zp.dim == 2:
        for idx, p in enumerate(_boundary(Zp, dirs)):
            rows.append([model_index, name, "boundary", idx, *p])
    return rows


def _certificate_rows(certs):
    return [[q, c.pair[0] + 1, c.pair[1] + 1, c.delta_hat, c.separated] for q, c in enumerate(certs)]


def cmd_afd_design(args):
    sc = load_scenario(args.spec)
    bank = sc.bank()
    eps = sc.epsilon if args.eps is None else args.eps
    if eps <= 0:
        raise ScenarioError("--eps: must be positive")
    aug = augment(bank)
    res = design_input(bank, N_max=args.nmax, eps=eps, seed=sc.seed, aug=aug)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = [["N_found", "", "", "", "", res.N if res.found else -1], ["cost", "", "", "", "", res.cost]]
    if res.found:
        for k, uk in enumerate(res.useq.u):
            rows += [["u", k, ch + 1, "", "", v] for ch, v in enumerate(uk)]
        rows += [["delta_hat", "", "", c.pair[0] + 1, c.pair[1] + 1, c.delta_hat] for c in res.certificates]
    with open(out / "afd_design.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["record", "k", "channel", "i", "j", "value"])
        for r in rows:
            w.writerow([r[0], *(x if x == "" else _fmt(x) for x in r[1:])])
    if not res.found:
        log.error("no certified separating input up to horizon %d", args.nmax)
        return EXIT_NOT_SEPARATED
    (out / "useq.json").write_text(json.dumps(res.useq.u.tolist()) + "\n")
    theta = np.linspace(0.0, 2.0 * np.pi, SUPPORT_DIRECTIONS, endpoint=False)
    dirs = np.column_stack([np.cos(theta), np.sin(theta)])
    set_rows = []
    Y0 = output_sets(bank, aug, res.useq.u[:1])
    YN = output_sets(bank, aug, res.useq)
    for i, (am, y0, yN) in enumerate(zip(aug, Y0, YN)):
        m = am.model
        plain = linear_map(m.C, bank.X0) + (m.D @ res.useq.u[0]) + linear_map(m.Dv, bank.V)
        set_rows += _set_rows(i + 1, "CX0", plain, dirs)
        set_rows += _set_rows(i + 1, "Y0", y0, dirs)
        set_rows += _set_rows(i + 1, "YN", yN, dirs)
    _write_csv(out / "afd_sets.csv", ["model", "set", "kind", "index", "y1", "y2"], set_rows)
    return EXIT_OK


def _load_sequence(path, n_u):
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, list) or not data or not all(isinstance(r, list) and len(r) == n_u for r in data):
        raise ScenarioError(f"{path}: expected a non-empty array of {n_u}-element arrays")
    try:
        return InputSequence(np.array(data, dtype=float))
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def cmd_afd_verify(args):
    sc = load_scenario(args.spec)
    bank = sc.bank()
    seq = _load_sequence(args.useq, bank.n_u)
    if seq.N != sc.horizon:
        raise ScenarioError(f"{args.useq}: has {seq.N + 1} inputs, the scenario horizon needs {sc.horizon + 1}")
    if not seq.within(bank.U_box):
        raise ScenarioError(f"{args.useq}: inputs leave the admissible input box")
    aug = augment(bank)
    tensors = [build_tensors(am, bank.X0, bank.W, seq.N) for am in aug]
    certs = verify_input(separation_problem(bank, aug, tensors, seq.N), seq)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "afd_verify.csv", ["q", "i", "j", "delta_hat", "separated"], _certificate_rows(certs))
    if all(c.delta_hat >= sc.epsilon for c in certs):
        return EXIT_OK
    log.error("some pair is separated by less than epsilon=%g", sc.epsilon)
    return EXIT_NOT_SEPARATED


def build_parser():
    p = argparse.ArgumentParser(prog="czkit", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("estimate", help="simulate a trajectory and run the set estimators")
    e.add_argument("spec", help="scenario JSON file")
    e.add_argument("-o", "--out", required=True, help="output directory")
    e.add_argument("--seed", type=int, default=None, help="overrides the scenario seed")
    e.add_argument("--horizon", type=int, default=None, help="overrides the scenario horizon")
    e.add_argument("--samples", type=int, default=1000, help="Monte Carlo samples per volume estimate")
    e.add_argument("--coord", type=int, default=None, help="state coordinate (1-based) reported in the x3_* columns")
    e.set_defaults(func=cmd_estimate)

    a = sub.add_parser("afd", help="active fault diagnosis")
    asub = a.add_subparsers(dest="afd_command", required=True)
    d = asub.add_parser("design", help="design a shortest separating input")
    d.add_argument("spec")
    d.add_argument("-o", "--out", required=True)
    d.add_argument("--nmax", type=int, default=6, help="longest horizon to try")
    d.add_argument("--eps", type=float, default=None, help="separation threshold (default: scenario epsilon)")
    d.set_defaults(func=cmd_afd_design)
    v = asub.add_parser("verify", help="certify a given input sequence")
    v.add_argument("spec")
    v.add_argument("useq", help="JSON array of input vectors u_0..u_N")
    v.add_argument("-o", "--out", required=True)
    v.set_defaults(func=cmd_afd_verify)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "horizon", None) is not None and args.horizon < 0:
        parser.error("--horizon must be non-negative")
    if getattr(args, "samples", 1000) < 1000:
        parser.error("--samples must be at least 1000")
    try:
        return args.func(args)
    except (ScenarioError, RegularityError) as exc:
        print(f"czkit: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InconsistentMeasurementError as exc:
        print(f"czkit: error: {exc}", file=sys.stderr)
        return EXIT_EMPTY


if __name__ == "__main__":
    sys.exit(main())
