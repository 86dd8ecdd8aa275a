"""``qmet`` command line: bounds, Fisher matrices, detection table, Monte Carlo, checks.

Exit codes: 0 ok, 1 usage, 2 failed invariant, 3 numerical error.
"""
from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace

import numpy as np

from . import beam, estimation as est, fisher, fock, shotnoise, weak
from .config import ConfigError, RunConfig, load_config, parse_float_list, parse_int_list
from .errors import InvariantError, QmetError

EXIT_OK, EXIT_USAGE, EXIT_INVARIANT, EXIT_NUMERIC = 0, 1, 2, 3


def fmt(v) -> str:
    if v is None or v == "":
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, str):
        return v
    return "%.11e" % float(v)


def write_csv(rows, header, out):
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    finally:
        if out:
            fh.close()


# ---------------------------------------------------------------- bounds

def bounds_rows(cfg: RunConfig, modes, s_override=None):
    """Rows (kind, n, s, x, y) and a list of failed invariants."""
    rows, failures = [], []
    families = [(None, s_override)] if s_override is not None else [(n, est.hg_qmec(n)) for n in modes]
    rows += [("ql_point", "", "", 1.0, 1.0)]
    for x, y in est.qcr_lines(cfg.y_max, 4).points:
        rows.append(("ccr_lines", "", "", x, y))
    for n, s in families:
        tag = "" if n is None else n
        curve = est.tradeoff_curve(s, cfg.num_points, cfg.y_max)
        rows += [("tradeoff", tag, s, x, y) for x, y in curve.points]
        if np.any(curve.points < 1 - 1e-9) or np.any(np.diff(curve.y) > 1e-12):
            failures.append(f"tradeoff s={s}: curve below QCR or not monotone")
        c = 1.0 / np.sqrt(s)
        hol = est.holevo_bound(c, cfg.num_points)
        rows += [("holevo", tag, s, x, y) for x, y in hol.points]
        xs = hol.x[hol.x <= curve.x.max()]
        ty = np.array([est.tradeoff_y(x, s) for x in xs])
        if np.any(est.holevo_y(xs, c) > ty + 1e-9):
            failures.append(f"holevo above tradeoff for s={s}")
        if n:
            left, right = est.tradeoff_endpoints(n)
            rows += [("endpoint", n, s, *left.as_tuple()), ("endpoint", n, s, *right.as_tuple())]
    return rows, failures


def cmd_bounds(args, cfg):
    if args.s is not None:
        modes = []
    else:
        modes = parse_int_list(args.n if args.n is not None else cfg.n_list)
        if any(n < 0 for n in modes):
            raise ConfigError("mode orders must be >= 0")
    rows, failures = bounds_rows(cfg, modes, args.s)
    write_csv(rows, ["kind", "n", "s", "x", "y"], args.out)
    return failures


# ---------------------------------------------------------------- cfim

def cfim_rows(cfg: RunConfig, n: int, method: str = "both"):
    s0 = cfg.sigma0
    scheme = weak.standard_scheme(n, cfg.epsilon, s0, dim=n + cfg.dim_buffer)
    A_w = scheme.weak_value
    qfim = weak.scheme_geometry(scheme).qfim
    rows, failures = [], []

    def add(readout, kind, F, ref=None):
        gap = fisher.quantum_classical_gap(qfim, F).min()
        defect = fisher.relative_defect(F, ref) if ref is not None else ""
        rows.append((n, readout, kind, F.matrix[0, 0], F.matrix[0, 1], F.matrix[1, 1], defect, gap))
        if gap < -1e-8:
            failures.append(f"n={n} {readout} {kind}: CFIM exceeds QFIM ({gap:.3e})")
        if ref is not None and defect > 0.01:
            failures.append(f"n={n} {readout}: numeric vs analytic defect {defect:.3e}")

    di = fisher.cfim_direct_imaging(n, s0, A_w)
    if method in ("analytic", "both"):
        add("direct_imaging", "analytic", di)
    if method in ("numeric", "both"):
        add("direct_imaging", "numeric", fisher.cfim_direct_imaging_numeric(n, s0, A_w, dg=cfg.dg), di)
    if n >= 1:
        no = fisher.cfim_nonorthogonal(n, s0, A_w)
        if method in ("analytic", "both"):
            add("nonorthogonal", "analytic", no)
        if method in ("numeric", "both"):
            add("nonorthogonal", "numeric", fisher.cfim_nonorthogonal_numeric(scheme, cfg.g_tilde, cfg.dg), no)
    return rows, failures


def cmd_cfim(args, cfg):
    modes = parse_int_list(args.n if args.n is not None else cfg.n_list)
    rows, failures = [], []
    for n in modes:
        r, f = cfim_rows(cfg, n, args.method)
        rows += r
        failures += f
    write_csv(rows, ["n", "readout", "method", "F11", "F12", "F22", "rel_defect", "min_gap"], args.out)
    return failures


# ---------------------------------------------------------------- table1

def table1_rows(cfg: RunConfig, modes, mc_trials: int, seed: int):
    rows, failures = [], []
    base = cfg.experiment(1)
    for row in shotnoise.table1_reproduction(base, modes, mc_trials, seed):
        v1, v2 = row.volts
        sources = [
            ("measured", row.measured), ("from_voltages", row.from_voltages),
            ("analytic", row.analytic), ("analytic_exact_aw", row.analytic_exact_weak_value),
        ]
        if row.monte_carlo is not None:
            sources.append(("monte_carlo", row.monte_carlo))
        for name, m in sources:
            rows.append((row.n, name, v1, v2, m.g1, m.g2, m.d, m.phi))
        p = np.array([row.measured.g1, row.measured.g2, row.measured.d, row.measured.phi])
        a = np.array([row.analytic.g1, row.analytic.g2, row.analytic.d, row.analytic.phi])
        v = np.array([row.from_voltages.g1, row.from_voltages.g2, row.from_voltages.d, row.from_voltages.phi])
        if np.any(np.abs(a / p - 1) > 0.08):
            failures.append(f"HG{row.n}: analytic values off the table by more than 8%")
        if np.any(np.abs(v / p - 1) > 0.01):
            failures.append(f"HG{row.n}: voltage conversion off the table by more than 1%")
    return rows, failures


def cmd_table1(args, cfg):
    modes = [n for n in cfg.modes if n in shotnoise.TABLE1] or list(shotnoise.TABLE1)
    rows, failures = table1_rows(cfg, modes, cfg.table1_mc_trials, cfg.seed)
    write_csv(rows, ["n", "source", "V1", "V2", "dg1", "dg2", "dd", "dphi"], args.out)
    return failures


# ---------------------------------------------------------------- montecarlo

def cmd_montecarlo(args, cfg):
    modes = parse_int_list(args.n if args.n is not None else cfg.n_list)
    trials = args.trials or cfg.trials
    rows = []
    for scale in parse_float_list(cfg.nu_scales):
        for n in modes:
            exp = replace(cfg.experiment(n), nu=cfg.nu * scale)
            res = shotnoise.monte_carlo_snr(exp, cfg.seed, trials)
            ref = beam.min_detectable_displacement_tilt(
                n, exp.nu, exp.epsilon, exp.geom.sigma0, exp.geom, exp.weak_value_model
            )
            for proj, g, se, ga, v in (
                ("Pi1", res.min_detectable.g1, res.min_detectable_se[0], ref.g1, res.volts[0]),
                ("Pi2", res.min_detectable.g2, res.min_detectable_se[1], ref.g2, res.volts[1]),
            ):
                rows.append((n, exp.nu, cfg.seed, trials, proj, v, g, se, ga, (g - ga) / se))
    write_csv(
        rows, ["n", "nu", "seed", "trials", "projector", "volts", "min_g", "min_g_se", "analytic_min_g", "z_score"],
        args.out,
    )
    return []


# ---------------------------------------------------------------- validate

def validation_checks(cfg: RunConfig):
    """(name, passed, detail) for the invariant suite."""
    out = []

    def check(name, value, limit):
        out.append((name, bool(value < limit), f"{value:.3e} < {limit:.0e}"))

    sp = fock.FockSpace(24, 1.0)
    P, X = fock.quadrature_operators(sp)
    m = sp.safe_levels
    ccr = (X @ P - P @ X).entries[:m, :m] - 1j * np.eye(m)
    check("canonical commutator", np.max(np.abs(ccr)), 1e-10)

    qm = max(abs(weak.scheme_geometry(weak.standard_scheme(n, dim=n + 8)).qmec / (2 * n + 1) ** 2 - 1) for n in range(11))
    check("criterion equals (2n+1)^2", qm, 1e-9)

    x = np.linspace(-60, 60, 24001)
    norms = np.trapezoid(fock.hermite_functions(20, 1.0, x) ** 2, x, axis=1)
    check("hermite normalization", np.max(np.abs(norms - 1)), 1e-8)

    geom = cfg.geometry()
    sp = fock.FockSpace(24, geom.sigma0)
    U1 = beam.propagation_unitary(0.3, geom, sp, padding=0)
    U2 = beam.propagation_unitary(-0.7, geom, sp, padding=0)
    U12 = beam.propagation_unitary(-0.4, geom, sp, padding=0)
    check("propagation group law", np.max(np.abs((U1 @ U2).entries - U12.entries)), 1e-10)
    check("heisenberg quadratures", beam.heisenberg_defect(geom.z2, geom, sp), 1e-9)
    zg = 0.3 * geom.b
    U = beam.propagation_unitary(zg, geom, sp)
    gouy = max(abs(U.entries[a, b] - beam.gouy_overlap(a, b, zg, geom)) for a in range(0, 20, 3) for b in (a, a + 2))
    check("gouy phase overlaps", gouy, 1e-8)

    sc = weak.standard_scheme(5, cfg.epsilon, geom.sigma0, dim=24)
    g1, g2 = weak.physical_couplings(5, geom.sigma0, sc.weak_value, 4e-3, 4e-3)
    rep = beam.experiment_unitary_equivalence(sc.with_couplings(g1, g2), geom)
    check("experiment frame identity", rep.operator_defect, 1e-9)

    ratios = []
    for gt in (1e-3, 2e-3, 4e-3):
        g1, g2 = weak.physical_couplings(3, 1.0, sc.weak_value, gt, gt)
        s = weak.standard_scheme(3, cfg.epsilon, 1.0, g1, g2)
        ratios.append(weak.first_order_defect(s) / (2 * gt) ** 2)
    check("first-order convergence spread", max(ratios) / min(ratios) - 1, 1.0)

    gaps = [est.holevo_tradeoff_gap(1.0 / (2 * n + 1))[0] for n in range(1, 6)]
    check("holevo tangency", max(gaps), 1e-6)

    worst = min(
        fisher.quantum_classical_gap(
            weak.scheme_geometry(weak.standard_scheme(n)).qfim,
            F,
        ).min()
        for n in range(1, 6)
        for F in (
            fisher.cfim_direct_imaging(n, 1.0, weak.angle_weak_value(cfg.epsilon)),
            fisher.cfim_nonorthogonal(n, 1.0, weak.angle_weak_value(cfg.epsilon)),
        )
    )
    check("classical below quantum", -worst, 1e-8)
    return out


def cmd_validate(args, cfg):
    failures = []
    for name, ok, detail in validation_checks(cfg):
        print(f"{'PASS' if ok else 'FAIL'}  {name}  ({detail})")
        if not ok:
            failures.append(name)
    return failures


# ---------------------------------------------------------------- entry

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file (default: $QMET_CONFIG)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    common.add_argument("--out", help="output CSV path (default: stdout)")
    common.add_argument("--seed", type=int, help="random seed")

    p = argparse.ArgumentParser(prog="qmet", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    b = sub.add_parser("bounds", parents=[common], help="trade-off, Holevo and QCR bound curves")
    b.add_argument("--n", help="comma-separated HG orders")
    b.add_argument("--s", type=float, help="use this criterion value instead of HG orders")
    c = sub.add_parser("cfim", parents=[common], help="classical Fisher matrices, analytic and numeric")
    c.add_argument("--n", help="comma-separated HG orders")
    c.add_argument("--method", choices=("analytic", "numeric", "both"), default="both")
    sub.add_parser("table1", parents=[common], help="minimum detectable values per HG order")
    m = sub.add_parser("montecarlo", parents=[common], help="Poisson Monte Carlo thresholds")
    m.add_argument("--n", help="comma-separated HG orders")
    m.add_argument("--trials", type=int)
    sub.add_parser("validate", parents=[common], help="run the invariant checks")
    return p


COMMANDS = {
    "bounds": cmd_bounds,
    "cfim": cmd_cfim,
    "table1": cmd_table1,
    "montecarlo": cmd_montecarlo,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        overrides = list(args.set)
        if args.seed is not None:
            overrides.append(f"seed={args.seed}")
        cfg = load_config(args.config, overrides)
        if getattr(args, "s", None) is not None and args.s < 1:
            raise ConfigError("--s must be >= 1")
        if getattr(args, "trials", None) is not None and args.trials < 100:
            raise ConfigError("--trials must be >= 100")
        failures = COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"qmet: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantError as exc:
        print(f"qmet: invariant failed: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (QmetError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"qmet: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if failures:
        for f in failures:
            print(f"qmet: invariant failed: {f}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
