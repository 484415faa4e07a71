"""Command-line front end.

Tables are tab separated with a header row and numbers at 17 significant
digits; documents are JSON. Results go to files under ``--out`` or to
standard output. Exit codes: 0 success, 1 numerical failure, 2 input error.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from pathlib import Path

from . import __version__
from .coherence import coherence_scan, plate_kappa, ridge, solve_plate_thickness
from .errors import TwoCrystalError
from .experiment import (
    correlation_efficiency, load_count_records, rate_from_speed, s_from_visibilities,
    sigma_S, violation_speed,
)
from .materials import default_registry, load_registry
from .phasematch import phase_matched_signal, pm_spectrum, qpm_mismatch, spectrum_fwhm
from .quantum import (
    LENIENT_PSD_TOL, best_fidelity, bundled_density, chsh_from_density, concurrence, eof,
    read_density, read_record, synthetic_record, tomography_reconstruct,
)
from .scenario import SCHEMA_VERSION, bundled_scenarios, load_scenario

PROG = "twocrystal"

SCENARIO_HELP = """\
Scenario files are INI text with a mandatory schema version:

  [scenario]       schema_version = 1, description
  [crystal]        material, pump_nm, signal_nm, temperature_c,
                   poling_period_um (number or 'solve'), length_mm
  [signal_filter]  center_nm, fwhm_nm (omit the section for no filter)
  [idler_filter]   center_nm, fwhm_nm
  [plate]          material, arm (idler|signal), thickness_mm (number or 'solve'),
                   temperature_c
  [grid]           lengths_mm, thicknesses_mm  ('a, b, c' or 'start:stop:step')
  [integration]    half_width_sigmas, rtol, max_refinements
  [spectrum]       signal_nm grid for the 'pm' command

A bare file name that does not exist on disk is looked up among the bundled
scenarios: {bundled}.
"""


class UsageError(ValueError):
    """Bad combination of command-line inputs."""


def _fmt(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, float)):
        return f"{float(x):.16e}"
    return str(x)


def format_table(columns, rows):
    out = io.StringIO()
    out.write("\t".join(columns) + "\n")
    for row in rows:
        out.write("\t".join(_fmt(v) for v in row) + "\n")
    return out.getvalue()


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def format_doc(doc):
    return json.dumps(_jsonable(doc), indent=2, allow_nan=False) + "\n"


class Emitter:
    """Writes named outputs to ``--out`` or concatenates them on standard output."""

    def __init__(self, args):
        self.out = Path(args.out) if args.out else None
        self.fmt = args.format
        self.summary = args.summary
        self._stdout_parts = []
        if self.out is not None:
            self.out.mkdir(parents=True, exist_ok=True)

    def table(self, name, columns, rows, doc_extra=None):
        if self.fmt == "doc":
            doc = dict(doc_extra or {})
            doc["columns"] = list(columns)
            doc["rows"] = [list(r) for r in rows]
            self._emit(name + ".json", format_doc(doc))
        else:
            self._emit(name + ".tsv", format_table(columns, rows))

    def doc(self, name, doc):
        if self.fmt == "table":
            self._emit(name + ".tsv", format_table(("key", "value"), list(doc.items())))
        else:
            self._emit(name + ".json", format_doc(doc))

    def _emit(self, filename, text):
        if self.out is not None:
            (self.out / filename).write_text(text)
        elif not self.summary:
            self._stdout_parts.append(text)

    def finish(self, summary_lines):
        if self.summary:
            sys.stdout.write("\n".join(summary_lines) + "\n")
        else:
            sys.stdout.write("\n".join(self._stdout_parts))


def _registry(args):
    return load_registry(args.materials) if args.materials else default_registry()


def _scenario(args, default):
    return load_scenario(args.scenario or default, _registry(args))


def _meta(command, scenario=None):
    meta = {"schema_version": SCHEMA_VERSION, "command": command, "version": __version__}
    if scenario is not None:
        meta["scenario"] = scenario.origin
        meta["description"] = scenario.description
    return meta


# --- commands ---------------------------------------------------------------

SCAN_COLUMNS = ("length_mm", "thickness_mm", "visibility", "tau_x_s", "tau_z_s", "kappa_s")


def _scan_rows(rows):
    return [(r.length_mm, r.thickness_mm, r.result.visibility, r.result.tau_x, r.result.tau_z,
             r.result.kappa) for r in rows]


def cmd_coherence_scan(args, emit):
    sc = _scenario(args, "ktp_length_scan.cfg")
    rows = coherence_scan(sc.source, sc.lengths_mm)
    emit.table("coherence_scan", SCAN_COLUMNS, _scan_rows(rows), _meta(args.command, sc))
    vis = [r.result.visibility for r in rows]
    last = rows[-1]
    return [
        f"scenario       {sc.origin}: {sc.description}",
        f"points         {len(rows)}",
        f"visibility     min {min(vis):.4f}  max {max(vis):.4f}",
        f"at L = {last.length_mm:g} mm  V = {last.result.visibility:.4f}",
    ]


RIDGE_COLUMNS = ("length_mm", "best_thickness_mm", "visibility", "solved_thickness_mm",
                 "grid_step_mm")


def cmd_compensation_map(args, emit):
    sc = _scenario(args, "compensation_grid.cfg")
    if not sc.thicknesses_mm:
        raise UsageError(f"{sc.origin}: compensation map needs a nonempty [grid] thicknesses_mm")
    if not sc.lengths_mm:
        raise UsageError(f"{sc.origin}: compensation map needs a nonempty [grid] lengths_mm")
    rows = coherence_scan(sc.source, sc.lengths_mm, sc.thicknesses_mm)
    emit.table("compensation_map", SCAN_COLUMNS, _scan_rows(rows), _meta(args.command, sc))
    ds = sorted(sc.thicknesses_mm)
    step = min((b - a for a, b in zip(ds, ds[1:])), default=0.0)
    best = []
    for r in ridge(rows):
        solved = solve_plate_thickness(sc.source.with_length(r.length_mm))
        best.append((r.length_mm, r.thickness_mm, r.result.visibility, solved, step))
    emit.table("compensation_ridge", RIDGE_COLUMNS, best, _meta(args.command, sc))
    lines = [f"scenario  {sc.origin}: {sc.description}", "L [mm]   best d [mm]   V       solved d [mm]"]
    lines += [f"{L:7.3f}  {d:11.4f}  {v:.5f}  {s:12.4f}" for L, d, v, s, _ in best]
    return lines


def _metrics_doc(rho):
    r = rho.data
    F, phi = best_fidelity(rho)
    C = concurrence(rho)
    return {
        "visibility_estimate": 2 * abs(r[0, 3]),
        "visibility_real_part": 2 * r[0, 3].real,
        "fidelity": F,
        "fidelity_phase": phi,
        "concurrence": C,
        "eof": eof(rho),
        "chsh_S": chsh_from_density(rho),
        "min_eigenvalue": float(rho.eigenvalues().min()),
    }


def cmd_metrics(args, emit):
    if args.fixture:
        rho = read_density(args.fixture, LENIENT_PSD_TOL)
        origin = args.fixture
    else:
        rho = bundled_density("rho_exp")
        origin = "rho_exp (bundled)"
    doc = _meta(args.command)
    doc["fixture"] = str(origin)
    doc.update(_metrics_doc(rho))
    if args.counts:
        rec = read_record(args.counts)
        doc["reconstructed"] = _metrics_doc(tomography_reconstruct(rec, "projected"))
    elif args.sample:
        rec = synthetic_record(tomography_reconstruct(synthetic_record(rho, noiseless=True), "projected"),
                               rate=args.sample, seed=args.seed)
        doc["seed"] = args.seed
        doc["reconstructed"] = _metrics_doc(tomography_reconstruct(rec, "projected"))
    emit.doc("metrics", doc)
    return [f"{k:20s} {v:.6f}" if isinstance(v, float) else f"{k:20s} {v}" for k, v in doc.items()
            if not isinstance(v, dict)]


def cmd_chsh(args, emit):
    if args.s_m is not None:
        S = args.s_m
    elif args.v_hv is not None or args.v_da is not None:
        S = s_from_visibilities(1.0 if args.v_hv is None else args.v_hv,
                                1.0 if args.v_da is None else args.v_da)
    else:
        raise UsageError("give --s-m or at least one of --v-hv/--v-da")
    r_max = args.r_max
    if r_max is None and args.x is not None and S != 2:
        r_max = rate_from_speed(S, args.x)
    if r_max is not None:
        x = violation_speed(S, r_max)
    elif S == 2:
        x = 0.0
    else:
        x = args.x
    sig = sigma_S(r_max, args.t_r) if (r_max is not None and args.t_r is not None) else None
    doc = _meta(args.command)
    doc.update({
        "S": S,
        "R_max": r_max,
        "T_R": args.t_r,
        "sigma_S": sig,
        "x": x,
        "standard_deviations": (S - 2) / sig if sig else None,
        "violated": S > 2,
    })
    emit.doc("chsh", doc)
    return [f"{k:20s} {v}" for k, v in doc.items()]


RATE_COLUMNS = ("label", "pump_mw", "m", "p_multi", "production_rate", "production_rate_printed",
                "gamma_c_formula", "gamma_c_printed", "sigma_formula", "sigma_printed",
                "accidental_rate")


def cmd_rates(args, emit):
    records = load_count_records(args.table)
    rows = []
    for rec in records:
        d = rec.derived(args.pump_nm)
        rows.append((rec.label, rec.pump_mw, d["m"], d["p_multi"], d["production_rate"],
                     rec.production_rate, d["gamma_c_formula"], rec.gamma_c,
                     correlation_efficiency(rec.mu_is, rec.transmission_signal), rec.sigma,
                     d["accidental_rate"]))
    emit.table("rates", RATE_COLUMNS, rows, _meta(args.command))
    return [f"{r[0]:8s} R_prod = {r[4]:.4g} (printed {r[5]:.4g})  m = {r[2]:.3g}  P2 = {r[3]:.3g}"
            for r in rows]


def cmd_pm(args, emit):
    sc = _scenario(args, "ktp_length_scan.cfg")
    reg = sc.source.registry
    cr = sc.source.crystal
    doc = _meta(args.command, sc)
    doc.update({
        "material": cr.material,
        "temperature_c": cr.temperature_c,
        "pump_nm": cr.pump_nm,
        "signal_nm": cr.signal_nm,
        "idler_nm": cr.idler_nm,
        "poling_period_um": cr.poling_period_um,
        "length_mm": cr.length_mm,
        "mismatch_per_m": qpm_mismatch(reg, cr),
        "half_phase_rad": qpm_mismatch(reg, cr) * cr.length_mm * 1e-3 / 2,
    })
    if cr.length_mm > 0 and math.isfinite(cr.poling_period_um):
        doc["phase_matched_signal_nm"] = phase_matched_signal(reg, cr)
        doc["fwhm_nm"] = spectrum_fwhm(reg, cr)
    plate = sc.source.plate
    if plate is not None:
        doc["plate_thickness_mm"] = plate.thickness_mm
        doc["plate_kappa_s"] = plate_kappa(reg, plate.material, plate.thickness_mm, cr.idler_nm,
                                           plate.temperature_c)
    emit.doc("pm", doc)
    if sc.spectrum_nm:
        spec = pm_spectrum(reg, cr, sc.spectrum_nm)
        emit.table("pm_spectrum", ("signal_nm", "intensity"), spec.tolist(), _meta(args.command, sc))
    return [f"{k:24s} {v}" for k, v in doc.items()]


COMMANDS = {
    "coherence-scan": (cmd_coherence_scan, "visibility versus crystal length"),
    "compensation-map": (cmd_compensation_map, "visibility over crystal length and plate thickness"),
    "metrics": (cmd_metrics, "entanglement metrics of a density-matrix fixture"),
    "chsh": (cmd_chsh, "CHSH value, its standard deviation and violation speed"),
    "rates": (cmd_rates, "derived columns of the source-run table"),
    "pm": (cmd_pm, "phase-matching solve and spectrum"),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--materials", metavar="PATH", help="material data file (default: bundled)")
    common.add_argument("--scenario", metavar="PATH", help="scenario file or bundled scenario name")
    common.add_argument("--out", metavar="DIR", help="write result files here instead of stdout")
    common.add_argument("--format", choices=("table", "doc"), default=None,
                        help="tab-separated table or JSON document")
    common.add_argument("--seed", type=int, default=12345, help="random seed for sampled counts")
    common.add_argument("--summary", action="store_true", help="print a human-readable summary")

    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Two-crystal downconversion source: coherence, compensation and metrics.",
        epilog=SCENARIO_HELP.format(bundled=", ".join(bundled_scenarios())),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    subs = {}
    for name, (_, help_text) in COMMANDS.items():
        subs[name] = sub.add_parser(
            name, parents=[common], help=help_text, description=help_text,
            epilog=SCENARIO_HELP.format(bundled=", ".join(bundled_scenarios())),
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
    m = subs["metrics"]
    m.add_argument("--fixture", metavar="PATH", help="density matrix file (real block, imaginary block)")
    m.add_argument("--counts", metavar="PATH", help="tomography counts to reconstruct (signal,idler,counts,time_s)")
    m.add_argument("--sample", type=float, metavar="RATE",
                   help="Poisson-sample tomography counts from the fixture at RATE per setting")
    c = subs["chsh"]
    c.add_argument("--v-hv", type=float, help="visibility in the H/V basis")
    c.add_argument("--v-da", type=float, help="visibility in the D/A basis")
    c.add_argument("--s-m", type=float, help="measured S (overrides the visibilities)")
    c.add_argument("--r-max", type=float, help="peak coincidence rate [1/s]")
    c.add_argument("--t-r", type=float, help="integration time [s]")
    c.add_argument("--x", type=float, help="violation speed [1/sqrt(s)], implies R_max")
    r = subs["rates"]
    r.add_argument("--table", metavar="PATH", help="run table CSV (default: bundled)")
    r.add_argument("--pump-nm", type=float, default=532.0, help="pump wavelength [nm]")
    return parser


DEFAULT_FORMATS = {"metrics": "doc", "chsh": "doc", "pm": "doc"}


def _error(code, kind, message):
    message = " ".join(str(message).split())
    sys.stderr.write(f"{PROG}: error: {kind}: {message}\n")
    return code


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = DEFAULT_FORMATS.get(args.command, "table")
    func = COMMANDS[args.command][0]
    try:
        if args.materials:
            load_registry(args.materials)
        emit = Emitter(args)
        summary = func(args, emit)
        emit.finish(summary)
    except (ArithmeticError,) as exc:
        return _error(1, type(exc).__name__, exc)
    except (TwoCrystalError, ValueError, KeyError) as exc:
        return _error(2, type(exc).__name__, exc)
    except OSError as exc:
        return _error(2, type(exc).__name__, f"{exc.filename or ''}: {exc.strerror or exc}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
