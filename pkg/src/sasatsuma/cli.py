"""Command-line driver: ``sasatsuma <command> --config run.json --out DIR``.

Every command writes its data files plus ``manifest.json`` (config hash,
tolerances, invariant outcomes). Exit codes: 0 ok, 1 invalid input or
other failure, 2 consistency (failed invariant), 3 spectral singularity,
4 solitons present, 5 oscillation budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import asympt, painleve, pde, scattering
from .config import (
    AsymptoticsSpec,
    DatumSpec,
    EvolveSpec,
    RunConfig,
    ScatterSpec,
    config_hash,
    load_config,
)
from .errors import (
    ConsistencyError,
    OscillationBudgetError,
    SasaSatsumaError,
    SolitonsPresentError,
    SpectralSingularityError,
)
from .rh import jump as rh_jump
from .rh.line import LineGrid

EXIT_OK, EXIT_FAIL, EXIT_CONSISTENCY, EXIT_SINGULAR, EXIT_SOLITONS, EXIT_BUDGET = 0, 1, 2, 3, 4, 5

DEFAULT_TOLERANCES = {
    "symmetry": 1e-8,
    "rho_decay": 1e-8,
    "rh_residual": 1e-10,
    "budget": float(np.pi / 4),
    "edge": 1e-8,
    "roundtrip": 1e-4,
    "soliton_error": 1e-6,
    "l2_drift": 1e-8,
    "ode_residual": 1e-5,
    "phase_std": 1e-6,
    "psi_defect": 1e-5,
    "cross_oracle": 1e-4,
    "exponent": -0.55,
    "hierarchy": 1e-4,
}

# tolerances that live as module constants
_MODULE_TOLERANCES = {
    "symmetry": (scattering, "SYMMETRY_TOL"),
    "rho_decay": (scattering, "RHO_DECAY_TOL"),
    "budget": (rh_jump, "BUDGET"),
    "edge": (pde, "EDGE_TOL"),
}


@contextmanager
def _module_tolerances(tol):
    saved = {name: getattr(mod, attr) for name, (mod, attr) in _MODULE_TOLERANCES.items()}
    try:
        for name, (mod, attr) in _MODULE_TOLERANCES.items():
            setattr(mod, attr, tol[name])
        yield
    finally:
        for name, (mod, attr) in _MODULE_TOLERANCES.items():
            setattr(mod, attr, saved[name])


def atomic_write(path, data):
    """Write text or bytes to ``path`` via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt(v):
    return f"{float(v):.17g}"


class Run:
    """Collects invariant outcomes and output files for the manifest."""

    def __init__(self, command, cfg: RunConfig, out, tol):
        self.command = command
        self.cfg = cfg
        self.out = Path(out)
        self.tol = tol
        self.invariants = []
        self.files = []
        self.notes = []

    def check(self, name, value, threshold, kind="max", asserted=True):
        value = float(value)
        if kind == "max":
            passed = bool(value < threshold)
        else:
            passed = bool(value >= threshold)
        self.invariants.append({"name": name, "value": value, "threshold": threshold,
                                "kind": kind, "asserted": asserted, "passed": passed})
        return passed

    def report(self, name, value):
        self.invariants.append({"name": name, "value": value, "asserted": False})

    def write(self, name, data):
        atomic_write(self.out / name, data)
        self.files.append(name)

    @property
    def failed(self):
        return [i["name"] for i in self.invariants if i.get("asserted") and not i["passed"]]

    def manifest(self, exit_code, error=None):
        doc = {
            "command": self.command,
            "schema_version": self.cfg.schema_version,
            "config_hash": config_hash(self.cfg),
            "config": self.cfg.model_dump(mode="json"),
            "tolerances": self.tol,
            "invariants": self.invariants,
            "failed_invariants": self.failed,
            "files": self.files,
            "notes": self.notes,
            "exit_code": exit_code,
            "error": error,
        }
        atomic_write(self.out / "manifest.json",
                     json.dumps(doc, indent=2, sort_keys=True, default=float) + "\n")


def make_datum(spec: DatumSpec):
    if spec.file is not None:
        return scattering.read_datum(spec.file)
    return scattering.InitialDatum.profile(spec.profile, n=spec.n, x_range=spec.x_range,
                                           **dict(spec.params))


def _require(block, name):
    if block is None:
        raise SasaSatsumaError(f"config needs a '{name}' block for this command")
    return block


# --- commands ------------------------------------------------------------


def cmd_scatter(run: Run):
    cfg = run.cfg
    datum = make_datum(_require(cfg.datum, "datum"))
    spec = cfg.scatter or ScatterSpec()
    rec = scattering.compute_s(datum, K=spec.K, n_k=spec.n_k, adapt=spec.adapt, check=False)
    tol = run.tol
    ok = [run.check("det_defect", rec.det_defect, tol["symmetry"]),
          run.check("unitarity_defect", rec.unitarity_defect, tol["symmetry"]),
          run.check("swap_defect", rec.swap_defect, tol["symmetry"])]
    run.check("rho_tail", rec.rho_tail, tol["rho_decay"])
    run.report("winding_s33", rec.winding_s33)
    run.write("scatter.csv", rec.to_csv())
    run.write("scatter.json", rec.to_json() + "\n")
    if rec.winding_s33:
        run.notes.append(f"warning: s33 has {rec.winding_s33} zero(s) in the upper half-plane; "
                         "reconstruction is unsupported for this datum")
    if not all(ok):
        raise ConsistencyError("scattering symmetries violated: " + ", ".join(run.failed))


def _read_record(path):
    path = Path(path)
    side = path.with_suffix(".json")
    sidecar = side.read_text() if side.exists() else None
    return scattering.ScatteringRecord.from_csv(path.read_text(), sidecar)


def cmd_reconstruct(run: Run):
    cfg = run.cfg
    spec = _require(cfg.reconstruct, "reconstruct")
    rec = _read_record(spec.record)
    if rec.winding_s33 is None:
        rec.winding_s33 = scattering.solitonless_certificate(rec)
    if rec.winding_s33 != 0:
        raise SolitonsPresentError(f"record has winding {rec.winding_s33}; solitons present")
    grid = LineGrid(spec.nodes, spec.scale)
    xs = np.linspace(spec.x.start, spec.x.stop, spec.x.num)
    rows = []
    summary = {"max_residual": 0.0}
    datum = make_datum(cfg.datum) if cfg.datum is not None else None
    for t in spec.t:
        u, res, _ = rh_jump.reconstruct(rec, xs, t, grid, tol=run.tol["rh_residual"])
        rows.extend(zip(xs, [t] * xs.size, u, res))
        summary["max_residual"] = max(summary["max_residual"], float(res.max()))
        if datum is not None and t == 0:
            err = float(np.max(np.abs(u - datum.on_grid(xs))))
            summary["roundtrip_error"] = err
            run.check("roundtrip_error", err, run.tol["roundtrip"])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "t", "re_u", "im_u", "residual"])
    for x, t, u, r in rows:
        w.writerow([fmt(x), fmt(t), fmt(u.real), fmt(u.imag), fmt(r)])
    run.write("reconstruct.csv", buf.getvalue())
    run.write("reconstruct_summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    run.check("rh_residual", summary["max_residual"], run.tol["rh_residual"])


def cmd_painleve(run: Run):
    spec = _require(run.cfg.painleve, "painleve")
    s = complex(*spec.s)
    n = int(round((spec.y_max - spec.y_min) / spec.dy)) + 1
    y = np.round(spec.y_min + spec.dy * np.arange(n), 12)
    sol = painleve.solve_painleve(painleve.PainleveData(s, y))
    win = tuple(spec.window)
    tol = run.tol
    run.check("ode_residual", painleve.ode_residual(y, sol.u, win), tol["ode_residual"])
    run.check("phase_std", sol.phase_spread(), tol["phase_std"])
    run.check("psi_defect", painleve.psi_system_check(sol, win), tol["psi_defect"])
    for name, val in sol.structure_defects().items():
        run.check(f"structure_{name}", val, 1e-8)
    run.check("c0_flux", float(np.max(np.abs(painleve.phase_flux(sol)))), 1e-8)
    i0 = int(np.argmin(np.abs(y - spec.ode_anchor)))
    ode = painleve.solve_painleve_ode(s, (y[i0], sol.u[i0], sol.u_prime[i0]), y)
    m = (y >= win[0] - 1e-12) & (y <= win[1] + 1e-12)
    cross = float(np.max(np.abs(ode - sol.u)[m])) if np.any(m) else 0.0
    run.check("cross_oracle", cross, tol["cross_oracle"])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["y", "re_u", "im_u", "abs_u", "arg_u", "ode_residual"])
    for row in sol.to_csv_rows():
        w.writerow([fmt(v) for v in row])
    run.write("painleve.csv", buf.getvalue())
    run.write("painleve.json", sol.to_json() + "\n")


def cmd_evolve(run: Run):
    cfg = run.cfg
    dspec = _require(cfg.datum, "datum")
    spec = cfg.evolve or EvolveSpec()
    datum = make_datum(dspec)
    u0 = pde.WaveField.from_function(datum.on_grid, spec.L, spec.n)
    sponge = None if spec.sponge is None else pde.Sponge(**spec.sponge.model_dump())
    ecfg = pde.EvolveConfig(dt=spec.dt, T=spec.T, dealias_fraction=spec.dealias_fraction,
                            sponge=sponge, check_edges=spec.check_edges)
    if spec.snapshots:
        final, snaps = pde.evolve(u0, ecfg, snapshot_times=spec.snapshots)
    else:
        final, snaps = pde.evolve(u0, ecfg), []
    if sponge is None:
        drift = abs(pde.conserved_l2(final) / pde.conserved_l2(u0) - 1) if np.any(u0.values) else 0.0
        run.check("l2_drift", drift, run.tol["l2_drift"])
    if dspec.profile == "soliton":
        p = dict(dspec.params)
        exact = pde.one_soliton(p.get("a", 1.0), p.get("phi", 0.0), p.get("x0", 0.0),
                                final.x, final.t)
        run.check("soliton_error", float(np.max(np.abs(final.values - exact))),
                  run.tol["soliton_error"])
    if np.allclose(u0.values.imag, 0):
        run.report("max_imag", float(np.max(np.abs(final.values.imag))))
    run.write("final.csv", final.to_csv())
    run.write("final.bin", final.to_bytes())
    for sn in snaps:
        run.write(f"snapshot_t{sn.t:g}.csv", sn.to_csv())


def cmd_check_asymptotics(run: Run):
    cfg = run.cfg
    datum = make_datum(_require(cfg.datum, "datum"))
    spec = cfg.asymptotics or AsymptoticsSpec()
    box = asympt.LongRunBox(L=spec.L, n=spec.n, dt=spec.dt, sponge_start=spec.sponge_start,
                            sponge_ramp=spec.sponge_ramp, sponge_strength=spec.sponge_strength)
    rep = asympt.validate_sector(datum, M=spec.M, t_list=spec.t_list, box=box)
    run.check("exponent", rep.exponent, run.tol["exponent"], kind="max")
    run.check("phase_flatness", rep.phase_flatness, run.tol["phase_std"])
    run.check("hierarchy", rep.hierarchy, run.tol["hierarchy"])
    run.report("left_exponent", rep.left_exponent)
    run.report("right_exponent", rep.right_exponent)
    run.report("measured_phase_gap", rep.measured_phase_gap[-1])
    run.notes.extend(rep.flags)
    run.write("asymptotics.json", rep.to_json() + "\n")
    run.write("asymptotics.csv", rep.to_csv())


def cmd_selftest(run: Run):
    """Quick smoke checks of every module (seconds)."""
    from .algebra import zero_curvature_residual

    grid = LineGrid(128, 2.0)
    k = grid.k
    h = np.exp(-k**2) * (1 + 0.3j * k)
    run.check("plemelj", float(np.max(np.abs(grid.c_plus(h) - grid.c_minus(h) - h))), 1e-8)
    run.check("analyticity", float(np.max(np.abs(grid.c_plus(1 / (k - 1j))))), 1e-6)

    x = np.linspace(-10, 10, 801)
    dt = 1e-4
    res = zero_curvature_residual(x, pde.one_soliton(1, 0, 0, x, -dt / 2),
                                  pde.one_soliton(1, 0, 0, x, dt / 2), dt, 0.7 + 0.2j)
    run.check("zero_curvature", res, 1e-2)

    u0 = pde.soliton_field(n=512, L=60.0)
    fin = pde.evolve(u0, pde.EvolveConfig(dt=2e-3, T=0.1))
    err = float(np.max(np.abs(fin.values - pde.one_soliton(1, 0, 0, fin.x, 0.1))))
    run.check("soliton_error", err, run.tol["soliton_error"])

    datum = scattering.InitialDatum.profile("gaussian", eps=0.05, n=128)
    rec = scattering.compute_s(datum, K=6.0, n_k=257)
    run.check("det_defect", rec.det_defect, run.tol["symmetry"])

    solver = painleve.PainleveSolver(1e-4)
    from scipy.special import airy

    y = np.array([-2.0, 0.0, 1.0])
    u = np.array([2 * np.sqrt(2) * solver.solve(v).m1[0, 2] for v in y])
    lin = 1j * np.sqrt(2) * 1e-4 * airy(-y)[0]
    run.check("painleve_linear", float(np.max(np.abs(u - lin))) / 1e-4, 1e-3)


COMMANDS = {
    "scatter": cmd_scatter,
    "reconstruct": cmd_reconstruct,
    "painleve": cmd_painleve,
    "evolve": cmd_evolve,
    "check-asymptotics": cmd_check_asymptotics,
    "selftest": cmd_selftest,
}


def _parse_overrides(items):
    out = {}
    for item in items or ():
        if "=" not in item:
            raise SasaSatsumaError(f"--tol-override expects name=value, got {item!r}")
        name, value = item.split("=", 1)
        if name not in DEFAULT_TOLERANCES:
            raise SasaSatsumaError(f"unknown tolerance {name!r}; known: {sorted(DEFAULT_TOLERANCES)}")
        out[name] = float(value)
    return out


def build_parser():
    p = argparse.ArgumentParser(prog="sasatsuma", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--threads", type=int, default=None, help="BLAS/FFT thread count")
    p.add_argument("--tol-override", action="append", metavar="NAME=VALUE",
                   help="override a named tolerance (repeatable)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text() if args.config else "{}"
        cfg = load_config(text)
        tol = dict(DEFAULT_TOLERANCES)
        tol.update(cfg.tolerances)
        tol.update(_parse_overrides(args.tol_override))
    except (SasaSatsumaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    threads = args.threads if args.threads is not None else cfg.threads
    run = Run(args.command, cfg, args.out, tol)
    code, error = EXIT_OK, None
    try:
        with _thread_limit(threads), _module_tolerances(tol):
            COMMANDS[args.command](run)
        if run.failed:
            code, error = EXIT_CONSISTENCY, "failed invariants: " + ", ".join(run.failed)
    except ConsistencyError as exc:
        code, error = EXIT_CONSISTENCY, str(exc)
    except SpectralSingularityError as exc:
        code, error = EXIT_SINGULAR, str(exc)
    except SolitonsPresentError as exc:
        code, error = EXIT_SOLITONS, str(exc)
    except OscillationBudgetError as exc:
        code, error = EXIT_BUDGET, f"{exc}; run check-asymptotics for large t"
    except SasaSatsumaError as exc:
        code, error = EXIT_FAIL, f"{type(exc).__name__}: {exc}"
    run.manifest(code, error)
    for note in run.notes:
        print(note, file=sys.stderr)
    if error:
        print(f"error: {error}", file=sys.stderr)
    for inv in run.invariants:
        if "passed" in inv:
            tag = "ok  " if inv["passed"] else "FAIL"
            print(f"{tag} {inv['name']}: {inv['value']:.3e} (threshold {inv['threshold']:.1e})")
        else:
            print(f"info {inv['name']}: {inv['value']}")
    return code


@contextmanager
def _thread_limit(threads):
    if threads is None:
        yield
        return
    from threadpoolctl import threadpool_limits

    with threadpool_limits(limits=threads):
        yield


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
