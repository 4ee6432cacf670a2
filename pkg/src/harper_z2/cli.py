"""``harper-z2`` command-line front end.

Each subcommand reads a TOML config, computes, then writes its CSV
tables, a ``summary.txt`` and (with ``--plot``) SVG figures into the
output directory.  Exit codes: 0 ok, 2 config error, 3 numeric or solver
failure, 4 degeneracy on a grid.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Callable, Dict, List

import numpy as np

from . import tables
from ._parallel import resolve_workers
from .config import RunConfig, load
from .errors import (DegeneracyError, GridRefinementError, HarperZ2Error, InconsistencyError, NoGapError,
                     NumericError, ParameterError, SolverError)
from .model import HoppingDisorder, LatticeParams
from .spectra import find_dirac_points, find_gaps, gap_state, sweep_phi, track_pump
from .topology import (chern_numbers, decay_profile, dissipative_chern, twisted_chern,
                       z2_index)
from .validation import rwa_validity, spectral_equivalence

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_DEGENERATE = 0, 2, 3, 4

COMMANDS = ("spectrum", "edges", "pump", "chern", "z2", "robustness", "dissipation", "validate")


class Run:
    """Resolved settings plus the bookkeeping every command needs."""

    def __init__(self, command: str, cfg: RunConfig, out: Path, workers: int):
        self.command = command
        self.cfg = cfg
        self.out = out
        self.workers = workers
        self.degenerate: List[str] = []
        self.unresolved: List[str] = []
        self.manifest = cfg.manifest_json()

    def params(self, spin="up", **changes) -> LatticeParams:
        m = self.cfg.model
        base = LatticeParams(N=m.N, beta=m.beta, lam=m.lam, t=m.t, boundary=m.boundary,
                             theta=m.theta, spin=spin)
        return base.with_(**changes) if changes else base

    def csv(self, name, columns, rows):
        return tables.write_csv(self.out / name, self.command, self.manifest, columns, rows)

    def summary(self, lines):
        return tables.write_summary(self.out / "summary.txt", lines)

    @property
    def plot(self) -> bool:
        return self.cfg.output.plot


def _pi(x: float) -> str:
    return f"{x:g}pi"


def _chern_text(cherns) -> str:
    return " ".join(str(c) for c in cherns)


# -- commands ----------------------------------------------------------------------


def _gap_lines(spin, boundary, bs, fillings) -> List[str]:
    lines = []
    for info in find_gaps(bs, fillings):
        lines.append(f"{spin} {boundary} filling {info.filling}: min gap {info.width:.6g} "
                     f"at phi={_pi(info.phi_at_min / np.pi)}"
                     + (" (gapless)" if info.gapless else ""))
        if info.gapless:
            for ph, e in find_dirac_points(bs, info.filling):
                lines.append(f"  crossing at phi={_pi(ph / np.pi)} E={e:.6g}")
    return lines


def cmd_spectrum(run: Run) -> None:
    g = run.cfg.grids
    phi = np.linspace(0.0, 2 * np.pi, g.phi_points)
    lines = []
    for spin in run.cfg.spins:
        p = run.params(spin)
        bs = sweep_phi(p, phi, keep_vectors=True, workers=run.workers)
        N = bs.energies.shape[1]
        rows = ((phi[i], b + 1, bs.energies[i, b]) for i in range(phi.size) for b in range(N))
        run.csv(f"spectrum_{spin}.csv", ("phi", "band_index", "energy"), rows)
        fillings = [int(round(r * N / p.q)) for r in range(1, p.q)]
        fillings = [m for m in fillings if 0 < m < N]
        lines += _gap_lines(spin, p.boundary, bs, fillings)
        if p.boundary == "open" and N % p.q == 0 and fillings:
            # an open chain keeps a finite-size gap; the ring shows the bulk
            ring = sweep_phi(p.with_(boundary="periodic"), phi, workers=run.workers)
            lines += _gap_lines(spin, "periodic", ring, fillings)
        if not fillings:
            lines.append(f"{spin}: single band, no gaps")
        if run.plot:
            fig, ax = tables.figure()
            ax.plot(phi / np.pi, bs.energies, color="k", lw=0.5)
            ax.set_xlabel(r"$\phi/\pi$")
            ax.set_ylabel("E / t")
            ax.set_title(f"spin {spin}, beta={run.cfg.model.beta}")
            tables.save_svg(fig, run.out / f"spectrum_{spin}.svg")
    run.summary(lines)


def cmd_edges(run: Run) -> None:
    g = run.cfg.grids
    lines = []
    for v in g.phi_values:
        states = {s: gap_state(run.params(s, phi=v * np.pi), gap=g.gap) for s in ("up", "down")}
        dens = {s: np.abs(st.vector) ** 2 for s, st in states.items()}
        N = run.cfg.model.N
        rows = ((n + 1, dens["up"][n], dens["down"][n]) for n in range(N))
        run.csv(f"edges_phi{v:g}.csv", ("site", "density_up", "density_down"), rows)
        for s, st in states.items():
            lines.append(f"phi={_pi(v)} {s}: E={st.energy:.6g} {st.cls} "
                         f"in_gap={'yes' if st.in_gap else 'no'} "
                         f"w_left={st.w_left:.4f} w_right={st.w_right:.4f} "
                         f"max_density={dens[s].max():.4f}")
        if run.plot:
            fig, ax = tables.figure()
            sites = np.arange(1, N + 1)
            ax.plot(sites, dens["up"], label="spin up")
            ax.plot(sites, dens["down"], label="spin down", ls="--")
            ax.set_xlabel("site n")
            ax.set_ylabel(r"$|\psi_n|^2$")
            ax.set_title(f"phi = {_pi(v)}")
            ax.legend()
            tables.save_svg(fig, run.out / f"edges_phi{v:g}.svg")
    run.summary(lines)


PUMP_COLUMNS = ("step", "phi", "energy", "center_of_mass", "w_left", "w_right", "class",
                "overlap", "flagged", "in_gap", "status")


def cmd_pump(run: Run) -> None:
    g = run.cfg.grids
    path = np.linspace(0.0, 2 * np.pi, g.pump_steps)
    lines = []
    for spin in run.cfg.spins:
        tr = track_pump(run.params(spin), path, gap=g.gap)
        rows = ((i, tr.phi[i], tr.energy[i], tr.center_of_mass[i], tr.w_left[i],
                 tr.w_right[i], tr.classes[i], tr.overlap[i], tr.flagged[i], tr.in_gap[i],
                 "flagged" if tr.flagged[i] else "ok") for i in range(path.size))
        run.csv(f"pump_{spin}.csv", PUMP_COLUMNS, rows)
        lines.append(f"{spin}: {' -> '.join(tr.phases())}")
        lines.append(f"{spin} interior: {' -> '.join(tr.phases(1, -1))}")
        lines.append(f"{spin} flagged steps: {_chern_text(np.flatnonzero(tr.flagged))}")
        if run.plot:
            fig, ax = tables.figure()
            ax.plot(path / np.pi, tr.center_of_mass)
            ax.set_xlabel(r"$\phi/\pi$")
            ax.set_ylabel(r"$\langle n \rangle$")
            ax.set_title(f"pumped state, spin {spin}")
            tables.save_svg(fig, run.out / f"pump_{spin}.svg")
    run.summary(lines)


CHERN_COLUMNS = ("spin", "band", "chern", "raw", "min_gap", "status")


def _chern_reports(run: Run, spins):
    g, m = run.cfg.grids, run.cfg.model
    reports, rows = {}, []
    for spin in spins:
        try:
            rep = chern_numbers(m.beta, m.lam, m.t, spin, g.n_k, g.n_phi, workers=run.workers)
        except DegeneracyError as exc:
            run.degenerate.append(f"{spin}: {exc}")
            rows.append((spin, None, None, None, None, f"degenerate: {exc}"))
            continue
        except GridRefinementError as exc:
            run.unresolved.append(f"{spin}: {exc}")
            rows.append((spin, None, None, None, None, f"unresolved: {exc}"))
            continue
        reports[spin] = rep
        for b, (c, r) in enumerate(zip(rep.band_cherns, rep.raw), start=1):
            rows.append((spin, b, c, r, rep.min_gap, rep.gap_status))
    return reports, rows


def _z2_lines(reports) -> List[str]:
    up, down = reports["up"], reports["down"]
    parts = []
    for gap in range(1, len(up.band_cherns)):
        try:
            parts.append(f"gap{gap} nu={z2_index(up, down, gap).nu}")
        except InconsistencyError as exc:
            parts.append(f"gap{gap} nu=undefined ({exc})")
    return parts


def cmd_chern(run: Run) -> None:
    reports, rows = _chern_reports(run, run.cfg.spins)
    run.csv("chern.csv", CHERN_COLUMNS, rows)
    parts = [f"{s}: {_chern_text(r.band_cherns)}" for s, r in reports.items()]
    if "up" in reports and "down" in reports and len(reports["up"].band_cherns) > 1:
        parts.append(" ".join(_z2_lines(reports)))
    lines = [" / ".join(parts)]
    lines += [f"degenerate {d}" for d in run.degenerate]
    run.summary(lines)
    if run.plot and reports:
        fig, ax = tables.figure()
        for k, (s, r) in enumerate(reports.items()):
            bands = np.arange(1, len(r.band_cherns) + 1)
            ax.bar(bands + 0.2 * (2 * k - 1), r.band_cherns, width=0.4, label=f"spin {s}")
        ax.set_xlabel("band")
        ax.set_ylabel("Chern number")
        ax.legend()
        tables.save_svg(fig, run.out / "chern.svg")


Z2_COLUMNS = ("gap", "c_up", "c_down", "difference", "spin_chern", "nu", "status")


def cmd_z2(run: Run) -> None:
    reports, _ = _chern_reports(run, ("up", "down"))
    rows, lines = [], []
    if len(reports) == 2:
        for gap in range(1, len(reports["up"].band_cherns)):
            try:
                z = z2_index(reports["up"], reports["down"], gap)
                rows.append((gap, z.c_up, z.c_down, z.difference, z.spin_chern, z.nu, "ok"))
                lines.append(f"gap{gap}: C_up={z.c_up} C_down={z.c_down} nu={z.nu}")
            except InconsistencyError as exc:
                rows.append((gap, None, None, None, None, None, f"inconsistent: {exc}"))
                lines.append(f"gap{gap}: undefined")
        if not rows:
            lines.append("single band, no gaps")
    for d in run.degenerate:
        rows.append((None, None, None, None, None, None, f"degenerate: {d}"))
        lines.append(f"degenerate {d}")
    run.csv("z2.csv", Z2_COLUMNS, rows)
    run.summary(lines)


ROBUST_COLUMNS = ("delta", "seed", "spin", "chern", "raw", "min_gap", "status")


def cmd_robustness(run: Run) -> None:
    g, m = run.cfg.grids, run.cfg.model
    rows, lines = [], []
    clean = {}
    for delta in g.deltas:
        for seed in g.seeds:
            # the run seed shifts every disorder realisation
            eff = (seed + run.cfg.run.seed) % 2 ** 64
            for spin in run.cfg.spins:
                p = LatticeParams(N=g.ring_N, beta=m.beta, lam=m.lam, t=m.t,
                                  boundary="twisted", spin=spin)
                try:
                    rep = twisted_chern(p, HoppingDisorder(delta, eff), n_theta=g.n_theta,
                                        n_phi=g.n_phi, workers=run.workers)
                except DegeneracyError as exc:
                    run.degenerate.append(f"delta={delta:g} seed={seed} {spin}: {exc}")
                    rows.append((delta, seed, spin, None, None, None, f"degenerate: {exc}"))
                    continue
                except GridRefinementError as exc:
                    run.unresolved.append(f"delta={delta:g} seed={seed} {spin}: {exc}")
                    rows.append((delta, seed, spin, None, None, None, f"unresolved: {exc}"))
                    continue
                rows.append((delta, seed, spin, rep.band_cherns, rep.raw, rep.min_gap, "ok"))
                clean.setdefault((delta, spin), set()).add(rep.band_cherns)
    run.csv("robustness.csv", ROBUST_COLUMNS, rows)
    for (delta, spin), found in clean.items():
        text = " | ".join(_chern_text(c) for c in sorted(found))
        lines.append(f"delta={delta:g} {spin}: {text}")
    lines += [f"degenerate {d}" for d in run.degenerate]
    run.summary(lines)
    if run.plot:
        fig, ax = tables.figure()
        for r in rows:
            if r[3] is not None:
                ax.scatter([r[0]] * len(r[3]), r[3], s=12,
                           marker="o" if r[2] == "up" else "x")
        ax.set_xlabel(r"$\delta$")
        ax.set_ylabel("band Chern numbers")
        tables.save_svg(fig, run.out / "robustness.svg")


DISS_COLUMNS = ("kappa", "seed", "spin", "chern", "raw", "min_real_gap", "status")


def cmd_dissipation(run: Run) -> None:
    g, m = run.cfg.grids, run.cfg.model
    q = LatticeParams(N=m.N, beta=m.beta, lam=m.lam).q
    rows, lines = [], []
    for kappa in g.kappas:
        profile = decay_profile(q, kappa, g.decay_pattern)
        for spin in run.cfg.spins:
            try:
                rep = dissipative_chern(m.beta, m.lam, m.t, spin, profile, g.n_k, g.n_phi,
                                        workers=run.workers)
            except DegeneracyError as exc:
                run.degenerate.append(f"kappa={kappa:g} {spin}: {exc}")
                rows.append((kappa, run.cfg.run.seed, spin, None, None, None,
                             f"degenerate: {exc}"))
                lines.append(f"kappa={kappa:g} {spin}: degenerate")
                continue
            except GridRefinementError as exc:
                run.unresolved.append(f"kappa={kappa:g} {spin}: {exc}")
                rows.append((kappa, run.cfg.run.seed, spin, None, None, None,
                             f"unresolved: {exc}"))
                lines.append(f"kappa={kappa:g} {spin}: unresolved")
                continue
            rows.append((kappa, run.cfg.run.seed, spin, rep.band_cherns, rep.raw,
                         rep.min_gap, rep.gap_status))
            lines.append(f"kappa={kappa:g} {spin}: {_chern_text(rep.band_cherns)}"
                         + ("" if rep.gap_status == "open" else f" ({rep.gap_status})"))
    run.csv("dissipation.csv", DISS_COLUMNS, rows)
    run.summary(lines)
    if run.plot:
        fig, ax = tables.figure()
        for r in rows:
            if r[3] is not None:
                ax.scatter([r[0]] * len(r[3]), r[3], s=12,
                           marker="o" if r[2] == "up" else "x")
        ax.set_xscale("symlog", linthresh=0.1)
        ax.set_xlabel(r"$\kappa / t$")
        ax.set_ylabel("band Chern numbers")
        tables.save_svg(fig, run.out / "dissipation.svg")


VALIDATE_COLUMNS = ("phi", "N", "J", "cross_block_max", "min_2g", "rwa_ratio", "deviation",
                    "bound", "resonant_bonds", "status")


def cmd_validate(run: Run) -> None:
    g = run.cfg.grids
    rows, lines = [], []
    for v in g.validate_phi:
        p = run.params("up", N=g.validate_N, phi=v * np.pi, boundary="open")
        rep = spectral_equivalence(p, c=g.bound_factor)
        rows.append((rep.phi, g.validate_N, rep.J, rep.cross_block_max, rep.min_2g,
                     rep.rwa_ratio, rep.deviation, rep.bound, rep.resonant_bonds, rep.status))
        lines.append(f"phi={_pi(v)}: deviation {rep.deviation:.6g} bound {rep.bound:.6g} "
                     f"-> {rep.status}")
        if rep.resonant_bonds:
            lines.append(f"  resonant cross bonds at n = {_chern_text(rep.resonant_bonds)}")
    rwa = rwa_validity(run.params("up"), np.linspace(0, 2 * np.pi, g.phi_points))
    lines.append(f"rwa: {'valid' if rwa.valid else 'invalid'} ({rwa.reason}; "
                 f"lambda/(2 sqrt2 t) = {rwa.lambda_ratio:.4g})")
    verdict = "pass" if rows and all(r[-1] == "pass" for r in rows) and rwa.valid else "fail"
    lines.insert(0, f"validate: {verdict}")
    run.csv("validate.csv", VALIDATE_COLUMNS, rows)
    run.summary(lines)
    if run.plot:
        fig, ax = tables.figure()
        phis = [r[0] / np.pi for r in rows]
        ax.semilogy(phis, [r[6] for r in rows], "o", label="deviation")
        ax.semilogy(phis, [r[7] for r in rows], "s", label="bound")
        ax.set_xlabel(r"$\phi/\pi$")
        ax.set_ylabel("energy / t")
        ax.legend()
        tables.save_svg(fig, run.out / "validate.svg")


HANDLERS: Dict[str, Callable[[Run], None]] = {
    "spectrum": cmd_spectrum, "edges": cmd_edges, "pump": cmd_pump, "chern": cmd_chern,
    "z2": cmd_z2, "robustness": cmd_robustness, "dissipation": cmd_dissipation,
    "validate": cmd_validate,
}


# -- entry point -------------------------------------------------------------------


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="harper-z2",
                                 description="Generalized Harper chains: spectra, edge "
                                             "states, pumping and topological invariants.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="TOML run configuration")
    ap.add_argument("--out", help="output directory (overrides output.dir)")
    ap.add_argument("--plot", action="store_true", help="also write SVG figures")
    ap.add_argument("--workers", type=int, help="worker processes (default: "
                                                "$HARPER_Z2_WORKERS, then run.workers, then 1)")
    ap.add_argument("--seed", type=_u64, help="run seed (overrides run.seed)")
    return ap


def _err(msg: str) -> None:
    print(f"harper-z2: {msg}", file=sys.stderr)


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK

    try:
        overrides = {}
        if args.seed is not None:
            overrides["run"] = {"seed": args.seed}
        if args.out is not None:
            overrides["output"] = {"dir": args.out}
        if args.plot:
            overrides.setdefault("output", {})["plot"] = True
        cfg = load(args.config, overrides)
        workers = args.workers
        if workers is None and "HARPER_Z2_WORKERS" not in os.environ:
            workers = cfg.run.workers
        workers = resolve_workers(workers)
    except ValueError as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG

    out = Path(cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    run = Run(args.command, cfg, out, workers)
    try:
        HANDLERS[args.command](run)
    except ParameterError as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    except DegeneracyError as exc:
        _err(f"degeneracy: {exc}")
        return EXIT_DEGENERATE
    except (NoGapError, NumericError, SolverError, InconsistencyError) as exc:
        _err(f"numeric error: {exc}")
        return EXIT_NUMERIC
    except HarperZ2Error as exc:
        _err(f"error: {exc}")
        return EXIT_NUMERIC
    for d in run.degenerate:
        _err(f"degeneracy: {d}")
    for u in run.unresolved:
        _err(f"numeric error: {u}")
    if run.degenerate:
        return EXIT_DEGENERATE
    if run.unresolved:
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
