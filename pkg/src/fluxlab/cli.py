"""Command-line experiment runner.

Each subcommand wires one cross-module study into a reproducible run:
defaults < config file < explicit flags, with the resolved configuration
echoed next to machine-readable CSV/JSON reports.  Exit status 0 means every
row passed its stated tolerance, 1 means a tolerance failed, 2 means the
configuration or a module precondition was invalid.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from fluxlab import gauge, hall, landau, lattice, projpair, quadrature

SCHEMA_VERSION = 1
CSV_COLUMNS = ["experiment", "parameters", "value", "residual", "oracle",
               "status", "wall_time_s"]


@dataclass
class ReportRow:
    experiment: str
    parameters: dict
    value: float
    residual: float
    oracle: float
    passed: bool
    wall_time_s: float = 0.0

    def as_json(self) -> dict:
        return {
            "experiment": self.experiment,
            "parameters": self.parameters,
            "value": self.value,
            "residual": self.residual,
            "oracle": self.oracle,
            "pass": self.passed,
            "wall_time_s": round(self.wall_time_s, 6),
        }

    def as_csv(self) -> list:
        params = ";".join(f"{k}={self.parameters[k]}" for k in sorted(self.parameters))
        return [self.experiment, params, repr(float(self.value)),
                repr(float(self.residual)), repr(float(self.oracle)),
                "pass" if self.passed else "fail", f"{self.wall_time_s:.6f}"]


class _Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def _row(experiment, parameters, value, oracle, tol, residual=None, timer=None):
    value = float(value)
    oracle = float(oracle)
    residual = abs(value - oracle) if residual is None else float(residual)
    return ReportRow(
        experiment=experiment,
        parameters=dict(parameters, tol=tol),
        value=value,
        residual=residual,
        oracle=oracle,
        passed=residual <= tol,
        wall_time_s=getattr(timer, "elapsed", 0.0),
    )


def _parse_flux(text) -> float:
    if isinstance(text, (int, float)):
        return float(text)
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def _parse_floats(text) -> list:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


# ---------------------------------------------------------------- proj-suite

def run_proj_suite(cfg) -> list:
    rng = np.random.default_rng(cfg["seed"])
    tol = cfg["tol"]
    trials = cfg["trials"]
    worst = {"rank_difference": 0.0, "antisymmetry": 0.0, "complement": 0.0,
             "conjugation": 0.0, "power_independence": 0.0, "additivity": 0.0}
    with _Timer() as t:
        for _ in range(trials):
            dim = int(rng.integers(4, cfg["dim_max"] + 1))
            P = projpair.random_projection(rng, dim, int(rng.integers(1, dim)))
            Q = projpair.random_projection(rng, dim, int(rng.integers(1, dim)))
            ipq = projpair.index_by_spectral_count(P, Q)
            worst["rank_difference"] = max(
                worst["rank_difference"], abs(ipq.value - (P.rank() - Q.rank())))
            iqp = projpair.index_by_spectral_count(Q, P)
            worst["antisymmetry"] = max(worst["antisymmetry"], abs(ipq.value + iqp.value))
            Pc = projpair.HermitianProjection(np.eye(dim) - P.matrix)
            Qc = projpair.HermitianProjection(np.eye(dim) - Q.matrix)
            icc = projpair.index_by_spectral_count(Pc, Qc)
            worst["complement"] = max(worst["complement"], abs(ipq.value + icc.value))
            W = projpair.random_unitary(rng, dim)
            Pw = projpair.HermitianProjection(W.matrix @ P.matrix @ W.matrix.conj().T)
            Qw = projpair.HermitianProjection(W.matrix @ Q.matrix @ W.matrix.conj().T)
            iww = projpair.index_by_spectral_count(Pw, Qw)
            worst["conjugation"] = max(worst["conjugation"], abs(iww.value - ipq.value))
            traces = projpair.odd_trace_stability(P, Q, n_max=3)
            worst["power_independence"] = max(
                worst["power_independence"],
                max(abs(v - ipq.value) for _, v in traces))
            R = projpair.random_projection(rng, dim, int(rng.integers(1, dim)))
            left, right = projpair.additivity_check(P, Q, R)
            worst["additivity"] = max(worst["additivity"], abs(left - right))
    rows = [_row(f"proj-suite/{name}", {"trials": trials, "dim_max": cfg["dim_max"]},
                 resid, 0.0, tol) for name, resid in worst.items()]
    for r in rows:
        r.wall_time_s = t.elapsed / len(rows)
    return rows


# --------------------------------------------------------------- connes-area

def _sample_triangle(rng) -> quadrature.Triangle:
    while True:
        pts = rng.uniform(-3.0, 3.0, size=(3, 2))
        tri = quadrature.Triangle(tuple(pts[0]), tuple(pts[1]), tuple(pts[2]))
        seps = [np.hypot(*(pts[i] - pts[j])) for i, j in ((0, 1), (1, 2), (2, 0))]
        if min(seps) > 0.05 and abs(tri.oriented_area_twice()) >= 0.05:
            return tri


def run_connes_area(cfg) -> list:
    rng = np.random.default_rng(cfg["seed"])
    u = gauge.flux_unitary(cfg["winding"])
    rows = []
    for k in range(cfg["trials"]):
        tri = _sample_triangle(rng)
        oracle = 2.0 * np.pi * cfg["winding"] * tri.oriented_area_twice()
        with _Timer() as t:
            val = quadrature.connes_area(u, tri)
        rel = abs(val - 1j * oracle) / abs(oracle)
        rows.append(_row(
            f"connes-area/trial-{k}",
            {"winding": cfg["winding"],
             "vertices": [[round(float(c), 6) for c in v]
                          for v in (tri.a, tri.b, tri.c)]},
            val.imag, oracle, cfg["tol"] * abs(oracle), residual=rel * abs(oracle),
            timer=t))
    return rows


# -------------------------------------------------------------- landau-index

def run_landau_index(cfg) -> list:
    m = cfg["m"]
    rows = []
    with _Timer() as t:
        mat = landau.flux_matrix(m, cfg["n_max"])
        shift = landau.shift_index(mat)
    rows.append(_row("landau-index/shift-matrix",
                     {"m": m, "n_max": cfg["n_max"]}, shift, -1.0, 1e-8, timer=t))
    kern = landau.landau_kernel(m)
    with _Timer() as t:
        val4 = quadrature.index_integral_4d(kern, winding=1)
    rows.append(_row("landau-index/integral-4d", {"m": m, "winding": 1},
                     val4.real, -1.0, 2e-2, timer=t))
    with _Timer() as t:
        grid = landau.polar_disk_grid(cfg["pair_radius"])
        P, Q = landau.truncated_projection_pair(m, gauge.flux_unitary(1), grid)
        # charge-deficiency orientation: the flux-conjugated projection leads
        rep = projpair.index_by_odd_trace(Q, P, n=1)
    rows.append(_row("landau-index/truncated-pair",
                     {"m": m, "radius": cfg["pair_radius"], "trace_power": 3},
                     rep.value, -1.0, 1e-2, timer=t))
    return rows


# ------------------------------------------------------------ hall-transport

def run_hall_transport(cfg) -> list:
    m = cfg["m"]
    kern = landau.landau_kernel(m)
    pair = hall.SwitchPair(gauge.tanh_switch(cfg["scale"]), gauge.tanh_switch(cfg["scale"]))
    ls = cfg["L_values"]
    rows = []
    with _Timer() as t:
        q_closed = hall.hall_transport_closed_form(kern)
    rows.append(_row("hall-transport/closed-form", {"m": m}, q_closed, 1.0, 2e-2,
                     timer=t))
    with _Timer() as t:
        boxes = hall.hall_transport_box(kern, pair, ls)
    for L, q in boxes:
        rows.append(_row("hall-transport/box", {"m": m, "L": L, "scale": cfg["scale"]},
                         q, 1.0, 5e-2 if L == ls[-1] else 1.0, timer=t))
    errs = [abs(q - 1.0) for _, q in boxes]
    mono = float(max(0.0, max(b - a for a, b in zip(errs, errs[1:]))))
    rows.append(_row("hall-transport/box-monotone", {"m": m, "L_values": ls},
                     mono, 0.0, 1e-9))
    with _Timer() as t:
        kubo = hall.kubo_box(kern, ls[-1])
    rows.append(_row("hall-transport/kubo", {"m": m, "L": ls[-1]}, kubo,
                     1.0 / (2.0 * np.pi), 0.05 / (2.0 * np.pi), timer=t))
    rows.append(_row("hall-transport/kubo-vs-box", {"m": m, "L": ls[-1]},
                     2.0 * np.pi * kubo, boxes[-1][1], 1e-2 * abs(boxes[-1][1])))
    with _Timer() as t:
        qa = hall.hall_transport_box(
            kern, hall.SwitchPair(gauge.tanh_switch(0.5), gauge.tanh_switch(0.5)),
            [ls[-1]])[0][1]
        qb = hall.hall_transport_box(
            kern, hall.SwitchPair(gauge.tanh_switch(2.0), gauge.tanh_switch(2.0)),
            [ls[-1]])[0][1]
    rows.append(_row("hall-transport/switch-shape", {"m": m, "L": ls[-1],
                     "scales": [0.5, 2.0]}, qa, qb, 1e-2 * abs(qb), timer=t))
    return rows


# -------------------------------------------------------------- switch-check

def run_switch_check(cfg) -> list:
    tol = cfg["tol"]
    rows = []
    for scale in (1.0, 2.0):
        s = gauge.tanh_switch(scale)
        for a in (0.0, 2.0, -1.5):
            with _Timer() as t:
                val = hall.switch_integral_1d(s, a)
            rows.append(_row("switch-check/shift-1d", {"scale": scale, "a": a},
                             val, a, tol, timer=t))
    pair = hall.SwitchPair(gauge.tanh_switch(1.0), gauge.tanh_switch(1.0))
    for a, b in (((1.0, 0.0), (1.0, 0.0)), ((1.0, 0.0), (0.0, 1.0)),
                 ((2.0, 1.0), (1.0, 3.0))):
        wedge = a[0] * b[1] - a[1] * b[0]
        with _Timer() as t:
            val = hall.switch_integral_2d(pair, a, b)
        rows.append(_row("switch-check/wedge-2d", {"a": list(a), "b": list(b)},
                         val, wedge, tol, timer=t))
    return rows


# ------------------------------------------------------------- lattice runs

def _lattice_pipeline(cfg, mask=None, center=None):
    size = cfg["size"]
    model = lattice.MagneticLatticeModel(
        width=size, height=size, flux_per_plaquette=_parse_flux(cfg["flux"]),
        domain_mask=mask)
    H = lattice.build_hamiltonian(model)
    gp = lattice.gap_projection(H, cfg["fermi"])
    if center is None:
        center = (size / 2 - 0.5, size / 2 - 0.5)
    U = lattice.lattice_flux_unitary(model, center)
    return model, gp, U


def run_lattice_index(cfg) -> list:
    rows = []
    for n in cfg["powers"]:
        with _Timer() as t:
            _, gp, U = _lattice_pipeline(cfg)
            rep = lattice.lattice_index(gp, U, n=n)
        rows.append(_row("lattice-index/windowed",
                         {"size": cfg["size"], "flux": cfg["flux"],
                          "fermi": cfg["fermi"], "trace_power": 2 * n + 1,
                          "gap_width": round(gp.gap_width, 6)},
                         rep.value, round(rep.value), cfg["tol"],
                         residual=rep.residual, timer=t))
    return rows


def run_wedge(cfg) -> list:
    size = cfg["size"]
    flux = _parse_flux(cfg["flux"])
    fermi = cfg["fermi"]
    rows = []
    with _Timer() as t:
        full = lattice.wedge_experiment(
            lattice.MagneticLatticeModel(size, size, flux),
            (size / 2 - 0.5, size / 2 - 0.5), fermi)
    rows.append(_row("wedge/full-plane-control", {"size": size, "flux": cfg["flux"]},
                     full.value, round(full.value), cfg["tol"],
                     residual=full.residual, timer=t))
    half = size // 2
    wedge_mask = np.zeros((size, size), dtype=bool)
    wedge_mask[half:, half:] = True
    with _Timer() as t:
        vw = lattice.wedge_experiment(
            lattice.MagneticLatticeModel(size, size, flux, domain_mask=wedge_mask),
            (half - 0.6, half - 0.6), fermi)
    rows.append(_row("wedge/flux-outside", {"size": size, "apex": half}, vw.value,
                     0.0, cfg["tol"], timer=t))
    half_mask = np.zeros((size, size), dtype=bool)
    half_mask[3:, :] = True
    with _Timer() as t:
        vh = lattice.wedge_experiment(
            lattice.MagneticLatticeModel(size, size, flux, domain_mask=half_mask),
            (size / 2 + 1.5, size / 2 - 0.5), fermi)
    rows.append(_row("wedge/half-plane-flux-inside", {"size": size}, vh.value,
                     full.value, cfg["tol"], timer=t))
    return rows


def run_disorder(cfg) -> list:
    with _Timer() as t:
        model, gp, U = _lattice_pipeline(cfg)
        ens = lattice.DisorderEnsemble(
            base_model=model, amplitude=cfg["amplitude_factor"] * gp.gap_width,
            seeds=list(range(cfg["n_seeds"])))
        reports = lattice.disorder_constancy(ens, cfg["fermi"], U)
    rows = []
    for seed, rep in zip(ens.seeds, reports):
        rows.append(_row("disorder/seed", {"seed": seed, "size": cfg["size"],
                         "amplitude": round(ens.amplitude, 6)},
                         rep.value, round(reports[0].value), cfg["tol"],
                         residual=rep.residual, timer=t))
    rounded = sorted({round(r.value) for r in reports})
    rows.append(_row("disorder/constancy", {"n_seeds": cfg["n_seeds"]},
                     len(rounded), 1.0, 0.0))
    return rows


def run_decay_fit(cfg) -> list:
    with _Timer() as t:
        size = cfg["size"]
        model = lattice.MagneticLatticeModel(size, size, _parse_flux(cfg["flux"]))
        H = lattice.build_hamiltonian(model)
        gp = lattice.gap_projection(H, cfg["fermi"])
        slope, r2 = lattice.decay_fit(gp, model)
    params = {"size": size, "flux": cfg["flux"], "fermi": cfg["fermi"]}
    return [
        ReportRow("decay-fit/slope", dict(params, requirement="slope < 0"),
                  slope, max(slope, 0.0), 0.0, slope < 0.0, t.elapsed / 2),
        ReportRow("decay-fit/r-squared", dict(params, requirement="r2 >= 0.9"),
                  r2, max(0.0, 0.9 - r2), 0.9, r2 >= 0.9, t.elapsed / 2),
    ]


# ------------------------------------------------------------------- plumbing

_DEFAULTS = {
    "proj-suite": {"trials": 50, "dim_max": 64, "seed": 0, "tol": 1e-8},
    "connes-area": {"trials": 20, "seed": 7, "winding": 1, "tol": 1e-3},
    "landau-index": {"m": 0, "n_max": 20, "pair_radius": 8.0, "seed": 0,
                     "tol": 1e-2},
    "hall-transport": {"m": 0, "scale": 1.0, "L_values": [2.0, 3.0, 4.5, 6.0],
                       "seed": 0, "tol": 5e-2},
    "switch-check": {"seed": 0, "tol": 1e-6},
    "lattice-index": {"size": 24, "flux": "1/3", "fermi": -1.29,
                      "powers": [1, 2], "seed": 0, "tol": 5e-2},
    "wedge": {"size": 24, "flux": "1/3", "fermi": -1.29, "seed": 0, "tol": 5e-2},
    "disorder": {"size": 24, "flux": "1/3", "fermi": -1.29, "n_seeds": 10,
                 "amplitude_factor": 0.2, "seed": 0, "tol": 5e-2},
    "decay-fit": {"size": 24, "flux": "1/3", "fermi": -1.29, "seed": 0,
                  "tol": 0.9},
}

_RUNNERS = {
    "proj-suite": run_proj_suite,
    "connes-area": run_connes_area,
    "landau-index": run_landau_index,
    "hall-transport": run_hall_transport,
    "switch-check": run_switch_check,
    "lattice-index": run_lattice_index,
    "wedge": run_wedge,
    "disorder": run_disorder,
    "decay-fit": run_decay_fit,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fluxlab",
        description="Index-theory experiments: projection pairs, flux "
                    "insertion, Hall transport, magnetic lattices.")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file")
    common.add_argument("--out", type=Path, default=Path("."),
                        help="directory for report files")
    common.add_argument("--format", choices=["csv", "json", "both"],
                        default="both")
    common.add_argument("--seed", type=int)
    common.add_argument("--tol", type=float)
    specific = {
        "proj-suite": [("--trials", int), ("--dim-max", int)],
        "connes-area": [("--trials", int), ("--winding", int)],
        "landau-index": [("--m", int), ("--n-max", int), ("--pair-radius", float)],
        "hall-transport": [("--m", int), ("--scale", float), ("--L-values", str)],
        "switch-check": [],
        "lattice-index": [("--size", int), ("--flux", str), ("--fermi", float),
                          ("--powers", str)],
        "wedge": [("--size", int), ("--flux", str), ("--fermi", float)],
        "disorder": [("--size", int), ("--flux", str), ("--fermi", float),
                     ("--n-seeds", int), ("--amplitude-factor", float)],
        "decay-fit": [("--size", int), ("--flux", str), ("--fermi", float)],
    }
    for name, flags in specific.items():
        p = sub.add_parser(name, parents=[common])
        for flag, typ in flags:
            p.add_argument(flag, type=typ)
    return parser


def _resolve_config(args) -> dict:
    cfg = dict(_DEFAULTS[args.command])
    if args.config is not None:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SystemExit(f"fluxlab: cannot read config {args.config}: {exc}")
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise SystemExit(
                f"fluxlab: unknown config keys for {args.command}: {sorted(unknown)}")
        cfg.update(loaded)
    for key, value in vars(args).items():
        key = key.replace("-", "_")
        if key in ("command", "config", "out", "format") or value is None:
            continue
        if key in cfg:
            cfg[key] = value
    if "L_values" in cfg:
        cfg["L_values"] = _parse_floats(cfg["L_values"])
    if "powers" in cfg:
        cfg["powers"] = [int(v) for v in _parse_floats(cfg["powers"])]
    return cfg


def _write_reports(out_dir: Path, command: str, cfg: dict, rows: list,
                   fmt: str, wall: float):
    out_dir.mkdir(parents=True, exist_ok=True)
    resolved = {"command": command, **{k: cfg[k] for k in sorted(cfg)}}
    (out_dir / "config.echo").write_text(
        json.dumps(resolved, indent=2, sort_keys=True) + "\n")
    if fmt in ("json", "both"):
        doc = {
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "config": resolved,
            "rows": [r.as_json() for r in rows],
            "all_pass": all(r.passed for r in rows),
            "wall_time_s": round(wall, 6),
        }
        (out_dir / "report.json").write_text(
            json.dumps(doc, indent=2, sort_keys=True) + "\n")
    if fmt in ("csv", "both"):
        with open(out_dir / "report.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for r in rows:
                writer.writerow(r.as_csv())


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
    except SystemExit as exc:
        if exc.code and not isinstance(exc.code, int):
            print(exc.code, file=sys.stderr)
            return 2
        raise
    t0 = time.perf_counter()
    try:
        rows = _RUNNERS[args.command](cfg)
    except ValueError as exc:
        print(f"fluxlab: {exc}", file=sys.stderr)
        return 2
    _write_reports(args.out, args.command, cfg, rows,
                   args.format, time.perf_counter() - t0)
    failed = [r for r in rows if not r.passed]
    for r in rows:
        status = "pass" if r.passed else "FAIL"
        print(f"[{status}] {r.experiment}: value={r.value:.6g} "
              f"oracle={r.oracle:.6g} residual={r.residual:.2e}")
    print(f"{len(rows) - len(failed)}/{len(rows)} rows passed")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
