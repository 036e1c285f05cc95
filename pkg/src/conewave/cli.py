"""Command line runner: ``conewave <stage> --config run.json [--out DIR]``.

Stages read one JSON config (validated against
``schema/experiment.schema.json``), write CSV/JSON outputs into the output
directory and record themselves in ``manifest.json``.  Data files contain
no timestamps; wall times live only in the manifest.

Exit codes: 0 ok, 2 configuration error, 3 missing upstream output,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import logging
import math
import platform
import sys
import time
from importlib import resources
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import jsonschema
import numpy as np
import scipy

from . import spectrum as spec_mod
from .bichar import InteriorState, trace_broken, trajectories_to_csv
from .csvio import canonical_json, read_csv, write_csv, write_json
from .errors import (
    ConewaveError,
    ConfigError,
    ContractViolation,
    DomainError,
    NumericError,
    UnsupportedError,
)
from .radiation import (
    RadiationSamples,
    extract_radiation,
    fit_expansion,
    mellin_pole_scan,
    peel_exponents,
)
from .solver import HankelMode, bump_data, energy_series, export_solution, fd_evolve, hankel_evolve

log = logging.getLogger("conewave.cli")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MISSING = 3
EXIT_NUMERIC = 4

STAGES = ("resonances", "solve", "radiation", "fit", "mellin", "trace")

DEFAULTS = {
    "mode": {"j": 0},
    "resonances": {"depth": 4.0},
    "data": {"support": [2.0, 3.0], "u0_amplitude": 1.0, "u1_amplitude": 0.0},
    "solver": {"method": "hankel", "t_max": 20.0, "n_t": 101, "r_max": 30.0, "n_r": 601,
               "dr": 0.01, "cfl": 0.5},
    "radiation": {"s_window": [5.0, 2000.0], "n_s": 400, "r_list": [1e4, 2e4, 4e4, 8e4]},
    "fit": {"n_terms": 2, "window": [50.0, 500.0], "refine_leading": True, "peel_terms": 3},
    "mellin": {"strip": [-4.0, 0.0], "cutoff": "smooth", "n_poles": 2},
    "trace": {"length": 5.0, "n_exit_samples": 8, "n_samples": 201},
}


class MissingUpstream(ConewaveError):
    """An earlier stage has not produced the file this stage consumes."""


def _load_schema() -> dict:
    text = resources.files("conewave").joinpath("schema/experiment.schema.json").read_text("utf-8")
    return json.loads(text)


def _merge(defaults: dict, given: dict) -> dict:
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


class Experiment:
    """A validated configuration plus the derived objects every stage needs."""

    def __init__(self, raw: dict, base_dir: Path, out_override: str | None = None):
        self.raw = raw
        self.config = _merge(DEFAULTS, raw)
        self.base_dir = base_dir
        out = out_override if out_override is not None else self.config["output_dir"]
        self.out_dir = Path(out)
        self.config_hash = hashlib.sha256(canonical_json(self.config).encode("utf-8")).hexdigest()
        self._check()

    @classmethod
    def from_file(cls, path: str | Path, out_override: str | None = None) -> "Experiment":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"{path}: config file not found")
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
        validator = jsonschema.Draft202012Validator(_load_schema())
        errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
        if errors:
            lines = []
            for err in errors:
                where = "/".join(str(p) for p in err.absolute_path) or "<root>"
                lines.append(f"{path}: field {where}: {err.message}")
            raise ConfigError("\n".join(lines))
        return cls(raw, path.parent, out_override)

    # -- derived quantities -------------------------------------------------

    @property
    def n(self) -> int:
        return int(self.config["cone"]["n"])

    @property
    def j(self) -> int:
        return int(self.config["mode"]["j"])

    @property
    def alpha(self) -> float | None:
        link = self.config["cone"]["link"]
        return float(link["circle"]) if "circle" in link else None

    def link_spectrum(self, depth: float | None = None) -> spec_mod.LinkSpectrum:
        link = self.config["cone"]["link"]
        if "explicit" in link:
            path = Path(link["explicit"])
            if not path.is_absolute():
                path = self.base_dir / path
            try:
                return spec_mod.load_spectrum_json(path)
            except DomainError as exc:
                raise ConfigError(f"cone/link/explicit: {exc}") from exc
        depth = self.config["resonances"]["depth"] if depth is None else depth
        # nu_j >= j / alpha, so larger j cannot enter the strip
        j_max = max(self.j, int(math.ceil(depth * self.alpha)) + 1)
        return spec_mod.circle_spectrum(self.alpha, j_max)

    def nu(self) -> float:
        spec = self.link_spectrum()
        if self.j >= len(spec):
            raise ConfigError(f"mode/j: the link spectrum has only {len(spec)} entries")
        return spec_mod.nu_of(self.n, spec.mu_sq(self.j))

    def initial_data(self):
        d = self.config["data"]
        return bump_data(self.nu(), self.n, tuple(d["support"]), d["u0_amplitude"], d["u1_amplitude"])

    def mode_exponents(self, depth: float):
        ladder = spec_mod.resonances(self.n, self.link_spectrum(depth), depth)
        mode = spec_mod.mode_ladder(ladder, self.j)
        if len(mode) == 0:
            raise ConfigError(f"mode {self.j} has no resonances above depth {depth}")
        return spec_mod.exponent_ladder(mode)

    def _check(self) -> None:
        c = self.config
        d = c["data"]["support"]
        if not d[0] < d[1]:
            raise ConfigError("data/support: need r_a < r_b")
        s = c["solver"]
        if s["method"] == "fd" and s["cfl"] > 0.9:
            raise ConfigError(f"solver/cfl: {s['cfl']} exceeds the limit 0.9")
        if s["method"] == "fd" and s["dr"] >= d[1] - d[0]:
            raise ConfigError("solver/dr: grid does not resolve the data support")
        if s["method"] == "hankel" and s["r_max"] <= 0:
            raise ConfigError("solver/r_max must be positive")
        rad = c["radiation"]
        lo, hi = rad["s_window"]
        if not lo < hi:
            raise ConfigError("radiation/s_window: need s_min < s_max")
        r_list = rad["r_list"]
        if any(b <= a for a, b in zip(r_list, r_list[1:])):
            raise ConfigError("radiation/r_list must be increasing")
        if hi > r_list[0] / 5.0:
            raise ConfigError("radiation: need min(r_list) >= 5 * s_max")
        fw = c["fit"]["window"]
        if not (fw[0] < fw[1] and lo <= fw[0] and fw[1] <= hi):
            raise ConfigError("fit/window must be increasing and inside radiation/s_window")
        m = c["mellin"]
        if not m["strip"][0] < m["strip"][1]:
            raise ConfigError("mellin/strip: need im_min < im_max")
        for key in ("window", "fit_window"):
            w = m.get(key)
            if w is not None and not (w[0] < w[1] and lo <= w[0] and w[1] <= hi):
                raise ConfigError(f"mellin/{key} must be increasing and inside radiation/s_window")
        if c["resonances"]["depth"] > 60:
            raise ConfigError("resonances/depth: at most 60")
        self.link_spectrum()  # surfaces a missing explicit spectrum file early


# -- manifest -----------------------------------------------------------------

def _versions() -> dict:
    try:
        own = version("artifact")
    except PackageNotFoundError:
        own = "unknown"
    return {"conewave": own, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _update_manifest(exp: Experiment, stage: str, outputs: list[Path], wall: float, summary: dict) -> None:
    path = exp.out_dir / "manifest.json"
    manifest = None
    if path.is_file():
        try:
            manifest = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError:
            manifest = None
    if not manifest or manifest.get("config_hash") != exp.config_hash:
        manifest = {"config_hash": exp.config_hash, "config": exp.config, "stages": {}}
    manifest["versions"] = _versions()
    manifest["stages"][stage] = {
        "config_hash": exp.config_hash,
        "outputs": sorted(p.name for p in outputs),
        "wall_time_s": wall,
        "summary": summary,
    }
    write_json(path, manifest)


# -- stages -------------------------------------------------------------------

def cmd_resonances(exp: Experiment):
    depth = float(exp.config["resonances"]["depth"])
    ladder = spec_mod.resonances(exp.n, exp.link_spectrum(depth), depth)
    out = spec_mod.ladder_to_csv(ladder, exp.out_dir / "resonances.csv")
    return [out], {"n_resonances": len(ladder), "depth": depth}


def cmd_solve(exp: Experiment):
    data = exp.initial_data()
    s = exp.config["solver"]
    if s["method"] == "hankel":
        t_grid = np.linspace(0.0, s["t_max"], s["n_t"])
        r_grid = np.linspace(0.0, s["r_max"], s["n_r"] + 1)[1:]  # r = 0 excluded: energy density
        sol = hankel_evolve(data, t_grid, r_grid)
    else:
        sol = fd_evolve(data, s["dr"], s["cfl"] * s["dr"], s["t_max"], n_saves=s["n_t"])
    sol_csv = exp.out_dir / "solution.csv"
    sol_json = exp.out_dir / "solution.json"
    export_solution(sol, sol_csv, sol_json)
    energies = energy_series(sol)
    t_e = sol.t_grid if energies.size == sol.t_grid.size else sol.t_grid[1:-1]
    e_csv = write_csv(exp.out_dir / "energy.csv", ("t", "energy"), zip(t_e, energies))
    drift = float(np.max(np.abs(energies - energies[0])) / abs(energies[0])) if energies[0] else 0.0
    return [sol_csv, sol_json, e_csv], {"method": sol.method, "nu": sol.nu, "energy_drift": drift}


def cmd_radiation(exp: Experiment):
    rad = exp.config["radiation"]
    mode = HankelMode(exp.initial_data())
    s_grid = np.geomspace(rad["s_window"][0], rad["s_window"][1], rad["n_s"])
    R = extract_radiation(mode, s_grid, rad["r_list"], mode_j=exp.j)
    csv_path = R.to_csv(exp.out_dir / "radiation.csv")
    meta = {"mode_j": R.mode_j, "nu": R.nu, "n": R.n, "r_list": [float(r) for r in R.r_list],
            "config_hash": exp.config_hash}
    json_path = write_json(exp.out_dir / "radiation.json", meta)
    return [csv_path, json_path], {"n_samples": int(R.s_grid.size), "n_trusted": int(np.sum(R.trusted))}


def load_radiation(out_dir: Path) -> RadiationSamples:
    csv_path = out_dir / "radiation.csv"
    json_path = out_dir / "radiation.json"
    for p in (csv_path, json_path):
        if not p.is_file():
            raise MissingUpstream(f"{p} not found; run the radiation stage first")
    meta = json.loads(json_path.read_text(encoding="utf-8"))
    header, rows = read_csv(csv_path)
    table = np.array([[float(v) if v not in ("true", "false") else float(v == "true") for v in row]
                      for row in rows])
    if table.size == 0:
        table = table.reshape(0, len(header))
    col = {name: i for i, name in enumerate(header)}
    raw_cols = [col[f"raw_r{k}"] for k in range(len(meta["r_list"]))]
    return RadiationSamples(
        int(meta["mode_j"]), float(meta["nu"]), int(meta["n"]), table[:, col["s"]], table[:, col["R"]],
        np.array(meta["r_list"]), table[:, raw_cols], table[:, col["error"]],
        table[:, col["trusted"]].astype(bool), {"source": str(csv_path)},
    )


def cmd_fit(exp: Experiment):
    R = load_radiation(exp.out_dir)
    f = exp.config["fit"]
    n_terms = int(f["n_terms"])
    window = tuple(f["window"])
    ladder = exp.mode_exponents(float(exp.config["resonances"]["depth"]))
    if n_terms > len(ladder):
        raise ConfigError(f"fit/n_terms: only {len(ladder)} ladder exponents above the depth")
    fit = fit_expansion(R, ladder, n_terms, window, refine_leading=f["refine_leading"])
    one = fit_expansion(R, ladder, 1, window)
    peeled = peel_exponents(R, int(f["peel_terms"]), window)
    fit_csv = fit.to_csv(exp.out_dir / "fit.csv")
    peel_csv = write_csv(
        exp.out_dir / "peel.csv", ("index", "lambda", "amplitude", "mixed", "drift"),
        [(i, p.lambda_est, p.amplitude, p.mixed, p.drift) for i, p in enumerate(peeled)],
    )
    leading = fit.leading_refined if fit.leading_refined is not None else fit.labels[0][0]
    result = {
        "fit": fit.as_dict(),
        "ladder": [[e.decay, e.multiplicity, e.log_flag] for e in ladder],
        "leading_exponent": leading,
        "residual_one_term": one.residual,
        "residual_drop": one.residual / fit.residual if fit.residual > 0 else float("inf"),
        "peel": [[p.lambda_est, p.amplitude, p.mixed] for p in peeled],
    }
    fit_json = write_json(exp.out_dir / "fit.json", result)
    summary = {"fit_exponent": leading, "expected_exponent": ladder[0].decay,
               "peel_exponent": peeled[0].lambda_est if peeled else None,
               "residual_drop": result["residual_drop"]}
    return [fit_csv, peel_csv, fit_json], summary


def cmd_mellin(exp: Experiment):
    R = load_radiation(exp.out_dir)
    m = exp.config["mellin"]
    depth = max(float(exp.config["resonances"]["depth"]), -float(m["strip"][0]) + 1.0)
    ladder = exp.mode_exponents(depth)
    result = mellin_pole_scan(
        R, tuple(m["strip"]), ladder=ladder, n_poles=int(m["n_poles"]),
        window=tuple(m["window"]) if m.get("window") else None,
        fit_window=tuple(m.get("fit_window") or exp.config["fit"]["window"]),
        cutoff_kind=m["cutoff"],
    )
    if not result.poles:
        raise NumericError("no Mellin pole found in the strip", {"diagnostics": result.diagnostics})
    poles_csv = write_csv(exp.out_dir / "mellin_poles.csv", ("index", "re_sigma", "im_sigma"),
                          [(i, p.real, p.imag) for i, p in enumerate(result.poles)])
    diag_json = write_json(exp.out_dir / "mellin.json",
                           {"poles": [[p.real, p.imag] for p in result.poles],
                            "diagnostics": result.diagnostics})
    return [poles_csv, diag_json], {"poles_im": [p.imag for p in result.poles]}


def cmd_trace(exp: Experiment):
    if exp.alpha is None:
        raise ConfigError("trace: only circle links can be traced")
    tr = exp.raw.get("trace")
    if tr is None:
        raise ConfigError("trace: the config has no trace section")
    t = exp.config["trace"]
    start = InteriorState(**{k: float(v) for k, v in t["start"].items()})
    trajectories = trace_broken(start, t["length"], t["n_exit_samples"], alpha=exp.alpha,
                                n_samples=t["n_samples"], n=exp.n)
    traj_csv = trajectories_to_csv(trajectories, exp.out_dir / "trajectories.csv")
    rows = []
    for k, traj in enumerate(trajectories):
        for ev in traj.events:
            exit_point = ev.exits[k] if len(ev.exits) == len(trajectories) else ev.exits[0]
            rows.append((k, ev.rho0, ev.z_in, ev.tau0, ev.xi_in, exit_point.z, exit_point.xi))
    ev_csv = write_csv(exp.out_dir / "events.csv",
                       ("trajectory", "rho0", "z_in", "tau0", "xi_in", "z_exit", "xi_exit"), rows)
    return [traj_csv, ev_csv], {"n_trajectories": len(trajectories),
                                "n_events": sum(len(tj.events) for tj in trajectories[:1])}


COMMANDS = {
    "resonances": cmd_resonances,
    "solve": cmd_solve,
    "radiation": cmd_radiation,
    "fit": cmd_fit,
    "mellin": cmd_mellin,
    "trace": cmd_trace,
}


def run_stage(exp: Experiment, stage: str) -> dict:
    """Run one stage, update the manifest and return the stage summary."""
    start = time.perf_counter()
    outputs, summary = COMMANDS[stage](exp)
    wall = time.perf_counter() - start
    _update_manifest(exp, stage, outputs, wall, summary)
    log.info("STAGE op=%s config_hash=%s outputs=%d wall_s=%.3f", stage, exp.config_hash[:12],
             len(outputs), wall)
    return summary


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conewave", description=__doc__.splitlines()[0])
    parser.add_argument("stage", choices=STAGES + ("all",),
                        help="pipeline stage to run ('all' runs every stage the config supports)")
    parser.add_argument("--config", required=True, help="experiment JSON file")
    parser.add_argument("--out", default=None, help="output directory (overrides output_dir)")
    parser.add_argument("-v", "--verbose", action="store_true", help="also log quadrature details")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(message)s", stream=sys.stderr, force=True)
    try:
        exp = Experiment.from_file(args.config, args.out)
        if args.stage == "all":
            stages = [s for s in STAGES if s != "trace" or "trace" in exp.raw]
        else:
            stages = [args.stage]
        for stage in stages:
            run_stage(exp, stage)
    except (ConfigError, DomainError, UnsupportedError, ContractViolation) as exc:
        print(f"conewave: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingUpstream as exc:
        print(f"conewave: missing input: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except NumericError as exc:
        print(f"conewave: numerical failure: {exc}", file=sys.stderr)
        for key, value in sorted(exc.diagnostics.items()):
            print(f"  {key} = {value}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
