"""Command-line front end.

Subcommands
-----------
detect     one simulated trial (or an observation file) through the detector
fig1       correct-detection probability versus M_r for several (K, L)
fig2       empirical ROC points for several jammer powers
analyze    closed-form P_FA / P_C (both variants) and spectral efficiency
threshold  mu' for a target false-alarm rate under each inversion

Every CSV starts with a ``# manifest: {json}`` line holding the resolved
configuration; ``--config`` accepts such a CSV to reproduce the run.
Exit codes: 0 clean/success, 2 jammer detected, 1 error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
import time
import warnings
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__, analysis, config as cfgmod
from .detector import detect
from .errors import JamDetectError
from .kernel import BACKEND
from .model import UnusedPilotObservations, simulate_observations
from .montecarlo import AntennaRow, RocRow, Scenario, sweep_antennas, sweep_roc

EXIT_CLEAN = 0
EXIT_ERROR = 1
EXIT_DETECTED = 2

FIG1_COLUMNS = [f.name for f in dataclasses.fields(AntennaRow) if f.name != "detections"]
FIG2_COLUMNS = [f.name for f in dataclasses.fields(RocRow)]


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which would read as "detected"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="YAML config file, or a CSV written by this tool")
    parser.add_argument("--seed", type=int, help="base seed of the random streams")
    parser.add_argument("--trials", type=int, help="Monte Carlo trials per point")
    parser.add_argument("--variant", choices=["paper", "consistent"], help="closed-form variant")
    parser.add_argument("--out", help="output path (default: stdout)")
    parser.add_argument("--threads", type=int, help="worker threads for Monte Carlo")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override a config entry (repeatable), e.g. --set system.q=-20")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="jamdetect", description="Jamming detection on unused pilots in massive MIMO.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("detect", help="run the detector on one trial or an observation file")
    _common(p)
    p.add_argument("--observations", help=".npy or .npz (key Y_w) array of shape (L, M_r, tau-K)")

    p = sub.add_parser("fig1", help="P_C versus number of BS antennas")
    _common(p)
    p = sub.add_parser("fig2", help="empirical ROC for several jammer powers")
    _common(p)

    p = sub.add_parser("analyze", help="closed-form performance and spectral efficiency")
    _common(p)
    p.add_argument("--mu-prime", type=float, help="threshold on the estimate")
    p.add_argument("--q-tilde", type=float, help="effective jamming power (linear)")

    p = sub.add_parser("threshold", help="mu' for a target P_FA under each inversion")
    _common(p)
    return parser


def _load_config(args) -> dict:
    file_data = cfgmod.load_file(args.config) if args.config else None
    overrides = [cfgmod.parse_override(text) for text in args.overrides]
    flags: dict = {}
    if args.seed is not None:
        flags.setdefault("simulation", {})["seed"] = args.seed
    if args.trials is not None:
        flags.setdefault("simulation", {})["n_trials"] = args.trials
    if args.threads is not None:
        flags.setdefault("simulation", {})["threads"] = args.threads
    if args.variant is not None:
        flags.setdefault("detector", {})["variant"] = args.variant
    if getattr(args, "mu_prime", None) is not None:
        flags.setdefault("analysis", {})["mu_prime"] = args.mu_prime
    if getattr(args, "q_tilde", None) is not None:
        flags.setdefault("analysis", {})["q_tilde"] = args.q_tilde
    if getattr(args, "observations", None) is not None:
        flags.setdefault("simulation", {})["observations"] = args.observations
    return cfgmod.resolve(file_data, overrides + ([flags] if flags else []))


def _manifest(command: str, cfg: dict, out: Optional[str], started: float) -> dict:
    return {
        "command": command,
        "version": __version__,
        "seed": cfg["simulation"]["seed"],
        "config": cfg,
        "outputs": [str(out)] if out else [],
        "duration_s": round(time.perf_counter() - started, 3),
        "backend": BACKEND,
    }


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        try:
            Path(out).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise JamDetectError(f"cannot write output {out}: {exc}") from exc
    else:
        sys.stdout.write(text)


def write_csv(rows, columns: Sequence[str], manifest: dict, out: Optional[str]) -> None:
    buf = io.StringIO()
    buf.write(cfgmod.MANIFEST_PREFIX + json.dumps(manifest, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(getattr(row, c)) for c in columns])
    _emit(buf.getvalue(), out)


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def _write_json(payload: dict, out: Optional[str]) -> None:
    _emit(json.dumps(_json_safe(payload), indent=2, sort_keys=True) + "\n", out)


def _scenario(cfg: dict, **system_changes) -> Scenario:
    sim = cfg["simulation"]
    return Scenario(
        system=cfgmod.system_from(cfg, **system_changes),
        detector=cfgmod.detector_from(cfg),
        jammer_present=bool(sim["jammer_present"]),
        n_trials=int(sim["n_trials"]),
        seed=int(sim["seed"]),
        pilot_hopping=bool(sim["pilot_hopping"]),
        fixed_jammer=bool(sim["fixed_jammer"]),
    )


def _read_observations(path: str) -> UnusedPilotObservations:
    try:
        data = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise JamDetectError(f"cannot read observations {path}: {exc}") from exc
    if isinstance(data, np.lib.npyio.NpzFile):
        with data:
            if "Y_w" not in data.files:
                raise JamDetectError(f"{path}: expected an array named 'Y_w', found {data.files}")
            data = data["Y_w"]
    return UnusedPilotObservations(data)


def cmd_detect(cfg: dict, args) -> int:
    started = time.perf_counter()
    sc = _scenario(cfg)
    obs_path = cfg["simulation"]["observations"]
    if obs_path:
        obs = _read_observations(obs_path)
    else:
        obs = simulate_observations(sc.system, sc.jammer_present, sc.seed, 0,
                                    pilot_hopping=sc.pilot_hopping, fixed_jammer=sc.fixed_jammer)
    report = detect(obs, sc.detector, sc.system)
    print(f"q_hat: {report.q_hat:.10g}")
    print(f"mu_prime: {report.threshold_mu_prime:.10g}")
    print(f"decision: {report.decision}")
    if args.out:
        _write_json({"manifest": _manifest("detect", cfg, args.out, started), "report": report.as_dict()}, args.out)
    return EXIT_DETECTED if report.detected else EXIT_CLEAN


def cmd_fig1(cfg: dict, args) -> int:
    started = time.perf_counter()
    base = _scenario(cfg)
    if base.detector.target_pfa is None:
        raise JamDetectError("fig1 needs detector.target_pfa (thresholds are recomputed per point)")
    kl = [tuple(int(v) for v in pair) for pair in cfg["fig1"]["K_L"]]
    rows = sweep_antennas(base, [int(m) for m in cfg["fig1"]["M_r_grid"]], kl,
                          workers=int(cfg["simulation"]["threads"]))
    write_csv(rows, FIG1_COLUMNS, _manifest("fig1", cfg, args.out, started), args.out)
    return EXIT_CLEAN


def cmd_fig2(cfg: dict, args) -> int:
    started = time.perf_counter()
    base = _scenario(cfg)
    if base.detector.target_pfa is None:
        raise JamDetectError("fig2 needs detector.target_pfa (the grid replaces it)")
    q_list = [cfgmod.power_db(v, "fig2.q_list") for v in cfg["fig2"]["q_list"]]
    rows = sweep_roc(base, cfg["fig2"]["pfa_grid"], q_list, workers=int(cfg["simulation"]["threads"]))
    write_csv(rows, FIG2_COLUMNS, _manifest("fig2", cfg, args.out, started), args.out)
    return EXIT_CLEAN


def _spectral_efficiency(cfg: dict, system) -> Optional[dict]:
    a = cfg["analysis"]
    if a["rho"] is None and a["varrho"] is None:
        return None
    T = a["T"] if a["T"] is not None else system.T
    if a["rho"] is None or a["varrho"] is None or T is None:
        raise JamDetectError("spectral efficiency needs analysis.rho, analysis.varrho and a coherence length T")
    weights = a["weights"] if a["weights"] is not None else analysis.equal_split_weights(system.M_w, system.tau)
    params = analysis.SpectralEfficiencyParams(
        p=system.p, q=system.q,
        rho=cfgmod.parse_power(a["rho"], "analysis.rho"),
        varrho=cfgmod.parse_power(a["varrho"], "analysis.varrho"),
        beta_users=system.beta_users, beta_w=system.beta_w, tau=system.tau, T=int(T),
        M_w=system.M_w, weights=[float(w) for w in weights],
    )
    return analysis.asymptotic_spectral_efficiency(params).as_dict()


def cmd_analyze(cfg: dict, args) -> int:
    system = cfgmod.system_from(cfg)
    a = cfg["analysis"]
    if a["mu_prime"] is not None:
        mu = float(a["mu_prime"])
    else:
        mu = cfgmod.detector_from(cfg).resolve(system).mu_prime
    qt = float(a["q_tilde"]) if a["q_tilde"] is not None else system.q_tilde
    points = {v.value: analysis.performance_point(mu, qt, system.M_r, system.L, system.tau, system.K, v).as_dict()
              for v in analysis.Variant}
    payload = {"mu_prime": mu, "q_tilde": qt, "points": points}
    se = _spectral_efficiency(cfg, system)
    if se is not None:
        payload["spectral_efficiency"] = se
    _write_json(payload, args.out)
    return EXIT_CLEAN


def cmd_threshold(cfg: dict, args) -> int:
    system = cfgmod.system_from(cfg)
    d = cfg["detector"]
    dims = (system.M_r, system.L, system.tau, system.K)
    payload: dict = {"M_r": system.M_r, "L": system.L, "tau": system.tau, "K": system.K}
    if d["target_pfa"] is not None:
        target = float(d["target_pfa"])
        payload["target_pfa"] = target
        payload["mu_prime"] = {m: analysis.threshold_for_pfa(target, *dims, m)
                               for m in ("consistent", "paper", "asymptotic")}
    if d["mu_log"] is not None:
        from .detector import mu_prime_from_mu

        payload["mu_log"] = float(d["mu_log"])
        payload["mu_prime_from_mu_log"] = mu_prime_from_mu(float(d["mu_log"]), *dims)
    if d["threshold_mu_prime"] is not None:
        mu = float(d["threshold_mu_prime"])
        payload["threshold_mu_prime"] = mu
        payload["pfa"] = {v.value: analysis.pfa_exact(mu, *dims, v) for v in analysis.Variant}
        payload["pfa"]["asymptotic"] = analysis.pfa_asymptotic(mu, *dims)
    _write_json(payload, args.out)
    return EXIT_CLEAN


COMMANDS = {
    "detect": cmd_detect,
    "fig1": cmd_fig1,
    "fig2": cmd_fig2,
    "analyze": cmd_analyze,
    "threshold": cmd_threshold,
}


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    warnings.simplefilter("always", analysis.NegativeThresholdWarning)
    warnings.showwarning = _show_warning
    try:
        cfg = _load_config(args)
        return COMMANDS[args.command](cfg, args)
    except (JamDetectError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
