"""Command-line driver: sweeps, fits, figures, tomography tables and tradeoffs.

Subcommands::

    twobit run        --config formate_ideal --out-dir out/
    twobit plot       --results out/ --figure bloch_ellipses
    twobit tomography --config formate --stage rho3 --theta 1.5708
    twobit tradeoff   --p-min 0 --p-max 0.3 --steps 61 --p-g 0.02

Exit codes: 0 ok, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, analysis, channels, experiment
from .experiment import MODES, STAGES, NoiseConfig
from .qcore import pauli_decompose, pauli_label

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

TRIAL_COLUMNS = ("model", "mode", "theta", "t_d", "accepted_z", "accepted_x",
                 "rejected_z", "rejected_x", "acceptance_weight")
FIT_COLUMNS = ("model", "t_d", "mode", "A", "B", "C", "D", "eps", "F_eps", "F_delta", "p_eps")
TRADEOFF_COLUMNS = ("model", "p", "p_g", "detection_signal", "correction_signal",
                    "detection_fidelity", "correction_fidelity", "crossover_p")
FIGURES = ("bloch_ellipses", "ellipticity_vs_t", "p_vs_p", "fidelity_vs_t", "flows")


class ConfigError(ValueError):
    pass


class NumericError(RuntimeError):
    pass


# -- configuration -------------------------------------------------------------

DEFAULT_CONFIG = {
    "name": "custom",
    "description": "",
    "system": {"J": 195.0, "omega_ratio": 4.0},
    "relaxation": {"T2star_a": 0.35, "T2star_b": 0.50, "T1_a": 9.0, "T1_b": 13.5,
                   "attenuation_a": 0.96, "attenuation_b": 0.92, "approximate": False},
    "sweep": {"theta_steps": 10, "storage_step_in_J_periods": 12, "storage_count": 6},
    "noise": {"phase_damping": True, "rf_inhomogeneity": False, "amplitude_relaxation": False,
              "truncation": 5.0, "nodes": 64},
    "analysis": {"bootstrap": 0, "monte_carlo_samples": 0},
}

BUNDLED = ("formate_ideal", "formate", "chloroform", "chloroform_carbon_ancilla")


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {where!r} must be an object")
            out[key] = _merge(base[key], value, where + ".")
        else:
            out[key] = value
    return out


def load_config(ref: str) -> dict:
    """Resolve a bundled config name or a JSON file path into a full config."""
    if ref in BUNDLED:
        text = resources.files("twobit.configs").joinpath(f"{ref}.json").read_text()
    else:
        try:
            text = Path(ref).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {ref!r}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {ref!r} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    cfg = _merge(DEFAULT_CONFIG, raw)
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    def positive(section, key):
        v = cfg[section][key]
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0 or not math.isfinite(v):
            raise ConfigError(f"{section}.{key} must be a positive number, got {v!r}")

    for key in ("J", "omega_ratio"):
        positive("system", key)
    for key in ("T2star_a", "T2star_b", "T1_a", "T1_b"):
        positive("relaxation", key)
    for key in ("attenuation_a", "attenuation_b"):
        v = cfg["relaxation"][key]
        if not isinstance(v, (int, float)) or not 0.5 < v <= 1.0:
            raise ConfigError(f"relaxation.{key} must lie in (0.5, 1], got {v!r}")
    positive("noise", "truncation")
    sweep = cfg["sweep"]
    for key in ("theta_steps", "storage_count"):
        if not isinstance(sweep[key], int) or sweep[key] < 1:
            raise ConfigError(f"sweep.{key} must be a positive integer")
    if not isinstance(sweep["storage_step_in_J_periods"], (int, float)) or sweep["storage_step_in_J_periods"] < 0:
        raise ConfigError("sweep.storage_step_in_J_periods must be >= 0")
    if not isinstance(cfg["noise"]["nodes"], int) or cfg["noise"]["nodes"] < 2:
        raise ConfigError("noise.nodes must be an integer >= 2")
    for key in ("phase_damping", "rf_inhomogeneity", "amplitude_relaxation"):
        if not isinstance(cfg["noise"][key], bool):
            raise ConfigError(f"noise.{key} must be true or false")
    for key in ("bootstrap", "monte_carlo_samples"):
        if not isinstance(cfg["analysis"][key], int) or cfg["analysis"][key] < 0:
            raise ConfigError(f"analysis.{key} must be a non-negative integer")


def config_digest(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def noise_models(cfg: dict) -> dict[str, NoiseConfig]:
    """Always an "ideal" model (phase damping only); "noisy" adds the
    enabled gate and relaxation imperfections."""
    rel, nz = cfg["relaxation"], cfg["noise"]
    common = dict(T2star_a=rel["T2star_a"], T2star_b=rel["T2star_b"], T1_a=rel["T1_a"],
                  T1_b=rel["T1_b"], attenuation_a=rel["attenuation_a"],
                  attenuation_b=rel["attenuation_b"], truncation=float(nz["truncation"]),
                  nodes=nz["nodes"], phase_damping=nz["phase_damping"])
    models = {"ideal": NoiseConfig(**common)}
    if nz["rf_inhomogeneity"] or nz["amplitude_relaxation"]:
        models["noisy"] = NoiseConfig(**common, rf_inhomogeneity=nz["rf_inhomogeneity"],
                                      amplitude_relaxation=nz["amplitude_relaxation"])
    return models


def sweep_grid(cfg: dict) -> tuple[np.ndarray, np.ndarray]:
    s = cfg["sweep"]
    thetas = np.arange(s["theta_steps"] + 1) * np.pi / s["theta_steps"]
    t_ds = np.arange(s["storage_count"]) * s["storage_step_in_J_periods"] / cfg["system"]["J"]
    return thetas, t_ds


# -- sweep ---------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    return "%.17g" % v


def _one_trial(args):
    model, noise, mode, theta, t_d, J, omega_b = args
    with np.errstate(all="raise"):
        out, weight = experiment.simulate_trial(theta, t_d, mode, noise, J, omega_b=omega_b)
    row = (model, mode, theta, t_d, out.accepted.z, out.accepted.x,
           out.rejected.z, out.rejected.x, weight)
    if not all(np.isfinite(v) for v in row[2:]):
        raise FloatingPointError("non-finite output")
    return row


def run_sweep(cfg: dict, parallelism: int = 1) -> list[tuple]:
    """All (model, mode, t_d, theta) trials, sorted deterministically."""
    thetas, t_ds = sweep_grid(cfg)
    J = float(cfg["system"]["J"])
    omega_b = 1.0 / cfg["system"]["omega_ratio"]
    jobs = [(name, noise, mode, float(th), float(td), J, omega_b)
            for name, noise in noise_models(cfg).items()
            for mode in MODES for td in t_ds for th in thetas]
    # warm the calibration cache before forking
    for _, noise, *_ in jobs[:1]:
        noise.rf()
    rows = []
    if parallelism > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            results = pool.map(_safe_trial, jobs, chunksize=max(1, len(jobs) // (4 * parallelism)))
            rows = list(results)
    else:
        rows = [_safe_trial(j) for j in jobs]
    for r in rows:
        if isinstance(r, str):
            raise NumericError(r)
    return sorted(rows, key=lambda r: (r[0], r[1], r[3], r[2]))


def _safe_trial(job):
    try:
        return _one_trial(job)
    except (FloatingPointError, np.linalg.LinAlgError, ValueError) as exc:
        model, _, mode, theta, t_d, *_ = job
        return f"trial model={model} mode={mode} theta={theta:.6g} t_d={t_d:.6g} failed: {exc}"


def fit_rows(trials: list[tuple], bootstrap: int = 0, seed: int = 0) -> list[tuple]:
    groups: dict = {}
    for r in trials:
        groups.setdefault((r[0], r[1], r[3]), []).append((r[2], r[4], r[5]))
    out = []
    for (model, mode, t_d), pts in sorted(groups.items()):
        try:
            fit = analysis.fit_ellipse(pts, bootstrap=bootstrap, seed=seed)
            rep = analysis.fidelity_report(pts, fit)
        except (analysis.FitError, ValueError) as exc:
            raise NumericError(f"ellipse fit model={model} mode={mode} t_d={t_d:.6g} failed: {exc}") from exc
        out.append((model, t_d, mode, fit.A, fit.B, fit.C, fit.D, rep.ellipticity,
                    rep.F_epsilon, rep.F_delta, rep.p_epsilon))
    return out


def write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for k, v in r.items():
            if k not in ("model", "mode", "label"):
                r[k] = float(v)
    return rows


def monte_carlo_check(cfg: dict, seed: int) -> dict:
    """Compare quadrature and sampling averages for one noisy trial."""
    samples = cfg["analysis"]["monte_carlo_samples"]
    noise = noise_models(cfg).get("noisy") or noise_models(cfg)["ideal"]
    J = float(cfg["system"]["J"])
    theta, t_d = np.pi / 3, float(sweep_grid(cfg)[1][-1])

    def trial(sa, sb):
        rho5 = experiment.run_trial(theta, t_d, "coded", noise, (sa, sb), J)
        return pauli_decompose(experiment.readout_pulse(rho5, J, sa), check=False)

    rf = noise.rf()
    quad = channels.ensemble_average(trial, rf, vectorized=True)
    mc = channels.monte_carlo_average(trial, rf, samples, seed, vectorized=True)
    mask = np.abs(quad) > 0.01
    rel = float(np.max(np.abs(quad - mc)[mask] / np.abs(quad)[mask])) if mask.any() else 0.0
    return {"samples": samples, "seed": seed, "theta": theta, "t_d": t_d, "max_relative_difference": rel}


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trials = run_sweep(cfg, args.parallelism)
    fits = fit_rows(trials, cfg["analysis"]["bootstrap"], args.seed)
    paths = [out / "trials.csv", out / "fits.csv", out / "config.json"]
    write_csv(paths[0], TRIAL_COLUMNS, trials)
    write_csv(paths[1], FIT_COLUMNS, fits)
    paths[2].write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    if cfg["analysis"]["monte_carlo_samples"] > 0:
        paths.append(out / "monte_carlo_check.json")
        paths[-1].write_text(json.dumps(monte_carlo_check(cfg, args.seed), indent=2) + "\n")
    manifest = {
        "config_digest": config_digest(cfg),
        "tool_version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "output_paths": [str(p) for p in paths],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {len(trials)} trials and {len(fits)} fits to {out}")
    return EXIT_OK


# -- figures ---------------------------------------------------------------------

def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.rcParams["svg.hashsalt"] = "twobit"
    plt.rcParams["svg.fonttype"] = "none"
    return plt


def cmd_plot(args) -> int:
    res = Path(args.results)
    if args.figure not in FIGURES:
        raise ConfigError(f"unknown figure {args.figure!r}; choose from {', '.join(FIGURES)}")
    try:
        trials = read_csv(res / "trials.csv")
        fits = read_csv(res / "fits.csv")
    except OSError as exc:
        raise ConfigError(f"no results in {res}: {exc}") from exc
    if not trials or not fits:
        raise ConfigError(f"results in {res} are empty")
    plt = _pyplot()
    model = args.model or ("noisy" if any(r["model"] == "noisy" for r in fits) else "ideal")
    trials = [r for r in trials if r["model"] == model]
    fits = [r for r in fits if r["model"] == model]
    if not trials:
        raise ConfigError(f"no rows for model {model!r}")
    t_ds = sorted({r["t_d"] for r in fits})
    series = {m: sorted((r for r in fits if r["mode"] == m), key=lambda r: r["t_d"]) for m in MODES}
    fig, axes = plt.subplots(1, 2, figsize=(9, 4.2)) if args.figure in ("bloch_ellipses", "flows") \
        else plt.subplots(figsize=(5, 4.2))

    if args.figure in ("bloch_ellipses", "flows"):
        for ax, mode in zip(axes, MODES):
            for i, td in enumerate(t_ds):
                pts = sorted(((r["theta"], r["accepted_x"], r["accepted_z"]) for r in trials
                              if r["mode"] == mode and r["t_d"] == td))
                th, x, z = map(np.array, zip(*pts))
                if args.figure == "bloch_ellipses":
                    ax.plot(x, z, "o-", ms=3, label=f"{td * 1e3:.1f} ms")
                elif i in (0, len(t_ds) - 1):
                    ax.quiver(np.sin(th), np.cos(th), x - np.sin(th), z - np.cos(th),
                              angles="xy", scale_units="xy", scale=1, width=0.004,
                              color=f"C{i}", label=f"{td * 1e3:.1f} ms")
            ax.set_aspect("equal")
            ax.set_xlim(-0.05, 1.1)
            ax.set_ylim(-1.1, 1.1)
            ax.set_xlabel("x")
            ax.set_ylabel("z")
            ax.set_title(mode)
            ax.legend(fontsize=7, loc="upper right")
    elif args.figure == "ellipticity_vs_t":
        for mode in MODES:
            t = np.array([r["t_d"] for r in series[mode]])
            ax = axes
            ax.plot(t * 1e3, [r["eps"] for r in series[mode]], "o", label=mode)
            q = analysis.quadratic_fit(t, [r["eps"] for r in series[mode]])
            tt = np.linspace(0, t.max(), 100)
            ax.plot(tt * 1e3, q(tt), "-", lw=1, color=ax.lines[-1].get_color())
        axes.set_xlabel("storage time (ms)")
        axes.set_ylabel("ellipticity")
        axes.legend()
    elif args.figure == "p_vs_p":
        pc = [r["p_eps"] for r in series["control"]]
        pk = [r["p_eps"] for r in series["coded"]]
        lim = max(max(pc), max(pk), 1e-3) * 1.1
        axes.plot([0, lim], [0, lim], ":", color="k", label="45 degree line")
        axes.plot(pc, pk, "o", label="coded vs control")
        axes.set_xlabel("p (control)")
        axes.set_ylabel("p (coded)")
        axes.set_xlim(0, lim)
        axes.set_ylim(0, lim)
        axes.legend()
    elif args.figure == "fidelity_vs_t":
        for mode in MODES:
            t = np.array([r["t_d"] for r in series[mode]]) * 1e3
            axes.plot(t, [r["F_eps"] for r in series[mode]], "o-", label=f"{mode} F_eps")
            axes.plot(t, [r["F_delta"] for r in series[mode]], "s--", label=f"{mode} F_delta")
        axes.set_xlabel("storage time (ms)")
        axes.set_ylabel("fidelity")
        axes.legend()
    fig.tight_layout()
    out = Path(args.out_dir or res)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{args.figure}.svg"
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    print(f"wrote {path}")
    return EXIT_OK


# -- tomography ------------------------------------------------------------------

def stage_state(cfg: dict, stage: str, theta: float, t_d: float, mode: str) -> np.ndarray:
    """Ensemble-averaged state at a pipeline stage under the config's noise."""
    models = noise_models(cfg)
    noise = models.get("noisy", models["ideal"])
    J = float(cfg["system"]["J"])
    omega_b = 1.0 / cfg["system"]["omega_ratio"]
    sa, sb, w = noise.rf().scale_grid()
    states = experiment.trial_stages(theta, t_d, mode, noise, J, (sa, sb), omega_b=omega_b)
    return np.tensordot(w, states[stage], axes=(0, 0))


def cmd_tomography(args) -> int:
    if args.stage not in STAGES:
        raise ConfigError(f"unknown stage {args.stage!r}; choose from {', '.join(STAGES)}")
    if args.mode not in MODES:
        raise ConfigError(f"unknown mode {args.mode!r}")
    cfg = load_config(args.config)
    J = float(cfg["system"]["J"])
    rho = stage_state(cfg, args.stage, args.theta, args.t_d, args.mode)
    c = experiment.tomography(rho, J)
    direct = pauli_decompose(rho)
    direct[0, 0] = 0.0
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    coeff_rows = [(pauli_label(i, j), i, j, c[i, j], direct[i, j]) for i in range(4) for j in range(4)]
    write_csv(out / f"tomography_{args.stage}.csv", ("label", "i", "j", "reconstructed", "direct"), coeff_rows)
    from .qcore import reconstruct
    m = reconstruct(c)
    mat_rows = [(r, k, abs(m[r, k]), float(np.angle(m[r, k])) if abs(m[r, k]) > 1e-12 else 0.0)
                for r in range(4) for k in range(4)]
    write_csv(out / f"tomography_{args.stage}_matrix.csv", ("row", "col", "amplitude", "phase"), mat_rows)
    err = float(np.max(np.abs(c - direct)))
    print(f"stage {args.stage}: max |reconstructed - direct| = {err:.3g}")
    return EXIT_OK


# -- tradeoff ----------------------------------------------------------------------

def tradeoff_rows(p_min: float, p_max: float, steps: int, p_g: float) -> list[tuple]:
    if steps < 1 or p_max < p_min:
        return []
    ps = np.linspace(p_min, p_max, steps) if steps > 1 else np.array([p_min])
    rows = []
    for model in analysis.TRADEOFF_MODELS:
        for p in ps:
            r = analysis.tradeoff(float(p), p_g, model)
            rows.append((model, r.p, r.p_g, r.detection_signal, r.correction_signal,
                         r.detection_fidelity, r.correction_fidelity, r.crossover_p))
    return rows


def cmd_tradeoff(args) -> int:
    if not (0 <= args.p_g <= 0.5) or not (0 <= args.p_min <= 0.5 and 0 <= args.p_max <= 0.5):
        raise ConfigError("probabilities must lie in [0, 1/2]")
    rows = tradeoff_rows(args.p_min, args.p_max, args.steps, args.p_g)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "tradeoff.csv", TRADEOFF_COLUMNS, rows)
    for model in analysis.TRADEOFF_MODELS:
        print(f"{model}: crossover at p = {analysis.tradeoff(0.0, args.p_g, model).crossover_p:.6g}")
    if rows:
        plt = _pyplot()
        fig, axes = plt.subplots(1, 3, figsize=(12, 3.8))
        for ax, model in zip(axes, analysis.TRADEOFF_MODELS):
            sel = [r for r in rows if r[0] == model]
            p = [r[1] for r in sel]
            ax.plot(p, [r[3] for r in sel], label="two-bit detection")
            ax.plot(p, [r[4] for r in sel], label="three-bit correction")
            ax.axvline(sel[0][7], color="k", ls="--", lw=1, label=f"crossover p = {sel[0][7]:.3g}")
            ax.axvline(args.marker, color="grey", ls=":", lw=1, label=f"p <= {args.marker:g} (experiment)")
            ax.set_title(model)
            ax.set_xlabel("p")
            ax.legend(fontsize=7)
        axes[0].set_ylabel("signal per unit resource")
        fig.tight_layout()
        fig.savefig(out / "tradeoff.svg", format="svg", metadata={"Date": None})
        plt.close(fig)
    return EXIT_OK


# -- entry point ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="twobit", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", default="formate_ideal",
                           help=f"bundled name ({', '.join(BUNDLED)}) or JSON path")
        p.add_argument("--out-dir", default="twobit_out")
        p.add_argument("--seed", type=int, default=0, help="seed for the Monte-Carlo cross-check")
        p.add_argument("--parallelism", type=int, default=1)

    p = sub.add_parser("run", help="run the coding/control sweep and fit ellipses")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("plot", help="draw a figure from run results")
    common(p, config=False)
    p.add_argument("--results", required=True, help="directory written by 'run'")
    p.add_argument("--figure", required=True, help=", ".join(FIGURES))
    p.add_argument("--model", choices=("ideal", "noisy"), default=None)
    p.set_defaults(func=cmd_plot, out_dir=None)

    p = sub.add_parser("tomography", help="reconstruct a pipeline-stage state from nine readouts")
    common(p)
    p.add_argument("--stage", required=True, help=", ".join(STAGES))
    p.add_argument("--theta", type=float, default=np.pi / 2)
    p.add_argument("--t-d", type=float, default=0.0)
    p.add_argument("--mode", default="coded")
    p.set_defaults(func=cmd_tomography)

    p = sub.add_parser("tradeoff", help="tabulate detection vs correction figures of merit")
    common(p, config=False)
    p.add_argument("--p-min", type=float, default=0.0)
    p.add_argument("--p-max", type=float, default=0.3)
    p.add_argument("--steps", type=int, default=61)
    p.add_argument("--p-g", type=float, default=0.0)
    p.add_argument("--marker", type=float, default=0.269, help="largest p reached experimentally")
    p.set_defaults(func=cmd_tradeoff)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "parallelism", 1) < 1:
        print("error: --parallelism must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
