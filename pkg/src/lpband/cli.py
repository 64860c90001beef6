"""Command line interface.

Subcommands: simulate | estimate | bands | smooth | compare. Every command
reads an optional JSON config file; command-line flags override config
values, which override defaults. All randomness flows from one seed and
every run writes both delimited tables and rendered figures.

Exit codes: 0 success, 2 validation/ingest error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .design import DesignSpec
from .errors import (
    ConfigError,
    IngestError,
    InsufficientSample,
    LPBandError,
)
from .estimate import estimate_theta
from .inference import (
    ScorePanel,
    compute_scores,
    default_bandwidth,
    evaluate_functional,
    gamma_functional,
    impact_gap_functional,
    pointwise_from_values,
    bonferroni_from_values,
    supt_from_values,
    structural_irf_functional,
    reduced_irf_functional,
    supt_test,
    wild_draws,
)
from .io import (
    ResultArchive,
    read_panel_csv,
    write_band_table,
    write_panel_csv,
    write_truth_json,
)
from .simulate import PRESETS, SimConfig, VolatilityProcess, simulate
from .smooth import MDProblem, fit_md, md_weights, smoothed_irf_functional, stack_c
from .structural import fevd, impact_vector


@dataclass
class RunConfig:
    """Estimation and band options shared by the data-facing commands."""

    input: str | None = None
    instrument: str = "z"
    shock_var: str | None = None
    date_col: str | None = None
    p: int = 4
    k: int = 0
    h1: int | None = None
    h2: int | None = None
    draws: int = 1000
    alpha: list[float] = field(default_factory=lambda: [0.32])
    bandwidth: str | int = "auto"
    kernel: str = "bartlett"
    seed: int = 0
    out: str = "out"
    workers: int = 1
    functional: str = "psi"
    response: str | None = None
    impulse: str | None = None
    ordering: str | None = None
    linearized: bool = False
    no_plots: bool = False
    archive: str | None = None

    def spec(self) -> DesignSpec:
        try:
            return DesignSpec(p=self.p, k=self.k, h1=self.h1, h2=self.h2)
        except ValueError as exc:
            raise ConfigError(str(exc))

    def validate(self) -> None:
        if self.draws < 100:
            raise ConfigError("draws must be >= 100")
        for a in self.alpha:
            if not 0.0 < a < 1.0:
                raise ConfigError(f"alpha {a} must be in (0, 1)")
        if self.kernel not in ("bartlett", "truncated"):
            raise ConfigError(f"unknown kernel {self.kernel!r}")
        if isinstance(self.bandwidth, str) and self.bandwidth != "auto":
            raise ConfigError("bandwidth must be 'auto' or an integer")
        if not isinstance(self.bandwidth, str) and int(self.bandwidth) < 1:
            raise ConfigError("bandwidth must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")


def _merge_config(args: argparse.Namespace, keys: list[str]) -> RunConfig:
    cfg = RunConfig()
    file_cfg: dict = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file {path} does not exist")
        try:
            file_cfg = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}")
    for key, value in file_cfg.items():
        if key in ("dgp",):
            continue
        if not hasattr(cfg, key):
            raise ConfigError(f"unknown config key {key!r}")
        setattr(cfg, key, value)
    for key in keys:
        value = getattr(args, key, None)
        if value is not None and value is not False:
            setattr(cfg, key, value)
    if isinstance(cfg.alpha, (int, float)):
        cfg.alpha = [float(cfg.alpha)]
    cfg.alpha = [float(a) for a in cfg.alpha]
    if isinstance(cfg.bandwidth, str) and cfg.bandwidth != "auto":
        cfg.bandwidth = int(cfg.bandwidth)
    cfg.validate()
    return cfg


def _format_table(headers: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
              for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers))]
    lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        lines.append("  ".join(r[i].ljust(widths[i]) for i in range(len(headers))))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# simulate

def _sim_config_from_json(data: dict, args: argparse.Namespace) -> SimConfig:
    dgp = data.get("dgp", data)
    preset = getattr(args, "preset", None) or dgp.get("preset")
    T = getattr(args, "T", None) or dgp.get("T")
    seed = getattr(args, "seed", None)
    seed = dgp.get("seed", 0) if seed is None else seed
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; have {sorted(PRESETS)}")
        if T is None:
            raise ConfigError("preset simulation requires T")
        return PRESETS[preset](int(T), seed=int(seed))
    for key in ("a", "b", "T"):
        if key not in dgp:
            raise ConfigError(f"simulate config missing {key!r}")
    volspec = dgp.get("vol", {"kind": "constant"})
    vol = VolatilityProcess(
        kind=volspec.get("kind", "constant"),
        stay_prob=tuple(volspec.get("stay", (0.7, 0.7))),
        vol_multipliers=(np.asarray(volspec["multipliers"], dtype=float)
                         if "multipliers" in volspec else None),
        instrument_rule=volspec.get("instrument_rule", "regime_indicator"),
        count_probs=tuple(volspec.get("count_probs", (0.25, 0.75))),
    )
    try:
        return SimConfig(
            a=np.asarray(dgp["a"], dtype=float),
            b=np.asarray(dgp["b"], dtype=float),
            T=int(T if T is not None else dgp["T"]),
            v=np.asarray(dgp["v"], dtype=float) if dgp.get("v") is not None else None,
            vol=vol,
            shock=int(dgp.get("shock", 0)),
            burn_in=int(dgp.get("burn_in", 500)),
            seed=int(seed),
            innovation=dgp.get("innovation", "gaussian"),
            names=dgp.get("names"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc))


def cmd_simulate(args: argparse.Namespace) -> int:
    data = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file {path} does not exist")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}")
    config = _sim_config_from_json(data, args)
    out = Path(args.out or data.get("out", "out"))
    out.mkdir(parents=True, exist_ok=True)
    sim = simulate(config, truth_horizon=int(args.truth_horizon))
    csv_path = out / "panel.csv"
    write_panel_csv(csv_path, sim.panel, sim.instrument, instrument="z")
    truth_path = out / "truth.json"
    write_truth_json(truth_path, sim)
    print(f"wrote {csv_path} ({sim.panel.T} rows, {sim.panel.n} variables + z)")
    print(f"wrote {truth_path}")
    return 0


# ---------------------------------------------------------------------------
# estimate and the downstream commands

def _fevd_grid(h2: int) -> list[int]:
    grid = sorted({1, max(1, h2 // 4), max(1, h2 // 2), h2})
    return [h for h in grid if h >= 1]


def _estimate_archive(cfg: RunConfig) -> ResultArchive:
    if cfg.input is None:
        raise ConfigError("no input CSV given (and no archive to reuse)")
    panel, z, _ = read_panel_csv(cfg.input, instrument=cfg.instrument,
                                 date_col=cfg.date_col)
    if cfg.shock_var is None:
        first_var = 0
    else:
        if cfg.shock_var not in panel.names:
            raise ConfigError(f"shock_var {cfg.shock_var!r} not among panel "
                              f"columns {panel.names}")
        first_var = panel.names.index(cfg.shock_var)
    spec = cfg.spec()
    theta, res, bundle = estimate_theta(panel, z, spec, first_var=first_var,
                                        workers=cfg.workers)
    scores = compute_scores(res, z, theta, first_var=first_var)
    b_t = (default_bandwidth(scores.m) if cfg.bandwidth == "auto"
           else int(cfg.bandwidth))
    impact = None
    fevd_shares = None
    grid = _fevd_grid(spec.h2)
    if bundle.psi is not None:
        impact = impact_vector(theta.gamma, theta.sigma, first_var=first_var).b
        fevd_shares = fevd(bundle.psi, bundle.c_full, theta.sigma, grid).shares
    diagnostics = {
        "T": panel.T,
        "effective_rows_h0": int(res[0].m),
        "score_rows": int(scores.m),
        "b_t": int(b_t),
    }
    echo = {k: getattr(cfg, k) for k in
            ("input", "instrument", "shock_var", "p", "k", "h1", "h2",
             "draws", "kernel", "seed", "out")}
    echo["bandwidth"] = b_t
    return ResultArchive(
        theta=theta, bundle=bundle, spec=spec, names=panel.names,
        first_var=first_var, scores=scores.rows, b_t=b_t, seed=cfg.seed,
        impact=impact, fevd_shares=fevd_shares, fevd_horizons=grid,
        config_echo=echo, diagnostics=diagnostics,
    )


def _load_or_estimate(cfg: RunConfig, out: Path) -> ResultArchive:
    if cfg.archive:
        return ResultArchive.load(cfg.archive)
    archive = _estimate_archive(cfg)
    out.mkdir(parents=True, exist_ok=True)
    archive.save(out / "archive.npz")
    return archive


def _write_point_tables(archive: ResultArchive, out: Path) -> None:
    import csv as _csv

    if archive.bundle.psi is not None:
        with open(out / "irf.csv", "w", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(["series", "horizon", "psi"])
            for v, name in enumerate(archive.names):
                for h in range(archive.spec.h2 + 1):
                    writer.writerow([name, h, repr(float(archive.bundle.psi[h, v]))])
    if archive.fevd_shares is not None:
        with open(out / "fevd.csv", "w", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(["series", "horizon", "share"])
            for v, name in enumerate(archive.names):
                for i, H in enumerate(archive.fevd_horizons):
                    writer.writerow([name, H, repr(float(archive.fevd_shares[v, i]))])


def cmd_estimate(args: argparse.Namespace) -> int:
    cfg = _merge_config(args, _ESTIMATE_KEYS)
    out = Path(cfg.out)
    archive = _estimate_archive(cfg)
    out.mkdir(parents=True, exist_ok=True)
    archive.save(out / "archive.npz")
    _write_point_tables(archive, out)

    rows = []
    theta = archive.theta
    for v, name in enumerate(archive.names):
        impact_txt = ("-" if archive.impact is None
                      else f"{archive.impact[v]: .4f}")
        rows.append([name, f"{theta.gamma[v]: .5f}", impact_txt,
                     f"{np.sqrt(theta.sigma[v, v]): .4f}"])
    print(_format_table(["series", "gamma", "impact", "innov sd"], rows))
    diag = archive.diagnostics
    print(f"\nrows used (h=0): {diag['effective_rows_h0']}   "
          f"score rows: {diag['score_rows']}   bandwidth: {diag['b_t']}")
    print(f"wrote {out / 'archive.npz'}")
    return 0


def _band_functional(cfg: RunConfig, archive: ResultArchive):
    n = len(archive.names)
    spec = archive.spec
    if cfg.functional == "psi":
        if archive.bundle.psi is None:
            raise ConfigError("structural responses unavailable (zero gamma); "
                              "cannot band psi")
        return structural_irf_functional(n, spec.h1, spec.p, spec.h2,
                                         first_var=archive.first_var)
    if cfg.functional == "c":
        resp = archive.names.index(cfg.response) if cfg.response else 0
        imp = archive.names.index(cfg.impulse) if cfg.impulse else archive.first_var
        return reduced_irf_functional(n, spec.h1, spec.p, spec.h2, resp, imp)
    if cfg.functional == "gamma":
        return gamma_functional(n, spec.h1)
    if cfg.functional == "impact-gap":
        ordering = _parse_ordering(cfg, archive.names)
        return impact_gap_functional(n, spec.h1, first_var=archive.first_var,
                                     shock_index=archive.first_var,
                                     ordering=ordering)
    raise ConfigError(f"unknown functional {cfg.functional!r}")


def _parse_ordering(cfg: RunConfig, names: list[str]) -> list[int] | None:
    if not cfg.ordering:
        return None
    parts = [s.strip() for s in cfg.ordering.split(",")]
    missing = [s for s in parts if s not in names]
    if missing:
        raise ConfigError(f"ordering names not in panel: {missing}")
    if len(parts) != len(names):
        raise ConfigError("ordering must list every panel variable once")
    return [names.index(s) for s in parts]


def cmd_bands(args: argparse.Namespace) -> int:
    cfg = _merge_config(args, _BANDS_KEYS)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    archive = _load_or_estimate(cfg, out)
    scores = ScorePanel(rows=archive.scores, n=len(archive.names),
                        h1=archive.spec.h1, first_var=archive.first_var)
    drawset = wild_draws(scores, archive.theta, cfg.draws, archive.b_t,
                         archive.seed, workers=cfg.workers)
    f, labels = _band_functional(cfg, archive)
    center, values = evaluate_functional(drawset, f)
    for alpha in cfg.alpha:
        bands = {
            "pointwise": pointwise_from_values(center, values, alpha, labels),
            "supt": supt_from_values(center, values, alpha, labels),
            "bonferroni": bonferroni_from_values(center, values, alpha, labels),
        }
        table_path = out / f"bands_{cfg.functional}_a{alpha:g}.csv"
        write_band_table(table_path, archive.names, bands)
        print(f"wrote {table_path}  (supt cv {bands['supt'].cv:.4f})")
        if cfg.functional in ("psi", "c") and not cfg.no_plots:
            from .plots import plot_irf_bands

            names = (archive.names if cfg.functional == "psi"
                     else [labels[0].split(":")[0]])
            written = plot_irf_bands(bands, names, out,
                                     prefix=f"{cfg.functional}_a{alpha:g}")
            print("wrote " + ", ".join(str(w) for w in written))
    return 0


def cmd_smooth(args: argparse.Namespace) -> int:
    cfg = _merge_config(args, _BANDS_KEYS)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    archive = _load_or_estimate(cfg, out)
    if archive.bundle.psi is None:
        raise ConfigError("structural responses unavailable (zero gamma)")
    n = len(archive.names)
    spec = archive.spec
    scores = ScorePanel(rows=archive.scores, n=n, h1=spec.h1,
                        first_var=archive.first_var)
    drawset = wild_draws(scores, archive.theta, cfg.draws, archive.b_t,
                         archive.seed, workers=cfg.workers)
    weights = md_weights(drawset)
    problem = MDProblem(g_lp=stack_c(archive.theta.c), weights=weights,
                        p=spec.p, n=n)
    sol = fit_md(problem)
    if not sol.converged:
        print(f"minimum-distance fit did not converge "
              f"(grad {sol.grad_norm:.2e} after {sol.iterations} iterations)",
              file=sys.stderr)
        return 3
    f, labels = smoothed_irf_functional(
        n, spec.h1, spec.p, spec.h2, weights, warm_start=sol.a_md,
        first_var=archive.first_var, linearized=cfg.linearized)
    center, values = evaluate_functional(drawset, f)
    for alpha in cfg.alpha:
        bands = {
            "pointwise": pointwise_from_values(center, values, alpha, labels),
            "supt": supt_from_values(center, values, alpha, labels),
        }
        table_path = out / f"smoothed_bands_a{alpha:g}.csv"
        write_band_table(table_path, archive.names, bands)
        print(f"wrote {table_path}  (objective {sol.objective_value:.4e}, "
              f"{sol.iterations} iterations)")
        if not cfg.no_plots:
            from .plots import plot_irf_bands

            written = plot_irf_bands(bands, archive.names, out,
                                     prefix=f"smoothed_a{alpha:g}")
            print("wrote " + ", ".join(str(w) for w in written))
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    cfg = _merge_config(args, _BANDS_KEYS)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    archive = _load_or_estimate(cfg, out)
    n = len(archive.names)
    scores = ScorePanel(rows=archive.scores, n=n, h1=archive.spec.h1,
                        first_var=archive.first_var)
    drawset = wild_draws(scores, archive.theta, cfg.draws, archive.b_t,
                         archive.seed, workers=cfg.workers)
    ordering = _parse_ordering(cfg, archive.names)
    f, labels = impact_gap_functional(n, archive.spec.h1,
                                      first_var=archive.first_var,
                                      shock_index=archive.first_var,
                                      ordering=ordering)
    alpha = cfg.alpha[0]
    result = supt_test(drawset, f, 0.0, alpha=alpha)
    gap = f(archive.theta.to_array())
    rows = [[archive.names[v], f"{gap[v]: .5f}"] for v in range(n)]
    report = [
        "recursive-minus-instrument impact comparison",
        _format_table(["series", "gap"], rows),
        f"sup-t statistic: {result.statistic:.4f}",
        f"critical value (alpha={alpha:g}): {result.cv:.4f}",
        f"p-value: {result.p_value:.4f}",
    ]
    text = "\n".join(report)
    (out / "compare.txt").write_text(text + "\n")
    print(text)
    print(f"wrote {out / 'compare.txt'}")
    return 0


# ---------------------------------------------------------------------------

_ESTIMATE_KEYS = ["input", "instrument", "shock_var", "date_col", "p", "k",
                  "h1", "h2", "bandwidth", "kernel", "seed", "out", "workers",
                  "draws"]
_BANDS_KEYS = _ESTIMATE_KEYS + ["alpha", "functional", "response", "impulse",
                                "ordering", "linearized", "no_plots", "archive"]


def _add_estimation_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="JSON config file")
    sp.add_argument("--input", help="input CSV path")
    sp.add_argument("--instrument", help="instrument column name")
    sp.add_argument("--shock-var", dest="shock_var",
                    help="variable whose shock is identified (default: first column)")
    sp.add_argument("--date-col", dest="date_col", help="date column to echo")
    sp.add_argument("-p", type=int, help="lag order")
    sp.add_argument("-k", type=int, help="trend degree (-1 none, 0 constant)")
    sp.add_argument("--h1", type=int, help="direct estimation horizon")
    sp.add_argument("--h2", type=int, help="reporting horizon")
    sp.add_argument("--bandwidth", help="'auto' or integer")
    sp.add_argument("--kernel", choices=["bartlett", "truncated"])
    sp.add_argument("--seed", type=int, help="bootstrap seed")
    sp.add_argument("--out", help="output directory")
    sp.add_argument("--workers", type=int, help="worker threads")
    sp.add_argument("--draws", type=int, help="bootstrap draw count")


def _add_band_flags(sp: argparse.ArgumentParser) -> None:
    _add_estimation_flags(sp)
    sp.add_argument("--archive", help="reuse a saved archive.npz")
    sp.add_argument("--alpha", type=float, action="append",
                    help="band level (repeatable); default 0.32")
    sp.add_argument("--functional",
                    choices=["psi", "c", "gamma", "impact-gap"])
    sp.add_argument("--response", help="response variable for functional=c")
    sp.add_argument("--impulse", help="impulse variable for functional=c")
    sp.add_argument("--ordering", help="comma-separated recursive ordering")
    sp.add_argument("--linearized", action="store_true", default=None,
                    help="one-step refit per draw when smoothing")
    sp.add_argument("--no-plots", dest="no_plots", action="store_true",
                    default=None, help="skip figure rendering")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lpband",
        description=("Impulse responses by multi-horizon projections in "
                     "levels, with instrument-based shock identification "
                     "and simultaneous bootstrap bands."))
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="generate a synthetic dataset + truth")
    sp.add_argument("--config", help="JSON config with dgp description")
    sp.add_argument("--preset", choices=sorted(PRESETS),
                    help="named ready-made process")
    sp.add_argument("--T", type=int, help="sample length")
    sp.add_argument("--seed", type=int, help="generator seed")
    sp.add_argument("--truth-horizon", dest="truth_horizon", type=int,
                    default=24, help="horizon for the stored exact responses")
    sp.add_argument("--out", help="output directory")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("estimate", help="point estimates from a CSV")
    _add_estimation_flags(sp)
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("bands", help="bootstrap bands for a functional")
    _add_band_flags(sp)
    sp.set_defaults(func=cmd_bands)

    sp = sub.add_parser("smooth", help="minimum-distance smoothed responses")
    _add_band_flags(sp)
    sp.set_defaults(func=cmd_smooth)

    sp = sub.add_parser("compare", help="recursive vs instrument impact test")
    _add_band_flags(sp)
    sp.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, IngestError, InsufficientSample) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LPBandError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
