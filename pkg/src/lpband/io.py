"""CSV ingestion, simulation output files, and the reloadable result
archive.

The data format is a plain headed CSV: one column per variable, the
instrument as an ordinary named column, and optionally one date column
that is echoed but never used in computations.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .design import DesignSpec, Panel
from .errors import IngestError
from .estimate import IRFBundle, ThetaVector
from .simulate import SimOutput


def read_panel_csv(path: str | Path, instrument: str,
                   date_col: str | None = None
                   ) -> tuple[Panel, np.ndarray, list[str] | None]:
    """Load a headed CSV into (panel, instrument series, dates).

    Raises IngestError with the offending line or column for ragged rows,
    non-numeric cells and missing columns.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"{path}: file is empty")
        header = [h.strip() for h in header]
        if instrument not in header:
            raise IngestError(f"{path}: instrument column {instrument!r} "
                              f"not found (have {header})")
        if date_col is not None and date_col not in header:
            raise IngestError(f"{path}: date column {date_col!r} not found")
        raw_rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            if len(row) != len(header):
                raise IngestError(f"{path}: line {lineno}: expected "
                                  f"{len(header)} fields, got {len(row)}")
            raw_rows.append((lineno, row))
    if not raw_rows:
        raise IngestError(f"{path}: no data rows")

    dates: list[str] | None = [] if date_col is not None else None
    var_names = [h for h in header if h != instrument and h != date_col]
    col_of = {name: header.index(name) for name in header}
    values = np.empty((len(raw_rows), len(var_names)))
    z = np.empty(len(raw_rows))
    for i, (lineno, row) in enumerate(raw_rows):
        if dates is not None:
            dates.append(row[col_of[date_col]].strip())
        for j, name in enumerate(var_names):
            cell = row[col_of[name]].strip()
            try:
                values[i, j] = float(cell)
            except ValueError:
                raise IngestError(f"{path}: line {lineno}: column {name!r}: "
                                  f"non-numeric value {cell!r}")
        cell = row[col_of[instrument]].strip()
        try:
            z[i] = float(cell)
        except ValueError:
            raise IngestError(f"{path}: line {lineno}: column {instrument!r}: "
                              f"non-numeric value {cell!r}")
    if not np.all(np.isfinite(values)) or not np.all(np.isfinite(z)):
        raise IngestError(f"{path}: non-finite values present")
    panel = Panel(values=values, names=var_names,
                  t0_label=dates[0] if dates else None)
    return panel, z, dates


def write_panel_csv(path: str | Path, panel: Panel, z: np.ndarray,
                    instrument: str = "z",
                    dates: list[str] | None = None,
                    date_col: str = "date") -> None:
    """Write a panel plus instrument in the same format read_panel_csv expects."""
    path = Path(path)
    z = np.asarray(z, dtype=float).ravel()
    if z.size != panel.T:
        raise ValueError("instrument length must match the panel")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ([date_col] if dates is not None else []) + panel.names + [instrument]
        writer.writerow(header)
        for t in range(panel.T):
            row = [dates[t]] if dates is not None else []
            row += [repr(float(v)) for v in panel.values[t]]
            row.append(repr(float(z[t])))
            writer.writerow(row)


def write_truth_json(path: str | Path, sim: SimOutput) -> None:
    """Sidecar with the exact responses and moments behind a simulated CSV."""
    truth = {
        "names": sim.panel.names,
        "shock": sim.config.shock,
        "seed": sim.config.seed,
        "a": sim.config.a.tolist(),
        "b": sim.config.b.tolist(),
        "sigma": sim.true_theta.sigma.tolist(),
        "gamma": sim.true_theta.gamma.tolist(),
        "c_full": sim.true_irf.c_full.tolist(),
        "psi": sim.true_irf.psi.tolist(),
    }
    Path(path).write_text(json.dumps(truth, indent=1))


def read_truth_json(path: str | Path) -> dict:
    data = json.loads(Path(path).read_text())
    for key in ("a", "b", "sigma", "gamma", "c_full", "psi"):
        data[key] = np.asarray(data[key], dtype=float)
    return data


@dataclass
class ResultArchive:
    """Everything needed to reproduce band tables without re-estimating.

    Holds the point estimates, the score rows, the bandwidth and seed that
    drive the bootstrap, a config echo, and diagnostics.
    """

    theta: ThetaVector
    bundle: IRFBundle
    spec: DesignSpec
    names: list[str]
    first_var: int
    scores: np.ndarray
    b_t: int
    seed: int
    impact: np.ndarray | None = None
    fevd_shares: np.ndarray | None = None
    fevd_horizons: list[int] = field(default_factory=list)
    config_echo: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    version: str = __version__

    def save(self, path: str | Path) -> None:
        meta = {
            "spec": {"p": self.spec.p, "k": self.spec.k,
                     "h1": self.spec.h1, "h2": self.spec.h2},
            "names": self.names,
            "first_var": self.first_var,
            "b_t": self.b_t,
            "seed": self.seed,
            "fevd_horizons": list(self.fevd_horizons),
            "config_echo": self.config_echo,
            "diagnostics": self.diagnostics,
            "version": self.version,
            "has_psi": self.bundle.psi is not None,
            "has_impact": self.impact is not None,
            "has_fevd": self.fevd_shares is not None,
        }
        arrays = {
            "sigma": self.theta.sigma,
            "c": self.theta.c,
            "gamma": self.theta.gamma,
            "c_full": self.bundle.c_full,
            "a_br": self.bundle.a_br,
            "scores": self.scores,
            "meta_json": np.array(json.dumps(meta)),
        }
        if self.bundle.psi is not None:
            arrays["psi"] = self.bundle.psi
        if self.impact is not None:
            arrays["impact"] = self.impact
        if self.fevd_shares is not None:
            arrays["fevd_shares"] = self.fevd_shares
        np.savez_compressed(path, **arrays)

    @classmethod
    def load(cls, path: str | Path) -> "ResultArchive":
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["meta_json"]))
            theta = ThetaVector(sigma=data["sigma"], c=data["c"],
                                gamma=data["gamma"])
            bundle = IRFBundle(
                c_full=data["c_full"], a_br=data["a_br"],
                psi=data["psi"] if meta["has_psi"] else None)
            return cls(
                theta=theta,
                bundle=bundle,
                spec=DesignSpec(**meta["spec"]),
                names=list(meta["names"]),
                first_var=int(meta["first_var"]),
                scores=data["scores"],
                b_t=int(meta["b_t"]),
                seed=int(meta["seed"]),
                impact=data["impact"] if meta["has_impact"] else None,
                fevd_shares=data["fevd_shares"] if meta["has_fevd"] else None,
                fevd_horizons=list(meta["fevd_horizons"]),
                config_echo=dict(meta["config_echo"]),
                diagnostics=dict(meta["diagnostics"]),
                version=str(meta["version"]),
            )


def write_band_table(path: str | Path, names: list[str],
                     bands: dict[str, "object"]) -> None:
    """Delimited band table: one row per (variable, horizon), one
    lower/upper pair per band kind.

    ``bands`` maps kind -> BandSet whose labels are 'var:hH' in
    variable-major order (the layout produced by the response functionals).
    """
    kinds = list(bands.keys())
    first = bands[kinds[0]]
    labels = first.labels
    if labels is None:
        labels = [f"f{i}" for i in range(first.center.size)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["series", "horizon", "center"]
        for kind in kinds:
            header += [f"{kind}_lower", f"{kind}_upper"]
        writer.writerow(header)
        for i, lab in enumerate(labels):
            series, _, hpart = lab.partition(":")
            idx = int(series.replace("var", "")) - 1 if series.startswith("var") else -1
            series_name = names[idx] if 0 <= idx < len(names) else series
            row = [series_name, hpart.lstrip("hH"), repr(float(first.center[i]))]
            for kind in kinds:
                bs = bands[kind]
                row += [repr(float(bs.lower[i])), repr(float(bs.upper[i]))]
            writer.writerow(row)
