"""Config-driven Monte-Carlo experiments over a (delta, h, n) grid.

Each cell simulates ``L`` independent paths, evaluates the selected
estimators on a fixed grid, and reduces them to MAAE values and mean curves.
Replication seeds are ``hash64(master_seed, model, delta, h, n, replication)``,
so a cell's output depends only on its own coordinates and never on thread
count or on which other cells run.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import MaaeReport, RateParams, eval_grid, maae, rate_diffusion, rate_drift, rate_fit, rate_remark2
from .errors import ConfigError, IntDiffError, InvalidEstimateError, ParameterError
from .estimators import ESTIMATOR_TAGS, compute_breve, estimate
from .kernels import KERNEL_KINDS, make_kernel
from .sde import SdeModel, fine_factor_for, hash64, make_model, simulate_observations

log = logging.getLogger(__name__)

DEFAULT_PARAMS = {
    "cir": (0.85837, 0.085711, 0.15660),
    "ou": (0.5, -2.75, 0.43),
}
DEFAULT_RANGES = {
    "cir": (0.078, 0.09),
    "ou": (-2.79, -2.7),
}

MAAE_HEADER = ["model", "estimator", "delta", "h", "n", "L", "maae", "rate_thm", "rate_remark2"]
CURVES_HEADER = ["x", "truth", "mean_direct", "mean_integrated"]
RATES_HEADER = ["delta", "h", "n", "rate_remark2", "maae_direct", "maae_integrated", "slope", "intercept", "correlation"]


class ExperimentError(IntDiffError):
    """A replication failed; identifies the cell, replication and seed."""

    def __init__(self, cell, replication, seed, cause):
        self.cell = cell
        self.replication = replication
        self.seed = seed
        self.cause = cause
        super().__init__(f"cell {cell}, replication {replication}, seed {seed}: {cause}")


class ArtifactError(IntDiffError, OSError):
    """An expected experiment artifact is missing or unreadable."""


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    model_params: tuple[float, float, float]
    deltas: tuple[float, ...]
    bandwidths: tuple[float, ...]
    ns: tuple[int, ...]
    L: int
    N: int
    eval_range: tuple[float, float]
    kernel: str = "epanechnikov"
    fine_factor: int = 10
    fine_step: float | None = None
    master_seed: int = 0
    burn_in_time: float = 0.0
    x0: float | None = None
    estimators: tuple[str, ...] = ("sigma2_direct", "sigma2_integrated")
    output_dir: str = "results"
    trapezoid: bool = False
    rate_params: RateParams = field(default_factory=RateParams)

    def build_model(self) -> SdeModel:
        return make_model(self.model, *self.model_params)

    def cells(self):
        for d in self.deltas:
            for h in self.bandwidths:
                for n in self.ns:
                    yield d, h, n


_KNOWN_KEYS = {
    "model", "deltas", "bandwidths", "ns", "L", "N", "eval_range", "kernel", "fine_factor",
    "fine_step", "master_seed", "burn_in_time", "x0", "estimators", "output_dir", "trapezoid",
    "rate_params",
}


def _num_list(raw, name, kind=float, positive=True):
    if not isinstance(raw, list) or not raw:
        raise ConfigError("must be a nonempty list", name)
    out = []
    for i, v in enumerate(raw):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"entry {i} is not a number", f"{name}[{i}]")
        if kind is int and int(v) != v:
            raise ConfigError(f"entry {i} is not an integer", f"{name}[{i}]")
        v = kind(v)
        if positive and not v > 0:
            raise ConfigError(f"entry {i} must be positive", f"{name}[{i}]")
        out.append(v)
    return tuple(out)


def _int(raw, name, lo):
    if isinstance(raw, bool) or not isinstance(raw, (int, float)) or int(raw) != raw:
        raise ConfigError("must be an integer", name)
    if raw < lo:
        raise ConfigError(f"must be >= {lo}, got {raw}", name)
    return int(raw)


def _float(raw, name):
    if isinstance(raw, bool) or not isinstance(raw, (int, float)) or not math.isfinite(raw):
        raise ConfigError("must be a finite number", name)
    return float(raw)


def config_from_dict(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a JSON object")
    unknown = sorted(set(doc) - _KNOWN_KEYS)
    if unknown:
        raise ConfigError("unknown key", unknown[0])
    for key in ("model", "deltas", "bandwidths", "ns", "L"):
        if key not in doc:
            raise ConfigError("required key missing", key)

    m = doc["model"]
    if isinstance(m, str):
        m = {"kind": m}
    if not isinstance(m, dict) or "kind" not in m:
        raise ConfigError("must be a model name or an object with 'kind'", "model")
    kind = str(m["kind"]).lower()
    if kind not in DEFAULT_PARAMS:
        raise ConfigError(f"unknown model {kind!r}; expected 'cir' or 'ou'", "model.kind")
    defaults = DEFAULT_PARAMS[kind]
    params = tuple(
        _float(m.get(name, dflt), f"model.{name}") for name, dflt in zip(("kappa", "theta", "sigma"), defaults)
    )
    extra = sorted(set(m) - {"kind", "kappa", "theta", "sigma"})
    if extra:
        raise ConfigError("unknown key", f"model.{extra[0]}")
    try:
        model = make_model(kind, *params)
    except ParameterError as exc:
        raise ConfigError(str(exc), "model") from exc

    deltas = _num_list(doc["deltas"], "deltas")
    bandwidths = _num_list(doc["bandwidths"], "bandwidths")
    ns = _num_list(doc["ns"], "ns", kind=int)
    for i, n in enumerate(ns):
        if n < 3:
            raise ConfigError("must be >= 3", f"ns[{i}]")
    L = _int(doc["L"], "L", 1)
    N = _int(doc.get("N", 50), "N", 2)

    rng_raw = doc.get("eval_range", list(DEFAULT_RANGES[kind]))
    if not isinstance(rng_raw, list) or len(rng_raw) != 2:
        raise ConfigError("must be a two-element list [lo, hi]", "eval_range")
    lo, hi = _float(rng_raw[0], "eval_range[0]"), _float(rng_raw[1], "eval_range[1]")
    if not lo < hi:
        raise ConfigError("lo must be below hi", "eval_range")

    kernel = str(doc.get("kernel", "epanechnikov")).lower()
    if kernel not in KERNEL_KINDS:
        raise ConfigError(f"unknown kernel {kernel!r}", "kernel")
    fine_factor = _int(doc.get("fine_factor", 10), "fine_factor", 1)
    fine_step = doc.get("fine_step")
    if fine_step is not None:
        fine_step = _float(fine_step, "fine_step")
        if not fine_step > 0:
            raise ConfigError("must be positive", "fine_step")
        for d in deltas:
            try:
                fine_factor_for(d, fine_step=fine_step)
            except IntDiffError as exc:
                raise ConfigError(str(exc), "fine_step") from exc
    master_seed = _int(doc.get("master_seed", 0), "master_seed", 0)
    if master_seed >= 2**64:
        raise ConfigError("must fit in 64 bits", "master_seed")
    burn_in = _float(doc.get("burn_in_time", 10.0 / model.params["kappa"]), "burn_in_time")
    if burn_in < 0:
        raise ConfigError("must be nonnegative", "burn_in_time")
    x0 = doc.get("x0")
    if x0 is not None:
        x0 = _float(x0, "x0")
        if not model.in_domain(x0):
            raise ConfigError("outside the model domain", "x0")

    est = doc.get("estimators", ["sigma2_direct", "sigma2_integrated"])
    if not isinstance(est, list) or not est:
        raise ConfigError("must be a nonempty list of estimator tags", "estimators")
    for i, tag in enumerate(est):
        if tag not in ESTIMATOR_TAGS:
            raise ConfigError(f"unknown estimator {tag!r}", f"estimators[{i}]")
    estimators = tuple(t for t in ESTIMATOR_TAGS if t in est)

    rp = doc.get("rate_params", {})
    if not isinstance(rp, dict):
        raise ConfigError("must be an object", "rate_params")
    try:
        rate_params = RateParams(**{k: _float(v, f"rate_params.{k}") for k, v in rp.items()})
    except TypeError as exc:
        raise ConfigError(str(exc), "rate_params") from exc
    except ParameterError as exc:
        raise ConfigError(str(exc), "rate_params") from exc

    trapezoid = doc.get("trapezoid", False)
    if not isinstance(trapezoid, bool):
        raise ConfigError("must be true or false", "trapezoid")
    out = doc.get("output_dir", "results")
    if not isinstance(out, str):
        raise ConfigError("must be a string", "output_dir")

    return ExperimentConfig(
        model=kind,
        model_params=params,
        deltas=deltas,
        bandwidths=bandwidths,
        ns=ns,
        L=L,
        N=N,
        eval_range=(lo, hi),
        kernel=kernel,
        fine_factor=fine_factor,
        fine_step=fine_step,
        master_seed=master_seed,
        burn_in_time=burn_in,
        x0=x0,
        estimators=estimators,
        output_dir=out,
        trapezoid=trapezoid,
        rate_params=rate_params,
    )


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a JSON experiment description, applying defaults.

    Raises
    ------
    ConfigError
        On malformed JSON (with line and column) or on any invalid field.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return config_from_dict(doc)


def fmt(v) -> str:
    """Round-trip-exact float text (17 significant digits)."""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    return format(v, ".17g")


def cell_name(delta: float, h: float, n: int) -> str:
    return f"d{float(delta)!r}_h{float(h)!r}_n{int(n)}"


def block_name(delta: float, h: float) -> str:
    return f"d{float(delta)!r}_h{float(h)!r}"


@dataclass
class CellResult:
    delta: float
    h: float
    n: int
    eval_points: np.ndarray
    seeds: list[int]
    reports: dict[str, MaaeReport]
    mean_curves: dict[str, np.ndarray]
    rate_thm: dict[str, float]
    rate_remark2: float

    @property
    def name(self):
        return cell_name(self.delta, self.h, self.n)


def _truth_for(model: SdeModel, tag: str):
    return model.sigma2_true if tag.startswith("sigma2") else model.drift


def run_cell(cfg: ExperimentConfig, delta: float, h: float, n: int, threads: int | None = None) -> CellResult:
    """Simulate and estimate one (delta, h, n) cell."""
    model = cfg.build_model()
    kernel = make_kernel(cfg.kernel)
    pts = eval_grid(cfg.eval_range[0], cfg.eval_range[1], cfg.N)
    name = cell_name(delta, h, n)
    seeds = [hash64(cfg.master_seed, cfg.model, float(delta), float(h), int(n), r) for r in range(cfg.L)]

    def one(rep):
        seed = seeds[rep]
        try:
            obs = simulate_observations(
                model,
                delta,
                n,
                seed,
                x0=cfg.x0,
                fine_factor=cfg.fine_factor,
                fine_step=cfg.fine_step,
                burn_in=cfg.burn_in_time,
                with_x=True,
                trapezoid=cfg.trapezoid,
            )
            breve = compute_breve(obs)
            return {tag: estimate(tag, obs, kernel, h, pts, breve=breve) for tag in cfg.estimators}
        except IntDiffError as exc:
            raise ExperimentError(name, rep, seed, exc) from exc

    workers = threads if threads else (os.cpu_count() or 1)
    if workers > 1 and cfg.L > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_rep = list(pool.map(one, range(cfg.L)))
    else:
        per_rep = [one(r) for r in range(cfg.L)]

    reports, means, rates = {}, {}, {}
    for tag in cfg.estimators:
        curves = [r[tag] for r in per_rep]
        try:
            reports[tag] = maae(curves, _truth_for(model, tag), n=n, delta=delta, estimator_tag=tag)
        except InvalidEstimateError as exc:
            raise ExperimentError(name, exc.replication, seeds[exc.replication], exc) from exc
        stacked = np.stack([c.values for c in curves])
        means[tag] = np.array([math.fsum(col) / cfg.L for col in stacked.T.tolist()])
        if tag.startswith("sigma2"):
            rates[tag] = rate_diffusion(delta, h, n, cfg.rate_params)
        else:
            try:
                rates[tag] = rate_drift(delta, h, n * delta, cfg.rate_params)
            except ParameterError:
                rates[tag] = math.nan
    return CellResult(delta, h, n, pts, seeds, reports, means, rates, rate_remark2(n))


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _family(cfg: ExperimentConfig) -> str:
    return "sigma2" if any(t.startswith("sigma2") for t in cfg.estimators) else "drift"


def write_cell_files(cfg: ExperimentConfig, cell: CellResult, out: Path) -> None:
    model = cfg.build_model()
    fam = _family(cfg)
    truth = np.asarray(_truth_for(model, fam)(cell.eval_points), dtype=float) * np.ones_like(cell.eval_points)
    nan = np.full(len(cell.eval_points), math.nan)
    direct = cell.mean_curves.get(f"{fam}_direct", nan)
    integ = cell.mean_curves.get(f"{fam}_integrated", nan)
    with open(out / f"curves_{cell.name}.csv", "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(CURVES_HEADER)
        for row in zip(cell.eval_points, truth, direct, integ):
            w.writerow([fmt(v) for v in row])
    tags = list(cfg.estimators)
    with open(out / f"replications_{cell.name}.csv", "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["replication", "seed"] + tags)
        for r, seed in enumerate(cell.seeds):
            w.writerow([str(r), str(seed)] + [fmt(cell.reports[t].per_replication_max_err[r]) for t in tags])


def write_summary_files(cfg: ExperimentConfig, cells: list[CellResult], out: Path) -> None:
    with open(out / "maae.csv", "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(MAAE_HEADER)
        for c in cells:
            for tag in cfg.estimators:
                w.writerow([
                    cfg.model, tag, fmt(c.delta), fmt(c.h), str(c.n), str(cfg.L),
                    fmt(c.reports[tag].maae), fmt(c.rate_thm[tag]), fmt(c.rate_remark2),
                ])

    fam = _family(cfg)
    blocks: dict[tuple[float, float], list[CellResult]] = {}
    for c in cells:
        blocks.setdefault((c.delta, c.h), []).append(c)
    with open(out / "rates.csv", "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(RATES_HEADER)
        for (d, h), group in blocks.items():
            group = sorted(group, key=lambda c: c.n)
            direct = [c.reports[f"{fam}_direct"].maae if f"{fam}_direct" in c.reports else math.nan for c in group]
            integ = [c.reports[f"{fam}_integrated"].maae if f"{fam}_integrated" in c.reports else math.nan for c in group]
            rates = [c.rate_remark2 for c in group]
            fit_y = direct if not any(math.isnan(v) for v in direct) else integ
            try:
                slope, intercept, corr = rate_fit(fit_y, rates)
            except ParameterError:
                slope = intercept = corr = math.nan
            for c, md, mi in zip(group, direct, integ):
                w.writerow([fmt(d), fmt(h), str(c.n), fmt(c.rate_remark2), fmt(md), fmt(mi),
                            fmt(slope), fmt(intercept), fmt(corr)])


def run_experiment(cfg: ExperimentConfig, threads: int | None = None, output_dir=None) -> list[CellResult]:
    """Run every cell and write ``maae.csv``, ``rates.csv`` and per-cell CSVs.

    Cell files are written as soon as each cell finishes; the summary files
    are written once at the end.
    """
    out = Path(output_dir if output_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells = []
    for delta, h, n in cfg.cells():
        log.info("cell %s", cell_name(delta, h, n))
        cell = run_cell(cfg, delta, h, n, threads=threads)
        write_cell_files(cfg, cell, out)
        cells.append(cell)
    write_summary_files(cfg, cells, out)
    return cells


def _read_csv(path: Path):
    if not path.is_file():
        raise ArtifactError(f"expected file {path} is missing")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return rows


def emit_plots(output_dir) -> list[Path]:
    """One SVG per cell (mean curves vs truth) and one per (delta, h) block (MAAE vs rate)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(output_dir)
    if not out.is_dir():
        raise ArtifactError(f"output directory {out} does not exist")
    rates_rows = _read_csv(out / "rates.csv")
    if not rates_rows:
        raise ArtifactError(f"{out / 'rates.csv'} holds no rows")
    plt.rcParams["svg.hashsalt"] = "intdiff"
    meta = {"Date": None}
    written = []

    blocks: dict[tuple[str, str], list[dict]] = {}
    for row in rates_rows:
        blocks.setdefault((row["delta"], row["h"]), []).append(row)
        name = cell_name(float(row["delta"]), float(row["h"]), int(row["n"]))
        curves = _read_csv(out / f"curves_{name}.csv")
        x = [float(r["x"]) for r in curves]
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.plot(x, [float(r["truth"]) for r in curves], "k-", label="true")
        ax.plot(x, [float(r["mean_direct"]) for r in curves], "--", label=f"n = {row['n']}, 1")
        ax.plot(x, [float(r["mean_integrated"]) for r in curves], "-", label=f"n = {row['n']}, 2")
        ax.set_xlabel("x")
        ax.set_title(f"delta = {float(row['delta']):g}, h = {float(row['h']):g}, n = {row['n']}")
        ax.legend()
        path = out / f"curves_{name}.svg"
        fig.savefig(path, format="svg", metadata=meta)
        plt.close(fig)
        written.append(path)

    for (d, h), rows in blocks.items():
        rows = sorted(rows, key=lambda r: int(r["n"]))
        rate = [float(r["rate_remark2"]) for r in rows]
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.plot(rate, [float(r["maae_direct"]) for r in rows], "o--", label="direct")
        ax.plot(rate, [float(r["maae_integrated"]) for r in rows], "s-", label="integrated")
        slope, intercept = float(rows[0]["slope"]), float(rows[0]["intercept"])
        if math.isfinite(slope):
            grid = np.linspace(min(rate), max(rate), 2)
            ax.plot(grid, slope * grid + intercept, ":", color="grey", label="least squares")
        ax.set_xlabel("((log n)^3 / n)^(2/5)")
        ax.set_ylabel("MAAE")
        ax.set_title(f"delta = {float(d):g}, h = {float(h):g}")
        ax.legend()
        path = out / f"rate_{block_name(float(d), float(h))}.svg"
        fig.savefig(path, format="svg", metadata=meta)
        plt.close(fig)
        written.append(path)
    return written
