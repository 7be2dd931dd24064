"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 numeric or divergence error,
4 I/O error.
"""

from __future__ import annotations

import csv
import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from . import _backend
from .analysis import (
    RateParams,
    beta_bound_diffusion,
    beta_bound_drift,
    eval_grid,
    moment_check_diffusion,
    moment_check_drift,
    rate_diffusion_terms,
    rate_drift_terms,
    rate_remark2,
)
from .errors import (
    ConditionNotApplicableError,
    ConfigError,
    DivergenceError,
    IntDiffError,
    InvalidEstimateError,
    ParameterError,
)
from .estimators import ESTIMATOR_TAGS, compute_breve, estimate
from .experiment import DEFAULT_PARAMS, ExperimentError, emit_plots, fmt, parse_config, run_experiment
from .kernels import KERNEL_KINDS
from .sde import ObservationSet, make_model, simulate_observations

EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 2, 3, 4


def _model_options(f):
    f = click.option("--sigma", type=float, default=None, help="Diffusion scale (default: model preset).")(f)
    f = click.option("--theta", type=float, default=None, help="Long-run mean (default: model preset).")(f)
    f = click.option("--kappa", type=float, default=None, help="Mean-reversion speed (default: model preset).")(f)
    f = click.option("--model", type=click.Choice(["cir", "ou"]), default="cir", show_default=True)(f)
    return f


def _build_model(model, kappa, theta, sigma):
    dk, dt, ds = DEFAULT_PARAMS[model]
    return make_model(
        model,
        dk if kappa is None else kappa,
        dt if theta is None else theta,
        ds if sigma is None else sigma,
    )


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def cli(verbose):
    """Integrated diffusion simulation and Nadaraya-Watson estimation."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")


@cli.command()
@_model_options
@click.option("--delta", type=float, required=True, help="Observation spacing.")
@click.option("--n", "n", type=int, required=True, help="Number of observation intervals.")
@click.option("--fine-factor", type=int, default=10, show_default=True)
@click.option("--fine-step", type=float, default=None, help="Absolute fine step; overrides --fine-factor.")
@click.option("--burn-in", type=float, default=None, help="Discarded time (default 10/kappa).")
@click.option("--x0", type=float, default=None, help="Initial state (default theta).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("-o", "--out", type=click.Path(dir_okay=False), required=True)
def simulate(model, kappa, theta, sigma, delta, n, fine_factor, fine_step, burn_in, x0, seed, out):
    """Simulate one path and write its observations (t, y, x) as CSV."""
    m = _build_model(model, kappa, theta, sigma)
    burn = 10.0 / m.params["kappa"] if burn_in is None else burn_in
    obs = simulate_observations(
        m, delta, n, seed, x0=x0, fine_factor=fine_factor, fine_step=fine_step, burn_in=burn
    )
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "y", "x"])
        for i in range(obs.n + 1):
            w.writerow([fmt(i * delta), fmt(obs.y_obs[i]), fmt(obs.x_obs[i])])


def _load_observations(path, delta):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "y" not in rows[0]:
        raise ConfigError(f"{path} needs a 'y' column")
    y = np.array([float(r["y"]) for r in rows])
    x = np.array([float(r["x"]) for r in rows]) if "x" in rows[0] and rows[0]["x"] not in ("", None) else None
    if delta is None:
        if "t" not in rows[0] or len(rows) < 2:
            raise ConfigError("pass --delta or provide a 't' column")
        delta = float(rows[1]["t"]) - float(rows[0]["t"])
    n = len(y) - 1
    return ObservationSet(delta, y, x, n, n * delta)


@cli.command(name="estimate")
@click.option("-i", "--input", "input_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--delta", type=float, default=None, help="Spacing (default: from the t column).")
@click.option("--estimator", "tags", type=click.Choice(ESTIMATOR_TAGS), multiple=True,
              default=("sigma2_direct", "sigma2_integrated"), show_default=True)
@click.option("--h", "h", type=float, required=True, help="Bandwidth.")
@click.option("--kernel", type=click.Choice(KERNEL_KINDS), default="epanechnikov", show_default=True)
@click.option("--range", "xrange", type=float, nargs=2, required=True, help="Evaluation range LO HI.")
@click.option("--points", type=int, default=50, show_default=True)
@click.option("-o", "--out", type=click.Path(dir_okay=False), required=True)
def estimate_cmd(input_path, delta, tags, h, kernel, xrange, points, out):
    """Estimate curves from an observation CSV (columns t, y and optionally x)."""
    obs = _load_observations(input_path, delta)
    pts = eval_grid(xrange[0], xrange[1], points)
    breve = compute_breve(obs)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["estimator", "x", "value", "denominator"])
        for tag in tags:
            c = estimate(tag, obs, kernel, h, pts, breve=breve)
            for x, v, d in zip(c.eval_points, c.values, c.denominators):
                w.writerow([tag, fmt(x), fmt(v), fmt(d)])


@cli.command()
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--threads", type=int, default=None, help="Worker threads (default: all cores).")
@click.option("-o", "--output-dir", type=click.Path(file_okay=False), default=None,
              help="Override the config's output_dir.")
@click.option("--plots/--no-plots", default=False, help="Also write SVG figures.")
def experiment(config, threads, output_dir, plots):
    """Run the Monte-Carlo grid described by a JSON CONFIG."""
    text = Path(config).read_text(encoding="utf-8")
    cfg = parse_config(text)
    out = output_dir if output_dir is not None else cfg.output_dir
    cells = run_experiment(cfg, threads=threads, output_dir=out)
    for c in cells:
        parts = " ".join(f"{t}={fmt(r.maae)}" for t, r in c.reports.items())
        click.echo(f"{c.name} {parts}")
    if plots:
        emit_plots(out)


@cli.command(name="moment-check")
@_model_options
@click.option("--x0", type=float, default=None, help="Conditioning point (default theta).")
@click.option("--delta", type=float, required=True)
@click.option("--fine-factor", type=int, default=10, show_default=True)
@click.option("--reps", type=int, default=100_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--factor", type=float, default=2.0 / 3.0, show_default=True,
              help="Multiplier of sigma^2(x0) in the diffusion target.")
def moment_check(model, kappa, theta, sigma, x0, delta, fine_factor, reps, seed, factor):
    """Check the conditional-moment identities of the proxy increments."""
    m = _build_model(model, kappa, theta, sigma)
    x0 = m.params["theta"] if x0 is None else x0
    out = {}
    for name, rep in (
        ("diffusion", moment_check_diffusion(m, x0, delta, fine_factor, reps, seed, factor=factor)),
        ("drift", moment_check_drift(m, x0, delta, fine_factor, reps, seed + 1)),
    ):
        out[name] = {
            "x0": rep.x0,
            "estimate": rep.mc_estimate,
            "stderr": rep.mc_stderr,
            "target": rep.target,
            "tolerance": rep.tolerance(),
            "passes": rep.passes(),
        }
    click.echo(json.dumps(out, indent=2))


@cli.command()
@click.option("--delta", type=float, required=True)
@click.option("--h", "h", type=float, required=True)
@click.option("--n", "n", type=int, required=True)
@click.option("--q", type=float, default=RateParams.q, show_default=True)
@click.option("--theta", type=float, default=RateParams.theta, show_default=True)
@click.option("--kappa-exp", type=float, default=RateParams.kappa_exp, show_default=True)
@click.option("--theta-bar", type=float, default=RateParams.theta_bar, show_default=True)
@click.option("--kappa-bar", type=float, default=RateParams.kappa_bar, show_default=True)
@click.option("--beta", "beta_mix", type=float, default=RateParams.beta_mix, show_default=True)
def rates(delta, h, n, q, theta, kappa_exp, theta_bar, kappa_bar, beta_mix):
    """Evaluate the theoretical rates and mixing-exponent conditions."""
    params = RateParams(q, theta, kappa_exp, theta_bar, kappa_bar, beta_mix)
    out = {"rate_remark2": rate_remark2(n)}
    out["rate_diffusion_terms"] = list(rate_diffusion_terms(delta, h, n, params))
    out["rate_diffusion"] = sum(out["rate_diffusion_terms"])
    t = n * delta
    if t > 1:
        out["rate_drift_terms"] = list(rate_drift_terms(delta, h, t, params))
        out["rate_drift"] = sum(out["rate_drift_terms"])
    else:
        out["rate_drift"] = None
    for key, fn in (("diffusion", beta_bound_diffusion), ("drift", beta_bound_drift)):
        try:
            bound = fn(params)
            out[f"beta_condition_{key}"] = {"bound": bound, "satisfied": beta_mix > bound}
        except ConditionNotApplicableError as exc:
            out[f"beta_condition_{key}"] = {"not_applicable": str(exc)}
    click.echo(json.dumps(out, indent=2))


@cli.command()
@click.argument("output_dir", type=click.Path(file_okay=False))
def plot(output_dir):
    """Write SVG figures from the CSVs of a finished experiment."""
    for p in emit_plots(output_dir):
        click.echo(str(p))


@cli.command()
def backend():
    """Print which numerical backend is active."""
    click.echo(_backend.NAME)


def main(argv=None):
    try:
        cli.main(args=argv, prog_name="intdiff", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return EXIT_CONFIG
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return 1
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        return EXIT_CONFIG
    except (ExperimentError, DivergenceError, InvalidEstimateError, ArithmeticError) as exc:
        click.echo(f"numeric error: {exc}", err=True)
        return EXIT_NUMERIC
    except OSError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        return EXIT_IO
    except (ParameterError, IntDiffError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
