"""Command-line front door.

Subcommands: analyze, test, select, sim-twovar, sim-prior, xcrit, serve.
Every number printed is reproducible from the library with the same flags
and seed. Machine-readable output (json/tsv) is byte-stable. All flags can
be set through BFMA_-prefixed environment variables (BFMA_MU, ...).

Exit codes: 2 for usage errors (bad flags), 1 for data errors.
"""

from __future__ import annotations

import json
import sys

import click
import numpy as np

from . import __version__
from .ctp import (
    InadmissibleGroupError,
    UnknownVariablesError,
    build_grouping,
    test_group,
    xcrit_threshold,
)
from .dataio import AnalysisConfig, ParseError, build_session_from_csv
from .inference import coefficient_estimates, fwer_threshold
from .linmodel import RankDeficientError, TooManyVariablesError
from .simlab import (
    PriorSimConfig,
    TwoVarConfig,
    evalue_bound,
    sim_prior_bfwer,
    sim_two_variable,
)

DATA_ERRORS = (
    ParseError,
    TooManyVariablesError,
    RankDeficientError,
    UnknownVariablesError,
    InadmissibleGroupError,
    OSError,
    ValueError,
    KeyError,
)


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _config_from(ctx_params) -> AnalysisConfig:
    sigma2 = None
    variance = ctx_params["variance"]
    if variance != "profile":
        try:
            sigma2 = float(variance.removeprefix("known:"))
        except ValueError:
            raise click.UsageError("--variance takes 'profile' or 'known:<sigma2>'")
    return AnalysisConfig(
        mu=ctx_params["mu"],
        h=ctx_params["h"],
        tau=ctx_params["tau"],
        alpha=ctx_params["alpha"],
        rho=ctx_params["rho"],
        outcome=ctx_params["outcome"],
        intercept=ctx_params["intercept"],
        sigma2=sigma2,
        sub_analysis_nu=ctx_params["sub_analysis_nu"],
    )


def _session_from_path(path: str, config: AnalysisConfig):
    with open(path, encoding="utf-8") as fh:
        return build_session_from_csv(fh.read(), config)


def analysis_options(f):
    """Shared statistical flags; each maps to a BFMA_<NAME> env variable."""
    for opt in reversed(
        [
            click.option("--mu", type=float, default=0.1, show_default=True,
                         envvar="BFMA_MU",
                         help="prior odds that a variable is included"),
            click.option("--h", type=float, default=1.0, show_default=True,
                         envvar="BFMA_H", help="prior precision"),
            click.option("--tau", type=float, default=9.0, show_default=True,
                         envvar="BFMA_TAU",
                         help="posterior-odds rejection threshold"),
            click.option("--alpha", type=float, default=0.025, show_default=True,
                         envvar="BFMA_ALPHA",
                         help="familywise level for adjusted-p rejection"),
            click.option("--rho", type=float, default=0.8, show_default=True,
                         envvar="BFMA_RHO",
                         help="correlation threshold for indivisible groups"),
            click.option("--outcome", type=str, default=None, envvar="BFMA_OUTCOME",
                         help="outcome column name (default: first column)"),
            click.option("--intercept/--no-intercept", default=False, show_default=True,
                         envvar="BFMA_INTERCEPT",
                         help="include an intercept nuisance column"),
            click.option("--variance", type=str, default="profile", show_default=True,
                         envvar="BFMA_VARIANCE",
                         help="'profile' or 'known:<sigma2>'"),
            click.option("--sub-analysis-nu", type=int, default=None,
                         envvar="BFMA_SUB_ANALYSIS_NU",
                         help="declared total variable count when analyzing a subset"),
            click.option("--format", "fmt", type=click.Choice(["table", "json", "tsv"]),
                         default="table", show_default=True, envvar="BFMA_FORMAT"),
        ]
    ):
        f = opt(f)
    return f


@click.group(context_settings={"auto_envvar_prefix": "BFMA"})
@click.version_option(__version__)
def main() -> None:
    """Model-averaged Bayesian-frequentist testing for linear regression."""


def _emit_rows(rows: list[dict], fmt: str, order: list[str]) -> None:
    if fmt == "json":
        click.echo(json.dumps(rows, indent=2, sort_keys=True))
        return
    if fmt == "tsv":
        click.echo("\t".join(order))
        for row in rows:
            click.echo("\t".join(_cell(row.get(k)) for k in order))
        return
    widths = {k: max(len(k), *(len(_cell(r.get(k))) for r in rows)) for k in order}
    click.echo("  ".join(k.ljust(widths[k]) for k in order))
    for row in rows:
        click.echo("  ".join(_cell(row.get(k)).ljust(widths[k]) for k in order))


def _cell(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return format(v, ".6g")
    return str(v)


@main.command()
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@analysis_options
def analyze(csv_path, fmt, **params):
    """Scan all models and report per-variable and grand-null tests."""
    config = _config_from(params)
    try:
        session = _session_from_path(csv_path, config)
        reports = [
            test_group(session, [j], rho=1.0, alpha=config.alpha)
            for j in range(session.nu)
        ]
        grand = test_group(session, list(range(session.nu)), rho=1.0, alpha=config.alpha)
        ests = {e.variable: e for e in coefficient_estimates(session.scan, session.hyper)}
    except DATA_ERRORS as exc:
        _fail(str(exc))

    rows = []
    for rep in sorted(reports, key=lambda r: -r.log_po):
        est = ests[rep.tested[0]]
        rows.append(
            {
                "variable": rep.tested_names[0],
                "po": rep.po,
                "p_unadj": rep.p_unadj,
                "p_adj": rep.p_adj,
                "p_adj_raw": rep.p_adj_raw,
                "post_mean": est.bayes_mean,
                "post_sd": est.bayes_se,
                "incl_prob": est.inclusion_prob,
            }
        )
    rows.append(
        {
            "variable": "<grand null>",
            "po": grand.po,
            "p_unadj": grand.p_unadj,
            "p_adj": grand.p_adj,
            "p_adj_raw": grand.p_adj_raw,
        }
    )
    order = ["variable", "po", "p_unadj", "p_adj", "p_adj_raw",
             "post_mean", "post_sd", "incl_prob"]
    _emit_rows(rows, fmt, order)
    if fmt == "table":
        blocks = build_grouping(session.corr, config.rho).blocks
        merged = [b for b in blocks if len(b) > 1]
        if merged:
            shown = "; ".join(
                "{" + ", ".join(session.names[j] for j in b) + "}" for b in merged
            )
            click.echo(f"indivisible groups at rho={config.rho}: {shown}")
        bound = fwer_threshold(session.hyper, session.declared_nu)
        click.echo(
            f"tau={config.tau} controls FDR <= {1/(1+config.tau):.4g} "
            f"and asymptotic FWER <= {bound:.4g} over nu={session.declared_nu}"
        )


@main.command()
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--group", "group_", multiple=True, required=True,
              help="variable name to include in the tested group (repeatable)")
@click.option("--force", is_flag=True, default=False,
              help="test a group even if it splits an indivisible block")
@analysis_options
def test(csv_path, group_, force, fmt, **params):
    """Test that every coefficient in a named group is zero."""
    config = _config_from(params)
    try:
        session = _session_from_path(csv_path, config)
        report = test_group(
            session,
            list(group_),
            rho=config.rho,
            alpha=config.alpha,
            allow_inadmissible=force,
        )
    except DATA_ERRORS as exc:
        _fail(str(exc))
    row = {
        "group": "+".join(report.tested_names),
        "po": report.po,
        "p_unadj": report.p_unadj,
        "p_adj": report.p_adj,
        "p_adj_raw": report.p_adj_raw,
        "fdr_bound": report.fdr_bound,
        "rejected_bayes": report.rejected_bayes,
        "rejected_fwer": report.rejected_fwer,
        "mode": report.mode,
        "declared_nu": report.declared_nu,
    }
    _emit_rows([row], fmt, list(row.keys()))


@main.command()
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--max-vars", type=int, required=True)
@click.option("--rho-cap", type=float, default=0.8, show_default=True)
@analysis_options
def select(csv_path, max_vars, rho_cap, fmt, **params):
    """Rank variables by single-variable p-value and admit a subset."""
    config = _config_from(params)
    try:
        with open(csv_path, encoding="utf-8") as fh:
            from .dataio import read_dataset_csv
            data = read_dataset_csv(fh.read(), config)
        from .ctp import select_subset
        chosen = select_subset(data, max_vars=max_vars, rho_cap=rho_cap)
    except DATA_ERRORS as exc:
        _fail(str(exc))
    rows = [{"rank": i + 1, "variable": data.names[j], "column": j}
            for i, j in enumerate(chosen)]
    _emit_rows(rows, fmt, ["rank", "variable", "column"])


@main.command("sim-twovar")
@click.option("--n", type=int, default=145, show_default=True)
@click.option("--mu", type=float, default=0.1, show_default=True)
@click.option("--h", type=float, default=1.0, show_default=True)
@click.option("--tau", type=float, default=9.0, show_default=True)
@click.option("--rho", type=float, default=0.0, show_default=True)
@click.option("--sigma", type=float, default=1.0, show_default=True)
@click.option("--beta2", type=float, multiple=True, default=(0.0,), show_default=True)
@click.option("--target", type=click.Choice(["test_beta1", "grand_null"]),
              default="test_beta1", show_default=True)
@click.option("--replicates", type=int, default=100_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["table", "json", "tsv"]),
              default="tsv", show_default=True)
def sim_twovar(n, mu, h, tau, rho, sigma, beta2, target, replicates, seed, fmt):
    """Score-space two-variable false-positive-rate grid."""
    cfg = TwoVarConfig(n=n, mu=mu, h=h, tau=tau, rho=rho, sigma=sigma,
                       beta2_grid=tuple(beta2), replicates=replicates, seed=seed)
    report = sim_two_variable(cfg, target)
    rows = [
        {
            "n": pt.params["n"],
            "rho": pt.params["rho"],
            "beta2": pt.params["beta2"],
            "fpr": pt.estimate,
            "se": pt.se,
            "asymptotic": pt.reference,
        }
        for pt in report.points
    ]
    _emit_rows(rows, fmt, ["n", "rho", "beta2", "fpr", "se", "asymptotic"])


@main.command("sim-prior")
@click.option("--nu", type=int, default=15, show_default=True)
@click.option("--n", type=int, default=145, show_default=True)
@click.option("--mu", type=float, default=0.1, show_default=True)
@click.option("--h", type=float, default=1.0, show_default=True)
@click.option("--tau", type=float, default=9.0, show_default=True)
@click.option("--rho-level", "rho_levels", type=float, multiple=True,
              default=(1.0, 0.5, 0.0), show_default=True)
@click.option("--base-corr", type=float, default=0.25, show_default=True,
              help="off-diagonal correlation of the synthetic design")
@click.option("--replicates", type=int, default=2000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["table", "json", "tsv"]),
              default="tsv", show_default=True)
def sim_prior(nu, n, mu, h, tau, rho_levels, base_corr, replicates, seed, fmt):
    """Prior-matched familywise error simulation over grouping levels."""
    corr = np.full((nu, nu), base_corr)
    np.fill_diagonal(corr, 1.0)
    cfg = PriorSimConfig(nu=nu, mu=mu, h=h, tau=tau, n=n, corr=corr,
                         rho_levels=tuple(rho_levels), replicates=replicates,
                         seed=seed)
    report = sim_prior_bfwer(cfg)
    rows = [
        {
            "metric": pt.metric,
            "rho": pt.params["rho"],
            "estimate": pt.estimate,
            "se": pt.se,
            "asymptotic": pt.reference,
            "evalue_bound": evalue_bound(mu, nu, tau),
        }
        for pt in report.points
    ]
    _emit_rows(rows, fmt, ["metric", "rho", "estimate", "se", "asymptotic", "evalue_bound"])


@main.command()
def xcrit():
    """Solve the critical odds scale of the 0.025 reporting rule."""
    res = xcrit_threshold()
    click.echo(f"x_crit = {res.x_crit:.5f}")
    click.echo(f"tail probability = {res.tail_prob:.7f}")


@main.command()
@click.option("--store", type=click.Path(file_okay=False), default="./sessions",
              show_default=True, envvar="BFMA_STORE",
              help="directory for persisted sessions")
@click.option("--host", type=str, default="127.0.0.1", show_default=True,
              envvar="BFMA_HOST")
@click.option("--port", type=int, default=8710, show_default=True,
              envvar="BFMA_PORT")
@click.option("--ui", type=click.Path(exists=True, file_okay=False), default=None,
              envvar="BFMA_UI",
              help="directory of the built browser explorer to serve at /")
def serve(store, host, port, ui):
    """Run the local HTTP session service (optionally with the explorer UI)."""
    import uvicorn

    from .service import SessionStore, create_app

    app = create_app(SessionStore(store), ui_dir=ui)
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":   # pragma: no cover
    main()
