"""Command line entry points: serve the API, run or generate evaluations."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .config import load_config
from .evaluation import (
    CorpusError,
    EvalMode,
    bundled_snippet_dir,
    gen_corpus,
    render_rate,
    run_eval,
    write_report,
)


@click.group()
def main():
    """Speech-to-code-question gateway tools."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON config file.")
@click.option("--listen", default=None, metavar="ADDR:PORT")
@click.option("--workers", type=int, default=None)
@click.option("--mock-all", is_flag=True, help="Bind every provider to the mock backend.")
@click.option("--log-dir", type=click.Path(file_okay=False), default=None,
              help="Directory for blobs and the request log.")
def serve(config_path, listen, workers, mock_all, log_dir):
    """Start the HTTP service."""
    import uvicorn

    from .service import create_app

    cfg = load_config(config_path, mock_all=mock_all)
    if listen:
        cfg.listen = listen
    if workers is not None:
        if workers < 1:
            raise click.BadParameter("workers must be positive", param_hint="--workers")
        cfg.workers = workers
    if log_dir:
        cfg.data_dir = Path(log_dir)
    host, _, port = cfg.listen.rpartition(":")
    if not host or not port.isdigit():
        raise click.BadParameter(f"expected ADDR:PORT, got {cfg.listen!r}",
                                 param_hint="--listen")
    app = create_app(cfg)
    uvicorn.run(app, host=host, port=int(port), log_level="info")


@main.group(name="eval")
def eval_group():
    """Evaluate transcript refinement against a corpus."""


@eval_group.command(name="run")
@click.option("--corpus", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--mode", type=click.Choice(["refine", "full"]), default="refine",
              show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True,
              help="Report directory; figures land next to the tables.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None)
def eval_run(corpus, mode, out, config_path):
    """Score a corpus and write report.json, report.txt, per_case.csv, PNGs."""
    from .figures import write_figures

    cfg = load_config(config_path, mock_all=True)
    try:
        report = run_eval(
            corpus,
            mode=EvalMode(mode),
            cfg=cfg.refinement,
            symbols=cfg.load_symbols(),
            confusions=cfg.load_confusions(),
        )
    except CorpusError as exc:
        click.echo(f"corpus error: {exc}", err=True)
        sys.exit(2)
    paths = write_report(report, out)
    figures = write_figures(report, out)
    click.echo(f"cases              {report.n_cases}")
    click.echo(f"exact_match_rate   {render_rate(report.exact_match_rate)}")
    click.echo(f"term_recovery_rate {render_rate(report.term_recovery_rate)}")
    click.echo(f"mean_wer_after     {report.mean_wer_after:.6f}")
    for p in list(paths.values()) + figures:
        click.echo(f"wrote {p}")


@eval_group.command(name="gen")
@click.option("--seed", type=int, required=True)
@click.option("--n", type=int, required=True)
@click.option("--code-dir", type=click.Path(exists=True, file_okay=False), default=None,
              help="Snippet directory; defaults to the bundled samples.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def eval_gen(seed, n, code_dir, out):
    """Generate a corruption corpus whose repairs are machine-checked."""
    if n < 1:
        raise click.BadParameter("need at least one case", param_hint="--n")
    src = Path(code_dir) if code_dir else bundled_snippet_dir()
    try:
        path = gen_corpus(seed, n, code_dir=src, out_path=out)
    except CorpusError as exc:
        click.echo(f"corpus error: {exc}", err=True)
        sys.exit(2)
    click.echo(f"wrote {path} ({n} cases)")


if __name__ == "__main__":
    main()
