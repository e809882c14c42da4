"""
bethe-flow command line.

    python app.py run models/diamond.json --oracle
    python app.py check models/triangle_loop.json --seed 7
    python app.py energy models/diamond.json --beliefs report.json

JSON goes to stdout, logs to stderr. Exit codes: 0 success, 1 input error,
2 non-convergence, numerical failure or failed invariants.
"""
import logging
import sys

import click

from bethe_flow import settings
from bethe_flow.errors import BetheFlowError, TooLarge
from bethe_flow.flow_runner import FlowRunner
from bethe_flow.models import load_model
from bethe_flow.reports import dumps, load_beliefs, write_trace_csv

logger = logging.getLogger('bethe_flow.app')

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_FAILED = 2


def _fail(message: str, code: int = EXIT_INPUT):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _runner(model_path: str) -> FlowRunner:
    try:
        return FlowRunner(load_model(model_path))
    except BetheFlowError as e:
        _fail(str(e))


@click.group(name='bethe-flow')
@click.option('-v', '--verbose', count=True, help='-v for info, -vv for debug logging.')
def cli(verbose: int):
    """Belief propagation as a transport equation on region lattices."""
    level = {0: settings.LOG_LEVEL, 1: 'INFO'}.get(verbose, 'DEBUG')
    logging.basicConfig(stream=sys.stderr, level=level, force=True,
                        format='%(levelname)s %(name)s: %(message)s')


@cli.command()
@click.argument('model_path', type=click.Path(dir_okay=False))
@click.option('--tau', type=float, default=None, help='Euler step size (1 is classical BP).')
@click.option('--steps', 'max_steps', type=int, default=None, help='Maximum number of steps.')
@click.option('--tol', 'tolerance', type=float, default=None, help='Convergence tolerance on the update.')
@click.option('--normalize/--no-normalize', default=None, help='Recentre tensors to mean zero each step.')
@click.option('--form', type=click.Choice(['potential', 'message']), default=None)
@click.option('--schedule', type=click.Choice(['synchronous', 'sequential']), default=None)
@click.option('--trace', 'trace_path', type=click.Path(dir_okay=False, writable=True), default=None,
              help='Write the per-step trace as CSV.')
@click.option('--oracle', is_flag=True, help='Compare against brute-force exact marginals.')
def run(model_path, tau, max_steps, tolerance, normalize, form, schedule, trace_path, oracle):
    """Run the flow on a model and print a RunReport."""
    runner = _runner(model_path)
    try:
        config = runner.model.flow_config(tau=tau, max_steps=max_steps, tolerance=tolerance,
                                          normalize=normalize, form=form, schedule=schedule)
    except BetheFlowError as e:
        _fail(str(e))
    report, trace = runner.run(config, oracle=oracle)
    if trace_path:
        with open(trace_path, 'w', newline='') as f:
            rows = write_trace_csv(trace, f)
        logger.info(f"Wrote {rows} trace rows to {trace_path}")
    click.echo(report.to_json())
    if report.failed or not report.converged:
        sys.exit(EXIT_FAILED)


@cli.command()
@click.argument('model_path', type=click.Path(dir_okay=False))
@click.option('--seed', type=int, default=None, help='Seed for the random fields.')
@click.option('--trials', type=click.IntRange(min=1), default=10, help='Random draws per invariant.')
def check(model_path, seed, trials):
    """Run the invariant battery on the model's lattice."""
    runner = _runner(model_path)
    report = runner.check(settings.DEFAULT_SEED if seed is None else seed, trials)
    click.echo(report.to_json())
    if not report.passed:
        sys.exit(EXIT_FAILED)


@cli.command()
@click.argument('model_path', type=click.Path(dir_okay=False))
@click.option('--beliefs', 'beliefs_path', type=click.Path(dir_okay=False), default=None,
              help='Beliefs file or run report; defaults to the exact marginals.')
def energy(model_path, beliefs_path):
    """Bethe free energy and per-region summands."""
    runner = _runner(model_path)
    try:
        p = load_beliefs(beliefs_path, runner.lattice) if beliefs_path else None
        report = runner.energy(p)
    except TooLarge as e:
        _fail(f"{e}; pass --beliefs")
    except BetheFlowError as e:
        _fail(str(e))
    click.echo(dumps(report.to_dict()))


if __name__ == '__main__':
    cli()
