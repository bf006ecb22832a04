#!/usr/bin/env python3
"""Main entry point for capnet"""

from typing import Optional

import typer
from dotenv import load_dotenv
from rich.console import Console
from rich.panel import Panel

from src.errors import CapnetError, ConfigError
from src.reporter import Reporter
from src.run_config import RunConfig
from src.runner import run_command

app = typer.Typer(help="capnet - Sum-rate capacity toolbox for interference networks")
console = Console(stderr=True)

NETWORK = typer.Option(None, "--network", "-n", help="JSON network file")
OUT = typer.Option(None, "--out", help="Write the report here instead of stdout")
FORMAT = typer.Option("json", "--format", help="Report format: json or csv")
QUIET = typer.Option(False, "--quiet", "-q", help="Suppress console output")
RECEIVER_ORDER = typer.Option(None, "--receiver-order", help="Relabel receivers first, e.g. 2,1")
PARAMS = typer.Option(None, "--params", help="Theorem/scheme parameters as a JSON object")
THEOREM = typer.Option(None, "--theorem", help="Theorem id (T2A, T2B, T3, T4, T5, T6, T7, COR2, T8, T9, M2O, ...)")
SCHEME = typer.Option(None, "--scheme", help="SUCCESSIVE, SUCCESSIVE_JOINT or TIN")
GRID = typer.Option(16, "--grid", help="Simplex grid resolution N")
Q_CARD = typer.Option(1, "--q-card", help="Time-sharing cardinality |Q|")
MAX_EVALS = typer.Option(250_000, "--max-evals", help="Grid-size cap")
U_CAP = typer.Option(None, "--u-cap", help="Auxiliary cardinality |U| for the falsifier")
BUDGET = typer.Option(2000, "--budget", help="Falsifier samples per condition")
SEED = typer.Option(0, "--seed", help="Random seed")
JOBS = typer.Option(None, "--jobs", help="Worker threads (default: CAPNET_JOBS or 1)")
TOLERANCE = typer.Option(None, "--tolerance", help="Outer/achievable gap tolerance")


def _execute(command: str, **options) -> None:
    """Build the RunConfig, run it, write the report and map errors to exit codes"""
    try:
        config = RunConfig.from_cli(command, **options)
        if not config.quiet:
            console.print(Panel.fit(f"[bold cyan]capnet[/bold cyan] {command}", border_style="cyan"))
        code, text = run_command(config)
        Reporter(config.out).write(text)
    except ConfigError as e:
        console.print(f"[red]✗ {e}[/red]")
        for detail in e.details:
            console.print(f"  [red]•[/red] {detail}")
        raise typer.Exit(code=e.exit_code)
    except CapnetError as e:
        console.print(f"[red]✗ {type(e).__name__}: {e}[/red]")
        raise typer.Exit(code=e.exit_code)
    except (typer.Exit, KeyboardInterrupt):
        raise
    except Exception as e:
        console.print(f"[red]✗ internal error: {e}[/red]")
        raise typer.Exit(code=4)
    if code:
        raise typer.Exit(code=code)


@app.callback()
def setup():
    """Load .env so CAPNET_JOBS can be set per project"""
    load_dotenv()


@app.command()
def validate(network: str = NETWORK, out: Optional[str] = OUT, quiet: bool = QUIET):
    """
    Validate a network file and report connectivity

    Example:
        python main.py validate --network networks/cic2.json
    """
    _execute("validate", network=network, out=out, quiet=quiet)


@app.command()
def reduce(network: str = NETWORK, params: Optional[str] = PARAMS, receiver_order: Optional[str] = RECEIVER_ORDER,
           out: Optional[str] = OUT, quiet: bool = QUIET):
    """MACCM plan, message reduction (M~, M*) and permutation sets"""
    _execute("reduce", network=network, params=params, receiver_order=receiver_order, out=out, quiet=quiet)


@app.command()
def check(network: str = NETWORK, theorem: Optional[str] = THEOREM, params: Optional[str] = PARAMS,
          seed: int = SEED, budget: int = BUDGET, u_cap: Optional[int] = U_CAP, jobs: Optional[int] = JOBS,
          receiver_order: Optional[str] = RECEIVER_ORDER, out: Optional[str] = OUT, quiet: bool = QUIET):
    """
    Check the less-noisy conditions of a theorem

    Example:
        python main.py check --network networks/cascade.json --theorem T3
    """
    _execute("check", network=network, theorem=theorem, params=params, seed=seed, budget=budget, u_cap=u_cap,
             jobs=jobs, receiver_order=receiver_order, out=out, quiet=quiet)


@app.command()
def bound(network: str = NETWORK, theorem: Optional[str] = THEOREM, params: Optional[str] = PARAMS,
          grid: int = GRID, q_card: int = Q_CARD, max_evals: int = MAX_EVALS, jobs: Optional[int] = JOBS,
          receiver_order: Optional[str] = RECEIVER_ORDER, out: Optional[str] = OUT, fmt: str = FORMAT,
          quiet: bool = QUIET):
    """Build and maximize an outer bound"""
    _execute("bound", network=network, theorem=theorem, params=params, grid=grid, q_card=q_card,
             max_evaluations=max_evals, jobs=jobs, receiver_order=receiver_order, out=out, format=fmt, quiet=quiet)


@app.command()
def achieve(network: str = NETWORK, scheme: Optional[str] = SCHEME, params: Optional[str] = PARAMS,
            grid: int = GRID, q_card: int = Q_CARD, max_evals: int = MAX_EVALS, jobs: Optional[int] = JOBS,
            receiver_order: Optional[str] = RECEIVER_ORDER, out: Optional[str] = OUT, fmt: str = FORMAT,
            quiet: bool = QUIET):
    """Build and maximize an achievable sum-rate"""
    _execute("achieve", network=network, scheme=scheme, params=params, grid=grid, q_card=q_card,
             max_evaluations=max_evals, jobs=jobs, receiver_order=receiver_order, out=out, format=fmt, quiet=quiet)


@app.command()
def capacity(network: str = NETWORK, theorem: Optional[str] = THEOREM, scheme: Optional[str] = SCHEME,
             params: Optional[str] = PARAMS, grid: int = GRID, q_card: int = Q_CARD, max_evals: int = MAX_EVALS,
             u_cap: Optional[int] = U_CAP, budget: int = BUDGET, seed: int = SEED, jobs: Optional[int] = JOBS,
             tolerance: Optional[float] = TOLERANCE, receiver_order: Optional[str] = RECEIVER_ORDER,
             out: Optional[str] = OUT, quiet: bool = QUIET):
    """
    Conditions, outer bound, achievable rate and the capacity decision

    Example:
        python main.py capacity --network networks/cascade.json --theorem T3
    """
    _execute("capacity", network=network, theorem=theorem, scheme=scheme, params=params, grid=grid, q_card=q_card,
             max_evaluations=max_evals, u_cap=u_cap, budget=budget, seed=seed, jobs=jobs, tolerance=tolerance,
             receiver_order=receiver_order, out=out, quiet=quiet)


@app.command()
def gaussian(network: str = NETWORK,
             model: str = typer.Option("generic", "--model", help="main4, cic3 or generic"),
             theorem: Optional[str] = THEOREM, scheme: Optional[str] = SCHEME, params: Optional[str] = PARAMS,
             sweep: Optional[str] = typer.Option(None, "--sweep", help="Power scaling START:STOP:COUNT"),
             tolerance: Optional[float] = TOLERANCE, receiver_order: Optional[str] = RECEIVER_ORDER,
             out: Optional[str] = OUT, fmt: str = FORMAT, quiet: bool = QUIET):
    """Closed-form Gaussian evaluation, optionally swept over power"""
    _execute("gaussian", network=network, model=model, theorem=theorem, scheme=scheme, params=params, sweep=sweep,
             tolerance=tolerance, receiver_order=receiver_order, out=out, format=fmt, quiet=quiet)


@app.command()
def selftest(samples: int = typer.Option(1000, "--samples", help="Random CK joints; psi pairs are 100 times this"),
             seed: int = SEED, out: Optional[str] = OUT, quiet: bool = QUIET):
    """Check the Csiszar-Korner and psi chain identities numerically"""
    _execute("selftest", samples=samples, seed=seed, out=out, quiet=quiet)


if __name__ == "__main__":
    app()
