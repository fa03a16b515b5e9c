"""Click CLI for acarmichael.

Exit codes: 0 success or a true verdict, 1 a verified false verdict, 2 usage
errors, 3 budget exhaustion or construction failure, 130 on Ctrl-C.
"""

import json
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Optional

import click

from acarmichael import __version__
from acarmichael.config import ParamsError, RunConfig, configure_logging

EXIT_FALSE = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3
EXIT_INTERRUPTED = 130

# Shifts and residues may be negative; "-1" must reach the command as an argument.
NUMERIC_ARGS = {"ignore_unknown_options": True}


def _fail(message: str, code: int) -> None:
    click.echo(click.style(message, fg="red"), err=True)
    sys.exit(code)


@contextmanager
def _exit_codes() -> Iterator[None]:
    from acarmichael.arith import BudgetExceeded
    from acarmichael.construct import ConstructionError

    try:
        yield
    except ParamsError as exc:
        _fail(f"Error: {exc}", EXIT_USAGE)
    except BudgetExceeded as exc:
        stage = getattr(exc, "stage", None)
        _fail(f"Budget exceeded{f' in {stage}' if stage else ''}: {exc}", EXIT_BUDGET)
    except ConstructionError as exc:
        _fail(f"Construction failed{f' in {exc.stage}' if exc.stage else ''}: {exc}", EXIT_BUDGET)
    except ValueError as exc:
        _fail(f"Invalid input: {exc}", EXIT_USAGE)
    except KeyboardInterrupt:
        click.echo(click.style("\nInterrupted.", fg="yellow"), err=True)
        sys.exit(EXIT_INTERRUPTED)


def _emit(run: RunConfig, payload: dict, text: str) -> None:
    """JSON carries the run config inline; csv and text echo it on stderr so stdout stays a clean table."""
    if run.output_format == "json":
        click.echo(json.dumps({**payload, "config": run.to_dict()}, indent=2))
        return
    click.echo(f"# config: {json.dumps(run.to_dict(), sort_keys=True)}", err=True)
    click.echo(text)


def _format_option(choices: tuple, default: str):
    return click.option(
        "--format",
        "-f",
        "output_format",
        type=click.Choice(list(choices), case_sensitive=False),
        default=default,
        show_default=True,
        help="Output format.",
    )


threads_option = click.option(
    "--threads", "-j", type=click.IntRange(min=1), default=None, help="Worker threads (output does not depend on it)."
)


@click.group()
@click.version_option(version=__version__, prog_name="acarmichael")
@click.option("--verbose", "-v", count=True, help="Log progress to stderr (-v info, -vv debug).")
@click.option(
    "--trace",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="Write a debug-level trace log to this file.",
)
def main(verbose: int, trace: Optional[Path]) -> None:
    configure_logging(verbose, trace)


@main.command(context_settings=NUMERIC_ARGS)
@click.argument("n", type=int)
@click.argument("a", type=int)
@click.option("--relax-squarefree", is_flag=True, default=False, help="Drop the squarefree requirement.")
@_format_option(("json", "text"), "json")
def check(n: int, a: int, relax_squarefree: bool, output_format: str) -> None:
    """Decide whether N is an A-Carmichael number (exit 0 if it is, 1 if not)."""
    from acarmichael.korselt import check as korselt_check

    run = RunConfig("check", output_format, {"n": n, "a": a, "relax_squarefree": relax_squarefree})
    with _exit_codes():
        result = korselt_check(n, a, require_squarefree=not relax_squarefree)

    if result.verdict:
        entries = result.certificate.entries
        lines = [f"{n} is {a}-Carmichael: {n} = {' * '.join(str(e.p) for e in entries)}"]
        lines += [f"  {e.p} - ({a}) = {e.divisor} divides {n - a} ({e.quotient} times)" for e in entries]
    else:
        lines = [f"{n} is not {a}-Carmichael: {result.reason}"]
    _emit(run, result.to_dict(), "\n".join(lines))
    if not result.verdict:
        sys.exit(EXIT_FALSE)


@main.command("enumerate", context_settings=NUMERIC_ARGS)
@click.argument("a", type=int)
@click.argument("limit", type=click.IntRange(min=2))
@click.option("--relax-squarefree", is_flag=True, default=False, help="Drop the squarefree requirement.")
@threads_option
@_format_option(("text", "json", "csv"), "text")
def enumerate_cmd(a: int, limit: int, relax_squarefree: bool, threads: Optional[int], output_format: str) -> None:
    """List every A-Carmichael number up to LIMIT."""
    from acarmichael.korselt import enumerate_carmichael

    threads = threads or 1
    run = RunConfig("enumerate", output_format, {"a": a, "limit": limit, "relax_squarefree": relax_squarefree})
    run.threads = threads
    with _exit_codes():
        found = enumerate_carmichael(a, limit, require_squarefree=not relax_squarefree, threads=threads)

    if output_format == "csv":
        text = "\n".join(["n", *map(str, found)])
    else:
        text = " ".join(map(str, found))
    _emit(run, {"a": a, "limit": limit, "count": len(found), "values": found}, text)


@main.command()
@click.argument("params_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--seed", type=int, default=None, help="Override the file's seed.")
@threads_option
@click.option("--timings", is_flag=True, default=False, help="Report per-stage wall-clock timings.")
@_format_option(("json", "text"), "json")
def construct(
    params_file: Path,
    seed: Optional[int],
    threads: Optional[int],
    timings: bool,
    output_format: str,
) -> None:
    """Build a certified a-Carmichael number from a key = value parameter file."""
    from acarmichael.config import load_params_file
    from acarmichael.construct import run_pipeline

    with _exit_codes():
        params = load_params_file(params_file, seed=seed, threads=threads)
        run = RunConfig("construct", output_format, params.to_dict(), seed=params.seed, threads=params.threads)
        if output_format == "text":
            click.echo(click.style(f"Constructing from {params_file.name}...", fg="cyan"), err=True)
        result = run_pipeline(params)

    if not result.certificate.verify():
        _fail(f"Certificate for n = {result.n} did not re-verify", EXIT_BUDGET)

    lines = [
        f"n = {result.n}",
        f"a = {params.a}, L = {result.L}, k = {result.k}, k' = {result.kprime}",
        f"P = {result.P}",
        f"chosen ({len(result.chosen_primes)} of {len(result.slice)} slice primes): "
        + " ".join(map(str, result.chosen_primes)),
    ]
    if timings:
        lines += [f"timing {name}: {seconds:.3f}s" for name, seconds in result.timings.items()]
    _emit(run, result.to_dict(include_timings=timings), "\n".join(lines))


@main.command("hb-scan")
@click.argument("m_lo", type=int)
@click.argument("m_hi", type=int)
@click.option("--A", "A", type=float, default=2.0, show_default=True, help="Exponent of the relaxed ratio.")
@click.option("--cap", type=click.IntRange(min=2), default=10**7, show_default=True, help="Largest prime searched.")
@threads_option
@_format_option(("csv", "json"), "csv")
def hb_scan(m_lo: int, m_hi: int, A: float, cap: int, threads: Optional[int], output_format: str) -> None:
    """Worst-case least prime in progressions mod m for M_LO <= m <= M_HI."""
    from acarmichael.ap import hb_scan as scan
    from acarmichael.ap import hb_scan_csv

    if m_hi < m_lo:
        raise click.BadParameter(f"M_HI ({m_hi}) is below M_LO ({m_lo})", param_hint="M_HI")
    threads = threads or 1
    run = RunConfig("hb-scan", output_format, {"m_lo": m_lo, "m_hi": m_hi, "A": A, "cap": cap}, threads=threads)
    with _exit_codes():
        stats = scan(m_lo, m_hi, A, cap, threads=threads)
    _emit(run, {"rows": [s.to_dict() for s in stats]}, hb_scan_csv(stats).rstrip("\n"))


@main.command()
@click.option("--y", "y", type=float, required=True, help="Smoothness bound y.")
@click.option("--theta", type=float, required=True, help="Exponent theta in (1, 2).")
@click.option("--A", "A", type=click.IntRange(min=1), required=True, help="Block exponent A.")
@click.option("--gamma", type=float, required=True, help="Density constant gamma of Q.")
@click.option("--omega", type=click.IntRange(min=0), required=True, help="omega(L), the number of primes in Q.")
@click.option("--kappa", type=float, default=1.0, show_default=True, help="Constant with L <= e^(kappa y^theta).")
@click.option("--binom", type=(int, int), default=None, help="Also check the binomial sandwich at U V.")
@_format_option(("json", "text"), "json")
def bounds(
    y: float,
    theta: float,
    A: int,
    gamma: float,
    omega: int,
    kappa: float,
    binom: Optional[tuple],
    output_format: str,
) -> None:
    """Evaluate the counting chain at concrete parameters."""
    from acarmichael.bounds import CountingInputs, binom_bound_check, counting_report

    try:
        inputs = CountingInputs(y, theta, A, gamma, omega, kappa)
        sandwich = binom_bound_check(*binom) if binom else None
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    report = counting_report(inputs)
    run = RunConfig("bounds", output_format, inputs.to_dict())

    payload = report.to_dict()
    lines = [
        f"log r = {report.log_r:.6f}, log t = {report.log_t:.6f}, log n_bound = {report.log_n_bound:.6f}",
        f"applicable: {'yes' if report.applicable else 'no (needs r > t > n_bound)'}",
    ]
    for s in report.steps:
        lines.append(f"  [{'ok' if s.holds else 'fails'}] {s.name}: {s.lhs:.6g} vs {s.rhs:.6g} ({s.scale})")
    if report.exponent is not None:
        lines.append(f"exponent = {report.exponent:.6g}")
    if sandwich is not None:
        payload["binomial"] = sandwich.to_dict()
        lower, exact, upper = sandwich.as_tuple()
        lines.append(f"binomial C({sandwich.u},{sandwich.v}): {lower:.6g} <= {exact} <= {upper:.6g}")
    _emit(run, payload, "\n".join(lines))


@main.command("group-bound")
@click.argument("modulus", metavar="L", type=click.IntRange(min=2))
@click.option("--exact-cap", type=click.IntRange(min=1), default=None, help="Compute n(L) exactly when phi(L) fits.")
@click.option("--y", "y", type=click.IntRange(min=2), default=None, help="Attach the e^(3 y theta) bound.")
@click.option("--theta", type=float, default=None, help="Exponent theta in (1, 2).")
@_format_option(("json", "text"), "json")
def group_bound(
    modulus: int, exact_cap: Optional[int], y: Optional[int], theta: Optional[float], output_format: str
) -> None:
    """lambda(L) and the bounds on the Davenport-type constant n(L)."""
    from acarmichael.groups import eq1_bound, lambda_smooth_bound

    if (y is None) != (theta is None):
        raise click.UsageError("--y and --theta must be given together")
    run = RunConfig("group-bound", output_format, {"L": modulus, "exact_cap": exact_cap, "y": y, "theta": theta})
    with _exit_codes():
        report = eq1_bound(modulus, exact_cap=exact_cap, y=y, theta=theta)
        chain = None
        if y is not None:
            try:
                chain = lambda_smooth_bound(y, theta, modulus)
            except ValueError as exc:
                raise click.UsageError(str(exc)) from exc

    payload = report.to_dict()
    lines = [f"lambda({modulus}) = {report.lam}", f"n({modulus}) < {report.eq1_bound:.6f}"]
    if report.n_exact is not None:
        lines.append(f"n({modulus}) = {report.n_exact}")
    if chain is not None:
        payload["lambda_chain"] = chain.to_dict()
        lines.append(f"e^(3 y theta) = {report.e3y_bound:.6g}")
        lines.append(f"lambda(L) <= prod r^a_r = {chain.exact_product} <= e^(2 y theta): {chain.chain_holds}")
    _emit(run, payload, "\n".join(lines))


@main.command()
def version() -> None:
    """Show version info."""
    import numpy

    click.echo(f"acarmichael {__version__}")
    click.echo(f"  numpy {numpy.__version__}")
    click.echo(f"  Python {sys.version.split()[0]}")
