"""Command-line interface.

Exit codes: 0 on success, 1 on validation failures, 2 on protocol
infeasibility (no switch point, infeasible split, no valid sequence).
All semantics flow through flags and files; the only environment variable,
FAIRDISTRICTS_LOG, controls log verbosity.
"""

from __future__ import annotations

import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

import click

from .enumeration import enumerate_divisions, geometric_target, ksplit_geometric_target
from .fairdiv import PiecewiseValuation, PointAllocation, adjusted_winner, cut_and_choose
from .model import (
    Division,
    EngineError,
    InfeasibilityError,
    Split,
    ValidationFailure,
    VotingModel,
    WinRating,
    division_from_dict,
    dumps_json,
    fraction_str,
    load_map,
    validate_map,
)
from .protocol import derive_seed, generate_split_sequence, parse_strategy, run_protocol
from .rendering import render_division
from .reporting import (
    ExperimentError,
    load_experiment_config,
    run_experiment,
    target_report_dict,
)

log = logging.getLogger("fairdistricts")


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guard(fn):
    """Translate engine errors into the documented exit codes."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ExperimentError as exc:
            _fail(str(exc), 2 if exc.infeasibility else 1)
        except InfeasibilityError as exc:
            _fail(str(exc), 2)
        except (ValidationFailure, EngineError, ValueError) as exc:
            _fail(str(exc), 1)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@click.group()
def main() -> None:
    """Fair-division redistricting engine."""
    level = os.environ.get("FAIRDISTRICTS_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))


@main.command()
@click.argument("map_file", type=click.Path(exists=True, dir_okay=False))
@_guard
def validate(map_file: str) -> None:
    """Validate a map file; list violations if any."""
    load_map(map_file)
    click.echo("ok")


@main.command(name="enumerate")
@click.argument("map_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--count-only", is_flag=True, help="Print only the number of viable divisions.")
@_guard
def enumerate_cmd(map_file: str, count_only: bool) -> None:
    """Enumerate every viable division of a map, in canonical order."""
    parcel_map = load_map(map_file)
    if count_only:
        click.echo(str(sum(1 for _ in enumerate_divisions(parcel_map))))
        return
    count = 0
    for division in enumerate_divisions(parcel_map):
        click.echo(json.dumps({"assignment": division.assignment}, sort_keys=True))
        count += 1
    log.info("enumerated %d divisions", count)


@main.command()
@click.argument("map_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--party", type=click.Choice(["A", "B"]), required=True)
@click.option("--threshold", default="1/2", show_default=True, help="Win threshold (rational).")
@click.option("--split", "split_k", type=int, default=None, help="Restrict to a k-split.")
@click.option("--piece1", default=None, help="Comma-separated parcel ids of the split's piece 1.")
@_guard
def target(map_file: str, party: str, threshold: str, split_k, piece1) -> None:
    """Geometric target (optionally the k-split target) for one party."""
    parcel_map = load_map(map_file)
    spec = WinRating(party=party, threshold=Fraction(threshold))
    model = VotingModel.outcome()
    if (split_k is None) != (piece1 is None):
        raise ValidationFailure("arguments", ["--split and --piece1 must be given together"])
    if split_k is None:
        report = geometric_target(parcel_map, spec, model)
    else:
        split = Split(k=split_k, piece1=frozenset(p.strip() for p in piece1.split(",")))
        report = ksplit_geometric_target(parcel_map, split, spec, model)
    click.echo(dumps_json(target_report_dict(report)), nl=False)


@main.command()
@click.argument("map_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--strategy", required=True, help="sweep:<direction>[:rev] or random-growth.")
@click.option("--seed", type=int, required=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the transcript here.")
@_guard
def protocol(map_file: str, strategy: str, seed: int, out) -> None:
    """One protocol run: generate a sequence, elicit preferences, resolve."""
    parcel_map = load_map(map_file)
    sequence = generate_split_sequence(
        parcel_map, parse_strategy(strategy), seed=derive_seed(seed, "generate")
    )
    from .protocol import PartyAgent

    transcript = run_protocol(
        parcel_map,
        sequence,
        PartyAgent("A"),
        PartyAgent("B"),
        seed,
        label=strategy,
    )
    text = dumps_json(transcript.to_dict())
    if out:
        Path(out).write_text(text)
        click.echo(f"transcript written to {out}")
    else:
        click.echo(text, nl=False)


@main.command()
@click.argument("config_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")
@_guard
def augment(config_file: str, out) -> None:
    """Run the augmented protocol experiment described by a config file."""
    config = load_experiment_config(config_file)
    report = run_experiment(config, output_dir=out)
    ratings = json.loads((report.output_dir / "final_division.json").read_text())["ratings"]
    click.echo(
        f"final division: A wins {ratings['A']}, B wins {ratings['B']} "
        f"(reports in {report.output_dir})"
    )


@main.command()
@click.argument("map_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("division_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["ascii", "svg"]), default="ascii", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@_guard
def render(map_file: str, division_file: str, fmt: str, out) -> None:
    """Render a division file as an ASCII grid or SVG."""
    parcel_map = load_map(map_file)
    division = division_from_dict(json.loads(Path(division_file).read_text()))
    text = render_division(parcel_map, division, fmt)
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
        click.echo(f"rendering written to {out}")
    else:
        click.echo(text)


@main.group()
def fairdiv() -> None:
    """Classic two-party fair-division procedures."""


@fairdiv.command(name="adjusted-winner")
@click.argument("bids_file", type=click.Path(exists=True, dir_okay=False))
@_guard
def adjusted_winner_cmd(bids_file: str) -> None:
    """Run Adjusted Winner on a JSON bid table {"A": {good: points}, "B": {...}}."""
    data = json.loads(Path(bids_file).read_text())
    allocation = PointAllocation.from_bids(data["A"], data["B"])
    result = adjusted_winner(allocation)
    click.echo(
        dumps_json(
            {
                "shares_to_A": {
                    good: fraction_str(share)
                    for good, share in zip(result.split.goods, result.split.shares_to_a)
                },
                "equalized_share": fraction_str(result.equalized_share),
            }
        ),
        nl=False,
    )


@fairdiv.command(name="cut-choose")
@click.argument("valuations_file", type=click.Path(exists=True, dir_okay=False))
@_guard
def cut_choose_cmd(valuations_file: str) -> None:
    """Run cut-and-choose; party A cuts, party B chooses.

    Input: {"A": {"breakpoints": [...], "densities": [...]}, "B": {...}}.
    """
    data = json.loads(Path(valuations_file).read_text())
    val_a = PiecewiseValuation.of(data["A"]["breakpoints"], data["A"]["densities"])
    val_b = PiecewiseValuation.of(data["B"]["breakpoints"], data["B"]["densities"])
    result = cut_and_choose(val_a, val_b)
    click.echo(
        dumps_json(
            {
                "cut": fraction_str(result.cut),
                "chooser_takes": result.chooser_takes,
                "share_A": fraction_str(result.share_cutter),
                "share_B": fraction_str(result.share_chooser),
            }
        ),
        nl=False,
    )


if __name__ == "__main__":
    main()
