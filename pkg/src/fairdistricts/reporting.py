"""The experiment driver: load a config, run the augmented protocol, write reports.

Every artifact written here is a pure function of (map file, config, seed):
JSON with sorted keys, a delimited summary table recomputable from the stored
transcripts, hand-written SVG renders, and matplotlib PNG figures.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

from .enumeration import TargetReport, geometric_target
from .figures import save_division_figure
from .model import (
    Division,
    EngineError,
    InfeasibilityError,
    ParcelMap,
    ValidationFailure,
    VotingModel,
    WinRating,
    as_fraction,
    dumps_json,
    fraction_str,
    load_map,
    rate_division,
)
from .protocol import (
    PESSIMISTIC,
    PartyAgent,
    Transcript,
    derive_seed,
    generate_split_sequence,
    parse_strategy,
    run_augmented,
)
from .rendering import render_division

SUMMARY_COLUMNS = (
    "sequence",
    "k",
    "option_a_piece1",
    "option_a_piece2",
    "option_a_total",
    "option_b_piece1",
    "option_b_piece2",
    "option_b_total",
    "pref_A",
    "pref_B",
    "branch",
    "resolved_k",
    "resolved_option",
)


class ExperimentError(EngineError):
    """A per-sequence failure, annotated with the sequence that caused it."""

    def __init__(self, sequence_index: int, label: str, cause: Exception):
        self.sequence_index = sequence_index
        self.label = label
        self.cause = cause
        super().__init__(f"sequence {sequence_index} [{label}]: {cause}")

    @property
    def infeasibility(self) -> bool:
        return isinstance(self.cause, InfeasibilityError)


@dataclass(frozen=True)
class AgentConfig:
    party: str
    threshold: str = "1/2"
    overrides: Mapping[str, str] = field(default_factory=dict)
    opponent_model: str = PESSIMISTIC

    def build(self) -> PartyAgent:
        return PartyAgent(
            party=self.party,
            voting_model=VotingModel.from_mapping(self.overrides),
            rating=WinRating(party=self.party, threshold=as_fraction(self.threshold)),
            opponent_model=self.opponent_model,
        )


@dataclass(frozen=True)
class ExperimentConfig:
    map_path: Path
    strategies: tuple[str, ...]
    seed: int
    agent_a: AgentConfig = AgentConfig("A")
    agent_b: AgentConfig = AgentConfig("B")
    output_dir: Optional[Path] = None

    def validate(self) -> list[str]:
        violations = []
        if not self.strategies:
            violations.append("at least one split-sequence strategy is required")
        for text in self.strategies:
            try:
                parse_strategy(text)
            except ValueError as exc:
                violations.append(str(exc))
        if not isinstance(self.seed, int):
            violations.append("seed must be an integer (no wall-clock defaults)")
        return violations


def _agent_config(party: str, data: Mapping) -> AgentConfig:
    return AgentConfig(
        party=party,
        threshold=str(data.get("threshold", "1/2")),
        overrides={str(k): str(v) for k, v in data.get("model", {}).items()},
        opponent_model=data.get("opponent_model", PESSIMISTIC),
    )


def config_from_dict(data: Mapping, base_dir: Union[str, Path] = ".") -> ExperimentConfig:
    base = Path(base_dir)
    if "seed" not in data:
        raise ValidationFailure("experiment config", ["seed is required"])
    agents = data.get("agents", {})
    config = ExperimentConfig(
        map_path=(base / data["map"]).resolve(),
        strategies=tuple(data.get("strategies", ())),
        seed=int(data["seed"]),
        agent_a=_agent_config("A", agents.get("A", {})),
        agent_b=_agent_config("B", agents.get("B", {})),
        output_dir=(base / data["output_dir"]).resolve() if "output_dir" in data else None,
    )
    violations = config.validate()
    if violations:
        raise ValidationFailure("experiment config", violations)
    return config


def load_experiment_config(path: Union[str, Path]) -> ExperimentConfig:
    import json

    path = Path(path)
    return config_from_dict(json.loads(path.read_text()), base_dir=path.parent)


# ---------------------------------------------------------------------------
# Summary table (the per-split option outcomes, from party A's point of view)
# ---------------------------------------------------------------------------

def summary_rows(transcripts: Sequence[Transcript]) -> list[dict[str, str]]:
    """Tabulate each split of each run: party A's piece/total outcome under both
    options, both declared preferences, and the resolution.  Derives purely
    from transcripts so stored tables can be re-checked against stored runs."""
    rows = []
    for transcript in transcripts:
        pref_b = {e.k: e.preference for e in transcript.declaration_b.entries}
        for entry in transcript.declaration_a.entries:
            rows.append(
                {
                    "sequence": transcript.label,
                    "k": str(entry.k),
                    "option_a_piece1": fraction_str(entry.option_a.piece1_value),
                    "option_a_piece2": fraction_str(entry.option_a.piece2_value),
                    "option_a_total": fraction_str(entry.option_a.total),
                    "option_b_piece1": fraction_str(entry.option_b.piece1_value),
                    "option_b_piece2": fraction_str(entry.option_b.piece2_value),
                    "option_b_total": fraction_str(entry.option_b.total),
                    "pref_A": entry.preference,
                    "pref_B": pref_b[entry.k],
                    "branch": transcript.resolution.branch,
                    "resolved_k": str(transcript.resolution.k),
                    "resolved_option": transcript.resolution.option,
                }
            )
    return rows


def summary_csv(rows: Sequence[Mapping[str, str]]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


def target_report_dict(report: TargetReport) -> dict:
    return {
        "best": fraction_str(report.best),
        "worst": fraction_str(report.worst),
        "target": fraction_str(report.target),
        "witness_best": dict(sorted(report.witness_best.assignment.items())),
        "witness_worst": dict(sorted(report.witness_worst.assignment.items())),
    }


@dataclass(frozen=True)
class ExperimentReport:
    parcel_map: ParcelMap
    transcripts: tuple[Transcript, ...]
    final: Division
    output_dir: Path


def run_experiment(
    config: ExperimentConfig, output_dir: Optional[Union[str, Path]] = None
) -> ExperimentReport:
    """Run the full augmented protocol described by the config and write all
    report files under the output directory."""
    violations = config.validate()
    if violations:
        raise ValidationFailure("experiment config", violations)
    out = Path(output_dir) if output_dir is not None else config.output_dir
    if out is None:
        raise ValidationFailure("experiment config", ["no output directory given"])

    parcel_map = load_map(config.map_path)
    agent_a = config.agent_a.build()
    agent_b = config.agent_b.build()

    sequences = []
    for i, text in enumerate(config.strategies):
        try:
            strategy = parse_strategy(text)
            sequences.append(
                generate_split_sequence(
                    parcel_map, strategy, seed=derive_seed(config.seed, f"generate:{i}")
                )
            )
        except (EngineError, ValueError) as exc:
            raise ExperimentError(i, text, exc) from exc

    try:
        transcripts, final = run_augmented(
            parcel_map, sequences, agent_a, agent_b, config.seed, labels=list(config.strategies)
        )
    except EngineError as exc:
        raise ExperimentError(-1, "augmented run", exc) from exc

    out.mkdir(parents=True, exist_ok=True)
    (out / "transcripts").mkdir(exist_ok=True)
    (out / "renders").mkdir(exist_ok=True)
    (out / "figures").mkdir(exist_ok=True)

    for i, transcript in enumerate(transcripts):
        (out / "transcripts" / f"seq-{i}.json").write_text(dumps_json(transcript.to_dict()))

    (out / "summary.csv").write_text(summary_csv(summary_rows(transcripts)))

    targets = {
        party: target_report_dict(
            geometric_target(parcel_map, WinRating(party=party), VotingModel.outcome())
        )
        for party in ("A", "B")
    }
    (out / "targets.json").write_text(dumps_json(targets))

    entries = []
    for i, transcript in enumerate(transcripts):
        svg = render_division(parcel_map, transcript.division, "svg")
        (out / "renders" / f"candidate-{i}.svg").write_text(svg)
        wins = dict(transcript.ratings)
        entries.append(
            (transcript.division, f"{transcript.label}: A={wins['A']} B={wins['B']}")
        )
    (out / "renders" / "final.svg").write_text(render_division(parcel_map, final, "svg"))

    save_division_figure(parcel_map, entries, out / "figures" / "candidates.png")
    final_wins = {
        agent.party: fraction_str(
            rate_division(parcel_map, final, agent.rating, agent.voting_model)
        )
        for agent in (agent_a, agent_b)
    }
    save_division_figure(
        parcel_map,
        [(final, f"final: A={final_wins['A']} B={final_wins['B']}")],
        out / "figures" / "final.png",
    )

    (out / "final_division.json").write_text(
        dumps_json(
            {
                "assignment": dict(sorted(final.assignment.items())),
                "ratings": final_wins,
            }
        )
    )
    return ExperimentReport(parcel_map, transcripts, final, out)
