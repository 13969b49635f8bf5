"""Number-agreement accuracy and subject-attribution scoring.

Both tasks compare the congruent against the incongruent verb form at the
prediction point (the last prefix token). NA uses the full-model logits;
subject attribution uses the beta logits of a decomposed pass with the
subject as the relevant span. Strict comparison: ties count as incorrect.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass, field

from joblib import Parallel, delayed

from .checkpoint import Checkpoint
from .corpus import CorpusItem
from .decompose import (
    InteractionPolicy,
    RelevantSpan,
    decomposed_forward,
    logit_attribution,
)
from .models import DEFAULT_MEMORY_WINDOW, forward


@dataclass
class ReportCell:
    n: int = 0
    na_correct: int = 0
    attr_correct: int = 0
    attr_ties: int = 0

    @property
    def na_accuracy(self) -> float:
        return 100.0 * self.na_correct / self.n

    @property
    def attribution_score(self) -> float:
        return 100.0 * self.attr_correct / self.n


@dataclass
class AttributionReport:
    """Per (template, condition) scores, in the shape of a results table."""

    policy: str
    model_id: str
    cells: dict[tuple[str, str], ReportCell] = field(default_factory=dict)

    @property
    def has_ties(self) -> bool:
        return any(c.attr_ties > 0 for c in self.cells.values())


def _verb_ids(ckpt: Checkpoint, item: CorpusItem) -> tuple[int, int]:
    return ckpt.vocab.encode(item.congruent), ckpt.vocab.encode(item.incongruent)


def _na_correct(ckpt: Checkpoint, item: CorpusItem, window: int) -> bool:
    logits = forward(ckpt, ckpt.vocab.encode_all(list(item.tokens)), window=window)
    cong, incong = _verb_ids(ckpt, item)
    point = logits[item.prediction_point]
    return bool(point[cong] > point[incong])


def _attr_outcome(
    ckpt: Checkpoint, item: CorpusItem, policy: InteractionPolicy, window: int
) -> tuple[bool, bool]:
    """(correct, tie) for one item on the subject-attribution task."""
    logits = decomposed_forward(
        ckpt, ckpt.vocab.encode_all(list(item.tokens)), item.span, policy, window=window
    )
    cong, incong = _verb_ids(ckpt, item)
    a_cong = logit_attribution(logits, item.prediction_point, cong)
    a_incong = logit_attribution(logits, item.prediction_point, incong)
    return a_cong > a_incong, a_cong == a_incong


def _map(fn, items, jobs):
    if jobs and jobs > 1:
        return Parallel(n_jobs=jobs)(delayed(fn)(item) for item in items)
    return [fn(item) for item in items]


def na_accuracy(
    ckpt: Checkpoint,
    items: list[CorpusItem],
    jobs: int = 1,
    window: int = DEFAULT_MEMORY_WINDOW,
) -> dict[tuple[str, str], ReportCell]:
    if not items:
        raise ValueError("empty item list")
    outcomes = _map(lambda it: _na_correct(ckpt, it, window), items, jobs)
    cells: dict[tuple[str, str], ReportCell] = defaultdict(ReportCell)
    for item, correct in zip(items, outcomes):
        cell = cells[(item.template, item.condition)]
        cell.n += 1
        cell.na_correct += int(correct)
    return dict(cells)


def subject_attribution(
    ckpt: Checkpoint,
    items: list[CorpusItem],
    policy: InteractionPolicy,
    jobs: int = 1,
    window: int = DEFAULT_MEMORY_WINDOW,
) -> dict[tuple[str, str], ReportCell]:
    if not items:
        raise ValueError("empty item list")
    outcomes = _map(lambda it: _attr_outcome(ckpt, it, policy, window), items, jobs)
    cells: dict[tuple[str, str], ReportCell] = defaultdict(ReportCell)
    for item, (correct, tie) in zip(items, outcomes):
        cell = cells[(item.template, item.condition)]
        cell.n += 1
        cell.attr_correct += int(correct)
        cell.attr_ties += int(tie)
    return dict(cells)


def build_report(
    ckpt: Checkpoint,
    items: list[CorpusItem],
    policy: InteractionPolicy,
    model_id: str,
    jobs: int = 1,
    window: int = DEFAULT_MEMORY_WINDOW,
) -> AttributionReport:
    """NA accuracy and attribution scores together, one cell per template x condition."""
    na = na_accuracy(ckpt, items, jobs=jobs, window=window)
    attr = subject_attribution(ckpt, items, policy, jobs=jobs, window=window)
    report = AttributionReport(policy=policy.name, model_id=model_id)
    for key in sorted(na):
        cell = na[key]
        cell.attr_correct = attr[key].attr_correct
        cell.attr_ties = attr[key].attr_ties
        report.cells[key] = cell
    return report


def aggregate_attributions(
    ckpt: Checkpoint,
    items: list[CorpusItem],
    policy: InteractionPolicy,
    window: int = DEFAULT_MEMORY_WINDOW,
) -> list[dict]:
    """Mean beta attribution per template slot, for both candidate verb forms.

    All items must share one template (aligned token positions). For each slot
    the sentence is re-decomposed with that slot as the relevant span.
    """
    if not items:
        raise ValueError("empty item list")
    templates = {item.template for item in items}
    if len(templates) != 1:
        raise ValueError(f"items mix templates: {sorted(templates)}")
    n_slots = len(items[0].tokens)
    if any(len(item.tokens) != n_slots for item in items):
        raise ValueError("items differ in prefix length")
    sums_cong = [0.0] * n_slots
    sums_incong = [0.0] * n_slots
    for item in items:
        ids = ckpt.vocab.encode_all(list(item.tokens))
        cong, incong = _verb_ids(ckpt, item)
        for slot in range(n_slots):
            logits = decomposed_forward(
                ckpt, ids, RelevantSpan(slot, slot + 1), policy, window=window
            )
            sums_cong[slot] += logit_attribution(logits, item.prediction_point, cong)
            sums_incong[slot] += logit_attribution(logits, item.prediction_point, incong)
    n = len(items)
    return [
        {
            "slot": slot,
            "token_example": items[0].tokens[slot],
            "mean_beta_congruent": sums_cong[slot] / n,
            "mean_beta_incongruent": sums_incong[slot] / n,
        }
        for slot in range(n_slots)
    ]


# --- CSV export (column names documented in docs/report-format.md) ---


def write_na_csv(cells: dict[tuple[str, str], ReportCell], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["template", "condition", "n", "na_accuracy"])
        for (template, condition) in sorted(cells):
            cell = cells[(template, condition)]
            writer.writerow([template, condition, cell.n, f"{cell.na_accuracy:.4f}"])


def write_report_csv(report: AttributionReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "template",
                "condition",
                "n",
                "na_accuracy",
                "attribution_score",
                "ties",
                "policy",
                "model_id",
            ]
        )
        for (template, condition) in sorted(report.cells):
            cell = report.cells[(template, condition)]
            writer.writerow(
                [
                    template,
                    condition,
                    cell.n,
                    f"{cell.na_accuracy:.4f}",
                    f"{cell.attribution_score:.4f}",
                    cell.attr_ties,
                    report.policy,
                    report.model_id,
                ]
            )


def write_slot_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["slot", "token_example", "mean_beta_congruent", "mean_beta_incongruent"])
        for row in rows:
            writer.writerow(
                [
                    row["slot"],
                    row["token_example"],
                    repr(row["mean_beta_congruent"]),
                    repr(row["mean_beta_incongruent"]),
                ]
            )
