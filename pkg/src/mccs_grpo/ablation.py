"""Train every reward arm with a shared seed and tabulate eval CE metrics."""

from __future__ import annotations

import csv
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from .config import RunConfig
from .evaluation import EvalReport, evaluate_policy
from .grpo import train_run
from .policy import PolicyParams
from .rewards import ARMS

TABLE_FIELDS = ("arm", "precision", "recall", "f1", "mean_mccs", "format_rate")
UNTRAINED = "untrained"


def run_ablation(cfg: RunConfig, arms: Sequence[str] = ARMS) -> dict[str, EvalReport]:
    """Eval reports keyed by arm name, starting with the untrained policy."""
    train, held_out = cfg.train_studies(), cfg.eval_studies()
    eval_seed = cfg.evaluation_seed
    # Untrained and trained policies are all scored under the same eval reward settings.
    reports = {UNTRAINED: evaluate_policy(PolicyParams.zeros(), held_out, cfg.grpo, eval_seed)}
    for arm in arms:
        grpo = replace(cfg.grpo, reward_arm=arm)
        params, _ = train_run(grpo, train)
        reports[arm] = evaluate_policy(params, held_out, cfg.grpo, eval_seed)
    return reports


def write_table(path: str | Path, reports: dict[str, EvalReport]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TABLE_FIELDS)
        for arm, rep in reports.items():
            writer.writerow([arm, repr(rep.precision), repr(rep.recall), repr(rep.f1), repr(rep.mean_mccs), repr(rep.format_rate)])
