"""Command-line interface.

Subcommands: generate-data, train, evaluate, score, label, ablate. Failures
exit nonzero and print a JSON error object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .ablation import run_ablation, write_table
from .config import RunConfig
from .corpus import DEFAULT_PREVALENCE, DEFAULT_UNCERTAIN_FRAC, generate_corpus, load_corpus
from .errors import ConfigurationError, NumericalFault, RewardError, StructuralError
from .evaluation import evaluate_policy
from .grpo import HISTORY_FIELDS, train_run
from .labeler import label_report
from .labels import dump_labels, to_signed_vector
from .policy import PolicyParams
from .rewards import DEFAULT_MARGIN, ccs, ce_f1_reward, format_reward, mccs, nlg_reward, total_reward

log = logging.getLogger("mccs_grpo")


def _read_text(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _dump(doc, path: str | Path | None = None) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def write_history(path: str | Path, history: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HISTORY_FIELDS)
        for row in history:
            writer.writerow([row["step"]] + [repr(float(row[k])) for k in HISTORY_FIELDS[1:]])


def cmd_generate_data(args) -> None:
    generate_corpus(args.n, args.out, args.seed, args.prevalence, args.uncertain_frac, args.prefix)
    log.info("wrote %d studies to %s", args.n, args.out)


def cmd_train(args) -> None:
    cfg = RunConfig.from_toml(args.config)
    out = Path(args.out or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params, history = train_run(cfg.grpo, cfg.train_studies())
    params.save(out / "params.json")
    write_history(out / "history.csv", history)
    _dump(
        {
            "package_version": __version__,
            "seed": cfg.seed,
            "config": cfg.resolved(),
            "outputs": ["params.json", "history.csv"],
        },
        out / "manifest.json",
    )
    log.info("trained %d steps; outputs in %s", cfg.grpo.steps, out)


def cmd_evaluate(args) -> None:
    cfg = RunConfig.from_toml(args.config) if args.config else RunConfig()
    _, studies = load_corpus(args.corpus)
    seed = args.seed if args.seed is not None else cfg.evaluation_seed
    report = evaluate_policy(PolicyParams.load(args.params), studies, cfg.grpo, seed)
    _dump(report.to_json(), args.out)


def cmd_score(args) -> None:
    gen_text, ref_text = _read_text(args.gen), _read_text(args.ref)
    gen_labels, ref_labels = label_report(gen_text), label_report(ref_text)
    z_gen, z_ref = to_signed_vector(gen_labels), to_signed_vector(ref_labels)
    shaped = mccs(z_gen, z_ref, args.margin)
    fmt = format_reward(gen_text)
    _dump(
        {
            "ccs": ccs(z_gen, z_ref),
            "mccs": shaped,
            "format": fmt,
            "ce_f1": ce_f1_reward(gen_labels, ref_labels),
            "nlg": nlg_reward(gen_text, ref_text),
            "total": total_reward(shaped, fmt).total,
        }
    )


def cmd_label(args) -> None:
    _dump(dump_labels(label_report(_read_text(args.file))))


def cmd_ablate(args) -> None:
    cfg = RunConfig.from_toml(args.config)
    out = Path(args.out) if args.out else Path(cfg.out_dir) / "ablation.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_table(out, run_ablation(cfg))
    log.info("wrote %s", out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mccs-grpo", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-data", help="write a synthetic JSONL corpus")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--prevalence", type=float, default=DEFAULT_PREVALENCE)
    p.add_argument("--uncertain-frac", type=float, default=DEFAULT_UNCERTAIN_FRAC)
    p.add_argument("--prefix", default="study")
    p.set_defaults(func=cmd_generate_data)

    p = sub.add_parser("train", help="run GRPO from a TOML config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory (overrides out_dir)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="greedy CE evaluation of saved params")
    p.add_argument("--params", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("score", help="score a generated report against a reference")
    p.add_argument("--gen", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--margin", type=float, default=DEFAULT_MARGIN)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("label", help="print the 14-label vector of a report")
    p.add_argument("file")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("ablate", help="train all reward arms and write a CE table")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ablate)
    return parser


_EXIT_CODES = {ConfigurationError: 2, StructuralError: 3, NumericalFault: 4, RewardError: 5, OSError: 6}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except tuple(_EXIT_CODES) as exc:
        code = next(c for t, c in _EXIT_CODES.items() if isinstance(exc, t))
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
