"""Run configuration: GRPO settings plus corpus settings, loadable from TOML."""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

from .corpus import DEFAULT_PREVALENCE, DEFAULT_UNCERTAIN_FRAC, Study, load_corpus, make_corpus
from .errors import ConfigurationError
from .grpo import GRPOConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass(frozen=True)
class RunConfig:
    grpo: GRPOConfig = field(default_factory=GRPOConfig)
    n_train: int = 500
    n_eval: int = 200
    prevalence: float = DEFAULT_PREVALENCE
    uncertain_frac: float = DEFAULT_UNCERTAIN_FRAC
    train_corpus: str | None = None
    eval_corpus: str | None = None
    eval_seed: int | None = None
    out_dir: str = "runs"

    @classmethod
    def from_mapping(cls, doc: Mapping[str, Any], base_dir: Path | None = None) -> "RunConfig":
        own = {f.name for f in fields(cls)} - {"grpo"}
        grpo_keys = {f.name for f in fields(GRPOConfig)}
        unknown = set(doc) - own - grpo_keys
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {k: v for k, v in doc.items() if k in own}
        for key in ("train_corpus", "eval_corpus", "out_dir"):
            if base_dir is not None and kwargs.get(key) is not None:
                kwargs[key] = str(base_dir / kwargs[key])
        grpo = GRPOConfig.from_mapping({k: v for k, v in doc.items() if k in grpo_keys})
        return cls(grpo=grpo, **kwargs)

    @classmethod
    def from_toml(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            with open(path, "rb") as fh:
                doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigurationError(f"{path}: {exc}") from None
        return cls.from_mapping(doc, base_dir=path.parent)

    def resolved(self) -> dict:
        doc = asdict(self)
        doc.update(doc.pop("grpo"))
        return doc

    @property
    def seed(self) -> int:
        return self.grpo.seed

    def train_studies(self) -> list[Study]:
        if self.train_corpus:
            return load_corpus(self.train_corpus)[1]
        return make_corpus(self.n_train, self.seed, self.prevalence, self.uncertain_frac, prefix="train")

    def eval_studies(self) -> list[Study]:
        if self.eval_corpus:
            return load_corpus(self.eval_corpus)[1]
        return make_corpus(self.n_eval, self.seed, self.prevalence, self.uncertain_frac, prefix="eval")

    @property
    def evaluation_seed(self) -> int:
        return self.seed + 1 if self.eval_seed is None else self.eval_seed
