"""Pipeline configuration and run-directory layout."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .balance import BalanceConfig
from .errors import ConfigError
from .gateway import ModelEndpoint, load_endpoints
from .scheduler import DEFAULT_PRIORITY, DEFAULT_TARGETS

REVIEW_CRITERIA = ("fluency", "semantic_correctness", "level_appropriateness")


@dataclass
class ReviewConfig:
    subset_size: int = 1000
    seed: int = 0
    annotators: tuple[str, ...] = ()
    auth_token: str | None = None


@dataclass
class PipelineConfig:
    seed: int = 0
    language: str = "vi"
    targets: tuple[float, ...] = DEFAULT_TARGETS
    category_priority: tuple[str, ...] = DEFAULT_PRIORITY
    context_budget: int = 4000
    generate_count: int = 100
    mock: bool = True
    pooled_medians: bool = False
    mandatory_criteria: tuple[str, ...] = ()
    endpoints: list[ModelEndpoint] = field(default_factory=list)
    balance: BalanceConfig = field(default_factory=BalanceConfig)
    review: ReviewConfig = field(default_factory=ReviewConfig)

    def generator_endpoint(self) -> ModelEndpoint:
        for ep in self.endpoints:
            if ep.role == "generator":
                return ep
        raise ConfigError("no generator endpoint configured")

    def judge_endpoints(self) -> list[ModelEndpoint]:
        return [ep for ep in self.endpoints if ep.role == "judge"]


def default_mock_endpoints() -> list[ModelEndpoint]:
    return [
        ModelEndpoint("gen-mock", "", "mock", "generator"),
        ModelEndpoint("judge-mock-1", "", "mock", "judge"),
        ModelEndpoint("judge-mock-2", "", "mock", "judge"),
        ModelEndpoint("judge-mock-3", "", "mock", "judge"),
    ]


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> PipelineConfig:
    obj: dict = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    if overrides:
        obj.update({k: v for k, v in overrides.items() if v is not None})

    balance_obj = obj.get("balance", {})
    balance = BalanceConfig(
        min_support=balance_obj.get("min_support", 0.01),
        max_spread=balance_obj.get("max_spread", 0.10),
        weight_grounding=balance_obj.get("weight_grounding", 0.5),
        weight_depth=balance_obj.get("weight_depth", 0.5),
        split_ratios=tuple(balance_obj.get("split_ratios", (0.8, 0.2))),
        seed=obj.get("seed", 0),
        parent_map=balance_obj.get("parent_map", {}),
    )
    review_obj = obj.get("review", {})
    review = ReviewConfig(
        subset_size=review_obj.get("subset_size", 1000),
        seed=review_obj.get("seed", obj.get("seed", 0)),
        annotators=tuple(review_obj.get("annotators", ())),
        auth_token=review_obj.get("auth_token"),
    )
    endpoints = load_endpoints(obj["endpoints"]) if obj.get("endpoints") else []
    config = PipelineConfig(
        seed=obj.get("seed", 0),
        language=obj.get("language", "vi"),
        targets=tuple(obj.get("targets", DEFAULT_TARGETS)),
        category_priority=tuple(obj.get("category_priority", DEFAULT_PRIORITY)),
        context_budget=obj.get("context_budget", 4000),
        generate_count=obj.get("generate_count", 100),
        mock=obj.get("mock", True),
        pooled_medians=obj.get("pooled_medians", False),
        mandatory_criteria=tuple(obj.get("mandatory_criteria", ())),
        endpoints=endpoints,
        balance=balance,
        review=review,
    )
    if config.mock and not config.endpoints:
        config.endpoints = default_mock_endpoints()
    return config


def config_fingerprint(config: PipelineConfig) -> str:
    payload = json.dumps({
        "seed": config.seed,
        "language": config.language,
        "targets": list(config.targets),
        "category_priority": list(config.category_priority),
        "context_budget": config.context_budget,
        "generate_count": config.generate_count,
        "mock": config.mock,
        "pooled_medians": config.pooled_medians,
        "mandatory_criteria": list(config.mandatory_criteria),
        "endpoints": [ep.endpoint_id for ep in config.endpoints],
        "split_ratios": list(config.balance.split_ratios),
    }, sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


# Fixed run-directory layout: every QC decision is auditable at file level.
class RunPaths:
    def __init__(self, run_dir: str | Path):
        self.root = Path(run_dir)
        self.config = self.root / "config.json"
        self.corpus_dir = self.root / "corpus"
        self.records = self.corpus_dir / "records.jsonl"
        self.samples = self.root / "samples.jsonl"
        self.scores = self.root / "scores.jsonl"
        self.verdicts = self.root / "verdicts.jsonl"
        self.qc_report = self.root / "qc_report.json"
        self.balanced = self.root / "balanced.jsonl"
        self.export_dir = self.root / "export"
        self.ratings = self.root / "ratings.jsonl"
        self.manifest = self.root / "manifest.json"
