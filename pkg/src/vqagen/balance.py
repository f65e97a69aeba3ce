"""Distribution-aware balancing, splitting, and export.

Under-sampling keeps category counts within a relative spread of 10%:
every category is capped at floor(min_count / (1 - max_spread)) and the
lowest-weight samples are dropped first. Splits group by image_id so no
image leaks across splits. The whole stage is a pure function of
(samples, config, seed).
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

from .errors import SplitError
from .generation import QASample
from .validation import Verdict

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BalanceConfig:
    min_support: float = 0.01
    max_spread: float = 0.10
    weight_grounding: float = 0.5
    weight_depth: float = 0.5
    split_ratios: tuple[float, ...] = (0.8, 0.2)
    seed: int = 0
    parent_map: dict = field(default_factory=dict, hash=False)

    def __post_init__(self):
        if abs(sum(self.split_ratios) - 1.0) > 1e-9:
            raise ValueError("split ratios must sum to 1")
        if self.weight_grounding < 0 or self.weight_depth < 0:
            raise ValueError("weights must be non-negative")
        if self.weight_grounding + self.weight_depth <= 0:
            raise ValueError("at least one weight must be positive")


SPLIT_NAMES = {2: ("train", "val"), 3: ("train", "val", "test")}


def category_counts(samples: list[QASample]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for s in samples:
        counts[s.category] = counts.get(s.category, 0) + 1
    return counts


def merge_low_support(samples: list[QASample], config: BalanceConfig) -> list[QASample]:
    """Reassign categories below min_support to their configured parent,
    or drop their samples (status balanced_out) when no parent is declared."""
    total = len(samples)
    if total == 0:
        return []
    counts = category_counts(samples)
    low = {c for c, n in counts.items() if n / total < config.min_support}
    kept = []
    for sample in samples:
        if sample.category in low:
            parent = config.parent_map.get(sample.category)
            if parent is None:
                sample.status = "balanced_out"
                continue
            sample.category = parent
        kept.append(sample)
    return kept


def sample_weight(sample: QASample, verdict: Verdict | None,
                  config: BalanceConfig) -> float:
    """alpha*grounding + beta*(level-1)/4; higher weight survives longer."""
    if verdict is None or verdict.grounding_score is None:
        log.warning("sample %s missing grounding score, using 0", sample.sample_id)
        g = 0.0
    else:
        g = verdict.grounding_score
    return config.weight_grounding * g + config.weight_depth * (sample.level - 1) / 4.0


def undersample(samples: list[QASample], config: BalanceConfig,
                verdicts: dict[str, Verdict] | None = None) -> list[QASample]:
    """Cap every category at floor(min_count / (1 - max_spread)).

    Removals pick the lowest-weight samples first (ties broken by a seeded
    shuffle) and are marked balanced_out, never deleted.
    """
    verdicts = verdicts or {}
    counts = category_counts(samples)
    if len(counts) < 2:
        log.warning("undersample: fewer than 2 categories, nothing to balance")
        return list(samples)
    # cap = floor(m / (1 - spread)) is the largest max satisfying
    # (max - m) / max <= spread; a ceiling here can overshoot by one.
    cap = math.floor(min(counts.values()) / (1.0 - config.max_spread) + 1e-9)

    rng = random.Random(config.seed)
    tiebreak = {s.sample_id: rng.random() for s in sorted(samples, key=lambda s: s.sample_id)}

    keep_ids: set[str] = set()
    by_category: dict[str, list[QASample]] = {}
    for s in samples:
        by_category.setdefault(s.category, []).append(s)
    for category, members in by_category.items():
        ranked = sorted(
            members,
            key=lambda s: (-sample_weight(s, verdicts.get(s.sample_id), config),
                           tiebreak[s.sample_id]),
        )
        keep_ids.update(s.sample_id for s in ranked[:cap])

    kept = []
    for sample in samples:
        if sample.sample_id in keep_ids:
            kept.append(sample)
        else:
            sample.status = "balanced_out"
    return kept


def split(samples: list[QASample], ratios: tuple[float, ...], seed: int) -> dict[str, list[QASample]]:
    """Partition by image group so all questions of an image share a split."""
    image_ids = sorted({s.image_id for s in samples})
    if len(image_ids) < len(ratios):
        raise SplitError(f"{len(image_ids)} image groups < {len(ratios)} splits")
    names = SPLIT_NAMES.get(len(ratios)) or tuple(f"split{i}" for i in range(len(ratios)))

    rng = random.Random(seed)
    rng.shuffle(image_ids)
    n = len(image_ids)
    sizes = [math.floor(r * n) for r in ratios]
    remainders = sorted(range(len(ratios)), key=lambda i: (ratios[i] * n) % 1.0, reverse=True)
    for i in remainders[: n - sum(sizes)]:
        sizes[i] += 1

    assignment: dict[str, str] = {}
    start = 0
    for name, size in zip(names, sizes):
        for image_id in image_ids[start:start + size]:
            assignment[image_id] = name
        start += size

    splits: dict[str, list[QASample]] = {name: [] for name in names}
    for sample in samples:
        splits[assignment[sample.image_id]].append(sample)
    return splits


EXPORT_FIELDS = ("sample_id", "image_id", "question", "answers", "category",
                 "level", "pass_count", "grounding_score", "split")


def config_hash(config: BalanceConfig) -> str:
    payload = json.dumps({
        "min_support": config.min_support,
        "max_spread": config.max_spread,
        "weight_grounding": config.weight_grounding,
        "weight_depth": config.weight_depth,
        "split_ratios": list(config.split_ratios),
        "parent_map": config.parent_map,
    }, sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def export(splits: dict[str, list[QASample]], path: str | Path,
           verdicts: dict[str, Verdict] | None = None,
           config: BalanceConfig | None = None) -> list[Path]:
    """One JSONL file per split plus a manifest with counts, hash, and seed."""
    if not splits or all(not v for v in splits.values()):
        raise ValueError("nothing to export")
    verdicts = verdicts or {}
    config = config or BalanceConfig()
    out_dir = Path(path)
    out_dir.mkdir(parents=True, exist_ok=True)

    written = []
    per_category: dict[str, int] = {}
    per_level: dict[str, int] = {}
    totals: dict[str, int] = {}
    for name, members in splits.items():
        file_path = out_dir / f"{name}.jsonl"
        with open(file_path, "w", encoding="utf-8") as fh:
            for sample in sorted(members, key=lambda s: s.sample_id):
                verdict = verdicts.get(sample.sample_id)
                row = {
                    "sample_id": sample.sample_id,
                    "image_id": sample.image_id,
                    "question": sample.question,
                    "answers": sample.answers,
                    "category": sample.category,
                    "level": sample.level,
                    "pass_count": verdict.pass_count if verdict else None,
                    "grounding_score": verdict.grounding_score if verdict else None,
                    "split": name,
                }
                fh.write(json.dumps(row, ensure_ascii=False) + "\n")
                sample.status = "exported"
                per_category[sample.category] = per_category.get(sample.category, 0) + 1
                per_level[str(sample.level)] = per_level.get(str(sample.level), 0) + 1
        totals[name] = len(members)
        written.append(file_path)

    manifest = {
        "totals": {name: totals[name] for name in sorted(totals)},
        "total": sum(totals.values()),
        "per_category": {k: per_category[k] for k in sorted(per_category)},
        "per_level": {k: per_level[k] for k in sorted(per_level)},
        "config_hash": config_hash(config),
        "seed": config.seed,
    }
    manifest_path = out_dir / "manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(manifest_path)
    return written
