"""Stage orchestration over a run directory.

Stages advance monotonically (ingest -> generate -> qc -> balance ->
export); each persists its outputs and updates manifest.json so an
interrupted run resumes where it stopped.
"""
from __future__ import annotations

import json
import logging
import time
import uuid
from pathlib import Path

from . import balance as balance_mod
from . import corpus as corpus_mod
from .config import PipelineConfig, RunPaths, config_fingerprint
from .errors import NoFeasibleLevelError, ParseError, StageOrderError
from .gateway import Gateway, HttpChatProvider, MockProvider
from .generation import (GenerationRequest, build_context, build_prompt,
                         feasibility, parse_output, sample_from_dict,
                         sample_to_dict)
from .metrics import EvalPair, evaluate_batch
from .scheduler import (CategoryTable, SchedulerState, assign, record_accept,
                        select_category)
from .validation import CriteriaRegistry, Criterion, Verdict, default_criteria, run_qc

log = logging.getLogger(__name__)

STAGES = ("ingest", "generate", "qc", "balance", "export")


def load_manifest(paths: RunPaths) -> dict:
    if paths.manifest.exists():
        with open(paths.manifest, encoding="utf-8") as fh:
            return json.load(fh)
    return {"run_id": uuid.uuid4().hex, "config_hash": None, "seed": None, "stages": {}}


def save_manifest(paths: RunPaths, manifest: dict) -> None:
    with open(paths.manifest, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def require_stage(manifest: dict, stage: str) -> None:
    """Raise unless every stage before `stage` has completed."""
    for prior in STAGES[: STAGES.index(stage)]:
        if manifest["stages"].get(prior, {}).get("status") != "completed":
            raise StageOrderError(f"stage {stage!r} requires completed {prior!r}")


def complete_stage(paths: RunPaths, manifest: dict, stage: str, counts: dict) -> None:
    manifest["stages"][stage] = {
        "status": "completed",
        "counts": counts,
        "completed_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    save_manifest(paths, manifest)


def registry_from_config(config: PipelineConfig) -> CriteriaRegistry:
    entries = []
    for c in default_criteria():
        if c.criterion_id in config.mandatory_criteria:
            c = Criterion(c.criterion_id, c.name, c.group, c.definition,
                          c.higher_is_better, mandatory=True)
        entries.append(c)
    return CriteriaRegistry(entries=entries)


def make_gateway(config: PipelineConfig, endpoint, mock: bool | None = None) -> Gateway:
    use_mock = config.mock if mock is None else mock
    if use_mock:
        # distinct judges must disagree, so each gets its own derived seed
        provider = MockProvider(seed=f"{config.seed}:{endpoint.endpoint_id}")
    else:
        provider = HttpChatProvider(endpoint)
    return Gateway(endpoint, provider=provider)


def read_samples(path: Path) -> list:
    samples = []
    if path.exists():
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    samples.append(sample_from_dict(json.loads(line)))
    return samples


def write_samples(path: Path, samples: list) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sample in samples:
            fh.write(json.dumps(sample_to_dict(sample), ensure_ascii=False) + "\n")


def run_ingest(run_dir: str | Path, config: PipelineConfig,
               manifest_file: str | Path, texts_file: str | Path | None = None,
               canon_file: str | Path | None = None) -> dict:
    paths = RunPaths(run_dir)
    paths.corpus_dir.mkdir(parents=True, exist_ok=True)
    manifest = load_manifest(paths)
    manifest["config_hash"] = config_fingerprint(config)
    manifest["seed"] = config.seed

    store = corpus_mod.ingest_images(corpus_mod.load_manifest(manifest_file))
    if texts_file is not None:
        corpus_mod.attach_text(store, corpus_mod.load_texts(texts_file))
    if canon_file is not None:
        canon = corpus_mod.Canonicalizer(corpus_mod.load_canon_dict(canon_file))
        corpus_mod.canonicalize_store(store, canon)
    corpus_mod.save_store(store, paths.records)

    counts = {
        "records": len(store),
        "duplicates": store.duplicate_count,
        "rejected": store.rejected_count,
        "orphans": store.orphan_count,
    }
    complete_stage(paths, manifest, "ingest", counts)
    return counts


def run_generate(run_dir: str | Path, config: PipelineConfig,
                 count: int | None = None) -> dict:
    paths = RunPaths(run_dir)
    manifest = load_manifest(paths)
    require_stage(manifest, "generate")
    target_count = count if count is not None else config.generate_count

    store = corpus_mod.load_store(paths.records)
    records = [store.records[k] for k in sorted(store.records)]
    table = CategoryTable(priority=config.category_priority)
    gateway = make_gateway(config, config.generator_endpoint())

    committed = read_samples(paths.samples)
    state = SchedulerState(targets=config.targets)
    used: set[tuple[str, int, str]] = set()
    for sample in committed:
        state.counts[sample.level - 1] += 1
        used.add((sample.image_id, sample.level, sample.category))

    feasible_cache = {r.image_id: feasibility(r, table, config.context_budget)
                      for r in records if r.captions}
    usable = [r for r in records if r.image_id in feasible_cache
              and feasible_cache[r.image_id][0]]
    if not usable:
        raise NoFeasibleLevelError("no record supports any reasoning level")

    parse_failures = 0
    pointer = len(committed)
    with open(paths.samples, "a", encoding="utf-8") as sink:
        while len(committed) < target_count:
            record = usable[pointer % len(usable)]
            pointer += 1
            levels, categories = feasible_cache[record.image_id]
            level, category = assign(state, levels, categories, table)
            # avoid re-issuing an identical prompt for the same image where
            # an alternative category still admits the level
            if (record.image_id, level, category) in used:
                for alt in config.category_priority:
                    if alt in categories and table.admits(alt, level) \
                            and (record.image_id, level, alt) not in used:
                        category = alt
                        break
            request = GenerationRequest(
                image_id=record.image_id,
                context=build_context(record, budget=config.context_budget),
                level=level, category=category, language=config.language,
            )
            sample_id = f"s{len(committed):06d}"
            raw = gateway.complete(build_prompt(request), request_id=sample_id)
            try:
                sample = parse_output(raw, sample_id, record.image_id, category, level)
            except ParseError as exc:
                parse_failures += 1
                log.warning("generation parse failure (%s): %s", exc.rule, record.image_id)
                continue
            sink.write(json.dumps(sample_to_dict(sample), ensure_ascii=False) + "\n")
            sink.flush()
            committed.append(sample)
            record_accept(state, level)
            used.add((record.image_id, level, category))

    counts = {"samples": len(committed), "parse_failures": parse_failures,
              "per_level": {str(i + 1): c for i, c in enumerate(state.counts)}}
    complete_stage(paths, manifest, "generate", counts)
    return counts


def run_qc_stage(run_dir: str | Path, config: PipelineConfig) -> dict:
    paths = RunPaths(run_dir)
    manifest = load_manifest(paths)
    require_stage(manifest, "qc")

    samples = read_samples(paths.samples)
    store = corpus_mod.load_store(paths.records)
    image_uris = {r.image_id: r.uri for r in store.records.values()}
    registry = registry_from_config(config)
    judges = [make_gateway(config, ep) for ep in config.judge_endpoints()]

    result = run_qc(samples, judges, registry, image_uris=image_uris,
                    pooled=config.pooled_medians)

    with open(paths.scores, "w", encoding="utf-8") as fh:
        for matrix in result.matrices:
            for row in matrix.rows:
                fh.write(json.dumps({
                    "sample_id": row.sample_id,
                    "endpoint_id": row.endpoint_id,
                    "scores": row.scores,
                }, ensure_ascii=False) + "\n")
    with open(paths.verdicts, "w", encoding="utf-8") as fh:
        for sample_id in sorted(result.verdicts):
            v = result.verdicts[sample_id]
            fh.write(json.dumps({
                "sample_id": v.sample_id,
                "criterion_pass": v.criterion_pass,
                "pass_count": v.pass_count,
                "retained": v.retained,
                "grounding_score": v.grounding_score,
            }, ensure_ascii=False) + "\n")
    with open(paths.qc_report, "w", encoding="utf-8") as fh:
        json.dump(result.report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_samples(paths.samples, samples)

    counts = {k: result.report[k] for k in
              ("input_count", "sanity_removed", "retained", "rejected", "undecided")}
    complete_stage(paths, manifest, "qc", counts)
    return counts


def load_verdicts(paths: RunPaths) -> dict[str, Verdict]:
    verdicts: dict[str, Verdict] = {}
    if paths.verdicts.exists():
        with open(paths.verdicts, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                verdicts[obj["sample_id"]] = Verdict(
                    sample_id=obj["sample_id"],
                    criterion_pass=obj["criterion_pass"],
                    pass_count=obj["pass_count"],
                    retained=obj["retained"],
                    grounding_score=obj.get("grounding_score"),
                )
    return verdicts


def run_balance(run_dir: str | Path, config: PipelineConfig) -> dict:
    paths = RunPaths(run_dir)
    manifest = load_manifest(paths)
    require_stage(manifest, "balance")

    all_samples = read_samples(paths.samples)
    samples = [s for s in all_samples if s.status == "retained"]
    verdicts = load_verdicts(paths)

    merged = balance_mod.merge_low_support(samples, config.balance)
    kept = balance_mod.undersample(merged, config.balance, verdicts)
    splits = balance_mod.split(kept, config.balance.split_ratios, config.balance.seed)

    with open(paths.balanced, "w", encoding="utf-8") as fh:
        for name, members in splits.items():
            for sample in sorted(members, key=lambda s: s.sample_id):
                row = sample_to_dict(sample)
                row["split"] = name
                fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    write_samples(paths.samples, all_samples)

    counts = {"balanced": len(kept),
              "balanced_out": len(samples) - len(kept),
              "splits": {name: len(m) for name, m in splits.items()}}
    complete_stage(paths, manifest, "balance", counts)
    return counts


def run_export(run_dir: str | Path, config: PipelineConfig) -> dict:
    paths = RunPaths(run_dir)
    manifest = load_manifest(paths)
    require_stage(manifest, "export")

    splits: dict[str, list] = {}
    with open(paths.balanced, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            splits.setdefault(obj["split"], []).append(sample_from_dict(obj))
    verdicts = load_verdicts(paths)
    files = balance_mod.export(splits, paths.export_dir, verdicts, config.balance)

    exported_ids = {s.sample_id for members in splits.values() for s in members}
    all_samples = read_samples(paths.samples)
    for sample in all_samples:
        if sample.sample_id in exported_ids:
            sample.status = "exported"
    write_samples(paths.samples, all_samples)

    counts = {"files": len(files),
              "exported": sum(len(m) for m in splits.values())}
    complete_stage(paths, manifest, "export", counts)
    return counts


def run_evaluate(run_dir: str | Path, predictions_file: str | Path) -> dict:
    """Join predictions against the exported dataset and score them."""
    paths = RunPaths(run_dir)
    manifest = load_manifest(paths)
    if manifest["stages"].get("export", {}).get("status") != "completed":
        raise StageOrderError("evaluate requires a completed export")

    references: dict[str, list[str]] = {}
    for file in sorted(paths.export_dir.glob("*.jsonl")):
        with open(file, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    obj = json.loads(line)
                    references[obj["sample_id"]] = obj["answers"]

    pairs = []
    with open(predictions_file, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            refs = references.get(obj["sample_id"])
            if refs:
                pairs.append(EvalPair(obj["sample_id"], obj["prediction"], tuple(refs)))

    result = evaluate_batch(pairs)
    with open(paths.root / "eval_report.json", "w", encoding="utf-8") as fh:
        json.dump(result["report"], fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(paths.root / "eval_per_sample.jsonl", "w", encoding="utf-8") as fh:
        for sample_id in sorted(result["per_sample"]):
            fh.write(json.dumps({"sample_id": sample_id, **result["per_sample"][sample_id]},
                                ensure_ascii=False) + "\n")
    return result["report"]


def run_stats(run_dir: str | Path) -> dict:
    paths = RunPaths(run_dir)
    samples = read_samples(paths.samples)
    per_level: dict[str, int] = {}
    per_category: dict[str, int] = {}
    per_status: dict[str, int] = {}
    for s in samples:
        per_level[str(s.level)] = per_level.get(str(s.level), 0) + 1
        per_category[s.category] = per_category.get(s.category, 0) + 1
        per_status[s.status] = per_status.get(s.status, 0) + 1
    return {
        "samples": len(samples),
        "per_level": dict(sorted(per_level.items())),
        "per_category": dict(sorted(per_category.items())),
        "per_status": dict(sorted(per_status.items())),
        "stages": load_manifest(paths)["stages"],
    }
