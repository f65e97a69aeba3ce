"""HTTP review API serving human-validation batches over an exported run.

The API never mutates dataset files: ratings live in ratings.jsonl, an
append-only log that is replayed on startup. Duplicate ratings overwrite
the stored value and leave an audit entry in the log.
"""
from __future__ import annotations

import json
import random
import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from pydantic import BaseModel, Field

from .config import REVIEW_CRITERIA, PipelineConfig, RunPaths
from .corpus import load_store
from .metrics import RatingRecord, krippendorff_alpha
from .pipeline import run_stats


class RatingIn(BaseModel):
    annotator_id: str
    sample_id: str
    criterion: str
    rating: int | None = Field(default=None, ge=1, le=5)  # None = cannot judge


class RatingStore:
    """Replayable log + in-memory index keyed (annotator, sample, criterion)."""

    def __init__(self, path: Path):
        self.path = path
        self.lock = threading.Lock()
        self.ratings: dict[tuple[str, str, str], int | None] = {}
        self.audit_count = 0
        if path.exists():
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    obj = json.loads(line)
                    if obj.get("audit"):
                        self.audit_count += 1
                        continue
                    key = (obj["annotator_id"], obj["sample_id"], obj["criterion"])
                    self.ratings[key] = obj["rating"]

    def put(self, annotator_id: str, sample_id: str, criterion: str, rating: int | None) -> bool:
        """Returns True when this overwrote an existing rating."""
        key = (annotator_id, sample_id, criterion)
        with self.lock:
            overwrote = key in self.ratings
            entries = []
            if overwrote:
                entries.append({"audit": True, "annotator_id": annotator_id,
                                "sample_id": sample_id, "criterion": criterion,
                                "previous": self.ratings[key]})
                self.audit_count += 1
            entries.append({"annotator_id": annotator_id, "sample_id": sample_id,
                            "criterion": criterion, "rating": rating})
            self.ratings[key] = rating
            with open(self.path, "a", encoding="utf-8") as fh:
                for entry in entries:
                    fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
        return overwrote

    def records_for(self, criterion: str) -> list[RatingRecord]:
        return [RatingRecord(a, s, c, r)
                for (a, s, c), r in self.ratings.items()
                if c == criterion and r is not None]


def _load_export_samples(paths: RunPaths) -> dict[str, dict]:
    samples: dict[str, dict] = {}
    for file in sorted(paths.export_dir.glob("*.jsonl")):
        with open(file, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    obj = json.loads(line)
                    samples[obj["sample_id"]] = obj
    return samples


def draw_review_subset(sample_ids: list[str], size: int, seed: int) -> list[str]:
    """Seeded random subset in a stable review order; same on every restart."""
    ordered = sorted(sample_ids)
    rng = random.Random(seed)
    if size >= len(ordered):
        rng.shuffle(ordered)
        return ordered
    return rng.sample(ordered, size)


def create_app(run_dir: str | Path, config: PipelineConfig) -> FastAPI:
    paths = RunPaths(run_dir)
    samples = _load_export_samples(paths)
    if not samples:
        raise RuntimeError("serve requires an exported run")
    store = load_store(paths.records)
    uris = {r.image_id: r.uri for r in store.records.values()}
    subset = draw_review_subset(list(samples), config.review.subset_size, config.review.seed)
    annotators = set(config.review.annotators)
    ratings = RatingStore(paths.ratings)

    app = FastAPI(title="vqagen review API")

    def check_annotator(annotator_id: str) -> None:
        if annotators and annotator_id not in annotators:
            raise HTTPException(status_code=403,
                                detail={"code": "unknown_annotator", "message": annotator_id})

    def card(sample_id: str) -> dict:
        obj = samples[sample_id]
        return {
            "sample_id": sample_id,
            "image_uri": uris.get(obj["image_id"], ""),
            "question": obj["question"],
            "answers": obj["answers"],
            "level": obj["level"],
            "category": obj["category"],
        }

    @app.get("/review/next")
    def review_next(annotator: str = Query(...)):
        check_annotator(annotator)
        for sample_id in subset:
            rated = sum((annotator, sample_id, c) in ratings.ratings for c in REVIEW_CRITERIA)
            if rated < len(REVIEW_CRITERIA):
                return {"done": False, "card": card(sample_id),
                        "rated_criteria": rated}
        return {"done": True, "card": None}

    @app.post("/review/rating")
    def review_rating(body: RatingIn):
        check_annotator(body.annotator_id)
        if body.criterion not in REVIEW_CRITERIA:
            raise HTTPException(status_code=400,
                                detail={"code": "bad_criterion", "message": body.criterion})
        if body.sample_id not in samples:
            raise HTTPException(status_code=400,
                                detail={"code": "unknown_sample", "message": body.sample_id})
        overwrote = ratings.put(body.annotator_id, body.sample_id, body.criterion, body.rating)
        return {"stored": True, "overwrote": overwrote}

    @app.get("/review/progress")
    def review_progress():
        per_annotator = {}
        for annotator in sorted(annotators) or []:
            complete = sum(
                all((annotator, sid, c) in ratings.ratings for c in REVIEW_CRITERIA)
                for sid in subset
            )
            rated = sum((annotator, sid, c) in ratings.ratings
                        for sid in subset for c in REVIEW_CRITERIA)
            per_annotator[annotator] = {"completed_samples": complete, "ratings": rated}
        return {"subset_size": len(subset), "per_annotator": per_annotator}

    @app.get("/review/agreement")
    def review_agreement():
        result = {}
        for criterion in REVIEW_CRITERIA:
            alpha = krippendorff_alpha(ratings.records_for(criterion), level="ordinal")
            result[criterion] = alpha
        return result

    @app.get("/stats")
    def stats():
        return run_stats(run_dir)

    return app
