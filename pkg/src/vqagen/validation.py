"""Post-generation quality control.

Every sane sample is scored by an odd ensemble of judges on 18 criteria.
Each judge's scores are binarized against that judge's own batch median per
criterion (rank-based, so verdicts survive any monotone rescaling of a
judge), criteria are decided by majority vote, and a sample is retained iff
at least 9 of the 18 criteria pass.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from .errors import ConfigError
from .generation import QASample, dedupe, validate_sample
from .errors import ParseError

log = logging.getLogger(__name__)

RETENTION_MIN_PASSES = 9
CRITERIA_COUNT = 18

GROUPS = ("visual_quality", "contextual_complexity", "linguistic_quality", "grounding_reasoning")

VISUAL_GROUNDING_ID = "visual_grounding"


@dataclass(frozen=True)
class Criterion:
    criterion_id: str
    name: str
    group: str
    definition: str
    higher_is_better: bool = True
    mandatory: bool = False


def default_criteria() -> list[Criterion]:
    """The 18-criterion registry, grouped into four categories.

    The last three entries are configurable fill-in slots; swap them via
    CriteriaRegistry(entries=...) if a deployment defines its own.
    """
    vq = [
        ("image_clarity", "Image clarity", "The image is sharp and well exposed enough to answer from."),
        ("object_occlusion", "Object occlusion", "Objects the question refers to are visible rather than occluded."),
        ("discriminability", "Discriminability", "Similar entities in the image can be told apart."),
    ]
    cc = [
        ("object_density", "Object density", "The scene contains enough objects to support the question."),
        ("interaction_level", "Interaction level", "Depicted interactions support the reasoning the question needs."),
        ("scene_clutter", "Scene clutter", "Clutter does not prevent answering the question."),
    ]
    lq = [
        ("grammatical_correctness", "Grammatical correctness", "Question and answers are grammatical."),
        ("semantic_unambiguity", "Semantic unambiguity", "The question has a single clear meaning."),
        ("qa_structural_validity", "QA structural validity", "Answers are well-formed responses to the question."),
        ("syntactic_diversity", "Syntactic diversity", "Phrasing is not a trivial template repeat."),
        ("question_type_fit", "Question-type distribution fit", "The question matches its assigned category."),
        ("language_naturalness", "Language naturalness", "The text reads like natural native usage."),
        ("bias_sensitivity", "Bias sensitivity", "The sample is free of subjective or culturally biased framing."),
    ]
    gr = [
        ("visual_grounding", "Visual grounding score", "Answering genuinely requires the image, not language priors."),
        ("reasoning_depth_consistency", "Reasoning depth consistency", "The sample matches its assigned reasoning level."),
        ("answer_consensus", "Answer consensus", "The five answers agree with each other where they should."),
        ("answer_length_validity", "Answer length validity", "Answers are concise (1-10 words) and natural at that length."),
        ("caption_entailment", "Caption-question entailment", "The captions entail the question's presuppositions."),
    ]
    entries = []
    for group, rows in (("visual_quality", vq), ("contextual_complexity", cc),
                        ("linguistic_quality", lq), ("grounding_reasoning", gr)):
        for cid, name, definition in rows:
            entries.append(Criterion(cid, name, group, definition))
    return entries


@dataclass
class CriteriaRegistry:
    entries: list[Criterion] = field(default_factory=default_criteria)

    def __post_init__(self):
        if len(self.entries) != CRITERIA_COUNT:
            raise ConfigError(f"registry must have {CRITERIA_COUNT} criteria, got {len(self.entries)}")
        ids = [c.criterion_id for c in self.entries]
        if len(set(ids)) != len(ids):
            raise ConfigError("criterion ids must be unique")
        for c in self.entries:
            if c.group not in GROUPS:
                raise ConfigError(f"unknown group {c.group}")

    @property
    def ids(self) -> set[str]:
        return {c.criterion_id for c in self.entries}

    def by_id(self, criterion_id: str) -> Criterion:
        for c in self.entries:
            if c.criterion_id == criterion_id:
                return c
        raise KeyError(criterion_id)


@dataclass
class JudgeResponse:
    endpoint_id: str
    sample_id: str
    scores: dict[str, float]


@dataclass
class ScoreMatrix:
    sample_id: str
    rows: list[JudgeResponse] = field(default_factory=list)

    @property
    def quorum(self) -> int:
        return len(self.rows)


@dataclass
class Verdict:
    sample_id: str
    criterion_pass: dict[str, bool]
    pass_count: int
    retained: bool
    grounding_score: float | None = None


def required_quorum(ensemble_size: int) -> int:
    return math.ceil(ensemble_size / 2)


def _median(values: list[float]) -> float:
    ordered = sorted(values)
    n = len(ordered)
    mid = n // 2
    if n % 2 == 1:
        return ordered[mid]
    return (ordered[mid - 1] + ordered[mid]) / 2.0


def compute_thresholds(matrices: list[ScoreMatrix], registry: CriteriaRegistry,
                       pooled: bool = False) -> dict[tuple[str, str], float]:
    """Median per (criterion, judge) over the whole batch.

    pooled=True collapses judges into a single pooled median per criterion
    (stored under endpoint_id "*"), for fidelity experiments.
    """
    collected: dict[tuple[str, str], list[float]] = {}
    for matrix in matrices:
        for row in matrix.rows:
            for cid, score in row.scores.items():
                key = (cid, "*" if pooled else row.endpoint_id)
                collected.setdefault(key, []).append(score)
    return {key: _median(vals) for key, vals in collected.items()}


def binarize_and_vote(matrix: ScoreMatrix, thresholds: dict[tuple[str, str], float],
                      registry: CriteriaRegistry, ensemble_size: int,
                      pooled: bool = False) -> Verdict | None:
    """Majority-vote a sample's criteria; None when quorum fails (undecided).

    A judge's vote passes when its score meets its own median (ties pass,
    direction flipped for lower-is-better criteria); a criterion passes with
    strictly more than half of the voting judges; judges without a threshold
    for a criterion abstain on it.
    """
    if matrix.quorum < required_quorum(ensemble_size):
        return None
    criterion_pass: dict[str, bool] = {}
    for criterion in registry.entries:
        cid = criterion.criterion_id
        votes = []
        for row in matrix.rows:
            key = (cid, "*" if pooled else row.endpoint_id)
            threshold = thresholds.get(key)
            if threshold is None or cid not in row.scores:
                continue  # abstention: shrinks the denominator
            score = row.scores[cid]
            passed = score >= threshold if criterion.higher_is_better else score <= threshold
            votes.append(passed)
        criterion_pass[cid] = bool(votes) and sum(votes) * 2 > len(votes)
    pass_count = sum(criterion_pass.values())
    retained = pass_count >= RETENTION_MIN_PASSES
    for criterion in registry.entries:
        if criterion.mandatory and not criterion_pass[criterion.criterion_id]:
            retained = False
    grounding_scores = [row.scores[VISUAL_GROUNDING_ID]
                        for row in matrix.rows if VISUAL_GROUNDING_ID in row.scores]
    grounding = sum(grounding_scores) / len(grounding_scores) if grounding_scores else None
    return Verdict(sample_id=matrix.sample_id, criterion_pass=criterion_pass,
                   pass_count=pass_count, retained=retained, grounding_score=grounding)


def sanity_filter(samples: list[QASample]) -> tuple[list[QASample], list[QASample]]:
    """Drop malformed samples and duplicates; survivors become 'sane'."""
    well_formed: list[QASample] = []
    removed: list[QASample] = []
    for sample in samples:
        try:
            validate_sample(sample)
        except ParseError as exc:
            sample.status = "rejected"
            sample.rejection_reason = f"malformed:{exc.rule}"
            removed.append(sample)
            continue
        well_formed.append(sample)
    kept, duplicates = dedupe(well_formed)
    for sample in duplicates:
        sample.status = "rejected"
        sample.rejection_reason = "duplicate"
        removed.append(sample)
    for sample in kept:
        sample.status = "sane"
    return kept, removed


@dataclass
class QCResult:
    retained: list[QASample]
    rejected: list[QASample]
    undecided: list[QASample]
    verdicts: dict[str, Verdict]
    matrices: list[ScoreMatrix]
    report: dict


def run_qc(samples: list[QASample], judges: list, registry: CriteriaRegistry,
           image_uris: dict[str, str] | None = None, pooled: bool = False) -> QCResult:
    """Full QC stage: sanity filter, ensemble scoring, thresholds, verdicts.

    `judges` is a list of objects exposing
    judge(sample, image_uri, registry) -> JudgeResponse; a judge that raises
    abstains on that sample. Ensemble size must be odd (2n+1, n >= 1).
    """
    ensemble_size = len(judges)
    if ensemble_size < 3 or ensemble_size % 2 == 0:
        raise ConfigError(f"ensemble size must be odd and >= 3, got {ensemble_size}")
    image_uris = image_uris or {}

    sane, sanity_removed = sanity_filter(samples)

    matrices = []
    for sample in sane:
        matrix = ScoreMatrix(sample_id=sample.sample_id)
        for judge in judges:
            try:
                matrix.rows.append(judge.judge(sample, image_uris.get(sample.image_id, ""), registry))
            except Exception as exc:
                log.warning("judge abstained on %s: %s", sample.sample_id, exc)
        matrices.append(matrix)
        sample.status = "scored"

    thresholds = compute_thresholds(matrices, registry, pooled=pooled)

    retained, rejected, undecided = [], [], []
    verdicts: dict[str, Verdict] = {}
    for sample, matrix in zip(sane, matrices):
        verdict = binarize_and_vote(matrix, thresholds, registry, ensemble_size, pooled=pooled)
        if verdict is None:
            sample.status = "scored"
            undecided.append(sample)
            continue
        verdicts[sample.sample_id] = verdict
        if verdict.retained:
            sample.status = "retained"
            retained.append(sample)
        else:
            sample.status = "rejected"
            sample.rejection_reason = f"pass_count={verdict.pass_count}"
            rejected.append(sample)

    decided = len(retained) + len(rejected)
    per_criterion = {
        c.criterion_id: (sum(v.criterion_pass[c.criterion_id] for v in verdicts.values()) / decided
                         if decided else 0.0)
        for c in registry.entries
    }
    report = {
        "input_count": len(samples),
        "sanity_removed": len(sanity_removed),
        "scored": len(sane),
        "retained": len(retained),
        "rejected": len(rejected),
        "undecided": len(undecided),
        "retention_rate": len(retained) / decided if decided else 0.0,
        "per_criterion_pass_rate": per_criterion,
    }
    rejected_all = sanity_removed + rejected
    return QCResult(retained=retained, rejected=rejected_all, undecided=undecided,
                    verdicts=verdicts, matrices=matrices, report=report)
