"""Evaluation metrics for generated answers plus inter-annotator agreement.

Tokenization is whitespace splitting after Unicode NFC normalization,
case-folding, and stripping punctuation at token edges; no Vietnamese word
segmentation is applied, so all scores are reproducible without external
models. Sentence BLEU uses add-one smoothing on zero n-gram precisions and
CIDEr is the CIDEr-D variant (length gaussian sigma=6, scale 10); both
choices are declared in report headers.
"""
from __future__ import annotations

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass

METRIC_VARIANTS = {
    "bleu": "sentence-bleu,max_n=4,add-one-smoothing",
    "cider": "cider-d,sigma=6,scale=10",
    "tokenization": "nfc+casefold+edge-punct-strip+whitespace",
}

_EDGE_PUNCT = ".,!?;:\"'()[]{}…“”‘’"


def normalize(text: str) -> str:
    folded = unicodedata.normalize("NFC", text).casefold()
    tokens = [t.strip(_EDGE_PUNCT) for t in folded.split()]
    return " ".join(t for t in tokens if t)


def tokens(text: str) -> list[str]:
    return normalize(text).split()


@dataclass(frozen=True)
class EvalPair:
    sample_id: str
    prediction: str
    references: tuple[str, ...]

    def __post_init__(self):
        if not self.references:
            raise ValueError("references must be non-empty")
        if len(self.references) > 5:
            raise ValueError("at most 5 references")


@dataclass(frozen=True)
class RatingRecord:
    annotator_id: str
    sample_id: str
    criterion: str
    rating: int


def consensus_accuracy(pair: EvalPair) -> float:
    """min(matching references / 3, 1): the multi-annotator VQA convention."""
    pred = normalize(pair.prediction)
    matches = sum(1 for ref in pair.references if normalize(ref) == pred)
    return min(matches / 3.0, 1.0)


def exact_match(pair: EvalPair) -> float:
    pred = normalize(pair.prediction)
    return 1.0 if any(normalize(ref) == pred for ref in pair.references) else 0.0


def token_prf(prediction: str, references: list[str] | tuple[str, ...] | str) -> tuple[float, float, float]:
    """Multiset token overlap P/R/F1; with several references, the one
    maximizing F1 wins."""
    if isinstance(references, str):
        references = [references]
    pred_tokens = tokens(prediction)
    best = (0.0, 0.0, 0.0)
    for reference in references:
        ref_tokens = tokens(reference)
        overlap = sum((Counter(pred_tokens) & Counter(ref_tokens)).values())
        precision = overlap / len(pred_tokens) if pred_tokens else 0.0
        recall = overlap / len(ref_tokens) if ref_tokens else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        if f1 > best[2] or (f1 == best[2] and precision > best[0]):
            best = (precision, recall, f1)
    return best


def _ngrams(toks: list[str], n: int) -> Counter:
    return Counter(tuple(toks[i:i + n]) for i in range(len(toks) - n + 1))


def bleu(prediction: str, references: list[str] | tuple[str, ...], max_n: int = 4) -> float:
    """Sentence BLEU: clipped n-gram precisions, geometric mean, brevity
    penalty against the closest reference length, add-one smoothing on any
    zero precision."""
    pred_tokens = tokens(prediction)
    ref_token_lists = [tokens(r) for r in references]
    c = len(pred_tokens)
    if c == 0:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_n + 1):
        pred_ngrams = _ngrams(pred_tokens, n)
        clipped = 0
        total = sum(pred_ngrams.values())
        if total:
            max_ref = Counter()
            for ref_toks in ref_token_lists:
                ref_ngrams = _ngrams(ref_toks, n)
                for gram, count in ref_ngrams.items():
                    max_ref[gram] = max(max_ref[gram], count)
            clipped = sum(min(count, max_ref[gram]) for gram, count in pred_ngrams.items())
        if total and clipped:
            precision = clipped / total
        else:
            precision = (clipped + 1) / (total + 1)
        log_sum += math.log(precision)
    geo_mean = math.exp(log_sum / max_n)
    r = min((len(rt) for rt in ref_token_lists),
            key=lambda rl: (abs(rl - c), rl))
    bp = 1.0 if c >= r else math.exp(1.0 - r / c)
    return bp * geo_mean


def _lcs_length(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0] * (len(b) + 1)
        for j, y in enumerate(b, start=1):
            cur[j] = prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1])
        prev = cur
    return prev[-1]


def rouge_l(prediction: str, references: list[str] | tuple[str, ...] | str) -> float:
    """LCS F-measure; max over references."""
    if isinstance(references, str):
        references = [references]
    pred_tokens = tokens(prediction)
    best = 0.0
    for reference in references:
        ref_tokens = tokens(reference)
        lcs = _lcs_length(pred_tokens, ref_tokens)
        p = lcs / len(pred_tokens) if pred_tokens else 0.0
        r = lcs / len(ref_tokens) if ref_tokens else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        best = max(best, f)
    return best


CIDER_SIGMA = 6.0
CIDER_SCALE = 10.0
CIDER_MAX_N = 4


def cider(batch: list[EvalPair]) -> tuple[dict[str, float], float]:
    """CIDEr-D over a batch: per n in 1..4, TF-IDF weighted clipped n-gram
    vectors, cosine against each reference with a length gaussian penalty,
    averaged over references and n, scaled by 10.

    IDF uses document frequency over the batch's reference sets; a batch of
    size 1 therefore has all-zero IDFs and scores 0.
    """
    if not batch:
        raise ValueError("batch must be non-empty")
    size = len(batch)
    df: list[Counter] = [Counter() for _ in range(CIDER_MAX_N)]
    for pair in batch:
        for n in range(1, CIDER_MAX_N + 1):
            seen: set = set()
            for ref in pair.references:
                seen.update(_ngrams(tokens(ref), n).keys())
            for gram in seen:
                df[n - 1][gram] += 1

    def tfidf(counter: Counter, n: int) -> dict:
        vec = {}
        for gram, count in counter.items():
            d = df[n - 1].get(gram, 0)
            idf = math.log(size / d) if d else math.log(size)
            vec[gram] = count * idf
        return vec

    def norm(vec: dict) -> float:
        return math.sqrt(sum(v * v for v in vec.values()))

    scores: dict[str, float] = {}
    for pair in batch:
        pred_tokens = tokens(pair.prediction)
        per_n = []
        for n in range(1, CIDER_MAX_N + 1):
            pred_counts = _ngrams(pred_tokens, n)
            ref_sims = []
            for ref in pair.references:
                ref_tokens = tokens(ref)
                ref_counts = _ngrams(ref_tokens, n)
                # CIDEr-D clips prediction counts at the reference's counts
                clipped = Counter({g: min(c, ref_counts.get(g, 0)) for g, c in pred_counts.items()})
                pred_vec = tfidf(clipped, n)
                ref_vec = tfidf(ref_counts, n)
                denom = norm(tfidf(pred_counts, n)) * norm(ref_vec)
                dot = sum(v * ref_vec.get(g, 0.0) for g, v in pred_vec.items())
                sim = dot / denom if denom else 0.0
                delta = len(pred_tokens) - len(ref_tokens)
                penalty = math.exp(-(delta * delta) / (2 * CIDER_SIGMA ** 2))
                ref_sims.append(penalty * sim)
            per_n.append(sum(ref_sims) / len(ref_sims))
        scores[pair.sample_id] = CIDER_SCALE * sum(per_n) / CIDER_MAX_N
    if size == 1:
        import logging
        logging.getLogger(__name__).warning("cider on a batch of 1: all IDFs are 0")
        scores = {k: 0.0 for k in scores}
    mean = sum(scores.values()) / len(scores)
    return scores, mean


def krippendorff_alpha(ratings: list[RatingRecord], level: str = "ordinal") -> float | None:
    """Krippendorff's alpha over one criterion's ratings.

    Returns None (undefined) when no item is rated by two or more
    annotators or when expected disagreement is zero with observed zero
    (perfect agreement returns 1.0).
    """
    criteria = {r.criterion for r in ratings}
    if len(criteria) > 1:
        raise ValueError(f"ratings span multiple criteria: {sorted(criteria)}")

    by_item: dict[str, list[int]] = {}
    for r in ratings:
        by_item.setdefault(r.sample_id, []).append(r.rating)
    units = {item: vals for item, vals in by_item.items() if len(vals) >= 2}
    if not units:
        return None

    values = sorted({v for vals in units.values() for v in vals})
    index = {v: i for i, v in enumerate(values)}
    k = len(values)

    # coincidence matrix
    o = [[0.0] * k for _ in range(k)]
    for vals in units.values():
        m = len(vals)
        for i, a in enumerate(vals):
            for j, b in enumerate(vals):
                if i != j:
                    o[index[a]][index[b]] += 1.0 / (m - 1)
    n_c = [sum(row) for row in o]
    n_total = sum(n_c)
    if n_total <= 1:
        return None

    if level == "ordinal":
        def delta(ci: int, cj: int) -> float:
            lo, hi = min(ci, cj), max(ci, cj)
            s = sum(n_c[g] for g in range(lo, hi + 1)) - (n_c[lo] + n_c[hi]) / 2.0
            return s * s
    elif level == "nominal":
        def delta(ci: int, cj: int) -> float:
            return 0.0 if ci == cj else 1.0
    elif level == "interval":
        def delta(ci: int, cj: int) -> float:
            return float((values[ci] - values[cj]) ** 2)
    else:
        raise ValueError(f"unknown level {level}")

    d_o = sum(o[i][j] * delta(i, j) for i in range(k) for j in range(k)) / n_total
    d_e = sum(n_c[i] * n_c[j] * delta(i, j) for i in range(k) for j in range(k)) / (n_total * (n_total - 1))
    if d_e == 0.0:
        return 1.0 if d_o == 0.0 else None
    return 1.0 - d_o / d_e


def evaluate_batch(pairs: list[EvalPair]) -> dict:
    """Full metric report over a prediction batch; columns mirror the usual
    Acc/Prec/Rec/F1/BLEU/ROUGE/CIDEr layout, with accuracy reported both as
    strict exact match and as consensus min(k/3, 1)."""
    if not pairs:
        raise ValueError("no pairs to evaluate")
    per_sample = {}
    cider_scores, cider_mean = cider(pairs)
    agg = {"acc_exact": 0.0, "acc_consensus": 0.0, "precision": 0.0,
           "recall": 0.0, "f1": 0.0, "bleu": 0.0, "rouge_l": 0.0}
    for pair in pairs:
        p, r, f = token_prf(pair.prediction, pair.references)
        row = {
            "acc_exact": exact_match(pair),
            "acc_consensus": consensus_accuracy(pair),
            "precision": p,
            "recall": r,
            "f1": f,
            "bleu": bleu(pair.prediction, pair.references),
            "rouge_l": rouge_l(pair.prediction, pair.references),
            "cider": cider_scores[pair.sample_id],
        }
        per_sample[pair.sample_id] = row
        for key in agg:
            agg[key] += row[key]
    n = len(pairs)
    report = {
        "variants": METRIC_VARIANTS,
        "count": n,
        "mean": {**{k: v / n for k, v in agg.items()}, "cider": cider_mean},
    }
    return {"report": report, "per_sample": per_sample}
