"""Acceptance suite: one test per shipped guarantee, one printed line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the PASS/FAIL lines.
"""
import itertools
import json
import random
import time

import pytest

from test_metrics import (alpha_oracle, bleu_oracle, cider_oracle,
                          random_sentence, rouge_oracle)
from test_service import write_corpus
from conftest import make_sample
from vqagen import pipeline
from vqagen.balance import BalanceConfig, category_counts, split, undersample
from vqagen.config import load_config
from vqagen.metrics import (EvalPair, RatingRecord, bleu, cider,
                            consensus_accuracy, krippendorff_alpha, rouge_l,
                            token_prf)
from vqagen.scheduler import SchedulerState, record_accept, select_level
from vqagen.validation import (CriteriaRegistry, JudgeResponse, ScoreMatrix,
                               binarize_and_vote, compute_thresholds,
                               sanity_filter)

REGISTRY = CriteriaRegistry()
CIDS = [c.criterion_id for c in REGISTRY.entries]


def report(name, ok):
    print(f"\n[{'PASS' if ok else 'FAIL'}] {name}")
    assert ok, name


def test_scheduler_convergence():
    state = SchedulerState()
    feasible = {1, 2, 3, 4, 5}
    started = time.perf_counter()
    for _ in range(10000):
        record_accept(state, select_level(state, feasible))
    elapsed = time.perf_counter() - started
    empirical = [c / 10000 for c in state.counts]
    targets = (0.05, 0.24, 0.40, 0.24, 0.05)
    within = all(abs(e - t) <= 0.02 for e, t in zip(empirical, targets))
    report("scheduler convergence: 10k accepts within ±0.02 of targets, <5s",
           within and elapsed < 5.0)


# --- retention boundary and rank invariance -------------------------------

def matrix_from_votes(sample_id, votes, n_judges):
    """votes: dict criterion_id -> list[bool]; True scores 0.6, False 0.4."""
    rows = []
    for j in range(n_judges):
        scores = {cid: (0.6 if votes[cid][j] else 0.4) for cid in CIDS}
        rows.append(JudgeResponse(f"j{j}", sample_id, scores))
    return ScoreMatrix(sample_id=sample_id, rows=rows)


def fixed_thresholds(n_judges):
    return {(cid, f"j{j}"): 0.5 for cid in CIDS for j in range(n_judges)}


def vote_oracle(votes, n_judges):
    """Independent majority-vote and retention rule over raw vote patterns."""
    criterion_pass = {}
    for cid in CIDS:
        cast = votes[cid]
        criterion_pass[cid] = sum(cast) * 2 > len(cast)
    pass_count = sum(criterion_pass.values())
    return criterion_pass, pass_count, pass_count >= 9


def boundary_votes(k_passing, n_judges):
    return {cid: [i < k_passing] * n_judges for i, cid in enumerate(CIDS)}


def test_retention_boundary():
    ok = True
    for n_judges in (3, 5):
        for k, expect in ((9, True), (8, False)):
            votes = boundary_votes(k, n_judges)
            verdict = binarize_and_vote(matrix_from_votes("s0", votes, n_judges),
                                        fixed_thresholds(n_judges), REGISTRY, n_judges)
            _, pass_count, retained = vote_oracle(votes, n_judges)
            ok &= verdict.pass_count == pass_count == k
            ok &= verdict.retained is expect and retained is expect

    # size 3: every per-criterion vote pattern, exhaustively
    patterns = list(itertools.product([False, True], repeat=3))
    votes = {cid: list(patterns[i % 8]) for i, cid in enumerate(CIDS)}
    verdict = binarize_and_vote(matrix_from_votes("s1", votes, 3),
                                fixed_thresholds(3), REGISTRY, 3)
    oracle_pass, pass_count, retained = vote_oracle(votes, 3)
    ok &= verdict.criterion_pass == oracle_pass
    ok &= verdict.pass_count == pass_count and verdict.retained is retained

    # size 5: sampled random patterns against the oracle
    rng = random.Random(0)
    for trial in range(200):
        votes = {cid: [rng.random() < 0.5 for _ in range(5)] for cid in CIDS}
        verdict = binarize_and_vote(matrix_from_votes(f"s{trial}", votes, 5),
                                    fixed_thresholds(5), REGISTRY, 5)
        oracle_pass, pass_count, retained = vote_oracle(votes, 5)
        ok &= (verdict.criterion_pass == oracle_pass
               and verdict.pass_count == pass_count
               and verdict.retained is retained)
    report("retention boundary: 9 retains, 8 rejects; votes match oracle "
           "(size-3 exhaustive, size-5 sampled)", ok)


def random_batch(rng, n_samples, n_judges):
    matrices = []
    for i in range(n_samples):
        rows = [JudgeResponse(f"j{j}", f"s{i}",
                              {cid: rng.random() for cid in CIDS})
                for j in range(n_judges)]
        matrices.append(ScoreMatrix(sample_id=f"s{i}", rows=rows))
    return matrices


def verdict_table(matrices, n_judges):
    thresholds = compute_thresholds(matrices, REGISTRY)
    out = {}
    for m in matrices:
        v = binarize_and_vote(m, thresholds, REGISTRY, n_judges)
        out[m.sample_id] = (v.criterion_pass, v.pass_count, v.retained)
    return out


def test_rank_invariance():
    rng = random.Random(1)
    violations = 0
    for _ in range(1000):
        matrices = random_batch(rng, 12, 3)
        before = verdict_table(matrices, 3)
        target = f"j{rng.randrange(3)}"
        a = rng.uniform(0.2, 5.0)
        b = rng.uniform(-2.0, 2.0)
        p = rng.uniform(0.3, 3.0)
        for m in matrices:
            for row in m.rows:
                if row.endpoint_id == target:
                    row.scores = {cid: a * (s ** p) + b
                                  for cid, s in row.scores.items()}
        if verdict_table(matrices, 3) != before:
            violations += 1
    report("rank invariance: monotone rescaling of one judge, 1000 trials, "
           "0 verdict changes", violations == 0)


def test_sanity_filter_fixture():
    samples = []
    for i in range(59833):
        samples.append(make_sample(i, image_id=f"img{i % 3000:04d}",
                                   question=f"Câu hỏi duy nhất số {i}?"))
    for i in range(100):  # exact duplicates of early samples
        dup = make_sample(59833 + i, image_id=f"img{i % 3000:04d}",
                          question=f"Câu hỏi duy nhất số {i}?")
        samples.append(dup)
    for i in range(67):  # malformed: missing question mark
        samples.append(make_sample(59933 + i, question=f"Câu không có dấu {i}"))
    rng = random.Random(2)
    rng.shuffle(samples)

    started = time.perf_counter()
    kept, removed = sanity_filter(samples)
    elapsed = time.perf_counter() - started
    report("sanity filter: 60,000 samples, exactly 167 removed, <30s",
           len(samples) == 60000 and len(removed) == 167
           and len(kept) == 59833 and elapsed < 30.0)


def test_retention_ratio_fixture():
    high = {cid: 0.9 for cid in CIDS}
    low = {cid: 0.1 for cid in CIDS}
    matrices = []
    for i in range(60000):
        scores = high if i < 37000 else low
        rows = [JudgeResponse(f"j{j}", f"s{i}", scores) for j in range(3)]
        matrices.append(ScoreMatrix(sample_id=f"s{i}", rows=rows))
    thresholds = compute_thresholds(matrices, REGISTRY)
    retained = sum(
        binarize_and_vote(m, thresholds, REGISTRY, 3).retained for m in matrices)
    report("retention ratio: 60,000 mock-judged samples retain 37,000 ±1%",
           abs(retained - 37000) <= 600)


def test_balancing_properties():
    rng = random.Random(3)
    categories = ["yes_no", "causal", "counting", "spatial", "action",
                  "comparison", "relationship"]
    ok = True
    for trial in range(1000):
        counts = {c: rng.randint(1, 40)
                  for c in rng.sample(categories, rng.randint(2, 5))}
        seed = rng.randrange(10000)

        def run():
            samples = []
            i = 0
            for category, n in sorted(counts.items()):
                for _ in range(n):
                    samples.append(make_sample(i, question=f"Câu {i}?",
                                               category=category))
                    i += 1
            kept = undersample(samples, BalanceConfig(seed=seed))
            return kept, json.dumps([s.sample_id for s in kept]).encode()

        kept, payload = run()
        after = category_counts(kept)
        spread = (max(after.values()) - min(after.values())) / max(after.values())
        ok &= spread <= 0.10 + 1e-12
        ok &= all(after[c] <= counts[c] for c in after)
        ok &= payload == run()[1]
        if not ok:
            break
    report("balancing: 1000 random count vectors, spread ≤0.10, "
           "no count increase, seed-stable", ok)


def test_split_partitions():
    rng = random.Random(4)
    ok = True
    for trial in range(1000):
        n_images = rng.randint(10, 40)
        samples = []
        for i in range(n_images):
            for q in range(rng.randint(1, 3)):
                samples.append(make_sample(len(samples), image_id=f"img{i:04d}",
                                           question=f"Câu {i}-{q}?"))
        for ratios in ((0.8, 0.2), (0.8, 0.1, 0.1)):
            splits = split(samples, ratios, seed=rng.randrange(10000))
            owner = {}
            for name, members in splits.items():
                for s in members:
                    ok &= owner.setdefault(s.image_id, name) == name
            ok &= sum(len(v) for v in splits.values()) == len(samples)
        if not ok:
            break
    report("splits: 80/20 and 8:1:1 partition image groups exactly, "
           "1000 randomized corpora", ok)


def test_metric_oracles():
    rng = random.Random(5)
    ok = True
    for _ in range(100):
        pred = random_sentence(rng)
        refs = [random_sentence(rng) for _ in range(rng.randint(1, 3))]
        ok &= abs(bleu(pred, refs) - bleu_oracle(pred, refs)) <= 1e-9
        ok &= abs(rouge_l(pred, refs[0]) - rouge_oracle(pred, refs[0])) <= 1e-9
        p, r, f = token_prf(pred, refs)
        ok &= all(0.0 <= v <= 1.0 for v in (p, r, f))
    for _ in range(10):
        batch = [EvalPair(f"s{i}", random_sentence(rng),
                          tuple(random_sentence(rng)
                                for _ in range(rng.randint(1, 3))))
                 for i in range(rng.randint(2, 6))]
        scores, _ = cider(batch)
        oracle = cider_oracle(batch)
        ok &= all(abs(scores[sid] - oracle[sid]) <= 1e-9 for sid in scores)
    for _ in range(20):
        x = random_sentence(rng)
        ok &= abs(bleu(x, [x]) - 1.0) <= 1e-9
        ok &= rouge_l(x, x) == 1.0
        ok &= token_prf(x, x) == (1.0, 1.0, 1.0)
    pair = EvalPair("s0", "đen", ("đen",) * 3 + ("trắng",) * 2)
    ok &= consensus_accuracy(pair) == 1.0
    report("metric oracles: bleu/rouge_l/cider/token_prf match brute force "
           "to 1e-9; identity 1.0; consensus saturates at 3", ok)


def test_krippendorff_alpha_cases():
    perfect = [RatingRecord(a, f"i{i}", "fluency", (i % 5) + 1)
               for a in ("A", "B", "C") for i in range(10)]
    ok = krippendorff_alpha(perfect) == 1.0

    fixture = [RatingRecord("A", "i1", "fluency", 1),
               RatingRecord("A", "i2", "fluency", 2),
               RatingRecord("B", "i1", "fluency", 2),
               RatingRecord("B", "i2", "fluency", 1)]
    got = krippendorff_alpha(fixture)
    ok &= abs(got - alpha_oracle(fixture)) <= 1e-9
    ok &= abs(got - (-0.5)) <= 1e-9

    single = [RatingRecord("A", "i1", "fluency", 3),
              RatingRecord("A", "i2", "fluency", 4)]
    ok &= krippendorff_alpha(single) is None
    report("krippendorff alpha: perfect=1.0 exact, hand fixture to 1e-9, "
           "single annotator undefined", ok)


def test_end_to_end_determinism(tmp_path):
    manifest, texts = write_corpus(tmp_path)
    exports = []
    for name in ("run-a", "run-b"):
        run = tmp_path / name
        config = load_config(None, {"seed": 13, "generate_count": 50})
        pipeline.run_ingest(run, config, manifest, texts)
        pipeline.run_generate(run, config)
        pipeline.run_qc_stage(run, config)
        pipeline.run_balance(run, config)
        pipeline.run_export(run, config)
        exports.append(run / "export")
    a, b = exports
    names = sorted(f.name for f in a.iterdir())
    ok = names == sorted(f.name for f in b.iterdir()) and len(names) >= 2
    for name in names:
        ok &= (a / name).read_bytes() == (b / name).read_bytes()
    report("end-to-end determinism: same-seed mock runs export "
           "byte-identical files and manifests", ok)
