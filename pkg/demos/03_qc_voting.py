"""Walk one batch through ensemble QC: per-judge medians, majority votes,
and the 9-of-18 retention rule, using three deterministic mock judges.
"""
from vqagen.gateway import Gateway, MockProvider, ModelEndpoint
from vqagen.generation import QASample
from vqagen.validation import CriteriaRegistry, run_qc

registry = CriteriaRegistry()
judges = [Gateway(ModelEndpoint(f"judge-{i}", "", "mock", "judge"),
                  provider=MockProvider(i)) for i in range(3)]

samples = [
    QASample(sample_id=f"s{i:06d}", image_id=f"img{i % 5:03d}",
             question=f"Trong ảnh có bao nhiêu đồ vật số {i}?",
             answers=["một", "hai", "ba", "bốn", "năm"],
             category="counting", level=2)
    for i in range(30)
]

result = run_qc(samples, judges, registry)
print(f"scored {result.report['scored']}, retained {result.report['retained']}, "
      f"rejected {result.report['rejected']} "
      f"(rate {result.report['retention_rate']:.2f})")
print("\nper-criterion pass rates:")
for cid, rate in sorted(result.report["per_criterion_pass_rate"].items()):
    print(f"  {cid:<28} {rate:.2f}")
verdict = result.verdicts[samples[0].sample_id]
print(f"\nsample {samples[0].sample_id}: pass_count={verdict.pass_count} "
      f"retained={verdict.retained} grounding={verdict.grounding_score:.3f}")
