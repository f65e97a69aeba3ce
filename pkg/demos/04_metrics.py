"""Score a tiny prediction set with every shipped text metric, then compute
inter-annotator agreement on a toy rating table.
"""
from vqagen.metrics import (EvalPair, RatingRecord, evaluate_batch,
                            krippendorff_alpha)

batch = [
    EvalPair("s0", "con mèo đen", ("con mèo đen", "mèo đen")),
    EvalPair("s1", "xe trên đường", ("xe chạy trên đường",)),
    EvalPair("s2", "nước xanh", ("biển xanh", "nước biển xanh")),
]
result = evaluate_batch(batch)
print("means:", {k: round(v, 4) for k, v in result["report"]["mean"].items()})
for sid, row in sorted(result["per_sample"].items()):
    print(f"  {sid}: " + " ".join(f"{k}={v:.3f}" for k, v in row.items()))

ratings = [RatingRecord(a, f"i{i}", "fluency", v)
           for a, values in (("A", [5, 4, 2, 1]), ("B", [5, 4, 2, 2]),
                             ("C", [4, 4, 2, 1]))
           for i, v in enumerate(values)]
print("\nordinal alpha:", round(krippendorff_alpha(ratings), 4))
