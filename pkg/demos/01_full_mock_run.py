"""End-to-end walkthrough: ingest a toy corpus, generate with the mock
provider, run quality control, balance, and export, printing each stage's
summary. Writes everything under ./demo-run.
"""
import json
import tempfile
from pathlib import Path

from vqagen import pipeline
from vqagen.config import load_config

RUN = Path("demo-run")

captions = [
    "hai chiếc thuyền trên mặt nước gần bờ",
    "một con mèo ngồi cạnh ghế đỏ",
    "nhiều người đang đi bộ trên đường phố",
    "biển hiệu có dòng chữ màu xanh trên tường",
]

with tempfile.TemporaryDirectory() as tmp:
    manifest = Path(tmp) / "manifest.jsonl"
    texts = Path(tmp) / "texts.jsonl"
    with open(manifest, "w", encoding="utf-8") as f:
        for i in range(20):
            f.write(json.dumps({"image_id": f"img{i:03d}",
                                "uri": f"http://img/{i}.jpg"}) + "\n")
    with open(texts, "w", encoding="utf-8") as f:
        for i in range(20):
            for payload in (captions[i % 4], "cảnh vật sống động với bầu trời xanh"):
                f.write(json.dumps({"image_id": f"img{i:03d}", "kind": "caption",
                                    "payload": payload}, ensure_ascii=False) + "\n")

    config = load_config(None, {"seed": 7, "generate_count": 60})
    print("ingest:  ", pipeline.run_ingest(RUN, config, manifest, texts))
    print("generate:", pipeline.run_generate(RUN, config))
    print("qc:      ", {k: v for k, v in pipeline.run_qc_stage(RUN, config).items()
                        if k != "per_criterion_pass_rate"})
    print("balance: ", pipeline.run_balance(RUN, config))
    print("export:  ", pipeline.run_export(RUN, config))
    print("stats:   ", json.dumps(pipeline.run_stats(RUN), ensure_ascii=False, indent=2))
