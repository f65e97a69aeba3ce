import json

import pytest

from vqagen.generation import QASample
from vqagen.validation import JudgeResponse


def make_sample(i=0, image_id=None, question=None, answers=None,
                category="yes_no", level=1, **kw):
    return QASample(
        sample_id=f"s{i:06d}",
        image_id=image_id or f"img{i % 10:03d}",
        question=question or f"Câu hỏi số {i} là gì?",
        answers=answers or ["một", "hai", "ba", "bốn", "năm"],
        category=category,
        level=level,
        **kw,
    )


class TableJudge:
    """Judge double: scores come from a callable(sample, criterion_id)."""

    def __init__(self, endpoint_id, score_fn):
        self.endpoint_id = endpoint_id
        self.score_fn = score_fn

    def judge(self, sample, image_uri, registry):
        return JudgeResponse(
            endpoint_id=self.endpoint_id,
            sample_id=sample.sample_id,
            scores={c.criterion_id: self.score_fn(sample, c.criterion_id)
                    for c in registry.entries},
        )


@pytest.fixture
def toy_corpus_files(tmp_path):
    """Manifest + texts JSONL for a 20-image corpus with rich captions."""
    manifest = tmp_path / "manifest.jsonl"
    texts = tmp_path / "texts.jsonl"
    caps = [
        "hai chiếc thuyền trên mặt nước gần bờ",
        "một con mèo ngồi cạnh ghế đỏ",
        "nhiều người đang đi bộ trên đường phố",
        "biển hiệu có dòng chữ màu xanh trên tường",
    ]
    with open(manifest, "w", encoding="utf-8") as f:
        for i in range(20):
            f.write(json.dumps({"image_id": f"img{i:03d}", "uri": f"http://img/{i}.jpg"}) + "\n")
    with open(texts, "w", encoding="utf-8") as f:
        for i in range(20):
            f.write(json.dumps({"image_id": f"img{i:03d}", "kind": "caption",
                                "payload": caps[i % 4] + f" phiên bản {i}"},
                               ensure_ascii=False) + "\n")
            f.write(json.dumps({"image_id": f"img{i:03d}", "kind": "caption",
                                "payload": "cảnh vật sống động với bầu trời xanh"},
                               ensure_ascii=False) + "\n")
            f.write(json.dumps({"image_id": f"img{i:03d}", "kind": "conversation",
                                "payload": {"question": "Có gì trong ảnh?",
                                            "answer": "một khung cảnh đẹp"}},
                               ensure_ascii=False) + "\n")
    return manifest, texts
