"""Provider-agnostic access to generator and judge models.

Real endpoints speak the common chat-completion HTTP convention (message
list in, text out). The mock provider is a pure function of (seed, prompt)
so full pipeline runs are bit-reproducible offline.
"""
from __future__ import annotations

import hashlib
import logging
import os
import random
import re
import time
from dataclasses import dataclass, field

import httpx

from .errors import JudgeParseError, ProviderError
from .generation import QASample
from .validation import CriteriaRegistry, JudgeResponse

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModelEndpoint:
    endpoint_id: str
    base_url: str
    model: str
    role: str  # generator | judge
    auth_env: str | None = None
    rps: float = 0.0  # 0 disables rate limiting
    timeout_ms: int = 30000
    retries: int = 2


class TokenBucket:
    """Single-token bucket; clock and sleep are injectable for tests."""

    def __init__(self, rate_per_sec: float, clock=time.monotonic, sleep=time.sleep):
        self.rate = rate_per_sec
        self.clock = clock
        self.sleep = sleep
        self._next_free = None

    def acquire(self) -> None:
        if self.rate <= 0:
            return
        now = self.clock()
        if self._next_free is None or now >= self._next_free:
            self._next_free = now + 1.0 / self.rate
            return
        wait = self._next_free - now
        self._next_free += 1.0 / self.rate
        self.sleep(wait)


class TransientFailure(Exception):
    """Raised by providers for retryable failures."""

    def __init__(self, kind: str, detail: str = ""):
        super().__init__(detail or kind)
        self.kind = kind


class HttpChatProvider:
    """Chat-completion style HTTP provider."""

    def __init__(self, endpoint: ModelEndpoint, client: httpx.Client | None = None):
        self.endpoint = endpoint
        self.client = client or httpx.Client(timeout=endpoint.timeout_ms / 1000.0)

    def complete(self, prompt: str) -> str:
        headers = {}
        if self.endpoint.auth_env:
            token = os.environ.get(self.endpoint.auth_env, "")
            if not token:
                raise ProviderError("auth", f"env var {self.endpoint.auth_env} is unset")
            headers["Authorization"] = f"Bearer {token}"
        body = {
            "model": self.endpoint.model,
            "messages": [{"role": "user", "content": prompt}],
        }
        try:
            resp = self.client.post(
                f"{self.endpoint.base_url.rstrip('/')}/chat/completions",
                json=body, headers=headers,
            )
        except httpx.TimeoutException as exc:
            raise TransientFailure("timeout", str(exc))
        except httpx.TransportError as exc:
            raise TransientFailure("transport", str(exc))
        if resp.status_code in (401, 403):
            raise ProviderError("auth", f"HTTP {resp.status_code}")
        if resp.status_code == 429:
            raise TransientFailure("rate_limit", "HTTP 429")
        if resp.status_code >= 500:
            raise TransientFailure("transport", f"HTTP {resp.status_code}")
        resp.raise_for_status()
        return resp.json()["choices"][0]["message"]["content"]


JUDGE_PROMPT_MARKER = "Score the sample on every criterion below."

# Small Vietnamese vocabulary backing the mock generator's synthetic text.
_MOCK_WORDS = (
    "con", "mèo", "chó", "thuyền", "người", "cây", "nước", "bàn", "ghế", "xe",
    "màu", "đỏ", "xanh", "vàng", "trên", "dưới", "cạnh", "đang", "chạy", "ngồi",
    "lớn", "nhỏ", "hai", "ba", "bầu", "trời", "biển", "phố", "nhà", "đường",
)
_MOCK_QUESTION_STEMS = (
    "Có gì trong bức ảnh", "Con vật đang làm gì", "Màu sắc chủ đạo là gì",
    "Có bao nhiêu đối tượng", "Vì sao cảnh này diễn ra", "Vật nào ở gần hơn",
)


class MockProvider:
    """Deterministic stand-in for external models.

    Output is a pure function of (seed, prompt): generation prompts get a
    well-formed Q/A block, judge prompts get one score line per criterion
    listed in the prompt.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed

    def _rng(self, prompt: str) -> random.Random:
        digest = hashlib.sha256(f"{self.seed}:{prompt}".encode("utf-8")).digest()
        return random.Random(int.from_bytes(digest[:8], "big"))

    def complete(self, prompt: str) -> str:
        rng = self._rng(prompt)
        if JUDGE_PROMPT_MARKER in prompt:
            return self._judge_text(prompt, rng)
        return self._generation_text(rng)

    def _generation_text(self, rng: random.Random) -> str:
        stem = rng.choice(_MOCK_QUESTION_STEMS)
        tag = "".join(rng.choice("abcdefgh") for _ in range(6))
        question = f"{stem} {tag}?"
        lines = [f"Q: {question}"]
        for i in range(5):
            n = rng.randint(1, 10)
            lines.append(f"A{i + 1}: " + " ".join(rng.choice(_MOCK_WORDS) for _ in range(n)))
        return "```\n" + "\n".join(lines) + "\n```"

    def _judge_text(self, prompt: str, rng: random.Random) -> str:
        ids = re.findall(r"^- ([a-z0-9_]+):", prompt, re.MULTILINE)
        return "\n".join(f"{cid}: {rng.random():.4f}" for cid in ids)


class Gateway:
    """Rate-limited, retrying access to one endpoint's provider."""

    def __init__(self, endpoint: ModelEndpoint, provider=None,
                 clock=time.monotonic, sleep=time.sleep, backoff_base: float = 0.1):
        self.endpoint = endpoint
        self.provider = provider or HttpChatProvider(endpoint)
        self.bucket = TokenBucket(endpoint.rps, clock=clock, sleep=sleep)
        self.sleep = sleep
        self.backoff_base = backoff_base
        self._committed: dict[str, str] = {}

    def _call(self, prompt: str, request_id: str | None) -> str:
        # At-most-once commit: a request id that already produced a result
        # is served from cache, so retried orchestration never duplicates.
        if request_id is not None and request_id in self._committed:
            return self._committed[request_id]
        last: TransientFailure | None = None
        for attempt in range(self.endpoint.retries + 1):
            self.bucket.acquire()
            try:
                text = self.provider.complete(prompt)
            except TransientFailure as exc:
                last = exc
                if attempt < self.endpoint.retries:
                    self.sleep(self.backoff_base * (2 ** attempt))
                continue
            if request_id is not None:
                self._committed[request_id] = text
            return text
        assert last is not None
        raise ProviderError(last.kind, str(last))

    def complete(self, prompt: str, request_id: str | None = None) -> str:
        if self.endpoint.role != "generator":
            raise ProviderError("role", f"{self.endpoint.endpoint_id} is not a generator")
        return self._call(prompt, request_id)

    def judge(self, sample: QASample, image_uri: str,
              registry: CriteriaRegistry, request_id: str | None = None) -> JudgeResponse:
        if self.endpoint.role != "judge":
            raise ProviderError("role", f"{self.endpoint.endpoint_id} is not a judge")
        prompt = build_judge_prompt(sample, image_uri, registry)
        raw = self._call(prompt, request_id)
        scores = parse_judge_scores(raw, registry)
        return JudgeResponse(endpoint_id=self.endpoint.endpoint_id,
                             sample_id=sample.sample_id, scores=scores)


def build_judge_prompt(sample: QASample, image_uri: str, registry: CriteriaRegistry) -> str:
    criteria_lines = "\n".join(
        f"- {c.criterion_id}: {c.name}. {c.definition}" for c in registry.entries
    )
    answers = "\n".join(f"  {i + 1}. {a}" for i, a in enumerate(sample.answers))
    return (
        f"{JUDGE_PROMPT_MARKER}\n\n"
        f"Image: {image_uri}\n"
        f"Question: {sample.question}\n"
        f"Answers:\n{answers}\n"
        f"Assigned category: {sample.category}; assigned reasoning level: {sample.level}\n\n"
        f"Criteria:\n{criteria_lines}\n\n"
        "Reply with one line per criterion, exactly in the form "
        "`criterion_id: score` with score a number between 0 and 1."
    )


_SCORE_LINE = re.compile(r"^\s*-?\s*([a-z0-9_]+)\s*:\s*(-?\d+(?:\.\d+)?)\s*$")


def parse_judge_scores(raw: str, registry: CriteriaRegistry) -> dict[str, float]:
    """Parse `criterion_id: score` lines; clamp to [0,1], require all 18."""
    found: dict[str, float] = {}
    for line in raw.splitlines():
        m = _SCORE_LINE.match(line)
        if not m:
            continue
        cid, value = m.group(1), float(m.group(2))
        if cid not in registry.ids:
            continue
        if value < 0.0 or value > 1.0:
            log.warning("score %.3f for %s out of range, clamped", value, cid)
            value = min(1.0, max(0.0, value))
        found[cid] = value
    missing = registry.ids - set(found)
    if missing:
        raise JudgeParseError(f"missing scores for: {sorted(missing)}")
    return found


@dataclass
class EndpointConfig:
    endpoints: list[ModelEndpoint] = field(default_factory=list)


def load_endpoints(obj: list[dict]) -> list[ModelEndpoint]:
    """Endpoint config: list of dicts with base_url, model, role, auth_env,
    rps, timeout_ms, retries. Tokens only ever come from the environment."""
    endpoints = []
    seen = set()
    for entry in obj:
        ep = ModelEndpoint(
            endpoint_id=entry["endpoint_id"],
            base_url=entry.get("base_url", ""),
            model=entry.get("model", ""),
            role=entry["role"],
            auth_env=entry.get("auth_env"),
            rps=float(entry.get("rps", 0.0)),
            timeout_ms=int(entry.get("timeout_ms", 30000)),
            retries=int(entry.get("retries", 2)),
        )
        if ep.endpoint_id in seen:
            raise ValueError(f"duplicate endpoint_id {ep.endpoint_id}")
        seen.add(ep.endpoint_id)
        endpoints.append(ep)
    return endpoints
