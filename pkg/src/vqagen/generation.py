"""Request assembly, prompt construction, and output parsing for generation.

The generator is asked for exactly one question and five short answers in a
fenced, line-delimited block (Q:/A1:..A5:), which survives chat-model
preambles and parses without a grammar engine.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .corpus import ImageRecord
from .errors import MissingCaptionsError, ParseError
from .scheduler import CATEGORY_LEVELS, CategoryTable

ANSWER_COUNT = 5
ANSWER_MIN_WORDS = 1
ANSWER_MAX_WORDS = 10
CONTEXT_SEPARATOR = " | "
DEFAULT_CONTEXT_BUDGET = 4000

LEVEL_DEFINITIONS = {
    1: "Level 1 (Recognition): Identifying objects or basic attributes",
    2: "Level 2 (Spatial & Relational): Reasoning about spatial relationships or simple comparisons",
    3: "Level 3 (Compositional): Multi-step reasoning involving multiple objects or actions",
    4: "Level 4 (Commonsense & Causal): Inferring intentions, mental states, or causal relationships",
    5: "Level 5 (Text-in-Image): Reading and interpreting textual content within the image",
}

# Cue lexicons for rule-based feasibility over the merged caption context.
# Vietnamese-first with a few English fallbacks for mixed corpora.
NUMERAL_CUES = {
    "một", "hai", "ba", "bốn", "năm", "sáu", "bảy", "tám", "chín", "mười",
    "nhiều", "vài", "các", "những", "đôi", "cặp",
    "one", "two", "three", "four", "five", "several", "many",
}
TEXT_CUES = {
    "chữ", "dòng chữ", "văn bản", "biển hiệu", "biển báo", "bảng hiệu", "nhãn",
    "text", "sign", "label", "writing", "logo",
}
SPATIAL_CUES = {
    "trên", "dưới", "trong", "ngoài", "bên", "cạnh", "giữa", "trước", "sau",
    "gần", "xa", "trái", "phải",
    "on", "under", "inside", "beside", "between", "behind", "near", "left", "right",
}


@dataclass(frozen=True)
class GenerationRequest:
    image_id: str
    context: str
    level: int
    category: str
    language: str = "vi"
    answer_count: int = ANSWER_COUNT
    answer_max_words: int = ANSWER_MAX_WORDS
    answer_min_words: int = ANSWER_MIN_WORDS


@dataclass
class QASample:
    sample_id: str
    image_id: str
    question: str
    answers: list[str]
    category: str
    level: int
    status: str = "generated"
    rejection_reason: str | None = None


def word_count(text: str) -> int:
    """A word is a maximal run of non-whitespace."""
    return len(text.split())


def validate_sample(sample: QASample) -> None:
    """Enforce QASample invariants; raises ParseError naming the broken rule."""
    if not sample.question.strip():
        raise ParseError("empty_question")
    if not sample.question.rstrip().endswith("?"):
        raise ParseError("question_mark", sample.question)
    if len(sample.answers) != ANSWER_COUNT:
        raise ParseError("answer_count", f"got {len(sample.answers)}")
    for answer in sample.answers:
        n = word_count(answer)
        if not ANSWER_MIN_WORDS <= n <= ANSWER_MAX_WORDS:
            raise ParseError("answer_length", f"{n} words: {answer!r}")
    if sample.level not in range(CATEGORY_LEVELS[sample.category][0],
                                 CATEGORY_LEVELS[sample.category][1] + 1):
        raise ParseError("level_category", f"level {sample.level} outside {sample.category}")


def build_context(record: ImageRecord, budget: int = DEFAULT_CONTEXT_BUDGET,
                  separator: str = CONTEXT_SEPARATOR) -> str:
    """Merge all captions plus conversation pairs rendered as statements.

    Whole segments are dropped from the end when the character budget is
    exceeded; a caption is never split mid-way.
    """
    if not record.captions:
        raise MissingCaptionsError(record.image_id)
    segments = list(record.captions)
    for q, a in record.conversations:
        segments.append(f"{q.rstrip('?').strip()}: {a.strip()}")
    merged = segments[:1]
    length = len(segments[0])
    for segment in segments[1:]:
        added = length + len(separator) + len(segment)
        if added > budget:
            break
        merged.append(segment)
        length = added
    return separator.join(merged)


def _contains_cue(text: str, cues: set[str], allow_digits: bool = False) -> bool:
    lowered = text.casefold()
    words = set(re.findall(r"\w+", lowered, re.UNICODE))
    for cue in cues:
        if " " in cue:
            if cue in lowered:
                return True
        elif cue in words:
            return True
    return allow_digits and bool(re.search(r"\d", text))


def feasibility(record: ImageRecord, table: CategoryTable | None = None,
                budget: int = DEFAULT_CONTEXT_BUDGET) -> tuple[set[int], set[str]]:
    """Rule-based cue detection deciding which categories (and hence levels)
    the merged context can support."""
    table = table or CategoryTable()
    context = build_context(record, budget=budget)

    categories = {"object_attribute", "yes_no", "action", "comparison", "relationship"}
    if _contains_cue(context, NUMERAL_CUES, allow_digits=True):
        categories.add("counting")
    if _contains_cue(context, SPATIAL_CUES):
        categories.add("spatial")
    rich_context = len(record.captions) >= 2 or len(record.conversations) >= 1
    if rich_context:
        categories.update({"causal", "contextual"})

    levels = table.levels_for(categories)
    text_in_image = record.has_ocr_text or _contains_cue(context, TEXT_CUES)
    if not text_in_image:
        levels.discard(5)
    return levels, categories


PROMPT_TEMPLATE = """You are generating a visual question answering sample in Vietnamese (language tag: {language}).

Image context (all caption variants, merged):
{context}

Target reasoning level: {level_definition}
Target question category: {category}

Requirements:
1. The question and all answers must use natural {language} syntax.
2. The question must be strictly grounded in the provided captions; do not introduce details the captions do not support.
3. Every answer must be logically consistent with the question intent (e.g. color, number, spatial relation, or causal explanation).

Output exactly one question and five short answers, each answer {min_words}-{max_words} words, in this fenced block and nothing else inside it:
```
Q: <question, ending with ?>
A1: <answer>
A2: <answer>
A3: <answer>
A4: <answer>
A5: <answer>
```"""


def build_prompt(req: GenerationRequest) -> str:
    return PROMPT_TEMPLATE.format(
        language=req.language,
        context=req.context,
        level_definition=LEVEL_DEFINITIONS[req.level],
        category=req.category,
        min_words=req.answer_min_words,
        max_words=req.answer_max_words,
    )


def render_output(sample: QASample) -> str:
    """Inverse of parse_output for valid samples."""
    lines = [f"Q: {sample.question}"]
    lines += [f"A{i + 1}: {a}" for i, a in enumerate(sample.answers)]
    return "```\n" + "\n".join(lines) + "\n```"


_Q_LINE = re.compile(r"^Q:\s*(.*)$")
_A_LINE = re.compile(r"^A([1-9]):\s*(.*)$")


def parse_output(raw: str, sample_id: str, image_id: str, category: str, level: int) -> QASample:
    """Extract one question and five answers from the delimited format."""
    if not raw.strip():
        raise ParseError("missing_block", "empty response")
    question = None
    answers = []
    for line in raw.splitlines():
        line = line.strip()
        m = _Q_LINE.match(line)
        if m and question is None:
            question = m.group(1).strip()
            continue
        m = _A_LINE.match(line)
        if m:
            answers.append(m.group(2).strip())
    if question is None:
        raise ParseError("missing_block", "no Q: line found")
    if not question:
        raise ParseError("empty_question")
    if len(answers) != ANSWER_COUNT:
        raise ParseError("answer_count", f"got {len(answers)}")
    sample = QASample(
        sample_id=sample_id,
        image_id=image_id,
        question=question,
        answers=answers,
        category=category,
        level=level,
    )
    validate_sample(sample)
    return sample


def normalize_question(text: str) -> str:
    return " ".join(text.casefold().split())


def dedupe(samples: list[QASample]) -> tuple[list[QASample], list[QASample]]:
    """Drop samples repeating (image_id, normalized question); first kept."""
    seen: set[tuple[str, str]] = set()
    kept, duplicates = [], []
    for sample in samples:
        key = (sample.image_id, normalize_question(sample.question))
        if key in seen:
            duplicates.append(sample)
        else:
            seen.add(key)
            kept.append(sample)
    return kept, duplicates


def sample_to_dict(sample: QASample) -> dict:
    return {
        "sample_id": sample.sample_id,
        "image_id": sample.image_id,
        "question": sample.question,
        "answers": sample.answers,
        "category": sample.category,
        "level": sample.level,
        "status": sample.status,
    }


def sample_from_dict(obj: dict) -> QASample:
    return QASample(
        sample_id=obj["sample_id"],
        image_id=obj["image_id"],
        question=obj["question"],
        answers=list(obj["answers"]),
        category=obj["category"],
        level=int(obj["level"]),
        status=obj.get("status", "generated"),
        rejection_reason=obj.get("rejection_reason"),
    )
