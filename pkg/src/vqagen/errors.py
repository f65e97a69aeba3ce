"""Exception types shared across the pipeline."""


class VqagenError(Exception):
    """Base class for all pipeline errors."""


class EmptyCorpusError(VqagenError):
    """Ingestion manifest contained no usable entries."""


class MissingCaptionsError(VqagenError):
    """An image record without captions cannot drive generation."""


class NoFeasibleLevelError(VqagenError):
    """The feasible level set handed to the scheduler was empty."""


class LevelUnsupportedError(VqagenError):
    """No feasible category admits the selected level.

    The caller should retry level selection on a reduced level set.
    """

    def __init__(self, level: int):
        super().__init__(f"no feasible category admits level {level}")
        self.level = level


class NoCategoryError(VqagenError):
    """No feasible category admits any level at all."""


class ParseError(VqagenError):
    """Model output violated the Q/A output contract.

    ``rule`` names the violated rule: answer_count, answer_length,
    empty_question, question_mark, missing_block.
    """

    def __init__(self, rule: str, detail: str = ""):
        super().__init__(f"{rule}: {detail}" if detail else rule)
        self.rule = rule


class ProviderError(VqagenError):
    """External model call failed after exhausting retries.

    ``kind`` is one of: timeout, auth, rate_limit, transport.
    """

    def __init__(self, kind: str, detail: str = ""):
        super().__init__(f"{kind}: {detail}" if detail else kind)
        self.kind = kind


class JudgeParseError(VqagenError):
    """A judge response did not contain one score per criterion."""


class ConfigError(VqagenError):
    """Invalid pipeline configuration (e.g. even ensemble size)."""


class SplitError(VqagenError):
    """Fewer image groups than requested splits."""


class StageOrderError(VqagenError):
    """A pipeline stage was invoked before its prerequisite completed."""
