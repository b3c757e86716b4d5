"""Exception hierarchy shared across the toolkit.

Every error raised by motionloop derives from :class:`MotionLoopError`, so
callers embedding the loop can catch one base class at component boundaries.
"""


class MotionLoopError(Exception):
    """Base class for all motionloop errors."""


# --- clip model and file I/O ---

class MalformedFile(MotionLoopError):
    """Clip/library/config document violates its schema."""


class NonFiniteCoordinate(MotionLoopError):
    """A joint coordinate is NaN or infinite."""


class JointCountUnsupported(MotionLoopError):
    """Joint count outside the supported skeleton sizes (22 or 24)."""


class IoFailure(MotionLoopError):
    """Underlying filesystem read/write failed."""


class TooShort(MotionLoopError):
    """Clip has too few frames for the requested operation."""


class WrongJointCount(MotionLoopError):
    """Operation requires a specific joint count the clip does not have."""


# --- metrics ---

class ShapeMismatch(MotionLoopError):
    """Reference and prediction clips differ in frame count, joints, or fps."""


class EmptySet(MotionLoopError):
    """An aggregate was requested over zero items."""


class DegenerateBaseline(MotionLoopError):
    """Failure-rate reduction is undefined for a 100% baseline."""


# --- physics filter ---

class BadJointIndex(MotionLoopError):
    """A configured joint index is outside the clip's joint range."""


# --- prompt engine ---

class SchemaViolation(MotionLoopError):
    """Variable library or template file violates its schema."""


class MissingDomain(MotionLoopError):
    """Variable library does not define all five domains."""


class EmptySlot(MotionLoopError):
    """A variable-library slot has no entries."""


class UnknownPhrase(MotionLoopError):
    """A selected phrase is not present in the library slot."""


class MissingComponent(MotionLoopError):
    """A prompt selection does not cover all four difficulty components."""


class NoEligibleEntries(MotionLoopError):
    """No library entries satisfy the requested tier constraint."""


class NoTemplateMatch(MotionLoopError):
    """Text does not match the literal structure of any known template."""


class ForeignPhrase(MotionLoopError):
    """Text matches a template but uses a phrase outside the library."""


class DuplicateLine(MotionLoopError):
    """An external prompt source returned duplicate lines."""


# --- evaluation gateway ---

class BadCount(MotionLoopError):
    """Requested keyframe count is outside [1, T]."""


class MalformedResponse(MotionLoopError):
    """Evaluator response document is missing fields or unparseable."""


class UnknownAlignment(MotionLoopError):
    """Evaluator returned an alignment word outside the three categories."""


# --- scheduler ---

class EmptyInput(MotionLoopError):
    """Operation requires at least one record."""


class IncompleteSet(MotionLoopError):
    """A set record is missing its prompt, metrics, or evaluator feedback."""


class MalformedOutput(MotionLoopError):
    """Scheduler LLM output does not follow the SET/A/B/C/D grammar."""


class CountMismatch(MotionLoopError):
    """Scheduler LLM returned a different number of prompts than sets."""


# --- loop orchestrator ---

class ComponentFailure(MotionLoopError):
    """An external component call failed; carries loop and prompt context."""

    def __init__(self, message, loop_index=None, prompt_id=None):
        context = []
        if loop_index is not None:
            context.append(f"loop={loop_index}")
        if prompt_id is not None:
            context.append(f"prompt={prompt_id}")
        suffix = f" [{' '.join(context)}]" if context else ""
        super().__init__(f"{message}{suffix}")
        self.loop_index = loop_index
        self.prompt_id = prompt_id


class EmptyMotionSet(MotionLoopError):
    """Every prompt of a generation round was rejected."""


class EmptyArchive(MotionLoopError):
    """Archive holds no completed loops / trackers."""


class CorruptCheckpoint(MotionLoopError):
    """Checkpoint payload does not match its recorded content hash."""


# --- service protocol ---

class UpstreamUnavailable(MotionLoopError):
    """An adapter's upstream system is unreachable or timed out."""


class ProtocolViolation(MotionLoopError):
    """A service request/response does not follow the wire protocol."""
