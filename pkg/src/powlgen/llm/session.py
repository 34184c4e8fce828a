"""The iterative generation protocol.

The loop sends the construction prompt, interprets the reply, and feeds
validation findings back until the model is clean. Critical findings always
trigger a retry; adjustable findings trigger retries only up to a threshold,
after which they are repaired automatically. A session fails only once the
total iteration budget is spent on critical findings.

Transport failures are not modeling failures: they raise ``TransportError``
instead of consuming the iteration budget.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

from ..dsl import extract_code, interpret_response
from ..model import (
    Diagnostic,
    DiagnosticError,
    PowlNode,
    auto_fix_reuse,
    model_from_dict,
    model_to_dict,
)
from .chat import ChatMessage, ChatProvider
from .prompts import (
    ASSETS_VERSION,
    DEFAULT_FEW_SHOT,
    build_error_prompt,
    build_feedback_prompt,
    build_initial_prompt,
)

STATUS_SUCCEEDED = "succeeded"
STATUS_AUTOFIX = "succeeded_with_autofix"
STATUS_FAILED = "failed"


@dataclass(frozen=True)
class GenerationConfig:
    """Knobs for one generation session.

    ``adjustable_iteration_threshold`` is the last attempt whose adjustable
    findings are still sent back for correction; beyond it they are repaired
    automatically. ``label_constraint`` pins the usable activity labels and is
    presented shuffled by ``seed``.
    """

    adjustable_iteration_threshold: int = 10
    total_iteration_limit: int = 15
    label_constraint: list[str] | None = None
    few_shot_assets: tuple[str, ...] = DEFAULT_FEW_SHOT
    seed: int = 0
    assets_version: str = ASSETS_VERSION

    def __post_init__(self) -> None:
        if self.adjustable_iteration_threshold < 1:
            raise ValueError("adjustable_iteration_threshold must be >= 1")
        if self.total_iteration_limit < self.adjustable_iteration_threshold:
            raise ValueError(
                "total_iteration_limit must be >= adjustable_iteration_threshold"
            )


@dataclass
class IterationRecord:
    """What happened in one attempt of the loop."""

    attempt: int
    script: str | None
    diagnostics: list[Diagnostic]
    wall_time: float

    def to_dict(self) -> dict:
        return {
            "attempt": self.attempt,
            "script": self.script,
            "diagnostics": [d.to_dict() for d in self.diagnostics],
            "wall_time": self.wall_time,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IterationRecord":
        return cls(
            attempt=data["attempt"],
            script=data["script"],
            diagnostics=[
                Diagnostic(d["code"], d["message"], d.get("path", ""))
                for d in data["diagnostics"]
            ],
            wall_time=data["wall_time"],
        )


@dataclass
class GenerationSession:
    """Full record of one generation or refinement run."""

    description: str
    config: GenerationConfig
    conversation: list[ChatMessage] = field(default_factory=list)
    iterations: list[IterationRecord] = field(default_factory=list)
    model: PowlNode | None = None
    status: str = STATUS_FAILED
    auto_fixed: bool = False

    @property
    def iteration_count(self) -> int:
        return len(self.iterations)

    @property
    def succeeded(self) -> bool:
        return self.status in (STATUS_SUCCEEDED, STATUS_AUTOFIX)

    @property
    def final_script(self) -> str | None:
        """The script of the last attempt that produced the accepted model."""
        for record in reversed(self.iterations):
            if record.script is not None:
                return record.script
        return None

    def to_dict(self) -> dict:
        return {
            "description": self.description,
            "config": {
                "adjustable_iteration_threshold": self.config.adjustable_iteration_threshold,
                "total_iteration_limit": self.config.total_iteration_limit,
                "label_constraint": self.config.label_constraint,
                "few_shot_assets": list(self.config.few_shot_assets),
                "seed": self.config.seed,
                "assets_version": self.config.assets_version,
            },
            "conversation": [m.to_dict() for m in self.conversation],
            "iterations": [r.to_dict() for r in self.iterations],
            "model": model_to_dict(self.model) if self.model is not None else None,
            "status": self.status,
            "auto_fixed": self.auto_fixed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GenerationSession":
        cfg = data["config"]
        return cls(
            description=data["description"],
            config=GenerationConfig(
                adjustable_iteration_threshold=cfg["adjustable_iteration_threshold"],
                total_iteration_limit=cfg["total_iteration_limit"],
                label_constraint=cfg["label_constraint"],
                few_shot_assets=tuple(cfg["few_shot_assets"]),
                seed=cfg["seed"],
                assets_version=cfg["assets_version"],
            ),
            conversation=[
                ChatMessage(m["role"], m["content"]) for m in data["conversation"]
            ],
            iterations=[IterationRecord.from_dict(r) for r in data["iterations"]],
            model=model_from_dict(data["model"]) if data["model"] is not None else None,
            status=data["status"],
            auto_fixed=data["auto_fixed"],
        )


def _try_extract(response: str) -> str | None:
    try:
        return extract_code(response).source
    except DiagnosticError:
        return None


def _run_loop(
    description: str,
    conversation: list[ChatMessage],
    provider: ChatProvider,
    config: GenerationConfig,
) -> GenerationSession:
    session = GenerationSession(
        description=description, config=config, conversation=conversation
    )
    for attempt in range(1, config.total_iteration_limit + 1):
        start = time.perf_counter()
        response = provider.complete(conversation)
        elapsed = time.perf_counter() - start
        if response.strip():
            conversation.append(ChatMessage("assistant", response))
        model, report = interpret_response(response)
        session.iterations.append(
            IterationRecord(
                attempt=attempt,
                script=_try_extract(response),
                diagnostics=list(report.diagnostics),
                wall_time=elapsed,
            )
        )
        if report.has_critical:
            if attempt == config.total_iteration_limit:
                session.status = STATUS_FAILED
                return session
            conversation.append(build_error_prompt(report, config.assets_version))
            continue
        if report.has_adjustable:
            retry_allowed = (
                attempt <= config.adjustable_iteration_threshold
                and attempt < config.total_iteration_limit
            )
            if retry_allowed:
                conversation.append(build_error_prompt(report, config.assets_version))
                continue
            fixed, _ = auto_fix_reuse(model)
            session.model = fixed
            session.status = STATUS_AUTOFIX
            session.auto_fixed = True
            return session
        session.model = model
        session.status = STATUS_SUCCEEDED
        return session
    raise AssertionError("generation loop exited without a verdict")


def generate(
    description: str,
    provider: ChatProvider,
    config: GenerationConfig | None = None,
) -> GenerationSession:
    """Runs the full generation protocol for one process description."""
    config = config or GenerationConfig()
    conversation = build_initial_prompt(
        description,
        few_shot_assets=config.few_shot_assets,
        label_constraint=config.label_constraint,
        seed=config.seed,
        assets_version=config.assets_version,
    )
    return _run_loop(description.strip(), conversation, provider, config)


def refine(
    session: GenerationSession,
    feedback: str,
    provider: ChatProvider,
    config: GenerationConfig | None = None,
) -> GenerationSession:
    """Revises a successful session's model based on user feedback.

    The prior conversation is preserved and extended; the iteration budget is
    fresh. Returns a new session, leaving the input session untouched.
    """
    if not session.succeeded or session.model is None:
        raise ValueError("cannot refine a session that has no accepted model")
    config = config or session.config
    feedback_message = build_feedback_prompt(feedback, config.assets_version)
    conversation = list(session.conversation)
    conversation.append(feedback_message)
    return _run_loop(session.description, conversation, provider, config)


def session_with(
    session: GenerationSession, **changes
) -> GenerationSession:
    """Shallow copy of a session with selected fields replaced."""
    return replace(session, **changes)
