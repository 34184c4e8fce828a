"""Prompt assembly from versioned plain-text assets.

All instruction text lives in ``assets/<version>/``; this module only loads,
fills placeholders, and orders the sections. Placeholders are substituted with
``str.replace`` so literal braces in asset text stay untouched.
"""

from __future__ import annotations

import random
from importlib import resources

from ..model import Diagnostic, ValidationReport
from .chat import ChatMessage

ASSETS_VERSION = "v1"

DEFAULT_FEW_SHOT = ("few_shot_bicycle",)


def load_asset(name: str, version: str = ASSETS_VERSION) -> str:
    """Returns the text of one prompt asset, e.g. ``powl_knowledge``."""
    root = resources.files("powlgen.llm") / "assets" / version / f"{name}.txt"
    return root.read_text(encoding="utf-8").strip()


def format_diagnostics(diagnostics: list[Diagnostic]) -> str:
    """Renders diagnostics as the bullet list quoted in error feedback."""
    lines = []
    for diag in diagnostics:
        location = f" at {diag.path}" if diag.path else ""
        lines.append(
            f"- {diag.severity.value.upper()} {diag.code}{location}: {diag.message}"
        )
    return "\n".join(lines)


def shuffled_labels(labels: list[str], seed: int) -> list[str]:
    """Returns a deterministically shuffled copy of the label list."""
    shuffled = list(labels)
    random.Random(seed).shuffle(shuffled)
    return shuffled


def build_initial_prompt(
    description: str,
    few_shot_assets: tuple[str, ...] = DEFAULT_FEW_SHOT,
    label_constraint: list[str] | None = None,
    seed: int = 0,
    assets_version: str = ASSETS_VERSION,
) -> list[ChatMessage]:
    """Builds the opening conversation for a generation session.

    The system message carries the role instruction; the user message carries,
    in order: POWL knowledge, few-shot examples, common pitfalls, the process
    description, and (optionally) the fixed label list in seeded random order.
    """
    if not description.strip():
        raise ValueError("description must be non-empty")
    if not few_shot_assets:
        raise ValueError("at least one few-shot asset is required")
    sections = [load_asset("powl_knowledge", assets_version)]
    sections.extend(load_asset(name, assets_version) for name in few_shot_assets)
    sections.append(load_asset("negative_prompts", assets_version))
    sections.append("Process description:\n" + description.strip())
    if label_constraint is not None:
        if not label_constraint:
            raise ValueError("label_constraint must be non-empty when given")
        listed = "\n".join(f"- {label}" for label in shuffled_labels(label_constraint, seed))
        sections.append(
            load_asset("label_constraint", assets_version).replace("{labels}", listed)
        )
    return [
        ChatMessage("system", load_asset("role", assets_version)),
        ChatMessage("user", "\n\n".join(sections)),
    ]


def build_error_prompt(
    report: ValidationReport, assets_version: str = ASSETS_VERSION
) -> ChatMessage:
    """Quotes the validation findings and asks for a corrected script."""
    issues = format_diagnostics(report.diagnostics)
    text = load_asset("error_feedback", assets_version).replace("{issues}", issues)
    return ChatMessage("user", text)


def build_feedback_prompt(
    feedback: str, assets_version: str = ASSETS_VERSION
) -> ChatMessage:
    """Wraps user feedback for a refinement round."""
    if not feedback.strip():
        raise ValueError("feedback must be non-empty")
    text = load_asset("user_feedback", assets_version).replace(
        "{feedback}", feedback.strip()
    )
    return ChatMessage("user", text)


def build_self_evaluation_prompt(
    description: str,
    scripts: list[str],
    criteria: str,
    assets_version: str = ASSETS_VERSION,
) -> ChatMessage:
    """Lists candidates R1..Rk with their scripts and the scoring criteria."""
    if len(scripts) < 2:
        raise ValueError("self-evaluation needs at least two candidates")
    blocks = []
    for i, script in enumerate(scripts, start=1):
        blocks.append(f"Candidate R{i}:\n```python\n{script.strip()}\n```")
    text = (
        load_asset("self_evaluation", assets_version)
        .replace("{description}", description.strip())
        .replace("{candidates}", "\n\n".join(blocks))
        .replace("{criteria}", criteria.strip())
    )
    return ChatMessage("user", text)


def build_input_optimization_prompt(
    description: str, assets_version: str = ASSETS_VERSION
) -> list[ChatMessage]:
    """Standalone prompt asking for an enriched process description."""
    if not description.strip():
        raise ValueError("description must be non-empty")
    text = (
        load_asset("input_optimization", assets_version)
        + "\n\nProcess description:\n"
        + description.strip()
    )
    return [ChatMessage("user", text)]


def output_optimization_message(assets_version: str = ASSETS_VERSION) -> ChatMessage:
    """The fixed follow-up asking the model to improve its own result."""
    return ChatMessage("user", load_asset("output_optimization", assets_version))
