"""Quality-improvement strategies layered on top of the generation loop.

Three independent mechanisms: self-evaluation picks the best of several
candidate models, input optimization enriches the process description before
generation, and output optimization asks the model to improve an already
accepted result.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass

from ..dsl import extract_code, interpret_response, render
from ..model import Diagnostic, DiagnosticError, auto_fix_reuse, structural_equal
from .chat import ChatMessage, ChatProvider
from .prompts import (
    ASSETS_VERSION,
    build_input_optimization_prompt,
    build_self_evaluation_prompt,
    load_asset,
    output_optimization_message,
)
from .session import (
    STATUS_AUTOFIX,
    STATUS_SUCCEEDED,
    GenerationSession,
    IterationRecord,
    session_with,
)

CRITERIA_ASSETS = {
    "general": "eval_criteria_general",
    "conformance": "eval_criteria_conformance",
}

# A candidate index "R<i>" followed by the first number that is not itself
# part of another R<j> mention.
_INDEX_RE = re.compile(r"\bR(\d+)\b")
_NUMBER_RE = re.compile(r"(?<![Rr])(\d+(?:\.\d+)?)")


@dataclass(frozen=True)
class SelfEvaluation:
    """Outcome of scoring candidate models R1..Rk."""

    scores: list[float]
    selected_index: int
    attempts: int
    raw_response: str

    @property
    def selected_score(self) -> float:
        return self.scores[self.selected_index]


@dataclass(frozen=True)
class OptimizationResult:
    """Outcome of an output-optimization round."""

    session: GenerationSession
    changed: bool
    attempts: int
    error: Diagnostic | None = None

    @property
    def succeeded(self) -> bool:
        return self.error is None


def parse_score_lines(response: str, count: int) -> list[float] | None:
    """Extracts scores for R1..R<count> from a reply, line by line.

    Lines are scanned for an R<i> mention followed by a number; the first
    score seen for each index wins. Returns None unless every index is found.
    """
    scores: dict[int, float] = {}
    for line in response.splitlines():
        index_match = _INDEX_RE.search(line)
        if not index_match:
            continue
        index = int(index_match.group(1))
        if not 1 <= index <= count or index in scores:
            continue
        number_match = _NUMBER_RE.search(line[index_match.end():])
        if not number_match:
            continue
        scores[index] = float(number_match.group(1))
    if len(scores) != count:
        return None
    return [scores[i] for i in range(1, count + 1)]


def self_evaluate_select(
    description: str,
    candidates: list[GenerationSession],
    provider: ChatProvider,
    criteria: str = "general",
    re_asks: int = 3,
    assets_version: str = ASSETS_VERSION,
) -> SelfEvaluation:
    """Asks the model to score rendered candidates and picks the best one.

    ``criteria`` is either a known criteria set name or literal criteria text.
    On a tie the lowest candidate index wins. An unreadable reply is re-asked
    with the identical prompt up to ``re_asks`` times before giving up.
    """
    if len(candidates) < 2:
        raise ValueError("self-evaluation needs at least two candidates")
    for candidate in candidates:
        if not candidate.succeeded or candidate.model is None:
            raise ValueError("all candidates must carry an accepted model")
    criteria_text = (
        load_asset(CRITERIA_ASSETS[criteria], assets_version)
        if criteria in CRITERIA_ASSETS
        else criteria
    )
    scripts = [render(candidate.model).source for candidate in candidates]
    prompt = [
        build_self_evaluation_prompt(
            description, scripts, criteria_text, assets_version
        )
    ]
    attempts = 1 + max(0, re_asks)
    response = ""
    for attempt in range(1, attempts + 1):
        response = provider.complete(prompt)
        scores = parse_score_lines(response, len(candidates))
        if scores is not None:
            best = max(range(len(scores)), key=lambda i: (scores[i], -i))
            return SelfEvaluation(
                scores=scores,
                selected_index=best,
                attempts=attempt,
                raw_response=response,
            )
    raise DiagnosticError(
        Diagnostic(
            "UNPARSEABLE_EVALUATION",
            f"no readable R<i>: <score> lines after {attempts} attempts",
        )
    )


def optimize_input(
    description: str,
    provider: ChatProvider,
    assets_version: str = ASSETS_VERSION,
) -> str:
    """Returns an enriched version of the process description.

    The reply is taken verbatim (trimmed); no code extraction is applied.
    """
    prompt = build_input_optimization_prompt(description, assets_version)
    optimized = provider.complete(prompt).strip()
    if not optimized:
        raise DiagnosticError(
            Diagnostic("EMPTY_RESPONSE", "input optimization returned no text")
        )
    return optimized


def optimize_output(
    session: GenerationSession,
    provider: ChatProvider,
    retry_limit: int = 5,
    assets_version: str = ASSETS_VERSION,
) -> OptimizationResult:
    """Asks the model to improve an accepted result, keeping it on failure.

    A reply with critical findings is answered by re-sending the identical
    prompt; there is no error feedback in this mode. After ``retry_limit``
    failed attempts the original model is retained and OPTIMIZATION_FAILED is
    reported. Adjustable findings in an otherwise clean reply are repaired
    automatically and the reply is accepted.
    """
    if not session.succeeded or session.model is None:
        raise ValueError("cannot optimize a session that has no accepted model")
    if retry_limit < 1:
        raise ValueError("retry_limit must be >= 1")
    base_conversation = list(session.conversation)
    base_conversation.append(output_optimization_message(assets_version))
    for attempt in range(1, retry_limit + 1):
        start = time.perf_counter()
        response = provider.complete(base_conversation)
        elapsed = time.perf_counter() - start
        model, report = interpret_response(response)
        if report.has_critical:
            continue
        auto_fixed = False
        if report.has_adjustable:
            model, _ = auto_fix_reuse(model)
            auto_fixed = True
        changed = not structural_equal(session.model, model)
        conversation = list(base_conversation)
        conversation.append(ChatMessage("assistant", response))
        record = IterationRecord(
            attempt=session.iteration_count + 1,
            script=_safe_script(response),
            diagnostics=list(report.diagnostics),
            wall_time=elapsed,
        )
        new_session = session_with(
            session,
            conversation=conversation,
            iterations=session.iterations + [record],
            model=model,
            status=STATUS_AUTOFIX if (auto_fixed or session.auto_fixed) else STATUS_SUCCEEDED,
            auto_fixed=auto_fixed or session.auto_fixed,
        )
        return OptimizationResult(
            session=new_session, changed=changed, attempts=attempt
        )
    return OptimizationResult(
        session=session,
        changed=False,
        attempts=retry_limit,
        error=Diagnostic(
            "OPTIMIZATION_FAILED",
            f"no error-free improvement within {retry_limit} attempts; "
            "keeping the previous model",
        ),
    )


def _safe_script(response: str) -> str | None:
    try:
        return extract_code(response).source
    except DiagnosticError:
        return None
