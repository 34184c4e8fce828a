"""LLM orchestration: chat transport, prompt assembly, and the
generate/refine/improve protocol."""

from .chat import (
    ChatMessage,
    ChatProvider,
    HttpChatProvider,
    MockChatProvider,
    ProviderConfig,
    TransportError,
    make_provider,
)
from .improve import (
    OptimizationResult,
    SelfEvaluation,
    optimize_input,
    optimize_output,
    self_evaluate_select,
)
from .prompts import (
    ASSETS_VERSION,
    build_initial_prompt,
    load_asset,
)
from .session import (
    GenerationConfig,
    GenerationSession,
    IterationRecord,
    generate,
    refine,
)

__all__ = [
    "ASSETS_VERSION",
    "ChatMessage",
    "ChatProvider",
    "GenerationConfig",
    "GenerationSession",
    "HttpChatProvider",
    "IterationRecord",
    "MockChatProvider",
    "OptimizationResult",
    "ProviderConfig",
    "SelfEvaluation",
    "TransportError",
    "build_initial_prompt",
    "generate",
    "load_asset",
    "make_provider",
    "optimize_input",
    "optimize_output",
    "refine",
    "self_evaluate_select",
]
