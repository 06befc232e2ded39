"""Request/response types for model completion."""

from __future__ import annotations

from dataclasses import dataclass, field

ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class Message:
    role: str
    text: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown message role: {self.role!r}")


@dataclass(frozen=True)
class ModelRequest:
    """One completion call.

    temperature 0 means the call is a pure function of its messages;
    a positive temperature with distinct seeds selects distinct variants.
    """

    messages: tuple[Message, ...]
    temperature: float = 0.0
    seed: int = 0
    max_tokens: int = 4096
    backend_id: str = ""

    def __post_init__(self):
        if not self.messages:
            raise ValueError("messages must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")

    @staticmethod
    def of(*pairs: tuple[str, str], temperature: float = 0.0, seed: int = 0,
           max_tokens: int = 4096, backend_id: str = "") -> "ModelRequest":
        msgs = tuple(Message(role, text) for role, text in pairs)
        return ModelRequest(msgs, temperature, seed, max_tokens, backend_id)


@dataclass(frozen=True)
class ModelResponse:
    text: str
    backend_id: str
    usage: dict = field(default_factory=dict)
    truncated: bool = False
