"""Knowledge, template, and tool stores with top-k retrieval and gated promotion."""

from climalab.library.store import (
    DuplicateIdConflict,
    EmbeddingMismatch,
    InvalidK,
    InvalidRecord,
    KnowledgeRecord,
    Library,
    MissingRunReference,
    NotApproved,
    TemplateRecord,
    ToolManifest,
    template_id,
)

__all__ = [
    "DuplicateIdConflict",
    "EmbeddingMismatch",
    "InvalidK",
    "InvalidRecord",
    "KnowledgeRecord",
    "Library",
    "MissingRunReference",
    "NotApproved",
    "TemplateRecord",
    "ToolManifest",
    "template_id",
]
