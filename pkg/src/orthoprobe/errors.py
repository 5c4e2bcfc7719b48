"""Exception types shared across the toolkit."""


class OrthoprobeError(Exception):
    """Base class for all toolkit errors."""


class ConlluParseError(OrthoprobeError):
    """Malformed CoNLL-U input; carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class TreeStructureError(OrthoprobeError):
    """Head links that do not form a single rooted tree."""


class AnnotationError(OrthoprobeError):
    """Lexical annotation refers to unknown hypernymy nodes."""


class EmbeddingFormatError(OrthoprobeError):
    """Embedding file violates the OPEMB1 binary format."""


class AlignmentError(OrthoprobeError):
    """Treebank sentences and embedding records cannot be paired up."""


class ContractError(OrthoprobeError):
    """Caller violated an operation precondition (shape/type mismatch)."""


class ConfigurationError(OrthoprobeError):
    """Run configuration is inconsistent or references missing inputs."""


class TrainingError(OrthoprobeError):
    """Optimization produced non-finite values."""
