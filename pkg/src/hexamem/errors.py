"""Exception hierarchy shared across the engine."""


class EngineError(Exception):
    """Base class for every error raised by this package."""


# --- store ---------------------------------------------------------------


class StoreError(EngineError):
    pass


class DuplicateEntry(StoreError):
    """Insert rejected because an entry with the same dedup fingerprint exists."""

    def __init__(self, message: str, existing_id: str | None = None):
        super().__init__(message)
        self.existing_id = existing_id


class NotFound(StoreError):
    pass


class InvalidEntry(StoreError):
    pass


class InvalidPatch(StoreError):
    pass


class StorageFull(StoreError):
    pass


class CorruptStore(StoreError):
    pass


class StoreOpenFailure(StoreError):
    pass


# --- retrieval -----------------------------------------------------------


class RetrievalError(EngineError):
    pass


class EmptyQuery(RetrievalError):
    pass


class EmbedderUnavailable(RetrievalError):
    pass


# --- llm gateway ---------------------------------------------------------


class GatewayError(EngineError):
    pass


class ProviderTimeout(GatewayError):
    pass


class ProviderRefusal(GatewayError):
    pass


class SchemaViolation(GatewayError):
    """Provider emitted tool arguments that fail the declared parameter schema."""


class ScriptMismatch(GatewayError):
    """Scripted provider got a prompt that does not match the next canned exchange."""


class ToolLoopExceeded(GatewayError):
    pass


# --- ingestion / evaluation / service ------------------------------------


class UndecodableImage(EngineError):
    pass


class DatasetMalformed(EngineError):
    pass


class BindFailure(EngineError):
    pass
