"""hexamem: a six-component agent memory engine.

Core, episodic, semantic, procedural, resource, and vault memory behind one
store file; hybrid lexical/vector retrieval with active topic-driven context
assembly; a meta-manager routing workflow with parallel per-component
managers; plus an HTTP service, CLI, and a QA evaluation harness.
"""

__version__ = "0.1.0"

from .chat import ChatAgent, ChatTurn
from .config import EngineConfig
from .engine import MemoryEngine
from .errors import EngineError
from .gateway import (
    HashedBagEmbedder,
    Message,
    ProviderConfig,
    ProviderKind,
    ScriptedExchange,
    ScriptedProvider,
    ToolCall,
    ToolSpec,
)
from .ingestion import Batch, ConversationTurn, Frame, ScreenshotStream
from .model import (
    ComponentId,
    CoreBlock,
    EpisodicEvent,
    ProceduralEntry,
    ResourceEntry,
    SemanticEntry,
    VaultEntry,
    canonical_text,
    decode,
    encode,
    validate,
)
from .orchestrator import Orchestrator, RoutingDecision, UpdateAck, UpdateReport
from .retrieval import RetrievalMethod, Retriever, ScoredHit, TaggedContext, Topic
from .store import Store, StoreStats

__all__ = [
    "__version__",
    "Batch",
    "ChatAgent",
    "ChatTurn",
    "ComponentId",
    "ConversationTurn",
    "CoreBlock",
    "EngineConfig",
    "EngineError",
    "EpisodicEvent",
    "Frame",
    "HashedBagEmbedder",
    "MemoryEngine",
    "Message",
    "Orchestrator",
    "ProceduralEntry",
    "ProviderConfig",
    "ProviderKind",
    "ResourceEntry",
    "RetrievalMethod",
    "Retriever",
    "RoutingDecision",
    "ScoredHit",
    "ScreenshotStream",
    "ScriptedExchange",
    "ScriptedProvider",
    "SemanticEntry",
    "Store",
    "StoreStats",
    "TaggedContext",
    "ToolCall",
    "ToolSpec",
    "Topic",
    "UpdateAck",
    "UpdateReport",
    "VaultEntry",
    "canonical_text",
    "decode",
    "encode",
    "validate",
]
