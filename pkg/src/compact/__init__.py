"""Declarative norm-based compacts over append-only history documents."""

from .couch import DesignDocument, emit_design_document
from .ledger import EventRecord, HistoryDoc, LedgerStore
from .norms import Binding, NormStateTable, build_tables, derive_states, evaluate, inline_refs
from .parser import load_compact, parse_compact, parse_text, resolve
from .views import ViewEngine, compile_views, oracle_evaluate

__all__ = [
    "Binding",
    "DesignDocument",
    "EventRecord",
    "HistoryDoc",
    "LedgerStore",
    "NormStateTable",
    "ViewEngine",
    "build_tables",
    "compile_views",
    "derive_states",
    "emit_design_document",
    "evaluate",
    "inline_refs",
    "load_compact",
    "oracle_evaluate",
    "parse_compact",
    "parse_text",
    "resolve",
]
