from .base import FunctionTool, Tool, ToolDescriptor, ToolRegistry
from .bm25 import Bm25Index, Bm25Params, Bm25SearchTool, build_index, tokenize
from .formula import (
    Apply,
    FormulaTool,
    Literal,
    ValidityReport,
    ValidityTolerance,
    check_validity,
    eval_formula,
    parse_formula,
    render_value,
    solve,
)
from .websearch import WebSearchTool

__all__ = [
    "Apply",
    "Bm25Index",
    "Bm25Params",
    "Bm25SearchTool",
    "FormulaTool",
    "FunctionTool",
    "Literal",
    "Tool",
    "ToolDescriptor",
    "ToolRegistry",
    "ValidityReport",
    "ValidityTolerance",
    "WebSearchTool",
    "build_index",
    "check_validity",
    "eval_formula",
    "parse_formula",
    "render_value",
    "solve",
    "tokenize",
]
