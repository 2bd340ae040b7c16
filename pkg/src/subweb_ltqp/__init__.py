"""Link-traversal query processing guided by published subweb specifications.

The main entry points::

    from subweb_ltqp import load_usecase, parse_select, run_strategy
    store = load_usecase()
    table, stats = run_strategy("swsl", parse_select(text), ["https://uma.ex/"],
                                CachingFetcher(StoreFetcher(store)))
"""
from .terms import BNode, IRI, Literal, Triple
from .turtle import parse_turtle
from .wold import Document, Subweb, Wold, dataset_of, simpl, subweb_union
from .sparql import ResultTable, eval_ggp, eval_select, parse_select
from .selectors import IDENTITY, ConstantSelector, FunctionFilter, FunctionSelector
from .swsl import parse_swsl, swsl_to_tuple
from .subweb import (
    NonConvergence, SpecAnnotatedWold, SpecTuple, eval_specification, extract_annotations,
    seed_adopting_spec, soi,
)
from .ldql import (
    LinkPattern, check_capture, counterexample_wold, encode_cawold, eval_lpe, lp, refute_capture,
)
from .webhost import (
    CachingFetcher, DocumentStore, HttpFetcher, StoreFetcher, load_manifest, load_usecase, serve,
)
from .traversal import Criterion, reachable_subweb, run_strategy
from .bench import WebGenConfig, generate_web, q_fixtures, run_benchmark

__version__ = "0.1.0"

__all__ = [
    "BNode", "IRI", "Literal", "Triple", "parse_turtle",
    "Document", "Subweb", "Wold", "dataset_of", "simpl", "subweb_union",
    "ResultTable", "eval_ggp", "eval_select", "parse_select",
    "IDENTITY", "ConstantSelector", "FunctionFilter", "FunctionSelector",
    "parse_swsl", "swsl_to_tuple",
    "NonConvergence", "SpecAnnotatedWold", "SpecTuple", "eval_specification",
    "extract_annotations", "seed_adopting_spec", "soi",
    "LinkPattern", "check_capture", "counterexample_wold", "encode_cawold", "eval_lpe", "lp",
    "refute_capture",
    "CachingFetcher", "DocumentStore", "HttpFetcher", "StoreFetcher", "load_manifest",
    "load_usecase", "serve",
    "Criterion", "reachable_subweb", "run_strategy",
    "WebGenConfig", "generate_web", "q_fixtures", "run_benchmark",
]
