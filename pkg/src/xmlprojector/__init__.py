"""Schema-driven XML document projection.

Given a DTD (imported as a regular tree grammar) and XPath queries, infer
a *projector* — the subset of grammar rules the queries can observe — and
prune documents in one streaming pass, guaranteed not to change any query
answer.

Typical use::

    from xmlprojector import parse_dtd, parse_query, approximate_to_ell
    from xmlprojector import infer_projector, prune_stream, iter_events

    grammar = parse_dtd(open("schema.dtd").read())
    query = approximate_to_ell(parse_query("/site/people/person/name"))
    projector = infer_projector([query], grammar)
    events = prune_stream(iter_events(open("doc.xml", "rb")), projector)
"""

__version__ = "0.1.0"

from .doc import (
    Comment,
    Document,
    Element,
    EndElement,
    ProcessingInstruction,
    SaxEvent,
    StartElement,
    Text,
    TextNode,
    XmlSyntaxError,
    build_tree,
    iter_events,
    parse_xml,
    serialize,
    serialize_events,
    tree_events,
)
from .dtd import DtdError, parse_dtd
from .grammar import (
    Alt,
    Atom,
    ContentAutomaton,
    ContentRegex,
    Empty,
    Epsilon,
    Grammar,
    GrammarError,
    GrammarFormatError,
    Interpretation,
    Invalid,
    Label,
    Opt,
    Plus,
    Rule,
    Seq,
    Star,
    any_grammar,
    compile_content_model,
    grammar_to_text,
    is_streamable,
    parse_grammar_text,
    reachable_rules,
    validate_tree,
)
from .inference import (
    MinimalityReport,
    Projector,
    empty_projector,
    identity_projector,
    infer_projector,
    infer_types,
    minimality_check,
    parse_projector_text,
    projector_to_text,
    step_transition,
)
from .oracle import (
    GenConfig,
    OracleError,
    SoundnessReport,
    check_soundness,
    enumerate_documents,
    eval_ell,
    eval_full,
    generate_document,
)
from .pruner import (
    InvalidDocumentError,
    NotStreamableError,
    PruneStats,
    UnresolvableTagError,
    prune_stream,
    prune_tree,
)
from .xpath import (
    Axis,
    FullQuery,
    NodeAny,
    PathExists,
    PredAnd,
    PredOr,
    QueryEll,
    QuerySyntaxError,
    StepEll,
    TagTest,
    TextTest,
    Wildcard,
    approximate_to_ell,
    ell_to_text,
    parse_query,
)
