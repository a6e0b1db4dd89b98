"""XML document model and SAX-style event streams.

One document representation, two views: an in-memory tree of element/text
nodes (plus pass-through comment/PI nodes) and a flat sequence of
start/text/end events.  Both views serialize through the same event
printer, so a tree and the event stream it came from always produce
byte-identical output.

Node identifiers are pre-order positions: the document node is 0 and every
node below it gets the next id in document order.  Ids are assigned once,
when the tree is built, and are stable thereafter.
"""

from __future__ import annotations

import xml.parsers.expat
from dataclasses import dataclass
from typing import IO, Iterable, Iterator
from xml.sax.saxutils import escape, quoteattr


# ---------------------------------------------------------------------------
# Events


@dataclass(frozen=True)
class StartElement:
    tag: str
    attributes: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class Text:
    content: str


@dataclass(frozen=True)
class EndElement:
    tag: str


@dataclass(frozen=True)
class Comment:
    content: str


@dataclass(frozen=True)
class ProcessingInstruction:
    target: str
    data: str


SaxEvent = StartElement | Text | EndElement | Comment | ProcessingInstruction


class XmlSyntaxError(ValueError):
    """Raised when input XML is not well formed."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


# ---------------------------------------------------------------------------
# Tree nodes


class Element:
    __slots__ = ("tag", "attributes", "children", "parent", "nid")

    def __init__(self, tag: str, attributes: tuple[tuple[str, str], ...] = ()):
        self.tag = tag
        self.attributes = attributes
        self.children: list[Node] = []
        self.parent: Element | Document | None = None
        self.nid = -1

    def __repr__(self):
        return f"Element({self.tag!r}, nid={self.nid})"


class TextNode:
    __slots__ = ("content", "parent", "nid")

    def __init__(self, content: str):
        self.content = content
        self.parent: Element | Document | None = None
        self.nid = -1

    def __repr__(self):
        return f"TextNode({self.content!r}, nid={self.nid})"


class CommentNode:
    __slots__ = ("content", "parent", "nid")

    def __init__(self, content: str):
        self.content = content
        self.parent: Element | Document | None = None
        self.nid = -1


class PINode:
    __slots__ = ("target", "data", "parent", "nid")

    def __init__(self, target: str, data: str):
        self.target = target
        self.data = data
        self.parent: Element | Document | None = None
        self.nid = -1


Node = Element | TextNode | CommentNode | PINode


class Document:
    """Document node: owns the root element plus any top-level comments/PIs.

    ``root`` may be None for the empty document (the result of pruning with
    an empty projector); it serializes to the empty string.
    """

    __slots__ = ("children", "nid")

    def __init__(self, children: Iterable[Node] = ()):
        self.children: list[Node] = list(children)
        for child in self.children:
            child.parent = self
        self.nid = 0
        self.renumber()

    @property
    def root(self) -> Element | None:
        for child in self.children:
            if isinstance(child, Element):
                return child
        return None

    def renumber(self) -> "Document":
        for i, node in enumerate(self.iter_nodes()):
            node.nid = i
        return self

    def iter_nodes(self) -> Iterator["Document | Node"]:
        """All nodes in pre-order, starting with the document node itself."""
        yield self
        stack: list[Node] = list(reversed(self.children))
        while stack:
            node = stack.pop()
            yield node
            if isinstance(node, Element):
                stack.extend(reversed(node.children))

    def node_by_id(self, nid: int) -> "Document | Node":
        for node in self.iter_nodes():
            if node.nid == nid:
                return node
        raise KeyError(nid)


def node_path(node: Document | Node) -> str:
    """Slash path of tag names from the root, e.g. ``/doc/a/text()``."""
    parts: list[str] = []
    cur: Document | Node | None = node
    while cur is not None and not isinstance(cur, Document):
        if isinstance(cur, Element):
            parts.append(cur.tag)
        elif isinstance(cur, TextNode):
            parts.append("text()")
        elif isinstance(cur, CommentNode):
            parts.append("comment()")
        else:
            parts.append(f"processing-instruction({cur.target})")
        cur = cur.parent
    return "/" + "/".join(reversed(parts))


# ---------------------------------------------------------------------------
# Parsing


def _make_parser(sink: list[SaxEvent]) -> xml.parsers.expat.XMLParserType:
    parser = xml.parsers.expat.ParserCreate()
    parser.buffer_text = True
    parser.ordered_attributes = True

    def start(tag, attr_list):
        pairs = tuple((attr_list[i], attr_list[i + 1]) for i in range(0, len(attr_list), 2))
        sink.append(StartElement(tag, pairs))

    parser.StartElementHandler = start
    parser.EndElementHandler = lambda tag: sink.append(EndElement(tag))
    parser.CharacterDataHandler = lambda data: sink.append(Text(data))
    parser.CommentHandler = lambda data: sink.append(Comment(data))
    parser.ProcessingInstructionHandler = lambda target, data: sink.append(
        ProcessingInstruction(target, data)
    )
    return parser


def iter_events(source: str | bytes | IO[bytes], chunk_size: int = 1 << 16) -> Iterator[SaxEvent]:
    """Stream SAX events from XML text or a binary file object.

    Memory is bounded by the parser buffer plus one chunk of pending
    events; the input is never materialized as a tree.
    """
    pending: list[SaxEvent] = []
    parser = _make_parser(pending)
    try:
        if isinstance(source, (str, bytes)):
            data = source.encode("utf-8") if isinstance(source, str) else source
            parser.Parse(data, True)
            yield from pending
            return
        while True:
            chunk = source.read(chunk_size)
            if not chunk:
                parser.Parse(b"", True)
                yield from pending
                return
            parser.Parse(chunk, False)
            if pending:
                yield from pending
                pending.clear()
    except xml.parsers.expat.ExpatError as exc:
        raise XmlSyntaxError(
            xml.parsers.expat.errors.messages[exc.code], exc.lineno, exc.offset + 1
        ) from None


def build_tree(events: Iterable[SaxEvent]) -> Document:
    """Assemble a Document from an event sequence (adjacent text merged)."""
    top: list[Node] = []
    stack: list[Element] = []

    def attach(node: Node) -> None:
        if stack:
            node.parent = stack[-1]
            stack[-1].children.append(node)
        else:
            top.append(node)

    for event in events:
        if isinstance(event, StartElement):
            elem = Element(event.tag, event.attributes)
            attach(elem)
            stack.append(elem)
        elif isinstance(event, EndElement):
            if not stack or stack[-1].tag != event.tag:
                raise XmlSyntaxError(f"mismatched end tag {event.tag!r}")
            stack.pop()
        elif isinstance(event, Text):
            if stack and stack[-1].children and isinstance(stack[-1].children[-1], TextNode):
                stack[-1].children[-1].content += event.content
            elif stack:
                attach(TextNode(event.content))
            # text outside the root element is not representable; drop it
        elif isinstance(event, Comment):
            attach(CommentNode(event.content))
        else:
            attach(PINode(event.target, event.data))
    if stack:
        raise XmlSyntaxError(f"unclosed element {stack[-1].tag!r}")
    return Document(top)


def parse_xml(source: str | bytes | IO[bytes]) -> Document:
    return build_tree(iter_events(source))


# ---------------------------------------------------------------------------
# Serialization


def tree_events(doc: Document) -> Iterator[SaxEvent]:
    """Event view of a tree; inverse of build_tree up to text merging."""
    for child in doc.children:
        yield from _node_events(child)


def _node_events(node: Node) -> Iterator[SaxEvent]:
    if isinstance(node, Element):
        yield StartElement(node.tag, node.attributes)
        for child in node.children:
            yield from _node_events(child)
        yield EndElement(node.tag)
    elif isinstance(node, TextNode):
        yield Text(node.content)
    elif isinstance(node, CommentNode):
        yield Comment(node.content)
    else:
        yield ProcessingInstruction(node.target, node.data)


def serialize_event(event: SaxEvent) -> str:
    if isinstance(event, StartElement):
        attrs = "".join(f" {name}={quoteattr(value)}" for name, value in event.attributes)
        return f"<{event.tag}{attrs}>"
    if isinstance(event, EndElement):
        return f"</{event.tag}>"
    if isinstance(event, Text):
        return escape(event.content)
    if isinstance(event, Comment):
        return f"<!--{event.content}-->"
    return f"<?{event.target} {event.data}?>" if event.data else f"<?{event.target}?>"


def serialize_events(events: Iterable[SaxEvent]) -> str:
    return "".join(serialize_event(e) for e in events)


def serialize(doc: Document) -> str:
    """Canonical text of a document: no XML declaration, no DOCTYPE."""
    return serialize_events(tree_events(doc))


def subtree_text(node: Document | Node) -> str:
    """Serialization of one node and everything below it."""
    if isinstance(node, Document):
        return serialize(node)
    return serialize_events(_node_events(node))


def string_value(node: Document | Node) -> str:
    """XPath string-value: concatenated text content beneath the node."""
    if isinstance(node, TextNode):
        return node.content
    if isinstance(node, (CommentNode, PINode)):
        return node.content if isinstance(node, CommentNode) else node.data
    parts: list[str] = []
    stack: list[Node] = list(reversed(node.children))
    while stack:
        cur = stack.pop()
        if isinstance(cur, TextNode):
            parts.append(cur.content)
        elif isinstance(cur, Element):
            stack.extend(reversed(cur.children))
    return "".join(parts)
