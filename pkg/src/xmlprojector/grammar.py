"""Regular tree grammars over XML documents.

A grammar is a set of start names plus production rules.  A rule gives a
name either an element shape ``Name -> label [ regex over names ]`` or the
text shape ``Name -> String``.  The wildcard label ``_`` matches every
element tag, which is what lets a single grammar describe untyped
documents.

This module owns everything that depends only on the grammar itself:
content-model automata (Glushkov construction, determinized), document
validation producing a rule-per-node witness, the top-down-determinism
check that decides whether one-pass streaming is possible, rule
reachability, and the line-oriented text format used by grammar and
projector files.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

from .doc import Document, Element, Node, TextNode, node_path

_NAME_RE = re.compile(r"[A-Za-z_:][\w.\-:]*\Z")


class GrammarError(ValueError):
    """Malformed grammar: dangling names, empty start set, bad labels."""


class GrammarFormatError(ValueError):
    """Unparseable grammar/projector text."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


# ---------------------------------------------------------------------------
# Labels and content regexes


@dataclass(frozen=True)
class Label:
    """Element tag or the wildcard ``_`` (tag None) matching every tag."""

    tag: str | None = None

    def __post_init__(self):
        if self.tag is not None and not _NAME_RE.match(self.tag):
            raise GrammarError(f"illegal element tag {self.tag!r}")

    @property
    def is_wildcard(self) -> bool:
        return self.tag is None

    def matches(self, tag: str) -> bool:
        return self.tag is None or self.tag == tag

    def overlaps(self, other: "Label") -> bool:
        return self.tag is None or other.tag is None or self.tag == other.tag

    def __str__(self):
        return "_" if self.tag is None else self.tag


WILDCARD_LABEL = Label(None)


class ContentRegex:
    __slots__ = ()


@dataclass(frozen=True)
class Empty(ContentRegex):
    """Matches no word at all (the empty language)."""


@dataclass(frozen=True)
class Epsilon(ContentRegex):
    """Matches only the empty word."""


@dataclass(frozen=True)
class Atom(ContentRegex):
    name: str


@dataclass(frozen=True)
class Seq(ContentRegex):
    left: ContentRegex
    right: ContentRegex


@dataclass(frozen=True)
class Alt(ContentRegex):
    left: ContentRegex
    right: ContentRegex


@dataclass(frozen=True)
class Star(ContentRegex):
    inner: ContentRegex


@dataclass(frozen=True)
class Plus(ContentRegex):
    inner: ContentRegex


@dataclass(frozen=True)
class Opt(ContentRegex):
    inner: ContentRegex


EMPTY = Empty()
EPSILON = Epsilon()


def seq(*parts: ContentRegex) -> ContentRegex:
    """Right-folded sequence; () gives Epsilon."""
    if not parts:
        return EPSILON
    out = parts[-1]
    for part in reversed(parts[:-1]):
        out = Seq(part, out)
    return out


def alt(*parts: ContentRegex) -> ContentRegex:
    if not parts:
        return EMPTY
    out = parts[-1]
    for part in reversed(parts[:-1]):
        out = Alt(part, out)
    return out


def names_in(regex: ContentRegex) -> frozenset[str]:
    if isinstance(regex, Atom):
        return frozenset((regex.name,))
    if isinstance(regex, (Seq, Alt)):
        return names_in(regex.left) | names_in(regex.right)
    if isinstance(regex, (Star, Plus, Opt)):
        return names_in(regex.inner)
    return frozenset()


# ---------------------------------------------------------------------------
# Rules and grammars


@dataclass(frozen=True)
class Rule:
    """One production: ``name -> label [ content ]`` or ``name -> String``."""

    name: str
    label: Label | None
    content: ContentRegex | None

    def __post_init__(self):
        if (self.label is None) != (self.content is None):
            raise GrammarError("rule must have both label and content, or neither")
        if not _NAME_RE.match(self.name):
            raise GrammarError(f"illegal rule name {self.name!r}")

    @classmethod
    def element(cls, name: str, label: str | Label | None, content: ContentRegex) -> "Rule":
        if label is None:
            label = WILDCARD_LABEL
        elif isinstance(label, str):
            label = WILDCARD_LABEL if label == "_" else Label(label)
        return cls(name, label, content)

    @classmethod
    def text(cls, name: str) -> "Rule":
        return cls(name, None, None)

    @property
    def is_text(self) -> bool:
        return self.label is None

    def sort_key(self):
        if self.is_text:
            return (self.name, 0, "", "")
        return (self.name, 1, str(self.label), regex_to_text(self.content))

    def __repr__(self):
        return f"Rule({rule_to_text(self)!r})"


class Grammar:
    """Immutable start-name set plus rule set, with derived lookup tables.

    Attribute metadata (``attributes``: tag -> declared attribute names) is
    carried along for information only; it never takes part in equality and
    never drives validation or pruning.
    """

    __slots__ = ("start", "rules", "attributes", "_by_name", "_automata", "_start_reach")

    def __init__(
        self,
        start: Iterable[str],
        rules: Iterable[Rule],
        attributes: dict[str, tuple[str, ...]] | None = None,
    ):
        self.start: frozenset[str] = frozenset(start)
        self.rules: frozenset[Rule] = frozenset(rules)
        self.attributes: dict[str, tuple[str, ...]] = dict(attributes or {})
        if not self.start:
            raise GrammarError("grammar needs at least one start name")
        by_name: dict[str, list[Rule]] = {}
        for rule in sorted(self.rules, key=Rule.sort_key):
            by_name.setdefault(rule.name, []).append(rule)
        self._by_name: dict[str, tuple[Rule, ...]] = {n: tuple(rs) for n, rs in by_name.items()}
        missing = sorted(self.start - set(self._by_name))
        for rule in self.rules:
            if rule.content is not None:
                missing.extend(n for n in sorted(names_in(rule.content)) if n not in self._by_name)
        if missing:
            raise GrammarError("names without rules: " + ", ".join(sorted(set(missing))))
        self._automata: dict[Rule, ContentAutomaton] = {}
        self._start_reach: frozenset[Rule] | None = None

    def __eq__(self, other):
        return (
            isinstance(other, Grammar) and self.start == other.start and self.rules == other.rules
        )

    def __hash__(self):
        return hash((self.start, self.rules))

    def __repr__(self):
        return f"Grammar(start={sorted(self.start)}, rules={len(self.rules)})"

    def rules_of(self, name: str) -> tuple[Rule, ...]:
        return self._by_name.get(name, ())

    def element_rules(self, name: str) -> tuple[Rule, ...]:
        return tuple(r for r in self.rules_of(name) if not r.is_text)

    def text_rules(self, name: str) -> tuple[Rule, ...]:
        return tuple(r for r in self.rules_of(name) if r.is_text)

    def start_rules(self) -> tuple[Rule, ...]:
        out: list[Rule] = []
        for name in sorted(self.start):
            out.extend(self.rules_of(name))
        return tuple(out)

    def sorted_rules(self) -> tuple[Rule, ...]:
        return tuple(sorted(self.rules, key=Rule.sort_key))

    def automaton(self, rule: Rule) -> "ContentAutomaton":
        """Cached content-model automaton for an element rule."""
        auto = self._automata.get(rule)
        if auto is None:
            if rule.is_text:
                raise GrammarError("text rules have no content model")
            auto = compile_content_model(rule.content)
            self._automata[rule] = auto
        return auto


def any_grammar() -> Grammar:
    """The single-name grammar accepting every well-formed document."""
    return Grammar(
        start=("X",),
        rules=(Rule.text("X"), Rule.element("X", WILDCARD_LABEL, Star(Atom("X")))),
    )


# ---------------------------------------------------------------------------
# Content-model automata (Glushkov construction, then subset determinization)


class ContentAutomaton:
    """DFA over rule names accepting exactly one content model's language."""

    __slots__ = ("start_state", "_accepting", "_table", "alphabet")

    def __init__(self, start_state: int, accepting: frozenset[int], table: dict[tuple[int, str], int]):
        self.start_state = start_state
        self._accepting = accepting
        self._table = table
        self.alphabet = frozenset(sym for _, sym in table)

    def step(self, state: int, name: str) -> int | None:
        return self._table.get((state, name))

    def is_accepting(self, state: int) -> bool:
        return state in self._accepting

    def accepts(self, word: Iterable[str]) -> bool:
        state: int | None = self.start_state
        for name in word:
            state = self.step(state, name)
            if state is None:
                return False
        return self.is_accepting(state)


def compile_content_model(regex: ContentRegex) -> ContentAutomaton:
    positions: list[str] = []  # position index -> name

    def walk(r: ContentRegex) -> tuple[bool, frozenset[int], frozenset[int]]:
        # returns (nullable, first positions, last positions); fills `follow`
        if isinstance(r, Empty):
            return False, frozenset(), frozenset()
        if isinstance(r, Epsilon):
            return True, frozenset(), frozenset()
        if isinstance(r, Atom):
            positions.append(r.name)
            p = frozenset((len(positions) - 1,))
            follow.setdefault(len(positions) - 1, set())
            return False, p, p
        if isinstance(r, Seq):
            ln, lf, ll = walk(r.left)
            rn, rf, rl = walk(r.right)
            for p in ll:
                follow[p].update(rf)
            return ln and rn, lf | (rf if ln else frozenset()), rl | (ll if rn else frozenset())
        if isinstance(r, Alt):
            ln, lf, ll = walk(r.left)
            rn, rf, rl = walk(r.right)
            return ln or rn, lf | rf, ll | rl
        if isinstance(r, (Star, Plus)):
            n, f, l = walk(r.inner)
            for p in l:
                follow[p].update(f)
            return n or isinstance(r, Star), f, l
        if isinstance(r, Opt):
            n, f, l = walk(r.inner)
            return True, f, l
        raise TypeError(f"not a content regex: {r!r}")

    follow: dict[int, set[int]] = {}
    nullable, first, last = walk(regex)

    # Subset construction.  DTD content models are 1-unambiguous so this is
    # near-linear; hand-built grammars may genuinely need it.
    start_set = frozenset((-1,))
    state_ids: dict[frozenset[int], int] = {start_set: 0}
    table: dict[tuple[int, str], int] = {}
    accepting: set[int] = set()
    if nullable:
        accepting.add(0)
    work = [start_set]
    while work:
        current = work.pop()
        cid = state_ids[current]
        moves: dict[str, set[int]] = {}
        for q in current:
            targets = first if q == -1 else follow[q]
            for p in targets:
                moves.setdefault(positions[p], set()).add(p)
        for name, target in sorted((n, frozenset(t)) for n, t in moves.items()):
            tid = state_ids.get(target)
            if tid is None:
                tid = state_ids[target] = len(state_ids)
                work.append(target)
                if target & last:
                    accepting.add(tid)
            table[(cid, name)] = tid
    return ContentAutomaton(0, frozenset(accepting), table)


# ---------------------------------------------------------------------------
# Validation


Interpretation = dict[int, Rule]  # node id -> generating rule


@dataclass(frozen=True)
class Invalid:
    """Regular validation outcome: the document is not in the language."""

    path: str
    reason: str

    def __bool__(self):
        return False


def _is_ignorable(node: Node) -> bool:
    return isinstance(node, TextNode) and not node.content.strip()


def _content_children(elem: Element) -> list[Node]:
    return [c for c in elem.children if isinstance(c, (Element, TextNode))]


def validate_tree(doc: Document, g: Grammar) -> Interpretation | Invalid:
    """Match a document against a grammar.

    Returns a rule assignment for every generated node, or Invalid naming
    the first node (pre-order) that cannot be explained.  Whitespace-only
    text in element-only content is skippable and stays unassigned.
    Ambiguity is resolved deterministically: lowest-sorting rule, leftmost
    automaton choice, text consumed in preference to being skipped.
    """
    root = doc.root
    if root is None:
        return Invalid("/", "document has no root element")

    all_text_rules = tuple(sorted((r for r in g.rules if r.is_text), key=Rule.sort_key))
    possible: dict[int, tuple[Rule, ...]] = {}

    def compute(node: Node) -> tuple[Rule, ...]:
        if isinstance(node, TextNode):
            found = all_text_rules
        else:
            assert isinstance(node, Element)
            children = _content_children(node)
            for child in children:
                compute(child)
            found = tuple(
                rule
                for rule in sorted(g.rules, key=Rule.sort_key)
                if not rule.is_text
                and rule.label.matches(node.tag)
                and _children_match(node, rule) is not None
            )
        possible[node.nid] = found
        return found

    def _cand_names(child: Node) -> tuple[str, ...]:
        return tuple(sorted({r.name for r in possible[child.nid]}))

    def _children_match(elem: Element, rule: Rule) -> list[set[int]] | None:
        # Forward reachable DFA state sets over the children, one per gap.
        auto = g.automaton(rule)
        states: set[int] = {auto.start_state}
        trace = [set(states)]
        for child in _content_children(elem):
            nxt: set[int] = set()
            for q in states:
                for name in _cand_names(child):
                    t = auto.step(q, name)
                    if t is not None:
                        nxt.add(t)
            if _is_ignorable(child):
                nxt |= states
            if not nxt:
                return None
            states = nxt
            trace.append(set(states))
        if not any(auto.is_accepting(q) for q in states):
            return None
        return trace

    compute(root)

    # Locate the first locally inexplicable node if validation failed.
    start_ok = any(r.name in g.start for r in possible[root.nid])
    if not possible[root.nid] or not start_ok:
        for node in doc.iter_nodes():
            if isinstance(node, TextNode):
                if not possible[node.nid] and not _is_ignorable(node):
                    return Invalid(node_path(node), "text not generated by any text rule")
            elif isinstance(node, Element):
                if possible[node.nid]:
                    continue
                children = _content_children(node)
                if all(possible[c.nid] or _is_ignorable(c) for c in children):
                    return Invalid(node_path(node), "no rule matches this element")
        return Invalid(node_path(root), "root has no start-name rule")

    interpretation: Interpretation = {}

    def witness(node: Node, rule: Rule) -> None:
        interpretation[node.nid] = rule
        if rule.is_text:
            return
        assert isinstance(node, Element)
        auto = g.automaton(rule)
        children = _content_children(node)
        trace = _children_match(node, rule)
        assert trace is not None
        state = min(q for q in trace[-1] if auto.is_accepting(q))
        picks: list[tuple[Node, str] | None] = []
        for i in range(len(children) - 1, -1, -1):
            child = children[i]
            chosen: tuple[int, tuple[Node, str] | None] | None = None
            for q in sorted(trace[i]):
                for name in _cand_names(child):
                    if auto.step(q, name) == state:
                        chosen = (q, (child, name))
                        break
                if chosen:
                    break
            if chosen is None and _is_ignorable(child) and state in trace[i]:
                chosen = (state, None)
            assert chosen is not None, "forward trace guarantees a backward path"
            state, pick = chosen
            picks.append(pick)
        for pick in reversed(picks):
            if pick is None:
                continue
            child, name = pick
            chosen_rule = next(r for r in possible[child.nid] if r.name == name)
            witness(child, chosen_rule)

    root_rule = next(r for r in possible[root.nid] if r.name in g.start)
    witness(root, root_rule)
    return interpretation


# ---------------------------------------------------------------------------
# Structural queries


def is_streamable(g: Grammar) -> bool:
    """True iff name assignment is top-down deterministic.

    Every tag seen while reading must resolve to at most one candidate name
    (with exactly one element rule), both under each element rule's content
    and at the root against the start names, and a rule's content may
    mention at most one text-capable name.  DTD imports always satisfy
    this; hand-built regular grammars may not.
    """

    def resolvable(names: Iterable[str]) -> bool:
        rules_per_name = [(n, g.element_rules(n)) for n in sorted(set(names))]
        with_elements = [(n, rs) for n, rs in rules_per_name if rs]
        if any(len(rs) > 1 for _, rs in with_elements):
            return False
        labels = [rs[0].label for _, rs in with_elements]
        for i, a in enumerate(labels):
            for b in labels[i + 1 :]:
                if a.overlaps(b):
                    return False
        return True

    if not resolvable(g.start):
        return False
    for rule in g.rules:
        if rule.is_text:
            continue
        names = names_in(rule.content)
        if not resolvable(names):
            return False
        text_capable = [n for n in names if g.text_rules(n)]
        if len(text_capable) > 1:
            return False
    return True


def reachable_rules(g: Grammar, from_rules: Iterable[Rule]) -> frozenset[Rule]:
    """Least fixpoint: seed rules plus rules of names mentioned in the
    content of any reachable element rule."""
    seen: set[Rule] = set()
    work = list(from_rules)
    while work:
        rule = work.pop()
        if rule in seen:
            continue
        seen.add(rule)
        if rule.content is not None:
            for name in names_in(rule.content):
                work.extend(g.rules_of(name))
    return frozenset(seen)


def start_reachable(g: Grammar) -> frozenset[Rule]:
    if g._start_reach is None:
        g._start_reach = reachable_rules(g, g.start_rules())
    return g._start_reach


# ---------------------------------------------------------------------------
# Text format
#
#   start: Doc
#   attlist: a id class
#   Doc -> doc [ A* ]
#   TB -> String
#
# Regex syntax: names, juxtaposition for sequence, `|` for alternation,
# postfix `* + ?`, parentheses, `#eps` / `#empty` for the trivial
# languages.  An element rule with empty brackets means Epsilon.

_TOKEN_RE = re.compile(r"[()|*+?]|[^\s()|*+?\[\]]+")


def regex_to_text(regex: ContentRegex, _prec: int = 0) -> str:
    # precedence: 0 alt, 1 seq, 2 postfix
    if isinstance(regex, Empty):
        return "#empty"
    if isinstance(regex, Epsilon):
        return "#eps"
    if isinstance(regex, Atom):
        return regex.name
    if isinstance(regex, Alt):
        text = f"{regex_to_text(regex.left, 1)} | {regex_to_text(regex.right, 0)}"
        return f"({text})" if _prec > 0 else text
    if isinstance(regex, Seq):
        text = f"{regex_to_text(regex.left, 2)} {regex_to_text(regex.right, 1)}"
        return f"({text})" if _prec > 1 else text
    suffix = {Star: "*", Plus: "+", Opt: "?"}[type(regex)]
    return f"{regex_to_text(regex.inner, 2)}{suffix}"


def parse_regex_text(text: str) -> ContentRegex:
    tokens = _TOKEN_RE.findall(text)
    pos = 0

    def peek() -> str | None:
        return tokens[pos] if pos < len(tokens) else None

    def parse_alt() -> ContentRegex:
        nonlocal pos
        parts = [parse_seq()]
        while peek() == "|":
            pos += 1
            parts.append(parse_seq())
        out = parts[-1]
        for part in reversed(parts[:-1]):
            out = Alt(part, out)
        return out

    def parse_seq() -> ContentRegex:
        nonlocal pos
        parts = [parse_postfix()]
        while peek() not in (None, "|", ")"):
            parts.append(parse_postfix())
        out = parts[-1]
        for part in reversed(parts[:-1]):
            out = Seq(part, out)
        return out

    def parse_postfix() -> ContentRegex:
        nonlocal pos
        out = parse_atom()
        while peek() in ("*", "+", "?"):
            out = {"*": Star, "+": Plus, "?": Opt}[tokens[pos]](out)
            pos += 1
        return out

    def parse_atom() -> ContentRegex:
        nonlocal pos
        tok = peek()
        if tok is None:
            raise GrammarFormatError("unexpected end of content regex")
        pos += 1
        if tok == "(":
            inner = parse_alt()
            if peek() != ")":
                raise GrammarFormatError("missing ')' in content regex")
            pos += 1
            return inner
        if tok == "#eps":
            return EPSILON
        if tok == "#empty":
            return EMPTY
        if tok in (")", "|", "*", "+", "?"):
            raise GrammarFormatError(f"unexpected {tok!r} in content regex")
        return Atom(tok)

    if not tokens:
        return EPSILON
    out = parse_alt()
    if pos != len(tokens):
        raise GrammarFormatError(f"trailing tokens in content regex: {tokens[pos:]}")
    return out


def rule_to_text(rule: Rule) -> str:
    if rule.is_text:
        return f"{rule.name} -> String"
    if isinstance(rule.content, Epsilon):
        return f"{rule.name} -> {rule.label} [ ]"
    return f"{rule.name} -> {rule.label} [ {regex_to_text(rule.content)} ]"


def parse_rule_text(text: str, line: int | None = None) -> Rule:
    m = re.match(r"\s*(\S+)\s*->\s*(.*?)\s*\Z", text)
    if not m:
        raise GrammarFormatError(f"not a rule: {text!r}", line)
    name, body = m.group(1), m.group(2)
    if body == "String":
        return Rule.text(name)
    bm = re.match(r"(\S+)\s*\[(.*)\]\s*\Z", body, re.S)
    if not bm:
        raise GrammarFormatError(f"rule body must be `String` or `label [ regex ]`: {text!r}", line)
    label, regex_text = bm.group(1), bm.group(2).strip()
    try:
        content = parse_regex_text(regex_text) if regex_text else EPSILON
        return Rule.element(name, label, content)
    except (GrammarError, GrammarFormatError) as exc:
        raise GrammarFormatError(str(exc), line) from None


def grammar_to_text(g: Grammar) -> str:
    lines = ["start: " + " ".join(sorted(g.start))]
    for tag in sorted(g.attributes):
        if g.attributes[tag]:
            lines.append(f"attlist: {tag} " + " ".join(g.attributes[tag]))
    lines.extend(rule_to_text(r) for r in g.sorted_rules())
    return "\n".join(lines) + "\n"


def _parse_grammar_lines(
    text: str,
) -> tuple[list[str], dict[str, tuple[str, ...]], list[tuple[int, str, str]]]:
    """Shared front-end for grammar and projector files.

    Returns (start names, attlists, rule lines as (lineno, mark, text))
    where mark is '+', '-', or '' for unmarked lines.
    """
    start: list[str] = []
    attrs: dict[str, tuple[str, ...]] = {}
    rule_lines: list[tuple[int, str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("start:"):
            start.extend(stripped[len("start:") :].split())
            continue
        if stripped.startswith("attlist:"):
            parts = stripped[len("attlist:") :].split()
            if not parts:
                raise GrammarFormatError("attlist needs a tag", lineno)
            attrs[parts[0]] = tuple(parts[1:])
            continue
        mark = ""
        if stripped[0] in "+-" and len(stripped) > 1 and stripped[1].isspace():
            mark, stripped = stripped[0], stripped[1:].strip()
        rule_lines.append((lineno, mark, stripped))
    if not start:
        raise GrammarFormatError("missing `start:` header")
    return start, attrs, rule_lines


def parse_grammar_text(text: str) -> Grammar:
    start, attrs, rule_lines = _parse_grammar_lines(text)
    rules = [parse_rule_text(line, lineno) for lineno, _, line in rule_lines]
    try:
        return Grammar(start, rules, attrs)
    except GrammarError as exc:
        raise GrammarFormatError(str(exc)) from None
