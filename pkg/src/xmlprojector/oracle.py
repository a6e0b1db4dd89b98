"""Ground truth: reference evaluators, document synthesis, soundness runs.

Everything here favors obviousness over speed.  ``eval_ell`` is a direct
denotational evaluator for fragment queries; ``eval_full`` evaluates the
parsed XPath subset (all axes, positional predicates, a small function
set) and exists purely as a test oracle.  ``generate_document`` draws
random members of a grammar's language; ``enumerate_documents`` lists them
exhaustively within bounds.  ``check_soundness`` ties the pipeline
together: prune with an inferred projector, then demand that every query
answers identically on the original and the pruned document.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Sequence

from .doc import Document, Element, TextNode, serialize, string_value, subtree_text
from .grammar import (
    Alt,
    Atom,
    ContentRegex,
    Empty,
    Epsilon,
    Grammar,
    Interpretation,
    Invalid,
    Opt,
    Plus,
    Rule,
    Seq,
    Star,
    validate_tree,
)
from .inference import Projector, infer_projector
from .pruner import InvalidDocumentError, prune_tree_with_origin
from .xpath import (
    Axis,
    BinaryOp,
    Expr,
    FullQuery,
    FullStep,
    FunctionCall,
    NodeAny,
    NodeTest,
    NumberLiteral,
    PathExists,
    PathExpr,
    PredAnd,
    Predicate,
    QueryEll,
    StepEll,
    StringLiteral,
    TagTest,
    TextTest,
    Wildcard,
    approximate_to_ell,
    parse_query,
)

_TreeNode = Document | Element | TextNode


class OracleError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Tree navigation shared by both evaluators


def _children(node: _TreeNode) -> list[_TreeNode]:
    if isinstance(node, TextNode):
        return []
    return [c for c in node.children if isinstance(c, (Element, TextNode))]


def _descendants(node: _TreeNode) -> list[_TreeNode]:
    out: list[_TreeNode] = []
    work = _children(node)
    while work:
        cur = work.pop(0)
        out.append(cur)
        work = _children(cur) + work
    return out


def _parent(node: _TreeNode) -> _TreeNode | None:
    if isinstance(node, Document):
        return None
    return node.parent  # type: ignore[return-value]


def _ancestors(node: _TreeNode) -> list[_TreeNode]:
    out: list[_TreeNode] = []
    cur = _parent(node)
    while cur is not None:
        out.append(cur)
        cur = _parent(cur)
    return out


def _test_match(node: _TreeNode, test: NodeTest) -> bool:
    if isinstance(test, NodeAny):
        return True
    if isinstance(test, TextTest):
        return isinstance(node, TextNode)
    if isinstance(test, Wildcard):
        return isinstance(node, Element)
    return isinstance(node, Element) and node.tag == test.tag


# ---------------------------------------------------------------------------
# Fragment evaluator

NodeSet = list[int]  # node ids in document order


def eval_ell(q: QueryEll, d: Document) -> NodeSet:
    """Evaluate a fragment query; the union of its branches, from the
    document node, as ids in document order."""
    out: set[int] = set()
    for branch in q.branches:
        nodes: set[_TreeNode] = {d}
        for step in branch:
            nodes = _ell_step(nodes, step)
        out.update(n.nid for n in nodes)
    return sorted(out)


def _ell_axis(node: _TreeNode, axis: Axis) -> list[_TreeNode]:
    if axis is Axis.SELF:
        return [node]
    if axis is Axis.CHILD:
        return _children(node)
    if axis is Axis.DESCENDANT:
        return _descendants(node)
    if axis is Axis.DESCENDANT_OR_SELF:
        return [node] + _descendants(node)
    if axis is Axis.PARENT:
        p = _parent(node)
        return [] if p is None else [p]
    if axis is Axis.ANCESTOR:
        return _ancestors(node)
    return [node] + _ancestors(node)


def _ell_step(nodes: set[_TreeNode], step: StepEll) -> set[_TreeNode]:
    out: set[_TreeNode] = set()
    for node in nodes:
        for target in _ell_axis(node, step.axis):
            if _test_match(target, step.test) and (
                step.pred is None or _ell_pred(target, step.pred)
            ):
                out.add(target)
    return out


def _ell_pred(node: _TreeNode, pred: Predicate) -> bool:
    if isinstance(pred, PathExists):
        nodes: set[_TreeNode] = {node}
        for step in pred.path:
            nodes = _ell_step(nodes, step)
            if not nodes:
                return False
        return True
    if isinstance(pred, PredAnd):
        return _ell_pred(node, pred.left) and _ell_pred(node, pred.right)
    return _ell_pred(node, pred.left) or _ell_pred(node, pred.right)


# ---------------------------------------------------------------------------
# Full-XPath evaluator (test oracle only)


@dataclass(frozen=True)
class AttrNode:
    owner: Element
    name: str
    value: str

    @property
    def rid(self) -> tuple:
        return ("attr", self.owner.nid, self.name)


ResultId = int | tuple


def eval_full(q: FullQuery, d: Document) -> set[ResultId]:
    out: set[ResultId] = set()
    for path in q.branches:
        for node in _full_path(path.steps, [d], d):
            out.add(node.rid if isinstance(node, AttrNode) else node.nid)
    return out


def _doc_order(nodes: Iterable[_TreeNode | AttrNode]) -> list[_TreeNode | AttrNode]:
    def key(n):
        if isinstance(n, AttrNode):
            return (n.owner.nid, 1, n.name)
        return (n.nid, 0, "")

    return sorted(set(nodes), key=key)


def _subtree_span(node: _TreeNode) -> int:
    # pre-order ids are contiguous within a subtree
    size = 1
    for child in _children(node):
        size += _subtree_span(child)
    return size


def _full_axis(node: _TreeNode | AttrNode, axis: str, doc: Document) -> list:
    """Candidates in axis order (reverse axes run backwards)."""
    if isinstance(node, AttrNode):
        if axis == "self":
            return [node]
        if axis in ("parent", "ancestor", "ancestor-or-self"):
            chain = [node.owner] + _ancestors(node.owner)
            if axis == "parent":
                return chain[:1]
            return ([node] if axis == "ancestor-or-self" else []) + chain
        return []
    if axis in ("self", "child", "descendant", "descendant-or-self", "parent", "ancestor", "ancestor-or-self"):
        return _ell_axis(node, Axis(axis))
    if axis == "attribute":
        if isinstance(node, Element):
            return [AttrNode(node, n, v) for n, v in node.attributes]
        return []
    if axis == "following-sibling" or axis == "preceding-sibling":
        parent = _parent(node)
        if parent is None:
            return []
        siblings = _children(parent)
        i = siblings.index(node)
        if axis == "following-sibling":
            return siblings[i + 1 :]
        return list(reversed(siblings[:i]))
    if axis in ("following", "preceding"):
        everything = [m for m in doc.iter_nodes() if isinstance(m, (Element, TextNode))]
        if axis == "following":
            cutoff = node.nid + _subtree_span(node)
            return [m for m in everything if m.nid >= cutoff]
        ancestors = set(id(a) for a in _ancestors(node))
        return list(
            reversed([m for m in everything if m.nid < node.nid and id(m) not in ancestors])
        )
    raise OracleError(f"unsupported axis in oracle: {axis}")


def _attr_test(node, test: NodeTest) -> bool:
    if isinstance(node, AttrNode):
        if isinstance(test, NodeAny) or isinstance(test, Wildcard):
            return True
        return isinstance(test, TagTest) and test.tag == node.name
    return _test_match(node, test)


def _full_path(steps: tuple[FullStep, ...], start: list, doc: Document) -> list:
    current = _doc_order(start)
    for step in steps:
        gathered: list = []
        for node in current:
            candidates = [
                n for n in _full_axis(node, step.axis, doc) if _attr_test(n, step.test)
            ]
            for pred in step.predicates:
                size = len(candidates)
                candidates = [
                    c
                    for i, c in enumerate(candidates)
                    if _pred_value(pred, c, i + 1, size, doc)
                ]
            gathered.extend(candidates)
        current = _doc_order(gathered)
    return current


def _pred_value(expr: Expr, node, position: int, size: int, doc: Document) -> bool:
    value = _expr_value(expr, node, position, size, doc)
    if isinstance(value, float):
        return value == position  # numeric predicate selects by position
    return _to_bool(value)


def _expr_value(expr: Expr, node, position: int, size: int, doc: Document):
    if isinstance(expr, PathExpr):
        start = [doc] if expr.absolute else [node]
        return _full_path(expr.steps, start, doc)
    if isinstance(expr, StringLiteral):
        return expr.value
    if isinstance(expr, NumberLiteral):
        return expr.value
    if isinstance(expr, BinaryOp):
        if expr.op in ("or", "and"):
            lv = _to_bool(_expr_value(expr.left, node, position, size, doc))
            if expr.op == "or":
                return lv or _to_bool(_expr_value(expr.right, node, position, size, doc))
            return lv and _to_bool(_expr_value(expr.right, node, position, size, doc))
        lv = _expr_value(expr.left, node, position, size, doc)
        rv = _expr_value(expr.right, node, position, size, doc)
        return _compare(expr.op, lv, rv)
    if isinstance(expr, FunctionCall):
        return _call(expr, node, position, size, doc)
    raise OracleError(f"unsupported expression in oracle: {expr!r}")


def _call(expr: FunctionCall, node, position: int, size: int, doc: Document):
    args = [_expr_value(a, node, position, size, doc) for a in expr.args]
    name = expr.name
    if name == "position" and not args:
        return float(position)
    if name == "last" and not args:
        return float(size)
    if name == "true":
        return True
    if name == "false":
        return False
    if name == "not" and len(args) == 1:
        return not _to_bool(args[0])
    if name == "count" and len(args) == 1 and isinstance(args[0], list):
        return float(len(args[0]))
    if name == "contains" and len(args) == 2:
        return _to_string(args[1]) in _to_string(args[0])
    if name == "starts-with" and len(args) == 2:
        return _to_string(args[0]).startswith(_to_string(args[1]))
    if name == "string":
        return _to_string(args[0]) if args else _node_string(node)
    if name == "string-length" and len(args) <= 1:
        return float(len(_to_string(args[0]) if args else _node_string(node)))
    if name == "number" and len(args) <= 1:
        return _to_number(args[0]) if args else _to_number(_node_string(node))
    if name == "normalize-space" and len(args) <= 1:
        text = _to_string(args[0]) if args else _node_string(node)
        return " ".join(text.split())
    raise OracleError(f"unsupported function in oracle: {name}()")


def _node_string(node) -> str:
    if isinstance(node, AttrNode):
        return node.value
    return string_value(node)


def _to_string(value) -> str:
    if isinstance(value, list):
        return _node_string(value[0]) if value else ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(int(value)) if value == int(value) else repr(value)
    return value


def _to_number(value) -> float:
    if isinstance(value, list):
        return _to_number(_to_string(value))
    if isinstance(value, bool):
        return 1.0 if value else 0.0
    if isinstance(value, float):
        return value
    try:
        return float(value.strip())
    except (ValueError, AttributeError):
        return float("nan")


def _to_bool(value) -> bool:
    if isinstance(value, list):
        return bool(value)
    if isinstance(value, bool):
        return value
    if isinstance(value, float):
        return value != 0 and value == value
    return bool(value)


def _compare(op: str, lv, rv) -> bool:
    def pairs():
        lefts = lv if isinstance(lv, list) else [lv]
        rights = rv if isinstance(rv, list) else [rv]
        for l in lefts:
            for r in rights:
                yield l, r

    if op in ("=", "!="):
        for l, r in pairs():
            if isinstance(lv, list) and isinstance(rv, list):
                equal = _node_string(l) == _node_string(r)
            elif isinstance(l, bool) or isinstance(r, bool):
                equal = _to_bool_scalar(l) == _to_bool_scalar(r)
            elif isinstance(l, float) or isinstance(r, float):
                equal = _scalar_number(l) == _scalar_number(r)
            else:
                equal = _scalar_string(l) == _scalar_string(r)
            if (op == "=") == equal:
                return True
        return False
    for l, r in pairs():
        ln, rn = _scalar_number(l), _scalar_number(r)
        if op == "<" and ln < rn:
            return True
        if op == "<=" and ln <= rn:
            return True
        if op == ">" and ln > rn:
            return True
        if op == ">=" and ln >= rn:
            return True
    return False


def _scalar_number(v) -> float:
    if isinstance(v, (Document, Element, TextNode, AttrNode)):
        return _to_number(_node_string(v))
    return _to_number(v)


def _scalar_string(v) -> str:
    if isinstance(v, (Document, Element, TextNode, AttrNode)):
        return _node_string(v)
    return _to_string(v)


def _to_bool_scalar(v) -> bool:
    if isinstance(v, (Document, Element, TextNode, AttrNode)):
        return True
    return _to_bool(v)


# ---------------------------------------------------------------------------
# Document synthesis


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    max_star_repeat: int = 3
    max_depth: int = 12
    text_alphabet: tuple[str, ...] = ("x", "y", "some text")
    wildcard_tags: tuple[str, ...] = ("a", "b", "c")
    attribute_probability: float = 0.5  # chance per declared attribute

    def __post_init__(self):
        if self.max_star_repeat < 0:
            raise ValueError("max_star_repeat must be >= 0")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")


_INF = float("inf")


def _min_depths(g: Grammar) -> dict[str, float]:
    """Depth of the shallowest tree each name can generate."""
    cost: dict[str, float] = {name: _INF for name in {r.name for r in g.rules}}
    changed = True
    while changed:
        changed = False
        for rule in g.rules:
            depth = _rule_depth(rule, cost)
            if depth < cost[rule.name]:
                cost[rule.name] = depth
                changed = True
    return cost


def _rule_depth(rule: Rule, cost: dict[str, float]) -> float:
    return 1.0 if rule.is_text else 1.0 + _mm(rule.content, cost)


def generate_document(g: Grammar, cfg: GenConfig = GenConfig()) -> Document:
    """Sample one document from the grammar's language, deterministically
    per (grammar, config).  Raises OracleError if no start name can finish
    within the depth budget."""
    cost = _min_depths(g)
    rng = random.Random(cfg.seed)

    blocked = [n for n in sorted(g.start) if cost[n] > cfg.max_depth]
    if len(blocked) == len(g.start):
        raise OracleError(
            "no finite derivation within depth "
            f"{cfg.max_depth}; blocking names: {', '.join(blocked)}"
        )

    def gen_name(name: str, budget: float, element_only: bool = False) -> Element | TextNode:
        affordable = [
            r
            for r in g.rules_of(name)
            if _rule_depth(r, cost) <= budget and not (element_only and r.is_text)
        ]
        rule = rng.choice(sorted(affordable, key=Rule.sort_key))
        if rule.is_text:
            return TextNode(rng.choice(cfg.text_alphabet))
        tag = rule.label.tag or rng.choice(cfg.wildcard_tags)
        attrs = tuple(
            (name, rng.choice(cfg.text_alphabet))
            for name in g.attributes.get(tag, ())
            if rng.random() < cfg.attribute_probability
        )
        elem = Element(tag, attrs)
        for child_name in gen_word(rule.content, budget - 1):
            child = gen_name(child_name, budget - 1)
            child.parent = elem
            elem.children.append(child)
        return elem

    def gen_word(regex: ContentRegex, budget: float) -> list[str]:
        if isinstance(regex, Epsilon):
            return []
        if isinstance(regex, Atom):
            return [regex.name]
        if isinstance(regex, Seq):
            return gen_word(regex.left, budget) + gen_word(regex.right, budget)
        if isinstance(regex, Alt):
            sides = [s for s in (regex.left, regex.right) if _mm(s, cost) <= budget]
            return gen_word(rng.choice(sides), budget)
        if isinstance(regex, Opt):
            if _mm(regex.inner, cost) <= budget and rng.random() < 0.5:
                return gen_word(regex.inner, budget)
            return []
        if isinstance(regex, (Star, Plus)):
            low = 1 if isinstance(regex, Plus) else 0
            if _mm(regex.inner, cost) > budget:
                reps = low  # Plus with an unaffordable body cannot occur on a chosen rule
            else:
                reps = rng.randint(low, max(low, cfg.max_star_repeat))
            out: list[str] = []
            for _ in range(reps):
                out.extend(gen_word(regex.inner, budget))
            return out
        raise OracleError("cannot generate from the empty language")

    rooted = [
        n
        for n in sorted(g.start)
        if any(not r.is_text and _rule_depth(r, cost) <= cfg.max_depth for r in g.rules_of(n))
    ]
    if not rooted:
        raise OracleError(
            f"no start name has an element derivation within depth {cfg.max_depth}"
        )
    start = rng.choice(rooted)
    return Document([gen_name(start, float(cfg.max_depth), element_only=True)])


def _mm(regex: ContentRegex, cost: dict[str, float]) -> float:
    if isinstance(regex, Empty):
        return _INF
    if isinstance(regex, Epsilon):
        return 0.0
    if isinstance(regex, Atom):
        return cost[regex.name]
    if isinstance(regex, Seq):
        return max(_mm(regex.left, cost), _mm(regex.right, cost))
    if isinstance(regex, Alt):
        return min(_mm(regex.left, cost), _mm(regex.right, cost))
    if isinstance(regex, (Star, Opt)):
        return 0.0
    return _mm(regex.inner, cost)


def enumerate_documents(
    g: Grammar, *, max_star_repeat: int = 2, max_depth: int = 8, text: str = "t"
) -> Iterator[Document]:
    """Bounded-exhaustive enumeration: every document whose star repetitions
    stay within `max_star_repeat` and whose depth stays within `max_depth`,
    with a single representative text string."""
    cost = _min_depths(g)
    memo: dict[tuple[str, int], list[tuple]] = {}

    def trees(name: str, depth: int) -> list[tuple]:
        key = (name, depth)
        if key in memo:
            return memo[key]
        out: list[tuple] = []
        for rule in g.rules_of(name):
            if rule.is_text:
                out.append(("t", text))
            elif 1 + _mm(rule.content, cost) <= depth:
                tag = rule.label.tag or "n"
                for word in words(rule.content, depth - 1):
                    combos = [trees(n, depth - 1) for n in word]
                    if any(not c for c in combos):
                        continue
                    out.extend(("e", tag, children) for children in _product(combos))
        memo[key] = out
        return out

    def words(regex: ContentRegex, depth: int) -> list[tuple[str, ...]]:
        if isinstance(regex, Empty):
            return []
        if isinstance(regex, Epsilon):
            return [()]
        if isinstance(regex, Atom):
            return [(regex.name,)] if cost[regex.name] <= depth else []
        if isinstance(regex, Seq):
            return [
                a + b for a in words(regex.left, depth) for b in words(regex.right, depth)
            ]
        if isinstance(regex, Alt):
            return list(dict.fromkeys(words(regex.left, depth) + words(regex.right, depth)))
        if isinstance(regex, Opt):
            return list(dict.fromkeys([()] + words(regex.inner, depth)))
        base = words(regex.inner, depth)
        low = 1 if isinstance(regex, Plus) else 0
        out: list[tuple[str, ...]] = [] if low else [()]
        layer: list[tuple[str, ...]] = [()]
        for _ in range(max_star_repeat if not isinstance(regex, Plus) else max(1, max_star_repeat)):
            layer = [w + b for w in layer for b in base]
            out.extend(layer)
        return list(dict.fromkeys(out))

    def _product(lists: list[list[tuple]]) -> Iterator[tuple]:
        if not lists:
            yield ()
            return
        for head in lists[0]:
            for rest in _product(lists[1:]):
                yield (head,) + rest

    def build(template: tuple) -> Element | TextNode:
        if template[0] == "t":
            return TextNode(template[1])
        elem = Element(template[1])
        for child_t in template[2]:
            child = build(child_t)
            child.parent = elem
            elem.children.append(child)
        return elem

    for name in sorted(g.start):
        for template in trees(name, max_depth):
            if template[0] == "t":
                continue  # documents need an element root
            yield Document([build(template)])


# ---------------------------------------------------------------------------
# Soundness checking


def require_interpretation(doc: Document, g: Grammar) -> Interpretation:
    result = validate_tree(doc, g)
    if isinstance(result, Invalid):
        raise InvalidDocumentError(result)
    return result


def results_match(
    expected: Iterable[ResultId],
    got: Iterable[ResultId],
    original: Document,
    pruned: Document,
    origin: dict[int, int],
) -> bool:
    """Compare query results across pruning.

    `got` ids live in the pruned document and are mapped back through
    `origin`.  Result identity must agree, and element/text results must
    additionally keep their whole subtree byte-for-byte."""
    mapped: set[ResultId] = set()
    for rid in got:
        if isinstance(rid, tuple):
            mapped.add((rid[0], origin[rid[1]], rid[2]))
        else:
            mapped.add(origin[rid])
    expected_set = set(expected)
    if mapped != expected_set:
        return False

    old_to_new = {old: new for new, old in origin.items()}
    original_nodes = {n.nid: n for n in original.iter_nodes()}
    pruned_nodes = {n.nid: n for n in pruned.iter_nodes()}
    for rid in expected_set:
        if isinstance(rid, tuple):
            continue  # attribute results have no subtree
        new_id = old_to_new.get(rid)
        if new_id is None:
            return False
        if subtree_text(original_nodes[rid]) != subtree_text(pruned_nodes[new_id]):
            return False
    return True


@dataclass
class SoundnessFailure:
    seed: int
    query: str
    document: str
    detail: str


@dataclass
class SoundnessReport:
    n: int
    passed: bool
    failures: list[SoundnessFailure] = field(default_factory=list)
    bytes_in: int = 0
    bytes_out: int = 0

    def lines(self, doc_paths: dict[int, str] | None = None) -> list[str]:
        if self.passed:
            return [f"PASS n={self.n}"]
        out = []
        for i, failure in enumerate(self.failures):
            where = (doc_paths or {}).get(i, "-")
            out.append(f"FAIL seed={failure.seed} query={failure.query} doc={where}")
        return out


def check_soundness(
    g: Grammar,
    queries: Sequence[str | FullQuery],
    n: int,
    cfg: GenConfig = GenConfig(),
    *,
    projector: Projector | None = None,
    stop_on_first_failure: bool = False,
) -> SoundnessReport:
    """Generate n documents and verify that pruning preserves every query.

    The projector defaults to the one inferred for the whole batch; pass
    one explicitly for fault-injection runs.
    """
    parsed: list[FullQuery] = [q if isinstance(q, FullQuery) else parse_query(q) for q in queries]
    texts = [q if isinstance(q, str) else "<ast>" for q in queries]
    ells = [approximate_to_ell(q) for q in parsed]
    pi = projector if projector is not None else infer_projector(ells, g)

    report = SoundnessReport(n=n, passed=True)
    for i in range(n):
        doc = generate_document(g, replace(cfg, seed=cfg.seed + i))
        interp = require_interpretation(doc, g)
        pruned, origin = prune_tree_with_origin(doc, pi, interpretation=interp)
        report.bytes_in += len(serialize(doc).encode("utf-8"))
        report.bytes_out += len(serialize(pruned).encode("utf-8"))
        for text, query in zip(texts, parsed):
            expected = eval_full(query, doc)
            got = eval_full(query, pruned)
            try:
                ok = results_match(expected, got, doc, pruned, origin)
            except KeyError:
                ok = False  # result node survived with no origin: impossible mapping
            if not ok:
                report.passed = False
                report.failures.append(
                    SoundnessFailure(
                        seed=cfg.seed + i,
                        query=text,
                        document=serialize(doc),
                        detail=f"expected {sorted(map(str, expected))}",
                    )
                )
                if stop_on_first_failure:
                    return report
    return report
