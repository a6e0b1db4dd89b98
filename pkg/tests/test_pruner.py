import pytest

from xmlprojector import (
    GenConfig,
    Projector,
    any_grammar,
    approximate_to_ell,
    empty_projector,
    generate_document,
    identity_projector,
    infer_projector,
    parse_query,
    parse_xml,
    serialize,
    serialize_events,
    tree_events,
    validate_tree,
)
from xmlprojector.doc import iter_events
from xmlprojector.grammar import EPSILON, Alt, Atom, Grammar, Rule, Star
from xmlprojector.pruner import (
    InvalidDocumentError,
    NotStreamableError,
    PruneStats,
    UnresolvableTagError,
    prune_stream,
    prune_tree,
)

from conftest import D0_XML


def _ell(text):
    return approximate_to_ell(parse_query(text))


def _stream(xml, projector, **kw):
    return serialize_events(prune_stream(iter_events(xml), projector, **kw))


# ---------------------------------------------------------------------------
# Streaming pruner


def test_stream_drops_unqueried_subtrees(g0):
    pi = infer_projector([_ell("/doc/a/b")], g0)
    # oracle: prune the parsed tree, then serialize
    expected = serialize(prune_tree(parse_xml(D0_XML), pi))
    assert expected == "<doc><a><b>x</b></a></doc>"
    assert _stream(D0_XML, pi) == expected


def test_stream_identity_projector(g0):
    assert _stream(D0_XML, identity_projector(g0)) == D0_XML


def test_stream_keeps_predicate_witness_as_empty_shell(g0):
    pi = infer_projector([_ell("/doc/a[c]/b")], g0)
    assert _stream(D0_XML, pi) == "<doc><a><b>x</b><c></c></a></doc>"


def test_stream_empty_projector_emits_nothing(g0):
    assert _stream(D0_XML, empty_projector(g0)) == ""


def test_stream_stats(g0):
    pi = infer_projector([_ell("/doc/a/b")], g0)
    stats = PruneStats()
    _stream(D0_XML, pi, stats=stats)
    assert stats.elements_in == 4 and stats.elements_out == 3
    assert stats.text_bytes_in == 2 and stats.text_bytes_out == 1
    assert stats.max_depth == 3


def test_stream_stats_identity_preserves_counts(g0):
    stats = PruneStats()
    _stream(D0_XML, identity_projector(g0), stats=stats)
    assert stats.elements_in == stats.elements_out
    assert stats.text_bytes_in == stats.text_bytes_out


def test_stream_whitespace_in_element_content_dropped(g0):
    pi = identity_projector(g0)
    pretty = "<doc>\n  <a><b>x</b>\n  <c>y</c></a>\n</doc>"
    assert _stream(pretty, pi) == D0_XML


def test_stream_attributes_preserved():
    from conftest import XMARK_DTD
    from xmlprojector import parse_dtd

    g = parse_dtd(XMARK_DTD)
    pi = infer_projector([_ell("//person/name")], g)
    xml = (
        '<site><regions><africa></africa><asia></asia><europe></europe></regions>'
        "<categories></categories><people>"
        '<person id="p1"><name>n</name><emailaddress>e</emailaddress></person>'
        "</people><open_auctions></open_auctions><closed_auctions></closed_auctions></site>"
    )
    assert '<person id="p1"><name>n</name></person>' in _stream(xml, pi)


def test_stream_strict_policy_raises_with_path(g0):
    pi = identity_projector(g0)
    with pytest.raises(UnresolvableTagError) as err:
        list(prune_stream(iter_events("<doc><a><z/><b>x</b></a></doc>"), pi))
    assert err.value.path == "/doc/a/z"


def test_stream_drop_policy_prunes_unknown_subtree(g0):
    pi = identity_projector(g0)
    out = _stream("<doc><a><z><zz/></z><b>x</b></a></doc>", pi, policy="drop")
    assert out == "<doc><a><b>x</b></a></doc>"


def test_stream_cdata_normalized_and_escaped(g0):
    pi = identity_projector(g0)
    xml = "<doc><a><b><![CDATA[x & y <z>]]></b></a></doc>"
    assert _stream(xml, pi) == "<doc><a><b>x &amp; y &lt;z&gt;</b></a></doc>"


def test_stream_counts_text_bytes_not_chars(g0):
    stats = PruneStats()
    _stream("<doc><a><b>héllo</b></a></doc>", identity_projector(g0), stats=stats)
    assert stats.text_bytes_in == len("héllo".encode("utf-8")) == 6
    assert stats.text_bytes_out == 6


def test_stream_comments_and_pis_ride_along(g0):
    pi = infer_projector([_ell("/doc/a/b")], g0)
    xml = "<?pi data?><!--top--><doc><a><!--in--><b>x</b><c><!--gone-->y</c></a></doc>"
    out = _stream(xml, pi)
    assert out == "<?pi data?><!--top--><doc><a><!--in--><b>x</b></a></doc>"


def test_stream_requires_streamable_grammar():
    g = Grammar(
        start=("F",),
        rules=(
            Rule.element("F", "f", Alt(Atom("A"), Atom("B"))),
            Rule.element("A", "a", EPSILON),
            Rule.element("B", "a", EPSILON),
        ),
    )
    with pytest.raises(NotStreamableError):
        list(prune_stream(iter_events("<f><a/></f>"), identity_projector(g)))


def test_stream_rejects_unknown_policy(g0):
    with pytest.raises(ValueError):
        list(prune_stream(iter_events(D0_XML), identity_projector(g0), policy="maybe"))


# ---------------------------------------------------------------------------
# In-memory pruner


def test_tree_prune_drops_unqueried_subtrees(g0, d0):
    pi = infer_projector([_ell("/doc/a/b")], g0)
    assert serialize(prune_tree(d0, pi)) == "<doc><a><b>x</b></a></doc>"


def test_tree_prune_empty_projector_gives_empty_document(g0, d0):
    assert serialize(prune_tree(d0, empty_projector(g0))) == ""


def test_tree_prune_invalid_document_reports_path(g0):
    with pytest.raises(InvalidDocumentError) as err:
        prune_tree(parse_xml("<doc><a><c>y</c></a></doc>"), identity_projector(g0))
    assert err.value.path == "/doc/a"


def test_tree_prune_handles_non_streamable_grammars():
    # same tag generated by two names; only the B-flavored subtree survives
    g = Grammar(
        start=("F",),
        rules=(
            Rule.element("F", "f", Star(Alt(Atom("A"), Atom("B")))),
            Rule.element("A", "a", Star(Atom("TA"))),
            Rule.text("TA"),
            Rule.element("B", "a", Star(Atom("C"))),
            Rule.element("C", "c", EPSILON),
        ),
    )
    doc = parse_xml("<f><a>t</a><a><c/></a></f>")
    keep_b = Projector(g, frozenset(r for r in g.rules if r.name in ("F", "B", "C")))
    assert serialize(prune_tree(doc, keep_b)) == "<f><a><c></c></a></f>"


def test_empty_projector_on_any_grammar():
    g = any_grammar()
    doc = parse_xml("<r><x>t</x></r>")
    assert serialize(prune_tree(doc, empty_projector(g))) == ""


# ---------------------------------------------------------------------------
# Agreement between the two pruners


def test_pruners_agree_on_generated_documents(g0, recursive_grammar, mixed_grammar):
    queries = ["/doc/a/b", "//c", "/doc/a[c]/b", "//b/ancestor::a", "//title", "//para/text()", "//em"]
    for g in (g0, recursive_grammar, mixed_grammar):
        projectors = [identity_projector(g), empty_projector(g)]
        for text in queries:
            projectors.append(infer_projector([_ell(text)], g))
        for seed in range(12):
            doc = generate_document(g, GenConfig(seed=seed, max_depth=8))
            events = list(tree_events(doc))
            for pi in projectors:
                via_tree = serialize(prune_tree(doc, pi))
                via_stream = serialize_events(prune_stream(iter(events), pi))
                assert via_tree == via_stream


def test_stats_monotone_on_generated_documents(g0):
    pi = infer_projector([_ell("/doc/a/b")], g0)
    for seed in range(20):
        doc = generate_document(g0, GenConfig(seed=seed))
        stats = PruneStats()
        list(prune_stream(tree_events(doc), pi, stats=stats))
        assert stats.elements_out <= stats.elements_in
        assert stats.text_bytes_out <= stats.text_bytes_in


def test_pruned_document_validates_against_erasure(g0):
    # names with no kept rule generate the empty forest: dropping their
    # rules from the grammar (and erasing dangling atoms) accepts the output
    pi = infer_projector([_ell("/doc/a/b")], g0)
    doc = generate_document(g0, GenConfig(seed=5))
    pruned = prune_tree(doc, pi)
    erased = Grammar(
        start=("Doc",),
        rules=(
            Rule.element("Doc", "doc", Star(Atom("A"))),
            Rule.element("A", "a", Atom("B")),  # C? erased: no kept C rule
            Rule.element("B", "b", Star(Atom("TB"))),
            Rule.text("TB"),
        ),
    )
    from xmlprojector import Invalid

    assert not isinstance(validate_tree(pruned, erased), Invalid)
