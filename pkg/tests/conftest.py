"""Shared fixtures: the running-example grammar, the acceptance DTD corpus,
and deterministic writers for large synthetic documents."""

from __future__ import annotations

import pytest

from xmlprojector import parse_dtd, parse_xml

G0_DTD = """\
<!ELEMENT doc (a*)>
<!ELEMENT a (b, c?)>
<!ELEMENT b (#PCDATA)>
<!ELEMENT c (#PCDATA)>
"""

D0_XML = "<doc><a><b>x</b><c>y</c></a></doc>"

# A trimmed auction-site schema in the style of the XMark benchmark:
# fat item descriptions with recursive parlists, lean people records,
# mixed-content rich text, attributes on several elements.
XMARK_DTD = """\
<!ELEMENT site (regions, categories, people, open_auctions, closed_auctions)>
<!ELEMENT regions (africa, asia, europe)>
<!ELEMENT africa (item*)>
<!ELEMENT asia (item*)>
<!ELEMENT europe (item*)>
<!ELEMENT item (location, quantity, name, payment, description, shipping, incategory*, mailbox)>
<!ATTLIST item id ID #REQUIRED>
<!ELEMENT location (#PCDATA)>
<!ELEMENT quantity (#PCDATA)>
<!ELEMENT name (#PCDATA)>
<!ELEMENT payment (#PCDATA)>
<!ELEMENT shipping (#PCDATA)>
<!ELEMENT description (text | parlist)>
<!ELEMENT text (#PCDATA | bold | keyword | emph)*>
<!ELEMENT bold (#PCDATA | bold | keyword | emph)*>
<!ELEMENT keyword (#PCDATA | bold | keyword | emph)*>
<!ELEMENT emph (#PCDATA | bold | keyword | emph)*>
<!ELEMENT parlist (listitem*)>
<!ELEMENT listitem (text | parlist)>
<!ELEMENT incategory EMPTY>
<!ATTLIST incategory category IDREF #REQUIRED>
<!ELEMENT mailbox (mail*)>
<!ELEMENT mail (from, to, date, text)>
<!ELEMENT from (#PCDATA)>
<!ELEMENT to (#PCDATA)>
<!ELEMENT date (#PCDATA)>
<!ELEMENT categories (category*)>
<!ELEMENT category (name, description)>
<!ATTLIST category id ID #REQUIRED>
<!ELEMENT people (person*)>
<!ELEMENT person (name, emailaddress, phone?, address?, creditcard?, profile?)>
<!ATTLIST person id ID #REQUIRED>
<!ELEMENT emailaddress (#PCDATA)>
<!ELEMENT phone (#PCDATA)>
<!ELEMENT address (street, city, country, zipcode)>
<!ELEMENT street (#PCDATA)>
<!ELEMENT city (#PCDATA)>
<!ELEMENT country (#PCDATA)>
<!ELEMENT zipcode (#PCDATA)>
<!ELEMENT creditcard (#PCDATA)>
<!ELEMENT profile (interest*, education?, gender?, business, age?)>
<!ATTLIST profile income CDATA #IMPLIED>
<!ELEMENT interest EMPTY>
<!ATTLIST interest category IDREF #REQUIRED>
<!ELEMENT education (#PCDATA)>
<!ELEMENT gender (#PCDATA)>
<!ELEMENT business (#PCDATA)>
<!ELEMENT age (#PCDATA)>
<!ELEMENT open_auctions (open_auction*)>
<!ELEMENT open_auction (initial, bidder*, current, itemref, seller)>
<!ATTLIST open_auction id ID #REQUIRED>
<!ELEMENT initial (#PCDATA)>
<!ELEMENT current (#PCDATA)>
<!ELEMENT bidder (date, increase)>
<!ELEMENT increase (#PCDATA)>
<!ELEMENT itemref EMPTY>
<!ATTLIST itemref item IDREF #REQUIRED>
<!ELEMENT seller EMPTY>
<!ATTLIST seller person IDREF #REQUIRED>
<!ELEMENT closed_auctions (closed_auction*)>
<!ELEMENT closed_auction (seller, buyer, itemref, price, date)>
<!ELEMENT buyer EMPTY>
<!ATTLIST buyer person IDREF #REQUIRED>
<!ELEMENT price (#PCDATA)>
"""

RECURSIVE_DTD = """\
<!ELEMENT doc (section*)>
<!ELEMENT section (title, (para | section)*)>
<!ELEMENT title (#PCDATA)>
<!ELEMENT para (#PCDATA)>
"""

MIXED_DTD = """\
<!ELEMENT article (title, para*)>
<!ELEMENT title (#PCDATA)>
<!ELEMENT para (#PCDATA | em | strong | code)*>
<!ELEMENT em (#PCDATA | strong)*>
<!ELEMENT strong (#PCDATA)>
<!ELEMENT code EMPTY>
"""

# Eight element levels for the streaming memory/timing runs.
DEEP_DTD = """\
<!ELEMENT root (sec*)>
<!ELEMENT sec (meta, blk*)>
<!ELEMENT meta (#PCDATA)>
<!ELEMENT blk (par*)>
<!ELEMENT par (line*)>
<!ELEMENT line (word*)>
<!ELEMENT word (piece*)>
<!ELEMENT piece (atom*)>
<!ELEMENT atom (#PCDATA)>
"""


@pytest.fixture(scope="session")
def g0():
    return parse_dtd(G0_DTD)


@pytest.fixture()
def d0():
    return parse_xml(D0_XML)


@pytest.fixture(scope="session")
def xmark_grammar():
    return parse_dtd(XMARK_DTD)


@pytest.fixture(scope="session")
def recursive_grammar():
    return parse_dtd(RECURSIVE_DTD)


@pytest.fixture(scope="session")
def mixed_grammar():
    return parse_dtd(MIXED_DTD)


@pytest.fixture(scope="session")
def deep_grammar():
    return parse_dtd(DEEP_DTD)


# ---------------------------------------------------------------------------
# Large synthetic documents (deterministic, written in big chunks)

_ATOM_TEXT = "lorem ipsum dolor sit amet consectetur adipiscing elit sed do eiusmod tempor941"


def deep_sec_unit() -> str:
    atom = f"<atom>{_ATOM_TEXT}</atom>"
    piece = f"<piece>{atom}</piece>"
    word = f"<word>{piece * 2}</word>"
    line = f"<line>{word * 2}</line>"
    par = f"<par>{line * 2}</par>"
    blk = f"<blk>{par * 2}</blk>"
    return f"<sec><meta>section-header-0123456789</meta>{blk * 2}</sec>"


def write_deep_doc(path, target_bytes: int) -> int:
    """Valid against DEEP_DTD, element depth exactly 8, about target_bytes."""
    unit = deep_sec_unit()
    written = 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("<root>")
        written += len("<root>") + len("</root>")
        block = unit * 64
        while written + len(block) < target_bytes:
            fh.write(block)
            written += len(block)
        while written < target_bytes:
            fh.write(unit)
            written += len(unit)
        fh.write("</root>")
    return written


_DESCRIPTION = (
    "<description><text>offer of the day "
    "<bold>rare</bold> collectible with <keyword>provenance</keyword> papers, "
    "original packaging, minor wear consistent with age, ships insured "
    "<emph>tracked</emph> worldwide from our warehouse; payment due within "
    "five business days of auction close</text></description>"
)


def _xmark_item(i: int) -> str:
    return (
        f'<item id="item{i}"><location>loc{i}</location><quantity>1</quantity>'
        f"<name>thing {i}</name><payment>Cash</payment>{_DESCRIPTION}"
        f"<shipping>standard</shipping><incategory category=\"cat{i % 7}\"></incategory>"
        f"<mailbox><mail><from>u{i}</from><to>v{i}</to><date>01/02/2003</date>"
        f"<text>please consider my generous offer number {i}</text></mail></mailbox></item>"
    )


def _xmark_person(i: int) -> str:
    extra = (
        f"<address><street>{i} Main St</street><city>Springfield</city>"
        f"<country>US</country><zipcode>{10000 + i}</zipcode></address>"
        if i % 2
        else ""
    )
    profile = (
        f'<profile income="{40000 + i}"><interest category="cat{i % 7}"></interest>'
        f"<business>No</business><age>{20 + i % 50}</age></profile>"
        if i % 3
        else ""
    )
    return (
        f'<person id="person{i}"><name>person {i}</name>'
        f"<emailaddress>mailto:p{i}@example.net</emailaddress>{extra}"
        f"<creditcard>1234 5678 9012 {i % 10000:04d}</creditcard>{profile}</person>"
    )


def _xmark_auction(i: int) -> str:
    bidders = "".join(
        f"<bidder><date>0{b + 1}/02/2003</date><increase>{b + 1}.50</increase></bidder>"
        for b in range(i % 3)
    )
    return (
        f'<open_auction id="auction{i}"><initial>{i}.00</initial>{bidders}'
        f'<current>{i + 9}.00</current><itemref item="item{i}"></itemref>'
        f'<seller person="person{i}"></seller></open_auction>'
    )


def write_xmark_doc(path, target_bytes: int) -> int:
    """Valid against XMARK_DTD; item descriptions dominate the byte count."""
    regions = ("africa", "asia", "europe")
    i = 0
    written = 0
    with open(path, "w", encoding="utf-8") as fh:

        def emit(texts: list[str]) -> None:
            nonlocal written
            chunk = "".join(texts)
            fh.write(chunk)
            written += len(chunk)

        emit(["<site><regions>"])
        # items carry the description payload: aim them at ~80% of the target
        per_region = max(1, int(target_bytes * 0.80) // (3 * len(_xmark_item(10))))
        for region in regions:
            emit([f"<{region}>"])
            items = []
            for _ in range(per_region):
                items.append(_xmark_item(i))
                i += 1
                if len(items) >= 50:
                    emit(items)
                    items = []
            emit(items)
            emit([f"</{region}>"])
        emit(["</regions><categories>"])
        emit(
            [
                f'<category id="cat{c}"><name>category {c}</name>{_DESCRIPTION}</category>'
                for c in range(7)
            ]
        )
        emit(["</categories><people>"])
        n_people = max(1, i // 2)
        people = []
        for p in range(n_people):
            people.append(_xmark_person(p))
            if len(people) >= 50:
                emit(people)
                people = []
        emit(people)
        emit(["</people><open_auctions>"])
        emit([_xmark_auction(a) for a in range(min(200, i))])
        emit(["</open_auctions><closed_auctions>"])
        emit(
            [
                f'<closed_auction><seller person="person{c}"></seller>'
                f'<buyer person="person{c + 1}"></buyer><itemref item="item{c}"></itemref>'
                f"<price>{c}.99</price><date>03/04/2003</date></closed_auction>"
                for c in range(min(100, i))
            ]
        )
        emit(["</closed_auctions></site>"])
    return written
