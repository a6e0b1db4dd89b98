"""How full XPath collapses into the analyzable fragment.

The analysis understands upward/downward axes and and/or existence
predicates.  Everything else is rewritten to something at least as
data-hungry, so pruning stays sound: sideways axes reroute through
parent/child, value-reading predicates keep the subtrees they read, and
opaque constructs keep the candidate's whole subtree.
"""

from xmlprojector import approximate_to_ell, ell_to_text, parse_query

EXAMPLES = [
    "/doc/a/b",                              # already in the fragment
    "//c",                                   # abbreviation expansion
    "/doc/a[position()=2]/b",                # positional: keep position only
    "/doc/a[contains(c,'y')]/b",             # function reads c: keep c subtrees
    "/doc/a[not(c)]/b",                      # negation: never filter, keep shells
    "/a/b/following-sibling::c",             # sideways axis via parent/child
    "/a/following::c",                       # document-order axis, widened
    "//person/@id",                          # attributes ride along with elements
    "/doc/a[/doc/c]/b",                      # absolute predicate: extra branch
    "//x[strange(y/z)]",                     # unknown function: keep everything it sees
]

width = max(len(q) for q in EXAMPLES)
for text in EXAMPLES:
    approx = ell_to_text(approximate_to_ell(parse_query(text)))
    print(f"{text:<{width}}  ->  {approx}")
