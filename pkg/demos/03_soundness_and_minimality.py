"""The verification harness: generated documents as ground truth.

check_soundness generates random members of the grammar's language, prunes
them, and insists every query answers identically before and after.
minimality_check then hunts for a kept rule that could have been dropped;
on the running example there is none, and planting one is detected.
"""

from xmlprojector import (
    GenConfig,
    Projector,
    approximate_to_ell,
    check_soundness,
    infer_projector,
    minimality_check,
    parse_dtd,
    parse_query,
)

DTD = """
<!ELEMENT doc (a*)>
<!ELEMENT a (b, c?)>
<!ELEMENT b (#PCDATA)>
<!ELEMENT c (#PCDATA)>
"""

grammar = parse_dtd(DTD)
queries = ["/doc/a/b", "/doc/a[c]/b"]

report = check_soundness(grammar, queries, n=150, cfg=GenConfig(seed=0, max_depth=8))
for line in report.lines():
    print(line)
print(f"kept {report.bytes_out} of {report.bytes_in} serialized bytes across the corpus")

query = approximate_to_ell(parse_query("/doc/a/b"))
projector = infer_projector([query], grammar)
verdict = minimality_check(projector, [query], budget=200)
print(f"\n/doc/a/b projector: {verdict.status} over {verdict.docs_tested} documents")

spare = next(r for r in grammar.rules if r.name == "C")
planted = Projector(grammar, projector.kept | {spare})
verdict = minimality_check(planted, [query], budget=200)
print(f"after planting rule C: {verdict.status} ({verdict.witness.name} is unnecessary)")
