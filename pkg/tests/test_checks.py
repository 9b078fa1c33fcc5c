import json

from cartankit import TripleSpace
from cartankit.checks import Report, axiom_suite, flipped_triple_product, schwarz_pick_violations


def test_report_fails_iff_a_record_fails():
    rep = Report("r")
    rep.add("a", 1e-12, 1e-10, "x = x")
    assert rep.passed
    rep.add("b", 2.0, 1.0, "y = y")
    assert not rep.passed
    d = rep.to_dict()
    assert d["status"] == "fail"
    assert [r["status"] for r in d["records"]] == ["pass", "fail"]
    assert all(r["identity"] for r in d["records"])
    json.dumps(d)


def test_explicit_pass_flag_overrides_threshold():
    rep = Report("r")
    rep.add("count", 0, 0, "no violations", passed=True)
    assert rep.passed


def test_flipped_product_breaks_positivity():
    # a b* c - c b* a still satisfies the Jordan identity, but a□a is no longer positive
    rep = axiom_suite(TripleSpace.parse("rect:2x2"), samples=10, product=flipped_triple_product)
    status = {r.name: r.passed for r in rep.records}
    assert not status["box spectrum"] and not status["norm of a□a"]
    assert not rep.passed


def test_schwarz_pick_deterministic():
    sp = TripleSpace.parse("rect:2x2")
    assert schwarz_pick_violations(sp, 50, 7) == schwarz_pick_violations(sp, 50, 7)
    assert schwarz_pick_violations(sp, 50, 7)[0] == 0
