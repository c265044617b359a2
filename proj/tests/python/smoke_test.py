"""End-to-end smoke test for the replan python package."""

import replan as rp

CATALOG = """
TABLE orders 20000 100
TABLE lines 100000 80
COLUMN orders.okey 20000
COLUMN orders.status 5
COLUMN lines.okey 20000
INDEX o_status_idx ON orders(status)
PARAM noise_sigma 0.01
"""

WORKLOAD = """
QUERY S1
REF orders Q1
REF lines Q2
JOIN Q1.okey = Q2.okey EST 0.00005 TRUE 0.00005
PRED Q1.status = open EST 0.01 TRUE 0.4
"""


def test_parse_and_plan():
    catalog = rp.Catalog.parse(CATALOG)
    workload = rp.Workload.parse(WORKLOAD)
    assert workload.query_ids() == ["S1"]

    (query,) = rp.queries(workload)
    plan = rp.optimize(query, catalog)
    assert plan.pop_count() >= 4
    assert plan.join_count() == 1

    # Text round trip.
    text = plan.serialize()
    again = rp.Plan.parse(text)
    assert again == plan
    assert again.serialize() == text

    # Triple encoding mentions the operator vocabulary.
    triples = plan.to_triples()
    assert "hasPopType" in triples
    assert "hasOutputStream" in triples

    cost = rp.estimated_cost(plan, query, catalog)
    assert cost > 0
    stats = rp.true_run(plan, query, catalog, seed=7)
    assert stats["elapsed"] > 0
    assert stats["physical_reads"] <= stats["logical_reads"]

    sampled = rp.random_plan(query, catalog, seed=3)
    assert sampled == rp.random_plan(query, catalog, seed=3)


def test_learn_and_reoptimize():
    catalog, workload = rp.scenario("sort_spill")
    assert "sort_spill" in rp.scenario_names()

    kb = rp.learn(workload, catalog, max_joins=4, seed=1, workload_id="smoke")
    assert len(kb) >= 1

    # Save / load round trip.
    text = kb.save()
    again = rp.KnowledgeBase.load(text)
    assert again.save() == text
    assert sorted(again.template_ids()) == sorted(kb.template_ids())

    (query,) = rp.queries(workload)
    plan = rp.optimize(query, catalog)
    assert len(rp.match(plan, kb)) >= 1

    report = rp.reoptimize(query, catalog, kb, verify=True, seed=5)
    assert report["applied"], "expected at least one applied rewrite"
    assert report["reopt_elapsed"] <= report["original_elapsed"]
    assert "<OPTGUIDELINES>" in report["guidelines_xml"]


def main():
    test_parse_and_plan()
    test_learn_and_reoptimize()
    print("smoke ok")


if __name__ == "__main__":
    main()
