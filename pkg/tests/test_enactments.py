from collections import Counter

from compact.enactments import CANONICAL, EnactmentGeneratorConfig, generate
from compact.ledger import LedgerStore


def test_deterministic_per_seed():
    a = generate(EnactmentGeneratorConfig(count=100, seed=5))
    b = generate(EnactmentGeneratorConfig(count=100, seed=5))
    c = generate(EnactmentGeneratorConfig(count=100, seed=6))
    assert list(a.log_lines()) == list(b.log_lines())
    assert list(a.log_lines()) != list(c.log_lines())


def test_enactments_follow_canonical_prefixes():
    order = [name for name, *_ in CANONICAL]
    store = generate(EnactmentGeneratorConfig(count=2000, seed=1))
    depths = Counter()
    revoked = 0
    for doc in store.docs():
        names = [e.name for e in sorted(doc.events.values(), key=lambda e: e.time)]
        if "RevokeAccess" in names:
            revoked += 1
            assert names.index("RevokeAccess") > names.index("GrantAccess")
            names.remove("RevokeAccess")
        assert names == order[: len(names)]
        depths[len(names)] += 1
        assert len(doc.id) == 32
    assert set(depths) == set(range(len(order) + 1))
    visit_only = depths[1]
    reach_shared = sum(n for d, n in depths.items() if d >= 6)
    assert reach_shared > visit_only
    assert depths[1] > depths[6]
    assert 0 < revoked < 0.1 * len(store)


def test_appends_to_given_store():
    store = LedgerStore()
    store.create_history("mine")
    generate(EnactmentGeneratorConfig(count=10, seed=0), store)
    assert len(store) == 11 and "mine" in store
