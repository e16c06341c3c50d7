"""Random enactment corpora for the privacy compact.

Every history follows a prefix of one canonical event sequence. The prefix
depth is drawn uniformly from 0..8, so short enactments (only a Visit)
outnumber long ones (reaching Shared or Deleted).

=================  ===========  ===================  ==========
event              reported by  attributes           time gap
=================  ===========  ===================  ==========
Visit              patient      date                 1..5
Record             physician    patient, item        1..5
Store              hospital     patient, item        1..5
GrantAccess        patient      recipient, item      1..5
RequestAccess      recipient    item                 1..5
Shared             hospital     item, recipient      1..15
RequestDeletion    patient      item                 1..5
Deleted            hospital     item                 1..5
=================  ===========  ===================  ==========

With probability 0.1 a ``RevokeAccess`` (patient; recipient, item) is
inserted at a random point after ``GrantAccess`` so that the ``except``
branches see revocations both inside and outside the access window.
The wide gap before ``Shared`` lets some shares land after the ten-unit
window.
"""

from __future__ import annotations

import datetime as dt
import random
from dataclasses import dataclass

from .ledger import EventRecord, LedgerStore

CANONICAL = (
    ("Visit", "patient", ("date",), (1, 5)),
    ("Record", "physician", ("patient", "item"), (1, 5)),
    ("Store", "hospital", ("patient", "item"), (1, 5)),
    ("GrantAccess", "patient", ("recipient", "item"), (1, 5)),
    ("RequestAccess", "recipient", ("item",), (1, 5)),
    ("Shared", "hospital", ("item", "recipient"), (1, 15)),
    ("RequestDeletion", "patient", ("item",), (1, 5)),
    ("Deleted", "hospital", ("item",), (1, 5)),
)
REVOKE = ("RevokeAccess", "patient", ("recipient", "item"), (1, 5))
REVOKE_PROBABILITY = 0.1
ITEMS = ("Diagnosis", "Xray", "BloodTest", "Prescription", "MRI", "Genome")
_EPOCH = dt.date(2018, 1, 1)


@dataclass(frozen=True)
class EnactmentGeneratorConfig:
    count: int = 20_000
    seed: int = 0
    depth_max: int = len(CANONICAL)
    revoke_probability: float = REVOKE_PROBABILITY


def _enactment(rng: random.Random, index: int, cfg: EnactmentGeneratorConfig):
    values = {
        "patient": f"P{index}",
        "physician": f"D{rng.randrange(500)}",
        "hospital": f"H{rng.randrange(20)}",
        "recipient": f"R{rng.randrange(10_000)}",
        "item": rng.choice(ITEMS),
        "date": (_EPOCH + dt.timedelta(days=rng.randrange(730))).isoformat(),
    }
    depth = rng.randint(0, cfg.depth_max)
    steps = list(CANONICAL[:depth])
    if depth >= 4 and rng.random() < cfg.revoke_probability:
        steps.insert(rng.randint(4, len(steps)), REVOKE)
    history_id = f"{rng.getrandbits(128):032x}"
    roles = {k: values[k] for k in ("patient", "physician", "hospital")}
    events = []
    t = 0
    for name, role, attrs, (lo, hi) in steps:
        t += rng.randint(lo, hi)
        events.append(EventRecord(name, values[role], t, {a: values[a] for a in attrs}))
    return history_id, roles, events


def generate(cfg: EnactmentGeneratorConfig, store: LedgerStore | None = None) -> LedgerStore:
    """Populate ``store`` (a new one by default) with ``cfg.count`` enactments."""
    store = store if store is not None else LedgerStore()
    rng = random.Random(cfg.seed)
    for i in range(cfg.count):
        history_id, roles, events = _enactment(rng, i, cfg)
        store.create_history(history_id, roles)
        for ev in events:
            store.submit_event(history_id, ev)
    return store
