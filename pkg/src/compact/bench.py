"""View construction benchmark."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

from .ledger import LedgerStore
from .norms import NormStateTable
from .views import ThroughputStats, compile_views, measure_throughput

# changes/s per (norm, state) reported for the same compact on a CouchDB
# view build; machine dependent, shown for comparison only
REFERENCE_RATES = {
    ("StoreData", "created"): 4921.66,
    ("StoreData", "detached"): 3525.61,
    ("StoreData", "discharged"): 3182.15,
    ("StoreData", "violated"): 3235.79,
    ("DestroyData", "created"): 5478.32,
    ("DestroyData", "detached"): 4247.24,
    ("DestroyData", "discharged"): 3611.75,
    ("DestroyData", "violated"): 3380.03,
    ("Access", "created"): 5947.52,
    ("Access", "detached"): 4994.67,
    ("Access", "discharged"): 4662.64,
    ("Access", "violated"): 4339.69,
    ("Confidentiality", "created"): 5129.93,
    ("Confidentiality", "violated"): 4962.04,
}

# the benchmark clock runs 11 units past each history's last event, so an
# access request with no share in its ten-unit window counts as late
BENCH_NOW_OFFSET = 11


@dataclass
class BenchReport:
    stats: list[ThroughputStats]
    total_elapsed: float
    threads: int = 1
    extra: dict = field(default_factory=dict)

    def lines(self) -> list[str]:
        out = []
        for s in self.stats:
            row = s.to_json()
            ref = REFERENCE_RATES.get((s.norm, s.state))
            if ref is not None:
                row["referenceChangesPerSecond"] = ref
            out.append(json.dumps(row))
        return out

    def min_rate(self) -> float:
        return min((s.changes_per_second for s in self.stats), default=0.0)


def run_bench(
    store: LedgerStore,
    tables: dict[str, NormStateTable],
    batch_size: int = 1000,
    threads: int = 1,
    now_offset: int = BENCH_NOW_OFFSET,
) -> BenchReport:
    views = [v for t in tables.values() for v in compile_views(t)]
    start = time.perf_counter()
    stats = measure_throughput(views, store, batch_size=batch_size, now_offset=now_offset, threads=threads)
    return BenchReport(stats, time.perf_counter() - start, threads)
