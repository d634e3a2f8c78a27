"""Apportion an annotation quota across category-pair strata and draw pairs.

The quota is split by the D'Hondt highest-averages method over per-stratum
co-purchase counts; within each stratum, the top co-purchased item pairs
fill the allocated slots. Category-pair strata are unordered: the stratum
of (x, y) is the sorted pair of the two items' major categories.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .items import Item, ItemPair, PairSource, make_pair_id

StratumKey = tuple[str, str]
PairKey = tuple[str, str]


@dataclass(frozen=True)
class StratumCount:
    stratum: StratumKey
    copurchase_count: int

    def __post_init__(self) -> None:
        if self.copurchase_count < 0:
            raise ValueError(f"negative co-purchase count for stratum {self.stratum}")


@dataclass(frozen=True)
class Allocation:
    stratum: StratumKey
    seats: int


def dhondt_allocate(
    counts: Sequence[StratumCount], total_seats: int
) -> list[Allocation]:
    """Allocate ``total_seats`` slots across strata by the D'Hondt method.

    Each stratum's count is divided by 1, 2, 3, ... and slots go to the
    largest quotients. Equivalent to awarding seats one at a time to the
    stratum with the highest count / (seats_so_far + 1).

    Quotients are compared exactly by integer cross-multiplication, so
    there are no float-tie artifacts. Ties are broken by larger raw
    count, then lexicographically smaller stratum key, which makes the
    allocation deterministic and scale-invariant.

    Returns one Allocation per input stratum, in input order; the seat
    numbers sum to ``total_seats``.
    """
    if total_seats < 1:
        raise ValueError("total_seats must be >= 1")
    if not counts:
        raise ValueError("no strata given")
    seen: set[StratumKey] = set()
    for c in counts:
        if c.stratum in seen:
            raise ValueError(f"duplicate stratum {c.stratum}")
        seen.add(c.stratum)
    if all(c.copurchase_count == 0 for c in counts):
        raise ValueError("no mass to apportion: all co-purchase counts are zero")

    seats = [0] * len(counts)
    contenders = [i for i, c in enumerate(counts) if c.copurchase_count > 0]
    for _ in range(total_seats):
        best = None
        for i in contenders:
            if best is None or _quotient_beats(counts[i], seats[i], counts[best], seats[best]):
                best = i
        seats[best] += 1  # type: ignore[index]

    return [Allocation(stratum=c.stratum, seats=s) for c, s in zip(counts, seats)]


def _quotient_beats(
    a: StratumCount, a_seats: int, b: StratumCount, b_seats: int
) -> bool:
    """True if a's next quotient outranks b's under the tie rules."""
    # a.count/(a_seats+1) vs b.count/(b_seats+1), cross-multiplied.
    lhs = a.copurchase_count * (b_seats + 1)
    rhs = b.copurchase_count * (a_seats + 1)
    if lhs != rhs:
        return lhs > rhs
    if a.copurchase_count != b.copurchase_count:
        return a.copurchase_count > b.copurchase_count
    return a.stratum < b.stratum


@dataclass
class TopPairsResult:
    pairs: list[ItemPair]
    shortfall: int


def sample_top_pairs(
    stratum: StratumKey,
    seats: int,
    copurchase_table: Mapping[PairKey, int],
    items: Mapping[str, Item],
) -> TopPairsResult:
    """Draw the ``seats`` most co-purchased pairs of one stratum.

    ``copurchase_table`` must already be restricted to pairs whose items
    fall in the stratum's categories. Count ties break by ascending pair
    key. Returns fewer pairs plus a shortfall count when the stratum is
    too small.
    """
    if seats < 0:
        raise ValueError("seats must be >= 0")
    ranked = sorted(copurchase_table.items(), key=lambda kv: (-kv[1], kv[0]))
    chosen = ranked[:seats]
    pairs = [
        ItemPair(
            pair_id=make_pair_id(x_id, y_id),
            x=items[x_id],
            y=items[y_id],
            source=PairSource.DHONDT_SAMPLED,
        )
        for (x_id, y_id), _ in chosen
    ]
    return TopPairsResult(pairs=pairs, shortfall=seats - len(chosen))


def stratum_of(x: Item, y: Item) -> StratumKey:
    a, b = x.major_category, y.major_category
    return (a, b) if a <= b else (b, a)


def aggregate_strata(
    copurchase_table: Mapping[PairKey, int], items: Mapping[str, Item]
) -> list[StratumCount]:
    """Sum co-purchase counts per unordered major-category pair."""
    totals: dict[StratumKey, int] = {}
    for (x_id, y_id), count in copurchase_table.items():
        key = stratum_of(items[x_id], items[y_id])
        totals[key] = totals.get(key, 0) + count
    return [StratumCount(stratum=k, copurchase_count=v) for k, v in sorted(totals.items())]


@dataclass
class SampleResult:
    pairs: list[ItemPair]
    allocations: list[Allocation]
    shortfalls: dict[StratumKey, int] = field(default_factory=dict)

    @property
    def total_shortfall(self) -> int:
        return sum(self.shortfalls.values())


def sample_pairs(
    items: Mapping[str, Item],
    copurchase_table: Mapping[PairKey, int],
    total_seats: int,
) -> SampleResult:
    """Full sampling pipeline: stratify, apportion, draw top pairs.

    Shortfalls (strata with fewer pairs than allocated slots) are reported
    in the result rather than redistributed.
    """
    strata = aggregate_strata(copurchase_table, items)
    allocations = dhondt_allocate(strata, total_seats)

    by_stratum: dict[StratumKey, dict[PairKey, int]] = {}
    for key, count in copurchase_table.items():
        by_stratum.setdefault(stratum_of(items[key[0]], items[key[1]]), {})[key] = count

    pairs: list[ItemPair] = []
    shortfalls: dict[StratumKey, int] = {}
    for alloc in allocations:
        if alloc.seats == 0:
            continue
        result = sample_top_pairs(
            alloc.stratum, alloc.seats, by_stratum.get(alloc.stratum, {}), items
        )
        pairs.extend(result.pairs)
        if result.shortfall:
            shortfalls[alloc.stratum] = result.shortfall
    return SampleResult(pairs=pairs, allocations=allocations, shortfalls=shortfalls)


def read_copurchase_table(path: str | Path) -> dict[PairKey, int]:
    """Read a delimited co-purchase file with columns item_x_id, item_y_id, count."""
    path = Path(path)
    table: dict[PairKey, int] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        sample = fh.read(4096)
        fh.seek(0)
        delimiter = "\t" if "\t" in sample.splitlines()[0] else ","
        reader = csv.DictReader(fh, delimiter=delimiter)
        required = {"item_x_id", "item_y_id", "count"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(
                f"{path}: expected columns item_x_id, item_y_id, count; "
                f"got {reader.fieldnames}"
            )
        for line_no, row in enumerate(reader, start=2):
            key = (row["item_x_id"], row["item_y_id"])
            if key in table:
                raise ValueError(f"{path}:{line_no}: duplicate pair {key}")
            table[key] = int(row["count"])
    return table


def read_practitioner_pairs(
    path: str | Path, items: Mapping[str, Item]
) -> list[ItemPair]:
    """Read practitioner-identified complementary pairs (columns item_x_id, item_y_id)."""
    path = Path(path)
    pairs: list[ItemPair] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"item_x_id", "item_y_id"}.issubset(reader.fieldnames):
            raise ValueError(f"{path}: expected columns item_x_id, item_y_id")
        for row in reader:
            x_id, y_id = row["item_x_id"], row["item_y_id"]
            pairs.append(
                ItemPair(
                    pair_id=make_pair_id(x_id, y_id),
                    x=items[x_id],
                    y=items[y_id],
                    source=PairSource.PRACTITIONER_SEED,
                )
            )
    return pairs
