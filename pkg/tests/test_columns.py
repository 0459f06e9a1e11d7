"""Columnar storage: ordering, fixed-point conversion, materialization."""

from __future__ import annotations

from decimal import Decimal

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hopscan.columns import (
    KIND_BRIDGE,
    KIND_SWAP,
    RecordColumns,
    micro_to_usd,
    order_by_time_then_hash,
    usd_to_micro,
)
from hopscan.errors import DuplicateHash

from test_model import bridge, swap, three_hop


class TestMicroConversion:
    def test_round_trip(self):
        assert micro_to_usd(usd_to_micro(Decimal("1000.25"))) == Decimal("1000.25")

    def test_six_decimals_exact(self):
        assert usd_to_micro(Decimal("0.000001")) == 1
        assert usd_to_micro(Decimal("1")) == 1_000_000

    @given(st.decimals(min_value=0, max_value=10**12, places=6,
                       allow_nan=False, allow_infinity=False))
    def test_conversion_is_lossless_on_grid(self, value):
        assert micro_to_usd(usd_to_micro(value)) == value


class TestOrdering:
    def hashes(self, items):
        return np.array(items, dtype=bytes)

    def test_orders_by_timestamp(self):
        ts = np.array([30, 10, 20], dtype=np.int64)
        hs = self.hashes([b"0xc", b"0xa", b"0xb"])
        order = order_by_time_then_hash(ts, hs)
        assert list(ts[order]) == [10, 20, 30]

    def test_hash_breaks_timestamp_ties(self):
        ts = np.array([10, 10, 10], dtype=np.int64)
        hs = self.hashes([b"0xc", b"0xa", b"0xb"])
        order = order_by_time_then_hash(ts, hs)
        assert list(hs[order]) == [b"0xa", b"0xb", b"0xc"]

    @given(
        st.lists(
            st.tuples(
                st.integers(min_value=0, max_value=5),  # dense: many ties
                st.text(alphabet="0123456789abcdef", min_size=1, max_size=6),
            ),
            min_size=0,
            max_size=50,
            unique_by=lambda t: t[1],
        )
    )
    def test_matches_lexsort_oracle(self, rows):
        ts = np.array([r[0] for r in rows], dtype=np.int64)
        hs = np.array([r[1].encode() for r in rows], dtype=bytes)
        got = order_by_time_then_hash(ts, hs)
        expected = np.lexsort((hs, ts))
        assert sorted(zip(ts[got], hs[got])) == list(zip(ts[got], hs[got]))
        np.testing.assert_array_equal(ts[got], ts[expected])
        np.testing.assert_array_equal(hs[got], hs[expected])


class TestRecordColumns:
    def test_from_records_sorted_and_typed(self):
        txs = three_hop()
        cols = RecordColumns.from_records(list(reversed(txs)))
        assert len(cols) == 5
        assert list(cols.ts) == [100, 200, 300, 400, 500]
        assert cols.kind[0] == KIND_SWAP and cols.kind[1] == KIND_BRIDGE
        assert cols.vin.dtype == np.int64
        assert cols.vin[0] == 1_000_000_000

    def test_duplicate_hash_rejected(self):
        txs = three_hop()
        with pytest.raises(DuplicateHash):
            RecordColumns.from_records([txs[0], txs[0]])

    def test_record_round_trips(self):
        txs = three_hop()
        cols = RecordColumns.from_records(txs)
        for i, tx in enumerate(txs):
            back = cols.record(i)
            assert back == tx

    def test_to_records_round_trips(self):
        txs = three_hop()
        assert tuple(RecordColumns.from_records(txs).to_records()) == txs

    def test_path_materializes_selected_ids(self):
        txs = three_hop()
        cols = RecordColumns.from_records(txs)
        path = cols.path([0, 1, 2])
        assert path.hash_sequence() == ("0x1", "0x2", "0x3")
        assert path.hops == 2

    def test_legs_preserved(self):
        import dataclasses

        multi = dataclasses.replace(swap("0xaa", 50, "base", "A", "B"), legs=4)
        cols = RecordColumns.from_records([multi])
        assert cols.legs[0] == 4
        assert cols.record(0).legs == 4

    def test_chronological_rank_is_record_id(self):
        txs = [
            swap("0xb", 100, "base", "A", "B"),
            swap("0xa", 100, "base", "A", "B"),
            bridge("0xc", 50, "base", "optimism", "B"),
        ]
        cols = RecordColumns.from_records(txs)
        assert [h.decode() for h in cols.hashes] == ["0xc", "0xa", "0xb"]
