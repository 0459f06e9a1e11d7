"""Bucketed transaction index vs. straightforward dictionary oracles."""

from __future__ import annotations

import random

import numpy as np
import pytest

from hopscan.columns import RecordColumns
from hopscan.index import TxIndex
from hopscan.model import Kind

from gen import clustered_records
from test_model import bridge, swap, three_hop


def build(records):
    return TxIndex.build(RecordColumns.from_records(records))


@pytest.fixture(scope="module")
def random_index():
    rng = random.Random(1234)
    records = clustered_records(rng, 400)
    index = build(records)
    return index, index.columns.to_records()


class TestBuckets:
    def test_bridge_bucket_keyed_by_sender_and_origin(self, random_index):
        index, records = random_index
        for sender in {r.sender for r in records}:
            for chain in {r.chain for r in records}:
                expected = [
                    i for i, r in enumerate(records)
                    if r.kind is Kind.BRIDGE and r.sender == sender
                    and r.chain == chain
                ]
                got = list(index.by_sender_chain_time(sender, chain))
                assert got == expected

    def test_swap_bucket_keyed_by_sender_and_chain(self, random_index):
        index, records = random_index
        for sender in {r.sender for r in records}:
            for chain in {r.chain for r in records}:
                expected = [
                    i for i, r in enumerate(records)
                    if r.kind is Kind.SWAP and r.sender == sender
                    and r.chain == chain
                ]
                got = list(index.by_receiver_chain_time(sender, chain))
                assert got == expected

    def test_buckets_are_time_ascending(self, random_index):
        index, records = random_index
        for sender in {r.sender for r in records}:
            for chain in {r.chain for r in records}:
                for ids in (
                    index.by_sender_chain_time(sender, chain),
                    index.by_receiver_chain_time(sender, chain),
                ):
                    ts = [records[i].timestamp for i in ids]
                    assert ts == sorted(ts)

    def test_unknown_keys_give_empty_buckets(self, random_index):
        index, _ = random_index
        assert len(index.by_sender_chain_time("0xnobody", "base")) == 0
        assert len(index.by_receiver_chain_time("0xa0", "solana")) == 0


class TestSuccessorWindow:
    def test_matches_linear_scan(self, random_index):
        index, records = random_index
        window = 300
        for rec_id in range(0, len(records), 7):
            rec = records[rec_id]
            if rec.kind is Kind.SWAP:
                # successors of a swap: bridges by (sender, chain)
                candidates = [
                    i for i, r in enumerate(records)
                    if r.kind is Kind.BRIDGE and r.sender == rec.sender
                    and r.chain == rec.chain
                ]
            else:
                # successors of a bridge: swaps by (receiver, dest_chain)
                candidates = [
                    i for i, r in enumerate(records)
                    if r.kind is Kind.SWAP and r.sender == rec.receiver
                    and r.chain == rec.dest_chain
                ]
            expected = [
                i for i in candidates
                if rec.timestamp < records[i].timestamp <= rec.timestamp + window
            ]
            got = list(index.successor_window(rec_id, window))
            assert got == expected, f"record {rec_id}"

    def test_window_excludes_equal_timestamp(self):
        s = swap("0x1", 100, "base", "USDC", "WETH")
        b_same = bridge("0x2", 100, "base", "optimism", "WETH")
        b_in = bridge("0x3", 101, "base", "optimism", "WETH")
        b_edge = bridge("0x4", 400, "base", "optimism", "WETH")
        b_out = bridge("0x5", 401, "base", "optimism", "WETH")
        index = build([s, b_same, b_in, b_edge, b_out])
        sid = index.hash_to_id["0x1"]
        got = {index.columns.record(i).hash for i in index.successor_window(sid, 300)}
        assert got == {"0x3", "0x4"}


class TestDerivedColumns:
    def test_effective_flags_mark_token_changing_swaps(self):
        records = [
            swap("0x1", 100, "base", "USDC", "WETH"),   # effective
            swap("0x2", 200, "base", "USDC", "USDC"),   # ineffective
            bridge("0x3", 300, "base", "optimism", "WETH"),
        ]
        index = build(records)
        by_hash = {index.columns.record(i).hash: i for i in range(3)}
        assert index.effective[by_hash["0x1"]] == 1
        assert index.effective[by_hash["0x2"]] == 0
        assert index.effective[by_hash["0x3"]] == 0  # bridges never effective

    def test_swap_ids_enumerate_swaps_in_time_order(self, random_index):
        index, records = random_index
        expected = [i for i, r in enumerate(records) if r.kind is Kind.SWAP]
        assert list(index.swap_ids) == expected

    def test_hash_to_id_is_total_and_injective(self, random_index):
        index, records = random_index
        assert len(index.hash_to_id) == len(records)
        for i, r in enumerate(records):
            assert index.hash_to_id[r.hash] == i

    def test_three_hop_walk_through_index(self):
        index = build(list(three_hop()))
        sid = index.hash_to_id["0x1"]
        step1 = list(index.successor_window(sid, 300))
        assert [index.columns.record(i).hash for i in step1] == ["0x2"]
        step2 = list(index.successor_window(step1[0], 300))
        assert [index.columns.record(i).hash for i in step2] == ["0x3"]
