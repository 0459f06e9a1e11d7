"""Compiled search kernel vs. the pure-Python reference implementation.

Both kernels implement one contract (flat int64 path encoding, identical
candidate ordering), so their outputs must match element-for-element on
any input — including value magnitudes whose cross-multiplied band check
exceeds 64-bit range.
"""

from __future__ import annotations

import os
import random
import subprocess
import sys

import pytest

from hopscan import _kernel_py, kernel
from hopscan.columns import RecordColumns
from hopscan.index import TxIndex
from hopscan.matcher import DetectionConfig

from gen import boundary_path_records, clustered_records
from test_model import bridge, swap

_compiled = pytest.importorskip(
    "hopscan._kernel", reason="compiled kernel not built for this interpreter"
)


def run_both(records, config=None):
    config = config or DetectionConfig()
    index = TxIndex.build(RecordColumns.from_records(records))
    c = index.columns
    args = (
        c.ts, c.vin, c.vout, c.tok_in, c.tok_out, c.kind, index.effective,
        index.qslot,
        index.bridge_offsets, index.bridge_members, index.bridge_member_ts,
        index.swap_offsets, index.swap_members, index.swap_member_ts,
        index.swap_ids,
        config.window_secs, config.tolerance_micro, config.min_len, config.max_len,
    )
    pure = [int(x) for x in _kernel_py.search(*args)]
    compiled = [int(x) for x in _compiled.search(*args)]
    return pure, compiled


class TestDispatch:
    def test_compiled_kernel_is_active_by_default(self):
        # the extension exists in this build (importorskip above), so the
        # dispatcher must have picked it
        assert kernel.IMPLEMENTATION == "compiled"
        assert kernel.compiled_available()

    def test_env_flag_forces_pure_python(self):
        code = "import hopscan.kernel as k; print(k.IMPLEMENTATION)"
        env = dict(os.environ, HOPSCAN_PURE_PYTHON="1")
        out = subprocess.run(
            [sys.executable, "-c", code], env=env,
            capture_output=True, text=True, check=True,
        )
        assert out.stdout.strip() == "python"

    def test_dispatch_wrapper_delegates(self):
        records = clustered_records(random.Random(7), 120)
        pure, compiled = run_both(records)
        config = DetectionConfig()
        index = TxIndex.build(RecordColumns.from_records(records))
        c = index.columns
        via_dispatch = [int(x) for x in kernel.search(
            c.ts, c.vin, c.vout, c.tok_in, c.tok_out, c.kind, index.effective,
            index.qslot,
            index.bridge_offsets, index.bridge_members, index.bridge_member_ts,
            index.swap_offsets, index.swap_members, index.swap_member_ts,
            index.swap_ids,
            config.window_secs, config.tolerance_micro,
            config.min_len, config.max_len,
        )]
        assert via_dispatch == compiled


class TestEquivalence:
    @pytest.mark.parametrize("seed", [0, 1, 2, 3, 4, 5, 6, 7])
    def test_identical_output_on_clustered_data(self, seed):
        rng = random.Random(seed)
        records = clustered_records(rng, 300, actor_pool=2, density=3)
        pure, compiled = run_both(records)
        assert pure == compiled
        assert pure, "dataset produced no paths; generator too sparse"

    def test_identical_output_on_sparse_data(self):
        records = clustered_records(random.Random(11), 300)
        assert run_both(records) == ([], [])

    def test_identical_on_boundary_path(self):
        rng = random.Random(99)
        records = boundary_path_records(rng, start_ts=1_700_000_000)
        records += clustered_records(rng, 50)
        pure, compiled = run_both(records)
        assert pure == compiled

    def test_empty_input(self):
        pure, compiled = run_both(
            [swap("0x1", 100, "base", "USDC", "USDC")]  # ineffective, no partner
        )
        assert pure == compiled == []


def extreme_path(vin_boundary: str):
    """Three-hop path at the magnitude cap: every hand-off multiplies the
    tolerance against a 10^18 micro-USD value, overflowing int64 arithmetic."""
    top = "1000000000000"  # 10^12 USD, the largest accepted value
    return [
        swap("0xe1", 100, "base", "USDC", "WETH", vin=top, vout=top),
        bridge("0xe2", 200, "base", "optimism", "WETH", vin=vin_boundary, vout=top),
        swap("0xe3", 300, "optimism", "WETH", "USDC", vin=vin_boundary, vout=top),
        bridge("0xe4", 400, "optimism", "base", "USDC", vin=vin_boundary, vout=top),
        swap("0xe5", 500, "base", "USDC", "WETH", vin=vin_boundary, vout=top),
    ]


class TestExtremeMagnitudes:
    def test_band_check_exact_at_int64_overflow_accept(self):
        # vin exactly tol * vout: 0.98 * 10^12 USD; both kernels must accept
        records = extreme_path("980000000000")
        pure, compiled = run_both(records)
        assert pure == compiled
        assert pure and pure[0] == 5, "boundary path must be found"

    def test_band_check_exact_at_int64_overflow_reject(self):
        # one micro-USD below tol * vout; both kernels must reject every seam
        records = extreme_path("979999999999.999999")
        pure, compiled = run_both(records)
        assert pure == compiled == []

    def test_mixed_magnitudes_agree(self):
        rng = random.Random(41)
        records = clustered_records(rng, 200)
        records += extreme_path("980000000000")
        pure, compiled = run_both(records)
        assert pure == compiled
