"""The five pairwise continuity constraints and their exact boundaries."""

from __future__ import annotations

from decimal import Decimal
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hopscan.errors import ConfigError, KindMismatch
from hopscan.matcher import (
    DetectionConfig,
    check_actor,
    check_chain,
    check_time,
    check_token,
    check_value,
    phi,
)

from test_model import bridge, swap

CFG = DetectionConfig()


def sb_pair(gap=100, vout="1000", vin="1000", sender="0xa", b_sender="0xa"):
    """A swap followed by a bridge, parameterized at the seam."""
    s = swap("0x1", 1000, "base", "USDC", "WETH", vout=vout, sender=sender)
    b = bridge("0x2", 1000 + gap, "base", "optimism", "WETH",
               vin=vin, sender=b_sender)
    return s, b


def bs_pair(dest="optimism", s_chain="optimism", receiver="0xa", s_sender="0xa"):
    """A bridge followed by a swap, parameterized at the seam."""
    b = bridge("0x2", 1000, "base", dest, "WETH", receiver=receiver)
    s = swap("0x3", 1100, s_chain, "WETH", "USDC", sender=s_sender)
    return b, s


class TestTimeWindow:
    def test_equal_timestamps_rejected(self):
        assert not check_time(*sb_pair(gap=0), CFG)

    def test_one_second_accepted(self):
        assert check_time(*sb_pair(gap=1), CFG)

    def test_exactly_at_window_accepted(self):
        assert check_time(*sb_pair(gap=CFG.window_secs), CFG)

    def test_one_past_window_rejected(self):
        assert not check_time(*sb_pair(gap=CFG.window_secs + 1), CFG)

    def test_earlier_rejected(self):
        assert not check_time(*sb_pair(gap=-10), CFG)

    @given(st.integers(min_value=-1000, max_value=1000))
    def test_window_interval_is_strict_lower_inclusive_upper(self, gap):
        expected = 0 < gap <= CFG.window_secs
        assert check_time(*sb_pair(gap=gap), CFG) == expected


class TestValueBand:
    def test_equal_values_accepted(self):
        assert check_value(*sb_pair(vout="1000", vin="1000"), CFG)

    def test_exactly_at_tolerance_accepted(self):
        assert check_value(*sb_pair(vout="1000", vin="980"), CFG)

    def test_one_micro_below_tolerance_rejected(self):
        assert not check_value(*sb_pair(vout="1000", vin="979.999999"), CFG)

    def test_one_micro_above_output_rejected(self):
        assert not check_value(*sb_pair(vout="1000", vin="1000.000001"), CFG)

    def test_fractional_boundary_is_exact(self):
        # 0.98 * 0.333333 = 0.32666634: not representable at 6dp, so the
        # first representable passing value is 0.326667.
        assert check_value(*sb_pair(vout="0.333333", vin="0.326667"), CFG)
        assert not check_value(*sb_pair(vout="0.333333", vin="0.326666"), CFG)

    @given(
        st.integers(min_value=0, max_value=10**12),
        st.integers(min_value=0, max_value=10**12),
    )
    def test_band_matches_exact_rational_arithmetic(self, out_micro, in_micro):
        vout = Decimal(out_micro).scaleb(-6)
        vin = Decimal(in_micro).scaleb(-6)
        oracle = (
            Fraction(98, 100) * Fraction(out_micro, 10**6)
            <= Fraction(in_micro, 10**6)
            <= Fraction(out_micro, 10**6)
        )
        got = check_value(*sb_pair(vout=str(vout), vin=str(vin)), CFG)
        assert got == oracle


class TestTokenContinuity:
    def test_same_canonical_token_accepted(self):
        assert check_token(*sb_pair())

    def test_different_token_rejected(self):
        s = swap("0x1", 1000, "base", "USDC", "WETH")
        b = bridge("0x2", 1100, "base", "optimism", "USDC")
        assert not check_token(s, b)

    def test_canonical_equality_ignores_raw_spelling(self):
        from hopscan.ingest import TokenEquivalenceMap, canonicalize

        tmap = TokenEquivalenceMap.default()
        s = swap("0x1", 1000, "optimism", "WETH", "USDC.e")
        b = bridge("0x2", 1100, "optimism", "polygon", "USDC")
        s2, b2 = canonicalize([s, b], tmap)
        assert s.token_out != b.token_in  # raw spellings differ
        assert check_token(s2, b2)  # but they are the same canonical token


class TestActorConsistency:
    def test_swap_to_bridge_same_sender(self):
        assert check_actor(*sb_pair(sender="0xa", b_sender="0xa"))
        assert not check_actor(*sb_pair(sender="0xa", b_sender="0xb"))

    def test_bridge_to_swap_receiver_becomes_sender(self):
        assert check_actor(*bs_pair(receiver="0xa", s_sender="0xa"))
        assert not check_actor(*bs_pair(receiver="0xa", s_sender="0xb"))

    def test_same_kind_pair_raises(self):
        s1 = swap("0x1", 1000, "base", "USDC", "WETH")
        s2 = swap("0x2", 1100, "base", "WETH", "USDC")
        with pytest.raises(KindMismatch):
            check_actor(s1, s2)


class TestChainConsistency:
    def test_swap_to_bridge_same_chain(self):
        assert check_chain(*sb_pair())
        s = swap("0x1", 1000, "arbitrum", "USDC", "WETH")
        b = bridge("0x2", 1100, "base", "optimism", "WETH")
        assert not check_chain(s, b)

    def test_bridge_to_swap_lands_on_destination(self):
        assert check_chain(*bs_pair(dest="optimism", s_chain="optimism"))
        assert not check_chain(*bs_pair(dest="optimism", s_chain="arbitrum"))

    def test_same_kind_pair_raises(self):
        b1 = bridge("0x1", 1000, "base", "optimism", "WETH")
        b2 = bridge("0x2", 1100, "optimism", "base", "WETH")
        with pytest.raises(KindMismatch):
            check_chain(b1, b2)


class TestPhi:
    def test_full_conjunction_holds_on_valid_pair(self):
        assert phi(*sb_pair(), CFG)

    def test_same_kind_pair_is_false_not_an_error(self):
        s1 = swap("0x1", 1000, "base", "USDC", "WETH")
        s2 = swap("0x2", 1100, "base", "WETH", "USDC")
        assert phi(s1, s2, CFG) is False

    def test_any_single_violation_fails_the_pair(self):
        assert not phi(*sb_pair(gap=CFG.window_secs + 1), CFG)
        assert not phi(*sb_pair(vin="979.999999"), CFG)
        assert not phi(*sb_pair(b_sender="0xother"), CFG)
        s, b = sb_pair()
        b_wrong = bridge("0x2", 1100, "arbitrum", "optimism", "WETH")
        assert not phi(s, b_wrong, CFG)


class TestDetectionConfig:
    def test_defaults(self):
        assert CFG.window_secs == 300
        assert CFG.value_tolerance == Decimal("0.98")
        assert (CFG.min_hops, CFG.max_hops) == (3, 6)
        assert CFG.tolerance_micro == 980000
        assert (CFG.min_len, CFG.max_len) == (5, 11)

    def test_window_must_be_positive(self):
        with pytest.raises(ConfigError):
            DetectionConfig(window_secs=0)

    def test_tolerance_range(self):
        with pytest.raises(ConfigError):
            DetectionConfig(value_tolerance=Decimal("0"))
        with pytest.raises(ConfigError):
            DetectionConfig(value_tolerance=Decimal("1.000001"))
        DetectionConfig(value_tolerance=Decimal("1"))  # closed upper bound

    def test_tolerance_precision_capped_at_six_digits(self):
        with pytest.raises(ConfigError):
            DetectionConfig(value_tolerance=Decimal("0.9800001"))

    def test_hop_bounds(self):
        with pytest.raises(ConfigError):
            DetectionConfig(min_hops=1)
        with pytest.raises(ConfigError):
            DetectionConfig(min_hops=5, max_hops=4)
        DetectionConfig(min_hops=2, max_hops=2)

    def test_as_dict_round_trips(self):
        doc = CFG.as_dict()
        again = DetectionConfig(
            window_secs=doc["window_secs"],
            value_tolerance=Decimal(doc["value_tolerance"]),
            min_hops=doc["min_hops"],
            max_hops=doc["max_hops"],
        )
        assert again == CFG

    @given(st.integers(min_value=1, max_value=10**6))
    def test_tolerance_micro_is_exact(self, micros):
        cfg = DetectionConfig(value_tolerance=Decimal(micros).scaleb(-6))
        assert cfg.tolerance_micro == micros
