"""Report building and decay-model fitting.

The fit assertions check against values frozen from an independent
least-squares implementation (numpy ``lstsq`` on the log-linearized
systems), so the closed-form OLS here is verified against a second
implementation, not against itself.
"""

from __future__ import annotations

import json
import math
import random
from decimal import Decimal

import pytest

from hopscan.analytics import (
    FitResult,
    HopCountDistribution,
    ModelComparison,
    SummaryReport,
    chain_frequency,
    compare_models,
    fit_model,
    gross_profit,
    path_row_dict,
    plot_csv,
    summarize,
    summary_csv,
    summary_json,
)
from hopscan.errors import InsufficientPoints
from hopscan.ingest import build_index
from hopscan.matcher import DetectionConfig
from hopscan.model import ArbitragePath
from hopscan.pathfinder import find_paths

from gen import clustered_records
from test_model import three_hop

approx = lambda v: pytest.approx(v, abs=2e-6)  # oracle values carry 6dp


class TestFitOracle:
    """Frozen-value checks: one distribution per regime."""

    def test_near_power_law_counts(self):
        # counts generated from a * h**-3 with integer rounding
        d = HopCountDistribution(hops=(2, 3, 4), counts=(64, 19, 8))
        p = fit_model(d, "powerlaw")
        assert p.a == approx(512.161718)
        assert p.k == approx(2.999684)
        assert p.rss == approx(0.001807)
        assert p.rmse == approx(0.024541)
        assert p.aic == approx(-18.244539)
        assert p.n_points == 3 and not p.zeros_excluded

        e = fit_model(d, "exponential")
        assert e.a == approx(483.032295)
        assert e.k == approx(1.039721)
        assert e.rss == approx(18.825649)
        assert e.rmse == approx(2.505038)
        assert e.aic == approx(9.509824)

        c = compare_models(d)
        assert c.preferred == "powerlaw" and not c.tie

    @pytest.mark.parametrize(
        "c2, power_aic, exp_aic",
        [
            (50, -1.076355, 8.729288),
            (100, 11.883453, 17.942219),
            (500, 28.910199, 31.999158),
            (1000, 34.492370, 37.182193),
        ],
    )
    def test_heavy_tail_grid_prefers_power_law(self, c2, power_aic, exp_aic):
        c = compare_models(HopCountDistribution(hops=(2, 3, 4), counts=(c2, 8, 2)))
        assert c.powerlaw.aic == approx(power_aic)
        assert c.exponential.aic == approx(exp_aic)
        assert c.preferred == "powerlaw" and not c.tie

    def test_exponential_counts(self):
        # counts generated from 200 * exp(-1.1 * h) with integer rounding
        d = HopCountDistribution(hops=(1, 2, 3, 4), counts=(67, 22, 7, 2))
        e = fit_model(d, "exponential")
        assert e.a == approx(222.213861)
        assert e.k == approx(1.167977)
        assert e.rss == approx(4.805608)
        assert e.rmse == approx(1.096085)
        assert e.aic == approx(4.733957)

        p = fit_model(d, "powerlaw")
        assert p.a == approx(83.692695)
        assert p.k == approx(2.446093)
        assert p.rss == approx(325.128496)
        assert p.aic == approx(21.591704)

        assert compare_models(d).preferred == "exponential"


class TestFitMechanics:
    def test_zero_counts_excluded_and_flagged(self):
        d = HopCountDistribution(hops=(2, 3, 4, 5), counts=(64, 19, 8, 0))
        p = fit_model(d, "powerlaw")
        assert p.zeros_excluded
        assert p.n_points == 3
        assert p.k == approx(2.999684)  # identical to the zero-free fit

    def test_insufficient_points(self):
        with pytest.raises(InsufficientPoints) as exc:
            fit_model(HopCountDistribution(hops=(3, 4), counts=(8, 2)), "powerlaw")
        assert exc.value.have == 2 and exc.value.need == 3

        with pytest.raises(InsufficientPoints):
            # three levels but only two nonzero
            fit_model(
                HopCountDistribution(hops=(3, 4, 5), counts=(8, 0, 2)),
                "exponential",
            )

    def test_unknown_kind(self):
        d = HopCountDistribution(hops=(1, 2, 3), counts=(4, 2, 1))
        with pytest.raises(ValueError, match="unknown model kind"):
            fit_model(d, "linear")

    def test_near_perfect_fit_has_tiny_positive_rss(self):
        # counts exactly on a power law; float roundoff keeps rss > 0
        d = HopCountDistribution(hops=(1, 2, 4), counts=(16, 4, 1))
        p = fit_model(d, "powerlaw")
        assert 0 < p.rss < 1e-24
        assert p.aic < -150
        assert math.isfinite(p.aic)

    def test_exact_fit_gives_minus_infinity_aic(self):
        # constant counts: slope 0, amplitude exp(0) == 1, residuals exactly 0
        d = HopCountDistribution(hops=(1, 2, 3), counts=(1, 1, 1))
        p = fit_model(d, "powerlaw")
        assert p.rss == 0.0
        assert p.aic == float("-inf")

        c = compare_models(d)
        assert c.tie
        assert c.preferred == "powerlaw"  # tie falls to the power law

    def test_predict_matches_model_form(self):
        p = fit_model(
            HopCountDistribution(hops=(2, 3, 4), counts=(64, 19, 8)), "powerlaw"
        )
        assert p.predict(2) == pytest.approx(p.a * 2 ** (-p.k))
        e = fit_model(
            HopCountDistribution(hops=(2, 3, 4), counts=(64, 19, 8)), "exponential"
        )
        assert e.predict(2) == pytest.approx(e.a * math.exp(-e.k * 2))

    def test_rounded_display(self):
        p = fit_model(
            HopCountDistribution(hops=(2, 3, 4), counts=(64, 19, 8)), "powerlaw"
        )
        r = p.rounded()
        assert r == {
            "a": 512.16, "k": 3.0, "rss": 0.0, "rmse": 0.02, "aic": -18.24,
        }
        exact = fit_model(
            HopCountDistribution(hops=(1, 2, 3), counts=(1, 1, 1)), "powerlaw"
        )
        assert exact.rounded()["aic"] == float("-inf")


class TestHopCountDistribution:
    def test_validation(self):
        with pytest.raises(ValueError, match="equal length"):
            HopCountDistribution(hops=(1, 2), counts=(1,))
        with pytest.raises(ValueError, match="strictly increasing"):
            HopCountDistribution(hops=(2, 2), counts=(1, 1))
        with pytest.raises(ValueError, match="positive"):
            HopCountDistribution(hops=(0, 1), counts=(1, 1))
        with pytest.raises(ValueError, match="non-negative"):
            HopCountDistribution(hops=(1, 2), counts=(1, -1))

    def test_from_paths(self, golden):
        paths = [p.as_path(golden.token_map) for p in golden.planted]
        d = HopCountDistribution.from_paths(paths)
        assert d.hops == (3, 4)
        assert d.counts == (8, 2)

    def test_nonzero(self):
        d = HopCountDistribution(hops=(1, 2, 3), counts=(5, 0, 2))
        assert d.nonzero() == ((1, 3), (5, 2))


class TestSummarizeReference:
    """Literal aggregates of the ten planted reference paths."""

    def test_counts_and_durations(self, golden):
        r = golden.expected_report
        assert r.path_count == 10
        assert dict(r.count_by_hops) == {3: 8, 4: 2}
        assert r.mean_duration_by_hops[3] == 434.125
        assert r.mean_duration_by_hops[4] == 696.5
        assert r.mean_duration_display(3) == "434.1"
        assert r.mean_duration_display(4) == "696.5"

    def test_profit_aggregates(self, golden):
        r = golden.expected_report
        assert r.positive_profit_count == 6
        assert r.max_profit_usd == Decimal("264.04")
        assert r.min_profit_usd == Decimal("-255.07")

    def test_chain_frequency_and_order(self, golden):
        r = golden.expected_report
        assert dict(r.chain_frequency) == {
            "base": 7, "arbitrum": 6, "optimism": 5, "ethereum": 2,
            "polygon": 2, "avalanche": 1, "blast": 1,
        }
        # descending count, ties broken by chain id
        assert list(r.chain_frequency) == [
            "base", "arbitrum", "optimism", "ethereum", "polygon",
            "avalanche", "blast",
        ]

    def test_actor_clusters(self, golden):
        r = golden.expected_report
        repeat_actor = r.rows[8].actor
        assert r.rows[9].actor == repeat_actor
        assert dict(r.same_actor_clusters) == {repeat_actor: (8, 9)}

    def test_row_rendering(self, golden):
        rows = golden.expected_report.rows
        assert [row.hops for row in rows] == [3] * 8 + [4] * 2
        assert rows[0].chain_display == "Base->Eth->Base"
        assert rows[0].duration_secs == 646
        assert rows[0].token_display == "USDC/BAL"
        assert rows[0].profit_display == "32.78"
        assert rows[5].token_display == "USDT/USDC/WBTC"  # alias canonicalized
        assert rows[6].chain_display == "Blast->Arb->Eth"
        assert rows[9].chain_display == "Arb->Opt->Base->Arb"
        assert rows[9].token_display == "WETH/HOP"
        assert rows[9].profit_display == "1.61"


class TestSummarizeMechanics:
    def make_paths(self, seed=13):
        rng = random.Random(seed)
        records = clustered_records(rng, 250, actor_pool=2, density=3)
        return find_paths(build_index(records), DetectionConfig())

    def test_aggregates_recomputable_from_rows(self):
        paths = self.make_paths()
        assert paths
        r = summarize(paths)

        counts, dur_sum = {}, {}
        for row in r.rows:
            counts[row.hops] = counts.get(row.hops, 0) + 1
            dur_sum[row.hops] = dur_sum.get(row.hops, 0) + row.duration_secs
        assert dict(r.count_by_hops) == counts
        for hops, count in counts.items():
            assert r.mean_duration_by_hops[hops] == dur_sum[hops] / count
        profits = [row.profit_usd for row in r.rows]
        assert r.positive_profit_count == sum(1 for p in profits if p > 0)
        assert r.max_profit_usd == max(profits)
        assert r.min_profit_usd == min(profits)
        for actor, ids in r.same_actor_clusters.items():
            assert len(ids) > 1
            assert all(r.rows[i].actor == actor for i in ids)

    def test_rows_preserve_input_order(self):
        paths = self.make_paths()
        r = summarize(paths)
        assert [row.tx_hashes for row in r.rows] == [
            p.hash_sequence() for p in paths
        ]

    def test_gross_profit(self):
        path = ArbitragePath.from_transactions(three_hop())
        assert gross_profit(path) == Decimal("12.77")

    def test_chain_frequency_counts_containment_not_visits(self):
        path = ArbitragePath.from_transactions(three_hop())
        # the route touches base twice but counts it once
        assert chain_frequency([path]) == {"base": 1, "optimism": 1}
        assert chain_frequency([path, path]) == {"base": 2, "optimism": 2}

    def test_empty_report(self):
        r = summarize([])
        assert r.path_count == 0
        assert r.max_profit_usd is None and r.min_profit_usd is None
        assert not r.rows and not r.chain_frequency
        doc = json.loads(summary_json(r))
        assert doc["aggregates"]["max_profit_usd"] is None
        assert doc["paths"] == []


class TestSerialization:
    def test_summary_csv(self, golden):
        text = summary_csv(golden.expected_report)
        lines = text.splitlines()
        assert lines[0] == (
            "hops,chain_path,duration_secs,tokens,profit_usd,actor,tx_hashes"
        )
        assert len(lines) == 11
        first = lines[1].split(",")
        assert first[:5] == ["3", "Base->Eth->Base", "646", "USDC/BAL", "32.78"]
        assert first[6].count(";") == 4  # five hashes

    def test_summary_json_structure(self, golden):
        text = summary_json(golden.expected_report)
        assert text.endswith("\n")
        doc = json.loads(text)
        agg = doc["aggregates"]
        assert agg["path_count"] == 10
        assert agg["count_by_hops"] == {"3": 8, "4": 2}
        assert agg["mean_duration_by_hops"] == {"3": 434.125, "4": 696.5}
        # machine-readable output keeps exact values, not display rounding
        assert agg["max_profit_usd"] == "264.040000"
        assert agg["min_profit_usd"] == "-255.070000"
        assert agg["positive_profit_count"] == 6
        assert len(doc["paths"]) == 10
        # stable key order for byte-stable output
        assert text == json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def test_path_row_dict(self, golden):
        row = golden.expected_report.rows[0]
        d = path_row_dict(row)
        assert d["hops"] == 3
        assert d["chain_path"] == ["base", "ethereum", "base"]
        assert d["chain_display"] == "Base->Eth->Base"
        assert d["profit_usd"] == "32.780000"  # exact value, not display form
        assert d["tokens"] == ["USDC", "BAL"]
        assert len(d["tx_hashes"]) == 5
        json.dumps(d)  # round-trips without custom encoders

    def test_plot_csv(self):
        d = HopCountDistribution(hops=(2, 3, 4, 5), counts=(64, 19, 8, 0))
        c = compare_models(d)
        lines = plot_csv(d, c).splitlines()
        assert lines[0] == "hops,count,fitted_powerlaw,fitted_exponential"
        assert len(lines) == 5  # zero-count levels still plotted
        h, count, fp, fe = lines[1].split(",")
        assert (h, count) == ("2", "64")
        assert float(fp) == pytest.approx(c.powerlaw.predict(2), abs=1e-6)
        assert float(fe) == pytest.approx(c.exponential.predict(2), abs=1e-6)
        assert "." in fp and len(fp.split(".")[1]) == 6
