"""Reliability diagram construction and SVG rendering."""

import xml.etree.ElementTree as ET

import numpy as np
import pytest

from clampkit import BinSpec, ValidationError, build_diagram, ece, render_svg

from conftest import FOUR_ROW_PROBS, FOUR_ROW_PROB_LABELS
from oracles import bin_table_brute


def svg_rects(svg_text, cls):
    root = ET.fromstring(svg_text)
    ns = "{http://www.w3.org/2000/svg}"
    return [el for el in root.iter(f"{ns}rect") if el.get("class") == cls]


class TestBuildDiagram:
    def test_four_sample_fixture(self):
        d = build_diagram(FOUR_ROW_PROBS, FOUR_ROW_PROB_LABELS, 10)
        assert d.n == 4 and d.m == 10
        by_index = {b.index: b for b in d.bins}
        b6, b8, b9 = by_index[6], by_index[8], by_index[9]
        assert (b6.count, b6.accuracy, b6.mean_confidence) == (1, 1.0, 0.6)
        assert (b8.count, b8.accuracy, b8.mean_confidence) == (1, 1.0, 0.8)
        assert (b9.count, b9.accuracy, b9.mean_confidence) == (2, 0.5, 0.9)
        for idx, b in by_index.items():
            if idx not in (6, 8, 9):
                assert b.count == 0
                assert b.accuracy == b.mean_confidence == b.gap == 0.0
        assert abs(d.ece - 0.35) <= 1e-12

    def test_matches_brute_table(self):
        rng = np.random.default_rng(20)
        for _ in range(20):
            n, k, m = int(rng.integers(1, 80)), int(rng.integers(2, 5)), int(rng.integers(1, 30))
            logits = rng.normal(scale=2.0, size=(n, k))
            e = np.exp(logits - logits.max(axis=1, keepdims=True))
            probs = e / e.sum(axis=1, keepdims=True)
            labels = rng.integers(0, k, size=n)
            d = build_diagram(probs, labels, m)
            table = bin_table_brute(probs.tolist(), labels.tolist(), m)
            for b, (count, acc, conf) in zip(d.bins, table):
                assert b.count == count
                assert abs(b.accuracy - acc) <= 1e-12
                assert abs(b.mean_confidence - conf) <= 1e-12

    def test_perfectly_calibrated_grid(self):
        # groups of 40 samples at confidence c with exactly 40c correct
        rows, labels = [], []
        for k in range(21, 40):
            c = k / 40  # in (0.5, 1)
            n_correct = k  # 40 * c
            for i in range(40):
                rows.append([c, 1 - c])
                labels.append(0 if i < n_correct else 1)
        probs = np.array(rows)
        labels = np.array(labels)
        for m in (5, 10, 17):
            d = build_diagram(probs, labels, m)
            for b in d.bins:
                if b.count:
                    assert b.gap <= 1.0 / m + 1e-12

    def test_single_perfect_sample(self):
        d = build_diagram(np.array([[1.0, 0.0]]), np.array([0]), 5)
        b5 = d.bins[4]
        assert (b5.count, b5.accuracy, b5.mean_confidence, b5.gap) == (1, 1.0, 1.0, 0.0)

    def test_counts_sum_and_conf_in_interval(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            n, m = int(rng.integers(1, 200)), int(rng.integers(1, 40))
            logits = rng.normal(scale=3.0, size=(n, 4))
            e = np.exp(logits - logits.max(axis=1, keepdims=True))
            probs = e / e.sum(axis=1, keepdims=True)
            labels = rng.integers(0, 4, size=n)
            d = build_diagram(probs, labels, m)
            assert sum(b.count for b in d.bins) == n
            for b in d.bins:
                if b.count:
                    assert b.lower < b.mean_confidence <= b.upper

    def test_ece_consistency(self):
        rng = np.random.default_rng(22)
        logits = rng.normal(size=(150, 3))
        e = np.exp(logits - logits.max(axis=1, keepdims=True))
        probs = e / e.sum(axis=1, keepdims=True)
        labels = rng.integers(0, 3, size=150)
        d = build_diagram(probs, labels, 15)
        assert d.ece == ece(probs, labels, BinSpec("equal_width", 15))
        recomputed = 0.0
        for b in d.bins:
            if b.count:
                recomputed += (b.count / d.n) * b.gap
        assert d.ece == recomputed

    def test_permutation_stable(self):
        rng = np.random.default_rng(23)
        logits = rng.normal(size=(60, 3))
        e = np.exp(logits - logits.max(axis=1, keepdims=True))
        probs = e / e.sum(axis=1, keepdims=True)
        labels = rng.integers(0, 3, size=60)
        perm = rng.permutation(60)
        a = build_diagram(probs, labels, 10)
        b = build_diagram(probs[perm], labels[perm], 10)
        assert a.bins == b.bins

    def test_json_schema(self):
        d = build_diagram(FOUR_ROW_PROBS, FOUR_ROW_PROB_LABELS, 10)
        payload = d.to_dict()
        assert payload["m"] == 10 and payload["n"] == 4
        assert len(payload["bins"]) == 10
        assert set(payload["bins"][0]) == {
            "index", "lower", "upper", "count", "accuracy", "mean_confidence", "gap",
        }


class TestRenderSvg:
    def test_four_sample_bar_counts(self):
        d = build_diagram(FOUR_ROW_PROBS, FOUR_ROW_PROB_LABELS, 10)
        svg = render_svg(d, 640, 480)
        assert len(svg_rects(svg, "bar-expected")) == 10
        assert len(svg_rects(svg, "bar-actual")) == 3
        assert "ECE = 0.3500" in svg

    def test_empty_bins_keep_expected_bars(self):
        d = build_diagram(np.array([[1.0, 0.0]]), np.array([1]), 4)  # wrong -> acc 0
        svg = render_svg(d, 320, 240)
        assert len(svg_rects(svg, "bar-expected")) == 4
        assert len(svg_rects(svg, "bar-actual")) == 0

    def test_deterministic_bytes(self):
        d = build_diagram(FOUR_ROW_PROBS, FOUR_ROW_PROB_LABELS, 10)
        assert render_svg(d, 640, 480) == render_svg(d, 640, 480)

    def test_expected_bar_option(self):
        d = build_diagram(FOUR_ROW_PROBS, FOUR_ROW_PROB_LABELS, 10)
        mid = render_svg(d, 640, 480, expected_bar="midpoint")
        conf = render_svg(d, 640, 480, expected_bar="confidence")
        assert mid != conf
        # confidence mode only draws expected bars for populated bins
        assert len(svg_rects(conf, "bar-expected")) == 3

    def test_bad_dimensions(self):
        d = build_diagram(FOUR_ROW_PROBS, FOUR_ROW_PROB_LABELS, 2)
        with pytest.raises(ValidationError):
            render_svg(d, 0, 100)

    def test_parses_as_xml(self):
        d = build_diagram(FOUR_ROW_PROBS, FOUR_ROW_PROB_LABELS, 10)
        ET.fromstring(render_svg(d, 640, 480))
