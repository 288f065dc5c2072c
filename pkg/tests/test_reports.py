#!/usr/bin/env python3
"""
Report tests: summaries, JSON and CSV rendering and reading reports back.
"""

import csv
import io
import json
import logging

import pytest
from pydantic import ValidationError

from msrcert.exceptions import InputFileError, ParseError
from msrcert.models import (
    AttackRecord,
    CertificationRecord,
    Norm,
    SaliencyRecord,
    SubstitutionEntry,
    SubstitutionRecordModel,
    WordSaliency,
)
from msrcert.reports import build_document, read_report, render_csv, summarize, write_report

logger = logging.getLogger(__name__)


def certification(text_id, index, normalized):
    return CertificationRecord(
        text_id=text_id, indices=[index], norm=Norm.L2, eps_lower=normalized * 2.0,
        normalized=normalized, bisection_steps=10, predicted_class=0,
    )


def attack(text_id, upper=None):
    substitutions = []
    if upper is not None:
        substitutions = [SubstitutionRecordModel(
            replaced=[SubstitutionEntry(index=0, original="good", replacement="bad")],
            distance=upper, new_class=1, confidence_drop=0.3,
        )]
    return AttackRecord(
        text_id=text_id, predicted_class=0, norm=Norm.L2,
        upper_bound=upper if upper is not None else 2.0,
        normalized_upper_bound=(upper or 2.0) / 2.0, explored_fraction=0.5,
        per_text_hit=upper is not None, per_word_hit_rate=0.5 if upper is not None else 0.0,
        substitutions=substitutions,
    )


def saliency_record(text_id, scores):
    words = [WordSaliency(index=i, token=f"w{i}", eps_lower=s, normalized=s / 2) for i, s in enumerate(scores)]
    ranking = sorted(range(len(scores)), key=lambda i: (scores[i], i))
    return SaliencyRecord(text_id=text_id, norm=Norm.LINF, predicted_class=1, words=words, ranking=ranking)


class TestRecordValidation:
    """Schema rules of the report records."""

    def test_positive_radius_needs_positive_normalization(self):
        """Test that a positive radius needs a positive normalized value."""
        with pytest.raises(ValidationError):
            CertificationRecord(
                text_id=0, indices=[0], norm=Norm.L2, eps_lower=0.1, normalized=0.0,
                bisection_steps=3, predicted_class=0,
            )

    def test_hit_flag_follows_substitutions(self):
        """Test that a hit needs substitutions."""
        with pytest.raises(ValidationError):
            AttackRecord(
                text_id=0, predicted_class=0, norm=Norm.L2, upper_bound=1.0, normalized_upper_bound=0.5,
                explored_fraction=0.1, per_text_hit=True, per_word_hit_rate=0.0,
            )

    def test_upper_bound_is_closest_substitution(self):
        """Test that the upper bound is the closest substitution."""
        record = attack(0, 0.4)
        with pytest.raises(ValidationError):
            AttackRecord.model_validate({**record.model_dump(), "upper_bound": 0.5})

    def test_ranking_must_be_ascending(self):
        """Test that saliency rankings are ascending by radius."""
        record = saliency_record(0, [0.3, 0.1])
        with pytest.raises(ValidationError):
            SaliencyRecord.model_validate({**record.model_dump(), "ranking": [0, 1]})


class TestSummaries:
    """Aggregates over a run."""

    def test_certify_population_std(self):
        """Test the mean, spread and profile of certify records."""
        summary = summarize("certify", [certification(0, 0, 0.2), certification(1, 0, 0.4), certification(1, 1, 0.6)])
        assert summary.count == 3
        assert summary.mean_normalized == pytest.approx(0.4)
        assert summary.std_normalized == pytest.approx((0.08 / 3) ** 0.5)
        assert summary.positional_profile == pytest.approx({"0": 0.3, "1": 0.6})

    def test_multi_word_sets_skip_profile(self):
        """Test that multi-word sets have no positional profile."""
        record = CertificationRecord(
            text_id=0, indices=[0, 1], norm=Norm.L2, eps_lower=0.1, normalized=0.05,
            bisection_steps=4, predicted_class=0,
        )
        assert summarize("certify", [record]).positional_profile is None

    def test_attack_rates(self):
        """Test per-text and per-word hit rates."""
        summary = summarize("attack", [attack(0, 0.4), attack(1)])
        assert summary.per_text_rate == 0.5
        assert summary.per_word_rate == 0.25
        assert summary.mean_upper_bound == pytest.approx(1.2)
        assert summary.mean_normalized_upper_bound == pytest.approx(0.6)

    def test_empty_attack_run(self):
        """Test the summary of an empty run."""
        assert summarize("attack", []).count == 0

    def test_saliency_profile(self):
        """Test the positional profile of saliency records."""
        summary = summarize("saliency", [saliency_record(0, [0.2, 0.4]), saliency_record(1, [0.6, 0.8])])
        assert summary.positional_profile == pytest.approx({"0": 0.2, "1": 0.3})
        assert summary.mean_normalized == pytest.approx(0.25)

    def test_unknown_command(self):
        """Test summarizing a command without records."""
        with pytest.raises(ValueError):
            summarize("gen-fixtures", [])


class TestRendering:
    """JSON and CSV output."""

    def test_json_document(self, tmp_path):
        """Test writing a JSON report."""
        document = build_document("certify", [certification(0, 0, 0.5)], generated_at="2024-01-01T00:00:00+00:00")
        path = tmp_path / "out" / "report.json"
        text = write_report(document, path)
        loaded = json.loads(path.read_text(encoding="utf-8"))
        assert text == path.read_text(encoding="utf-8")
        assert loaded["command"] == "certify"
        assert loaded["summary"]["count"] == 1
        assert loaded["records"][0]["norm"] == "l2"

    def test_stdout_rendering_writes_nothing(self, tmp_path):
        """Test rendering without an output path."""
        document = build_document("attack", [attack(0)])
        assert json.loads(write_report(document, None))["command"] == "attack"
        assert list(tmp_path.iterdir()) == []

    def test_csv_rows(self):
        """Test CSV rows of attack records."""
        document = build_document("attack", [attack(0, 0.4), attack(1)])
        rows = list(csv.DictReader(io.StringIO(render_csv(document))))
        assert len(rows) == 2
        assert rows[0]["per_text_hit"] == "True"
        assert json.loads(rows[0]["substitutions"])["distance"] == 0.4
        assert rows[1]["substitutions"] == ""

    def test_csv_joins_lists(self):
        """Test that CSV joins list fields."""
        document = build_document("saliency", [saliency_record(0, [0.3, 0.1, 0.2])])
        rows = list(csv.DictReader(io.StringIO(write_report(document, None, fmt="csv"))))
        assert rows[0]["ranking"] == "1;2;0"

    def test_empty_csv(self):
        """Test the CSV of an empty run."""
        assert render_csv(build_document("certify", [])) == ""


class TestReadReport:
    """Loading reports written earlier."""

    def test_roundtrip_keeps_timestamp(self, tmp_path):
        """Test that reading a report keeps its records and timestamp."""
        records = [saliency_record(0, [0.3, 0.1])]
        path = tmp_path / "saliency.json"
        write_report(build_document("saliency", records, generated_at="2024-05-06T07:08:09+00:00"), path)
        loaded = read_report(path)
        assert loaded["command"] == "saliency"
        assert loaded["records"] == records
        assert loaded["generated_at"] == "2024-05-06T07:08:09+00:00"

    def test_missing_file(self, tmp_path):
        """Test reading a missing report."""
        with pytest.raises(InputFileError) as excinfo:
            read_report(tmp_path / "absent.json")
        assert excinfo.value.exit_code == 3

    def test_invalid_json(self, tmp_path):
        """Test that malformed JSON names its line."""
        path = tmp_path / "broken.json"
        path.write_text('{\n  "command": "certify",\n  "records": [\n', encoding="utf-8")
        with pytest.raises(ParseError) as excinfo:
            read_report(path)
        assert excinfo.value.line is not None

    def test_unknown_command(self, tmp_path):
        """Test a report of an unknown command."""
        path = tmp_path / "other.json"
        path.write_text(json.dumps({"command": "train", "records": []}), encoding="utf-8")
        with pytest.raises(ParseError):
            read_report(path)

    def test_invalid_record(self, tmp_path):
        """Test a report with an invalid record."""
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"command": "certify", "records": [{"text_id": -1}]}), encoding="utf-8")
        with pytest.raises(ParseError) as excinfo:
            read_report(path)
        assert excinfo.value.exit_code == 4
