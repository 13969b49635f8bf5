import csv

import numpy as np
import pytest

from cdlens.decompose import GCD_DEFAULT, MURDOCH
from cdlens.corpus import generate_corpus
from cdlens.evaluate import (
    AttributionReport,
    ReportCell,
    aggregate_attributions,
    build_report,
    na_accuracy,
    subject_attribution,
    write_na_csv,
    write_report_csv,
    write_slot_csv,
)

from conftest import make_checkpoint


@pytest.fixture(scope="module")
def simple_items(en_lexicon, en_vocab):
    return generate_corpus("en", "Simple", lexicon=en_lexicon, vocab=en_vocab, limit=6)


@pytest.fixture(scope="module")
def en_model(en_vocab):
    return make_checkpoint("lstm", d_h=8, seed=4, vocab=en_vocab)


def biased_model(en_vocab, lexicon, sign):
    """All-zero model whose logits equal a decoder bias on singular verb forms.

    With sign=+1 every singular form beats its plural twin, so S-condition
    items score 100% and P-condition items 0%; sign=-1 flips both.
    """
    ckpt = make_checkpoint("lstm", d_h=8, seed=0, vocab=en_vocab)
    for name, arr in ckpt.tensors.items():
        ckpt.tensors[name] = np.zeros_like(arr)
    for verb in lexicon.verbs(clause=False):
        ckpt.tensors["decoder.b"][en_vocab.encode(verb.singular)] = sign * 10.0
    return ckpt


class TestReportCell:
    def test_percentages(self):
        cell = ReportCell(n=8, na_correct=6, attr_correct=2, attr_ties=1)
        assert cell.na_accuracy == 75.0
        assert cell.attribution_score == 25.0


class TestNaAccuracy:
    def test_oracle_scores_100_on_favored_condition(self, en_vocab, en_lexicon, simple_items):
        ckpt = biased_model(en_vocab, en_lexicon, sign=+1)
        cells = na_accuracy(ckpt, simple_items)
        assert cells[("Simple", "S")].na_accuracy == 100.0
        assert cells[("Simple", "P")].na_accuracy == 0.0

    def test_anti_oracle_flips(self, en_vocab, en_lexicon, simple_items):
        ckpt = biased_model(en_vocab, en_lexicon, sign=-1)
        cells = na_accuracy(ckpt, simple_items)
        assert cells[("Simple", "S")].na_accuracy == 0.0
        assert cells[("Simple", "P")].na_accuracy == 100.0

    def test_tie_counts_as_incorrect(self, en_vocab, en_lexicon, simple_items):
        ckpt = biased_model(en_vocab, en_lexicon, sign=+1)
        ckpt.tensors["decoder.b"][:] = 0.0  # every comparison ties
        cells = na_accuracy(ckpt, simple_items)
        assert all(cell.na_correct == 0 for cell in cells.values())

    def test_empty_items_rejected(self, en_model):
        with pytest.raises(ValueError, match="empty"):
            na_accuracy(en_model, [])

    def test_jobs_path_matches_serial(self, en_model, simple_items):
        serial = na_accuracy(en_model, simple_items, jobs=1)
        parallel = na_accuracy(en_model, simple_items, jobs=2)
        assert serial == parallel


class TestSubjectAttribution:
    def test_zero_model_ties_everywhere(self, en_vocab, en_lexicon, simple_items):
        # beta logits are W @ beta_h; with zero weights every comparison ties
        ckpt = biased_model(en_vocab, en_lexicon, sign=+1)
        cells = subject_attribution(ckpt, simple_items, GCD_DEFAULT)
        for cell in cells.values():
            assert cell.attr_ties == cell.n
            assert cell.attr_correct == 0

    @pytest.mark.parametrize("policy", [GCD_DEFAULT, MURDOCH])
    def test_relabel_inversion(self, en_model, simple_items, policy):
        # swapping congruent/incongruent must invert correctness, modulo ties
        import dataclasses

        cells = subject_attribution(en_model, simple_items, policy)
        swapped_items = [
            dataclasses.replace(it, congruent=it.incongruent, incongruent=it.congruent)
            for it in simple_items
        ]
        swapped = subject_attribution(en_model, swapped_items, policy)
        for key, cell in cells.items():
            other = swapped[key]
            assert cell.attr_ties == other.attr_ties
            assert cell.attr_correct + other.attr_correct + cell.attr_ties == cell.n

    def test_no_ties_on_random_model(self, en_model, simple_items):
        cells = subject_attribution(en_model, simple_items, GCD_DEFAULT)
        assert all(cell.attr_ties == 0 for cell in cells.values())


class TestBuildReport:
    def test_merges_both_tasks(self, en_model, simple_items):
        report = build_report(en_model, simple_items, GCD_DEFAULT, model_id="abc123")
        assert report.policy == "gcd-default"
        assert report.model_id == "abc123"
        na = na_accuracy(en_model, simple_items)
        attr = subject_attribution(en_model, simple_items, GCD_DEFAULT)
        assert set(report.cells) == set(na)
        for key, cell in report.cells.items():
            assert cell.na_correct == na[key].na_correct
            assert cell.attr_correct == attr[key].attr_correct
        assert not report.has_ties

    def test_has_ties_flag(self, en_vocab, en_lexicon, simple_items):
        ckpt = biased_model(en_vocab, en_lexicon, sign=+1)
        report = build_report(ckpt, simple_items, GCD_DEFAULT, model_id="x")
        assert report.has_ties


class TestAggregateAttributions:
    def test_duplicated_item_mean_is_item_value(self, en_model, simple_items):
        item = simple_items[0]
        single = aggregate_attributions(en_model, [item], GCD_DEFAULT)
        doubled = aggregate_attributions(en_model, [item, item], GCD_DEFAULT)
        assert len(single) == len(item.tokens)
        for a, b in zip(single, doubled):
            assert a["mean_beta_congruent"] == pytest.approx(b["mean_beta_congruent"])
            assert a["token_example"] == b["token_example"]

    def test_two_item_arithmetic_mean(self, en_model, simple_items):
        a, b = simple_items[0], simple_items[1]
        ra = aggregate_attributions(en_model, [a], GCD_DEFAULT)
        rb = aggregate_attributions(en_model, [b], GCD_DEFAULT)
        rab = aggregate_attributions(en_model, [a, b], GCD_DEFAULT)
        for slot in range(len(ra)):
            expected = (ra[slot]["mean_beta_congruent"] + rb[slot]["mean_beta_congruent"]) / 2
            assert rab[slot]["mean_beta_congruent"] == pytest.approx(expected, rel=1e-12)

    def test_mixed_templates_rejected(self, en_model, en_lexicon, en_vocab, simple_items):
        other = generate_corpus("en", "NounPP", lexicon=en_lexicon, vocab=en_vocab, limit=1)
        with pytest.raises(ValueError, match="mix templates"):
            aggregate_attributions(en_model, [simple_items[0], other[0]], GCD_DEFAULT)

    def test_empty_rejected(self, en_model):
        with pytest.raises(ValueError, match="empty"):
            aggregate_attributions(en_model, [], GCD_DEFAULT)


class TestCsvWriters:
    def test_na_csv(self, tmp_path):
        cells = {
            ("Simple", "P"): ReportCell(n=4, na_correct=3),
            ("Simple", "S"): ReportCell(n=4, na_correct=2),
        }
        path = tmp_path / "na.csv"
        write_na_csv(cells, path)
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["template", "condition", "n", "na_accuracy"]
        assert rows[1] == ["Simple", "P", "4", "75.0000"]
        assert rows[2] == ["Simple", "S", "4", "50.0000"]

    def test_report_csv(self, tmp_path):
        report = AttributionReport(
            policy="gcd-default",
            model_id="deadbeef0123",
            cells={("NounPP", "SP"): ReportCell(n=2, na_correct=1, attr_correct=2, attr_ties=0)},
        )
        path = tmp_path / "report.csv"
        write_report_csv(report, path)
        rows = list(csv.reader(path.open()))
        assert rows[0] == [
            "template", "condition", "n", "na_accuracy",
            "attribution_score", "ties", "policy", "model_id",
        ]
        assert rows[1] == ["NounPP", "SP", "2", "50.0000", "100.0000", "0", "gcd-default", "deadbeef0123"]

    def test_slot_csv_round_trips_floats(self, tmp_path):
        rows = [
            {"slot": 0, "token_example": "The", "mean_beta_congruent": 0.1 + 0.2, "mean_beta_incongruent": -1.5}
        ]
        path = tmp_path / "slots.csv"
        write_slot_csv(rows, path)
        parsed = list(csv.reader(path.open()))[1]
        assert float(parsed[2]) == 0.1 + 0.2  # repr preserves the exact double
