import json
import random

import numpy as np
import pytest

from mccs_grpo.corpus import (
    Study,
    generate_corpus,
    load_corpus,
    make_corpus,
    render_reference,
    sample_study,
)
from mccs_grpo.errors import ConfigurationError, StructuralError
from mccs_grpo.evaluation import ce_metrics, evaluate_policy
from mccs_grpo.grpo import GRPOConfig
from mccs_grpo.labeler import label_report
from mccs_grpo.labels import NO_FINDING, OBSERVATION_INDEX, LabelState, with_no_finding
from mccs_grpo.policy import PolicyParams

B, P, N, U = LabelState.BLANK, LabelState.POSITIVE, LabelState.NEGATIVE, LabelState.UNCERTAIN


def vec(**states):
    v = [B] * 13
    for name, st in states.items():
        v[OBSERVATION_INDEX[name.replace("_", " ")]] = st
    return with_no_finding(v)


class TestSampleStudy:
    def test_rates(self):
        rng = np.random.default_rng(0)
        hits = np.zeros(13)
        for _ in range(10_000):
            s = sample_study(rng, 0.3, 0.15)
            hits += [t in (P, U) for t in s.truth[:13]]
        assert np.all(np.abs(hits / 10_000 - 0.3) < 0.02)

    def test_tiny_prevalence(self):
        s = sample_study(0, 1e-12)
        assert all(t in (N, B) for t in s.truth[:13])
        assert s.truth[NO_FINDING] is P

    def test_deterministic(self):
        assert sample_study(42) == sample_study(42)

    @pytest.mark.parametrize("prev,unc", [(0.0, 0.1), (1.0, 0.1), (0.3, 1.0), (0.3, -0.1)])
    def test_invalid_rates(self, prev, unc):
        with pytest.raises(ConfigurationError):
            sample_study(0, prev, unc)


class TestRenderReference:
    def test_all_blank(self):
        assert render_reference([B] * 14) == ""
        assert label_report("")[NO_FINDING] is P

    def test_single(self):
        assert render_reference(vec(Cardiomegaly=P)) == "There is cardiomegaly."

    def test_mixed(self):
        truth = vec(Cardiomegaly=P, Edema=N, Pneumonia=U)
        text = render_reference(truth)
        assert text.count(".") == 3 and "<" not in text
        assert label_report(text) == truth


class TestCorpusFiles:
    def test_single_record(self, tmp_path):
        path = tmp_path / "c.jsonl"
        generate_corpus(1, path, seed=3)
        lines = path.read_text().splitlines()
        assert len(lines) == 2
        assert json.loads(lines[0])["manifest"]["seed"] == 3
        assert set(json.loads(lines[1])) == {"id", "truth", "reference"}

    def test_byte_identical(self, tmp_path):
        generate_corpus(30, tmp_path / "a.jsonl", seed=9)
        generate_corpus(30, tmp_path / "b.jsonl", seed=9)
        assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()

    def test_default_size_self_consistent(self, tmp_path):
        generate_corpus(500, tmp_path / "c.jsonl")
        manifest, studies = load_corpus(tmp_path / "c.jsonl")
        assert manifest["n"] == 500 and len(studies) == 500
        assert all(label_report(s.reference_text) == s.truth for s in studies)

    def test_round_trip(self, tmp_path):
        studies = generate_corpus(20, tmp_path / "c.jsonl", seed=1)
        assert load_corpus(tmp_path / "c.jsonl")[1] == studies

    def test_tampered_record(self, tmp_path):
        path = tmp_path / "c.jsonl"
        bad = Study("x", vec(Edema=P), "No edema.")
        path.write_text(json.dumps(bad.to_json()) + "\n")
        with pytest.raises(StructuralError):
            load_corpus(path)

    def test_bad_json(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text("{not json\n")
        with pytest.raises(StructuralError):
            load_corpus(path)

    def test_unwritable(self, tmp_path):
        with pytest.raises(OSError):
            generate_corpus(1, tmp_path / "missing" / "c.jsonl")

    def test_prefixes_are_distinct_streams(self):
        a = make_corpus(20, seed=0, prefix="train")
        b = make_corpus(20, seed=0, prefix="eval")
        assert [s.truth for s in a] != [s.truth for s in b]


def brute_confusion(pairs):
    tp = fp = fn = 0
    for gen, ref in pairs:
        for j in range(14):
            g = gen[j] in ("positive", "uncertain")
            r = ref[j] in ("positive", "uncertain")
            if g and r:
                tp += 1
            elif g:
                fp += 1
            elif r:
                fn += 1
    return tp, fp, fn


class TestCEMetrics:
    def test_identical(self):
        pairs = [(s.truth, s.truth) for s in make_corpus(10)]
        m = ce_metrics(pairs)
        assert (m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0)

    def test_hand_counted(self):
        pairs = [
            # TP: Cardiomegaly, Edema; FP: Fracture. No Finding is blank on both sides.
            (vec(Cardiomegaly=P, Edema=U, Fracture=P), vec(Cardiomegaly=P, Edema=P)),
            # TP: No Finding; no disease positives either side.
            (vec(Edema=N), vec()),
            # TP: Atelectasis; FP: Pneumonia; FN: Pneumothorax.
            (vec(Atelectasis=P, Pneumonia=U), vec(Atelectasis=U, Pneumothorax=P)),
        ]
        m = ce_metrics(pairs)
        assert (m.tp, m.fp, m.fn) == (4, 2, 1)
        assert m.precision == pytest.approx(0.6667, abs=5e-5)
        assert m.recall == pytest.approx(0.8)
        assert m.f1 == pytest.approx(0.7273, abs=5e-5)

    def test_all_blank_generation(self):
        refs = [vec(Edema=P, Fracture=P), vec()]
        m = ce_metrics([(vec(), r) for r in refs])
        # Only No Finding can match: generated No Finding is positive twice, once correctly.
        assert (m.tp, m.fp, m.fn) == (1, 1, 2)

    def test_random_batches(self):
        rnd = random.Random(0)
        states = [s.value for s in LabelState]
        for _ in range(50):
            pairs = [
                ([rnd.choice(states) for _ in range(14)], [rnd.choice(states) for _ in range(14)])
                for _ in range(rnd.randint(1, 10))
            ]
            m = ce_metrics(pairs)
            assert (m.tp, m.fp, m.fn) == brute_confusion(pairs)
            if m.precision and m.recall:
                assert m.f1 == pytest.approx(2 * m.precision * m.recall / (m.precision + m.recall), abs=1e-12)

    def test_empty(self):
        with pytest.raises(ConfigurationError):
            ce_metrics([])


class TestEvaluatePolicy:
    def test_uniform_format_rate(self):
        corpus = make_corpus(600, seed=11, prefix="u")
        report = evaluate_policy(PolicyParams.zeros(), corpus)
        assert abs(report.format_rate - 0.25) <= 0.03

    def test_deterministic(self, small_corpus):
        assert evaluate_policy(PolicyParams.zeros(), small_corpus) == evaluate_policy(PolicyParams.zeros(), small_corpus)

    def test_order_invariant(self, small_corpus):
        params = PolicyParams.from_flat(np.random.default_rng(0).normal(size=160))
        flipped = list(reversed(small_corpus))
        assert evaluate_policy(params, small_corpus) == evaluate_policy(params, flipped)

    def test_eval_seed_matters(self, small_corpus):
        a = evaluate_policy(PolicyParams.zeros(), small_corpus, eval_seed=1)
        b = evaluate_policy(PolicyParams.zeros(), small_corpus, eval_seed=2)
        assert a != b

    def test_report_invariants(self, small_corpus):
        r = evaluate_policy(PolicyParams.zeros(), small_corpus, GRPOConfig(noise=0.3))
        assert 0 <= r.precision <= 1 and 0 <= r.recall <= 1 and 0 <= r.f1 <= 1
        assert r.n_studies == len(small_corpus)

    def test_empty(self):
        with pytest.raises(ConfigurationError):
            evaluate_policy(PolicyParams.zeros(), [])
