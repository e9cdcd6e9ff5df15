import numpy as np
import pytest

from main import main
from seq2seq.model import Graph2SeqModel
from stages.stage1_generate import gen_synthetic, linearize, read_records
from stages.stage2_train import build_vocab, load_examples, load_model, train
from stages.stage3_evaluate import evaluate, evaluate_model
from stages.stage4_bench import bench_scaling, expected_sparse_madds
from utils.checkpoint import load_checkpoint
from utils.config import RunConfig
from utils.errors import EvalError, TrainError, UsageError


def _cfg(tmp_path, dataset, **overrides):
    values = dict(
        strategy="dense",
        blocks=((2,),),
        d=8,
        decoder_hidden=8,
        embed_dim=4,
        epochs=2,
        lr=5e-3,
        dataset=str(dataset),
        checkpoint=str(tmp_path / "model.ckpt"),
        metrics=str(tmp_path / "metrics.tsv"),
    )
    values.update(overrides)
    return RunConfig(**values)


@pytest.fixture
def tiny_dataset(tmp_path):
    return gen_synthetic(seed=4, count=4, max_nodes=5, out_path=tmp_path / "tiny.txt")


class TestGenSynthetic:
    def test_single_record_parses_back(self, tmp_path):
        records = read_records(gen_synthetic(1, 1, 8, tmp_path / "one.txt"))
        assert len(records) == 1
        graph, target = records[0]
        assert target == linearize(graph)

    def test_same_seed_same_bytes(self, tmp_path):
        a = gen_synthetic(9, 25, 10, tmp_path / "a.txt").read_bytes()
        b = gen_synthetic(9, 25, 10, tmp_path / "b.txt").read_bytes()
        assert a == b
        assert gen_synthetic(10, 25, 10, tmp_path / "c.txt").read_bytes() != a

    def test_many_records_parse_with_bounded_reentrancies(self, tmp_path):
        records = read_records(gen_synthetic(3, 200, 12, tmp_path / "many.txt"))
        assert len(records) == 200
        for graph, target in records:
            assert 1 <= graph.n <= 12
            assert graph.reentrancies() <= 2
            assert len(target) == graph.n

    def test_count_must_be_positive(self, tmp_path):
        with pytest.raises(UsageError):
            gen_synthetic(1, 0, 8, tmp_path / "none.txt")


class TestTrain:
    def test_zero_epochs_saves_initial_weights(self, tmp_path, tiny_dataset):
        cfg = _cfg(tmp_path, tiny_dataset, epochs=0)
        result = train(cfg)
        assert result.losses == []
        assert (tmp_path / "metrics.tsv").read_text(encoding="utf-8") == ""
        fresh = Graph2SeqModel(build_vocab(load_examples(tiny_dataset)), cfg)
        saved = load_checkpoint(result.checkpoint)
        for name, value in fresh.store.items():
            np.testing.assert_array_equal(saved[name], value)

    def test_metrics_lines(self, tmp_path, tiny_dataset):
        train(_cfg(tmp_path, tiny_dataset))
        lines = (tmp_path / "metrics.tsv").read_text(encoding="utf-8").splitlines()
        assert [line.split("\t")[0] for line in lines] == ["1", "2"]
        for line in lines:
            epoch, loss, acc = line.split("\t")
            assert float(loss) > 0.0
            assert 0.0 <= float(acc) <= 1.0

    def test_identical_configs_give_identical_bits(self, tmp_path, tiny_dataset):
        first = train(_cfg(tmp_path / "a", tiny_dataset))
        second = train(_cfg(tmp_path / "b", tiny_dataset))
        assert first.losses == second.losses
        assert first.metrics.read_bytes() == second.metrics.read_bytes()
        assert first.checkpoint.read_bytes() == second.checkpoint.read_bytes()

    def test_dropout_runs_are_reproducible(self, tmp_path, tiny_dataset):
        first = train(_cfg(tmp_path / "a", tiny_dataset, dropout=0.2))
        second = train(_cfg(tmp_path / "b", tiny_dataset, dropout=0.2))
        plain = train(_cfg(tmp_path / "c", tiny_dataset))
        assert first.checkpoint.read_bytes() == second.checkpoint.read_bytes()
        assert first.losses == second.losses
        assert first.losses != plain.losses

    def test_non_finite_loss_aborts(self, tmp_path, tiny_dataset, monkeypatch):
        monkeypatch.setattr(Graph2SeqModel, "loss", lambda self, tape, ex: (tape.constant(np.nan), 0, 1))
        with pytest.raises(TrainError) as info:
            train(_cfg(tmp_path, tiny_dataset))
        assert info.value.epoch == 1
        assert 0 <= info.value.example_id < 4


class TestEvaluate:
    def test_checkpoint_round_trip_is_exact(self, tmp_path, tiny_dataset):
        result = train(_cfg(tmp_path, tiny_dataset))
        examples = load_examples(tiny_dataset)
        before = evaluate_model(result.model, examples, beam=2)
        after = evaluate(result.checkpoint, tiny_dataset, beam=2)
        assert after.hypotheses == before.hypotheses
        assert (after.token_accuracy, after.bleu) == (before.token_accuracy, before.bleu)

    def test_beam_one_is_greedy(self, tmp_path, tiny_dataset):
        result = train(_cfg(tmp_path, tiny_dataset))
        model = load_model(result.checkpoint)
        examples = load_examples(tiny_dataset)
        greedy = evaluate_model(model, examples, beam=1, workers=2)
        assert greedy.hypotheses == [model.decode(ex, beam=1) for ex in examples]
        assert sum(b["count"] for b in greedy.by_size.values()) == len(examples)
        assert sum(b["count"] for b in greedy.by_reentrancies.values()) == len(examples)
        for bucket in greedy.by_size.values():
            assert 0.0 <= bucket["token_accuracy"] <= 1.0

    def test_decode_beam_defaults_and_bounds(self, tmp_path, tiny_dataset):
        result = train(_cfg(tmp_path, tiny_dataset, epochs=0, beam=2))
        example = load_examples(tiny_dataset)[0]
        assert result.model.decode(example) == result.model.decode(example, beam=2)
        for beam in (0, -1):
            with pytest.raises(UsageError):
                result.model.decode(example, beam=beam)
        with pytest.raises(UsageError):
            result.model.decode(example, max_len=0)

    def test_empty_dataset_is_an_error(self, tmp_path, tiny_dataset):
        result = train(_cfg(tmp_path, tiny_dataset, epochs=0))
        empty = tmp_path / "empty.txt"
        empty.write_text("\n\n", encoding="utf-8")
        with pytest.raises(EvalError):
            evaluate(result.checkpoint, empty)

    def test_vocab_mismatch(self, tmp_path, tiny_dataset):
        result = train(_cfg(tmp_path, tiny_dataset, epochs=0))
        foreign = tmp_path / "foreign.txt"
        foreign.write_text("(q / quasar-99)\tquasar-99\n", encoding="utf-8")
        with pytest.raises(EvalError, match="vocabulary"):
            evaluate(result.checkpoint, foreign)


class TestBench:
    def test_sparse_count_matches_formula(self):
        report = bench_scaling([100, 200, 400], K=2, d=8, repeats=1)
        assert [r.sparse_madds for r in report.rows] == [2400, 4800, 9600]
        assert expected_sparse_madds(2, 100, 8) == (1 + 2) * 100 * 8
        assert len({r.dense_madds for r in report.rows}) == 1
        assert report.r_squared() == pytest.approx(1.0, abs=1e-12)

    def test_counts_increase_with_edges(self):
        report = bench_scaling([50, 100, 200, 400, 800], K=3, d=4, repeats=2)
        madds = [r.madds for r in report.rows]
        assert madds == sorted(set(madds))
        assert report.rows[1].sparse_madds == 2 * report.rows[0].sparse_madds

    def test_sizes_must_ascend(self):
        with pytest.raises(UsageError):
            bench_scaling([200, 100])


class TestCli:
    def test_params_and_gen(self, tmp_path, monkeypatch, capsys):
        monkeypatch.chdir(tmp_path)
        assert main(["params", "--preset", "desk"]) == 0
        assert "strategy\tlayer\tshape\tcount\ttotal" in capsys.readouterr().out
        assert main(["gen", "--seed", "2", "--count", "3", "--out", "data.txt"]) == 0
        assert main(["parse", "data.txt"]) == 0
        assert len(capsys.readouterr().out.splitlines()) == 3

    def test_bench_prints_the_fit(self, tmp_path, monkeypatch, capsys):
        monkeypatch.chdir(tmp_path)
        assert main(["bench", "--sizes", "50,100,200", "--d", "4", "--repeats", "1"]) == 0
        assert "R^2 of multiply-adds vs m: 1.000000000000" in capsys.readouterr().out
        assert len(list((tmp_path / "outputs").glob("bench-*.json"))) == 1

    def test_train_saves_metrics_and_madds_summary(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        gen_synthetic(seed=4, count=3, max_nodes=5, out_path=tmp_path / "tiny.txt")
        (tmp_path / "run.cfg").write_text(
            "strategy = dense\nblocks = 2\nd = 8\ndecoder_hidden = 8\nembed_dim = 4\nepochs = 1\n",
            encoding="utf-8",
        )
        assert main(["train", "--config", "run.cfg", "--data", "tiny.txt", "--ckpt", "m.ckpt"]) == 0
        assert len((tmp_path / "m.metrics.tsv").read_text(encoding="utf-8").splitlines()) == 1
        summary = next((tmp_path / "outputs").glob("madds_*.txt")).read_text(encoding="utf-8")
        assert "Sparse products" in summary

    def test_domain_errors_exit_with_one(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert main(["eval", "--ckpt", "missing.ckpt", "--data", "missing.txt"]) == 1


@pytest.mark.slow
class TestOverfit:
    def test_desk_model_memorizes_ten_examples(self, tmp_path):
        data = gen_synthetic(seed=1, count=10, max_nodes=6, out_path=tmp_path / "ten.txt")
        cfg = RunConfig(
            strategy="group",
            lr=5e-3,
            epochs=300,
            dataset=str(data),
            checkpoint=str(tmp_path / "model.ckpt"),
            metrics=str(tmp_path / "metrics.tsv"),
        )
        result = train(cfg)
        assert max(result.accuracies) >= 0.95
        assert evaluate(result.checkpoint, data).bleu >= 0.9
