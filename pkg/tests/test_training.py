import numpy as np
import pytest

from capturenet.datasets import (
    AnnotatedTrace,
    BalancedDataset,
    build_balanced_dataset,
    split_runs,
    training_windows,
)
from capturenet.nn.model import CaptureNetDeep
from capturenet.training import (
    TrainConfig,
    TrainingDivergedError,
    train_model,
)
from conftest import make_tiny_run, make_tiny_runs, tiny_config


class TestSplitRuns:
    def test_seventeen_runs(self):
        split = split_runs([f"r{i}" for i in range(17)], seed=0)
        assert (len(split.train), len(split.val), len(split.test)) == (12, 3, 2)

    def test_ten_runs(self):
        split = split_runs([f"r{i}" for i in range(10)], seed=0)
        assert (len(split.train), len(split.val), len(split.test)) == (7, 2, 1)

    def test_twenty_runs(self):
        split = split_runs([f"r{i}" for i in range(20)], seed=0)
        assert (len(split.train), len(split.val), len(split.test)) == (14, 4, 2)

    def test_deterministic(self):
        ids = [f"r{i}" for i in range(17)]
        assert split_runs(ids, seed=5) == split_runs(ids, seed=5)

    def test_input_order_does_not_matter(self):
        ids = [f"r{i}" for i in range(9)]
        assert split_runs(ids, seed=3) == split_runs(list(reversed(ids)), seed=3)

    def test_partitions_cover_everything(self):
        ids = {f"r{i}" for i in range(13)}
        split = split_runs(ids, seed=2)
        assert split.train | split.val | split.test == ids

    def test_too_few_runs(self):
        with pytest.raises(ValueError):
            split_runs(["a", "b"], seed=0)

    def test_many_seeds_always_disjoint(self):
        ids = [f"r{i}" for i in range(17)]
        for seed in range(100):
            split = split_runs(ids, seed=seed)
            assert not (split.train & split.val)
            assert not (split.train & split.test)
            assert not (split.val & split.test)


class TestBuildBalancedDataset:
    def test_balances_down_to_positives(self, tiny_runs, tiny_detector_config):
        ds = build_balanced_dataset(tiny_runs, tiny_detector_config, seed=0)
        assert ds.n_pos == ds.n_neg
        assert len(ds) == 2 * ds.n_pos
        assert ds.x.shape[1] == tiny_detector_config.window_size

    def test_degenerate_more_positives_than_negatives(self):
        # nearly wall-to-wall captures leave almost no negative windows
        run = AnnotatedTrace_with_dense_captures()
        ds = build_balanced_dataset([run], tiny_config(), seed=0)
        assert ds.n_pos == ds.n_neg

    def test_deterministic_sampling(self, tiny_runs, tiny_detector_config):
        a = build_balanced_dataset(tiny_runs, tiny_detector_config, seed=9)
        b = build_balanced_dataset(tiny_runs, tiny_detector_config, seed=9)
        np.testing.assert_array_equal(a.x, b.x)
        assert a.meta == b.meta

    def test_no_positive_examples_error(self):
        run = make_tiny_run(3, n_captures=0)
        with pytest.raises(ValueError, match="no positive examples"):
            build_balanced_dataset([run], tiny_config(), seed=0)

    def test_leakage_guard_rejects_foreign_run(self, tiny_runs, tiny_detector_config):
        allowed = {tiny_runs[0].run_id}
        with pytest.raises(ValueError, match="outside the allowed partition"):
            build_balanced_dataset(tiny_runs[:2], tiny_detector_config, seed=0,
                                   allowed_run_ids=allowed)

    def test_labels_match_annotation_overlap(self, tiny_runs, tiny_detector_config):
        for run in tiny_runs[:2]:
            for w in training_windows(run, tiny_detector_config):
                assert w.label in (0, 1)


def AnnotatedTrace_with_dense_captures():
    from capturenet.sim import SimParams, generate_run

    params = SimParams(sample_rate_hz=1000.0, capture_duration_s=(9.0, 11.0),
                       transloc_prob=0.0, min_filler_s=0.5)
    trace, anns = generate_run(4, 50_000, seed=8, params=params, run_id="dense")
    return AnnotatedTrace(trace=trace, annotations=tuple(anns))


def toy_dataset(seed, n=32, window=160, pos_level=0.1, neg_level=0.9, flip_labels=False):
    rng = np.random.default_rng(seed)
    half = n // 2
    x = np.concatenate([
        rng.normal(pos_level, 0.02, (half, window)),
        rng.normal(neg_level, 0.02, (half, window)),
    ]).astype(np.float32)
    y = np.concatenate([np.ones(half), np.zeros(half)]).astype(np.float32)
    if flip_labels:
        y = 1.0 - y
    return BalancedDataset(x=x, y=y, meta=[("t", 1, i) for i in range(n)],
                           n_pos=half, n_neg=half)


class TestTrainModel:
    def test_separable_data_converges(self):
        train = toy_dataset(0)
        val = toy_dataset(1)
        model = CaptureNetDeep(160, dropout=0.0, seed=0)
        result = train_model(
            model, train, val,
            TrainConfig(batch_size=16, lr=3e-3, weight_decay=0.0,
                        max_epochs=100, patience=100),
            seed=0,
        )
        assert result.best_val_loss < 0.1
        assert result.records[-1]["epoch"] == result.stopped_epoch

    def test_patience_stops_at_51_with_worsening_val(self):
        # same inputs on both sides with opposite labels: every step pushes
        # the outputs toward the training labels, so validation loss rises
        # from epoch 1 on and epoch 1 stays the best epoch
        rng = np.random.default_rng(2)
        x = rng.normal(0.5, 0.1, (32, 160)).astype(np.float32)
        train = BalancedDataset(x=x, y=np.ones(32, dtype=np.float32),
                                meta=[("t", 1, i) for i in range(32)],
                                n_pos=32, n_neg=0)
        val = BalancedDataset(x=x.copy(), y=np.zeros(32, dtype=np.float32),
                              meta=[("t", 1, i) for i in range(32)],
                              n_pos=0, n_neg=32)
        model = CaptureNetDeep(160, dropout=0.0, seed=1)
        result = train_model(
            model, train, val,
            TrainConfig(batch_size=32, lr=1e-2, weight_decay=0.0,
                        max_epochs=500, patience=50),
            seed=0,
        )
        assert result.best_epoch == 1
        assert result.stopped_epoch == 51

    def test_max_epoch_cap(self):
        train = toy_dataset(4)
        val = toy_dataset(5)
        model = CaptureNetDeep(160, dropout=0.0, seed=2)
        result = train_model(
            model, train, val,
            TrainConfig(batch_size=16, lr=1e-4, weight_decay=0.0,
                        max_epochs=5, patience=500),
            seed=0,
        )
        assert result.stopped_epoch == 5
        assert len(result.records) == 5

    def test_returns_best_epoch_params(self):
        rng = np.random.default_rng(6)
        x = rng.normal(0.5, 0.1, (32, 160)).astype(np.float32)
        train = BalancedDataset(x=x, y=np.ones(32, dtype=np.float32),
                                meta=[("t", 1, i) for i in range(32)],
                                n_pos=32, n_neg=0)
        val = BalancedDataset(x=x.copy(), y=np.zeros(32, dtype=np.float32),
                              meta=[("t", 1, i) for i in range(32)],
                              n_pos=0, n_neg=32)
        model = CaptureNetDeep(160, dropout=0.0, seed=3)
        snapshot_before = model.copy_params()
        result = train_model(
            model, train, val,
            TrainConfig(batch_size=32, lr=1e-2, weight_decay=0.0,
                        max_epochs=60, patience=10),
            seed=0,
        )
        # best epoch is epoch 1: returned params are one optimizer step away
        # from the init, not the last (overfit) iterate
        assert result.best_epoch == 1
        drift = max(
            float(np.abs(result.model.params[k] - snapshot_before[k]).max())
            for k in snapshot_before
        )
        assert 0 < drift <= 0.011  # one AdamW step moves each weight by <= lr

    def test_bitwise_reproducible(self):
        cfg = TrainConfig(batch_size=16, lr=1e-3, weight_decay=1e-3,
                          max_epochs=8, patience=8)
        outs = []
        for _ in range(2):
            model = CaptureNetDeep(160, dropout=0.5, seed=4)
            result = train_model(model, toy_dataset(8), toy_dataset(9), cfg, seed=7)
            outs.append({k: v.copy() for k, v in result.model.params.items()})
        for k in outs[0]:
            np.testing.assert_array_equal(outs[0][k], outs[1][k])

    def test_divergence_raises_with_context(self):
        train = toy_dataset(10)
        val = toy_dataset(11)
        model = CaptureNetDeep(160, dropout=0.0, seed=5)
        # blow up the loss by poisoning a parameter after init; the overflow
        # is the point, so silence numpy's warnings locally
        model.params["fc2_b"][:] = np.float32(3e38)
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(TrainingDivergedError) as exc_info:
                train_model(model, train, val,
                            TrainConfig(batch_size=16, lr=1e30, weight_decay=0.0,
                                        max_epochs=5, patience=5), seed=0)
        assert exc_info.value.last_finite_epoch >= 0

    def test_epoch_log_records(self):
        train = toy_dataset(12)
        val = toy_dataset(13)
        model = CaptureNetDeep(160, dropout=0.0, seed=6)
        result = train_model(model, train, val,
                             TrainConfig(batch_size=16, lr=1e-3, weight_decay=0.0,
                                         max_epochs=3, patience=3), seed=0)
        for i, rec in enumerate(result.records, start=1):
            assert rec["epoch"] == i
            assert {"train_loss", "val_loss", "timestamp"} <= rec.keys()
