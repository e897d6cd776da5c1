import numpy as np
import pytest

from compevo import graph as G
from compevo.data import (
    SYNTH_KINDS,
    Dataset,
    imbalance_metric,
    load_csv,
    parse_data_source,
    save_csv,
    split_indices,
    synth_dataset,
    train_test_split,
)
from compevo.errors import DataError, EmptyClass, MissingValue, NonNumericCell, StratificationImpossible, UnknownColumn
from compevo.graph import PipelineGraph
from compevo.kinds import ModelKind as K, TaskType
from compevo.objectives import rmse, roc_auc

CLF, REG = TaskType.CLASSIFICATION, TaskType.REGRESSION


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestLoadCsv:
    def test_toy(self, tmp_path):
        p = write(tmp_path, "a,b,y\n1,2,0\n3,4,1\n5,6,1\n7,8,0\n")
        d = load_csv(p, "y", CLF)
        assert d.features.shape == (4, 2)
        assert d.target.tolist() == [0, 1, 1, 0]
        assert d.feature_names == ("a", "b")

    def test_target_by_index(self, tmp_path):
        p = write(tmp_path, "y,a\n2.5,1\n3.5,2\n")
        assert load_csv(p, 0, REG).target.tolist() == [2.5, 3.5]
        assert load_csv(p, "-2", REG).target.tolist() == [2.5, 3.5]

    @pytest.mark.parametrize("cell", ["NA", "", "nan", "?"])
    def test_missing(self, tmp_path, cell):
        p = write(tmp_path, f"a,y\n1,0\n{cell},1\n")
        with pytest.raises(MissingValue) as info:
            load_csv(p, "y", CLF)
        assert (info.value.row, info.value.col) == (2, 0)

    def test_non_numeric(self, tmp_path):
        with pytest.raises(NonNumericCell):
            load_csv(write(tmp_path, "a,y\nred,0\n"), "y", CLF)

    def test_unknown_column(self, tmp_path):
        p = write(tmp_path, "a,y\n1,0\n")
        with pytest.raises(UnknownColumn):
            load_csv(p, "label", CLF)
        with pytest.raises(UnknownColumn):
            load_csv(p, 5, CLF)

    def test_non_binary_target(self, tmp_path):
        with pytest.raises(DataError):
            load_csv(write(tmp_path, "a,y\n1,2\n2,0\n"), "y", CLF)

    def test_hill_valley_shape(self, tmp_path):
        rng = np.random.default_rng(0)
        d = Dataset(rng.normal(size=(1212, 100)), (rng.random(1212) < 0.5).astype(float), CLF)
        p = tmp_path / "hv.csv"
        save_csv(d, p, "class")
        back = load_csv(p, "class", CLF)
        assert (back.n_samples, back.n_features) == (1212, 100)
        assert np.array_equal(back.features, d.features)


class TestSplit:
    def test_sizes(self):
        d = synth_dataset("friedman_like", 100, 0.1)
        tr, te = train_test_split(d, 0.7, seed=0)
        assert (tr.n_samples, te.n_samples) == (70, 30)
        c = synth_dataset("two_gaussians", 100, 0.0)
        tr, te = train_test_split(c, 0.7, seed=0)
        assert (tr.n_samples, te.n_samples) == (70, 30)

    def test_seeded(self):
        y = np.arange(40.0)
        a = split_indices(y, REG, 0.7, np.random.default_rng(1))
        b = split_indices(y, REG, 0.7, np.random.default_rng(1))
        c = split_indices(y, REG, 0.7, np.random.default_rng(2))
        assert all(np.array_equal(x, z) for x, z in zip(a, b))
        assert not np.array_equal(a[0], c[0])

    def test_stratified_ceil(self):
        y = np.r_[np.zeros(40), np.ones(10)]
        tr, te = split_indices(y, CLF, 0.7, np.random.default_rng(0))
        assert (int((y[tr] == 0).sum()), int((y[tr] == 1).sum())) == (28, 7)
        assert set(y[te]) == {0.0, 1.0}

    def test_partition(self):
        y = (np.random.default_rng(3).random(57) < 0.3).astype(float)
        tr, te = split_indices(y, CLF, 0.7, np.random.default_rng(5))
        assert len(np.intersect1d(tr, te)) == 0
        assert np.array_equal(np.sort(np.r_[tr, te]), np.arange(57))

    def test_too_few(self):
        with pytest.raises(StratificationImpossible):
            split_indices(np.r_[np.zeros(9), 1.0], CLF, 0.7, np.random.default_rng(0))
        with pytest.raises(DataError):
            split_indices(np.zeros(3), REG, 0.7, np.random.default_rng(0))


class TestImbalance:
    def test_examples(self):
        assert imbalance_metric([0, 1] * 10) == 0
        assert imbalance_metric([1, 1, 1, 0]) == pytest.approx(0.25)
        with pytest.raises(EmptyClass):
            imbalance_metric([1, 1, 1])

    def test_label_swap(self):
        y = np.r_[np.zeros(13), np.ones(4)]
        assert imbalance_metric(y) == imbalance_metric(1 - y)


class TestSynth:
    @pytest.mark.parametrize("kind", SYNTH_KINDS)
    def test_reproducible(self, kind):
        a, b = synth_dataset(kind, 50, 0.1, seed=4), synth_dataset(kind, 50, 0.1, seed=4)
        assert a.features.tobytes() == b.features.tobytes() and a.target.tobytes() == b.target.tobytes()

    def test_min_n(self):
        with pytest.raises(DataError):
            synth_dataset("noisy_xor", 10)
        with pytest.raises(DataError):
            synth_dataset("spirals", 100)

    def test_linear_realizable(self, rng):
        d = synth_dataset("linear_regression", 60, 0.0)
        pred = G.predict(G.fit(PipelineGraph.single(K.LINEAR_REGRESSION), d, rng), d.features)
        assert rmse(d.target, pred) <= 1e-6

    def test_gaussians_separable(self, rng):
        tr, te = train_test_split(synth_dataset("two_gaussians", 400, 0.0, seed=1), 0.7, 0)
        pred = G.predict(G.fit(PipelineGraph.single(K.GAUSSIAN_NB), tr, rng), te.features)
        assert roc_auc(te.target, pred) >= 0.99

    def test_xor_needs_structure(self, rng):
        tr, te = train_test_split(synth_dataset("noisy_xor", 400, 0.0, seed=2), 0.7, 0)

        def auc(kind, a=tr, b=te):
            return roc_auc(b.target, G.predict(G.fit(PipelineGraph.single(kind), a, rng), b.features))

        assert auc(K.LOGISTIC_REGRESSION) <= 0.6
        assert auc(K.DECISION_TREE) >= 0.9

    @pytest.mark.parametrize("seed", range(10))
    def test_linear_models_fail_on_xor(self, seed, rng):
        tr, te = train_test_split(synth_dataset("noisy_xor", 400, 0.0, seed=seed), 0.7, seed)
        pred = G.predict(G.fit(PipelineGraph.single(K.LOGISTIC_REGRESSION), tr, rng), te.features)
        assert roc_auc(te.target, pred) <= 0.6


def test_parse_data_source(tmp_path):
    d = parse_data_source("synth:noisy_xor:40:0.1:7")
    assert d.n_samples == 40 and d.task is CLF
    assert np.array_equal(d.features, synth_dataset("noisy_xor", 40, 0.1, 7).features)
    p = write(tmp_path, "a,y\n1,0.5\n2,1.5\n")
    assert parse_data_source(str(p), "y", "regression").n_samples == 2
    with pytest.raises(DataError):
        parse_data_source(str(p))
    with pytest.raises(DataError):
        parse_data_source("synth:noisy_xor:forty:0.1")
