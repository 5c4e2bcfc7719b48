import numpy as np
import pytest

from orthoprobe.errors import ConfigurationError
from orthoprobe.model import (
    ALL_LANGS,
    DEP_DEPTH,
    DEP_DISTANCE,
    IN_LANG,
    MAPPED_LANGS,
    build_model,
)
from orthoprobe.report import score_corpus
from orthoprobe.synthetic import make_planted_corpus, make_planted_probe
from orthoprobe.training import TrainingConfig, TrainingLog, train

TASKS2 = (DEP_DEPTH, DEP_DISTANCE)
LAYERS7 = {DEP_DEPTH: 7, DEP_DISTANCE: 7}


def small_world(seed=0, dim=12, n_train=30, n_dev=10):
    rng = np.random.default_rng(seed)
    probe = make_planted_probe(dim, 7, rng, noise_scale=0.3)
    return (
        make_planted_corpus("aa", "train", n_train, probe, rng, token_range=(4, 8)),
        make_planted_corpus("aa", "dev", n_dev, probe, rng, token_range=(4, 8)),
    )


def quick_config(**kw):
    defaults = dict(seed=1, max_epochs=4, batch_size=8)
    defaults.update(kw)
    return TrainingConfig(**defaults)


class TestTrainBasics:
    def test_missing_language_rejected_before_any_step(self):
        train_c, dev_c = small_world()
        model = build_model(MAPPED_LANGS, ["aa", "bb"], 12, tasks=TASKS2,
                            layer_of_task=LAYERS7, seed=1)
        with pytest.raises(ConfigurationError, match="bb"):
            train(model, {"aa": train_c}, {"aa": dev_c}, quick_config())

    def test_missing_layer_rejected(self):
        train_c, dev_c = small_world()
        model = build_model(IN_LANG, ["aa"], 12, tasks=TASKS2,
                            layer_of_task={DEP_DEPTH: 7, DEP_DISTANCE: 5}, seed=1)
        with pytest.raises(ConfigurationError, match="layer 5"):
            train(model, {"aa": train_c}, {"aa": dev_c}, quick_config())

    def test_log_structure_and_jsonl(self, tmp_path):
        train_c, dev_c = small_world()
        model = build_model(IN_LANG, ["aa"], 12, tasks=TASKS2,
                            layer_of_task=LAYERS7, seed=1)
        model, log = train(model, {"aa": train_c}, {"aa": dev_c}, quick_config())
        assert isinstance(log, TrainingLog)
        assert len(log.epochs) == 4
        rec = log.epochs[0]
        assert rec.lr == 0.02
        assert set(rec.stream_losses) == {"aa/dep_depth", "aa/dep_distance"}
        assert "aa" in rec.ortho_residuals
        path = tmp_path / "log.jsonl"
        log.write_jsonl(path)
        import json
        lines = [json.loads(l) for l in path.read_text().splitlines()]
        assert [l["type"] for l in lines] == ["epoch"] * 4 + ["final"]
        assert "residuals_before_projection" in lines[-1]

    def test_final_maps_are_orthogonal(self):
        train_c, dev_c = small_world()
        model = build_model(IN_LANG, ["aa"], 12, tasks=TASKS2,
                            layer_of_task=LAYERS7, seed=1)
        model, log = train(model, {"aa": train_c}, {"aa": dev_c}, quick_config())
        V = model.maps["aa"].V
        assert np.linalg.norm(V.T @ V - np.eye(12)) < 1e-9

    def test_frozen_maps_never_move(self):
        train_c, dev_c = small_world()
        model = build_model(ALL_LANGS, ["aa"], 12, tasks=TASKS2,
                            layer_of_task=LAYERS7, seed=1)
        model, _ = train(model, {"aa": train_c}, {"aa": dev_c}, quick_config())
        assert np.array_equal(model.maps["*"].V, np.eye(12))


class TestDeterminism:
    def test_bitwise_equal_trajectories(self):
        train_c, dev_c = small_world()

        def run():
            model = build_model(IN_LANG, ["aa"], 12, tasks=TASKS2,
                                layer_of_task=LAYERS7, seed=3)
            model, log = train(model, {"aa": train_c}, {"aa": dev_c},
                               quick_config(seed=3))
            return model, log

        m1, l1 = run()
        m2, l2 = run()
        for name, (arr, _) in m1.parameters().items():
            assert arr.tobytes() == m2.parameters()[name][0].tobytes(), name
        for r1, r2 in zip(l1.epochs, l2.epochs):
            assert r1.step_losses == r2.step_losses

    def test_regime_collapse_single_language(self):
        # AllLangs on one language == InLang with identity frozen maps
        train_c, dev_c = small_world()
        cfg = quick_config(seed=5, max_epochs=6)

        model_all = build_model(ALL_LANGS, ["aa"], 12, tasks=TASKS2,
                                layer_of_task=LAYERS7, seed=5)
        model_all, log_all = train(model_all, {"aa": train_c}, {"aa": dev_c}, cfg)

        model_in = build_model(IN_LANG, ["aa"], 12, tasks=TASKS2,
                               layer_of_task=LAYERS7, seed=5, train_maps=False)
        model_in, log_in = train(model_in, {"aa": train_c}, {"aa": dev_c},
                                 quick_config(seed=5, max_epochs=6))

        assert len(log_all.epochs) == len(log_in.epochs)
        for ra, ri in zip(log_all.epochs, log_in.epochs):
            assert ra.step_losses == ri.step_losses  # bitwise equality


class TestParameterCounts:
    def test_mapped_langs_paper_configuration(self):
        langs = ["en", "es", "sl", "id", "zh", "fi", "ar", "fr", "eu"]
        model = build_model(MAPPED_LANGS, langs, 768, seed=0)
        assert model.trainable_parameter_count() == 4_721_664

    def test_in_lang_counts(self):
        model = build_model(IN_LANG, ["aa", "bb"], 10, seed=0)
        # 2 maps of 100 plus 8 scalers of 10
        assert model.trainable_parameter_count() == 2 * 100 + 8 * 10

    def test_all_langs_counts(self):
        model = build_model(ALL_LANGS, ["aa", "bb"], 10, seed=0)
        assert model.trainable_parameter_count() == 4 * 10

    def test_mapped_langs_needs_two_languages(self):
        with pytest.raises(ConfigurationError, match="map"):
            build_model(MAPPED_LANGS, ["aa"], 8, seed=0)


class TestFewShot:
    def test_zero_shot_freezes_target_map(self):
        rng = np.random.default_rng(9)
        probe = make_planted_probe(10, 7, rng)
        train_c = {l: make_planted_corpus(l, "train", 20, probe, rng, token_range=(4, 8))
                   for l in ("aa", "bb")}
        dev_c = {l: make_planted_corpus(l, "dev", 6, probe, rng, token_range=(4, 8))
                 for l in ("aa", "bb")}
        model = build_model(MAPPED_LANGS, ["aa", "bb", "cc"], 10, tasks=TASKS2,
                            layer_of_task=LAYERS7, seed=1)
        cfg = quick_config(fewshot_language="cc", fewshot_size=0, max_epochs=2)
        model, _ = train(model, train_c, dev_c, cfg)
        assert not model.maps["cc"].trainable
        assert np.array_equal(model.maps["cc"].V, np.eye(10))

    def test_fewshot_samples_target_stream(self):
        rng = np.random.default_rng(10)
        probe = make_planted_probe(10, 7, rng)
        corpora = {l: make_planted_corpus(l, "train", 24, probe, rng, token_range=(4, 8))
                   for l in ("aa", "cc")}
        devs = {l: make_planted_corpus(l, "dev", 6, probe, rng, token_range=(4, 8))
                for l in ("aa", "cc")}
        model = build_model(MAPPED_LANGS, ["aa", "cc"], 10, tasks=TASKS2,
                            layer_of_task=LAYERS7, seed=1)
        cfg = quick_config(fewshot_language="cc", fewshot_size=8, max_epochs=2)
        model, log = train(model, corpora, devs, cfg)
        assert model.maps["cc"].trainable
        assert "cc/dep_depth" in log.epochs[0].stream_losses


class TestPlantedRecoverySmoke:
    def test_small_planted_run_reaches_high_spearman(self):
        rng = np.random.default_rng(21)
        probe = make_planted_probe(16, 9, rng, noise_scale=0.4)
        train_c = make_planted_corpus("aa", "train", 120, probe, rng, token_range=(5, 10))
        dev_c = make_planted_corpus("aa", "dev", 30, probe, rng, token_range=(5, 10))
        model = build_model(IN_LANG, ["aa"], 16, tasks=TASKS2,
                            layer_of_task=LAYERS7, seed=2)
        cfg = TrainingConfig(seed=2, max_epochs=60, batch_size=10)
        model, log = train(model, {"aa": train_c}, {"aa": dev_c}, cfg)
        scores = score_corpus(model, dev_c)
        assert scores[DEP_DEPTH] >= 0.9
        assert scores[DEP_DISTANCE] >= 0.9
