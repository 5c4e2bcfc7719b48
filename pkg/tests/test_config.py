import json

import pytest

from orthoprobe.config import load_config, load_split, load_training_data
from orthoprobe.errors import ConfigurationError

from conftest import build_cli_project


def test_load_and_resolve(tmp_path):
    config_path = build_cli_project(tmp_path)
    cfg = load_config(str(config_path))
    assert cfg.regime == "InLang"
    assert cfg.languages == ["aa", "bb"]
    assert cfg.layer_of_task["dep_depth"] == 7
    assert cfg.families == {"aa": "IE", "bb": "non-IE"}
    assert cfg.training.max_epochs == 6
    corpus = load_split(cfg, "aa", "dev")
    assert len(corpus) == 8 and corpus.dim == 16


def test_train_cap_applies_to_train_split_only(tmp_path):
    config_path = build_cli_project(tmp_path, n_train=15, n_dev=9)
    cfg = load_config(str(config_path))
    cfg.training.train_cap = 10
    train, dev = load_training_data(cfg, seed=1)
    assert len(train["aa"]) == 10
    assert len(dev["aa"]) == 9


def test_env_var_paths_expanded(tmp_path, monkeypatch):
    config_path = build_cli_project(tmp_path)
    monkeypatch.setenv("FIXTURE_DATA", str(tmp_path / "data"))
    text = config_path.read_text().replace('"data/', '"${FIXTURE_DATA}/')
    config_path.write_text(text)
    cfg = load_config(str(config_path))
    assert len(load_split(cfg, "aa", "train")) == 20


def test_json_config_equivalent(tmp_path):
    config_path = build_cli_project(tmp_path)
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    raw = tomllib.load(open(config_path, "rb"))
    json_path = tmp_path / "config.json"
    json_path.write_text(json.dumps(raw))
    a = load_config(str(config_path))
    b = load_config(str(json_path))
    assert a.languages == b.languages
    assert a.data == b.data


def test_missing_files_listed(tmp_path):
    config_path = build_cli_project(tmp_path)
    (tmp_path / "data" / "aa_train.conllu").unlink()
    with pytest.raises(ConfigurationError, match="aa_train.conllu"):
        load_config(str(config_path))


def test_unknown_regime_rejected(tmp_path):
    config_path = build_cli_project(tmp_path)
    config_path.write_text(config_path.read_text().replace('"InLang"', '"Nope"'))
    with pytest.raises(ConfigurationError, match="regime"):
        load_config(str(config_path))


def test_empty_seeds_rejected(tmp_path):
    config_path = build_cli_project(tmp_path)
    config_path.write_text(
        config_path.read_text().replace("seeds = [1]", "seeds = []")
    )
    with pytest.raises(ConfigurationError, match="seeds"):
        load_config(str(config_path))


def test_unknown_training_key_rejected(tmp_path):
    config_path = build_cli_project(tmp_path)
    config_path.write_text(
        config_path.read_text().replace("batch_size = 10", "batch_sizes = 10")
    )
    with pytest.raises(ConfigurationError, match="training"):
        load_config(str(config_path))


def test_missing_data_section_rejected(tmp_path):
    config_path = build_cli_project(tmp_path)
    text = config_path.read_text().replace('languages = ["aa", "bb"]',
                                           'languages = ["aa", "bb", "zz"]')
    config_path.write_text(text)
    with pytest.raises(ConfigurationError, match="zz"):
        load_config(str(config_path))


def test_non_integer_layer_key_rejected(tmp_path):
    config_path = build_cli_project(tmp_path)
    config_path.write_text(
        config_path.read_text().replace(
            '[data.bb.test.embeddings]\n7 = "data/bb_test_l7.opemb"',
            '[data.bb.test.embeddings]\nseven = "data/bb_test_l7.opemb"',
        )
    )
    with pytest.raises(ConfigurationError, match="layer keys"):
        load_config(str(config_path))
