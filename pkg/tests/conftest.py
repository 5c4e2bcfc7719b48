import numpy as np

from orthoprobe.synthetic import (
    PlantedProbe,
    make_planted_corpus,
    make_planted_probe,
    random_orthogonal,
    write_corpus_fixture,
)

CONFIG_TEMPLATE = """\
[run]
regime = "{regime}"
languages = [{languages}]
tasks = ["dep_depth", "dep_distance"]
output_dir = "out"

[layers]
dep_depth = 7
dep_distance = 7

[training]
seed = 1
max_epochs = {max_epochs}
batch_size = 10

[evaluation]
seeds = [1]
min_tokens = 5
max_tokens = 50

[families]
{families}

{data_sections}
"""


def data_section(lang, split):
    return (
        f"[data.{lang}.{split}]\n"
        f'treebank = "data/{lang}_{split}.conllu"\n'
        f"[data.{lang}.{split}.embeddings]\n"
        f'7 = "data/{lang}_{split}_l7.opemb"\n'
    )


def build_cli_project(root, languages=("aa", "bb"), dim=16, n_train=20, n_dev=8,
                      n_test=8, max_epochs=6, seed=123, regime="InLang",
                      empty_test_for=()):
    """Planted data files plus a TOML config under ``root``; returns the config path.

    The hidden per-language solutions are saved to ``root/planted.npz`` for
    tests that want a perfect checkpoint.
    """
    data_dir = root / "data"
    data_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    base = make_planted_probe(dim, 10, rng, rotation=np.eye(dim), noise_scale=0.3,
                              dbar_range=(0.8, 1.6))
    sections = []
    planted = {"dbar": base.dbar}
    for li, lang in enumerate(languages):
        probe = base if li == 0 else PlantedProbe(
            dim, base.support, base.dbar, random_orthogonal(dim, rng), 0.3
        )
        planted[f"rotation_{lang}"] = probe.rotation
        for split, n in (("train", n_train), ("dev", n_dev), ("test", n_test)):
            if split == "test" and lang in empty_test_for:
                n = 0
            corpus = make_planted_corpus(lang, split, n, probe, rng, token_range=(5, 10))
            write_corpus_fixture(corpus, data_dir)
            sections.append(data_section(lang, split))
    np.savez(root / "planted.npz", **planted)

    config = CONFIG_TEMPLATE.format(
        regime=regime,
        languages=", ".join(f'"{l}"' for l in languages),
        max_epochs=max_epochs,
        families="\n".join(
            f'{l} = "{"IE" if i == 0 else "non-IE"}"' for i, l in enumerate(languages)
        ),
        data_sections="\n".join(sections),
    )
    path = root / "config.toml"
    path.write_text(config)
    return path
