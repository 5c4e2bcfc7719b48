"""Probe parameters, sharing regimes, and checkpoint files."""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ContractError, EmbeddingFormatError
from .probe import (
    nearest_orthogonal,
    orthogonality_residual,
    predict_depths,
    predict_distances,
)

DEP_DEPTH = "dep_depth"
DEP_DISTANCE = "dep_distance"
LEX_DEPTH = "lex_depth"
LEX_DISTANCE = "lex_distance"
TASKS = (DEP_DEPTH, DEP_DISTANCE, LEX_DEPTH, LEX_DISTANCE)
DEPTH_TASKS = (DEP_DEPTH, LEX_DEPTH)

#: encoder layers probed per task: dependency structure from layer 7,
#: lexical structure from layer 5
DEFAULT_LAYERS = {DEP_DEPTH: 7, DEP_DISTANCE: 7, LEX_DEPTH: 5, LEX_DISTANCE: 5}

IN_LANG = "InLang"
MAPPED_LANGS = "MappedLangs"
ALL_LANGS = "AllLangs"
REGIMES = (IN_LANG, MAPPED_LANGS, ALL_LANGS)

SHARED = "*"

CHECKPOINT_MAGIC = b"OPCKPT1\n"


@dataclass
class OrthogonalMap:
    V: np.ndarray
    trainable: bool = True


@dataclass
class ScalingVector:
    dbar: np.ndarray
    task: str
    trainable: bool = True


@dataclass
class ProbeModel:
    """Scaling vectors plus orthogonal maps under one sharing regime.

    ``maps`` is keyed by language (or ``"*"`` for the AllLangs shared
    map); ``scalers`` by task, or ``"task/language"`` under InLang where
    nothing is shared.  The first listed language is the anchor whose map
    stays frozen at identity under MappedLangs.
    """

    regime: str
    languages: tuple
    dim: int
    tasks: tuple = TASKS
    layer_of_task: dict = field(default_factory=lambda: dict(DEFAULT_LAYERS))
    maps: dict = field(default_factory=dict)
    scalers: dict = field(default_factory=dict)
    seed: int = 0

    @property
    def anchor(self):
        return self.languages[0]

    def scaler_key(self, task, language):
        return f"{task}/{language}" if self.regime == IN_LANG else task

    def scaler_for(self, task, language):
        return self.scalers[self.scaler_key(task, language)]

    def map_key(self, language):
        return SHARED if self.regime == ALL_LANGS else language

    def map_for(self, language):
        return self.maps[self.map_key(language)]

    def parameters(self):
        """All parameters as {name: (array, trainable)}; names are stable."""
        out = {}
        for key in sorted(self.maps):
            m = self.maps[key]
            out[f"map/{key}"] = (m.V, m.trainable)
        for key in sorted(self.scalers):
            s = self.scalers[key]
            out[f"scaler/{key}"] = (s.dbar, s.trainable)
        return out

    def trainable_parameters(self):
        return {name: arr for name, (arr, tr) in self.parameters().items() if tr}

    def trainable_parameter_count(self):
        return int(sum(arr.size for arr in self.trainable_parameters().values()))

    def set_parameter(self, name, value):
        kind, key = name.split("/", 1)
        if kind == "map":
            target = self.maps[key].V
        elif kind == "scaler":
            target = self.scalers[key].dbar
        else:
            raise ContractError(f"unknown parameter {name!r}")
        value = np.asarray(value, dtype=np.float64)
        if value.shape != target.shape:
            raise ContractError(f"{name}: shape {value.shape} != {target.shape}")
        target[...] = value

    def predict(self, task, language, H):
        """Predicted squared depths (vector) or distances (matrix) for one sentence."""
        vmap = self.map_for(language)
        scaler = self.scaler_for(task, language)
        if task in DEPTH_TASKS:
            return predict_depths(vmap.V, scaler.dbar, H)
        return predict_distances(vmap.V, scaler.dbar, H)

    def orthogonality_residuals(self):
        return {key: orthogonality_residual(m.V) for key, m in self.maps.items()}

    def project_maps_orthogonal(self):
        """Polar-project every trainable map onto the orthogonal group."""
        for m in self.maps.values():
            if m.trainable:
                m.V = nearest_orthogonal(m.V)

    def copy(self):
        clone = ProbeModel(
            regime=self.regime,
            languages=tuple(self.languages),
            dim=self.dim,
            tasks=tuple(self.tasks),
            layer_of_task=dict(self.layer_of_task),
            seed=self.seed,
        )
        clone.maps = {k: OrthogonalMap(m.V.copy(), m.trainable) for k, m in self.maps.items()}
        clone.scalers = {
            k: ScalingVector(s.dbar.copy(), s.task, s.trainable) for k, s in self.scalers.items()
        }
        return clone


def build_model(
    regime,
    languages,
    dim,
    tasks=TASKS,
    layer_of_task=None,
    seed=0,
    init_scale=0.05,
    train_maps=None,
):
    """Construct a ProbeModel with identity maps and random scaling vectors.

    Scaling vectors draw from U(-init_scale, init_scale) with a generator
    seeded by ``seed``; maps start at identity.  Map trainability follows
    the regime (InLang: all; MappedLangs: all but the anchor; AllLangs:
    frozen shared identity) unless ``train_maps`` overrides it.
    """
    if regime not in REGIMES:
        raise ConfigurationError(f"unknown regime {regime!r}")
    languages = tuple(languages)
    if not languages:
        raise ConfigurationError("no languages given")
    if len(set(languages)) != len(languages):
        raise ConfigurationError(f"duplicate languages in {languages}")
    if regime == MAPPED_LANGS and len(languages) < 2:
        raise ConfigurationError("MappedLangs needs at least 2 languages (nothing to map)")
    tasks = tuple(tasks)
    unknown = [t for t in tasks if t not in TASKS]
    if unknown:
        raise ConfigurationError(f"unknown tasks {unknown}")

    model = ProbeModel(
        regime=regime,
        languages=languages,
        dim=dim,
        tasks=tasks,
        layer_of_task=dict(layer_of_task or DEFAULT_LAYERS),
        seed=seed,
    )
    rng = np.random.default_rng([seed, 0])

    if regime == ALL_LANGS:
        model.maps[SHARED] = OrthogonalMap(np.eye(dim), trainable=bool(train_maps))
    else:
        for lang in languages:
            if train_maps is None:
                trainable = regime == IN_LANG or lang != model.anchor
            else:
                trainable = bool(train_maps)
            model.maps[lang] = OrthogonalMap(np.eye(dim), trainable=trainable)

    scaler_langs = languages if regime == IN_LANG else (None,)
    for lang in scaler_langs:
        for task in tasks:
            key = f"{task}/{lang}" if lang is not None else task
            dbar = rng.uniform(-init_scale, init_scale, size=dim)
            model.scalers[key] = ScalingVector(dbar=dbar, task=task)
    return model


def save_checkpoint(model, path, config=None):
    """Write a checkpoint: JSON manifest plus raw float64 LE parameter blocks.

    Byte-identical for identical models/configs; no timestamps.
    """
    params = model.parameters()
    blocks = io.BytesIO()
    manifest_params = {}
    for name in sorted(params):
        arr, trainable = params[name]
        data = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        manifest_params[name] = {
            "offset": blocks.tell(),
            "shape": list(arr.shape),
            "trainable": bool(trainable),
        }
        blocks.write(data)
    manifest = {
        "format": "OPCKPT1",
        "regime": model.regime,
        "languages": list(model.languages),
        "tasks": list(model.tasks),
        "dim": model.dim,
        "layer_of_task": {t: int(l) for t, l in model.layer_of_task.items()},
        "anchor": model.anchor,
        "seed": model.seed,
        "dtype": "f64le",
        "config": config or {},
        "params": manifest_params,
    }
    payload = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<Q", len(payload)))
        fh.write(payload)
        fh.write(blocks.getvalue())


def load_checkpoint(path):
    """Read a checkpoint back into (ProbeModel, config dict)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise EmbeddingFormatError(f"{path}: bad checkpoint magic {magic!r}")
        (manifest_len,) = struct.unpack("<Q", fh.read(8))
        manifest = json.loads(fh.read(manifest_len).decode("utf-8"))
        data = fh.read()

    model = ProbeModel(
        regime=manifest["regime"],
        languages=tuple(manifest["languages"]),
        dim=int(manifest["dim"]),
        tasks=tuple(manifest["tasks"]),
        layer_of_task={t: int(l) for t, l in manifest["layer_of_task"].items()},
        seed=int(manifest["seed"]),
    )
    for name, meta in manifest["params"].items():
        shape = tuple(meta["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = meta["offset"]
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=start).reshape(shape)
        arr = arr.astype(np.float64)
        kind, key = name.split("/", 1)
        if kind == "map":
            model.maps[key] = OrthogonalMap(V=arr, trainable=meta["trainable"])
        elif kind == "scaler":
            task = key.split("/", 1)[0]
            model.scalers[key] = ScalingVector(dbar=arr, task=task, trainable=meta["trainable"])
        else:
            raise EmbeddingFormatError(f"{path}: unknown parameter {name!r}")
    return model, manifest.get("config", {})
