"""Orthogonal structural probes over multilingual contextual embeddings.

Train per-task scaling vectors composed with per-language (or shared)
orthogonal maps on precomputed embeddings, score how well the projected
geometry matches dependency and hypernymy trees, and extract dependency
trees for zero-/few-shot cross-lingual parsing.
"""

from .corpus import Corpus, align_corpus, gold_for_task, sample_training_sentences
from .embeddings import EmbeddingSet, read_embeddings, write_embeddings
from .hypernymy import HypernymyForest, annotate_lexical, load_hypernymy_forest
from .metrics import (
    pearson_correlation,
    shared_dimension_count,
    significance,
    spearman_sentence,
    spearman_task,
    wals_hamming_similarity,
)
from .model import (
    ALL_LANGS,
    DEP_DEPTH,
    DEP_DISTANCE,
    IN_LANG,
    LEX_DEPTH,
    LEX_DISTANCE,
    MAPPED_LANGS,
    TASKS,
    OrthogonalMap,
    ProbeModel,
    ScalingVector,
    build_model,
    load_checkpoint,
    save_checkpoint,
)
from .probe import (
    dso_penalty,
    loss_depth,
    loss_distance,
    nearest_orthogonal,
    orthogonality_residual,
    predict_depths,
    predict_depths_baseline,
    predict_distances,
    predict_distances_baseline,
)
from .report import EvaluationReport, build_report, score_corpus
from .training import TrainingConfig, TrainingLog, train
from .tree_extraction import extract_tree, mst_undirected, orient_by_depth, uas, uuas
from .treebank import (
    SentenceAnnotation,
    Token,
    compute_tree_depths,
    compute_tree_distances,
    parse_conllu,
    write_conllu,
)

__version__ = "0.1.0"
