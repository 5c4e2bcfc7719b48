"""Produce OPEMB1 embedding files from treebank text with a pretrained encoder."""

from .extract import ExtractionJob, ExtractionResult, extract
from .opemb import write_opemb
from .pooling import pool_words

__version__ = "0.1.0"
