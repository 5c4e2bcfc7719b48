"""CLI for the embedding extractor."""

from __future__ import annotations

import argparse
import logging
import sys

from .extract import ExtractionJob, extract


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="extract-embeddings",
        description="per-layer word embeddings from a pretrained encoder, "
                    "written as OPEMB1 files",
    )
    parser.add_argument("--model", required=True, help="model id or local path")
    parser.add_argument("--treebank", required=True, help="CoNLL-U input")
    parser.add_argument("--layers", required=True, type=int, nargs="+",
                        help="hidden-state indices (embedding output is 0)")
    parser.add_argument("--out", required=True,
                        help="output path template containing {layer}")
    parser.add_argument("--language", default="und")
    parser.add_argument("--max-seq-length", type=int, default=512)
    parser.add_argument("--batch-size", type=int, default=16)
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    if "{layer}" not in args.out and len(args.layers) > 1:
        print("error: --out needs a {layer} placeholder for multiple layers",
              file=sys.stderr)
        return 1

    job = ExtractionJob(
        model=args.model,
        treebank=args.treebank,
        layers=list(args.layers),
        output_paths={l: args.out.format(layer=l) for l in args.layers},
        language=args.language,
        max_seq_length=args.max_seq_length,
        batch_size=args.batch_size,
    )
    try:
        result = extract(job)
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(f"wrote {result.written} sentences per layer, "
          f"skipped {len(result.skipped)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
