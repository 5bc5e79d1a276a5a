"""Command-line pipeline: ingest, align, fuse, evaluate, grid-search, export.

Exit codes: 0 success, 1 usage error, 2 data/validation error. Every run
echoes a `# config:` line with the fully resolved options; TSV outputs carry
it as their first line (the embedding text format has no comment syntax, so
embedding outputs get the line on stdout only). Linear algebra thread count
follows the usual BLAS environment variables (e.g. OMP_NUM_THREADS).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import __version__
from .alignment import (
    SynsetHierarchy,
    abstract_hierarchy,
    build_aligned_space,
    group_image_vectors,
    load_surface_forms,
    load_synset_lexemes,
    pool_image_vectors,
    project_synsets_to_lexemes,
    select_surface_forms,
)
from .embedding_io import (
    EmbeddingSpace,
    embedding_stats,
    format_value,
    load_embeddings_text,
    write_embeddings_text,
)
from .evaluation import (
    evaluate_suite,
    format_report_table,
    load_pairs,
    report_to_tsv,
    restrict_to_vocabulary,
)
from .fusion import FusionConfig
from .transe import (
    TransEConfig,
    entity_space,
    link_prediction_metrics,
    load_triples,
    load_type_constraints,
    transe_train,
)
from .weight_search import export_heatmap, grid_search

log = logging.getLogger(__name__)


class UsageError(Exception):
    """Bad flag combination detected after parsing."""


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; this tool reserves 2 for
    # data errors and uses 1 for usage problems
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _config_line(args: argparse.Namespace) -> str:
    skip = {"func", "command"}
    parts = [
        f"{key}={value}"
        for key, value in sorted(vars(args).items())
        if key not in skip
    ]
    return f"# config: {args.command} " + " ".join(parts)


def _parse_weights(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise UsageError(f"--weights needs 'wT,wG,wV', got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise UsageError(f"--weights needs three numbers, got {text!r}") from None


def _load_modalities(args) -> tuple[EmbeddingSpace, EmbeddingSpace, EmbeddingSpace]:
    lowercase = getattr(args, "lowercase", False)
    return (
        load_embeddings_text(args.text, "text", lowercase),
        load_embeddings_text(args.kg, "kg", lowercase),
        load_embeddings_text(args.visual, "visual", lowercase),
    )


def _load_datasets(args, concepts):
    datasets = []
    for entry in args.dataset:
        name, sep, path = entry.partition("=")
        if not sep:
            name, path = None, entry
        ds = load_pairs(path, name or None, skip_header=args.skip_header)
        restricted = restrict_to_vocabulary(ds, concepts)
        log.info("dataset %s: %d of %d pairs covered", restricted.name, len(restricted), len(ds))
        datasets.append(restricted)
    return datasets


def _fusion_config(args) -> FusionConfig:
    if args.k is not None and args.method in ("avg", "conc"):
        raise UsageError(f"--k does not apply to --method {args.method}")
    k = args.k if args.k is not None else 100
    weights = _parse_weights(args.weights) if getattr(args, "weights", None) else (1.0, 1.0, 1.0)
    return FusionConfig(method=args.method, normalize=args.normalize, weights=weights, k=k)


def _cmd_stats(args) -> int:
    space = load_embeddings_text(args.embeddings, lowercase=args.lowercase)
    st = embedding_stats(space)
    print(_config_line(args))
    print(f"tokens\t{st.count}")
    print(f"dim\t{st.dim}")
    print(f"min_norm\t{format_value(st.min_norm)}")
    print(f"max_norm\t{format_value(st.max_norm)}")
    print(f"mean_norm\t{format_value(st.mean_norm)}")
    return 0


def _cmd_pool_images(args) -> int:
    space = load_embeddings_text(args.images, "visual")
    pooled = pool_image_vectors(group_image_vectors(space))
    write_embeddings_text(pooled, args.output)
    print(_config_line(args))
    print(f"pooled {len(space)} image vectors into {len(pooled)} synset vectors")
    return 0


def _cmd_align(args) -> int:
    text, kg, visual = _load_modalities(args)
    if args.hierarchy:
        hierarchy = SynsetHierarchy.from_tsv(args.hierarchy)
        visual = abstract_hierarchy(hierarchy, visual)
    if args.synset_lexemes:
        visual = project_synsets_to_lexemes(visual, load_synset_lexemes(args.synset_lexemes))
    if args.surface_forms:
        kg = select_surface_forms(kg, load_surface_forms(args.surface_forms))
    aligned = build_aligned_space(text, kg, visual)

    os.makedirs(args.out_dir, exist_ok=True)
    for name, matrix, tag in (
        ("text", aligned.T, "text"),
        ("kg", aligned.G, "kg"),
        ("visual", aligned.V, "visual"),
    ):
        out = EmbeddingSpace(aligned.concepts, matrix.T.copy(), matrix.shape[0], tag)
        write_embeddings_text(out, os.path.join(args.out_dir, f"{name}.vec"))
    print(_config_line(args))
    print(f"aligned {aligned.n} concepts (dims {aligned.dims}) into {args.out_dir}")
    return 0


def _cmd_eval(args) -> int:
    text, kg, visual = _load_modalities(args)
    space = build_aligned_space(text, kg, visual)
    config = _fusion_config(args)
    datasets = _load_datasets(args, space.concepts)
    report = evaluate_suite(space, config, datasets)

    tsv = _config_line(args) + "\n" + report_to_tsv(report)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(tsv)
        print(_config_line(args))
    else:
        sys.stdout.write(tsv)
    label = config.method + ("-n" if config.normalize else "")
    print(format_report_table(report, label=label))
    return 0


def _cmd_gridsearch(args) -> int:
    text, kg, visual = _load_modalities(args)
    space = build_aligned_space(text, kg, visual)
    if args.k is not None and args.method in ("avg", "conc"):
        raise UsageError(f"--k does not apply to --method {args.method}")
    base = FusionConfig(
        method=args.method,
        normalize=args.normalize,
        weights=(1.0, 1.0, 1.0),
        k=args.k if args.k is not None else 100,
    )
    datasets = _load_datasets(args, space.concepts)
    result = grid_search(space, base, datasets, step=args.step)
    export_heatmap(result, args.output, header=_config_line(args))
    print(_config_line(args))
    w = result.best.weights
    print(
        f"best weights (w_T, w_G, w_V) = ({w[0]:g}, {w[1]:g}, {w[2]:g}) "
        f"with weighted avg rho {result.best.score:.3f} over {len(result.points)} points"
    )
    return 0


def _cmd_train_transe(args) -> int:
    store = load_triples(args.triples)
    if args.no_type_constraints:
        if args.constraints:
            raise UsageError("--constraints conflicts with --no-type-constraints")
    elif args.constraints:
        store = load_type_constraints(args.constraints, store)
    else:
        store = store.with_lcwa_constraints()
    config = TransEConfig(
        rank=args.rank,
        gamma=args.gamma,
        lr_embeddings=args.lr_embeddings,
        lr_parameters=args.lr_parameters,
        epochs=args.epochs,
        seed=args.seed,
        distance=args.distance,
    )
    model = transe_train(store, config)
    write_embeddings_text(entity_space(model, store), args.output)
    print(_config_line(args))
    print(
        f"trained {len(store.entities)} entities / {len(store.relations)} relations "
        f"on {len(store.triples)} triples; final epoch loss {model.epoch_losses[-1]:.6f}"
    )
    if args.report_ranks:
        mean_rank, hits = link_prediction_metrics(model, store, k=3)
        print(f"filtered mean rank {mean_rank:.2f}, hits@3 {hits:.3f}")
    return 0


def _add_modality_flags(sp):
    sp.add_argument("--text", required=True, help="text-modality embedding file")
    sp.add_argument("--kg", required=True, help="knowledge-graph embedding file")
    sp.add_argument("--visual", required=True, help="visual embedding file")
    sp.add_argument("--lowercase", action="store_true", help="case-fold tokens at load")


def _add_dataset_flags(sp):
    sp.add_argument(
        "--dataset",
        action="append",
        required=True,
        metavar="[NAME=]PATH",
        help="similarity TSV (word1<TAB>word2<TAB>score); repeatable",
    )
    sp.add_argument("--skip-header", action="store_true", help="skip the first dataset line")


def build_parser() -> _Parser:
    parser = _Parser(prog="trimodal", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"trimodal {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("stats", help="summarize an embedding file")
    sp.add_argument("embeddings")
    sp.add_argument("--lowercase", action="store_true")
    sp.set_defaults(func=_cmd_stats)

    sp = sub.add_parser("pool-images", help="max-pool synset_id/image_id vectors to synsets")
    sp.add_argument("images", help="embedding file with synset_id/image_id tokens")
    sp.add_argument("--output", required=True)
    sp.set_defaults(func=_cmd_pool_images)

    sp = sub.add_parser("align", help="build aligned word-level concept matrices")
    _add_modality_flags(sp)
    sp.add_argument("--hierarchy", help="synset hierarchy edges TSV (child<TAB>parent)")
    sp.add_argument("--synset-lexemes", help="synset_id<TAB>lexeme TSV")
    sp.add_argument("--surface-forms", help="concept<TAB>surface_form<TAB>count TSV")
    sp.add_argument("--out-dir", required=True)
    sp.set_defaults(func=_cmd_align)

    sp = sub.add_parser("eval", help="score fused similarities on benchmarks")
    _add_modality_flags(sp)
    _add_dataset_flags(sp)
    sp.add_argument("--method", choices=("avg", "conc", "svd", "pca"), required=True)
    sp.add_argument("--normalize", action="store_true", help="unit-normalize modality columns")
    sp.add_argument("--weights", metavar="wT,wG,wV", help="modality weights (default 1,1,1)")
    sp.add_argument("--k", type=int, help="reduced dimension for svd/pca (default 100)")
    sp.add_argument("--output", help="write the TSV report here instead of stdout")
    sp.set_defaults(func=_cmd_eval)

    sp = sub.add_parser("gridsearch", help="sweep modality weights on the simplex")
    _add_modality_flags(sp)
    _add_dataset_flags(sp)
    sp.add_argument("--method", choices=("avg", "conc", "svd", "pca"), required=True)
    sp.add_argument("--k", type=int, help="reduced dimension for svd/pca (default 100)")
    sp.add_argument("--step", type=float, default=0.05, help="simplex grid step (default 0.05)")
    sp.add_argument(
        "--no-normalize",
        dest="normalize",
        action="store_false",
        help="skip unit normalization (on by default here)",
    )
    sp.add_argument("--output", required=True, help="heatmap TSV path")
    sp.set_defaults(func=_cmd_gridsearch, normalize=True)

    sp = sub.add_parser("train-transe", help="train translational KG embeddings")
    sp.add_argument("triples", help="head<TAB>relation<TAB>tail TSV")
    sp.add_argument("--constraints", help="relation<TAB>domain|range<TAB>entity TSV")
    sp.add_argument(
        "--no-type-constraints",
        action="store_true",
        help="sample corruptions from all entities instead of observed ones",
    )
    sp.add_argument("--rank", type=int, default=50)
    sp.add_argument("--gamma", type=float, default=0.3)
    sp.add_argument("--lr-embeddings", type=float, default=0.2)
    sp.add_argument("--lr-parameters", type=float, default=0.5)
    sp.add_argument("--epochs", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--distance", choices=("l1", "l2"), default="l2")
    sp.add_argument("--report-ranks", action="store_true", help="print link-prediction metrics")
    sp.add_argument("--output", required=True, help="entity vector file to write")
    sp.set_defaults(func=_cmd_train_transe)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"{parser.prog}: error: {e}", file=sys.stderr)
        return 1
    except (ValueError, OSError, np.linalg.LinAlgError) as e:
        print(f"{parser.prog}: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
