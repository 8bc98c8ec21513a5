"""``phrasecoh`` command line: featurize, train, predict, importances.

Exit codes: 0 success, 1 usage error, 2 input/validation error,
3 internal invariant failure.  Every flag can also be set through an
environment variable ``PHRASECOH_<FLAG>`` (e.g. ``PHRASECOH_EMBEDDINGS``).
"""
from __future__ import annotations

import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click

from . import classifier, metrics, report
from .corpus import Document, parse_corpus_lenient
from .embeddings import EmbeddingStore, load_embeddings
from .errors import InputError, InvariantError, PhrasecohError

logger = logging.getLogger("phrasecoh")

ENV_PREFIX = "PHRASECOH"

EXIT_USAGE, EXIT_INPUT, EXIT_INVARIANT = 1, 2, 3


def _env(name: str) -> str:
    return f"{ENV_PREFIX}_{name}"


def _feature_format(path: Path) -> str:
    return "jsonl" if path.suffix.lower() in {".jsonl", ".ndjson"} else "csv"


def _read_bytes(path: Path, what: str) -> bytes:
    try:
        return path.read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {what} {str(path)!r}: {exc.strerror}") from None


# worker-process state for --jobs > 1
_STORE: EmbeddingStore | None = None
_CONFIG: metrics.FeatureConfig | None = None


def _init_worker(store: EmbeddingStore, config: metrics.FeatureConfig) -> None:
    global _STORE, _CONFIG
    _STORE, _CONFIG = store, config


def _featurize_one(document: Document, keep_graphs: bool = False):
    try:
        vector, diag, graph = metrics.featurize_with_diagnostics(document, _STORE, _CONFIG, keep_graphs)
    except InputError as exc:
        return None, None, None, str(exc)
    dump = None
    if keep_graphs:
        dump = {
            "id": document.id,
            "pairs": [
                {"i": i, "j": j, "sem": graph.pairs[i, j].sem, "coh": graph.pairs[i, j].coh,
                 "degenerate": graph.pairs[i, j].degenerate,
                 "k_sem": g_sem.to_dict(), "k_coh": g_coh.to_dict()}
                for (i, j), (g_sem, g_coh) in sorted(graph.graphs.items())
            ],
        }
    return vector, diag, dump, None


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def cli(verbose: bool) -> None:
    """Phrase-graph text coherence features and decision-tree classification."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")


@cli.command()
@click.option("--corpus", type=click.Path(dir_okay=False, path_type=Path), required=True, envvar=_env("CORPUS"))
@click.option("--embeddings", type=click.Path(dir_okay=False, path_type=Path), required=True,
              envvar=_env("EMBEDDINGS"))
@click.option("--embedding-format", type=click.Choice(["text", "binary"]), default="text", show_default=True,
              envvar=_env("EMBEDDING_FORMAT"))
@click.option("--mattr-window", type=click.IntRange(min=1), default=metrics.DEFAULT_MATTR_WINDOW,
              show_default=True, envvar=_env("MATTR_WINDOW"))
@click.option("--content-pos", type=click.Choice(["wide", "narrow"]), default="wide", show_default=True,
              envvar=_env("CONTENT_POS"), help="Whether PRON counts as a content tag for func_w.")
@click.option("--foc-mode", type=click.Choice(["phrase-graph"]), default="phrase-graph", envvar=_env("FOC_MODE"))
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True, envvar=_env("OUT"),
              help="Feature file; .jsonl writes JSON lines, anything else CSV.")
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True, envvar=_env("JOBS"))
@click.option("--keep-going", is_flag=True, envvar=_env("KEEP_GOING"),
              help="Skip invalid documents instead of aborting.")
@click.option("--dump-pair-graphs", type=click.Path(file_okay=False, path_type=Path), default=None,
              envvar=_env("DUMP_PAIR_GRAPHS"), help="Directory for per-document consistency-graph JSON dumps.")
def featurize(corpus, embeddings, embedding_format, mattr_window, content_pos, foc_mode, out, jobs,
              keep_going, dump_pair_graphs) -> None:
    """Compute the seven features for every document of a corpus."""
    documents, failures = parse_corpus_lenient(_read_bytes(corpus, "corpus"))
    store = load_embeddings(_read_bytes(embeddings, "embeddings"), embedding_format)
    config = metrics.FeatureConfig(
        mattr_window=mattr_window,
        content_pos=metrics.CONTENT_POS if content_pos == "wide" else metrics.NARROW_CONTENT_POS,
        foc_mode=foc_mode,
    )
    problems = [{"document": f.document_id, "error": str(f)} for f in failures]
    if problems and not keep_going:
        raise failures[0]

    keep_graphs = dump_pair_graphs is not None
    if jobs == 1:
        _init_worker(store, config)
        results = [_featurize_one(d, keep_graphs) for d in documents]
    else:
        with ProcessPoolExecutor(jobs, initializer=_init_worker, initargs=(store, config)) as pool:
            results = list(pool.map(_featurize_one, documents, [keep_graphs] * len(documents)))

    vectors, diagnostics = [], []
    for document, (vector, diag, dump, error) in zip(documents, results):
        if error is not None:
            if not keep_going:
                raise InputError(error)
            problems.append({"document": document.id, "error": error})
            continue
        vectors.append(vector)
        diagnostics.append(diag.to_dict())
        if dump is not None:
            dump_pair_graphs.mkdir(parents=True, exist_ok=True)
            (dump_pair_graphs / f"{document.id}.json").write_text(json.dumps(dump, indent=1) + "\n")

    fmt = _feature_format(out)
    text = metrics.write_features_jsonl(vectors) if fmt == "jsonl" else metrics.write_features_csv(vectors)
    out.write_text(text, encoding="utf-8")
    sidecar = out.with_name(out.name + ".report.json")
    sidecar.write_text(json.dumps({"documents": diagnostics, "failures": problems}, indent=1) + "\n")
    logger.info("wrote %d feature rows to %s (%d failures)", len(vectors), out, len(problems))
    for p in problems:
        click.echo(f"skipped {p['document']}: {p['error']}", err=True)


def _load_features(path: Path) -> list[metrics.FeatureVector]:
    return metrics.read_features(_read_bytes(path, "feature file").decode("utf-8"), _feature_format(path))


def _int_list(text: str) -> tuple[int | None, ...]:
    return tuple(None if part.strip().lower() == "none" else int(part) for part in text.split(","))


@cli.command()
@click.option("--features", type=click.Path(dir_okay=False, path_type=Path), required=True,
              envvar=_env("FEATURES"))
@click.option("--model", type=click.Path(dir_okay=False, path_type=Path), required=True, envvar=_env("MODEL"))
@click.option("--max-depth", default="2,3,4,5,6", show_default=True, envvar=_env("MAX_DEPTH"))
@click.option("--min-samples-leaf", default="1,2,5", show_default=True, envvar=_env("MIN_SAMPLES_LEAF"))
@click.option("--min-samples-split", default="2,5", show_default=True, envvar=_env("MIN_SAMPLES_SPLIT"))
def train(features, model, max_depth, min_samples_leaf, min_samples_split) -> None:
    """Grid-search a decision tree by leave-one-out accuracy and save it."""
    try:
        grid = classifier.GridSpec(_int_list(max_depth), _int_list(min_samples_leaf), _int_list(min_samples_split))
    except ValueError as exc:
        raise click.UsageError(f"bad grid: {exc}") from None
    vectors = _load_features(features)
    unlabeled = [v.document_id for v in vectors if v.label is None]
    if unlabeled:
        raise InputError(f"unlabeled feature rows: {', '.join(unlabeled)}")
    if len(vectors) < 3:
        raise InputError(f"training needs at least 3 rows, got {len(vectors)}")
    if len({v.label for v in vectors}) < 2:
        raise InputError("training needs at least two classes")
    tree = classifier.loocv(vectors, grid)
    classifier.check_importances(tree)
    model.write_bytes(classifier.save_model(tree))
    p = tree.hyperparameters
    click.echo(f"loocv_accuracy\t{tree.loocv_accuracy:.6f}")
    click.echo(f"hyperparameters\tmax_depth={p.max_depth} min_samples_leaf={p.min_samples_leaf} "
               f"min_samples_split={p.min_samples_split}")
    for name, value in report.ranked(tree.feature_names, tree.importances):
        click.echo(f"{name}\t{value:.6f}")


def _load_model(path: Path) -> classifier.TrainedTree:
    return classifier.load_model(_read_bytes(path, "model"))


@cli.command()
@click.option("--model", type=click.Path(dir_okay=False, path_type=Path), required=True, envvar=_env("MODEL"))
@click.option("--features", type=click.Path(dir_okay=False, path_type=Path), required=True,
              envvar=_env("FEATURES"))
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None, envvar=_env("OUT"),
              help="Output CSV; stdout when omitted.")
def predict(model, features, out) -> None:
    """Predict a label for every row of a feature file."""
    tree = _load_model(model)
    if tuple(tree.feature_names) != metrics.FEATURE_NAMES:
        raise InputError(f"model expects features {list(tree.feature_names)}")
    lines = ["id,predicted_label"]
    lines += [f"{v.document_id},{classifier.predict(tree, v)}" for v in _load_features(features)]
    text = "\n".join(lines) + "\n"
    if out is None:
        click.echo(text, nl=False)
    else:
        out.write_text(text, encoding="utf-8")


@cli.command()
@click.option("--model", type=click.Path(dir_okay=False, path_type=Path), required=True, envvar=_env("MODEL"))
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True, envvar=_env("OUT"),
              help="CSV path; the SVG chart is written next to it.")
@click.option("--svg", type=click.Path(dir_okay=False, path_type=Path), default=None, envvar=_env("SVG"))
def importances(model, out, svg) -> None:
    """Write the feature-importance table and bar chart of a trained model."""
    tree = _load_model(model)
    classifier.check_importances(tree)
    out.write_text(report.importances_csv(tree.feature_names, tree.importances), encoding="utf-8")
    svg = svg if svg is not None else out.with_suffix(".svg")
    svg.write_text(report.importances_svg(tree.feature_names, tree.importances), encoding="utf-8")


def main(argv: list[str] | None = None) -> int:
    try:
        result = cli.main(args=argv, prog_name="phrasecoh", standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_INPUT
    except InvariantError as exc:
        click.echo(f"internal error: {exc}", err=True)
        return EXIT_INVARIANT
    except PhrasecohError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_INPUT
    return result if isinstance(result, int) else 0


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
