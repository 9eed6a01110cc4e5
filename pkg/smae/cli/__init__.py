"""Command line interface."""

import argparse
import json
import logging
import sys
import time
from typing import Any, Dict, List, Optional

from smae import __version__
from smae.cli.manifest import RunManifest, relative_to_manifest
from smae.cli.sweep import SWEEP_AXES, sweep
from smae.config import ModelConfig, load_config_file, resolve_config
from smae.config.presets import preset_names
from smae.errors import NumericError, SmaeError, UsageError
from smae.eval import EmbeddingMatrix, embed_corpus
from smae.eval.probe import linear_probe_cv
from smae.eval.retrieval import nearest_neighbors
from smae.gmae import (
    ModelCheckpoint,
    checkpoint_summary,
    init_checkpoint,
    pretrain_loss,
)
from smae.gmae.train import pretrain, worker_count
from smae.graph import Featurization, GraphCorpus
from smae.graph.corpus import load_corpus
from smae.masking import MASK_STRATEGIES, MaskSchedule, plan_mask
from smae.nn.gradcheck import grad_check
from smae.scoring import PREDEFINED_METRICS, score_graph
from smae.seeding import stream
from smae.verify import random_graph
from smae.verify.suite import run_suite
from smae.writers import RecordWriter, write_output

logger = logging.getLogger("smae")

GRADCHECK_TOLERANCE = 1e-4


class ArgumentParser(argparse.ArgumentParser):
    """Argument parser raising instead of exiting."""

    def error(self, message: str):
        """Report a usage error."""
        self.print_usage(sys.stderr)
        raise UsageError("{}: {}".format(self.prog, message))


def _add_corpus_args(parser, default_kind: Optional[str]):
    parser.add_argument("--corpus", help="corpus file (JSON lines)")
    parser.add_argument(
        "--featurization",
        choices=Featurization.KINDS,
        default=default_kind,
        help="node feature construction",
    )
    parser.add_argument(
        "--max-degree", type=int, default=None, help="degree one-hot cap"
    )


def _add_config_args(parser):
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument("--preset", choices=preset_names(), help="preset")
    parser.add_argument("--seed", type=int, default=None, help="master seed")


def build_parser() -> ArgumentParser:
    """Build the argument parser."""
    parser = ArgumentParser(
        prog="smae", description="structure-guided masked graph autoencoders"
    )
    parser.add_argument(
        "--version", action="version", version="smae " + __version__
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")
    parser.add_argument(
        "--trace-backward",
        action="store_true",
        help="log every operation of the reverse pass",
    )
    sub = parser.add_subparsers(dest="command", parser_class=ArgumentParser)

    cmd = sub.add_parser("pretrain", help="pretrain a model")
    _add_corpus_args(cmd, None)
    _add_config_args(cmd)
    cmd.add_argument("--epochs", type=int, default=None)
    cmd.add_argument("--out", required=True, help="checkpoint path")
    cmd.add_argument("--replay", help="re-run a recorded manifest")

    cmd = sub.add_parser("score", help="score nodes with a predefined metric")
    _add_corpus_args(cmd, Featurization.DEGREE_ONEHOT)
    cmd.add_argument(
        "--metric", choices=PREDEFINED_METRICS, default="pagerank"
    )
    cmd.add_argument("--out", default="-")

    cmd = sub.add_parser("mask-preview", help="print per-graph mask plans")
    _add_corpus_args(cmd, Featurization.DEGREE_ONEHOT)
    cmd.add_argument(
        "--metric", choices=PREDEFINED_METRICS, default="pagerank"
    )
    cmd.add_argument("--epoch", type=int, required=True)
    cmd.add_argument("--of", type=int, required=True, dest="epochs")
    cmd.add_argument("--p", type=float, default=0.5)
    cmd.add_argument("--beta", type=float, default=0.5)
    cmd.add_argument("--warmup", type=float, default=0.0)
    cmd.add_argument(
        "--strategy", choices=MASK_STRATEGIES, default="easy_to_hard"
    )
    cmd.add_argument("--no-noise", action="store_true")
    cmd.add_argument("--seed", type=int, default=0)
    cmd.add_argument("--out", default="-")

    cmd = sub.add_parser("embed", help="embed graphs with a model")
    _add_corpus_args(cmd, None)
    _add_config_args(cmd)
    cmd.add_argument("--model", help="checkpoint path")
    cmd.add_argument(
        "--untrained",
        action="store_true",
        help="use a freshly initialized model",
    )
    cmd.add_argument(
        "--modulate",
        action="store_true",
        help="flip the inference-time modulation setting",
    )
    cmd.add_argument("--out", required=True)

    cmd = sub.add_parser("evaluate", help="linear-probe cross-validation")
    cmd.add_argument("--emb", required=True)
    cmd.add_argument("--seed", type=int, default=0)
    cmd.add_argument("--folds", type=int, default=10)
    cmd.add_argument("--repeats", type=int, default=5)
    cmd.add_argument("--report", default="-")

    cmd = sub.add_parser("retrieve", help="nearest graphs by cosine")
    cmd.add_argument("--emb", required=True)
    cmd.add_argument("--query", type=int, required=True)
    cmd.add_argument("--k", type=int, default=5)
    cmd.add_argument("--out", default="-")

    cmd = sub.add_parser("sweep", help="ablation sweep")
    _add_corpus_args(cmd, None)
    _add_config_args(cmd)
    cmd.add_argument("--axis", choices=sorted(SWEEP_AXES), default="beta")
    cmd.add_argument("--values", nargs="+", required=True)
    cmd.add_argument("--folds", type=int, default=10)
    cmd.add_argument("--repeats", type=int, default=5)
    cmd.add_argument("--out", required=True, help="CSV path")

    cmd = sub.add_parser("gradcheck", help="finite-difference loss check")
    _add_corpus_args(cmd, None)
    _add_config_args(cmd)
    cmd.add_argument("--graphs", type=int, default=5)
    cmd.add_argument("--feature-dim", type=int, default=3)
    cmd.add_argument("--tolerance", type=float, default=GRADCHECK_TOLERANCE)
    cmd.add_argument("--out", default="-")

    cmd = sub.add_parser("selftest", help="run the packaged check suite")
    cmd.add_argument("--seed", type=int, default=0)
    return parser


def _configure_logging(args):
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    root = logging.getLogger("smae")
    root.handlers[:] = [handler]
    root.setLevel(level)
    root.propagate = False
    trace = logging.getLogger("smae.tensor.trace")
    trace.setLevel(
        logging.DEBUG if args.trace_backward else logging.WARNING
    )


def _featurization_override(args) -> Dict[str, Any]:
    ret: Dict[str, Any] = {}
    if args.featurization is not None:
        ret["kind"] = args.featurization
    if args.max_degree is not None:
        ret["max_degree"] = args.max_degree
    return ret


def _resolve(args) -> ModelConfig:
    config = load_config_file(args.config) if args.config else None
    overrides: Dict[str, Any] = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "epochs", None) is not None:
        overrides["epochs"] = args.epochs
    featurization = _featurization_override(args)
    if featurization:
        overrides["featurization"] = featurization
    return resolve_config(args.preset, config, overrides)


def _require_corpus(args):
    if not args.corpus:
        raise UsageError("{} needs --corpus".format(args.command))


def _load(args, featurization: Featurization) -> GraphCorpus:
    _require_corpus(args)
    return load_corpus(args.corpus, featurization)


def _plain_featurization(args) -> Featurization:
    if args.max_degree is None:
        return Featurization(args.featurization)
    return Featurization(args.featurization, args.max_degree)


def _manifest(args, config: Optional[ModelConfig] = None, **options):
    seed = config.seed if config is not None else getattr(args, "seed", None)
    return RunManifest(
        args.command,
        __version__,
        seed,
        config.to_dict() if config is not None else None,
        options=options,
    )


def _save_manifest(manifest: RunManifest, out: str, started: float):
    if out == "-":
        return
    manifest.wall_clock = time.perf_counter() - started
    path = manifest.save(out)
    logger.debug("manifest written to %s", path)


def cmd_pretrain(args, started: float) -> int:
    """Pretrain and save a checkpoint."""
    corpus_path = args.corpus
    if args.replay:
        recorded = RunManifest.load(args.replay)
        if recorded.command != "pretrain":
            raise UsageError(
                "manifest {} records a {} run".format(
                    args.replay, recorded.command
                )
            )
        if corpus_path is None:
            corpus_path = relative_to_manifest(
                args.replay, recorded.inputs["corpus"]["path"]
            )
        recorded.check_input("corpus", corpus_path)
        config = ModelConfig.from_dict(recorded.config)
        logger.info("replaying %s", args.replay)
    else:
        _require_corpus(args)
        config = _resolve(args)
    corpus = load_corpus(corpus_path, config.featurization.build())
    manifest = _manifest(args, config)
    manifest.add_input("corpus", corpus_path)
    ckpt = pretrain(corpus, config)
    ckpt.save(args.out)
    logger.info("saved %s: %s", args.out, checkpoint_summary(ckpt))
    manifest.log = list(ckpt.log)
    _save_manifest(manifest, args.out, started)
    return 0


def cmd_score(args, started: float) -> int:
    """Emit one score line per graph."""
    corpus = _load(args, _plain_featurization(args))
    writer = RecordWriter()
    lines = [
        writer.dump_element(score_graph(graph, args.metric), index=index)
        for index, graph in enumerate(corpus)
    ]
    write_output(args.out, "\n".join(lines))
    manifest = _manifest(args, metric=args.metric)
    manifest.add_input("corpus", args.corpus)
    _save_manifest(manifest, args.out, started)
    return 0


def cmd_mask_preview(args, started: float) -> int:
    """Emit one mask plan per graph."""
    corpus = _load(args, _plain_featurization(args))
    schedule = MaskSchedule(
        args.p,
        args.beta,
        args.epochs,
        args.warmup,
        args.strategy,
        not args.no_noise,
    )
    writer = RecordWriter()
    lines = []
    for index, graph in enumerate(corpus):
        if graph.node_count < 2:
            logger.warning("graph %d has fewer than 2 nodes; skipped", index)
            continue
        scores = score_graph(graph, args.metric).values
        plan = plan_mask(
            scores,
            schedule,
            args.epoch,
            graph.node_count,
            stream(args.seed, "mask", index, args.epoch),
        )
        lines.append(writer.dump_element(plan, index=index))
    write_output(args.out, "\n".join(lines))
    manifest = _manifest(
        args,
        metric=args.metric,
        schedule=repr(schedule),
        epoch=args.epoch,
    )
    manifest.add_input("corpus", args.corpus)
    _save_manifest(manifest, args.out, started)
    return 0


def cmd_embed(args, started: float) -> int:
    """Embed a corpus."""
    if args.model:
        ckpt = ModelCheckpoint.load(args.model)
        config = ckpt.config
        if args.untrained:
            ckpt = init_checkpoint(config, ckpt.feature_dim)
    elif args.untrained:
        config = _resolve(args)
        ckpt = None
    else:
        raise UsageError("embed needs --model or --untrained")
    featurization = config.featurization.build()
    override = _featurization_override(args)
    if override:
        featurization = Featurization(
            override.get("kind", featurization.kind),
            override.get("max_degree", featurization.max_degree),
        )
    corpus = _load(args, featurization)
    if ckpt is None:
        ckpt = init_checkpoint(config, corpus.feature_dim)
    modulate = config.modulate_at_inference
    if args.modulate:
        modulate = not modulate
    emb = embed_corpus(ckpt, corpus, modulate, threads=worker_count())
    write_output(args.out, RecordWriter().dump_element(emb))
    manifest = _manifest(
        args, config, untrained=args.untrained, modulate=modulate
    )
    manifest.add_input("corpus", args.corpus)
    if args.model:
        manifest.add_input("model", args.model)
    _save_manifest(manifest, args.out, started)
    return 0


def cmd_evaluate(args, started: float) -> int:
    """Cross-validate a linear probe on embeddings."""
    emb = EmbeddingMatrix.load(args.emb)
    report = linear_probe_cv(
        emb,
        folds=args.folds,
        repeats=args.repeats,
        seed=args.seed,
        threads=worker_count(),
    )
    write_output(args.report, RecordWriter().dump_element(report))
    manifest = _manifest(args, folds=args.folds, repeats=args.repeats)
    manifest.add_input("embeddings", args.emb)
    _save_manifest(manifest, args.report, started)
    return 0


def cmd_retrieve(args, started: float) -> int:
    """Rank graphs by similarity to a query graph."""
    emb = EmbeddingMatrix.load(args.emb)
    ranking = nearest_neighbors(emb, args.query, args.k)
    write_output(args.out, RecordWriter().dump_element(ranking))
    manifest = _manifest(args, query=args.query, k=args.k)
    manifest.add_input("embeddings", args.emb)
    _save_manifest(manifest, args.out, started)
    return 0


def cmd_sweep(args, started: float) -> int:
    """Run an ablation sweep."""
    _require_corpus(args)
    config = _resolve(args)
    corpus = load_corpus(args.corpus, config.featurization.build())
    result = sweep(
        corpus,
        config,
        args.axis,
        args.values,
        folds=args.folds,
        repeats=args.repeats,
    )
    write_output(args.out, RecordWriter().dump_element(result))
    manifest = _manifest(args, config, axis=args.axis, values=args.values)
    manifest.add_input("corpus", args.corpus)
    _save_manifest(manifest, args.out, started)
    return 0


def cmd_gradcheck(args, started: float) -> int:
    """Check end-to-end loss gradients on small graphs."""
    config = _resolve(args)
    config = ModelConfig.from_dict(
        dict(config.to_dict(), dtype="float64")
    )
    if args.corpus:
        corpus = load_corpus(args.corpus, config.featurization.build())
        graphs = [g for g in corpus if 2 <= g.node_count <= 8][: args.graphs]
        feature_dim = corpus.feature_dim
    else:
        rng = stream(config.seed, "gradcheck")
        feature_dim = args.feature_dim
        graphs = [
            random_graph(rng, int(rng.integers(3, 9)), 0.4, True, feature_dim)
            for _ in range(args.graphs)
        ]
    if not graphs:
        raise UsageError("no graph with 2 to 8 nodes to check")
    ckpt = init_checkpoint(config, feature_dim)
    records: List[Dict[str, Any]] = []
    for index, graph in enumerate(graphs):
        scores = None
        if config.variant == "P":
            scores = score_graph(graph, config.scorer_metric)
        error = grad_check(
            lambda: pretrain_loss(
                ckpt, graph, 0, stream(config.seed, "mask", index, 0), scores
            )[0],
            ckpt.store,
            seed=config.seed,
        )
        records.append({"graph": index, "max_rel_error": error})
    write_output(
        args.out, "\n".join(json.dumps(r, sort_keys=True) for r in records)
    )
    worst = max(r["max_rel_error"] for r in records)
    if worst >= args.tolerance:
        raise NumericError(
            "gradient check failed: relative error {:.3e} >= {:.1e}".format(
                worst, args.tolerance
            )
        )
    logger.info("gradient check passed: max relative error %.3e", worst)
    _save_manifest(_manifest(args, config), args.out, started)
    return 0


def cmd_selftest(args, started: float) -> int:
    """Run the packaged checks."""
    results = run_suite(args.seed)
    failed = [name for name, passed, _ in results if not passed]
    if failed:
        raise NumericError("self-test failed: {}".format(", ".join(failed)))
    logger.info("all %d checks passed", len(results))
    return 0


COMMANDS = {
    "pretrain": cmd_pretrain,
    "score": cmd_score,
    "mask-preview": cmd_mask_preview,
    "embed": cmd_embed,
    "evaluate": cmd_evaluate,
    "retrieve": cmd_retrieve,
    "sweep": cmd_sweep,
    "gradcheck": cmd_gradcheck,
    "selftest": cmd_selftest,
}


def run_command(argv: List[str]) -> int:
    """Run a subcommand.

    :param argv: Arguments, without the program name
    :return: Exit status: 0 success, 1 usage or configuration error, \
    2 data error, 3 numeric failure
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _configure_logging(args)
        if args.command is None:
            parser.print_usage(sys.stderr)
            raise UsageError("a subcommand is required")
        return COMMANDS[args.command](args, time.perf_counter())
    except SmaeError as ex:
        logger.error("%s", ex)
        return ex.exit_status


def main():
    """Console entry point."""
    sys.exit(run_command(sys.argv[1:]))
