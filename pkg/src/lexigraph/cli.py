"""Command-line entry point: ``lexigraph <command> [options]``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import checkpoint
from .config import RunConfig
from .evalmetrics import PUBLISHED_GROUP_ACCURACY, aggregate_candidates, layer_report, report_json
from .exceptions import FileFormatError, InvalidInputError, LexigraphError, TrainingError
from .lexicon import AliasMap, Lexicon, build_lexicon, load_homographs, starter_homographs
from .norms_graph import NormSources, build_multiplex, layer_stats, normalize_adjacency
from .observations import (
    dataset_manifest,
    prepare_sequences,
    read_observations,
    repair_series,
    split_dataset,
    write_manifest,
    write_observations,
)
from .pipeline import evaluate_baseline, evaluate_layer, fit_baseline, sequences_to_array
from .syndata import SynthConfig, write_synthetic
from .tgcn import candidate_words, predict_next, train_layer

logger = logging.getLogger("lexigraph")


# --- shared steps -----------------------------------------------------------

def _existing(path, what):
    if path is None:
        raise InvalidInputError(f"--{what} is required")
    p = Path(path)
    if not p.exists():
        raise FileFormatError(p, f"{what.replace('-', ' ')} not found")
    return p


def _vocab_maps(cfg: RunConfig):
    aliases = AliasMap.from_tsv(_existing(cfg.aliases, "aliases")) if cfg.aliases else AliasMap()
    homographs = load_homographs(_existing(cfg.homographs, "homographs")) if cfg.homographs else starter_homographs()
    return aliases, homographs


def _load_inputs(cfg: RunConfig, need_observations=True):
    """Lexicon and layers from the norm directories, plus the raw observation series."""
    if cfg.norms_dir is None and cfg.semantic_dir is None:
        raise InvalidInputError("at least one of --norms-dir or --semantic-dir is required")
    sources = NormSources.discover(
        _existing(cfg.norms_dir, "norms-dir") if cfg.norms_dir else None,
        _existing(cfg.semantic_dir, "semantic-dir") if cfg.semantic_dir else None,
    )
    obs_path = _existing(cfg.observations, "observations") if need_observations else None
    aliases, homographs = _vocab_maps(cfg)
    lexicon, coverage = build_lexicon(sources.files, [obs_path] if obs_path else [], aliases, homographs)
    layers = build_multiplex(sources, lexicon, cfg.threshold, cfg.edge_cap, aliases, homographs)
    if not layers:
        raise InvalidInputError("no relationship layer survived construction")
    series = read_observations(obs_path, lexicon, aliases, homographs) if obs_path else None
    return lexicon, layers, series, coverage


def _out_dir(path) -> Path:
    if path is None:
        raise InvalidInputError("--out is required")
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_layers(out: Path, layers, lexicon) -> None:
    d = out / "layers"
    d.mkdir(exist_ok=True)
    for name, layer in layers.items():
        layer.to_csv(d / f"{name}.csv", lexicon)


def _partitions(cfg: RunConfig, series, lexicon):
    seqs = prepare_sequences(series, cfg.mode, cfg.sequence_length)
    parts = split_dataset(seqs, cfg.split, cfg.seed)
    arrays = {p: sequences_to_array(s, len(lexicon)) for p, s in parts.items()}
    return parts, arrays


def _train_one(job):
    name, nodes, adj, train, val, params = job
    model = train_layer(name, nodes, adj, train, val, **params)
    return name, checkpoint.layer_model_to_dict(model)


# --- commands ----------------------------------------------------------------

def cmd_synth(args, cfg: RunConfig) -> int:
    out = _out_dir(args.out)
    sc = SynthConfig(n_children=args.children, n_observations=args.per_child, vocab_size=args.words,
                     planted_layer=args.planted_layer, boost=args.boost, base=args.base,
                     initial_known=args.initial_known, seed=cfg.seed)
    write_synthetic(out, sc, degree=args.degree)
    cfg.norms_dir = str((out / "norms").resolve())
    cfg.semantic_dir = str((out / "semantic").resolve())
    cfg.observations = str((out / "observations.csv").resolve())
    cfg.save(out)
    print(out / "observations.csv")
    return 0


def cmd_build_graphs(args, cfg: RunConfig) -> int:
    lexicon, layers, _, coverage = _load_inputs(cfg, need_observations=cfg.observations is not None)
    out = _out_dir(args.out)
    lexicon.to_csv(out / "lexicon.csv")
    _write_layers(out, layers, lexicon)
    _write_json(out / "coverage.json", coverage.as_dict())
    _write_json(out / "layer_stats.json", {n: layer_stats(l) for n, l in layers.items()})
    cfg.save(out)
    for name, layer in layers.items():
        print(f"{name}\t{layer.n_nodes} nodes\t{len(layer.edges)} edges")
    return 0


def cmd_prepare(args, cfg: RunConfig) -> int:
    lexicon, _, series, _ = _load_inputs(cfg)
    out = _out_dir(args.out)
    repaired = {c: repair_series(s, cfg.mode) for c, s in series.items()}
    parts, _ = _partitions(cfg, series, lexicon)
    lexicon.to_csv(out / "lexicon.csv")
    write_observations(out / f"observations.{cfg.mode}.csv", repaired, lexicon)
    write_manifest(out / "dataset.json",
                   dataset_manifest(series, cfg.mode, cfg.sequence_length, cfg.seed, parts))
    cfg.save(out)
    return 0


def cmd_train(args, cfg: RunConfig) -> int:
    lexicon, layers, series, coverage = _load_inputs(cfg)
    out = _out_dir(args.out)
    parts, arrays = _partitions(cfg, series, lexicon)
    if len(arrays["train"]) == 0:
        raise InvalidInputError("no training sequences; check observation counts and --seq-len")
    lexicon.to_csv(out / "lexicon.csv")
    _write_layers(out, layers, lexicon)
    _write_json(out / "coverage.json", coverage.as_dict())
    write_manifest(out / "dataset.json",
                   dataset_manifest(series, cfg.mode, cfg.sequence_length, cfg.seed, parts))
    models = out / "models"
    models.mkdir(exist_ok=True)
    val = arrays["validation"] if len(arrays["validation"]) else None
    jobs = [(name, layer.nodes, normalize_adjacency(layer), arrays["train"], val, cfg.tgcn_params())
            for name, layer in layers.items()]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_train_one, jobs))
    else:
        results = [_train_one(j) for j in jobs]
    for name, payload in results:
        checkpoint.save(models / f"{name}.json", payload)
        logger.info("trained layer %s: final train MAE %.4f", name,
                    payload["metadata"]["history"]["train_mae"][-1])
    base = fit_baseline(arrays["train"], **cfg.baseline_params())
    checkpoint.save_baseline(models / "baseline.json", base, lexicon.keys)
    cfg.save(out)
    print(f"trained {len(results)} layer models and the baseline into {models}")
    return 0


def _load_models(model_dir: Path):
    models = model_dir / "models"
    if not models.is_dir():
        raise FileFormatError(models, "model directory has no models/ subdirectory")
    layer_models = {}
    baseline = None
    for path in sorted(models.glob("*.json")):
        if path.stem == "baseline":
            baseline = checkpoint.load_baseline(path)
        else:
            m = checkpoint.load_layer_model(path)
            layer_models[m.layer_name] = m
    return layer_models, baseline


def cmd_evaluate(args, cfg: RunConfig) -> int:
    model_dir = _existing(args.model_dir, "model-dir")
    cfg = RunConfig.load(model_dir)
    lexicon = Lexicon.from_csv(model_dir / "lexicon.csv")
    aliases, homographs = _vocab_maps(cfg)
    series = read_observations(_existing(cfg.observations, "observations"), lexicon, aliases, homographs)
    _, arrays = _partitions(cfg, series, lexicon)
    test = arrays["test"]
    if len(test) == 0:
        raise InvalidInputError("the test partition is empty")
    layer_models, baseline = _load_models(model_dir)
    records = [evaluate_layer(m, test, cfg.margin, cfg.mode) for m in layer_models.values()]
    if baseline is not None:
        records.append(evaluate_baseline(baseline, test, cfg.sequence_length - cfg.prediction_length,
                                         cfg.margin, cfg.mode))
    markdown, payload = layer_report(records, PUBLISHED_GROUP_ACCURACY)
    out = _out_dir(args.out) if args.out else model_dir / "evaluation"
    out.mkdir(exist_ok=True)
    (out / "report.md").write_text(markdown, encoding="utf-8")
    (out / "report.json").write_text(report_json(payload), encoding="utf-8")
    cfg.save(out)
    sys.stdout.write(markdown)
    return 0


def cmd_predict(args, cfg: RunConfig) -> int:
    model_dir = _existing(args.model_dir, "model-dir")
    cfg_saved = RunConfig.load(model_dir)
    lexicon = Lexicon.from_csv(model_dir / "lexicon.csv")
    aliases, homographs = _vocab_maps(cfg_saved)
    obs = _existing(args.observations or cfg_saved.observations, "observations")
    series = read_observations(obs, lexicon, aliases, homographs)
    if args.child not in series:
        raise InvalidInputError(f"child {args.child!r} not found in {obs}")
    snaps = repair_series(series[args.child], cfg_saved.mode)
    k = cfg_saved.sequence_length - cfg_saved.prediction_length
    if len(snaps) < k:
        raise InvalidInputError(f"child {args.child!r} has {len(snaps)} observations; {k} are needed")
    window = np.stack([s.vector(len(lexicon)) for s in snaps[-k:]])
    current = dict(zip(lexicon.keys, window[-1].tolist()))
    layer_models, _ = _load_models(model_dir)
    per_layer = {}
    for name, model in layer_models.items():
        scores = predict_next(model, window, len(lexicon))
        node_scores = {lexicon[n].key: float(scores[n]) for n in model.nodes}
        per_layer[name] = candidate_words(node_scores, current, args.k, cfg_saved.candidate_threshold)
    result = {"child": args.child, "age_months": snaps[-1].age_months, "layers": per_layer,
              "combined": aggregate_candidates(list(per_layer.values()), args.k)}
    text = json.dumps(result, indent=2, sort_keys=True) + "\n"
    if args.out:
        out = _out_dir(args.out)
        (out / f"candidates_{args.child}.json").write_text(text, encoding="utf-8")
        cfg_saved.save(out)
    sys.stdout.write(text)
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "build-graphs": cmd_build_graphs,
    "prepare": cmd_prepare,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "predict": cmd_predict,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--norms-dir")
    common.add_argument("--semantic-dir")
    common.add_argument("--observations")
    common.add_argument("--aliases", help="alias map TSV (raw, dialect, canonical)")
    common.add_argument("--homographs", help="homograph map TSV; defaults to the bundled starter map")
    common.add_argument("--mode", choices=["optimistic", "pessimistic"], default="optimistic")
    common.add_argument("--threshold", type=float, default=0.5)
    common.add_argument("--edge-cap", type=int, default=2000)
    common.add_argument("--epochs", type=int, default=1000)
    common.add_argument("--baseline-epochs", type=int, help="defaults to --epochs")
    common.add_argument("--batch", type=int, default=4)
    common.add_argument("--seq-len", type=int, default=4)
    common.add_argument("--learning-rate", type=float, default=1e-3)
    common.add_argument("--split", type=float, nargs=3, default=[0.8, 0.1, 0.1],
                        metavar=("TRAIN", "VAL", "TEST"))
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--out")

    parser = argparse.ArgumentParser(prog="lexigraph", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("synth", parents=[common], help="generate a synthetic dataset")
    p.add_argument("--children", type=int, default=200)
    p.add_argument("--words", type=int, default=40)
    p.add_argument("--per-child", type=int, default=5, help="observations per child")
    p.add_argument("--planted-layer", default="mcrae")
    p.add_argument("--boost", type=float, default=0.4)
    p.add_argument("--base", type=float, default=0.25)
    p.add_argument("--initial-known", type=float, default=0.2)
    p.add_argument("--degree", type=int, default=1, help="strong partners per word in semantic layers")
    sub.add_parser("build-graphs", parents=[common], help="build the relationship layers")
    sub.add_parser("prepare", parents=[common], help="repair, window and split observations")
    sub.add_parser("train", parents=[common], help="train every layer model and the baseline")
    p = sub.add_parser("evaluate", parents=[common], help="evaluate trained models on the test split")
    p.add_argument("--model-dir", required=True)
    p = sub.add_parser("predict", parents=[common], help="candidate words for one child")
    p.add_argument("--model-dir", required=True)
    p.add_argument("--child", required=True)
    p.add_argument("-k", type=int, default=10)
    return parser


def config_from_args(args) -> RunConfig:
    cfg = RunConfig(
        mode=args.mode, epochs=args.epochs, batch_size=args.batch, sequence_length=args.seq_len,
        edge_cap=args.edge_cap, threshold=args.threshold, learning_rate=args.learning_rate,
        split=list(args.split), seed=args.seed, jobs=args.jobs,
        baseline_epochs=args.baseline_epochs if args.baseline_epochs is not None else args.epochs,
        norms_dir=_abs(args.norms_dir), semantic_dir=_abs(args.semantic_dir),
        observations=_abs(args.observations), aliases=_abs(args.aliases),
        homographs=_abs(args.homographs),
    )
    cfg.validate()
    return cfg


def _abs(path):
    return str(Path(path).resolve()) if path else None


def _fail(code: int, exc: Exception) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    path = getattr(exc, "path", None)
    if path is not None:
        payload["path"] = path
    sys.stderr.write(json.dumps(payload) + "\n")
    return code


def main(argv=None) -> int:
    level = getattr(logging, os.environ.get("LEXIGRAPH_LOG", "WARNING").upper(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        return COMMANDS[args.command](args, cfg)
    except TrainingError as exc:
        return _fail(2, exc)
    except LexigraphError as exc:
        return _fail(1, exc)


if __name__ == "__main__":
    sys.exit(main())
