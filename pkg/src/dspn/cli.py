"""Command-line entry point: dataset generation, training, evaluation,
intent analysis, and single-sample prediction.

Exit codes: 0 ok, 2 config error, 3 data error, 4 numeric failure. Errors
print as a single "error: <category>: <message>" line on stderr.
"""

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, advsim, dataset, intentlab, model, trainer
from .dataset import DataError
from .model import CheckpointError, DspnConfig
from .ndgrad import backend_name
from .trainer import NumericError, TrainConfig

SEED_ENV = "DSPN_SEED"
DEFAULT_SEED = 42

_DATA_DEFAULTS = {"window": 10, "cost_eps": 10.0, "min_cost": 10.0,
                  "action_slots": 8, "split_ratio": 0.9}
_ANALYZE_DEFAULTS = {"k": 4, "limit": 5000}


class ConfigError(ValueError):
    """Bad or missing configuration."""


def load_config(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(obj, dict):
        raise ConfigError("config root must be a JSON object")
    return obj


def resolve_seed(args, config):
    """Precedence: --seed flag, then the environment, then the config."""
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}")
    seed = config.get("seed", DEFAULT_SEED)
    if not isinstance(seed, int):
        raise ConfigError("config seed must be an integer")
    return seed


def _section(config, key, defaults):
    merged = dict(defaults)
    section = config.get(key, {})
    if not isinstance(section, dict):
        raise ConfigError(f"config section {key!r} must be an object")
    merged.update(section)
    return merged


def _build(factory, obj, what):
    try:
        return factory(obj)
    except TypeError as exc:
        raise ConfigError(f"bad {what} config: {exc}")
    except ValueError as exc:
        raise ConfigError(f"bad {what} config: {exc}")


def config_hash(config):
    blob = json.dumps(config, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def write_manifest(out_dir, command, config, seed):
    manifest = {
        "command": command,
        "config_sha256": config_hash(config),
        "seed": seed,
        "versions": {
            "dspn": __version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
        "kernel_backend": backend_name(),
    }
    path = Path(out_dir) / f"manifest_{command}.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def _paths(config, out_dir):
    out = Path(out_dir)
    defaults = {
        "traces": out / "traces.jsonl",
        "train": out / "train.jsonl",
        "test": out / "test.jsonl",
        "normalizer": out / "normalizer.json",
        "vocab": out / "vocab.json",
        "checkpoint": out / "model.ckpt",
        "metrics_csv": out / "metrics.csv",
        "summary": out / "summary.json",
        "metrics": out / "metrics.json",
        "report": out / "cluster_report.json",
        "scatter_pos": out / "scatter_pos.csv",
        "scatter_neg": out / "scatter_neg.csv",
        "predictions": out / "predictions.json",
    }
    section = config.get("paths", {})
    if not isinstance(section, dict):
        raise ConfigError("config section 'paths' must be an object")
    for key, value in section.items():
        if key not in defaults and key != "sample":
            raise ConfigError(f"unknown path key {key!r}")
        defaults[key] = Path(value)
    return defaults


def _read_required(reader, path, what):
    if not Path(path).exists():
        raise FileNotFoundError(f"{what} file not found: {path}")
    return reader(path)


def _encode_all(samples, vocab, normalizer, n_a, model_cfg):
    if samples and len(samples[0].days) != model_cfg.l:
        raise ConfigError(
            f"model expects windows of l={model_cfg.l} days, dataset has "
            f"{len(samples[0].days)}")
    if model_cfg.n_i != len(dataset.INDICATORS):
        raise ConfigError(
            f"model expects n_i={model_cfg.n_i} indicators, dataset reports "
            f"have {len(dataset.INDICATORS)}")
    return [dataset.encode_sample(s, vocab, normalizer, n_a=n_a)
            for s in samples]


def cmd_gen(args, config, seed, out_dir):
    paths = _paths(config, out_dir)
    sim = _build(advsim.sim_config_from_obj, config.get("sim", {}), "sim")
    data_cfg = _section(config, "data", _DATA_DEFAULTS)
    window = int(data_cfg["window"])

    traces = advsim.generate_dataset(sim, seed)
    advsim.write_traces(traces, paths["traces"])
    samples = dataset.build_samples(
        traces, l0=window, l=window, eps=float(data_cfg["cost_eps"]),
        min_cost=float(data_cfg["min_cost"]))
    if not samples:
        raise DataError("generation produced no usable samples")
    train_set, test_set = dataset.split(samples, float(data_cfg["split_ratio"]),
                                        seed)
    normalizer = dataset.normalize_fit(train_set)
    vocab = dataset.build_vocab(train_set)
    dataset.write_samples(train_set, paths["train"])
    dataset.write_samples(test_set, paths["test"])
    dataset.write_normalizer(normalizer, paths["normalizer"])
    dataset.write_vocab(vocab, paths["vocab"])
    write_manifest(out_dir, "gen", config, seed)
    print(f"gen: {len(traces)} traces -> {len(samples)} samples "
          f"({len(train_set)} train / {len(test_set)} test) in {out_dir}")
    return 0


def _load_dataset(paths, model_cfg, n_a, need_test=True):
    train_set = _read_required(dataset.read_samples, paths["train"], "train")
    test_set = _read_required(dataset.read_samples, paths["test"], "test")
    normalizer = _read_required(dataset.read_normalizer, paths["normalizer"],
                                "normalizer")
    vocab = _read_required(dataset.read_vocab, paths["vocab"], "vocab")
    train_enc = _encode_all(train_set, vocab, normalizer, n_a, model_cfg)
    test_enc = _encode_all(test_set, vocab, normalizer, n_a, model_cfg)
    if need_test and not test_enc:
        raise DataError("test split is empty")
    return train_set, test_set, train_enc, test_enc, normalizer, vocab


def cmd_train(args, config, seed, out_dir):
    paths = _paths(config, out_dir)
    model_cfg = _build(DspnConfig.from_obj, config.get("model", {}), "model")
    train_obj = dict(config.get("train", {}))
    train_obj["seed"] = seed
    train_cfg = _build(TrainConfig.from_obj, train_obj, "train")
    data_cfg = _section(config, "data", _DATA_DEFAULTS)

    _, _, train_enc, test_enc, _, vocab = _load_dataset(
        paths, model_cfg, int(data_cfg["action_slots"]))
    params, history = trainer.train(
        train_enc, test_enc, train_cfg, model_cfg, vocab.sizes(),
        metrics_csv=paths["metrics_csv"], log=print)
    model.save_checkpoint(paths["checkpoint"], params, model_cfg.to_obj(),
                          extra={"kind": train_cfg.kind,
                                 "vocab_sizes": vocab.sizes()})
    report = trainer.evaluate(params, test_enc, model_cfg, train_cfg.kind)
    trainer.write_summary_json(paths["summary"], train_cfg, model_cfg,
                               report, history)
    write_manifest(out_dir, "train", config, seed)
    print(f"train: {train_cfg.kind} auc={report.auc:.4f} acc={report.acc:.4f} "
          f"checkpoint={paths['checkpoint']}")
    return 0


def _load_checkpoint(paths):
    header, params = model.load_checkpoint(
        _read_required(lambda p: p, paths["checkpoint"], "checkpoint"))
    model_cfg = _build(DspnConfig.from_obj, header["config"], "checkpoint")
    kind = header.get("kind", "dspn")
    return header, params, model_cfg, kind


def cmd_eval(args, config, seed, out_dir):
    paths = _paths(config, out_dir)
    data_cfg = _section(config, "data", _DATA_DEFAULTS)
    header, params, model_cfg, kind = _load_checkpoint(paths)
    test_set = _read_required(dataset.read_samples, paths["test"], "test")
    normalizer = _read_required(dataset.read_normalizer, paths["normalizer"],
                                "normalizer")
    vocab = _read_required(dataset.read_vocab, paths["vocab"], "vocab")
    test_enc = _encode_all(test_set, vocab, normalizer,
                           int(data_cfg["action_slots"]), model_cfg)
    if not test_enc:
        raise DataError("test split is empty")
    report = trainer.evaluate(params, test_enc, model_cfg, kind)
    obj = {"auc": report.auc, "acc": report.acc,
           "mean_loss": report.mean_loss, "n_samples": report.n_samples,
           "kind": kind}
    with open(paths["metrics"], "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")
    write_manifest(out_dir, "eval", config, seed)
    print(f"eval: {kind} auc={report.auc:.4f} acc={report.acc:.4f} "
          f"n={report.n_samples}")
    return 0


def cmd_analyze(args, config, seed, out_dir):
    paths = _paths(config, out_dir)
    data_cfg = _section(config, "data", _DATA_DEFAULTS)
    analyze_cfg = _section(config, "analyze", _ANALYZE_DEFAULTS)
    k = int(analyze_cfg["k"])
    header, params, model_cfg, kind = _load_checkpoint(paths)
    if kind != "dspn":
        raise ConfigError(f"analysis needs an intent-producing checkpoint, "
                          f"got kind={kind!r}")
    train_set, test_set, train_enc, test_enc, _, _ = _load_dataset(
        paths, model_cfg, int(data_cfg["action_slots"]), need_test=False)
    raw = train_set + test_set
    encoded = train_enc + test_enc
    intents = intentlab.extract_intents(params, encoded, model_cfg)
    w_all = np.stack([item.w for item in intents])

    cluster = intentlab.kmeans(w_all, k, seed=seed)
    report = intentlab.cluster_report(cluster, intents,
                                      limit=int(analyze_cfg["limit"]),
                                      seed=seed)
    if Path(paths["traces"]).exists():
        traces = advsim.read_traces(paths["traces"])
        arch_by_unit = {t.unit_id: t.archetype_id for t in traces}
        archetype_ids = np.array([arch_by_unit[s.unit_id] for s in raw])
        ari = intentlab.adjusted_rand_index(cluster.assignments, archetype_ids)
        report["archetype_ari"] = float(ari)
        report["n_archetypes"] = int(len(np.unique(archetype_ids)))
    pca = intentlab.pca_fit(w_all)
    intentlab.write_scatter(paths["scatter_pos"], paths["scatter_neg"],
                            pca, cluster, intents)
    report["explained_variance"] = [float(x) for x in pca.explained]
    intentlab.write_cluster_report(paths["report"], report)
    write_manifest(out_dir, "analyze", config, seed)
    ari_note = (f" ari={report['archetype_ari']:.4f}"
                if "archetype_ari" in report else "")
    print(f"analyze: k={k} in_cluster={report['in_cluster_acc_overall']:.4f} "
          f"cross={report['cross_cluster_acc_overall']:.4f}{ari_note}")
    return 0


def cmd_predict(args, config, seed, out_dir):
    paths = _paths(config, out_dir)
    data_cfg = _section(config, "data", _DATA_DEFAULTS)
    header, params, model_cfg, kind = _load_checkpoint(paths)
    sample_path = args.sample or paths.get("sample") or paths["test"]
    samples = _read_required(dataset.read_samples, sample_path, "sample")
    if not samples:
        raise DataError(f"no samples in {sample_path}")
    normalizer = _read_required(dataset.read_normalizer, paths["normalizer"],
                                "normalizer")
    vocab = _read_required(dataset.read_vocab, paths["vocab"], "vocab")
    encoded = _encode_all(samples, vocab, normalizer,
                          int(data_cfg["action_slots"]), model_cfg)
    rows = []
    for raw_sample, enc in zip(samples, encoded):
        if kind == "dspn":
            intents = intentlab.extract_intents(params, [enc], model_cfg)[0]
            p = intentlab.head_score(intents.w, intents.reports_aug)
            w_out = [float(x) for x in intents.w]
        else:
            p = trainer.scores_of(params, [enc], model_cfg, kind)[0]
            w_out = None
        rows.append({"unit_id": raw_sample.unit_id, "p": float(p),
                     "w": w_out, "label": raw_sample.label})
    with open(paths["predictions"], "w") as fh:
        json.dump({"kind": kind, "predictions": rows}, fh, sort_keys=True,
                  indent=2)
        fh.write("\n")
    write_manifest(out_dir, "predict", config, seed)
    print(f"predict: {len(rows)} samples -> {paths['predictions']}")
    return 0


COMMANDS = {"gen": cmd_gen, "train": cmd_train, "eval": cmd_eval,
            "analyze": cmd_analyze, "predict": cmd_predict}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dspn",
        description="Advertiser satisfaction prediction toolkit")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", default=None, help="JSON config file")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--sample", default=None,
                        help="sample file for predict")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        seed = resolve_seed(args, config)
        os.makedirs(args.out, exist_ok=True)
        return COMMANDS[args.command](args, config, seed, args.out)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    except (DataError, CheckpointError, FileNotFoundError) as exc:
        print(f"error: data: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"error: numeric: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
