"""Command-line entry point: ``socbench <command> [options]``."""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import bench
from .config import load_config, merge
from .errors import SocBenchError
from .linear import LassoRegression, LinearRegression
from .neural import NeuralRegressor
from .pipeline import csv_source, preprocess, read_artifact, synthetic_source, write_artifact
from .tree import DecisionTreeRegressor


def _common(p):
    p.add_argument("--config", metavar="FILE", help="JSON config overriding the defaults")
    p.add_argument("--seed", type=int, help="seed for splits, folds, init and shuffling")
    p.add_argument("--kfold", type=int, metavar="K", help="folds for grid search (default 5)")
    p.add_argument("--out", metavar="DIR", help="output directory")


def _data_arg(p):
    p.add_argument("--data", metavar="DIR", required=True,
                   help="artifact directory written by `preprocess`")


def _models_args(p, default_all=False):
    g = p.add_mutually_exclusive_group(required=not default_all)
    g.add_argument("--models", metavar="LIST", help="comma-separated model keys, e.g. tree,lasso")
    g.add_argument("--all", action="store_true", help="all seven models")


def build_parser():
    parser = argparse.ArgumentParser(prog="socbench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="select features, drop outliers, split, standardize")
    _common(p)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--input", nargs="+", metavar="CSV", help="driving-cycle CSV file(s)")
    src.add_argument("--synthetic", type=int, metavar="N", help="generate N synthetic rows")
    src.add_argument("--from-manifest", metavar="FILE", help="replay a recorded manifest")
    p.add_argument("--n-features", type=int, default=10, help="synthetic feature count")
    p.add_argument("--spikes", type=int, default=0, help="inject N 10-sigma spikes (synthetic)")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--decimal", default=".", help="decimal separator of the input files")
    p.add_argument("--target", default="soc", help="target column name")
    p.add_argument("--z-threshold", type=float)
    p.add_argument("--paper-faithful", action="store_true",
                   help="fit the standardizer on the whole cleaned frame instead of train only")

    p = sub.add_parser("benchmark", help="train and score models, write the comparison table")
    _common(p)
    p.add_argument("--data", metavar="DIR")
    p.add_argument("--models", metavar="LIST")
    p.add_argument("--all", action="store_true")
    p.add_argument("--replay", metavar="MANIFEST",
                   help="re-run preprocessing and benchmark from a benchmark manifest")

    p = sub.add_parser("subset", help="benchmark on a seeded subsample of n rows")
    _common(p)
    _data_arg(p)
    _models_args(p, default_all=True)
    p.add_argument("--n", type=int, default=bench.EXTERNAL_BASELINE["n_rows"])

    p = sub.add_parser("plot-data", help="write the actual-vs-predicted trace for one model")
    _common(p)
    _data_arg(p)
    p.add_argument("--model", required=True)

    p = sub.add_parser("train", help="fit one model and save it as JSON")
    _common(p)
    _data_arg(p)
    p.add_argument("--model", required=True)

    p = sub.add_parser("evaluate", help="score a saved model on the artifact splits")
    _common(p)
    _data_arg(p)
    p.add_argument("--model-file", required=True)
    return parser


def _cfg(args, base=None):
    cfg = load_config()
    if base:
        cfg = merge(cfg, base)
    if args.config:
        with open(args.config) as fh:
            cfg = merge(cfg, json.load(fh))
    overrides = {"seed": args.seed, "kfold": args.kfold,
                 "z_threshold": getattr(args, "z_threshold", None)}
    if getattr(args, "paper_faithful", False):
        overrides["paper_faithful"] = True
    return merge(cfg, {k: v for k, v in overrides.items() if v is not None})


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_preprocess(args):
    if args.from_manifest:
        with open(args.from_manifest) as fh:
            recorded = json.load(fh)
        recorded = recorded.get("preprocess", recorded)
        source, cfg = recorded["source"], recorded["config"]
    else:
        cfg = _cfg(args)
        if args.synthetic is not None:
            source = synthetic_source(args.synthetic, cfg["seed"], args.n_features, args.spikes)
        elif args.input:
            source = csv_source(args.input, args.delimiter, args.decimal, args.target)
        else:
            raise SocBenchError("preprocess needs --input, --synthetic or --from-manifest")
    artifact = preprocess(source, cfg)
    out = args.out or "socbench_data"
    manifest = write_artifact(artifact, out)
    sizes = manifest["split"]["sizes"]
    print(f"selected {manifest['n_selected_features']} features, removed "
          f"{manifest['outliers']['removed']} outlier rows; split sizes "
          f"train={sizes['train']} val={sizes['val']} test={sizes['test']} -> {out}")


def _model_list(args):
    if args.all or not args.models:
        return list(bench.ALL_MODELS)
    return bench.resolve_models(args.models.split(","))


def _print_report(report):
    print(report.render("test"))
    print()
    print(report.render("val"))


def cmd_benchmark(args):
    if args.replay:
        with open(args.replay) as fh:
            recorded = json.load(fh)
        out = args.out or "socbench_replay"
        artifact = preprocess(recorded["preprocess"]["source"], recorded["preprocess"]["config"])
        write_artifact(artifact, os.path.join(out, "data"))
        report = bench.run_benchmark(artifact, recorded["models"], recorded["config"])
        bench.write_report(report, out, artifact)
        _print_report(report)
        return
    if not args.data:
        raise SocBenchError("benchmark needs --data or --replay")
    artifact = read_artifact(args.data)
    cfg = _cfg(args, artifact.manifest["config"])
    out = args.out or os.path.join(args.data, "benchmark")
    if os.path.abspath(out) == os.path.abspath(args.data):
        raise SocBenchError("--out must differ from --data (manifest.json would be overwritten)")
    report = bench.run_benchmark(artifact, _model_list(args), cfg)
    bench.write_report(report, out, artifact)
    _print_report(report)


def cmd_subset(args):
    artifact = read_artifact(args.data)
    cfg = _cfg(args, artifact.manifest["config"])
    out = args.out or os.path.join(args.data, f"subset_{args.n}")
    report = bench.run_subset(artifact, args.n, cfg["seed"], _model_list(args), cfg)
    bench.write_report(report, out, artifact)
    _print_report(report)


def cmd_plot_data(args):
    artifact = read_artifact(args.data)
    cfg = _cfg(args, artifact.manifest["config"])
    key = bench.resolve_models([args.model])[0]
    model, _ = bench.fit_model(key, artifact.train, artifact.val, cfg)
    out = args.out or args.data
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, f"trace_{key}.csv")
    bench.write_trace(path, artifact.test.y, model.predict(artifact.test.X))
    print(path)


def cmd_train(args):
    artifact = read_artifact(args.data)
    cfg = _cfg(args, artifact.manifest["config"])
    key = bench.resolve_models([args.model])[0]
    model, cv = bench.fit_model(key, artifact.train, artifact.val, cfg)
    out = args.out or args.data
    os.makedirs(out, exist_ok=True)
    doc = {"model": key, "name": bench.MODEL_NAMES[key],
           "features": list(artifact.train.feature_names), **model.to_dict()}
    path = os.path.join(out, f"model_{key}.json")
    _write_json(path, doc)
    if cv is not None:
        cv.to_csv(os.path.join(out, f"cv_{key}.csv"))
    if isinstance(model, NeuralRegressor):
        model.history_.to_csv(os.path.join(out, f"history_{key}.csv"))
    print(path)


LOADERS = {"linear": LinearRegression.from_dict, "lasso": LassoRegression.from_dict,
           "tree": DecisionTreeRegressor.from_dict, "neural": NeuralRegressor.from_dict}


def load_model(path):
    with open(path) as fh:
        doc = json.load(fh)
    return doc, LOADERS[doc["kind"]](doc)


def cmd_evaluate(args):
    artifact = read_artifact(args.data)
    doc, model = load_model(args.model_file)
    rows = [{"key": doc["model"], "name": doc["name"], "status": "ok",
             "test": bench._score(artifact.test.y, model.predict(artifact.test.X)).to_dict(),
             "val": bench._score(artifact.val.y, model.predict(artifact.val.X)).to_dict()}]
    print(bench.render_table(rows, "test"))
    print()
    print(bench.render_table(rows, "val"))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write_json(os.path.join(args.out, f"eval_{doc['model']}.json"), rows[0])


COMMANDS = {"preprocess": cmd_preprocess, "benchmark": cmd_benchmark, "subset": cmd_subset,
            "plot-data": cmd_plot_data, "train": cmd_train, "evaluate": cmd_evaluate}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except (SocBenchError, FileNotFoundError) as exc:
        print(f"socbench {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
