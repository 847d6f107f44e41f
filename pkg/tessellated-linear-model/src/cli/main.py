"""
Command-line interface: train, evaluate, inspect, tessellate, baselines

Flags mirror RunConfig field names; a flag given on the command line overrides
the same key in the --config JSON file, which overrides the default.
"""

import argparse
import logging
import platform
import sys
from datetime import datetime
from typing import Dict, List, Optional

import psutil

from ..config import AppConfig, RunConfig
from ..errors import ConfigError, DataError, TLMError
from ..models.baselines import run_comparison
from ..models.routing import ROUTING_MODES, SOFT_STRATEGIES
from ..models.tlm_model import train_model
from ..preprocessing.dataset import Dataset, load_csv, read_feature_table, split
from ..utils.data_export import DataExporter
from ..utils.serialization import load_model, save_model
from ..visualization.tree_report import node_summaries, render_text, tessellation_grid, tree_report

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _add_common_args(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="JSON file of run settings")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log at DEBUG level")
    parser.add_argument("--target-column", dest="target_column", default=None)
    parser.add_argument("--seed", type=int, default=None)


def _add_tree_args(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("tree")
    group.add_argument("--max-depth", dest="max_depth", type=int, default=None)
    group.add_argument("--min-leaf", dest="min_leaf", type=int, default=None)
    group.add_argument("--n-thresholds", dest="n_thresholds", type=int, default=None)
    group.add_argument("--purity-eps", dest="purity_eps", type=float, default=None)
    group.add_argument("--partition-by", dest="partition_by", choices=["label", "classifier"], default=None)
    group.add_argument("--n-jobs", dest="n_jobs", type=int, default=None)

    group = parser.add_argument_group("linear fits")
    group.add_argument("--ridge-lambda", dest="ridge_lambda", type=float, default=None)
    group.add_argument("--logit-l2", dest="logit_l2", type=float, default=None)
    group.add_argument("--max-iters", dest="max_iters", type=int, default=None)
    group.add_argument("--tol", type=float, default=None)
    group.add_argument("--step", type=float, default=None)

    group = parser.add_argument_group("mixup")
    group.add_argument("--mixup", action=argparse.BooleanOptionalAction, default=None)
    group.add_argument("--similarity-window", dest="similarity_window", type=float, default=None)
    group.add_argument("--mixup-alpha", dest="mixup_alpha", type=float, default=None)
    group.add_argument("--mixup-multiplier", dest="mixup_multiplier", type=float, default=None)

    group = parser.add_argument_group("feature optimisation")
    group.add_argument("--feature-opt", dest="feature_opt", action=argparse.BooleanOptionalAction, default=None)
    group.add_argument("--iterate", action="store_true", default=None,
                       help="Rebuild the tree once on the optimised features")
    group.add_argument("--learning-rate", dest="learning_rate", type=float, default=None)
    group.add_argument("--epochs", type=int, default=None)
    group.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    group.add_argument("--no-dropout", dest="dropout_enabled", action="store_false", default=None)


def _add_routing_args(parser: argparse.ArgumentParser):
    parser.add_argument("--routing", choices=ROUTING_MODES, default=None)
    parser.add_argument("--soft-strategy", dest="soft_strategy", choices=SOFT_STRATEGIES, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tlm",
        description="Tessellated Linear Model: piecewise-linear regression over a learned convex tessellation",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    train = commands.add_parser("train", help="Build a tree (and optionally a feature net)")
    _add_common_args(train)
    train.add_argument("--data", default=None, help="Training CSV")
    train.add_argument("--test-data", dest="test_data", default=None, help="Held-out CSV for the report")
    train.add_argument("--out", default=None, help="Model JSON to write")
    train.add_argument("--report", default=None, help="Training report JSON to write")
    train.add_argument("--loss-curve", dest="loss_curve", default=None, help="Feature-net loss curve CSV")
    _add_tree_args(train)

    evaluate = commands.add_parser("evaluate", help="Predict a CSV and score the predictions")
    _add_common_args(evaluate)
    evaluate.add_argument("--model", required=True)
    evaluate.add_argument("--data", default=None)
    evaluate.add_argument("--out", default=None, help="Predictions CSV")
    evaluate.add_argument("--report", default=None, help="Metrics JSON")
    _add_routing_args(evaluate)

    inspect = commands.add_parser("inspect", help="Per-node report of a trained model")
    _add_common_args(inspect)
    inspect.add_argument("--model", required=True)
    inspect.add_argument("--data", default=None, help="Labelled CSV for per-node test MAE")
    inspect.add_argument("--report", default=None, help="Report JSON")

    tessellate = commands.add_parser("tessellate", help="Export the tessellation over a 2-D grid")
    _add_common_args(tessellate)
    tessellate.add_argument("--model", required=True)
    tessellate.add_argument("--out", default=None, help="Grid CSV")
    tessellate.add_argument("--data", default=None, help="CSV whose feature means anchor the fixed coordinates")
    tessellate.add_argument("--axes", type=int, nargs=2, default=[0, 1], metavar=("I", "J"))
    tessellate.add_argument("--anchor", type=float, nargs="+", default=None)
    tessellate.add_argument("--bounds", type=float, nargs=2, default=[-1.0, 1.0], metavar=("LO", "HI"))
    tessellate.add_argument("--resolution", type=int, default=50)
    tessellate.add_argument("--depths", type=int, nargs="+", default=None)

    baselines = commands.add_parser("baselines", help="Compare TLM against the reference models")
    _add_common_args(baselines)
    baselines.add_argument("--data", default=None)
    baselines.add_argument("--test-data", dest="test_data", default=None)
    baselines.add_argument("--train-fraction", dest="train_fraction", type=float, default=None)
    baselines.add_argument("--report", default=None, help="Comparison JSON")
    baselines.add_argument("--kmeans-k", dest="kmeans_k", type=int, default=None)
    baselines.add_argument("--mlp-hidden", dest="mlp_hidden", type=int, nargs="*", default=None)
    _add_tree_args(baselines)
    _add_routing_args(baselines)

    return parser


def _overrides(args: argparse.Namespace) -> Dict:
    return {key: value for key, value in vars(args).items() if key in RunConfig.model_fields}


def _require(value: Optional[str], flag: str, command: str) -> str:
    if not value:
        raise ConfigError(f"{command} needs {flag}")
    return value


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _system_info() -> Dict:
    mem = psutil.virtual_memory()
    return {
        "python": platform.python_version(),
        "platform": platform.platform(),
        "cpu_count": psutil.cpu_count(),
        "memory": {
            "total_gb": mem.total / (1024 ** 3),
            "available_gb": mem.available / (1024 ** 3),
            "percent_used": mem.percent,
        },
        "process_rss_mb": psutil.Process().memory_info().rss / (1024 ** 2),
    }


def cmd_train(args: argparse.Namespace, cfg: RunConfig) -> int:
    data = load_csv(_require(cfg.data, "--data", "train"), cfg.target_column)
    out = _require(cfg.out, "--out", "train")

    model, summary = train_model(data, cfg)
    save_model(model, out, cfg)

    exporter = DataExporter()
    report = {
        "command": "train",
        "created": datetime.now().isoformat(),
        "model": out,
        "config": cfg.model_dump(),
        "training": summary,
        "system": _system_info(),
    }
    if cfg.test_data:
        test = load_csv(cfg.test_data, cfg.target_column)
        report["test"] = {
            mode: model.predict(test, mode, cfg.soft_strategy).metrics.to_dict() for mode in ROUTING_MODES
        }
        report["nodes"] = tree_report(model, test)["nodes"]
    if cfg.report:
        exporter.export_json(report, cfg.report)
    if cfg.loss_curve:
        if model.feature_net is None:
            logger.warning("--loss-curve given without --feature-opt; no curve to write")
        else:
            exporter.export_loss_curve(cfg.loss_curve, model.feature_net.loss_curve)

    print(f"Trained on {data.size} rows: {summary['n_leaves']} leaves, depth {summary['depth']}, "
          f"training MSE {summary['train_mse_hard']:.6g} (hard), {summary['train_mse_label']:.6g} (label)")
    return 0


def cmd_evaluate(args: argparse.Namespace, cfg: RunConfig) -> int:
    model = load_model(args.model)
    path = _require(cfg.data, "--data", "evaluate")
    features, targets, _ = read_feature_table(path, cfg.target_column, require_target=cfg.routing == "oracle")
    if features.shape[1] != model.dim:
        raise DataError(f"Model expects {model.dim} features, {path} has {features.shape[1]}")
    data = Dataset(features, targets) if targets is not None else features

    prediction = model.predict(data, cfg.routing, cfg.soft_strategy)
    exporter = DataExporter()
    if cfg.out:
        exporter.export_predictions(cfg.out, prediction.predictions, prediction.leaf_ids, targets)

    if prediction.metrics is None:
        print(f"Predicted {len(prediction.predictions)} rows ({cfg.routing} routing); no targets to score")
        return 0

    document = {
        "routing": cfg.routing,
        "soft_strategy": cfg.soft_strategy if cfg.routing == "soft" else None,
        "metrics": prediction.metrics.to_dict(),
        "per_leaf": {str(leaf): m.to_dict() for leaf, m in prediction.per_leaf.items()},
    }
    if cfg.report:
        exporter.export_json(document, cfg.report)
    print(f"{cfg.routing} routing: MAE {prediction.metrics.mae:.6g}, RMSE {prediction.metrics.rmse:.6g} "
          f"over {prediction.metrics.count} rows")
    return 0


def cmd_inspect(args: argparse.Namespace, cfg: RunConfig) -> int:
    model = load_model(args.model)
    test = load_csv(cfg.data, cfg.target_column) if cfg.data else None
    print(render_text(node_summaries(model, test)))
    if cfg.report:
        DataExporter().export_json(tree_report(model, test), cfg.report)
    return 0


def cmd_tessellate(args: argparse.Namespace, cfg: RunConfig) -> int:
    model = load_model(args.model)
    out = _require(cfg.out, "--out", "tessellate")
    anchor = args.anchor
    if anchor is None and cfg.data:
        features, _, _ = read_feature_table(cfg.data, cfg.target_column, require_target=False)
        anchor = features.mean(axis=0)

    rows = tessellation_grid(
        model,
        axes=tuple(args.axes),
        anchor=anchor,
        bounds=tuple(args.bounds),
        resolution=args.resolution,
        depths=args.depths,
    )
    DataExporter().export_grid(out, rows)
    return 0


def cmd_baselines(args: argparse.Namespace, cfg: RunConfig) -> int:
    data = load_csv(_require(cfg.data, "--data", "baselines"), cfg.target_column)
    if cfg.test_data:
        train, test = data, load_csv(cfg.test_data, cfg.target_column)
    else:
        train, test = split(data, cfg.train_fraction, cfg.seed)

    rows = run_comparison(train, test, cfg)
    document = {"n_train": train.size, "n_test": test.size, "rows": rows}
    if cfg.report:
        DataExporter().export_json(document, cfg.report)

    print(f"{'model':<18} {'train MAE':>10} {'test MAE':>10} {'test RMSE':>10}")
    for row in rows:
        print(f"{row['model']:<18} {row['train']['mae']:>10.4f} {row['test']['mae']:>10.4f} {row['test']['rmse']:>10.4f}")
    return 0


COMMANDS = {
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "inspect": cmd_inspect,
    "tessellate": cmd_tessellate,
    "baselines": cmd_baselines,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one command

    Returns:
        int: exit code (0 ok, 1 unexpected, 2 config, 3 data, 4 numeric)
    """
    args = build_parser().parse_args(argv)

    level = logging.DEBUG if args.verbose else getattr(logging, AppConfig.log_level, logging.INFO)
    logging.basicConfig(level=level, format=AppConfig.log_format)
    logging.getLogger().setLevel(level)

    try:
        cfg = RunConfig.resolve(args.config, _overrides(args))
        return COMMANDS[args.command](args, cfg)
    except TLMError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.exception(f"Unexpected failure in {args.command}")
        print(f"error: {e}", file=sys.stderr)
        return 1
