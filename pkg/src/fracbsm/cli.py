"""Command-line entry point: generate, train, evaluate, compare-optimizers, price."""

from __future__ import annotations

import argparse
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import io
from .bsm import OptionParams, price_call, price_put
from .dataset import FeatureConfig, ParamRanges, build_dataset, fit_stats
from .pipeline import compare_optimizers, evaluate, fit, final_val_loss, prepare
from .training import TrainConfig

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


def _bool(s):
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _pair(s):
    parts = [p for p in str(s).replace(" ", "").split(",") if p]
    if len(parts) != 2:
        raise ValueError(f"expected 'lo,hi', got {s!r}")
    return float(parts[0]), float(parts[1])


def _int_list(s):
    return [int(p) for p in str(s).replace(" ", "").split(",") if p]


REQUIRED = object()

# name -> (converter, default, help). Flags and config keys share these names.
RANGE_OPTS = {
    "s_range": (_pair, "50,150", "spot range lo,hi"),
    "k_range": (_pair, "50,150", "strike range lo,hi"),
    "t_range": (_pair, "0.1,1.0", "maturity range lo,hi (years)"),
    "r_range": (_pair, "0.01,0.05", "risk-free rate range lo,hi"),
    "sigma_range": (_pair, "0.1,0.5", "volatility range lo,hi"),
}
FEATURE_OPTS = {
    "n_grid": (int, "1000", "time-to-expiry grid points per option"),
    "alpha_time": (float, "0.5", "fractional order of the time feature"),
    "alpha_price": (float, "0.7", "fractional order of the price feature"),
    "epsilon": (float, "1e-10", "guard constant"),
}
DATA_OPTS = {
    "train_fraction": (float, "0.8", "leading fraction of rows used for training"),
    "train_only_stats": (_bool, "false", "fit normalization on the training partition only"),
    "include_invalid": (_bool, "false", "keep guard-triggered rows"),
}
TRAIN_OPTS = {
    "epochs": (int, "500", "maximum epochs"),
    "batch_size": (int, "32", "mini-batch size"),
    "validation_fraction": (float, "0.2", "tail of the training partition held out"),
    "patience": (int, "20", "early-stopping patience in epochs"),
    "restore_best": (_bool, "true", "return the best-validation weights"),
    "lam": (float, "0", "weight of the BSM anchor term in the loss"),
}

COMMANDS = {
    "generate": {
        "n": (int, "1000", "number of options"),
        "seed": (int, REQUIRED, "RNG seed"),
        "out": (Path, "features.csv", "features CSV path"),
        "workers": (int, "1", "threads for feature extraction"),
        **RANGE_OPTS,
        **FEATURE_OPTS,
    },
    "train": {
        "features": (Path, REQUIRED, "features CSV"),
        "seed": (int, REQUIRED, "initialization and shuffling seed"),
        "model": (Path, "model.json", "output model file"),
        "history": (Path, "history.csv", "output history CSV"),
        "optimizer": (str, "adam", "adam | sgd | rmsprop"),
        "lr": (float, None, "learning rate (optimizer default if omitted)"),
        **TRAIN_OPTS,
        **DATA_OPTS,
    },
    "evaluate": {
        "model": (Path, REQUIRED, "model file from train"),
        "features": (Path, REQUIRED, "features CSV"),
        "predictions": (Path, "predictions.csv", "output predictions CSV"),
    },
    "compare-optimizers": {
        "features": (Path, REQUIRED, "features CSV"),
        "seeds": (_int_list, REQUIRED, "comma-separated seeds, e.g. 0,1,2"),
        "out": (Path, "comparison.csv", "output comparison CSV"),
        **TRAIN_OPTS,
        **DATA_OPTS,
    },
    "price": {
        "S": (float, REQUIRED, "spot"),
        "K": (float, REQUIRED, "strike"),
        "T": (float, REQUIRED, "maturity in years"),
        "r": (float, REQUIRED, "risk-free rate"),
        "sigma": (float, REQUIRED, "volatility"),
    },
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracbsm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, opts in COMMANDS.items():
        p = sub.add_parser(name)
        if name == "price":
            p.add_argument("kind", choices=("call", "put"))
        p.add_argument("--config", type=Path, help="key=value file; flags override it")
        for opt, (_, default, help_) in opts.items():
            flag = "--" + (opt if len(opt) == 1 else opt.replace("_", "-"))
            shown = "required" if default is REQUIRED else f"default {default}"
            p.add_argument(flag, dest=opt, default=None, metavar="VALUE", help=f"{help_} ({shown})")
    return parser


def resolve(command: str, args: argparse.Namespace) -> dict:
    """Merge defaults < config file < flags and convert every value."""
    opts = COMMANDS[command]
    raw = {k: d for k, (_, d, _) in opts.items()}
    if args.config is not None:
        for k, v in io.read_config_file(args.config).items():
            if k not in opts:
                raise ValueError(f"unknown config key {k!r} for {command}")
            raw[k] = v
    for k in opts:
        if getattr(args, k) is not None:
            raw[k] = getattr(args, k)
    out = {}
    for k, (conv, _, _) in opts.items():
        v = raw[k]
        if v is REQUIRED:
            raise ValueError(f"--{k.replace('_', '-')} is required (flag or config file)")
        out[k] = None if v is None else conv(v)
    return out


def _train_config(c: dict, seed: int, optimizer: str = "adam", lr=None) -> TrainConfig:
    return TrainConfig(
        epochs=c["epochs"],
        batch_size=c["batch_size"],
        validation_fraction=c["validation_fraction"],
        optimizer=optimizer,
        optimizer_params={} if lr is None else {"lr": lr},
        patience=c["patience"],
        restore_best=c["restore_best"],
        lam=c["lam"],
        seed=seed,
    )


def _echo(c: dict) -> dict:
    return {k: (str(v) if isinstance(v, Path) else list(v) if isinstance(v, tuple) else v) for k, v in c.items()}


def _sidecar(path: Path, suffix: str) -> Path:
    return path.with_name(path.stem + suffix)


def cmd_generate(c: dict) -> int:
    started = datetime.now(timezone.utc)
    ranges = ParamRanges(**{k: c[k] for k in RANGE_OPTS})
    cfg = FeatureConfig(**{k: c[k] for k in FEATURE_OPTS})
    rows = build_dataset(c["n"], c["seed"], ranges, cfg, workers=c["workers"])
    out = io.write_features(c["out"], rows)
    artifacts = [out]
    valid = [r for r in rows if r.valid]
    if len(valid) >= 2:
        artifacts.append(io.write_json(_sidecar(out, ".stats.json"), fit_stats(valid).to_dict()))
    io.write_manifest(
        _sidecar(out, ".manifest.json"), "generate", c["seed"], _echo(c), artifacts, started,
        metrics={"rows": len(rows), "invalid_rows": len(rows) - len(valid)},
    )
    print(f"wrote {len(rows)} rows to {out} ({len(rows) - len(valid)} invalid)")
    return EXIT_OK


def cmd_train(c: dict) -> int:
    started = datetime.now(timezone.utc)
    rows = io.read_features(c["features"])
    parts = prepare(rows, c["train_fraction"], c["include_invalid"], c["train_only_stats"])
    cfg = _train_config(c, c["seed"], c["optimizer"], c["lr"])
    model, history = fit(parts, cfg)
    echo = _echo(c) | {"train_config": cfg.to_dict()}
    model_path = io.save_model(c["model"], model, parts.stats, c["seed"], echo)
    hist_path = io.write_history(c["history"], history)
    metrics = {
        "initial_train_loss": history.initial_train_loss,
        "final_train_loss": history.train_loss[-1],
        "best_val_loss": history.best_val_loss,
        "best_epoch": history.best_epoch,
        "stopped_epoch": history.stopped_epoch,
    }
    io.write_manifest(_sidecar(model_path, ".manifest.json"), "train", c["seed"], echo,
                      [model_path, hist_path], started, metrics)
    print(
        f"trained {history.stopped_epoch} epochs (best {history.best_epoch}, "
        f"val loss {history.best_val_loss:.6g}); model -> {model_path}"
    )
    return EXIT_OK


def cmd_evaluate(c: dict) -> int:
    started = datetime.now(timezone.utc)
    model, stats, doc = io.load_model(c["model"])
    cfg = doc.get("config", {})
    rows = io.read_features(c["features"])
    parts = prepare(
        rows,
        cfg.get("train_fraction", 0.8),
        cfg.get("include_invalid", False),
        stats=stats,
    )
    result = evaluate(model, parts)
    pred_path = io.write_predictions(c["predictions"], result.row_ids, result.true_price, result.predicted_price)
    metrics = result.metrics()
    metrics_path = io.write_json(_sidecar(pred_path, ".metrics.json"), metrics)
    io.write_manifest(_sidecar(pred_path, ".manifest.json"), "evaluate", doc.get("seed"), _echo(c),
                      [pred_path, metrics_path], started, metrics)
    print(f"test rows: {metrics['n_test']}")
    print(f"test MSE (normalized): {io.fmt(metrics['mse_normalized'])}")
    print(f"test MSE (price units): {io.fmt(metrics['mse_price'])}")
    return EXIT_OK


def cmd_compare(c: dict) -> int:
    started = datetime.now(timezone.utc)
    if not c["seeds"]:
        raise ValueError("at least one seed is required")
    rows = io.read_features(c["features"])
    parts = prepare(rows, c["train_fraction"], c["include_invalid"], c["train_only_stats"])
    base = _train_config(c, c["seeds"][0])
    records, finals = [], {}
    for opt, seed, model, history in compare_optimizers(parts, base, c["seeds"]):
        records.append((opt, seed, history))
        finals[f"{opt}/{seed}"] = final_val_loss(model, parts, base)
        print(f"{opt:8s} seed={seed} epochs={history.stopped_epoch} val={finals[f'{opt}/{seed}']:.6g}")
    out = io.write_comparison(c["out"], records)
    io.write_manifest(_sidecar(out, ".manifest.json"), "compare-optimizers", c["seeds"], _echo(c),
                      [out], started, {"final_val_loss": finals})
    return EXIT_OK


def cmd_price(kind: str, c: dict) -> int:
    p = OptionParams(S=c["S"], K=c["K"], T=c["T"], r=c["r"], sigma=c["sigma"])
    print(io.fmt(price_call(p) if kind == "call" else price_put(p)))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        c = resolve(args.command, args)
        if args.command == "generate":
            return cmd_generate(c)
        if args.command == "train":
            return cmd_train(c)
        if args.command == "evaluate":
            return cmd_evaluate(c)
        if args.command == "compare-optimizers":
            return cmd_compare(c)
        return cmd_price(args.kind, c)
    except OSError as exc:
        print(f"fracbsm: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"fracbsm: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
