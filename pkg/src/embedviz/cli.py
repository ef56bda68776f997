"""``embedviz`` command line: gen, split, train, embed, tsne, yoke, scatter, recall, render.

Exit codes: 0 success, 1 usage error, 2 data or validation error. Every
output file gets a ``<file>.meta.json`` sidecar with the effective settings.
"""

import argparse
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from ._validation import DataError
from .analysis import below_diagonal_fraction, recall_at_k, similarity_scatter
from .dataset import SyntheticConfig, gen_synthetic, load_csv, save_csv, split_by_class
from .files import (
    load_coords,
    load_scatter,
    save_coords,
    save_displacement,
    save_scatter,
    save_trace,
    write_meta,
)
from .mining import MinerConfig, Strategy
from .render import PlotStyle, render_map_panels, render_scatter
from .trainer import TrainConfig, embed, init_weights, load_model, save_model, train
from .tsne import TsneConfig, joint_embed
from .yoke import YokeConfig, displacement, yoked_run


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _meta(args, **extra):
    flags = {k: v for k, v in vars(args).items() if k != "func"}
    return {"tool": "embedviz", "version": __version__, "subcommand": args.command, "flags": flags, **extra}


def _add_tsne_flags(p):
    d = TsneConfig()
    p.add_argument("--perplexity", type=float, default=d.perplexity)
    p.add_argument("--iterations", type=int, default=d.iterations)
    p.add_argument("--lr", type=float, default=d.learning_rate)
    p.add_argument("--momentum-early", type=float, default=d.momentum_early)
    p.add_argument("--momentum-late", type=float, default=d.momentum_late)
    p.add_argument("--momentum-switch", type=int, default=d.momentum_switch_iter)
    p.add_argument("--exaggeration", type=float, default=d.exaggeration_factor)
    p.add_argument("--exaggeration-iters", type=int, default=d.exaggeration_iters)
    p.add_argument("--calibration-tol", type=float, default=d.calibration_tolerance)
    p.add_argument("--calibration-iters", type=int, default=d.calibration_max_iters)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)


def _tsne_config(args):
    return TsneConfig(
        perplexity=args.perplexity,
        iterations=args.iterations,
        learning_rate=args.lr,
        momentum_early=args.momentum_early,
        momentum_late=args.momentum_late,
        momentum_switch_iter=args.momentum_switch,
        exaggeration_factor=args.exaggeration,
        exaggeration_iters=args.exaggeration_iters,
        seed=args.seed,
        calibration_tolerance=args.calibration_tol,
        calibration_max_iters=args.calibration_iters,
        threads=args.threads,
    )


def _joint_order(data):
    """Rows reordered train-first, as produced by :func:`joint_embed`."""
    train = data.subset(data.split_mask("train"))
    test = data.subset(data.split_mask("test"))
    return train, test


def cmd_gen(args):
    cfg = SyntheticConfig(args.classes, args.per_class, args.dim, args.sigma, args.seed)
    data = gen_synthetic(cfg)
    save_csv(data, args.out)
    write_meta(args.out, _meta(args, config=asdict(cfg)))


def cmd_split(args):
    data = load_csv(args.inp)
    present = sorted({int(c) for c in data.labels})
    if args.n_train is not None:
        if args.train_classes is not None or args.test_classes is not None:
            raise UsageError("split: use either --n-train or --train-classes/--test-classes")
        train_c, test_c = present[: args.n_train], present[args.n_train:]
    else:
        if args.train_classes is None or args.test_classes is None:
            raise UsageError("split: --train-classes and --test-classes are both required")
        train_c, test_c = args.train_classes, args.test_classes
    out = split_by_class(data, train_c, test_c)
    save_csv(out, args.out)
    write_meta(args.out, _meta(args, train_classes=sorted(train_c), test_classes=sorted(test_c)))


def cmd_train(args):
    data = load_csv(args.inp)
    cfg = TrainConfig(
        epochs=args.epochs,
        batches_per_epoch=args.batches_per_epoch,
        p=args.p,
        k=args.k,
        learning_rate=args.lr,
        miner=MinerConfig(args.strategy, args.margin),
        temperature=args.temperature,
        seed=args.seed,
    )
    W0 = init_weights(data.dim, args.out_dim, args.seed)
    W, trace = train(W0, data, cfg)
    cfg_meta = asdict(cfg)
    cfg_meta["miner"]["strategy"] = cfg.miner.strategy.value
    save_model(W, args.model_out)
    write_meta(args.model_out, _meta(args, config=cfg_meta))
    if args.trace_out:
        save_trace(args.trace_out, trace, "mean_loss")
        write_meta(args.trace_out, _meta(args, config=cfg_meta))


def cmd_embed(args):
    data = load_csv(args.inp)
    out = embed(load_model(args.model), data)
    save_csv(out, args.out)
    write_meta(args.out, _meta(args))


def cmd_tsne(args):
    data = load_csv(args.inp)
    cfg = _tsne_config(args)
    train_set, test_set = _joint_order(data)
    result, tags = joint_embed(train_set, test_set, cfg)
    ids = train_set.ids + test_set.ids
    labels = np.concatenate([train_set.labels, test_set.labels])
    meta = _meta(args, config=cfg.to_dict(), final_kl=result.kl_trace[-1],
                 max_calibration_residual=float(result.calibration_residuals.max()))
    save_coords(args.out, ids, tags, labels, result.coords)
    write_meta(args.out, meta)
    if args.trace_out:
        save_trace(args.trace_out, result.kl_trace, "kl")
        write_meta(args.trace_out, meta)


def cmd_yoke(args):
    a, b = load_csv(args.in_a), load_csv(args.in_b)
    if a.ids != b.ids:
        raise DataError("yoke: inputs must list the same ids in the same order")
    ta, sa = _joint_order(a)
    tb, sb = _joint_order(b)
    cfg = YokeConfig(args.lam, _tsne_config(args))
    Xa = np.vstack([ta.vectors, sa.vectors])
    Xb = np.vstack([tb.vectors, sb.vectors])
    res = yoked_run(Xa, Xb, cfg)
    ids = ta.ids + sa.ids
    tags = ["train"] * len(ta) + ["test"] * len(sa)
    labels_a = np.concatenate([ta.labels, sa.labels])
    labels_b = np.concatenate([tb.labels, sb.labels])
    meta = _meta(args, config={"lam": cfg.lam, "base": cfg.base.to_dict()},
                 mean_displacement=res.mean_displacement)
    save_coords(args.out_a, ids, tags, labels_a, res.map_a.coords)
    write_meta(args.out_a, meta)
    save_coords(args.out_b, ids, tags, labels_b, res.map_b.coords)
    write_meta(args.out_b, meta)
    if args.out_disp:
        dists, _ = displacement(res.map_a.coords, res.map_b.coords)
        save_displacement(args.out_disp, ids, dists)
        write_meta(args.out_disp, meta)


def cmd_scatter(args):
    data = load_csv(args.inp)
    if args.split != "all":
        data = data.subset(data.split_mask(args.split))
    points, omitted = similarity_scatter(data, cross_split=args.cross_split)
    frac = below_diagonal_fraction(points) if points else None
    save_scatter(args.out, points)
    write_meta(args.out, _meta(args, omitted_ids=omitted, below_diagonal_fraction=frac))
    print(f"below-diagonal fraction: {frac} ({len(points)} points, {len(omitted)} omitted)")


def cmd_recall(args):
    data = load_csv(args.inp)
    value = recall_at_k(data, args.k, args.split)
    print(f"recall@{args.k} [{args.split}]: {value!r}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(f'{{"k": {args.k}, "split": "{args.split}", "recall": {value!r}}}\n')
        write_meta(args.out, _meta(args))


def cmd_render(args):
    style = PlotStyle(width_px=args.width, height_px=args.height, point_radius=args.radius)
    if args.kind == "map":
        _, splits, labels, coords = load_coords(args.inp)
        svg = render_map_panels(coords, labels, splits, style)
    else:
        svg = render_scatter(load_scatter(args.inp), style)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)
    write_meta(args.out, _meta(args, style=asdict(style)))


def build_parser():
    parser = _Parser(prog="embedviz", description="Embedding generalization toolkit.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("gen", help="generate a synthetic Gaussian-cluster set")
    p.add_argument("--classes", type=int, default=8)
    p.add_argument("--per-class", type=int, default=20)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("split", help="tag rows train/test by class")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--train-classes", type=_int_list)
    p.add_argument("--test-classes", type=_int_list)
    p.add_argument("--n-train", type=int, help="first N labels (sorted) train, the rest test")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train a linear embedder")
    d = TrainConfig()
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--model-out", required=True)
    p.add_argument("--trace-out")
    p.add_argument("--strategy", choices=[s.value for s in Strategy], default=d.miner.strategy.value)
    p.add_argument("--out-dim", type=int, default=64)
    p.add_argument("--epochs", type=int, default=d.epochs)
    p.add_argument("--batches-per-epoch", type=int, default=d.batches_per_epoch)
    p.add_argument("--p", type=int, default=d.p)
    p.add_argument("--k", type=int, default=d.k)
    p.add_argument("--lr", type=float, default=d.learning_rate)
    p.add_argument("--margin", type=float, default=d.miner.margin)
    p.add_argument("--temperature", type=float, default=d.temperature)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("embed", help="apply a trained model to a set")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("tsne", help="joint train+test t-SNE map")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trace-out")
    _add_tsne_flags(p)
    p.set_defaults(func=cmd_tsne)

    p = sub.add_parser("yoke", help="two aligned t-SNE maps of the same points")
    p.add_argument("--in-a", required=True)
    p.add_argument("--in-b", required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=YokeConfig().lam)
    p.add_argument("--out-a", required=True)
    p.add_argument("--out-b", required=True)
    p.add_argument("--out-disp")
    _add_tsne_flags(p)
    p.set_defaults(func=cmd_yoke)

    p = sub.add_parser("scatter", help="closest same vs different class similarity")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", choices=["all", "train", "test"], default="all")
    p.add_argument("--cross-split", action="store_true",
                   help="compare against all rows instead of same-split rows")
    p.set_defaults(func=cmd_scatter)

    p = sub.add_parser("recall", help="Recall@K")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--split", choices=["all", "train", "test"], default="all")
    p.add_argument("--out")
    p.set_defaults(func=cmd_recall)

    p = sub.add_parser("render", help="SVG of a coordinates or scatter CSV")
    p.add_argument("--kind", choices=["map", "scatter"], required=True)
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--width", type=int, default=PlotStyle.width_px)
    p.add_argument("--height", type=int, default=PlotStyle.height_px)
    p.add_argument("--radius", type=float, default=PlotStyle.point_radius)
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        parser.print_help(sys.stderr)
        return 1
    except (DataError, ValueError, OSError) as exc:
        print(f"embedviz: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
