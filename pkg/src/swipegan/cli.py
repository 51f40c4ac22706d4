"""``swipegan`` command-line tool.

Subcommands: synth, train-gan, transfer, train-rec, eval, compositions, curve,
render. Every command takes ``--seed``-style flags and, where it has tunable
settings, a JSON ``--config`` whose keys are overridden by explicit flags.
Exit codes: 0 success, 1 runtime error, 2 validation error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path as FsPath

import numpy as np

from swipegan import evaluation, gan, plotting
from swipegan._io import atomic_write_text
from swipegan.errors import InvalidArgument, ParseError, SwipeError, ValidationError
from swipegan.layout import load_layout, reference_qwerty
from swipegan.pathcore import DEFAULT_LENGTH, Corpus, corpus_read, corpus_write, validate_corpus_words
from swipegan.render import render_svg
from swipegan.synth import DEFAULT_USER_STYLE, StyleParams, generate_corpus, read_lexicon


class CliError(InvalidArgument):
    """Validation failure attributed to one flag."""

    def __init__(self, flag: str, message: str):
        super().__init__(f"{flag}: {message}")


def _guard(flag: str, fn, *args, **kwargs):
    """Run a loader; re-raise validation or I/O failures as errors naming ``flag``."""
    try:
        return fn(*args, **kwargs)
    except FileNotFoundError:
        raise CliError(flag, f"file not found: {args[0] if args else ''}") from None
    except IsADirectoryError:
        raise CliError(flag, f"is a directory: {args[0] if args else ''}") from None
    except ValidationError as exc:
        raise CliError(flag, str(exc)) from exc


def _read_config(path) -> dict:
    if path is None:
        return {}

    def load(p):
        text = FsPath(p).read_text(encoding="utf-8")
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidArgument(f"not valid JSON (line {exc.lineno}: {exc.msg})") from None
        if not isinstance(data, dict):
            raise InvalidArgument("config must be a JSON object")
        return data

    return _guard("--config", load, path)


def _merge(config: dict, flags: dict) -> dict:
    """Config values overridden by every flag that was given explicitly (not None)."""
    out = dict(config)
    out.update({k: v for k, v in flags.items() if v is not None})
    return out


def _layout(path):
    return reference_qwerty() if path is None else _guard("--layout", load_layout, path)


def _corpus(flag: str, path) -> Corpus:
    return _guard(flag, corpus_read, path)


def _lexicon(path) -> list[str]:
    if path is None:
        raise CliError("--lexicon", "a lexicon file is required")
    words = _guard("--lexicon", read_lexicon, path)
    if not words:
        raise CliError("--lexicon", "lexicon is empty")
    return words


def _sibling(out: FsPath, suffix: str) -> FsPath:
    return out.with_name(out.stem + suffix)


def _print_kv(pairs) -> None:
    for k, v in pairs:
        print(f"{k}: {v}")


# -- commands --------------------------------------------------------------


def cmd_synth(args) -> None:
    cfg = _read_config(args.config)
    layout = _layout(args.layout if args.layout is not None else cfg.get("layout"))
    lexicon = _lexicon(args.lexicon if args.lexicon is not None else cfg.get("lexicon"))
    opts = _merge(
        {k: cfg[k] for k in ("per_word", "mode", "seed", "length") if k in cfg},
        {"per_word": args.per_word, "mode": args.mode, "seed": args.seed, "length": args.length},
    )
    per_word = int(opts.get("per_word", 1))
    if per_word < 1:
        raise CliError("--per-word", "must be >= 1")
    length = int(opts.get("length", DEFAULT_LENGTH))
    if length < 2:
        raise CliError("--length", "must be >= 2")
    mode = opts.get("mode", "synthetic")
    if mode not in ("synthetic", "user"):
        raise CliError("--mode", f"expected synthetic or user, got {mode!r}")
    style = DEFAULT_USER_STYLE
    if "style" in cfg:
        style = _guard("--config", StyleParams.from_dict, {**DEFAULT_USER_STYLE.to_dict(), **cfg["style"]})
    corpus = _guard("--lexicon", generate_corpus, layout, lexicon, per_word, mode, style, int(opts.get("seed", 0)), length)
    corpus_write(corpus, args.out)
    print(f"wrote {len(corpus)} paths to {args.out}")
    print(json.dumps(corpus.metadata, sort_keys=True))


_GAN_FLAGS = ("iterations", "seed", "lam", "hidden", "depth", "lr", "batch", "noise_dim", "pretrain_steps", "checkpoint_every")


def cmd_train_gan(args) -> None:
    cfg = _read_config(args.config)
    s = _corpus("--synthetic", args.synthetic)
    u = _corpus("--user", args.user)
    flags = {k: getattr(args, k) for k in _GAN_FLAGS}
    merged = _merge(cfg, flags)
    lengths = {len(p) for p in s} | {len(p) for p in u}
    if "length" not in merged and len(lengths) == 1:
        merged["length"] = lengths.pop()
    config = _guard("--config", gan.GanConfig.from_dict, merged)
    model = gan.GanModel(config)
    out = FsPath(args.out)
    ckpt_dir = out.parent if config.checkpoint_every else None
    _, curves = _guard("--user", gan.train, model, s, u, checkpoint_dir=ckpt_dir)
    model.save(out)
    csv_path = _sibling(out, ".losses.csv")
    atomic_write_text(csv_path, gan.loss_curves_csv(curves))
    if curves:
        cols = {
            "d_loss": [r.d_loss for r in curves],
            "g_loss": [r.g_loss for r in curves],
            "ctc_loss": [r.ctc_loss for r in curves],
            "delta_mean": [r.delta_mean for r in curves],
        }
        cols = {k: v for k, v in cols.items() if not all(np.isnan(v))}
        plotting.plot_losses(cols, _sibling(out, ".losses.png"))
    _print_kv([("iterations", len(curves)), ("checkpoint", out), ("losses", csv_path)])
    if curves:
        tail = curves[-min(100, len(curves)) :]
        _print_kv(
            [
                ("final_delta_mean", f"{np.mean([r.delta_mean for r in tail]):.6f}"),
                ("skipped_ctc_targets", sum(r.skipped for r in curves)),
            ]
        )


def cmd_transfer(args) -> None:
    model = _guard("--model", gan.GanModel.load, args.model)
    corpus = _corpus("--in", args.input)
    out = _guard("--in", gan.transfer_corpus, model, corpus, seed=args.seed)
    corpus_write(out, args.out)
    print(f"transferred {len(out)} paths to {args.out}")


_REC_FLAGS = ("hidden", "depth", "epochs", "batch", "lr", "seed")


def _rec_config(args, cfg: dict) -> evaluation.RecognizerConfig:
    merged = _merge(cfg.get("recognizer", {k: v for k, v in cfg.items() if k in _REC_FLAGS}),
                    {k: getattr(args, k) for k in _REC_FLAGS})
    return _guard("--config", evaluation.RecognizerConfig.from_dict, merged)


def cmd_train_rec(args) -> None:
    cfg = _read_config(args.config)
    config = _rec_config(args, cfg)
    corpus = _corpus("--train", args.train)
    lexicon = _lexicon(args.lexicon)
    clf, rep = _guard("--train", evaluation.train_recognizer, corpus, lexicon, config)
    evaluation.save_recognizer(clf, config, args.out)
    _print_kv([("paths", len(corpus)), ("steps", rep.steps), ("skipped", rep.skipped), ("checkpoint", args.out)])


def load_classifier(path):
    """Checkpoint loader used by ``eval`` (a seam for substituting fixtures)."""
    clf, _ = evaluation.load_recognizer(path)
    return clf


def cmd_eval(args) -> None:
    clf = _guard("--model", load_classifier, args.model)
    test = _corpus("--test", args.test)
    lexicon = _lexicon(args.lexicon)
    paths = list(test)
    if not paths:
        raise CliError("--test", "test corpus is empty")
    preds = evaluation.predict_top1(clf, paths, lexicon)
    acc = float(np.mean([a == p.word for a, p in zip(preds, paths)]))
    if args.out:
        rows = ["index,word,predicted"] + [f"{i},{p.word},{a}" for i, (a, p) in enumerate(zip(preds, paths))]
        atomic_write_text(args.out, "\n".join(rows) + "\n")
    print(f"top1: {acc:.6f} ({sum(a == p.word for a, p in zip(preds, paths))}/{len(paths)})")


def cmd_compositions(args) -> None:
    cfg = _read_config(args.config)
    raw = cfg.get("compositions")
    if not isinstance(raw, list) or not raw:
        raise CliError("--config", "needs a non-empty 'compositions' list")
    specs = [_guard("--config", evaluation.CompositionSpec.from_dict, d) for d in raw]
    config = _rec_config(args, cfg)
    corpora = {}
    for key, flag, path in (("U", "--user", args.user), ("S", "--synthetic", args.synthetic), ("G", "--gan", args.gan)):
        if path is not None:
            corpora[key] = _corpus(flag, path)
    test = _corpus("--test", args.test)
    lexicon = _lexicon(args.lexicon)
    report = _guard("--config", evaluation.run_compositions, specs, corpora, test, lexicon, config)
    out = FsPath(args.out)
    evaluation.save_report(report, out)
    atomic_write_text(_sibling(out, ".txt"), report.to_table())
    plotting.plot_compositions([r.label for r in report.rows], [r.top1 for r in report.rows], _sibling(out, ".png"))
    sys.stdout.write(report.to_table())


def cmd_curve(args) -> None:
    if args.input is not None:
        series = _guard("--in", evaluation.read_curve_csv, args.input)
    else:
        text = _guard("--report", lambda p: FsPath(p).read_text(encoding="utf-8"), args.report)
        rows = _guard("--report", _report_rows, text)
        series = evaluation.report_curve_points(evaluation.ExperimentReport(rows))
        if not series:
            raise CliError("--report", "no user-only or user+gan rows with non-zero error")
    slopes = {}
    for name, pts in series.items():
        slopes[name] = _guard("--in" if args.input else "--report", evaluation.learning_curve_slope, pts)
        print(f"slope[{name}]: {slopes[name]:.4f}")
    if args.out:
        out = FsPath(args.out)
        lines = ["series,n_points,slope"] + [f"{k},{len(series[k])},{repr(v)}" for k, v in slopes.items()]
        atomic_write_text(out, "\n".join(lines) + "\n")
        atomic_write_text(_sibling(out, ".points.csv"), evaluation.curve_csv(series))
        plotting.plot_learning_curves(series, slopes, _sibling(out, ".png"))


def _report_rows(text: str) -> list[evaluation.CompositionResult]:
    reader = csv.DictReader(io.StringIO(text))
    need = {"label", "n_user", "n_synth", "n_gan", "top1"}
    if reader.fieldnames is None or not need <= set(reader.fieldnames):
        raise ParseError("report CSV needs columns label,n_user,n_synth,n_gan,top1", 1)
    rows = []
    for lineno, r in enumerate(reader, start=2):
        try:
            rows.append(
                evaluation.CompositionResult(
                    r["label"], int(r["n_user"]), int(r["n_synth"]), int(r["n_gan"]), float(r["top1"]), 0, 0, 0.0
                )
            )
        except (TypeError, ValueError):
            raise ParseError("bad numeric field", lineno) from None
    return rows


def cmd_render(args) -> None:
    corpus = _corpus("--in", args.input)
    if len(corpus) == 0:
        raise CliError("--in", "corpus is empty")
    if not 0 <= args.index < len(corpus):
        raise CliError("--index", f"{args.index} out of range for {len(corpus)} paths")
    layout = _layout(args.layout)
    _guard("--in", validate_corpus_words, corpus, layout)
    path = corpus.paths[args.index]
    atomic_write_text(args.out, render_svg(path, layout, title=f"{path.word} ({path.source.value})"))
    print(f"rendered path {args.index} ({path.word!r}, {len(path) - 1} segments) to {args.out}")


# -- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="swipegan", description="Swipe-path synthesis, GAN style transfer and evaluation.")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    s = sub.add_parser("synth", help="generate a spline or user-style corpus")
    s.add_argument("--layout", help="keyboard layout JSON (default: reference QWERTY)")
    s.add_argument("--lexicon", help="lexicon file, one word per line")
    s.add_argument("--per-word", type=int, dest="per_word", help="paths per word (default 1)")
    s.add_argument("--mode", choices=["synthetic", "user"], help="spline or simulated user style (default synthetic)")
    s.add_argument("--length", type=int, help=f"points per path (default {DEFAULT_LENGTH})")
    s.add_argument("--seed", type=int, help="base seed (default 0)")
    s.add_argument("--config", help="JSON config (keys: layout, lexicon, per_word, mode, length, seed, style)")
    s.add_argument("--out", required=True, help="output corpus (JSON lines)")
    s.set_defaults(func=cmd_synth)

    t = sub.add_parser("train-gan", help="train the multi-task GAN")
    t.add_argument("--synthetic", required=True, help="spline corpus X")
    t.add_argument("--user", required=True, help="user-style reference corpus P")
    t.add_argument("--config", help="JSON GAN config; explicit flags win")
    t.add_argument("--iterations", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--lambda", dest="lam", type=float, help="weight of the adversarial objective")
    t.add_argument("--hidden", type=int)
    t.add_argument("--depth", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--batch", type=int)
    t.add_argument("--noise-dim", dest="noise_dim", type=int)
    t.add_argument("--pretrain-steps", dest="pretrain_steps", type=int)
    t.add_argument("--checkpoint-every", dest="checkpoint_every", type=int)
    t.add_argument("--out", required=True, help="checkpoint JSON; losses go to <stem>.losses.csv/.png")
    t.set_defaults(func=cmd_train_gan)

    x = sub.add_parser("transfer", help="map a corpus through a trained generator")
    x.add_argument("--model", required=True)
    x.add_argument("--in", dest="input", required=True)
    x.add_argument("--seed", type=int, default=0, help="seed for generator noise")
    x.add_argument("--out", required=True)
    x.set_defaults(func=cmd_transfer)

    def rec_flags(q):
        q.add_argument("--config", help="JSON recognizer config; explicit flags win")
        q.add_argument("--hidden", type=int)
        q.add_argument("--depth", type=int)
        q.add_argument("--epochs", type=float)
        q.add_argument("--batch", type=int)
        q.add_argument("--lr", type=float)
        q.add_argument("--seed", type=int)

    r = sub.add_parser("train-rec", help="train a CTC recognizer")
    r.add_argument("--train", required=True)
    r.add_argument("--lexicon", required=True)
    rec_flags(r)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_train_rec)

    e = sub.add_parser("eval", help="lexicon Top-1 accuracy of a recognizer")
    e.add_argument("--model", required=True)
    e.add_argument("--test", required=True)
    e.add_argument("--lexicon", required=True)
    e.add_argument("--out", help="optional per-path predictions CSV")
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("compositions", help="train one recognizer per training composition")
    c.add_argument("--user")
    c.add_argument("--synthetic")
    c.add_argument("--gan")
    c.add_argument("--test", required=True)
    c.add_argument("--lexicon", required=True)
    rec_flags(c)
    c.add_argument("--out", required=True, help="report CSV; table and figure written alongside")
    c.set_defaults(func=cmd_compositions)

    v = sub.add_parser("curve", help="log-log learning-curve slope")
    src = v.add_mutually_exclusive_group(required=True)
    src.add_argument("--in", dest="input", help="CSV with train_size,error[,series]")
    src.add_argument("--report", help="compositions report CSV")
    v.add_argument("--out", help="slopes CSV; points CSV and figure written alongside")
    v.set_defaults(func=cmd_curve)

    d = sub.add_parser("render", help="draw one path over the keyboard as SVG")
    d.add_argument("--in", dest="input", required=True)
    d.add_argument("--index", type=int, default=0)
    d.add_argument("--layout")
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"swipegan {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (SwipeError, OSError, RuntimeError, FloatingPointError) as exc:
        print(f"swipegan {args.command}: runtime error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
