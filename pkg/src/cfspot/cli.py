"""Command-line entry point: synth / spot / eval / match / bench."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import DEFAULT_CONFIG, SpotConfig
from .errors import CFSpotError, ConfigError
from .structures import DEFAULT_ALPHABET, DecoderParams

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2

# flag name -> SpotConfig field, shared by every subcommand that takes thresholds
_THRESHOLD_FLAGS = {
    "box_threshold": float,
    "min_area": int,
    "box_expand": float,
    "box_expand_long": float,
    "spot_threshold": float,
    "char_threshold": float,
    "size_threshold": float,
    "confidence": float,
    "reject_threshold": float,
    "stride": int,
    "long_side": int,
}


class _UsageError(Exception):
    pass


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with SpotConfig fields; flags override it")
    for name, typ in _THRESHOLD_FLAGS.items():
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None)


def _load_config(args) -> SpotConfig:
    overrides = {k: getattr(args, k, None) for k in _THRESHOLD_FLAGS}
    weights = getattr(args, "weights", None)
    if weights is not None:
        overrides["weights"] = weights
    if args.config:
        return SpotConfig.load(args.config, **overrides)
    return DEFAULT_CONFIG.replace(**{k: v for k, v in overrides.items() if v is not None})


def _alphabet(weights) -> tuple[str, ...]:
    if weights is None:
        return DEFAULT_ALPHABET
    from .tensorio import read_decoder

    return read_decoder(weights).alphabet


# ---- subcommands ---------------------------------------------------------------


def cmd_synth(args) -> int:
    from .gtsynth import ResponseModel, synth_scene, synthetic_vocabulary
    from .tensorio import Lexicon, write_annotations, write_decoder, write_lexicon, write_tensor

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    scene = synth_scene(
        rng,
        width=args.width,
        height=args.height,
        response=None if args.clean else ResponseModel(),
    )
    params = DecoderParams.identity(args.channels)
    write_tensor(scene.region, out / "region.cft")
    write_tensor(scene.affinity, out / "affinity.cft")
    write_tensor(scene.features(params, support=args.support), out / "features.cft")
    write_decoder(params, out / "decoder")
    image_id = args.image_id or f"synth_{args.seed}"
    write_annotations([scene.annotation(image_id)], out / "annotations.jsonl")
    pool = synthetic_vocabulary(args.lexicon_size * 2, seed=args.seed)
    pool = [w for w in pool if w not in {s.text.upper() for s in scene.words}]
    write_lexicon(scene.strong_lexicon(pool, rng, args.lexicon_size), out / "lexicon.txt")
    print(f"wrote scene {image_id} with {len(scene.words)} words to {out}", file=sys.stderr)
    return EXIT_OK


def cmd_spot(args) -> int:
    from .lexicon import LexiconIndex, choose
    from .pipeline import spot
    from .tensorio import read_decoder, read_lexicon, read_tensor, write_results

    cfg = _load_config(args)
    if cfg.weights is None:
        raise _UsageError("spot needs --weights DIR (or 'weights' in the config file)")
    params = read_decoder(cfg.weights, cfg.confidence)
    region = read_tensor(args.region)
    affinity = read_tensor(args.affinity)
    features = read_tensor(args.features)
    boxes = spot(region, affinity, features, params, cfg, mode=args.mode)
    if args.lexicon:
        index = LexiconIndex(read_lexicon(args.lexicon), params.alphabet)
        for i, b in enumerate(boxes):
            m = choose(index.costs(b.char_probs, b.transcription), index.words, b.transcription, cfg.reject_threshold)
            boxes[i] = b.with_(transcription=m.text)
    write_results({args.image_id: boxes}, args.out)
    print(f"{len(boxes)} boxes", file=sys.stderr)
    return EXIT_OK


def cmd_eval(args) -> int:
    from .evalkit import evaluate
    from .tensorio import read_annotations, read_lexicon, read_results

    cfg = _load_config(args)
    preds = read_results(args.pred)
    gts = read_annotations(args.gt)
    lexicons = {"none": None}
    if args.lexicon:
        lexicons[args.lexicon_name] = read_lexicon(args.lexicon, args.lexicon_name)
    report = evaluate(
        preds,
        gts,
        lexicons,
        iou_thr=args.iou,
        alphabet=_alphabet(cfg.weights),
        reject_threshold=cfg.reject_threshold,
        unmatched=args.unmatched,
    )
    if args.csv:
        Path(args.csv).write_text(report.to_csv(), encoding="utf-8")
    if args.format == "csv":
        sys.stdout.write(report.to_csv())
    else:
        sys.stdout.write(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_match(args) -> int:
    from .lexicon import LexiconIndex, choose, inflate_lexicon
    from .tensorio import read_lexicon, read_results

    cfg = _load_config(args)
    lex = read_lexicon(args.lexicon)
    if args.inflate:
        if args.pool is None or args.seed is None:
            raise _UsageError("--inflate needs --pool and --seed")
        lex = inflate_lexicon(lex, read_lexicon(args.pool), args.inflate, args.seed)
    index = LexiconIndex(lex, _alphabet(cfg.weights))
    rows = []
    for image_id, boxes in read_results(args.results).items():
        for k, b in enumerate(boxes):
            m = choose(index.costs(b.char_probs, b.transcription), index.words, b.transcription, cfg.reject_threshold)
            rows.append(
                {
                    "image_id": image_id,
                    "box": k,
                    "original": m.original,
                    "matched": m.matched,
                    "cost": m.cost if np.isfinite(m.cost) else None,
                    "is_matched": m.is_matched,
                }
            )
    text = "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_bench(args) -> int:
    from .bench import bench_pipeline, headline, records_to_csv

    cfg = _load_config(args)
    records = bench_pipeline(
        args.scales, reps=args.reps, seed=args.seed, warmup=args.warmup, channels=args.channels, cfg=cfg
    )
    text = records_to_csv(records)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    med = headline(records, 2880, cfg.stride)
    if med is not None:
        print(f"total median at 2880 px long side: {med:.2f} ms (soft target 15 ms)", file=sys.stderr)
    return EXIT_OK


# ---- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cfspot", description="Context-free text spotting post-processing.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("synth", help="render a synthetic scene with maps, features and annotations")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--width", type=int, default=480, help="heat-map width in cells")
    p.add_argument("--height", type=int, default=360, help="heat-map height in cells")
    p.add_argument("--channels", type=int, default=128, help="feature channels")
    p.add_argument("--support", choices=("point", "quad"), default="quad")
    p.add_argument("--clean", action="store_true", help="write ground-truth Gaussians instead of response maps")
    p.add_argument("--lexicon-size", type=int, default=100)
    p.add_argument("--image-id")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("spot", help="run the spotting pipeline on stored maps and features")
    p.add_argument("--region", required=True)
    p.add_argument("--affinity", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--weights", help="decoder directory (w.cft, b.cft, alphabet.txt)")
    p.add_argument("--lexicon", help="word list; decodes are replaced by their lexicon match")
    p.add_argument("--out", required=True, help="results JSONL")
    p.add_argument("--image-id", default="image")
    p.add_argument("--mode", choices=("hybrid", "peak", "label"), default="hybrid")
    _add_config_flags(p)
    p.set_defaults(func=cmd_spot)

    p = sub.add_parser("eval", help="score results against annotations")
    p.add_argument("--pred", required=True, help="results JSONL")
    p.add_argument("--gt", required=True, help="annotations JSONL")
    p.add_argument("--lexicon", help="word list used for every image")
    p.add_argument("--lexicon-name", default="strong", choices=("strong", "weak", "generic", "custom"))
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--unmatched", choices=("keep", "drop"), default="keep")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--csv", help="also write the CSV table here")
    p.add_argument("--weights", help="decoder directory; its alphabet indexes char_probs")
    _add_config_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("match", help="match decoded words in a results file to a lexicon")
    p.add_argument("--results", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--pool", help="word pool for --inflate")
    p.add_argument("--inflate", type=int, default=0, help="add this many pool words to the lexicon")
    p.add_argument("--seed", type=int, help="required with --inflate")
    p.add_argument("--out", help="MatchResult JSONL (default stdout)")
    p.add_argument("--weights", help="decoder directory; its alphabet indexes char_probs")
    _add_config_flags(p)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("bench", help="time the pipeline stages across input scales")
    p.add_argument("--scales", type=int, nargs="+", default=[640, 1280, 1920, 2880], help="image long sides")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--warmup", type=int, default=3)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--channels", type=int, default=32)
    p.add_argument("--out", help="CSV path (default stdout)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help exits 0, bad usage exits 2
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (_UsageError, ConfigError) as exc:
        print(f"cfspot {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CFSpotError, OSError, ValueError, KeyError) as exc:
        print(f"cfspot {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
