"""Command-line front end: train, parse, eval, stats, bench, pareto.

Exit codes are a stable scripting contract: 0 success, 1 usage errors
(including missing input paths and flag/model mismatches), 2 data or
validation errors, 3 I/O errors. Configuration precedence is flags over
config file over built-in defaults; the config file is flat ``key=value``
text with the same names as the long flags (dashes become underscores).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import bench
from .conllu import read_conllu_file, treebank_stats, write_conllu, write_conllu_file
from .errors import (
    AlignmentError,
    ConlluParseError,
    DepkitError,
    MeterError,
    ModelFormatError,
    TreeValidationError,
)
from .evaluate import round_half_up, score
from .model import TrainConfig, load_model, parse_corpus, save_model, train

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_IO = 3


class UsageError(DepkitError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise UsageError(message)


_DEFAULTS = {
    "epochs": 20,
    "patience": 10,
    "bits": 22,
    "seed": 0,
    "punct": "include",
    "single_root": True,
    "runs": 5,
    "batch_size": 256,
    "meter": "constant",
    "rated_watts": 65.0,
    "baseline_s": 5.0,
}


def _load_config_file(path: str) -> dict[str, str]:
    cfg = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read config file {path}: {e}") from e
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"config line {line_no}: expected key=value")
        key, _, value = line.partition("=")
        cfg[key.strip().replace("-", "_")] = value.strip()
    return cfg


_BOOLS = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def _setting(args, cfg: dict[str, str], name: str):
    """flags > config file > defaults; flags parse with None defaults so an
    unset flag falls through."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in cfg:
        raw = cfg[name]
        default = _DEFAULTS.get(name)
        if isinstance(default, bool):
            try:
                return _BOOLS[raw.lower()]
            except KeyError:
                raise UsageError(f"config {name}: expected a boolean, got {raw!r}")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    return _DEFAULTS.get(name)


def _require_file(path: str | None, what: str) -> str:
    if not path:
        raise UsageError(f"missing required {what}")
    if not Path(path).is_file():
        raise UsageError(f"{what} does not exist: {path}")
    return path


def _meter_config(args, cfg) -> bench.MeterConfig:
    meter = _setting(args, cfg, "meter")
    if meter == "constant":
        return bench.MeterConfig(
            source="constant_power_model",
            rated_watts=float(_setting(args, cfg, "rated_watts")),
        )
    if meter == "rapl":
        paths = getattr(args, "counter_path", None) or (
            cfg.get("counter_path", "").split(":") if cfg.get("counter_path") else []
        )
        paths = [p for p in paths if p]
        if not paths:
            raise UsageError("--meter rapl needs at least one --counter-path")
        return bench.MeterConfig(
            source="hardware_counter",
            counter_paths=tuple(paths),
            counter_max_uj=bench.read_counter_max_uj(paths[0]),
            baseline_s=float(_setting(args, cfg, "baseline_s")),
        )
    raise UsageError(f"unknown meter {meter!r} (expected constant or rapl)")


def _size_axis(bits: int) -> str:
    return f"b{bits}"


def _cmd_train(args, cfg) -> int:
    train_path = _require_file(_setting(args, cfg, "train"), "training treebank")
    dev_path = _require_file(_setting(args, cfg, "dev"), "development treebank")
    paradigm = _setting(args, cfg, "paradigm")
    if not paradigm:
        raise UsageError("missing required --paradigm")
    model_out = _setting(args, cfg, "model")
    if not model_out:
        raise UsageError("missing required --model output path")

    train_sents = read_conllu_file(train_path)
    dev_sents = read_conllu_file(dev_path)
    config = TrainConfig(
        max_epochs=int(_setting(args, cfg, "epochs")),
        patience=int(_setting(args, cfg, "patience")),
        shuffle_seed=int(_setting(args, cfg, "seed")),
        feature_space_bits=int(_setting(args, cfg, "bits")),
    )
    meter_cfg = _meter_config(args, cfg)

    result = {}

    def task():
        result["report"] = train(
            train_sents,
            dev_sents,
            paradigm,
            config,
            progress=None if args.quiet else _print_epoch,
        )

    t0 = time.perf_counter()
    reading = bench.meter_energy(task, meter_cfg)
    train_time = time.perf_counter() - t0
    report = result["report"]
    save_model(report.model, model_out)

    record = {
        "system": paradigm,
        "size_axis": _size_axis(config.feature_space_bits),
        "treebank": Path(train_path).stem,
        "dev_las": round_half_up(report.best_dev_las),
        "best_epoch": report.best_epoch,
        "train_energy": reading.to_dict(),
        "train_time_s": train_time,
        "seed": config.shuffle_seed,
    }
    record_out = _setting(args, cfg, "record")
    if record_out:
        Path(record_out).write_text(json.dumps(record, indent=2) + "\n", encoding="utf-8")
    if not args.quiet:
        print(
            f"trained {paradigm} model: dev LAS {round_half_up(report.best_dev_las):.2f} "
            f"(epoch {report.best_epoch}), {reading.joules:.1f} J, {train_time:.1f} s"
        )
    return EXIT_OK


def _print_epoch(epoch: int, las: float, best: float) -> None:
    print(f"epoch {epoch}: dev LAS {las:.2f} (best {best:.2f})")


def _cmd_parse(args, cfg) -> int:
    model_path = _require_file(_setting(args, cfg, "model"), "model file")
    input_path = _require_file(_setting(args, cfg, "input"), "input treebank")
    model = load_model(model_path)
    if args.paradigm and args.paradigm != model.paradigm:
        raise UsageError(
            f"model is {model.paradigm!r} but --paradigm says {args.paradigm!r}"
        )
    sentences = read_conllu_file(input_path)
    single_root = _setting(args, cfg, "single_root")
    trees = parse_corpus(model, sentences, single_root=single_root)
    parsed = [s.with_tree(t) for s, t in zip(sentences, trees)]
    output = _setting(args, cfg, "output")
    if output:
        write_conllu_file(output, parsed)
    else:
        sys.stdout.write(write_conllu(parsed))
    return EXIT_OK


def _cmd_eval(args, cfg) -> int:
    gold_path = _require_file(args.gold, "gold treebank")
    pred_path = _require_file(args.pred, "predicted treebank")
    policy = (
        "exclude_upos_punct"
        if _setting(args, cfg, "punct") in ("exclude", "exclude_upos_punct")
        else "include"
    )
    result = score(read_conllu_file(gold_path), read_conllu_file(pred_path), policy)
    print(f"UAS {round_half_up(result.uas):.2f} LAS {round_half_up(result.las):.2f}")
    if args.tsv:
        Path(args.tsv).write_text(result.render_tsv() + "\n", encoding="utf-8")
    if args.json:
        Path(args.json).write_text(result.render_json() + "\n", encoding="utf-8")
    return EXIT_OK


def _cmd_stats(args, cfg) -> int:
    input_path = _require_file(_setting(args, cfg, "input"), "input treebank")
    st = treebank_stats(read_conllu_file(input_path))
    print(f"sentences\t{st.sentence_count}")
    print(f"tokens\t{st.token_count}")
    print(f"avg_sentence_length\t{round_half_up(st.avg_sentence_length):.2f}")
    print(f"nonprojective_arc_pct\t{round_half_up(st.nonprojective_arc_pct):.2f}")
    print(f"avg_word_length\t{round_half_up(st.avg_word_length):.2f}")
    if args.json:
        Path(args.json).write_text(
            json.dumps(
                {
                    "sentences": st.sentence_count,
                    "tokens": st.token_count,
                    "avg_sentence_length": st.avg_sentence_length,
                    "nonprojective_arc_pct": st.nonprojective_arc_pct,
                    "avg_word_length": st.avg_word_length,
                }
            )
            + "\n",
            encoding="utf-8",
        )
    return EXIT_OK


def _cmd_bench(args, cfg) -> int:
    model_path = _require_file(_setting(args, cfg, "model"), "model file")
    input_path = _require_file(_setting(args, cfg, "input"), "input treebank")
    model = load_model(model_path)
    sentences = read_conllu_file(input_path)
    single_root = _setting(args, cfg, "single_root")

    predictions = {}

    def parse_batch(batch):
        trees = parse_corpus(model, batch, single_root=single_root)
        for s, t in zip(batch, trees):
            predictions[id(s)] = t
        return trees

    speed = bench.measure_speed(
        parse_batch,
        sentences,
        runs=int(_setting(args, cfg, "runs")),
        batch_size=int(_setting(args, cfg, "batch_size")),
        pin_to_core=not args.no_pin,
    )
    pred_sents = [s.with_tree(predictions[id(s)]) for s in sentences]
    result = score(sentences, pred_sents, "include")

    train_energy = None
    train_time = 0.0
    if args.train_record:
        rec = json.loads(Path(_require_file(args.train_record, "training record"))
                         .read_text(encoding="utf-8"))
        train_energy = bench.EnergyReading.from_dict(rec["train_energy"])
        train_time = rec.get("train_time_s", 0.0)

    record = bench.RunRecord(
        system=model.paradigm,
        size_axis=_size_axis(model.feature_space_bits),
        treebank=Path(input_path).stem,
        las=result.las,
        uas=result.uas,
        speed=speed,
        train_energy=train_energy,
        train_time_s=train_time,
    )
    out = _setting(args, cfg, "out")
    if out:
        out_path = Path(out)
        if out_path.is_dir() or out.endswith("/"):
            out_path.mkdir(parents=True, exist_ok=True)
            out_path = out_path / f"{record.record_id}.json"
        out_path.write_text(json.dumps(record.to_dict(), indent=2) + "\n",
                            encoding="utf-8")
    print(
        f"{record.record_id}: {speed.sents_per_sec_mean:.1f}±{speed.sents_per_sec_std:.1f} sent/s, "
        f"UAS {round_half_up(result.uas):.2f} LAS {round_half_up(result.las):.2f}"
    )
    return EXIT_OK


def _cmd_pareto(args, cfg) -> int:
    paths: list[Path] = []
    for spec_path in args.records:
        p = Path(spec_path)
        if p.is_dir():
            paths.extend(sorted(p.glob("*.json")))
        elif p.is_file():
            paths.append(p)
        else:
            raise UsageError(f"records path does not exist: {spec_path}")
    if not paths:
        raise UsageError("no record files found")
    records = [
        bench.RunRecord.from_dict(json.loads(p.read_text(encoding="utf-8")))
        for p in paths
    ]
    out_dir = _setting(args, cfg, "out_dir") or "."
    written = bench.emit_report(records, bench.build_fronts(records), out_dir)
    print("\n".join(f"{k}: {v}" for k, v in sorted(written.items())))
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="depkit", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--seed", type=int, help="shuffle seed (default 0)")
        p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("train", help="train a parser and meter the energy")
    common(p)
    p.add_argument("--paradigm", choices=("graph", "transition", "seqlab"))
    p.add_argument("--train", help="training treebank (CoNLL-U)")
    p.add_argument("--dev", help="held-out treebank for early stopping")
    p.add_argument("--model", help="output model path")
    p.add_argument("--record", help="output JSON with energy/time of this run")
    p.add_argument("--epochs", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--bits", type=int, help="feature space width (default 22)")
    p.add_argument("--meter", choices=("constant", "rapl"))
    p.add_argument("--rated-watts", type=float, dest="rated_watts")
    p.add_argument("--baseline-s", type=float, dest="baseline_s")
    p.add_argument("--counter-path", action="append", dest="counter_path",
                   help="cumulative microjoule counter file (repeatable)")

    p = sub.add_parser("parse", help="parse a treebank with a trained model")
    common(p)
    p.add_argument("--model")
    p.add_argument("--input")
    p.add_argument("--output", help="output path (default: stdout)")
    p.add_argument("--paradigm", choices=("graph", "transition", "seqlab"),
                   help="assert the model's paradigm")
    p.add_argument("--multi-root", dest="single_root", action="store_false",
                   default=None, help="allow several root children")

    p = sub.add_parser("eval", help="attachment scores of pred against gold")
    common(p)
    p.add_argument("gold")
    p.add_argument("pred")
    p.add_argument("--punct", choices=("include", "exclude"))
    p.add_argument("--tsv", help="write one-line TSV uas/las/tokens here")
    p.add_argument("--json", help="write a JSON object here")

    p = sub.add_parser("stats", help="treebank statistics")
    common(p)
    p.add_argument("--input")
    p.add_argument("--json", help="write a JSON object here")

    p = sub.add_parser("bench", help="single-core parsing speed of a model")
    common(p)
    p.add_argument("--model")
    p.add_argument("--input")
    p.add_argument("--runs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--no-pin", action="store_true",
                   help="skip pinning the process to one core")
    p.add_argument("--train-record", dest="train_record",
                   help="merge energy/time from a train record JSON")
    p.add_argument("--out", help="write the run record JSON here (file or dir)")
    p.add_argument("--multi-root", dest="single_root", action="store_false",
                   default=None)

    p = sub.add_parser("pareto", help="fronts and report files from run records")
    common(p)
    p.add_argument("records", nargs="+", help="record JSON files or directories")
    p.add_argument("--out-dir", dest="out_dir")

    return parser


_COMMANDS = {
    "train": _cmd_train,
    "parse": _cmd_parse,
    "eval": _cmd_eval,
    "stats": _cmd_stats,
    "bench": _cmd_bench,
    "pareto": _cmd_pareto,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _load_config_file(args.config) if args.config else {}
        return _COMMANDS[args.command](args, cfg)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ConlluParseError, TreeValidationError, AlignmentError,
            ModelFormatError, MeterError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
