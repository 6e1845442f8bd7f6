"""Command-line surface: ``kataback {train,build,decode,eval}``.

All text I/O is UTF-8 and newline-delimited.  Exit codes: 0 success (possibly
with per-line errors), 1 usage or config error, 2 resource or parse error.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import dataclass, field
from importlib.resources import files
from pathlib import Path

from . import decode as decode_mod
from . import models as models_mod
from . import training as training_mod
from .decode import DecodeOptions, ModelSet
from .fsm import KatabackError, SymbolTable, UnknownSymbolError, load_fsm, save_fsm
from .models import ResourceError, WORD_SEPARATOR


class ConfigError(KatabackError):
    """The pipeline configuration is unusable."""


_DATA = files("kataback") / "data"

_RESOURCE_KEYS = ("frequencies", "pronunciations", "sound_mapping", "spelling",
                  "stoplist", "names", "confusion", "glossary", "evalset")


@dataclass
class PipelineConfig:
    """Paths to every resource plus the tuning knobs, JSON-loadable."""

    frequencies: Path
    pronunciations: Path
    sound_mapping: Path
    spelling: Path
    stoplist: Path | None = None
    names: Path | None = None
    confusion: Path | None = None
    glossary: Path | None = None
    evalset: Path | None = None
    lexicon_limit: int | None = 50000
    max_span: int = 4
    em_max_iters: int = 100
    em_tol: float = 1e-6
    k: int = 5

    @classmethod
    def bundled(cls) -> "PipelineConfig":
        data = Path(str(_DATA))
        return cls(
            frequencies=data / "frequencies.tsv",
            pronunciations=data / "pronunciations.tsv",
            sound_mapping=data / "sound_mapping.tsv",
            spelling=data / "spelling.tsv",
            stoplist=data / "stoplist.tsv",
            names=data / "names.tsv",
            confusion=data / "confusion.tsv",
            glossary=data / "glossary.tsv",
            evalset=data / "evalset.tsv",
        )

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be an object")
        config = cls.bundled()
        base = path.parent
        for key, value in raw.items():
            if key in _RESOURCE_KEYS:
                setattr(config, key, base / value if value is not None else None)
            elif key in ("lexicon_limit", "max_span", "em_max_iters", "k"):
                setattr(config, key, None if value is None else int(value))
            elif key == "em_tol":
                config.em_tol = float(value)
            else:
                raise ConfigError(f"{path}: unknown config key {key!r}")
        if config.max_span is None or config.max_span < 1:
            raise ConfigError(f"{path}: max_span must be a positive integer")
        return config

    def load_model_set(self, with_ocr: bool = False) -> ModelSet:
        counts = models_mod.load_frequencies(self.frequencies)
        plex = models_mod.load_pronunciations(self.pronunciations)
        mapping = models_mod.load_sound_mapping(self.sound_mapping)
        spelling = models_mod.load_spelling(self.spelling)
        stoplist = models_mod.load_stoplist(self.stoplist) if self.stoplist else set()
        name_counts = models_mod.load_frequencies(self.names) if self.names else None
        confusion = None
        if with_ocr:
            if self.confusion is None:
                raise ConfigError("OCR decoding requested but no confusion table configured")
            confusion = models_mod.load_confusion(self.confusion)
        return ModelSet.build(
            counts, plex, mapping, spelling,
            stoplist=stoplist, lexicon_limit=self.lexicon_limit,
            name_counts=name_counts, confusion=confusion,
        )


def glyph_sequence(phrase: str) -> list[str]:
    """Katakana phrase to glyph list; whitespace is not a glyph."""
    return [ch for ch in phrase if not ch.isspace()]


def cmd_train(config: PipelineConfig, out_path, stream=None) -> int:
    stream = stream or sys.stdout
    if config.glossary is None:
        raise ConfigError("training requires a glossary path")
    plex = models_mod.load_pronunciations(config.pronunciations)
    spelling = models_mod.load_spelling(config.spelling)
    pronouncer = models_mod.build_pronouncer(plex)
    writer = models_mod.build_katakana_writer(spelling)
    reader = training_mod.katakana_reader(writer)
    glossary = training_mod.load_glossary(config.glossary)
    report = training_mod.bootstrap_corpus(glossary, pronouncer, reader)
    table, stats = training_mod.run_em(
        report.corpus, max_span=config.max_span,
        max_iters=config.em_max_iters, tol=config.em_tol,
    )
    models_mod.save_sound_mapping(table, out_path)
    print(f"glossary entries: {len(glossary)} "
          f"(dropped in bootstrap: {len(report.dropped)})", file=stream)
    print(f"em iterations: {stats.iterations}", file=stream)
    print(f"final log-likelihood: {stats.log_likelihood:.6f}", file=stream)
    print(f"skipped unalignable pairs: {len(stats.skipped)}", file=stream)
    print(f"wrote {out_path}", file=stream)
    return 0


_MODEL_FILES = {
    "word_model": "word_model.fsm",
    "name_model": "name_model.fsm",
    "pronouncer": "pronouncer.fsm",
    "sound_mapper": "sound_mapper.fsm",
    "katakana_writer": "katakana_writer.fsm",
    "ocr_model": "ocr_model.fsm",
}


def save_model_set(models: ModelSet, out_dir) -> list[str]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    models.word_table.save(out_dir / "words.syms")
    models.phoneme_table.save(out_dir / "phonemes.syms")
    models.sound_table.save(out_dir / "sounds.syms")
    models.glyph_table.save(out_dir / "glyphs.syms")
    written = ["words.syms", "phonemes.syms", "sounds.syms", "glyphs.syms"]
    for attr, filename in _MODEL_FILES.items():
        machine = getattr(models, attr)
        if machine is None:
            continue
        save_fsm(machine, out_dir / filename)
        written.append(filename)
    return written


def load_model_set(model_dir) -> ModelSet:
    model_dir = Path(model_dir)
    words = SymbolTable.load(model_dir / "words.syms", name="words")
    phonemes = SymbolTable.load(model_dir / "phonemes.syms", name="english phonemes")
    sounds = SymbolTable.load(model_dir / "sounds.syms", name="japanese sounds")
    glyphs = SymbolTable.load(model_dir / "glyphs.syms", name="katakana")
    tables = {
        "word_model": (words, words),
        "name_model": (words, words),
        "pronouncer": (words, phonemes),
        "sound_mapper": (phonemes, sounds),
        "katakana_writer": (sounds, glyphs),
        "ocr_model": (glyphs, glyphs),
    }
    loaded = {}
    for attr, filename in _MODEL_FILES.items():
        fsm_path = model_dir / filename
        if fsm_path.exists():
            isyms, osyms = tables[attr]
            loaded[attr] = load_fsm(fsm_path, isyms, osyms)
        elif attr in ("name_model", "ocr_model"):
            loaded[attr] = None
        else:
            raise ResourceError(f"{fsm_path}: missing model file")
    return ModelSet(**loaded)


def cmd_build(config: PipelineConfig, out_dir, stream=None) -> int:
    stream = stream or sys.stdout
    with_ocr = config.confusion is not None
    models = config.load_model_set(with_ocr=with_ocr)
    written = save_model_set(models, out_dir)
    for name in written:
        print(f"wrote {Path(out_dir) / name}", file=stream)
    return 0


def cmd_decode(config: PipelineConfig, lines: list[bytes], k: int,
               name_mode: bool = False, use_ocr: bool = False,
               stream=None, err_stream=None) -> int:
    stream = stream or sys.stdout
    err_stream = err_stream or sys.stderr
    models = config.load_model_set(with_ocr=use_ocr)
    opts = DecodeOptions(k=k, use_ocr=use_ocr, name_mode=name_mode)
    succeeded = 0
    attempted = 0
    for lineno, raw in enumerate(lines, 1):
        try:
            line = raw.decode("utf-8").strip()
        except UnicodeDecodeError as exc:
            attempted += 1
            print(f"line {lineno}: invalid UTF-8: {exc}", file=err_stream)
            continue
        if not line or line.startswith("#"):
            continue
        attempted += 1
        glyphs = glyph_sequence(line)
        print(f"# input: {line}", file=stream)
        try:
            candidates = decode_mod.back_transliterate(glyphs, models, opts)
        except UnknownSymbolError as exc:
            print(f"line {lineno}: {exc}", file=err_stream)
            continue
        if candidates:
            for rank, cand in enumerate(candidates, 1):
                print(f"{rank}\t{cand.probability!r}\t{' '.join(cand.words)}", file=stream)
            succeeded += 1
        else:
            print("0\t0\t<no-analysis>", file=stream)
            fallback = decode_mod.fallback_analysis(glyphs, models, opts)
            sounds = " ".join(fallback.sounds) if fallback.sounds else "?"
            phonemes = " ".join(fallback.phonemes) if fallback.phonemes else "?"
            print(f"# fallback: sounds=({sounds}) phonemes=({phonemes})", file=stream)
            succeeded += 1  # a clean no-analysis is still a processed line
    if attempted and not succeeded:
        return 2
    return 0


@dataclass
class EvalItem:
    katakana: str
    reference: str
    top1: str | None
    verdict: str  # "correct" | "in-top-k" | "incorrect" | "no-analysis"


@dataclass
class EvalReport:
    total: int = 0
    top1_correct: int = 0
    topk_correct: int = 0
    items: list[EvalItem] = field(default_factory=list)

    @property
    def top1_accuracy(self) -> float:
        return self.top1_correct / self.total if self.total else 0.0

    @property
    def topk_accuracy(self) -> float:
        return self.topk_correct / self.total if self.total else 0.0


def _normalize(text: str) -> str:
    return " ".join(text.casefold().split())


def run_eval(models: ModelSet, testset: list[tuple[str, str]], opts: DecodeOptions,
             corrupt=None) -> EvalReport:
    report = EvalReport()
    for katakana, reference in testset:
        glyphs = glyph_sequence(katakana)
        if corrupt is not None:
            glyphs = corrupt(glyphs)
        candidates = decode_mod.back_transliterate(glyphs, models, opts)
        answers = [_normalize(" ".join(c.words)) for c in candidates]
        want = _normalize(reference)
        if not answers:
            verdict = "no-analysis"
        elif answers[0] == want:
            verdict = "correct"
        elif want in answers:
            verdict = "in-top-k"
        else:
            verdict = "incorrect"
        report.total += 1
        report.top1_correct += verdict == "correct"
        report.topk_correct += verdict in ("correct", "in-top-k")
        report.items.append(EvalItem(
            katakana=katakana, reference=reference,
            top1=answers[0] if answers else None, verdict=verdict,
        ))
    return report


def make_corruptor(confusion: models_mod.ConfusionTable, rate: float, seed: int):
    """Glyph-wise corruption at ``rate`` using the table's non-identity entries."""
    rng = random.Random(seed)

    def corrupt(glyphs: list[str]) -> list[str]:
        out = []
        for glyph in glyphs:
            alternatives = [(g, p) for g, p in confusion.rows.get(glyph, [])
                            if g != glyph]
            if alternatives and rng.random() < rate:
                total = sum(p for _, p in alternatives)
                pick = rng.random() * total
                for g, p in alternatives:
                    pick -= p
                    if pick <= 0:
                        out.append(g)
                        break
                else:
                    out.append(alternatives[-1][0])
            else:
                out.append(glyph)
        return out

    return corrupt


def load_testset(path) -> list[tuple[str, str]]:
    testset = [(kata, eng) for _, (kata, eng) in models_mod.read_tsv(path, 2)]
    if not testset:
        raise ResourceError(f"{path}: test set is empty")
    return testset


def _print_report(label: str, report: EvalReport, stream) -> None:
    for item in report.items:
        got = item.top1 if item.top1 is not None else "<no-analysis>"
        print(f"  {item.verdict:<12} {item.katakana}\t{item.reference}\t-> {got}",
              file=stream)
    print(f"{label}: top-1 {report.top1_correct}/{report.total} "
          f"({report.top1_accuracy:.3f}), top-k {report.topk_correct}/{report.total} "
          f"({report.topk_accuracy:.3f})", file=stream)


def cmd_eval(config: PipelineConfig, testset_path, k: int,
             strip_separators: bool = False, noise_rate: float | None = None,
             seed: int = 0, name_mode: bool = False, stream=None) -> int:
    stream = stream or sys.stdout
    testset = load_testset(testset_path)
    use_ocr = noise_rate is not None and noise_rate > 0.0
    models = config.load_model_set(with_ocr=use_ocr or config.confusion is not None)
    opts = DecodeOptions(k=k, name_mode=name_mode, use_ocr=False)

    report = run_eval(models, testset, opts)
    _print_report("clean", report, stream)

    if strip_separators:
        stripped = [(kata.replace(WORD_SEPARATOR, ""), eng) for kata, eng in testset]
        stripped_report = run_eval(models, stripped, opts)
        _print_report("separators stripped", stripped_report, stream)
        unchanged = stripped_report.top1_correct == report.top1_correct
        print(f"top-1 accuracy unchanged without separators: {'yes' if unchanged else 'no'}",
              file=stream)

    if noise_rate is not None:
        if config.confusion is None:
            raise ConfigError("--noise-rate needs a confusion table in the config")
        confusion = models_mod.load_confusion(config.confusion)
        corrupt = make_corruptor(confusion, noise_rate, seed)
        # Rate zero corrupts nothing, so score it exactly like the clean run.
        noisy_opts = DecodeOptions(k=k, name_mode=name_mode, use_ocr=noise_rate > 0.0)
        noisy_report = run_eval(models, testset, noisy_opts, corrupt=corrupt)
        _print_report(f"ocr noise {noise_rate} (seed {seed})", noisy_report, stream)

    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kataback",
                     description="Back-transliterate katakana phrases to English.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", type=Path, default=None,
                       help="pipeline config JSON (default: bundled resources)")

    p_train = sub.add_parser("train", help="EM-train the sound mapping table")
    add_common(p_train)
    p_train.add_argument("--out", type=Path, required=True, help="output table TSV")

    p_build = sub.add_parser("build", help="build and serialize all models")
    add_common(p_build)
    p_build.add_argument("--out", type=Path, required=True, help="output directory")

    p_decode = sub.add_parser("decode", help="decode katakana phrases to ranked English")
    add_common(p_decode)
    p_decode.add_argument("--k", type=int, default=None, help="candidates per input")
    p_decode.add_argument("--names", action="store_true", help="rescore with the name model")
    p_decode.add_argument("--ocr", action="store_true", help="decode through the OCR model")
    p_decode.add_argument("input", nargs="?", type=Path, default=None,
                          help="input file of katakana phrases (default: stdin)")

    p_eval = sub.add_parser("eval", help="score a katakana/English test set")
    add_common(p_eval)
    p_eval.add_argument("--testset", type=Path, default=None,
                        help="test set TSV (default: bundled desk set)")
    p_eval.add_argument("--k", type=int, default=None)
    p_eval.add_argument("--names", action="store_true")
    p_eval.add_argument("--strip-separators", action="store_true",
                        help="also score with all word separators removed")
    p_eval.add_argument("--noise-rate", type=float, default=None,
                        help="also score with glyphs corrupted at this rate")
    p_eval.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = (PipelineConfig.from_file(args.config) if args.config
                  else PipelineConfig.bundled())
        if args.command == "train":
            return cmd_train(config, args.out)
        if args.command == "build":
            return cmd_build(config, args.out)
        if args.command == "decode":
            if args.input is not None:
                data = Path(args.input).read_bytes()
            else:
                data = sys.stdin.buffer.read()
            lines = data.split(b"\n")
            return cmd_decode(config, lines, k=args.k or config.k,
                              name_mode=args.names, use_ocr=args.ocr)
        if args.command == "eval":
            testset = args.testset or config.evalset
            if testset is None:
                raise ConfigError("eval needs --testset or an evalset in the config")
            return cmd_eval(config, testset, k=args.k or config.k,
                            strip_separators=args.strip_separators,
                            noise_rate=args.noise_rate, seed=args.seed,
                            name_mode=args.names)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"kataback: config error: {exc}", file=sys.stderr)
        return 1
    except (ResourceError, OSError) as exc:
        print(f"kataback: resource error: {exc}", file=sys.stderr)
        return 2
    except KatabackError as exc:
        print(f"kataback: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
