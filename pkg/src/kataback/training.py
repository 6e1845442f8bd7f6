"""Learn the English-sound to Japanese-sound mapping table from paired data.

An alignment of a phoneme sequence e (length m) with a sound sequence j
(length n) gives every English sound a contiguous, non-empty span of Japanese
sounds, in order and with no crossings, so that the spans tile j exactly.
There is no swallowing: m > n means no alignment exists and the pair is
skipped.  Expected span counts are accumulated with a forward-backward pass
over the alignment lattice, which is exactly equivalent to enumerating the
alignments but stays polynomial.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from .fsm import KatabackError, Wfst, best_path, compose, invert, linear_acceptor
from .models import (
    JAPANESE_PAUSE,
    PAUSE,
    ResourceError,
    SoundMappingTable,
    read_tsv,
)

log = logging.getLogger(__name__)

DEFAULT_MAX_SPAN = 4


class TrainingError(KatabackError):
    """Training could not proceed (e.g. nothing aligned)."""


@dataclass
class SoundPairCorpus:
    """Paired (English phoneme sequence, Japanese sound sequence) data."""

    pairs: list[tuple[tuple[str, ...], tuple[str, ...]]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass
class EmStats:
    iterations: int
    log_likelihood: float
    skipped: list[tuple[tuple[str, ...], tuple[str, ...]]]
    likelihood_history: list[float]


def alignment_count(e: tuple[str, ...], j: tuple[str, ...],
                    max_span: int | None = DEFAULT_MAX_SPAN) -> int:
    """Number of valid alignments of e with j.

    With an unbounded span this is C(n-1, m-1) for m <= n and 0 otherwise.
    """
    if max_span is not None and max_span < 1:
        raise ValueError("max_span must be >= 1")
    m, n = len(e), len(j)
    span = n if max_span is None else max_span
    # ways[t] = number of alignments of the first i English sounds with the
    # first t Japanese sounds, rolled over i.
    ways = [0] * (n + 1)
    ways[0] = 1
    for _ in range(m):
        nxt = [0] * (n + 1)
        for t in range(1, n + 1):
            lo = max(0, t - span)
            nxt[t] = sum(ways[lo:t])
        ways = nxt
    return ways[n]


def _spans(j: tuple[str, ...], start: int, span: int) -> tuple[str, ...]:
    return j[start:start + span]


def _expected_counts(e, j, theta, max_span, counts) -> float:
    """Accumulate posterior span counts for one pair; returns the pair's
    total alignment score under theta (the inside value)."""
    m, n = len(e), len(j)
    # forward[i][t]: score of aligning e[:i] with j[:t].
    forward = [[0.0] * (n + 1) for _ in range(m + 1)]
    forward[0][0] = 1.0
    for i in range(1, m + 1):
        row_theta = theta[e[i - 1]]
        for t in range(i, n + 1):
            total = 0.0
            for span in range(1, min(max_span, t) + 1):
                prev = forward[i - 1][t - span]
                if prev:
                    prob = row_theta.get(_spans(j, t - span, span))
                    if prob:
                        total += prev * prob
            forward[i][t] = total
    inside = forward[m][n]
    if inside <= 0.0:
        return 0.0
    backward = [[0.0] * (n + 1) for _ in range(m + 1)]
    backward[m][n] = 1.0
    for i in range(m - 1, -1, -1):
        row_theta = theta[e[i]]
        for t in range(i, n + 1):
            total = 0.0
            for span in range(1, min(max_span, n - t) + 1):
                nxt = backward[i + 1][t + span]
                if nxt:
                    prob = row_theta.get(_spans(j, t, span))
                    if prob:
                        total += nxt * prob
            backward[i][t] = total
    for i in range(1, m + 1):
        phoneme = e[i - 1]
        row_theta = theta[phoneme]
        row_counts = counts.setdefault(phoneme, {})
        for t in range(i, n + 1):
            after = backward[i][t]
            if not after:
                continue
            for span in range(1, min(max_span, t) + 1):
                before = forward[i - 1][t - span]
                if not before:
                    continue
                seq = _spans(j, t - span, span)
                prob = row_theta.get(seq)
                if prob:
                    row_counts[seq] = row_counts.get(seq, 0.0) + before * prob * after / inside
    return inside


def _candidate_spans(pairs, max_span):
    """theta support: every span of every j that some alignment could use."""
    theta: dict[str, dict[tuple[str, ...], float]] = {}
    for e, j in pairs:
        n = len(j)
        for i, phoneme in enumerate(e):
            row = theta.setdefault(phoneme, {})
            # e[i] can cover j[t-span:t] only if the prefix and suffix fit.
            for t in range(i + 1, n + 1):
                remaining_e = len(e) - i - 1
                for span in range(1, min(max_span, t - i) + 1):
                    if n - t >= remaining_e:
                        row[_spans(j, t - span, span)] = 1.0
    return theta


def run_em(corpus: SoundPairCorpus, max_span: int = DEFAULT_MAX_SPAN,
           max_iters: int = 100, tol: float = 1e-6) -> tuple[SoundMappingTable, EmStats]:
    """EM over alignment lattices; returns the mapping table and run statistics.

    Iteration 1 weights each pair's alignments uniformly (theta starts flat at
    1, so forward scores count alignments); later iterations weight them by
    the product of their span probabilities, renormalized per pair.
    """
    usable: list[tuple[tuple[str, ...], tuple[str, ...]]] = []
    skipped: list[tuple[tuple[str, ...], tuple[str, ...]]] = []
    for e, j in corpus.pairs:
        if not e or not j or alignment_count(e, j, max_span) == 0:
            skipped.append((e, j))
        else:
            usable.append((e, j))
    for e, j in skipped:
        log.warning("skipping unalignable pair: (%s) / (%s)", " ".join(e), " ".join(j))
    if not usable:
        listing = "; ".join(f"({' '.join(e)}) / ({' '.join(j)})" for e, j in skipped)
        raise TrainingError(f"no alignable pairs in corpus; skipped: {listing}")

    theta = _candidate_spans(usable, max_span)
    history: list[float] = []
    iterations = 0
    for iteration in range(1, max_iters + 1):
        counts: dict[str, dict[tuple[str, ...], float]] = {}
        loglik = 0.0
        for e, j in usable:
            inside = _expected_counts(e, j, theta, max_span, counts)
            if inside <= 0.0:
                raise TrainingError(
                    f"pair became unalignable during EM: ({' '.join(e)}) / ({' '.join(j)})"
                )
            loglik += math.log(inside)
        new_theta = {}
        for phoneme, row in counts.items():
            total = sum(row.values())
            new_theta[phoneme] = {seq: c / total for seq, c in row.items()}
        delta = 0.0
        for phoneme, row in new_theta.items():
            old_row = theta.get(phoneme, {})
            for seq, prob in row.items():
                delta = max(delta, abs(prob - old_row.get(seq, 0.0)))
        theta = new_theta
        iterations = iteration
        # The first pass scores alignments with flat theta, so its "likelihood"
        # is just the alignment count; only proper iterations are reported.
        if iteration > 1:
            history.append(loglik)
        if iteration > 1 and delta < tol:
            break

    rows = {
        phoneme: sorted(row.items(), key=lambda item: (-item[1], item[0]))
        for phoneme, row in theta.items()
    }
    table = SoundMappingTable(rows={p: list(r) for p, r in sorted(rows.items())})
    table.validate(trained=True, tol=1e-6)
    stats = EmStats(
        iterations=iterations,
        log_likelihood=history[-1] if history else float("nan"),
        skipped=skipped,
        likelihood_history=history,
    )
    return table, stats


def em_train(corpus: SoundPairCorpus, max_span: int = DEFAULT_MAX_SPAN,
             max_iters: int = 100, tol: float = 1e-6) -> SoundMappingTable:
    """Train the sound-mapping table; see :func:`run_em` for the knobs."""
    table, _ = run_em(corpus, max_span=max_span, max_iters=max_iters, tol=tol)
    return table


def load_glossary(path) -> list[tuple[str, str]]:
    entries = []
    for _, (english, katakana) in read_tsv(path, 2):
        entries.append((english, katakana))
    if not entries:
        raise ResourceError(f"{path}: glossary is empty")
    return entries


@dataclass
class BootstrapReport:
    corpus: SoundPairCorpus
    dropped: list[tuple[str, str, str]]  # (english, katakana, reason)


def bootstrap_corpus(glossary: list[tuple[str, str]], pronouncer: Wfst,
                     katakana_reader: Wfst) -> BootstrapReport:
    """Convert glossary entries to sound sequence pairs with best-path reads.

    English words are pronounced one at a time (best path each) and joined
    with PAUSE exactly when the katakana side carries a word separator, so
    that the two sides of a pair agree about pauses.  Entries that fail either
    conversion are dropped and reported.
    """
    word_table = pronouncer.isyms
    glyph_table = katakana_reader.isyms
    pairs: list[tuple[tuple[str, ...], tuple[str, ...]]] = []
    dropped: list[tuple[str, str, str]] = []
    pron_cache: dict[str, tuple[str, ...] | None] = {}

    def pronounce(word: str) -> tuple[str, ...] | None:
        if word not in pron_cache:
            if word not in word_table:
                pron_cache[word] = None
            else:
                path = best_path(compose(linear_acceptor([word], word_table), pronouncer))
                pron_cache[word] = path.output_labels if path else None
        return pron_cache[word]

    for english, katakana in glossary:
        words = english.lower().split()
        if not words:
            dropped.append((english, katakana, "empty English side"))
            continue
        prons = [pronounce(w) for w in words]
        bad = [w for w, p in zip(words, prons) if p is None]
        if bad:
            dropped.append((english, katakana, f"no pronunciation for {bad[0]!r}"))
            continue
        glyphs = [g for g in katakana if not g.isspace()]
        unknown = [g for g in glyphs if g not in glyph_table]
        if unknown:
            dropped.append((english, katakana, f"unknown glyph {unknown[0]!r}"))
            continue
        sounds_path = best_path(compose(linear_acceptor(glyphs, glyph_table),
                                        katakana_reader))
        if sounds_path is None:
            dropped.append((english, katakana, "katakana side has no reading"))
            continue
        sounds = sounds_path.output_labels
        separator = JAPANESE_PAUSE in sounds
        e_side: list[str] = []
        for idx, pron in enumerate(prons):
            if idx and separator:
                e_side.append(PAUSE)
            e_side.extend(pron)
        pairs.append((tuple(e_side), tuple(sounds)))

    for english, katakana, reason in dropped:
        log.warning("bootstrap dropped (%s / %s): %s", english, katakana, reason)
    if not pairs:
        raise TrainingError(f"glossary produced no usable pairs ({len(dropped)} dropped)")
    return BootstrapReport(corpus=SoundPairCorpus(pairs=pairs), dropped=dropped)


def katakana_reader(writer: Wfst) -> Wfst:
    """Glyphs-to-sounds transducer: the writer run backwards."""
    return invert(writer)
