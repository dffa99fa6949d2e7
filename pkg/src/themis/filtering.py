"""Training-data cleaning stages: length, tree depth, language/perplexity,
MinHash near-dedup, and n-gram decontamination.

Stage order is fixed: length -> depth -> langppl -> dedup -> decontam. Every
stage is idempotent and every rejection carries {id, stage, reason, evidence}.
"""

from __future__ import annotations

import hashlib
import math
import random
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Protocol, Sequence

from themis.records import InvariantViolation, PreferencePair, ThemisError
from themis import syntax

STAGES = ("length", "depth", "langppl", "dedup", "decontam")

_MERSENNE_PRIME = (1 << 61) - 1


class ScorerUnavailable(ThemisError):
    pass


@dataclass(frozen=True)
class FilterConfig:
    max_tokens: int = 4096  # 2560 for the pre-training collection
    min_ast_depth: int = 3
    perplexity_max: float = 1200.0
    shingle_size: int = 20
    jaccard_threshold: float = 0.75
    decontam_ngram: int = 13
    num_hashes: int = 128
    bands: int = 16
    rows_per_band: int = 8
    rng_seed: int = 0

    def __post_init__(self):
        if self.bands * self.rows_per_band != self.num_hashes:
            raise InvariantViolation("bands * rows_per_band must equal num_hashes")
        if not 0 < self.jaccard_threshold < 1:
            raise InvariantViolation("jaccard_threshold outside (0, 1)")


@dataclass(frozen=True)
class Reject:
    id: str
    stage: str
    reason: str
    evidence: str = ""

    def to_json_obj(self) -> dict:
        return {"id": self.id, "stage": self.stage, "reason": self.reason, "evidence": self.evidence}


Tokenizer = Callable[[str], list[str]]

_WORD_RE = re.compile(r"\w+")


def normalize_tokens(text: str) -> list[str]:
    """Lowercase, strip punctuation, whitespace-split. Never yields empty tokens."""
    return _WORD_RE.findall(text.lower())


def default_tokenizer(text: str) -> list[str]:
    """Whitespace+punctuation token count proxy for the length gate.

    This approximates the model tokenizer the published caps were measured
    with; swap in the real tokenizer for production parity.
    """
    return re.findall(r"\w+|[^\w\s]", text)


def length_gate(pair: PreferencePair, tokenizer: Tokenizer, cfg: FilterConfig) -> Reject | None:
    prefix = (pair.criteria_prompt or "") + " " + pair.task_prompt + " "
    for side, text in (("chosen", pair.chosen), ("rejected", pair.rejected)):
        n = len(tokenizer(prefix + text))
        if n > cfg.max_tokens:
            return Reject(pair.id, "length", "too_long", f"{side}={n}>{cfg.max_tokens}")
    return None


def ast_depth_gate(pair: PreferencePair, cfg: FilterConfig) -> Reject | None:
    for side, text in (("chosen", pair.chosen), ("rejected", pair.rejected)):
        try:
            depth = syntax.max_depth(text, pair.language)
        except syntax.ParseError as exc:
            return Reject(pair.id, "depth", "parse_error", f"{side}: {exc}")
        if depth < cfg.min_ast_depth:
            return Reject(pair.id, "depth", "too_shallow", f"{side}={depth}<{cfg.min_ast_depth}")
    return None


class LangIdClassifier(Protocol):
    def is_english(self, text: str) -> bool: ...


class PerplexityScorer(Protocol):
    def perplexity(self, text: str) -> float: ...


class AsciiRatioLangId:
    """Trivial built-in default: English iff the text is almost entirely ASCII.

    A stand-in for a real language classifier; adequate for separating
    English prompts from non-Latin-script ones, nothing more.
    """

    def __init__(self, min_ratio: float = 0.95):
        self.min_ratio = min_ratio

    def is_english(self, text: str) -> bool:
        if not text:
            return False
        ascii_count = sum(1 for ch in text if ord(ch) < 128)
        has_letter = any("a" <= ch.lower() <= "z" for ch in text)
        return has_letter and ascii_count / len(text) >= self.min_ratio


# Relative frequencies of English letters; the residual mass covers space,
# digits, and punctuation so ordinary prose lands well under the cutoff.
_EN_LETTER_FREQ = {
    "e": 0.1270, "t": 0.0906, "a": 0.0817, "o": 0.0751, "i": 0.0697, "n": 0.0675,
    "s": 0.0633, "h": 0.0609, "r": 0.0599, "d": 0.0425, "l": 0.0403, "c": 0.0278,
    "u": 0.0276, "m": 0.0241, "w": 0.0236, "f": 0.0223, "g": 0.0202, "y": 0.0197,
    "p": 0.0193, "b": 0.0129, "v": 0.0098, "k": 0.0077, "j": 0.0015, "x": 0.0015,
    "q": 0.0010, "z": 0.0007,
}


class CharFrequencyPerplexity:
    """Trivial built-in default: character unigram perplexity.

    Uses fixed English letter frequencies; whitespace/digits/punctuation get
    a shared moderate probability and everything else a tiny floor, so text
    dominated by out-of-model characters blows past the 1200 cutoff.
    """

    COMMON_PROB = 0.01
    FLOOR_PROB = 1e-5

    def perplexity(self, text: str) -> float:
        if not text:
            return math.inf
        log_sum = 0.0
        for ch in text.lower():
            p = _EN_LETTER_FREQ.get(ch)
            if p is None:
                p = self.COMMON_PROB if (ch.isascii() and (ch.isdigit() or ch.isspace() or not ch.isalpha())) else self.FLOOR_PROB
            log_sum += math.log(p)
        return math.exp(-log_sum / len(text))


def lang_perplexity_gate(
    pair: PreferencePair,
    lid: LangIdClassifier,
    lm: PerplexityScorer,
    cfg: FilterConfig,
) -> Reject | None:
    if not lid.is_english(pair.task_prompt):
        return Reject(pair.id, "langppl", "language_id", "non-English prompt")
    ppl = lm.perplexity(pair.task_prompt)
    if ppl > cfg.perplexity_max:
        return Reject(pair.id, "langppl", "perplexity", f"{ppl:.1f}>{cfg.perplexity_max}")
    return None


def _shingle_hash(tokens: Sequence[str]) -> int:
    digest = hashlib.blake2b(" ".join(tokens).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % _MERSENNE_PRIME


def shingle_set(tokens: Sequence[str], size: int) -> set[int]:
    return {_shingle_hash(tokens[i : i + size]) for i in range(len(tokens) - size + 1)}


def jaccard(a: set[int], b: set[int]) -> float:
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def _dedup_document(pair: PreferencePair) -> list[str]:
    return normalize_tokens(pair.task_prompt + " " + pair.chosen + " " + pair.rejected)


class _MinHasher:
    def __init__(self, num_hashes: int, seed: int):
        rng = random.Random(seed)
        self.coeffs = [
            (rng.randrange(1, _MERSENNE_PRIME), rng.randrange(0, _MERSENNE_PRIME))
            for _ in range(num_hashes)
        ]

    def signature(self, shingles: set[int]) -> tuple[int, ...]:
        return tuple(
            min((a * x + b) % _MERSENNE_PRIME for x in shingles) for a, b in self.coeffs
        )


def minhash_dedup(
    pairs: Sequence[PreferencePair], cfg: FilterConfig
) -> tuple[list[PreferencePair], list[Reject], list[str]]:
    """Drop near-duplicates; first occurrence in input order survives.

    LSH banding proposes candidates, exact shingle-set Jaccard confirms at
    the configured threshold. Documents shorter than one shingle are kept
    and their ids returned as under-shingled flags.
    """
    hasher = _MinHasher(cfg.num_hashes, cfg.rng_seed)
    buckets: dict[tuple[int, tuple[int, ...]], list[int]] = {}
    survivor_shingles: dict[int, set[int]] = {}
    survivors: list[PreferencePair] = []
    dropped: list[Reject] = []
    flagged: list[str] = []

    for pair in pairs:
        tokens = _dedup_document(pair)
        if len(tokens) < cfg.shingle_size:
            flagged.append(pair.id)
            survivors.append(pair)
            continue
        shingles = shingle_set(tokens, cfg.shingle_size)
        sig = hasher.signature(shingles)
        bands = [
            (b, sig[b * cfg.rows_per_band : (b + 1) * cfg.rows_per_band])
            for b in range(cfg.bands)
        ]
        candidates: set[int] = set()
        for key in bands:
            candidates.update(buckets.get(key, ()))
        duplicate_of = None
        best = 0.0
        for idx in sorted(candidates):
            sim = jaccard(shingles, survivor_shingles[idx])
            if sim >= cfg.jaccard_threshold and sim > best:
                best = sim
                duplicate_of = idx
        if duplicate_of is not None:
            dropped.append(
                Reject(pair.id, "dedup", "near_duplicate",
                       f"duplicate_of={survivors[duplicate_of].id} jaccard={best:.4f}")
            )
            continue
        idx = len(survivors)
        survivors.append(pair)
        survivor_shingles[idx] = shingles
        for key in bands:
            buckets.setdefault(key, []).append(idx)
    return survivors, dropped, flagged


def _ngrams(tokens: Sequence[str], n: int) -> Iterable[tuple[str, ...]]:
    for i in range(len(tokens) - n + 1):
        yield tuple(tokens[i : i + n])


def decontaminate(
    pairs: Sequence[PreferencePair],
    bench_prompts: Sequence[str],
    cfg: FilterConfig,
) -> tuple[list[PreferencePair], list[Reject]]:
    """Drop any pair whose normalized prompt shares an exact n-gram with a benchmark prompt."""
    contaminated: set[tuple[str, ...]] = set()
    for prompt in bench_prompts:
        contaminated.update(_ngrams(normalize_tokens(prompt), cfg.decontam_ngram))
    survivors: list[PreferencePair] = []
    dropped: list[Reject] = []
    for pair in pairs:
        hit = next(
            (g for g in _ngrams(normalize_tokens(pair.task_prompt), cfg.decontam_ngram) if g in contaminated),
            None,
        )
        if hit is not None:
            dropped.append(Reject(pair.id, "decontam", "benchmark_overlap", " ".join(hit)))
        else:
            survivors.append(pair)
    return survivors, dropped


@dataclass
class PipelineResult:
    survivors: list[PreferencePair]
    rejects: list[Reject]
    under_shingled: list[str] = field(default_factory=list)


def run_pipeline(
    pairs: Sequence[PreferencePair],
    cfg: FilterConfig,
    bench_prompts: Sequence[str] = (),
    tokenizer: Tokenizer = default_tokenizer,
    lid: LangIdClassifier | None = None,
    lm: PerplexityScorer | None = None,
    stages: Sequence[str] = STAGES,
) -> PipelineResult:
    """Run the selected stages in canonical order over the pair stream."""
    unknown = set(stages) - set(STAGES)
    if unknown:
        raise InvariantViolation(f"unknown stages: {sorted(unknown)}")
    ordered = [s for s in STAGES if s in stages]
    lid = lid or AsciiRatioLangId()
    lm = lm or CharFrequencyPerplexity()

    current = list(pairs)
    rejects: list[Reject] = []
    flagged: list[str] = []
    for stage in ordered:
        if stage == "dedup":
            current, dropped, flagged = minhash_dedup(current, cfg)
            rejects.extend(dropped)
        elif stage == "decontam":
            current, dropped = decontaminate(current, bench_prompts, cfg)
            rejects.extend(dropped)
        else:
            gate = {
                "length": lambda p: length_gate(p, tokenizer, cfg),
                "depth": lambda p: ast_depth_gate(p, cfg),
                "langppl": lambda p: lang_perplexity_gate(p, lid, lm, cfg),
            }[stage]
            kept = []
            for pair in current:
                reject = gate(pair)
                if reject is None:
                    kept.append(pair)
                else:
                    rejects.append(reject)
            current = kept
    return PipelineResult(survivors=current, rejects=rejects, under_shingled=flagged)
