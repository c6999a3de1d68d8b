"""Annotated corpus data model, manifest format, and synthetic generation.

A corpus is a set of speakers, each with a sequence of turns; every turn
references one mono 16 kHz / 16 bit PCM WAV file, and is segmented into
ordered, non-overlapping word units. Each unit carries a laughter label
(plain word W, speech-laugh SLw/SLs, laughter Lu/Lvu/Lv) plus optional
emotion, syntactic-position and transcript annotations.

Manifest format (UTF-8 text, tab-separated, one record per line):

    SPEAKER <id> <m|f>
    TURN    <turn_id> <speaker_id> <ordinal> <dialogue_length> <audio_path>
    UNIT    <turn_id> <index> <start_sample> <end_sample>
            <W|SLw|SLs|Lu|Lvu|Lv> <emotion|-> <synpos|-> <transcript|->

Audio paths are relative to the manifest location. Blank lines and lines
starting with '#' are ignored. Optional fields use the '-' placeholder.

The synthetic generator builds corpora whose classes are acoustically
separable by construction: plain words are sustained vowel-like voiced
tokens, laughter tokens alternate voiced bursts and unvoiced noise at a
4-6 Hz burst rate, and speech-laugh tokens are words with 4-6 Hz
amplitude-plus-voicing modulation superimposed (shallow for SLw, deep
for SLs). Generation is bit-deterministic in (config, seed).
"""

from __future__ import annotations

import math
import wave
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from . import dsp

SAMPLE_RATE = 16000
BIT_DEPTH = 16


class CorpusError(ValueError):
    """Structural problem in corpus data."""


class ManifestError(CorpusError):
    """Malformed manifest content, reported with file location."""


class LaughterLabel(str, Enum):
    W = "W"
    SLw = "SLw"
    SLs = "SLs"
    Lu = "Lu"
    Lvu = "Lvu"
    Lv = "Lv"

    @property
    def superclass(self) -> str:
        """3-class grouping: W, SL (SLw/SLs), or L (Lu/Lvu/Lv)."""
        if self in (LaughterLabel.SLw, LaughterLabel.SLs):
            return "SL"
        if self in (LaughterLabel.Lu, LaughterLabel.Lvu, LaughterLabel.Lv):
            return "L"
        return "W"

    @property
    def binary_class(self) -> str:
        """2-class grouping: W, or L for any kind of laughter."""
        return "W" if self is LaughterLabel.W else "L"


class EmotionLabel(str, Enum):
    joyful = "joyful"
    surprised = "surprised"
    emphatic = "emphatic"
    helpless = "helpless"
    touchy = "touchy"
    angry = "angry"
    motherese = "motherese"
    bored = "bored"
    reprimanding = "reprimanding"
    rest = "rest"
    neutral = "neutral"
    mixed = "mixed"


class SyntacticPosition(str, Enum):
    isolated = "isolated"
    vocative = "vocative"
    begin_of_unit = "begin_of_unit"
    end_of_phrase = "end_of_phrase"
    end_of_clause = "end_of_clause"
    left_adjacent = "left_adjacent"
    right_adjacent = "right_adjacent"
    covering = "covering"
    internal = "internal"


@dataclass(frozen=True)
class WordUnit:
    turn_id: str
    index_in_turn: int
    start: int
    end: int
    laughter: LaughterLabel
    emotion: EmotionLabel | None = None
    syntactic_position: SyntacticPosition | None = None
    transcript: str | None = None

    @property
    def n_samples(self) -> int:
        return self.end - self.start

    @property
    def duration_frames(self) -> int:
        """Duration in whole 10 ms frames."""
        return (self.end - self.start) // 160


@dataclass(frozen=True)
class Turn:
    turn_id: str
    speaker_id: str
    ordinal_in_dialogue: int
    dialogue_length: int
    audio_path: str
    word_units: tuple[WordUnit, ...]

    @property
    def relative_position(self) -> float:
        return self.ordinal_in_dialogue / self.dialogue_length


@dataclass(frozen=True)
class Speaker:
    speaker_id: str
    gender: str
    school: str | None = None


@dataclass(frozen=True)
class Corpus:
    speakers: tuple[Speaker, ...]
    turns: tuple[Turn, ...]
    root: str = field(default=".", compare=False)
    sample_rate: int = SAMPLE_RATE
    bit_depth: int = BIT_DEPTH

    def speaker(self, speaker_id: str) -> Speaker:
        for s in self.speakers:
            if s.speaker_id == speaker_id:
                return s
        raise KeyError(speaker_id)

    def turn(self, turn_id: str) -> Turn:
        for t in self.turns:
            if t.turn_id == turn_id:
                return t
        raise KeyError(turn_id)

    def audio_file(self, turn: Turn) -> Path:
        return Path(self.root) / turn.audio_path

    @property
    def speaker_ids(self) -> tuple[str, ...]:
        return tuple(s.speaker_id for s in self.speakers)


def turn_class(turn: Turn) -> str:
    """3-class turn label: L if any laughter unit, else SL if any
    speech-laugh unit, else W."""
    classes = {u.laughter.superclass for u in turn.word_units}
    if "L" in classes:
        return "L"
    if "SL" in classes:
        return "SL"
    return "W"


def turn_binary_class(turn: Turn) -> str:
    """2-class turn label: L when the turn contains laughing of any kind."""
    return "W" if turn_class(turn) == "W" else "L"


@dataclass(frozen=True)
class SignalSegment:
    """A mono sample buffer scaled to [-1, 1], with provenance."""

    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE
    ref: str = ""

    @property
    def n_samples(self) -> int:
        return int(self.samples.size)

    @property
    def too_short(self) -> bool:
        """True when the segment is below the feature pipeline minimum."""
        return self.n_samples < dsp.MIN_SEGMENT_SAMPLES


# ---------------------------------------------------------------------------
# WAV input / output


def read_wav(path) -> np.ndarray:
    """Read a mono 16 kHz / 16 bit PCM WAV file as int16 samples."""
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as wf:
            if wf.getnchannels() != 1:
                raise CorpusError(f"{path}: expected mono audio, got {wf.getnchannels()} channels")
            if wf.getframerate() != SAMPLE_RATE:
                raise CorpusError(f"{path}: expected {SAMPLE_RATE} Hz, got {wf.getframerate()}")
            if wf.getsampwidth() != 2:
                raise CorpusError(f"{path}: expected 16 bit samples, got {8 * wf.getsampwidth()}")
            data = wf.readframes(wf.getnframes())
    except wave.Error as exc:
        raise CorpusError(f"{path}: not a valid WAV file ({exc})") from exc
    return np.frombuffer(data, dtype="<i2")


def write_wav(path, samples) -> None:
    """Write float samples in [-1, 1] as mono 16 kHz / 16 bit PCM."""
    x = np.asarray(samples, dtype=np.float64)
    ints = np.clip(np.round(x * 32767.0), -32768, 32767).astype("<i2")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(SAMPLE_RATE)
        wf.writeframes(ints.tobytes())


def slice_segment(corpus: Corpus, turn_or_unit) -> SignalSegment:
    """Extract the sample buffer of a turn or of a single word unit.

    Values are scaled to [-1, 1]. Units shorter than the pipeline minimum
    come back flagged via SignalSegment.too_short.
    """
    if isinstance(turn_or_unit, Turn):
        turn = turn_or_unit
        raw = read_wav(corpus.audio_file(turn))
        return SignalSegment(samples=raw / 32768.0, ref=turn.turn_id)
    if isinstance(turn_or_unit, WordUnit):
        unit = turn_or_unit
        turn = corpus.turn(unit.turn_id)
        raw = read_wav(corpus.audio_file(turn))
        if unit.end > raw.size:
            raise CorpusError(
                f"unit {unit.turn_id}:{unit.index_in_turn} span ends at {unit.end} "
                f"but audio has {raw.size} samples"
            )
        return SignalSegment(
            samples=raw[unit.start : unit.end] / 32768.0,
            ref=f"{unit.turn_id}:{unit.index_in_turn}",
        )
    raise TypeError(f"expected Turn or WordUnit, got {type(turn_or_unit).__name__}")


def iter_instances(corpus: Corpus, granularity: str):
    """Yield (segment_id, speaker_id, raw_label, SignalSegment) per instance.

    granularity 'turn' yields whole turns labelled by the 3-class turn
    rule; 'word' yields word units labelled with their 6-class token.
    Each audio file is read once.
    """
    if granularity not in ("turn", "word"):
        raise ValueError(f"granularity must be 'turn' or 'word', got {granularity!r}")
    for turn in corpus.turns:
        raw = read_wav(corpus.audio_file(turn))
        scaled = raw / 32768.0
        if granularity == "turn":
            yield turn.turn_id, turn.speaker_id, turn_class(turn), SignalSegment(
                samples=scaled, ref=turn.turn_id
            )
        else:
            for unit in turn.word_units:
                yield (
                    f"{turn.turn_id}:{unit.index_in_turn}",
                    turn.speaker_id,
                    unit.laughter.value,
                    SignalSegment(
                        samples=scaled[unit.start : unit.end],
                        ref=f"{turn.turn_id}:{unit.index_in_turn}",
                    ),
                )


# ---------------------------------------------------------------------------
# Manifest parsing and serialization


def _parse_enum(enum_cls, token: str, where: str):
    try:
        return enum_cls(token)
    except ValueError:
        valid = "/".join(e.value for e in enum_cls)
        raise ManifestError(f"{where}: unknown token {token!r} (expected one of {valid})") from None


def _parse_int(token: str, what: str, where: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise ManifestError(f"{where}: {what} must be an integer, got {token!r}") from None


def load_manifest(path) -> Corpus:
    """Parse and fully validate a manifest file.

    Raises ManifestError naming the file, line and offending token on the
    first violation found (parse errors first, then corpus invariants
    including audio checks).
    """
    path = Path(path)
    speakers: dict[str, Speaker] = {}
    turn_rows: dict[str, tuple[int, Turn]] = {}
    unit_rows: dict[str, list[tuple[int, WordUnit]]] = {}

    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            where = f"{path}:{line_no}"
            fields = line.split("\t")
            kind = fields[0]
            if kind == "SPEAKER":
                if len(fields) != 3:
                    raise ManifestError(f"{where}: SPEAKER needs 2 fields, got {len(fields) - 1}")
                sid, gender = fields[1], fields[2]
                if gender not in ("m", "f"):
                    raise ManifestError(f"{where}: gender must be 'm' or 'f', got {gender!r}")
                if sid in speakers:
                    raise ManifestError(f"{where}: duplicate speaker id {sid!r}")
                speakers[sid] = Speaker(speaker_id=sid, gender=gender)
            elif kind == "TURN":
                if len(fields) != 6:
                    raise ManifestError(f"{where}: TURN needs 5 fields, got {len(fields) - 1}")
                tid, sid = fields[1], fields[2]
                ordinal = _parse_int(fields[3], "ordinal", where)
                dlen = _parse_int(fields[4], "dialogue_length", where)
                if tid in turn_rows:
                    raise ManifestError(f"{where}: duplicate turn id {tid!r}")
                turn_rows[tid] = (
                    line_no,
                    Turn(
                        turn_id=tid,
                        speaker_id=sid,
                        ordinal_in_dialogue=ordinal,
                        dialogue_length=dlen,
                        audio_path=fields[5],
                        word_units=(),
                    ),
                )
            elif kind == "UNIT":
                if len(fields) != 9:
                    raise ManifestError(f"{where}: UNIT needs 8 fields, got {len(fields) - 1}")
                tid = fields[1]
                idx = _parse_int(fields[2], "index", where)
                start = _parse_int(fields[3], "start_sample", where)
                end = _parse_int(fields[4], "end_sample", where)
                label = _parse_enum(LaughterLabel, fields[5], where)
                emotion = None if fields[6] == "-" else _parse_enum(EmotionLabel, fields[6], where)
                synpos = (
                    None
                    if fields[7] == "-"
                    else _parse_enum(SyntacticPosition, fields[7], where)
                )
                transcript = None if fields[8] == "-" else fields[8]
                unit = WordUnit(
                    turn_id=tid,
                    index_in_turn=idx,
                    start=start,
                    end=end,
                    laughter=label,
                    emotion=emotion,
                    syntactic_position=synpos,
                    transcript=transcript,
                )
                unit_rows.setdefault(tid, []).append((line_no, unit))
            else:
                raise ManifestError(f"{where}: unknown record type {kind!r}")

    turns: list[Turn] = []
    unit_lines: dict[tuple[str, int], int] = {}
    for tid, (turn_line, turn) in turn_rows.items():
        if turn.speaker_id not in speakers:
            raise ManifestError(
                f"{path}:{turn_line}: turn {tid!r} references unknown speaker "
                f"{turn.speaker_id!r}"
            )
        rows = unit_rows.pop(tid, [])
        seen: set[int] = set()
        for line_no, unit in rows:
            if unit.index_in_turn in seen:
                raise ManifestError(
                    f"{path}:{line_no}: duplicate unit index {unit.index_in_turn} "
                    f"in turn {tid!r}"
                )
            seen.add(unit.index_in_turn)
            unit_lines[(tid, unit.index_in_turn)] = line_no
        rows.sort(key=lambda r: r[1].index_in_turn)
        turns.append(
            Turn(
                turn_id=turn.turn_id,
                speaker_id=turn.speaker_id,
                ordinal_in_dialogue=turn.ordinal_in_dialogue,
                dialogue_length=turn.dialogue_length,
                audio_path=turn.audio_path,
                word_units=tuple(u for _, u in rows),
            )
        )
    for tid, rows in unit_rows.items():
        raise ManifestError(f"{path}:{rows[0][0]}: unit references unknown turn {tid!r}")

    corpus = Corpus(
        speakers=tuple(sorted(speakers.values(), key=lambda s: s.speaker_id)),
        turns=tuple(turns),
        root=str(path.parent),
    )
    report = validate_corpus(corpus)
    if report.violations:
        loc, message = report.violations[0]
        line = None
        if loc is not None:
            line = unit_lines.get(loc) or (
                turn_rows[loc][0] if isinstance(loc, str) and loc in turn_rows else None
            )
        prefix = f"{path}:{line}: " if line else f"{path}: "
        raise ManifestError(prefix + message)
    return corpus


def write_manifest(corpus: Corpus, path) -> None:
    """Serialize a corpus so that load_manifest round-trips it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    base = path.parent.resolve()
    lines: list[str] = []
    for s in sorted(corpus.speakers, key=lambda s: s.speaker_id):
        lines.append(f"SPEAKER\t{s.speaker_id}\t{s.gender}")
    for t in corpus.turns:
        audio_abs = (Path(corpus.root) / t.audio_path).resolve()
        try:
            rel = audio_abs.relative_to(base).as_posix()
        except ValueError:
            rel = str(audio_abs)
        lines.append(
            f"TURN\t{t.turn_id}\t{t.speaker_id}\t{t.ordinal_in_dialogue}"
            f"\t{t.dialogue_length}\t{rel}"
        )
        for u in t.word_units:
            emo = u.emotion.value if u.emotion else "-"
            pos = u.syntactic_position.value if u.syntactic_position else "-"
            txt = u.transcript if u.transcript else "-"
            lines.append(
                f"UNIT\t{u.turn_id}\t{u.index_in_turn}\t{u.start}\t{u.end}"
                f"\t{u.laughter.value}\t{emo}\t{pos}\t{txt}"
            )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Validation


@dataclass
class ValidationReport:
    """All invariant violations plus corpus summary counts.

    Violations are (location_key, message) pairs where the key is a turn
    id, a (turn_id, unit_index) pair, or None for corpus-level problems.
    """

    violations: list[tuple[object, str]] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        return not self.violations

    @property
    def messages(self) -> list[str]:
        return [m for _, m in self.violations]


def validate_corpus(corpus: Corpus, check_audio: bool = True) -> ValidationReport:
    """Check every corpus invariant; violations are data, not exceptions.

    The summary reports turn/unit counts, units per laughter label, and
    the mean number of laughter instances per laughter-bearing turn.
    """
    report = ValidationReport()
    add = report.violations.append

    seen_speakers: set[str] = set()
    for s in corpus.speakers:
        if s.speaker_id in seen_speakers:
            add((None, f"duplicate speaker id {s.speaker_id!r}"))
        seen_speakers.add(s.speaker_id)
        if s.gender not in ("m", "f"):
            add((None, f"speaker {s.speaker_id!r} has invalid gender {s.gender!r}"))

    if corpus.sample_rate != SAMPLE_RATE:
        add((None, f"corpus sample_rate must be {SAMPLE_RATE}, got {corpus.sample_rate}"))
    if corpus.bit_depth != BIT_DEPTH:
        add((None, f"corpus bit_depth must be {BIT_DEPTH}, got {corpus.bit_depth}"))

    audio_lengths: dict[str, int] = {}
    seen_turns: set[str] = set()
    per_label: dict[str, int] = {label.value: 0 for label in LaughterLabel}
    laughter_turns = 0
    laughter_instances = 0

    for turn in corpus.turns:
        tid = turn.turn_id
        if tid in seen_turns:
            add((tid, f"duplicate turn id {tid!r}"))
        seen_turns.add(tid)
        if turn.speaker_id not in seen_speakers:
            add((tid, f"turn {tid!r} references unknown speaker {turn.speaker_id!r}"))
        if not 1 <= turn.ordinal_in_dialogue <= turn.dialogue_length:
            add(
                (
                    tid,
                    f"turn {tid!r}: ordinal {turn.ordinal_in_dialogue} outside "
                    f"1..{turn.dialogue_length}",
                )
            )

        n_audio: int | None = None
        if check_audio:
            audio = corpus.audio_file(turn)
            if not audio.exists():
                add((tid, f"turn {tid!r}: missing audio file {audio}"))
            else:
                try:
                    if str(audio) not in audio_lengths:
                        audio_lengths[str(audio)] = int(read_wav(audio).size)
                    n_audio = audio_lengths[str(audio)]
                except CorpusError as exc:
                    add((tid, str(exc)))

        prev_end = None
        prev_index = None
        for unit in turn.word_units:
            key = (tid, unit.index_in_turn)
            if unit.start >= unit.end:
                add((key, f"unit {tid}:{unit.index_in_turn}: empty span "
                          f"[{unit.start}, {unit.end})"))
            if prev_index is not None and unit.index_in_turn <= prev_index:
                add((key, f"unit {tid}:{unit.index_in_turn}: indices not increasing"))
            if prev_end is not None and unit.start < prev_end:
                add((key, f"unit {tid}:{unit.index_in_turn}: span overlaps previous unit"))
            if n_audio is not None and unit.end > n_audio:
                add((key, f"unit {tid}:{unit.index_in_turn}: span ends at {unit.end} "
                          f"past audio end {n_audio}"))
            prev_end = max(prev_end or 0, unit.end)
            prev_index = unit.index_in_turn
            per_label[unit.laughter.value] += 1

        n_laughs = sum(1 for u in turn.word_units if u.laughter is not LaughterLabel.W)
        if n_laughs:
            laughter_turns += 1
            laughter_instances += n_laughs

    report.summary = {
        "n_speakers": len(corpus.speakers),
        "n_turns": len(corpus.turns),
        "n_units": int(sum(per_label.values())),
        "units_per_label": per_label,
        "laughter_bearing_turns": laughter_turns,
        "laughter_instances": laughter_instances,
        "mean_instances_per_laughter_turn": (
            laughter_instances / laughter_turns if laughter_turns else 0.0
        ),
    }
    return report


# ---------------------------------------------------------------------------
# Synthetic corpus generation


class GeneratorConfigError(ValueError):
    """Invalid generator settings."""


@dataclass(frozen=True)
class GeneratorConfig:
    """Settings and acoustic presets for the synthetic corpus generator.

    The acoustic preset is fixed and documented here rather than in the
    signal code: voiced tokens are harmonic series with per-speaker
    formant shaping (F1/F2/F3 drawn once per speaker from the ranges
    below) and a per-token fundamental; unvoiced material is first-order
    high-passed white noise. Laughter burst rates are drawn from
    burst_rate_hz. Speech-laugh modulation depth is slw_depth / sls_depth
    with matching breath-noise mix levels.
    """

    n_speakers: int = 20
    turns_per_speaker: int = 10
    # share of W-only, speech-laugh and laughter turns per speaker
    turn_mix: tuple[float, float, float] = (0.4, 0.3, 0.3)
    units_per_w_turn: tuple[int, int] = (2, 3)
    isolated_laughter_share: float = 0.6
    # token durations in seconds
    w_duration: tuple[float, float] = (0.20, 0.50)
    sl_duration: tuple[float, float] = (0.25, 0.60)
    l_duration: tuple[float, float] = (0.40, 1.00)
    gap_duration: tuple[float, float] = (0.03, 0.12)
    pad_duration: tuple[float, float] = (0.05, 0.10)
    # voice preset
    f0_female: tuple[float, float] = (240.0, 330.0)
    f0_male: tuple[float, float] = (190.0, 280.0)
    formant1: tuple[float, float] = (550.0, 800.0)
    formant2: tuple[float, float] = (1300.0, 1900.0)
    formant3: tuple[float, float] = (2400.0, 3000.0)
    # laughter / speech-laugh preset
    burst_rate_hz: tuple[float, float] = (4.0, 6.0)
    burst_sharpness: float = 2.0
    lv_amplitude_floor: float = 0.25
    slw_depth: float = 0.40
    sls_depth: float = 0.85
    slw_noise: float = 0.10
    sls_noise: float = 0.30
    annotate: bool = True

    def __post_init__(self):
        if self.n_speakers < 2:
            raise GeneratorConfigError("need at least 2 speakers")
        if self.turns_per_speaker < 1:
            raise GeneratorConfigError("need at least 1 turn per speaker")
        if any(w < 0 for w in self.turn_mix) or sum(self.turn_mix) <= 0:
            raise GeneratorConfigError("turn_mix weights must be non-negative and not all zero")


_WORDS = ("links", "rechts", "vor", "stopp", "weiter", "dreh", "lauf", "sitz", "komm", "brav")

_SL_EMOTIONS = (
    (EmotionLabel.joyful, 0.50),
    (EmotionLabel.neutral, 0.31),
    (EmotionLabel.mixed, 0.16),
    (EmotionLabel.angry, 0.03),
)
_W_EMOTIONS = (
    (EmotionLabel.neutral, 0.82),
    (EmotionLabel.emphatic, 0.12),
    (EmotionLabel.motherese, 0.06),
)
_SL_POSITIONS = (
    (SyntacticPosition.end_of_phrase, 0.30),
    (SyntacticPosition.end_of_clause, 0.25),
    (SyntacticPosition.covering, 0.20),
    (SyntacticPosition.begin_of_unit, 0.15),
    (SyntacticPosition.vocative, 0.05),
    (SyntacticPosition.internal, 0.03),
    (SyntacticPosition.left_adjacent, 0.01),
    (SyntacticPosition.right_adjacent, 0.01),
)
_L_POSITIONS = (
    (SyntacticPosition.begin_of_unit, 0.40),
    (SyntacticPosition.end_of_phrase, 0.35),
    (SyntacticPosition.end_of_clause, 0.25),
)


def _weighted_choice(rng: np.random.Generator, table):
    items = [it for it, _ in table]
    weights = np.array([w for _, w in table], dtype=np.float64)
    return items[int(rng.choice(len(items), p=weights / weights.sum()))]


@dataclass(frozen=True)
class _Voice:
    f0_range: tuple[float, float]
    formants: tuple[float, float, float]


def _formant_envelope(freqs: np.ndarray, formants) -> np.ndarray:
    gains = (1.0, 0.63, 0.32)
    widths = (90.0, 120.0, 160.0)
    env = np.full_like(freqs, 0.05)
    for f_k, g, w in zip(formants, gains, widths):
        env += g * np.exp(-0.5 * ((freqs - f_k) / w) ** 2)
    return env


def _voiced_source(rng: np.random.Generator, n: int, f0: float, voice: _Voice) -> np.ndarray:
    """Sustained vowel-like harmonic tone with formant-shaped spectrum."""
    n_harm = max(2, int(7600.0 / f0))
    h = np.arange(1, n_harm + 1, dtype=np.float64)
    amps = _formant_envelope(h * f0, voice.formants) / np.sqrt(h)
    phases = rng.uniform(0.0, 2.0 * math.pi, size=n_harm)
    t = np.arange(n) / SAMPLE_RATE
    x = (amps[:, None] * np.sin(2.0 * math.pi * f0 * h[:, None] * t[None, :]
                                + phases[:, None])).sum(axis=0)
    rms = math.sqrt(float(np.mean(x * x)))
    return x / rms if rms > 0 else x


def _noise_source(rng: np.random.Generator, n: int) -> np.ndarray:
    """Breathy high-passed white noise, unit RMS."""
    white = rng.standard_normal(n + 1)
    x = white[1:] - 0.82 * white[:-1]
    rms = math.sqrt(float(np.mean(x * x)))
    return x / rms if rms > 0 else x


def _edge_envelope(n: int, edge_s: float = 0.01) -> np.ndarray:
    edge = min(max(1, int(edge_s * SAMPLE_RATE)), n // 2)
    env = np.ones(n)
    ramp = 0.5 * (1.0 - np.cos(np.pi * np.arange(edge) / edge))
    env[:edge] = ramp
    env[-edge:] = ramp[::-1]
    return env


def _burst_pulses(n: int, rate: float, phase: float, sharpness: float) -> np.ndarray:
    t = np.arange(n) / SAMPLE_RATE
    return (0.5 * (1.0 + np.cos(2.0 * math.pi * rate * t + phase))) ** sharpness


def _unit_signal(rng: np.random.Generator, label: LaughterLabel, voice: _Voice,
                 cfg: GeneratorConfig) -> np.ndarray:
    f0 = rng.uniform(*voice.f0_range)
    if label is LaughterLabel.W:
        dur = rng.uniform(*cfg.w_duration)
    elif label.superclass == "SL":
        dur = rng.uniform(*cfg.sl_duration)
    else:
        dur = rng.uniform(*cfg.l_duration)
    n = int(dur * SAMPLE_RATE)
    env = _edge_envelope(n)
    amp = rng.uniform(0.25, 0.55)

    if label is LaughterLabel.W:
        x = _voiced_source(rng, n, f0, voice) + 0.004 * _noise_source(rng, n)
        return amp * x * env

    rate = rng.uniform(*cfg.burst_rate_hz)
    phase = rng.uniform(0.0, 2.0 * math.pi)

    if label.superclass == "SL":
        depth = cfg.slw_depth if label is LaughterLabel.SLw else cfg.sls_depth
        noise_mix = cfg.slw_noise if label is LaughterLabel.SLw else cfg.sls_noise
        t = np.arange(n) / SAMPLE_RATE
        mod = 1.0 - depth * 0.5 * (1.0 - np.cos(2.0 * math.pi * rate * t + phase))
        carrier = _voiced_source(rng, n, f0, voice)
        breath = _noise_source(rng, n) * noise_mix * (1.0 - mod)
        return amp * (carrier * mod + breath) * env

    pulses = _burst_pulses(n, rate, phase, cfg.burst_sharpness)
    if label is LaughterLabel.Lv:
        gate = cfg.lv_amplitude_floor + (1.0 - cfg.lv_amplitude_floor) * pulses
        x = _voiced_source(rng, n, f0, voice) * gate + 0.003 * _noise_source(rng, n)
        return amp * x * env
    if label is LaughterLabel.Lu:
        x = _noise_source(rng, n) * (0.05 + 0.95 * pulses)
        return amp * x * env
    # Lvu: voiced bursts in antiphase with unvoiced noise bursts
    anti = _burst_pulses(n, rate, phase + math.pi, cfg.burst_sharpness)
    x = (
        _voiced_source(rng, n, f0, voice) * pulses
        + 0.55 * _noise_source(rng, n) * anti
        + 0.002 * _noise_source(rng, n)
    )
    return amp * x * env


def _turn_schedule(cfg: GeneratorConfig, rng: np.random.Generator) -> list[str]:
    """Per-speaker schedule of turn kinds honouring turn_mix proportions."""
    total = cfg.turns_per_speaker
    weights = np.array(cfg.turn_mix, dtype=np.float64)
    weights = weights / weights.sum()
    counts = np.floor(weights * total).astype(int)
    order = np.argsort(-(weights * total - counts))
    for i in range(total - counts.sum()):
        counts[order[i % 3]] += 1
    kinds = ["W"] * counts[0] + ["SL"] * counts[1] + ["L"] * counts[2]
    rng.shuffle(kinds)
    return kinds


def synthesize_corpus(cfg: GeneratorConfig, seed: int, out_dir) -> Corpus:
    """Generate a deterministic annotated corpus under out_dir.

    Writes one WAV per turn under out_dir/audio plus out_dir/manifest.tsv
    and returns the corpus. Identical (cfg, seed) yield bit-identical
    files.
    """
    out_dir = Path(out_dir)
    audio_dir = out_dir / "audio"
    audio_dir.mkdir(parents=True, exist_ok=True)

    sl_cycle = (LaughterLabel.SLw, LaughterLabel.SLs)
    l_cycle = (LaughterLabel.Lu, LaughterLabel.Lvu, LaughterLabel.Lv)

    speakers: list[Speaker] = []
    turns: list[Turn] = []

    for s_idx in range(cfg.n_speakers):
        sid = f"spk{s_idx:02d}"
        gender = "f" if s_idx % 2 == 0 else "m"
        s_rng = np.random.default_rng(np.random.SeedSequence([seed, s_idx]))
        voice = _Voice(
            f0_range=tuple(
                sorted(
                    s_rng.uniform(*(cfg.f0_female if gender == "f" else cfg.f0_male), size=2)
                )
            ),
            formants=(
                s_rng.uniform(*cfg.formant1),
                s_rng.uniform(*cfg.formant2),
                s_rng.uniform(*cfg.formant3),
            ),
        )
        speakers.append(Speaker(speaker_id=sid, gender=gender))
        schedule = _turn_schedule(cfg, s_rng)
        sl_counter = s_idx  # offset cycles across speakers
        l_counter = s_idx

        for t_idx, kind in enumerate(schedule):
            rng = np.random.default_rng(np.random.SeedSequence([seed, s_idx, t_idx]))
            tid = f"{sid}_t{t_idx:03d}"

            labels: list[LaughterLabel]
            if kind == "W":
                k = int(rng.integers(cfg.units_per_w_turn[0], cfg.units_per_w_turn[1] + 1))
                labels = [LaughterLabel.W] * k
            elif kind == "SL":
                sl = sl_cycle[sl_counter % 2]
                sl_counter += 1
                labels = [LaughterLabel.W, sl] if rng.random() < 0.5 else [sl, LaughterLabel.W]
            else:
                lab = l_cycle[l_counter % 3]
                l_counter += 1
                if rng.random() < cfg.isolated_laughter_share:
                    labels = [lab]
                else:
                    labels = [lab, LaughterLabel.W] if rng.random() < 0.5 else [LaughterLabel.W, lab]

            pieces: list[np.ndarray] = []
            spans: list[tuple[int, int]] = []
            cursor = 0

            def _push_gap(dur_range):
                nonlocal cursor
                g = int(rng.uniform(*dur_range) * SAMPLE_RATE)
                pieces.append(1e-4 * rng.standard_normal(g))
                cursor += g

            _push_gap(cfg.pad_duration)
            for i, label in enumerate(labels):
                if i:
                    _push_gap(cfg.gap_duration)
                sig = _unit_signal(rng, label, voice, cfg)
                spans.append((cursor, cursor + sig.size))
                pieces.append(sig)
                cursor += sig.size
            _push_gap(cfg.pad_duration)

            signal = np.concatenate(pieces)
            peak = float(np.max(np.abs(signal)))
            if peak > 0.99:
                signal = signal * (0.99 / peak)
            rel_audio = f"audio/{tid}.wav"
            write_wav(out_dir / rel_audio, signal)

            units = []
            for i, (label, (start, end)) in enumerate(zip(labels, spans)):
                emotion = None
                synpos = None
                transcript = None
                if cfg.annotate:
                    if label is LaughterLabel.W:
                        emotion = _weighted_choice(rng, _W_EMOTIONS)
                        transcript = _WORDS[int(rng.integers(len(_WORDS)))]
                    elif label.superclass == "SL":
                        emotion = _weighted_choice(rng, _SL_EMOTIONS)
                        synpos = _weighted_choice(rng, _SL_POSITIONS)
                        transcript = _WORDS[int(rng.integers(len(_WORDS)))]
                    else:
                        synpos = (
                            SyntacticPosition.isolated
                            if len(labels) == 1
                            else _weighted_choice(rng, _L_POSITIONS)
                        )
                units.append(
                    WordUnit(
                        turn_id=tid,
                        index_in_turn=i,
                        start=start,
                        end=end,
                        laughter=label,
                        emotion=emotion,
                        syntactic_position=synpos,
                        transcript=transcript,
                    )
                )
            turns.append(
                Turn(
                    turn_id=tid,
                    speaker_id=sid,
                    ordinal_in_dialogue=t_idx + 1,
                    dialogue_length=len(schedule),
                    audio_path=rel_audio,
                    word_units=tuple(units),
                )
            )

    corpus = Corpus(speakers=tuple(speakers), turns=tuple(turns), root=str(out_dir))
    write_manifest(corpus, out_dir / "manifest.tsv")
    return corpus
