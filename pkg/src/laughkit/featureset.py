"""Static feature vector assembly.

Combines the 117 descriptor contours with the 51 functionals into one
5,967-dimensional feature vector per segment. Index layout is row-major:

    index = contour_index * 51 + functional_index

with contour order taken from dsp.CONTOUR_NAMES and functional order from
functionals.FUNCTIONAL_NAMES. Names render as
``<lld>_<base|de|dede>__<functional>`` and are bijective with indices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dsp
from . import functionals as fn

FEATURE_NAMES: tuple[str, ...] = tuple(
    f"{contour}__{func}"
    for contour in dsp.CONTOUR_NAMES
    for func in fn.FUNCTIONAL_NAMES
)

N_FEATURES = len(FEATURE_NAMES)

_EXPECTED = dsp.N_CONTOURS * fn.N_FUNCTIONALS
if N_FEATURES != 5967 or _EXPECTED != 5967:
    raise AssertionError(
        f"feature registry out of shape: {dsp.N_CONTOURS} contours x "
        f"{fn.N_FUNCTIONALS} functionals = {_EXPECTED}, names = {N_FEATURES}"
    )
if len(set(FEATURE_NAMES)) != N_FEATURES:
    raise AssertionError("feature names are not unique")

FEATURE_INDEX: dict[str, int] = {name: i for i, name in enumerate(FEATURE_NAMES)}


def feature_name(index: int) -> str:
    """Name of the feature at the given index (0..5966)."""
    if not 0 <= index < N_FEATURES:
        raise IndexError(f"feature index {index} out of range 0..{N_FEATURES - 1}")
    return FEATURE_NAMES[index]


def feature_index(name: str) -> int:
    try:
        return FEATURE_INDEX[name]
    except KeyError:
        raise KeyError(f"unknown feature name {name!r}") from None


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    segment_ref: str = ""

    def __post_init__(self):
        if self.values.shape != (N_FEATURES,):
            raise ValueError(f"expected {N_FEATURES} values, got {self.values.shape}")


def vector_from_contours(contours: dsp.ContourMatrix, segment_ref: str = "") -> FeatureVector:
    values = np.empty(N_FEATURES)
    for i in range(dsp.N_CONTOURS):
        values[i * fn.N_FUNCTIONALS : (i + 1) * fn.N_FUNCTIONALS] = fn.apply_functionals(
            contours.values[i]
        )
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise ValueError(f"non-finite feature {FEATURE_NAMES[bad]}")
    return FeatureVector(values=values, segment_ref=segment_ref)


def assemble_feature_vector(segment, cfg: dsp.FrameConfig = dsp.FrameConfig(),
                            segment_ref: str = "") -> FeatureVector:
    """Extract contours and apply all functionals; deterministic and finite.

    Segments below the pipeline minimum raise dsp.SegmentTooShortError.
    """
    ref = segment_ref or getattr(segment, "ref", "")
    return vector_from_contours(dsp.extract_contours(segment, cfg), segment_ref=ref)


@dataclass
class FeatureTable:
    """A feature matrix with per-row provenance, one row per segment."""

    segment_ids: list[str]
    speaker_ids: list[str]
    labels: list[str]
    X: np.ndarray
    feature_names: tuple[str, ...] = field(default=FEATURE_NAMES)

    def __post_init__(self):
        n = len(self.segment_ids)
        if not (len(self.speaker_ids) == len(self.labels) == n == self.X.shape[0]):
            raise ValueError("row metadata and matrix sizes disagree")
        if self.X.shape[1] != len(self.feature_names):
            raise ValueError("column count does not match feature names")

    @property
    def n_rows(self) -> int:
        return len(self.segment_ids)

    def write_csv(self, path, header_comment: str | None = None) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            fh.write("segment_id,speaker_id,label," + ",".join(self.feature_names) + "\n")
            for i in range(self.n_rows):
                row = ",".join(repr(float(v)) for v in self.X[i])
                fh.write(f"{self.segment_ids[i]},{self.speaker_ids[i]},{self.labels[i]},{row}\n")


def read_feature_csv(path) -> FeatureTable:
    segment_ids: list[str] = []
    speaker_ids: list[str] = []
    labels: list[str] = []
    rows: list[np.ndarray] = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        while header.startswith("#"):
            header = fh.readline()
        cols = header.rstrip("\n").split(",")
        if cols[:3] != ["segment_id", "speaker_id", "label"]:
            raise ValueError(f"{path}: not a feature matrix file")
        names = tuple(cols[3:])
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            segment_ids.append(parts[0])
            speaker_ids.append(parts[1])
            labels.append(parts[2])
            rows.append(np.array([float(v) for v in parts[3:]], dtype=np.float64))
    X = np.vstack(rows) if rows else np.empty((0, len(names)))
    return FeatureTable(segment_ids=segment_ids, speaker_ids=speaker_ids,
                        labels=labels, X=X, feature_names=names)
