"""Corpus manifest: CSV of (speaker, style, utterance_id, path) records.

utterance_id is shared across styles for parallel corpora; the
(speaker, style, utterance_id) triple must be unique.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .embedding import STYLES
from .errors import FormatError

MANIFEST_HEADER = ["speaker", "style", "utterance_id", "path"]


@dataclass(frozen=True)
class ManifestRecord:
    speaker: str
    style: str
    utterance_id: str
    path: str

    def __post_init__(self):
        if self.style not in STYLES:
            raise ValueError(f"unknown style {self.style!r}, expected one of {STYLES}")


@dataclass(frozen=True)
class CorpusManifest:
    records: tuple

    def __post_init__(self):
        seen = set()
        for rec in self.records:
            key = (rec.speaker, rec.style, rec.utterance_id)
            if key in seen:
                raise ValueError(f"duplicate manifest key {key}")
            seen.add(key)

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def by_style(self, style: str) -> tuple:
        return tuple(r for r in self.records if r.style == style)


def read_manifest(path) -> CorpusManifest:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise FormatError(f"{path}: empty manifest")
        if header != MANIFEST_HEADER:
            raise FormatError(
                f"{path}: expected header {','.join(MANIFEST_HEADER)!r}, got {','.join(header)!r}")
        records = []
        seen = {}
        for i, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise FormatError(f"{path}:{i}: expected 4 fields, got {len(row)}")
            speaker, style, utt, wav_path = row
            if style not in STYLES:
                raise FormatError(
                    f"{path}:{i}: unknown style {style!r}, expected one of {STYLES}")
            key = (speaker, style, utt)
            if key in seen:
                raise FormatError(
                    f"{path}:{i}: duplicate key {key} (first seen on line {seen[key]})")
            seen[key] = i
            records.append(ManifestRecord(speaker=speaker, style=style,
                                          utterance_id=utt, path=wav_path))
    return CorpusManifest(records=tuple(records))


def write_manifest(manifest: CorpusManifest, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_HEADER)
        for r in manifest:
            writer.writerow([r.speaker, r.style, r.utterance_id, r.path])
