"""Sealed forecasts: SHA-256/SHA-512 fingerprints and the append-only master ledger.

Ledger file format (UTF-8, LF line endings)::

    #version <N> <YYYY-MM-DD>
    <name>\t<sha256 hex>\t<sha512 hex>\t<committed_on>\t<reveal_on>
    ...

Each version block repeats every record known at that version, so a block is
always a superset of the one before it. Blocks are only ever appended.
"""

from __future__ import annotations

import enum
import hashlib
import hmac
import os
import re
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Iterable, Optional

from .errors import InvalidRecord, LedgerViolation, ParseError

_HEX64 = re.compile(r"^[0-9a-f]{64}$")
_HEX128 = re.compile(r"^[0-9a-f]{128}$")
_HEADER = re.compile(r"^#version (\d+) (\d{4}-\d{2}-\d{2})$")

# Published fingerprints of an external forecast document. The SHA-512 string
# is one hex digit short of a full digest as printed, so it cannot form a
# valid record; the SHA-256 string is well formed.
PUBLISHED_SHA256 = "4994beab18293be021d751d513b6fec0776fde9cf74c0098f7da8657487d950d"
PUBLISHED_SHA512 = (
    "ee20582b696a2ce880870b513e7b9e7ebb67bfe62e2cad50dd18276a5158765a"
    "f6fdf88d9fef6e047526c40478a865c722cab041386aa8efdd95da24dd9239d"
)


def _check_hex(value: str, pattern, label: str) -> str:
    if not isinstance(value, str) or not pattern.match(value):
        raise InvalidRecord(f"{label} must be lowercase hex of the exact digest length, got {value!r}")
    return value


@dataclass(frozen=True)
class CommitmentRecord:
    document_name: str
    sha256_hex: str
    sha512_hex: str
    committed_on: date
    reveal_on: date

    def __post_init__(self):
        if not self.document_name or any(c in self.document_name for c in "\t\r\n"):
            raise InvalidRecord(f"bad document name {self.document_name!r}")
        _check_hex(self.sha256_hex, _HEX64, "sha256")
        _check_hex(self.sha512_hex, _HEX128, "sha512")
        if self.committed_on > self.reveal_on:
            raise InvalidRecord("reveal date precedes commit date")

    def to_line(self) -> str:
        return "\t".join((
            self.document_name,
            self.sha256_hex,
            self.sha512_hex,
            self.committed_on.isoformat(),
            self.reveal_on.isoformat(),
        ))

    @classmethod
    def from_line(cls, line: str) -> "CommitmentRecord":
        parts = line.split("\t")
        if len(parts) != 5:
            raise InvalidRecord(f"expected 5 tab-separated fields, got {len(parts)}")
        try:
            committed, reveal = date.fromisoformat(parts[3]), date.fromisoformat(parts[4])
        except ValueError as exc:
            raise InvalidRecord(str(exc)) from None
        return cls(parts[0], parts[1], parts[2], committed, reveal)


def digests(document: bytes) -> tuple[str, str]:
    return hashlib.sha256(document).hexdigest(), hashlib.sha512(document).hexdigest()


def commit(document: bytes, name: str, committed_on: date, reveal_on: date) -> CommitmentRecord:
    sha256, sha512 = digests(document)
    return CommitmentRecord(name, sha256, sha512, committed_on, reveal_on)


class Verdict(enum.Enum):
    MATCH = "match"
    MISMATCH_SHA256 = "mismatch:sha256"
    MISMATCH_SHA512 = "mismatch:sha512"
    MISMATCH_BOTH = "mismatch:both"

    @property
    def ok(self) -> bool:
        return self is Verdict.MATCH


def verify_digests(document: bytes, sha256_hex: Optional[str] = None,
                   sha512_hex: Optional[str] = None) -> Verdict:
    """Check whichever published digests are given; at least one is required.

    Both digests are always computed and compared in full.
    """
    if sha256_hex is None and sha512_hex is None:
        raise InvalidRecord("no digest to verify against")
    if sha256_hex is not None:
        _check_hex(sha256_hex, _HEX64, "sha256")
    if sha512_hex is not None:
        _check_hex(sha512_hex, _HEX128, "sha512")
    actual256, actual512 = digests(document)
    ok256 = hmac.compare_digest(actual256, sha256_hex) if sha256_hex is not None else True
    ok512 = hmac.compare_digest(actual512, sha512_hex) if sha512_hex is not None else True
    if ok256 and ok512:
        return Verdict.MATCH
    if not ok256 and not ok512:
        return Verdict.MISMATCH_BOTH
    return Verdict.MISMATCH_SHA256 if not ok256 else Verdict.MISMATCH_SHA512


def verify(document: bytes, record: CommitmentRecord) -> Verdict:
    return verify_digests(document, record.sha256_hex, record.sha512_hex)


@dataclass(frozen=True)
class LedgerVersion:
    number: int
    date: date
    records: tuple


@dataclass(frozen=True)
class MasterLedger:
    versions: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "versions", tuple(self.versions))
        prev = None
        for expected, version in enumerate(self.versions, start=1):
            if version.number != expected:
                raise LedgerViolation(f"version {version.number} out of sequence, expected {expected}")
            if prev is not None:
                if version.date < prev.date:
                    raise LedgerViolation(f"version {version.number} is dated before version {prev.number}")
                missing = set(prev.records) - set(version.records)
                if missing:
                    names = ", ".join(sorted(r.document_name for r in missing))
                    raise LedgerViolation(f"version {version.number} drops or alters: {names}")
            names = [r.document_name for r in version.records]
            if len(names) != len(set(names)):
                raise LedgerViolation(f"version {version.number} lists a document twice")
            prev = version

    @property
    def latest(self) -> Optional[LedgerVersion]:
        return self.versions[-1] if self.versions else None

    def records(self) -> tuple:
        return self.latest.records if self.versions else ()


def append_version(ledger: MasterLedger, new_records: Iterable[CommitmentRecord], on: date) -> MasterLedger:
    """New ledger whose last version adds ``new_records`` to every earlier record.

    Re-listing an identical record is a no-op; re-listing a name with any
    different field is a :class:`LedgerViolation`.
    """
    prev = ledger.latest
    if prev is not None and on < prev.date:
        raise LedgerViolation(f"version date {on} precedes previous version date {prev.date}")
    records = list(prev.records) if prev else []
    by_name = {r.document_name: r for r in records}
    for record in new_records:
        known = by_name.get(record.document_name)
        if known is None:
            by_name[record.document_name] = record
            records.append(record)
        elif known != record:
            raise LedgerViolation(f"record {record.document_name!r} already committed with different fields")
    number = prev.number + 1 if prev else 1
    return MasterLedger(ledger.versions + (LedgerVersion(number, on, tuple(records)),))


def render_version(version: LedgerVersion) -> str:
    lines = [f"#version {version.number} {version.date.isoformat()}"]
    lines.extend(r.to_line() for r in version.records)
    return "\n".join(lines) + "\n"


def render_ledger(ledger: MasterLedger) -> bytes:
    return "".join(render_version(v) for v in ledger.versions).encode("utf-8")


def parse_ledger(data: bytes) -> MasterLedger:
    versions = []
    current = None
    for lineno, line in enumerate(data.decode("utf-8").split("\n"), start=1):
        if not line:
            continue
        header = _HEADER.match(line)
        if header:
            if current is not None:
                versions.append(LedgerVersion(current[0], current[1], tuple(current[2])))
            try:
                current = (int(header.group(1)), date.fromisoformat(header.group(2)), [])
            except ValueError:
                raise ParseError(f"bad version header {line!r}", line=lineno) from None
            continue
        if current is None:
            raise ParseError("record before the first #version header", line=lineno)
        try:
            current[2].append(CommitmentRecord.from_line(line))
        except InvalidRecord as exc:
            raise InvalidRecord(f"line {lineno}: {exc}") from None
    if current is not None:
        versions.append(LedgerVersion(current[0], current[1], tuple(current[2])))
    return MasterLedger(tuple(versions))


def load_ledger(path) -> MasterLedger:
    path = Path(path)
    if not path.exists():
        return MasterLedger()
    return parse_ledger(path.read_bytes())


def append_to_file(path, new_records: Iterable[CommitmentRecord], on: date) -> MasterLedger:
    """Append one version block to the ledger file and fsync it.

    The existing file is validated first and never rewritten.
    """
    path = Path(path)
    ledger = append_version(load_ledger(path), new_records, on)
    with open(path, "ab") as fh:
        fh.write(render_version(ledger.latest).encode("utf-8"))
        fh.flush()
        os.fsync(fh.fileno())
    return ledger
