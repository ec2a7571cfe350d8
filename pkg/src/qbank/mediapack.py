"""GIFT-with-media zip archives: one GIFT file at the root, images under one folder."""

from __future__ import annotations

import io
import os
import posixpath
import zipfile
from pathlib import Path
from typing import Mapping, Optional, Union

from .gift import emit_gift, parse_gift
from .model import (
    MediaLocation,
    MediaRef,
    QuestionBank,
    decode_source,
    warning,
)

DEFAULT_MEDIA_FOLDER = "images"
DEFAULT_GIFT_NAME = "questions.gift"
STORE_LIMIT = 1024
TEXT_EXTENSIONS = (".gift", ".txt")
_ZIP_EPOCH = (1980, 1, 1, 0, 0, 0)


class MediaError(Exception):
    """Media could not be resolved, packed or unpacked."""


class UnresolvedMediaError(MediaError):
    def __init__(self, missing: list[str], media_dir: Optional[Path] = None):
        where = f" in {media_dir}" if media_dir is not None else ""
        super().__init__(f"unresolved media reference(s){where}: {', '.join(missing)}")
        self.missing = missing


def collect_media_refs(bank: QuestionBank) -> list[MediaRef]:
    """Every distinct media name in the bank, with all the places it is used."""
    found: dict[str, list[MediaLocation]] = {}
    payloads: dict[str, bytes] = {}
    for index, q in enumerate(bank.questions):
        for ref in q.media:
            locations = found.setdefault(ref.name, [])
            locations.extend(MediaLocation(index, loc.field) for loc in ref.referenced_from)
            if ref.payload is not None:
                payloads.setdefault(ref.name, ref.payload)
    return [MediaRef(name, payloads.get(name), tuple(locs)) for name, locs in found.items()]


def _files_in(media_dir: Path) -> set[str]:
    """Relative POSIX paths of all files under ``media_dir``, exactly as stored on disk."""
    names = set()
    for root, _dirs, files in os.walk(media_dir):
        rel_root = Path(root).relative_to(media_dir)
        for f in files:
            names.add((rel_root / f).as_posix() if rel_root != Path(".") else f)
    return names


def _zip_entry(name: str, data: bytes) -> tuple[zipfile.ZipInfo, bytes]:
    info = zipfile.ZipInfo(name, date_time=_ZIP_EPOCH)
    info.compress_type = zipfile.ZIP_STORED if len(data) < STORE_LIMIT else zipfile.ZIP_DEFLATED
    info.create_system = 3
    info.external_attr = 0o644 << 16
    return info, data


def resolve_media(
    bank: QuestionBank,
    media_dir: Union[str, Path, None] = None,
    payloads: Optional[Mapping[str, bytes]] = None,
    *,
    missing_ok: bool = False,
) -> dict[str, bytes]:
    """Load bytes for every referenced name: attached payloads first, then ``media_dir`` (case-sensitive).

    Names that cannot be found raise :class:`UnresolvedMediaError` unless
    ``missing_ok`` is set, in which case they are simply absent from the result.
    """
    refs = collect_media_refs(bank)
    by_lower: dict[str, str] = {}
    for ref in refs:
        clash = by_lower.setdefault(ref.name.lower(), ref.name)
        if clash != ref.name:
            raise MediaError(f"media names differ only by case: {clash!r} and {ref.name!r}")

    resolved: dict[str, bytes] = {}
    extra = dict(payloads or {})
    for ref in refs:
        if ref.payload is not None:
            resolved[ref.name] = ref.payload
        elif ref.name in extra:
            resolved[ref.name] = extra[ref.name]

    missing = [ref.name for ref in refs if ref.name not in resolved]
    if missing and media_dir is not None:
        media_dir = Path(media_dir)
        if not media_dir.is_dir():
            raise MediaError(f"media directory not found: {media_dir}")
        on_disk = _files_in(media_dir)
        for name in missing:
            if name in on_disk:
                resolved[name] = (media_dir / name).read_bytes()
        missing = [name for name in missing if name not in resolved]
    if missing and not missing_ok:
        raise UnresolvedMediaError(missing, Path(media_dir) if media_dir is not None else None)
    return resolved


def bundle_gift_media(
    bank: QuestionBank,
    media_dir: Union[str, Path, None] = None,
    *,
    payloads: Optional[Mapping[str, bytes]] = None,
    media_folder: str = DEFAULT_MEDIA_FOLDER,
    gift_name: str = DEFAULT_GIFT_NAME,
) -> bytes:
    """Build a deterministic GIFT-with-media zip for ``bank``.

    The archive holds ``gift_name`` first, then each referenced file as
    ``media_folder/<name>`` sorted by name. Files in ``media_dir`` that no
    question references are left out.
    """
    if not collect_media_refs(bank):
        raise MediaError("bank references no media; write plain GIFT instead of a zip archive")
    gift_text = emit_gift(bank)
    media = resolve_media(bank, media_dir, payloads)
    folder = media_folder.strip("/")

    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        entries = [_zip_entry(gift_name, gift_text.encode("utf-8"))]
        entries += [_zip_entry(f"{folder}/{name}", media[name]) for name in sorted(media)]
        for info, data in entries:
            zf.writestr(info, data)
    return buf.getvalue()


def unbundle_gift_media(archive: bytes) -> tuple[QuestionBank, list[MediaRef]]:
    """Read a GIFT-with-media zip back into a bank plus media refs carrying their bytes.

    References with no matching archive entry are reported as warnings on the bank.
    """
    try:
        zf = zipfile.ZipFile(io.BytesIO(archive))
        names = zf.namelist()
    except (zipfile.BadZipFile, OSError, ValueError) as exc:
        raise MediaError(f"not a readable zip archive: {exc}") from exc

    with zf:
        roots = [n for n in names if "/" not in n and n.lower().endswith(TEXT_EXTENSIONS)]
        if len(roots) != 1:
            found = ", ".join(roots) if roots else "none"
            raise MediaError(f"archive must hold exactly one root-level GIFT text file (found: {found})")
        try:
            source = decode_source(zf.read(roots[0]))
            files = {n: zf.read(n) for n in names if "/" in n and not n.endswith("/")}
        except (zipfile.BadZipFile, OSError, ValueError) as exc:
            raise MediaError(f"corrupt archive entry: {exc}") from exc

    bank = parse_gift(source)
    by_relative: dict[str, bytes] = {}
    for path, data in files.items():
        by_relative.setdefault(path.split("/", 1)[1], data)

    diagnostics = list(bank.diagnostics)
    refs = []
    for ref in collect_media_refs(bank):
        payload = files.get(posixpath.normpath(ref.name), by_relative.get(ref.name))
        if payload is None:
            first = ref.referenced_from[0].question if ref.referenced_from else None
            q = bank.questions[first] if first is not None else None
            diagnostics.append(
                warning(q.line if q else 1, q.column if q else 1, "media.dangling", f"image {ref.name!r} is not in the archive", first)
            )
        refs.append(MediaRef(ref.name, payload, ref.referenced_from))
    return QuestionBank(bank.questions, diagnostics), refs
