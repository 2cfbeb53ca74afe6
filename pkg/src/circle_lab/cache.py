"""On-disk cache for representation tables and Gauss-sum tables.

Representation table file layout (little endian):

    magic "CLRT" | u16 version | u16 k | u32 d | u32 lambda_max
    for each count: u32 limb count, then that many u64 limbs
    32-byte SHA-256 of everything before it

Gauss tables use magic "CLGT" with header fields k, q_max (in the d slot)
and the number of stored values, followed by complex128 pairs and the
same SHA-256 trailer.  Files are written to a temporary name and renamed
into place, so concurrent writers never leave a torn file.
"""

import hashlib
import os
import struct
import tempfile
import warnings
from pathlib import Path

import numpy as np

from circle_lab.exponents import FormParams
from circle_lab.lattice import RepresentationTable, count_representations

VERSION = 1
REP_MAGIC = b"CLRT"
GAUSS_MAGIC = b"CLGT"
_HEADER = struct.Struct("<4sHHII")
ENV_VAR = "CIRCLE_LAB_CACHE"

_warned = set()


class CacheCorruptError(Exception):
    pass


def resolve_cache_dir(cache_dir=None):
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    return Path(cache_dir) if cache_dir is not None else None


def rep_path(cache_dir, params, lambda_max):
    return Path(cache_dir) / f"rep_k{params.k}_d{params.d}_L{lambda_max}.bin"


def gauss_path(cache_dir, k, q_max):
    return Path(cache_dir) / f"gauss_k{k}_Q{q_max}.bin"


def _limbs(n):
    n = int(n)
    if n < 0:
        raise ValueError("counts are nonnegative")
    out = []
    while True:
        out.append(n & 0xFFFFFFFFFFFFFFFF)
        n >>= 64
        if not n:
            return out


def encode_table(table):
    p = table.params
    parts = [_HEADER.pack(REP_MAGIC, VERSION, p.k, p.d, table.lambda_max)]
    for c in table.counts:
        limbs = _limbs(c)
        parts.append(struct.pack(f"<I{len(limbs)}Q", len(limbs), *limbs))
    body = b"".join(parts)
    return body + hashlib.sha256(body).digest()


def _split_checked(blob, magic):
    if len(blob) < _HEADER.size + 32:
        raise CacheCorruptError("file too short")
    body, digest = blob[:-32], blob[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CacheCorruptError("checksum mismatch")
    head = _HEADER.unpack_from(body)
    if head[0] != magic or head[1] != VERSION:
        raise CacheCorruptError("bad magic or version")
    return body, head


def decode_table(blob):
    body, (_, _, k, d, lam_max) = _split_checked(blob, REP_MAGIC)
    pos = _HEADER.size
    counts = []
    for _ in range(lam_max + 1):
        (n,) = struct.unpack_from("<I", body, pos)
        limbs = struct.unpack_from(f"<{n}Q", body, pos + 4)
        pos += 4 + 8 * n
        counts.append(sum(l << (64 * i) for i, l in enumerate(limbs)))
    if pos != len(body):
        raise CacheCorruptError("trailing bytes")
    big = max(counts) >= 1 << 62
    arr = np.array(counts, dtype=object if big else np.int64)
    return RepresentationTable(FormParams(k, d), lam_max, arr)


def encode_gauss(k, q_max, values):
    values = np.asarray(values, dtype=np.complex128)
    body = _HEADER.pack(GAUSS_MAGIC, VERSION, k, q_max, len(values)) + values.astype("<c16").tobytes()
    return body + hashlib.sha256(body).digest()


def decode_gauss(blob):
    body, (_, _, k, q_max, n) = _split_checked(blob, GAUSS_MAGIC)
    vals = np.frombuffer(body, dtype="<c16", count=n, offset=_HEADER.size)
    return k, q_max, vals.astype(np.complex128)


def atomic_write(path, data):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _warn_once(cache_dir, exc):
    key = str(cache_dir)
    if key not in _warned:
        _warned.add(key)
        warnings.warn(f"cache directory {cache_dir} is not writable ({exc}); continuing without caching",
                      RuntimeWarning, stacklevel=3)


def _quarantine(path):
    try:
        os.replace(path, str(path) + ".bad")
    except OSError:
        pass


def _lookup(path, decode, expected):
    if not path.exists():
        return None
    try:
        obj = decode(path.read_bytes())
    except (CacheCorruptError, struct.error, ValueError):
        _quarantine(path)
        return None
    if not expected(obj):
        _quarantine(path)
        return None
    return obj


def cache_lookup(kind, k, d, bound, cache_dir=None):
    """Cached table for ``(kind, k, d, bound)`` or ``None`` on a miss.

    ``kind`` is ``"rep"`` (``bound`` = lambda_max) or ``"gauss"`` (``bound`` =
    q_max, ``d`` ignored).  Corrupt files are renamed to ``*.bad``.
    """
    cache_dir = resolve_cache_dir(cache_dir)
    if cache_dir is None:
        return None
    if kind == "rep":
        params = FormParams(k, d)
        return _lookup(rep_path(cache_dir, params, bound), decode_table,
                       lambda t: t.params == params and t.lambda_max == bound)
    if kind == "gauss":
        return _lookup(gauss_path(cache_dir, k, bound), decode_gauss, lambda t: t[0] == k and t[1] == bound)
    raise ValueError(f"unknown cache kind {kind!r}")


def _store(path, data, cache_dir):
    try:
        Path(cache_dir).mkdir(parents=True, exist_ok=True)
        atomic_write(path, data)
        return True
    except OSError as exc:
        _warn_once(cache_dir, exc)
        return False


def cached_representation_table(params, lambda_max, cache_dir=None, **kw):
    """Return ``(table, hit)``; computes and stores on a miss."""
    cache_dir = resolve_cache_dir(cache_dir)
    hit = cache_lookup("rep", params.k, params.d, lambda_max, cache_dir)
    if hit is not None:
        return hit, True
    table = count_representations(params, lambda_max, **kw)
    if cache_dir is not None:
        _store(rep_path(cache_dir, params, lambda_max), encode_table(table), cache_dir)
    return table, False


def gauss_zero_values(k, q_max):
    """G(q; a, 0) for q = 1..q_max and units a in increasing order, concatenated."""
    from circle_lab.expsum import gauss_table

    return np.concatenate([gauss_table(q, k)[1][:, 0] for q in range(1, q_max + 1)])


def cached_gauss_values(k, q_max, cache_dir=None):
    cache_dir = resolve_cache_dir(cache_dir)
    hit = cache_lookup("gauss", k, 0, q_max, cache_dir)
    if hit is not None:
        return hit[2], True
    vals = gauss_zero_values(k, q_max)
    if cache_dir is not None:
        _store(gauss_path(cache_dir, k, q_max), encode_gauss(k, q_max, vals), cache_dir)
    return vals, False
