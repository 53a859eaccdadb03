"""Aho-Corasick automaton over normalized token sequences.

Tokens of a pattern (and of a document) are joined with a single 0x1F unit
separator byte, and a hit only counts when it starts and ends on token
boundaries, so ``art`` never fires inside ``heart``. The scan makes one
left-to-right pass; every byte either advances the input cursor or follows a
failure link to a strictly shallower state, bounding the work at twice the
input length.

Goto transitions are stored densely (256-entry tables) for the root and its
first two levels, where nearly every scan spends its time, and as sorted
sparse lists below that.
"""

from __future__ import annotations

import io
import os
import struct
import zlib
from array import array
from bisect import bisect_left
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ConfigurationMismatchError, IndexFormatError
from .normalize import NormalizedText

SEP = 0x1F
SEP_BYTE = b"\x1f"
DENSE_DEPTH = 2
MAGIC = b"CMN1"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class Payload:
    concept_id: str
    original_term: str
    semantic_types: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.semantic_types:
            raise ValueError("payload needs at least one semantic type")
        object.__setattr__(self, "semantic_types", tuple(sorted(set(self.semantic_types))))


@dataclass(frozen=True)
class Pattern:
    byte_length: int
    token_count: int
    payloads: tuple[Payload, ...]


@dataclass(frozen=True)
class RawMatch:
    start_token: int
    end_token: int
    payloads: tuple[Payload, ...]
    pattern_id: int = -1


@dataclass
class ScanStats:
    """Counts goto lookups (input advances plus failure hops) in one scan."""

    steps: int = 0
    input_bytes: int = 0


def pattern_key(tokens: Sequence[str]) -> bytes:
    if not tokens:
        raise ValueError("pattern has no tokens")
    if any(not t for t in tokens):
        raise ValueError(f"pattern {tuple(tokens)!r} contains an empty token")
    return SEP_BYTE.join(t.encode("utf-8") for t in tokens)


class Automaton:
    """Immutable goto/failure/output machine; build with :func:`build`."""

    __slots__ = ("fingerprint", "patterns", "_goto", "_fail", "_own", "_out", "_depth")

    def __init__(self, fingerprint: bytes, patterns: list[Pattern], goto: list,
                 fail: array, own: list[tuple[int, ...]]) -> None:
        if len(fingerprint) != 32:
            raise ValueError("fingerprint must be 32 bytes")
        self.fingerprint = bytes(fingerprint)
        self.patterns = patterns
        self._goto = goto
        self._fail = fail
        self._own = own
        self._depth = _depths(goto)
        # Output-link flattening: each state reports its failure target's hits too.
        # BFS order guarantees the failure target is finalized first.
        out: list[tuple[int, ...]] = [()] * len(goto)
        for s in range(1, len(goto)):
            out[s] = own[s] + out[fail[s]]
        self._out = out

    @property
    def node_count(self) -> int:
        return len(self._goto)

    @property
    def pattern_count(self) -> int:
        return len(self.patterns)

    def fail(self, state: int) -> int:
        return self._fail[state]

    def depth(self, state: int) -> int:
        return self._depth[state]

    def outputs(self, state: int) -> tuple[int, ...]:
        return self._out[state]

    def edges(self, state: int) -> list[tuple[int, int]]:
        g = self._goto[state]
        if isinstance(g, array):
            return [(b, t) for b, t in enumerate(g) if t >= 0]
        keys, targets = g
        return list(zip(keys, targets))

    def goto(self, state: int, byte: int) -> int:
        """Next state, or -1 when there is no transition."""
        g = self._goto[state]
        if isinstance(g, array):
            return g[byte]
        keys, targets = g
        i = bisect_left(keys, byte)
        if i < len(keys) and keys[i] == byte:
            return targets[i]
        return -1

    def state_for(self, key: bytes) -> int:
        s = 0
        for b in key:
            s = self.goto(s, b)
            if s < 0:
                return -1
        return s


def _depths(goto: list) -> array:
    depth = array("I", [0]) * len(goto)
    for s in range(len(goto)):
        g = goto[s]
        targets = (t for t in g if t >= 0) if isinstance(g, array) else g[1]
        for t in targets:
            depth[t] = depth[s] + 1
    return depth


def _freeze_goto(children: dict[int, int], depth: int):
    if depth <= DENSE_DEPTH:
        table = array("i", [-1]) * 256
        for b, t in children.items():
            table[b] = t
        return table
    keys = bytes(sorted(children))
    return keys, array("I", (children[b] for b in keys))


def build(patterns: Iterable[tuple[Sequence[str], Payload]], fingerprint: bytes) -> Automaton:
    """Compile (token sequence, payload) pairs into an automaton.

    Identical token sequences share one pattern whose payload list is the
    union of theirs, in first-seen order.
    """
    key_index: dict[bytes, int] = {}
    keys: list[bytes] = []
    token_counts: list[int] = []
    payloads: list[list[Payload]] = []
    for tokens, payload in patterns:
        key = pattern_key(tokens)
        pid = key_index.get(key)
        if pid is None:
            pid = key_index[key] = len(keys)
            keys.append(key)
            token_counts.append(len(tokens))
            payloads.append([])
        if payload not in payloads[pid]:
            payloads[pid].append(payload)
    if not keys:
        raise ValueError("cannot build an automaton from an empty pattern list")

    # 1. trie, in insertion order
    children: list[dict[int, int]] = [{}]
    terminal: list[list[int]] = [[]]
    for pid, key in enumerate(keys):
        s = 0
        for b in key:
            nxt = children[s].get(b)
            if nxt is None:
                nxt = len(children)
                children[s][b] = nxt
                children.append({})
                terminal.append([])
            s = nxt
        terminal[s].append(pid)

    # 2. renumber states breadth-first so saved files are in BFS order
    order = [0]
    q = deque([0])
    while q:
        s = q.popleft()
        for b in sorted(children[s]):
            t = children[s][b]
            order.append(t)
            q.append(t)
    new_id = {old: new for new, old in enumerate(order)}
    kids = [{b: new_id[t] for b, t in children[old].items()} for old in order]
    own = [tuple(terminal[old]) for old in order]

    # 3. failure links, breadth-first
    n = len(kids)
    fail = array("I", [0]) * n
    depth = [0] * n
    for s in range(n):
        for b, t in sorted(kids[s].items()):
            depth[t] = depth[s] + 1
            if s == 0:
                fail[t] = 0
                continue
            f = fail[s]
            while True:
                nxt = kids[f].get(b)
                if nxt is not None:
                    fail[t] = nxt
                    break
                if f == 0:
                    fail[t] = 0
                    break
                f = fail[f]

    goto = [_freeze_goto(kids[s], depth[s]) for s in range(n)]
    pats = [Pattern(len(k), c, tuple(p)) for k, c, p in zip(keys, token_counts, payloads)]
    return Automaton(fingerprint, pats, goto, fail, own)


def _scan(auto: Automaton, data: bytes, stats: ScanStats | None):
    """Yield (end_byte, pattern_id) for every boundary-aligned hit."""
    goto = auto._goto
    fail = auto._fail
    out = auto._out
    patterns = auto.patterns
    n = len(data)
    state = 0
    steps = 0
    for pos in range(n):
        byte = data[pos]
        while True:
            steps += 1
            g = goto[state]
            if isinstance(g, array):
                nxt = g[byte]
            else:
                keys, targets = g
                i = bisect_left(keys, byte)
                nxt = targets[i] if i < len(keys) and keys[i] == byte else -1
            if nxt >= 0:
                state = nxt
                break
            if state == 0:
                break
            state = fail[state]
        if not out[state]:
            continue
        end = pos + 1
        if end != n and data[end] != SEP:
            continue
        for pid in out[state]:
            start = end - patterns[pid].byte_length
            if start == 0 or data[start - 1] == SEP:
                yield end, pid
    if stats is not None:
        stats.steps += steps
        stats.input_bytes += n


def search(auto: Automaton, nt: NormalizedText, stats: ScanStats | None = None) -> list[RawMatch]:
    """All dictionary occurrences in ``nt``, ordered by end position.

    Overlapping and nested occurrences are all reported.
    """
    if nt.fingerprint != auto.fingerprint:
        raise ConfigurationMismatchError(
            "normalization settings of the text differ from those the index was built with "
            f"(text {nt.fingerprint.hex()[:12]}, index {auto.fingerprint.hex()[:12]})")
    if not nt.tokens:
        return []
    encoded = [t.encode("utf-8") for t in nt.tokens]
    data = SEP_BYTE.join(encoded)
    start_of: dict[int, int] = {}
    end_of: dict[int, int] = {}
    offset = 0
    for i, tok in enumerate(encoded):
        start_of[offset] = i
        offset += len(tok)
        end_of[offset] = i + 1
        offset += 1
    matches = []
    for end, pid in _scan(auto, data, stats):
        pat = auto.patterns[pid]
        matches.append(RawMatch(start_of[end - pat.byte_length], end_of[end], pat.payloads, pid))
    return matches


# -- persistence ------------------------------------------------------------

_HEADER = struct.Struct("<4sH32sI")


def _pack_str(buf: io.BytesIO, s: str) -> None:
    raw = s.encode("utf-8")
    buf.write(struct.pack("<I", len(raw)))
    buf.write(raw)


def dumps_index(auto: Automaton) -> bytes:
    buf = io.BytesIO()
    buf.write(_HEADER.pack(MAGIC, FORMAT_VERSION, auto.fingerprint, auto.node_count))
    for s in range(auto.node_count):
        edges = auto.edges(s)
        own = auto._own[s]
        buf.write(struct.pack("<IHI", auto._fail[s], len(edges), len(own)))
        buf.write(bytes(b for b, _ in edges))
        buf.write(struct.pack(f"<{len(edges)}I", *(t for _, t in edges)))
        buf.write(struct.pack(f"<{len(own)}I", *own))
    buf.write(struct.pack("<I", auto.pattern_count))
    for pat in auto.patterns:
        buf.write(struct.pack("<III", pat.byte_length, pat.token_count, len(pat.payloads)))
        for p in pat.payloads:
            _pack_str(buf, p.concept_id)
            _pack_str(buf, p.original_term)
            buf.write(struct.pack("<H", len(p.semantic_types)))
            for st in p.semantic_types:
                _pack_str(buf, st)
    body = buf.getvalue()
    return body + struct.pack("<I", zlib.crc32(body))


class _Reader:
    def __init__(self, data: bytes, pos: int = 0) -> None:
        self.data = data
        self.pos = pos

    def take(self, n: int) -> bytes:
        end = self.pos + n
        if end > len(self.data):
            raise IndexFormatError("index file is truncated")
        chunk = self.data[self.pos:end]
        self.pos = end
        return chunk

    def unpack(self, fmt: str):
        st = struct.Struct(fmt)
        return st.unpack(self.take(st.size))

    def string(self) -> str:
        (n,) = self.unpack("<I")
        try:
            return self.take(n).decode("utf-8")
        except UnicodeDecodeError as e:
            raise IndexFormatError(f"bad string in index: {e}") from None


def loads_index(data: bytes) -> Automaton:
    if len(data) < _HEADER.size + 4:
        raise IndexFormatError("index file is truncated")
    if data[:4] != MAGIC:
        raise IndexFormatError("not a cmine index (bad magic)")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    magic, version, fingerprint, node_count = _HEADER.unpack_from(body)
    if version != FORMAT_VERSION:
        raise IndexFormatError(f"unsupported index format version {version} (expected {FORMAT_VERSION})")
    if zlib.crc32(body) != crc:
        raise IndexFormatError("index checksum mismatch (file is truncated or corrupt)")
    r = _Reader(body, _HEADER.size)
    fail = array("I", [0]) * node_count
    kids: list[dict[int, int]] = []
    own: list[tuple[int, ...]] = []
    for s in range(node_count):
        f, n_edges, n_own = r.unpack("<IHI")
        keys = r.take(n_edges)
        targets = r.unpack(f"<{n_edges}I")
        own.append(r.unpack(f"<{n_own}I"))
        if f >= node_count or any(t >= node_count or t <= s for t in targets):
            raise IndexFormatError(f"state {s} references an invalid state")
        fail[s] = f
        kids.append(dict(zip(keys, targets)))
    (pattern_count,) = r.unpack("<I")
    patterns = []
    for _ in range(pattern_count):
        blen, tcount, n_payloads = r.unpack("<III")
        payloads = []
        for _ in range(n_payloads):
            cid = r.string()
            term = r.string()
            (n_types,) = r.unpack("<H")
            types = tuple(r.string() for _ in range(n_types))
            try:
                payloads.append(Payload(cid, term, types))
            except ValueError as e:
                raise IndexFormatError(str(e)) from None
        patterns.append(Pattern(blen, tcount, tuple(payloads)))
    if r.pos != len(body):
        raise IndexFormatError("trailing bytes after payload table")
    if any(p >= pattern_count for o in own for p in o):
        raise IndexFormatError("state output references an unknown pattern")
    depth = [0] * node_count
    for s in range(node_count):
        for t in kids[s].values():
            depth[t] = depth[s] + 1
    goto = [_freeze_goto(kids[s], depth[s]) for s in range(node_count)]
    return Automaton(fingerprint, patterns, goto, fail, own)


def save_index(auto: Automaton, path: str | os.PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps_index(auto))


def load_index(path: str | os.PathLike) -> Automaton:
    with open(path, "rb") as fh:
        return loads_index(fh.read())
