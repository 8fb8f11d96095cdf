"""Framed wire format and the byte channels that carry it.

Every frame is::

    magic "BC12" | version 0x01 | type | u32 payload length | payload

with all integers big-endian.  Typed payloads:

    PARAM_M     u64 m
    TB_LIST     u32 count, count x u16 block index
    T_LIST      u32 bit count, packed bits MSB first (1 = PLUS)
    CIPHERTEXT  u32 bit count, packed bits MSB first
    RETRY       u64 new m
    ABORT       u16 reason code
"""

from __future__ import annotations

import enum
import queue
import socket
import struct
import threading
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import (
    BadMagic,
    LengthMismatch,
    TransportError,
    TruncatedFrame,
    UnknownFrameType,
    UnknownVersion,
)

MAGIC = b"BC12"
VERSION = 0x01
HEADER = struct.Struct(">4sBBI")
HEADER_LEN = HEADER.size
MAX_PAYLOAD = 2**32 - 1
MAX_BLOCK_INDEX = 2**16 - 1
DEFAULT_TIMEOUT = 30.0


class FrameType(enum.IntEnum):
    PARAM_M = 0x01
    TB_LIST = 0x02
    T_LIST = 0x03
    CIPHERTEXT = 0x04
    RETRY = 0x05
    ABORT = 0x06


class AbortReason(enum.IntEnum):
    RETRIES_EXHAUSTED = 1
    PROTOCOL_ERROR = 2


@dataclass(frozen=True)
class Frame:
    type: FrameType
    payload: bytes = b""

    # typed constructors

    @classmethod
    def param_m(cls, m: int) -> Frame:
        return cls(FrameType.PARAM_M, struct.pack(">Q", m))

    @classmethod
    def retry(cls, m: int) -> Frame:
        return cls(FrameType.RETRY, struct.pack(">Q", m))

    @classmethod
    def abort(cls, reason: int) -> Frame:
        return cls(FrameType.ABORT, struct.pack(">H", int(reason)))

    @classmethod
    def tb_list(cls, indices) -> Frame:
        arr = np.asarray(indices, dtype=np.int64).reshape(-1)
        if arr.size and (arr.min() < 0 or arr.max() > MAX_BLOCK_INDEX):
            raise ValueError("block index does not fit in 16 bits")
        return cls(FrameType.TB_LIST, struct.pack(">I", arr.size) + arr.astype(">u2").tobytes())

    @classmethod
    def t_list(cls, marks) -> Frame:
        return cls(FrameType.T_LIST, _pack_bits(np.asarray(marks, dtype=np.uint8)))

    @classmethod
    def ciphertext(cls, bits) -> Frame:
        return cls(FrameType.CIPHERTEXT, _pack_bits(np.asarray(bits, dtype=np.uint8)))

    # typed accessors

    def m(self) -> int:
        self._expect(FrameType.PARAM_M, FrameType.RETRY)
        if len(self.payload) != 8:
            raise LengthMismatch(f"{self.type.name} payload must be 8 bytes")
        return struct.unpack(">Q", self.payload)[0]

    def reason(self) -> int:
        self._expect(FrameType.ABORT)
        if len(self.payload) != 2:
            raise LengthMismatch("ABORT payload must be 2 bytes")
        return struct.unpack(">H", self.payload)[0]

    def indices(self) -> np.ndarray:
        self._expect(FrameType.TB_LIST)
        if len(self.payload) < 4:
            raise LengthMismatch("TB_LIST payload shorter than its count field")
        (count,) = struct.unpack_from(">I", self.payload)
        if len(self.payload) != 4 + 2 * count:
            raise LengthMismatch(f"TB_LIST declares {count} entries, payload disagrees")
        return np.frombuffer(self.payload, dtype=">u2", offset=4).astype(np.int64)

    def marks(self) -> np.ndarray:
        self._expect(FrameType.T_LIST)
        return _unpack_bits(self.payload).astype(bool)

    def bits(self) -> np.ndarray:
        self._expect(FrameType.CIPHERTEXT)
        return _unpack_bits(self.payload)

    def _expect(self, *types: FrameType) -> None:
        if self.type not in types:
            raise TypeError(f"{self.type.name} frame has no such field")


def _pack_bits(bits: np.ndarray) -> bytes:
    return struct.pack(">I", bits.size) + np.packbits(bits).tobytes()


def _unpack_bits(payload: bytes) -> np.ndarray:
    if len(payload) < 4:
        raise LengthMismatch("bit payload shorter than its count field")
    (count,) = struct.unpack_from(">I", payload)
    if len(payload) != 4 + (count + 7) // 8:
        raise LengthMismatch(f"bit payload declares {count} bits, payload disagrees")
    return np.unpackbits(np.frombuffer(payload, dtype=np.uint8, offset=4), count=count)


def encode_frame(frame: Frame) -> bytes:
    if len(frame.payload) > MAX_PAYLOAD:
        raise ValueError("payload too large for a 32-bit length field")
    return HEADER.pack(MAGIC, VERSION, int(frame.type), len(frame.payload)) + frame.payload


def _check_header(buf) -> tuple[FrameType, int]:
    magic, version, ftype, length = HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {bytes(magic)!r}")
    if version != VERSION:
        raise UnknownVersion(f"unsupported version {version}")
    try:
        return FrameType(ftype), length
    except ValueError:
        raise UnknownFrameType(f"unknown frame type 0x{ftype:02x}") from None


def decode_frame(data: bytes) -> tuple[Frame, bytes]:
    """Decode one frame from the front of ``data``; return it and the remainder."""
    if len(data) < HEADER_LEN:
        raise TruncatedFrame(f"{len(data)} bytes, header needs {HEADER_LEN}")
    ftype, length = _check_header(data)
    end = HEADER_LEN + length
    if len(data) < end:
        raise TruncatedFrame(f"payload needs {length} bytes, have {len(data) - HEADER_LEN}")
    return Frame(ftype, bytes(data[HEADER_LEN:end])), bytes(data[end:])


def decode_all(data: bytes) -> list[Frame]:
    frames = []
    while data:
        frame, data = decode_frame(data)
        frames.append(frame)
    return frames


class FrameDecoder:
    """Incremental decoder: feed arbitrary chunks, get whole frames back."""

    def __init__(self) -> None:
        self._buf = bytearray()

    def feed(self, chunk: bytes) -> list[Frame]:
        self._buf += chunk
        frames = []
        while len(self._buf) >= HEADER_LEN:
            ftype, length = _check_header(self._buf)
            end = HEADER_LEN + length
            if len(self._buf) < end:
                break
            frames.append(Frame(ftype, bytes(self._buf[HEADER_LEN:end])))
            del self._buf[:end]
        return frames

    @property
    def pending(self) -> int:
        return len(self._buf)


@dataclass
class Transcript:
    """Everything that crossed the channel, in order: ``(direction, frame)``."""

    entries: list[tuple[str, Frame]] = field(default_factory=list)

    def record(self, direction: str, frame: Frame) -> None:
        self.entries.append((direction, frame))

    @property
    def frames(self) -> list[Frame]:
        return [f for _, f in self.entries]

    def to_bytes(self) -> bytes:
        return b"".join(encode_frame(f) for f in self.frames)

    @classmethod
    def from_bytes(cls, data: bytes) -> Transcript:
        return cls([("?", f) for f in decode_all(data)])


class Channel:
    """Frame-level wrapper over a reliable byte stream.

    Subclasses supply ``_write`` and ``_read``.  When a transcript is
    attached, each sent frame is recorded under this end's name; with
    ``record_received`` inbound frames are recorded too, under ``"peer"``.
    Two ends sharing one transcript should record only what they send.
    """

    def __init__(self, name: str = "", transcript: Transcript | None = None,
                 timeout: float | None = DEFAULT_TIMEOUT, record_received: bool = False) -> None:
        self.name = name
        self.transcript = transcript
        self.timeout = timeout
        self.record_received = record_received
        self._decoder = FrameDecoder()
        self._ready: list[Frame] = []

    def send(self, frame: Frame) -> None:
        self._write(encode_frame(frame))
        if self.transcript is not None:
            self.transcript.record(self.name, frame)

    def send_all(self, frames: Iterable[Frame]) -> None:
        for frame in frames:
            self.send(frame)

    def recv(self) -> Frame:
        while not self._ready:
            self._ready.extend(self._decoder.feed(self._read()))
        frame = self._ready.pop(0)
        if self.transcript is not None and self.record_received:
            self.transcript.record("peer", frame)
        return frame

    def close(self) -> None:
        pass

    def _write(self, data: bytes) -> None:
        raise NotImplementedError

    def _read(self) -> bytes:
        raise NotImplementedError

    def __enter__(self):
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class LoopbackChannel(Channel):
    """One end of an in-memory byte pipe; build a connected pair with ``pair``."""

    _CLOSED = object()

    def __init__(self, inbox: queue.Queue, outbox: queue.Queue, **kw) -> None:
        super().__init__(**kw)
        self._inbox, self._outbox = inbox, outbox

    @classmethod
    def pair(cls, transcript: Transcript | None = None,
             timeout: float | None = DEFAULT_TIMEOUT) -> tuple[LoopbackChannel, LoopbackChannel]:
        ab: queue.Queue = queue.Queue()
        ba: queue.Queue = queue.Queue()
        return (cls(ba, ab, name="alice", transcript=transcript, timeout=timeout),
                cls(ab, ba, name="bob", transcript=transcript, timeout=timeout))

    def _write(self, data: bytes) -> None:
        self._outbox.put(data)

    def write_raw(self, data: bytes) -> None:
        """Push bytes without framing; lets tests split or coalesce frames."""
        self._outbox.put(data)

    def _read(self) -> bytes:
        try:
            data = self._inbox.get(timeout=self.timeout)
        except queue.Empty:
            raise TransportError(f"no data within {self.timeout} s") from None
        if data is self._CLOSED:
            raise TransportError("peer closed the channel")
        return data

    def poll(self) -> bool:
        """True if a whole frame can be received without blocking."""
        while not self._ready:
            try:
                data = self._inbox.get_nowait()
            except queue.Empty:
                return False
            if data is self._CLOSED:
                self._inbox.put(data)
                return False
            self._ready.extend(self._decoder.feed(data))
        return True

    def close(self) -> None:
        self._outbox.put(self._CLOSED)


class SocketChannel(Channel):
    def __init__(self, sock: socket.socket, **kw) -> None:
        super().__init__(**kw)
        self.sock = sock
        sock.settimeout(self.timeout)
        self._lock = threading.Lock()

    @classmethod
    def connect(cls, host: str, port: int, **kw) -> SocketChannel:
        timeout = kw.get("timeout", DEFAULT_TIMEOUT)
        try:
            sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise TransportError(f"cannot connect to {host}:{port}: {exc}") from exc
        return cls(sock, **kw)

    def _write(self, data: bytes) -> None:
        with self._lock:
            try:
                self.sock.sendall(data)
            except OSError as exc:
                raise TransportError(f"send failed: {exc}") from exc

    def _read(self) -> bytes:
        try:
            data = self.sock.recv(65536)
        except socket.timeout:
            raise TransportError(f"no data within {self.timeout} s") from None
        except OSError as exc:
            raise TransportError(f"receive failed: {exc}") from exc
        if not data:
            raise TransportError("peer closed the connection")
        return data

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass


def parse_hostport(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"expected host:port, got {text!r}")
    return host or "127.0.0.1", int(port)
