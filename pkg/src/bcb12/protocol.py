"""Alice and Bob session state machines.

Both parties are sans-IO: ``handle(frame)`` consumes one inbound frame and
returns the frames to send back.  ``run_session`` pumps two of them over an
in-memory loopback; ``run_alice``/``run_bob`` drive one party over any
:class:`~bcb12.channel.Channel`.

Message order on the wire::

    Alice -> Bob   PARAM_M
    Bob -> Alice   TB_LIST
    Alice -> Bob   T_LIST, CIPHERTEXT         (key long enough)
                   RETRY(m') -> TB_LIST ...   (key too short)
                   ABORT                      (retries exhausted)
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import AbortReason, Channel, Frame, FrameType, LoopbackChannel, Transcript
from .errors import NoMatch, ProtocolError
from .keyder import KeyMaterial, classify_sequence, compare_lists, derive_key
from .partition import SetPartition
from .vernam import as_bits, xor_cipher

log = logging.getLogger(__name__)


class MPolicy(enum.Enum):
    KEEP = "keep"
    DOUBLE = "double"


class Phase(enum.Enum):
    AWAITING_M = "awaiting-m"
    AWAITING_TB = "awaiting-tb"
    AWAITING_T = "awaiting-t"
    AWAITING_CIPHERTEXT = "awaiting-ciphertext"
    DONE = "done"
    FAILED = "failed"


@dataclass
class SessionConfig:
    partition: SetPartition
    s: int = 1
    seed: int | None = None
    max_retries: int = 8
    m_policy: MPolicy = MPolicy.DOUBLE
    # Explicit draws replacing the random ones (replays of recorded sessions).
    sequence: Sequence[int] | None = None

    def __post_init__(self) -> None:
        if self.s < 1:
            raise ValueError(f"amplification parameter must be >= 1, got {self.s}")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")

    def draws(self):
        """Return ``draw(m) -> array`` of m integers in 1..n."""
        n = self.partition.n
        if self.sequence is not None:
            fixed = np.asarray(self.sequence, dtype=np.int64)

            def draw(m: int) -> np.ndarray:
                if m != fixed.size:
                    raise ProtocolError(f"injected sequence has {fixed.size} draws, session needs {m}")
                return fixed

            return draw
        rng = np.random.default_rng(self.seed)
        return lambda m: rng.integers(1, n + 1, size=m)


@dataclass
class Proceed:
    t: np.ndarray
    ciphertext: np.ndarray
    key: KeyMaterial


@dataclass
class Retry:
    m: int


@dataclass
class Abort:
    reason: AbortReason = AbortReason.RETRIES_EXHAUSTED


Decision = Proceed | Retry | Abort


@dataclass
class Alice:
    cfg: SessionConfig
    message: np.ndarray
    phase: Phase = Phase.AWAITING_TB
    m: int = 0
    retries: int = 0
    sequence: np.ndarray | None = field(default=None, repr=False)
    own: np.ndarray | None = field(default=None, repr=False)
    key: KeyMaterial | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self.message = as_bits(self.message)
        if self.message.size == 0:
            raise ValueError("message is empty")
        self._draw = self.cfg.draws()
        self._new_attempt(self.message.size * self.cfg.s)

    def _new_attempt(self, m: int) -> None:
        self.m = m
        self.sequence = self._draw(m)
        self.own = classify_sequence(self.cfg.partition, self.sequence)
        self.phase = Phase.AWAITING_TB
        log.debug("alice: attempt %d with m=%d", self.retries + 1, m)

    def on_tb(self, tb) -> Decision:
        if self.phase is not Phase.AWAITING_TB:
            raise ProtocolError(f"alice got T_B while {self.phase.value}")
        tb = np.asarray(tb)
        if tb.size != self.m:
            self.phase = Phase.FAILED
            raise ProtocolError(f"T_B has {tb.size} entries, expected {self.m}")
        t = compare_lists(self.own, tb)
        try:
            key = derive_key(self.cfg.partition, self.own, t)
        except NoMatch:
            key = None
        key_len = key.length if key else 0
        if key is not None and self.message.size <= key_len:
            self.key = key
            self.phase = Phase.DONE
            return Proceed(t, xor_cipher(self.message, key.bits), key)
        if self.retries >= self.cfg.max_retries:
            self.phase = Phase.FAILED
            log.info("alice: key %d bits < message %d bits, retries exhausted", key_len, self.message.size)
            return Abort()
        self.retries += 1
        m = self.m * 2 if self.cfg.m_policy is MPolicy.DOUBLE else self.m
        log.debug("alice: key %d bits < message %d bits, retrying", key_len, self.message.size)
        self._new_attempt(m)
        return Retry(m)

    def start_frame(self) -> Frame:
        return Frame.param_m(self.m)

    def handle(self, frame: Frame) -> list[Frame]:
        if frame.type is FrameType.ABORT:
            self.phase = Phase.FAILED
            return []
        if frame.type is not FrameType.TB_LIST:
            self.phase = Phase.FAILED
            raise ProtocolError(f"alice got unexpected {frame.type.name} while {self.phase.value}")
        decision = self.on_tb(frame.indices())
        if isinstance(decision, Proceed):
            return [Frame.t_list(decision.t), Frame.ciphertext(decision.ciphertext)]
        if isinstance(decision, Retry):
            return [Frame.retry(decision.m)]
        return [Frame.abort(decision.reason)]

    @property
    def finished(self) -> bool:
        return self.phase in (Phase.DONE, Phase.FAILED)


@dataclass
class Bob:
    cfg: SessionConfig
    phase: Phase = Phase.AWAITING_M
    m: int = 0
    sequence: np.ndarray | None = field(default=None, repr=False)
    own: np.ndarray | None = field(default=None, repr=False)
    t: np.ndarray | None = field(default=None, repr=False)
    key: KeyMaterial | None = field(default=None, repr=False)
    plaintext: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self._draw = self.cfg.draws()

    def on_param(self, m: int) -> np.ndarray:
        if self.phase not in (Phase.AWAITING_M, Phase.AWAITING_T):
            raise ProtocolError(f"bob got m while {self.phase.value}")
        if m < 1:
            self.phase = Phase.FAILED
            raise ProtocolError("m must be positive")
        self.m = m
        self.sequence = self._draw(m)
        self.own = classify_sequence(self.cfg.partition, self.sequence)
        self.phase = Phase.AWAITING_T
        return self.own

    def on_t(self, t, ciphertext) -> np.ndarray:
        if self.phase not in (Phase.AWAITING_T, Phase.AWAITING_CIPHERTEXT):
            raise ProtocolError(f"bob got T while {self.phase.value}")
        t = np.asarray(t, dtype=bool)
        ciphertext = as_bits(ciphertext)
        if t.size != self.m:
            self.phase = Phase.FAILED
            raise ProtocolError(f"T has {t.size} marks, expected {self.m}")
        try:
            self.key = derive_key(self.cfg.partition, self.own, t)
        except NoMatch:
            self.phase = Phase.FAILED
            raise
        if ciphertext.size > self.key.length:
            self.phase = Phase.FAILED
            raise ProtocolError(
                f"ciphertext has {ciphertext.size} bits, derived key only {self.key.length}"
            )
        self.t = t
        self.plaintext = xor_cipher(ciphertext, self.key.bits)
        self.phase = Phase.DONE
        return self.plaintext

    def handle(self, frame: Frame) -> list[Frame]:
        ftype = frame.type
        if ftype is FrameType.ABORT:
            self.phase = Phase.FAILED
            return []
        if ftype is FrameType.PARAM_M and self.phase is Phase.AWAITING_M:
            return [Frame.tb_list(self.on_param(frame.m()))]
        if ftype is FrameType.RETRY and self.phase is Phase.AWAITING_T:
            return [Frame.tb_list(self.on_param(frame.m()))]
        if ftype is FrameType.T_LIST and self.phase is Phase.AWAITING_T:
            self.t = frame.marks()
            self.phase = Phase.AWAITING_CIPHERTEXT
            return []
        if ftype is FrameType.CIPHERTEXT and self.phase is Phase.AWAITING_CIPHERTEXT:
            self.on_t(self.t, frame.bits())
            return []
        self.phase = Phase.FAILED
        raise ProtocolError(f"bob got unexpected {ftype.name} while awaiting the next step")

    @property
    def finished(self) -> bool:
        return self.phase in (Phase.DONE, Phase.FAILED)


def alice_start(cfg: SessionConfig, message_bits) -> tuple[Alice, int]:
    alice = Alice(cfg, message_bits)
    return alice, alice.m


def bob_on_param(cfg: SessionConfig, m: int) -> tuple[Bob, np.ndarray]:
    bob = Bob(cfg)
    return bob, bob.on_param(m)


def alice_on_tb(state: Alice, tb) -> Decision:
    return state.on_tb(tb)


def bob_on_t(state: Bob, t, ciphertext) -> np.ndarray:
    return state.on_t(t, ciphertext)


def exchange(alice: Alice, bob: Bob,
             channel: tuple[LoopbackChannel, LoopbackChannel] | None = None) -> Transcript:
    """Pump frames between two parties over a loopback pair until both stop."""
    if channel is None:
        transcript = Transcript()
        a_end, b_end = LoopbackChannel.pair(transcript)
    else:
        a_end, b_end = channel
        transcript = a_end.transcript or b_end.transcript or Transcript()
        a_end.transcript = b_end.transcript = transcript
    a_end.send(alice.start_frame())
    while not (alice.finished and bob.finished):
        moved = False
        while b_end.poll():
            b_end.send_all(bob.handle(b_end.recv()))
            moved = True
        while a_end.poll():
            a_end.send_all(alice.handle(a_end.recv()))
            moved = True
        if not moved:
            break
    return transcript


def run_session(cfg_a: SessionConfig, cfg_b: SessionConfig, message,
                channel: tuple[LoopbackChannel, LoopbackChannel] | None = None,
                ) -> tuple[np.ndarray, Transcript]:
    """Run a whole session over a loopback pair; return Bob's plaintext and the transcript.

    Raises :class:`ProtocolError` if the session ends in failure.
    """
    alice, bob = Alice(cfg_a, message), Bob(cfg_b)
    transcript = exchange(alice, bob, channel)
    if bob.phase is not Phase.DONE:
        raise ProtocolError(f"session failed after {alice.retries} retries (bob {bob.phase.value})")
    return bob.plaintext, transcript


def run_alice(alice: Alice, channel: Channel) -> Alice:
    channel.send(alice.start_frame())
    while not alice.finished:
        channel.send_all(alice.handle(channel.recv()))
    if alice.phase is Phase.FAILED:
        raise ProtocolError(f"alice gave up after {alice.retries} retries")
    return alice


def run_bob(bob: Bob, channel: Channel) -> np.ndarray:
    while not bob.finished:
        try:
            replies = bob.handle(channel.recv())
        except ProtocolError:
            channel.send(Frame.abort(AbortReason.PROTOCOL_ERROR))
            raise
        channel.send_all(replies)
    if bob.phase is Phase.FAILED:
        raise ProtocolError("alice aborted the session")
    return bob.plaintext
