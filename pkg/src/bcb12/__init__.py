"""Set-partition key agreement with one-time-pad encryption."""

from .channel import Frame, FrameType, LoopbackChannel, SocketChannel, Transcript, decode_frame, encode_frame
from .errors import (
    Bcb12Error,
    FrameError,
    KeyTooShortError,
    NoMatch,
    PartitionError,
    ProtocolError,
    TransportError,
)
from .keyder import FKind, KeyMaterial, classify_sequence, compare_lists, derive_key, encode_values, eval_f, select_f
from .partition import (
    SetPartition,
    block_index_of,
    enumerate_partitions,
    match_probability,
    new_partition,
    parse_partition,
    random_partition,
    serialize_partition,
    stirling2,
)
from .protocol import Alice, Bob, MPolicy, Phase, SessionConfig, exchange, run_session
from .vernam import bits_to_text, text_to_bits, xor_cipher

__version__ = "0.1.0"

__all__ = [
    "Alice",
    "Bcb12Error",
    "Bob",
    "FKind",
    "Frame",
    "FrameError",
    "FrameType",
    "KeyMaterial",
    "KeyTooShortError",
    "LoopbackChannel",
    "MPolicy",
    "NoMatch",
    "PartitionError",
    "Phase",
    "ProtocolError",
    "SessionConfig",
    "SetPartition",
    "SocketChannel",
    "Transcript",
    "TransportError",
    "bits_to_text",
    "block_index_of",
    "classify_sequence",
    "compare_lists",
    "decode_frame",
    "derive_key",
    "encode_frame",
    "encode_values",
    "enumerate_partitions",
    "eval_f",
    "exchange",
    "match_probability",
    "new_partition",
    "parse_partition",
    "random_partition",
    "run_session",
    "select_f",
    "serialize_partition",
    "stirling2",
    "text_to_bits",
    "xor_cipher",
]
