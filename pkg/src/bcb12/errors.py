"""Exception hierarchy shared across the package."""


class Bcb12Error(Exception):
    """Base class for all errors raised by bcb12."""


class PartitionError(Bcb12Error, ValueError):
    """Invalid partition, malformed partition text, or bad (n, k)."""


class EnumerationLimitError(PartitionError):
    """Requested enumeration would exceed the configured result guard."""


class NoMatch(Bcb12Error):
    """The match list holds no PLUS mark, so no key can be derived."""


class KeyTooShortError(Bcb12Error, ValueError):
    pass


class FrameError(Bcb12Error):
    """Wire data that cannot be decoded into a frame."""


class BadMagic(FrameError):
    pass


class UnknownVersion(FrameError):
    pass


class UnknownFrameType(FrameError):
    pass


class TruncatedFrame(FrameError):
    pass


class LengthMismatch(FrameError):
    pass


class TransportError(Bcb12Error):
    """Peer closed the connection or a read timed out."""


class ProtocolError(Bcb12Error):
    """A session step was invalid: out-of-order frame, bad length, exhausted retries."""
