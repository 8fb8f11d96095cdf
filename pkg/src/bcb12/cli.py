"""``bcb12`` command line entry point."""

from __future__ import annotations

import argparse
import logging
import os
import socket
import sys
import threading
import time

import numpy as np

from . import eve, randstat
from .channel import DEFAULT_TIMEOUT, SocketChannel, Transcript, parse_hostport
from .errors import Bcb12Error, KeyTooShortError, ProtocolError, TransportError
from .keyder import KeyMaterial
from .partition import enumerate_partitions, random_partition, read_partition, serialize_partition, stirling2
from .protocol import Alice, Bob, MPolicy, SessionConfig, run_alice, run_bob
from .vernam import bits_from_str, bits_to_str, bits_to_text, read_bits_file, text_to_bits, xor_cipher

log = logging.getLogger("bcb12")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PROTOCOL = 3
EXIT_TRANSPORT = 4
EXIT_NO_HIT = 5


class UsageError(Exception):
    pass


def _read_ints(path: str) -> list[int]:
    with open(path, encoding="utf-8") as fh:
        text = fh.read().replace(",", " ").replace("{", " ").replace("}", " ")
    try:
        return [int(tok) for tok in text.split()]
    except ValueError as exc:
        raise UsageError(f"{path}: expected whitespace- or comma-separated integers") from exc


def _read_message(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    with open(path, "rb") as fh:
        return fh.read()


def _write_output(path: str | None, data: bytes) -> None:
    if path is None or path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    else:
        with open(path, "wb") as fh:
            fh.write(data)


def _write_text(path: str | None, text: str) -> None:
    _write_output(path, text.encode("utf-8"))


def cmd_gen_partition(args) -> int:
    p = random_partition(args.n, args.k, args.seed)
    _write_text(args.out, serialize_partition(p))
    return EXIT_OK


def cmd_enumerate(args) -> int:
    lines = [f"S({args.n},{args.k}) = {stirling2(args.n, args.k)}"]
    if args.list:
        for p in enumerate_partitions(args.n, args.k, limit=args.limit):
            lines.append(" | ".join(" ".join(map(str, b)) for b in p.blocks))
    _write_text(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_alice(args) -> int:
    partition = read_partition(args.partition)
    cfg = SessionConfig(
        partition, s=args.s, seed=args.seed, max_retries=args.max_retries,
        m_policy=MPolicy(args.retry),
        sequence=_read_ints(args.alice_seq) if args.alice_seq else None,
    )
    message = text_to_bits(_read_message(args.message))
    if message.size == 0:
        raise UsageError("message is empty")
    alice = Alice(cfg, message)
    host, port = parse_hostport(args.connect)
    transcript = Transcript()
    chan = _connect_with_retry(host, port, args.timeout, transcript)
    with chan:
        run_alice(alice, chan)
    log.info("alice: sent %d-bit ciphertext, key %d bits, m=%d", message.size, alice.key.length, alice.m)
    if args.transcript:
        _write_output(args.transcript, transcript.to_bytes())
    if args.key_out:
        _write_text(args.key_out, alice.key.dump())
    return EXIT_OK


def _connect_with_retry(host, port, timeout, transcript) -> SocketChannel:
    deadline = time.monotonic() + min(timeout, 10.0)
    while True:
        try:
            return SocketChannel.connect(host, port, name="alice", transcript=transcript,
                                         timeout=timeout, record_received=True)
        except TransportError:
            if time.monotonic() > deadline:
                raise
            time.sleep(0.05)


def _bob_session(args, partition, conn: socket.socket, index: int, results: list) -> None:
    seed = None if args.seed is None else np.random.SeedSequence([args.seed, index])
    cfg = SessionConfig(partition, seed=seed,
                        sequence=_read_ints(args.bob_seq) if args.bob_seq else None)
    bob = Bob(cfg)
    try:
        with SocketChannel(conn, name="bob", timeout=args.timeout) as chan:
            plaintext = run_bob(bob, chan)
    except Bcb12Error as exc:
        log.error("bob: session %d failed: %s", index, exc)
        results.append(exc)
        return
    out = args.out
    if out and args.sessions != 1:
        out = f"{out}.{index}"
    if plaintext.size % 8 == 0:
        _write_output(out, bits_to_text(plaintext))
    else:
        _write_text(out, bits_to_str(plaintext) + "\n")
    if args.key_out:
        _write_text(args.key_out if args.sessions == 1 else f"{args.key_out}.{index}", bob.key.dump())
    log.info("bob: session %d done, %d plaintext bits", index, plaintext.size)
    results.append(None)


def cmd_bob(args) -> int:
    partition = read_partition(args.partition)
    host, port = parse_hostport(args.listen)
    try:
        server = socket.create_server((host, port))
    except OSError as exc:
        raise TransportError(f"cannot listen on {host}:{port}: {exc}") from exc
    if args.port_file:
        _write_text(args.port_file, f"{server.getsockname()[1]}\n")
    results: list = []
    threads = []
    index = 0
    with server:
        while args.sessions == 0 or index < args.sessions:
            conn, addr = server.accept()
            log.info("bob: connection %d from %s", index, addr)
            th = threading.Thread(target=_bob_session, args=(args, partition, conn, index, results))
            th.start()
            threads.append(th)
            index += 1
    for th in threads:
        th.join()
    failures = [r for r in results if r is not None]
    if not failures:
        return EXIT_OK
    if all(isinstance(r, TransportError) for r in failures):
        return EXIT_TRANSPORT
    return EXIT_PROTOCOL


def _read_key(path) -> np.ndarray:
    """A key file is either a bare bitstring or a key dump from --key-out."""
    with open(path, encoding="ascii") as fh:
        text = fh.read()
    if text.startswith("f="):
        return KeyMaterial.parse(text).bits
    return bits_from_str(text)


def cmd_cipher(args) -> int:
    key = _read_key(args.key)
    data = read_bits_file(args.input)
    try:
        out = xor_cipher(data, key)
    except KeyTooShortError as exc:
        raise UsageError(str(exc)) from exc
    _write_text(args.out, bits_to_str(out) + "\n")
    return EXIT_OK


def cmd_stats(args) -> int:
    bits = _read_key(args.key)
    if bits.size == 0:
        raise UsageError("key file holds no bits")
    _write_text(None, randstat.report_table(bits, args.alpha) + "\n")
    return EXIT_OK


def cmd_attack(args) -> int:
    with open(args.transcript, "rb") as fh:
        transcript = Transcript.from_bytes(fh.read())
    budget = eve.AttackBudget(args.n_max, args.max_candidates, args.time_limit)
    crib = None
    if args.crib:
        crib = read_bits_file(args.crib)
    elif args.crib_text:
        crib = text_to_bits(args.crib_text.encode())
    ks = range(1, args.k + 1) if args.sweep_k else [args.k]
    any_hit = False
    for k in ks:
        if k > args.n_max:
            continue
        try:
            result = eve.eve_enumerate_keys(transcript, k, budget, crib, all_labelings=args.all_labelings)
        except ValueError as exc:
            if args.sweep_k:
                log.info("k=%d skipped: %s", k, exc)
                continue
            raise UsageError(str(exc)) from exc
        _write_text(None, eve.attack_report(result, args.target_n) + "\n")
        any_hit = any_hit or result.hit
    if crib is not None and not any_hit:
        return EXIT_NO_HIT
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed for every random draw")
    common.add_argument("--log-level", default=os.environ.get("BCB12_LOG", "WARNING"))

    parser = argparse.ArgumentParser(prog="bcb12", description="Set-partition key agreement toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-partition", parents=[common], help="write a random k-block partition of [n]")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_partition)

    p = sub.add_parser("enumerate", parents=[common], help="Stirling count and optionally every partition")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--list", action="store_true")
    p.add_argument("--limit", type=int, default=10**6)
    p.add_argument("--out")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("alice", parents=[common], help="send a message as the initiating party")
    p.add_argument("--partition", required=True)
    p.add_argument("--message", required=True, help="file or - for stdin")
    p.add_argument("--connect", required=True, metavar="HOST:PORT")
    p.add_argument("--s", type=int, default=1, help="amplification parameter")
    p.add_argument("--retry", choices=[m.value for m in MPolicy], default=MPolicy.DOUBLE.value)
    p.add_argument("--max-retries", type=int, default=8)
    p.add_argument("--alice-seq", help="file of explicit draws replacing the random sequence")
    p.add_argument("--transcript", help="write the wire bytes of the session here")
    p.add_argument("--key-out")
    p.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT)
    p.set_defaults(func=cmd_alice)

    p = sub.add_parser("bob", parents=[common], help="receive messages as the responding party")
    p.add_argument("--partition", required=True)
    p.add_argument("--listen", required=True, metavar="HOST:PORT")
    p.add_argument("--out")
    p.add_argument("--bob-seq", help="file of explicit draws replacing the random sequence")
    p.add_argument("--sessions", type=int, default=0, help="stop after this many sessions (0 = serve forever)")
    p.add_argument("--port-file", help="write the bound port here (useful with port 0)")
    p.add_argument("--key-out")
    p.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT)
    p.set_defaults(func=cmd_bob)

    for name in ("encrypt", "decrypt"):
        p = sub.add_parser(name, parents=[common], help=f"{name} a bitstring file with a key bitstring file")
        p.add_argument("--key", required=True)
        p.add_argument("--in", dest="input", required=True)
        p.add_argument("--out")
        p.set_defaults(func=cmd_cipher)

    p = sub.add_parser("stats", parents=[common], help="randomness statistics of a key bitstring")
    p.add_argument("--key", required=True)
    p.add_argument("--alpha", type=float, default=randstat.DEFAULT_ALPHA)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("attack", parents=[common], help="exhaustive partition search on a transcript")
    p.add_argument("--transcript", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--max-candidates", type=int, default=None)
    p.add_argument("--time-limit", type=float, default=None)
    cribs = p.add_mutually_exclusive_group()
    cribs.add_argument("--crib", help="file holding a known plaintext prefix as a bitstring")
    cribs.add_argument("--crib-text", help="known plaintext prefix given as text")
    p.add_argument("--all-labelings", action="store_true", help="also try every block renumbering")
    p.add_argument("--sweep-k", action="store_true", help="try every k from 1 to --k")
    p.add_argument("--target-n", type=int, default=20)
    p.set_defaults(func=cmd_attack)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=args.log_level.upper(), format="%(name)s %(levelname)s: %(message)s")
    if getattr(args, "n_max", "unset") is None:
        args.n_max = args.k
    try:
        return args.func(args)
    except (UsageError, OSError, ValueError) as exc:
        print(f"bcb12: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TransportError as exc:
        print(f"bcb12: transport failure: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except ProtocolError as exc:
        print(f"bcb12: protocol failure: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except Bcb12Error as exc:
        print(f"bcb12: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL


if __name__ == "__main__":
    sys.exit(main())
