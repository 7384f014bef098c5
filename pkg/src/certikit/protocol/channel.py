"""Channels carrying messages between verifier and prover.

Every channel delivers messages in order, exactly once. The in-process
channel still round-trips each message through the wire encoding, so its
transcript is byte-identical to a two-process run with the same seed.
"""
from __future__ import annotations

import socket
from typing import BinaryIO, Protocol

from .messages import Message, Verdict, WireError, decode, encode, read_frame


class TransportError(Exception):
    pass


class Channel(Protocol):
    transcript: bytearray | None

    def request(self, msg: Message) -> Message: ...

    def close(self, verdict: Verdict) -> None: ...


class Responder(Protocol):
    def handle(self, msg: Message) -> Message | None: ...


class LocalChannel:
    """Verifier and prover in one process; ``wire=False`` skips encoding."""

    def __init__(self, prover: Responder, record: bool = True, wire: bool = True) -> None:
        self.prover = prover
        self.wire = wire
        self.transcript: bytearray | None = bytearray() if record and wire else None
        self.messages = 0

    def request(self, msg: Message) -> Message:
        self.messages += 2
        if not self.wire:
            return self.prover.handle(msg)
        frame = encode(msg)
        if self.transcript is not None:
            self.transcript += frame
        reply = self.prover.handle(decode(frame))
        if reply is None:
            raise TransportError("prover sent no answer")
        out = encode(reply)
        if self.transcript is not None:
            self.transcript += out
        return decode(out)

    def close(self, verdict: Verdict) -> None:
        self.messages += 1
        if self.wire:
            frame = encode(verdict)
            if self.transcript is not None:
                self.transcript += frame
            self.prover.handle(decode(frame))
        else:
            self.prover.handle(verdict)


class StreamChannel:
    """Verifier side of a byte-stream connection (e.g. a socket file)."""

    def __init__(self, reader: BinaryIO, writer: BinaryIO, record: bool = True) -> None:
        self.reader = reader
        self.writer = writer
        self.transcript: bytearray | None = bytearray() if record else None
        self.messages = 0

    def _send(self, msg: Message) -> None:
        frame = encode(msg)
        if self.transcript is not None:
            self.transcript += frame
        try:
            self.writer.write(frame)
            self.writer.flush()
        except OSError as exc:
            raise TransportError(str(exc)) from exc

    def request(self, msg: Message) -> Message:
        self.messages += 2
        self._send(msg)
        try:
            frame = read_frame(self.reader)
        except (OSError, WireError) as exc:
            raise TransportError(str(exc)) from exc
        if frame is None:
            raise TransportError("prover closed the connection")
        if self.transcript is not None:
            self.transcript += frame
        try:
            return decode(frame)
        except WireError as exc:
            raise TransportError(str(exc)) from exc

    def close(self, verdict: Verdict) -> None:
        self.messages += 1
        self._send(verdict)


def serve(prover: Responder, reader: BinaryIO, writer: BinaryIO,
          transcript: bytearray | None = None) -> Verdict | None:
    """Answer challenges until a verdict arrives or the stream ends."""
    while True:
        frame = read_frame(reader)
        if frame is None:
            return None
        if transcript is not None:
            transcript += frame
        msg = decode(frame)
        if isinstance(msg, Verdict):
            prover.handle(msg)
            return msg
        reply = prover.handle(msg)
        out = encode(reply)
        if transcript is not None:
            transcript += out
        writer.write(out)
        writer.flush()


def parse_address(addr: str) -> tuple[str, int]:
    host, sep, port = addr.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"address must look like host:port, got {addr!r}")
    return host or "127.0.0.1", int(port)


def listen(addr: str) -> socket.socket:
    host, port = parse_address(addr)
    srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    srv.bind((host, port))
    srv.listen(1)
    return srv


def connect(addr: str, timeout: float = 30.0) -> socket.socket:
    host, port = parse_address(addr)
    sock = socket.create_connection((host, port), timeout=timeout)
    sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    return sock
