"""Prover/verifier messages and their binary framing.

Frame layout: ``[tag: u8][length: u32 LE][payload]``. Field elements are
8-byte little-endian, gate ids 4-byte little-endian, assignments list one field
element per variable in variable order.
"""
from __future__ import annotations

import enum
import functools
import struct
from dataclasses import dataclass
from typing import BinaryIO, Union

from ..field import P


class WireError(Exception):
    pass


class Tag(enum.IntEnum):
    CHALLENGE_EVAL = 0x01
    CHALLENGE_DISTINCT = 0x02
    ANSWER_POLY = 0x03
    ANSWER_POINT = 0x04
    ANSWER_ASSIGNMENT = 0x05
    VERDICT = 0x06


NO_FREE = 0xFFFFFFFF


@dataclass(frozen=True)
class ChallengeEval:
    """Evaluate ``gate`` at ``sigma``; ``free`` (if set) stays symbolic."""
    gate: int
    sigma: tuple[int, ...]
    free: int | None = None


@dataclass(frozen=True)
class ChallengeDistinct:
    gate1: int
    gate2: int


@dataclass(frozen=True)
class AnswerPoly:
    coeffs: tuple[int, int, int]  # constant, linear, quadratic


@dataclass(frozen=True)
class AnswerPoint:
    value: int


@dataclass(frozen=True)
class AnswerAssignment:
    sigma: tuple[int, ...]


@dataclass(frozen=True)
class Verdict:
    accept: bool
    reason: str = ""


Message = Union[ChallengeEval, ChallengeDistinct, AnswerPoly, AnswerPoint, AnswerAssignment, Verdict]

_HEADER = struct.Struct("<BI")
_PAIR = struct.Struct("<II")


@functools.lru_cache(maxsize=None)
def _vector(m: int) -> struct.Struct:
    return struct.Struct(f"<{m}Q")


def _elems(values) -> bytes:
    return _vector(len(values)).pack(*values)


def _read_elems(data: bytes) -> tuple[int, ...]:
    if len(data) % 8:
        raise WireError("field vector length is not a multiple of 8")
    vals = _vector(len(data) // 8).unpack(data)
    if vals and max(vals) >= P:
        raise WireError(f"non-canonical field element {max(vals)}")
    return vals


def encode(msg: Message) -> bytes:
    if isinstance(msg, ChallengeEval):
        free = NO_FREE if msg.free is None else msg.free
        sigma = list(msg.sigma)
        if msg.free is not None:
            sigma[msg.free] = 0
        tag, payload = Tag.CHALLENGE_EVAL, _PAIR.pack(msg.gate, free) + _elems(sigma)
    elif isinstance(msg, ChallengeDistinct):
        tag, payload = Tag.CHALLENGE_DISTINCT, struct.pack("<II", msg.gate1, msg.gate2)
    elif isinstance(msg, AnswerPoly):
        tag, payload = Tag.ANSWER_POLY, _elems(msg.coeffs)
    elif isinstance(msg, AnswerPoint):
        tag, payload = Tag.ANSWER_POINT, _elems((msg.value,))
    elif isinstance(msg, AnswerAssignment):
        tag, payload = Tag.ANSWER_ASSIGNMENT, _elems(msg.sigma)
    elif isinstance(msg, Verdict):
        tag, payload = Tag.VERDICT, bytes((1 if msg.accept else 0,)) + msg.reason.encode()
    else:
        raise TypeError(f"not a message: {msg!r}")
    return _HEADER.pack(tag, len(payload)) + payload


def decode_payload(tag: int, payload: bytes) -> Message:
    try:
        tag = Tag(tag)
    except ValueError:
        raise WireError(f"unknown tag {tag:#x}") from None
    if tag == Tag.CHALLENGE_EVAL:
        if len(payload) < 8:
            raise WireError("short ChallengeEval")
        gate, free = _PAIR.unpack_from(payload)
        return ChallengeEval(gate, _read_elems(payload[8:]), None if free == NO_FREE else free)
    if tag == Tag.CHALLENGE_DISTINCT:
        if len(payload) != 8:
            raise WireError("bad ChallengeDistinct length")
        return ChallengeDistinct(*_PAIR.unpack(payload))
    if tag == Tag.ANSWER_POLY:
        coeffs = _read_elems(payload)
        if len(coeffs) != 3:
            raise WireError("AnswerPoly carries exactly three coefficients")
        return AnswerPoly(coeffs)
    if tag == Tag.ANSWER_POINT:
        vals = _read_elems(payload)
        if len(vals) != 1:
            raise WireError("AnswerPoint carries one field element")
        return AnswerPoint(vals[0])
    if tag == Tag.ANSWER_ASSIGNMENT:
        return AnswerAssignment(_read_elems(payload))
    if not payload:
        raise WireError("empty Verdict")
    return Verdict(payload[0] == 1, payload[1:].decode(errors="replace"))


def decode(frame: bytes) -> Message:
    if len(frame) < _HEADER.size:
        raise WireError("truncated frame header")
    tag, length = _HEADER.unpack_from(frame)
    payload = frame[_HEADER.size:]
    if len(payload) != length:
        raise WireError(f"frame length {len(payload)} does not match header {length}")
    return decode_payload(tag, payload)


def _read_exact(stream: BinaryIO, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = stream.read(n - len(buf))
        if not chunk:
            raise WireError("connection closed mid-frame")
        buf += chunk
    return bytes(buf)


def read_frame(stream: BinaryIO) -> bytes | None:
    """Next complete frame from a binary stream, or None on clean end of stream."""
    head = stream.read(_HEADER.size)
    if not head:
        return None
    if len(head) < _HEADER.size:
        head += _read_exact(stream, _HEADER.size - len(head))
    _, length = _HEADER.unpack(head)
    return head + _read_exact(stream, length)
