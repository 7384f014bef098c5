"""Parser for flattened boolean models and CTL formulas.

Model files are a sequence of ``;``-terminated statements, ``--`` starts a
comment::

    VAR b;
    INIT !b;
    TRANS next(b) <-> !b;
    LABEL on := b;
    CTLSPEC AG (EF on);

State variable ``i`` (in declaration order) is circuit variable ``2i`` and its
next-state copy is ``2i + 1``, so every variable sits next to its primed twin.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

from ..bdd import BinOp
from ..circuit import FConst, FNot, FOp, Formula, FVar


class ParseError(ValueError):
    pass


# -- CTL syntax tree --------------------------------------------------------

@dataclass(frozen=True)
class CAtom:
    name: str


@dataclass(frozen=True)
class CConst:
    value: bool


@dataclass(frozen=True)
class CNot:
    arg: "Ctl"


@dataclass(frozen=True)
class CBin:
    op: BinOp
    left: "Ctl"
    right: "Ctl"


@dataclass(frozen=True)
class CTemporal:
    """``EX EF EG AX AF AG`` applied to one argument."""
    op: str
    arg: "Ctl"


@dataclass(frozen=True)
class CUntil:
    path: str  # "E" or "A"
    left: "Ctl"
    right: "Ctl"


Ctl = Union[CAtom, CConst, CNot, CBin, CTemporal, CUntil]

TEMPORAL = ("EX", "EF", "EG", "AX", "AF", "AG")


def existential(f: Ctl) -> Ctl:
    """Rewrite universal operators into existential ones with negations."""
    if isinstance(f, (CAtom, CConst)):
        return f
    if isinstance(f, CNot):
        return CNot(existential(f.arg))
    if isinstance(f, CBin):
        return CBin(f.op, existential(f.left), existential(f.right))
    if isinstance(f, CTemporal):
        a = existential(f.arg)
        if f.op[0] == "E":
            return CTemporal(f.op, a)
        dual = {"AX": "EX", "AF": "EG", "AG": "EF"}[f.op]
        return CNot(CTemporal(dual, CNot(a)))
    p, q = existential(f.left), existential(f.right)
    if f.path == "E":
        return CUntil("E", p, q)
    nq = CNot(q)
    both = CBin(BinOp.AND, CNot(p), nq)
    return CNot(CBin(BinOp.OR, CUntil("E", nq, both), CTemporal("EG", nq)))


def ctl_atoms(f: Ctl) -> set[str]:
    if isinstance(f, CAtom):
        return {f.name}
    if isinstance(f, CConst):
        return set()
    if isinstance(f, (CNot, CTemporal)):
        return ctl_atoms(f.arg)
    return ctl_atoms(f.left) | ctl_atoms(f.right)


def ctl_text(f: Ctl) -> str:
    if isinstance(f, CAtom):
        return f.name
    if isinstance(f, CConst):
        return "TRUE" if f.value else "FALSE"
    if isinstance(f, CNot):
        return f"!{ctl_text(f.arg)}"
    if isinstance(f, CBin):
        sym = {BinOp.AND: "&", BinOp.OR: "|", BinOp.XOR: "^", BinOp.IMP: "->",
               BinOp.XNOR: "<->"}[f.op]
        return f"({ctl_text(f.left)} {sym} {ctl_text(f.right)})"
    if isinstance(f, CTemporal):
        return f"{f.op} {ctl_text(f.arg)}"
    return f"{f.path} [{ctl_text(f.left)} U {ctl_text(f.right)}]"


# -- models ---------------------------------------------------------------

@dataclass
class Model:
    vars: list[str]
    init: Formula
    trans: Formula
    labels: dict[str, Formula] = field(default_factory=dict)
    specs: list[Ctl] = field(default_factory=list)
    spec_texts: list[str] = field(default_factory=list)
    name: str = "model"

    @property
    def n(self) -> int:
        """Number of circuit variables: every state variable and its next copy."""
        return 2 * len(self.vars)

    def index(self, name: str) -> int:
        return self.vars.index(name)


# -- tokenizer --------------------------------------------------------------

_TOKEN = re.compile(r"\s*(<->|->|:=|[!&|^()\[\];]|[A-Za-z_][A-Za-z0-9_.]*|\S)")


@dataclass(frozen=True)
class _Tok:
    text: str
    line: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("--", 1)[0]
        pos = 0
        while pos < len(line):
            m = _TOKEN.match(line, pos)
            if m is None or not m.group(1):
                break
            toks.append(_Tok(m.group(1), lineno))
            pos = m.end()
    return toks


class _Stream:
    def __init__(self, toks: list[_Tok], last_line: int = 1) -> None:
        self.toks = toks
        self.pos = 0
        self.last_line = last_line

    def peek(self) -> str | None:
        return self.toks[self.pos].text if self.pos < len(self.toks) else None

    def line(self) -> int:
        if self.pos < len(self.toks):
            return self.toks[self.pos].line
        return self.toks[-1].line if self.toks else self.last_line

    def next(self) -> str:
        if self.pos >= len(self.toks):
            raise ParseError(f"line {self.line()}: unexpected end of input")
        tok = self.toks[self.pos].text
        self.pos += 1
        return tok

    def expect(self, text: str) -> None:
        line = self.line()
        tok = self.next()
        if tok != text:
            raise ParseError(f"line {line}: expected {text!r}, got {tok!r}")


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*$")
_KEYWORDS = {"VAR", "INIT", "TRANS", "LABEL", "CTLSPEC", "TRUE", "FALSE", "next",
             "E", "A", "U"} | set(TEMPORAL)

# loosest first; "->" is right associative
_BIN_LEVELS = [("->", BinOp.IMP), ("<->", BinOp.XNOR), ("|^", None), ("&", BinOp.AND)]


def _binary(stream: _Stream, level: int, unary):
    if level == len(_BIN_LEVELS):
        return unary(stream)
    sym, op = _BIN_LEVELS[level]
    left = _binary(stream, level + 1, unary)
    if sym == "->":
        if stream.peek() == "->":
            stream.next()
            return ("bin", BinOp.IMP, left, _binary(stream, level, unary))
        return left
    while True:
        tok = stream.peek()
        if sym == "|^" and tok in ("|", "^"):
            stream.next()
            left = ("bin", BinOp.OR if tok == "|" else BinOp.XOR, left,
                    _binary(stream, level + 1, unary))
        elif tok == sym:
            stream.next()
            left = ("bin", op, left, _binary(stream, level + 1, unary))
        else:
            return left


class _ExprParser:
    """Boolean expressions over state variables."""

    def __init__(self, vars: list[str], allow_next: bool) -> None:
        self.index = {v: i for i, v in enumerate(vars)}
        self.allow_next = allow_next

    def parse(self, stream: _Stream) -> Formula:
        return self._build(_binary(stream, 0, self._unary))

    def _unary(self, stream: _Stream):
        line = stream.line()
        tok = stream.next()
        if tok == "!":
            return ("not", self._unary(stream))
        if tok == "(":
            inner = _binary(stream, 0, self._unary)
            stream.expect(")")
            return inner
        if tok in ("TRUE", "FALSE"):
            return ("const", tok == "TRUE")
        if tok == "next":
            if not self.allow_next:
                raise ParseError(f"line {line}: next() is only allowed in TRANS")
            stream.expect("(")
            name_line = stream.line()
            name = stream.next()
            stream.expect(")")
            return ("var", self._var(name, name_line) * 2 + 1)
        if _IDENT.match(tok) and tok not in _KEYWORDS:
            return ("var", self._var(tok, line) * 2)
        raise ParseError(f"line {line}: unexpected {tok!r} in expression")

    def _var(self, name: str, line: int) -> int:
        i = self.index.get(name)
        if i is None:
            raise ParseError(f"line {line}: undeclared variable {name!r}")
        return i

    def _build(self, node) -> Formula:
        tag = node[0]
        if tag == "const":
            return FConst(int(node[1]))
        if tag == "var":
            return FVar(node[1])
        if tag == "not":
            return FNot(self._build(node[1]))
        return FOp(node[1], self._build(node[2]), self._build(node[3]))


class _CtlParser:
    def __init__(self, labels: set[str] | None) -> None:
        self.labels = labels

    def parse(self, stream: _Stream) -> Ctl:
        return self._build(_binary(stream, 0, self._unary))

    def _unary(self, stream: _Stream):
        line = stream.line()
        tok = stream.next()
        if tok == "!":
            return ("not", self._unary(stream))
        if tok == "(":
            inner = _binary(stream, 0, self._unary)
            stream.expect(")")
            return inner
        if tok in ("TRUE", "FALSE"):
            return ("const", tok == "TRUE")
        if tok in TEMPORAL:
            return ("temporal", tok, self._unary(stream))
        if tok in ("E", "A"):
            stream.expect("[")
            left = _binary(stream, 0, self._unary)
            stream.expect("U")
            right = _binary(stream, 0, self._unary)
            stream.expect("]")
            return ("until", tok, left, right)
        if _IDENT.match(tok) and tok not in _KEYWORDS:
            if self.labels is not None and tok not in self.labels:
                raise ParseError(f"line {line}: unknown atomic proposition {tok!r}")
            return ("atom", tok)
        raise ParseError(f"line {line}: unexpected {tok!r} in CTL formula")

    def _build(self, node) -> Ctl:
        tag = node[0]
        if tag == "atom":
            return CAtom(node[1])
        if tag == "const":
            return CConst(node[1])
        if tag == "not":
            return CNot(self._build(node[1]))
        if tag == "bin":
            return CBin(node[1], self._build(node[2]), self._build(node[3]))
        if tag == "temporal":
            return CTemporal(node[1], self._build(node[2]))
        return CUntil(node[1], self._build(node[2]), self._build(node[3]))


def parse_ctl(text: str, labels: set[str] | None = None, universal: bool = False) -> Ctl:
    """Parse a CTL formula; universal operators are rewritten unless ``universal``."""
    stream = _Stream(_tokenize(text))
    f = _CtlParser(labels).parse(stream)
    if stream.peek() is not None:
        raise ParseError(f"line {stream.line()}: unexpected {stream.peek()!r} after formula")
    return f if universal else existential(f)


def _statements(toks: list[_Tok]) -> list[list[_Tok]]:
    out: list[list[_Tok]] = []
    cur: list[_Tok] = []
    for t in toks:
        if t.text == ";":
            if not cur:
                raise ParseError(f"line {t.line}: empty statement")
            out.append(cur)
            cur = []
        else:
            cur.append(t)
    if cur:
        raise ParseError(f"line {cur[-1].line}: missing ';' after {cur[0].text} statement")
    return out


def parse_model(text: str, name: str = "model", universal: bool = False) -> Model:
    """Parse a model file. ``universal`` keeps AX/AF/AG/A[U] in the specs."""
    stmts = _statements(_tokenize(text))
    vars: list[str] = []
    inits: list[Formula] = []
    transes: list[Formula] = []
    labels: dict[str, Formula] = {}
    spec_stmts: list[list[_Tok]] = []
    for st in stmts:
        kw, line = st[0].text, st[0].line
        body = _Stream(st[1:], line)
        if kw == "VAR":
            if len(st) != 2 or not _IDENT.match(st[1].text) or st[1].text in _KEYWORDS:
                raise ParseError(f"line {line}: VAR takes one identifier")
            v = st[1].text
            if v in vars:
                raise ParseError(f"line {line}: variable {v!r} declared twice")
            vars.append(v)
            continue
        if kw in ("INIT", "TRANS"):
            f = _ExprParser(vars, kw == "TRANS").parse(body)
            (inits if kw == "INIT" else transes).append(f)
        elif kw == "LABEL":
            lname = body.next()
            if not _IDENT.match(lname) or lname in _KEYWORDS:
                raise ParseError(f"line {line}: bad label name {lname!r}")
            if lname in labels:
                raise ParseError(f"line {line}: label {lname!r} defined twice")
            body.expect(":=")
            labels[lname] = _ExprParser(vars, False).parse(body)
        elif kw == "CTLSPEC":
            spec_stmts.append(st)
            continue
        else:
            raise ParseError(f"line {line}: unknown statement {kw!r}")
        if body.peek() is not None:
            raise ParseError(f"line {body.line()}: unexpected {body.peek()!r}")
    if not vars:
        raise ParseError("model declares no variables")
    specs, texts = [], []
    for st in spec_stmts:
        body = _Stream(st[1:], st[0].line)
        f = _CtlParser(set(labels)).parse(body)
        if body.peek() is not None:
            raise ParseError(f"line {body.line()}: unexpected {body.peek()!r} after formula")
        specs.append(f if universal else existential(f))
        texts.append(" ".join(t.text for t in st[1:]))
    return Model(vars, _conj(inits), _conj(transes), labels, specs, texts, name)


def _conj(fs: list[Formula]) -> Formula:
    if not fs:
        return FConst(1)
    out = fs[0]
    for f in fs[1:]:
        out = FOp(BinOp.AND, out, f)
    return out
