"""Minimal DOT reader/writer for go-callvis style call graphs.

The reader understands the full statement grammar (node, edge and attribute
statements, ``ID = ID``, nested and anonymous subgraphs, ports, edge chains
with subgraph operands) but keeps only structure and node labels.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ParseError, UnsupportedFormatError
from .graph import CallGraph, GraphBuilder

_KEYWORDS = {"strict", "graph", "digraph", "node", "edge", "subgraph"}
_PUNCT = set("{}[]=;,:+")


@dataclass
class _Token:
    kind: str  # "id", "punct", "edgeop", "eof"
    value: str
    line: int
    col: int
    quoted: bool = False


def _tokenize(text: str) -> list[_Token]:
    toks: list[_Token] = []
    i, n = 0, len(text)
    line, col = 1, 1

    def advance(k: int) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    at_line_start = True
    while i < n:
        ch = text[i]
        if ch == "\n":
            advance(1)
            at_line_start = True
            continue
        if ch.isspace():
            advance(1)
            continue
        if ch == "#" and at_line_start:
            # preprocessor-style line
            while i < n and text[i] != "\n":
                advance(1)
            continue
        at_line_start = False
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                advance(1)
            continue
        if text.startswith("/*", i):
            sl, sc = line, col
            end = text.find("*/", i + 2)
            if end < 0:
                raise ParseError("unterminated comment", sl, sc)
            advance(end + 2 - i)
            continue
        sl, sc = line, col
        if text.startswith("->", i) or text.startswith("--", i):
            toks.append(_Token("edgeop", text[i:i + 2], sl, sc))
            advance(2)
            continue
        if ch in _PUNCT:
            toks.append(_Token("punct", ch, sl, sc))
            advance(1)
            continue
        if ch == '"':
            advance(1)
            buf = []
            while True:
                if i >= n:
                    raise ParseError("unterminated string", sl, sc)
                c = text[i]
                if c == "\\" and i + 1 < n:
                    nxt = text[i + 1]
                    if nxt == '"':
                        buf.append('"')
                    elif nxt == "\n":
                        pass
                    else:
                        buf.append("\\" + nxt)
                    advance(2)
                    continue
                if c == '"':
                    advance(1)
                    break
                buf.append(c)
                advance(1)
            toks.append(_Token("id", "".join(buf), sl, sc, quoted=True))
            continue
        if ch == "<":
            depth = 0
            j = i
            while j < n:
                if text[j] == "<":
                    depth += 1
                elif text[j] == ">":
                    depth -= 1
                    if depth == 0:
                        break
                j += 1
            if j >= n:
                raise ParseError("unterminated HTML string", sl, sc)
            toks.append(_Token("id", text[i + 1:j], sl, sc, quoted=True))
            advance(j + 1 - i)
            continue
        if ch.isalnum() or ch in "_.-" or ord(ch) > 127:
            j = i
            if ch in "-." or ch.isdigit():
                # numeral: [-]?(.[0-9]+ | [0-9]+(.[0-9]*)?)
                j = i + 1 if ch == "-" else i
                while j < n and (text[j].isdigit() or text[j] == "."):
                    j += 1
                if j == i + (1 if ch == "-" else 0):
                    raise ParseError(f"unexpected character {ch!r}", sl, sc)
            else:
                while j < n and (text[j].isalnum() or text[j] == "_" or ord(text[j]) > 127):
                    j += 1
            toks.append(_Token("id", text[i:j], sl, sc))
            advance(j - i)
            continue
        raise ParseError(f"unexpected character {ch!r}", sl, sc)
    toks.append(_Token("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0
        self.builder = GraphBuilder()
        # one mention set per open subgraph, innermost last
        self.mentions: list[dict[str, None]] = []

    def peek(self, offset: int = 0) -> _Token:
        return self.toks[min(self.pos + offset, len(self.toks) - 1)]

    def next(self) -> _Token:
        tok = self.toks[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def error(self, msg: str, tok: _Token | None = None) -> ParseError:
        tok = tok or self.peek()
        found = "end of input" if tok.kind == "eof" else repr(tok.value)
        return ParseError(f"{msg}, found {found}", tok.line, tok.col)

    def is_kw(self, tok: _Token, word: str) -> bool:
        return tok.kind == "id" and not tok.quoted and tok.value.lower() == word

    def is_punct(self, tok: _Token, ch: str) -> bool:
        return tok.kind == "punct" and tok.value == ch

    def expect_punct(self, ch: str) -> _Token:
        tok = self.peek()
        if not self.is_punct(tok, ch):
            raise self.error(f"expected {ch!r}")
        return self.next()

    def expect_id(self) -> str:
        tok = self.peek()
        if tok.kind != "id" or (not tok.quoted and tok.value.lower() in _KEYWORDS):
            raise self.error("expected identifier")
        self.next()
        value = tok.value
        if tok.quoted:
            while self.is_punct(self.peek(), "+") and self.peek(1).quoted:
                self.next()
                value += self.next().value
        return value

    def parse(self) -> CallGraph:
        tok = self.peek()
        if self.is_kw(tok, "strict"):
            self.next()
            tok = self.peek()
        if self.is_kw(tok, "graph"):
            raise UnsupportedFormatError(
                "undirected 'graph' documents are not supported; call graphs must be 'digraph'",
                tok.line, tok.col,
            )
        if not self.is_kw(tok, "digraph"):
            raise self.error("expected 'digraph'")
        self.next()
        if self.peek().kind == "id" and not self.is_kw(self.peek(), "subgraph"):
            self.expect_id()
        self.expect_punct("{")
        self.stmt_list()
        self.expect_punct("}")
        if self.peek().kind != "eof":
            raise self.error("unexpected content after graph body")
        return self.builder.build()

    def stmt_list(self) -> None:
        while True:
            tok = self.peek()
            if tok.kind == "eof" or self.is_punct(tok, "}"):
                return
            self.stmt()
            if self.is_punct(self.peek(), ";"):
                self.next()

    def stmt(self) -> None:
        tok = self.peek()
        if self.is_kw(tok, "graph") or self.is_kw(tok, "node") or self.is_kw(tok, "edge"):
            self.next()
            self.attr_list(required=True)
            return
        if tok.kind == "id" and self.is_punct(self.peek(1), "="):
            self.expect_id()
            self.next()
            self.expect_id()
            return
        operand = self.operand()
        if self.peek().kind == "edgeop":
            self.edge_rhs(operand)
        else:
            attrs = self.attr_list(required=False)
            if len(operand) == 1 and operand[0][1]:
                # single node statement
                node_id = operand[0][0]
                self.builder.add_node(node_id, attrs.get("label"))

    def operand(self) -> list[tuple[str, bool]]:
        """Returns the node ids an edge operand expands to.

        Each entry is ``(id, is_plain_node)``; subgraph operands expand to all
        of their nodes.
        """
        tok = self.peek()
        if self.is_kw(tok, "subgraph") or self.is_punct(tok, "{"):
            return [(n, False) for n in self.subgraph()]
        node_id = self.node_id()
        return [(node_id, True)]

    def node_id(self) -> str:
        node_id = self.expect_id()
        if self.is_punct(self.peek(), ":"):
            self.next()
            self.expect_id()
            if self.is_punct(self.peek(), ":"):
                self.next()
                self.expect_id()
        self.builder.add_node(node_id)
        for seen in self.mentions:
            seen[node_id] = None
        return node_id

    def subgraph(self) -> list[str]:
        if self.is_kw(self.peek(), "subgraph"):
            self.next()
            if self.peek().kind == "id":
                self.expect_id()
        self.expect_punct("{")
        self.mentions.append({})
        self.stmt_list()
        self.expect_punct("}")
        return list(self.mentions.pop())

    def edge_rhs(self, left: list[tuple[str, bool]]) -> None:
        chain = [left]
        while self.peek().kind == "edgeop":
            op = self.next()
            if op.value == "--":
                raise ParseError("undirected edge '--' inside a digraph", op.line, op.col)
            chain.append(self.operand())
        self.attr_list(required=False)
        for src, dst in zip(chain, chain[1:]):
            for a, _ in src:
                for b, _ in dst:
                    self.builder.add_edge(a, b)

    def attr_list(self, required: bool) -> dict[str, str]:
        attrs: dict[str, str] = {}
        if not self.is_punct(self.peek(), "["):
            if required:
                raise self.error("expected '['")
            return attrs
        while self.is_punct(self.peek(), "["):
            self.next()
            while not self.is_punct(self.peek(), "]"):
                key = self.expect_id()
                value = "true"
                if self.is_punct(self.peek(), "="):
                    self.next()
                    value = self.expect_id()
                attrs[key] = value
                if self.is_punct(self.peek(), ";") or self.is_punct(self.peek(), ","):
                    self.next()
            self.expect_punct("]")
        return attrs


def parse_dot(text: str) -> CallGraph:
    return _Parser(text).parse()


def quote_id(s: str) -> str:
    # only \" is an escape inside quoted ids; other backslashes stay literal
    return '"' + s.replace('"', '\\"') + '"'
