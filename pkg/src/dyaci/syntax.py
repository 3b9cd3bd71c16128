"""Concrete syntax for terms.

Grammar::

    term  ::= IDENT                       atom (lower case or digit first)
            | VARNAME                     variable (upper case first, or ?name)
            | @IDENT                      reserved atom (internal use)
            | pair(term, term)
            | senc(term, term)            enc(...) is accepted as an alias
            | aenc(term, key)
            | sig(term, priv(key))
            | priv(key)
            | aci(term, ..., term)
            | { term . term . ... }       ACI set; '·' may replace '.'

A constructor name not followed by '(' is read as a plain atom.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .terms import KeyPositionError, Term, TermError, aci, aenc, atom, pair, priv, senc, sig, var


class ParseError(TermError):
    def __init__(self, message: str, text: str, pos: int) -> None:
        self.text = text
        self.pos = pos
        super().__init__(f"{message} at position {pos}: {text[max(0, pos - 20):pos + 20]!r}")


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<arrow>\|>)
  | (?P<name>[?@]?[A-Za-z0-9_][A-Za-z0-9_']*)
  | (?P<punct>[(){},.·])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        if kind != "ws":
            tok = m.group()
            if kind == "punct" and tok == "·":
                tok = "."
            out.append(Token(kind, tok, pos))
        pos = m.end()
    out.append(Token("eof", "", len(text)))
    return out


_BINARY = {"pair": pair, "senc": senc, "enc": senc, "aenc": aenc, "sig": sig}


class _Parser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        raise ParseError(message, self.text, tok.pos)

    def expect(self, text: str) -> Token:
        tok = self.tok
        if tok.text != text or tok.kind not in ("punct", "arrow"):
            self.error(f"expected {text!r}, found {tok.text or 'end of input'!r}")
        self.i += 1
        return tok

    def at(self, text: str) -> bool:
        return self.tok.kind in ("punct", "arrow") and self.tok.text == text

    def term(self) -> Term:
        tok = self.tok
        if tok.kind == "name":
            self.i += 1
            name = tok.text
            if self.at("("):
                return self.compound(name, tok)
            return _leaf(name)
        if self.at("{"):
            self.i += 1
            items = [self.term()]
            while self.at("."):
                self.i += 1
                items.append(self.term())
            self.expect("}")
            return aci(items)
        self.error(f"expected a term, found {tok.text or 'end of input'!r}")

    def compound(self, name: str, tok: Token) -> Term:
        self.expect("(")
        args = [self.term()]
        while self.at(","):
            self.i += 1
            args.append(self.term())
        self.expect(")")
        try:
            if name in _BINARY:
                if len(args) != 2:
                    self.error(f"{name} takes 2 arguments, got {len(args)}", tok)
                return _BINARY[name](*args)
            if name == "priv":
                if len(args) != 1:
                    self.error(f"priv takes 1 argument, got {len(args)}", tok)
                return priv(args[0])
            if name == "aci":
                return aci(args)
        except KeyPositionError as exc:
            raise ParseError(str(exc), self.text, tok.pos) from None
        self.error(f"unknown constructor {name!r}", tok)

    def term_list(self, stop: tuple[str, ...] = ()) -> list[Term]:
        if self.tok.kind == "eof" or any(self.at(s) for s in stop):
            return []
        out = [self.term()]
        while self.at(","):
            self.i += 1
            out.append(self.term())
        return out

    def done(self) -> None:
        if self.tok.kind != "eof":
            self.error(f"unexpected {self.tok.text!r}")


def _leaf(name: str) -> Term:
    if name[0] == "?" or name[0].isupper():
        return var(name)
    return atom(name)


def parse_term(text: str) -> Term:
    """Parse one term; the result is interned but not normalized."""
    p = _Parser(text)
    t = p.term()
    p.done()
    return t


def parse_terms(text: str) -> list[Term]:
    """Parse a comma-separated, possibly empty, list of terms."""
    p = _Parser(text)
    out = p.term_list()
    p.done()
    return out


def parse_constraint_line(text: str) -> tuple[list[Term], Term]:
    """Parse ``t1, ..., tn |> t`` into (knowledge, target)."""
    p = _Parser(text)
    knowledge = p.term_list(stop=("|>",))
    p.expect("|>")
    target = p.term()
    p.done()
    return knowledge, target
