"""Parser for the ProbLog-style surface syntax.

Accepted statements, one per ``.``-terminated clause, ``%`` starts a comment:

    0.1::burglary.                     probabilistic fact
    0.7::hears_alarm(X) :- person(X).  intensional probabilistic fact
    t(_)::stress(P) :- person(P).      learnable probabilistic fact
    P1::burglary.                      learnable (uppercase placeholder)
    alarm :- burglary.                 rule
    person(mary).                      fact
    query(burglary).                   query directive
    evidence(calls(john),true).        evidence directive

Negation is written ``\\+`` before a body literal. No other built-ins.
"""

from __future__ import annotations

from typing import List, Optional, Tuple

from .errors import ProgramParseError, SemanticError
from .syntax import (
    Atom,
    Compound,
    Constant,
    Literal,
    PartialInterpretation,
    Program,
    ProbabilisticFact,
    Rule,
    Term,
    Variable,
)

__all__ = ["parse_program", "parse_evidence", "parse_atom"]

_PUNCT = {"(": "LPAREN", ")": "RPAREN", ",": "COMMA", ".": "DOT"}


class _Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self):
        return f"_Token({self.kind}, {self.text!r}, {self.line}:{self.col})"


def _tokenize(text: str) -> List[_Token]:
    tokens = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "%":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if c == ":" and text[i : i + 2] == ":-":
            tokens.append(_Token("ARROW", ":-", start_line, start_col))
            i += 2
            col += 2
            continue
        if c == ":" and text[i : i + 2] == "::":
            tokens.append(_Token("DCOLON", "::", start_line, start_col))
            i += 2
            col += 2
            continue
        if c == "\\" and text[i : i + 2] == "\\+":
            tokens.append(_Token("NOT", "\\+", start_line, start_col))
            i += 2
            col += 2
            continue
        if c in _PUNCT:
            tokens.append(_Token(_PUNCT[c], c, start_line, start_col))
            i += 1
            col += 1
            continue
        if c == "'":
            j = i + 1
            buf = []
            while j < n:
                if text[j] == "\\" and j + 1 < n:
                    buf.append(text[j + 1])
                    j += 2
                    continue
                if text[j] == "'":
                    break
                if text[j] == "\n":
                    raise ProgramParseError("unterminated quoted name", start_line, start_col)
                buf.append(text[j])
                j += 1
            else:
                raise ProgramParseError("unterminated quoted name", start_line, start_col)
            tokens.append(_Token("QNAME", "".join(buf), start_line, start_col))
            col += j + 1 - i
            i = j + 1
            continue
        if c.isdigit() or (c == "-" and i + 1 < n and text[i + 1].isdigit()):
            j = i + 1
            while j < n and (text[j].isdigit() or text[j] in ".eE"):
                if text[j] == ".":
                    # a dot not followed by a digit terminates the clause
                    if j + 1 >= n or not text[j + 1].isdigit():
                        break
                j += 1
                if text[j - 1] in "eE" and j < n and text[j] in "+-":
                    j += 1
            tokens.append(_Token("NUMBER", text[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = "VAR" if (c == "_" or c.isupper()) else "NAME"
            tokens.append(_Token(kind, word, start_line, start_col))
            col += j - i
            i = j
            continue
        raise ProgramParseError(f"unexpected character {c!r}", start_line, start_col)
    tokens.append(_Token("EOF", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ProgramParseError(
                f"expected {kind}, found {tok.text!r}", tok.line, tok.col
            )
        return self.next()

    def error(self, message: str):
        tok = self.peek()
        raise ProgramParseError(message, tok.line, tok.col)

    # --- grammar ---------------------------------------------------------

    def term(self) -> Term:
        tok = self.peek()
        if tok.kind == "VAR":
            self.next()
            return Variable(tok.text)
        if tok.kind == "NUMBER":
            self.next()
            return Constant(tok.text)
        if tok.kind in ("NAME", "QNAME"):
            self.next()
            if self.peek().kind == "LPAREN" and tok.kind == "NAME":
                self.next()
                args = [self.term()]
                while self.peek().kind == "COMMA":
                    self.next()
                    args.append(self.term())
                self.expect("RPAREN")
                return Compound(tok.text, tuple(args))
            return Constant(tok.text)
        self.error("expected a term")

    def atom(self) -> Atom:
        tok = self.peek()
        if tok.kind not in ("NAME", "QNAME"):
            self.error("expected an atom")
        self.next()
        if self.peek().kind == "LPAREN":
            self.next()
            args = [self.term()]
            while self.peek().kind == "COMMA":
                self.next()
                args.append(self.term())
            self.expect("RPAREN")
            return Atom(tok.text, tuple(args))
        return Atom(tok.text)

    def literal(self) -> Literal:
        if self.peek().kind == "NOT":
            self.next()
            return Literal(self.atom(), positive=False)
        return Literal(self.atom(), positive=True)

    def body(self) -> Tuple[Literal, ...]:
        lits = [self.literal()]
        while self.peek().kind == "COMMA":
            self.next()
            lits.append(self.literal())
        return tuple(lits)

    def prob_label(self) -> Tuple[Optional[float], bool]:
        """Probability position: a number, ``t(_)``, or an uppercase placeholder."""
        tok = self.peek()
        if tok.kind == "NUMBER":
            self.next()
            try:
                value = float(tok.text)
            except ValueError:
                raise ProgramParseError(f"bad number {tok.text!r}", tok.line, tok.col)
            return value, False
        if tok.kind == "VAR":
            self.next()
            return None, True
        if tok.kind == "NAME" and tok.text == "t":
            self.next()
            self.expect("LPAREN")
            marker = self.expect("VAR")
            if marker.text != "_":
                raise ProgramParseError(
                    "learnable marker must be t(_)", marker.line, marker.col
                )
            self.expect("RPAREN")
            return None, True
        self.error("expected a probability")


def parse_program(text: str) -> Program:
    """Parse program text into a validated Program.

    Learnable facts receive parameter indices in source order. Inline
    ``query/1`` and ``evidence/2`` directives are collected into the result.
    """
    parser = _Parser(text)
    prob_facts: List[ProbabilisticFact] = []
    rules: List[Rule] = []
    queries: List[Atom] = []
    evidence = {}
    next_param = 0

    while parser.peek().kind != "EOF":
        tok = parser.peek()
        looks_probabilistic = tok.kind == "NUMBER" or tok.kind == "VAR"
        if tok.kind == "NAME" and tok.text == "t":
            after = parser.tokens[parser.pos + 1 : parser.pos + 5]
            looks_probabilistic = (
                len(after) >= 4
                and after[0].kind == "LPAREN"
                and after[1].kind == "VAR"
                and after[2].kind == "RPAREN"
                and after[3].kind == "DCOLON"
            )
        if looks_probabilistic:
            prob, learnable = parser.prob_label()
            parser.expect("DCOLON")
            head = parser.atom()
            domain: Tuple[Literal, ...] = ()
            if parser.peek().kind == "ARROW":
                parser.next()
                domain = parser.body()
            parser.expect("DOT")
            if learnable:
                fact = ProbabilisticFact(head, param=next_param, domain_body=domain)
                next_param += 1
            else:
                fact = ProbabilisticFact(head, prob=prob, domain_body=domain)
            prob_facts.append(fact)
            continue

        head = parser.atom()
        if head.predicate == "query" and len(head.args) == 1 and parser.peek().kind == "DOT":
            parser.next()
            q = _term_to_atom(head.args[0], parser)
            if q not in queries:
                queries.append(q)
            continue
        if head.predicate == "evidence" and len(head.args) == 2 and parser.peek().kind == "DOT":
            parser.next()
            atom = _term_to_atom(head.args[0], parser)
            value = _term_to_bool(head.args[1], parser)
            if atom in evidence and evidence[atom] != value:
                raise SemanticError(f"conflicting evidence for {atom}")
            evidence[atom] = value
            continue
        if parser.peek().kind == "ARROW":
            parser.next()
            body = parser.body()
            parser.expect("DOT")
            rules.append(Rule(head, body))
        else:
            parser.expect("DOT")
            rules.append(Rule(head))

    program = Program(
        prob_facts=tuple(prob_facts),
        rules=tuple(rules),
        queries=tuple(queries),
        evidence=PartialInterpretation(evidence),
    )
    program.validate()
    _validate_domains(program)
    return program


def _term_to_atom(term: Term, parser: _Parser) -> Atom:
    if isinstance(term, Constant):
        return Atom(term.name)
    if isinstance(term, Compound):
        return Atom(term.functor, term.args)
    parser.error("directive argument must be a ground atom")


def _term_to_bool(term: Term, parser: _Parser) -> bool:
    if isinstance(term, Constant) and term.name in ("true", "false"):
        return term.name == "true"
    parser.error("evidence value must be true or false")


def _validate_domains(program: Program) -> None:
    prob_sigs = program.probabilistic_signatures()
    for fact in program.prob_facts:
        for lit in fact.domain_body:
            if lit.atom.signature in prob_sigs:
                raise SemanticError(
                    f"domain of {fact.atom} calls probabilistic predicate "
                    f"{lit.atom.predicate}/{len(lit.atom.args)}"
                )


def parse_evidence(text: str) -> PartialInterpretation:
    """Parse a file of ``evidence(atom,true|false).`` lines."""
    parser = _Parser(text)
    assignment = {}
    while parser.peek().kind != "EOF":
        head = parser.atom()
        if head.predicate != "evidence" or len(head.args) != 2:
            parser.error("expected an evidence(atom,true|false) statement")
        parser.expect("DOT")
        atom = _term_to_atom(head.args[0], parser)
        value = _term_to_bool(head.args[1], parser)
        if atom in assignment and assignment[atom] != value:
            raise SemanticError(f"conflicting evidence for {atom}")
        assignment[atom] = value
    return PartialInterpretation(assignment)


def parse_atom(text: str) -> Atom:
    """Parse a single ground or non-ground atom (used by query files and the CLI)."""
    parser = _Parser(text)
    atom = parser.atom()
    if parser.peek().kind == "DOT":
        parser.next()
    if parser.peek().kind != "EOF":
        parser.error("trailing input after atom")
    return atom
