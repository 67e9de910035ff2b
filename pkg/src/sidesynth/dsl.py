"""Parser for the small string-program language analysed by :mod:`sidesynth.symexec`.

Example::

    program checkPIN(h: string[4], l: string[4]) {
      for i in 0..len(h) {
        if (h[i] != l[i]) { return false; }
      }
      return true;
    }

Statements: ``if/else``, ``for NAME in LO..HI`` (exclusive, constant
bounds), ``return EXPR;``, ``let TARGET = EXPR;`` and ``TARGET = EXPR;``
where a target may carry integer subscripts (``let d[i][j] = 0;``).
Comments run from ``#`` to end of line.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Optional

from .errors import DSLError, ParseError

__all__ = ["Program", "parse_program"]


# -- AST ----------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: int
    line: int = 0


@dataclass(frozen=True)
class Bool:
    value: bool
    line: int = 0


@dataclass(frozen=True)
class Chr:
    value: str
    line: int = 0


@dataclass(frozen=True)
class Str:
    value: str
    line: int = 0


@dataclass(frozen=True)
class Name:
    id: str
    line: int = 0


@dataclass(frozen=True)
class Index:
    base: object
    index: object
    line: int = 0


@dataclass(frozen=True)
class Slice:
    base: object
    lo: object
    hi: object
    line: int = 0


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object
    line: int = 0


@dataclass(frozen=True)
class Compare:
    op: str
    left: object
    right: object
    line: int = 0


@dataclass(frozen=True)
class Logic:
    op: str
    left: object
    right: object
    line: int = 0


@dataclass(frozen=True)
class NotE:
    operand: object
    line: int = 0


@dataclass(frozen=True)
class Neg:
    operand: object
    line: int = 0


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple
    line: int = 0


@dataclass(frozen=True)
class If:
    cond: object
    then: tuple
    orelse: tuple
    line: int = 0


@dataclass(frozen=True)
class For:
    var: str
    lo: object
    hi: object
    body: tuple
    line: int = 0


@dataclass(frozen=True)
class Return:
    value: object
    line: int = 0


@dataclass(frozen=True)
class Assign:
    name: str
    indices: tuple
    value: object
    declare: bool
    line: int = 0


@dataclass(frozen=True)
class Program:
    name: str
    high_len: int
    low_len: int
    body: tuple
    source: str = field(default="", repr=False, compare=False)

    def with_lengths(self, high_len=None, low_len=None) -> "Program":
        p = replace(self,
                    high_len=self.high_len if high_len is None else high_len,
                    low_len=self.low_len if low_len is None else low_len)
        check_program(p)
        return p

    def loops(self):
        """All ``for`` statements, outermost first."""
        out = []

        def walk(stmts):
            for s in stmts:
                if isinstance(s, For):
                    out.append(s)
                    walk(s.body)
                elif isinstance(s, If):
                    walk(s.then)
                    walk(s.orelse)

        walk(self.body)
        return out


BUILTINS = {"len": 1, "min": None, "max": None, "begins": 2}


# -- lexer ---------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+) | (?P<nl>\n) | (?P<comment>\#[^\n]*)
  | (?P<int>\d+)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<char>'(?:[^'\\]|\\.)')
  | (?P<str>"(?:[^"\\]|\\.)*")
  | (?P<op>\.\.|==|!=|<=|>=|&&|\|\||[-+*/%<>=!(){}\[\],;:])
""", re.VERBOSE)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _lex(text):
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


def _unquote(s):
    return re.sub(r"\\(.)", r"\1", s[1:-1])


# -- parser --------------------------------------------------------------------

class _Parser:
    def __init__(self, text):
        self.toks = _lex(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        raise ParseError(msg, tok.line, tok.col)

    def next(self):
        t = self.tok
        self.i += 1
        return t

    def at(self, text):
        return self.tok.kind in ("op", "name") and self.tok.text == text

    def expect(self, text):
        if not self.at(text):
            found = self.tok.text or "end of input"
            self.error(f"expected {text!r}, found {found!r}")
        return self.next()

    def ident(self):
        if self.tok.kind != "name":
            self.error(f"expected a name, found {self.tok.text!r}")
        return self.next().text

    def integer(self):
        if self.tok.kind != "int":
            self.error(f"expected an integer, found {self.tok.text!r}")
        return int(self.next().text)

    def program(self):
        self.expect("program")
        name = self.ident()
        self.expect("(")
        params = {}
        for k in range(2):
            if k:
                self.expect(",")
            ptok = self.tok
            pname = self.ident()
            if pname not in ("h", "l") or pname in params:
                self.error("parameters must be h and l", ptok)
            self.expect(":")
            self.expect("string")
            self.expect("[")
            params[pname] = self.integer()
            self.expect("]")
        self.expect(")")
        body = self.block()
        if self.tok.kind != "eof":
            self.error(f"unexpected {self.tok.text!r} after program body")
        return name, params["h"], params["l"], body

    def block(self):
        self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.error("unclosed '{'")
            stmts.append(self.statement())
        self.expect("}")
        return tuple(stmts)

    def statement(self):
        t = self.tok
        if self.at("if"):
            self.next()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            then = self.block()
            orelse = ()
            if self.at("else"):
                self.next()
                orelse = (self.statement(),) if self.at("if") else self.block()
            return If(cond, then, orelse, t.line)
        if self.at("for"):
            self.next()
            var = self.ident()
            self.expect("in")
            lo = self.expr()
            self.expect("..")
            hi = self.expr()
            return For(var, lo, hi, self.block(), t.line)
        if self.at("return"):
            self.next()
            value = self.expr()
            self.expect(";")
            return Return(value, t.line)
        declare = False
        if self.at("let"):
            self.next()
            declare = True
        name = self.ident()
        indices = []
        while self.at("["):
            self.next()
            indices.append(self.expr())
            self.expect("]")
        self.expect("=")
        value = self.expr()
        self.expect(";")
        return Assign(name, tuple(indices), value, declare, t.line)

    def expr(self):
        left = self.conjunction()
        while self.at("||"):
            line = self.next().line
            left = Logic("||", left, self.conjunction(), line)
        return left

    def conjunction(self):
        left = self.negation()
        while self.at("&&"):
            line = self.next().line
            left = Logic("&&", left, self.negation(), line)
        return left

    def negation(self):
        if self.at("!"):
            line = self.next().line
            return NotE(self.negation(), line)
        return self.comparison()

    def comparison(self):
        left = self.additive()
        for op in ("==", "!=", "<=", ">=", "<", ">"):
            if self.at(op):
                line = self.next().line
                return Compare(op, left, self.additive(), line)
        return left

    def additive(self):
        left = self.term()
        while self.at("+") or self.at("-"):
            t = self.next()
            left = BinOp(t.text, left, self.term(), t.line)
        return left

    def term(self):
        left = self.unary()
        while self.at("*") or self.at("/") or self.at("%"):
            t = self.next()
            left = BinOp(t.text, left, self.unary(), t.line)
        return left

    def unary(self):
        if self.at("-"):
            line = self.next().line
            return Neg(self.unary(), line)
        return self.postfix()

    def postfix(self):
        node = self.primary()
        while self.at("["):
            line = self.next().line
            lo = self.expr()
            if self.at(".."):
                self.next()
                hi = self.expr()
                node = Slice(node, lo, hi, line)
            else:
                node = Index(node, lo, line)
            self.expect("]")
        return node

    def primary(self):
        t = self.tok
        if t.kind == "int":
            self.next()
            return Num(int(t.text), t.line)
        if t.kind == "char":
            self.next()
            return Chr(_unquote(t.text), t.line)
        if t.kind == "str":
            self.next()
            return Str(_unquote(t.text), t.line)
        if self.at("("):
            self.next()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "name":
            self.next()
            if t.text in ("true", "false"):
                return Bool(t.text == "true", t.line)
            if self.at("("):
                if t.text not in BUILTINS:
                    self.error(f"unknown function {t.text!r}", t)
                self.next()
                args = []
                if not self.at(")"):
                    args.append(self.expr())
                    while self.at(","):
                        self.next()
                        args.append(self.expr())
                self.expect(")")
                arity = BUILTINS[t.text]
                if arity is not None and len(args) != arity:
                    self.error(f"{t.text}() takes {arity} argument(s)", t)
                if arity is None and not args:
                    self.error(f"{t.text}() needs arguments", t)
                return Call(t.text, tuple(args), t.line)
            return Name(t.text, t.line)
        self.error(f"unexpected {t.text or 'end of input'!r}")


# -- static checks ---------------------------------------------------------------

def _const_eval(e, env, p):
    """Evaluate an integer expression over loop variables and ``len``."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Name):
        return env[e.id]
    if isinstance(e, Neg):
        return -_const_eval(e.operand, env, p)
    if isinstance(e, BinOp):
        a, b = _const_eval(e.left, env, p), _const_eval(e.right, env, p)
        if e.op in ("/", "%") and b == 0:
            raise DSLError(f"line {e.line}: division by zero")
        return {"+": a + b, "-": a - b, "*": a * b,
                "/": a // b if b else 0, "%": a % b if b else 0}[e.op]
    if isinstance(e, Call) and e.func == "len" and isinstance(e.args[0], Name):
        return {"h": p.high_len, "l": p.low_len}[e.args[0].id]
    if isinstance(e, Call) and e.func in ("min", "max"):
        vals = [_const_eval(a, env, p) for a in e.args]
        return min(vals) if e.func == "min" else max(vals)
    raise KeyError(e)


def _is_constant(e, loop_vars):
    if isinstance(e, Call) and e.func == "len":
        return isinstance(e.args[0], Name) and e.args[0].id in ("h", "l")
    if isinstance(e, Call):
        return e.func in ("min", "max") and all(_is_constant(a, loop_vars) for a in e.args)
    if isinstance(e, (Num,)):
        return True
    if isinstance(e, Name):
        return e.id in loop_vars
    if isinstance(e, Neg):
        return _is_constant(e.operand, loop_vars)
    if isinstance(e, BinOp):
        return _is_constant(e.left, loop_vars) and _is_constant(e.right, loop_vars)
    return False


def check_program(p: Program) -> Program:
    """Constant loop bounds and in-range string indices, checked by unrolling."""

    def bounds(stmts, loop_vars):
        for s in stmts:
            if isinstance(s, For):
                for b in (s.lo, s.hi):
                    if not _is_constant(b, loop_vars):
                        raise DSLError(f"line {s.line}: non-constant loop bound")
                if s.var in ("h", "l") or s.var in loop_vars:
                    raise DSLError(f"line {s.line}: loop variable {s.var!r} shadows another name")
                bounds(s.body, loop_vars | {s.var})
            elif isinstance(s, If):
                bounds(s.then, loop_vars)
                bounds(s.orelse, loop_vars)
            elif isinstance(s, Assign) and s.name in {"h", "l"} | loop_vars:
                raise DSLError(f"line {s.line}: cannot assign to {s.name!r}")

    bounds(p.body, frozenset())

    def names(e):
        if isinstance(e, Name):
            yield e
        for f in ("base", "index", "lo", "hi", "left", "right", "operand"):
            sub = getattr(e, f, None)
            if sub is not None and not isinstance(sub, (str, int, bool)):
                yield from names(sub)
        for a in getattr(e, "args", ()):
            yield from names(a)

    # let is function-scoped: a name must be declared textually before use
    def scoped(stmts, scope):
        for s in stmts:
            exprs = [getattr(s, f) for f in ("cond", "lo", "hi", "value") if hasattr(s, f)]
            exprs += list(getattr(s, "indices", ()))
            for e in exprs:
                for n in names(e):
                    if n.id not in scope:
                        raise DSLError(f"line {n.line or s.line}: undefined name {n.id!r}")
            if isinstance(s, Assign):
                if not s.declare and s.name not in scope:
                    raise DSLError(f"line {s.line}: assignment to undeclared {s.name!r}")
                scope.add(s.name)
            elif isinstance(s, For):
                scope.add(s.var)
                scoped(s.body, scope)
                scope.discard(s.var)
            elif isinstance(s, If):
                scoped(s.then, scope)
                scoped(s.orelse, scope)

    scoped(p.body, {"h", "l"})

    def index_exprs(e):
        if isinstance(e, (Index, Slice)):
            yield e
        for f in ("base", "index", "lo", "hi", "left", "right", "operand", "cond", "value"):
            sub = getattr(e, f, None)
            if sub is not None and not isinstance(sub, (str, int, bool)):
                yield from index_exprs(sub)
        for a in getattr(e, "args", ()):
            yield from index_exprs(a)

    def check_index(e, env):
        if not (isinstance(e.base, Name) and e.base.id in ("h", "l")):
            return
        n = p.high_len if e.base.id == "h" else p.low_len
        parts = [e.index] if isinstance(e, Index) else [e.lo, e.hi]
        for part in parts:
            if not _is_constant(part, set(env)):
                continue
            v = _const_eval(part, env, p)
            limit = n if isinstance(e, Slice) else n - 1
            if not 0 <= v <= limit:
                raise DSLError(
                    f"line {e.line}: index {v} out of declared length {n} of {e.base.id}")

    def walk(stmts, env):
        for s in stmts:
            if isinstance(s, For):
                lo, hi = _const_eval(s.lo, env, p), _const_eval(s.hi, env, p)
                for k in range(lo, hi):
                    walk(s.body, {**env, s.var: k})
                continue
            if isinstance(s, If):
                for e in index_exprs(s.cond):
                    check_index(e, env)
                walk(s.then, env)
                walk(s.orelse, env)
                continue
            for e in index_exprs(s.value):
                check_index(e, env)
            for ix in getattr(s, "indices", ()):
                for e in index_exprs(ix):
                    check_index(e, env)

    walk(p.body, {})
    return p


def parse_program(text: str, high_len: Optional[int] = None,
                  low_len: Optional[int] = None) -> Program:
    """Parse and check a program; lengths in the header may be overridden."""
    name, hl, ll, body = _Parser(text).program()
    p = Program(name, hl if high_len is None else high_len,
                ll if low_len is None else low_len, body, text)
    return check_program(p)
