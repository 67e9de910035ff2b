"""String constraint language over the secret ``h`` and the low input ``l``.

Formulas are immutable trees of frozen dataclasses, so they hash, compare
structurally and can be shared freely.  Strings have a fixed length per
variable (see :class:`StringDomain`); every operation here is a pure
function of its arguments.
"""
from __future__ import annotations

import enum
import itertools
import re
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence, Union

from .errors import DomainError, FormulaError, ParseError, ProjectionError

__all__ = [
    "Var", "HIGH", "LOW", "StringDomain", "DIGITS", "LOWER",
    "Const", "TRUE", "FALSE", "Not", "And", "Or",
    "CharEqConst", "CharNeqConst", "CharEqVar", "CharNeqVar",
    "CharLtVar", "CharGeVar", "LexLt", "LexGe",
    "StrEqConst", "StrNeqConst", "BeginsConst", "NotBeginsConst",
    "Atom", "Formula", "conj", "disj", "neg", "normalize", "free_vars",
    "atoms", "evaluate", "substitute", "project_to_low", "simplify",
    "parse_formula", "to_sexpr", "parse_bundle", "check_formula",
]


class Var(enum.Enum):
    HIGH = "h"
    LOW = "l"

    def __repr__(self):
        return self.value

    @property
    def other(self) -> "Var":
        return Var.LOW if self is Var.HIGH else Var.HIGH


HIGH = Var.HIGH
LOW = Var.LOW

DIGITS = "0123456789"
LOWER = "abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class StringDomain:
    """Finite alphabet plus one exact length per variable.

    Character order for lexicographic comparisons is the order of
    ``alphabet``, not code-point order.
    """

    alphabet: str
    high_len: int
    low_len: int
    _rank: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if not self.alphabet:
            raise DomainError("alphabet must be non-empty")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise DomainError(f"alphabet has duplicate characters: {self.alphabet!r}")
        if self.high_len < 0 or self.low_len < 0:
            raise DomainError("lengths must be non-negative")
        object.__setattr__(self, "_rank", {c: i for i, c in enumerate(self.alphabet)})

    @classmethod
    def uniform(cls, alphabet: str, length: int) -> "StringDomain":
        return cls(alphabet, length, length)

    def length(self, var: Var) -> int:
        return self.high_len if var is HIGH else self.low_len

    def size(self, var: Var) -> int:
        return len(self.alphabet) ** self.length(var)

    def rank(self, char: str) -> int:
        try:
            return self._rank[char]
        except KeyError:
            raise DomainError(f"character {char!r} not in alphabet") from None

    def __contains__(self, char) -> bool:
        return char in self._rank

    def check(self, value: str, var: Var) -> str:
        if not isinstance(value, str):
            raise DomainError(f"expected a string for {var.value}, got {type(value).__name__}")
        if len(value) != self.length(var):
            raise DomainError(
                f"{var.value} must have length {self.length(var)}, got {value!r}")
        bad = [c for c in value if c not in self._rank]
        if bad:
            raise DomainError(f"{value!r} uses characters outside the alphabet: {bad[0]!r}")
        return value

    def strings(self, var: Var) -> Iterator[str]:
        """All strings of ``var``'s length in lexicographic alphabet order."""
        for chars in itertools.product(self.alphabet, repeat=self.length(var)):
            yield "".join(chars)


# -- formula tree ------------------------------------------------------------

class Formula:
    """Marker base class for formula nodes."""

    __slots__ = ()

    def __str__(self):
        return to_sexpr(self)


@dataclass(frozen=True, repr=False)
class Const(Formula):
    value: bool

    def __repr__(self):
        return "TRUE" if self.value else "FALSE"


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True)
class And(Formula):
    children: tuple

    def __post_init__(self):
        if not self.children:
            raise FormulaError("And needs at least one child")
        object.__setattr__(self, "children", tuple(self.children))


@dataclass(frozen=True)
class Or(Formula):
    children: tuple

    def __post_init__(self):
        if not self.children:
            raise FormulaError("Or needs at least one child")
        object.__setattr__(self, "children", tuple(self.children))


class Atom(Formula):
    __slots__ = ()
    negation: type = None  # set below

    def negated(self) -> "Atom":
        return self.negation(*self._fields())

    def _fields(self):
        return tuple(getattr(self, f) for f in self.__dataclass_fields__)

    def vars(self) -> frozenset:
        return frozenset(v for v in self._fields() if isinstance(v, Var))


@dataclass(frozen=True)
class CharEqConst(Atom):
    var: Var
    index: int
    char: str


@dataclass(frozen=True)
class CharNeqConst(Atom):
    var: Var
    index: int
    char: str


@dataclass(frozen=True)
class CharEqVar(Atom):
    var1: Var
    index1: int
    var2: Var
    index2: int


@dataclass(frozen=True)
class CharNeqVar(Atom):
    var1: Var
    index1: int
    var2: Var
    index2: int


@dataclass(frozen=True)
class CharLtVar(Atom):
    """``var1[index1] < var2[index2]`` in alphabet order."""

    var1: Var
    index1: int
    var2: Var
    index2: int


@dataclass(frozen=True)
class CharGeVar(Atom):
    var1: Var
    index1: int
    var2: Var
    index2: int


@dataclass(frozen=True)
class LexLt(Atom):
    var1: Var
    var2: Var


@dataclass(frozen=True)
class LexGe(Atom):
    var1: Var
    var2: Var


@dataclass(frozen=True)
class StrEqConst(Atom):
    var: Var
    literal: str


@dataclass(frozen=True)
class StrNeqConst(Atom):
    var: Var
    literal: str


@dataclass(frozen=True)
class BeginsConst(Atom):
    var: Var
    literal: str


@dataclass(frozen=True)
class NotBeginsConst(Atom):
    var: Var
    literal: str


for _pos, _neg in [(CharEqConst, CharNeqConst), (CharEqVar, CharNeqVar),
                   (CharLtVar, CharGeVar), (LexLt, LexGe),
                   (StrEqConst, StrNeqConst), (BeginsConst, NotBeginsConst)]:
    _pos.negation = _neg
    _neg.negation = _pos

POSITIVE_ATOMS = (CharEqConst, CharEqVar, CharLtVar, LexLt, StrEqConst, BeginsConst)
CHAR_VAR_ATOMS = (CharEqVar, CharNeqVar, CharLtVar, CharGeVar)
ORDER_ATOMS = (CharLtVar, CharGeVar, LexLt, LexGe)


# -- small constructors --------------------------------------------------------

def conj(*fs: Formula) -> Formula:
    """Conjunction with trivial folding of constants and nesting."""
    out = []
    for f in fs:
        if f == TRUE:
            continue
        if f == FALSE:
            return FALSE
        out.extend(f.children if isinstance(f, And) else (f,))
    if not out:
        return TRUE
    return out[0] if len(out) == 1 else And(tuple(out))


def disj(*fs: Formula) -> Formula:
    out = []
    for f in fs:
        if f == FALSE:
            continue
        if f == TRUE:
            return TRUE
        out.extend(f.children if isinstance(f, Or) else (f,))
    if not out:
        return FALSE
    return out[0] if len(out) == 1 else Or(tuple(out))


def neg(f: Formula) -> Formula:
    if isinstance(f, Const):
        return Const(not f.value)
    if isinstance(f, Atom):
        return f.negated()
    if isinstance(f, Not):
        return f.child
    return Not(f)


def normalize(f: Formula) -> Formula:
    """Push negations into atoms and drop double negations.

    This is the canonical shape produced by the parser.
    """
    if isinstance(f, Not):
        inner = normalize(f.child)
        if isinstance(inner, (Const, Atom, Not)):
            return neg(inner)
        return Not(inner)
    if isinstance(f, And):
        return And(tuple(normalize(c) for c in f.children))
    if isinstance(f, Or):
        return Or(tuple(normalize(c) for c in f.children))
    return f


def atoms(f: Formula) -> Iterator[Atom]:
    if isinstance(f, Atom):
        yield f
    elif isinstance(f, Not):
        yield from atoms(f.child)
    elif isinstance(f, (And, Or)):
        for c in f.children:
            yield from atoms(c)


def free_vars(f: Formula) -> frozenset:
    out = set()
    for a in atoms(f):
        out |= a.vars()
    return frozenset(out)


def check_formula(f: Formula, domain: StringDomain) -> Formula:
    """Raise :class:`FormulaError` if an index or literal does not fit ``domain``."""
    for a in atoms(f):
        if isinstance(a, (CharEqConst, CharNeqConst)):
            _check_index(a.var, a.index, domain)
            if a.char not in domain:
                raise FormulaError(f"character {a.char!r} not in alphabet")
        elif isinstance(a, CHAR_VAR_ATOMS):
            _check_index(a.var1, a.index1, domain)
            _check_index(a.var2, a.index2, domain)
        elif isinstance(a, (StrEqConst, StrNeqConst, BeginsConst, NotBeginsConst)):
            bad = [c for c in a.literal if c not in domain]
            if bad:
                raise FormulaError(f"literal {a.literal!r} uses {bad[0]!r} outside the alphabet")
    return f


def _check_index(var, index, domain):
    if not 0 <= index < domain.length(var):
        raise FormulaError(
            f"index {index} out of declared length {domain.length(var)} of {var.value}")


# -- concrete semantics ----------------------------------------------------------

def _lex_less(a: str, b: str, rank) -> bool:
    for x, y in zip(a, b):
        if x != y:
            return rank(x) < rank(y)
    return len(a) < len(b)


def evaluate(f: Formula, h: Optional[str] = None, l: Optional[str] = None,
             domain: Optional[StringDomain] = None) -> bool:
    """Truth value of ``f`` under concrete strings ``h`` and ``l``."""
    rank = domain.rank if domain is not None else ord
    env = {HIGH: h, LOW: l}

    def val(var):
        s = env[var]
        if s is None:
            raise FormulaError(f"no value given for free variable {var.value}")
        return s

    def ev(g):
        if isinstance(g, Const):
            return g.value
        if isinstance(g, Not):
            return not ev(g.child)
        if isinstance(g, And):
            return all(ev(c) for c in g.children)
        if isinstance(g, Or):
            return any(ev(c) for c in g.children)
        if isinstance(g, CharEqConst):
            return val(g.var)[g.index] == g.char
        if isinstance(g, CharEqVar):
            return val(g.var1)[g.index1] == val(g.var2)[g.index2]
        if isinstance(g, CharLtVar):
            return rank(val(g.var1)[g.index1]) < rank(val(g.var2)[g.index2])
        if isinstance(g, LexLt):
            return _lex_less(val(g.var1), val(g.var2), rank)
        if isinstance(g, StrEqConst):
            return val(g.var) == g.literal
        if isinstance(g, BeginsConst):
            return val(g.var).startswith(g.literal)
        if isinstance(g, Atom):
            return not ev(g.negated())
        raise FormulaError(f"not a formula: {g!r}")

    return ev(f)


# -- substitution ----------------------------------------------------------------

def _char_cmp(var, index, char, domain, less):
    """``var[index] < char`` (less=True) or ``var[index] > char``."""
    r = domain.rank(char)
    chosen = domain.alphabet[:r] if less else domain.alphabet[r + 1:]
    return disj(*(CharEqConst(var, index, d) for d in chosen))


def lex_const(var: Var, literal: str, domain: StringDomain, less: bool) -> Formula:
    """Positional expansion of ``var < literal`` (or ``var > literal``).

    Built from prefix-equality chains so the result stays in the
    character-atom fragment.
    """
    n = domain.length(var)
    m = len(literal)
    branches = []
    for k in range(min(n, m)):
        prefix = [CharEqConst(var, i, literal[i]) for i in range(k)]
        branches.append(conj(*prefix, _char_cmp(var, k, literal[k], domain, less)))
    # one string is a proper prefix of the other
    if (less and n < m) or (not less and n > m):
        branches.append(conj(*(CharEqConst(var, i, literal[i]) for i in range(min(n, m)))))
    return disj(*branches)


def substitute(f: Formula, var: Var, value: str, domain: StringDomain) -> Formula:
    """Instantiate ``var`` with the concrete string ``value``.

    The result does not mention ``var``; lexicographic and character-order
    atoms against the now-constant side are expanded positionally.
    """
    domain.check(value, var)

    def sub(g):
        if isinstance(g, Const):
            return g
        if isinstance(g, Not):
            return neg(sub(g.child))
        if isinstance(g, And):
            return conj(*(sub(c) for c in g.children))
        if isinstance(g, Or):
            return disj(*(sub(c) for c in g.children))
        if var not in g.vars():
            return g
        if not isinstance(g, POSITIVE_ATOMS):
            return neg(sub(g.negated()))
        if isinstance(g, CharEqConst):
            return Const(value[g.index] == g.char)
        if isinstance(g, StrEqConst):
            return Const(value == g.literal)
        if isinstance(g, BeginsConst):
            return Const(value.startswith(g.literal))
        if isinstance(g, CharEqVar):
            if g.var1 is var and g.var2 is var:
                return Const(value[g.index1] == value[g.index2])
            if g.var1 is var:
                return CharEqConst(g.var2, g.index2, value[g.index1])
            return CharEqConst(g.var1, g.index1, value[g.index2])
        if isinstance(g, CharLtVar):
            if g.var1 is var and g.var2 is var:
                return Const(domain.rank(value[g.index1]) < domain.rank(value[g.index2]))
            if g.var1 is var:
                # const < other[index2]
                return _char_cmp(g.var2, g.index2, value[g.index1], domain, less=False)
            return _char_cmp(g.var1, g.index1, value[g.index2], domain, less=True)
        if isinstance(g, LexLt):
            if g.var1 is var and g.var2 is var:
                return FALSE
            if g.var1 is var:
                return lex_const(g.var2, value, domain, less=False)
            return lex_const(g.var1, value, domain, less=True)
        raise FormulaError(f"cannot substitute into {g!r}")

    return simplify(sub(f))


def rename(f: Formula, mapping: dict) -> Formula:
    """Rename variables according to ``mapping`` (Var -> Var)."""
    if isinstance(f, Const):
        return f
    if isinstance(f, Not):
        return Not(rename(f.child, mapping))
    if isinstance(f, And):
        return And(tuple(rename(c, mapping) for c in f.children))
    if isinstance(f, Or):
        return Or(tuple(rename(c, mapping) for c in f.children))
    fields = [mapping.get(x, x) if isinstance(x, Var) else x for x in f._fields()]
    return type(f)(*fields)


def project_to_low(c_h: Formula, forbidden: Sequence[str], domain: StringDomain) -> Formula:
    """C_l: knowledge about ``h`` restated as a constraint on ``l``.

    Every ``h`` becomes ``l`` and each already-tried input is excluded.
    """
    if domain.high_len != domain.low_len:
        raise ProjectionError(
            f"cannot project: |h|={domain.high_len} differs from |l|={domain.low_len}")
    if LOW in free_vars(c_h):
        raise FormulaError("C_h must not mention the low variable")
    renamed = rename(c_h, {HIGH: LOW})
    return conj(renamed, *(StrNeqConst(LOW, domain.check(s, LOW)) for s in forbidden))


# -- simplification ----------------------------------------------------------------

def simplify(f: Formula) -> Formula:
    """Constant folding, flattening, duplicate removal, complement detection.

    Preserves the model set exactly and is idempotent.
    """
    if isinstance(f, (Const, Atom)):
        return f
    if isinstance(f, Not):
        inner = simplify(f.child)
        if isinstance(inner, (Const, Atom, Not)):
            return neg(inner)
        return Not(inner)
    is_and = isinstance(f, And)
    unit, zero = (TRUE, FALSE) if is_and else (FALSE, TRUE)
    flat = []
    seen = set()
    for c in f.children:
        c = simplify(c)
        parts = c.children if type(c) is type(f) else (c,)
        for p in parts:
            if p == zero:
                return zero
            if p == unit or p in seen:
                continue
            seen.add(p)
            flat.append(p)
    for p in flat:
        if neg(p) in seen:
            return zero
    if is_and and _conflicting_chars(flat):
        return FALSE
    if not flat:
        return unit
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat)) if is_and else Or(tuple(flat))


def _conflicting_chars(children) -> bool:
    fixed = {}
    for c in children:
        if isinstance(c, CharEqConst):
            key = (c.var, c.index)
            if fixed.setdefault(key, c.char) != c.char:
                return True
    return False


# -- s-expression text format ------------------------------------------------------

def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _charat(var, index):
    return f"(charat {var.value} {index})"


def to_sexpr(f: Formula) -> str:
    """Canonical one-line s-expression for ``f``."""
    if isinstance(f, Const):
        return "(true)" if f.value else "(false)"
    if isinstance(f, Not):
        return f"(not {to_sexpr(f.child)})"
    if isinstance(f, And):
        return "(and " + " ".join(to_sexpr(c) for c in f.children) + ")"
    if isinstance(f, Or):
        return "(or " + " ".join(to_sexpr(c) for c in f.children) + ")"
    if isinstance(f, CharEqConst):
        return f"(= {_charat(f.var, f.index)} {_q(f.char)})"
    if isinstance(f, CharEqVar):
        return f"(= {_charat(f.var1, f.index1)} {_charat(f.var2, f.index2)})"
    if isinstance(f, CharLtVar):
        return f"(< {_charat(f.var1, f.index1)} {_charat(f.var2, f.index2)})"
    if isinstance(f, CharGeVar):
        return f"(>= {_charat(f.var1, f.index1)} {_charat(f.var2, f.index2)})"
    if isinstance(f, LexLt):
        return f"(< {f.var1.value} {f.var2.value})"
    if isinstance(f, LexGe):
        return f"(>= {f.var1.value} {f.var2.value})"
    if isinstance(f, StrEqConst):
        return f"(= {f.var.value} {_q(f.literal)})"
    if isinstance(f, BeginsConst):
        return f"(begins {f.var.value} {_q(f.literal)})"
    if isinstance(f, Atom):
        return f"(not {to_sexpr(f.negated())})"
    raise FormulaError(f"not a formula: {f!r}")


_TOKEN = re.compile(r'\s+|;[^\n]*|(?P<lp>\()|(?P<rp>\))|(?P<str>"(?:[^"\\]|\\.)*")|(?P<sym>[^\s()";]+)')


@dataclass
class _Node:
    value: Union[str, list]
    line: int
    col: int
    quoted: bool = False


def _tokenize(text):
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        col = pos - line_start + 1
        kind = m.lastgroup
        if kind is not None:
            yield kind, m.group(kind), line, col
        chunk = m.group(0)
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()


def _read_sexprs(text):
    stack = [[]]
    opens = []
    for kind, tok, line, col in _tokenize(text):
        if kind == "lp":
            node = _Node([], line, col)
            stack[-1].append(node)
            stack.append(node.value)
            opens.append(node)
        elif kind == "rp":
            if len(stack) == 1:
                raise ParseError("unbalanced ')'", line, col)
            stack.pop()
            opens.pop()
        elif kind == "str":
            body = re.sub(r"\\(.)", r"\1", tok[1:-1])
            stack[-1].append(_Node(body, line, col, quoted=True))
        else:
            stack[-1].append(_Node(tok, line, col))
    if opens:
        raise ParseError("unclosed '('", opens[-1].line, opens[-1].col)
    return stack[0]


class _FormulaBuilder:
    def __init__(self, domain):
        self.domain = domain

    def error(self, msg, node):
        raise ParseError(msg, node.line, node.col)

    def var(self, node):
        if isinstance(node.value, list) or node.quoted:
            self.error("expected variable h or l", node)
        if node.value == "h":
            return HIGH
        if node.value == "l":
            return LOW
        self.error(f"unknown variable {node.value!r}", node)

    def literal(self, node):
        if not node.quoted:
            self.error("expected a quoted string literal", node)
        if self.domain is not None:
            for c in node.value:
                if c not in self.domain:
                    self.error(f"character {c!r} not in alphabet", node)
        return node.value

    def charat(self, node):
        items = node.value
        if len(items) != 3 or items[0].value != "charat":
            self.error("expected (charat VAR IDX)", node)
        var = self.var(items[1])
        try:
            idx = int(items[2].value)
        except (TypeError, ValueError):
            self.error("index must be an integer", items[2])
        if idx < 0 or (self.domain is not None and idx >= self.domain.length(var)):
            bound = self.domain.length(var) if self.domain is not None else "?"
            self.error(f"index {idx} out of declared length {bound} of {var.value}", items[2])
        return var, idx

    def is_charat(self, node):
        return isinstance(node.value, list) and node.value and node.value[0].value == "charat"

    def build(self, node) -> Formula:
        if not isinstance(node.value, list):
            if node.value in ("true", "false") and not node.quoted:
                return Const(node.value == "true")
            self.error(f"expected a formula, got {node.value!r}", node)
        if not node.value:
            self.error("empty expression", node)
        head, *args = node.value
        op = head.value if not isinstance(head.value, list) else None
        if op in ("true", "false"):
            if args:
                self.error(f"({op}) takes no arguments", node)
            return Const(op == "true")
        if op == "not":
            if len(args) != 1:
                self.error("(not F) takes exactly one argument", node)
            return neg_once(self.build(args[0]))
        if op in ("and", "or"):
            if not args:
                self.error(f"({op} ...) needs at least one argument", node)
            children = tuple(self.build(a) for a in args)
            return And(children) if op == "and" else Or(children)
        if op == "begins":
            if len(args) != 2:
                self.error("expected (begins VAR \"LIT\")", node)
            return BeginsConst(self.var(args[0]), self.literal(args[1]))
        if op in ("=", "<", ">="):
            if len(args) != 2:
                self.error(f"({op} A B) takes two arguments", node)
            return self.compare(op, args[0], args[1], node)
        self.error(f"unknown operator {op!r}", head if op is not None else node)

    def compare(self, op, a, b, node):
        if self.is_charat(a) and self.is_charat(b):
            (v1, i1), (v2, i2) = self.charat(a), self.charat(b)
            cls = {"=": CharEqVar, "<": CharLtVar, ">=": CharGeVar}[op]
            return cls(v1, i1, v2, i2)
        if op == "=":
            if self.is_charat(b) and a.quoted:
                a, b = b, a
            if self.is_charat(a):
                var, idx = self.charat(a)
                c = self.literal(b)
                if len(c) != 1:
                    self.error("character literal must have length 1", b)
                return CharEqConst(var, idx, c)
            if a.quoted:
                a, b = b, a
            var = self.var(a)
            lit = self.literal(b)
            if self.domain is not None and len(lit) != self.domain.length(var):
                self.error(f"literal {lit!r} does not have the declared length of {var.value}", b)
            return StrEqConst(var, lit)
        v1, v2 = self.var(a), self.var(b)
        return LexLt(v1, v2) if op == "<" else LexGe(v1, v2)


def neg_once(f: Formula) -> Formula:
    """Negation as written in source: folds into atoms, keeps compound Not."""
    if isinstance(f, (Atom, Const)):
        return neg(f)
    if isinstance(f, Not):
        return f.child
    return Not(f)


def parse_formula(text: str, domain: Optional[StringDomain] = None) -> Formula:
    """Parse one formula in the s-expression syntax.

    With a ``domain``, indices and literals are checked against it.
    """
    nodes = _read_sexprs(text)
    if len(nodes) != 1:
        if not nodes:
            raise ParseError("no formula found", 1, 1)
        extra = nodes[1]
        raise ParseError("more than one formula", extra.line, extra.col)
    return _FormulaBuilder(domain).build(nodes[0])


def parse_bundle(text: str, domain: Optional[StringDomain] = None) -> list:
    """Parse a bundle file: one formula per non-comment line.

    Returns ``(formula, metadata)`` pairs where ``metadata`` holds the
    ``key=value`` pairs of the ``;;`` comment line preceding the formula.
    """
    out = []
    meta = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith(";"):
            body = line.lstrip(";").strip()
            pairs = dict(p.split("=", 1) for p in body.split() if "=" in p)
            if pairs:
                meta = pairs
            continue
        try:
            f = parse_formula(line, domain)
        except ParseError as exc:
            raise ParseError(exc.message, lineno, exc.column) from None
        out.append((f, meta))
        meta = {}
    return out
