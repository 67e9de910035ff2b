"""Cost-counting interpreter and path-enumerating symbolic executor.

One tree-walking interpreter serves both purposes.  With concrete strings
for ``h`` and ``l`` it is the attack's observation oracle.  With symbolic
strings every branch on a secret- or input-dependent condition becomes a
constraint; :func:`sym_exec` explores both outcomes depth-first (true
first), re-running the program along a recorded decision prefix, and keeps
only branches whose accumulated path constraint is satisfiable.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

from . import constraints as C
from .constraints import HIGH, LOW, LOWER, StringDomain, Var
from .dsl import (Assign, BinOp, Bool, Call, Chr, Compare, For, If, Index, Logic, Name,
                  Neg, NotE, Num, Program, Return, Slice, Str)
from .errors import DSLError, SymexecError
from .solver import witness

__all__ = ["CostModel", "PathResult", "ObservationConstraint", "run_concrete",
           "sym_exec", "merge_observations", "program_domain"]

log = logging.getLogger(__name__)

NODE_KINDS = ("if", "loop", "return", "assign", "literal", "name", "index", "slice",
              "arith", "compare", "logic", "not", "call")


@dataclass(frozen=True)
class CostModel:
    """Weight per executed node kind; unlisted kinds weigh ``default``.

    A ``for`` loop is charged one ``loop`` unit per bound test, i.e.
    iterations + 1.
    """

    weights: tuple = ()
    default: int = 1

    @classmethod
    def from_dict(cls, weights: dict, default: int = 1) -> "CostModel":
        unknown = set(weights) - set(NODE_KINDS)
        if unknown:
            raise ValueError(f"unknown node kinds: {sorted(unknown)}")
        if any(w < 0 for w in weights.values()) or default < 0:
            raise ValueError("weights must be non-negative")
        return cls(tuple(sorted(weights.items())), default)

    def weight(self, kind: str) -> int:
        for k, w in self.weights:
            if k == kind:
                return w
        return self.default

    def as_dict(self) -> dict:
        return dict(self.weights)


UNIT_COST = CostModel()


@dataclass(frozen=True)
class PathResult:
    constraint: C.Formula
    cost: int
    result: object = None


@dataclass(frozen=True)
class ObservationConstraint:
    """Disjunction of paths whose costs are indistinguishable."""

    formula: C.Formula
    observation: int
    members: int
    costs: tuple = ()

    def covers(self, cost: int) -> bool:
        return cost in self.costs


# -- symbolic values ---------------------------------------------------------------

@dataclass(frozen=True)
class SymStr:
    var: Var
    start: int
    end: int

    def __len__(self):
        return self.end - self.start

    @property
    def whole(self) -> bool:
        return self.start == 0


@dataclass(frozen=True)
class SymChar:
    var: Var
    index: int


class _Returned(Exception):
    def __init__(self, value):
        self.value = value


def program_domain(p: Program, alphabet: str = LOWER) -> StringDomain:
    return StringDomain(alphabet, p.high_len, p.low_len)


class _Machine:
    def __init__(self, program, cost_model, domain, h, l, decisions=None):
        self.p = program
        self.cm = cost_model
        self.domain = domain
        self.rank = domain.rank if domain is not None else ord
        self.cost = 0
        self.decisions = decisions
        self.depth = 0
        self.pc = C.TRUE
        self.witness = None
        self.pending = []
        self.scalars = {"h": h, "l": l}
        self.arrays = {}
        self._w = {k: cost_model.weight(k) for k in NODE_KINDS}

    def charge(self, kind):
        self.cost += self._w[kind]

    def fail(self, node, msg):
        raise DSLError(f"{self.p.name}, line {getattr(node, 'line', '?')}: {msg}")

    # statements
    def run(self):
        try:
            self.block(self.p.body)
        except _Returned as r:
            return r.value
        return None

    def block(self, stmts):
        for s in stmts:
            self.stmt(s)

    def stmt(self, s):
        if isinstance(s, If):
            self.charge("if")
            if self.truth(self.eval(s.cond), s):
                self.block(s.then)
            else:
                self.block(s.orelse)
        elif isinstance(s, For):
            lo, hi = self.integer(s.lo), self.integer(s.hi)
            saved = self.scalars.get(s.var, _MISSING)
            k = lo
            while True:
                self.charge("loop")
                if k >= hi:
                    break
                self.scalars[s.var] = k
                self.block(s.body)
                k += 1
            if saved is _MISSING:
                self.scalars.pop(s.var, None)
            else:
                self.scalars[s.var] = saved
        elif isinstance(s, Return):
            self.charge("return")
            raise _Returned(self.eval(s.value))
        elif isinstance(s, Assign):
            self.charge("assign")
            value = self.eval(s.value)
            if s.indices:
                key = (s.name,) + tuple(self.integer(i) for i in s.indices)
                self.arrays[key] = value
            else:
                if not s.declare and s.name not in self.scalars:
                    self.fail(s, f"assignment to undeclared variable {s.name!r}")
                self.scalars[s.name] = value
        else:
            self.fail(s, f"unknown statement {s!r}")

    def truth(self, v, node):
        if isinstance(v, bool):
            return v
        if isinstance(v, C.Formula):
            v = C.simplify(v)
            if isinstance(v, C.Const):
                return v.value
            return self.decide(v)
        self.fail(node, f"condition is not boolean: {v!r}")

    def decide(self, cond):
        if self.decisions is None:
            raise SymexecError("symbolic condition in concrete execution")
        if self.depth < len(self.decisions):
            d = self.decisions[self.depth]
        else:
            # follow the side the witness takes; queue the other one
            h, l = self.witness
            d = C.evaluate(cond, h, l, self.domain)
            taken, other = (cond, C.neg(cond)) if d else (C.neg(cond), cond)
            self.pending.append((self.decisions + (not d,), C.simplify(C.conj(self.pc, other))))
            self.pc = C.simplify(C.conj(self.pc, taken))
            self.decisions = self.decisions + (d,)
        self.depth += 1
        return d

    def integer(self, e):
        v = self.eval(e)
        if type(v) is not int:
            self.fail(e, f"expected an integer, got {v!r}")
        return v

    # expressions
    def eval(self, e):
        return _EVAL[type(e)](self, e)

    def literal(self, e):
        self.cost += self._w["literal"]
        return e.value

    def name(self, e):
        self.cost += self._w["name"]
        try:
            return self.scalars[e.id]
        except KeyError:
            self.fail(e, f"undefined variable {e.id!r}")

    def slice(self, e):
        self.charge("slice")
        base = self.eval(e.base)
        lo, hi = self.integer(e.lo), self.integer(e.hi)
        if not isinstance(base, (str, SymStr)) or not 0 <= lo <= hi <= len(base):
            self.fail(e, f"bad slice [{lo}..{hi}]")
        if isinstance(base, str):
            return base[lo:hi]
        return SymStr(base.var, base.start + lo, base.start + hi)

    def arith(self, e):
        self.cost += self._w["arith"]
        a, b = self.eval(e.left), self.eval(e.right)
        if type(a) is not int or type(b) is not int:
            self.fail(e, f"arithmetic needs concrete integers, got {a!r} {e.op} {b!r}")
        if e.op in ("/", "%") and b == 0:
            self.fail(e, "division by zero")
        return _ARITH[e.op](a, b)

    def negate(self, e):
        self.charge("arith")
        v = self.eval(e.operand)
        if type(v) is not int:
            self.fail(e, "negation needs an integer")
        return -v

    def comparison(self, e):
        self.cost += self._w["compare"]
        return self.compare(e, e.op, self.eval(e.left), self.eval(e.right))

    def logic(self, e):
        self.charge("logic")
        a = self.eval(e.left)
        if isinstance(a, bool):
            if a == (e.op == "||"):
                return a
            return self.eval(e.right)
        b = self.eval(e.right)
        return C.conj(a, _as_formula(b)) if e.op == "&&" else C.disj(a, _as_formula(b))

    def logical_not(self, e):
        self.charge("not")
        v = self.eval(e.operand)
        if isinstance(v, bool):
            return not v
        if isinstance(v, C.Formula):
            return C.neg(v)
        self.fail(e, "'!' needs a boolean")

    def calling(self, e):
        self.charge("call")
        return self.call(e)

    def index(self, e):
        # integer arrays: name[i][j]...
        chain, base = [], e
        while isinstance(base, Index):
            chain.append(base.index)
            base = base.base
        if isinstance(base, Name) and base.id not in self.scalars:
            self.charge("index")
            key = (base.id,) + tuple(self.integer(i) for i in reversed(chain))
            try:
                return self.arrays[key]
            except KeyError:
                self.fail(e, f"read of unassigned element {base.id}{list(key[1:])}")
        self.charge("index")
        s = self.eval(e.base)
        i = self.integer(e.index)
        if not isinstance(s, (str, SymStr)):
            self.fail(e, f"cannot index {s!r}")
        if not 0 <= i < len(s):
            self.fail(e, f"index {i} out of declared length {len(s)}")
        if isinstance(s, str):
            return s[i]
        return SymChar(s.var, s.start + i)

    def call(self, e):
        args = [self.eval(a) for a in e.args]
        if e.func == "len":
            (s,) = args
            if not isinstance(s, (str, SymStr)):
                self.fail(e, "len() needs a string")
            return len(s)
        if e.func in ("min", "max"):
            if not all(isinstance(a, int) and not isinstance(a, bool) for a in args):
                self.fail(e, f"{e.func}() needs concrete integers")
            return min(args) if e.func == "min" else max(args)
        if e.func == "begins":
            return self.begins(e, *args)
        self.fail(e, f"unknown function {e.func!r}")

    def begins(self, e, s, t):
        if isinstance(s, str) and isinstance(t, str):
            return s.startswith(t)
        if len(t) > len(s):
            return False
        if isinstance(s, SymStr) and isinstance(t, str):
            if s.whole:
                return C.BeginsConst(s.var, t)
            return C.conj(*(C.CharEqConst(s.var, s.start + i, c) for i, c in enumerate(t)))
        if isinstance(s, str):
            return C.conj(*(C.CharEqConst(t.var, t.start + i, s[i]) for i in range(len(t))))
        return C.conj(*(_char_rel("==", SymChar(s.var, s.start + i), SymChar(t.var, t.start + i))
                        for i in range(len(t))))

    def compare(self, e, op, a, b):
        concrete = (str, int, bool)
        if isinstance(a, concrete) and isinstance(b, concrete):
            return self.concrete_compare(e, op, a, b)
        if isinstance(a, SymChar) or isinstance(b, SymChar):
            return self.char_compare(e, op, a, b)
        if isinstance(a, (SymStr, str)) and isinstance(b, (SymStr, str)):
            return self.str_compare(e, op, a, b)
        if isinstance(a, C.Formula) or isinstance(b, C.Formula):
            if op not in ("==", "!="):
                self.fail(e, "booleans only support == and !=")
            fa, fb = _as_formula(a), _as_formula(b)
            iff = C.disj(C.conj(fa, fb), C.conj(C.neg(fa), C.neg(fb)))
            return iff if op == "==" else C.neg(iff)
        raise SymexecError(f"line {e.line}: cannot express {a!r} {op} {b!r} as a constraint")

    def concrete_compare(self, e, op, a, b):
        if op in ("==", "!="):
            return (a == b) == (op == "==")
        if isinstance(a, str) and isinstance(b, str):
            less = C._lex_less(a, b, self.rank)
            greater = C._lex_less(b, a, self.rank)
            return {"<": less, ">": greater, "<=": not greater, ">=": not less}[op]
        if type(a) is not type(b) or isinstance(a, bool):
            self.fail(e, f"cannot order {a!r} and {b!r}")
        return {"<": a < b, ">": a > b, "<=": a <= b, ">=": a >= b}[op]

    def char_compare(self, e, op, a, b):
        if isinstance(a, str) and not isinstance(b, str):
            a, b, op = b, a, _FLIP[op]
        if isinstance(b, str):
            if len(b) != 1:
                self.fail(e, f"comparing a character with string {b!r}")
            if b not in self.domain:
                return op == "!=" if op in ("==", "!=") else self.fail(
                    e, f"character {b!r} not in alphabet")
            if op == "==":
                return C.CharEqConst(a.var, a.index, b)
            if op == "!=":
                return C.CharNeqConst(a.var, a.index, b)
            lt = C._char_cmp(a.var, a.index, b, self.domain, less=True)
            gt = C._char_cmp(a.var, a.index, b, self.domain, less=False)
            return {"<": lt, ">": gt, "<=": C.neg(gt), ">=": C.neg(lt)}[op]
        if isinstance(b, SymStr) and len(b) == 1:
            b = SymChar(b.var, b.start)
        if not isinstance(b, SymChar):
            raise SymexecError(f"line {e.line}: cannot compare a character with {b!r}")
        return _char_rel(op, a, b)

    def str_compare(self, e, op, a, b):
        if isinstance(a, str):
            a, b, op = b, a, _FLIP[op]
        if isinstance(b, str):
            if op in ("==", "!="):
                if len(a) != len(b):
                    f = C.FALSE
                elif a.whole and len(a) == self.domain.length(a.var):
                    f = C.StrEqConst(a.var, b)
                else:
                    f = C.conj(*(C.CharEqConst(a.var, a.start + i, c) for i, c in enumerate(b)))
                return f if op == "==" else C.neg(f)
            if not (a.whole and len(a) == self.domain.length(a.var)):
                raise SymexecError(f"line {e.line}: ordering of partial strings is not supported")
            lt = C.lex_const(a.var, b, self.domain, less=True)
            gt = C.lex_const(a.var, b, self.domain, less=False)
            return {"<": lt, ">": gt, "<=": C.neg(gt), ">=": C.neg(lt)}[op]
        if op in ("==", "!="):
            if len(a) != len(b):
                f = C.FALSE
            else:
                f = C.conj(*(_char_rel("==", SymChar(a.var, a.start + i), SymChar(b.var, b.start + i))
                             for i in range(len(a))))
            return f if op == "==" else C.neg(f)
        full = all(x.whole and len(x) == self.domain.length(x.var) for x in (a, b))
        if not full:
            raise SymexecError(f"line {e.line}: ordering of partial strings is not supported")
        return {"<": C.LexLt(a.var, b.var), ">=": C.LexGe(a.var, b.var),
                ">": C.LexLt(b.var, a.var), "<=": C.LexGe(b.var, a.var)}[op]


_MISSING = object()
_ARITH = {"+": int.__add__, "-": int.__sub__, "*": int.__mul__,
          "/": int.__floordiv__, "%": int.__mod__}
_EVAL = {Num: _Machine.literal, Bool: _Machine.literal, Chr: _Machine.literal,
         Str: _Machine.literal, Name: _Machine.name, Index: _Machine.index,
         Slice: _Machine.slice, BinOp: _Machine.arith, Neg: _Machine.negate,
         Compare: _Machine.comparison, Logic: _Machine.logic, NotE: _Machine.logical_not,
         Call: _Machine.calling}
_FLIP = {"==": "==", "!=": "!=", "<": ">", ">": "<", "<=": ">=", ">=": "<="}


def _char_rel(op, a: SymChar, b: SymChar):
    if op == "==":
        return C.CharEqVar(a.var, a.index, b.var, b.index)
    if op == "!=":
        return C.CharNeqVar(a.var, a.index, b.var, b.index)
    if op == "<":
        return C.CharLtVar(a.var, a.index, b.var, b.index)
    if op == ">=":
        return C.CharGeVar(a.var, a.index, b.var, b.index)
    if op == ">":
        return C.CharLtVar(b.var, b.index, a.var, a.index)
    return C.CharGeVar(b.var, b.index, a.var, a.index)


def _as_formula(v):
    if isinstance(v, bool):
        return C.Const(v)
    if isinstance(v, C.Formula):
        return v
    raise SymexecError(f"not a boolean value: {v!r}")


# -- public operations ------------------------------------------------------------

def run_concrete(p: Program, h: str, l: str, cost_model: CostModel = UNIT_COST,
                 domain: Optional[StringDomain] = None):
    """Execute ``p`` on concrete inputs; returns ``(result, cost)``."""
    if len(h) != p.high_len or len(l) != p.low_len:
        raise DSLError(f"{p.name} expects |h|={p.high_len}, |l|={p.low_len}; "
                       f"got {len(h)} and {len(l)}")
    m = _Machine(p, cost_model, domain, h, l)
    result = m.run()
    return result, m.cost


def sym_exec(p: Program, cost_model: CostModel = UNIT_COST,
             domain: Optional[StringDomain] = None) -> list:
    """All feasible paths of ``p`` as (constraint, cost) pairs, in DFS order."""
    if domain is None:
        domain = program_domain(p)
    if (domain.high_len, domain.low_len) != (p.high_len, p.low_len):
        raise DSLError("domain lengths differ from the program's declared lengths")
    h = SymStr(HIGH, 0, p.high_len)
    l = SymStr(LOW, 0, p.low_len)
    results = []
    # Each run replays a decision prefix, then follows a concrete witness of
    # its path condition to a leaf, queueing every untaken branch.  A queued
    # branch is explored only if a witness for it exists.
    stack = [((), C.TRUE)]
    while stack:
        decisions, pc = stack.pop()
        w = witness(pc, domain)
        if w is None:
            continue
        m = _Machine(p, cost_model, domain, h, l, decisions)
        m.pc, m.witness = pc, w
        result = m.run()
        stack.extend(m.pending)
        results.append((m.decisions, PathResult(
            m.pc, m.cost, None if isinstance(result, C.Formula) else result)))
    # canonical order: depth-first with the true branch first
    results.sort(key=lambda r: tuple(not d for d in r[0]))
    log.debug("%s: %d feasible paths", p.name, len(results))
    return [r for _, r in results]


def merge_observations(paths: Sequence[PathResult], delta: int = 0) -> list:
    """Group paths with indistinguishable costs into observation constraints.

    Paths are sorted by cost and clustered greedily: a path joins the current
    cluster iff its cost is within ``delta`` (strictly less) of the cluster's
    minimum cost; ``delta == 0`` groups equal costs only.
    """
    if delta < 0:
        raise ValueError("delta must be non-negative")
    ordered = sorted(paths, key=lambda r: r.cost)
    clusters = []
    for r in ordered:
        if clusters:
            rep = clusters[-1][0].cost
            if r.cost == rep or r.cost - rep < delta:
                clusters[-1].append(r)
                continue
        clusters.append([r])
    out = []
    for members in clusters:
        costs = tuple(sorted({m.cost for m in members}))
        out.append(ObservationConstraint(
            C.disj(*(m.constraint for m in members)), members[0].cost, len(members), costs))
    return out
