"""Fixed-length DFAs for string formulas: compile, count, sample, conjoin.

Transition tables are dense ``numpy`` arrays (state x letter).  A
single-variable formula is compiled over the plain alphabet; a formula over
both ``h`` and ``l`` can be compiled over pairs of letters (the two-track
encoding used for path feasibility), where the shorter variable is padded.

All automata built here accept only strings of the encoding's fixed
length, so complement is taken relative to that universe.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import constraints as C
from .constraints import HIGH, LOW, StringDomain, Var
from .errors import FormulaError

__all__ = [
    "Dfa", "KnowledgeAutomaton", "compile", "compile_joint", "count_models",
    "count_intersection", "sample_uniform", "conjoin", "is_empty",
    "intersect", "union", "complement", "minimize", "to_dot",
]


class Dfa:
    """Deterministic, complete automaton with a dense transition table."""

    __slots__ = ("alphabet", "delta", "start", "accepting", "_index")

    def __init__(self, alphabet, delta, start, accepting):
        delta = np.array(delta, dtype=np.int64, ndmin=2)
        accepting = np.array(accepting, dtype=bool, ndmin=1)
        n = delta.shape[0]
        if delta.shape[1] != len(alphabet):
            raise ValueError("transition table width must equal alphabet size")
        if accepting.shape != (n,):
            raise ValueError("accepting mask must have one entry per state")
        if n == 0 or not 0 <= start < n:
            raise ValueError("start state out of range")
        if delta.size and (delta.min() < 0 or delta.max() >= n):
            raise ValueError("transition to an undefined state")
        delta.flags.writeable = False
        accepting.flags.writeable = False
        self.alphabet = tuple(alphabet)
        self.delta = delta
        self.start = int(start)
        self.accepting = accepting
        self._index = None

    @property
    def n_states(self) -> int:
        return self.delta.shape[0]

    def letter_index(self, letter) -> int:
        if self._index is None:
            self._index = {a: i for i, a in enumerate(self.alphabet)}
        return self._index[letter]

    def run(self, word) -> int:
        state = self.start
        for ch in word:
            state = self.delta[state, self.letter_index(ch)]
        return int(state)

    def accepts(self, word) -> bool:
        try:
            return bool(self.accepting[self.run(word)])
        except KeyError:
            return False

    def same_as(self, other: "Dfa") -> bool:
        """Structural equality (meaningful for minimized, canonical automata)."""
        return (self.alphabet == other.alphabet and self.start == other.start
                and np.array_equal(self.delta, other.delta)
                and np.array_equal(self.accepting, other.accepting))

    def __repr__(self):
        return (f"Dfa(states={self.n_states}, letters={len(self.alphabet)}, "
                f"accepting={int(self.accepting.sum())})")


# -- construction primitives ------------------------------------------------------

def _canonical(delta, start, accepting):
    """Drop unreachable states and number the rest in BFS order."""
    n = delta.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[start] = True
    order = [np.array([start])]
    frontier = order[0]
    while frontier.size:
        vals = delta[frontier].ravel()
        _, first = np.unique(vals, return_index=True)
        cand = vals[np.sort(first)]
        new = cand[~seen[cand]]
        seen[new] = True
        order.append(new)
        frontier = new
    states = np.concatenate(order)
    perm = np.full(n, -1, dtype=np.int64)
    perm[states] = np.arange(states.size)
    return perm[delta[states]], 0, accepting[states]


def minimize(dfa_or_parts):
    """Moore partition refinement followed by canonical renumbering."""
    if isinstance(dfa_or_parts, Dfa):
        d = dfa_or_parts
        return Dfa(d.alphabet, *_minimize(d.delta, d.start, d.accepting))
    return _minimize(*dfa_or_parts)


def _minimize(delta, start, accepting):
    delta, start, accepting = _canonical(delta, start, accepting)
    cls = accepting.astype(np.int64)
    n_cls = np.unique(cls).size
    while True:
        sig = np.concatenate([cls[:, None], cls[delta]], axis=1)
        _, new = np.unique(sig, axis=0, return_inverse=True)
        new = new.ravel()
        m = int(new.max()) + 1
        cls = new
        if m == n_cls:
            break
        n_cls = m
    _, rep = np.unique(cls, return_index=True)
    qdelta = cls[delta[rep]]
    return _canonical(qdelta, int(cls[start]), accepting[rep])


def _product(a: Dfa, b: Dfa, op):
    """Reachable part of the product automaton; ``op`` combines acceptance."""
    nb = b.n_states
    start = a.start * nb + b.start
    known = np.array([start], dtype=np.int64)
    order = [known]
    rows = []
    frontier = known
    while frontier.size:
        fa, fb = np.divmod(frontier, nb)
        succ = a.delta[fa] * nb + b.delta[fb]
        rows.append(succ)
        cand = np.unique(succ)
        new = cand[~np.isin(cand, known, assume_unique=True)]
        known = np.union1d(known, new)
        order.append(new)
        frontier = new
    states = np.concatenate(order)
    sorter = np.argsort(states)
    flat = np.concatenate(rows)
    delta = sorter[np.searchsorted(states, flat, sorter=sorter)]
    sa, sb = np.divmod(states, nb)
    return delta, 0, op(a.accepting[sa], b.accepting[sb])


def _check_same_alphabet(a, b):
    if a.alphabet != b.alphabet:
        raise ValueError("automata are over different alphabets")


def intersect(a: Dfa, b: Dfa) -> Dfa:
    _check_same_alphabet(a, b)
    return Dfa(a.alphabet, *_minimize(*_product(a, b, np.logical_and)))


def union(a: Dfa, b: Dfa) -> Dfa:
    _check_same_alphabet(a, b)
    return Dfa(a.alphabet, *_minimize(*_product(a, b, np.logical_or)))


def complement(a: Dfa, universe: Optional[Dfa] = None) -> Dfa:
    """Complement, relative to ``universe`` when given (the fixed-length domain)."""
    if universe is None:
        return Dfa(a.alphabet, *_minimize(a.delta, a.start, ~a.accepting))
    _check_same_alphabet(a, universe)
    return Dfa(a.alphabet, *_minimize(*_product(a, universe, lambda x, y: ~x & y)))


# -- counting and sampling ------------------------------------------------------------

def _count_dtype(dfa, length):
    return np.int64 if len(dfa.alphabet) ** length < 2 ** 62 else object


def _completions(dfa: Dfa, length: int):
    """table[r][s] = number of accepted words of length r read from state s."""
    v = dfa.accepting.astype(_count_dtype(dfa, length))
    table = [v]
    for _ in range(length):
        v = v[dfa.delta].sum(axis=1)
        table.append(v)
    return table


def count_models(dfa: Dfa, length: int) -> int:
    """Exact number of accepted strings of exactly ``length`` letters."""
    if length < 0:
        raise ValueError("length must be non-negative")
    return int(_completions(dfa, length)[length][dfa.start])


def count_intersection(a: Dfa, b: Dfa, length: int) -> int:
    """``count_models(intersect(a, b), length)`` without minimizing."""
    _check_same_alphabet(a, b)
    delta, start, acc = _product(a, b, np.logical_and)
    v = acc.astype(_count_dtype(a, length))
    for _ in range(length):
        v = v[delta].sum(axis=1)
    return int(v[start])


def count_section(h_dfa: Dfa, joint: Dfa, low_value: str, domain: StringDomain) -> int:
    """``#{h : h_dfa accepts h and joint accepts the pair (h, low_value)}``.

    Layered counting over the product of the two automata with the low
    track fixed to ``low_value``; nothing is built or minimized.
    """
    nh, nl = domain.high_len, domain.low_len
    if len(low_value) != nl:
        raise ValueError(f"low value must have length {nl}")
    qh, qj = h_dfa.n_states, joint.n_states
    dtype = np.int64 if len(domain.alphabet) ** nh < 2 ** 62 else object
    cur = np.zeros(qh * qj, dtype=dtype)
    cur[h_dfa.start * qj + joint.start] = 1
    h_all = np.arange(qh)[:, None]
    for p in range(max(nh, nl)):
        v = low_value[p] if p < nl else None
        if p < nh:
            cols = [joint.letter_index((c, v)) for c in domain.alphabet]
            # (letter, h-state, joint-state) -> successor pair
            succ = h_dfa.delta.T[:, :, None] * qj + joint.delta[:, cols].T[:, None, :]
            weights = np.broadcast_to(cur.reshape(1, qh, qj), succ.shape)
        else:
            succ = h_all * qj + joint.delta[:, joint.letter_index((None, v))][None, :]
            weights = cur.reshape(qh, qj)
        nxt = np.zeros_like(cur)
        np.add.at(nxt, succ.ravel(), weights.ravel())
        cur = nxt
    cur = cur.reshape(qh, qj)
    return int(cur[np.ix_(h_dfa.accepting, joint.accepting)].sum())


def is_empty(dfa: Dfa, length: int) -> bool:
    v = dfa.accepting
    for _ in range(length):
        v = v[dfa.delta].any(axis=1)
    return not bool(v[dfa.start])


def sample_uniform(dfa: Dfa, length: int, rng) -> str:
    """Uniformly random accepted word of ``length`` letters.

    Each letter is drawn with probability proportional to the number of
    accepted completions from the successor state, so every word is
    equally likely.  ``rng`` is a :class:`random.Random`.
    """
    table = _completions(dfa, length)
    total = int(table[length][dfa.start])
    if total == 0:
        raise ValueError(f"automaton accepts no word of length {length}")
    state = dfa.start
    out = []
    for pos in range(length):
        weights = table[length - pos - 1][dfa.delta[state]]
        x = rng.randrange(int(weights.sum()))
        for letter, w in enumerate(weights):
            w = int(w)
            if x < w:
                break
            x -= w
        out.append(dfa.alphabet[letter])
        state = dfa.delta[state, letter]
    return "".join(out)


def enumerate_words(dfa: Dfa, length: int, limit: Optional[int] = None):
    """Accepted words of ``length`` in alphabet order (testing/debug aid)."""
    table = _completions(dfa, length)

    def walk(state, pos, prefix):
        if pos == length:
            yield "".join(prefix)
            return
        for letter in range(len(dfa.alphabet)):
            nxt = dfa.delta[state, letter]
            if table[length - pos - 1][nxt]:
                prefix.append(dfa.alphabet[letter])
                yield from walk(nxt, pos + 1, prefix)
                prefix.pop()

    return itertools.islice(walk(dfa.start, 0, []), limit)


def first_word(dfa: Dfa, length: int) -> Optional[tuple]:
    """Smallest accepted word of ``length`` as a tuple of letters, or None."""
    table = _completions(dfa, length)
    if not table[length][dfa.start]:
        return None
    state, out = dfa.start, []
    for pos in range(length):
        for letter in range(len(dfa.alphabet)):
            nxt = dfa.delta[state, letter]
            if table[length - pos - 1][nxt]:
                out.append(dfa.alphabet[letter])
                state = nxt
                break
    return tuple(out)


# -- encodings ------------------------------------------------------------------------

class Encoding:
    """Maps strings of one variable, or of both side by side, to DFA letters.

    ``cols[var][letter]`` is the alphabet rank of ``var``'s character inside
    a letter, or -1 for padding beyond that variable's length.
    """

    def __init__(self, domain: StringDomain, var: Optional[Var] = None):
        self.domain = domain
        k = len(domain.alphabet)
        if var is not None:
            self.vars = (var,)
            self.n = domain.length(var)
            self.letters = tuple(domain.alphabet)
            self.cols = {var: np.arange(k)}
        else:
            self.vars = (HIGH, LOW)
            self.n = max(domain.high_len, domain.low_len)
            codes = list(range(k)) + ([-1] if domain.high_len != domain.low_len else [])
            pairs = list(itertools.product(codes, codes))

            def ch(c):
                return domain.alphabet[c] if c >= 0 else None

            self.letters = tuple((ch(a), ch(b)) for a, b in pairs)
            self.cols = {HIGH: np.array([a for a, _ in pairs]),
                         LOW: np.array([b for _, b in pairs])}
        self.shape = {}
        for v in self.vars:
            col = self.cols[v]
            for p in range(self.n):
                ok = col >= 0 if p < domain.length(v) else col < 0
                self.shape[p] = self.shape.get(p, True) & ok
        self.universe = self.linear({})

    @property
    def width(self) -> int:
        return len(self.letters)

    def col(self, var: Var) -> np.ndarray:
        try:
            return self.cols[var]
        except KeyError:
            raise FormulaError(
                f"formula mentions {var.value} but is compiled over {self.vars[0].value}") from None

    def linear(self, masks: dict) -> Dfa:
        n, w = self.n, self.width
        sink = n + 1
        delta = np.full((n + 2, w), sink, dtype=np.int64)
        for p in range(n):
            m = self.shape.get(p, True)
            if p in masks:
                m = m & masks[p]
            delta[p, np.nonzero(np.broadcast_to(m, (w,)))[0]] = p + 1
        acc = np.zeros(n + 2, dtype=bool)
        acc[n] = True
        return Dfa(self.letters, *_minimize(delta, 0, acc))

    def empty(self) -> Dfa:
        return Dfa(self.letters, np.zeros((1, self.width), dtype=np.int64), 0, [False])


@functools.lru_cache(maxsize=64)
def _encoding(domain: StringDomain, var: Optional[Var]) -> Encoding:
    return Encoding(domain, var)


_REL = {
    C.CharEqVar: np.equal, C.CharNeqVar: np.not_equal,
    C.CharLtVar: np.less, C.CharGeVar: np.greater_equal,
}
_SWAPPED = {np.equal: np.equal, np.not_equal: np.not_equal,
            np.less: np.greater, np.greater_equal: np.less_equal}


def _positional(f, enc: Encoding):
    """Per-position letter masks if ``f`` only constrains positions independently.

    Returns a dict (missing position = unconstrained), or None when ``f`` is
    not of that shape or is unsatisfiable in a way masks cannot express.
    """
    d = enc.domain
    if isinstance(f, C.Const):
        return {} if f.value else None
    if isinstance(f, (C.CharEqConst, C.CharNeqConst)):
        m = enc.col(f.var) == d.rank(f.char)
        return {f.index: m if isinstance(f, C.CharEqConst) else ~m}
    if isinstance(f, (C.StrEqConst, C.BeginsConst)):
        n = d.length(f.var)
        if len(f.literal) > n or (isinstance(f, C.StrEqConst) and len(f.literal) != n):
            return None
        col = enc.col(f.var)
        return {i: col == d.rank(c) for i, c in enumerate(f.literal)}
    if isinstance(f, tuple(_REL)):
        if f.index1 != f.index2:
            return None
        if f.var1 is f.var2:
            return {} if _REL[type(f)](0, 0) else None
        return {f.index1: _REL[type(f)](enc.col(f.var1), enc.col(f.var2))}
    if isinstance(f, C.And):
        out = {}
        for c in f.children:
            m = _positional(c, enc)
            if m is None:
                return None
            for p, mask in m.items():
                out[p] = out[p] & mask if p in out else mask
        return out
    if isinstance(f, C.Or):
        pos, acc = None, None
        for c in f.children:
            m = _positional(c, enc)
            if m is None or len(m) > 1:
                return None
            if not m:
                return {}
            (p, mask), = m.items()
            if pos is not None and p != pos:
                return None
            pos, acc = p, mask if acc is None else acc | mask
        return {pos: acc}
    if isinstance(f, C.Not):
        m = _positional(f.child, enc)
        if m is None or len(m) != 1:
            return None
        (p, mask), = m.items()
        return {p: ~mask}
    return None


def _pair_relation_dfa(enc: Encoding, p, colp, q, colq, rel) -> Dfa:
    """Words where ``rel(letter_p, letter_q)`` holds for positions p < q."""
    if p > q:
        p, colp, q, colq, rel = q, colq, p, colp, _SWAPPED[rel]
    n, w = enc.n, enc.width
    values = np.unique(colp)
    mem_of = np.searchsorted(values, colp)
    ids = itertools.count()
    pre = [next(ids) for _ in range(p + 1)]
    mem = {(dd, m): next(ids) for dd in range(p + 1, q + 1) for m in range(values.size)}
    post = {dd: next(ids) for dd in range(q + 1, n + 1)}
    sink = next(ids)
    delta = np.full((sink + 1, w), sink, dtype=np.int64)
    for dd in range(p):
        delta[pre[dd]] = pre[dd + 1]
    delta[pre[p]] = [mem[(p + 1, m)] for m in mem_of]
    for (dd, m), s in mem.items():
        if dd < q:
            delta[s] = mem[(dd + 1, m)]
        else:
            delta[s] = np.where(rel(values[m], colq), post[q + 1], sink)
    for dd, s in post.items():
        if dd < n:
            delta[s] = post[dd + 1]
    acc = np.zeros(sink + 1, dtype=bool)
    acc[post[n]] = True
    raw = Dfa(enc.letters, delta, pre[0], acc)
    return intersect(raw, enc.universe)


def _lex_lt_dfa(enc: Encoding, v1: Var, v2: Var) -> Dfa:
    n, w = enc.n, enc.width
    c1, c2 = enc.col(v1), enc.col(v2)
    # states: equal-so-far 0..n, less-decided n+1..2n+1, sink 2n+2
    eq = list(range(n + 1))
    lt = [n + 1 + dd for dd in range(n + 1)]
    sink = 2 * n + 2
    delta = np.full((sink + 1, w), sink, dtype=np.int64)
    for dd in range(n):
        delta[eq[dd]] = np.where(c1 < c2, lt[dd + 1], np.where(c1 == c2, eq[dd + 1], sink))
        delta[lt[dd]] = lt[dd + 1]
    acc = np.zeros(sink + 1, dtype=bool)
    acc[lt[n]] = True
    return intersect(Dfa(enc.letters, delta, 0, acc), enc.universe)


def _compile(f, enc: Encoding) -> Dfa:
    masks = _positional(f, enc)
    if masks is not None:
        return enc.linear(masks)
    if isinstance(f, C.Const):
        return enc.empty()
    if isinstance(f, C.Not):
        return complement(_compile(f.child, enc), enc.universe)
    if isinstance(f, C.And):
        # positional children first: they shrink the product early
        kids = sorted(f.children, key=lambda c: _positional(c, enc) is None)
        out = _compile(kids[0], enc)
        for c in kids[1:]:
            if is_empty(out, enc.n):
                break
            out = intersect(out, _compile(c, enc))
        return out
    if isinstance(f, C.Or):
        # single-position disjuncts merge into one mask per position
        by_pos, rest = {}, []
        for c in f.children:
            m = _positional(c, enc)
            if m is not None and len(m) == 1:
                (p, mask), = m.items()
                by_pos[p] = by_pos[p] | mask if p in by_pos else mask
            else:
                rest.append(c)
        parts = [enc.linear({p: m}) for p, m in by_pos.items()]
        parts += [_compile(c, enc) for c in rest]
        out = parts[0]
        for d in parts[1:]:
            out = union(out, d)
        return out
    if isinstance(f, (C.StrEqConst, C.BeginsConst)):
        return enc.empty()  # literal cannot fit the declared length
    if isinstance(f, (C.StrNeqConst, C.NotBeginsConst)):
        return complement(_compile(f.negated(), enc), enc.universe)
    if isinstance(f, tuple(_REL)):
        if f.var1 is f.var2 and f.index1 == f.index2:
            return enc.universe if _REL[type(f)](0, 0) else enc.empty()
        return _pair_relation_dfa(enc, f.index1, enc.col(f.var1),
                                  f.index2, enc.col(f.var2), _REL[type(f)])
    if isinstance(f, C.LexLt):
        return _lex_lt_dfa(enc, f.var1, f.var2)
    if isinstance(f, C.LexGe):
        return complement(_lex_lt_dfa(enc, f.var1, f.var2), enc.universe)
    raise FormulaError(f"cannot compile {f!r}")


@functools.lru_cache(maxsize=8192)
def compile(f: C.Formula, domain: StringDomain, var: Optional[Var] = None) -> Dfa:
    """Minimal DFA over ``domain.alphabet`` for a formula in one variable.

    The automaton accepts exactly the strings of the variable's declared
    length that satisfy ``f``.  ``var`` picks the variable for closed
    formulas (default ``h``).
    """
    fv = C.free_vars(f)
    if len(fv) > 1:
        raise FormulaError("compile expects a formula over a single variable; "
                           f"{to_text(f)} mentions both h and l")
    if var is None:
        var = next(iter(fv)) if fv else HIGH
    elif fv and var not in fv:
        raise FormulaError(f"formula is over {next(iter(fv)).value}, not {var.value}")
    C.check_formula(f, domain)
    return _compile(f, _encoding(domain, var))


@functools.lru_cache(maxsize=4096)
def compile_joint(f: C.Formula, domain: StringDomain) -> Dfa:
    """DFA over pairs (h[i], l[i]); the shorter string is padded with ``None``."""
    C.check_formula(f, domain)
    return _compile(f, _encoding(domain, None))


def joint_length(domain: StringDomain) -> int:
    return max(domain.high_len, domain.low_len)


def to_text(f) -> str:
    return C.to_sexpr(f)


# -- knowledge automaton ----------------------------------------------------------------

@dataclass(frozen=True)
class KnowledgeAutomaton:
    """Compiled C_h together with its exact model count."""

    dfa: Dfa
    count: int
    length: int

    @classmethod
    def from_formula(cls, f: C.Formula, domain: StringDomain) -> "KnowledgeAutomaton":
        if C.LOW in C.free_vars(f):
            raise FormulaError("knowledge constraints must only mention h")
        dfa = compile(f, domain, HIGH)
        n = domain.high_len
        return cls(dfa, count_models(dfa, n), n)


def conjoin(ka: KnowledgeAutomaton, f: C.Formula, domain: StringDomain) -> KnowledgeAutomaton:
    """Knowledge after additionally assuming ``f`` (a formula over ``h``)."""
    if C.LOW in C.free_vars(f):
        raise FormulaError("can only conjoin formulas over h")
    if f == C.TRUE:
        return ka
    dfa = intersect(ka.dfa, compile(f, domain, HIGH))
    return KnowledgeAutomaton(dfa, count_models(dfa, ka.length), ka.length)


# -- debugging output ---------------------------------------------------------------------

def to_dot(dfa: Dfa, name: str = "dfa") -> str:
    """Graphviz rendering; parallel edges are merged into one label."""
    lines = [f"digraph {name} {{", "  rankdir=LR;", '  __start [shape=point];']
    for s in range(dfa.n_states):
        shape = "doublecircle" if dfa.accepting[s] else "circle"
        lines.append(f"  {s} [shape={shape}];")
    lines.append(f"  __start -> {dfa.start};")
    for s in range(dfa.n_states):
        targets = {}
        for letter, t in zip(dfa.alphabet, dfa.delta[s]):
            label = letter if isinstance(letter, str) else "".join(c or "_" for c in letter)
            targets.setdefault(int(t), []).append(label)
        for t, labels in targets.items():
            text = ",".join(labels) if len(labels) <= 12 else f"{len(labels)} letters"
            lines.append(f'  {s} -> {t} [label="{text}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
