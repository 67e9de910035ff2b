"""Satisfiability of formulas over both ``h`` and ``l``.

Used by the symbolic executor to prune infeasible branches.  Two exact
procedures are combined:

* the two-track automaton (letters are pairs ``(h[i], l[i])``), which is
  cheap whenever every character relation compares the same position of
  both strings -- lexicographic atoms included;
* a backtracking search over character positions for formulas relating
  different positions by equality only.  Values are tried up to renaming:
  constants of the formula, values already used, and one fresh character,
  which is complete for equality constraints.

Formulas mixing cross-position relations with order atoms go to the
two-track automaton, which then has to remember characters and may grow.
"""
from __future__ import annotations

import functools
from typing import Optional

from . import automata as A
from . import constraints as C
from .constraints import HIGH, LOW, StringDomain

__all__ = ["satisfiable", "find_model", "witness", "has_cross_positions"]


def has_cross_positions(f) -> bool:
    for a in C.atoms(f):
        if isinstance(a, C.CHAR_VAR_ATOMS) and (a.index1 != a.index2 or a.var1 is a.var2):
            return True
    return False


def _has_order(f) -> bool:
    return any(isinstance(a, C.ORDER_ATOMS) for a in C.atoms(f))


@functools.lru_cache(maxsize=65536)
def satisfiable(f: C.Formula, domain: StringDomain) -> bool:
    f = C.simplify(f)
    if isinstance(f, C.Const):
        return f.value
    fv = C.free_vars(f)
    if len(fv) == 1:
        (var,) = fv
        return not A.is_empty(A.compile(f, domain, var), domain.length(var))
    if has_cross_positions(f) and not _has_order(f):
        return find_model(f, domain) is not None
    return not A.is_empty(A.compile_joint(f, domain), A.joint_length(domain))


def witness(f: C.Formula, domain: StringDomain) -> Optional[tuple]:
    """Some ``(h, l)`` satisfying ``f``, or None when it is unsatisfiable."""
    f = C.simplify(f)
    fill_h = domain.alphabet[0] * domain.high_len
    fill_l = domain.alphabet[0] * domain.low_len
    if isinstance(f, C.Const):
        return (fill_h, fill_l) if f.value else None
    fv = C.free_vars(f)
    if len(fv) == 1:
        (var,) = fv
        word = A.first_word(A.compile(f, domain, var), domain.length(var))
        if word is None:
            return None
        return ("".join(word), fill_l) if var is HIGH else (fill_h, "".join(word))
    if has_cross_positions(f) and not _has_order(f):
        return find_model(f, domain)
    word = A.first_word(A.compile_joint(f, domain), A.joint_length(domain))
    if word is None:
        return None
    return ("".join(a for a, _ in word if a is not None),
            "".join(b for _, b in word if b is not None))


# -- equality-only backtracking ---------------------------------------------------

def _eval3(f, asg, lens):
    """Three-valued evaluation under a partial assignment {(var, idx): char}."""
    if isinstance(f, C.Const):
        return f.value
    if isinstance(f, C.Not):
        v = _eval3(f.child, asg, lens)
        return None if v is None else not v
    if isinstance(f, C.And):
        unknown = False
        for c in f.children:
            v = _eval3(c, asg, lens)
            if v is False:
                return False
            unknown |= v is None
        return None if unknown else True
    if isinstance(f, C.Or):
        unknown = False
        for c in f.children:
            v = _eval3(c, asg, lens)
            if v is True:
                return True
            unknown |= v is None
        return None if unknown else False
    if isinstance(f, (C.CharEqConst, C.CharNeqConst)):
        x = asg.get((f.var, f.index))
        if x is None:
            return None
        return (x == f.char) == isinstance(f, C.CharEqConst)
    if isinstance(f, (C.CharEqVar, C.CharNeqVar)):
        x = asg.get((f.var1, f.index1))
        y = asg.get((f.var2, f.index2))
        if x is None or y is None:
            return None
        return (x == y) == isinstance(f, C.CharEqVar)
    if isinstance(f, (C.StrEqConst, C.StrNeqConst, C.BeginsConst, C.NotBeginsConst)):
        positive = isinstance(f, (C.StrEqConst, C.BeginsConst))
        base = f if positive else f.negated()
        lit = f.literal
        if isinstance(base, C.StrEqConst) and len(lit) != lens[f.var]:
            return not positive
        if len(lit) > lens[f.var]:
            return not positive
        unknown = False
        for i, c in enumerate(lit):
            x = asg.get((f.var, i))
            if x is None:
                unknown = True
            elif x != c:
                return not positive
        return None if unknown else positive
    raise TypeError(f"unsupported atom for equality search: {f!r}")


def find_model(f: C.Formula, domain: StringDomain) -> Optional[tuple]:
    """A satisfying ``(h, l)`` for an order-free formula, or None."""
    if _has_order(f):
        raise ValueError("backtracking search handles equality constraints only")
    lens = {HIGH: domain.high_len, LOW: domain.low_len}
    consts = []
    for a in C.atoms(f):
        chars = a.char if isinstance(a, (C.CharEqConst, C.CharNeqConst)) else \
            getattr(a, "literal", "")
        for c in chars:
            if c not in consts:
                consts.append(c)
    mentioned = set()
    for a in C.atoms(f):
        if isinstance(a, (C.CharEqConst, C.CharNeqConst)):
            mentioned.add((a.var, a.index))
        elif isinstance(a, C.CHAR_VAR_ATOMS):
            mentioned.add((a.var1, a.index1))
            mentioned.add((a.var2, a.index2))
        else:
            mentioned.update((a.var, i) for i in range(min(len(a.literal), domain.length(a.var))))
    order = sorted(mentioned, key=lambda p: (p[1], p[0].value))
    asg = {}
    # For a plain conjunction only the literals completed by the newest
    # assignment need checking; otherwise re-evaluate the whole formula.
    lits = f.children if isinstance(f, C.And) else (f,)
    if order and all(isinstance(a, C.Atom) for a in lits):
        rank = {pos: i for i, pos in enumerate(order)}
        due = [[] for _ in order]
        for a in lits:
            if isinstance(a, (C.CharEqConst, C.CharNeqConst)):
                last = rank[(a.var, a.index)]
            elif isinstance(a, C.CHAR_VAR_ATOMS):
                last = max(rank[(a.var1, a.index1)], rank[(a.var2, a.index2)])
            else:
                last = max((rank[(a.var, i)] for i in range(min(len(a.literal), lens[a.var]))),
                           default=0)
            due[last].append(a)

        def check(i):
            return all(_eval3(a, asg, lens) is not False for a in due[i])
    else:
        def check(i):
            return _eval3(f, asg, lens) is not False

    def candidates():
        used = list(dict.fromkeys(list(consts) + list(asg.values())))
        for c in domain.alphabet:
            if c not in used:
                used.append(c)
                break
        return [c for c in used if c in domain]

    def search(i):
        if i == len(order):
            return _eval3(f, asg, lens) is True
        pos = order[i]
        for c in candidates():
            asg[pos] = c
            if check(i) and search(i + 1):
                return True
            del asg[pos]
        return False

    if not order:
        if _eval3(f, asg, lens) is not True:
            return None
    elif not search(0):
        return None
    fill = domain.alphabet[0]
    h = "".join(asg.get((HIGH, i), fill) for i in range(domain.high_len))
    l = "".join(asg.get((LOW, i), fill) for i in range(domain.low_len))
    return h, l
