#!/usr/bin/env python3
"""Writes the bundled benchmark corpus under crates/core/corpus.

Every file starts with `% expect: sat|unsat`. Verdicts hold by
construction; `cardset bench crates/core/corpus` replays them.
"""

import os
import shutil
import sys

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "crates", "core", "corpus")

CACHE = ("cache(Cont,N,Cache) :- 0 < N & size(Cont,S) & (S =< N & Cache = Cont or "
         "S > N & un(Rest,Cache,Cont) & disj(Rest,Cache) & size(Cache,N)).")
INSERT = "sl_insert(Content,Size,E,Content_,Size_) :- un(Content,E,Content_) & Size_ is Size + 1."


class Corpus:
    def __init__(self):
        self.files = {}

    def add(self, coll, name, expect, body, note=None):
        assert expect in ("sat", "unsat")
        key = (coll, name)
        assert key not in self.files, key
        lines = [f"% expect: {expect}"]
        if note:
            lines.append(f"% {note}")
        lines.append(body.strip())
        self.files[key] = "\n".join(lines) + "\n"

    def write(self):
        if os.path.isdir(ROOT):
            shutil.rmtree(ROOT)
        for (coll, name), text in sorted(self.files.items()):
            d = os.path.join(ROOT, coll)
            os.makedirs(d, exist_ok=True)
            with open(os.path.join(d, name + ".slog"), "w") as fh:
                fh.write(text)
        return len(self.files)


def chain(prefix, n, out):
    """un(A1,A2,U2) & un(U2,A3,U3) ... ending in `out`."""
    parts, prev = [], f"{prefix}1"
    for i in range(2, n + 1):
        u = out if i == n else f"U{i}"
        parts.append(f"un({prev},{prefix}{i},{u})")
        prev = u
    return parts


def tests(c):
    t = "tests"
    c.add(t, "ex_un_sizes_unsat", "unsat",
          "un(A,B,C) & size(A,M1) & size(B,M2) & size(B,M3) & M3 > M1 + M2.")
    c.add(t, "ex_un_sizes_sat", "sat",
          "un(A,B,C) & size(A,M1) & size(B,M2) & size(B,M3) & M3 =< M1 + M2.")
    c.add(t, "int_gap", "unsat", "X > Y & X < Y + 1.")
    c.add(t, "un_un_neq", "unsat", "un(A,B,C) & un(A,B,D) & C neq D.")
    c.add(t, "nested_size", "sat", "size({{X},{Y}},N).")
    c.add(t, "formula_1", "sat", "a in A & a nin B & un(A,B,C) & C = {X / D}.")
    c.add(t, "formula_2", "sat", "un(A,B,C) & N + K > 5 & size(C,N) & B neq {}.")
    c.add(t, "formula_3", "sat", "X in A & B in A & size(A,X) & size(B,Y) & X < Y.")
    c.add(t, "subset_min", "sat", "size(A,M) & 1 =< M & subset(B,A) & size(B,N) & 5 =< N.")
    c.add(t, "subset_eq_sizes", "unsat", "subset(A,B) & size(A,N) & size(B,N) & A neq B.")
    c.add(t, "empty_member", "unsat", "1 in {}.")
    c.add(t, "tautology", "sat", "X = X.")
    c.add(t, "insert_vc", "unsat", INSERT + "\n" +
          "size(E,1) & inters(E,Content,M1) & size(M1,0) & size(Content,Size) & "
          "sl_insert(Content,Size,E,Content_,Size_) & (Size_ =< 0 or size(Content_,M2) & M2 neq Size_).")
    c.add(t, "insert_ground", "sat", INSERT + "\nsl_insert({},0,{hellow},C1,S1).")
    c.add(t, "cache_query", "sat", CACHE + "\ncache({1,b,[2,q]},2,Cache).")
    c.add(t, "cache_prop", "unsat", CACHE + "\ncache(Cont,N,Cache) & size(Cont,M) & N < M & Cache = {}.")
    # Ground sizes.
    for n in range(0, 6):
        elems = ",".join(str(i) for i in range(n))
        s = "{" + elems + "}"
        c.add(t, f"ground_size_{n}", "sat", f"size({s},{n}).")
        c.add(t, f"ground_size_off_{n}", "unsat", f"size({s},{n + 1}).")
    # Membership and unification.
    for n in range(1, 5):
        elems = ",".join(f"X{i}" for i in range(n))
        c.add(t, f"set_unify_{n}", "sat", f"{{{elems}}} = {{{','.join(f'Y{i}' for i in range(n))}}}.")
        c.add(t, f"distinct_size_{n}", "sat",
              f"size({{{elems}}},{n}) & " + " & ".join(
                  f"X{i} neq X{j}" for i in range(n) for j in range(i + 1, n)) + "." if n > 1 else
              f"size({{{elems}}},{n}).")
        c.add(t, f"size_overflow_{n}", "unsat", f"size({{{elems}}},{n + 1}).")
    c.add(t, "disj_self", "sat", "disj(A,A).")
    c.add(t, "disj_member", "unsat", "disj(A,B) & x in A & x in B.")
    c.add(t, "inters_ground", "sat", "inters({1},{1,2},X) & X = {1}.")
    c.add(t, "inters_ground_wrong", "unsat", "inters({1},{1,2},X) & X = {2}.")
    c.add(t, "diff_ground", "sat", "diff({1,2,3},{2},X) & size(X,2).")
    c.add(t, "diff_ground_wrong", "unsat", "diff({1,2,3},{2},X) & 2 in X.")
    c.add(t, "nun_sat", "sat", "nun(A,B,{1}) & size(A,1).")
    c.add(t, "nun_unsat", "unsat", "nun({1},{2},{1,2}).")
    c.add(t, "ndisj_sat", "sat", "ndisj(A,B) & size(A,1).")
    c.add(t, "ndisj_unsat", "unsat", "ndisj(A,{}).")
    c.add(t, "neg_size", "unsat", "size(A,N) & N < 0.")
    c.add(t, "size_neq_empty", "sat", "size(A,N) & A neq {} & N =< 1.")
    c.add(t, "size_zero_member", "unsat", "size(A,0) & x in A.")
    c.add(t, "or_branch", "sat", "(X = 1 or X = 2) & X > 1.")
    c.add(t, "or_branch_unsat", "unsat", "(X = 1 or X = 2) & X > 2.")


def properties(c):
    p = "properties"
    laws_unsat = {
        "un_comm": "un(A,B,C) & un(B,A,D) & C neq D.",
        "un_idem": "un(A,A,C) & C neq A.",
        "un_empty": "un(A,{},C) & C neq A.",
        "un_size_lower": "un(A,B,C) & size(A,N) & size(C,M) & M < N.",
        "un_size_upper": "un(A,B,C) & size(A,N1) & size(B,N2) & size(C,M) & M > N1 + N2.",
        "disj_un_size": "un(A,B,C) & disj(A,B) & size(A,N1) & size(B,N2) & size(C,M) & M neq N1 + N2.",
        "subset_size": "subset(A,B) & size(A,N) & size(B,M) & N > M.",
        "subset_antisym": "subset(A,B) & subset(B,A) & A neq B.",
        "subset_trans": "subset(A,B) & subset(B,C) & x in A & x nin C.",
        "inters_size": "inters(A,B,C) & size(A,N) & size(C,M) & M > N.",
        "inters_subset": "inters(A,B,C) & x in C & x nin A.",
        "diff_disj": "diff(A,B,C) & x in C & x in B.",
        "empty_size": "size(A,0) & A neq {}.",
        "singleton_size": "A = {X} & size(A,N) & N neq 1.",
        "cons_size": "x nin A & size(A,N) & size({x / A},M) & M neq N + 1.",
        "cons_absorb": "x in A & size(A,N) & size({x / A},M) & M neq N.",
        "disj_sym": "disj(A,B) & ndisj(B,A).",
        "size_functional": "size(A,N) & size(A,M) & N neq M.",
        "un_member": "un(A,B,C) & x in C & x nin A & x nin B.",
        "sizes_pigeon": "subset(A,B) & size(B,2) & size(A,3).",
    }
    for name, f in laws_unsat.items():
        c.add(p, name, "unsat", f)
    laws_sat = {
        "un_strict": "un(A,B,C) & size(A,N) & size(C,M) & M > N.",
        "un_overlap": "un(A,B,C) & size(A,N1) & size(B,N2) & size(C,M) & M < N1 + N2.",
        "subset_proper": "subset(A,B) & size(A,N) & size(B,M) & N < M.",
        "inters_empty": "inters(A,B,C) & size(C,0) & size(A,2) & size(B,2).",
        "diff_size": "diff(A,B,C) & size(A,3) & size(C,1).",
        "disj_sizes": "disj(A,B) & size(A,2) & size(B,3).",
        "size_between": "size(A,N) & 2 =< N & N =< 3 & a in A.",
        "nested_member": "{X} in A & size(A,2) & X neq {}.",
        "cons_fresh": "x nin A & size(A,N) & size({x / A},M) & M = N + 1.",
        "un_three": "un(A,B,C) & un(C,D,E) & size(E,4) & size(A,1) & size(D,1).",
    }
    for name, f in laws_sat.items():
        c.add(p, name, "sat", f)
    # Parametric cardinality laws.
    for k in range(1, 8):
        c.add(p, f"un_bound_{k}", "unsat",
              f"un(A,B,C) & size(A,{k}) & size(B,{k}) & size(C,M) & M > {2 * k}.")
        c.add(p, f"un_bound_tight_{k}", "sat",
              f"un(A,B,C) & size(A,{k}) & size(B,{k}) & size(C,M) & M = {2 * k}.")
        c.add(p, f"subset_bound_{k}", "unsat",
              f"subset(A,B) & size(B,{k}) & size(A,N) & N > {k}.")
        c.add(p, f"disj_exact_{k}", "unsat",
              f"disj(A,B) & un(A,B,C) & size(A,{k}) & size(B,1) & size(C,{k}).")


def cvc4(c):
    v = "cvc4"
    # Membership in long unions: satisfiable, needs no cardinality reasoning.
    for n in range(2, 22, 2):
        parts = chain("A", n, "U") + ["x in U"]
        c.add(v, f"member_union_{n}", "sat", " & ".join(parts) + ".")
    # Membership in a union of empty sets.
    for n in range(2, 12, 2):
        parts = chain("A", n, "U") + ["x in U"] + [f"A{i} = {{}}" for i in range(1, n + 1)]
        c.add(v, f"member_empty_union_{n}", "unsat", " & ".join(parts) + ".")
    # Union chains with a size gap.
    for n in range(2, 10):
        parts = chain("A", n, "U") + [f"size(A{i},1)" for i in range(1, n + 1)] + [f"size(U,M) & M > {n}"]
        c.add(v, f"union_card_over_{n}", "unsat", " & ".join(parts) + ".")
        parts = chain("A", n, "U") + [f"size(A{i},1)" for i in range(1, n + 1)] + [f"size(U,M) & M = {n}"]
        c.add(v, f"union_card_exact_{n}", "sat", " & ".join(parts) + ".")
    # Intersections and set difference.
    for k in range(1, 6):
        c.add(v, f"inters_card_{k}", "unsat",
              f"inters(A,B,C) & size(A,{k}) & size(C,M) & M > {k}.")
        c.add(v, f"diff_card_{k}", "sat",
              f"diff(A,B,C) & size(A,{k + 1}) & size(B,1) & size(C,{k}).")
        c.add(v, f"diff_card_bad_{k}", "unsat",
              f"diff(A,B,C) & size(A,{k}) & size(C,M) & M > {k}.")


def kuncak(c):
    k = "kuncak"
    # Linear arithmetic over cardinalities.
    for a in range(1, 6):
        for b in range(1, 4):
            c.add(k, f"sum_{a}_{b}", "sat",
                  f"disj(A,B) & un(A,B,C) & size(A,{a}) & size(B,{b}) & size(C,N) & N = {a + b}.")
            c.add(k, f"sum_bad_{a}_{b}", "unsat",
                  f"disj(A,B) & un(A,B,C) & size(A,{a}) & size(B,{b}) & size(C,N) & N neq {a + b}.")
    for m in range(1, 6):
        c.add(k, f"half_{m}", "sat",
              f"un(A,B,C) & disj(A,B) & size(A,N) & size(B,N) & size(C,{2 * m}).")
        c.add(k, f"odd_{m}", "unsat",
              f"un(A,B,C) & disj(A,B) & size(A,N) & size(B,N) & size(C,{2 * m - 1}).")
        c.add(k, f"scaled_{m}", "sat",
              f"size(A,N) & size(B,M) & subset(A,B) & 2*N = M & M = {2 * m}.")


def arithmetic(c):
    k = "kuncak"
    for n in range(1, 13):
        ok = any(2 * x + 3 * y == n for x in range(n + 1) for y in range(n + 1))
        c.add(k, f"coin_{n}", "sat" if ok else "unsat",
              f"size(A,X) & size(B,Y) & 2*X + 3*Y = {n}.")
    for n in range(2, 7):
        sub = " & ".join(f"subset(A{i},A{i + 1})" for i in range(1, n))
        c.add(k, f"subset_chain_{n}", "unsat", f"{sub} & size(A{n},2) & size(A1,M) & M > 2.")
        c.add(k, f"subset_chain_ok_{n}", "sat", f"{sub} & size(A{n},2) & size(A1,M) & M = 2.")
    for n in range(1, 6):
        c.add(k, f"bapa_disjoint_{n}", "unsat",
              f"size(A,{n}) & size(B,{n}) & inters(A,B,C) & size(C,0) & un(A,B,D) & size(D,M) & M neq {2 * n}.")


def reachability(c):
    r = "reachability"
    # Bounded cache invariants.
    for n in range(1, 4):
        c.add(r, f"cache_bound_{n}", "unsat",
              CACHE + f"\ncache(Cont,{n},Cache) & size(Cache,M) & M > {n}.")
        c.add(r, f"cache_fill_{n}", "sat",
              CACHE + f"\ncache(Cont,{n},Cache) & size(Cont,{n + 1}) & size(Cache,{n}).")
    # Repeated insertion keeps the size counter in step.
    for n in range(1, 6):
        steps, prev, prev_s = [], "C0", "S0"
        for i in range(1, n + 1):
            steps.append(f"x{i} nin {prev} & sl_insert({prev},{prev_s},{{x{i}}},C{i},S{i})")
            prev, prev_s = f"C{i}", f"S{i}"
        body = (INSERT + "\nsize(C0,S0) & " + " & ".join(steps) +
                f" & size({prev},M) & M neq {prev_s}.")
        c.add(r, f"insert_steps_{n}", "unsat", body)
        body = (INSERT + "\nC0 = {} & S0 = 0 & " + " & ".join(steps) +
                f" & size({prev},{n}).")
        c.add(r, f"insert_run_{n}", "sat", body)
    # Token ring: moving an element between two disjoint pools preserves
    # the total.
    for n in range(1, 5):
        c.add(r, f"move_{n}", "unsat",
              f"disj(P,Q) & size(P,{n}) & size(Q,1) & x in P & diff(P,{{x}},P1) & un(Q,{{x}},Q1) & "
              f"disj(P1,Q1) & un(P1,Q1,T) & size(T,M) & M neq {n + 1}.")
        c.add(r, f"move_ok_{n}", "sat",
              f"disj(P,Q) & size(P,{n}) & size(Q,1) & x in P & diff(P,{{x}},P1) & un(Q,{{x}},Q1) & "
              f"un(P1,Q1,T) & size(T,{n + 1}).")


def main():
    c = Corpus()
    tests(c)
    properties(c)
    cvc4(c)
    kuncak(c)
    arithmetic(c)
    reachability(c)
    n = c.write()
    print(f"wrote {n} files under {os.path.normpath(ROOT)}", file=sys.stderr)


if __name__ == "__main__":
    main()
