"""Bisimulations for ternary and FO models.

A relation Z between two ternary models is a bisimulation when every
pair (s1, s2) in Z satisfies

  Inv       equal valuations
  Zig/Zag   matching binary successors, both directions
  KvbZig    every related pair at s1 is matched by a related pair at s2
            with Z-linked components, and KvbZag symmetrically

greatest_bisim computes the largest such Z by deleting failing pairs
from the valuation-respecting start relation.  The deletion trace is
enough to rebuild, for every non-bisimilar pair, a formula true on the
left and false on the right; distinguishing_formula replays it and
checks the result by evaluation before returning it.

check_fo_bisimulation covers the FO variant, where matching is required
for successor pairs with distinct values instead of related pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .models import FOKripkeModel, TernaryModel
from .semantics import eval_ternary
from .syntax import (And, Formula, Neg, Prop, Top, big_and, dia, dia_b)


@dataclass(frozen=True)
class ClauseFailure:
    clause: str               # Inv, Zig, Zag, KvbZig, KvbZag
    pair: tuple[str, str]
    detail: tuple

    def describe(self) -> str:
        s1, s2 = self.pair
        return f"{self.clause} fails at ({s1}, {s2}) on {self.detail}"


def _succs(model: TernaryModel) -> dict:
    out = {agent: {} for agent in model.vocab.agents}
    for agent, pairs in model.rel.items():
        for (s, t) in pairs:
            out[agent].setdefault(s, []).append(t)
    order = {s: i for i, s in enumerate(model.states)}
    for agent in out:
        for s in out[agent]:
            out[agent][s].sort(key=order.__getitem__)
    return out


def _tern_at(model: TernaryModel) -> dict:
    out = {}
    order = {s: i for i, s in enumerate(model.states)}
    for (agent, constant), triples in model.tern.items():
        slot = out.setdefault((agent, constant), {})
        for (s, t, u) in triples:
            slot.setdefault(s, []).append((t, u))
    for key in out:
        for s in out[key]:
            out[key][s].sort(key=lambda p: (order[p[0]], order[p[1]]))
    return out


def check_bisimulation(m1: TernaryModel, m2: TernaryModel,
                       z: set[tuple[str, str]]) -> list[ClauseFailure]:
    """Every way the candidate relation fails to be a bisimulation."""
    if m1.vocab != m2.vocab:
        raise ValueError("models use different vocabularies")
    if not z:
        return [ClauseFailure("Inv", ("", ""), ("empty relation",))]
    for (s1, s2) in z:
        if s1 not in m1.states or s2 not in m2.states:
            raise ValueError(f"pair ({s1}, {s2}) uses unknown states")
    succ1, succ2 = _succs(m1), _succs(m2)
    at1, at2 = _tern_at(m1), _tern_at(m2)
    agents = m1.vocab.agents
    constants = m1.vocab.constants
    failures = []
    order1 = {s: i for i, s in enumerate(m1.states)}
    order2 = {s: i for i, s in enumerate(m2.states)}
    for (s1, s2) in sorted(z, key=lambda p: (order1[p[0]], order2[p[1]])):
        if m1.val[s1] != m2.val[s2]:
            failures.append(ClauseFailure("Inv", (s1, s2),
                                          (tuple(sorted(m1.val[s1])),
                                           tuple(sorted(m2.val[s2])))))
        for agent in agents:
            for t1 in succ1[agent].get(s1, ()):
                if not any((t1, t2) in z for t2 in succ2[agent].get(s2, ())):
                    failures.append(ClauseFailure("Zig", (s1, s2), (agent, t1)))
            for t2 in succ2[agent].get(s2, ()):
                if not any((t1, t2) in z for t1 in succ1[agent].get(s1, ())):
                    failures.append(ClauseFailure("Zag", (s1, s2), (agent, t2)))
            for constant in constants:
                pairs1 = at1.get((agent, constant), {}).get(s1, ())
                pairs2 = at2.get((agent, constant), {}).get(s2, ())
                for (t1, u1) in pairs1:
                    if not any((t1, t2) in z and (u1, u2) in z
                               for (t2, u2) in pairs2):
                        failures.append(ClauseFailure(
                            "KvbZig", (s1, s2), (agent, constant, t1, u1)))
                for (t2, u2) in pairs2:
                    if not any((t1, t2) in z and (u1, u2) in z
                               for (t1, u1) in pairs1):
                        failures.append(ClauseFailure(
                            "KvbZag", (s1, s2), (agent, constant, t2, u2)))
    return failures


@dataclass
class BisimResult:
    pairs: frozenset
    # deletion trace: pair -> (round, reason); pairs failing Inv never enter
    deleted: dict
    rounds: int


def greatest_bisim(m1: TernaryModel, m2: TernaryModel) -> BisimResult:
    """Largest bisimulation, by refinement from the Inv-respecting relation.

    Each round removes every pair violating a successor clause against
    the current relation; reasons are recorded for formula replay.
    """
    if m1.vocab != m2.vocab:
        raise ValueError("models use different vocabularies")
    succ1, succ2 = _succs(m1), _succs(m2)
    at1, at2 = _tern_at(m1), _tern_at(m2)
    agents = m1.vocab.agents
    constants = m1.vocab.constants
    alive = {(s1, s2) for s1 in m1.states for s2 in m2.states
             if m1.val[s1] == m2.val[s2]}
    deleted: dict[tuple[str, str], tuple[int, tuple]] = {}
    rounds = 0
    while True:
        doomed = {}
        for (s1, s2) in alive:
            reason = None
            for agent in agents:
                for t1 in succ1[agent].get(s1, ()):
                    if not any((t1, t2) in alive
                               for t2 in succ2[agent].get(s2, ())):
                        reason = ("Zig", agent, t1)
                        break
                if reason:
                    break
                for t2 in succ2[agent].get(s2, ()):
                    if not any((t1, t2) in alive
                               for t1 in succ1[agent].get(s1, ())):
                        reason = ("Zag", agent, t2)
                        break
                if reason:
                    break
                for constant in constants:
                    for (t1, u1) in at1.get((agent, constant), {}).get(s1, ()):
                        if not any((t1, t2) in alive and (u1, u2) in alive
                                   for (t2, u2) in
                                   at2.get((agent, constant), {}).get(s2, ())):
                            reason = ("KvbZig", agent, constant, t1, u1)
                            break
                    if reason:
                        break
                    for (t2, u2) in at2.get((agent, constant), {}).get(s2, ()):
                        if not any((t1, t2) in alive and (u1, u2) in alive
                                   for (t1, u1) in
                                   at1.get((agent, constant), {}).get(s1, ())):
                            reason = ("KvbZag", agent, constant, t2, u2)
                            break
                    if reason:
                        break
                if reason:
                    break
            if reason:
                doomed[(s1, s2)] = reason
        if not doomed:
            break
        for pair, reason in doomed.items():
            alive.discard(pair)
            deleted[pair] = (rounds, reason)
        rounds += 1
    return BisimResult(pairs=frozenset(alive), deleted=deleted, rounds=rounds)


def _literal_for(m1, s1, m2, s2, vocab) -> Formula:
    for p in vocab.props:
        if p in m1.val[s1] and p not in m2.val[s2]:
            return Prop(p)
        if p in m2.val[s2] and p not in m1.val[s1]:
            return Neg(Prop(p))
    raise AssertionError(f"({s1}, {s2}) agree on all props")


def distinguishing_formula(m1: TernaryModel, s1: str,
                           m2: TernaryModel, s2: str) -> Optional[Formula]:
    """A formula true at s1 and false at s2, or None if the pair is
    bisimilar.  The replay result is verified by evaluation."""
    if s1 not in m1.states or s2 not in m2.states:
        raise ValueError(f"unknown states ({s1!r}, {s2!r})")
    result = greatest_bisim(m1, m2)
    if (s1, s2) in result.pairs:
        return None
    succ1, succ2 = _succs(m1), _succs(m2)
    at1, at2 = _tern_at(m1), _tern_at(m2)
    vocab = m1.vocab
    memo: dict[tuple[str, str], Formula] = {}

    def in_z_at(pair, rnd) -> bool:
        # pair alive at the start of round rnd
        if pair in result.pairs:
            return True
        if pair not in result.deleted:
            return False          # failed Inv, never present
        return result.deleted[pair][0] >= rnd

    def dist(t1: str, t2: str) -> Formula:
        got = memo.get((t1, t2))
        if got is not None:
            return got
        if m1.val[t1] != m2.val[t2]:
            out = _literal_for(m1, t1, m2, t2, vocab)
            memo[(t1, t2)] = out
            return out
        rnd, reason = result.deleted[(t1, t2)]
        kind = reason[0]
        if kind == "Zig":
            _, agent, w1 = reason
            conj = _dedup([dist(w1, w2) for w2 in succ2[agent].get(t2, ())])
            out = dia(agent, big_and(conj))
        elif kind == "Zag":
            _, agent, w2 = reason
            conj = _dedup([Neg(dist(w1, w2)) for w1 in succ1[agent].get(t1, ())])
            out = Neg(dia(agent, big_and(conj)))
        elif kind == "KvbZig":
            _, agent, constant, w1, x1 = reason
            left = _dedup([dist(w1, w2) for w2 in m2.states
                           if not in_z_at((w1, w2), rnd)])
            right = _dedup([dist(x1, x2) for x2 in m2.states
                            if not in_z_at((x1, x2), rnd)])
            out = dia_b(agent, constant, big_and(left), big_and(right))
        else:
            _, agent, constant, w2, x2 = reason
            left = _dedup([Neg(dist(w1, w2)) for w1 in m1.states
                           if not in_z_at((w1, w2), rnd)])
            right = _dedup([Neg(dist(x1, x2)) for x1 in m1.states
                            if not in_z_at((x1, x2), rnd)])
            out = Neg(dia_b(agent, constant, big_and(left), big_and(right)))
        memo[(t1, t2)] = out
        return out

    formula = dist(s1, s2)
    if not eval_ternary(m1, s1, formula) or eval_ternary(m2, s2, formula):
        raise AssertionError("replayed distinguishing formula failed evaluation")
    return formula


def _dedup(parts: list[Formula]) -> list[Formula]:
    seen = []
    for p in parts:
        if p not in seen:
            seen.append(p)
    return seen


def check_fo_bisimulation(m1: FOKripkeModel, m2: FOKripkeModel,
                          z: set[tuple[str, str]]) -> list[ClauseFailure]:
    """Bisimulation clauses for FO models: Inv, Zig, Zag, and matching of
    successor pairs with distinct constant values (KvrZig/KvrZag)."""
    if not z:
        return [ClauseFailure("Inv", ("", ""), ("empty relation",))]

    def succs(model):
        out = {agent: {} for agent in model.vocab.agents}
        for agent, pairs in model.rel.items():
            for (s, t) in pairs:
                out[agent].setdefault(s, []).append(t)
        order = {s: i for i, s in enumerate(model.states)}
        for agent in out:
            for s in out[agent]:
                out[agent][s].sort(key=order.__getitem__)
        return out

    succ1, succ2 = succs(m1), succs(m2)
    agents = m1.vocab.agents
    constants = m1.vocab.constants
    failures = []
    order1 = {s: i for i, s in enumerate(m1.states)}
    order2 = {s: i for i, s in enumerate(m2.states)}

    def distinct_pairs(model, succ, s, agent, constant):
        out = []
        for t in succ[agent].get(s, ()):
            for u in succ[agent].get(s, ()):
                if model.vc[(constant, t)] != model.vc[(constant, u)]:
                    out.append((t, u))
        return out

    for (s1, s2) in sorted(z, key=lambda p: (order1[p[0]], order2[p[1]])):
        if m1.val[s1] != m2.val[s2]:
            failures.append(ClauseFailure("Inv", (s1, s2),
                                          (tuple(sorted(m1.val[s1])),
                                           tuple(sorted(m2.val[s2])))))
        for agent in agents:
            for t1 in succ1[agent].get(s1, ()):
                if not any((t1, t2) in z for t2 in succ2[agent].get(s2, ())):
                    failures.append(ClauseFailure("Zig", (s1, s2), (agent, t1)))
            for t2 in succ2[agent].get(s2, ()):
                if not any((t1, t2) in z for t1 in succ1[agent].get(s1, ())):
                    failures.append(ClauseFailure("Zag", (s1, s2), (agent, t2)))
            for constant in constants:
                for (t1, u1) in distinct_pairs(m1, succ1, s1, agent, constant):
                    if not any((t1, t2) in z and (u1, u2) in z
                               for (t2, u2) in
                               distinct_pairs(m2, succ2, s2, agent, constant)):
                        failures.append(ClauseFailure(
                            "KvrZig", (s1, s2), (agent, constant, t1, u1)))
                for (t2, u2) in distinct_pairs(m2, succ2, s2, agent, constant):
                    if not any((t1, t2) in z and (u1, u2) in z
                               for (t1, u1) in
                               distinct_pairs(m1, succ1, s1, agent, constant)):
                        failures.append(ClauseFailure(
                            "KvrZag", (s1, s2), (agent, constant, t2, u2)))
    return failures
