"""Deterministic finite automata over letters (sets of atomic propositions).

Transitions are specified with guard formulas, conjunctions of literals
over the propositions (e.g. ``"P1 & !P2"``), expanded into explicit letter
lookups at construction time.  Acceptance is co-safe: a word is accepted
as soon as any prefix ends in an accepting state.
"""

import itertools
import json
from dataclasses import dataclass

from .errors import DfaLoadError, MissingTransitionError
from .regions import RegionMap, possible_letters

__all__ = [
    "Dfa",
    "dfa_step",
    "accepts",
    "robust_successors",
    "builtin_package_delivery",
    "builtin_reach_avoid",
    "load_dfa",
]


def canon_letter(letter):
    """Canonical form of a letter: a sorted tuple of proposition names."""
    return tuple(sorted(set(letter)))


@dataclass(frozen=True)
class Dfa:
    """An explicit-letter DFA.

    ``transitions`` maps ``(state, letter)`` to a state, with letters in
    canonical sorted-tuple form.  When ``default_self_loop`` is set, letters
    absent from the table self-loop instead of raising.
    """

    num_states: int
    q0: int
    accepting: frozenset
    transitions: dict
    ap: tuple
    default_self_loop: bool = False
    state_names: tuple = None

    def __post_init__(self):
        if not 0 <= self.q0 < self.num_states:
            raise ValueError("q0 out of range")
        if any(not 0 <= q < self.num_states for q in self.accepting):
            raise ValueError("accepting state out of range")
        names = self.state_names or tuple(f"q{i}" for i in range(self.num_states))
        object.__setattr__(self, "accepting", frozenset(self.accepting))
        object.__setattr__(self, "ap", tuple(self.ap))
        object.__setattr__(self, "state_names", tuple(names))

    def is_absorbing(self, q):
        """True when every listed letter (and the default) keeps the state at q."""
        listed = [t for (s, _), t in self.transitions.items() if s == q]
        if not self.default_self_loop:
            full = 2 ** len(self.ap)
            if sum(1 for (s, _) in self.transitions if s == q) < full:
                return False
        return all(t == q for t in listed)


def dfa_step(dfa: Dfa, q, letter):
    """Apply the transition function to one letter."""
    key = (q, canon_letter(letter))
    if key in dfa.transitions:
        return dfa.transitions[key]
    if dfa.default_self_loop:
        return q
    raise MissingTransitionError(f"no transition from state {q} on letter {key[1]!r}")


def accepts(dfa: Dfa, word) -> bool:
    """Co-safe acceptance: true iff some prefix run ends in an accepting state."""
    q = dfa.q0
    if q in dfa.accepting:
        return True
    for letter in word:
        q = dfa_step(dfa, q, letter)
        if q in dfa.accepting:
            return True
    return False


def robust_successors(dfa: Dfa, region_map: RegionMap, q, y, eps) -> set:
    """States reachable from q under any letter attainable in the eps-ball at y."""
    return {dfa_step(dfa, q, letter) for letter in possible_letters(region_map, y, eps)}


def _parse_guard(guard, ap):
    """Split a conjunction of literals into (positive, negative) name sets."""
    guard = guard.strip()
    if guard in ("true", "1", ""):
        return set(), set()
    pos, neg = set(), set()
    for token in guard.replace("&&", "&").split("&"):
        token = token.strip()
        negate = False
        while token[:1] in ("!", "~") or token[:2] == "¬"[:2]:
            if token[0] in ("!", "~", "¬"):
                negate = True
                token = token[1:].strip()
            else:
                break
        if not token:
            raise DfaLoadError(f"empty literal in guard {guard!r}")
        if token not in ap:
            raise DfaLoadError(f"unknown proposition {token!r} in guard {guard!r}")
        (neg if negate else pos).add(token)
    if pos & neg:
        raise DfaLoadError(f"guard {guard!r} is contradictory")
    return pos, neg


def _expand_guard(pos, neg, ap):
    """All letters over ``ap`` consistent with the literal constraints."""
    free = [a for a in ap if a not in pos and a not in neg]
    for k in range(len(free) + 1):
        for extra in itertools.combinations(free, k):
            yield canon_letter(pos | set(extra))


def build_dfa(num_states, q0, accepting, edges, ap, default_self_loop=False,
              state_names=None) -> Dfa:
    """Construct a DFA from guarded edges ``(from, guard, to)``.

    Guards are conjunctions over ``ap``; overlapping guards out of one state
    make the automaton nondeterministic and raise :class:`DfaLoadError`.
    """
    ap = tuple(ap)
    transitions = {}
    for src, guard, dst in edges:
        pos, neg = _parse_guard(guard, ap)
        for letter in _expand_guard(pos, neg, ap):
            key = (src, letter)
            if key in transitions and transitions[key] != dst:
                raise DfaLoadError(
                    f"overlapping guards from state {src} on letter {letter!r}"
                )
            transitions[key] = dst
    return Dfa(
        num_states=num_states,
        q0=q0,
        accepting=frozenset(accepting),
        transitions=transitions,
        ap=ap,
        default_self_loop=default_self_loop,
        state_names=state_names,
    )


def builtin_package_delivery() -> Dfa:
    """Pick up at P1, deliver to P3, losing the parcel whenever P2 is crossed.

    States: 0 = searching for a parcel, 1 = carrying it, 2 = delivered
    (accepting, absorbing).
    """
    edges = [
        (0, "!P1", 0),
        (0, "P1 & !P3", 1),
        (0, "P1 & P3", 2),
        (1, "P2", 0),
        (1, "!P2 & !P3", 1),
        (1, "!P2 & P3", 2),
        (2, "true", 2),
    ]
    return build_dfa(3, 0, {2}, edges, ("P1", "P2", "P3"),
                     state_names=("q0", "q1", "qF"))


def builtin_reach_avoid(safe="P_S", target="P_T") -> Dfa:
    """Stay in the safe region until the target region is reached.

    States: 0 = running, 1 = succeeded (accepting), 2 = failed (dead).
    """
    edges = [
        (0, f"{target}", 1),
        (0, f"!{target} & {safe}", 0),
        (0, f"!{target} & !{safe}", 2),
        (1, "true", 1),
        (2, "true", 2),
    ]
    return build_dfa(3, 0, {1}, edges, (safe, target),
                     state_names=("q0", "qF", "qdead"))


def load_dfa(source, ap=None) -> Dfa:
    """Load a DFA from a JSON file or dict.

    Expected keys: ``states`` (list of names or a count), ``initial``,
    ``accepting``, ``edges`` (objects with ``from``, ``guard``, ``to``),
    and optionally ``ap`` and ``default_self_loop``.
    """
    if isinstance(source, dict):
        payload = source
    else:
        with open(source, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    states = payload.get("states")
    if isinstance(states, int):
        names = [f"q{i}" for i in range(states)]
    elif isinstance(states, list):
        names = [str(s) for s in states]
    else:
        raise DfaLoadError("'states' must be a count or a list of names")
    index = {name: i for i, name in enumerate(names)}

    def resolve(ref, field):
        if isinstance(ref, int):
            if not 0 <= ref < len(names):
                raise DfaLoadError(f"{field} index {ref} out of range")
            return ref
        if str(ref) not in index:
            raise DfaLoadError(f"unknown state {ref!r} in {field}")
        return index[str(ref)]

    q0 = resolve(payload.get("initial", 0), "initial")
    accepting = {resolve(s, "accepting") for s in payload.get("accepting", [])}
    file_ap = payload.get("ap", ap)
    edges = []
    guards_props = set()
    for edge in payload.get("edges", []):
        src = resolve(edge["from"], "edge source")
        dst = resolve(edge["to"], "edge target")
        guard = str(edge.get("guard", "true"))
        edges.append((src, guard, dst))
        for token in guard.replace("&&", "&").split("&"):
            token = token.strip().lstrip("!~¬").strip()
            if token and token not in ("true", "1"):
                guards_props.add(token)
    if file_ap is None:
        file_ap = sorted(guards_props)
    return build_dfa(
        num_states=len(names),
        q0=q0,
        accepting=accepting,
        edges=edges,
        ap=tuple(file_ap),
        default_self_loop=bool(payload.get("default_self_loop", False)),
        state_names=tuple(names),
    )
