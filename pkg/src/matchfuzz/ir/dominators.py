"""Dominator analysis (Cooper-Harvey-Kennedy iterative algorithm).

The entry block's immediate dominator is itself. Unreachable blocks are
permitted: they get idom = themselves and are flagged, and they dominate
nothing but themselves.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List

from .instructions import terminator_targets
from .module import FunctionDef


@dataclass
class DomTree:
    entry: str
    idom: Dict[str, str]
    unreachable: FrozenSet[str]
    _depth: Dict[str, int] = field(default_factory=dict)
    _sets: Dict[str, FrozenSet[str]] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if not self._depth:
            depth: Dict[str, int] = {self.entry: 0}
            for label in self.idom:
                self._depth_of(label, depth)
            self._depth = depth

    def _depth_of(self, label: str, depth: Dict[str, int]) -> int:
        if label in depth:
            return depth[label]
        if label in self.unreachable or self.idom[label] == label:
            depth[label] = 0
            return 0
        d = self._depth_of(self.idom[label], depth) + 1
        depth[label] = d
        return d

    def dominates(self, a: str, b: str) -> bool:
        """True when every path from entry to b passes through a (or a == b)."""
        if a == b:
            return True
        if b in self.unreachable or a in self.unreachable:
            return False
        da = self._depth.get(a)
        db = self._depth.get(b)
        if da is None or db is None or da >= db:
            return False
        while db > da:
            b = self.idom[b]
            db -= 1
        return a == b

    def dominator_sets(self) -> Dict[str, FrozenSet[str]]:
        """label -> frozenset of labels dominating it (including itself)."""
        if self._sets is not None:
            return self._sets
        out: Dict[str, FrozenSet[str]] = {}
        for label in self.idom:
            if label in self.unreachable:
                out[label] = frozenset((label,))
                continue
            chain = [label]
            cur = label
            while cur != self.entry:
                cur = self.idom[cur]
                chain.append(cur)
            out[label] = frozenset(chain)
        self._sets = out
        return out

    def relation(self) -> Dict[str, FrozenSet[str]]:
        """Full dominates relation: label -> set of blocks it dominates."""
        sets = self.dominator_sets()
        rel: Dict[str, set] = {label: set() for label in self.idom}
        for label, doms in sets.items():
            for d in doms:
                rel[d].add(label)
        return {k: frozenset(v) for k, v in rel.items()}


def compute_dominators(f: FunctionDef) -> DomTree:
    """Build the dominator tree for a function with at least one block."""
    if not f.blocks:
        raise ValueError("function has no blocks")
    labels = [b.label for b in f.blocks]
    entry = labels[0]
    known = set(labels)
    succs: Dict[str, List[str]] = {}
    preds: Dict[str, List[str]] = {label: [] for label in labels}
    for b in f.blocks:
        targets = [t for t in terminator_targets(b.terminator) if t in known]
        succs[b.label] = targets
        for t in targets:
            if b.label not in preds[t]:
                preds[t].append(b.label)

    # Reverse postorder over reachable blocks.
    order: List[str] = []
    seen = {entry}
    stack: List[tuple] = [(entry, iter(succs[entry]))]
    while stack:
        label, it = stack[-1]
        advanced = False
        for nxt in it:
            if nxt not in seen:
                seen.add(nxt)
                stack.append((nxt, iter(succs[nxt])))
                advanced = True
                break
        if not advanced:
            order.append(label)
            stack.pop()
    rpo = list(reversed(order))
    rpo_index = {label: i for i, label in enumerate(rpo)}

    idom: Dict[str, str] = {entry: entry}

    def intersect(a: str, b: str) -> str:
        while a != b:
            while rpo_index[a] > rpo_index[b]:
                a = idom[a]
            while rpo_index[b] > rpo_index[a]:
                b = idom[b]
        return a

    changed = True
    while changed:
        changed = False
        for label in rpo[1:]:
            candidates = [p for p in preds[label] if p in idom]
            if not candidates:
                continue
            new = candidates[0]
            for p in candidates[1:]:
                new = intersect(new, p)
            if idom.get(label) != new:
                idom[label] = new
                changed = True

    unreachable = frozenset(label for label in labels if label not in seen)
    for label in unreachable:
        idom[label] = label
    return DomTree(entry, idom, unreachable)


def cached_dominators(f: FunctionDef) -> DomTree:
    """Dominator tree memoized on the function.

    Mutation and verification recompute dominators constantly while the CFG
    itself changes rarely (only sub-CFG insertion alters it, and it must call
    invalidate_cfg). DomTree is immutable after construction, so clones of a
    function safely share the cached tree.
    """
    tree = f.dom_cache
    if tree is None:
        tree = compute_dominators(f)
        f.dom_cache = tree
    return tree
