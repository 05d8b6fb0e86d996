"""Joining before/after ASTs into a labeled diff tree and grouping hunks.

The matcher is line-anchored: a minimal line-level edit script is computed
first, then nodes lying fully inside changed line ranges are matched
structurally (same kind, role, normalized text) between the removed and
added side of each block.  Unmatched before-nodes become ``Minus`` subtree
roots, unmatched after-nodes become ``Plus`` subtree roots, and labels
inherit downward.  A modified node therefore always yields a Minus+Plus
pair, never an in-place update.

The line diff runs in a canonical orientation so that swapping the two
inputs swaps Plus and Minus labels exactly, even when duplicated lines
make the minimal script ambiguous.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field

from fixscope.grammar import AstNode, SourceSpan

logger = logging.getLogger(__name__)

__all__ = [
    "ChangeLabel",
    "EditBlock",
    "DiffNode",
    "EnhancedAst",
    "Hunk",
    "align_versions",
    "build_diff_ast",
    "extract_hunks",
    "scoped_ancestor",
    "closest_ancestor",
    "dump_enhanced_ast",
    "diff_node_to_dict",
    "diff_node_from_dict",
    "hunk_to_dict",
    "hunk_from_dict",
]

HUNK_LINE_GAP = 3

SCOPE_KINDS = frozenset({"FunctionDef", "ClassDef", "Module"})


class ChangeLabel(enum.Enum):
    PLUS = "plus"
    MINUS = "minus"
    UNCHANGED = "unchanged"


@dataclass(frozen=True)
class EditBlock:
    """One contiguous change: before lines [b_start, b_end) were replaced
    by after lines [a_start, a_end); either side may be empty."""

    b_start: int
    b_end: int
    a_start: int
    a_end: int

    def mirrored(self) -> "EditBlock":
        return EditBlock(self.a_start, self.a_end, self.b_start, self.b_end)


@dataclass(eq=False)
class DiffNode:
    """Node of the joined diff tree.

    ``span`` is in the node's native coordinates (after-file for unchanged
    and plus nodes, before-file for minus nodes); ``eff_start``/``eff_end``
    are line numbers normalized to after-file coordinates so that plus and
    minus nodes can be compared on one axis.
    """

    kind: str
    role: str | None
    text: str
    label: ChangeLabel
    span: SourceSpan
    eff_start: int
    eff_end: int
    children: list["DiffNode"] = field(default_factory=list)
    parent: "DiffNode | None" = field(default=None, repr=False)

    def walk(self):
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def ancestors(self):
        node = self.parent
        while node is not None:
            yield node
            node = node.parent


@dataclass
class EnhancedAst:
    """After-tree skeleton with Minus subtrees grafted in."""

    root: DiffNode
    change_id: str
    path: str
    conflicts: list[str] = field(default_factory=list)

    def labeled_roots(self) -> list[DiffNode]:
        """Maximal Plus/Minus subtree roots in document order."""
        roots: list[DiffNode] = []

        def visit(node: DiffNode):
            if node.label is not ChangeLabel.UNCHANGED:
                roots.append(node)
                return
            for child in node.children:
                visit(child)

        visit(self.root)
        return roots


@dataclass(frozen=True)
class Hunk:
    """A group of labeled subtree roots within the 3-line relation, plus
    the chain of unchanged ancestors shared by all of them."""

    id: str
    labeled_roots: tuple[DiffNode, ...]
    context_chain: tuple[DiffNode, ...]
    line_window: SourceSpan


# --- line-level alignment --------------------------------------------------


def align_versions(before_text: str, after_text: str) -> list[EditBlock]:
    """Minimal line-level edit script between the two texts.

    LCS-based (Myers), deterministic, and orientation-canonical: the script
    for (a, b) is exactly the mirrored script for (b, a).
    """
    before = before_text.splitlines()
    after = after_text.splitlines()
    if before == after:
        return []
    if (before, after) <= (after, before):
        return _myers_blocks(before, after)
    return [blk.mirrored() for blk in _myers_blocks(after, before)]


def _myers_blocks(a: list[str], b: list[str]) -> list[EditBlock]:
    # trim common prefix/suffix to keep the middle small
    lo = 0
    while lo < len(a) and lo < len(b) and a[lo] == b[lo]:
        lo += 1
    hi_a, hi_b = len(a), len(b)
    while hi_a > lo and hi_b > lo and a[hi_a - 1] == b[hi_b - 1]:
        hi_a -= 1
        hi_b -= 1
    mid_a, mid_b = a[lo:hi_a], b[lo:hi_b]
    matches = _myers_matches(mid_a, mid_b)
    blocks: list[EditBlock] = []
    prev_i = prev_j = 0
    for i, j in matches + [(len(mid_a), len(mid_b))]:
        if i > prev_i or j > prev_j:
            blocks.append(EditBlock(
                lo + prev_i + 1, lo + i + 1, lo + prev_j + 1, lo + j + 1))
        prev_i, prev_j = i + 1, j + 1
    return blocks


def _myers_matches(a: list[str], b: list[str]) -> list[tuple[int, int]]:
    """Indices (i, j) of kept lines under a minimal edit script."""
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        return []
    max_d = n + m
    v = {1: 0}
    trace = []
    for d in range(max_d + 1):
        trace.append(dict(v))
        for k in range(-d, d + 1, 2):
            if k == -d or (k != d and v[k - 1] < v[k + 1]):
                x = v[k + 1]
            else:
                x = v[k - 1] + 1
            y = x - k
            while x < n and y < m and a[x] == b[y]:
                x += 1
                y += 1
            v[k] = x
            if x >= n and y >= m:
                return _backtrack(trace, d, k, a, b)
    return []


def _backtrack(trace, d, k, a, b) -> list[tuple[int, int]]:
    matches: list[tuple[int, int]] = []
    x, y = len(a), len(b)
    for depth in range(d, 0, -1):
        v = trace[depth]
        if k == -depth or (k != depth and v.get(k - 1, -1) < v.get(k + 1, -1)):
            prev_k = k + 1
        else:
            prev_k = k - 1
        prev_x = v[prev_k]
        prev_y = prev_x - prev_k
        if prev_k == k + 1:
            mid_x, mid_y = prev_x, prev_y + 1
        else:
            mid_x, mid_y = prev_x + 1, prev_y
        while x > mid_x and y > mid_y:
            x -= 1
            y -= 1
            matches.append((x, y))
        x, y = prev_x, prev_y
        k = prev_k
    while x > 0 and y > 0:
        x -= 1
        y -= 1
        matches.append((x, y))
    matches.reverse()
    return matches


# --- structural matching within changed blocks -----------------------------


def _inside(node: AstNode, start: int, end: int) -> bool:
    return start <= node.span.start_line and node.span.end_line < end


def _maximal_inside(root: AstNode, start: int, end: int) -> list[AstNode]:
    # the tree root itself always pairs with its counterpart, so candidacy
    # starts at its children (a whole-file insertion labels every top-level
    # node, not the Module)
    out: list[AstNode] = []

    def visit(node: AstNode):
        if _inside(node, start, end):
            out.append(node)
            return
        for child in node.children:
            visit(child)

    for child in root.children:
        visit(child)
    return out


def _key(node: AstNode) -> tuple[str, str | None, str]:
    return (node.kind, node.role, node.text.strip())


class _Matcher:
    """Pairs before/after candidates by (kind, role, text) occurrence order."""

    def __init__(self):
        self.matched: dict[int, AstNode] = {}  # id(before node) -> after node
        self.minus_roots: set[int] = set()
        self.plus_roots: set[int] = set()
        self.conflicts: list[str] = []

    def match_lists(self, b_nodes: list[AstNode], a_nodes: list[AstNode]):
        by_key: dict[tuple, list[AstNode]] = {}
        for a in a_nodes:
            by_key.setdefault(_key(a), []).append(a)
        consumed: set[int] = set()
        for b in b_nodes:
            pool = by_key.get(_key(b), [])
            partner = next((a for a in pool if id(a) not in consumed), None)
            if partner is None:
                self.minus_roots.add(id(b))
                continue
            if len(pool) > 1:
                self.conflicts.append(
                    f"ambiguous anchor for {_key(b)!r}; resolved in source order")
            consumed.add(id(partner))
            self.matched[id(b)] = partner
            self.match_lists(list(b.children), list(partner.children))
        for a in a_nodes:
            if id(a) not in consumed:
                self.plus_roots.add(id(a))


# --- effective line mapping -------------------------------------------------


class _LineMap:
    """Maps before-file line numbers into after-file coordinates."""

    def __init__(self, script: list[EditBlock]):
        self.script = sorted(script, key=lambda blk: blk.b_start)

    def map(self, line: int) -> int:
        delta = 0
        for blk in self.script:
            if line < blk.b_start:
                break
            if line < blk.b_end:
                return blk.a_start + (line - blk.b_start)
            delta += (blk.a_end - blk.a_start) - (blk.b_end - blk.b_start)
        return line + delta


# --- the join ---------------------------------------------------------------


def build_diff_ast(
    before: AstNode,
    after: AstNode,
    script: list[EditBlock],
    change_id: str = "",
    path: str = "",
) -> EnhancedAst:
    """Join the two canonical trees into a single labeled diff tree."""
    matcher = _Matcher()
    for blk in script:
        b_cands = (_maximal_inside(before, blk.b_start, blk.b_end)
                   if blk.b_end > blk.b_start else [])
        a_cands = (_maximal_inside(after, blk.a_start, blk.a_end)
                   if blk.a_end > blk.a_start else [])
        matcher.match_lists(b_cands, a_cands)
    line_map = _LineMap(script)
    conflicts = list(matcher.conflicts)

    def make_plus(a_node: AstNode) -> DiffNode:
        node = DiffNode(a_node.kind, a_node.role, a_node.text, ChangeLabel.PLUS,
                        a_node.span, a_node.span.start_line, a_node.span.end_line)
        for child in a_node.children:
            sub = make_plus(child)
            sub.parent = node
            node.children.append(sub)
        return node

    def make_minus(b_node: AstNode) -> DiffNode:
        node = DiffNode(b_node.kind, b_node.role, b_node.text, ChangeLabel.MINUS,
                        b_node.span,
                        line_map.map(b_node.span.start_line),
                        line_map.map(b_node.span.end_line))
        for child in b_node.children:
            sub = make_minus(child)
            sub.parent = node
            node.children.append(sub)
        return node

    def join(b_node: AstNode, a_node: AstNode) -> DiffNode:
        node = DiffNode(a_node.kind, a_node.role, a_node.text, ChangeLabel.UNCHANGED,
                        a_node.span, a_node.span.start_line, a_node.span.end_line)
        minus_kids = [c for c in b_node.children if id(c) in matcher.minus_roots]
        plus_kids = {id(c) for c in a_node.children if id(c) in matcher.plus_roots}
        b_rest = [c for c in b_node.children if id(c) not in matcher.minus_roots]
        a_rest = [c for c in a_node.children if id(c) not in plus_kids]
        pairs: list[tuple[AstNode, AstNode]] = []
        a_taken: set[int] = set()
        b_positional: list[AstNode] = []
        for b_child in b_rest:
            partner = matcher.matched.get(id(b_child))
            if partner is not None:
                pairs.append((b_child, partner))
                a_taken.add(id(partner))
            else:
                b_positional.append(b_child)
        a_positional = [c for c in a_rest if id(c) not in a_taken]
        for b_child, a_child in zip(b_positional, a_positional):
            if (b_child.kind, b_child.role) != (a_child.kind, a_child.role):
                conflicts.append(
                    f"positional pairing of {b_child.kind} with {a_child.kind} "
                    f"at line {a_child.span.start_line}")
            pairs.append((b_child, a_child))
        # leftovers on one side only: force-label them (logged)
        for b_child in b_positional[len(a_positional):]:
            conflicts.append(f"unpaired before-node {b_child.kind} forced Minus")
            minus_kids.append(b_child)
        forced_plus = [c for c in a_positional[len(b_positional):]]
        joined: dict[int, DiffNode] = {}
        for b_child, a_child in pairs:
            joined[id(a_child)] = join(b_child, a_child)
        built: list[DiffNode] = []
        for a_child in a_node.children:
            if id(a_child) in joined:
                built.append(joined[id(a_child)])
            elif id(a_child) in plus_kids or a_child in forced_plus:
                if a_child in forced_plus:
                    conflicts.append(f"unpaired after-node {a_child.kind} forced Plus")
                built.append(make_plus(a_child))
        minus_built = [make_minus(b_child) for b_child in minus_kids]
        merged = sorted(
            built + minus_built,
            key=lambda n: (n.eff_start, n.span.start_col,
                           n.label is not ChangeLabel.MINUS, n.span.start_line),
        )
        for child in merged:
            child.parent = node
        node.children = merged
        return node

    root = join(before, after)
    for message in conflicts:
        logger.warning("alignment conflict in %s %s: %s", change_id, path, message)
    return EnhancedAst(root=root, change_id=change_id, path=path, conflicts=conflicts)


# --- hunk extraction ---------------------------------------------------------


def extract_hunks(enhanced: EnhancedAst) -> list[Hunk]:
    """Partition labeled subtree roots by transitive 3-line grouping."""
    roots = sorted(enhanced.labeled_roots(), key=lambda r: (r.eff_start, r.eff_end))
    if not roots:
        return []
    groups: list[list[DiffNode]] = [[roots[0]]]
    group_end = roots[0].eff_end
    for root in roots[1:]:
        if root.eff_start - group_end <= HUNK_LINE_GAP:
            groups[-1].append(root)
        else:
            groups.append([root])
        group_end = max(group_end, root.eff_end)
    hunks = []
    for ordinal, group in enumerate(groups):
        chain = _common_chain(group)
        window = SourceSpan(
            start_line=min(r.eff_start for r in group),
            start_col=min(r.span.start_col for r in group),
            end_line=max(r.eff_end for r in group),
            end_col=max(r.span.end_col for r in group))
        hunk_id = f"{enhanced.change_id}:{enhanced.path}:{ordinal}"
        hunks.append(Hunk(
            id=hunk_id,
            labeled_roots=tuple(group),
            context_chain=chain,
            line_window=window,
        ))
    return hunks


def _common_chain(roots: list[DiffNode]) -> tuple[DiffNode, ...]:
    chains = [list(root.ancestors()) for root in roots]
    shortest = min(chains, key=len)
    shared = 0
    for depth in range(1, len(shortest) + 1):
        candidate = shortest[-depth]
        if all(len(c) >= depth and c[-depth] is candidate for c in chains):
            shared = depth
        else:
            break
    chain = shortest[-shared:] if shared else []
    return tuple(chain)


def closest_ancestor(hunk: Hunk) -> DiffNode:
    """First node of the context chain."""
    return hunk.context_chain[0]


def scoped_ancestor(hunk: Hunk) -> DiffNode:
    """Nearest context-chain node opening a scope (function/class/module)."""
    for node in hunk.context_chain:
        if node.kind in SCOPE_KINDS:
            return node
    raise AssertionError("context chain always ends at Module")


# --- debug dump --------------------------------------------------------------


def diff_node_to_dict(node: DiffNode) -> dict:
    return {
        "kind": node.kind,
        "role": node.role,
        "label": node.label.value,
        "text": node.text,
        "span": [node.span.start_line, node.span.start_col,
                 node.span.end_line, node.span.end_col],
        "eff": [node.eff_start, node.eff_end],
        "children": [diff_node_to_dict(c) for c in node.children],
    }


def diff_node_from_dict(doc: dict, parent: DiffNode | None = None) -> DiffNode:
    node = DiffNode(
        kind=doc["kind"],
        role=doc["role"],
        text=doc["text"],
        label=ChangeLabel(doc["label"]),
        span=SourceSpan(*doc["span"]),
        eff_start=doc["eff"][0],
        eff_end=doc["eff"][1],
        parent=parent,
    )
    node.children = [diff_node_from_dict(c, node) for c in doc["children"]]
    return node


def hunk_to_dict(hunk: Hunk) -> dict:
    """Serialized form carrying the full labeled subtrees and a context
    synopsis; enough to recompute feature vectors under any weights."""
    return {
        "id": hunk.id,
        "window": [hunk.line_window.start_line, hunk.line_window.start_col,
                   hunk.line_window.end_line, hunk.line_window.end_col],
        "roots": [diff_node_to_dict(r) for r in hunk.labeled_roots],
    }


def hunk_from_dict(doc: dict) -> Hunk:
    roots = tuple(diff_node_from_dict(r) for r in doc["roots"])
    return Hunk(id=doc["id"], labeled_roots=roots, context_chain=(),
                line_window=SourceSpan(*doc["window"]))


def dump_enhanced_ast(enhanced: EnhancedAst) -> str:
    """One JSON document with the labeled tree, for golden tests."""
    doc = {
        "change_id": enhanced.change_id,
        "path": enhanced.path,
        "conflicts": enhanced.conflicts,
        "tree": diff_node_to_dict(enhanced.root),
    }
    return json.dumps(doc, indent=2, sort_keys=True)
