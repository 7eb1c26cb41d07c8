"""Classical tree edit distance and edit-script machinery.

The distance is the standard keyroot-scheduled dynamic program over
postorder-indexed trees: an outer loop over keyroot pairs, a transient
forest table per pair, and a persistent subtree-distance table.  Node and
incoming edge are priced together as one object.

This module also owns the edit-operation types, script extraction via
backtracking, and a mechanical replay engine that applies a script to a
tree without consulting the target: every operation carries the payload
it needs (labels, adoption ranges, anchor ids).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

from .cost_models import CostModel, LabelPair
from .tree_model import IndexedTree, Label, LabeledTree, TreeNode


class MalformedIndexError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Edit operations


@dataclass(frozen=True)
class EditOp:
    cost: float

    kind = "op"

    def to_json(self) -> dict:
        raise NotImplementedError

    def apply(self, ctx: "ReplayContext") -> None:
        raise NotImplementedError


@dataclass(frozen=True)
class Delete(EditOp):
    """Remove node ``node`` of T; its children take its place."""

    kind = "delete"

    node: int = 0

    def to_json(self) -> dict:
        return {"op": "delete", "i_nodes": [self.node], "cost": self.cost}

    def apply(self, ctx: "ReplayContext") -> None:
        w = ctx.take_i(self.node)
        pos = w.parent.children.index(w)
        for c in w.children:
            c.parent = w.parent
        w.parent.children[pos:pos + 1] = w.children


@dataclass(frozen=True)
class Insert(EditOp):
    """Create the counterpart of T' node ``node`` under ``parent``.

    Adopts the consecutive run of the parent's current children whose
    tags fall inside ``adopt`` (a postorder interval of T').
    """

    kind = "insert"

    node: int = 0
    parent: int = 0
    node_label: Optional[Label] = None
    edge_label: Optional[Label] = None
    tag: tuple[int, int] = (0, 0)
    adopt: tuple[int, int] = (0, 0)

    def to_json(self) -> dict:
        return {"op": "insert", "j_nodes": [self.node], "cost": self.cost}

    def apply(self, ctx: "ReplayContext") -> None:
        parent = ctx.registry_j[self.parent]
        start, end = ctx.adoption_run(parent, self.adopt)
        new = ReplayNode(self.node_label, self.edge_label, tag=self.tag)
        new.children = parent.children[start:end]
        for c in new.children:
            c.parent = new
        new.parent = parent
        parent.children[start:end] = [new]
        ctx.registry_j[self.node] = new


@dataclass(frozen=True)
class Relabel(EditOp):
    """Match T node ``node`` with T' node ``target`` (labels may be equal)."""

    kind = "relabel"

    node: int = 0
    target: int = 0
    node_label: Optional[Label] = None
    edge_label: Optional[Label] = None
    tag: tuple[int, int] = (0, 0)

    def to_json(self) -> dict:
        return {"op": "relabel", "i_nodes": [self.node],
                "j_nodes": [self.target], "cost": self.cost}

    def apply(self, ctx: "ReplayContext") -> None:
        w = ctx.registry_i[self.node]
        w.label = self.node_label
        w.edge_label = self.edge_label
        w.tag = self.tag
        ctx.registry_j[self.target] = w


@dataclass
class EditScript:
    """Ordered operations editing T into T'."""

    ops: list[EditOp] = field(default_factory=list)

    @property
    def total_cost(self) -> float:
        return sum(op.cost for op in self.ops)

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for op in self.ops:
            out[op.kind] = out.get(op.kind, 0) + 1
        return out

    def to_json(self) -> list[dict]:
        return [op.to_json() for op in self.ops]


Mapping = set  # classical mapping: set of (i, j) couples


# ---------------------------------------------------------------------------
# Replay


class ReplayNode:
    __slots__ = ("label", "edge_label", "children", "parent", "tag")

    def __init__(self, label: Optional[Label], edge_label: Optional[Label] = None,
                 tag: Optional[tuple[int, int]] = None):
        self.label = label
        self.edge_label = edge_label
        self.children: list[ReplayNode] = []
        self.parent: Optional[ReplayNode] = None
        self.tag = tag


class ReplayContext:
    """Working copy of T, indexed by original postorder ids.

    A virtual super-root holds the top level so scripts may delete or
    insert the real root.  ``registry_j`` tracks realized T' identities.
    """

    def __init__(self, a: IndexedTree):
        self.registry_i: dict[int, ReplayNode] = {}
        self.registry_j: dict[int, ReplayNode] = {}
        self.virtual = ReplayNode(None, tag=(0, 1 << 60))
        root = self._copy(a, a.root)
        root.parent = self.virtual
        self.virtual.children = [root]
        self.registry_j[0] = self.virtual

    def _copy(self, a: IndexedTree, i: int) -> ReplayNode:
        node = ReplayNode(a.labels[i], a.edge_labels[i])
        node.children = [self._copy(a, c) for c in a.children[i]]
        for c in node.children:
            c.parent = node
        self.registry_i[i] = node
        return node

    def take_i(self, i: int) -> ReplayNode:
        return self.registry_i.pop(i)

    def adoption_run(self, parent: ReplayNode, adopt: tuple[int, int]) -> tuple[int, int]:
        lo, hi = adopt
        start = None
        end = len(parent.children)
        for idx, child in enumerate(parent.children):
            if child.tag is None:
                raise MalformedIndexError("untagged node during insertion phase")
            if lo <= child.tag[0] and child.tag[1] <= hi:
                if start is None:
                    start = idx
                end_seen = idx + 1
            elif start is not None:
                end = idx
                break
        if start is None:
            # empty run: position after every child strictly left of the range
            pos = sum(1 for c in parent.children if c.tag[1] < lo)
            return pos, pos
        return start, max(end_seen, start)

    def result(self) -> LabeledTree:
        if len(self.virtual.children) != 1:
            raise MalformedIndexError(
                f"replay left {len(self.virtual.children)} top-level trees")
        def to_tree(w: ReplayNode) -> TreeNode:
            node = TreeNode(w.label, w.edge_label)
            node.children = [to_tree(c) for c in w.children]
            return node
        return LabeledTree(to_tree(self.virtual.children[0]))


def replay_script(a: IndexedTree, script: EditScript) -> LabeledTree:
    """Apply a script to T mechanically and return the resulting tree."""
    ctx = ReplayContext(a)
    for op in script.ops:
        op.apply(ctx)
    return ctx.result()


# ---------------------------------------------------------------------------
# Distance


@dataclass
class DPTables:
    """Persistent subtree-distance table plus what backtracking needs."""

    a: IndexedTree
    b: IndexedTree
    model: CostModel
    treedist: list[list[float]]
    distance: float
    del_costs: list[float]
    ins_costs: list[float]

    def match_cost(self, i: int, j: int) -> float:
        return self.model.cost_match(self.a.pair(i), self.b.pair(j))


def _check_indexed(t: IndexedTree) -> None:
    if t.n < 1 or len(t.l) != t.n + 1:
        raise MalformedIndexError("tree index arrays are inconsistent")
    for i in range(1, t.n + 1):
        if not (1 <= t.l[i] <= i):
            raise MalformedIndexError(f"l({i}) = {t.l[i]} out of range")


def _warn_unvalidated(m: CostModel) -> None:
    if not m.assume_valid:
        warnings.warn(f"cost model {m.name!r} has not passed validation; "
                      "the result may not be a distance", stacklevel=3)


def zs_distance(a: IndexedTree, b: IndexedTree, m: CostModel) -> tuple[float, DPTables]:
    """Tree edit distance over the classical three operations."""
    _check_indexed(a)
    _check_indexed(b)
    _warn_unvalidated(m)
    del1 = [0.0] * (a.n + 1)
    for i in range(1, a.n + 1):
        del1[i] = m.cost_del(a.pair(i))
    ins2 = [0.0] * (b.n + 1)
    for j in range(1, b.n + 1):
        ins2[j] = m.cost_ins(b.pair(j))
    treedist = [[0.0] * (b.n + 1) for _ in range(a.n + 1)]
    tables = DPTables(a, b, m, treedist, 0.0, del1, ins2)
    match_cache: dict[tuple[int, int], float] = {}
    for i in a.keyroots:
        for j in b.keyroots:
            _forest_pass(tables, i, j, match_cache)
    tables.distance = treedist[a.n][b.n]
    return tables.distance, tables


def _forest_pass(t: DPTables, i: int, j: int,
                 match_cache: dict[tuple[int, int], float],
                 keep: bool = False) -> Optional[list[list[float]]]:
    """Forest table for the subtree pair anchored at (i, j).

    Writes treedist for every cell whose ranges are complete subtrees.
    With ``keep`` the table is returned for backtracking.
    """
    a, b, model = t.a, t.b, t.model
    la, lb = a.l, b.l
    del1, ins2 = t.del_costs, t.ins_costs
    treedist = t.treedist
    ioff = la[i] - 1
    joff = lb[j] - 1
    rows = i - ioff + 1
    cols = j - joff + 1
    fd = [[0.0] * cols for _ in range(rows)]
    for x in range(1, rows):
        fd[x][0] = fd[x - 1][0] + del1[x + ioff]
    for y in range(1, cols):
        fd[0][y] = fd[0][y - 1] + ins2[y + joff]
    for x in range(1, rows):
        fdx = fd[x]
        fdx1 = fd[x - 1]
        gi = x + ioff
        for y in range(1, cols):
            gj = y + joff
            if la[gi] == la[i] and lb[gj] == lb[j]:
                key = (gi, gj)
                mc = match_cache.get(key)
                if mc is None:
                    mc = model.cost_match(a.pair(gi), b.pair(gj))
                    match_cache[key] = mc
                best = min(fdx1[y] + del1[gi],
                           fdx[y - 1] + ins2[gj],
                           fdx1[y - 1] + mc)
                fdx[y] = best
                treedist[gi][gj] = best
            else:
                fdx[y] = min(fdx1[y] + del1[gi],
                             fdx[y - 1] + ins2[gj],
                             fd[la[gi] - 1 - ioff][lb[gj] - 1 - joff] + treedist[gi][gj])
    return fd if keep else None


# ---------------------------------------------------------------------------
# Script extraction


def extract_script(tables: DPTables) -> tuple[EditScript, Mapping]:
    """Backtrack an optimal script and its mapping from completed tables.

    Ties break deterministically: match over delete over insert, and
    decomposition first at forest cells.
    """
    a, b = tables.a, tables.b
    match_cache: dict[tuple[int, int], float] = {}
    matches: list[tuple[int, int]] = []
    deletes: list[int] = []
    inserts: list[int] = []

    def walk_tree(i: int, j: int) -> None:
        fd = _forest_pass(tables, i, j, match_cache, keep=True)
        ioff = a.l[i] - 1
        joff = b.l[j] - 1
        x, y = i - ioff, j - joff
        while x > 0 or y > 0:
            gi, gj = x + ioff, y + joff
            if x > 0 and y > 0 and a.l[gi] == a.l[i] and b.l[gj] == b.l[j]:
                mc = tables.match_cost(gi, gj)
                if fd[x][y] == fd[x - 1][y - 1] + mc:
                    matches.append((gi, gj))
                    x -= 1
                    y -= 1
                elif fd[x][y] == fd[x - 1][y] + tables.del_costs[gi]:
                    deletes.append(gi)
                    x -= 1
                else:
                    inserts.append(gj)
                    y -= 1
            elif x > 0 and y > 0:
                px = a.l[gi] - 1 - ioff
                py = b.l[gj] - 1 - joff
                if fd[x][y] == fd[px][py] + tables.treedist[gi][gj]:
                    walk_tree(gi, gj)
                    x, y = px, py
                elif fd[x][y] == fd[x - 1][y] + tables.del_costs[gi]:
                    deletes.append(gi)
                    x -= 1
                else:
                    inserts.append(gj)
                    y -= 1
            elif x > 0:
                deletes.append(x + ioff)
                x -= 1
            else:
                inserts.append(y + joff)
                y -= 1

    walk_tree(a.root, b.root)
    groups = [GroupDecision(i, (), j, (), tables.match_cost(i, j))
              for i, j in matches]
    decisions = Decisions(groups=groups,
                          plain_deletes=[(d, tables.del_costs[d]) for d in deletes],
                          plain_inserts=[(v, tables.ins_costs[v]) for v in inserts])
    script, group_mapping = assemble_script(a, b, tables.model, decisions)
    mapping: Mapping = {(gi[0], gj[0]) for gi, gj in group_mapping}
    return script, mapping


def validate_mapping(a: IndexedTree, b: IndexedTree,
                     pairs: set[tuple[int, int]]) -> bool:
    """One-to-one, ancestor-preserving, sibling-order-preserving check."""
    seen_i = {p[0] for p in pairs}
    seen_j = {p[1] for p in pairs}
    if len(seen_i) != len(pairs) or len(seen_j) != len(pairs):
        return False

    def is_anc(t: IndexedTree, u: int, v: int) -> bool:
        return t.l[u] <= v < u

    plist = sorted(pairs)
    for u, uj in plist:
        for v, vj in plist:
            if (u < v) != (uj < vj) and u != v:
                return False
            if is_anc(a, u, v) != is_anc(b, uj, vj):
                return False
            if is_anc(a, v, u) != is_anc(b, vj, uj):
                return False
    return True


# ---------------------------------------------------------------------------
# Decision records and script assembly (shared with the fusion module)


@dataclass(frozen=True)
class MarkInfo:
    """One fusion/split applied to a group root.

    ``merged_pair`` is the root's (node, edge) label object after this
    mark; ``displaced`` lists the subtree nodes deleted by an edge fusion
    (empty on the T' side, where displaced nodes are plain inserts);
    ``identity`` is the T'-side node whose data the merged object carries
    after this mark (unused on the T side).
    """

    kind: str  # 'node' or 'edge'
    child: int
    cost: float
    merged_pair: LabelPair
    displaced: tuple[int, ...] = ()
    identity: int = 0


@dataclass(frozen=True)
class GroupDecision:
    i_root: int
    i_marks: tuple[MarkInfo, ...]
    j_root: int
    j_marks: tuple[MarkInfo, ...]
    match_cost: float


@dataclass
class Decisions:
    groups: list[GroupDecision] = field(default_factory=list)
    # (root, marks, cost of deleting/inserting the merged object)
    deleted_groups: list[tuple[int, tuple[MarkInfo, ...], float]] = field(default_factory=list)
    inserted_groups: list[tuple[int, tuple[MarkInfo, ...], float]] = field(default_factory=list)
    plain_deletes: list[tuple[int, float]] = field(default_factory=list)
    plain_inserts: list[tuple[int, float]] = field(default_factory=list)


def _group_block(a: IndexedTree, model: CostModel, root: int,
                 marks: tuple[MarkInfo, ...]) -> list[EditOp]:
    """Fusion ops for one T-side group, displaced deletions first."""
    from .fusion_distance import EdgeFusion, NodeFusion

    ops: list[EditOp] = []
    for mark in marks:
        if mark.kind == "edge":
            for d in sorted(mark.displaced, reverse=True):
                ops.append(Delete(cost=model.cost_del(a.pair(d)), node=d))
            ops.append(EdgeFusion(cost=mark.cost, rep=root, child=mark.child,
                                  node_label=mark.merged_pair[0],
                                  edge_label=mark.merged_pair[1]))
        else:
            ops.append(NodeFusion(cost=mark.cost, rep=root, child=mark.child,
                                  node_label=mark.merged_pair[0]))
    return ops


def _split_block(b: IndexedTree, root: int, marks: tuple[MarkInfo, ...]) -> list[EditOp]:
    """Split ops materializing a T'-side group, last fusion undone first."""
    from .fusion_distance import EdgeSplit, NodeSplit

    ops: list[EditOp] = []
    for k in range(len(marks) - 1, -1, -1):
        mark = marks[k]
        prev_pair = marks[k - 1].merged_pair if k else (b.labels[root], b.edge_labels[root])
        prev_identity = marks[k - 1].identity if k else root
        if mark.kind == "node":
            ops.append(NodeSplit(
                cost=mark.cost, focus=mark.identity, node=mark.child,
                node_label=b.labels[mark.child], edge_label=b.edge_labels[mark.child],
                tag=(b.l[mark.child], mark.child),
                focus_node_label=prev_pair[0]))
        else:
            ops.append(EdgeSplit(
                cost=mark.cost, below=mark.identity, node=prev_identity,
                node_label=prev_pair[0], edge_label=prev_pair[1],
                tag=(b.l[prev_identity], prev_identity),
                below_edge_label=b.edge_labels[mark.child],
                below_tag=(b.l[mark.child], mark.child)))
    return ops


def assemble_script(a: IndexedTree, b: IndexedTree, model: CostModel,
                    decisions: Decisions
                    ) -> tuple[EditScript, list[tuple[tuple[int, ...], tuple[int, ...]]]]:
    """Order the backtracked decisions into an executable script.

    T-side rewrites run first (fusion blocks, deletions, relabels), then
    T'-side materialization in preorder (splits and insertions).  Returns
    the script and the group mapping (merged objects map as one unit).
    """
    ops: list[EditOp] = []

    for root, marks, _ in sorted(decisions.deleted_groups):
        ops.extend(_group_block(a, model, root, marks))
    for g in sorted(decisions.groups, key=lambda g: g.i_root):
        ops.extend(_group_block(a, model, g.i_root, g.i_marks))
    for root, marks, cost in sorted(decisions.deleted_groups):
        ops.append(Delete(cost=cost, node=root))
    for node, cost in sorted(decisions.plain_deletes, reverse=True):
        ops.append(Delete(cost=cost, node=node))

    pre = {node: rank for rank, node in enumerate(b.preorder())}
    events: list[tuple[int, list[EditOp]]] = []
    relabels: list[EditOp] = []
    for g in sorted(decisions.groups, key=lambda g: g.i_root):
        identity = g.j_marks[-1].identity if g.j_marks else g.j_root
        merged = g.j_marks[-1].merged_pair if g.j_marks else (
            b.labels[g.j_root], b.edge_labels[g.j_root])
        relabels.append(Relabel(cost=g.match_cost, node=g.i_root, target=identity,
                                node_label=merged[0], edge_label=merged[1],
                                tag=(b.l[identity], identity)))
        if g.j_marks:
            events.append((pre[g.j_root], _split_block(b, g.j_root, g.j_marks)))
    ops.extend(relabels)

    for root, marks, cost in decisions.inserted_groups:
        identity = marks[-1].identity if marks else root
        merged = marks[-1].merged_pair if marks else (b.labels[root], b.edge_labels[root])
        parent = b.parent[root] if root != b.root else 0
        block: list[EditOp] = [Insert(
            cost=cost, node=identity, parent=parent,
            node_label=merged[0], edge_label=merged[1],
            tag=(b.l[identity], identity), adopt=(b.l[root], root))]
        block.extend(_split_block(b, root, marks))
        events.append((pre[root], block))
    for node, cost in decisions.plain_inserts:
        parent = b.parent[node] if node != b.root else 0
        events.append((pre[node], [Insert(
            cost=cost, node=node, parent=parent,
            node_label=b.labels[node], edge_label=b.edge_labels[node],
            tag=(b.l[node], node), adopt=(b.l[node], node))]))
    for _, block in sorted(events, key=lambda e: e[0]):
        ops.extend(block)

    mapping = []
    for g in decisions.groups:
        i_members = tuple(sorted([g.i_root] + [mk.child for mk in g.i_marks]))
        j_members = tuple(sorted([g.j_root] + [mk.child for mk in g.j_marks]))
        mapping.append((i_members, j_members))
    return EditScript(ops), mapping
