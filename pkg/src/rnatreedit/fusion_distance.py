"""Edit distance with node fusion, edge fusion and their splits.

The dynamic program extends the keyroot decomposition with two extra
moves at single-tree states: the root may absorb one of its current
children by node fusion (the child's children are exposed, the root label
is re-merged) or by edge fusion (the root vanishes into a merged edge,
the displaced sibling subtrees are deleted at full cost).  The symmetric
splits apply on the second tree.  A per-root fusion path, bounded by a
small cap, records the chain of fusions so merged labels and the exposed
child list can be maintained incrementally.

States are memoized top-down.  A state is either a single tree (root
index plus fusion path, which determines the surviving node set) or a
forest (a contiguous postorder range minus at most cap interior holes,
the residue of a matched or deleted fused root).  Hole sets never
intersect a remaining complete subtree, which keeps every state compact.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from itertools import accumulate
from typing import Optional

from .cost_models import CostModel, LabelPair
from .edit_distance import (Decisions, EditOp, EditScript, GroupDecision,
                            MarkInfo, MalformedIndexError, ReplayContext,
                            ReplayNode, assemble_script, _warn_unvalidated)
from .tree_model import IndexedTree, Label

# A fusion path is a tuple of marks; each mark is ('u', v) for a node
# fusion with child v or ('e', v) for an edge fusion.
FusionMark = tuple[str, int]
FusionPath = tuple[FusionMark, ...]

NODE_MARK = "u"
EDGE_MARK = "e"

_EMPTY = ("f", 1, 0, ())


class PathBudgetExceededError(RuntimeError):
    pass


@dataclass(frozen=True)
class FusionParams:
    """Fusion cap and pruning switch.

    ``cap`` bounds consecutive fusions per node; values above 2 are legal
    but slow.  ``prune`` drops edge fusions that immediately follow a node
    fusion, which is sound for cost models meeting the subadditivity
    condition.
    """

    cap: int = 1
    prune: bool = True

    def __post_init__(self):
        if not (0 <= self.cap <= 3):
            raise ValueError(f"fusion cap must be in [0, 3], got {self.cap}")
        if self.cap > 2:
            warnings.warn(f"fusion cap {self.cap} is expensive; "
                          "expect exponential path bookkeeping", stacklevel=2)


def path_count_bound(d: int, cap: int) -> int:
    """Exact count of possible fusion paths of length <= cap at degree d.

    Two mark kinds per step and sum(d**j for j in 1..k) candidate nodes
    for the k-th fusion.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    if cap < 0:
        raise ValueError("cap must be >= 0")
    total = 1
    for k in range(1, cap + 1):
        choices = sum(d ** j for j in range(1, k + 1))
        total *= 2 * choices
    return total


@dataclass(frozen=True)
class MergedNodeState:
    """Effective data of a root after its fusion path.

    ``children`` are the current fusion candidates in sibling order;
    ``cf`` describes the node set below the merged root as a range minus
    holes; ``identity`` is the original node whose label the merged
    object currently carries (it changes on edge fusions).
    """

    merged: LabelPair
    children: tuple[int, ...]
    cf: tuple[int, int, tuple[int, ...]]
    identity: int


class _Side:
    """Per-tree bookkeeping: removal prices, path states, normalization."""

    def __init__(self, tree: IndexedTree, model: CostModel, left: bool):
        self.t = tree
        self.model = model
        self.left = left
        pair = tree.pair
        price = model.cost_del if left else model.cost_ins
        self.price_pair = price
        self.cost1 = [0.0] * (tree.n + 1)
        for i in range(1, tree.n + 1):
            self.cost1[i] = price(pair(i))
        self.prefix = list(accumulate(self.cost1))
        self.fuse_node = model.cost_node_fusion if left else model.cost_node_split
        self.fuse_edge = model.cost_edge_fusion if left else model.cost_edge_split
        self.infos: dict[tuple[int, FusionPath], MergedNodeState] = {}
        # States are interned to integer ids; id 0 is the empty forest.
        # All hot-path caches are id-keyed.
        self.states: list[tuple] = [_EMPTY]
        self.state_ids: dict[tuple, int] = {_EMPTY: 0}
        self._cf_id: dict[tuple[int, FusionPath], int] = {}
        self._merged_price: dict[tuple[int, FusionPath], float] = {}
        self._split: dict[int, tuple[int, int]] = {}
        self._removed: dict[int, tuple[float, int]] = {}
        self._remove_all: dict[int, float] = {}
        self._moves: dict[tuple[int, FusionPath, bool], tuple] = {}

    def intern(self, state: tuple) -> int:
        sid = self.state_ids.get(state)
        if sid is None:
            sid = len(self.states)
            self.state_ids[state] = sid
            self.states.append(state)
        return sid

    def info(self, r: int, path: FusionPath) -> MergedNodeState:
        key = (r, path)
        cached = self.infos.get(key)
        if cached is not None:
            return cached
        t = self.t
        if not path:
            state = MergedNodeState((t.labels[r], t.edge_labels[r]),
                                    t.children[r], (t.l[r], r - 1, ()), r)
        else:
            prev = self.info(r, path[:-1])
            kind, v = path[-1]
            if v not in prev.children:
                raise PathBudgetExceededError(f"{v} is not a child of ({r}, {path[:-1]})")
            node_lbl, edge_lbl = prev.merged
            if kind == NODE_MARK:
                merged = (self.model.merge_node(node_lbl, t.edge_labels[v], t.labels[v]),
                          edge_lbl)
                pos = prev.children.index(v)
                children = prev.children[:pos] + t.children[v] + prev.children[pos + 1:]
                a, b, holes = prev.cf
                cf = (a, b, tuple(sorted(holes + (v,))))
                identity = prev.identity
            else:
                merged = (t.labels[v],
                          self.model.merge_edge(edge_lbl, node_lbl, t.edge_labels[v]))
                children = t.children[v]
                cf = (t.l[v], v - 1, ())
                identity = v
            state = MergedNodeState(merged, children, cf, identity)
        self.infos[key] = state
        return state

    def make_forest(self, a: int, b: int, holes: tuple[int, ...]) -> tuple:
        holes = tuple(h for h in holes if a <= h <= b)
        while a <= b and (b in holes or a in holes):
            if b in holes:
                b -= 1
            elif a in holes:
                a += 1
            holes = tuple(h for h in holes if a <= h <= b)
        if a > b:
            return _EMPTY
        if self.t.l[b] == a:
            # complete subtree; holes inside would break the invariant
            if holes:
                raise MalformedIndexError(f"holes {holes} inside subtree {b}")
            return ("t", b, ())
        return ("f", a, b, holes)

    def children_state(self, r: int, path: FusionPath) -> tuple:
        return self.states[self.children_id(r, path)]

    def children_id(self, r: int, path: FusionPath) -> int:
        key = (r, path)
        sid = self._cf_id.get(key)
        if sid is None:
            a, b, holes = self.info(r, path).cf
            sid = self.intern(self.make_forest(a, b, holes))
            self._cf_id[key] = sid
        return sid

    def merged_price(self, r: int, path: FusionPath) -> float:
        key = (r, path)
        price = self._merged_price.get(key)
        if price is None:
            price = self.price_pair(self.info(r, path).merged)
            self._merged_price[key] = price
        return price

    def split_id(self, sid: int) -> tuple[int, int]:
        """Ids of the left part and the rightmost complete tree."""
        cached = self._split.get(sid)
        if cached is None:
            k = self.states[sid]
            if k[0] == "t":
                cached = (0, sid)
            else:
                _, a, b, holes = k
                lb = self.t.l[b]
                cached = (self.intern(self.make_forest(a, lb - 1, holes)),
                          self.intern(("t", b, ())))
            self._split[sid] = cached
        return cached

    def remove_root_id(self, sid: int) -> tuple[float, int]:
        """Price of removing the rightmost root, and the remaining state."""
        cached = self._removed.get(sid)
        if cached is None:
            k = self.states[sid]
            if k[0] == "t":
                cached = (self.merged_price(k[1], k[2]),
                          self.children_id(k[1], k[2]))
            else:
                _, a, b, holes = k
                cached = (self.cost1[b],
                          self.intern(self.make_forest(a, b - 1, holes)))
            self._removed[sid] = cached
        return cached

    def range_sum(self, a: int, b: int, holes: tuple[int, ...]) -> float:
        if a > b:
            return 0.0
        total = self.prefix[b] - self.prefix[a - 1]
        for h in holes:
            total -= self.cost1[h]
        return total

    def fusion_moves(self, r: int, path: FusionPath, prune: bool,
                     root_id: int) -> tuple:
        """Fusion branches from a single-tree state, one per candidate
        child: (descriptor, cost, resulting state id).  Reusable against
        any opposite-side state."""
        key = (r, path, prune)
        cached = self._moves.get(key)
        if cached is None:
            info = self.info(r, path)
            kinds = ("nfu", "efu") if self.left else ("nsp", "esp")
            moves = []
            pair = self.t.pair
            for c in info.children:
                child = self.intern(("t", r, path + ((NODE_MARK, c),)))
                moves.append(((kinds[0], c),
                              self.fuse_node(info.merged, pair(c)), child))
            allow_edge = r != root_id and not (
                prune and path and path[-1][0] == NODE_MARK)
            if allow_edge:
                for c in info.children:
                    child = self.intern(("t", r, path + ((EDGE_MARK, c),)))
                    moves.append(((kinds[1], c),
                                  self.fuse_edge(info.merged, pair(c))
                                  + self.displaced_cost(info, c), child))
            cached = tuple(moves)
            self._moves[key] = cached
        return cached

    def remove_all_id(self, sid: int) -> float:
        total = self._remove_all.get(sid)
        if total is None:
            state = self.states[sid]
            if state[0] == "f":
                total = self.range_sum(state[1], state[2], state[3])
            else:
                info = self.info(state[1], state[2])
                total = (self.merged_price(state[1], state[2])
                         + self.range_sum(*info.cf))
            self._remove_all[sid] = total
        return total

    def displaced_cost(self, info: MergedNodeState, child: int) -> float:
        a, b, holes = info.cf
        t = self.t
        return self.range_sum(a, b, holes) - self.range_sum(t.l[child], child, ())

    def displaced_ids(self, info: MergedNodeState, child: int) -> tuple[int, ...]:
        a, b, holes = info.cf
        lo, hi = self.t.l[child], child
        return tuple(x for x in range(a, b + 1)
                     if x not in holes and not lo <= x <= hi)

    def forest_members(self, state: tuple) -> list[int]:
        _, a, b, holes = state
        return [x for x in range(a, b + 1) if x not in holes]


@dataclass
class FusionDPState:
    """Completed fusion DP: memo plus everything extraction needs."""

    a: IndexedTree
    b: IndexedTree
    model: CostModel
    params: FusionParams
    distance: float = 0.0
    memo: dict = field(default_factory=dict)
    side_a: Optional[_Side] = None
    side_b: Optional[_Side] = None


def fusion_dp(a: IndexedTree, b: IndexedTree, m: CostModel,
              p: FusionParams = FusionParams()) -> tuple[float, FusionDPState]:
    """Distance over all seven operations with fusion paths capped at p.cap."""
    _warn_unvalidated(m)
    state = FusionDPState(a, b, m, p)
    state.side_a = _Side(a, m, left=True)
    state.side_b = _Side(b, m, left=False)
    solver = _Solver(state)
    root_key = solver.pack(state.side_a.intern(("t", a.root, ())),
                           state.side_b.intern(("t", b.root, ())))
    state.distance = solver.solve(root_key)
    if __debug__:
        _check_path_budget(state)
    return state.distance, state


def _check_path_budget(state: FusionDPState) -> None:
    for side in (state.side_a, state.side_b):
        d = max(2, side.t.max_degree)
        # All path lengths up to the cap may be held at once.
        budget = sum(path_count_bound(d, k) for k in range(state.params.cap + 1))
        per_root: dict[int, int] = {}
        for r, _path in side.infos:
            per_root[r] = per_root.get(r, 0) + 1
        for r, n_paths in per_root.items():
            assert n_paths <= budget, (r, n_paths, budget)


_DECOMPOSE = ("decompose",)
_DEL4 = ("del4",)
_INS4 = ("ins4",)
_MATCH = ("match",)
_DEL = ("del",)
_INS = ("ins",)


_SHIFT = 24
_MASK = (1 << _SHIFT) - 1


class _Solver:
    """Pair states are packed ints: (left state id << 24) | right state id."""

    def __init__(self, state: FusionDPState):
        self.state = state
        self.sa = state.side_a
        self.sb = state.side_b
        self.cap = state.params.cap
        self.prune = state.params.prune
        self.model = state.model
        self.memo = state.memo
        self.match_cache: dict[tuple[LabelPair, LabelPair], float] = {}

    @staticmethod
    def pack(ida: int, idb: int) -> int:
        return (ida << _SHIFT) | idb

    def unpack(self, key: int) -> tuple[tuple, tuple]:
        return self.sa.states[key >> _SHIFT], self.sb.states[key & _MASK]

    def match_cost(self, pa: LabelPair, pb: LabelPair) -> float:
        key = (pa, pb)
        v = self.match_cache.get(key)
        if v is None:
            v = self.model.cost_match(pa, pb)
            self.match_cache[key] = v
        return v

    def leaf_value(self, key: int) -> Optional[float]:
        ida = key >> _SHIFT
        idb = key & _MASK
        if ida == 0:
            return 0.0 if idb == 0 else self.sb.remove_all_id(idb)
        if idb == 0:
            return self.sa.remove_all_id(ida)
        return None

    def branches(self, key: int) -> list[tuple[tuple, float, tuple]]:
        """All recurrence lines at this state as (descriptor, const, sub-pairs).

        The enumeration order fixes tie-breaking: match, delete, insert,
        then fusions and splits child by child; at forest states the
        decomposition comes first.
        """
        sa, sb = self.sa, self.sb
        ida = key >> _SHIFT
        idb = key & _MASK
        ka = sa.states[ida]
        kb = sb.states[idb]
        out: list[tuple[tuple, float, tuple]] = []
        if ka[0] == "t" and kb[0] == "t":
            ra, pa = ka[1], ka[2]
            rb, pb = kb[1], kb[2]
            ia = sa.info(ra, pa)
            ib = sb.info(rb, pb)
            cfa = sa.children_id(ra, pa) << _SHIFT
            cfb = sb.children_id(rb, pb)
            out.append((_MATCH, self.match_cost(ia.merged, ib.merged),
                        (cfa | cfb,)))
            out.append((_DEL, sa.merged_price(ra, pa), (cfa | idb,)))
            out.append((_INS, sb.merged_price(rb, pb), ((ida << _SHIFT) | cfb,)))
            if len(pa) < self.cap:
                for desc, cost, child in sa.fusion_moves(ra, pa, self.prune,
                                                         sa.t.root):
                    out.append((desc, cost, ((child << _SHIFT) | idb,)))
            if len(pb) < self.cap:
                for desc, cost, child in sb.fusion_moves(rb, pb, self.prune,
                                                         sb.t.root):
                    out.append((desc, cost, ((ida << _SHIFT) | child,)))
            return out
        # Forest case: decompose at the rightmost complete subtrees, or
        # remove a rightmost root.
        left_a, right_a = sa.split_id(ida)
        left_b, right_b = sb.split_id(idb)
        out.append((_DECOMPOSE, 0.0,
                    ((left_a << _SHIFT) | left_b, (right_a << _SHIFT) | right_b)))
        cost_a, rest_a = sa.remove_root_id(ida)
        out.append((_DEL4, cost_a, ((rest_a << _SHIFT) | idb,)))
        cost_b, rest_b = sb.remove_root_id(idb)
        out.append((_INS4, cost_b, ((ida << _SHIFT) | rest_b,)))
        return out

    def solve(self, root_key: int) -> float:
        memo = self.memo
        v = self.leaf_value(root_key)
        if v is not None:
            return v
        if root_key in memo:
            return memo[root_key]
        sa, sb = self.sa, self.sb
        states_a, states_b = sa.states, sb.states
        remove_a = sa.remove_all_id
        remove_b = sb.remove_all_id
        split_a, split_b = sa.split_id, sb.split_id
        root_a, root_b = sa.remove_root_id, sb.remove_root_id

        def make_frame(key: int) -> list:
            # Forest frames are flat: [key, None, kids, ptr, c_del, c_ins];
            # single-tree frames carry the full branch list.
            ida = key >> _SHIFT
            idb = key & _MASK
            if states_a[ida][0] == "t" and states_b[idb][0] == "t":
                branch_list = self.branches(key)
                kids = [p for _d, _c, pairs in branch_list for p in pairs]
                return [key, branch_list, kids, 0, 0.0, 0.0]
            left_a, right_a = split_a(ida)
            left_b, right_b = split_b(idb)
            cost_a, rest_a = root_a(ida)
            cost_b, rest_b = root_b(idb)
            kids = [(left_a << _SHIFT) | left_b,
                    (right_a << _SHIFT) | right_b,
                    (rest_a << _SHIFT) | idb,
                    (ida << _SHIFT) | rest_b]
            return [key, None, kids, 0, cost_a, cost_b]

        # Iterative postorder over the state graph to avoid deep recursion.
        stack: list[list] = [make_frame(root_key)]
        while stack:
            frame = stack[-1]
            key = frame[0]
            if key in memo:
                stack.pop()
                continue
            kids = frame[2]
            ptr = frame[3]
            n_kids = len(kids)
            pushed = False
            while ptr < n_kids:
                k = kids[ptr]
                if k in memo:
                    ptr += 1
                    continue
                ia = k >> _SHIFT
                ib = k & _MASK
                if ia == 0:
                    memo[k] = 0.0 if ib == 0 else remove_b(ib)
                    ptr += 1
                    continue
                if ib == 0:
                    memo[k] = remove_a(ia)
                    ptr += 1
                    continue
                frame[3] = ptr
                stack.append(make_frame(k))
                pushed = True
                break
            if pushed:
                continue
            frame[3] = ptr
            branch_list = frame[1]
            if branch_list is None:
                best = memo[kids[0]] + memo[kids[1]]
                alt = frame[4] + memo[kids[2]]
                if alt < best:
                    best = alt
                alt = frame[5] + memo[kids[3]]
                if alt < best:
                    best = alt
            else:
                best = None
                for _desc, const, pairs in branch_list:
                    total = const
                    for p in pairs:
                        total += memo[p]
                    if best is None or total < best:
                        best = total
            memo[key] = best
            stack.pop()
        return memo[root_key]

    def branch_value(self, const: float, pairs: tuple) -> float:
        total = const
        for p in pairs:
            v = self.memo.get(p)
            if v is None:
                v = self.leaf_value(p)
            total += v
        return total


# ---------------------------------------------------------------------------
# Fusion edit operations


@dataclass(frozen=True)
class NodeFusion(EditOp):
    """Merge child ``child`` into ``rep``; the child's children move up."""

    kind = "node_fusion"

    rep: int = 0
    child: int = 0
    node_label: Optional[Label] = None

    def to_json(self) -> dict:
        return {"op": "node_fusion", "i_nodes": [self.rep, self.child],
                "cost": self.cost}

    def apply(self, ctx: ReplayContext) -> None:
        w = ctx.registry_i[self.rep]
        c = ctx.take_i(self.child)
        pos = w.children.index(c)
        for k in c.children:
            k.parent = w
        w.children[pos:pos + 1] = c.children
        w.label = self.node_label


@dataclass(frozen=True)
class EdgeFusion(EditOp):
    """Fuse the edges above and below ``rep``; only ``child`` survives it.

    Displaced sibling subtrees must already be deleted when this applies.
    """

    kind = "edge_fusion"

    rep: int = 0
    child: int = 0
    node_label: Optional[Label] = None
    edge_label: Optional[Label] = None

    def to_json(self) -> dict:
        return {"op": "edge_fusion", "i_nodes": [self.rep, self.child],
                "cost": self.cost}

    def apply(self, ctx: ReplayContext) -> None:
        w = ctx.registry_i[self.rep]
        c = ctx.take_i(self.child)
        if w.children != [c]:
            raise MalformedIndexError("edge fusion with undeleted siblings")
        for k in c.children:
            k.parent = w
        w.children = c.children
        w.label = self.node_label
        w.edge_label = self.edge_label


@dataclass(frozen=True)
class NodeSplit(EditOp):
    """Inverse node fusion: re-create ``node`` below the merged object."""

    kind = "node_split"

    focus: int = 0
    node: int = 0
    node_label: Optional[Label] = None
    edge_label: Optional[Label] = None
    tag: tuple[int, int] = (0, 0)
    focus_node_label: Optional[Label] = None

    def to_json(self) -> dict:
        return {"op": "node_split", "j_nodes": [self.focus, self.node],
                "cost": self.cost}

    def apply(self, ctx: ReplayContext) -> None:
        w = ctx.registry_j[self.focus]
        start, end = ctx.adoption_run(w, self.tag)
        new = ReplayNode(self.node_label, self.edge_label, tag=self.tag)
        new.children = w.children[start:end]
        for k in new.children:
            k.parent = new
        new.parent = w
        w.children[start:end] = [new]
        w.label = self.focus_node_label
        ctx.registry_j[self.node] = new


@dataclass(frozen=True)
class EdgeSplit(EditOp):
    """Inverse edge fusion: re-create ``node`` above the merged object."""

    kind = "edge_split"

    below: int = 0
    node: int = 0
    node_label: Optional[Label] = None
    edge_label: Optional[Label] = None
    tag: tuple[int, int] = (0, 0)
    below_edge_label: Optional[Label] = None
    below_tag: tuple[int, int] = (0, 0)

    def to_json(self) -> dict:
        return {"op": "edge_split", "j_nodes": [self.node, self.below],
                "cost": self.cost}

    def apply(self, ctx: ReplayContext) -> None:
        w = ctx.registry_j[self.below]
        new = ReplayNode(self.node_label, self.edge_label, tag=self.tag)
        parent = w.parent
        pos = parent.children.index(w)
        parent.children[pos] = new
        new.parent = parent
        new.children = [w]
        w.parent = new
        w.edge_label = self.below_edge_label
        w.tag = self.below_tag
        ctx.registry_j[self.node] = new


# ---------------------------------------------------------------------------
# Extraction

GroupMapping = list[tuple[tuple[int, ...], tuple[int, ...]]]


def extract_fusion_script(state: FusionDPState) -> tuple[EditScript, GroupMapping]:
    """Backtrack the memoized DP into a script and a group mapping.

    Fused groups map as single units: each mapping entry pairs the tuple
    of T nodes merged into one object with the tuple of T' nodes that
    object was matched to.
    """
    solver = _Solver(state)
    solver.memo = state.memo
    sa, sb = state.side_a, state.side_b
    decisions = Decisions()

    def marks_for(side: _Side, r: int, path: FusionPath) -> tuple[MarkInfo, ...]:
        out = []
        for k in range(len(path)):
            prefix = path[:k]
            kind, child = path[k]
            info = side.info(r, prefix)
            after = side.info(r, path[:k + 1])
            if kind == NODE_MARK:
                cost = side.fuse_node(info.merged, side.t.pair(child))
                displaced: tuple[int, ...] = ()
            else:
                cost = side.fuse_edge(info.merged, side.t.pair(child))
                displaced = side.displaced_ids(info, child)
            out.append(MarkInfo("node" if kind == NODE_MARK else "edge",
                                child, cost, after.merged, displaced,
                                after.identity))
        return tuple(out)

    def record_j_displaced(marks: tuple[MarkInfo, ...]) -> None:
        for mk in marks:
            for d in mk.displaced:
                decisions.plain_inserts.append((d, sb.cost1[d]))

    def spill(side: _Side, key: tuple, into: list, grouped: list) -> None:
        """Emit removal decisions for a whole state (opposite side empty)."""
        if key == _EMPTY:
            return
        if key[0] == "t":
            r, path = key[1], key[2]
            info = side.info(r, path)
            if path:
                marks = marks_for(side, r, path)
                grouped.append((r, marks, side.price_pair(info.merged)))
                if not side.left:
                    record_j_displaced(marks)
                spill(side, side.children_state(r, path), into, grouped)
            else:
                for x in side.t.subtree_nodes(r):
                    into.append((x, side.cost1[x]))
        else:
            for x in side.forest_members(key):
                into.append((x, side.cost1[x]))

    def walk(key: int) -> None:
        ka, kb = solver.unpack(key)
        if ka == _EMPTY and kb == _EMPTY:
            return
        if ka == _EMPTY:
            spill(sb, kb, decisions.plain_inserts, decisions.inserted_groups)
            return
        if kb == _EMPTY:
            spill(sa, ka, decisions.plain_deletes, decisions.deleted_groups)
            return
        target = state.memo.get(key)
        if target is None:
            target = solver.leaf_value(key)
        for desc, const, pairs in solver.branches(key):
            if solver.branch_value(const, pairs) == target:
                _record(desc, ka, kb, pairs)
                return
        raise MalformedIndexError(f"no branch reproduces the value at {key}")

    def _record(desc: tuple, ka: tuple, kb: tuple, pairs: tuple) -> None:
        op = desc[0]
        if op == "match":
            ra, pa = ka[1], ka[2]
            rb, pb = kb[1], kb[2]
            i_marks = marks_for(sa, ra, pa)
            j_marks = marks_for(sb, rb, pb)
            cost = solver.match_cost(sa.info(ra, pa).merged, sb.info(rb, pb).merged)
            decisions.groups.append(GroupDecision(ra, i_marks, rb, j_marks, cost))
            record_j_displaced(j_marks)
        elif op in ("del", "del4"):
            if ka[0] == "t":
                ra, pa = ka[1], ka[2]
                cost = sa.price_pair(sa.info(ra, pa).merged)
                if pa:
                    decisions.deleted_groups.append((ra, marks_for(sa, ra, pa), cost))
                else:
                    decisions.plain_deletes.append((ra, cost))
            else:
                b_node = ka[2]
                decisions.plain_deletes.append((b_node, sa.cost1[b_node]))
        elif op in ("ins", "ins4"):
            if kb[0] == "t":
                rb, pb = kb[1], kb[2]
                cost = sb.price_pair(sb.info(rb, pb).merged)
                if pb:
                    marks = marks_for(sb, rb, pb)
                    decisions.inserted_groups.append((rb, marks, cost))
                    record_j_displaced(marks)
                else:
                    decisions.plain_inserts.append((rb, cost))
            else:
                b_node = kb[2]
                decisions.plain_inserts.append((b_node, sb.cost1[b_node]))
        # fusion/split/decompose branches record nothing here; the path is
        # carried in the child state and resolved at its terminal line.
        for p in pairs:
            walk(p)

    walk(solver.pack(sa.intern(("t", sa.t.root, ())),
                     sb.intern(("t", sb.t.root, ()))))
    script, mapping = assemble_script(sa.t, sb.t, state.model, decisions)
    return script, mapping
