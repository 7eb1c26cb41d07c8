"""Ordered rooted labeled trees and the RNA tree encodings.

Trees carry a label on every node and on every non-root edge (the edge to
the parent).  Four encodings of a secondary structure are provided, from
per-base detail down to the multiloop skeleton, plus the postorder /
leftmost-leaf / keyroot indexing required by the edit distance algorithms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

from .rna_structures import ElementGraph, ElementKind, SecondaryStructure, decompose


@dataclass(frozen=True)
class Label:
    """A node or edge label: an element kind plus numeric payload."""

    kind: str
    size: tuple[int, ...] = ()

    @property
    def total(self) -> int:
        return sum(self.size)

    def __str__(self) -> str:
        if not self.size:
            return self.kind
        return f"{self.kind}({','.join(str(v) for v in self.size)})"


ROOT_LABEL = Label("root")


class TreeNode:
    """Mutable ordered tree node; edge_label labels the edge to the parent."""

    __slots__ = ("label", "edge_label", "children", "origin")

    def __init__(self, label: Label, edge_label: Optional[Label] = None,
                 children: Optional[list["TreeNode"]] = None,
                 origin: object = None):
        self.label = label
        self.edge_label = edge_label
        self.children = children if children is not None else []
        self.origin = origin

    def add(self, child: "TreeNode") -> "TreeNode":
        self.children.append(child)
        return self

    def walk(self) -> Iterator["TreeNode"]:
        yield self
        for c in self.children:
            yield from c.walk()

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)

    def copy(self) -> "TreeNode":
        return TreeNode(self.label, self.edge_label,
                        [c.copy() for c in self.children], self.origin)


@dataclass
class LabeledTree:
    """A rooted ordered tree tagged with the encoding it came from."""

    root: TreeNode
    rep: str = "generic"
    source_id: str = ""

    def size(self) -> int:
        return self.root.size()

    def copy(self) -> "LabeledTree":
        return LabeledTree(self.root.copy(), self.rep, self.source_id)


def trees_equal(a: TreeNode, b: TreeNode) -> bool:
    """Label-level isomorphism of ordered trees (node and edge labels)."""
    if a.label != b.label or a.edge_label != b.edge_label:
        return False
    if len(a.children) != len(b.children):
        return False
    return all(trees_equal(x, y) for x, y in zip(a.children, b.children))


@dataclass
class IndexedTree:
    """Postorder view of a LabeledTree, 1-based to match t_1..t_|T|.

    ``l[i]`` is the postorder index of the leftmost leaf of the subtree
    rooted at node i; ``keyroots`` is LR(T) in increasing order.
    """

    tree: LabeledTree
    n: int
    labels: list[Optional[Label]]
    edge_labels: list[Optional[Label]]
    l: list[int]
    parent: list[int]
    children: list[tuple[int, ...]]
    keyroots: list[int]
    nodes: list[Optional[TreeNode]]
    leaf_count: int
    height: int
    max_degree: int

    @property
    def root(self) -> int:
        return self.n

    def pair(self, i: int) -> tuple[Label, Optional[Label]]:
        """The (node label, edge label) object compared as one unit."""
        return (self.labels[i], self.edge_labels[i])

    def subtree_nodes(self, i: int) -> range:
        return range(self.l[i], i + 1)

    def preorder(self) -> list[int]:
        order: list[int] = []

        def visit(i: int) -> None:
            order.append(i)
            for c in self.children[i]:
                visit(c)

        visit(self.n)
        return order


def index(t: LabeledTree) -> IndexedTree:
    """Compute postorder arrays, leftmost leaves, LR(T) and tree stats."""
    n = t.size()
    labels: list[Optional[Label]] = [None] * (n + 1)
    edge_labels: list[Optional[Label]] = [None] * (n + 1)
    l = [0] * (n + 1)
    parent = [0] * (n + 1)
    children: list[tuple[int, ...]] = [()] * (n + 1)
    nodes: list[Optional[TreeNode]] = [None] * (n + 1)
    counter = 0
    height = 0
    max_degree = 0

    # Iterative postorder; each frame carries its parent's child-id collector.
    root_coll: list[int] = []
    stack: list[tuple[bool, TreeNode, int, list[int], Optional[list[int]]]] = [
        (False, t.root, 0, root_coll, None)]
    while stack:
        finished, node, depth, coll, parent_coll = stack.pop()
        if not finished:
            height = max(height, depth)
            max_degree = max(max_degree, len(node.children))
            own: list[int] = []
            stack.append((True, node, depth, own, coll))
            for c in reversed(node.children):
                stack.append((False, c, depth + 1, own, None))
        else:
            counter += 1
            i = counter
            labels[i] = node.label
            edge_labels[i] = node.edge_label
            children[i] = tuple(coll)
            nodes[i] = node
            for k in coll:
                parent[k] = i
            l[i] = l[coll[0]] if coll else i
            if parent_coll is not None:
                parent_coll.append(i)
    assert counter == n
    # LR(T): the highest-indexed node for each distinct leftmost leaf.
    last_for_leaf: dict[int, int] = {}
    for k in range(1, n + 1):
        last_for_leaf[l[k]] = k
    keyroots = sorted(last_for_leaf.values())
    leaf_count = sum(1 for i in range(1, n + 1) if not children[i])
    return IndexedTree(t, n, labels, edge_labels, l, parent, children,
                       keyroots, nodes, leaf_count, height, max_degree)


# ---------------------------------------------------------------------------
# RNA tree encodings


def build_rep_b(s: SecondaryStructure) -> LabeledTree:
    """Per-base tree: internal node per base pair, leaf per unpaired base."""
    table = s.partner()

    def region(lo: int, hi: int) -> list[TreeNode]:
        out: list[TreeNode] = []
        pos = lo
        while pos <= hi:
            j = table[pos]
            if j < 0:
                out.append(TreeNode(Label(s.sequence[pos]), origin=("base", pos)))
                pos += 1
            else:
                node = TreeNode(Label(f"{s.sequence[pos]}-{s.sequence[j]}"),
                                origin=("pair", pos, j))
                node.children = region(pos + 1, j - 1)
                out.append(node)
                pos = j + 1
        return out

    root = TreeNode(ROOT_LABEL, origin=("root",))
    root.children = region(0, s.length - 1)
    return LabeledTree(root, "b", s.id)


def build_rep_c(g: ElementGraph) -> LabeledTree:
    """Run tree: one node per maximal unpaired run or stacked-pair run."""
    s = g.structure
    table = s.partner()

    def runs(lo: int, hi: int) -> list[TreeNode]:
        out: list[TreeNode] = []
        pos = lo
        while pos <= hi:
            j = table[pos]
            if j < 0:
                start = pos
                while pos <= hi and table[pos] < 0:
                    pos += 1
                out.append(TreeNode(Label("run", (pos - start,)),
                                    origin=("run", start, pos - 1)))
            else:
                height = 1
                inner_i, inner_j = pos, j
                while table[inner_i + 1] == inner_j - 1 and inner_i + 1 < inner_j - 1:
                    inner_i += 1
                    inner_j -= 1
                    height += 1
                node = TreeNode(Label("stack", (height,)),
                                origin=("stack", pos, j))
                node.children = runs(inner_i + 1, inner_j - 1)
                out.append(node)
                pos = j + 1
        return out

    root = TreeNode(ROOT_LABEL, origin=("root",))
    root.children = runs(0, s.length - 1) if s.length else [
        TreeNode(Label("run", (0,)), origin=("run", 0, -1))]
    return LabeledTree(root, "c", s.id)


_KIND_NAMES = {
    ElementKind.HAIRPIN: "hairpin",
    ElementKind.INTERNAL: "internal",
    ElementKind.BULGE: "bulge",
    ElementKind.MULTILOOP: "multiloop",
    ElementKind.EXTERIOR: "root",
}


def build_rep_d(g: ElementGraph) -> LabeledTree:
    """Element tree: loops as nodes, helices as edge labels."""

    def build(eid: int) -> TreeNode:
        el = g.elements[eid]
        kind = _KIND_NAMES[el.kind]
        label = ROOT_LABEL if el.kind is ElementKind.EXTERIOR else Label(kind, el.sizes)
        node = TreeNode(label, origin=("element", eid))
        for helix_id, inner in g.children.get(eid, []):
            helix = g.elements[helix_id]
            child = build(inner)
            child.edge_label = Label("helix", helix.sizes)
            child.origin = ("element", inner, "helix", helix_id)
            node.add(child)
        return node

    return LabeledTree(build(g.root), "d", g.structure.id)


def build_rep_e(g: ElementGraph) -> LabeledTree:
    """Multiloop skeleton: Rep-D with internal loops and bulges contracted.

    Contracted helices concatenate; the merged edge size is the sum of the
    contracted helix sizes plus the contracted loop sizes.
    """
    rep_d = build_rep_d(g)

    def contract(node: TreeNode) -> TreeNode:
        out = TreeNode(node.label, node.edge_label, origin=node.origin)
        for child in node.children:
            size = child.edge_label.total
            origin_ids = [child.origin]
            inner = child
            while inner.label.kind in ("internal", "bulge"):
                # exactly one child below an internal loop or bulge
                (nxt,) = inner.children
                size += inner.label.total + nxt.edge_label.total
                inner = nxt
                origin_ids.append(inner.origin)
            built = contract(inner)
            built.edge_label = Label("helix", (size,))
            built.origin = ("contracted", tuple(origin_ids))
            out.add(built)
        return out

    return LabeledTree(contract(rep_d.root), "e", g.structure.id)


_BUILDERS: dict[str, Callable[[SecondaryStructure], LabeledTree]] = {}


def build(s: SecondaryStructure, rep: str) -> LabeledTree:
    """Build the requested encoding ('b', 'c', 'd' or 'e') of a structure."""
    if rep == "b":
        return build_rep_b(s)
    g = decompose(s)
    if rep == "c":
        return build_rep_c(g)
    if rep == "d":
        return build_rep_d(g)
    if rep == "e":
        return build_rep_e(g)
    raise ValueError(f"unknown representation {rep!r}")


# ---------------------------------------------------------------------------
# Serialization


def to_parenthesized(t: LabeledTree) -> str:
    """Compact one-line text form, labels as kind(sizes), edges after '@'."""

    def fmt(node: TreeNode) -> str:
        head = str(node.label)
        if node.edge_label is not None:
            head += f"@{node.edge_label}"
        if not node.children:
            return head
        return f"{head}[{' '.join(fmt(c) for c in node.children)}]"

    return fmt(t.root)


_DOT_SHAPES = {
    "bulge": "triangle",
    "internal": "diamond",
    "hairpin": "box",
    "multiloop": "circle",
    "root": "doublecircle",
}


def to_dot(t: LabeledTree, name: str = "tree",
           colors: Optional[dict[int, str]] = None) -> str:
    """Graphviz text; node shapes follow the element-kind conventions."""
    lines = [f"digraph {name} {{", "  node [fontsize=10];"]
    counter = 0

    def visit(node: TreeNode, parent_id: Optional[int]) -> None:
        nonlocal counter
        nid = counter
        counter += 1
        shape = _DOT_SHAPES.get(node.label.kind, "ellipse")
        attrs = [f'label="{node.label}"', f"shape={shape}"]
        if colors and nid in colors:
            attrs.append(f'style=filled fillcolor="{colors[nid]}"')
        lines.append(f"  n{nid} [{' '.join(attrs)}];")
        if parent_id is not None:
            edge = f' [label="{node.edge_label}"]' if node.edge_label else ""
            lines.append(f"  n{parent_id} -> n{nid}{edge};")
        for c in node.children:
            visit(c, nid)

    visit(t.root, None)
    lines.append("}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Forest:
    """A postorder index range t_lo..t_hi of an IndexedTree."""

    tree: IndexedTree
    lo: int
    hi: int

    def indices(self) -> range:
        return range(self.lo, self.hi + 1)

    def roots(self) -> list[int]:
        """Top-level subtree roots inside the range, left to right."""
        out = []
        i = self.hi
        while i >= self.lo:
            out.append(i)
            i = self.tree.l[i] - 1
        return list(reversed(out))
