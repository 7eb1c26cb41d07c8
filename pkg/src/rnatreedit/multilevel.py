"""Two-pass structural comparison.

First the coarse trees of two structures are compared with fusions and
the resulting mapping colors the structural elements: two elements share
a color exactly when the coarse pass mapped them together (a fused group
shares one color).  Then the per-base trees are compared with matching
restricted to equal colors, so bases of structurally unrelated regions
can no longer pair up.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .cost_models import CostModel, LabelPair
from .edit_distance import DPTables, Mapping, extract_script, zs_distance
from .fusion_distance import FusionParams, extract_fusion_script, fusion_dp
from .rna_structures import SecondaryStructure, decompose
from .tree_model import (IndexedTree, Label, LabeledTree, TreeNode, build_rep_b,
                         build_rep_c, build_rep_d, index)


class ColorSetMismatchError(ValueError):
    pass


@dataclass
class ColorAssignment:
    """Element colors for both structures; None marks deleted/inserted."""

    token: tuple
    colors_a: dict[int, int] = field(default_factory=dict)
    colors_b: dict[int, int] = field(default_factory=dict)
    n_colors: int = 0


@dataclass
class ColoredRepB:
    """A per-base tree whose node labels carry the element color."""

    tree: LabeledTree
    token: tuple


def _element_of_coarse_node(tree: IndexedTree, node: int,
                            owner_of_base: list[int]) -> set[int]:
    """Structural element ids represented by one coarse tree node or edge."""
    origin = tree.nodes[node].origin
    out: set[int] = set()
    if not origin:
        return out
    kind = origin[0]
    if kind == "element":
        out.add(origin[1])
        if len(origin) > 2 and origin[2] == "helix":
            out.add(origin[3])
    elif kind in ("run", "stack"):
        lo, hi = origin[1], origin[2]
        for base in range(lo, hi + 1):
            out.add(owner_of_base[base])
    elif kind == "root":
        out.add(0)
    return out


def coarse_pass(a: SecondaryStructure, b: SecondaryStructure, rep: str,
                m: CostModel, p: FusionParams
                ) -> tuple[list[tuple[tuple[int, ...], tuple[int, ...]]], ColorAssignment]:
    """Fusion comparison of the coarse trees; colors follow the mapping."""
    if rep not in ("c", "d"):
        raise ValueError("coarse pass expects representation 'c' or 'd'")
    ga, gb = decompose(a), decompose(b)
    build = build_rep_c if rep == "c" else build_rep_d
    ta, tb = index(build(ga)), index(build(gb))
    _, state = fusion_dp(ta, tb, m, p)
    _, mapping = extract_fusion_script(state)

    owner_a = ga.element_of_base()
    owner_b = gb.element_of_base()
    token = (a.id or "a", b.id or "b", rep, m.name, m.t, p.cap)
    assignment = ColorAssignment(token)
    color = 0
    for group_a, group_b in sorted(mapping):
        els_a: set[int] = set()
        els_b: set[int] = set()
        for node in group_a:
            els_a |= _element_of_coarse_node(ta, node, owner_a)
        for node in group_b:
            els_b |= _element_of_coarse_node(tb, node, owner_b)
        if not els_a or not els_b:
            continue
        for e in els_a:
            assignment.colors_a.setdefault(e, color)
        for e in els_b:
            assignment.colors_b.setdefault(e, color)
        color += 1
    assignment.n_colors = color
    return mapping, assignment


def color_rep_b(s: SecondaryStructure, colors: dict[int, int],
                token: tuple) -> ColoredRepB:
    """Attach element colors to every node of the per-base tree."""
    g = decompose(s)
    owner = g.element_of_base()
    tree = build_rep_b(s)

    def paint(node: TreeNode) -> None:
        origin = node.origin
        if origin and origin[0] == "base":
            element = owner[origin[1]]
        elif origin and origin[0] == "pair":
            element = owner[origin[1]]
        else:
            element = 0
        color = colors.get(element)
        node.label = Label(node.label.kind, node.label.size + _color_tag(color))
        node.origin = (origin, color)
        for c in node.children:
            paint(c)

    paint(tree.root)
    return ColoredRepB(tree, token)


def _color_tag(color: Optional[int]) -> tuple[int, ...]:
    # encoded into the label payload so cost models stay label-driven
    return (-1,) if color is None else (color,)


def _strip_color(pair: LabelPair) -> tuple[LabelPair, Optional[int]]:
    node, edge = pair
    if node is None:
        return pair, None
    color = node.size[-1]
    base = Label(node.kind, node.size[:-1])
    return (base, edge), (None if color < 0 else color)


def color_restricted_model(base: CostModel, surrogate: float) -> CostModel:
    """Wrap a model so differently colored (or uncolored) nodes never match."""

    def match(a: LabelPair, b: LabelPair) -> float:
        pa, ca = _strip_color(a)
        pb, cb = _strip_color(b)
        if ca is None or cb is None or ca != cb:
            return surrogate
        return base.match_fn(pa, pb)

    def del_(a: LabelPair) -> float:
        return base.del_fn(_strip_color(a)[0])

    def ins(a: LabelPair) -> float:
        return base.ins_fn(_strip_color(a)[0])

    return CostModel(name=f"{base.name}+colors", t=base.t, cap=base.cap,
                     match_fn=match, del_fn=del_, ins_fn=ins,
                     params=base.params, assume_valid=True)


def fine_pass(a_colored: ColoredRepB, b_colored: ColoredRepB,
              m: CostModel) -> tuple[float, Mapping, DPTables]:
    """Color-restricted per-base distance; only same-color nodes map."""
    if a_colored.token != b_colored.token:
        raise ColorSetMismatchError(
            f"colorings come from different coarse passes: "
            f"{a_colored.token} vs {b_colored.token}")
    ta, tb = index(a_colored.tree), index(b_colored.tree)
    # strictly larger than any full-deletion script, but finite
    surrogate = 1.0 + sum(m.cost_del(_strip_color(ta.pair(i))[0])
                          for i in range(1, ta.n + 1))
    surrogate += sum(m.cost_ins(_strip_color(tb.pair(j))[0])
                     for j in range(1, tb.n + 1))
    wrapped = color_restricted_model(m, surrogate)
    distance, tables = zs_distance(ta, tb, wrapped)
    _, mapping = extract_script(tables)
    for i, j in mapping:
        _, ca = _strip_color(ta.pair(i))
        _, cb = _strip_color(tb.pair(j))
        if ca is None or ca != cb:
            raise AssertionError("optimal mapping crossed a color boundary")
    return distance, mapping, tables


@dataclass
class MultilevelResult:
    coarse_mapping: list
    colors: ColorAssignment
    fine_distance: float
    fine_mapping: Mapping


def multilevel_compare(a: SecondaryStructure, b: SecondaryStructure,
                       m: CostModel, p: FusionParams,
                       rep: str = "c") -> MultilevelResult:
    """Full two-pass pipeline with the given coarse representation."""
    coarse_mapping, colors = coarse_pass(a, b, rep, m, p)
    ca = color_rep_b(a, colors.colors_a, colors.token)
    cb = color_rep_b(b, colors.colors_b, colors.token)
    distance, mapping, _ = fine_pass(ca, cb, m)
    return MultilevelResult(coarse_mapping, colors, distance, mapping)
