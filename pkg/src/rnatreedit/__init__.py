"""Comparison of RNA secondary structures as ordered labeled trees.

Implements the classical tree edit distance and its extension with node
and edge fusion, four RNA tree encodings, configurable cost models with a
validity checker, brute-force verification oracles, and a two-pass
multilevel comparison.
"""

from .cost_models import (CostModel, InvalidTError, ValidityReport, named_model,
                          parse_model_config, structural_model, unit_model,
                          validate)
from .edit_distance import (Delete, DPTables, EditOp, EditScript, Insert,
                            Relabel, extract_script, replay_script,
                            validate_mapping, zs_distance)
from .fusion_distance import (EdgeFusion, EdgeSplit, FusionDPState,
                              FusionParams, NodeFusion, NodeSplit,
                              extract_fusion_script, fusion_dp,
                              path_count_bound)
from .multilevel import (ColorAssignment, ColoredRepB, coarse_pass,
                         color_rep_b, fine_pass, multilevel_compare)
from .oracle import (BudgetExceededError, SearchBudget, mapping_oracle,
                     script_search_oracle)
from .rna_structures import (ElementGraph, ElementKind, SecondaryStructure,
                             StructureElement, decompose, emit_ct,
                             emit_dotbracket, parse_ct, parse_dotbracket)
from .tree_model import (Forest, IndexedTree, Label, LabeledTree, TreeNode,
                         build, build_rep_b, build_rep_c, build_rep_d,
                         build_rep_e, index, to_dot, to_parenthesized,
                         trees_equal)

__version__ = "0.1.0"
