"""Workbench for constraint satisfaction below polynomial time.

Relational structures and homomorphisms, Datalog fragments with explicit
derivations, canonical programs, path decompositions and the zigzag
operator, oriented-path classification, successor structures and
monotone branching programs.
"""
from .errors import CspbError, InputError, ParseError, ResourceError
from .structures import (Homomorphism, Operation, Structure, Vocabulary, core_of,
                         find_homomorphism, format_structure, is_maltsev,
                         parse_structure, preserves_relation, union_structures)

from .structures import digraph, homomorphisms, is_core, maps_to
from .datalog import (DatalogProgram, Derivation, accepts, classify_fragment, evaluate,
                      parse_program, validate_derivation)
from .canonical import build_canonical, canonical_accept
from .pathscape import OrientedPath, PathRepresentation, validate_representation, zigzag
from .pathclassify import classify_path_shape, nl_witness_search, wave_obstructions
from .succro import SuccessorStructure, compile_to_mnbp, evaluate_mnbp, minimize_in_class, surgery_experiment

__all__ = [
    "CspbError", "InputError", "ParseError", "ResourceError",
    "Homomorphism", "Operation", "Structure", "Vocabulary", "core_of", "digraph",
    "find_homomorphism", "format_structure", "homomorphisms", "is_core", "is_maltsev", "maps_to",
    "parse_structure", "preserves_relation", "union_structures",
    "DatalogProgram", "Derivation", "accepts", "classify_fragment", "evaluate", "parse_program",
    "validate_derivation",
    "build_canonical", "canonical_accept",
    "OrientedPath", "PathRepresentation", "validate_representation", "zigzag",
    "classify_path_shape", "nl_witness_search", "wave_obstructions",
    "SuccessorStructure", "compile_to_mnbp", "evaluate_mnbp", "minimize_in_class", "surgery_experiment",
]
