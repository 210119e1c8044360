"""Explicit-state LTL model checking for place/transition nets."""

from pnltl.buchi import BuchiAutomaton, annotate_heuristic, build_automaton, ltl_to_buchi, simplify_buchi
from pnltl.codec import EncodingPlan, ModelNotHandled, Scheme, StateStore, decode, encode, plan_encoding
from pnltl.explore import (
    CounterexampleRun,
    Options,
    Status,
    Verdict,
    check,
    check_automaton,
    verify_counterexample,
)
from pnltl.ltl import LtlSyntaxError, ResolutionError, bind, parse_formula_file, parse_ltl, simplify, to_nnf
from pnltl.petri import NetBuilder, PetriNet, PnmlError, fire, fireset, is_enabled, parse_pnml, write_pnml

__all__ = [
    "BuchiAutomaton", "annotate_heuristic", "build_automaton", "ltl_to_buchi", "simplify_buchi",
    "EncodingPlan", "ModelNotHandled", "Scheme", "StateStore", "decode", "encode", "plan_encoding",
    "CounterexampleRun", "Options", "Status", "Verdict", "check", "check_automaton", "verify_counterexample",
    "LtlSyntaxError", "ResolutionError", "bind", "parse_formula_file", "parse_ltl", "simplify", "to_nnf",
    "NetBuilder", "PetriNet", "PnmlError", "fire", "fireset", "is_enabled", "parse_pnml", "write_pnml",
]
