"""Clifford algebra products in Cl(p,q) with bitmask blades and Walsh-function signs."""

from .blades import (MAX_DIM, ParseError, Signature, blade_product, blade_to_name, inverse_gray,
                     name_to_blade, oplus, oracle_blade_product, twist, walsh)
from .engines import ENGINE_NAMES, EngineConfig, multiply
from .multivector import Kind, Multivector, SignatureMismatch, Term, parse, to_text

__version__ = "0.1.0"

__all__ = [
    "ENGINE_NAMES", "EngineConfig", "Kind", "MAX_DIM", "Multivector", "ParseError", "Signature",
    "SignatureMismatch", "Term", "blade_product", "blade_to_name", "inverse_gray", "multiply",
    "name_to_blade", "oplus", "oracle_blade_product", "parse", "to_text", "twist", "walsh",
]
