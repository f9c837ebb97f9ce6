"""Numerical certification of weighted Hardy-type inequalities."""

__version__ = "0.1.0"

from .criteria import (  # noqa: E402
    Exponents, RGrid, Verdict, VerdictStatus, bk_constant, doubling_constant,
    hardy_certify, sk_constant,
)
from .errors import (  # noqa: E402
    ConditionViolation, DomainError, HardyCertError, InvalidWeight, NegativeWeight,
    NoConvergence, ParseError, SandwichViolation,
)
from .quad import QuadConfig, QuadResult, Status, integrate_finite, integrate_tail, lq_norm  # noqa: E402
from .weightlang import Expr, differentiate, evaluate, parse, to_source  # noqa: E402

__all__ = [
    "Exponents", "RGrid", "Verdict", "VerdictStatus", "bk_constant", "sk_constant",
    "doubling_constant", "hardy_certify", "ConditionViolation", "DomainError",
    "HardyCertError", "InvalidWeight", "NegativeWeight", "NoConvergence", "ParseError",
    "SandwichViolation", "QuadConfig", "QuadResult", "Status", "integrate_finite",
    "integrate_tail", "lq_norm", "Expr", "differentiate", "evaluate", "parse", "to_source",
]
