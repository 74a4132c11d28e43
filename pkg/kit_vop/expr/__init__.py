from .derivative import differentiate
from .node import (
    FUNCTIONS,
    BinOp,
    Call,
    Const,
    Expr,
    Neg,
    Var,
    evaluate,
    free_of_variable,
    render,
)
from .parser import parse
