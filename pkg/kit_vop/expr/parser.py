import logging
import re
from dataclasses import dataclass
from typing import List

import numpy as np

from ..errors import ExprSyntaxError, MalformedNumberError, UnknownFunctionError
from .node import FUNCTIONS, BinOp, Call, Const, Expr, Neg, Var

log = logging.getLogger(__name__)

_NUMBER_CHUNK = re.compile(r"[0-9.]+(?:[eE][+-]?[0-9]*)?")
_NUMBER = re.compile(r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_PUNCT = {"+": "+", "-": "-", "−": "-", "*": "*", "/": "/", "^": "^", "(": "(", ")": ")"}

# 各位置可以开始一个操作数的记号
_OPERAND_START = frozenset({"number", "variable", "function", "(", "-"})


@dataclass(frozen=True)
class Token:
    kind: str  # number | ident | 运算符本身 | end
    text: str
    offset: int  # UTF-8 字节偏移


def tokenize(source: str) -> List[Token]:
    """把表达式文本切分为记号序列

    Raises:
        ExprSyntaxError: 出现无法识别的字符
        MalformedNumberError: 数字字面量格式错误
    """
    tokens: List[Token] = []
    i = 0
    while i < len(source):
        ch = source[i]
        offset = len(source[:i].encode("utf-8"))
        if ch.isspace():
            i += 1
            continue
        if ch in "0123456789.":
            chunk = _NUMBER_CHUNK.match(source, i).group()
            if not _NUMBER.fullmatch(chunk):
                raise MalformedNumberError(f"malformed number literal '{chunk}'", offset)
            if not np.isfinite(float(chunk)):
                raise MalformedNumberError(f"number literal '{chunk}' is out of range", offset)
            tokens.append(Token("number", chunk, offset))
            i += len(chunk)
            continue
        m = _IDENT.match(source, i)
        if m:
            tokens.append(Token("ident", m.group(), offset))
            i = m.end()
            continue
        if ch in _PUNCT:
            tokens.append(Token(_PUNCT[ch], ch, offset))
            i += 1
            continue
        raise ExprSyntaxError(f"unexpected character {ch!r}", offset, _OPERAND_START)
    tokens.append(Token("end", "", len(source.encode("utf-8"))))
    return tokens


class Parser:
    """递归下降解析器

    文法::

        expr    := term (("+" | "-") term)*
        term    := unary (("*" | "/") unary)*
        unary   := "-" unary | power
        power   := primary ("^" unary)?
        primary := NUMBER | VAR | IDENT "(" expr ")" | "(" expr ")"

    ``^`` 右结合，且比作用在它上面的一元负号结合得更紧：``-x^2`` 即 ``-(x^2)``。
    """

    def __init__(self, source: str, variable: str = "x") -> None:
        self.variable = variable
        self.tokens = tokenize(source)
        self.pos = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def _advance(self) -> Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def _expect(self, kind: str) -> Token:
        if self.current.kind != kind:
            self._fail({kind})
        return self._advance()

    def _fail(self, expected) -> None:
        token = self.current
        found = "end of input" if token.kind == "end" else repr(token.text)
        raise ExprSyntaxError(f"unexpected {found}", token.offset, expected)

    def parse(self) -> Expr:
        if self.current.kind == "end":
            raise ExprSyntaxError("empty expression", self.current.offset, _OPERAND_START)
        node = self.expr()
        if self.current.kind != "end":
            self._fail({"+", "-", "*", "/", "^", "end of input"})
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.current.kind in ("+", "-"):
            op = self._advance().kind
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.current.kind in ("*", "/"):
            op = self._advance().kind
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.current.kind == "-":
            self._advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.current.kind == "^":
            self._advance()
            return BinOp("^", base, self.unary())
        return base

    def primary(self) -> Expr:
        token = self.current
        if token.kind == "number":
            self._advance()
            return Const(float(token.text))
        if token.kind == "(":
            self._advance()
            node = self.expr()
            self._expect(")")
            return node
        if token.kind == "ident":
            if token.text == self.variable:
                self._advance()
                return Var()
            if token.text not in FUNCTIONS:
                raise UnknownFunctionError(
                    f"unknown function or identifier '{token.text}'",
                    token.offset,
                    set(FUNCTIONS) | {self.variable},
                )
            self._advance()
            self._expect("(")
            arg = self.expr()
            self._expect(")")
            return Call(token.text, arg)
        self._fail(_OPERAND_START)


def parse(source: str, variable: str = "x") -> Expr:
    """解析表达式文本

    Args:
        source: 表达式文本，忽略空白
        variable: 自变量名，默认 ``x``，方程组使用 ``t``

    Returns:
        语法树

    Raises:
        ExprSyntaxError: 语法错误（含字节偏移与期望记号集合）
        UnknownFunctionError: 未知函数名
        MalformedNumberError: 数字字面量格式错误
    """
    try:
        return Parser(source, variable).parse()
    except RecursionError:
        raise ExprSyntaxError("expression nested too deeply", 0) from None
