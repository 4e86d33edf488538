"""Recursive descent parser for the MiniJS subset.

Precedence, lowest to highest: assignment, ``||``, equality, additive,
multiplicative, unary, member/call. Semicolons are mandatory (no automatic
insertion) and multi-binding ``var`` statements desugar into consecutive
single-binding declarations.
"""

from __future__ import annotations

from . import ast
from .ast import Span
from .errors import ParseError
from .lexer import ARROW, EOF, IDENT, KW, NUM, OP, PUNCT, STR, Token, tokenize


class _Parser:
    def __init__(self, tokens: list[Token], flx_mode: bool = False):
        self.toks = tokens
        self.pos = 0
        self.flx_mode = flx_mode

    # -- token plumbing --

    @property
    def cur(self) -> Token:
        return self.toks[self.pos]

    def peek(self, offset: int = 1) -> Token:
        idx = min(self.pos + offset, len(self.toks) - 1)
        return self.toks[idx]

    def at(self, kind: str, value: str | None = None) -> bool:
        t = self.cur
        return t.kind == kind and (value is None or t.value == value)

    def advance(self) -> Token:
        t = self.cur
        if t.kind != EOF:
            self.pos += 1
        return t

    def expect(self, kind: str, value: str | None = None) -> Token:
        if not self.at(kind, value):
            t = self.cur
            want = value or kind
            raise ParseError(
                f"expected {want!r}, found {t.value or t.kind!r}",
                t.span.line,
                t.span.col,
                expected=want,
                found=t.value or t.kind,
            )
        return self.advance()

    def fail(self, message: str) -> ParseError:
        t = self.cur
        return ParseError(message, t.span.line, t.span.col, found=t.value or t.kind)

    def finish(self, node: ast.Node, start: Span) -> ast.Node:
        end = self.toks[self.pos - 1].span if self.pos > 0 else start
        node.span = Span(start.start, end.end, start.line, start.col)
        return node

    # -- statements --

    def parse_program(self) -> ast.Program:
        start = self.cur.span
        body: list[ast.Node] = []
        while not self.at(EOF):
            body.extend(self.parse_statement())
        prog = ast.Program(body)
        self.finish(prog, start)
        return prog

    def parse_statement(self) -> list[ast.Node]:
        """One statement; ``var`` desugaring may yield several."""
        if self.at(KW, "var"):
            return self.parse_var_statement()
        return [self.parse_single_statement()]

    def parse_single_statement(self) -> ast.Node:
        if self.at(KW, "var"):
            decls = self.parse_var_statement()
            if len(decls) != 1:
                raise self.fail("multi-binding var not allowed here")
            return decls[0]
        if self.at(KW, "function"):
            return self.parse_function_decl()
        if self.at(KW, "return"):
            return self.parse_return()
        if self.at(KW, "if"):
            return self.parse_if()
        if self.at(PUNCT, "{"):
            raise self.fail("unexpected '{' in statement position")
        start = self.cur.span
        expr = self.parse_expression()
        self.expect(PUNCT, ";")
        return self.finish(ast.ExprStmt(expr), start)

    def parse_var_statement(self) -> list[ast.Node]:
        kw = self.expect(KW, "var")
        decls: list[ast.Node] = []
        first = True
        while True:
            start = kw.span if first else self.cur.span
            name = self.expect(IDENT).value
            init = None
            if self.at(OP, "="):
                self.advance()
                init = self.parse_assignment()
            decls.append(self.finish(ast.VarDecl(name, init), start))
            first = False
            if self.at(PUNCT, ","):
                self.advance()
                continue
            break
        self.expect(PUNCT, ";")
        return decls

    def parse_function_decl(self) -> ast.Node:
        start = self.expect(KW, "function").span
        name = self.expect(IDENT).value
        params = self.parse_params()
        body = self.parse_block()
        return self.finish(ast.FunctionDecl(name, params, body), start)

    def parse_params(self) -> list[str]:
        self.expect(PUNCT, "(")
        params: list[str] = []
        while not self.at(PUNCT, ")"):
            params.append(self.expect(IDENT).value)
            if self.at(PUNCT, ","):
                self.advance()
        self.expect(PUNCT, ")")
        return params

    def parse_block(self) -> ast.Block:
        start = self.expect(PUNCT, "{").span
        body: list[ast.Node] = []
        while not self.at(PUNCT, "}"):
            if self.at(EOF):
                raise self.fail("unterminated block")
            body.extend(self.parse_statement())
        self.expect(PUNCT, "}")
        blk = ast.Block(body)
        self.finish(blk, start)
        return blk

    def parse_block_or_statement(self) -> ast.Block:
        if self.at(PUNCT, "{"):
            return self.parse_block()
        start = self.cur.span
        stmt = self.parse_single_statement()
        blk = ast.Block([stmt])
        self.finish(blk, start)
        return blk

    def parse_return(self) -> ast.Node:
        start = self.expect(KW, "return").span
        arg = None
        if not self.at(PUNCT, ";"):
            arg = self.parse_expression()
        self.expect(PUNCT, ";")
        return self.finish(ast.Return(arg), start)

    def parse_if(self) -> ast.Node:
        start = self.expect(KW, "if").span
        self.expect(PUNCT, "(")
        test = self.parse_expression()
        self.expect(PUNCT, ")")
        consequent = self.parse_block_or_statement()
        alternate: ast.Node | None = None
        if self.at(KW, "else"):
            self.advance()
            alternate = self.parse_if() if self.at(KW, "if") else self.parse_block_or_statement()
        return self.finish(ast.If(test, consequent, alternate), start)

    # -- expressions --

    def parse_expression(self) -> ast.Node:
        return self.parse_assignment()

    def parse_assignment(self) -> ast.Node:
        left = self.parse_or()
        if self.at(OP, "=") or self.at(OP, "+="):
            if not isinstance(left, (ast.Identifier, ast.Member)):
                raise self.fail("invalid assignment target")
            op = self.advance().value
            value = self.parse_assignment()
            node = ast.Assign(op, left, value)
            node.span = Span(left.span.start, value.span.end, left.span.line, left.span.col)
            return node
        return left

    def _binary_level(self, ops: tuple[str, ...], next_level) -> ast.Node:
        left = next_level()
        while self.cur.kind == OP and self.cur.value in ops:
            op = self.advance().value
            right = next_level()
            node = ast.Binary(op, left, right)
            node.span = Span(left.span.start, right.span.end, left.span.line, left.span.col)
            left = node
        return left

    def parse_or(self) -> ast.Node:
        return self._binary_level(("||",), self.parse_equality)

    def parse_equality(self) -> ast.Node:
        return self._binary_level(("==", "!="), self.parse_additive)

    def parse_additive(self) -> ast.Node:
        return self._binary_level(("+", "-"), self.parse_multiplicative)

    def parse_multiplicative(self) -> ast.Node:
        return self._binary_level(("*", "/"), self.parse_unary)

    def parse_unary(self) -> ast.Node:
        if self.at(OP, "-") or self.at(OP, "!"):
            start = self.cur.span
            op = self.advance().value
            operand = self.parse_unary()
            return self.finish(ast.Unary(op, operand), start)
        return self.parse_postfix()

    def parse_postfix(self) -> ast.Node:
        node = self.parse_primary()
        while True:
            if self.at(OP, "."):
                self.advance()
                prop = self.expect(IDENT).value
                member = ast.Member(node, prop)
                member.span = Span(node.span.start, self.toks[self.pos - 1].span.end, node.span.line, node.span.col)
                node = member
                continue
            if self.at(PUNCT, "("):
                self.advance()
                args: list[ast.Node] = []
                while not self.at(PUNCT, ")"):
                    args.append(self.parse_assignment())
                    if self.at(PUNCT, ","):
                        self.advance()
                end = self.expect(PUNCT, ")")
                call = ast.Call(node, args)
                call.span = Span(node.span.start, end.span.end, node.span.line, node.span.col)
                node = call
                continue
            return node

    def parse_primary(self) -> ast.Node:
        t = self.cur
        if t.kind == NUM:
            self.advance()
            return self.finish(ast.NumberLit(float(t.value)), t.span)
        if t.kind == STR:
            self.advance()
            return self.finish(ast.StringLit(t.value), t.span)
        if t.kind == KW and t.value in ("true", "false"):
            self.advance()
            return self.finish(ast.BoolLit(t.value == "true"), t.span)
        if t.kind == KW and t.value == "null":
            self.advance()
            return self.finish(ast.NullLit(), t.span)
        if t.kind == IDENT:
            self.advance()
            return self.finish(ast.Identifier(t.value), t.span)
        if t.kind == KW and t.value == "function":
            return self.parse_function_expr()
        if t.kind == PUNCT and t.value == "(":
            self.advance()
            inner = self.parse_expression()
            self.expect(PUNCT, ")")
            return inner
        if t.kind == PUNCT and t.value == "{":
            return self.parse_object_literal()
        if t.kind == ARROW:
            return self.parse_placeholder()
        raise self.fail(f"unexpected {t.value or t.kind!r} in expression")

    def parse_function_expr(self) -> ast.Node:
        start = self.expect(KW, "function").span
        name = None
        if self.at(IDENT):
            name = self.advance().value
        params = self.parse_params()
        body = self.parse_block()
        return self.finish(ast.FunctionExpr(name, params, body), start)

    def parse_object_literal(self) -> ast.Node:
        start = self.expect(PUNCT, "{").span
        props: list[tuple[str, ast.Node]] = []
        while not self.at(PUNCT, "}"):
            if self.at(IDENT) or self.at(KW):
                key = self.advance().value
            elif self.at(STR):
                key = self.advance().value
            else:
                raise self.fail("expected property name")
            self.expect(PUNCT, ":")
            props.append((key, self.parse_assignment()))
            if self.at(PUNCT, ","):
                self.advance()
        self.expect(PUNCT, "}")
        return self.finish(ast.ObjectLit(props), start)

    def parse_placeholder(self) -> ast.Node:
        start = self.cur.span
        arrow = self.advance().value
        kind = "start" if arrow == ">>" else "post"
        dests = [self.expect(IDENT).value]
        # Greedy dest list: ', ident' is absorbed while the identifier is a
        # bare name (next token ends it); compiler output keeps placeholders
        # in final argument position so this never misparses real programs.
        while (
            self.at(PUNCT, ",")
            and self.peek(1).kind == IDENT
            and (self.peek(2).kind in (EOF,) or self.peek(2).value in (",", ")", ";"))
        ):
            self.advance()
            dests.append(self.expect(IDENT).value)
        return self.finish(ast.StreamPlaceholder(kind, dests), start)


def parse(source: str, flx_mode: bool = False) -> ast.Program:
    """Parse MiniJS source into a freshly numbered AST."""
    program = _Parser(tokenize(source, flx_mode=flx_mode), flx_mode=flx_mode).parse_program()
    ast.renumber(program)
    return program
