"""Canonical source emission: 2-space indent, one statement per line,
single spaces around binary operators. Re-parsing the output yields a
structurally identical AST."""

from __future__ import annotations

from . import ast

# precedence levels for expression parenthesization
_ASSIGN, _OR, _EQ, _ADD, _MUL, _UNARY, _POSTFIX, _PRIMARY = range(1, 9)

_BIN_PREC = {"||": _OR, "==": _EQ, "!=": _EQ, "+": _ADD, "-": _ADD, "*": _MUL, "/": _MUL}

_IDENT_OK = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_$")


def _precedence(node: ast.Node) -> int:
    if isinstance(node, ast.Assign):
        return _ASSIGN
    if isinstance(node, ast.Binary):
        return _BIN_PREC[node.op]
    if isinstance(node, ast.Unary):
        return _UNARY
    if isinstance(node, (ast.Call, ast.Member)):
        return _POSTFIX
    if isinstance(node, ast.StreamPlaceholder):
        return _ASSIGN  # keep placeholders unparenthesized only at top level
    return _PRIMARY


def format_number(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def format_string(value: str) -> str:
    out = ["'"]
    for ch in value:
        if ch == "\\":
            out.append("\\\\")
        elif ch == "'":
            out.append("\\'")
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ch == "\r":
            out.append("\\r")
        elif ch == "\0":
            out.append("\\0")
        else:
            out.append(ch)
    out.append("'")
    return "".join(out)


def _prop_key(key: str) -> str:
    if key and not key[0].isdigit() and all(c in _IDENT_OK for c in key):
        return key
    return format_string(key)


def _expr(node: ast.Node, min_prec: int, indent: int) -> str:
    text = _expr_inner(node, indent)
    if _precedence(node) < min_prec:
        return f"({text})"
    return text


def _callee(node: ast.Node, indent: int) -> str:
    # function expressions and operator expressions bind looser than a call
    if _precedence(node) < _POSTFIX or isinstance(node, ast.FunctionExpr):
        return f"({_expr_inner(node, indent)})"
    return _expr_inner(node, indent)


def _expr_inner(node: ast.Node, indent: int) -> str:
    if isinstance(node, ast.Identifier):
        return node.name
    if isinstance(node, ast.NumberLit):
        return format_number(node.value)
    if isinstance(node, ast.StringLit):
        return format_string(node.value)
    if isinstance(node, ast.BoolLit):
        return "true" if node.value else "false"
    if isinstance(node, ast.NullLit):
        return "null"
    if isinstance(node, ast.Binary):
        prec = _BIN_PREC[node.op]
        return f"{_expr(node.left, prec, indent)} {node.op} {_expr(node.right, prec + 1, indent)}"
    if isinstance(node, ast.Unary):
        operand = _expr(node.operand, _UNARY, indent)
        if isinstance(node.operand, ast.Unary):
            operand = f"({_expr_inner(node.operand, indent)})"
        return f"{node.op}{operand}"
    if isinstance(node, ast.Assign):
        return f"{_expr(node.target, _POSTFIX, indent)} {node.op} {_expr(node.value, _ASSIGN, indent)}"
    if isinstance(node, ast.Call):
        args = ", ".join(_expr(a, _ASSIGN, indent) for a in node.args)
        return f"{_callee(node.callee, indent)}({args})"
    if isinstance(node, ast.Member):
        return f"{_callee(node.obj, indent)}.{node.prop}"
    if isinstance(node, ast.ObjectLit):
        if not node.props:
            return "{}"
        inner = ", ".join(f"{_prop_key(k)}: {_expr(v, _ASSIGN, indent)}" for k, v in node.props)
        return "{ " + inner + " }"
    if isinstance(node, ast.FunctionExpr):
        return _function_text(node.name, node.params, node.body, indent)
    if isinstance(node, ast.StreamPlaceholder):
        arrow = ">>" if node.kind == "start" else "->"
        return f"{arrow} {', '.join(node.dests)}"
    raise TypeError(f"cannot print {type(node).__name__} as an expression")


def _function_text(name: str | None, params: list[str], body: ast.Block, indent: int) -> str:
    pad = "  " * indent
    head = f"function {name}" if name else "function "
    lines = [f"{head}({', '.join(params)}) {{\n"]
    lines.extend(_stmt(s, indent + 1) for s in body.body)
    lines.append(f"{pad}}}")
    return "".join(lines)


def _stmt(node: ast.Node, indent: int) -> str:
    pad = "  " * indent
    if isinstance(node, ast.VarDecl):
        if node.init is None:
            return f"{pad}var {node.name};\n"
        return f"{pad}var {node.name} = {_expr(node.init, _ASSIGN, indent)};\n"
    if isinstance(node, ast.FunctionDecl):
        return pad + _function_text(node.name, node.params, node.body, indent) + "\n"
    if isinstance(node, ast.Return):
        if node.argument is None:
            return f"{pad}return;\n"
        return f"{pad}return {_expr(node.argument, _ASSIGN, indent)};\n"
    if isinstance(node, ast.If):
        return pad + _if_text(node, indent) + "\n"
    if isinstance(node, ast.ExprStmt):
        # a statement opening with 'function' or '{' would re-parse as a
        # declaration or block; parenthesize to keep the expression form
        text = _expr(node.expr, _ASSIGN, indent)
        if text.startswith("function") or text.startswith("{"):
            text = f"({text})"
        return f"{pad}{text};\n"
    raise TypeError(f"cannot print {type(node).__name__} as a statement")


def _if_text(node: ast.If, indent: int) -> str:
    pad = "  " * indent
    parts = [f"if ({_expr(node.test, _ASSIGN, indent)}) {{\n"]
    parts.extend(_stmt(s, indent + 1) for s in node.consequent.body)
    parts.append(f"{pad}}}")
    alt = node.alternate
    if isinstance(alt, ast.If):
        parts.append(" else ")
        parts.append(_if_text(alt, indent))
    elif isinstance(alt, ast.Block):
        parts.append(" else {\n")
        parts.extend(_stmt(s, indent + 1) for s in alt.body)
        parts.append(f"{pad}}}")
    return "".join(parts)


def emit_source(node: ast.Node, indent: int = 0) -> str:
    """Deterministic canonical text for any AST node."""
    if isinstance(node, ast.Program):
        return "".join(_stmt(s, indent) for s in node.body)
    if isinstance(node, ast.Block):
        return "".join(_stmt(s, indent) for s in node.body)
    if isinstance(node, (ast.VarDecl, ast.FunctionDecl, ast.Return, ast.If, ast.ExprStmt)):
        return _stmt(node, indent)
    return _expr_inner(node, indent)
