import pytest

from flxc import ast
from flxc.errors import ParseError
from flxc.parser import parse


def test_listing_shape(listing1):
    program = parse(listing1)
    # the multi-init var chain desugars into three single-binding decls
    assert len(program.body) == 5
    app_decl, fs_decl, count_decl, get_stmt, listen_stmt = program.body
    assert isinstance(app_decl, ast.VarDecl) and app_decl.name == "app"
    assert isinstance(fs_decl, ast.VarDecl) and fs_decl.name == "fs"
    assert isinstance(count_decl, ast.VarDecl) and count_decl.name == "count"
    assert isinstance(count_decl.init, ast.NumberLit)

    get_call = get_stmt.expr
    assert isinstance(get_call, ast.Call)
    assert isinstance(get_call.callee, ast.Member) and get_call.callee.prop == "get"
    handler = get_call.args[1]
    assert isinstance(handler, ast.FunctionExpr) and handler.name == "handler"
    assert handler.params == ["req", "res"]

    listen_call = listen_stmt.expr
    assert isinstance(listen_call.callee, ast.Member) and listen_call.callee.prop == "listen"
    assert isinstance(listen_call.args[0], ast.NumberLit)
    assert listen_call.args[0].value == 8080.0


def test_malformed_var():
    with pytest.raises(ParseError):
        parse("var x = ;")


def test_two_anonymous_function_args():
    program = parse("f(function(){}, function(){});")
    call = program.body[0].expr
    assert len(call.args) == 2
    assert all(isinstance(a, ast.FunctionExpr) and a.name is None for a in call.args)


@pytest.mark.parametrize(
    "bad",
    [
        "class X {}",
        "for (;;) {}",
        "async function f() {}",
        "var x = 1",  # missing semicolon
        "{ x: 1 };",  # block/object ambiguity is rejected in statement position
        "function (x) {}",  # declarations need a name
    ],
)
def test_out_of_subset_constructs(bad):
    with pytest.raises(ParseError):
        parse(bad)


def test_operator_precedence():
    program = parse("var x = 1 + 2 * 3 == 7 || a.b(c) != null;")
    init = program.body[0].init
    assert isinstance(init, ast.Binary) and init.op == "||"
    left = init.left
    assert left.op == "=="
    assert left.left.op == "+"
    assert left.left.right.op == "*"
    right = init.right
    assert right.op == "!="
    assert isinstance(right.left, ast.Call)
    assert isinstance(right.left.callee, ast.Member)


def test_assignment_is_right_associative():
    program = parse("a = b = 1;")
    outer = program.body[0].expr
    assert isinstance(outer, ast.Assign) and isinstance(outer.value, ast.Assign)


def test_member_chain_and_call_of_call():
    program = parse("require('express')().get.x;")
    expr = program.body[0].expr
    assert isinstance(expr, ast.Member) and expr.prop == "x"
    assert isinstance(expr.obj, ast.Member) and expr.obj.prop == "get"
    assert isinstance(expr.obj.obj, ast.Call)


def test_if_else_chain_and_single_statement_bodies():
    program = parse("if (a) b = 1; else if (c) { d = 2; } else e = 3;")
    node = program.body[0]
    assert isinstance(node, ast.If)
    assert isinstance(node.consequent, ast.Block) and len(node.consequent.body) == 1
    assert isinstance(node.alternate, ast.If)
    assert isinstance(node.alternate.alternate, ast.Block)


def test_object_literal_keys():
    program = parse("f({ expected: a, 'content-length': b });")
    obj = program.body[0].expr.args[0]
    assert [k for k, _ in obj.props] == ["expected", "content-length"]


def test_node_ids_dense_and_unique(listing1):
    program = parse(listing1)
    ids = [n.node_id for n in ast.walk(program)]
    assert sorted(ids) == list(range(len(ids)))


def test_span_containment(listing1):
    program = parse(listing1)
    for node in ast.walk(program):
        for child in ast.children(node):
            assert child.span.start >= node.span.start
            assert child.span.end <= node.span.end


def test_placeholders_parse_in_flx_mode():
    program = parse("app.get('/', >> handler);\nfs.readFile(x, -> reply);\n", flx_mode=True)
    ph1 = program.body[0].expr.args[1]
    ph2 = program.body[1].expr.args[1]
    assert isinstance(ph1, ast.StreamPlaceholder) and ph1.kind == "start" and ph1.dests == ["handler"]
    assert ph2.kind == "post" and ph2.dests == ["reply"]


def test_placeholder_multi_dest_greedy():
    program = parse("f(-> a, b);", flx_mode=True)
    ph = program.body[0].expr.args[0]
    assert ph.dests == ["a", "b"]
    # a non-identifier after the comma ends the destination list
    program = parse("f(-> a, b + 1);", flx_mode=True)
    call = program.body[0].expr
    assert call.args[0].dests == ["a"]
    assert isinstance(call.args[1], ast.Binary)
