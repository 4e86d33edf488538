import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flxc import ast
from flxc.ast import structurally_equal
from flxc.parser import parse
from flxc.printer import emit_source

NAMES = st.sampled_from(["a", "b", "count", "res", "data", "x1", "_v", "$q"])
PROPS = st.sampled_from(["send", "body", "path", "length", "get"])


def expr_strategy(depth: int):
    leaf = st.one_of(
        st.builds(ast.Identifier, NAMES),
        st.builds(ast.NumberLit, st.sampled_from([0.0, 1.0, 2.5, 8080.0, 0.125])),
        st.builds(ast.StringLit, st.sampled_from(["", "x", "a'b", "line\nbreak", "\\slash"])),
        st.builds(ast.BoolLit, st.booleans()),
        st.builds(ast.NullLit),
    )
    if depth <= 0:
        return leaf
    sub = expr_strategy(depth - 1)
    return st.one_of(
        leaf,
        st.builds(ast.Binary, st.sampled_from(["+", "-", "*", "/", "||", "==", "!="]), sub, sub),
        st.builds(ast.Unary, st.sampled_from(["-", "!"]), sub),
        st.builds(ast.Member, sub, PROPS),
        st.builds(ast.Call, sub, st.lists(sub, max_size=2)),
        st.builds(
            ast.Assign,
            st.sampled_from(["=", "+="]),
            st.one_of(st.builds(ast.Identifier, NAMES), st.builds(ast.Member, sub, PROPS)),
            sub,
        ),
        st.builds(ast.ObjectLit, st.lists(st.tuples(st.sampled_from(["k", "k2", "content-type"]), sub), max_size=2)),
        st.builds(ast.FunctionExpr, st.one_of(st.none(), NAMES), st.lists(NAMES, max_size=2, unique=True), block_strategy(depth - 1)),
    )


def stmt_strategy(depth: int):
    expr = expr_strategy(depth)
    simple = st.one_of(
        st.builds(ast.ExprStmt, expr),
        st.builds(ast.VarDecl, NAMES, st.one_of(st.none(), expr)),
        st.builds(ast.Return, st.one_of(st.none(), expr)),
    )
    if depth <= 0:
        return simple
    return st.one_of(
        simple,
        st.builds(ast.FunctionDecl, NAMES, st.lists(NAMES, max_size=2, unique=True), block_strategy(depth - 1)),
        st.builds(
            ast.If,
            expr,
            block_strategy(depth - 1),
            st.one_of(st.none(), block_strategy(depth - 1)),
        ),
    )


def block_strategy(depth: int):
    return st.builds(ast.Block, st.lists(stmt_strategy(depth), max_size=3))


PROGRAMS = st.builds(ast.Program, st.lists(stmt_strategy(2), max_size=4))


def test_canonical_compound_assignment():
    program = parse("count+=1;")
    assert emit_source(program) == "count += 1;\n"


def test_reply_body_matches_canonical_lines(listing1):
    program = parse(listing1)
    reply = program.body[3].expr.args[1].body.body[0].expr.args[1]
    text = emit_source(reply)
    assert text.splitlines() == [
        "function reply(err, data) {",
        "  count += 1;",
        "  res.send(err || template(count, data));",
        "}",
    ]


def test_listing_emission_is_idempotent(listing1):
    once = emit_source(parse(listing1))
    assert emit_source(parse(once)) == once


@settings(max_examples=300, deadline=None)
@given(PROGRAMS)
def test_roundtrip_fuzzed_programs(program):
    text = emit_source(program)
    reparsed = parse(text)
    assert structurally_equal(program, reparsed), text


@settings(max_examples=150, deadline=None)
@given(PROGRAMS)
def test_emission_idempotent(program):
    text = emit_source(program)
    assert emit_source(parse(text)) == text


@settings(max_examples=150, deadline=None)
@given(PROGRAMS)
def test_span_containment_on_fuzzed(program):
    reparsed = parse(emit_source(program))
    for node in ast.walk(reparsed):
        for child in ast.children(node):
            assert child.span.start >= node.span.start
            assert child.span.end <= node.span.end


def test_corpus_roundtrip(corpus):
    for g in corpus:
        program = parse(g.source)
        text = emit_source(program)
        assert structurally_equal(program, parse(text)), g.seed
        assert emit_source(parse(text)) == text


@pytest.mark.parametrize(
    "source",
    [
        "var x = (1 + 2) * 3;",
        "a - (b - c);",
        "(a + b).c;",
        "(function () {\n})();",
        "-(-1);",
        "f(-1, !x);",
        "x = ({ a: 1 });",
    ],
)
def test_parenthesization_preserved(source):
    program = parse(source)
    text = emit_source(program)
    assert structurally_equal(program, parse(text)), text
