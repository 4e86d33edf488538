import pytest

from flxc.errors import LexError
from flxc.lexer import ARROW, IDENT, KW, NUM, OP, PUNCT, STR, tokenize


def kinds_values(source, **kw):
    return [(t.kind, t.value) for t in tokenize(source, **kw)[:-1]]


def test_var_declaration():
    assert kinds_values("var a = 1;") == [
        (KW, "var"),
        (IDENT, "a"),
        (OP, "="),
        (NUM, "1"),
        (PUNCT, ";"),
    ]


def test_compound_assignment():
    assert kinds_values("count += 1;") == [
        (IDENT, "count"),
        (OP, "+="),
        (NUM, "1"),
        (PUNCT, ";"),
    ]


def test_empty_input():
    toks = tokenize("")
    assert len(toks) == 1 and toks[0].kind == "eof"


def test_comments_discarded():
    assert kinds_values("var a; // trailing comment\nvar b;") == [
        (KW, "var"),
        (IDENT, "a"),
        (PUNCT, ";"),
        (KW, "var"),
        (IDENT, "b"),
        (PUNCT, ";"),
    ]


def test_string_quotes_and_escapes():
    toks = tokenize("'a\\'b' \"c\\n\"")
    assert [(t.kind, t.value) for t in toks[:-1]] == [(STR, "a'b"), (STR, "c\n")]


def test_numbers():
    assert [t.value for t in tokenize("1 2.5 1e3 8080")[:-1]] == ["1", "2.5", "1e3", "8080"]


def test_spans_cover_input():
    source = "var abc = 12;"
    toks = tokenize(source)[:-1]
    for t in toks:
        assert source[t.span.start : t.span.end].strip() != ""
    assert toks[0].span.start == 0
    assert toks[-1].span.end == len(source)


@pytest.mark.parametrize("bad", ["`template`", "var x = @1;", "/* block */", "a # b"])
def test_out_of_subset_bytes(bad):
    with pytest.raises(LexError):
        tokenize(bad)


def test_unterminated_string():
    with pytest.raises(LexError):
        tokenize("'open")


def test_arrows_only_in_flx_mode():
    assert kinds_values("-> reply", flx_mode=True) == [(ARROW, "->"), (IDENT, "reply")]
    assert kinds_values(">> handler", flx_mode=True) == [(ARROW, ">>"), (IDENT, "handler")]
    with pytest.raises(LexError):
        tokenize(">> handler")  # '>' has no meaning in plain source
