import pytest

from campl.lexer import LexError, tokenize


def kinds_and_texts(source):
    return [(t.kind, t.text) for t in tokenize(source) if t.kind != "eof"]


def test_hello_put_line():
    got = kinds_and_texts('put "Hello World!" on console')
    assert got == [("kw", "put"), ("string", "Hello World!"),
                   ("kw", "on"), ("ident", "console")]


def test_empty_input():
    assert kinds_and_texts("") == []


def test_comment_only():
    assert kinds_and_texts("-- comment only") == []


def test_comment_runs_to_end_of_line():
    got = kinds_and_texts("halt ch -- trailing words = => ::\nclose")
    assert got == [("kw", "halt"), ("ident", "ch"), ("kw", "close")]


def test_comment_without_space_after_paren():
    got = kinds_and_texts("f( | a => )-- recurse")
    assert [t for _, t in got] == ["f", "(", "|", "a", "=>", ")"]


def test_multi_char_operators():
    got = [t for _, t in kinds_and_texts("(*) (+) |=| :: => -> = | , ( ) [ ]")]
    assert got == ["(*)", "(+)", "|=|", "::", "=>", "->", "=", "|", ",",
                   "(", ")", "[", "]"]


def test_negative_and_positive_ints():
    got = kinds_and_texts("put -5 put 42")
    assert ("int", "-5") in got and ("int", "42") in got


def test_string_escapes():
    toks = tokenize(r'"a\"b\nc\\d"')
    assert toks[0].value if hasattr(toks[0], "value") else toks[0].text \
        == 'a"b\nc\\d'


def test_char_literals():
    toks = tokenize(r"'x' '\n' '\''")
    assert [t.text for t in toks[:3]] == ["x", "\n", "'"]


def test_positions_are_one_based():
    toks = tokenize("proc run =\n    | =>")
    assert (toks[0].line, toks[0].col) == (1, 1)
    assert (toks[1].line, toks[1].col) == (1, 6)
    pipe = [t for t in toks if t.text == "|"][0]
    assert (pipe.line, pipe.col) == (2, 5)


def test_tab_rejected():
    with pytest.raises(LexError) as e:
        tokenize("proc run =\n\thalt ch")
    assert e.value.line == 2


def test_unterminated_string():
    with pytest.raises(LexError):
        tokenize('put "oops\nhalt')


def test_stray_character():
    with pytest.raises(LexError):
        tokenize("put $x")


def test_single_colon_rejected():
    with pytest.raises(LexError):
        tokenize("proc f : stuff")


def test_keywords_are_exactly_the_reserved_set():
    from campl.lexer import KEYWORDS
    assert KEYWORDS == {
        "proc", "protocol", "coprotocol", "do", "on", "of", "as", "into",
        "put", "get", "hput", "hcase", "close", "halt", "fork", "split",
        "plug", "race", "use", "store", "neg",
    }
    # `True`, `Int`, `Console` are plain identifiers
    got = dict(kinds_and_texts("True Int Console"))
    assert set(got) == {"ident"}


def test_crlf_normalized():
    toks = tokenize("close a\r\nclose b")
    assert [t.line for t in toks if t.kind == "kw"] == [1, 2]
