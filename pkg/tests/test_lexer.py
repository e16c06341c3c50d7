import pytest

from compact.errors import IllegalCharacter
from compact.lexer import tokenize


def pairs(text):
    return [t.pair for t in tokenize(text)]


def test_norm_header():
    assert pairs("commitment StoreData(hospital->patient):") == [
        ("KW", "commitment"),
        ("IDENT", "StoreData"),
        ("LPAREN", None),
        ("IDENT", "hospital"),
        ("ARROW", None),
        ("IDENT", "patient"),
        ("RPAREN", None),
        ("COLON", None),
    ]


def test_empty_input():
    assert tokenize("") == []
    assert tokenize("  \n# only a comment\n") == []


def test_interval_annotation():
    assert pairs("@ [t2, t2+10]") == [
        ("AT", None),
        ("LBRACK", None),
        ("IDENT", "t2"),
        ("COMMA", None),
        ("IDENT", "t2"),
        ("PLUS", None),
        ("INT", "10"),
        ("RBRACK", None),
    ]


@pytest.mark.parametrize(
    "text, kinds",
    [
        ("<= >= < > - ->", ["LE", "GE", "LT", "GT", "MINUS", "ARROW"]),
        ("a.b{c}", ["IDENT", "DOT", "IDENT", "LBRACE", "IDENT", "RBRACE"]),
        ("x except y and z or w", ["IDENT", "KW", "IDENT", "KW", "IDENT", "KW", "IDENT"]),
    ],
)
def test_punctuation_and_keywords(text, kinds):
    assert [t.kind for t in tokenize(text)] == kinds


def test_positions_track_lines_and_columns():
    toks = tokenize("# header\ncommitment X(a->b):\n  created: a.E{x}")
    assert (toks[0].position.line, toks[0].position.column) == (2, 1)
    created = [t for t in toks if t.value == "created"][0]
    assert (created.position.line, created.position.column) == (3, 3)


def test_comment_runs_to_end_of_line():
    assert pairs("a # b c\nd") == [("IDENT", "a"), ("IDENT", "d")]


@pytest.mark.parametrize("text, column", [("a $b", 3), ("x = 1", 3), ("é", 1)])
def test_illegal_character(text, column):
    with pytest.raises(IllegalCharacter) as err:
        tokenize(text)
    assert err.value.position.column == column
