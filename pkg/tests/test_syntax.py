import pytest

from themis.records import Language
from themis.syntax import GrammarUnavailable, ParseError, max_depth, register_parser


def test_python_bare_literal_is_shallow():
    assert max_depth("42", Language.Python) == 2


def test_python_function_reaches_three():
    assert max_depth("def f():\n    return g(1)\n", Language.Python) >= 3


def test_python_parse_error():
    with pytest.raises(ParseError):
        max_depth("def f(:", Language.Python)


@pytest.mark.parametrize("language", [
    Language.C, Language.Cpp, Language.CSharp, Language.Go, Language.Java, Language.JavaScript,
])
def test_brace_languages(language):
    assert max_depth("int x = 1;", language) == 2
    assert max_depth("int f() { return g(1); }", language) >= 3
    with pytest.raises(ParseError):
        max_depth("int f() { return 1;", language)


def test_braces_in_strings_and_comments_ignored():
    code = 'int f() { char *s = "{{{"; /* } */ return 0; } // {'
    assert max_depth(code, Language.C) == 3


def test_ruby_depth():
    assert max_depth("x = 1", Language.Ruby) == 2
    code = "def f\n  if x\n    y\n  end\nend\n"
    assert max_depth(code, Language.Ruby) == 4
    with pytest.raises(ParseError):
        max_depth("def f\n  1\n", Language.Ruby)


def test_ruby_do_block():
    code = "items.each do |item|\n  puts item\nend\n"
    assert max_depth(code, Language.Ruby) == 3


def test_empty_source_is_parse_error():
    with pytest.raises(ParseError):
        max_depth("   ", Language.C)


def test_registry_miss_and_override():
    class FakeLang:
        value = "Fake"

    with pytest.raises(GrammarUnavailable):
        max_depth("x", FakeLang())

    register_parser(FakeLang, lambda code: 99)
    try:
        assert max_depth("anything", FakeLang) == 99
    finally:
        from themis import syntax
        del syntax._REGISTRY[FakeLang]
