"""Syntax-tree depth estimation for the trivial-code gate.

Python uses the stdlib ``ast`` module. The brace languages (C, C++, C#, Go,
Java, JavaScript) use a nesting scanner that tracks brace/bracket/paren depth
while skipping string literals and comments. Ruby uses keyword-block nesting.
Depth is counted with the root at level 1, so a bare literal sits at depth 2
(root -> expression) and a function with a statement containing an expression
reaches depth >= 3.

The registry is pluggable: register a better parser (e.g. a tree-sitter
binding) per language and the gate will use it.
"""

from __future__ import annotations

import ast
import re
from typing import Callable

from themis.records import Language, ThemisError


class GrammarUnavailable(ThemisError):
    def __init__(self, language: Language):
        super().__init__(f"no parser registered for {language.value}")
        self.language = language


class ParseError(ThemisError):
    pass


DepthFn = Callable[[str], int]

_REGISTRY: dict[Language, DepthFn] = {}


def register_parser(language: Language, fn: DepthFn) -> None:
    _REGISTRY[language] = fn


def max_depth(code: str, language: Language) -> int:
    """Depth of the deepest node, root = level 1. Raises ParseError on junk."""
    if language not in _REGISTRY:
        raise GrammarUnavailable(language)
    return _REGISTRY[language](code)


def _python_depth(code: str) -> int:
    try:
        tree = ast.parse(code)
    except SyntaxError as exc:
        raise ParseError(str(exc)) from exc

    def walk(node: ast.AST, level: int) -> int:
        deepest = level
        for child in ast.iter_child_nodes(node):
            # The expression-statement wrapper adds no syntactic nesting of
            # its own, so a bare literal counts as root -> expression.
            bump = 0 if isinstance(child, ast.Expr) else 1
            deepest = max(deepest, walk(child, level + bump))
        return deepest

    return walk(tree, 1)


def _strip_strings_and_comments(code: str, line_comment: str = "//", block_comments: bool = True) -> str:
    """Blank out string/char literals and comments so braces inside them don't count."""
    out = []
    i, n = 0, len(code)
    while i < n:
        ch = code[i]
        if block_comments and code.startswith("/*", i):
            end = code.find("*/", i + 2)
            i = n if end < 0 else end + 2
            continue
        if line_comment and code.startswith(line_comment, i):
            end = code.find("\n", i)
            i = n if end < 0 else end
            continue
        if ch in "\"'`":
            quote = ch
            i += 1
            while i < n and code[i] != quote:
                i += 2 if code[i] == "\\" else 1
            i += 1
            continue
        out.append(ch)
        i += 1
    return "".join(out)


def _brace_depth(code: str) -> int:
    """Nesting depth via {, (, [ counting: depth = 2 + max nesting.

    The constant 2 accounts for the implicit root and the top-level
    declaration a brace belongs to, aligning flat code (no braces at all)
    with depth 2 and one brace level with depth 3.
    """
    stripped = _strip_strings_and_comments(code)
    depth = 0
    best = 0
    balanced = True
    for ch in stripped:
        if ch in "{([":
            depth += 1
            best = max(best, depth)
        elif ch in "})]":
            depth -= 1
            if depth < 0:
                balanced = False
                break
    if not balanced or depth != 0:
        raise ParseError("unbalanced brackets")
    if not stripped.strip():
        raise ParseError("empty source")
    return 2 + best


_RUBY_OPENERS = re.compile(
    r"^\s*(?:def|class|module|if|unless|while|until|case|begin|for)\b|\bdo\s*(?:\|[^|]*\|)?\s*$"
)
_RUBY_END = re.compile(r"^\s*end\b")


def _ruby_depth(code: str) -> int:
    depth = 0
    best = 0
    for line in code.splitlines():
        bare = _strip_strings_and_comments(line, line_comment="#", block_comments=False)
        if _RUBY_END.match(bare):
            depth -= 1
            if depth < 0:
                raise ParseError("unmatched end")
        elif _RUBY_OPENERS.search(bare):
            depth += 1
            best = max(best, depth)
    if depth != 0:
        raise ParseError("unterminated block")
    if not code.strip():
        raise ParseError("empty source")
    return 2 + best


register_parser(Language.Python, _python_depth)
register_parser(Language.Ruby, _ruby_depth)
for _lang in (Language.C, Language.Cpp, Language.CSharp, Language.Go, Language.Java, Language.JavaScript):
    register_parser(_lang, _brace_depth)
