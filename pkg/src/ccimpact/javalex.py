"""Token-level Java scanner.

Extracts method declarations with their bodies and the summary comment
directly above each declaration, without building a full syntax tree. The
scanner is best-effort: it survives non-compiling sources and arbitrary
text, and reports brace imbalance instead of failing.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field


TYPE_KEYWORDS = {"class", "interface", "enum", "record"}

# identifiers that can be followed by '(' without being a declaration
NON_METHOD_KEYWORDS = {
    "if", "for", "while", "switch", "catch", "synchronized", "do", "else",
    "try", "return", "new", "throw", "assert", "case", "break", "continue",
    "yield", "super", "this",
}


@dataclass
class Token:
    kind: str  # ident | num | string | char | textblock | punct
    text: str
    start: int
    end: int
    line: int


@dataclass
class CommentSpan:
    start: int
    end: int
    start_line: int
    end_line: int
    text: str


@dataclass
class MethodInfo:
    signature_key: str
    body_text: str
    leading_comment: str
    span: tuple[int, int]  # (start_line, end_line), 1-based inclusive


@dataclass
class ScanResult:
    methods: list[MethodInfo]
    unbalanced: bool
    comments: list[CommentSpan] = field(default_factory=list)


def _tokenize(src: str) -> tuple[list[Token], list[CommentSpan]]:
    tokens: list[Token] = []
    comments: list[CommentSpan] = []
    i, n, line = 0, len(src), 1
    while i < n:
        c = src[i]
        if c == "\n":
            line += 1
            i += 1
            continue
        if c.isspace():
            i += 1
            continue
        if c == "/" and i + 1 < n and src[i + 1] == "/":
            j = src.find("\n", i)
            if j < 0:
                j = n
            comments.append(CommentSpan(i, j, line, line, src[i:j]))
            i = j
            continue
        if c == "/" and i + 1 < n and src[i + 1] == "*":
            j = src.find("*/", i + 2)
            end = n if j < 0 else j + 2
            nl = src.count("\n", i, end)
            comments.append(CommentSpan(i, end, line, line + nl, src[i:end]))
            line += nl
            i = end
            continue
        if src.startswith('"""', i):
            # text block; backslash escapes the next character
            j = i + 3
            while j < n:
                if src[j] == "\\":
                    j += 2
                    continue
                if src.startswith('"""', j):
                    j += 3
                    break
                j += 1
            else:
                j = n
            j = min(j, n)
            tokens.append(Token("textblock", src[i:j], i, j, line))
            line += src.count("\n", i, j)
            i = j
            continue
        if c == '"' or c == "'":
            quote = c
            j = i + 1
            while j < n and src[j] != "\n":
                if src[j] == "\\":
                    j += 2
                    continue
                if src[j] == quote:
                    j += 1
                    break
                j += 1
            j = min(j, n)
            kind = "string" if quote == '"' else "char"
            tokens.append(Token(kind, src[i:j], i, j, line))
            i = j
            continue
        if c.isalpha() or c == "_" or c == "$":
            j = i + 1
            while j < n and (src[j].isalnum() or src[j] in "_$"):
                j += 1
            tokens.append(Token("ident", src[i:j], i, j, line))
            i = j
            continue
        if c.isdigit():
            j = i + 1
            while j < n and (src[j].isalnum() or src[j] in "._"):
                # consume 1.5e-3 style exponents
                if src[j] in "eE" and j + 1 < n and src[j + 1] in "+-":
                    j += 2
                else:
                    j += 1
            tokens.append(Token("num", src[i:j], i, j, line))
            i = j
            continue
        tokens.append(Token("punct", c, i, i + 1, line))
        i += 1
    return tokens, comments


def _skip_paren_group(tokens: list[Token], k: int) -> int:
    """Given k at '(', return index just past the matching ')'. Returns
    len(tokens) when unterminated."""
    depth = 0
    while k < len(tokens):
        t = tokens[k]
        if t.kind == "punct":
            if t.text == "(":
                depth += 1
            elif t.text == ")":
                depth -= 1
                if depth == 0:
                    return k + 1
        k += 1
    return k


def _skip_annotations(tokens: list[Token], k: int) -> int:
    """Skip '@Name' and '@Name(...)' sequences starting at k."""
    while (
        k + 1 < len(tokens)
        and tokens[k].kind == "punct"
        and tokens[k].text == "@"
        and tokens[k + 1].kind == "ident"
        and tokens[k + 1].text != "interface"
    ):
        k += 2
        # qualified annotation names: @a.b.C
        while (
            k + 1 < len(tokens)
            and tokens[k].text == "."
            and tokens[k + 1].kind == "ident"
        ):
            k += 2
        if k < len(tokens) and tokens[k].kind == "punct" and tokens[k].text == "(":
            k = _skip_paren_group(tokens, k)
    return k


def _is_declaration_context(tokens: list[Token], k: int) -> bool:
    """True when the ident at k opens a member declaration rather than a
    call, annotation, or initializer expression."""
    if k > 0:
        prev = tokens[k - 1]
        if prev.kind == "punct" and prev.text in ("@", "."):
            return False
        if prev.kind == "ident" and prev.text in ("new", "return", "throw"):
            return False
    j = k - 1
    depth = 0
    while j >= 0:
        t = tokens[j]
        if t.kind == "punct":
            if t.text == ")":
                depth += 1
            elif t.text == "(":
                depth -= 1
            elif depth == 0:
                if t.text in ";{}":
                    return True
                if t.text == "=":
                    return False
        j -= 1
    return True


def _param_type_names(tokens: list[Token]) -> list[str] | None:
    """Normalize a parameter list's token slice (exclusive of the outer
    parens) into ordered source-level type names."""
    if not tokens:
        return []
    # split on commas outside nested parens/angles/brackets
    groups: list[list[Token]] = [[]]
    depth = 0
    for t in tokens:
        if t.kind == "punct":
            if t.text in "(<[":
                depth += 1
            elif t.text in ")>]":
                depth -= 1
            elif t.text == "," and depth == 0:
                groups.append([])
                continue
        groups[-1].append(t)
    names = []
    for group in groups:
        # strip annotations and 'final'
        g: list[Token] = []
        i = 0
        while i < len(group):
            t = group[i]
            if t.kind == "punct" and t.text == "@":
                i += 2
                while i + 1 < len(group) and group[i].text == "." and group[i + 1].kind == "ident":
                    i += 2
                if i < len(group) and group[i].kind == "punct" and group[i].text == "(":
                    d = 0
                    while i < len(group):
                        if group[i].text == "(":
                            d += 1
                        elif group[i].text == ")":
                            d -= 1
                            if d == 0:
                                i += 1
                                break
                        i += 1
                continue
            if t.kind == "ident" and t.text == "final":
                i += 1
                continue
            g.append(t)
            i += 1
        if not g:
            return None
        # the trailing identifier is the parameter name; C-style brackets
        # after the name move onto the type
        name_idx = None
        for i in range(len(g) - 1, -1, -1):
            if g[i].kind == "ident":
                name_idx = i
                break
        if name_idx is None:
            return None
        trailing = g[name_idx + 1:]
        type_toks = g[:name_idx]
        if not type_toks:
            return None
        parts = [t.text for t in type_toks]
        # varargs '...' -> array
        text = "".join(parts).replace("...", "[]")
        text += "".join(t.text for t in trailing if t.text in "[]")
        names.append(text)
    return names


def _find_matching_brace(tokens: list[Token], k: int) -> int | None:
    """k at '{'; returns index of matching '}' or None."""
    depth = 0
    while k < len(tokens):
        t = tokens[k]
        if t.kind == "punct":
            if t.text == "{":
                depth += 1
            elif t.text == "}":
                depth -= 1
                if depth == 0:
                    return k
        k += 1
    return None


@dataclass
class _Scope:
    kind: str  # "type" | "block"
    name: str = ""
    is_enum: bool = False
    constants_done: bool = True


def scan_source(src: str) -> ScanResult:
    """Scan Java source text for method and constructor declarations."""
    tokens, comments = _tokenize(src)
    methods: list[MethodInfo] = []
    unbalanced = False
    stack: list[_Scope] = []
    pending_type: str | None = None
    pending_is_enum = False
    # token index of the previous ';', '{' or '}' at any level; declaration
    # starts just after it
    last_boundary = -1

    def type_path() -> str:
        return ".".join(s.name for s in stack if s.kind == "type")

    k = 0
    n = len(tokens)
    while k < n:
        t = tokens[k]
        if t.kind == "ident" and t.text in TYPE_KEYWORDS:
            if k + 1 < n and tokens[k + 1].kind == "ident":
                pending_type = tokens[k + 1].text
                pending_is_enum = t.text == "enum"
                k += 2
                continue
        if t.kind == "punct":
            if t.text == "{":
                if pending_type is not None:
                    stack.append(_Scope("type", pending_type, pending_is_enum,
                                        constants_done=not pending_is_enum))
                    pending_type = None
                else:
                    stack.append(_Scope("block"))
                last_boundary = k
                k += 1
                continue
            if t.text == "}":
                if stack:
                    stack.pop()
                else:
                    unbalanced = True
                last_boundary = k
                k += 1
                continue
            if t.text == ";":
                if stack and stack[-1].kind == "type" and stack[-1].is_enum:
                    stack[-1].constants_done = True
                last_boundary = k
                k += 1
                continue
            if t.text == "(":
                k = _skip_paren_group(tokens, k)
                continue
        in_member_position = (not stack) or (
            stack[-1].kind == "type" and stack[-1].constants_done
        )
        if (
            t.kind == "ident"
            and t.text not in NON_METHOD_KEYWORDS
            and k + 1 < n
            and tokens[k + 1].kind == "punct"
            and tokens[k + 1].text == "("
            and in_member_position
            and _is_declaration_context(tokens, k)
        ):
            parsed = _try_parse_method(tokens, k, src, comments, last_boundary, type_path())
            if parsed is not None:
                info, resume_k, ok = parsed
                if info is not None:
                    methods.append(info)
                if not ok:
                    unbalanced = True
                k = resume_k
                continue
        k += 1

    if stack:
        unbalanced = True
    return ScanResult(methods=methods, unbalanced=unbalanced, comments=comments)


def _try_parse_method(tokens, k, src, comments, last_boundary, path):
    """Attempt to parse a method/constructor whose name token is at k.
    Returns (MethodInfo|None, resume_index, balanced_ok) or None if the
    construct is not a declaration."""
    n = len(tokens)
    name = tokens[k].text
    close = _skip_paren_group(tokens, k + 1)
    if close > n or (close == n and (n == 0 or tokens[-1].text != ")")):
        return None
    param_tokens = tokens[k + 2:close - 1]
    types = _param_type_names(param_tokens)
    if types is None:
        return None

    # after the parameter list: optional throws clause / annotation-member
    # default, then '{' (body) or ';' (abstract/native/annotation member)
    j = close
    # C-style array suffix on return type: int foo()[] { }
    while j + 1 < n and tokens[j].text == "[" and tokens[j + 1].text == "]":
        j += 2
    if j < n and tokens[j].kind == "ident" and tokens[j].text == "throws":
        j += 1
        while j < n and (tokens[j].kind == "ident" or tokens[j].text in ".,"):
            j += 1
    if j < n and tokens[j].kind == "ident" and tokens[j].text == "default":
        j += 1
        while j < n and not (tokens[j].kind == "punct" and tokens[j].text in ";{"):
            j += 1
    if j >= n:
        return None
    terminator = tokens[j]
    if terminator.kind != "punct" or terminator.text not in "{;":
        return None

    # declaration start: first token after the previous ';'/'{'/'}'
    decl_first = last_boundary + 1
    if decl_first > k:
        decl_first = k
    sig_first = _skip_annotations(tokens, decl_first)
    if sig_first > k:
        sig_first = decl_first
    sig_start = tokens[sig_first].start

    if terminator.text == "{":
        end_idx = _find_matching_brace(tokens, j)
        if end_idx is None:
            return None, n, False
        body_end = tokens[end_idx].end
        end_line = tokens[end_idx].line
        resume = j  # let the main loop see '{' so nested types are tracked
    else:
        body_end = terminator.end
        end_line = terminator.line
        resume = j  # main loop records ';' as a declaration boundary

    key = f"{path}.{name}({','.join(types)})" if path else f"{name}({','.join(types)})"
    leading = _leading_comment(comments, tokens, decl_first, sig_first, sig_start)
    info = MethodInfo(
        signature_key=key,
        body_text=src[sig_start:body_end],
        leading_comment=leading,
        span=(tokens[sig_first].line, end_line),
    )
    return info, resume, True


def _leading_comment(comments, tokens, decl_first, sig_first, sig_start):
    """Comment attached to a declaration: the last comment before the
    signature, separated from it only by whitespace and annotations."""
    candidate = None
    for c in comments:
        if c.end <= sig_start:
            candidate = c
        else:
            break
    if candidate is None:
        return ""
    for idx, t in enumerate(tokens):
        if t.start >= sig_start:
            break
        # a trailing comment sharing its line with earlier code is not a
        # summary comment above the declaration
        if t.end <= candidate.start and t.line == candidate.start_line:
            return ""
        # only annotation tokens (indices decl_first..sig_first) may sit
        # between the comment and the signature start
        if t.start >= candidate.end and not (decl_first <= idx < sig_first):
            return ""
    return candidate.text


def extract_methods(src: str) -> list[MethodInfo]:
    """Convenience wrapper returning just the methods (imbalance ignored)."""
    return scan_source(src).methods


# --- normalization -----------------------------------------------------

_PUNCT_RE = re.compile(r"[^\w\s]", re.UNICODE)
_WS_RE = re.compile(r"\s+")


def normalize_comment(text: str) -> str:
    """Strip punctuation, collapse whitespace runs; case-sensitive."""
    return _WS_RE.sub(" ", _PUNCT_RE.sub("", text)).strip()


def normalize_body(text: str) -> str:
    """Collapse whitespace outside string/char/text-block literals: the body
    is re-tokenized and rebuilt with single spaces between tokens, keeping
    literal tokens verbatim."""
    tokens, comments = _tokenize(text)
    spans = sorted(
        [(t.start, t.kind, t.text) for t in tokens]
        + [(c.start, "comment", c.text) for c in comments]
    )
    parts = []
    for _, kind, piece in spans:
        if kind in ("string", "char", "textblock"):
            parts.append(piece)
        else:
            parts.append(_WS_RE.sub(" ", piece))
    return " ".join(parts)


def comment_line_kinds(src: str) -> dict[int, str]:
    """Classify each 1-based line as 'blank', 'comment' (all non-whitespace
    content inside comments), or 'code'."""
    _, comments = _tokenize(src)
    in_comment = [False] * (len(src) + 1)
    for c in comments:
        for i in range(c.start, min(c.end, len(src))):
            in_comment[i] = True
    kinds: dict[int, str] = {}
    line_no = 1
    start = 0
    for i in range(len(src) + 1):
        if i == len(src) or src[i] == "\n":
            segment = src[start:i]
            has_code = any(
                not ch.isspace() and not in_comment[start + off]
                for off, ch in enumerate(segment)
            )
            if has_code:
                kinds[line_no] = "code"
            elif segment.strip():
                kinds[line_no] = "comment"
            else:
                kinds[line_no] = "blank"
            line_no += 1
            start = i + 1
    return kinds


# --- pairing -----------------------------------------------------------

@dataclass
class MethodChange:
    key: str
    old: MethodInfo
    new: MethodInfo
    change_kind: str  # body_changed | comment_changed | both


def pair_and_diff(
    old_source: str,
    new_source: str,
    normalize_bodies: bool = True,
) -> list[MethodChange]:
    """Match methods across two file versions by signature key and report
    the ones whose normalized body or comment differs. Methods present in
    only one version have no counterpart and are skipped."""
    old_methods = {m.signature_key: m for m in extract_methods(old_source)}
    changes: list[MethodChange] = []
    seen: set[str] = set()
    for new in extract_methods(new_source):
        old = old_methods.get(new.signature_key)
        if old is None or new.signature_key in seen:
            continue
        seen.add(new.signature_key)
        if normalize_bodies:
            body_differs = normalize_body(old.body_text) != normalize_body(new.body_text)
        else:
            body_differs = old.body_text != new.body_text
        comment_differs = normalize_comment(old.leading_comment) != normalize_comment(
            new.leading_comment
        )
        if body_differs and comment_differs:
            kind = "both"
        elif body_differs:
            kind = "body_changed"
        elif comment_differs:
            kind = "comment_changed"
        else:
            continue
        changes.append(MethodChange(new.signature_key, old, new, kind))
    return changes
