"""Line-granular static analysis for a Java-like source subset.

Statements are whole lines, blocks are brace-delimited, and declarations,
assignments, parameters, method declarations, calls, and field references
are recognized from token patterns. Lines the subset cannot interpret
degrade to isolated statements rather than errors, so arbitrary text is
always accepted.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

KEYWORDS = frozenset("""
    abstract assert boolean break byte case catch char class const continue
    default do double else enum extends final finally float for goto if
    implements import instanceof int interface long native new package
    private protected public return short static strictfp super switch
    synchronized this throw throws transient try void volatile while var
    true false null
""".split())

PRIMITIVE_TYPES = frozenset(
    "boolean byte char double float int long short void var".split())

MODIFIERS = frozenset(
    "public private protected static final abstract synchronized native "
    "strictfp transient volatile".split())

BRANCH_KEYWORDS = frozenset("if for while switch case else".split())

ASSIGN_OPS = frozenset(
    "= += -= *= /= %= &= |= ^= <<= >>= >>>=".split())

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>\s+)
    | (?P<str>"(?:\\.|[^"\\])*(?:"|$))
    | (?P<char>'(?:\\.|[^'\\])*(?:'|$))
    | (?P<num>\d[0-9A-Fa-fxXlLfFdD_.]*)
    | (?P<id>[A-Za-z_$][A-Za-z0-9_$]*)
    | (?P<op>>>>=|<<=|>>=|>>>|==|!=|<=|>=|&&|\|\||\+\+|--|\+=|-=|\*=|/=|%=|&=|\^=|\|=|<<|>>|->|::|[+\-*/%=<>!&|^~?])
    | (?P<punct>[{}()\[\];,.:@])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "str" | "char" | "num" | "id" | "op" | "punct"
    text: str


@dataclass
class Block:
    block_id: int
    parent: int | None
    kind: str = "other"  # "top" | "class" | "method" | "branch" | "other"
    open_line: int | None = None
    statements: list[int] = field(default_factory=list)


@dataclass
class LineInfo:
    line_no: int
    tokens: list[Token]
    block: int = 0           # enclosing block of the statement
    opens: int | None = None  # block opened on this line, if it survives EOL
    is_statement: bool = False
    roles: dict[int, str] = field(default_factory=dict)


@dataclass(frozen=True)
class VarDef:
    name: str
    line_no: int
    scope_block: int
    declares: bool  # declaration/parameter (True) vs plain assignment (False)


@dataclass(frozen=True)
class MethodDecl:
    name: str
    arity: int
    line_no: int


@dataclass(frozen=True)
class Call:
    name: str
    arity: int
    line_no: int


@dataclass
class FileAnalysis:
    lines: list[LineInfo]
    blocks: dict[int, Block]
    defs: list[VarDef]
    uses: list[tuple[str, int]]            # (name, line_no)
    methods: list[MethodDecl]
    calls: list[Call]
    fields: dict[str, list[int]]           # field name -> declaration lines
    field_refs: list[tuple[str, int]]      # (field name, referencing line)

    def ancestors(self, block_id: int) -> list[int]:
        """Chain from block_id up to the top block, inclusive."""
        chain = [block_id]
        while (parent := self.blocks[chain[-1]].parent) is not None:
            chain.append(parent)
        return chain


def _strip_comments(source: str) -> list[str]:
    """Blank out // and /* */ comments, preserving line structure."""
    out: list[str] = []
    in_block = False
    for line in source.splitlines():
        buf: list[str] = []
        i = 0
        n = len(line)
        while i < n:
            if in_block:
                end = line.find("*/", i)
                if end == -1:
                    i = n
                else:
                    in_block = False
                    i = end + 2
                continue
            ch = line[i]
            if ch == "/" and i + 1 < n and line[i + 1] == "/":
                break
            if ch == "/" and i + 1 < n and line[i + 1] == "*":
                in_block = True
                i += 2
                continue
            if ch in "\"'":
                m = _TOKEN_RE.match(line, i)
                if m and m.lastgroup in ("str", "char"):
                    buf.append(m.group())
                    i = m.end()
                    continue
            buf.append(ch)
            i += 1
        out.append("".join(buf))
    return out


def tokenize_line(text: str) -> list[Token]:
    """Lex one line in isolation (comments within the line are dropped)."""
    stripped = _strip_comments(text)
    return _lex(stripped[0]) if stripped else []


def _lex(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:  # character outside the subset; skip it
            pos += 1
            continue
        if m.lastgroup != "ws":
            tokens.append(Token(kind=m.lastgroup, text=m.group()))
        pos = m.end()
    return tokens


def _lex_lines(source: str) -> list[list[Token]]:
    return [_lex(line) for line in _strip_comments(source)]


def _skip_type_suffix(tokens: list[Token], i: int) -> int:
    """Skip generics and array brackets after a type name; return next index."""
    n = len(tokens)
    if i < n and tokens[i].text == "<":
        depth = 1
        i += 1
        while i < n and depth > 0:
            t = tokens[i].text
            if t == "<":
                depth += 1
            elif t == ">":
                depth -= 1
            elif t == ">>":
                depth -= 2
            elif t == ">>>":
                depth -= 3
            i += 1
        if depth > 0:
            return -1
    while i + 1 < n and tokens[i].text == "[" and tokens[i + 1].text == "]":
        i += 2
    return i


def _matching_paren(tokens: list[Token], open_idx: int) -> int:
    depth = 0
    for j in range(open_idx, len(tokens)):
        t = tokens[j].text
        if t == "(":
            depth += 1
        elif t == ")":
            depth -= 1
            if depth == 0:
                return j
    return -1


def _split_top_level(tokens: list[Token]) -> list[list[Token]]:
    """Split a token slice on commas at bracket depth zero."""
    chunks: list[list[Token]] = []
    current: list[Token] = []
    depth = 0
    for tok in tokens:
        t = tok.text
        if t in "([":
            depth += 1
        elif t in ")]":
            depth -= 1
        elif t == "<":
            depth += 1
        elif t == ">":
            depth -= 1
        elif t == ">>":
            depth -= 2
        if t == "," and depth == 0:
            chunks.append(current)
            current = []
        else:
            current.append(tok)
    if current:
        chunks.append(current)
    return chunks


def _find_method_decl(tokens: list[Token]) -> tuple[MethodDecl, int, list[str]] | None:
    """Detect `name(params...) [throws ...] {` on one line.

    Returns (decl with line_no 0, name index, parameter names) or None.
    """
    for i, tok in enumerate(tokens):
        if tok.kind != "id" or tok.text in KEYWORDS:
            continue
        if i + 1 >= len(tokens) or tokens[i + 1].text != "(":
            continue
        prev = tokens[i - 1].text if i > 0 else None
        if prev in (".", "new"):
            continue
        close = _matching_paren(tokens, i + 1)
        if close == -1:
            continue
        j = close + 1
        if j < len(tokens) and tokens[j].text == "throws":
            j += 1
            while j < len(tokens) and (tokens[j].kind == "id" or tokens[j].text in (",", ".")):
                j += 1
        if j >= len(tokens) or tokens[j].text != "{":
            continue
        params: list[str] = []
        inner = tokens[i + 2:close]
        if inner:
            for chunk in _split_top_level(inner):
                names = [t.text for t in chunk if t.kind == "id" and t.text not in KEYWORDS]
                if names:
                    params.append(names[-1])
        arity = len(_split_top_level(inner)) if inner else 0
        return MethodDecl(name=tok.text, arity=arity, line_no=0), i, params
    return None


def analyze_file(source: str) -> FileAnalysis:
    """Build block structure, def/use sets, methods, calls, and fields."""
    token_lines = _lex_lines(source)
    blocks: dict[int, Block] = {0: Block(0, None, kind="top")}
    stack = [0]
    next_id = 1
    lines: list[LineInfo] = []

    for line_no, toks in enumerate(token_lines, start=1):
        info = LineInfo(line_no=line_no, tokens=toks)
        i = 0
        while i < len(toks) and toks[i].text == "}":
            if len(stack) > 1:
                stack.pop()
            i += 1
        info.block = stack[-1]
        opened: list[int] = []
        for tok in toks[i:]:
            if tok.text == "{":
                block = Block(next_id, stack[-1], open_line=line_no)
                blocks[next_id] = block
                stack.append(next_id)
                opened.append(next_id)
                next_id += 1
            elif tok.text == "}" and len(stack) > 1:
                popped = stack.pop()
                if popped in opened:
                    opened.remove(popped)
        info.opens = opened[-1] if opened else None
        info.is_statement = any(t.text not in ("{", "}") for t in toks)
        lines.append(info)

    defs: list[VarDef] = []
    uses: list[tuple[str, int]] = []
    methods: list[MethodDecl] = []
    calls: list[Call] = []

    for info in lines:
        if not info.is_statement:
            continue
        blocks[info.block].statements.append(info.line_no)
        toks = info.tokens
        roles: dict[int, str] = {}
        def_scope = info.opens if info.opens is not None else info.block

        decl = _find_method_decl(toks)
        if decl is not None:
            md, name_idx, params = decl
            methods.append(MethodDecl(md.name, md.arity, info.line_no))
            roles[name_idx] = "method"
            close = _matching_paren(toks, name_idx + 1)
            for j in range(name_idx + 1, close + 1):
                roles.setdefault(j, "params")
            for p in params:
                defs.append(VarDef(p, info.line_no, def_scope, declares=True))
            if info.opens is not None:
                blocks[info.opens].kind = "method"

        if any(t.text in ("class", "interface", "enum") for t in toks):
            for bid in _opened_blocks(info):
                blocks[bid].kind = "class"
        elif toks and toks[0].kind == "id" and toks[0].text in BRANCH_KEYWORDS:
            if info.opens is not None and blocks[info.opens].kind == "other":
                blocks[info.opens].kind = "branch"

        # call sites: name '(' where name is not a keyword or declaration,
        # not behind a dot unless the receiver is `this`
        for i, tok in enumerate(toks):
            if tok.kind != "id" or tok.text in KEYWORDS or i in roles:
                continue
            if i + 1 >= len(toks) or toks[i + 1].text != "(":
                continue
            prev = toks[i - 1].text if i > 0 else None
            if prev == "." and not (i >= 2 and toks[i - 2].text == "this"):
                continue
            close = _matching_paren(toks, i + 1)
            if close == -1:
                continue
            inner = toks[i + 2:close]
            arity = len(_split_top_level(inner)) if inner else 0
            calls.append(Call(tok.text, arity, info.line_no))
            roles[i] = "call"

        # declarations: TYPE name [= init][, name [= init]]* terminator
        i = 0
        while i < len(toks):
            tok = toks[i]
            if i in roles or tok.kind != "id" or (
                    tok.text in KEYWORDS and tok.text not in PRIMITIVE_TYPES):
                i += 1
                continue
            j = _skip_type_suffix(toks, i + 1)
            if j == -1 or j >= len(toks) or toks[j].kind != "id" \
                    or toks[j].text in KEYWORDS or j in roles:
                i += 1
                continue
            follower = toks[j + 1].text if j + 1 < len(toks) else None
            if follower not in ("=", ";", ",", ")", ":"):
                i += 1
                continue
            roles[i] = "type"
            k = j
            while k < len(toks):  # declarator list
                if toks[k].kind != "id" or toks[k].text in KEYWORDS:
                    break
                roles[k] = "decl"
                defs.append(VarDef(toks[k].text, info.line_no, def_scope, declares=True))
                k += 1
                if k < len(toks) and toks[k].text == "=":
                    depth = 0
                    k += 1
                    while k < len(toks):
                        t = toks[k].text
                        if t in "([":
                            depth += 1
                        elif t in ")]":
                            depth -= 1
                        if depth == 0 and t in (",", ";"):
                            break
                        if depth < 0:
                            break
                        k += 1
                if k < len(toks) and toks[k].text == ",":
                    k += 1
                    continue
                break
            i = k + 1

        # plain assignments: name OP= value, receiver not behind a dot
        for i, tok in enumerate(toks):
            if tok.kind != "id" or tok.text in KEYWORDS or i in roles:
                continue
            nxt = toks[i + 1].text if i + 1 < len(toks) else None
            prev = toks[i - 1].text if i > 0 else None
            if nxt in ASSIGN_OPS and prev != ".":
                roles[i] = "assign"
                defs.append(VarDef(tok.text, info.line_no, def_scope, declares=False))

        # remaining identifiers in value position are reads
        for i, tok in enumerate(toks):
            if tok.kind != "id" or tok.text in KEYWORDS or i in roles:
                continue
            prev = toks[i - 1].text if i > 0 else None
            nxt = toks[i + 1].text if i + 1 < len(toks) else None
            if prev == "." or nxt == "(":
                continue
            roles[i] = "use"
            uses.append((tok.text, info.line_no))

        info.roles = roles

    analysis = FileAnalysis(lines=lines, blocks=blocks, defs=defs, uses=uses,
                            methods=methods, calls=calls, fields={}, field_refs=[])
    _collect_fields(analysis)
    return analysis


def _opened_blocks(info: LineInfo) -> list[int]:
    return [info.opens] if info.opens is not None else []


def _collect_fields(analysis: FileAnalysis) -> None:
    """Register class-level declarations and the lines referencing them."""
    for d in analysis.defs:
        if d.declares and analysis.blocks[d.scope_block].kind == "class":
            analysis.fields.setdefault(d.name, []).append(d.line_no)
    if not analysis.fields:
        return

    local_decls = [d for d in analysis.defs
                   if d.declares and analysis.blocks[d.scope_block].kind != "class"]

    for info in analysis.lines:
        if not info.is_statement:
            continue
        toks = info.tokens
        roles = info.roles
        chain = set(analysis.ancestors(info.block))
        if info.opens is not None:
            chain.add(info.opens)
        for i, tok in enumerate(toks):
            if tok.kind != "id" or tok.text not in analysis.fields:
                continue
            explicit_this = i >= 2 and toks[i - 1].text == "." and toks[i - 2].text == "this"
            if explicit_this:
                analysis.field_refs.append((tok.text, info.line_no))
                continue
            if roles.get(i) not in ("use", "assign"):
                continue
            shadowed = any(d.name == tok.text and d.scope_block in chain
                           and d.line_no <= info.line_no for d in local_decls)
            if not shadowed:
                analysis.field_refs.append((tok.text, info.line_no))


def visible_defs(analysis: FileAnalysis, name: str, use_line: int,
                 use_block: int) -> list[VarDef]:
    """Definitions of `name` visible at (use_line, use_block), earliest first."""
    chain = set(analysis.ancestors(use_block))
    out = [d for d in analysis.defs
           if d.name == name and d.line_no < use_line and d.scope_block in chain]
    out.sort(key=lambda d: d.line_no)
    return out


def cfg_edges(analysis: FileAnalysis) -> set[tuple[int, int]]:
    """Sequential flow within blocks plus branch-head entry edges."""
    edges: set[tuple[int, int]] = set()
    for block in analysis.blocks.values():
        stmts = block.statements
        for a, b in zip(stmts, stmts[1:]):
            edges.add((a, b))
    for info in analysis.lines:
        if not info.is_statement or not info.tokens:
            continue
        first = info.tokens[0]
        if first.kind == "id" and first.text in BRANCH_KEYWORDS \
                and info.opens is not None:
            inner = analysis.blocks[info.opens].statements
            if inner:
                edges.add((info.line_no, inner[0]))
    return {(a, b) for a, b in edges if a != b}


def ddg_edges(analysis: FileAnalysis) -> set[tuple[int, int]]:
    """def -> use edges; the latest visible definition reaches each read."""
    edges: set[tuple[int, int]] = set()
    line_block = {info.line_no: info.block for info in analysis.lines}
    for name, use_line in analysis.uses:
        candidates = visible_defs(analysis, name, use_line, line_block[use_line])
        if candidates:
            d = candidates[-1]
            if d.line_no != use_line:
                edges.add((d.line_no, use_line))
    return edges


def cg_edges(analysis: FileAnalysis) -> set[tuple[int, int]]:
    """call site -> declaration of a same-file method with equal name/arity."""
    edges: set[tuple[int, int]] = set()
    by_sig: dict[tuple[str, int], list[int]] = {}
    for m in analysis.methods:
        by_sig.setdefault((m.name, m.arity), []).append(m.line_no)
    for call in analysis.calls:
        for decl_line in by_sig.get((call.name, call.arity), ()):
            if decl_line != call.line_no:
                edges.add((call.line_no, decl_line))
    return edges


def cmfg_edges(analysis: FileAnalysis) -> set[tuple[int, int]]:
    """field declaration -> lines referencing the field."""
    edges: set[tuple[int, int]] = set()
    for name, ref_line in analysis.field_refs:
        for decl_line in analysis.fields.get(name, ()):
            if decl_line != ref_line:
                edges.add((decl_line, ref_line))
    return edges
