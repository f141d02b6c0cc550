"""
Surface syntax of .gat and .gatpf files.

parse() produces a SourceFile of surface declarations; nothing is elaborated
here (see services.workspace). print_source() emits the canonical form, and
parse(print_source(sf)) == sf.
"""
import logging
from dataclasses import dataclass, field

from services.errors import DslSyntaxError
from services.sexpr import SList, Atom, read_all, dumps

logger = logging.getLogger(__name__)

EVALCTX_KINDS = ('E', 'e', 'v')


# --- Declarations ---

@dataclass(frozen=True)
class RuleDecl:
    kind: str                      # 'sort' | 'term' | 'eq' | 'sort-eq'
    name: str
    ctx: tuple                     # ((name, surface sort), ...)
    args: tuple | None = None      # explicit argument names; None means "all"
    sort: object = None
    lhs: object = None
    rhs: object = None
    line: int = field(default=0, compare=False)

    def to_sexpr(self):
        parts = [self.kind, self.name]
        if self.ctx:
            parts.append(SList(['ctx'] + [SList([n, s]) for n, s in self.ctx]))
        if self.kind in ('sort', 'term') and self.args is not None:
            parts.append(SList(['args'] + list(self.args)))
        if self.kind == 'term':
            parts.append(self.sort)
        elif self.kind == 'eq':
            parts += [self.lhs, '=', self.rhs, ':', self.sort]
        elif self.kind == 'sort-eq':
            parts += [self.lhs, '=', self.rhs]
        return SList(parts)


@dataclass(frozen=True)
class GenSubstDecl:
    rules: tuple
    line: int = field(default=0, compare=False)

    def to_sexpr(self):
        return SList(['@gensubst'] + list(self.rules))


@dataclass(frozen=True)
class EvalCtxDecl:
    entries: tuple                 # ((name, base, (kind, ...)), ...)
    line: int = field(default=0, compare=False)

    def to_sexpr(self):
        return SList(['@evalctx'] + [SList([n, b] + list(k)) for n, b, k in self.entries])


@dataclass(frozen=True)
class LangDecl:
    name: str
    extends: tuple
    items: tuple
    line: int = field(default=0, compare=False)

    def to_sexpr(self):
        parts = ['lang', self.name]
        if self.extends:
            parts.append(SList(['extends'] + list(self.extends)))
        parts += [item.to_sexpr() for item in self.items]
        return SList(parts)


@dataclass(frozen=True)
class CaseDecl:
    rule: str
    params: tuple | None
    out: object
    line: int = field(default=0, compare=False)

    def to_sexpr(self):
        parts = ['case', self.rule]
        if self.params is not None:
            parts.append(SList(['params'] + list(self.params)))
        parts.append(self.out)
        return SList(parts)


@dataclass(frozen=True)
class CompilerDecl:
    name: str
    extends: tuple
    sources: tuple
    target: str
    cases: tuple
    line: int = field(default=0, compare=False)

    def to_sexpr(self):
        parts = ['compiler', self.name]
        if self.extends:
            parts.append(SList(['extends'] + list(self.extends)))
        parts.append(SList(['from'] + list(self.sources)))
        parts.append(SList(['to', self.target]))
        parts += [c.to_sexpr() for c in self.cases]
        return SList(parts)


@dataclass(frozen=True)
class ProofDecl:
    rule: str
    tree: object
    line: int = field(default=0, compare=False)

    def to_sexpr(self):
        return SList(['proof', self.rule, self.tree])


@dataclass(frozen=True)
class ImportDecl:
    paths: tuple
    line: int = field(default=0, compare=False)

    def to_sexpr(self):
        return SList(['import'] + list(self.paths))


@dataclass(frozen=True)
class ParamDecl:
    name: str
    sources: tuple
    param: str
    param_sort: object
    marked: tuple
    positions: tuple = ()          # ((rule, index), ...)
    line: int = field(default=0, compare=False)

    def to_sexpr(self):
        parts = ['@parameterize', self.name,
                 SList(['from'] + list(self.sources)),
                 SList(['param', self.param, self.param_sort]),
                 SList(['mark'] + list(self.marked))]
        parts += [SList(['at', rule, str(index)]) for rule, index in self.positions]
        return SList(parts)


@dataclass(frozen=True)
class EntryDecl:
    """A corpus manifest entry: (<kind> <name> (<option> ...) ...)."""
    kind: str
    name: str
    options: tuple
    line: int = field(default=0, compare=False)

    def option(self, key, default=None):
        for opt in self.options:
            if opt and opt[0] == key:
                return tuple(opt[1:])
        return default

    def to_sexpr(self):
        return SList([self.kind, self.name] + list(self.options))


ENTRY_KINDS = ('language', 'pass', 'param-pass', 'demo')


@dataclass(frozen=True)
class SourceFile:
    path: str | None
    declarations: tuple

    def __eq__(self, other):
        return isinstance(other, SourceFile) and self.declarations == other.declarations

    def __hash__(self):
        return hash(self.declarations)


# --- Parser ---

def parse(text: str, path: str | None = None) -> SourceFile:
    decls = []
    for form in read_all(text, path):
        decls.append(_parse_top(form, path))
    logger.debug(f"Parsed {len(decls)} declarations from {path or '<input>'}")
    return SourceFile(path, tuple(decls))


def _err(message, x, path):
    return DslSyntaxError(message, getattr(x, 'line', 0), getattr(x, 'column', 0), path)


def _is_list(x, head=None):
    if not isinstance(x, tuple) or isinstance(x, str):
        return False
    if head is None:
        return True
    return len(x) > 0 and x[0] == head


def _atom(x, what, path):
    if not isinstance(x, str):
        raise _err(f"expected {what}, found a list", x, path)
    if x.startswith('?'):
        raise _err(f"names starting with '?' are reserved: {x}", x, path)
    return x


def _atoms(xs, what, path):
    return tuple(_atom(x, what, path) for x in xs)


def _parse_top(form, path):
    if not _is_list(form) or not form or not isinstance(form[0], str):
        raise _err("expected a declaration", form, path)
    head = form[0]
    if head == 'lang':
        return _parse_lang(form, path)
    if head == 'compiler':
        return _parse_compiler(form, path)
    if head == 'proof':
        if len(form) != 3:
            raise _err("expected (proof <rule> <tree>)", form, path)
        return ProofDecl(_atom(form[1], 'rule name', path), form[2], form.line)
    if head == 'import':
        return ImportDecl(_atoms(form[1:], 'file name', path), form.line)
    if head == '@parameterize':
        return _parse_param(form, path)
    if head in ENTRY_KINDS:
        if len(form) < 2:
            raise _err(f"expected ({head} <name> ...)", form, path)
        for opt in form[2:]:
            if not _is_list(opt) or not opt:
                raise _err("manifest options must be lists", opt, path)
        return EntryDecl(head, _atom(form[1], 'entry name', path), tuple(form[2:]), form.line)
    raise _err(f"unknown declaration '{head}'", form, path)


def _parse_ctx(x, path):
    if not _is_list(x, 'ctx'):
        raise _err("expected (ctx (x <sort>) ...)", x, path)
    seen = set()
    entries = []
    for entry in x[1:]:
        if not _is_list(entry) or len(entry) != 2:
            raise _err("context entries look like (x <sort>)", entry, path)
        name = _atom(entry[0], 'metavariable', path)
        if name in seen:
            raise _err(f"duplicate context name '{name}'", entry, path)
        seen.add(name)
        entries.append((name, entry[1]))
    return tuple(entries)


def _parse_rule(form, path):
    kind = form[0]
    if len(form) < 2:
        raise _err(f"expected ({kind} <name> ...)", form, path)
    name = _atom(form[1], 'rule name', path)
    rest = list(form[2:])
    ctx = ()
    if rest and _is_list(rest[0], 'ctx'):
        ctx = _parse_ctx(rest.pop(0), path)
    if kind in ('sort', 'term'):
        args = None
        if rest and _is_list(rest[0], 'args'):
            args = _atoms(rest.pop(0)[1:], 'argument name', path)
            names = [n for n, _ in ctx]
            missing = [a for a in args if a not in names]
            if missing:
                raise _err(f"explicit arguments not in context: {', '.join(missing)}", form, path)
            order = [names.index(a) for a in args]
            if order != sorted(order) or len(set(order)) != len(order):
                raise _err("explicit arguments must follow context order", form, path)
        if kind == 'sort':
            if rest:
                raise _err("unexpected trailing items in sort rule", form, path)
            return RuleDecl('sort', name, ctx, args, line=form.line)
        if len(rest) != 1:
            raise _err("expected (term <name> (ctx ...) (args ...) <sort>)", form, path)
        return RuleDecl('term', name, ctx, args, sort=rest[0], line=form.line)
    if kind == 'eq':
        if len(rest) != 5 or rest[1] != '=' or rest[3] != ':':
            raise _err("expected (eq <name> (ctx ...) <lhs> = <rhs> : <sort>)", form, path)
        return RuleDecl('eq', name, ctx, None, sort=rest[4], lhs=rest[0], rhs=rest[2], line=form.line)
    if len(rest) != 3 or rest[1] != '=':
        raise _err("expected (sort-eq <name> (ctx ...) <lhs> = <rhs>)", form, path)
    return RuleDecl('sort-eq', name, ctx, None, lhs=rest[0], rhs=rest[2], line=form.line)


def _parse_lang(form, path):
    if len(form) < 2:
        raise _err("expected (lang <name> ...)", form, path)
    name = _atom(form[1], 'language name', path)
    rest = list(form[2:])
    extends = ()
    if rest and _is_list(rest[0], 'extends'):
        extends = _atoms(rest.pop(0)[1:], 'language name', path)
    items = []
    for item in rest:
        if not _is_list(item) or not item:
            raise _err("expected a rule or directive", item, path)
        head = item[0]
        if head in ('sort', 'term', 'eq', 'sort-eq'):
            items.append(_parse_rule(item, path))
        elif head == '@gensubst':
            items.append(GenSubstDecl(_atoms(item[1:], 'rule name', path), item.line))
        elif head == '@evalctx':
            entries = []
            for entry in item[1:]:
                if not _is_list(entry) or len(entry) < 3:
                    raise _err("expected (<name> <base> <kind> ...)", entry, path)
                kinds = _atoms(entry[2:], 'subterm kind', path)
                bad = [k for k in kinds if k not in EVALCTX_KINDS]
                if bad:
                    raise _err(f"subterm kinds are E, e or v, not {bad[0]}", entry, path)
                entries.append((_atom(entry[0], 'context name', path),
                                _atom(entry[1], 'rule name', path), kinds))
            items.append(EvalCtxDecl(tuple(entries), item.line))
        else:
            raise _err(f"unknown language item '{head}'", item, path)
    return LangDecl(name, extends, tuple(items), form.line)


def _parse_compiler(form, path):
    if len(form) < 2:
        raise _err("expected (compiler <name> ...)", form, path)
    name = _atom(form[1], 'compiler name', path)
    extends, sources, target, cases = (), None, None, []
    for item in form[2:]:
        if _is_list(item, 'extends'):
            extends = _atoms(item[1:], 'compiler name', path)
        elif _is_list(item, 'from'):
            sources = _atoms(item[1:], 'language name', path)
        elif _is_list(item, 'to') and len(item) == 2:
            target = _atom(item[1], 'language name', path)
        elif _is_list(item, 'case'):
            if len(item) == 3:
                cases.append(CaseDecl(_atom(item[1], 'rule name', path), None, item[2], item.line))
            elif len(item) == 4 and _is_list(item[2], 'params'):
                params = _atoms(item[2][1:], 'parameter', path)
                cases.append(CaseDecl(_atom(item[1], 'rule name', path), params, item[3], item.line))
            else:
                raise _err("expected (case <rule> (params ...) <out>)", item, path)
        else:
            raise _err("unexpected compiler item", item, path)
    if not sources or target is None:
        raise _err("compilers need (from ...) and (to ...)", form, path)
    return CompilerDecl(name, extends, sources, target, tuple(cases), form.line)


def _parse_param(form, path):
    if len(form) < 2:
        raise _err("expected (@parameterize <name> ...)", form, path)
    name = _atom(form[1], 'language name', path)
    sources = param = param_sort = None
    marked, positions = (), []
    for item in form[2:]:
        if _is_list(item, 'from') and len(item) >= 2:
            sources = _atoms(item[1:], 'language name', path)
        elif _is_list(item, 'param') and len(item) == 3:
            param = _atom(item[1], 'parameter name', path)
            param_sort = item[2]
        elif _is_list(item, 'mark'):
            marked = _atoms(item[1:], 'rule name', path)
        elif _is_list(item, 'at') and len(item) == 3:
            try:
                index = int(item[2])
            except ValueError:
                raise _err("insertion positions are integers", item, path)
            positions.append((_atom(item[1], 'rule name', path), index))
        else:
            raise _err("unexpected @parameterize item", item, path)
    if sources is None or param is None:
        raise _err("@parameterize needs (from ...) and (param ...)", form, path)
    return ParamDecl(name, sources, param, param_sort, marked, tuple(positions), form.line)


# --- Printer ---

def print_source(sf: SourceFile) -> str:
    return '\n\n'.join(dumps(d.to_sexpr()) for d in sf.declarations) + '\n'


def parse_file(path: str) -> SourceFile:
    with open(path, encoding='utf-8') as f:
        return parse(f.read(), path)
