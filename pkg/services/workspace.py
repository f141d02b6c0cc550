"""
Loads .gat files into elaborated languages, compilers and parameterizations.

Declarations are registered by name when a file is loaded and elaborated on
first use. The full language of a name is the depth-first post-order of its
`extends` graph, each language's own rules appearing once.
"""
import glob
import logging
import os
from dataclasses import dataclass

from services import settings
from services.dsl import (
    RuleDecl, GenSubstDecl, EvalCtxDecl, LangDecl, CaseDecl, CompilerDecl,
    ProofDecl, ImportDecl, ParamDecl, EntryDecl, SourceFile, parse, parse_file,
)
from services.errors import GatError, DuplicateName, DuplicateCase, UnknownDeclaration
from services.kernel import Lang, SortRule, TermRule, SortEqRule, TermEqRule, ctx_names
from services.elaborator import elaborate, elaborate_sort, elaborate_ctx, erase
from services.translate import Compiler, SortCase, TermCase, compile, id_compiler, concat_compilers
from services.metagen import (
    EvalCtxEntry, EvalCtxSpec, ParamSpec, gen_subst_eqs, gen_eval_ctx,
    parameterize_lang, parameterize_compiler,
)

logger = logging.getLogger(__name__)

GAT_SUFFIX = '.gat'
PROOF_SUFFIX = '.gatpf'


@dataclass(frozen=True)
class CompiledPass:
    """A compiler with its languages: `cases` compiles `source_ext` on top of `pre`."""
    name: str
    source_ext: Lang
    source: Lang
    target: Lang
    pre: Compiler
    cases: Compiler
    path: str | None = None

    @property
    def compiler(self) -> Compiler:
        return concat_compilers(self.pre, self.cases)


def merge_compilers(parts) -> Compiler:
    """Concatenate, keeping one copy of cases that several parts share."""
    cases, seen = [], {}
    for part in parts:
        for name, case in part.cases:
            if name in seen:
                if seen[name] != case:
                    raise DuplicateCase(name)
                continue
            seen[name] = case
            cases.append((name, case))
    return Compiler(tuple(cases))


class Workspace:
    def __init__(self, root: str | None = None):
        self.root = root or settings.get_corpus_dir()
        self._files = {}
        self._langs = {}        # name -> LangDecl | ParamDecl
        self._compilers = {}    # name -> CompilerDecl
        self._paths = {}        # declaration name -> file path
        self._entries = []
        self._own = {}
        self._full = {}
        self._passes = {}

    # --- Loading ---

    def load_corpus(self):
        for path in sorted(glob.glob(os.path.join(self.root, f'*{GAT_SUFFIX}'))):
            self.load_file(path)
        return self

    def load_file(self, path: str) -> SourceFile:
        path = os.path.abspath(path)
        if path in self._files:
            return self._files[path]
        sf = parse_file(path)
        self._files[path] = sf
        self._load(sf, path)
        logger.debug(f"Loaded {path}")
        return sf

    def load_text(self, text: str, name: str = "<input>") -> SourceFile:
        """Register declarations from text; imports resolve against the corpus root."""
        sf = parse(text, name)
        self._load(sf, os.path.join(self.root, name))
        return sf

    def _load(self, sf: SourceFile, path: str):
        for decl in sf.declarations:
            if isinstance(decl, ImportDecl):
                for other in decl.paths:
                    self.load_file(self._resolve_import(path, other))
        for decl in sf.declarations:
            self._register(decl, path)

    def _resolve_import(self, importer, name):
        candidate = os.path.join(os.path.dirname(importer), name)
        if not candidate.endswith(GAT_SUFFIX):
            candidate += GAT_SUFFIX
        if not os.path.exists(candidate):
            raise UnknownDeclaration(name, 'file', importer)
        return candidate

    def _register(self, decl, path):
        if isinstance(decl, (LangDecl, ParamDecl)):
            table = self._langs
        elif isinstance(decl, CompilerDecl):
            table = self._compilers
        elif isinstance(decl, EntryDecl):
            self._entries.append((decl, path))
            return
        else:
            return
        if decl.name in self._langs or decl.name in self._compilers:
            raise DuplicateName(decl.name, f"{path}:{decl.line}")
        table[decl.name] = decl
        self._paths[decl.name] = path

    def declared_in(self, path: str) -> list:
        sf = self.load_file(path)
        return [d for d in sf.declarations if isinstance(d, (LangDecl, ParamDecl, CompilerDecl))]

    @property
    def entries(self) -> list:
        return list(self._entries)

    def language_names(self) -> list:
        return list(self._langs)

    def compiler_names(self) -> list:
        return list(self._compilers)

    def is_language(self, name) -> bool:
        return name in self._langs

    def is_compiler(self, name) -> bool:
        return name in self._compilers

    def path_of(self, name):
        return self._paths.get(name)

    def declaration(self, name):
        decl = self._langs.get(name) or self._compilers.get(name)
        if decl is None:
            raise UnknownDeclaration(name)
        return decl

    # --- Languages ---

    def _lang_decl(self, name):
        decl = self._langs.get(name)
        if decl is None:
            raise UnknownDeclaration(name, 'language')
        return decl

    def linearize(self, names) -> list:
        order, visiting = [], set()

        def visit(name):
            if name in order:
                return
            if name in visiting:
                raise GatError(f"cyclic extends through '{name}'")
            visiting.add(name)
            decl = self._lang_decl(name)
            for parent in getattr(decl, 'extends', ()):
                visit(parent)
            visiting.discard(name)
            order.append(name)

        for name in names:
            visit(name)
        return order

    def _concat(self, names) -> Lang:
        rules = []
        for name in self.linearize(names):
            rules.extend(self.own_rules(name).rules)
        return Lang(tuple(rules))

    def language(self, name: str) -> Lang:
        if name not in self._full:
            self._full[name] = self._concat([name])
        return self._full[name]

    def languages(self, names) -> Lang:
        return self._concat(list(names))

    def own_rules(self, name: str) -> Lang:
        if name not in self._own:
            decl = self._lang_decl(name)
            if isinstance(decl, ParamDecl):
                self._own[name] = parameterize_lang(self.param_spec(name), self.languages(decl.sources))
            else:
                self._own[name] = self._elaborate_lang(decl)
            logger.info(f"Elaborated language {name} ({len(self._own[name])} rules)")
        return self._own[name]

    def _elaborate_lang(self, decl: LangDecl) -> Lang:
        base = self.languages(decl.extends).rules if decl.extends else ()
        own = []
        for item in decl.items:
            prefix = Lang(base + tuple(own))
            if isinstance(item, RuleDecl):
                own.append((item.name, self._elaborate_rule(prefix, item, decl.name)))
            elif isinstance(item, GenSubstDecl):
                for rule_name in item.rules:
                    own.extend(gen_subst_eqs(Lang(base + tuple(own)), rule_name))
            elif isinstance(item, EvalCtxDecl):
                spec = EvalCtxSpec(tuple(EvalCtxEntry(n, b, k) for n, b, k in item.entries))
                own.extend(gen_eval_ctx(prefix, spec))
        return Lang(tuple(own))

    def _elaborate_rule(self, prefix: Lang, item: RuleDecl, lang_name: str):
        where = f"{lang_name}.{item.name}"
        ctx = elaborate_ctx(prefix, item.ctx, f"{where}.ctx")
        args = item.args if item.args is not None else ctx_names(ctx)
        if item.kind == 'sort':
            return SortRule(ctx, args)
        if item.kind == 'term':
            return TermRule(ctx, args, elaborate_sort(prefix, ctx, item.sort, f"{where}.sort"))
        if item.kind == 'sort-eq':
            return SortEqRule(ctx, elaborate_sort(prefix, ctx, item.lhs, f"{where}.lhs"),
                              elaborate_sort(prefix, ctx, item.rhs, f"{where}.rhs"))
        sort = elaborate_sort(prefix, ctx, item.sort, f"{where}.sort")
        return TermEqRule(ctx, elaborate(prefix, ctx, item.lhs, sort, f"{where}.lhs"),
                          elaborate(prefix, ctx, item.rhs, sort, f"{where}.rhs"), sort)

    def param_spec(self, name: str) -> ParamSpec:
        decl = self._lang_decl(name)
        if not isinstance(decl, ParamDecl):
            raise UnknownDeclaration(name, 'parameterization')
        base = self.languages(decl.sources)
        sort = elaborate_sort(base, (), decl.param_sort, f"{name}.param")
        return ParamSpec(decl.param, sort, frozenset(decl.marked), dict(decl.positions))

    # --- Compilers ---

    def compiled(self, name: str) -> CompiledPass:
        if name not in self._passes:
            decl = self._compilers.get(name)
            if decl is None:
                raise UnknownDeclaration(name, 'compiler')
            self._passes[name] = self._elaborate_compiler(decl)
        return self._passes[name]

    def _pre_part(self, name) -> Compiler:
        if name in self._compilers:
            return self.compiled(name).compiler
        if name in self._langs:
            return id_compiler(self.language(name))
        raise UnknownDeclaration(name, 'compiler or language')

    def _elaborate_compiler(self, decl: CompilerDecl) -> CompiledPass:
        target = self.language(decl.target)
        source = self.languages(decl.sources)
        source_ext = Lang(tuple(r for name in decl.sources for r in self.own_rules(name).rules))
        pre = merge_compilers([self._pre_part(n) for n in decl.extends])
        by_rule = {}
        for case in decl.cases:
            if case.rule in by_rule:
                raise DuplicateCase(case.rule, f"{decl.name}:{case.line}")
            by_rule[case.rule] = case
        unknown = [r for r in by_rule if r not in source_ext]
        if unknown:
            raise GatError(f"cases for rules outside the compiled languages: {', '.join(unknown)}", decl.name)
        seen = pre
        cases = []
        for rule_name, rule in source_ext:
            case = by_rule.get(rule_name)
            if case is None or not isinstance(rule, (SortRule, TermRule)):
                continue
            compiled_case = self._elaborate_case(decl.name, target, seen, rule_name, rule, case)
            cases.append((rule_name, compiled_case))
            seen = Compiler(seen.cases + ((rule_name, compiled_case),))
        logger.info(f"Elaborated compiler {decl.name} ({len(cases)} cases)")
        return CompiledPass(decl.name, source_ext, source, target, pre, Compiler(tuple(cases)),
                            self._paths.get(decl.name))

    def _elaborate_case(self, cmp_name, target, seen, rule_name, rule, case: CaseDecl):
        where = f"{cmp_name}.{rule_name}"
        params = ctx_names(rule.ctx)
        if case.params is not None and tuple(case.params) != params:
            raise GatError(f"case parameters must be ({' '.join(params)})", where)
        ctx = compile(seen, rule.ctx)
        if isinstance(rule, SortRule):
            return SortCase(params, elaborate_sort(target, ctx, case.out, where))
        return TermCase(params, elaborate(target, ctx, case.out, compile(seen, rule.sort), where))

    def param_pass(self, name: str, compiler: str, source: str, target: str) -> CompiledPass:
        """The parameterization of `compiler` between two parameterized languages."""
        base = self.compiled(compiler)
        spec_s, spec_t = self.param_spec(source), self.param_spec(target)
        full = parameterize_compiler(spec_s, spec_t, base.compiler,
                                     self.languages(self._lang_decl(source).sources),
                                     self.languages(self._lang_decl(target).sources))
        source_lang, target_lang = self.language(source), self.language(target)
        covered = Lang(tuple((n, r) for n, r in source_lang if n in full))
        rest = Lang(tuple((n, r) for n, r in source_lang if n not in full))
        return CompiledPass(name, covered, source_lang, target_lang, id_compiler(rest), full,
                            self._paths.get(compiler))

    # --- Proofs ---

    def proofs_for(self, pass_name: str, proof_dir: str | None = None) -> dict:
        """Surface manual proofs keyed by source rule, from <dir>/<pass>.gatpf."""
        if proof_dir is None:
            origin = self._paths.get(pass_name)
            proof_dir = os.path.join(os.path.dirname(origin) if origin else self.root, 'proofs')
        path = os.path.join(proof_dir, f"{pass_name}{PROOF_SUFFIX}")
        if not os.path.exists(path):
            return {}
        proofs = {}
        for decl in parse_file(path).declarations:
            if isinstance(decl, ProofDecl):
                proofs[decl.rule] = decl.tree
        logger.info(f"Read {len(proofs)} manual proofs for {pass_name}")
        return proofs


# --- Printing elaborated objects back to declarations ---

def rule_decl(lang: Lang, name: str, rule) -> RuleDecl:
    ctx = tuple((x, erase(lang, sort)) for x, sort in rule.ctx)
    if isinstance(rule, SortRule):
        return RuleDecl('sort', name, ctx, tuple(rule.explicit_args))
    if isinstance(rule, TermRule):
        return RuleDecl('term', name, ctx, tuple(rule.explicit_args), sort=erase(lang, rule.sort))
    if isinstance(rule, SortEqRule):
        return RuleDecl('sort-eq', name, ctx, lhs=erase(lang, rule.lhs), rhs=erase(lang, rule.rhs))
    return RuleDecl('eq', name, ctx, sort=erase(lang, rule.sort),
                    lhs=erase(lang, rule.lhs), rhs=erase(lang, rule.rhs))


def lang_decl(name: str, lang: Lang, extends=(), base: Lang | None = None) -> LangDecl:
    """Print `lang` as a language extending `extends`; heads resolve in base + lang."""
    scope = Lang((base.rules if base is not None else ()) + lang.rules)
    return LangDecl(name, tuple(extends), tuple(rule_decl(scope, n, r) for n, r in lang))


def compiler_decl(name: str, cmp: Compiler, sources, target_name: str, target: Lang, extends=()) -> CompilerDecl:
    cases = tuple(CaseDecl(rule, tuple(case.params), erase(target, case.out)) for rule, case in cmp.cases)
    return CompilerDecl(name, tuple(extends), tuple(sources), target_name, cases)
