"""
S-expression reader and printer for the .gat / .gatpf formats.

Atoms are `Atom` (a str) and lists are `SList` (a tuple); both remember the
line and column they started at. Equality ignores positions.
"""
import logging

from services.errors import DslSyntaxError

logger = logging.getLogger(__name__)

DELIMITERS = '();'


class Atom(str):
    line = 0
    column = 0

    def __new__(cls, text, line=0, column=0):
        atom = super().__new__(cls, text)
        atom.line = line
        atom.column = column
        return atom


class SList(tuple):
    line = 0
    column = 0

    def __new__(cls, items=(), line=0, column=0):
        lst = super().__new__(cls, items)
        lst.line = line
        lst.column = column
        return lst


def position(x) -> str:
    return f"{getattr(x, 'line', 0)}:{getattr(x, 'column', 0)}"


# --- Reader ---

class SexprReader:
    def __init__(self, text: str, path: str | None = None):
        self.text = text
        self.path = path
        self.pos = 0
        self.line = 1
        self.column = 1

    def error(self, message, line=None, column=None):
        return DslSyntaxError(message, line or self.line, column or self.column, self.path)

    def _advance(self):
        c = self.text[self.pos]
        self.pos += 1
        if c == '\n':
            self.line += 1
            self.column = 1
        else:
            self.column += 1
        return c

    def _skip_blank(self):
        while self.pos < len(self.text):
            c = self.text[self.pos]
            if c.isspace():
                self._advance()
            elif c == ';':
                while self.pos < len(self.text) and self.text[self.pos] != '\n':
                    self._advance()
            else:
                return

    def read_all(self) -> list:
        items = []
        while True:
            self._skip_blank()
            if self.pos >= len(self.text):
                return items
            items.append(self.read())

    def read(self):
        self._skip_blank()
        if self.pos >= len(self.text):
            raise self.error("unexpected end of input")
        line, column = self.line, self.column
        c = self.text[self.pos]
        if c == ')':
            raise self.error("unexpected ')'")
        if c == '(':
            self._advance()
            items = []
            while True:
                self._skip_blank()
                if self.pos >= len(self.text):
                    raise self.error(f"unclosed '(' opened at {line}:{column}", line, column)
                if self.text[self.pos] == ')':
                    self._advance()
                    return SList(items, line, column)
                items.append(self.read())
        start = self.pos
        while self.pos < len(self.text):
            c = self.text[self.pos]
            if c.isspace() or c in DELIMITERS:
                break
            self._advance()
        return Atom(self.text[start:self.pos], line, column)


def read_all(text: str, path: str | None = None) -> list:
    return SexprReader(text, path).read_all()


def read_one(text: str, path: str | None = None):
    items = read_all(text, path)
    if len(items) != 1:
        raise DslSyntaxError(f"expected exactly one expression, found {len(items)}", 1, 1, path)
    return items[0]


# --- Printer ---

def dumps(x, width: int = 88, indent: int = 0) -> str:
    """Print x, breaking lists that do not fit on one line."""
    flat = _flat(x)
    if isinstance(x, str) or len(flat) + indent <= width or len(x) <= 1:
        return flat
    head = _flat(x[0])
    pad = ' ' * (indent + 2)
    parts = [dumps(child, width, indent + 2) for child in x[1:]]
    return f"({head}\n" + '\n'.join(pad + p for p in parts) + ')'


def _flat(x) -> str:
    if isinstance(x, str):
        return x
    return '(' + ' '.join(_flat(c) for c in x) + ')'


def to_plain(x):
    """Strip positions: nested tuples of str."""
    if isinstance(x, str):
        return str(x)
    return tuple(to_plain(c) for c in x)
