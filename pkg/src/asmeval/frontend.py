"""Intel-syntax IA-32 front end: parsing, program completion, validation, SDN repair.

The validator stands in for an external assembler. It accepts exactly the
subset the symbolic executor can run, reports warnings for questionable but
assemblable code, and reports undefined labels separately so they can be
repaired with fictitious labels that jump to the exit.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Union

REG32 = ("EAX", "ECX", "EDX", "EBX", "ESP", "EBP", "ESI", "EDI")

# name -> (parent 32-bit register, low bit, width)
REGISTERS: dict[str, tuple[str, int, int]] = {r: (r, 0, 32) for r in REG32}
for _r in ("AX", "CX", "DX", "BX", "SP", "BP", "SI", "DI"):
    REGISTERS[_r] = ("E" + _r, 0, 16)
for _r in "ACDB":
    REGISTERS[_r + "L"] = (f"E{_r}X", 0, 8)
    REGISTERS[_r + "H"] = (f"E{_r}X", 8, 8)

SIZES = {"BYTE": 8, "WORD": 16, "DWORD": 32}
SIZE_NAMES = {v: k for k, v in SIZES.items()}

# mnemonic -> operand count
ARITY = {
    "mov": 2, "xchg": 2, "lea": 2, "push": 1, "pop": 1,
    "add": 2, "sub": 2, "inc": 1, "dec": 1, "neg": 1, "mul": 1,
    "xor": 2, "and": 2, "or": 2, "not": 1, "test": 2, "cmp": 2,
    "shl": 2, "shr": 2, "nop": 0,
    "jmp": 1, "je": 1, "jne": 1, "js": 1, "jns": 1, "loop": 1, "int": 1,
}
ALIASES = {"jz": "je", "jnz": "jne"}
CONDITIONAL = ("je", "jne", "js", "jns", "loop")
BRANCHES = CONDITIONAL + ("jmp",)
LABEL_ONLY = "label"

ENTRY_LABEL = "_start"
EXIT_LABEL = "myExitAddr"

_IDENT = re.compile(r"[A-Za-z_.?$][\w.?$@#~]*\Z")
_ORDINALS = ("first", "second", "third")


class ParseError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"{message}, line {line}")
        self.line = line


# ------------------------------------------------------------------ types


@dataclass(frozen=True)
class SourceSnippet:
    text: str
    lines: tuple[str, ...]

    @classmethod
    def from_text(cls, text: str) -> "SourceSnippet":
        return cls(text, tuple(s for _, s in _statements(text)))


@dataclass(frozen=True)
class Register:
    name: str
    width: int


@dataclass(frozen=True)
class Immediate:
    value: int
    width: int | None = None


@dataclass(frozen=True)
class Memory:
    base: str | None = None
    index: str | None = None
    scale: int = 1
    disp: int = 0
    size: int | None = None


@dataclass(frozen=True)
class LabelRef:
    name: str


@dataclass(frozen=True)
class SizePrefixed:
    inner: "Operand"
    size: int


Operand = Union[Register, Immediate, Memory, LabelRef, SizePrefixed]


@dataclass(frozen=True)
class Instruction:
    mnemonic: str
    operands: tuple[Operand, ...] = ()
    label: str | None = None
    source_line: int = 0


@dataclass(frozen=True)
class ProgramUnit:
    instructions: tuple[Instruction, ...]
    labels: dict[str, int]
    exit_label: str = EXIT_LABEL
    repaired_symbols: frozenset[str] = frozenset()

    @property
    def exit_index(self) -> int:
        return self.labels[self.exit_label]

    def __hash__(self) -> int:
        return hash((self.instructions, self.exit_label, self.repaired_symbols))


@dataclass(frozen=True)
class SyntaxOutcome:
    status: str  # "NoErrors" | "Warnings" | "SdnError" | "Error"
    messages: tuple[str, ...] = ()
    missing: frozenset[str] = field(default_factory=frozenset)

    @property
    def ok(self) -> bool:
        return self.status in ("NoErrors", "Warnings")


# ----------------------------------------------------------------- parsing


def _strip_comment(line: str) -> str:
    quote = None
    for i, ch in enumerate(line):
        if quote:
            if ch == quote:
                quote = None
        elif ch in "'\"`":
            quote = ch
        elif ch == ";":
            return line[:i]
    return line


def _statements(text: str):
    text = text.replace("\\n", "\n")
    for n, raw in enumerate(text.split("\n"), 1):
        s = _strip_comment(raw).strip()
        if s:
            yield n, s


def _split_operands(s: str) -> list[str]:
    parts, depth, quote, cur = [], 0, None, []
    for ch in s:
        if quote:
            quote = None if ch == quote else quote
        elif ch in "'\"`":
            quote = ch
        elif ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
            continue
        cur.append(ch)
    parts.append("".join(cur).strip())
    return parts


_NUM_HEX = re.compile(r"0x([0-9a-f]+)\Z", re.I)
_NUM_HSUF = re.compile(r"([0-9][0-9a-f]*)h\Z", re.I)
_NUM_BIN = re.compile(r"0b([01]+)\Z", re.I)
_NUM_DEC = re.compile(r"[0-9]+\Z")


def parse_number(tok: str) -> int | None:
    """Integer literal in 0x.., ..h, 0b.. or decimal form, optionally negated."""
    tok = tok.strip()
    sign = 1
    if tok[:1] in "+-":
        sign = -1 if tok[0] == "-" else 1
        tok = tok[1:].strip()
    if not tok:
        return None
    if m := _NUM_HEX.match(tok):
        return sign * int(m.group(1), 16)
    if m := _NUM_HSUF.match(tok):
        return sign * int(m.group(1), 16)
    if m := _NUM_BIN.match(tok):
        return sign * int(m.group(1), 2)
    if _NUM_DEC.match(tok):
        return sign * int(tok, 10)
    if len(tok) >= 3 and tok[0] == tok[-1] and tok[0] in "'\"`" and len(tok) <= 6:
        body = tok[1:-1].encode("latin-1", "replace")
        if body:
            return sign * int.from_bytes(body, "little")
    return None


def _parse_memory(body: str, size: int | None, line: int) -> Memory:
    expr = body.replace(" ", "")
    if not expr:
        raise ParseError("empty memory reference", line)
    terms = re.findall(r"[+-]?[^+-]+", expr)
    if "".join(terms) != expr:
        raise ParseError(f"unparseable memory operand [{body}]", line)
    base = index = None
    scale, disp = 1, 0
    for term in terms:
        neg = term.startswith("-")
        t = term.lstrip("+-")
        if "*" in t:
            a, _, b = t.partition("*")
            reg, num = (a, b) if a.upper() in REGISTERS else (b, a)
            s = parse_number(num)
            if reg.upper() not in REGISTERS or s is None or neg:
                raise ParseError(f"invalid effective address [{body}]", line)
            if index is not None:
                raise ParseError(f"invalid effective address [{body}]", line)
            index, scale = reg.upper(), s
        elif t.upper() in REGISTERS:
            if neg:
                raise ParseError(f"invalid effective address [{body}]", line)
            if base is None:
                base = t.upper()
            elif index is None:
                index = t.upper()
            else:
                raise ParseError(f"invalid effective address [{body}]", line)
        else:
            v = parse_number(t)
            if v is None:
                raise ParseError(f"unparseable memory operand [{body}]", line)
            disp += -v if neg else v
    return Memory(base, index, scale, disp, size)


def _parse_operand(tok: str, line: int, branch: bool) -> Operand:
    words = tok.split(None, 1)
    head = words[0].upper() if words else ""
    if branch and head in ("SHORT", "NEAR") and len(words) == 2:
        return _parse_operand(words[1], line, branch)
    if head in SIZES:
        rest = words[1].strip() if len(words) == 2 else ""
        if rest.upper().startswith("PTR"):
            rest = rest[3:].strip()
        if not rest:
            raise ParseError(f"missing operand after {head}", line)
        inner = _parse_operand(rest, line, branch)
        if isinstance(inner, Memory):
            return Memory(inner.base, inner.index, inner.scale, inner.disp, SIZES[head])
        if isinstance(inner, Immediate):
            return SizePrefixed(Immediate(inner.value, SIZES[head]), SIZES[head])
        return SizePrefixed(inner, SIZES[head])
    if tok.startswith("[") and tok.endswith("]"):
        return _parse_memory(tok[1:-1], None, line)
    up = tok.upper()
    if up in REGISTERS:
        return Register(up, REGISTERS[up][2])
    v = parse_number(tok)
    if v is not None:
        return Immediate(v)
    if _IDENT.match(tok):
        return LabelRef(tok)
    raise ParseError(f"unparseable operand '{tok}'", line)


def _parse_statement(line: int, text: str) -> Instruction:
    label = None
    m = re.match(r"([^\s:\[\]'\",]+)\s*:(?!:)(.*)\Z", text)
    if m and m.group(1).upper() not in SIZES:
        label = m.group(1)
        if not _IDENT.match(label) or label.upper() in REGISTERS:
            raise ParseError(f"malformed label '{label}'", line)
        text = m.group(2).strip()
        if not text:
            return Instruction(LABEL_ONLY, (), label, line)
    if ":" in text.split(None, 1)[0]:
        raise ParseError(f"malformed label '{text.split(None, 1)[0]}'", line)
    head, _, rest = text.partition(" ")
    mnemonic = head.lower()
    mnemonic = ALIASES.get(mnemonic, mnemonic)
    if mnemonic not in ARITY:
        raise ParseError(f"unknown mnemonic '{head}'", line)
    rest = rest.strip()
    raw = _split_operands(rest) if rest else []
    arity = ARITY[mnemonic]
    for i, r in enumerate(raw):
        if not r:
            raise ParseError(f"missing {_ORDINALS[min(i, 2)]} operand", line)
    if len(raw) != arity:
        raise ParseError(f"'{mnemonic}' expects {arity} operand(s), got {len(raw)}", line)
    ops = tuple(_parse_operand(r, line, mnemonic in BRANCHES) for r in raw)
    return Instruction(mnemonic, ops, label, line)


def parse_snippet(text: str) -> list[Instruction]:
    """Parse a snippet into one :class:`Instruction` per statement.

    Raises :class:`ParseError` naming the line on unknown mnemonics, wrong
    operand counts, unparseable operands and malformed labels.
    """
    return [_parse_statement(n, s) for n, s in _statements(text)]


# --------------------------------------------------------------- programs


def _label_table(instructions: tuple[Instruction, ...], exit_label: str) -> dict[str, int]:
    labels: dict[str, int] = {}
    for i, ins in enumerate(instructions):
        if ins.label is not None:
            labels.setdefault(ins.label, i)
    labels.setdefault(exit_label, len(instructions))
    return labels


def complete_program(body: list[Instruction] | tuple[Instruction, ...]) -> ProgramUnit:
    """Wrap a parsed body in the synthetic entry label and final exit jump."""
    instructions = (
        (Instruction(LABEL_ONLY, (), ENTRY_LABEL),)
        + tuple(body)
        + (Instruction("jmp", (LabelRef(EXIT_LABEL),)),)
    )
    return ProgramUnit(instructions, _label_table(instructions, EXIT_LABEL))


def repair_sdn(program: ProgramUnit, missing) -> ProgramUnit:
    """Append ``name: jmp <exit>`` for each missing symbol."""
    names = sorted(set(missing) - program.repaired_symbols)
    if not names:
        return program
    for n in names:
        if n in program.labels:
            raise ValueError(f"cannot repair '{n}': label already defined")
    extra = tuple(Instruction("jmp", (LabelRef(program.exit_label),), n) for n in names)
    instructions = program.instructions + extra
    return ProgramUnit(
        instructions,
        _label_table(instructions, program.exit_label),
        program.exit_label,
        program.repaired_symbols | frozenset(names),
    )


# -------------------------------------------------------------- validation


class _Invalid(Exception):
    pass


def _kind(op: Operand) -> str:
    if isinstance(op, SizePrefixed):
        return _kind(op.inner)
    return {Register: "reg", Immediate: "imm", Memory: "mem", LabelRef: "label"}[type(op)]


def _unwrap(op: Operand, warnings: list[str]) -> Operand:
    if isinstance(op, SizePrefixed):
        inner = op.inner
        if isinstance(inner, Register):
            if inner.width == op.size:
                warnings.append("register size specification ignored")
            else:
                warnings.append("invalid register size specification ignored")
            return inner
        if isinstance(inner, Immediate):
            return Immediate(inner.value, op.size)
        raise _Invalid("invalid size specification")
    return op


def _check_mem(m: Memory) -> None:
    for r in (m.base, m.index):
        if r is not None and REGISTERS[r][2] != 32:
            raise _Invalid("impossible combination of address sizes")
    if m.index == "ESP":
        raise _Invalid("invalid effective address")
    if m.scale not in (1, 2, 4, 8):
        raise _Invalid("invalid effective address")


def _check_imm(imm: Immediate, width: int, warnings: list[str]) -> None:
    if not -(1 << (width - 1)) <= imm.value < (1 << width):
        warnings.append(f"{SIZE_NAMES[width].lower()} data exceeds bounds")


def _width_of(op: Operand) -> int | None:
    if isinstance(op, Register):
        return op.width
    if isinstance(op, Memory):
        return op.size
    return None


def _analyze(ins: Instruction) -> tuple[int | None, list[str]]:
    """Operation width and warnings for one instruction; raises _Invalid."""
    warnings: list[str] = []
    mn = ins.mnemonic
    ops = [_unwrap(o, warnings) for o in ins.operands]
    for o in ops:
        if isinstance(o, Memory):
            _check_mem(o)
    kinds = [_kind(o) for o in ops]
    if mn in (LABEL_ONLY, "nop"):
        return None, warnings
    if mn in CONDITIONAL:
        if kinds != ["label"]:
            raise _Invalid("invalid combination of opcode and operands")
        return None, warnings
    if mn == "jmp":
        o = ops[0]
        if kinds[0] == "reg" and o.width != 32:  # type: ignore[union-attr]
            raise _Invalid("invalid combination of opcode and operands")
        if kinds[0] == "mem" and o.size not in (None, 32):  # type: ignore[union-attr]
            raise _Invalid("invalid combination of opcode and operands")
        if kinds[0] == "imm":
            _check_imm(o, 32, warnings)  # type: ignore[arg-type]
        return 32 if kinds[0] != "label" else None, warnings
    if mn == "int":
        if kinds != ["imm"]:
            raise _Invalid("invalid combination of opcode and operands")
        _check_imm(ops[0], 8, warnings)  # type: ignore[arg-type]
        return 8, warnings
    if "label" in kinds:
        raise _Invalid("invalid combination of opcode and operands")

    if mn == "push":
        o = ops[0]
        if kinds[0] == "imm":
            hint = o.width  # type: ignore[union-attr]
            if hint in (8, None):
                _check_imm(o, 32 if hint is None else 8, warnings)  # type: ignore[arg-type]
                return 32, warnings
            _check_imm(o, hint, warnings)  # type: ignore[arg-type]
            return hint, warnings
        w = _width_of(o)
        if w is None:
            raise _Invalid("operation size not specified")
        if w == 8:
            raise _Invalid("invalid combination of opcode and operands")
        return w, warnings
    if mn == "pop":
        if kinds[0] == "imm":
            raise _Invalid("destination must be writable")
        w = _width_of(ops[0])
        if w is None:
            raise _Invalid("operation size not specified")
        if w == 8:
            raise _Invalid("invalid combination of opcode and operands")
        return w, warnings
    if mn in ("inc", "dec", "neg", "not", "mul"):
        if kinds[0] == "imm":
            raise _Invalid("destination must be writable" if mn != "mul" else
                           "invalid combination of opcode and operands")
        w = _width_of(ops[0])
        if w is None:
            raise _Invalid("operation size not specified")
        return w, warnings
    if mn == "lea":
        dst, src = ops
        if kinds[0] == "imm":
            raise _Invalid("destination must be writable")
        if kinds != ["reg", "mem"] or dst.width != 32:  # type: ignore[union-attr]
            raise _Invalid("invalid combination of opcode and operands")
        return 32, warnings
    if mn in ("shl", "shr"):
        dst, cnt = ops
        if kinds[0] == "imm":
            raise _Invalid("destination must be writable")
        if kinds[1] == "reg":
            if cnt.name != "CL":  # type: ignore[union-attr]
                raise _Invalid("invalid combination of opcode and operands")
        elif kinds[1] == "imm":
            _check_imm(cnt, 8, warnings)  # type: ignore[arg-type]
        else:
            raise _Invalid("invalid combination of opcode and operands")
        w = _width_of(dst)
        if w is None:
            raise _Invalid("operation size not specified")
        return w, warnings

    # two-operand data instructions: mov xchg add sub xor and or test cmp
    dst, src = ops
    if kinds[0] == "imm":
        if mn in ("cmp", "test"):
            raise _Invalid("invalid combination of opcode and operands")
        raise _Invalid("destination must be writable")
    if kinds == ["mem", "mem"]:
        raise _Invalid("invalid combination of opcode and operands")
    if mn == "xchg" and kinds[1] == "imm":
        raise _Invalid("invalid combination of opcode and operands")
    wd, ws = _width_of(dst), _width_of(src)
    if wd is not None and ws is not None and wd != ws:
        if kinds == ["reg", "reg"]:
            raise _Invalid("invalid combination of opcode and operands")
        raise _Invalid("mismatch in operand sizes")
    w = wd or ws
    if w is None:
        raise _Invalid("operation size not specified")
    if kinds[1] == "imm":
        hint = src.width  # type: ignore[union-attr]
        if hint is not None and hint > w:
            raise _Invalid("mismatch in operand sizes")
        _check_imm(src, w, warnings)  # type: ignore[arg-type]
    return w, warnings


@lru_cache(maxsize=65536)
def operation_width(ins: Instruction) -> int | None:
    """Operand size of a validated instruction (None for label-only/branch-to-label)."""
    return _analyze(ins)[0]


def label_refs(ins: Instruction) -> list[str]:
    out = []
    for o in ins.operands:
        while isinstance(o, SizePrefixed):
            o = o.inner
        if isinstance(o, LabelRef):
            out.append(o.name)
    return out


def check_syntax(program: ProgramUnit) -> SyntaxOutcome:
    """Validate every instruction, then the label table."""
    warnings: list[str] = []
    seen: set[str] = set()
    for ins in program.instructions:
        where = f", line {ins.source_line}" if ins.source_line else ""
        if ins.label is not None:
            if ins.label in seen or ins.label == program.exit_label:
                return SyntaxOutcome("Error", (f"symbol '{ins.label}' redefined{where}",))
            seen.add(ins.label)
        try:
            _, w = _analyze(ins)
        except _Invalid as exc:
            return SyntaxOutcome("Error", (f"{exc}{where}",))
        warnings.extend(f"{m}{where}" for m in w)
    missing = frozenset(
        name for ins in program.instructions for name in label_refs(ins) if name not in program.labels
    )
    if missing:
        return SyntaxOutcome("SdnError", tuple(warnings), missing)
    if warnings:
        return SyntaxOutcome("Warnings", tuple(warnings))
    return SyntaxOutcome("NoErrors")


def assemble(text: str) -> tuple[SyntaxOutcome, ProgramUnit | None]:
    """Full syntax pipeline: parse, complete, check, one SDN repair round, re-check."""
    try:
        body = parse_snippet(text)
    except ParseError as exc:
        return SyntaxOutcome("Error", (str(exc),)), None
    program = complete_program(body)
    outcome = check_syntax(program)
    if outcome.status == "SdnError":
        program = repair_sdn(program, outcome.missing)
        outcome = check_syntax(program)
        if outcome.status == "SdnError":
            return outcome, None
    if not outcome.ok:
        return outcome, None
    return outcome, program
