"""Symbolic execution of completed programs over a fully symbolic initial state.

Registers and flags start as fresh symbols named after themselves (``EAX``,
``ZF``, ...). The stack is byte-granular and keyed by the concrete offset from
the initial stack pointer; other memory is keyed by the symbolic part of the
address plus a constant offset, so accesses alias only when their address
expressions are structurally identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import expr as E
from .expr import Expr
from .frontend import (
    REG32, REGISTERS, Immediate, Instruction, LabelRef, Memory, ProgramUnit, Register,
    SizePrefixed, operation_width,
)

FLAGS = ("ZF", "SF", "CF", "OF")
DEFAULT_MAX_STEPS = 100
DEFAULT_MAX_STATES = 20000

ESP0 = E.symbol("ESP", 32)

REACHED_EXIT = "ReachedExit"
STEP_LIMIT = "StepLimit"
ABORTED = "Aborted"


@dataclass(frozen=True)
class SyscallEvent:
    vector: int
    eax: Expr
    ebx: Expr
    ecx: Expr
    edx: Expr


@dataclass(frozen=True)
class ControlTransferEvent:
    """Control leaving the snippet: an indirect target expression or a fictitious label name."""

    target: Expr | str


Event = SyscallEvent | ControlTransferEvent


@dataclass
class MachineState:
    """One symbolic machine state. Treated as immutable once returned by :func:`step`."""

    regs: dict[str, Expr]
    flags: dict[str, Expr]
    stack: dict[int, Expr] = field(default_factory=dict)
    memory: dict[tuple[Expr | None, int], Expr] = field(default_factory=dict)
    mem_inputs: dict[str, tuple[Expr | None, int]] = field(default_factory=dict)
    path_constraints: tuple[Expr, ...] = ()
    events: tuple[Event, ...] = ()
    step_count: int = 0
    pc: int = 0
    halt: str | None = None

    def copy(self) -> "MachineState":
        return MachineState(
            dict(self.regs), dict(self.flags), dict(self.stack), dict(self.memory),
            dict(self.mem_inputs), self.path_constraints, self.events, self.step_count,
            self.pc, self.halt,
        )

    @property
    def esp_offset(self) -> Expr:
        return self.regs["ESP"]

    @property
    def esp_delta(self) -> int | None:
        return stack_delta(self.regs["ESP"])


@dataclass(frozen=True)
class LeafState:
    regs: dict[str, Expr]
    flags: dict[str, Expr]
    stack: dict[int, Expr]
    memory: dict[tuple[Expr | None, int], Expr]
    mem_inputs: dict[str, tuple[Expr | None, int]]
    path_constraints: tuple[Expr, ...]
    events: tuple[Event, ...]
    termination: str
    reason: str = ""
    step_count: int = 0

    @property
    def esp_delta(self) -> int | None:
        return stack_delta(self.regs["ESP"])


@dataclass(frozen=True)
class ExecOutcome:
    leaves: tuple[LeafState, ...]
    exhausted: bool

    @property
    def termination_kinds(self) -> set[str]:
        return {leaf.termination for leaf in self.leaves}


class _Abort(Exception):
    pass


def stack_delta(esp: Expr) -> int | None:
    base, k = E.linear_parts(esp)
    return E.to_signed(k, 32) if base is ESP0 else None


def stack_symbol(offset: int) -> Expr:
    """Initial content of the stack byte at ``offset`` from the initial stack pointer."""
    return E.symbol(f"stk{offset:+d}", 8)


def memory_symbol_name(base: Expr | None, offset: int) -> str:
    tag = base.digest.hex()[:16] if base is not None else "abs"
    return f"mem[{tag}{offset:+#x}]"


def initial_memory_byte(base: Expr | None, offset: int) -> Expr:
    return E.symbol(memory_symbol_name(base, offset), 8)


def init_state() -> MachineState:
    return MachineState(
        regs={r: E.symbol(r, 32) for r in REG32},
        flags={f: E.symbol(f, 1) for f in FLAGS},
    )


# ------------------------------------------------------------ state access


def _c32(v: int) -> Expr:
    return E.const(v, 32)


def get_reg(st: MachineState, name: str) -> Expr:
    parent, lo, w = REGISTERS[name]
    return E.extract(st.regs[parent], lo + w - 1, lo)


def set_reg(st: MachineState, name: str, value: Expr) -> None:
    parent, lo, w = REGISTERS[name]
    if w == 32:
        st.regs[parent] = value
        return
    old = st.regs[parent]
    out = value
    if lo > 0:
        out = E.concat(out, E.extract(old, lo - 1, 0))
    if lo + w < 32:
        out = E.concat(E.extract(old, 31, lo + w), out)
    st.regs[parent] = out


def _address(st: MachineState, m: Memory) -> Expr:
    a = _c32(m.disp)
    if m.base:
        a = E.add(get_reg(st, m.base), a)
    if m.index:
        a = E.add(a, E.mul(get_reg(st, m.index), _c32(m.scale)))
    return a


def _locate(addr: Expr) -> tuple[str, Expr | None, int]:
    base, k = E.linear_parts(addr)
    if base is ESP0:
        return "stack", None, E.to_signed(k, 32)
    if base is not None and ESP0 in E.symbols(base):
        raise _Abort("non-concrete stack offset")
    return "mem", base, k


def read_bytes(st: MachineState, addr: Expr, n: int) -> Expr:
    kind, base, k = _locate(addr)
    out = None
    for i in range(n):
        if kind == "stack":
            b = st.stack.get(k + i)
            if b is None:
                b = stack_symbol(k + i)
        else:
            off = (k + i) & 0xFFFFFFFF
            b = st.memory.get((base, off))
            if b is None:
                b = initial_memory_byte(base, off)
                st.mem_inputs[b.val] = (base, off)  # type: ignore[index]
        out = b if out is None else E.concat(b, out)
    return out  # type: ignore[return-value]


def write_bytes(st: MachineState, addr: Expr, value: Expr) -> None:
    kind, base, k = _locate(addr)
    for i in range(value.width // 8):
        b = E.extract(value, 8 * i + 7, 8 * i)
        if kind == "stack":
            st.stack[k + i] = b
        else:
            st.memory[(base, (k + i) & 0xFFFFFFFF)] = b


def _unwrap(op):
    return op.inner if isinstance(op, SizePrefixed) else op


def read_operand(st: MachineState, op, width: int) -> Expr:
    op = _unwrap(op)
    if isinstance(op, Register):
        return get_reg(st, op.name)
    if isinstance(op, Immediate):
        if op.width == 8 and width > 8:
            return E.sext(E.const(op.value, 8), width)
        return E.const(op.value, width)
    if isinstance(op, Memory):
        return read_bytes(st, _address(st, op), width // 8)
    raise TypeError(f"cannot read {op!r}")


def write_operand(st: MachineState, op, value: Expr) -> None:
    op = _unwrap(op)
    if isinstance(op, Register):
        set_reg(st, op.name, value)
    elif isinstance(op, Memory):
        write_bytes(st, _address(st, op), value)
    else:
        raise TypeError(f"cannot write {op!r}")


def _push(st: MachineState, value: Expr) -> None:
    esp = st.regs["ESP"]
    if stack_delta(esp) is None:
        raise _Abort("symbolic stack pointer")
    esp = E.sub(esp, _c32(value.width // 8))
    write_bytes(st, esp, value)
    st.regs["ESP"] = esp


def _pop(st: MachineState, width: int) -> Expr:
    esp = st.regs["ESP"]
    if stack_delta(esp) is None:
        raise _Abort("symbolic stack pointer")
    value = read_bytes(st, esp, width // 8)
    st.regs["ESP"] = E.add(esp, _c32(width // 8))
    return value


# ------------------------------------------------------------------ flags


def _set_result_flags(st: MachineState, r: Expr) -> None:
    st.flags["ZF"] = E.eq(r, E.const(0, r.width))
    st.flags["SF"] = E.msb(r)


def _flags_add(st, a, b, r):
    _set_result_flags(st, r)
    st.flags["CF"] = E.ult(r, a)
    st.flags["OF"] = E.msb(E.bvand(E.bvxor(a, r), E.bvxor(b, r)))


def _flags_sub(st, a, b, r):
    _set_result_flags(st, r)
    st.flags["CF"] = E.ult(a, b)
    st.flags["OF"] = E.msb(E.bvand(E.bvxor(a, b), E.bvxor(a, r)))


def _flags_logic(st, r):
    _set_result_flags(st, r)
    st.flags["CF"] = E.FALSE
    st.flags["OF"] = E.FALSE


def _undef(st: MachineState, flag: str) -> Expr:
    return E.undef(f"{flag}@{st.step_count}", 1)


# ----------------------------------------------------------- instructions


def _binop(st: MachineState, ins: Instruction, w: int) -> None:
    mn = ins.mnemonic
    dst, src = ins.operands
    a = read_operand(st, dst, w)
    b = read_operand(st, src, w)
    if mn in ("add",):
        r = E.add(a, b)
        _flags_add(st, a, b, r)
    elif mn in ("sub", "cmp"):
        r = E.sub(a, b)
        _flags_sub(st, a, b, r)
    elif mn == "xor":
        r = E.bvxor(a, b)
        _flags_logic(st, r)
    elif mn in ("and", "test"):
        r = E.bvand(a, b)
        _flags_logic(st, r)
    elif mn == "or":
        r = E.bvor(a, b)
        _flags_logic(st, r)
    else:
        raise AssertionError(mn)
    if mn not in ("cmp", "test"):
        write_operand(st, dst, r)


def _unop(st: MachineState, ins: Instruction, w: int) -> None:
    mn = ins.mnemonic
    (dst,) = ins.operands
    a = read_operand(st, dst, w)
    one = E.const(1, w)
    if mn == "inc":
        r = E.add(a, one)
        cf = st.flags["CF"]
        _flags_add(st, a, one, r)
        st.flags["CF"] = cf
    elif mn == "dec":
        r = E.sub(a, one)
        cf = st.flags["CF"]
        _flags_sub(st, a, one, r)
        st.flags["CF"] = cf
    elif mn == "neg":
        r = E.neg(a)
        _flags_sub(st, E.const(0, w), a, r)
        st.flags["CF"] = E.bvnot(E.eq(a, E.const(0, w)))
    elif mn == "not":
        r = E.bvnot(a)
    else:
        raise AssertionError(mn)
    write_operand(st, dst, r)


def _mul(st: MachineState, ins: Instruction, w: int) -> None:
    src = read_operand(st, ins.operands[0], w)
    acc = get_reg(st, {8: "AL", 16: "AX", 32: "EAX"}[w])
    prod = E.mul(E.zext(acc, 2 * w), E.zext(src, 2 * w))
    lo = E.extract(prod, w - 1, 0)
    hi = E.extract(prod, 2 * w - 1, w)
    if w == 8:
        set_reg(st, "AX", prod)
    else:
        set_reg(st, {16: "AX", 32: "EAX"}[w], lo)
        set_reg(st, {16: "DX", 32: "EDX"}[w], hi)
    overflow = E.bvnot(E.eq(hi, E.const(0, w)))
    st.flags["CF"] = overflow
    st.flags["OF"] = overflow
    st.flags["ZF"] = _undef(st, "ZF")
    st.flags["SF"] = _undef(st, "SF")


def _shift(st: MachineState, ins: Instruction, w: int) -> None:
    left = ins.mnemonic == "shl"
    dst, cnt_op = ins.operands
    a = read_operand(st, dst, w)
    cnt_op = _unwrap(cnt_op)
    if isinstance(cnt_op, Immediate):
        n = cnt_op.value & 0x1F
        if n == 0:
            return
        r = E.shl(a, E.const(n, w)) if left else E.lshr(a, E.const(n, w))
        if n <= w:
            bit = w - n if left else n - 1
            cf = E.extract(a, bit, bit)
        else:
            cf = _undef(st, "CF")
        if n == 1:
            of = E.bvxor(E.msb(r), cf) if left else E.msb(a)
        else:
            of = _undef(st, "OF")
        write_operand(st, dst, r)
        _set_result_flags(st, r)
        st.flags["CF"] = cf
        st.flags["OF"] = of
        return

    cnt8 = E.bvand(get_reg(st, "CL"), E.const(0x1F, 8))
    cnt = E.zext(cnt8, w) if w > 8 else cnt8
    r = E.shl(a, cnt) if left else E.lshr(a, cnt)
    is_zero = E.eq(cnt8, E.const(0, 8))
    in_range = E.ult(cnt8, E.const(w + 1, 8)) if w < 32 else E.TRUE
    if left:
        # last bit shifted out is bit (w - cnt) of the source
        cf_val = E.extract(E.lshr(a, E.sub(E.const(w, w), cnt)), 0, 0)
        of_val = E.bvxor(E.msb(r), cf_val)
    else:
        cf_val = E.extract(E.lshr(a, E.sub(cnt, E.const(1, w))), 0, 0)
        of_val = E.msb(a)
    cf_new = E.ite(in_range, cf_val, _undef(st, "CF"))
    of_new = E.ite(E.eq(cnt8, E.const(1, 8)), of_val, _undef(st, "OF"))
    old = dict(st.flags)
    write_operand(st, dst, E.ite(is_zero, a, r))
    st.flags["ZF"] = E.ite(is_zero, old["ZF"], E.eq(r, E.const(0, w)))
    st.flags["SF"] = E.ite(is_zero, old["SF"], E.msb(r))
    st.flags["CF"] = E.ite(is_zero, old["CF"], cf_new)
    st.flags["OF"] = E.ite(is_zero, old["OF"], of_new)


# ---------------------------------------------------------------- control


def _facts(constraints: tuple[Expr, ...]) -> dict[Expr, Expr]:
    facts: dict[Expr, Expr] = {}
    for k in constraints:
        if k.op == "eq" and k.args[1].is_const:
            facts[k.args[0]] = k.args[1]
        if k.op == "not":
            facts[k.args[0]] = E.FALSE
        else:
            facts[k] = E.TRUE
    return facts


def decide(cond: Expr, constraints: tuple[Expr, ...]) -> bool | None:
    """Truth of ``cond`` if it is fixed by constant folding or the path facts; else None."""
    if cond.is_const:
        return bool(cond.val)
    facts = _facts(constraints)
    if facts:
        v = E.substitute(cond, facts)
        if v.is_const:
            return bool(v.val)
    return None


def _goto(st: MachineState, program: ProgramUnit, name: str) -> None:
    if name in program.repaired_symbols:
        st.events = st.events + (ControlTransferEvent(name),)
    st.pc = program.labels[name]


def _branch(st: MachineState, program: ProgramUnit, cond: Expr, target: str) -> list[MachineState]:
    taken_known = decide(cond, st.path_constraints)
    out = []
    if taken_known is not False:
        t = st.copy()
        if taken_known is None:
            t.path_constraints = t.path_constraints + (cond,)
        _goto(t, program, target)
        out.append(t)
    if taken_known is not True:
        f = st.copy()
        if taken_known is None:
            f.path_constraints = f.path_constraints + (E.bvnot(cond),)
        f.pc = st.pc + 1
        out.append(f)
    return out


def _jump_target(st: MachineState, op) -> Expr:
    op = _unwrap(op)
    if isinstance(op, Immediate):
        return _c32(op.value)
    return read_operand(st, op, 32)


def step(state: MachineState, instr: Instruction, program: ProgramUnit) -> list[MachineState]:
    """Successor states of executing ``instr`` in ``state``; ``state`` is not modified."""
    st = state.copy()
    st.step_count += 1
    mn = instr.mnemonic
    try:
        w = operation_width(instr)
        if mn in ("label", "nop"):
            pass
        elif mn == "mov":
            dst, src = instr.operands
            write_operand(st, dst, read_operand(st, src, w))  # type: ignore[arg-type]
        elif mn == "xchg":
            x, y = instr.operands
            a = read_operand(st, x, w)  # type: ignore[arg-type]
            b = read_operand(st, y, w)  # type: ignore[arg-type]
            write_operand(st, x, b)
            write_operand(st, y, a)
        elif mn == "lea":
            dst, src = instr.operands
            write_operand(st, dst, _address(st, _unwrap(src)))
        elif mn == "push":
            _push(st, read_operand(st, instr.operands[0], w))  # type: ignore[arg-type]
        elif mn == "pop":
            write_operand(st, instr.operands[0], _pop(st, w))  # type: ignore[arg-type]
        elif mn in ("add", "sub", "cmp", "xor", "and", "or", "test"):
            _binop(st, instr, w)  # type: ignore[arg-type]
        elif mn in ("inc", "dec", "neg", "not"):
            _unop(st, instr, w)  # type: ignore[arg-type]
        elif mn == "mul":
            _mul(st, instr, w)  # type: ignore[arg-type]
        elif mn in ("shl", "shr"):
            _shift(st, instr, w)  # type: ignore[arg-type]
        elif mn == "int":
            vec = instr.operands[0]
            st.events = st.events + (
                SyscallEvent(_unwrap(vec).value & 0xFF, st.regs["EAX"], st.regs["EBX"],
                             st.regs["ECX"], st.regs["EDX"]),
            )
        elif mn == "jmp":
            target = _unwrap(instr.operands[0])
            if isinstance(target, LabelRef):
                _goto(st, program, target.name)
                return [st]
            st.events = st.events + (ControlTransferEvent(_jump_target(st, target)),)
            st.halt = REACHED_EXIT
            return [st]
        elif mn in ("je", "jne", "js", "jns"):
            flag = st.flags["ZF" if mn in ("je", "jne") else "SF"]
            cond = flag if mn in ("je", "js") else E.bvnot(flag)
            return _branch(st, program, cond, instr.operands[0].name)  # type: ignore[union-attr]
        elif mn == "loop":
            ecx = E.sub(st.regs["ECX"], _c32(1))
            st.regs["ECX"] = ecx
            cond = E.bvnot(E.eq(ecx, _c32(0)))
            return _branch(st, program, cond, instr.operands[0].name)  # type: ignore[union-attr]
        else:
            raise _Abort(f"unsupported instruction {mn}")
    except _Abort as exc:
        st.halt = f"{ABORTED}:{exc}"
        return [st]
    st.pc += 1
    return [st]


def _leaf(st: MachineState, termination: str, reason: str = "") -> LeafState:
    return LeafState(
        st.regs, st.flags, st.stack, st.memory, st.mem_inputs, st.path_constraints,
        st.events, termination, reason, st.step_count,
    )


def explore(program: ProgramUnit, max_steps: int = DEFAULT_MAX_STEPS,
            max_states: int = DEFAULT_MAX_STATES) -> ExecOutcome:
    """Depth-first exploration (taken branch first) from :func:`init_state`."""
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    exit_index = program.exit_index
    pending = [init_state()]
    leaves: list[LeafState] = []
    processed = 0
    while pending:
        st = pending.pop()
        processed += 1
        if st.halt is not None:
            if st.halt == REACHED_EXIT:
                leaves.append(_leaf(st, REACHED_EXIT))
            else:
                leaves.append(_leaf(st, ABORTED, st.halt.partition(":")[2]))
            continue
        if st.pc == exit_index:
            leaves.append(_leaf(st, REACHED_EXIT))
            continue
        if st.step_count >= max_steps:
            leaves.append(_leaf(st, STEP_LIMIT))
            continue
        if processed > max_states:
            leaves.append(_leaf(st, ABORTED, "state budget exceeded"))
            break
        succ = step(st, program.instructions[st.pc], program)
        pending.extend(reversed(succ))
    exhausted = any(leaf.termination != REACHED_EXIT for leaf in leaves)
    return ExecOutcome(tuple(leaves), exhausted)
