"""Concrete IA-32 subset interpreter.

An independent reference for the symbolic executor: it runs a completed
program on concrete register, flag and memory values using plain integer
arithmetic. Flags the architecture leaves undefined are ``None``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .frontend import (
    REG32, REGISTERS, Immediate, LabelRef, Memory, ProgramUnit, Register, SizePrefixed,
    operation_width,
)

M32 = 0xFFFFFFFF
STACK_WINDOW = 1 << 16


class UndefinedBehaviour(Exception):
    """Raised when control flow depends on an undefined flag."""


@dataclass(frozen=True)
class ConcreteResult:
    regs: dict[str, int]
    flags: dict[str, int | None]
    writes: dict[int, int]
    initial_esp: int
    events: tuple
    termination: str  # "exit" | "steplimit"
    steps: int


@dataclass
class _Machine:
    regs: dict[str, int]
    flags: dict[str, int | None]
    mem_init: Callable[[int], int]
    writes: dict[int, int] = field(default_factory=dict)
    events: list = field(default_factory=list)

    def reg(self, name: str) -> int:
        parent, lo, w = REGISTERS[name]
        return (self.regs[parent] >> lo) & ((1 << w) - 1)

    def set_reg(self, name: str, v: int) -> None:
        parent, lo, w = REGISTERS[name]
        m = ((1 << w) - 1) << lo
        self.regs[parent] = (self.regs[parent] & ~m & M32) | ((v << lo) & m)

    def load(self, addr: int, n: int) -> int:
        v = 0
        for i in range(n):
            a = (addr + i) & M32
            v |= self.writes.get(a, self.mem_init(a)) << (8 * i)
        return v

    def store(self, addr: int, v: int, n: int) -> None:
        for i in range(n):
            self.writes[(addr + i) & M32] = (v >> (8 * i)) & 0xFF

    def ea(self, m: Memory) -> int:
        a = m.disp
        if m.base:
            a += self.reg(m.base)
        if m.index:
            a += self.reg(m.index) * m.scale
        return a & M32

    def read(self, op, w: int) -> int:
        if isinstance(op, SizePrefixed):
            op = op.inner
        if isinstance(op, Register):
            return self.reg(op.name)
        if isinstance(op, Immediate):
            v = op.value
            if op.width == 8 and w > 8:
                v &= 0xFF
                if v & 0x80:
                    v -= 0x100
            return v & ((1 << w) - 1)
        if isinstance(op, Memory):
            return self.load(self.ea(op), w // 8)
        raise TypeError(op)

    def write(self, op, v: int, w: int) -> None:
        if isinstance(op, SizePrefixed):
            op = op.inner
        if isinstance(op, Register):
            self.set_reg(op.name, v)
        else:
            self.store(self.ea(op), v, w // 8)


def _signed(v: int, w: int) -> int:
    return v - (1 << w) if v & (1 << (w - 1)) else v


def _szf(mc: _Machine, r: int, w: int) -> None:
    mc.flags["ZF"] = int(r == 0)
    mc.flags["SF"] = (r >> (w - 1)) & 1


def _arith(mc: _Machine, kind: str, a: int, b: int, w: int) -> int:
    m = (1 << w) - 1
    lo, hi = -(1 << (w - 1)), (1 << (w - 1)) - 1
    if kind == "add":
        full = a + b
        r = full & m
        mc.flags["CF"] = int(full > m)
        s = _signed(a, w) + _signed(b, w)
    else:
        full = a - b
        r = full & m
        mc.flags["CF"] = int(full < 0)
        s = _signed(a, w) - _signed(b, w)
    mc.flags["OF"] = int(not lo <= s <= hi)
    _szf(mc, r, w)
    return r


def run_concrete(
    program: ProgramUnit,
    regs: dict[str, int],
    flags: dict[str, int],
    mem_init: Callable[[int], int],
    max_steps: int = 100,
) -> ConcreteResult:
    mc = _Machine({r: regs[r] & M32 for r in REG32}, dict(flags), mem_init)
    esp0 = mc.regs["ESP"]
    pc, steps = 0, 0
    exit_index = program.exit_index
    instrs = program.instructions
    termination = "steplimit"
    while steps < max_steps:
        if pc == exit_index:
            termination = "exit"
            break
        ins = instrs[pc]
        steps += 1
        mn = ins.mnemonic
        w = operation_width(ins)
        ops = ins.operands
        nxt = pc + 1
        if mn in ("label", "nop"):
            pass
        elif mn == "mov":
            mc.write(ops[0], mc.read(ops[1], w), w)
        elif mn == "xchg":
            a, b = mc.read(ops[0], w), mc.read(ops[1], w)
            mc.write(ops[0], b, w)
            mc.write(ops[1], a, w)
        elif mn == "lea":
            src = ops[1].inner if isinstance(ops[1], SizePrefixed) else ops[1]
            mc.write(ops[0], mc.ea(src), 32)
        elif mn == "push":
            v = mc.read(ops[0], w)
            mc.regs["ESP"] = (mc.regs["ESP"] - w // 8) & M32
            mc.store(mc.regs["ESP"], v, w // 8)
        elif mn == "pop":
            v = mc.load(mc.regs["ESP"], w // 8)
            mc.regs["ESP"] = (mc.regs["ESP"] + w // 8) & M32
            mc.write(ops[0], v, w)
        elif mn in ("add", "sub", "cmp"):
            a, b = mc.read(ops[0], w), mc.read(ops[1], w)
            r = _arith(mc, "add" if mn == "add" else "sub", a, b, w)
            if mn != "cmp":
                mc.write(ops[0], r, w)
        elif mn in ("xor", "and", "or", "test"):
            a, b = mc.read(ops[0], w), mc.read(ops[1], w)
            r = a ^ b if mn == "xor" else a | b if mn == "or" else a & b
            mc.flags["CF"] = mc.flags["OF"] = 0
            _szf(mc, r, w)
            if mn != "test":
                mc.write(ops[0], r, w)
        elif mn in ("inc", "dec"):
            cf = mc.flags["CF"]
            r = _arith(mc, "add" if mn == "inc" else "sub", mc.read(ops[0], w), 1, w)
            mc.flags["CF"] = cf
            mc.write(ops[0], r, w)
        elif mn == "neg":
            a = mc.read(ops[0], w)
            r = _arith(mc, "sub", 0, a, w)
            mc.flags["CF"] = int(a != 0)
            mc.write(ops[0], r, w)
        elif mn == "not":
            mc.write(ops[0], ~mc.read(ops[0], w) & ((1 << w) - 1), w)
        elif mn == "mul":
            src = mc.read(ops[0], w)
            acc = mc.reg({8: "AL", 16: "AX", 32: "EAX"}[w])
            prod = acc * src
            if w == 8:
                mc.set_reg("AX", prod)
            else:
                mc.set_reg({16: "AX", 32: "EAX"}[w], prod & ((1 << w) - 1))
                mc.set_reg({16: "DX", 32: "EDX"}[w], prod >> w)
            mc.flags["CF"] = mc.flags["OF"] = int(prod >> w != 0)
            mc.flags["ZF"] = mc.flags["SF"] = None
        elif mn in ("shl", "shr"):
            cnt_op = ops[1].inner if isinstance(ops[1], SizePrefixed) else ops[1]
            n = (cnt_op.value if isinstance(cnt_op, Immediate) else mc.reg("CL")) & 0x1F
            if n:
                a = mc.read(ops[0], w)
                m = (1 << w) - 1
                if mn == "shl":
                    r = (a << n) & m
                    cf = (a >> (w - n)) & 1 if n <= w else None
                    of = (((r >> (w - 1)) & 1) ^ cf) if n == 1 else None
                else:
                    r = a >> n
                    cf = (a >> (n - 1)) & 1 if n <= w else None
                    of = (a >> (w - 1)) & 1 if n == 1 else None
                mc.write(ops[0], r, w)
                _szf(mc, r, w)
                mc.flags["CF"], mc.flags["OF"] = cf, of
        elif mn == "int":
            vec = ops[0].inner if isinstance(ops[0], SizePrefixed) else ops[0]
            mc.events.append(("int", vec.value & 0xFF, mc.regs["EAX"], mc.regs["EBX"],
                              mc.regs["ECX"], mc.regs["EDX"]))
        elif mn == "jmp":
            t = ops[0].inner if isinstance(ops[0], SizePrefixed) else ops[0]
            if isinstance(t, LabelRef):
                nxt = _enter(mc, program, t.name)
            else:
                target = t.value & M32 if isinstance(t, Immediate) else mc.read(t, 32)
                mc.events.append(("jmp", target))
                termination = "exit"
                break
        elif mn in ("je", "jne", "js", "jns"):
            f = mc.flags["ZF" if mn in ("je", "jne") else "SF"]
            if f is None:
                raise UndefinedBehaviour(f"{mn} on undefined flag")
            if bool(f) == (mn in ("je", "js")):
                nxt = _enter(mc, program, ops[0].name)
        elif mn == "loop":
            mc.regs["ECX"] = (mc.regs["ECX"] - 1) & M32
            if mc.regs["ECX"] != 0:
                nxt = _enter(mc, program, ops[0].name)
        else:
            raise ValueError(f"unsupported instruction {mn}")
        pc = nxt
    else:
        if pc == exit_index:
            termination = "exit"
    return ConcreteResult(dict(mc.regs), dict(mc.flags), dict(mc.writes), esp0,
                          tuple(mc.events), termination, steps)


def _enter(mc: _Machine, program: ProgramUnit, name: str) -> int:
    if name in program.repaired_symbols:
        mc.events.append(("jmp", name))
    return program.labels[name]


def live_memory(res: ConcreteResult, mem_init: Callable[[int], int]) -> dict[int, int]:
    """Written cells that are still architecturally visible.

    Stack cells below the final stack pointer are scratch and ignored.
    """
    final = res.regs["ESP"]
    delta = _signed((final - res.initial_esp) & M32, 32)
    out = {}
    for addr, v in res.writes.items():
        off = _signed((addr - res.initial_esp) & M32, 32)
        if -STACK_WINDOW <= off <= STACK_WINDOW and -STACK_WINDOW <= delta <= STACK_WINDOW and off < delta:
            continue
        out[addr] = v
    return out


def same_final_state(r1: ConcreteResult, r2: ConcreteResult, mem_init: Callable[[int], int]) -> bool:
    if r1.termination != "exit" or r2.termination != "exit":
        return False
    if r1.regs != r2.regs or r1.flags != r2.flags or r1.events != r2.events:
        return False
    m1, m2 = live_memory(r1, mem_init), live_memory(r2, mem_init)
    for addr in m1.keys() | m2.keys():
        if m1.get(addr, mem_init(addr)) != m2.get(addr, mem_init(addr)):
            return False
    return True
