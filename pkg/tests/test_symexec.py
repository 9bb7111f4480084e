import random

import pytest

from asmeval import expr as E
from asmeval.concrete import UndefinedBehaviour, run_concrete
from asmeval.frontend import assemble
from asmeval.symexec import (
    ABORTED, ESP0, REACHED_EXIT, STEP_LIMIT, ControlTransferEvent, SyscallEvent, explore,
    init_state, stack_symbol, step,
)

import _proggen as G


def _explore(text, **kw):
    outcome, prog = assemble(text)
    assert prog is not None, outcome
    return explore(prog, **kw)


def _only_leaf(text):
    out = _explore(text)
    assert not out.exhausted
    (leaf,) = out.leaves
    return leaf


def test_init_state_is_fully_symbolic_and_deterministic():
    a, b = init_state(), init_state()
    assert a.regs == b.regs and a.flags == b.flags
    assert a.regs["EAX"] is E.symbol("EAX", 32)
    assert a.regs["ESP"] is ESP0
    assert a.stack == {} and a.path_constraints == ()


def test_xor_self_clears_register_and_sets_flags():
    leaf = _only_leaf("xor edx, edx")
    assert leaf.regs["EDX"] is E.const(0, 32)
    assert leaf.flags["ZF"] is E.TRUE
    assert leaf.flags["SF"] is E.FALSE and leaf.flags["CF"] is E.FALSE and leaf.flags["OF"] is E.FALSE


def test_push_moves_stack_pointer():
    leaf = _only_leaf("push eax")
    assert leaf.esp_delta == -4
    hi = E.concat(leaf.stack[-1], leaf.stack[-2])
    lo = E.concat(leaf.stack[-3], leaf.stack[-4])
    assert E.concat(hi, lo) is E.symbol("EAX", 32)


def test_zero_push_writes_four_zero_bytes():
    leaf = _only_leaf("xor eax, eax\npush eax")
    assert {o: leaf.stack[o] for o in range(-4, 0)} == {o: E.const(0, 8) for o in range(-4, 0)}


def test_pop_reads_initial_stack_bytes():
    leaf = _only_leaf("pop ecx")
    assert leaf.esp_delta == 4
    assert E.extract(leaf.regs["ECX"], 7, 0) is stack_symbol(0)


def test_loop_has_two_successors():
    out = _explore("pop ecx\nloop l1")
    assert len(out.leaves) == 2
    events = sorted(len(leaf.events) for leaf in out.leaves)
    assert events == [0, 1]
    taken = next(leaf for leaf in out.leaves if leaf.events)
    assert taken.events == (ControlTransferEvent("l1"),)


def test_compare_and_branch_splits():
    out = _explore("cmp EAX, EBX\nje loop\npop ECX")
    assert len(out.leaves) == 2 and not out.exhausted
    constraints = {leaf.path_constraints for leaf in out.leaves}
    assert len(constraints) == 2


def test_self_loop_hits_step_limit():
    out = _explore("l: jmp l")
    assert out.exhausted
    assert [leaf.termination for leaf in out.leaves] == [STEP_LIMIT]
    assert out.leaves[0].step_count == 100


def test_indirect_jump_records_target():
    leaf = _only_leaf("jmp short esp")
    assert leaf.termination == REACHED_EXIT
    assert leaf.events == (ControlTransferEvent(ESP0),)


def test_interrupt_records_syscall():
    leaf = _only_leaf("mov al, 0x0b\nint 0x80")
    (ev,) = leaf.events
    assert isinstance(ev, SyscallEvent) and ev.vector == 0x80
    assert E.extract(ev.eax, 7, 0) is E.const(11, 8)


def test_step_does_not_mutate_input():
    _, prog = assemble("push eax\ncmp eax, 1\nje x\nx: nop")
    st = init_state()
    for _ in range(4):
        snapshot = (dict(st.regs), dict(st.flags), dict(st.stack), st.path_constraints, st.pc)
        succ = step(st, prog.instructions[st.pc], prog)
        assert snapshot == (st.regs, st.flags, st.stack, st.path_constraints, st.pc)
        st = succ[0]


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_independent_branches_double_leaves(k):
    regs = ("EAX", "EBX", "ECX", "EDX")
    lines = []
    for i in range(k):
        lines += [f"cmp {regs[i]}, {i + 1}", f"je n{i}", f"n{i}: nop"]
    out = _explore("\n".join(lines))
    assert len(out.leaves) == 2 ** k and not out.exhausted


def test_state_budget_aborts():
    lines = []
    for i in range(12):
        lines += [f"test eax, {1 << i}", f"jne n{i}", f"n{i}: nop"]
    out = _explore("\n".join(lines), max_states=50)
    assert out.exhausted and out.leaves[-1].termination == ABORTED


def test_max_steps_validated():
    _, prog = assemble("nop")
    with pytest.raises(ValueError):
        explore(prog, max_steps=0)


def test_exploration_is_deterministic():
    rng = random.Random(9)
    for _ in range(30):
        text = G.render(G.random_program(rng))
        a, b = _explore(text), _explore(text)
        assert [(l.termination, l.regs, l.path_constraints) for l in a.leaves] == \
               [(l.termination, l.regs, l.path_constraints) for l in b.leaves]


def _satisfied(leaf, env):
    return all(E.evaluate(c, env) == 1 for c in leaf.path_constraints)


def test_leaves_agree_with_concrete_interpreter():
    """For every concrete start, the leaf whose path holds predicts the concrete final state."""
    rng = random.Random(2024)
    checked = 0
    for n in range(150):
        text = G.render(G.random_program(rng))
        _, prog = assemble(text)
        out = explore(prog)
        for s in G.initial_states(8, n, G.program_constants(text)):
            try:
                res = run_concrete(prog, s.regs, s.flags, s.mem)
            except UndefinedBehaviour:
                continue
            if res.termination != "exit":
                continue
            live = [leaf for leaf in out.leaves if leaf.termination == REACHED_EXIT]
            envs = [(leaf, G.symbolic_env(s, leaf)) for leaf in live]
            hits = [(leaf, env) for leaf, env in envs if _satisfied(leaf, env)]
            assert len(hits) == 1, text
            leaf, env = hits[0]
            for r, v in res.regs.items():
                assert E.evaluate(leaf.regs[r], env) == v, (text, r)
            for f, v in res.flags.items():
                if v is not None and leaf.flags[f].op != "undef":
                    assert E.evaluate(leaf.flags[f], env) == v, (text, f)
            esp0 = s.regs["ESP"]
            for off, byte in leaf.stack.items():
                assert E.evaluate(byte, env) == res.writes.get((esp0 + off) & 0xFFFFFFFF), (text, off)
            checked += 1
    assert checked > 500
