"""Desugaring and static channel-usage analysis shared by the checker and
the runtime.

`on ch do` blocks elaborate into the same commands with the channel
argument filled in; `free_chans` computes which channel names a command
sequence uses from its environment, accounting for the binders introduced
by fork, split, and neg.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import (
    Body, Call, Close, Fork, ForkArm, GetVal, Halt, HCase, HCaseArm, HPut,
    Link, NegIntro, OnDo, Plug, ProcDef, PutVal, Race, RaceArm, SourceProgram,
    Split, StoreOf, Use,
)


def desugar_body(body: Body, default: str | None = None) -> Body:
    out = []
    for cmd in body:
        if isinstance(cmd, OnDo):
            out.extend(desugar_body(cmd.body, cmd.chan))
            continue
        out.append(_desugar_cmd(cmd, default))
    return tuple(out)


def _desugar_cmd(cmd, default):
    fill = lambda c: c if c is not None else default
    if isinstance(cmd, PutVal):
        return PutVal(_desugar_expr(cmd.expr), fill(cmd.chan), pos=cmd.pos)
    if isinstance(cmd, GetVal):
        return GetVal(cmd.binder, fill(cmd.chan), pos=cmd.pos)
    if isinstance(cmd, HPut):
        return HPut(cmd.handle, fill(cmd.chan), pos=cmd.pos)
    if isinstance(cmd, Close):
        return Close(fill(cmd.chan), pos=cmd.pos)
    if isinstance(cmd, Halt):
        return Halt(fill(cmd.chan), pos=cmd.pos)
    if isinstance(cmd, HCase):
        arms = tuple(HCaseArm(a.handle, desugar_body(a.body, default),
                              pos=a.pos) for a in cmd.arms)
        return HCase(fill(cmd.chan), arms, pos=cmd.pos)
    if isinstance(cmd, Fork):
        a, b = cmd.arms
        return Fork(fill(cmd.chan),
                    (ForkArm(a.name, desugar_body(a.body, default), pos=a.pos),
                     ForkArm(b.name, desugar_body(b.body, default), pos=b.pos)),
                    pos=cmd.pos)
    if isinstance(cmd, Split):
        return Split(fill(cmd.chan), cmd.left, cmd.right, pos=cmd.pos)
    if isinstance(cmd, Plug):
        return Plug(tuple(desugar_body(b, default) for b in cmd.branches),
                    pos=cmd.pos)
    if isinstance(cmd, Race):
        return Race(tuple(RaceArm(a.chan, desugar_body(a.body, default),
                                  pos=a.pos) for a in cmd.arms), pos=cmd.pos)
    if isinstance(cmd, Call):
        return Call(cmd.callee, tuple(_desugar_expr(e) for e in cmd.seq_args),
                    cmd.in_chans, cmd.out_chans, pos=cmd.pos)
    if isinstance(cmd, Use):
        return Use(_desugar_expr(cmd.stored),
                   tuple(_desugar_expr(e) for e in cmd.seq_args),
                   cmd.in_chans, cmd.out_chans, pos=cmd.pos)
    return cmd


def _desugar_expr(e):
    if isinstance(e, StoreOf) and isinstance(e.target, ProcDef):
        return StoreOf(desugar_proc(e.target), pos=e.pos)
    return e


def desugar_proc(d: ProcDef) -> ProcDef:
    return ProcDef(d.name, d.signature, d.seq_params, d.in_params,
                   d.out_params, desugar_body(d.body), pos=d.pos)


@dataclass
class ExecProgram:
    """A program readied for checking or execution: every process body is
    fully desugared."""
    source: SourceProgram
    procs: dict[str, ProcDef]


def prepare(src: SourceProgram) -> ExecProgram:
    procs = {name: desugar_proc(d) for name, d in src.procs.items()}
    return ExecProgram(src, procs)


def free_chans(body: Body) -> frozenset[str]:
    """Channel names a (desugared) command sequence uses from its
    environment.  Names bound later in the sequence by split/neg binders
    do not count; fork arm binders are local to their arm."""
    acc: set[str] = set()
    for cmd in reversed(body):
        acc = _free_cmd(cmd, acc)
    return frozenset(acc)


def _free_cmd(cmd, after: set[str]) -> set[str]:
    if isinstance(cmd, (PutVal, GetVal, HPut, Close, Halt)):
        return after | ({cmd.chan} if cmd.chan else set())
    if isinstance(cmd, HCase):
        acc = set(after)
        for a in cmd.arms:
            acc |= free_chans(a.body)
        if cmd.chan:
            acc.add(cmd.chan)
        return acc
    if isinstance(cmd, Fork):
        acc = set(after)
        for a in cmd.arms:
            acc |= free_chans(a.body) - {a.name}
        if cmd.chan:
            acc.add(cmd.chan)
        return acc
    if isinstance(cmd, Split):
        acc = after - {cmd.left, cmd.right}
        if cmd.chan:
            acc.add(cmd.chan)
        return acc
    if isinstance(cmd, NegIntro):
        return (after - {cmd.fresh}) | {cmd.chan}
    if isinstance(cmd, Plug):
        acc = set(after)
        for b in cmd.branches:
            acc |= free_chans(b)
        return acc
    if isinstance(cmd, Race):
        acc = set(after)
        for a in cmd.arms:
            acc |= free_chans(a.body)
            acc.add(a.chan)
        return acc
    if isinstance(cmd, (Call, Use)):
        return after | set(cmd.chan_args)
    if isinstance(cmd, Link):
        return after | {cmd.left, cmd.right}
    if isinstance(cmd, OnDo):
        raise ValueError("free_chans expects a desugared body")
    raise TypeError(f"unhandled command {type(cmd).__name__}")
