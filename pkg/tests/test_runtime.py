import random

import pytest

from campl.checker import check_program
from campl.elaborate import prepare
from campl.parser import parse_source
from campl.runtime import (
    ChannelState, EndState, Machine, MachineFault, BootError, OutcomeKind,
    boot, resolve_race,
)
from campl.services import ServiceConfig, drain_output
from conftest import corpus_text


def run_corpus(name, seed=0, script=(), max_steps=100_000):
    prog = parse_source(corpus_text(name))
    check_program(prog)
    cfg = ServiceConfig.from_script(list(script))
    m = boot(prepare(prog), seed=seed, services=cfg)
    out = m.run_to_completion(max_steps)
    return out, cfg


def run_text(src, seed=0, script=(), check=True):
    prog = parse_source(src)
    if check:
        check_program(prog)
    cfg = ServiceConfig.from_script(list(script))
    m = boot(prepare(prog), seed=seed, services=cfg)
    return m.run_to_completion(), cfg


# ---------------------------------------------------------------------------
# boot

def test_boot_listing1_has_one_process_one_channel():
    prog = parse_source(corpus_text("listing1.campl"))
    check_program(prog)
    m = boot(prepare(prog), services=ServiceConfig.from_script([]))
    assert len(m.processes) == 1
    assert len(m.channels) == 1
    assert len(m.services) == 1


def test_boot_empty_run_signature():
    prog = parse_source("proc helper :: | TopBot => =\n"
                        "    | a => -> close a\n"
                        "\nproc run =\n"
                        "    | => -> plug\n"
                        "        helper( | a => )\n"
                        "        do\n"
                        "            halt a\n")
    check_program(prog)
    m = boot(prepare(prog), services=ServiceConfig.from_script([]))
    assert len(m.processes) == 1 and len(m.channels) == 0


def test_boot_without_run_is_an_error():
    prog = parse_source("proc p :: | TopBot => =\n    | a => -> close a\n")
    with pytest.raises(BootError):
        boot(prepare(prog))


# ---------------------------------------------------------------------------
# full-run behaviour

def test_listing2_runs_to_done_with_empty_tables():
    out, _ = run_corpus("listing2.campl")
    assert out.done
    kinds = [(ev.kind, ev.pid) for ev in out.trace]
    puts = [ev for ev in out.trace if ev.kind == "PUT"]
    gets = [ev for ev in out.trace if ev.kind == "GET"]
    assert len(puts) == 2 and len(gets) == 2
    # client sends first, server echoes, client receives
    assert puts[0].pid != puts[1].pid
    assert not out.machine.channels and not out.machine.processes


def test_listing1_done_under_twenty_steps():
    out, cfg = run_corpus("listing1.campl")
    assert out.done and out.steps < 20
    assert drain_output(cfg) == ["Hello World!"]


def test_appendix_c_delivers_the_integer_five():
    out, _ = run_corpus("appendix_c.campl")
    assert out.done
    five_puts = [ev for ev in out.trace
                 if ev.kind == "PUT" and ev.payload == "5"]
    five_gets = [ev for ev in out.trace
                 if ev.kind == "GET" and ev.payload == "5"]
    assert five_puts and five_gets
    # delivered from the server process to the client process
    assert five_puts[0].pid != five_gets[0].pid


def test_appendix_b_unchecked_sticks_both_processes_on_one_channel():
    prog = parse_source(corpus_text("appendix_b.campl"))
    m = boot(prepare(prog), services=ServiceConfig.from_script([]))
    out = m.run_to_completion()
    assert out.kind is OutcomeKind.STUCK
    assert len(out.stuck) == 2
    waited = {tuple(v) for v in out.stuck.values()}
    assert len(waited) == 1


def test_listing5_network_after_fork_and_split():
    prog = parse_source(corpus_text("listing5.campl"))
    check_program(prog)
    m = boot(prepare(prog), services=ServiceConfig.from_script([]))
    seen = set()
    while True:
        p = m.pick()
        assert p is not None
        ev = m.step(p)
        seen.add(ev.kind)
        if "SPLIT" in seen and "FORK" in seen:
            break
    assert len(m.processes) == 3
    live = [c for c in m.channels.values() if c.live]
    assert len(live) == 2
    assert m.check_topology() == []


def test_step_limit_outcome():
    src = ("protocol Tick(A| ) => S =\n"
           "    Go :: Put(A|S) => S\n"
           "    End :: TopBot => S\n"
           "\nproc pump :: | => Tick(Int| ) =\n"
           "    | => ch -> do\n"
           "        hput Go on ch\n"
           "        put 1 on ch\n"
           "        pump( | => ch )\n"
           "\nproc sink :: | Tick(Int| ) => =\n"
           "    | ch => ->\n"
           "        hcase ch of\n"
           "            Go -> do\n"
           "                get x on ch\n"
           "                sink( | ch => )\n"
           "            End -> close ch\n"
           "\nproc run =\n"
           "    | => -> plug\n"
           "        pump( | => ch )\n"
           "        sink( | ch => )\n")
    prog = parse_source(src)
    check_program(prog)
    m = boot(prepare(prog), services=ServiceConfig.from_script([]))
    out = m.run_to_completion(max_steps=500)
    assert out.kind is OutcomeKind.STEP_LIMIT
    assert out.steps == 500


# ---------------------------------------------------------------------------
# topology monitor

def _wire(machine, cid, a, b):
    ch = ChannelState(cid, f"c{cid}", [EndState(a), EndState(b)])
    machine.channels[cid] = ch
    return ch


def test_topology_two_nodes_one_edge():
    m = Machine(prepare(parse_source("")), 0)
    _wire(m, 0, 1, 2)
    assert m.check_topology() == []


def test_topology_path_is_fine():
    m = Machine(prepare(parse_source("")), 0)
    _wire(m, 0, 1, 2)
    _wire(m, 1, 2, 3)
    assert m.check_topology() == []


def test_topology_triangle_detected():
    m = Machine(prepare(parse_source("")), 0)
    _wire(m, 0, 1, 2)
    _wire(m, 1, 2, 3)
    _wire(m, 2, 3, 1)
    bad = m.check_topology()
    assert bad == [2]
    with pytest.raises(MachineFault):
        m.assert_invariants()


def test_corpus_topology_clean_at_every_step():
    for name in ["listing2.campl", "listing5.campl", "listing7.campl",
                 "listing8.campl", "appendix_e.campl"]:
        prog = parse_source(corpus_text(name))
        check_program(prog)
        m = boot(prepare(prog), services=ServiceConfig.from_script([]))
        while True:
            m.assert_invariants()
            p = m.pick()
            if p is None:
                break
            m.step(p)
        assert not m.processes


# ---------------------------------------------------------------------------
# races

def test_resolve_race_singleton_still_draws():
    r1 = random.Random(1)
    r2 = random.Random(1)
    chosen = resolve_race(["only"], r1)
    assert chosen == "only"
    # one draw was consumed: the streams now differ by exactly that draw
    r2.randrange(1)
    assert r1.random() == r2.random()


def test_resolve_race_empty_is_an_error():
    with pytest.raises(ValueError):
        resolve_race([], random.Random(0))


def test_listing8_winners_cover_both_arms_across_seeds():
    prog = parse_source(corpus_text("listing8.campl"))
    check_program(prog)
    ex = prepare(prog)
    winners = set()
    for seed in range(32):
        m = boot(ex, seed=seed, services=ServiceConfig.from_script([]))
        out = m.run_to_completion()
        assert out.done
        race = [ev for ev in out.trace if ev.kind == "RACE"]
        assert len(race) == 1
        winners.add(race[0].chan)
    assert winners == {"ch1", "ch2"}


def test_same_seed_same_trace():
    prog = parse_source(corpus_text("listing8.campl"))
    check_program(prog)
    ex = prepare(prog)

    def trace_text(seed):
        m = boot(ex, seed=seed, services=ServiceConfig.from_script([]))
        out = m.run_to_completion()
        return "\n".join(ev.render() for ev in out.trace)

    assert trace_text(7) == trace_text(7) == trace_text(7)
    assert trace_text(3) != "" and isinstance(trace_text(3), str)


def test_race_winner_had_a_deliverable_message():
    prog = parse_source(corpus_text("listing8.campl"))
    check_program(prog)
    ex = prepare(prog)
    for seed in (0, 1, 2, 3):
        m = boot(ex, seed=seed, services=ServiceConfig.from_script([]))
        while True:
            p = m.pick()
            if p is None:
                break
            cmd = p.next_command()
            from campl.model import Race
            if isinstance(cmd, Race):
                ready = m._race_ready(p, cmd)
                assert ready, "race scheduled with nothing deliverable"
            m.step(p)


# ---------------------------------------------------------------------------
# forwarding is the identity on message sequences

def test_forwarder_preserves_message_order():
    out, cfg = run_corpus("listing7.campl")
    assert out.done
    sent = ["one", "two", "three"]      # what the driver puts in
    assert drain_output(cfg) == sent


def test_coprotocol_forwarder_preserves_message_order():
    out, cfg = run_corpus("appendix_e.campl")
    assert out.done
    assert drain_output(cfg) == ["one", "two", "three"]


def test_fifo_per_direction():
    src = ("proc talker :: | => Put(Int|Put(Int|Put(Int|TopBot))) =\n"
           "    | => ch ->\n"
           "        on ch do\n"
           "            put 1\n"
           "            put 2\n"
           "            put 3\n"
           "            halt\n"
           "\nproc hearer :: | Put(Int|Put(Int|Put(Int|TopBot))) => =\n"
           "    | ch => ->\n"
           "        on ch do\n"
           "            get a\n"
           "            get b\n"
           "            get c\n"
           "            close\n"
           "\nproc run =\n"
           "    | => -> plug\n"
           "        talker( | => ch )\n"
           "        hearer( | ch => )\n")
    out, _ = run_text(src)
    assert out.done
    gets = [ev.payload for ev in out.trace if ev.kind == "GET"]
    assert gets == ["1", "2", "3"]


# ---------------------------------------------------------------------------
# link and neg

def test_link_fuses_and_forwards():
    src = ("proc talker :: | => Put(Int|TopBot) =\n"
           "    | => ch ->\n"
           "        on ch do\n"
           "            put 9\n"
           "            halt\n"
           "\nproc joiner :: | Put(Int|TopBot) => Put(Int|TopBot) =\n"
           "    | a => b -> a |=| b\n"
           "\nproc hearer :: | Put(Int|TopBot) => =\n"
           "    | ch => ->\n"
           "        on ch do\n"
           "            get v\n"
           "            halt\n"
           "\nproc run =\n"
           "    | => -> plug\n"
           "        talker( | => x )\n"
           "        joiner( | x => y )\n"
           "        hearer( | y => )\n")
    out, _ = run_text(src)
    assert out.done
    gets = [ev for ev in out.trace if ev.kind == "GET"]
    assert gets and gets[0].payload == "9"
    assert any(ev.kind == "LINK" for ev in out.trace)


def test_neg_flips_the_session_direction():
    # x : Neg(Put(Int|TopBot)) at the output end behaves, after neg, like
    # the input end of Put(Int|TopBot): it may get.
    src = ("proc sender :: | Neg(Put(Int|TopBot)) => =\n"
           "    | x => -> do\n"
           "        neg x as y\n"
           "        put 4 on y\n"
           "        halt y\n"
           "\nproc receiver :: | => Neg(Put(Int|TopBot)) =\n"
           "    | => x -> do\n"
           "        neg x as y\n"
           "        get v on y\n"
           "        halt y\n"
           "\nproc run =\n"
           "    | => -> plug\n"
           "        receiver( | => w )\n"
           "        sender( | w => )\n")
    out, _ = run_text(src)
    assert out.done
    assert [ev.payload for ev in out.trace if ev.kind == "GET"] == ["4"]


# ---------------------------------------------------------------------------
# higher-order values

def test_listing9_store_use_roundtrip():
    out, cfg = run_corpus("listing9.campl")
    assert out.done
    assert drain_output(cfg) == [
        "Server says: Running the stored process", "Hello World!"]
    assert any(ev.kind == "USE" for ev in out.trace)


def test_stored_process_captures_variables():
    src = (
        "proc run =\n"
        "    | console => -> plug\n"
        "        maker( | => ch )\n"
        "        runner( | ch, console => )\n"
        "\nproc maker =\n"
        "    | => ch -> do\n"
        "        get greeting on ch\n"
        "        put store(proc anon :: | Console => =\n"
        "            | c => -> do\n"
        "                hput ConsolePut on c\n"
        "                put greeting on c\n"
        "                hput ConsoleClose on c\n"
        "                halt c\n"
        "            ) on ch\n"
        "        halt ch\n"
        "\nproc runner :: "
        "| Get([Char]| Put(Store(|Console=>) | TopBot)), Console => =\n"
        "    | ch, console => -> do\n"
        '        put "captured!" on ch\n'
        "        get boxed on ch\n"
        "        close ch\n"
        "        use(boxed)( | console => )\n")
    out, cfg = run_text(src)
    assert out.done
    assert drain_output(cfg) == ["captured!"]


# ---------------------------------------------------------------------------
# faults stay loud

def test_illegal_desync_is_a_fault_not_a_hang():
    # Unchecked program that gets where a handle arrives.
    src = ("proc a =\n"
           "    | => ch -> do\n"
           "        hput ConsoleClose on ch\n"
           "        halt ch\n"
           "\nproc b =\n"
           "    | ch => -> do\n"
           "        get x on ch\n"
           "        close ch\n"
           "\nproc run =\n"
           "    | => -> plug\n"
           "        a( | => ch )\n"
           "        b( | ch => )\n")
    prog = parse_source(src)
    m = boot(prepare(prog), services=ServiceConfig.from_script([]))
    with pytest.raises(MachineFault):
        m.run_to_completion()


def test_run_to_completion_rejects_nonpositive_limit():
    prog = parse_source(corpus_text("listing1.campl"))
    m = boot(prepare(prog), services=ServiceConfig.from_script([]))
    with pytest.raises(ValueError):
        m.run_to_completion(0)


def test_race_with_continuation_resumes_after_the_arm():
    src = (
        "proc p :: | Put(Int|TopBot), Put(Int|TopBot) => =\n"
        "    | a, b => -> do\n"
        "        race\n"
        "            a -> do\n"
        "                get x on a\n"
        "                get y on b\n"
        "            b -> do\n"
        "                get y on b\n"
        "                get x on a\n"
        "        close a\n"
        "        halt b\n"
        "\nproc s :: | => Put(Int|TopBot) =\n"
        "    | => c ->\n"
        "        on c do\n"
        "            put 1\n"
        "            halt\n"
        "\nproc run =\n"
        "    | => -> plug\n"
        "        s( | => a )\n"
        "        s( | => b )\n"
        "        p( | a, b => )\n")
    out, _ = run_text(src)
    assert out.done
    closes = [ev for ev in out.trace if ev.kind in ("CLOSE", "HALT")]
    assert closes[-1].kind == "HALT"


def test_use_with_sequential_arguments():
    src = (
        "proc speak :: Int, [Char] | Console => =\n"
        "    n, word | console => -> do\n"
        "        hput ConsolePut on console\n"
        "        put word on console\n"
        "        hput ConsoleClose on console\n"
        "        halt console\n"
        "\nproc run =\n"
        "    | console => -> do\n"
        '        use(store(speak))( 3, "parametrized" | console => )\n')
    out, cfg = run_text(src)
    assert out.done
    assert drain_output(cfg) == ["parametrized"]


def test_unchecked_missing_channel_is_a_precise_fault():
    src = ("proc run =\n"
           "    | => -> plug\n"
           "        a( | => ch )\n"
           "        b( | ch => )\n"
           "\nproc a =\n"
           "    | => ch -> do\n"
           "        put 1 on ch\n"
           "        put 2 on phantom\n"
           "        halt ch\n"
           "\nproc b =\n"
           "    | ch => -> do\n"
           "        get x on ch\n"
           "        get y on ch\n"
           "        close ch\n")
    prog = parse_source(src)
    m = boot(prepare(prog), services=ServiceConfig.from_script([]))
    with pytest.raises(MachineFault) as e:
        m.run_to_completion()
    assert "phantom" in str(e.value)


def test_unchecked_call_arity_is_a_fault():
    src = ("proc takes_two =\n"
           "    | a, b => -> do\n"
           "        close a\n"
           "        close b\n"
           "\nproc run =\n"
           "    | => -> plug\n"
           "        takes_two( | x => )\n"
           "        do\n"
           "            halt x\n")
    prog = parse_source(src)
    m = boot(prepare(prog), services=ServiceConfig.from_script([]))
    with pytest.raises(MachineFault) as e:
        m.run_to_completion()
    assert "mismatched" in str(e.value)


THREE_WAY_RACE = (
    "proc shout :: | => Put(Int|TopBot) =\n"
    "    | => c ->\n"
    "        on c do\n"
    "            put 7\n"
    "            halt\n"
    "\nproc drain_rest :: | Put(Int|TopBot), Put(Int|TopBot) => =\n"
    "    | p, q => -> do\n"
    "        get x on p\n"
    "        close p\n"
    "        get y on q\n"
    "        halt q\n"
    "\nproc judge :: | Put(Int|TopBot), Put(Int|TopBot), Put(Int|TopBot) => =\n"
    "    | a, b, c => ->\n"
    "        race\n"
    "            a -> do\n"
    "                get w on a\n"
    "                close a\n"
    "                drain_rest( | b, c => )\n"
    "            b -> do\n"
    "                get w on b\n"
    "                close b\n"
    "                drain_rest( | a, c => )\n"
    "            c -> do\n"
    "                get w on c\n"
    "                close c\n"
    "                drain_rest( | a, b => )\n"
    "\nproc run =\n"
    "    | => -> plug\n"
    "        shout( | => a )\n"
    "        shout( | => b )\n"
    "        shout( | => c )\n"
    "        judge( | a, b, c => )\n")


def test_three_way_race_covers_all_winners_across_seeds():
    prog = parse_source(THREE_WAY_RACE)
    check_program(prog)
    ex = prepare(prog)
    winners = set()
    for seed in range(48):
        m = boot(ex, seed=seed, services=ServiceConfig.from_script([]))
        out = m.run_to_completion()
        assert out.done
        winners.add(next(ev.chan for ev in out.trace if ev.kind == "RACE"))
    assert winners == {"a", "b", "c"}
