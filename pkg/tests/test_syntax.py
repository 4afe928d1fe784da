"""Parsing, rendering, and the auxiliary file formats."""

from __future__ import annotations

from pathlib import Path

import pytest

import corpus
from chorkit import cc, sp, syntax
from chorkit.cc import Com, End, Le, Lit, Prefix, Ref, State
from chorkit.syntax import ParseError, parse_source, parse_state_text, parse_table_text

SAMPLES = Path(__file__).resolve().parent.parent / "samples"


def test_parse_safe_purchase_source():
    text = (SAMPLES / "purchase_safe.chor").read_text(encoding="utf-8")
    assert parse_source(text).to_program() == corpus.purchase_safe()


def test_parse_bare_end():
    unit = parse_source("main = end")
    assert unit.definitions == ()
    assert unit.main == End()


def test_parsing_does_not_check_well_formedness():
    unit = parse_source("main = p.e -> p.x; end")
    prog = unit.to_program()
    assert prog.main == Prefix(Com("p", Ref("e"), "p", "x"), End())
    assert not cc.program_well_formed(prog)


def test_parse_definitions_and_calls():
    text = "def X(p, q) =\n  p.ping -> q.x;\n  end\n\nmain = call X\n"
    prog = parse_source(text).to_program()
    assert prog == cc.ChorProgram(
        {"X": cc.Procedure(("p", "q"), Prefix(Com("p", Ref("ping"), "q", "x"), End()))},
        cc.Call("X"),
    )


def test_parse_expressions_and_guards():
    text = "main = if p.succ(x) <= 2 then { p.0 -> q.y; end } else { end }"
    main = parse_source(text).main
    assert main.guard == Le(cc.Succ(Ref("x")), Lit(2))
    assert main.then_c.action.expr == Lit(0)


def test_parse_error_carries_a_location():
    with pytest.raises(ParseError) as exc:
        parse_source("main = p.e -> q.")
    diag = exc.value.diagnostics[0]
    assert diag.severity == "error"
    assert diag.line == 1 and diag.col > 0


def test_duplicate_definition_is_an_error():
    with pytest.raises(ParseError) as exc:
        parse_source("def X(p, q) = end\ndef X(p, q) = end\nmain = end")
    assert "duplicate" in exc.value.diagnostics[0].message


def test_unknown_label_is_an_error():
    with pytest.raises(ParseError) as exc:
        parse_source("main = p -> q[up]; end")
    assert "unknown label" in exc.value.diagnostics[0].message


def test_comments_and_whitespace_are_ignored():
    text = "# protocol\nmain =  end  # done"
    assert parse_source(text).main == End()


# ---------------------------------------------------------------------------
# Rendering


def test_render_end():
    assert syntax.render_chor(End()) == "end"
    assert syntax.render(End()) == "end"


def test_render_parse_round_trip_for_all_samples():
    for path in sorted(SAMPLES.glob("*.chor")):
        unit = parse_source(path.read_text(encoding="utf-8"))
        again = parse_source(syntax.render_unit(unit))
        assert again == unit, path.name


def test_render_program_round_trips_the_corpus():
    for name, prog in corpus.named_corpus():
        text = syntax.render_program(prog)
        assert parse_source(text).to_program() == prog, name
    for prog in corpus.random_programs(7, 25):
        text = syntax.render_program(prog)
        assert parse_source(text).to_program() == prog


def test_render_network_lists_processes_in_canonical_order():
    from chorkit import projection

    compiled = projection.epp(corpus.purchase_safe())
    text = syntax.render_network(compiled.net)
    lines = text.splitlines()
    assert lines[0].startswith("buyer[")
    assert lines[1].startswith("seller[")
    assert "seller & { left: seller?y; end, right: end }" in lines[0]


def test_render_behaviour_forms():
    b = sp.Offer("p", sp.Recv("p", "x", sp.End()), None)
    assert syntax.render_behaviour(b) == "p & { left: p?x; end }"
    assert syntax.render_behaviour(sp.Call("X@p")) == "call X@p"


def test_render_is_deterministic():
    prog = corpus.purchase_safe()
    assert syntax.render_program(prog) == syntax.render_program(prog)


def test_running_call_renders_for_traces_only():
    running = cc.RunningCall("X", ("q",), End())
    text = syntax.render_chor(running)
    assert "awaiting" in text and "q" in text


# ---------------------------------------------------------------------------
# State and table files


def test_parse_state_file():
    s = parse_state_text("buyer.offer = 2\n\n# note\nseller.x = 0\n")
    assert s == State({("buyer", "offer"): 2})


def test_parse_state_file_rejects_garbage():
    with pytest.raises(ParseError):
        parse_state_text("buyer = 2\n")


def test_parse_table_file():
    table = parse_table_text("0,0 -> 1\n0,1 -> 0\n2,2 -> undef\n")
    assert table.arity == 2
    assert table.entries == {(0, 0): 1, (0, 1): 0, (2, 2): None}


def test_parse_table_file_rejects_mixed_arity():
    with pytest.raises(ParseError):
        parse_table_text("0 -> 1\n0,1 -> 0\n")


def test_parse_table_file_rejects_empty():
    with pytest.raises(ParseError):
        parse_table_text("# nothing\n")
