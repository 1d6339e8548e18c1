import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynrbac import corpus
from dynrbac.dsl import ast, parse_policy, parse_predicate, pretty_print, validate
from dynrbac.dsl.lexer import KEYWORDS
from dynrbac.dsl.printer import format_expr
from dynrbac.errors import DuplicateDeclaration, ParseError

from fuzz import CORPUS_MACHINES, syntax_mutations

EVENTS = ["CreateReport", "ModifyReport", "DeleteReport", "SubmitReport",
          "ApproveReport", "ReturnReport", "RegisterReport"]


def test_abstract_corpus_machine_has_the_seven_events(abs_m):
    assert [e.name for e in abs_m.events] == EVENTS
    assert len(abs_m.init) == 2


def test_empty_machine():
    m = parse_policy("machine M variables invariants init events end")
    assert m.name == "M"
    assert m.events == () and m.variables == () and m.init == ()
    assert validate(m) == []


def test_minimal_explicit_form():
    m = parse_policy("machine M init end end")
    assert m.events == ()


def test_comments_and_layout_are_ignored():
    a = parse_policy("machine M -- c\n set S = {a} variable x : set of S init x := {} end end")
    b = parse_policy("machine   M\nset S={a}\n\nvariable x:set of S\ninit\n x:={}\nend\nend\n")
    assert a == b


def test_undeclared_element_is_a_semantic_error():
    text = corpus.read_text("rms_abs.pol").replace(
        "where rp in reports /\\ report_state(rp) = CREATED\n    then\n      skip",
        "where rp in reports /\\ report_state(rp) = CRETED\n    then\n      skip")
    m = parse_policy(text)  # syntactically fine
    diags = validate(m)
    assert len(diags) == 1
    assert "CRETED" in diags[0].message
    assert diags[0].code == "undeclared"
    assert diags[0].line > 0


@pytest.mark.parametrize("text, line, column, expected", [
    ("machine M init", 1, 15, "'end'"),
    ("machine", 1, 8, "identifier"),
    ("machine M\n  set S = {a,}\ninit end end", 2, 14, "identifier"),
    ("machine M init x := end end", 1, 21, "'{'"),
    ("machine M init end end extra", 1, 24, "end of input"),
])
def test_syntax_errors_are_positioned(text, line, column, expected):
    with pytest.raises(ParseError) as info:
        parse_policy(text)
    err = info.value
    assert (err.line, err.column) == (line, column)
    assert expected in err.expected


def test_lexical_error_position():
    with pytest.raises(ParseError) as info:
        parse_policy("machine M\ninit @ end end")
    assert (info.value.line, info.value.column) == (2, 6)


@pytest.mark.parametrize("text", [
    "machine M set S = {a} set S = {b} init end end",
    "machine M set S = {a, a} init end end",
    "machine M set S = {a} set T = {a} init end end",
    "machine M set S = {a} variable S : set of S init end end",
    "machine M invariant i : true invariant i : true init end end",
    "machine M init end event E where true then end event E where true then end end",
    "machine M set S = {a} init end event E any p, p where p = a then end end",
])
def test_duplicate_declarations(text):
    with pytest.raises(DuplicateDeclaration):
        parse_policy(text)


# -- precedence ---------------------------------------------------------------

def test_precedence_of_connectives():
    p = parse_predicate("a = b /\\ c = d \\/ not e = f => g = h")
    assert isinstance(p, ast.BoolOp) and p.op == "=>"
    assert p.left.op == "\\/"
    assert p.left.left.op == "/\\"
    assert isinstance(p.left.right, ast.Not)


def test_quantifier_binds_loosest():
    p = parse_predicate("!x . x in S /\\ y = x => x = y")
    assert isinstance(p, ast.Forall)
    assert p.domain is None
    assert p.body.op == "=>"


def test_explicit_quantifier_domain():
    p = parse_predicate("!x in S \\ T . f(x) = a")
    assert p.domain == ast.SetOp("\\", ast.Ident("S"), ast.Ident("T"))


def test_maplets_associate_left_and_bind_looser_than_set_ops():
    e = parse_predicate("{a |-> b |-> c union d}")
    (item,) = e.items
    assert item == ast.Maplet(ast.Maplet(ast.Ident("a"), ast.Ident("b")),
                              ast.SetOp("union", ast.Ident("c"), ast.Ident("d")))


def test_application_and_image():
    e = parse_predicate("f(a, b)[S](c)")
    assert isinstance(e, ast.Apply)
    assert isinstance(e.fn, ast.Image)
    assert e.fn.fn.args == (ast.Ident("a"), ast.Ident("b"))


def test_override_action():
    m = corpus.load("rms_ref1.pol")
    submit = m.event("SubmitReport")
    rhs = submit.actions[1].rhs
    assert isinstance(rhs, ast.SetOp) and rhs.op == "<+"


# -- round trip ---------------------------------------------------------------

@pytest.mark.parametrize("name", CORPUS_MACHINES)
def test_round_trip_on_corpus(name):
    m = corpus.load(name)
    printed = pretty_print(m)
    again = parse_policy(printed)
    assert again == m
    assert pretty_print(again) == printed


NAMES = st.sampled_from(["a", "b", "f", "S", "x_1", "Reporter"])


def exprs():
    leaves = st.one_of(NAMES.map(ast.Ident), st.booleans().map(ast.BoolLit),
                       st.just(ast.SetLit()))

    def extend(children):
        return st.one_of(
            st.lists(children, min_size=1, max_size=3).map(lambda xs: ast.SetLit(tuple(xs))),
            st.tuples(children, children).map(lambda t: ast.Maplet(*t)),
            st.tuples(children, st.lists(children, min_size=1, max_size=2)).map(
                lambda t: ast.Apply(t[0], tuple(t[1]))),
            st.tuples(children, children).map(lambda t: ast.Image(*t)),
            st.tuples(st.sampled_from(ast.SET_OPS), children, children).map(
                lambda t: ast.SetOp(*t)),
            st.tuples(st.sampled_from(ast.REL_OPS), children, children).map(
                lambda t: ast.Rel(*t)),
            children.map(ast.Not),
            st.tuples(st.sampled_from(ast.BOOL_OPS), children, children).map(
                lambda t: ast.BoolOp(*t)),
            st.tuples(NAMES, st.none() | children, children).map(lambda t: ast.Forall(*t)),
        )

    return st.recursive(leaves, extend, max_leaves=12)


@settings(max_examples=300, deadline=None)
@given(exprs())
def test_printing_then_parsing_any_tree_is_identity(tree):
    assert parse_predicate(format_expr(tree)) == tree


# -- totality -----------------------------------------------------------------

@pytest.mark.parametrize("index", range(0, 200, 25))
def test_fuzzed_mutations_give_positioned_errors(index):
    for text in syntax_mutations()[index:index + 25]:
        with pytest.raises(ParseError) as info:
            parse_policy(text)
        assert info.value.line >= 1 and info.value.column >= 1


@settings(max_examples=300, deadline=None)
@given(st.lists(st.sampled_from(list("Msab{},=:|->()/\\!.\n") + [
    "machine", "end", "init", "event", "where", "then", "set", "variable",
    ":=", "::", "<+", " "]), max_size=40).map("".join))
def test_parser_is_total(text):
    try:
        parse_policy(text)
    except ParseError as exc:
        assert exc.line >= 1 and exc.column >= 1


def test_deep_nesting_is_reported_not_crashed():
    with pytest.raises(ParseError):
        parse_predicate("(" * 5000 + "a" + ")" * 5000)


def test_keywords_are_not_identifiers():
    assert "in" in KEYWORDS
    with pytest.raises(ParseError):
        parse_policy("machine end init end end")
