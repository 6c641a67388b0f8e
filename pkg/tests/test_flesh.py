"""Registry, parameters, scheduling, timers, parameter files."""

import pytest

from tapestry.flesh import (
    BINS,
    Flesh,
    ParameterError,
    ParameterSpec,
    ScheduleError,
    ScheduleItem,
    VariableGroup,
    parse_parameter_file,
)


def P(name, kind, default, **kw):
    return ParameterSpec("t", name, kind, default, **kw)


def item(name, bin="EVOL", **kw):
    return ScheduleItem("t", name, bin, func=lambda s: None, **kw)


class TestParameters:
    def test_declare_and_get(self):
        f = Flesh()
        f.declare_param(P("n", "int", 3))
        assert f.get("t::n") == 3
        with pytest.raises(ParameterError):
            f.get("t::missing")

    def test_duplicate_declare_rejected(self):
        f = Flesh()
        f.declare_param(P("n", "int", 3))
        with pytest.raises(ParameterError, match="duplicate"):
            f.declare_param(P("n", "int", 4))

    def test_int_coercion(self):
        spec = P("n", "int", 0)
        assert spec.coerce("42") == 42
        assert spec.coerce(-3) == -3
        with pytest.raises(ParameterError):
            spec.coerce("4.5")
        with pytest.raises(ParameterError):
            spec.coerce(True)

    def test_real_coercion_and_range(self):
        spec = P("x", "real", 0.0, low=0.0, high=1.0)
        assert spec.coerce("0.25") == 0.25
        with pytest.raises(ParameterError, match="below minimum"):
            spec.coerce(-0.1)
        with pytest.raises(ParameterError, match="above maximum"):
            spec.coerce("1.5")

    def test_bool_coercion(self):
        spec = P("b", "bool", False)
        for raw in ("true", "Yes", "1", True):
            assert spec.coerce(raw) is True
        for raw in ("false", "No", "0", False):
            assert spec.coerce(raw) is False
        with pytest.raises(ParameterError):
            spec.coerce("maybe")

    def test_keyword_coercion(self):
        spec = P("k", "keyword", "a", choices=("a", "b"))
        assert spec.coerce("B") == "b"
        with pytest.raises(ParameterError, match="not one of"):
            spec.coerce("c")

    def test_string_strips_quotes(self):
        spec = P("s", "string", "")
        assert spec.coerce('"hello world"') == "hello world"
        assert spec.coerce("'x'") == "x"
        assert spec.coerce("plain") == "plain"

    def test_steer_requires_steerable(self):
        f = Flesh()
        f.declare_param(P("fixed", "int", 1))
        f.declare_param(P("free", "int", 1, steerable=True))
        with pytest.raises(ParameterError, match="not steerable"):
            f.steer("t::fixed", 2, iteration=0)
        f.steer("t::free", 5, iteration=7)
        assert f.get("t::free") == 5

    def test_steering_log_format(self):
        # one line per applied change: iteration, name, old, new
        f = Flesh()
        f.declare_param(P("free", "int", 1, steerable=True))
        f.steer("t::free", "5", iteration=12)
        assert f.steering_log == ["12 t::free 1 5"]

    def test_set_initial_ignores_steerable_flag(self):
        f = Flesh()
        f.declare_param(P("fixed", "keyword", "a", choices=("a", "b")))
        f.set_initial("t::fixed", "b")
        assert f.get("t::fixed") == "b"
        with pytest.raises(ParameterError):
            f.set_initial("t::fixed", "zzz")


class TestGroups:
    def test_declare_group(self):
        f = Flesh()
        f.declare_group(VariableGroup("t", "state", ("u", "v"), time_levels=2))
        assert f.groups["t::state"].variables == ("u", "v")

    def test_rejects_bad_time_levels_and_duplicates(self):
        f = Flesh()
        with pytest.raises(ParameterError):
            f.declare_group(VariableGroup("t", "g", ("u",), time_levels=0))
        f.declare_group(VariableGroup("t", "g", ("u",)))
        with pytest.raises(ParameterError, match="duplicate"):
            f.declare_group(VariableGroup("t", "g", ("w",)))


class TestSchedule:
    def test_eight_bins_fixed(self):
        assert BINS == ("STARTUP", "INITIAL", "PRESTEP", "EVOL", "POSTSTEP",
                        "ANALYSIS", "OUTPUT", "SHUTDOWN")
        f = Flesh()
        with pytest.raises(ScheduleError):
            f.schedule(item("x", bin="NOPE"))
        with pytest.raises(ScheduleError):
            f.order("NOPE")

    def test_after_before_ordering(self):
        f = Flesh()
        f.schedule(item("c", after=("a",)))
        f.schedule(item("a", before=("b",)))
        f.schedule(item("b"))
        names = [it.name for it in f.order("EVOL")]
        assert names.index("a") < names.index("b")
        assert names.index("a") < names.index("c")

    def test_lexicographic_tie_break(self):
        f = Flesh()
        for n in ("zeta", "alpha", "mid"):
            f.schedule(item(n))
        assert [it.name for it in f.order("EVOL")] == ["alpha", "mid", "zeta"]

    def test_constraints_on_unknown_names_are_inert(self):
        f = Flesh()
        f.schedule(item("only", after=("ghost_item",), before=("another",)))
        assert [it.name for it in f.order("EVOL")] == ["only"]

    def test_cycle_error_names_members(self):
        f = Flesh()
        f.schedule(item("p", after=("q",)))
        f.schedule(item("q", after=("p",)))
        f.schedule(item("free"))
        with pytest.raises(ScheduleError) as exc:
            f.order("EVOL")
        msg = str(exc.value)
        assert "p" in msg and "q" in msg and "free" not in msg

    def test_duplicate_item_rejected(self):
        f = Flesh()
        f.schedule(item("x"))
        with pytest.raises(ScheduleError, match="duplicate"):
            f.schedule(item("x"))

    def test_order_cache_invalidated_by_new_item(self):
        f = Flesh()
        f.schedule(item("b"))
        assert [it.name for it in f.order("EVOL")] == ["b"]
        f.schedule(item("a"))
        assert [it.name for it in f.order("EVOL")] == ["a", "b"]

    def test_deterministic_with_dependencies(self):
        # same registration set in two different orders gives one answer
        def build(seq):
            f = Flesh()
            for n, kw in seq:
                f.schedule(item(n, **kw))
            return [it.name for it in f.order("EVOL")]

        spec1 = [("w", {}), ("x", {"after": ("w",)}), ("y", {"after": ("w",)}),
                 ("z", {"after": ("x", "y")})]
        assert build(spec1) == build(list(reversed(spec1))) == ["w", "x", "y", "z"]


class TestTimers:
    def test_timer_accumulates(self):
        f = Flesh()
        for _ in range(3):
            with f.timed("EVOL/t::rhs"):
                pass
        rep = f.timer_report()
        assert rep["EVOL/t::rhs"]["calls"] == 3
        assert rep["EVOL/t::rhs"]["seconds"] >= 0.0


class TestParameterFile:
    def test_parse_basic(self):
        text = """
        # a comment
        wave::c = 1.0
        grid::npoints = 33 33 33   # trailing comment
        io::out_dir = "runs/a b"
        """
        raw = parse_parameter_file(text)
        assert raw["wave::c"] == "1.0"
        assert raw["grid::npoints"] == "33 33 33"
        assert raw["io::out_dir"] == '"runs/a b"'

    def test_parse_errors(self):
        with pytest.raises(ParameterError, match="line 1"):
            parse_parameter_file("wave::c 1.0")
        with pytest.raises(ParameterError, match="lacks thorn"):
            parse_parameter_file("c = 1.0")

    def test_last_assignment_wins(self):
        raw = parse_parameter_file("t::a = 1\nt::a = 2\n")
        assert raw["t::a"] == "2"
