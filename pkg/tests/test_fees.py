import math

import pytest
from hypothesis import given, strategies as st

import patent_rent as pr
from patent_rent.fees import FeeEntry, FeeSchedule, serialize_schedule


class TestBuiltins:
    def test_india_values(self, india):
        assert india.cost_at(5) == pytest.approx(54.81)
        assert india.cost_at(12) == pytest.approx(328.86)
        assert india.cost_at(20) == pytest.approx(548.10)

    def test_india_uncharged_early_years(self, india):
        assert india.cost_at(1) == 0.0
        assert india.cost_at(2) == 0.0

    def test_china_values(self):
        china = pr.builtin_schedule("china")
        assert china.cost_at(1) == 135.0
        assert china.cost_at(17) == 1200.0

    def test_us_values(self):
        us = pr.builtin_schedule("us")
        assert us.cost_at(9) == 3600.0
        assert us.cost_at(2) == 0.0
        assert us.cost_at(13) == 7400.0
        assert us.cost_at(16) == 0.0

    def test_unknown_country(self):
        with pytest.raises(pr.DomainError):
            pr.builtin_schedule("germany")

    @pytest.mark.parametrize("country", ["india", "china", "us"])
    def test_costs_nondecreasing_over_covered_ages(self, country):
        schedule = pr.builtin_schedule(country)
        covered = [schedule.cost_at(a) for a in schedule.fee_ages()]
        assert covered == sorted(covered)

    @pytest.mark.parametrize("country", ["india", "china", "us"])
    def test_cost_total_over_term(self, country):
        schedule = pr.builtin_schedule(country)
        for age in range(1, schedule.max_term + 1):
            assert schedule.cost_at(age) >= 0.0


class TestCostAt:
    def test_age_out_of_term(self, india):
        with pytest.raises(pr.DomainError):
            india.cost_at(0)
        with pytest.raises(pr.DomainError):
            india.cost_at(21)


class TestValidation:
    def test_overlapping_ranges_rejected(self):
        with pytest.raises(pr.ValidationError) as err:
            FeeSchedule(
                name="bad",
                currency="USD",
                entries=(FeeEntry(3, 6, 10.0), FeeEntry(5, 10, 20.0)),
            )
        assert "overlap" in str(err.value)

    def test_negative_cost_rejected(self):
        with pytest.raises(pr.ValidationError) as err:
            FeeSchedule(name="bad", currency="USD", entries=(FeeEntry(3, 6, -5.0),))
        assert "negative cost" in str(err.value)

    def test_all_violations_reported(self):
        with pytest.raises(pr.ValidationError) as err:
            FeeSchedule(
                name="bad",
                currency="USD",
                entries=(FeeEntry(6, 3, -1.0), FeeEntry(2, 25, 5.0)),
            )
        problems = err.value.problems
        assert any("descending" in p for p in problems)
        assert any("negative" in p for p in problems)
        assert any("outside" in p for p in problems)


class TestLoadSerialize:
    def test_load_matches_builtin(self, india):
        text = """
        # India renewal fees
        name = india
        currency = USD
        max_term = 20
        entry = { from = 3, to = 6, cost = 54.81 }
        entry = { from = 7, to = 10, cost = 164.43 }
        entry = { from = 11, to = 15, cost = 328.86 }
        entry = { from = 16, to = 20, cost = 548.1 }
        """
        assert pr.load_schedule(text) == india

    def test_load_reports_every_problem(self):
        text = "name = x\nentry = {from=3, to=6, cost=-2}\nentry = {from=5, to=9, cost=1}\n"
        with pytest.raises(pr.ValidationError) as err:
            pr.load_schedule(text)
        message = str(err.value)
        assert "currency" in message and "max_term" in message

    def test_load_overlap_error(self):
        text = (
            "name = x\ncurrency = USD\nmax_term = 20\n"
            "entry = { from = 3, to = 6, cost = 1 }\n"
            "entry = { from = 5, to = 10, cost = 2 }\n"
        )
        with pytest.raises(pr.ValidationError) as err:
            pr.load_schedule(text)
        assert "overlap" in str(err.value)

    def test_malformed_line(self):
        with pytest.raises(pr.ValidationError) as err:
            pr.load_schedule("name india\ncurrency = USD\nmax_term = 20\nentry = {}\n")
        assert "line 1" in str(err.value)

    @pytest.mark.parametrize("country", ["india", "china", "us"])
    def test_round_trip_builtins(self, country):
        schedule = pr.builtin_schedule(country)
        assert pr.load_schedule(serialize_schedule(schedule)) == schedule


@st.composite
def schedules(draw):
    max_term = draw(st.integers(min_value=8, max_value=25))
    n_entries = draw(st.integers(min_value=1, max_value=min(4, max_term // 2)))
    cuts = draw(
        st.lists(
            st.integers(min_value=1, max_value=max_term),
            min_size=2 * n_entries,
            max_size=2 * n_entries,
            unique=True,
        )
    )
    cuts.sort()
    entries = []
    for i in range(n_entries):
        cost = draw(st.floats(min_value=0, max_value=1e6, allow_nan=False))
        entries.append(FeeEntry(cuts[2 * i], cuts[2 * i + 1], cost))
    return FeeSchedule(name="fuzz", currency="XTS", entries=tuple(entries), max_term=max_term)


@given(schedules())
def test_round_trip_is_identity(schedule):
    assert pr.load_schedule(serialize_schedule(schedule)) == schedule


@given(schedules())
def test_cost_total_and_nonnegative(schedule):
    for age in range(1, schedule.max_term + 1):
        cost = schedule.cost_at(age)
        assert cost >= 0.0 and math.isfinite(cost)
