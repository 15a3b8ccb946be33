"""Data model, generator, validation and serialization."""

import json
from dataclasses import replace

import numpy as np
import pytest

from biloc import GeneratorParams, generate, load, save, scale_to_ratio, validate
from biloc.instance import InstanceFormatError, dumps, price_grid

from conftest import tiny_params


def test_price_grid_five_levels():
    assert price_grid(15.0, 23.0, 5) == [15.0, 17.0, 19.0, 21.0, 23.0]


def test_price_grid_three_levels():
    assert price_grid(15.0, 23.0, 3) == [15.0, 19.0, 23.0]


def test_generated_ladders_carry_the_price_grid():
    inst = generate(tiny_params(seed=1, n_prices=5))
    for ladder in inst.price_ladders:
        assert ladder.prices == (15.0, 17.0, 19.0, 21.0, 23.0)
        assert all(level == 0.0 for level in ladder.min_demands)


def test_ratio_is_hit_exactly():
    inst = generate(tiny_params(seed=2, ratio=2.0))
    assert inst.total_capacity == pytest.approx(2.0 * inst.total_demand, rel=1e-9)


def test_ratio_law_over_random_params():
    rng = np.random.default_rng(0)
    for trial in range(25):
        params = tiny_params(
            seed=trial,
            ratio=float(rng.uniform(0.2, 6.0)),
            n_facilities=int(rng.integers(1, 5)),
            n_customers=int(rng.integers(2, 30)),
        )
        inst = generate(params)
        assert abs(inst.capacity_ratio - params.ratio) / params.ratio <= 1e-9


def test_generator_is_byte_deterministic():
    params = tiny_params(seed=7, n_customers=12)
    assert dumps(generate(params)) == dumps(generate(params))


def test_different_seeds_differ():
    assert dumps(generate(tiny_params(seed=1))) != dumps(generate(tiny_params(seed=2)))


def test_cost_monotone_across_service_levels():
    inst = generate(tiny_params(seed=3, n_services=3, n_customers=6))
    costs = inst.costs
    assert np.all(costs[:, :, 0] <= costs[:, :, 1] + 1e-12)
    assert np.all(costs[:, :, 1] <= costs[:, :, 2] + 1e-12)
    # the declared multipliers are 1, 1.05, 1.10
    mult = [s.cost_multiplier for s in inst.service_levels]
    assert mult == [1.0, 1.05, 1.1]


def test_round_robin_customer_assignment():
    inst = generate(tiny_params(seed=4, n_customers=8))
    shippers = [c.shipper for c in inst.customers]
    assert shippers == [0, 1, 0, 1, 0, 1, 0, 1]
    cats = [c.category for c in inst.customers if c.shipper == 0]
    assert cats == [0, 1, 0, 1]


def test_category_demand_is_sum_of_members(tiny_instance):
    for n in range(tiny_instance.n_shippers):
        for k in range(tiny_instance.categories_per_shipper[n]):
            members = tiny_instance.customers_by_category[(n, k)]
            expected = sum(tiny_instance.customers[j].demand for j in members)
            assert tiny_instance.category_demand(n, k) == pytest.approx(expected)


def test_validate_clean_on_generated_instances():
    rng = np.random.default_rng(1)
    for seed in range(12):
        params = tiny_params(
            seed=seed,
            ratio=float(rng.uniform(0.3, 5.0)),
            n_facilities=int(rng.integers(1, 5)),
            n_customers=int(rng.integers(2, 20)),
            n_shippers=int(rng.integers(1, 4)),
            categories_per_shipper=int(rng.integers(1, 4)),
            n_services=int(rng.integers(1, 4)),
            n_prices=int(rng.integers(2, 6)),
        )
        assert validate(generate(params)) == []


def test_validate_flags_negative_cost(tiny_instance):
    costs = tiny_instance.costs.copy()
    costs[0, 1, 0] = -1.0
    broken = replace(tiny_instance, costs=costs)
    problems = validate(broken)
    assert len(problems) == 1
    assert "c[0,1,0]" in problems[0]


def test_validate_flags_bad_category(tiny_instance):
    customers = list(tiny_instance.customers)
    customers[0] = replace(customers[0], category=9)
    broken = replace(tiny_instance, customers=tuple(customers))
    problems = validate(broken)
    assert any("category 9" in p for p in problems)


def test_validate_flags_nonincreasing_prices(tiny_instance):
    ladders = list(tiny_instance.price_ladders)
    ladders[0] = replace(ladders[0], prices=(23.0, 15.0))
    broken = replace(tiny_instance, price_ladders=tuple(ladders))
    assert any("strictly increasing" in p for p in validate(broken))


def test_scale_to_ratio_identity(tiny_instance):
    same = scale_to_ratio(tiny_instance, tiny_instance.capacity_ratio)
    assert dumps(same) == dumps(tiny_instance)


def test_scale_to_ratio_halves_capacities():
    inst = generate(tiny_params(seed=5, ratio=1.0))
    scaled = scale_to_ratio(inst, 0.5)
    for before, after in zip(inst.facilities, scaled.facilities):
        assert after.capacity == pytest.approx(0.5 * before.capacity)
        assert after.fixed_cost == before.fixed_cost


def test_scale_to_ratio_round_trips(tiny_instance):
    original = tiny_instance.capacity_ratio
    back = scale_to_ratio(scale_to_ratio(tiny_instance, 5.0), original)
    for before, after in zip(tiny_instance.facilities, back.facilities):
        assert after.capacity == pytest.approx(before.capacity, abs=1e-12)


def test_scale_to_ratio_rejects_nonpositive(tiny_instance):
    with pytest.raises(ValueError):
        scale_to_ratio(tiny_instance, 0.0)


def test_save_load_round_trip(tmp_path, tiny_instance):
    path = tmp_path / "inst.json"
    save(tiny_instance, path)
    assert dumps(load(path)) == dumps(tiny_instance)


def test_load_rejects_unknown_fields(tmp_path, tiny_instance):
    path = tmp_path / "inst.json"
    save(tiny_instance, path)
    data = json.loads(path.read_text())
    data["facilities"][0]["color"] = "red"
    path.write_text(json.dumps(data))
    with pytest.raises(InstanceFormatError, match="color"):
        load(path)


def test_load_rejects_truncated_file(tmp_path, tiny_instance):
    path = tmp_path / "inst.json"
    save(tiny_instance, path)
    path.write_text(path.read_text()[:150])
    with pytest.raises(InstanceFormatError, match="not valid JSON"):
        load(path)


def test_generator_rejects_bad_params():
    with pytest.raises(ValueError):
        generate(tiny_params(seed=0, ratio=-1.0))
    with pytest.raises(ValueError):
        generate(tiny_params(seed=0, n_prices=1))
    with pytest.raises(ValueError):
        generate(tiny_params(seed=0, n_customers=0))
    with pytest.raises(ValueError):
        GeneratorParams(**{**tiny_params(seed=0).__dict__,
                           "price_min": 23.0, "price_max": 15.0}).check()
