"""Acceptance probabilities: closed form, sample average, and calibration.

A shipper-category accepts an offered (service, price) when its realized
utility beats the outside option.  With extreme-value noise of scale beta the
probability has the binary-logit closed form; the same quantity can be
estimated by counting across simulated draws, which is how the model
generalizes to noise families without a closed form.
"""

from biloc import (
    GeneratorParams,
    RhoTable,
    ScenarioSet,
    alpha_for_target_rho,
    alpha_sweep_values,
    generate,
    rho_closed_form,
    rho_saa,
)

inst = generate(GeneratorParams(
    n_facilities=2, n_customers=8, n_shippers=2, categories_per_shipper=2,
    n_services=2, n_prices=3, ratio=2.0, seed=3,
))

print("closed form vs 100k-draw sample average (shipper 0, category 0):")
scenarios = ScenarioSet.for_model(inst.choice_model, 100_000, seed=1)
for m in inst.services_by_category[0][0]:
    for p, q in enumerate(inst.ladder(0, m).prices):
        closed = rho_closed_form(inst, 0, 0, m, p)
        sampled = rho_saa(inst, 0, 0, m, p, scenarios)
        print(f"  service {m} @ {q:5.1f}: closed {closed:.4f}  sampled {sampled:.4f}")

# calibrating the price sensitivity so the cheapest offer is almost never
# taken, then spreading a grid from there up to price-insensitive
alpha = alpha_for_target_rho(0.005, price=15.0, preference=4.5,
                             optout_utility=3.0, beta=1.0)
grid = alpha_sweep_values(round(alpha, 5), count=11)
print(f"\nalpha pinning the cheapest offer at probability 0.005: {alpha:.5f}")
print("sensitivity grid:", [round(a, 5) for a in grid])

# a full probability table drives the optimization model
table = RhoTable.closed_form(inst)
print(f"\nprobability table entries: {len(dict(table.items()))}")
print("probabilities fall as the ladder climbs:",
      [round(table.get(0, 0, 0, p), 3)
       for p in range(len(inst.ladder(0, 0).prices))])
