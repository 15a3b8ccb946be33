"""The two-shipper worked example under three information regimes.

Two facilities (150/250 and 50/140 capacity/fixed-cost), two service levels
(capacity usage 1 and 1.15), two-price ladders with minimum-demand gates on
the cheap prices.  Shipper 0 brings 150 demand units, shipper 1 only 40, so
the small shipper can never reach the fast service's 50-unit gate, and the
fast service's 1.15 usage factor overloads the big facility (1.15 x 150 > 150).
"""

from biloc import bench

report = bench.run_fixture_example()

print("expected profit by probability regime:")
for row in report.rows():
    print(f"  {row['regime']:>20}: {row['objective']:8.2f}")

print("\nqualitative structure:")
print(f"  small shipper blocked from the cheap fast price: "
      f"{report.cheap_price_blocked_for_small_shipper}")
print(f"  fast service overloads the big facility: "
      f"{report.fast_service_overloads_big_facility}")

best = report.solutions["fixture"]
print(f"\nfixture optimum opens facilities {best.open_facilities} and offers:")
for line in best.offer_summary:
    print(f"  shipper {line.shipper}: service {line.service} at price "
          f"{line.price} (acceptance {line.rho})")

print("\nperfect information (never opt out, no gates) versus the fixture "
      f"probabilities: {report.perfect_info_objective:.1f} vs "
      f"{report.fixture_objective:.1f} — certainty roughly "
      f"{report.perfect_info_objective / report.fixture_objective:.1f}x the profit")
print("a no-information (uniform) belief drops it to "
      f"{report.uniform_objective:.1f}")
