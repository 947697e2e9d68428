"""Infraction scoring and the statistical toolkit.

Three evaluators score the same two runs with 0.5-step uncertainty
increments; the per-run scores are aggregated, and groups of run scores
are compared with the Welch test, one-way ANOVA, and Bonferroni-adjusted
pairwise comparisons. Ends with the power-analysis sample sizing.
"""

import numpy as np

from teledrive import stats
from teledrive.scoring import (
    EvaluatorSheet,
    InfractionCounts,
    aggregate_evaluators,
    driving_score,
)

print("== single-run scores ==")
for counts, mode in (
    (InfractionCounts(1.0), "obstacle"),
    (InfractionCounts(1.0, collisions=1, lane_deviations=2, signs_run=1), "town"),
    (InfractionCounts(1.0, lane_deviations=0.5), "obstacle"),
    (InfractionCounts(0.9, signs_run=3), "mcity"),
):
    print(f"  C={counts.completion:g} N_c={counts.collisions:g} "
          f"N_l={counts.lane_deviations:g} N_s={counts.signs_run:g} "
          f"[{mode}] -> {driving_score(counts, mode):.4f}")

print("\n== three independent evaluators, two runs ==")
sheets = [
    EvaluatorSheet("caltech", {
        "run1": InfractionCounts(1.0, lane_deviations=1.0),
        "run2": InfractionCounts(1.0)}),
    EvaluatorSheet("blackrock", {
        "run1": InfractionCounts(1.0, lane_deviations=0.5),
        "run2": InfractionCounts(1.0)}),
    EvaluatorSheet("ford", {
        "run1": InfractionCounts(1.0, lane_deviations=1.0, collisions=0.5),
        "run2": InfractionCounts(1.0)}),
]
print(aggregate_evaluators(sheets, "obstacle").render())

print("\n== group comparisons on simulated run scores ==")
rng = np.random.default_rng(0)
bci = np.clip(rng.normal(0.92, 0.08, 10), 0, 1)
control = np.clip(rng.normal(0.82, 0.12, 20), 0, 1)
w = stats.welch_ttest(bci, control, tail="right")
print(f"  Welch right-tailed: t={w.statistic:.3f}, df={w.df:.1f}, "
      f"p={w.p_value:.4f}")

groups = [stats.SampleGroup(f"effector{i}", rng.normal(150 + 8 * i, 20, 10))
          for i in range(4)]
a = stats.oneway_anova(groups)
print(f"  one-way ANOVA: F={a.statistic:.3f}, df={a.df}, p={a.p_value:.3g}")
print(stats.compare_groups(groups).render())

n, recruit = stats.power_sample_size(effect=0.8, alpha=0.05, power=0.95,
                                     dropout=0.25)
print(f"\n== power analysis: effect 0.8, alpha 0.05, power 0.95, "
      f"25% dropout -> n={n} per group, recruit {recruit} ==")
