"""GO/NO-GO reaction-time tasks with the scripted operator.

A simple run (50 trials, 10 catch trials, 60 ms target) and a braking run
(40 dual-phase trials judged by the collision law), labeled and summarized
as confusion-matrix metrics with valid reaction times in [50, 1000] ms.
"""

from teledrive.reaction import (
    ScriptedOperator,
    gen_braking_run,
    gen_simple_run,
    label_braking_trial,
    label_trial,
    run_metrics,
)


def show(metrics, title):
    def fmt(v):
        return "n/a" if v is None else f"{v:.3f}"

    print(f"  {title}: accuracy={fmt(metrics.accuracy)} "
          f"sensitivity={fmt(metrics.sensitivity)} "
          f"specificity={fmt(metrics.specificity)} "
          f"valid RT mean={fmt(metrics.mean_rt)} ms "
          f"(n={len(metrics.valid_rts)})")


print("== simple reaction task ==")
operator = ScriptedOperator(latency_mean=290.0, latency_sd=55.0,
                            fp_rate=0.15, fn_rate=0.02, seed=4)
specs = gen_simple_run(seed=4)
clicks = operator.clicks_for_simple_run(specs)
outcomes = [label_trial(s, c) for s, c in zip(specs, clicks)]
go = sum(1 for s in specs if s.kind.value == "GO")
print(f"  {len(specs)} trials ({go} GO, {len(specs) - go} NO-GO catch)")
show(run_metrics(outcomes), "metrics")

print("\n== braking reaction task ==")
specs_b = gen_braking_run(seed=4)
clicks_b = ScriptedOperator(latency_mean=320.0, latency_sd=70.0,
                            fp_rate=0.05, fn_rate=0.05, seed=5) \
    .clicks_for_braking_run(specs_b)
outcomes_b = []
collisions = 0
for spec, c in zip(specs_b, clicks_b):
    nogo, go_phase, collided = label_braking_trial(spec, c)
    outcomes_b.extend([nogo, go_phase])
    collisions += collided
print(f"  {len(specs_b)} trials, each one NO-GO phase + one GO phase "
      f"(obstacle spawn); {collisions} collisions")
show(run_metrics(outcomes_b), "metrics")
print("  a GO phase only counts as a success when no collision occurred")
