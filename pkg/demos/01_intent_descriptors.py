"""From per-task intent probabilities to a task-combination distribution.

Three independent classifiers report how likely the operator wants to use,
transfer, or hand over a cup. The probabilities need not sum to one; the
powerset descriptor turns them into a proper distribution over all eight
task combinations, which is what the controllers try to match.
"""

from telegrasp import TaskSet, powerset_target

tasks = TaskSet(["use", "transfer", "handover"])
intent = [0.8, 0.3, 0.78]

print(f"tasks:  {list(tasks.names)}")
print(f"intent: {intent}  (independent per-task probabilities)\n")

q = powerset_target(intent, tasks)
print(f"{'combination':<24}{'probability':>12}")
for mask in tasks.combinations():
    print(f"{tasks.label(mask):<24}{q[mask]:>12.4f}")
print(f"{'total':<24}{q.sum():>12.4f}")

print("\nNote how the ambiguous use-vs-handover intent puts real mass on")
print("{use, handover}: a grasp satisfying both tasks is a better answer")
print("than committing to either one.")
