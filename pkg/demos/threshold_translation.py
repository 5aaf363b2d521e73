"""How a commanded filtering rate becomes a packet-score threshold.

Monitors score packets 0-99 from overlapping legitimate/malware score
distributions.  The dynamic filter keeps a rolling window of observed score
histograms and picks the smallest threshold whose tail count fits the
commanded budget, resolving ties toward filtering less.

Run:  python demos/threshold_translation.py
"""

import numpy as np

from malfilter import FilterState, calibrated_score_model, translate_rate_to_threshold

model = calibrated_score_model(detection_rate=0.5)
print(f"Monitor cutoff: score >= {model.monitor_threshold}")
print(f"detection rate {model.detection_rate:.3f}, "
      f"false-positive rate {model.false_positive_rate:.4f}\n")

rng = np.random.default_rng(0)
filt = FilterState()
hist = (1000 * model.legit_pmf + 50 * model.malware_pmf)
filt.observe(rng.poisson(hist))

print("Observed one interval of mixed traffic (about 1000 legitimate,")
print("50 malware packets).  Commanded budget -> chosen threshold:\n")
print(f"{'budget (pkts)':>13}  {'threshold':>9}  {'tail filtered':>13}")
for budget in (0, 5, 20, 80, 300, 2000):
    T = translate_rate_to_threshold(budget, filt)
    tail = int(filt.combined()[T:].sum())
    print(f"{budget:13d}  {T:9d}  {tail:13d}")

print("\nSmall budgets shave only the highest scores; a budget covering the")
print("whole window drops the threshold to zero (filter everything).")
