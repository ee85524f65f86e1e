"""Which seminorm suits a field with constant frame components?

u = 10 tau + 5 n on the upper semicircle has zero split seminorm, because
its tangential and normal amplitudes are constant, but a clearly positive
ambient seminorm, because the frame turns. Regularizing with the split
seminorm therefore penalizes nothing about the truth.
"""
from tikcurve.experiments import default_config, run_seminorm_compare

report = run_seminorm_compare(default_config("seminorm_compare"), keep_fields=False)
s = report.summary
print(f"split seminorm of the truth:   {s['truth_split_seminorm']:.2e}")
print(f"ambient seminorm of the truth: {s['truth_ambient_seminorm']:.3f}\n")

print("    alpha     split   ambient")
by_alpha = {}
for row in report.rows:
    by_alpha.setdefault(row["alpha"], {})[row["regularizer"]] = row["relative_l2_error"]
for alpha, errs in sorted(by_alpha.items()):
    print(f"{alpha:9.1e} {errs['split_seminorm']:9.4f} {errs['ambient_seminorm']:9.4f}")

print(f"\nbest split   {s['best_split_error']:.4f} at alpha {s['best_split_alpha']:.1e}")
print(f"best ambient {s['best_ambient_error']:.4f} at alpha {s['best_ambient_alpha']:.1e}")
# once alpha is large the split solution sits in the kernel, so the error
# flattens out instead of growing
