"""Single-variable influence and covariance decay with distance.

The influence of one underlying field variable on a crossing is
estimated by a forced-resampling coupling: the same replicas are run
twice, once as-is and once with that variable pinned to its minimal
value, and the flip frequency is the pivotality estimate. Influence of
the center variable shrinks with scale. Separately, the covariance gap
between events in two distant windows is compared against the declared
locality bound for each model.
"""

from percolab import (
    bernoulli_model,
    center_keys,
    ising_model,
    mixing_gap_sweep,
    pivotal_epsilon,
)


def main():
    spec = bernoulli_model()
    for n in (2, 4, 8):
        rep = pivotal_epsilon(spec, [0.0], n, center_keys(spec, n),
                              trials=4000, seed=17)
        est = rep["records"][0]["estimate"]
        print(f"n = {n}: center influence on H(3n, n) = {est.point:.4f} "
              f"[{est.ci_low:.4f}, {est.ci_high:.4f}]")

    print("\ncovariance gap between 3x3 windows, center-spin events:")
    for spec in (bernoulli_model(), ising_model(0.3)):
        rep = mixing_gap_sweep(spec, 0.0, [2, 4, 8], trials=4000, seed=23)
        gaps = ", ".join(f"{g:+.4f}" for g in rep["gaps"])
        print(f"  {spec.kind}: gaps [{gaps}], declared bound holds: "
              f"{rep['all_bounds_hold']}")
    print("(independent sites have zero gap in law; the dynamic model's "
          "gap decays with the separation)")


if __name__ == "__main__":
    main()
