"""Per-branch error budget of one correction round.

Prints the branch-resolved loss table (intrinsic / detection / recovery /
thermal and their composition), the branch-weighted column, and the round
fidelity the model predicts next to the density simulation's value.
"""

import argparse
import dataclasses

from binomial_qec import model, protocol
from binomial_qec.params import Config, load_config


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=None, help="INI config path")
    args = ap.parse_args()

    config = load_config(args.config) if args.config else Config.default()
    res = model.error_budget(config.device, config.noise, config.fidelity,
                             config.protocol, config.measurement)

    labels = ["".join(str(o) for o in rec) for rec in res.branches]
    print(f"{'source':<12}" + "".join(f"{lb:>9}" for lb in labels)
          + f"{'weighted':>10}")
    print(f"{'(weight)':<12}"
          + "".join(f"{w:>9.3f}" for w in res.weights) + f"{1.0:>10.3f}")
    for name, row in res.rows.items():
        print(f"{name:<12}"
              + "".join(f"{100 * v:>8.2f}%" for v in row)
              + f"{100 * res.weighted[name]:>9.2f}%")

    f_model = 1.0 - res.weighted["total"]
    run = protocol.run_qec(dataclasses.replace(
        config, protocol=dataclasses.replace(config.protocol, n_rounds=2,
                                             mode="density")))
    f_sim = (run.fchi[1] - 0.25) / (run.fchi[0] - 0.25)
    print(f"\nround fidelity  model {f_model:.4f}  simulated {f_sim:.4f}")
    print(f"implied lifetime  wall {res.tau_wall * 1e6:.1f} us"
          f"  waits {res.tau_waits * 1e6:.1f} us")


if __name__ == "__main__":
    main()
