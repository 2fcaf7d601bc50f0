"""Run the adaptation loop on a growing synthetic dataset and print the lineage.

Small everything so the demo finishes in about a minute on a laptop:
2-unit search space at 128x128, class-growth plan 2 -> 4 -> 8, 800
controller iterations per adapted step.

    python scripts/run_adaptation_demo.py --out runs/demo --seed 0
"""

import argparse
from pathlib import Path

import archadapt as aa


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("runs/demo"))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    plan = aa.GrowthPlan(scenario=aa.CLASS_GROWTH, steps=(2, 4, 8),
                         seed=args.seed)
    space = aa.SpaceConfig(
        n_units=2, depth_choices=(2, 3), kernel_choices=(3, 5),
        expansion_choices=(3,), input_resolution=128,
        stem_channels=16, unit_out_channels=(16, 24), unit_strides=(2, 2))
    surrogate = aa.SurrogateConfig(bump_width=0.3, opt_intercept=0.55,
                                   opt_slope=0.4, depth_penalty=0.0)
    trainer = aa.TrainerConfig(
        learning_rate=0.005, iterations=800, lam=0.05,
        hidden_size=32, encoder_hidden=32, arch_embed_dim=16,
        shift_embed_dim=8, token_embed_dim=16, entropy_weight=2e-4,
        seed=args.seed)
    cfg = aa.RunConfig(plan=plan, space=space, surrogate=surrogate,
                       gate=aa.GateConfig(epsilon=0.0), trainer=trainer,
                       master_seed=args.seed)

    records = aa.run_adaptation(cfg, out_dir=args.out)
    print(f"wrote {args.out}/records.json")
    print(f"{'t':>3} {'shift':>9} {'drop':>8} {'adapted':>7} "
          f"{'v_new':>7} {'madds':>8}  new_arch")
    for r in records:
        print(f"{r.t:>3} {r.shift:>9.3f} {r.drop:>8.4f} "
              f"{str(r.adapted):>7} {r.v_new:>7.4f} {r.madds_new:>8.3f}  "
              f"{r.new_arch}")


if __name__ == "__main__":
    main()
