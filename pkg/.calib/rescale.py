import numpy as np, time
from dataclasses import replace
from sild import synthetic as syn, training as tr
from sild.graphstore import chronological_split

t0=time.perf_counter()
GEN = dict(s_low=0.1, s_high=0.05, p_out=0.01, p_noise=0.01,
           split_fractions=(0.5, 0.2, 0.3))
for shift in (0.8, 0.0):
    g = syn.gen_node_synthetic(syn.NodeSynthConfig(seed=0, shift=shift, **GEN))
    edges = np.mean([len(s) for s in g.snapshots])
    print(f"shift={shift}: {edges:.0f} edges/snapshot, mean degree {2*edges/500:.1f}")
    split = chronological_split(g, (1, 1, 1))
    base = tr.TrainConfig(hidden_dim=16, epochs=100, sample_count=100,
                          task="node", seed=0, aggregator="sum", lam=1e-2)
    arms = [("erm", dict(no_invariance=True, no_mask=True))]
    if shift == 0.8:
        arms = [("full", {}), ("erm", dict(no_invariance=True, no_mask=True))]
    for name, kw in arms:
        tests, vals, bests = [], [], []
        for s in (0,1,2):
            _, rep = tr.train(g, split, replace(base, seed=s, **kw))
            tests.append(rep.test_metric); vals.append(rep.val_metric); bests.append(rep.best_epoch)
        print(f"  shift={shift} {name}: test={np.mean(tests):.3f}±{np.std(tests):.3f} "
              f"{np.round(tests,3).tolist()} val={np.mean(vals):.3f} best={bests} "
              f"({time.perf_counter()-t0:.0f}s)", flush=True)
