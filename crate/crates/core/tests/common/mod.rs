#![allow(dead_code)]

use dodagsim_core::cost::{NetworkSnapshot, SnapshotBuilder};
use dodagsim_core::{EdgeMetrics, NodeId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_metrics(rng: &mut ChaCha8Rng) -> EdgeMetrics {
    EdgeMetrics {
        e_r: rng.random_range(0.0..1000.0),
        e_t: rng.random_range(1e-4..1e-3),
        d: rng.random_range(1.0..250.0),
        h: rng.random_range(1.0..8.0),
        etx: rng.random_range(1.0..5.0),
        ls: rng.random_range(0.0..1.0),
    }
}

/// Connected snapshot on `n` nodes with sink 0: a random spanning tree plus
/// each other pair linked with probability `extra`, both directions.
pub fn random_snapshot(n: usize, extra: f64, seed: u64) -> NetworkSnapshot {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = SnapshotBuilder::new(n, NodeId(0));
    let mut linked = vec![vec![false; n]; n];
    for i in 1..n {
        let j = rng.random_range(0..i);
        linked[i][j] = true;
        linked[j][i] = true;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if !linked[i][j] && rng.random::<f64>() < extra {
                linked[i][j] = true;
                linked[j][i] = true;
            }
        }
    }
    for i in 0..n {
        b.set_residual(NodeId(i as u32), rng.random_range(0.0..1000.0));
        for j in 0..n {
            if linked[i][j] {
                b.add_edge(NodeId(i as u32), NodeId(j as u32), random_metrics(&mut rng));
            }
        }
    }
    b.build(seed, 0.0).expect("spanning tree keeps it connected")
}
