#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use teamrep_core::network::LabeledNetwork;

/// A random network with integer weights in 0..=3 and binary skills, plus a
/// team of `t` random members and a leaver among them.
pub struct Instance {
    pub net: LabeledNetwork,
    pub team: Vec<usize>,
    pub leaver: usize,
}

pub fn instance(seed: u64, n_max: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(8..=n_max);
    let t = rng.gen_range(3..=6);
    let l = rng.gen_range(1..=4);
    let density = rng.gen_range(0.1..0.5);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(density) {
                edges.push((u, v, rng.gen_range(1..=3) as f64));
            }
        }
    }
    let skills: Vec<f64> = (0..n * l).map(|_| rng.gen_range(0..=1) as f64).collect();
    let net = LabeledNetwork::from_parts(
        (0..n).map(|i| format!("v{i}")).collect(),
        edges,
        skills,
        (0..l).map(|k| format!("s{k}")).collect(),
    )
    .unwrap();
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(&mut rng);
    let team = nodes[..t].to_vec();
    let leaver = team[rng.gen_range(0..t)];
    Instance { net, team, leaver }
}

pub fn rel(a: f64, b: f64) -> f64 {
    let den = a.abs().max(b.abs());
    if den == 0.0 {
        0.0
    } else {
        (a - b).abs() / den
    }
}
