//! Golden-angle spiral substrates and locally connected reservoirs.

use std::io::Write;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::reservoir::{uniform, ReservoirNetwork, Transfer};
use crate::seed::rng_from_seed;

/// The golden angle `pi (3 - sqrt 5)`.
pub fn golden_angle() -> f64 {
    std::f64::consts::PI * (3.0 - 5f64.sqrt())
}

/// Planar neuron layout. Neuron 0 sits at the origin and is the input neuron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Substrate {
    pub coords: Vec<(f64, f64)>,
    pub input_index: usize,
    pub omega: f64,
}

/// `k`-th neuron at `sqrt(k/n) (cos(k phi + omega), sin(k phi + omega))`.
pub fn golden_spiral(n: usize, omega: f64) -> Substrate {
    assert!(n >= 2, "a substrate needs at least two neurons");
    let phi = golden_angle();
    let coords = (0..n)
        .map(|k| {
            let r = (k as f64 / n as f64).sqrt();
            let a = k as f64 * phi + omega;
            (r * a.cos(), r * a.sin())
        })
        .collect();
    Substrate { coords, input_index: 0, omega }
}

/// Spiral with a rotation drawn uniformly from `[0, 2 pi)`.
pub fn random_spiral(n: usize, seed: u64) -> Substrate {
    use rand::Rng;
    let omega = rng_from_seed(seed).random_range(0.0..std::f64::consts::TAU);
    golden_spiral(n, omega)
}

impl Substrate {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (xa, ya) = self.coords[a];
        let (xb, yb) = self.coords[b];
        (xa - xb).hypot(ya - yb)
    }

    /// Closest other neuron to `i`; ties go to the lowest index.
    pub fn nearest_neighbor(&self, i: usize) -> usize {
        (0..self.len())
            .filter(|&j| j != i)
            .fold((usize::MAX, f64::INFINITY), |best, j| {
                let d = self.distance(i, j);
                if d < best.1 {
                    (j, d)
                } else {
                    best
                }
            })
            .0
    }

    /// `index,x,y` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "x", "y"])?;
        for (i, (x, y)) in self.coords.iter().enumerate() {
            w.write_record([i.to_string(), x.to_string(), y.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `from,to,weight,length` rows for every nonzero connection of `net`.
    pub fn write_edges_csv<W: Write>(&self, net: &ReservoirNetwork, out: W) -> csv::Result<()> {
        assert_eq!(net.n_neurons(), self.len());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["from", "to", "weight", "length"])?;
        for (from, to, weight) in net.connections() {
            w.write_record([from.to_string(), to.to_string(), weight.to_string(), self.distance(from, to).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalEsnConfig {
    pub max_length: f64,
    /// Variance of the recurrent weights.
    pub sigma: f64,
    pub input_weight_range: (f64, f64),
    pub allow_self_connections: bool,
}

impl LocalEsnConfig {
    pub fn new(max_length: f64, sigma: f64) -> Self {
        Self { max_length, sigma, input_weight_range: (-0.1, 0.1), allow_self_connections: true }
    }
}

/// Random reservoir on `sub` whose recurrent connections are no longer than
/// `max_length`, with one connection out of the input neuron to its nearest
/// neighbor.
///
/// Recurrent weights are `Normal(0, sigma)` (variance `sigma`), drawn
/// independently per direction. Self-connections count as length zero and
/// are created only for a positive `max_length`.
pub fn generate_local_esn(sub: &Substrate, cfg: &LocalEsnConfig, seed: u64) -> ReservoirNetwork {
    assert!(cfg.sigma > 0.0);
    let n = sub.len();
    let input = sub.input_index;
    let mut rng = rng_from_seed(seed);
    let normal = Normal::new(0.0, cfg.sigma.sqrt()).expect("finite variance");
    let mut weights = vec![0.0; n * n];
    for to in 0..n {
        if to == input {
            continue;
        }
        for from in 0..n {
            if from == input {
                continue;
            }
            let candidate = if from == to {
                cfg.allow_self_connections && cfg.max_length > 0.0
            } else {
                sub.distance(from, to) <= cfg.max_length
            };
            if candidate {
                weights[to * n + from] = normal.sample(&mut rng);
            }
        }
    }
    let target = sub.nearest_neighbor(input);
    weights[target * n + input] = uniform(&mut rng, cfg.input_weight_range.0, cfg.input_weight_range.1);
    ReservoirNetwork::new(weights, vec![0.0; n], vec![Transfer::Tanh; n], vec![0.0; n], Some(input))
        .expect("generated parameters are finite")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectionStats {
    pub count: usize,
    pub max_length: f64,
    pub crossings: usize,
}

fn orientation(p: (f64, f64), q: (f64, f64), r: (f64, f64)) -> f64 {
    (q.0 - p.0) * (r.1 - p.1) - (q.1 - p.1) * (r.0 - p.0)
}

fn on_segment(p: (f64, f64), q: (f64, f64), r: (f64, f64)) -> bool {
    r.0 >= p.0.min(q.0) && r.0 <= p.0.max(q.0) && r.1 >= p.1.min(q.1) && r.1 <= p.1.max(q.1)
}

/// Closed-segment intersection test.
pub fn segments_intersect(a: ((f64, f64), (f64, f64)), b: ((f64, f64), (f64, f64))) -> bool {
    let (p1, p2) = a;
    let (p3, p4) = b;
    let d1 = orientation(p3, p4, p1);
    let d2 = orientation(p3, p4, p2);
    let d3 = orientation(p1, p2, p3);
    let d4 = orientation(p1, p2, p4);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(p3, p4, p1))
        || (d2 == 0.0 && on_segment(p3, p4, p2))
        || (d3 == 0.0 && on_segment(p1, p2, p3))
        || (d4 == 0.0 && on_segment(p1, p2, p4))
}

/// Number of directed connections, their longest span, and the number of
/// crossing segment pairs (pairs sharing an endpoint and self-loops excluded).
pub fn connection_stats(net: &ReservoirNetwork, sub: &Substrate) -> ConnectionStats {
    assert_eq!(net.n_neurons(), sub.len(), "network not built on this substrate");
    let edges: Vec<(usize, usize)> = net.connections().map(|(from, to, _)| (from, to)).collect();
    let max_length = edges.iter().map(|&(a, b)| sub.distance(a, b)).fold(0.0, f64::max);
    let segments: Vec<(usize, usize)> = edges.iter().copied().filter(|(a, b)| a != b).collect();
    let mut crossings = 0;
    for (i, &(a, b)) in segments.iter().enumerate() {
        for &(c, d) in &segments[i + 1..] {
            if a == c || a == d || b == c || b == d {
                continue;
            }
            if segments_intersect((sub.coords[a], sub.coords[b]), (sub.coords[c], sub.coords[d])) {
                crossings += 1;
            }
        }
    }
    ConnectionStats { count: edges.len(), max_length, crossings }
}
