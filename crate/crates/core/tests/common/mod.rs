#![allow(dead_code)]

use infoloss::{CondDist, FiniteDist, FullModel};
use proptest::collection::vec;
use proptest::prelude::*;

/// Weight with a 20% chance of being exactly zero.
fn weight() -> impl Strategy<Value = f64> {
    prop_oneof![1 => Just(0.0), 4 => 0.0..1.0f64]
}

fn normalize(w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    if s <= 0.0 {
        let n = w.len();
        return vec![1.0 / n as f64; n];
    }
    w.iter().map(|v| v / s).collect()
}

pub fn probs(n: usize) -> impl Strategy<Value = Vec<f64>> {
    vec(weight(), n).prop_map(normalize)
}

pub fn full_support(n: usize) -> impl Strategy<Value = Vec<f64>> {
    vec(1e-3..1.0f64, n).prop_map(normalize)
}

pub fn cond(rows: usize, cols: usize) -> impl Strategy<Value = CondDist> {
    vec(probs(cols), rows).prop_map(|r| CondDist::new(r).unwrap())
}

/// (model, estimate of p(y|x)) with alphabets up to `max`.
pub fn model_pair(max: usize) -> impl Strategy<Value = (FullModel, CondDist)> {
    (1..=max, 2..=max, 1..=max).prop_flat_map(|(nx, ny, nz)| {
        (full_support(nx), cond(nx, ny), cond(nx, nz), cond(nx, ny)).prop_map(|(px, p, ch, q)| {
            (FullModel::new(FiniteDist::new(px).unwrap(), p, ch).unwrap(), q)
        })
    })
}

/// Compensated (double-double) accumulator.
#[derive(Default, Clone, Copy)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    pub fn add(&mut self, v: f64) {
        let s = self.hi + v;
        let bp = s - self.hi;
        let err = (self.hi - (s - bp)) + (v - bp);
        self.hi = s;
        self.lo += err;
    }

    pub fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// Entropy in bits of an arbitrary non-negative table, by compensated sum.
pub fn entropy_dd(table: &[f64]) -> f64 {
    let mut acc = Dd::default();
    for &p in table {
        if p > 0.0 {
            acc.add(-p * p.log2());
        }
    }
    acc.value()
}

/// MI of a rows×cols table as Σ p (log p − log a − log b), compensated.
pub fn mi_dd(table: &[f64], rows: usize, cols: usize) -> f64 {
    let mut a = vec![0.0; rows];
    let mut b = vec![0.0; cols];
    for r in 0..rows {
        for c in 0..cols {
            a[r] += table[r * cols + c];
            b[c] += table[r * cols + c];
        }
    }
    let mut acc = Dd::default();
    for r in 0..rows {
        for c in 0..cols {
            let p = table[r * cols + c];
            if p > 0.0 {
                acc.add(p * p.log2());
                acc.add(-p * a[r].log2());
                acc.add(-p * b[c].log2());
            }
        }
    }
    acc.value()
}

/// Brute-force joint p(x)p(y|x)p(z|x) indexed [x][y][z].
pub fn cube(m: &FullModel) -> Vec<f64> {
    let (nx, ny, nz) = (m.x_card(), m.y_card(), m.z_card());
    let mut t = vec![0.0; nx * ny * nz];
    for x in 0..nx {
        for y in 0..ny {
            for z in 0..nz {
                t[(x * ny + y) * nz + z] = m.p_x[x] * m.p_y_given_x.get(x, y) * m.p_z_given_x.get(x, z);
            }
        }
    }
    t
}

/// Pairwise marginal of the cube: `keep` picks two of (x, y, z).
pub fn pair_table(m: &FullModel, keep: (usize, usize)) -> (Vec<f64>, usize, usize) {
    let dims = [m.x_card(), m.y_card(), m.z_card()];
    let (r, c) = (dims[keep.0], dims[keep.1]);
    let mut t = vec![0.0; r * c];
    let data = cube(m);
    for x in 0..dims[0] {
        for y in 0..dims[1] {
            for z in 0..dims[2] {
                let idx = [x, y, z];
                t[idx[keep.0] * c + idx[keep.1]] += data[(x * dims[1] + y) * dims[2] + z];
            }
        }
    }
    (t, r, c)
}

/// Oracle I(Y;Z) in bits.
pub fn i_yz(m: &FullModel) -> f64 {
    let (t, r, c) = pair_table(m, (1, 2));
    mi_dd(&t, r, c)
}

pub fn i_xz(m: &FullModel) -> f64 {
    let (t, r, c) = pair_table(m, (0, 2));
    mi_dd(&t, r, c)
}

/// Oracle δ̄.
pub fn delta_bar(m: &FullModel, q: &CondDist) -> f64 {
    (0..m.x_card())
        .map(|x| {
            m.p_x[x] * 0.5 * (0..m.y_card()).map(|y| (m.p_y_given_x.get(x, y) - q.get(x, y)).abs()).sum::<f64>()
        })
        .sum()
}

pub fn h2(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        -t * t.log2() - (1.0 - t) * (1.0 - t).log2()
    }
}
