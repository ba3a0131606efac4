//! For candidate bit-pattern tables, computes the stationary TV floor of
//! the best *factorized* reconstruction chain (per-bit posterior
//! marginals). A one-layer binary model factorizes its reconstruction,
//! so this floor bounds how close its chain can get to any given table;
//! tables differ wildly (some sit at 0.004, some at 0.14).

use gsn_core::chainlab::{total_variation, ChainOperator};
use gsn_core::datasets::bit_pattern_table_softmax;
use gsn_core::ndnum::Matrix;

fn floor_tv(table: &[f64], dim: usize, p: f64) -> f64 {
    let n = 1 << dim;
    let keep = 1.0 - p / 2.0;
    let flip = p / 2.0;
    let mut c = Matrix::zeros(n, n);
    for x in 0..n {
        for xt in 0..n {
            let h = (x ^ xt).count_ones() as i32;
            c.set(x, xt, flip.powi(h) * keep.powi(dim as i32 - h));
        }
    }
    // posterior marginals per corrupted state
    let mut r = Matrix::zeros(n, n);
    for xt in 0..n {
        let z: f64 = (0..n).map(|x| table[x] * c.get(x, xt)).sum();
        let mut q = vec![0.0; dim];
        for (x, t) in table.iter().enumerate() {
            let w = t * c.get(x, xt) / z;
            for (j, qj) in q.iter_mut().enumerate() {
                if (x >> j) & 1 == 1 {
                    *qj += w;
                }
            }
        }
        for x in 0..n {
            let mut prod = 1.0;
            for (j, qj) in q.iter().enumerate() {
                prod *= if (x >> j) & 1 == 1 { *qj } else { 1.0 - qj };
            }
            r.set(xt, x, prod);
        }
    }
    let k = ChainOperator::new(c.matmul(&r).unwrap(), "floor").unwrap();
    let pi = k.stationary_exact().unwrap();
    total_variation(&pi, table).unwrap()
}

fn main() {
    for dim in [3usize, 4] {
        let mut rows: Vec<(f64, u64)> = (1..=40u64)
            .map(|seed| {
                let table = bit_pattern_table_softmax(dim, 0.5, seed).unwrap();
                (floor_tv(&table, dim, 0.1), seed)
            })
            .collect();
        rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        println!("dim {dim}: best (floor, seed) = {:?}", &rows[..8]);
        println!("dim {dim}: worst             = {:?}", &rows[rows.len() - 3..]);
    }
}
