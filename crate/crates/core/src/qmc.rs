//! Randomly shifted Kronecker (R_d) low-discrepancy points.
//!
//! The generator `φ_d` is the unique positive root of `x^(d+1) = x + 1`; point
//! `i` is `frac(shift + i · (φ_d⁻¹, φ_d⁻², ...))`.

use rand::Rng;

fn generalized_golden_ratio(dim: usize) -> f64 {
    let p = (dim + 1) as f64;
    let mut x = 2.0f64;
    for _ in 0..64 {
        x = (1.0 + x).powf(1.0 / p);
    }
    x
}

#[derive(Clone, Debug)]
pub struct KroneckerSequence {
    alpha: Vec<f64>,
    shift: Vec<f64>,
    next: u64,
}

impl KroneckerSequence {
    pub fn new(dim: usize) -> Self {
        let phi = generalized_golden_ratio(dim);
        let alpha = (1..=dim).map(|k| phi.powi(-(k as i32)).fract()).collect();
        Self { alpha, shift: vec![0.5; dim], next: 0 }
    }

    /// Cranley-Patterson rotation by a uniform shift.
    pub fn scrambled<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let mut seq = Self::new(dim);
        seq.shift = (0..dim).map(|_| rng.random::<f64>()).collect();
        seq
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// Next point in `[0, 1)^d`.
    pub fn next_unit(&mut self) -> Vec<f64> {
        let i = self.next as f64;
        self.next += 1;
        self.alpha.iter().zip(&self.shift).map(|(a, s)| (s + i * a).fract()).collect()
    }

    /// Next point mapped affinely into `[lower, upper]^d`.
    pub fn next_in_box(&mut self, lower: f64, upper: f64) -> Vec<f64> {
        self.next_unit().into_iter().map(|u| lower + (upper - lower) * u).collect()
    }
}
