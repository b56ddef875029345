//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use hoti_core::StateGrid;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand::rngs::StdRng;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Kronecker sum assembled entry by entry from the index definition
/// `H[(i…),(j…)] = Σ_s H_s[i_s, j_s] Π_{r≠s} δ(i_r, j_r)`.
pub fn brute_force_kron_sum(factors: &[DMatrix<Complex64>]) -> DMatrix<Complex64> {
    let dims: Vec<usize> = factors.iter().map(|f| f.nrows()).collect();
    let total: usize = dims.iter().product();
    let split = |mut idx: usize| {
        let mut out = vec![0; dims.len()];
        for a in (0..dims.len()).rev() {
            out[a] = idx % dims[a];
            idx /= dims[a];
        }
        out
    };
    DMatrix::from_fn(total, total, |row, col| {
        let (ri, ci) = (split(row), split(col));
        let mut acc = c(0.0);
        for (s, f) in factors.iter().enumerate() {
            let others_equal = (0..dims.len()).filter(|&r| r != s).all(|r| ri[r] == ci[r]);
            if others_equal {
                acc += f[(ri[s], ci[s])];
            }
        }
        acc
    })
}

/// exp(−i·H·z) by Taylor series with scaling and squaring.
pub fn expm_taylor(h: &DMatrix<Complex64>, z: f64) -> DMatrix<Complex64> {
    let n = h.nrows();
    let a = h * Complex64::new(0.0, -z);
    let norm = a.iter().map(|x| x.norm()).sum::<f64>().max(1e-300);
    let squarings = (norm.log2().ceil().max(0.0) as u32) + 4;
    let scaled = &a / c(2f64.powi(squarings as i32));
    let mut term = DMatrix::<Complex64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..40 {
        term = &term * &scaled / c(k as f64);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_state(dims: &[usize], rng: &mut StdRng) -> StateGrid {
    let len: usize = dims.iter().product();
    let amps = (0..len)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let mut g = StateGrid::from_amplitudes(dims, amps).unwrap();
    g.normalize();
    g
}

pub fn dense_apply(m: &DMatrix<Complex64>, v: &StateGrid) -> Vec<Complex64> {
    let col = nalgebra::DVector::from_column_slice(v.amplitudes());
    (m * col).iter().copied().collect()
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Peak resident set size of this process in bytes, when available.
pub fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}
