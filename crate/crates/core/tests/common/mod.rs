#![allow(dead_code)]

use bdirs_core::{dbm_to_watts, make_channels, noise_power, sample_geometry, LinkObjective64, Scenario, C64};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_c(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Array1<C64> {
    (0..n).map(|_| rand_c(rng)).collect()
}

pub fn rand_hermitian(rng: &mut ChaCha8Rng, n: usize) -> Array2<C64> {
    let b = Array2::from_shape_fn((n, n), |_| rand_c(rng));
    Array2::from_shape_fn((n, n), |(i, j)| (b[[i, j]] + b[[j, i]].conj()) * 0.5)
}

pub fn to_na(a: &Array2<C64>) -> nalgebra::DMatrix<C64> {
    nalgebra::DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub fn scenario(n: usize, m: usize) -> Scenario {
    Scenario {
        n_bs: n,
        m_irs: m,
        ..Scenario::default()
    }
}

pub fn link(seed: u64, n: usize, m: usize) -> LinkObjective64 {
    let sc = scenario(n, m);
    let ch = make_channels(&sample_geometry::<f64>(seed, &sc)).unwrap();
    LinkObjective64::new(ch, noise_power(sc.noise_dbm_per_hz, sc.bandwidth_hz), sc.bandwidth_hz).unwrap()
}

pub fn watts(dbm: f64) -> f64 {
    dbm_to_watts(dbm)
}

/// Every vector of length `n` over `alphabet`, in lexicographic order.
pub fn all_words(alphabet: &[C64], n: usize) -> Vec<Vec<C64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|w| {
                alphabet.iter().map(move |&a| {
                    let mut w = w.clone();
                    w.push(a);
                    w
                })
            })
            .collect();
    }
    out
}
