//! Fixed-seed random instances shared by the integration tests.

#![allow(dead_code)]

use analysis_lasso::model::{validate, Problem};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const SEED: u64 = 0x5eed_1a55;

pub fn two_point_example() -> Problem {
    Problem::new(
        DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
        DMatrix::identity(2, 2),
        DVector::from_vec(vec![1.0]),
        0.5,
    )
    .unwrap()
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn normal_vector(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub label: String,
    pub problem: Problem,
}

fn with_lambda(
    rng: &mut ChaCha8Rng,
    phi: DMatrix<f64>,
    d: DMatrix<f64>,
    y: DVector<f64>,
) -> Option<Problem> {
    let c_max = (phi.tr_mul(&y)).amax();
    if c_max <= 1e-6 {
        return None;
    }
    let frac = rng.random_range(0.05..0.8);
    let pb = Problem::new(phi, d, y, frac * c_max).ok()?;
    validate(&pb).passed().then_some(pb)
}

/// Generic Gaussian instance.
fn generic(rng: &mut ChaCha8Rng) -> Option<Problem> {
    let n = rng.random_range(2..=6);
    let q = rng.random_range(1..=4.min(n));
    let p = rng.random_range(1..=8);
    let phi = normal_matrix(rng, q, n);
    let d = normal_matrix(rng, n, p);
    let y = normal_vector(rng, q);
    with_lambda(rng, phi, d, y)
}

/// Instance invariant under swapping two coordinates: `Φ` has two equal
/// columns and `D = [I, a, Pa]` with `P` the swap. Solution sets are then
/// often segments or larger faces.
fn symmetric(rng: &mut ChaCha8Rng) -> Option<Problem> {
    let n = rng.random_range(2..=6);
    let q = rng.random_range(1..=4.min(n));
    let (j, k) = (0, rng.random_range(1..n));
    let mut phi = normal_matrix(rng, q, n);
    let col = phi.column(j).clone_owned();
    phi.set_column(k, &col);
    let a = normal_vector(rng, n);
    let mut pa = a.clone();
    pa.swap_rows(j, k);
    let mut d = DMatrix::zeros(n, n + 2);
    d.view_mut((0, 0), (n, n)).fill_with_identity();
    d.set_column(n, &a);
    d.set_column(n + 1, &pa);
    let y = normal_vector(rng, q);
    with_lambda(rng, phi, d, y)
}

/// `Φ` with one or two pairs of equal columns and `D = [I, b]` where `b`
/// takes equal values on each pair. Moving mass inside a pair changes
/// neither term as long as signs are kept, so faces are segments or squares.
fn duplicated(rng: &mut ChaCha8Rng) -> Option<Problem> {
    let n = rng.random_range(3..=6);
    let q = rng.random_range(1..=4.min(n - 1));
    let pairs: Vec<(usize, usize)> = if n >= 5 && rng.random_bool(0.5) {
        vec![(0, 1), (2, 3)]
    } else {
        vec![(0, 1)]
    };
    let mut phi = normal_matrix(rng, q, n);
    let mut b = normal_vector(rng, n);
    for &(j, k) in &pairs {
        let col = phi.column(j).clone_owned();
        phi.set_column(k, &col);
        b[k] = b[j];
    }
    let mut d = DMatrix::zeros(n, n + 1);
    d.view_mut((0, 0), (n, n)).fill_with_identity();
    d.set_column(n, &b);
    let y = normal_vector(rng, q);
    with_lambda(rng, phi, d, y)
}

/// The fifty acceptance instances, cycling through the three families.
pub fn instances() -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut out = Vec::with_capacity(50);
    while out.len() < 50 {
        let (family, made) = match out.len() % 3 {
            0 => ("generic", generic(&mut rng)),
            1 => ("symmetric", symmetric(&mut rng)),
            _ => ("duplicated", duplicated(&mut rng)),
        };
        if let Some(problem) = made {
            let label = format!("{family}#{}", out.len());
            out.push(Instance { label, problem });
        }
    }
    out
}
