//! Exact Dirichlet GFF sampling in the sine eigenbasis of the box Laplacian.
//!
//! With zero boundary values the operator `−Δ` (diagonal `2d`) has
//! eigenvectors `∏ᵢ √(2/(nᵢ+1)) sin(π kᵢ (xᵢ+1)/(nᵢ+1))` and eigenvalues
//! `Σᵢ 2(1 − cos(π kᵢ/(nᵢ+1)))`. Scaling i.i.d. normals by `λ^{-1/2}` and
//! mapping back through the (orthonormal, self-inverse) sine transform gives
//! a centered Gaussian field whose covariance is the Dirichlet Green function.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{Provenance, ScalarField};
use crate::error::{Error, Result};
use crate::lattice::LatticeBox;
use crate::rng::{fill_normals, RngStream};
use crate::solver::{pcg, LatticeOperator, DEFAULT_TOLERANCE};

/// Largest box the spectral sampler accepts.
pub const MAX_SPECTRAL_VERTICES: usize = 1 << 28;

/// Sides at or above this use the FFT route; below it the direct O(n²) sum.
const FFT_MIN_SIDE: usize = 64;

enum Line {
    Direct { n: usize, table: Vec<f64> },
    Fft { n: usize, fft: Arc<dyn Fft<f64>>, buf: Vec<Complex<f64>>, scratch: Vec<Complex<f64>> },
}

impl Line {
    fn new(n: usize, force_direct: bool) -> Self {
        let scale = (2.0 / (n as f64 + 1.0)).sqrt();
        if n < FFT_MIN_SIDE || force_direct {
            let mut table = vec![0.0; n * n];
            for j in 0..n {
                for k in 0..n {
                    let arg = std::f64::consts::PI * ((j + 1) * (k + 1)) as f64 / (n + 1) as f64;
                    table[j * n + k] = scale * arg.sin();
                }
            }
            Line::Direct { n, table }
        } else {
            let m = 2 * (n + 1);
            let fft = FftPlanner::new().plan_fft_forward(m);
            let scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
            Line::Fft { n, fft, buf: vec![Complex::default(); m], scratch }
        }
    }

    fn transform(&mut self, x: &mut [f64], tmp: &mut Vec<f64>) {
        match self {
            Line::Direct { n, table } => {
                tmp.clear();
                tmp.extend_from_slice(x);
                for (k, out) in x.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for j in 0..*n {
                        s += tmp[j] * table[j * *n + k];
                    }
                    *out = s;
                }
            }
            Line::Fft { n, fft, buf, scratch } => {
                let n = *n;
                let m = 2 * (n + 1);
                // odd extension: a[j+1] = x[j], a[m-j-1] = -x[j]
                buf.iter_mut().for_each(|c| *c = Complex::default());
                for j in 0..n {
                    buf[j + 1].re = x[j];
                    buf[m - j - 1].re = -x[j];
                }
                fft.process_with_scratch(buf, scratch);
                let scale = (2.0 / (n as f64 + 1.0)).sqrt();
                for k in 0..n {
                    x[k] = -0.5 * buf[k + 1].im * scale;
                }
            }
        }
    }
}

/// Applies the orthonormal DST-I along every axis, in place. The map is
/// its own inverse.
pub fn sine_transform(lattice: &LatticeBox, values: &mut [f64]) {
    sine_transform_impl(lattice, values, false)
}

fn sine_transform_impl(lattice: &LatticeBox, values: &mut [f64], force_direct: bool) {
    assert_eq!(values.len(), lattice.num_vertices());
    let mut line = Vec::new();
    let mut tmp = Vec::new();
    for axis in 0..lattice.dim() {
        let n = lattice.sides()[axis];
        let stride = lattice.strides()[axis];
        let block = stride * n;
        let mut plan = Line::new(n, force_direct);
        for outer in 0..lattice.num_vertices() / block {
            for inner in 0..stride {
                let base = outer * block + inner;
                line.clear();
                line.extend((0..n).map(|j| values[base + j * stride]));
                plan.transform(&mut line, &mut tmp);
                for (j, v) in line.iter().enumerate() {
                    values[base + j * stride] = *v;
                }
            }
        }
    }
}

/// Eigenvalue of the Dirichlet `−Δ` for the mode with 0-based local
/// multi-index equal to the coordinates of dense index `v`.
pub fn dirichlet_laplacian_eigenvalue(lattice: &LatticeBox, v: usize) -> f64 {
    (0..lattice.dim())
        .map(|a| {
            let k = lattice.local_coord(v, a) + 1;
            let n = lattice.sides()[a];
            2.0 * (1.0 - (std::f64::consts::PI * k as f64 / (n + 1) as f64).cos())
        })
        .sum()
}

pub fn sample_gff_dirichlet(lattice: &LatticeBox, stream: RngStream) -> Result<ScalarField> {
    let n = lattice.num_vertices();
    if n > MAX_SPECTRAL_VERTICES {
        return Err(Error::Budget(format!(
            "{n} vertices exceed the spectral workspace limit {MAX_SPECTRAL_VERTICES}"
        )));
    }
    let mut values = vec![0.0; n];
    fill_normals(&mut stream.generator(), &mut values);
    // the mode grid has the same shape as the box, so a dense index doubles as a mode index
    for (v, x) in values.iter_mut().enumerate() {
        *x /= dirichlet_laplacian_eigenvalue(lattice, v).sqrt();
    }
    sine_transform(lattice, &mut values);
    Ok(ScalarField {
        lattice: lattice.clone(),
        values,
        provenance: Provenance {
            sampler: "gff-dirichlet".into(),
            stream: Some(stream),
            parameters: serde_json::json!({ "method": "sine-eigenbasis" }),
        },
    })
}

/// Column `g(·, y)` of the Dirichlet Green function of the unit-weight
/// Laplacian killed outside the box.
pub fn dirichlet_green_column(lattice: &LatticeBox, y: usize) -> Result<Vec<f64>> {
    let op = LatticeOperator::laplacian(lattice);
    let mut rhs = vec![0.0; lattice.num_vertices()];
    rhs[y] = 1.0;
    let max_iter = 50 * lattice.num_vertices().max(100);
    Ok(pcg(&op, &rhs, DEFAULT_TOLERANCE, max_iter)?.x)
}

pub fn dirichlet_green(lattice: &LatticeBox, x: &[i64], y: &[i64]) -> Result<f64> {
    let xi = lattice.index_of(x).ok_or_else(|| Error::OutsideBox(x.to_vec()))?;
    let yi = lattice.index_of(y).ok_or_else(|| Error::OutsideBox(y.to_vec()))?;
    Ok(dirichlet_green_column(lattice, yi)?[xi])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn single_site_variance_and_green() {
        let b = LatticeBox::cube(3, 1).unwrap();
        assert!((dirichlet_laplacian_eigenvalue(&b, 0) - 6.0).abs() < 1e-14);
        let g = dirichlet_green(&b, &[0, 0, 0], &[0, 0, 0]).unwrap();
        assert!((g - 1.0 / 6.0).abs() < 1e-12);
        let b2 = LatticeBox::cube(2, 1).unwrap();
        assert!((dirichlet_green(&b2, &[0, 0], &[0, 0]).unwrap() - 0.25).abs() < 1e-12);
        // the sampled single-site value is exactly xi / sqrt(6)
        let f = sample_gff_dirichlet(&b, RngStream::new(3, 0)).unwrap();
        let mut xi = [0.0];
        fill_normals(&mut RngStream::new(3, 0).generator(), &mut xi);
        assert!((f.values[0] - xi[0] / 6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn two_site_path_green() {
        let b = LatticeBox::cube(1, 2).unwrap();
        assert!((dirichlet_green(&b, &[0], &[0]).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((dirichlet_green(&b, &[0], &[1]).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(dirichlet_green(&b, &[0], &[2]).is_err());
    }

    #[test]
    fn green_is_symmetric() {
        let b = LatticeBox::new(&[5, 4, 3], &[0, 0, 0]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let x = rng.gen_range(0..b.num_vertices());
            let y = rng.gen_range(0..b.num_vertices());
            let gxy = dirichlet_green_column(&b, y).unwrap()[x];
            let gyx = dirichlet_green_column(&b, x).unwrap()[y];
            assert!((gxy - gyx).abs() <= 1e-9 * gxy.abs().max(1e-12));
        }
    }

    #[test]
    fn fft_and_direct_transforms_agree() {
        for sides in [vec![70usize], vec![65, 3], vec![64, 2, 5]] {
            let b = LatticeBox::new(&sides, &vec![0; sides.len()]).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
            let x: Vec<f64> = (0..b.num_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut a = x.clone();
            let mut c = x.clone();
            sine_transform(&b, &mut a);
            sine_transform_impl(&b, &mut c, true);
            for (p, q) in a.iter().zip(&c) {
                assert!((p - q).abs() < 1e-11);
            }
            // orthonormal and self-inverse
            sine_transform(&b, &mut a);
            for (p, q) in a.iter().zip(&x) {
                assert!((p - q).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn spectral_inverse_matches_linear_solve() {
        // (−Δ)^{-1} δ_y through the eigenbasis equals the CG column
        let b = LatticeBox::new(&[6, 5, 4], &[0, 0, 0]).unwrap();
        let y = b.index_of(&[2, 3, 1]).unwrap();
        let mut v = vec![0.0; b.num_vertices()];
        v[y] = 1.0;
        sine_transform(&b, &mut v);
        for (k, x) in v.iter_mut().enumerate() {
            *x /= dirichlet_laplacian_eigenvalue(&b, k);
        }
        sine_transform(&b, &mut v);
        let g = dirichlet_green_column(&b, y).unwrap();
        for (p, q) in v.iter().zip(&g) {
            assert!((p - q).abs() < 1e-10);
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let b = LatticeBox::cube(3, 5).unwrap();
        let f1 = sample_gff_dirichlet(&b, RngStream::new(11, 4)).unwrap();
        let f2 = sample_gff_dirichlet(&b, RngStream::new(11, 4)).unwrap();
        let f3 = sample_gff_dirichlet(&b, RngStream::new(11, 5)).unwrap();
        assert!(f1.values.iter().zip(&f2.values).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert!(f1.values != f3.values);
    }
}
