//! Multi-dimensional FFT over the active axes and Fourier multipliers.

use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

/// A real-field operator diagonal in Fourier space.
#[derive(Clone, Debug, PartialEq)]
pub enum SpectralOp {
    /// `∂_a`
    Derivative(usize),
    /// `Σ coef · ∂_a ∂_b`
    Second(Vec<(usize, usize, f64)>),
}

pub struct Spectral {
    sizes: Vec<usize>,
    total: usize,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    /// Per axis, per flat index: signed wavenumber (Nyquist kept as −N/2).
    k_full: Vec<Vec<f64>>,
    /// Same with the Nyquist wavenumber zeroed, for odd-order factors.
    k_odd: Vec<Vec<f64>>,
    /// Multipliers already tabulated, keyed by operator.
    tables: Mutex<Vec<(SpectralOp, Arc<Vec<f64>>)>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("sizes", &self.sizes).finish()
    }
}

impl Spectral {
    pub fn new(sizes: &[usize]) -> Self {
        let m = sizes.len();
        let total: usize = sizes.iter().product();
        let mut strides = vec![1usize; m];
        for a in (0..m.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * sizes[a + 1];
        }
        let mut planner = FftPlanner::<f64>::new();
        let forward = sizes.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = sizes.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        let mut k_full = Vec::with_capacity(m);
        let mut k_odd = Vec::with_capacity(m);
        for a in 0..m {
            let n = sizes[a];
            let per_index: Vec<(f64, f64)> = (0..n)
                .map(|j| {
                    let k = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
                    let odd = if n.is_multiple_of(2) && j == n / 2 { 0.0 } else { k };
                    (k, odd)
                })
                .collect();
            let (full, odd): (Vec<f64>, Vec<f64>) = (0..total)
                .map(|idx| per_index[(idx / strides[a]) % n])
                .unzip();
            k_full.push(full);
            k_odd.push(odd);
        }
        Spectral {
            sizes: sizes.to_vec(),
            total,
            forward,
            inverse,
            k_full,
            k_odd,
            tables: Mutex::new(Vec::new()),
        }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// Unnormalized forward transform of a real field.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        assert_eq!(values.len(), self.total);
        let buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(buf, false)
    }

    /// Normalized inverse transform.
    pub fn inverse(&self, buf: Vec<Complex64>) -> Vec<Complex64> {
        let mut out = self.transform(buf, true);
        let scale = 1.0 / self.total as f64;
        out.par_iter_mut().for_each(|z| *z *= scale);
        out
    }

    /// Transforms the last axis, then rotates it to the front; after one
    /// pass per axis the layout is back to row-major.
    fn transform(&self, mut buf: Vec<Complex64>, inverse: bool) -> Vec<Complex64> {
        assert_eq!(buf.len(), self.total);
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.total];
        for a in (0..self.sizes.len()).rev() {
            let fft = if inverse { &self.inverse[a] } else { &self.forward[a] };
            let len = self.sizes[a];
            run_lines(fft, &mut buf, len);
            let rows = self.total / len;
            if rows > 1 {
                transpose(&buf, &mut scratch, rows, len);
                std::mem::swap(&mut buf, &mut scratch);
            }
        }
        buf
    }

    /// Fourier multiplier of `op` at flat mode index `idx`.
    pub fn multiplier(&self, op: &SpectralOp, idx: usize) -> Complex64 {
        match op {
            SpectralOp::Derivative(_) => Complex64::new(0.0, self.real_factor(op, idx)),
            SpectralOp::Second(_) => Complex64::new(self.real_factor(op, idx), 0.0),
        }
    }

    /// The multiplier without its factor `i` for first derivatives.
    fn real_factor(&self, op: &SpectralOp, idx: usize) -> f64 {
        match op {
            SpectralOp::Derivative(a) => self.k_odd[*a][idx],
            SpectralOp::Second(terms) => {
                let mut acc = 0.0;
                for &(a, b, coef) in terms {
                    let kk = if a == b {
                        self.k_full[a][idx] * self.k_full[a][idx]
                    } else {
                        self.k_odd[a][idx] * self.k_odd[b][idx]
                    };
                    acc -= coef * kk;
                }
                acc
            }
        }
    }

    fn table(&self, op: &SpectralOp) -> Arc<Vec<f64>> {
        let mut tables = self.tables.lock().expect("multiplier cache poisoned");
        if let Some((_, t)) = tables.iter().find(|(o, _)| o == op) {
            return t.clone();
        }
        let t: Arc<Vec<f64>> = Arc::new((0..self.total).map(|idx| self.real_factor(op, idx)).collect());
        tables.push((op.clone(), t.clone()));
        t
    }

    /// Applies each operator to the field with spectrum `spectrum`; two real
    /// outputs share one inverse transform.
    pub fn apply(&self, spectrum: &[Complex64], ops: &[SpectralOp]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(ops.len());
        for pair in ops.chunks(2) {
            // Multiplier m·s for Second, i·m·s for Derivative; the second
            // output of a pair is carried by a further factor i.
            let factor = |op: &SpectralOp, m: f64, z: Complex64, rotate: bool| -> Complex64 {
                let w = match op {
                    SpectralOp::Derivative(_) => Complex64::new(-m * z.im, m * z.re),
                    SpectralOp::Second(_) => z * m,
                };
                if rotate {
                    Complex64::new(-w.im, w.re)
                } else {
                    w
                }
            };
            let t0 = self.table(&pair[0]);
            let t1 = pair.get(1).map(|op| self.table(op));
            let buf: Vec<Complex64> = match &t1 {
                Some(t1) => spectrum
                    .par_iter()
                    .zip(t0.par_iter().zip(t1.par_iter()))
                    .map(|(&z, (&m0, &m1))| factor(&pair[0], m0, z, false) + factor(&pair[1], m1, z, true))
                    .collect(),
                None => spectrum
                    .par_iter()
                    .zip(t0.par_iter())
                    .map(|(&z, &m0)| factor(&pair[0], m0, z, false))
                    .collect(),
            };
            let buf = self.inverse(buf);
            out.push(buf.iter().map(|z| z.re).collect());
            if pair.len() == 2 {
                out.push(buf.iter().map(|z| z.im).collect());
            }
        }
        out
    }
}

/// `dst (cols × rows) = srcᵀ` for row-major `src (rows × cols)`.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    dst.par_chunks_mut(rows).enumerate().for_each(|(k, out)| {
        for (i, d) in out.iter_mut().enumerate() {
            *d = src[i * cols + k];
        }
    });
}

fn run_lines(fft: &Arc<dyn Fft<f64>>, buf: &mut [Complex64], len: usize) {
    let lines = buf.len() / len;
    let threads = rayon::current_num_threads().max(1);
    let per_task = (lines / (4 * threads)).max(1);
    let scratch_len = fft.get_inplace_scratch_len();
    buf.par_chunks_mut(len * per_task).for_each_init(
        || vec![Complex64::new(0.0, 0.0); scratch_len],
        |scratch, chunk| fft.process_with_scratch(chunk, scratch),
    );
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn derivative_of_single_mode_is_exact() {
        let sizes = [8, 16];
        let sp = Spectral::new(&sizes);
        let values: Vec<f64> = (0..128)
            .map(|idx| {
                let (i, j) = (idx / 16, idx % 16);
                let (x, y) = (2.0 * PI * i as f64 / 8.0, 2.0 * PI * j as f64 / 16.0);
                (2.0 * x + 3.0 * y).sin()
            })
            .collect();
        let spec = sp.forward(&values);
        let ops = [
            SpectralOp::Derivative(0),
            SpectralOp::Derivative(1),
            SpectralOp::Second(vec![(0, 1, 1.0)]),
        ];
        let out = sp.apply(&spec, &ops);
        for idx in 0..128 {
            let (i, j) = (idx / 16, idx % 16);
            let (x, y) = (2.0 * PI * i as f64 / 8.0, 2.0 * PI * j as f64 / 16.0);
            let c = (2.0 * x + 3.0 * y).cos();
            assert!((out[0][idx] - 2.0 * c).abs() < 1e-13);
            assert!((out[1][idx] - 3.0 * c).abs() < 1e-13);
            assert!((out[2][idx] + 6.0 * (2.0 * x + 3.0 * y).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn round_trip() {
        let sp = Spectral::new(&[4, 8, 2]);
        let values: Vec<f64> = (0..64).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let spec = sp.inverse(sp.forward(&values));
        for (a, b) in spec.iter().zip(&values) {
            assert!((a.re - b).abs() < 1e-13 && a.im.abs() < 1e-13);
        }
    }
}
