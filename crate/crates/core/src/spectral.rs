//! Sine-series operators on the interior nodes of a Cartesian box.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

pub(crate) fn interior(shape: &[usize]) -> Vec<usize> {
    shape.iter().map(|n| n - 2).collect()
}

fn for_interior(shape: &[usize], inner: &[usize], mut f: impl FnMut(usize, usize)) {
    let dim = shape.len();
    let mut idx = vec![0usize; dim];
    let len: usize = inner.iter().product();
    for flat_in in 0..len {
        let mut flat = 0;
        let mut stride = 1;
        for k in 0..dim {
            flat += (idx[k] + 1) * stride;
            stride *= shape[k];
        }
        f(flat_in, flat);
        for k in 0..dim {
            idx[k] += 1;
            if idx[k] < inner[k] {
                break;
            }
            idx[k] = 0;
        }
    }
}

pub(crate) fn gather(shape: &[usize], inner: &[usize], src: &[f64]) -> Vec<f64> {
    let mut buf = vec![0.0; inner.iter().product()];
    for_interior(shape, inner, |a, b| buf[a] = src[b]);
    buf
}

pub(crate) fn scatter(shape: &[usize], inner: &[usize], buf: &[f64], out: &mut [f64]) {
    for_interior(shape, inner, |a, b| out[b] = buf[a]);
}

// Run `f` on every line along axis k, packed into a complex buffer of
// length 2(m+1), then read the result back through `read`.
fn along_axis(
    buf: &mut [f64],
    inner: &[usize],
    k: usize,
    fill: impl Fn(&mut [Complex<f64>], &dyn Fn(usize) -> f64),
    read: impl Fn(&[Complex<f64>], usize) -> f64,
) {
    let m = inner[k];
    let stride: usize = inner[..k].iter().product();
    let block = m * stride;
    let outer = buf.len() / block;
    let l = 2 * (m + 1);
    let fft = plan(l);
    let mut line = vec![Complex::new(0.0, 0.0); l];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for o in 0..outer {
        for s in 0..stride {
            let base = o * block + s;
            line.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
            fill(&mut line, &|j| buf[base + j * stride]);
            fft.process_with_scratch(&mut line, &mut scratch);
            for j in 0..m {
                buf[base + j * stride] = read(&line, j);
            }
        }
    }
}

/// Unnormalized DST-I along axis k: X_j = sum_n x_n sin(pi j n / (m+1)).
/// Applying it twice multiplies by (m+1)/2.
pub(crate) fn dst_axis(buf: &mut [f64], inner: &[usize], k: usize) {
    let m = inner[k];
    let l = 2 * (m + 1);
    along_axis(
        buf,
        inner,
        k,
        |line, x| {
            for j in 0..m {
                line[j + 1].re = x(j);
                line[l - j - 1].re = -x(j);
            }
        },
        |line, j| -0.5 * line[j + 1].im,
    );
}

/// y_n = sum_j c_j cos(pi j n / (m+1)) for interior n, coefficients j = 1..m.
pub(crate) fn cos_synth_axis(buf: &mut [f64], inner: &[usize], k: usize) {
    let m = inner[k];
    let l = 2 * (m + 1);
    along_axis(
        buf,
        inner,
        k,
        |line, c| {
            for j in 0..m {
                line[j + 1].re = c(j);
                line[l - j - 1].re = c(j);
            }
        },
        |line, j| 0.5 * line[j + 1].re,
    );
}

/// Eigenvalues (pi j / L)^2 of -d^2/dx^2 with Dirichlet ends, L = (m+1) dx.
pub(crate) fn eigenvalues(m: usize, dx: f64) -> Vec<f64> {
    let l = (m + 1) as f64 * dx;
    (1..=m).map(|j| (PI * j as f64 / l).powi(2)).collect()
}

/// Visit the sine coefficients in flat order with the sum of per-axis eigenvalues.
pub(crate) fn for_modes(inner: &[usize], eig: &[Vec<f64>], mut f: impl FnMut(usize, f64)) {
    let dim = inner.len();
    let mut idx = vec![0usize; dim];
    let len: usize = inner.iter().product();
    for flat in 0..len {
        let lam: f64 = (0..dim).map(|k| eig[k][idx[k]]).sum();
        f(flat, lam);
        for k in 0..dim {
            idx[k] += 1;
            if idx[k] < inner[k] {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Forward sine transform over all axes.
pub(crate) fn dst_all(buf: &mut [f64], inner: &[usize]) {
    for k in 0..inner.len() {
        dst_axis(buf, inner, k);
    }
}

/// Inverse of `dst_all`.
pub(crate) fn idst_all(buf: &mut [f64], inner: &[usize]) {
    let mut norm = 1.0;
    for k in 0..inner.len() {
        dst_axis(buf, inner, k);
        norm *= 2.0 / (inner[k] + 1) as f64;
    }
    buf.iter_mut().for_each(|v| *v *= norm);
}

/// Spectral derivative along axis k of the sine interpolant, at interior nodes.
pub(crate) fn derivative(buf: &mut [f64], inner: &[usize], k: usize, dx: f64) {
    let m = inner[k];
    dst_axis(buf, inner, k);
    let stride: usize = inner[..k].iter().product();
    let l = (m + 1) as f64 * dx;
    let c = 2.0 / (m + 1) as f64;
    for (i, v) in buf.iter_mut().enumerate() {
        let j = (i / stride) % m + 1;
        *v *= c * PI * j as f64 / l;
    }
    cos_synth_axis(buf, inner, k);
}
