//! Multi-dimensional FFT on row-major arrays.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// In-place unnormalized transform along every axis of a row-major array.
/// `inverse` uses `e^{+2πi…}`.
pub fn fft_nd(data: &mut [Complex64], shape: &[usize], inverse: bool) {
    let total: usize = shape.iter().product();
    assert_eq!(total, data.len());
    let mut planner = FftPlanner::<f64>::new();
    let mut stride = 1usize;
    for axis in (0..shape.len()).rev() {
        let n = shape[axis];
        if n > 1 {
            let plan = if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            };
            let mut buf = vec![Complex64::new(0.0, 0.0); n];
            let block = n * stride;
            for outer in (0..total).step_by(block) {
                for inner in 0..stride {
                    for (i, b) in buf.iter_mut().enumerate() {
                        *b = data[outer + inner + i * stride];
                    }
                    plan.process(&mut buf);
                    for (i, b) in buf.iter().enumerate() {
                        data[outer + inner + i * stride] = *b;
                    }
                }
            }
        }
        stride *= n;
    }
}

/// Linear (acyclic) convolution of several one-dimensional sequences.
pub fn convolve_many(seqs: &[&[Complex64]]) -> Vec<Complex64> {
    match seqs.len() {
        0 => vec![Complex64::new(1.0, 0.0)],
        1 => seqs[0].to_vec(),
        _ => {
            let out_len: usize = seqs.iter().map(|s| s.len()).sum::<usize>() + 1 - seqs.len();
            let size = out_len.next_power_of_two();
            let mut acc = vec![Complex64::new(1.0, 0.0); size];
            let mut planner = FftPlanner::<f64>::new();
            let fwd = planner.plan_fft_forward(size);
            let inv = planner.plan_fft_inverse(size);
            for s in seqs {
                let mut buf = vec![Complex64::new(0.0, 0.0); size];
                buf[..s.len()].copy_from_slice(s);
                fwd.process(&mut buf);
                for (a, b) in acc.iter_mut().zip(&buf) {
                    *a *= b;
                }
            }
            inv.process(&mut acc);
            let norm = 1.0 / size as f64;
            acc.truncate(out_len);
            acc.iter_mut().for_each(|v| *v *= norm);
            acc
        }
    }
}
