//! Dormand–Prince 5(4) with a PI step-size controller, for small systems.

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

/// One adaptive integrator instance; `advance` takes a single accepted step.
#[derive(Debug, Clone)]
pub struct Dopri5<const N: usize> {
    pub tol: Tolerances,
    pub h: f64,
    err_prev: f64,
    pub rejected: usize,
}

impl<const N: usize> Dopri5<N> {
    pub fn new(tol: Tolerances, h0: f64) -> Self {
        Self { tol, h: h0, err_prev: 1e-4, rejected: 0 }
    }

    /// Attempts steps from `(x, y)` until one is accepted, never stepping past
    /// `x_end`. Returns the new point, or `None` if the step size collapsed.
    pub fn advance<F>(&mut self, f: &F, x: f64, y: &[f64; N], x_end: f64) -> Option<(f64, [f64; N])>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        loop {
            let h = self.h.min(x_end - x);
            if !(h > 1e-300) || !h.is_finite() {
                return None;
            }
            let mut k = [[0.0; N]; 7];
            k[0] = f(x, y);
            for i in 1..7 {
                let mut yi = *y;
                for (j, kj) in k.iter().enumerate().take(i) {
                    for d in 0..N {
                        yi[d] += h * A[i][j] * kj[d];
                    }
                }
                k[i] = f(x + C[i] * h, &yi);
            }
            let mut y5 = *y;
            let mut err: f64 = 0.0;
            for d in 0..N {
                let mut inc = 0.0;
                let mut e = 0.0;
                for i in 0..7 {
                    inc += B[i] * k[i][d];
                    e += E[i] * k[i][d];
                }
                y5[d] += h * inc;
                let sc = self.tol.atol + self.tol.rtol * y[d].abs().max(y5[d].abs());
                err = err.max((h * e / sc).abs());
            }
            let finite = y5.iter().all(|v| v.is_finite());
            if finite && err <= 1.0 {
                // PI controller (Gustafsson), exponents 0.7/5 and 0.4/5
                let fac = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-0.14) * self.err_prev.powf(0.08) };
                self.h = h * fac.clamp(0.2, 5.0);
                self.err_prev = err.max(1e-4);
                return Some((x + h, y5));
            }
            self.rejected += 1;
            let fac = if finite { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            self.h = h * fac;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_to_tolerance() {
        let f = |_x: f64, y: &[f64; 2]| [y[1], -y[0]];
        let mut s = Dopri5::<2>::new(Tolerances { rtol: 1e-11, atol: 1e-13 }, 0.01);
        let (mut x, mut y) = (0.0, [1.0, 0.0]);
        while x < 10.0 {
            (x, y) = s.advance(&f, x, &y, 10.0).unwrap();
        }
        assert!((y[0] - 10f64.cos()).abs() < 1e-9 && (y[1] + 10f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn fifth_order_convergence() {
        // fixed tolerance sweep: error should fall roughly like rtol
        let f = |x: f64, y: &[f64; 1]| [y[0] * x.cos()];
        let mut errs = Vec::new();
        for rtol in [1e-6, 1e-9] {
            let mut s = Dopri5::<1>::new(Tolerances { rtol, atol: 0.0 }, 0.1);
            let (mut x, mut y) = (0.0, [1.0]);
            while x < 3.0 {
                (x, y) = s.advance(&f, x, &y, 3.0).unwrap();
            }
            errs.push((y[0] - 3f64.sin().exp()).abs());
        }
        assert!(errs[1] < 1e-2 * errs[0].max(1e-14), "{errs:?}");
    }
}
