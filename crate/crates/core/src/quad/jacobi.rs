//! Gauss–Jacobi rules on the unit interval.
//!
//! A [`JacobiRule`] integrates `g(t) t^left (1-t)^right` over `[0, 1]` and is
//! exact when `g` is a polynomial of degree `< 2m`. Nodes are found by Newton
//! iteration on the three-term recurrence, started from the classical
//! asymptotic guesses, so building a rule costs `O(m^2)` and can be repeated
//! every time step when the endpoint exponent drifts with `s`.

use statrs::function::gamma::ln_gamma;

use crate::error::QuadError;

const NEWTON_EPS: f64 = 1e-15;
const NEWTON_MAX_ITERS: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct JacobiRule {
    left: f64,
    right: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl JacobiRule {
    /// `m`-point rule for the weight `t^left (1-t)^right` on `[0, 1]`.
    pub fn new(m: usize, left: f64, right: f64) -> Result<Self, QuadError> {
        if m == 0 {
            return Err(QuadError::EmptyRule);
        }
        if !(left > -1.0 && right > -1.0) || !left.is_finite() || !right.is_finite() {
            return Err(QuadError::BadExponent { left, right });
        }
        let (xs, ws) = gauss_jacobi_symmetric(m, right, left)?;
        let scale = (-(left + right + 1.0) * std::f64::consts::LN_2).exp();
        let mut nodes = Vec::with_capacity(m);
        let mut weights = Vec::with_capacity(m);
        // xs are returned in decreasing order; flip to increasing t
        for (x, w) in xs.iter().zip(ws.iter()).rev() {
            nodes.push(0.5 * (1.0 + x));
            weights.push(w * scale);
        }
        Ok(Self { left, right, nodes, weights })
    }

    /// Gauss–Legendre rule on `[0, 1]`.
    pub fn legendre(m: usize) -> Self {
        Self::new(m, 0.0, 0.0).expect("Legendre exponents are admissible")
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn left_exponent(&self) -> f64 {
        self.left
    }

    pub fn right_exponent(&self) -> f64 {
        self.right
    }

    /// `∫_0^1 g(t) t^left (1-t)^right dt`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut g: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * g(t))
            .sum()
    }

    /// Integrate over `[lo, hi]` with the rule mapped affinely (Legendre use).
    pub fn integrate_on<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut g: F) -> f64 {
        let h = hi - lo;
        let jac = h.powf(1.0 + self.left + self.right);
        jac * self.integrate(|t| g(lo + h * t))
    }
}

/// Roots and weights for `(1-x)^alf (1+x)^bet` on `[-1, 1]`, roots decreasing.
fn gauss_jacobi_symmetric(n: usize, alf: f64, bet: f64) -> Result<(Vec<f64>, Vec<f64>), QuadError> {
    let alfbet = alf + bet;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    if n == 1 {
        // single node at the mean of the weight
        let z = (bet - alf) / (alfbet + 2.0);
        let mass = ((alfbet + 1.0) * std::f64::consts::LN_2 + ln_gamma(alf + 1.0) + ln_gamma(bet + 1.0)
            - ln_gamma(alfbet + 2.0))
        .exp();
        return Ok((vec![z], vec![mass]));
    }
    let mut z = 0.0_f64;
    for i in 0..n {
        z = initial_guess(i, n, alf, bet, z, &x);
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITERS {
            let (p1, _, pp) = jacobi_eval(n, alf, bet, z);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= NEWTON_EPS * (1.0 + z.abs()) {
                converged = true;
                break;
            }
        }
        if !converged || !z.is_finite() {
            return Err(QuadError::NodesDidNotConverge { m: n, left: bet, right: alf });
        }
        // refresh derivative at the converged root
        let (_, _, pp) = jacobi_eval(n, alf, bet, z);
        x[i] = z;
        // w ∝ 1 / ((1 - x²) P_n'(x)²); the scale is fixed from the mass below
        w[i] = 1.0 / ((1.0 - z) * (1.0 + z) * pp * pp);
    }
    let mass = ((alfbet + 1.0) * std::f64::consts::LN_2 + ln_gamma(alf + 1.0) + ln_gamma(bet + 1.0)
        - ln_gamma(alfbet + 2.0))
    .exp();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v *= mass / total);
    for k in 1..n {
        if !(x[k] < x[k - 1]) {
            return Err(QuadError::NodesDidNotConverge { m: n, left: bet, right: alf });
        }
    }
    Ok((x, w))
}

fn initial_guess(i: usize, n: usize, alf: f64, bet: f64, z: f64, x: &[f64]) -> f64 {
    let nf = n as f64;
    match i {
        0 => {
            let an = alf / nf;
            let bn = bet / nf;
            let r1 = (1.0 + alf) * (2.78 / (4.0 + nf * nf) + 0.768 * an / nf);
            let r2 = 1.0 + 1.48 * an + 0.96 * bn + 0.452 * an * an + 0.83 * an * bn;
            1.0 - r1 / r2
        }
        1 => {
            let r1 = (4.1 + alf) / ((1.0 + alf) * (1.0 + 0.156 * alf));
            let r2 = 1.0 + 0.06 * (nf - 8.0) * (1.0 + 0.12 * alf) / nf;
            let r3 = 1.0 + 0.012 * bet * (1.0 + 0.25 * alf.abs()) / nf;
            z - (1.0 - z) * r1 * r2 * r3
        }
        2 => {
            let r1 = (1.67 + 0.28 * alf) / (1.0 + 0.37 * alf);
            let r2 = 1.0 + 0.22 * (nf - 8.0) / nf;
            let r3 = 1.0 + 8.0 * bet / ((6.28 + bet) * nf * nf);
            z - (x[0] - z) * r1 * r2 * r3
        }
        _ if i == n - 2 => {
            let r1 = (1.0 + 0.235 * bet) / (0.766 + 0.119 * bet);
            let r2 = 1.0 / (1.0 + 0.639 * (nf - 4.0) / (1.0 + 0.71 * (nf - 4.0)));
            let r3 = 1.0 / (1.0 + 20.0 * alf / ((7.5 + alf) * nf * nf));
            z + (z - x[n - 4]) * r1 * r2 * r3
        }
        _ if i == n - 1 => {
            let r1 = (1.0 + 0.37 * bet) / (1.67 + 0.28 * bet);
            let r2 = 1.0 / (1.0 + 0.22 * (nf - 8.0) / nf);
            let r3 = 1.0 / (1.0 + 8.0 * alf / ((6.28 + alf) * nf * nf));
            z + (z - x[n - 3]) * r1 * r2 * r3
        }
        _ => 3.0 * x[i - 1] - 3.0 * x[i - 2] + x[i - 3],
    }
}

/// Returns `(P_n(z), P_{n-1}(z), P_n'(z))` for the Jacobi family.
fn jacobi_eval(n: usize, alf: f64, bet: f64, z: f64) -> (f64, f64, f64) {
    let alfbet = alf + bet;
    let mut temp = 2.0 + alfbet;
    let mut p1 = (alf - bet + temp * z) / 2.0;
    let mut p2 = 1.0;
    for j in 2..=n {
        let jf = j as f64;
        let p3 = p2;
        p2 = p1;
        temp = 2.0 * jf + alfbet;
        let a = 2.0 * jf * (jf + alfbet) * (temp - 2.0);
        let b = (temp - 1.0) * (alf * alf - bet * bet + temp * (temp - 2.0) * z);
        let c = 2.0 * (jf - 1.0 + alf) * (jf - 1.0 + bet) * temp;
        p1 = (b * p2 - c * p3) / a;
    }
    let nf = n as f64;
    temp = 2.0 * nf + alfbet;
    let pp = (nf * (alf - bet - temp * z) * p1 + 2.0 * (nf + alf) * (nf + bet) * p2) / (temp * (1.0 - z * z));
    (p1, p2, pp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::beta::beta;

    fn moment(rule: &JacobiRule, k: i32) -> f64 {
        rule.integrate(|t| t.powi(k))
    }

    #[test]
    fn moments_match_beta_function() {
        for &(left, right) in &[(0.0, 0.0), (0.5, 0.5), (0.5, -0.95), (0.5, -0.99), (0.0, -0.5), (1.0, 0.05), (0.5, 1.5)] {
            for &m in &[1usize, 2, 3, 5, 12, 40, 96] {
                let rule = JacobiRule::new(m, left, right).unwrap();
                for k in 0..(2 * m as i32).min(60) {
                    let exact = beta(left + 1.0 + k as f64, right + 1.0);
                    let got = moment(&rule, k);
                    assert!(
                        ((got - exact) / exact).abs() < 1e-12,
                        "m={m} left={left} right={right} k={k}: {got} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn nodes_inside_open_interval_and_sorted() {
        let rule = JacobiRule::new(150, 0.5, -0.9).unwrap();
        assert!(rule.nodes()[0] > 0.0 && *rule.nodes().last().unwrap() < 1.0);
        assert!(rule.nodes().windows(2).all(|p| p[0] < p[1]));
        assert!(rule.weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn rejects_bad_exponents() {
        assert!(JacobiRule::new(4, -1.0, 0.0).is_err());
        assert!(JacobiRule::new(0, 0.0, 0.0).is_err());
    }

    #[test]
    fn legendre_on_interval() {
        let r = JacobiRule::legendre(20);
        let v = r.integrate_on(1.0, 3.0, |x| x.exp());
        assert!((v - (3f64.exp() - 1f64.exp())).abs() < 1e-13);
    }
}
