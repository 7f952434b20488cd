use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theorem {
    /// Heavy-ball momentum, `0 < beta1 < beta2 < 1`.
    WithMomentum,
    /// `beta1 = 0`.
    WithoutMomentum,
}

impl Theorem {
    pub fn number(self) -> u8 {
        match self {
            Theorem::WithMomentum => 1,
            Theorem::WithoutMomentum => 2,
        }
    }
}

/// Constants entering the decentralized-Adam convergence bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Almost-sure gradient bound `R`.
    pub r: f64,
    /// Smoothness `L`.
    pub l: f64,
    /// Dimension `D`.
    pub d: f64,
    /// `max(|lambda_2|, |lambda_N|)` of the mixing matrix.
    pub lambda: f64,
    pub iterations: usize,
    /// `F(x_bar^(0)) - F*`.
    pub f_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub theorem: Theorem,
    pub inputs: BoundInputs,
    /// Effective horizon `T - beta1 / (1 - beta1)` (equals `T` without momentum).
    pub t_tilde: f64,
    pub e_terms: Vec<f64>,
    pub e_total: f64,
    /// `(1 + lambda^2) / (1 - lambda^2)^2`.
    pub topology_factor: f64,
    pub rhs: f64,
    /// Measured `E[|grad F(x_bar^(tau))|^2]`, when a check was run.
    pub lhs: Option<f64>,
}

impl BoundReport {
    pub fn margin(&self) -> Option<f64> {
        self.lhs.map(|l| self.rhs - l)
    }

    pub fn holds(&self) -> Option<bool> {
        self.lhs.map(|l| l <= self.rhs)
    }
}

impl fmt::Display for BoundReport {
    /// `key: value` lines.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = &self.inputs;
        writeln!(f, "theorem: {}", self.theorem.number())?;
        writeln!(f, "alpha: {}", i.alpha)?;
        writeln!(f, "beta1: {}", i.beta1)?;
        writeln!(f, "beta2: {}", i.beta2)?;
        writeln!(f, "eps: {}", i.eps)?;
        writeln!(f, "R: {}", i.r)?;
        writeln!(f, "L: {}", i.l)?;
        writeln!(f, "D: {}", i.d)?;
        writeln!(f, "lambda: {}", i.lambda)?;
        writeln!(f, "T: {}", i.iterations)?;
        writeln!(f, "T_tilde: {}", self.t_tilde)?;
        writeln!(f, "f_gap: {}", i.f_gap)?;
        writeln!(f, "topology_factor: {}", self.topology_factor)?;
        for (k, e) in self.e_terms.iter().enumerate() {
            writeln!(f, "E_term_{}: {}", k + 1, e)?;
        }
        writeln!(f, "E: {}", self.e_total)?;
        writeln!(f, "rhs: {}", self.rhs)?;
        if let Some(lhs) = self.lhs {
            writeln!(f, "lhs: {lhs}")?;
            writeln!(f, "margin: {}", self.rhs - lhs)?;
            writeln!(f, "result: {}", if lhs <= self.rhs { "PASS" } else { "FAIL" })?;
        }
        Ok(())
    }
}

fn check_common(i: &BoundInputs) -> Result<()> {
    let positive = [
        ("alpha", i.alpha),
        ("eps", i.eps),
        ("R", i.r),
        ("L", i.l),
        ("D", i.d),
    ];
    for (name, v) in positive {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::param(format!("{name} must be positive, got {v}")));
        }
    }
    if !(i.f_gap >= 0.0) || !i.f_gap.is_finite() {
        return Err(Error::param(format!("F gap must be non-negative, got {}", i.f_gap)));
    }
    if !(0.0..1.0).contains(&i.lambda) {
        return Err(Error::param(format!("lambda must lie in [0, 1), got {}", i.lambda)));
    }
    if !(0.0 < i.beta2 && i.beta2 < 1.0) {
        return Err(Error::param(format!("beta2 must lie in (0, 1), got {}", i.beta2)));
    }
    if i.iterations == 0 {
        return Err(Error::param("T must be >= 1"));
    }
    Ok(())
}

fn topology_factor(lambda: f64) -> f64 {
    let l2 = lambda * lambda;
    (1.0 + l2) / ((1.0 - l2) * (1.0 - l2))
}

/// Right-hand side of the heavy-ball decentralized Adam bound:
///
/// `4R/(alpha T~) (F(x0) - F*) + E [ ln(1 + R/(eps (1-beta2))) / T~ - (T/T~) ln beta2 ]`
/// with `T~ = T - beta1/(1-beta1)` and the four-term constant `E`.
pub fn evaluate_theorem1_bound(i: &BoundInputs) -> Result<BoundReport> {
    check_common(i)?;
    if !(0.0 < i.beta1 && i.beta1 < i.beta2) {
        return Err(Error::param(format!(
            "need 0 < beta1 < beta2 < 1, got beta1 = {}, beta2 = {}",
            i.beta1, i.beta2
        )));
    }
    let t = i.iterations as f64;
    let t_tilde = t - i.beta1 / (1.0 - i.beta1);
    if t_tilde <= 0.0 {
        return Err(Error::param(format!(
            "T - beta1/(1-beta1) = {t_tilde} must be positive"
        )));
    }
    let (a, b1, b2, d, r, l) = (i.alpha, i.beta1, i.beta2, i.d, i.r, i.l);
    let ratio = 1.0 - b1 / b2;
    let topo = topology_factor(i.lambda);
    let e_terms = vec![
        24.0 * d * r * r * (1.0 - b1).sqrt() / ((1.0 - b2).sqrt() * ratio.powf(1.5)),
        2.0 * a * d * l * r * (1.0 - b1) / ((1.0 - b2) * ratio),
        4.0 * a * a * l * l * d * b1 / (ratio * (1.0 - b2).powf(1.5)),
        8.0 * a * a * topo * r * l * l * d * (1.0 - b1).sqrt()
            / ((1.0 - b2) * ratio * i.eps.sqrt()),
    ];
    let e_total: f64 = e_terms.iter().sum();
    let log_term = (1.0 + r / (i.eps * (1.0 - b2))).ln() / t_tilde - (t / t_tilde) * b2.ln();
    let rhs = 4.0 * r / (a * t_tilde) * i.f_gap + e_total * log_term;
    Ok(BoundReport {
        theorem: Theorem::WithMomentum,
        inputs: *i,
        t_tilde,
        e_terms,
        e_total,
        topology_factor: topo,
        rhs,
        lhs: None,
    })
}

/// Right-hand side of the momentum-free (`beta1 = 0`) bound:
///
/// `4R/(alpha T) (F(x0) - F*) + E [ ln(1 + R^2/(eps (1-beta2))) / T - ln beta2 ]`
/// with the three-term constant `E`.
pub fn evaluate_theorem2_bound(i: &BoundInputs) -> Result<BoundReport> {
    check_common(i)?;
    if i.beta1 != 0.0 {
        return Err(Error::param(format!(
            "the momentum-free bound needs beta1 = 0, got {}",
            i.beta1
        )));
    }
    let t = i.iterations as f64;
    let (a, b2, d, r, l) = (i.alpha, i.beta2, i.d, i.r, i.l);
    let topo = topology_factor(i.lambda);
    let e_terms = vec![
        8.0 * d * r * r / (1.0 - b2).sqrt(),
        2.0 * a * d * l * r / (1.0 - b2),
        8.0 * a * a * topo * l * l * d * r / ((1.0 - b2).powf(1.5) * i.eps.sqrt()),
    ];
    let e_total: f64 = e_terms.iter().sum();
    let log_term = (1.0 + r * r / (i.eps * (1.0 - b2))).ln() / t - b2.ln();
    let rhs = 4.0 * r / (a * t) * i.f_gap + e_total * log_term;
    Ok(BoundReport {
        theorem: Theorem::WithoutMomentum,
        inputs: *i,
        t_tilde: t,
        e_terms,
        e_total,
        topology_factor: topo,
        rhs,
        lhs: None,
    })
}
