//! The stick-breaking measure ω on (0,1) and its image Ω under
//! φ(x) = -log(1-x).

mod descriptor;
mod tabulated;

use serde::Serialize;
use statrs::function::beta::{beta_reg, ln_beta};
use statrs::function::gamma::{digamma, ln_gamma};

pub use descriptor::{DescriptorKind, MeasureDescriptor};
pub use tabulated::TabulatedDensity;

use crate::error::{Result, SieveError};
use crate::quad::{integrate, integrate_pieces, integrate_to_infinity, Tolerance};
use crate::special::{beta_binomial_row, binomial_pmf_row, ln_choose, trigamma, CompensatedSum};

pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-10;
pub const DEFAULT_LATTICE_TOL: f64 = 1e-9;

/// Largest denominator accepted when matching ratios of atom images to a
/// common span.
const LATTICE_MAX_DENOMINATOR: u64 = 1000;

/// Exact sums up to this index; the log-gamma route takes over beyond it.
const DIRECT_PRODUCT_LIMIT: u64 = 10_000;

/// An atom of a discrete measure, with `1 - x` and `φ(x)` stored to full
/// precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub x: f64,
    pub one_minus_x: f64,
    pub weight: f64,
    pub phi: f64,
}

impl Atom {
    fn new(x: f64, weight: f64) -> Self {
        let one_minus_x = 1.0 - x;
        let phi = if x < 0.5 {
            -(-x).ln_1p()
        } else {
            -one_minus_x.ln()
        };
        Self {
            x,
            one_minus_x,
            weight,
            phi,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureKind {
    Discrete(Vec<Atom>),
    Beta { alpha: f64, beta: f64, ln_norm: f64 },
    Tabulated(TabulatedDensity),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentFunctionals {
    pub mu: f64,
    pub nu: f64,
    pub lambda: f64,
    pub sigma2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeReport {
    pub is_lattice: bool,
    pub span: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct MeasureOptions {
    /// Rescale discrete weights that do not already sum to one.
    pub normalize: bool,
    pub quadrature_tol: f64,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        Self {
            normalize: false,
            quadrature_tol: DEFAULT_QUADRATURE_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StickBreakingMeasure {
    kind: MeasureKind,
    descriptor: MeasureDescriptor,
    quadrature_tol: f64,
}

/// Builds a measure from a descriptor.
pub fn make_measure(
    descriptor: &MeasureDescriptor,
    options: MeasureOptions,
) -> Result<StickBreakingMeasure> {
    let kind = match descriptor.kind() {
        DescriptorKind::Beta { alpha, beta } => MeasureKind::Beta {
            alpha: *alpha,
            beta: *beta,
            ln_norm: ln_beta(*alpha, *beta),
        },
        DescriptorKind::Atoms(atoms) => {
            MeasureKind::Discrete(discrete_atoms(atoms, options.normalize)?)
        }
        DescriptorKind::Table(path) => MeasureKind::Tabulated(TabulatedDensity::from_csv(path)?),
    };
    Ok(StickBreakingMeasure {
        kind,
        descriptor: descriptor.clone(),
        quadrature_tol: options.quadrature_tol,
    })
}

fn discrete_atoms(atoms: &[(f64, f64)], normalize: bool) -> Result<Vec<Atom>> {
    if atoms.is_empty() {
        return Err(SieveError::InvalidMeasure("no atoms".into()));
    }
    for &(x, p) in atoms {
        if !(x > 0.0 && x < 1.0) {
            return Err(SieveError::InvalidMeasure(format!(
                "atom {x} outside (0,1)"
            )));
        }
        if !(p > 0.0 && p.is_finite()) {
            return Err(SieveError::InvalidMeasure(format!(
                "nonpositive weight {p}"
            )));
        }
    }
    let mut sorted = atoms.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(SieveError::InvalidMeasure("atoms must be distinct".into()));
    }
    let total = crate::special::compensated_sum(sorted.iter().map(|a| a.1));
    if (total - 1.0).abs() > 1e-12 && !normalize {
        return Err(SieveError::InvalidMeasure(format!(
            "weights sum to {total}, not 1 (enable normalization to rescale)"
        )));
    }
    Ok(sorted
        .into_iter()
        .map(|(x, p)| Atom::new(x, p / total))
        .collect())
}

impl StickBreakingMeasure {
    pub fn parse(text: &str, options: MeasureOptions) -> Result<Self> {
        make_measure(&text.parse()?, options)
    }

    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(SieveError::InvalidMeasure(
                "Beta parameters must be positive".into(),
            ));
        }
        make_measure(
            &MeasureDescriptor::beta(alpha, beta),
            MeasureOptions::default(),
        )
    }

    pub fn uniform() -> Self {
        Self::beta(1.0, 1.0).expect("valid parameters")
    }

    pub fn discrete(atoms: &[(f64, f64)], normalize: bool) -> Result<Self> {
        let options = MeasureOptions {
            normalize,
            ..MeasureOptions::default()
        };
        make_measure(&MeasureDescriptor::atoms(atoms), options)
    }

    /// Wraps an in-memory density; `label` becomes the descriptor path.
    pub fn tabulated(density: TabulatedDensity, label: &str) -> Self {
        Self {
            kind: MeasureKind::Tabulated(density),
            descriptor: MeasureDescriptor::table(label),
            quadrature_tol: DEFAULT_QUADRATURE_TOL,
        }
    }

    pub fn with_quadrature_tol(mut self, tol: f64) -> Self {
        self.quadrature_tol = tol;
        self
    }

    pub fn kind(&self) -> &MeasureKind {
        &self.kind
    }

    pub fn descriptor(&self) -> &MeasureDescriptor {
        &self.descriptor
    }

    pub fn quadrature_tol(&self) -> f64 {
        self.quadrature_tol
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.kind, MeasureKind::Discrete(_))
    }

    pub fn atoms(&self) -> Option<&[Atom]> {
        match &self.kind {
            MeasureKind::Discrete(a) => Some(a),
            _ => None,
        }
    }

    pub(crate) fn tolerance(&self) -> Tolerance {
        Tolerance::new(1e-16, self.quadrature_tol)
    }

    /// w(n, m) = C(n,m) ∫ x^m (1-x)^(n-m) ω(dx).
    pub fn binomial_moment(&self, n: usize, m: usize) -> Result<f64> {
        if m > n {
            return Err(SieveError::OutOfRange(format!("m = {m} exceeds n = {n}")));
        }
        let (nu, mu) = (n as u64, m as u64);
        Ok(match &self.kind {
            MeasureKind::Discrete(atoms) => {
                let lc = ln_choose(nu, mu);
                let mut acc = CompensatedSum::new();
                for a in atoms {
                    let l = lc + m as f64 * a.x.ln() + (n - m) as f64 * a.one_minus_x.ln();
                    acc.add(a.weight * l.exp());
                }
                acc.value()
            }
            MeasureKind::Beta {
                alpha,
                beta,
                ln_norm,
            } => (ln_choose(nu, mu) + ln_beta(m as f64 + alpha, (n - m) as f64 + beta) - ln_norm)
                .exp(),
            MeasureKind::Tabulated(t) => {
                if m == 0 {
                    t.complement_power_moment(nu)
                } else {
                    let mut row = Vec::new();
                    t.binomial_moment_row(n, &mut row);
                    row[m]
                }
            }
        })
    }

    /// Writes w(n, 0..=n) into `out`, normalized to unit mass.
    pub fn binomial_moment_row(&self, n: usize, out: &mut Vec<f64>) {
        match &self.kind {
            MeasureKind::Discrete(atoms) => {
                out.clear();
                out.resize(n + 1, 0.0);
                let mut scratch = Vec::new();
                if atoms.len() == 1 {
                    binomial_pmf_row(n, atoms[0].x, atoms[0].one_minus_x, out);
                    return;
                }
                let mut acc = vec![CompensatedSum::new(); n + 1];
                for a in atoms {
                    binomial_pmf_row(n, a.x, a.one_minus_x, &mut scratch);
                    for (s, p) in acc.iter_mut().zip(&scratch) {
                        s.add(a.weight * p);
                    }
                }
                for (o, s) in out.iter_mut().zip(&acc) {
                    *o = s.value();
                }
            }
            MeasureKind::Beta { alpha, beta, .. } => beta_binomial_row(n, *alpha, *beta, out),
            MeasureKind::Tabulated(t) => t.binomial_moment_row(n, out),
        }
    }

    /// log w(n, 0) = log ∫ (1-x)^n ω(dx).
    fn ln_complement_moment(&self, n: u64) -> f64 {
        match &self.kind {
            MeasureKind::Discrete(atoms) => {
                // Log-sum-exp over atoms.
                let logs: Vec<f64> = atoms
                    .iter()
                    .map(|a| a.weight.ln() - n as f64 * a.phi)
                    .collect();
                let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln()
            }
            MeasureKind::Beta { alpha, beta, .. } => {
                if n <= DIRECT_PRODUCT_LIMIT {
                    let mut acc = CompensatedSum::new();
                    for j in 0..n {
                        acc.add((-alpha / (alpha + beta + j as f64)).ln_1p());
                    }
                    acc.value()
                } else {
                    let nf = n as f64;
                    ln_gamma(nf + beta) - ln_gamma(nf + alpha + beta) + ln_gamma(alpha + beta)
                        - ln_gamma(*beta)
                }
            }
            MeasureKind::Tabulated(t) => t.complement_power_moment(n).ln(),
        }
    }

    /// W(n) = 1 - w(n, 0), the characteristic exponent of Ω at n.
    pub fn char_exponent(&self, n: u64) -> f64 {
        if n == 0 {
            return 0.0;
        }
        match &self.kind {
            MeasureKind::Discrete(atoms) => {
                let mut acc = CompensatedSum::new();
                for a in atoms {
                    acc.add(-a.weight * (-(n as f64) * a.phi).exp_m1());
                }
                acc.value()
            }
            MeasureKind::Beta { .. } => -self.ln_complement_moment(n).exp_m1(),
            MeasureKind::Tabulated(t) => 1.0 - t.complement_power_moment(n),
        }
    }

    /// W(0), W(1), ..., W(n_max) in one pass.
    pub fn char_exponent_table(&self, n_max: usize) -> Vec<f64> {
        match &self.kind {
            MeasureKind::Beta { alpha, beta, .. } => {
                let mut out = Vec::with_capacity(n_max + 1);
                out.push(0.0);
                let mut acc = CompensatedSum::new();
                for j in 0..n_max as u64 {
                    let n = j + 1;
                    if n <= DIRECT_PRODUCT_LIMIT {
                        acc.add((-alpha / (alpha + beta + j as f64)).ln_1p());
                        out.push(-acc.value().exp_m1());
                    } else {
                        out.push(self.char_exponent(n));
                    }
                }
                out
            }
            _ => (0..=n_max as u64).map(|n| self.char_exponent(n)).collect(),
        }
    }

    /// ω[0, x].
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        match &self.kind {
            MeasureKind::Discrete(atoms) => {
                atoms.iter().filter(|a| a.x <= x).map(|a| a.weight).sum()
            }
            MeasureKind::Beta { alpha, beta, .. } => beta_reg(*alpha, *beta, x),
            MeasureKind::Tabulated(t) => t.cdf(x),
        }
    }

    /// Ω[0, z] = ω[0, 1 - e^(-z)].
    pub fn levy_cdf(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            MeasureKind::Discrete(atoms) => {
                atoms.iter().filter(|a| a.phi <= z).map(|a| a.weight).sum()
            }
            MeasureKind::Beta { alpha, beta, .. } => {
                let x = -(-z).exp_m1();
                if x < 0.5 {
                    beta_reg(*alpha, *beta, x)
                } else {
                    1.0 - beta_reg(*beta, *alpha, (-z).exp())
                }
            }
            MeasureKind::Tabulated(t) => 1.0 - t.survival_complement((-z).exp()),
        }
    }

    /// Ω(z, ∞), computed without cancellation in the upper tail.
    pub fn levy_survival(&self, z: f64) -> f64 {
        if z < 0.0 {
            return 1.0;
        }
        match &self.kind {
            MeasureKind::Discrete(atoms) => {
                atoms.iter().filter(|a| a.phi > z).map(|a| a.weight).sum()
            }
            MeasureKind::Beta { alpha, beta, .. } => {
                let t = (-z).exp();
                if t < 0.5 {
                    beta_reg(*beta, *alpha, t)
                } else {
                    1.0 - beta_reg(*alpha, *beta, -(-z).exp_m1())
                }
            }
            MeasureKind::Tabulated(t) => t.survival_complement((-z).exp()),
        }
    }

    /// ∫ f(x, 1-x) ω(dx). The integrand receives both `x` and `1 - x` so it
    /// never has to recompute the complement near either endpoint.
    pub fn integrate<F: FnMut(f64, f64) -> f64>(&self, mut f: F) -> Result<f64> {
        match &self.kind {
            MeasureKind::Discrete(atoms) => {
                let mut acc = CompensatedSum::new();
                for a in atoms {
                    acc.add(a.weight * f(a.x, a.one_minus_x));
                }
                Ok(acc.value())
            }
            MeasureKind::Beta {
                alpha,
                beta,
                ln_norm,
            } => {
                let (a, b) = (*alpha, *beta);
                let tol = self.tolerance();
                // x = u^(1/a) on the left half, 1 - x = v^(1/b) on the right,
                // which absorbs the power singularities of the density.
                let left = integrate(
                    |u: f64| {
                        if u <= 0.0 {
                            return 0.0;
                        }
                        let x = u.powf(1.0 / a);
                        let y = 1.0 - x;
                        f(x, y) * ((b - 1.0) * (-x).ln_1p() - ln_norm).exp() / a
                    },
                    0.0,
                    0.5f64.powf(a),
                    tol,
                )?;
                let right = integrate(
                    |v: f64| {
                        if v <= 0.0 {
                            return 0.0;
                        }
                        let y = v.powf(1.0 / b);
                        let x = 1.0 - y;
                        f(x, y) * ((a - 1.0) * (-y).ln_1p() - ln_norm).exp() / b
                    },
                    0.0,
                    0.5f64.powf(b),
                    tol,
                )?;
                Ok(left.value + right.value)
            }
            MeasureKind::Tabulated(t) => {
                let e =
                    integrate_pieces(|x| f(x, 1.0 - x) * t.density(x), t.grid(), self.tolerance())?;
                Ok(e.value)
            }
        }
    }

    /// ∫ Σ_{j>n} x^j / j ω(dx).
    pub fn log_series_tail(&self, n: u64) -> Result<f64> {
        match &self.kind {
            MeasureKind::Discrete(atoms) => {
                let mut acc = CompensatedSum::new();
                for a in atoms {
                    acc.add(a.weight * series_tail(a.x, a.phi, n));
                }
                Ok(acc.value())
            }
            _ => {
                // ∫₀^∞ (1 - e^{-z})^n Ω(z, ∞) dz, split at the bulk of the
                // first factor.
                let nf = n as f64;
                let g = |z: f64| {
                    if z <= 0.0 {
                        return 0.0;
                    }
                    let s = self.levy_survival(z);
                    if s == 0.0 {
                        return 0.0;
                    }
                    (nf * (-(-z).exp_m1()).ln()).exp() * s
                };
                let knee = (nf + 1.0).ln().max(1.0);
                let tol = self.tolerance();
                let head = integrate_pieces(g, &[0.0, 0.5 * knee, knee, 2.0 * knee], tol)?;
                let tail = integrate_to_infinity(g, 2.0 * knee, tol)?;
                Ok(head.value + tail.value)
            }
        }
    }

    pub fn log_moments(&self) -> Result<MomentFunctionals> {
        Ok(match &self.kind {
            MeasureKind::Discrete(atoms) => {
                let mu = crate::special::compensated_sum(atoms.iter().map(|a| a.weight * a.phi));
                let nu =
                    crate::special::compensated_sum(atoms.iter().map(|a| a.weight * a.phi * a.phi));
                let lambda =
                    crate::special::compensated_sum(atoms.iter().map(|a| a.weight * a.x.ln()));
                let sigma2 = crate::special::compensated_sum(
                    atoms.iter().map(|a| a.weight * (a.phi - mu).powi(2)),
                );
                MomentFunctionals {
                    mu,
                    nu,
                    lambda,
                    sigma2,
                }
            }
            MeasureKind::Beta { alpha, beta, .. } => {
                let (a, b) = (*alpha, *beta);
                let mu = digamma(a + b) - digamma(b);
                let sigma2 = trigamma(b) - trigamma(a + b);
                MomentFunctionals {
                    mu,
                    nu: sigma2 + mu * mu,
                    lambda: digamma(a) - digamma(a + b),
                    sigma2,
                }
            }
            MeasureKind::Tabulated(t) => {
                let (mu, nu, lambda) = t.log_moments();
                MomentFunctionals {
                    mu,
                    nu,
                    lambda,
                    sigma2: (nu - mu * mu).max(0.0),
                }
            }
        })
    }

    /// Decides whether Ω sits on a lattice `span · ℤ`.
    pub fn detect_lattice(&self, tol: f64) -> LatticeReport {
        let atoms = match &self.kind {
            MeasureKind::Discrete(a) => a,
            _ => {
                return LatticeReport {
                    is_lattice: false,
                    span: None,
                }
            }
        };
        let base = atoms.iter().map(|a| a.phi).fold(f64::INFINITY, f64::min);
        let mut lcm: u64 = 1;
        let mut fractions = Vec::with_capacity(atoms.len());
        for a in atoms {
            match rational_approximation(a.phi / base, tol, LATTICE_MAX_DENOMINATOR) {
                Some((p, q)) => {
                    lcm = lcm / gcd(lcm, q) * q;
                    if lcm > LATTICE_MAX_DENOMINATOR {
                        return LatticeReport {
                            is_lattice: false,
                            span: None,
                        };
                    }
                    fractions.push((p, q));
                }
                None => {
                    return LatticeReport {
                        is_lattice: false,
                        span: None,
                    }
                }
            }
        }
        // Each image is (p/q)·base = (p·lcm/q)·(base/lcm); divide out any
        // common factor of the integer multiples.
        let g = fractions
            .iter()
            .fold(lcm, |g, &(p, q)| gcd(g, p * (lcm / q)));
        LatticeReport {
            is_lattice: true,
            span: Some(base * g as f64 / lcm as f64),
        }
    }

    pub fn is_lattice(&self) -> bool {
        self.detect_lattice(DEFAULT_LATTICE_TOL).is_lattice
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Best continued-fraction convergent p/q to `r` with `|r - p/q| <= tol·r`
/// and `q <= max_q`.
fn rational_approximation(r: f64, tol: f64, max_q: u64) -> Option<(u64, u64)> {
    let (mut h0, mut h1) = (0u64, 1u64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut x = r;
    for _ in 0..64 {
        let a = x.floor();
        if a > 1e12 {
            break;
        }
        let a = a as u64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_q {
            return None;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (r - h1 as f64 / k1 as f64).abs() <= tol * r {
            return Some((h1, k1));
        }
        let frac = x - a as f64;
        if frac <= 0.0 {
            break;
        }
        x = 1.0 / frac;
    }
    if k1 > 0 && (r - h1 as f64 / k1 as f64).abs() <= tol * r {
        Some((h1, k1))
    } else {
        None
    }
}

/// Σ_{j>n} x^j / j, where `phi = -log(1-x)`.
fn series_tail(x: f64, phi: f64, n: u64) -> f64 {
    // Terms decay like x^j; when that is slow, use the complement of the
    // partial sum instead.
    let decay = -x.ln();
    if decay * 2000.0 < 40.0 {
        let mut partial = CompensatedSum::new();
        let mut p = 1.0;
        for j in 1..=n {
            p *= x;
            partial.add(p / j as f64);
        }
        return (phi - partial.value()).max(0.0);
    }
    let mut acc = CompensatedSum::new();
    let mut p = (n as f64 * x.ln()).exp();
    let mut j = n + 1;
    loop {
        p *= x;
        let term = p / j as f64;
        acc.add(term);
        if term < 1e-18 * acc.value().max(1e-300) || p == 0.0 {
            break;
        }
        j += 1;
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn two_atom() -> StickBreakingMeasure {
        StickBreakingMeasure::discrete(&[(0.3, 0.5), (0.7, 0.5)], false).unwrap()
    }

    fn ramp() -> StickBreakingMeasure {
        let t = TabulatedDensity::new(vec![0.0, 0.3, 0.6, 1.0], vec![2.0, 0.5, 1.5, 0.2]).unwrap();
        StickBreakingMeasure::tabulated(t, "ramp")
    }

    fn zoo() -> Vec<StickBreakingMeasure> {
        vec![
            StickBreakingMeasure::uniform(),
            StickBreakingMeasure::beta(1.0, 2.0).unwrap(),
            StickBreakingMeasure::beta(0.4, 0.7).unwrap(),
            StickBreakingMeasure::beta(3.0, 1.5).unwrap(),
            two_atom(),
            StickBreakingMeasure::discrete(&[(0.5, 1.0)], false).unwrap(),
            ramp(),
        ]
    }

    #[test]
    fn construction_examples() {
        let u = StickBreakingMeasure::parse("beta:1,1", MeasureOptions::default()).unwrap();
        assert_eq!(u, StickBreakingMeasure::uniform());
        let coin = StickBreakingMeasure::parse("atoms:0.5:1", MeasureOptions::default()).unwrap();
        assert_eq!(coin.atoms().unwrap().len(), 1);
        let bad = StickBreakingMeasure::parse("atoms:0.3:0.6,0.8:0.5", MeasureOptions::default());
        assert!(matches!(bad, Err(SieveError::InvalidMeasure(_))));
        let opts = MeasureOptions {
            normalize: true,
            ..MeasureOptions::default()
        };
        let fixed = StickBreakingMeasure::parse("atoms:0.3:0.6,0.8:0.5", opts).unwrap();
        assert_relative_eq!(
            fixed.atoms().unwrap()[0].weight,
            0.6 / 1.1,
            max_relative = 1e-15
        );
        assert!(StickBreakingMeasure::discrete(&[(0.3, 0.5), (0.3, 0.5)], false).is_err());
    }

    #[test]
    fn binomial_moment_examples() {
        let u = StickBreakingMeasure::uniform();
        assert_relative_eq!(u.binomial_moment(3, 2).unwrap(), 0.25, max_relative = 1e-14);
        let coin = StickBreakingMeasure::discrete(&[(0.5, 1.0)], false).unwrap();
        assert_relative_eq!(
            coin.binomial_moment(2, 1).unwrap(),
            0.5,
            max_relative = 1e-14
        );
        assert!(u.binomial_moment(3, 4).is_err());
    }

    #[test]
    fn rows_have_unit_mass_and_match_pointwise() {
        let mut row = Vec::new();
        for mu in zoo() {
            for n in [1usize, 2, 5, 17, 60, 200] {
                mu.binomial_moment_row(n, &mut row);
                let total = crate::special::compensated_sum(row.iter().copied());
                assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
                let pointwise: f64 = crate::special::compensated_sum(
                    (0..=n).map(|m| mu.binomial_moment(n, m).unwrap()),
                );
                assert_abs_diff_eq!(pointwise, 1.0, epsilon = 1e-12);
                for m in [0, n / 2, n] {
                    assert_abs_diff_eq!(row[m], mu.binomial_moment(n, m).unwrap(), epsilon = 1e-13);
                }
                let w_tail = crate::special::compensated_sum(row[1..].iter().copied());
                assert_abs_diff_eq!(mu.char_exponent(n as u64), w_tail, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn char_exponent_examples() {
        let u = StickBreakingMeasure::uniform();
        assert_relative_eq!(u.char_exponent(3), 0.75, max_relative = 1e-15);
        let coin = StickBreakingMeasure::discrete(&[(0.5, 1.0)], false).unwrap();
        assert_relative_eq!(coin.char_exponent(2), 0.75, max_relative = 1e-15);
        for n in [10u64, 10_000, 10_001, 1_000_000] {
            assert_relative_eq!(
                u.char_exponent(n),
                1.0 - 1.0 / (n as f64 + 1.0),
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn char_exponent_is_monotone() {
        for mu in zoo() {
            let table = mu.char_exponent_table(10_000);
            for w in table.windows(2) {
                assert!(w[1] >= w[0], "{}", mu.descriptor());
            }
            assert!(table[10_000] <= 1.0);
            assert_eq!(table[37], mu.char_exponent(37));
        }
    }

    #[test]
    fn beta_complement_moment_is_continuous_across_the_switch() {
        let m = StickBreakingMeasure::beta(0.4, 0.7).unwrap();
        let a = m.ln_complement_moment(DIRECT_PRODUCT_LIMIT);
        let b = m.ln_complement_moment(DIRECT_PRODUCT_LIMIT + 1);
        let step = (-0.4f64 / (1.1 + DIRECT_PRODUCT_LIMIT as f64)).ln_1p();
        assert_abs_diff_eq!(b - a, step, epsilon = 1e-10);
    }

    #[test]
    fn log_moment_examples() {
        let m = StickBreakingMeasure::uniform().log_moments().unwrap();
        assert_abs_diff_eq!(m.mu, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.nu, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.sigma2, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.lambda, -1.0, epsilon = 1e-14);
        let m = StickBreakingMeasure::beta(1.0, 2.0)
            .unwrap()
            .log_moments()
            .unwrap();
        assert_abs_diff_eq!(m.mu, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(m.nu, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(m.sigma2, 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(m.lambda, -1.5, epsilon = 1e-14);
        let m = StickBreakingMeasure::discrete(&[(0.5, 1.0)], false)
            .unwrap()
            .log_moments()
            .unwrap();
        let l2 = std::f64::consts::LN_2;
        assert_abs_diff_eq!(m.mu, l2, epsilon = 1e-15);
        assert_abs_diff_eq!(m.nu, l2 * l2, epsilon = 1e-15);
        assert_eq!(m.sigma2, 0.0);
    }

    #[test]
    fn log_moments_match_quadrature() {
        for mu in zoo() {
            let m = mu.log_moments().unwrap();
            let qmu = mu
                .integrate(|x, y| if x < 0.5 { -(-x).ln_1p() } else { -y.ln() })
                .unwrap();
            let qnu = mu
                .integrate(|x, y| {
                    if x < 0.5 {
                        (-x).ln_1p().powi(2)
                    } else {
                        y.ln().powi(2)
                    }
                })
                .unwrap();
            let qla = mu
                .integrate(|x, y| if x < 0.5 { x.ln() } else { (-y).ln_1p() })
                .unwrap();
            let one = mu.integrate(|_, _| 1.0).unwrap();
            assert_abs_diff_eq!(one, 1.0, epsilon = 1e-10);
            assert_relative_eq!(m.mu, qmu, max_relative = 1e-9);
            assert_relative_eq!(m.nu, qnu, max_relative = 1e-9);
            assert_relative_eq!(m.lambda, qla, max_relative = 1e-9);
            assert!(m.nu >= m.mu * m.mu * (1.0 - 1e-14));
            assert!(m.lambda <= 0.0);
        }
    }

    proptest! {
        #[test]
        fn beta_one_theta_closed_forms(theta in 0.05f64..50.0) {
            let m = StickBreakingMeasure::beta(1.0, theta).unwrap().log_moments().unwrap();
            prop_assert!((m.mu - 1.0 / theta).abs() <= 1e-10 * (1.0 / theta).max(1.0));
            prop_assert!((m.nu - 2.0 / (theta * theta)).abs() <= 1e-10 * (2.0 / (theta * theta)).max(1.0));
        }

        #[test]
        fn levy_cdf_matches_substitution(i in 1usize..=100) {
            let z = i as f64 * 0.08;
            for mu in zoo() {
                let direct = mu.cdf(-(-z).exp_m1());
                prop_assert!((mu.levy_cdf(z) - direct).abs() < 1e-12);
                prop_assert!((mu.levy_cdf(z) + mu.levy_survival(z) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn levy_cdf_examples() {
        let coin = StickBreakingMeasure::discrete(&[(0.5, 1.0)], false).unwrap();
        let l2 = std::f64::consts::LN_2;
        assert_eq!(coin.levy_cdf(l2 + 1e-12), 1.0);
        assert_eq!(coin.levy_cdf(l2 - 1e-12), 0.0);
        let u = StickBreakingMeasure::uniform();
        for z in [0.1, 1.0, 5.0, 30.0] {
            assert_relative_eq!(u.levy_cdf(z), -(-z).exp_m1(), max_relative = 1e-13);
            assert_relative_eq!(u.levy_survival(z), (-z).exp(), max_relative = 1e-12);
        }
        for mu in zoo() {
            assert_eq!(mu.levy_cdf(0.0), 0.0);
            assert_abs_diff_eq!(mu.levy_cdf(800.0), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn lattice_examples() {
        let coin = StickBreakingMeasure::discrete(&[(0.5, 1.0)], false).unwrap();
        let r = coin.detect_lattice(DEFAULT_LATTICE_TOL);
        assert!(r.is_lattice);
        assert_relative_eq!(
            r.span.unwrap(),
            std::f64::consts::LN_2,
            max_relative = 1e-15
        );
        assert!(!StickBreakingMeasure::beta(1.0, 2.0).unwrap().is_lattice());
        let e = std::f64::consts::E;
        let pair = StickBreakingMeasure::discrete(
            &[(1.0 - 1.0 / e, 0.5), (1.0 - 1.0 / (e * e), 0.5)],
            false,
        )
        .unwrap();
        let r = pair.detect_lattice(DEFAULT_LATTICE_TOL);
        assert!(r.is_lattice);
        assert_relative_eq!(r.span.unwrap(), 1.0, max_relative = 1e-12);
        // φ-images 2s and 3s share span s.
        let s = 0.4f64;
        let thirds = StickBreakingMeasure::discrete(
            &[(-(-2.0 * s).exp_m1(), 0.5), (-(-3.0 * s).exp_m1(), 0.5)],
            false,
        )
        .unwrap();
        assert_relative_eq!(
            thirds.detect_lattice(1e-9).span.unwrap(),
            s,
            max_relative = 1e-12
        );
        assert!(!two_atom().is_lattice());
        assert!(!ramp().is_lattice());
    }

    #[test]
    fn log_series_tail_matches_closed_form() {
        // For Beta(1,2): ∫ Σ_{j>n} x^j/j ω(dx) = 1/((n+1)(n+2)).
        let m = StickBreakingMeasure::beta(1.0, 2.0).unwrap();
        for n in [0u64, 1, 5, 100, 2000] {
            let exact = 1.0 / ((n as f64 + 1.0) * (n as f64 + 2.0));
            assert_relative_eq!(m.log_series_tail(n).unwrap(), exact, max_relative = 1e-8);
        }
        let coin = StickBreakingMeasure::discrete(&[(0.5, 1.0)], false).unwrap();
        assert_relative_eq!(
            coin.log_series_tail(0).unwrap(),
            std::f64::consts::LN_2,
            max_relative = 1e-14
        );
        let direct: f64 = (4..200).map(|j| 0.5f64.powi(j) / j as f64).sum();
        assert_relative_eq!(
            coin.log_series_tail(3).unwrap(),
            direct,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            series_tail(0.9999, -(1e-4f64).ln(), 10),
            -(1e-4f64).ln() - (1..=10).map(|j| 0.9999f64.powi(j) / j as f64).sum::<f64>(),
            max_relative = 1e-10
        );
    }
}
