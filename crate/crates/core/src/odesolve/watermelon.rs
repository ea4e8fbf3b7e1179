//! Watermelon sector probabilities from the kernel of `D_{n+1}`.
//!
//! On `θ ∈ (0, π)` the operator lives on the negative axis `s = -cot²(θ/2)`;
//! `θ → π` is `s → 0⁻` and `θ → 0` is `s → -∞`. Solutions are integrated in
//! `x = ln(-s)` and continued to both ends by Frobenius branches, whose
//! exponent-0 coefficient is the endpoint limit.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::frobenius::{frobenius_series, local_exponents, FrobeniusSolution};
use super::operator::{integrate_log, ExpansionPoint, NumericOde};
use super::OdeError;
use crate::arith::{Rational, RationalFunction};
use crate::bpz::compile_d;

pub const DEFAULT_GRID: usize = 63;

const SERIES_ORDER: usize = 96;
const TOL: f64 = 1e-12;
const MAX_CONDITION: f64 = 1e8;

/// `θ_j = (π/2)(1 - cos((2j-1)π/(2m)))`, `j = 1..m`; symmetric under `θ ↦ π - θ`.
pub fn chebyshev_theta_grid(m: usize) -> Vec<f64> {
    (1..=m).map(|j| 0.5 * PI * (1.0 - ((2 * j - 1) as f64 * PI / (2 * m) as f64).cos())).collect()
}

pub fn s_of_theta(theta: f64) -> f64 {
    let c = (0.5 * theta).tan().recip();
    -c * c
}

fn x_of_theta(theta: f64) -> f64 {
    2.0 * ((0.5 * theta).cos().ln() - (0.5 * theta).sin().ln())
}

/// Branches at one end and the change of basis to the normalized system.
#[derive(Debug, Clone)]
struct EndExpansion {
    branches: Vec<FrobeniusSolution>,
    /// `φ_j = Σ_i to_phi[(i, j)] ψ_i`.
    to_phi: DMatrix<f64>,
    constant: usize,
    /// The series are used for `|x| ≤ radius` in the local variable.
    radius: f64,
}

fn tail_is_negligible(a: &[f64], radius: f64) -> bool {
    let terms: Vec<f64> = a.iter().scan(1.0, |p, c| {
        let t = c.abs() * *p;
        *p *= radius;
        Some(t)
    }).collect();
    let peak = terms.iter().copied().fold(0.0, f64::max);
    terms[terms.len() - 2..].iter().all(|t| *t <= 1e-17 * peak)
}

impl EndExpansion {
    fn build(ode: &crate::bpz::OdeOperator, num: &NumericOde, point: ExpansionPoint) -> Result<Self, OdeError> {
        let order = num.order();
        let exps = local_exponents(ode, &point)?;
        if exps.len() != order {
            return Err(OdeError::InvalidInput(format!(
                "expected {order} real exponents at {point}, found {}",
                exps.len()
            )));
        }
        if let Some(e) = exps.iter().find(|e| e.value < -1e-9) {
            return Err(OdeError::InvalidInput(format!("unbounded branch with exponent {} at {point}", e.value)));
        }
        for w in exps.windows(2) {
            if (w[0].value - w[1].value).abs() < 1e-9 {
                return Err(OdeError::InvalidInput(format!("repeated exponent {} at {point}", w[0].value)));
            }
        }
        let constant = exps.iter().position(|e| e.value.abs() < 1e-9).ok_or_else(|| {
            OdeError::InvalidInput(format!("constants are not a branch at {point}"))
        })?;
        let branches: Vec<FrobeniusSolution> = exps
            .iter()
            .map(|e| frobenius_series(ode, &point, e.value, SERIES_ORDER))
            .collect::<Result<_, _>>()?;
        // the matching radius shrinks until every truncated series has converged
        let mut radius = 0.5f64;
        while radius > 1e-3 && !branches.iter().all(|b| tail_is_negligible(&b.coefficients, radius)) {
            radius *= 0.5;
        }
        let (s_match, x_match) = match point {
            ExpansionPoint::Infinity => (-1.0 / radius, -radius.ln()),
            ExpansionPoint::Finite(_) => (-radius, radius.ln()),
        };
        // integrating away from θ = π/2 is stable: the branches decay there
        let mut phi = DMatrix::<f64>::zeros(order, order);
        for j in 0..order {
            let mut e = vec![0.0; order];
            e[j] = 1.0;
            phi.set_column(j, &DVector::from_vec(integrate_log(num, 0.0, &e, x_match, TOL)?));
        }
        let mut psi = DMatrix::<f64>::zeros(order, order);
        let mut scale = vec![0.0; order];
        for (i, b) in branches.iter().enumerate() {
            let col = DVector::from_vec(b.theta_derivatives(s_match, order));
            scale[i] = col.norm();
            psi.set_column(i, &(col / scale[i]));
        }
        let lu = psi.clone().lu();
        let mut to_phi = lu.solve(&phi).ok_or_else(|| OdeError::IllConditioned {
            condition: f64::INFINITY,
            singular_values: psi.singular_values().iter().copied().collect(),
        })?;
        for (i, sc) in scale.iter().enumerate() {
            to_phi.row_mut(i).scale_mut(1.0 / sc);
        }
        Ok(EndExpansion { branches, to_phi, constant, radius })
    }

    fn phi(&self, s: f64) -> Vec<f64> {
        let psi: Vec<f64> = self.branches.iter().map(|b| b.value(s)).collect();
        (0..self.to_phi.ncols()).map(|j| (0..psi.len()).map(|i| self.to_phi[(i, j)] * psi[i]).sum()).collect()
    }

    fn limits(&self) -> Vec<f64> {
        self.to_phi.row(self.constant).iter().copied().collect()
    }
}

/// The kernel of `D_{n+1}` at fixed κ in the basis `φ_j` normalized by
/// `ϑ^i φ_j = δ_ij` at `θ = π/2` (so `φ_0 = 1`), with the endpoint limits
/// and the split used to impose sector boundary values.
#[derive(Debug, Clone)]
pub struct KernelBasis {
    pub n: usize,
    pub kappa: f64,
    ode: NumericOde,
    near_zero: EndExpansion,
    near_inf: EndExpansion,
    /// `lim_{θ→π} φ_j`.
    pub limit_pi: Vec<f64>,
    /// `lim_{θ→0} φ_j`.
    pub limit_zero: Vec<f64>,
    /// Coefficients of a kernel element with limit 0 at `π` and 1 at 0.
    pub step: Vec<f64>,
    /// Orthonormal coefficients spanning the kernel elements vanishing at both ends.
    pub interior: Vec<Vec<f64>>,
}

impl KernelBasis {
    pub fn new(n: u32, kappa: &Rational) -> Result<Self, OdeError> {
        if n == 0 {
            return Err(OdeError::InvalidInput("n must be at least 1".into()));
        }
        if !kappa.is_positive() || kappa > &Rational::from(4) {
            return Err(OdeError::InvalidInput(format!("kappa = {kappa} is outside (0, 4]")));
        }
        let ode = compile_d(n, &RationalFunction::constant(kappa.clone()))?;
        let num = NumericOde::new(&ode)?;
        let near_zero = EndExpansion::build(&ode, &num, ExpansionPoint::Finite(Rational::zero()))?;
        let near_inf = EndExpansion::build(&ode, &num, ExpansionPoint::Infinity)?;
        let limit_pi = near_zero.limits();
        let limit_zero = near_inf.limits();
        let order = num.order();

        let a = DMatrix::from_fn(2, order, |r, c| if r == 0 { limit_pi[c] } else { limit_zero[c] });
        let gram = &a * a.transpose();
        let gram_inv = gram.clone().try_inverse().ok_or_else(|| OdeError::IllConditioned {
            condition: f64::INFINITY,
            singular_values: gram.singular_values().iter().copied().collect(),
        })?;
        let step = a.transpose() * &gram_inv * DVector::from_vec(vec![0.0, 1.0]);
        let projector = DMatrix::<f64>::identity(order, order) - a.transpose() * &gram_inv * &a;
        let svd = projector.svd(true, false);
        let u = svd.u.expect("requested");
        let mut idx: Vec<usize> = (0..order).collect();
        idx.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let interior = idx[..order - 2]
            .iter()
            .map(|&c| {
                let mut v: Vec<f64> = u.column(c).iter().copied().collect();
                // fix the sign for reproducibility
                let pivot = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
                if pivot < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
                v
            })
            .collect();
        Ok(KernelBasis {
            n: n as usize,
            kappa: kappa.to_f64(),
            ode: num,
            near_zero,
            near_inf,
            limit_pi,
            limit_zero,
            step: step.iter().copied().collect(),
            interior,
        })
    }

    pub fn order(&self) -> usize {
        self.n + 1
    }

    /// `(φ_0(θ), …, φ_n(θ))`.
    pub fn phi(&self, theta: f64) -> Result<Vec<f64>, OdeError> {
        if !(theta > 0.0 && theta < PI) {
            return Err(OdeError::InvalidInput(format!("theta = {theta} is outside (0, pi)")));
        }
        let s = s_of_theta(theta);
        if -s <= self.near_zero.radius {
            return Ok(self.near_zero.phi(s));
        }
        if -s >= 1.0 / self.near_inf.radius {
            return Ok(self.near_inf.phi(s));
        }
        let x = x_of_theta(theta);
        let order = self.order();
        (0..order)
            .map(|j| {
                let mut e = vec![0.0; order];
                e[j] = 1.0;
                Ok(integrate_log(&self.ode, 0.0, &e, x, TOL)?[0])
            })
            .collect()
    }

    /// `Σ_j c_j φ_j(θ)`.
    pub fn eval(&self, coeffs: &[f64], theta: f64) -> Result<f64, OdeError> {
        Ok(self.phi(theta)?.iter().zip(coeffs).map(|(p, c)| p * c).sum())
    }

    /// Sector curves in the `φ` basis for weights `w[k][j]` on `interior`.
    fn components(&self, w: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let order = self.order();
        (0..=self.n)
            .map(|k| {
                let mut c = vec![0.0; order];
                if k == 0 {
                    c[0] += 1.0;
                    c.iter_mut().zip(&self.step).for_each(|(a, b)| *a -= b);
                }
                if k == self.n {
                    c.iter_mut().zip(&self.step).for_each(|(a, b)| *a += b);
                }
                for (wj, e) in w[k].iter().zip(&self.interior) {
                    c.iter_mut().zip(e).for_each(|(a, b)| *a += wj * b);
                }
                c
            })
            .collect()
    }
}

/// A Monte-Carlo estimate of `(f_0, …, f_n)` at one angle.
#[derive(Debug, Clone, PartialEq)]
pub struct McPoint {
    pub theta: f64,
    pub f_hat: Vec<f64>,
}

/// Least-squares placement of the sector curves in the kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFit {
    /// `weights[k][j]` multiplies the `j`-th interior kernel element in `f_k`.
    pub weights: Vec<Vec<f64>>,
    pub max_residual: f64,
    pub rms_residual: f64,
    pub condition: f64,
    pub singular_values: Vec<f64>,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionCurve {
    pub theta_grid: Vec<f64>,
    /// `values[i][k] = f_k(theta_grid[i])`.
    pub values: Vec<Vec<f64>>,
    pub kappa: f64,
    pub n: usize,
    pub method: String,
}

impl SolutionCurve {
    /// Unit sum within 1e-6 and values in `[-1e-6, 1 + 1e-6]`.
    pub fn check_invariants(&self) -> Result<(), String> {
        const EPS: f64 = 1e-6;
        for (t, row) in self.theta_grid.iter().zip(&self.values) {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > EPS {
                return Err(format!("sum of f_k at theta = {t} is {sum}"));
            }
            if let Some((k, v)) = row.iter().enumerate().find(|(_, v)| **v < -EPS || **v > 1.0 + EPS) {
                return Err(format!("f_{k}({t}) = {v} is not a probability"));
            }
        }
        Ok(())
    }

    /// `max |f_k(θ) - f_{n-k}(π - θ)|`, pairing grid points through the
    /// reflection; requires a symmetric grid.
    pub fn reflection_defect(&self) -> Option<f64> {
        let m = self.theta_grid.len();
        let mut worst = 0.0f64;
        for i in 0..m {
            let j = m - 1 - i;
            if (self.theta_grid[i] + self.theta_grid[j] - PI).abs() > 1e-12 {
                return None;
            }
            for k in 0..=self.n {
                worst = worst.max((self.values[i][k] - self.values[j][self.n - k]).abs());
            }
        }
        Some(worst)
    }
}

#[derive(Debug, Clone)]
pub struct WatermelonSolution {
    pub basis: KernelBasis,
    pub grid: Vec<f64>,
    /// `fundamental[i][j] = φ_j(grid[i])`.
    pub fundamental: Vec<Vec<f64>>,
    /// `f_k` in the `φ` basis, when determined.
    pub coefficients: Option<Vec<Vec<f64>>>,
    pub curve: Option<SolutionCurve>,
    pub fit: Option<KernelFit>,
}

impl WatermelonSolution {
    /// `(f_0(θ), …, f_n(θ))` off the grid.
    pub fn evaluate(&self, theta: f64) -> Result<Option<Vec<f64>>, OdeError> {
        let Some(coeffs) = &self.coefficients else { return Ok(None) };
        let phi = self.basis.phi(theta)?;
        Ok(Some(coeffs.iter().map(|c| c.iter().zip(&phi).map(|(a, b)| a * b).sum()).collect()))
    }
}

/// Builds the kernel basis of `D_{n+1}` and evaluates it on `grid`. For
/// `n = 1` the endpoint limits fix the curves; for `n ≥ 2` the sector curves
/// are fitted to `mc` (reflected data included) when it is given.
pub fn solve_watermelon(
    n: u32,
    kappa: &Rational,
    grid: &[f64],
    mc: Option<&[McPoint]>,
) -> Result<WatermelonSolution, OdeError> {
    let basis = KernelBasis::new(n, kappa)?;
    let fundamental: Vec<Vec<f64>> = grid.iter().map(|&t| basis.phi(t)).collect::<Result<_, _>>()?;
    let n = n as usize;
    let (weights, fit, method) = if n == 1 {
        (Some(vec![vec![]; 2]), None, "boundary-value")
    } else if let Some(points) = mc {
        let fit = fit_kernel(&basis, points)?;
        (Some(fit.weights.clone()), Some(fit), "kernel-fit")
    } else {
        (None, None, "fundamental-system")
    };
    let coefficients = weights.map(|w| basis.components(&w));
    let curve = coefficients.as_ref().map(|coeffs| SolutionCurve {
        theta_grid: grid.to_vec(),
        values: fundamental
            .iter()
            .map(|phi| coeffs.iter().map(|c| c.iter().zip(phi).map(|(a, b)| a * b).sum()).collect())
            .collect(),
        kappa: basis.kappa,
        n,
        method: method.to_string(),
    });
    Ok(WatermelonSolution { basis, grid: grid.to_vec(), fundamental, coefficients, curve, fit })
}

fn fit_kernel(basis: &KernelBasis, points: &[McPoint]) -> Result<KernelFit, OdeError> {
    let n = basis.n;
    let dim = basis.interior.len();
    if points.is_empty() {
        return Err(OdeError::InvalidInput("no Monte-Carlo points to fit".into()));
    }
    if let Some(p) = points.iter().find(|p| p.f_hat.len() != n + 1) {
        return Err(OdeError::InvalidInput(format!("expected {} components at theta = {}", n + 1, p.theta)));
    }
    // the reflection θ ↦ π - θ exchanges f_k and f_{n-k}
    let mut data: Vec<(f64, Vec<f64>)> = Vec::with_capacity(2 * points.len());
    for p in points {
        data.push((p.theta, p.f_hat.clone()));
        data.push((PI - p.theta, p.f_hat.iter().rev().copied().collect()));
    }
    // unknowns w[k][j] for k < n; w[n] = -Σ_k w[k] keeps the unit sum
    let cols = n * dim;
    let rows = data.len() * (n + 1);
    let mut a = DMatrix::<f64>::zeros(rows, cols);
    let mut b = DVector::<f64>::zeros(rows);
    for (i, (theta, f_hat)) in data.iter().enumerate() {
        let phi = basis.phi(*theta)?;
        let dot = |c: &[f64]| c.iter().zip(&phi).map(|(a, b)| a * b).sum::<f64>();
        let h = dot(&basis.step);
        let e: Vec<f64> = basis.interior.iter().map(|v| dot(v)).collect();
        for k in 0..=n {
            let r = i * (n + 1) + k;
            let base = if k == 0 { 1.0 - h } else if k == n { h } else { 0.0 };
            b[r] = f_hat[k] - base;
            for (j, ej) in e.iter().enumerate() {
                if k < n {
                    a[(r, k * dim + j)] = *ej;
                } else {
                    for kk in 0..n {
                        a[(r, kk * dim + j)] = -ej;
                    }
                }
            }
        }
    }
    let svd = a.clone().svd(true, true);
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = smax / smin;
    if !(condition <= MAX_CONDITION) {
        return Err(OdeError::IllConditioned { condition, singular_values: sv });
    }
    let rank = sv.iter().filter(|&&s| s > smax * 1e-12).count();
    let x = svd.solve(&b, 0.0).map_err(|e| OdeError::NoConvergence(e.to_string()))?;
    let mut weights: Vec<Vec<f64>> = (0..n).map(|k| (0..dim).map(|j| x[k * dim + j]).collect()).collect();
    weights.push((0..dim).map(|j| -(0..n).map(|k| x[k * dim + j]).sum::<f64>()).collect());
    let resid = &a * &x - &b;
    let max_residual = resid.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let rms_residual = (resid.norm_squared() / rows as f64).sqrt();
    Ok(KernelFit { weights, max_residual, rms_residual, condition, singular_values: sv, rank })
}
