//! Norms and costs on coefficient spaces.
//!
//! Three layers build on each other:
//! - a symmetric monotone norm φ on the nonnegative quadrant of ℝ²,
//! - the transport cost 𝒞 on signed integer multiplicity matrices, which
//!   prices aligned and anti-aligned flow through concave powers,
//! - the lifted norm ‖t‖ = φ(‖t⁺‖_p, ‖t⁻‖_p) on ℝ^N with p = 1/α, its exact
//!   dual, and comass bounds for matrix-valued 1-covectors.
//!
//! Everywhere the convention 0^α := 0 applies (including α = 0), so all
//! costs and norms vanish at 0.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CoeffError {
    #[error("negative input ({0}) where a nonnegative value is required")]
    NegativeInput(f64),
    #[error("dimension mismatch: norm expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("parameter out of range: {0}")]
    BadParameter(String),
    #[error("exact comass enumeration infeasible for m = {0} (max 20)")]
    EnumerationTooLarge(usize),
}

/// x^α with the convention 0^α := 0 for every α, including α = 0.
pub fn pow_alpha(x: f64, alpha: f64) -> f64 {
    debug_assert!(x >= 0.0 && (0.0..=1.0).contains(&alpha));
    if x == 0.0 {
        0.0
    } else if alpha == 0.0 {
        1.0
    } else if alpha == 1.0 {
        x
    } else if alpha == 0.5 {
        x.sqrt()
    } else {
        x.powf(alpha)
    }
}

/// A symmetric monotone norm on ℝ², evaluated on the nonnegative quadrant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PhiNorm {
    L1,
    Linf,
    /// ℓ^r norm of the pair, r > 1.
    Lr(f64),
}

impl PhiNorm {
    pub fn lr(r: f64) -> Result<Self, CoeffError> {
        if r.is_finite() && r > 1.0 {
            Ok(PhiNorm::Lr(r))
        } else {
            Err(CoeffError::BadParameter(format!("LR exponent must be > 1, got {r}")))
        }
    }

    /// Norm value on the quadrant; callers guarantee x, y ≥ 0.
    pub(crate) fn eval_nn(&self, x: f64, y: f64) -> f64 {
        debug_assert!(x >= 0.0 && y >= 0.0);
        match self {
            PhiNorm::L1 => x + y,
            PhiNorm::Linf => x.max(y),
            PhiNorm::Lr(r) => {
                if x == 0.0 {
                    y
                } else if y == 0.0 {
                    x
                } else if *r == 2.0 {
                    x.hypot(y)
                } else {
                    (x.powf(*r) + y.powf(*r)).powf(1.0 / r)
                }
            }
        }
    }
}

pub fn phi_eval(phi: &PhiNorm, x: f64, y: f64) -> Result<f64, CoeffError> {
    if x < 0.0 {
        return Err(CoeffError::NegativeInput(x));
    }
    if y < 0.0 {
        return Err(CoeffError::NegativeInput(y));
    }
    Ok(phi.eval_nn(x, y))
}

/// The concavity exponent α ∈ [0, 1], with p := 1/α and conjugate q.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Alpha {
    value: f64,
}

impl Alpha {
    pub fn new(value: f64) -> Result<Self, CoeffError> {
        if (0.0..=1.0).contains(&value) {
            Ok(Alpha { value })
        } else {
            Err(CoeffError::BadParameter(format!("alpha must lie in [0,1], got {value}")))
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// p = 1/α (∞ when α = 0).
    pub fn p(&self) -> f64 {
        if self.value == 0.0 {
            f64::INFINITY
        } else {
            1.0 / self.value
        }
    }

    /// Conjugate exponent q = 1/(1 − α) (∞ when α = 1).
    pub fn q(&self) -> f64 {
        if self.value == 1.0 {
            f64::INFINITY
        } else {
            1.0 / (1.0 - self.value)
        }
    }
}

/// The pointwise norm used on coefficient vectors of a current.
#[derive(Clone, Debug, PartialEq)]
pub struct NormSpec {
    pub kind: NormKind,
    /// Coefficient dimension the norm applies to.
    pub m: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum NormKind {
    Linf,
    L1,
    PhiAlpha { phi: PhiNorm, alpha: Alpha },
}

impl NormSpec {
    pub fn linf(m: usize) -> Self {
        NormSpec { kind: NormKind::Linf, m }
    }

    pub fn l1(m: usize) -> Self {
        NormSpec { kind: NormKind::L1, m }
    }

    pub fn phi_alpha(phi: PhiNorm, alpha: Alpha, m: usize) -> Self {
        NormSpec { kind: NormKind::PhiAlpha { phi, alpha }, m }
    }

    fn check_dim(&self, got: usize) -> Result<(), CoeffError> {
        if got == self.m {
            Ok(())
        } else {
            Err(CoeffError::DimensionMismatch { expected: self.m, got })
        }
    }
}

/// Transport cost of a signed integer multiplicity matrix (entries in any
/// order): φ of the α-powers of the total aligned and anti-aligned mass.
pub fn cost_c(theta_entries: &[i64], phi: &PhiNorm, alpha: Alpha) -> f64 {
    let pos: i64 = theta_entries.iter().filter(|&&x| x > 0).sum();
    let neg: i64 = -theta_entries.iter().filter(|&&x| x < 0).sum::<i64>();
    let a = alpha.value();
    phi.eval_nn(pow_alpha(pos as f64, a), pow_alpha(neg as f64, a))
}

/// ℓ^p norm (p = 1/α) of an iterator of nonnegative parts. The final root is
/// taken as an α-power so that 0/1 vectors reproduce exact counts.
fn lp_parts<I: Iterator<Item = f64>>(parts: I, alpha: Alpha) -> f64 {
    let a = alpha.value();
    if a == 0.0 {
        // p = ∞
        parts.fold(0.0, f64::max)
    } else if a == 1.0 {
        parts.sum()
    } else {
        let p = 1.0 / a;
        let s: f64 = parts
            .map(|x| {
                if x == 0.0 {
                    0.0
                } else if p == 2.0 {
                    x * x
                } else {
                    x.powf(p)
                }
            })
            .sum();
        pow_alpha(s, a)
    }
}

/// The lifted norm ‖t‖ = φ(‖t⁺‖_p, ‖t⁻‖_p) with p = 1/α, where t⁺/t⁻ are the
/// entrywise positive/negative parts. On vectors with entries in {−1, 0, 1}
/// this equals φ(#{+1}^α, #{−1}^α) exactly.
pub fn norm_phi_alpha(t: &[f64], phi: &PhiNorm, alpha: Alpha) -> f64 {
    let a = lp_parts(t.iter().map(|&x| x.max(0.0)), alpha);
    let b = lp_parts(t.iter().map(|&x| (-x).max(0.0)), alpha);
    phi.eval_nn(a, b)
}

/// Pointwise coefficient norm dispatch.
pub fn coeff_norm(v: &[f64], spec: &NormSpec) -> Result<f64, CoeffError> {
    spec.check_dim(v.len())?;
    Ok(match &spec.kind {
        NormKind::Linf => v.iter().fold(0.0, |m, &x| m.max(x.abs())),
        NormKind::L1 => v.iter().map(|x| x.abs()).sum(),
        NormKind::PhiAlpha { phi, alpha } => norm_phi_alpha(v, phi, *alpha),
    })
}

/// ℓ^q norm of nonnegative parts, q ∈ [1, ∞].
fn lq_parts<I: Iterator<Item = f64>>(parts: I, q: f64) -> f64 {
    if q.is_infinite() {
        parts.fold(0.0, f64::max)
    } else if q == 1.0 {
        parts.sum()
    } else if q == 2.0 {
        parts.map(|x| x * x).sum::<f64>().sqrt()
    } else {
        parts.map(|x| if x == 0.0 { 0.0 } else { x.powf(q) }).sum::<f64>().powf(1.0 / q)
    }
}

/// Exact dual norm of `spec`.
///
/// For the lifted norm the closed form is
/// sup{a‖v⁺‖_q + b‖v⁻‖_q : φ(a,b) ≤ 1, a,b ≥ 0} with q conjugate to p, which
/// evaluates to max / sum / ℓ^{r'} of the pair (‖v⁺‖_q, ‖v⁻‖_q) for
/// φ = ℓ¹ / ℓ^∞ / ℓ^r respectively.
pub fn dual_norm(v: &[f64], spec: &NormSpec) -> Result<f64, CoeffError> {
    spec.check_dim(v.len())?;
    Ok(match &spec.kind {
        NormKind::Linf => v.iter().map(|x| x.abs()).sum(),
        NormKind::L1 => v.iter().fold(0.0, |m, &x| m.max(x.abs())),
        NormKind::PhiAlpha { phi, alpha } => {
            let q = alpha.q();
            let a = lq_parts(v.iter().map(|&x| x.max(0.0)), q);
            let b = lq_parts(v.iter().map(|&x| (-x).max(0.0)), q);
            match phi {
                PhiNorm::L1 => a.max(b),
                PhiNorm::Linf => a + b,
                PhiNorm::Lr(r) => {
                    let rp = r / (r - 1.0);
                    lq_parts([a, b].into_iter(), rp)
                }
            }
        }
    })
}

/// A d×m real matrix W defining the 1-covector ω(τ, θ) = τᵀ W θ; the columns
/// w_j are the duals of the coefficient directions.
#[derive(Clone, Debug, PartialEq)]
pub struct CovectorMatrix {
    /// Column-major: `cols[j]` is w_j ∈ ℝ^d.
    cols: Vec<Vec<f64>>,
    d: usize,
}

impl CovectorMatrix {
    pub fn from_columns(cols: Vec<Vec<f64>>, d: usize) -> Result<Self, CoeffError> {
        if d != 2 && d != 3 {
            return Err(CoeffError::BadParameter(format!("ambient dimension {d}")));
        }
        for c in &cols {
            if c.len() != d {
                return Err(CoeffError::DimensionMismatch { expected: d, got: c.len() });
            }
            if c.iter().any(|x| !x.is_finite()) {
                return Err(CoeffError::BadParameter("non-finite covector entry".into()));
            }
        }
        Ok(CovectorMatrix { cols, d })
    }

    /// Rows of the d×m matrix (row i = the i-th spatial component).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, CoeffError> {
        let d = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(CoeffError::BadParameter("ragged covector matrix".into()));
        }
        let cols = (0..m).map(|j| (0..d).map(|i| rows[i][j]).collect()).collect();
        CovectorMatrix::from_columns(cols, d)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.cols.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.cols[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.cols
    }

    /// The vector (⟨τ, w_j⟩)_j = Wᵀτ.
    pub fn apply(&self, tau: &[f64]) -> Vec<f64> {
        self.cols
            .iter()
            .map(|w| w.iter().zip(tau).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Upper bound on a comass together with its quality: `exact` bounds carry
/// tol = 0, sampled bounds report the certified sampling tolerance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComassBound {
    pub value: f64,
    pub exact: bool,
    pub tol: f64,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

const MAX_ENUM_COLUMNS: usize = 20;

/// Max over sign vectors s ∈ {±1}^m of |Σ_j s_j w_j|₂.
fn sign_enumeration_max(w: &CovectorMatrix) -> Result<f64, CoeffError> {
    let m = w.m();
    if m > MAX_ENUM_COLUMNS {
        return Err(CoeffError::EnumerationTooLarge(m));
    }
    if m == 0 {
        return Ok(0.0);
    }
    let mut best = 0.0_f64;
    for mask in 0u32..(1 << (m - 1)) {
        // fix s_0 = +1 by symmetry
        let mut acc = vec![0.0; w.d()];
        for (j, col) in w.columns().iter().enumerate() {
            let s = if j > 0 && mask >> (j - 1) & 1 == 1 { -1.0 } else { 1.0 };
            for (a, c) in acc.iter_mut().zip(col) {
                *a += s * c;
            }
        }
        best = best.max(norm2(&acc));
    }
    Ok(best)
}

/// Max over nonempty subsets A of |Σ_{j∈A} w_j|₂.
fn subset_enumeration_max(w: &CovectorMatrix) -> Result<f64, CoeffError> {
    let m = w.m();
    if m > MAX_ENUM_COLUMNS {
        return Err(CoeffError::EnumerationTooLarge(m));
    }
    let mut best = 0.0_f64;
    for mask in 1u32..(1u32 << m) {
        let mut acc = vec![0.0; w.d()];
        for (j, col) in w.columns().iter().enumerate() {
            if mask >> j & 1 == 1 {
                for (a, c) in acc.iter_mut().zip(col) {
                    *a += c;
                }
            }
        }
        best = best.max(norm2(&acc));
    }
    Ok(best)
}

fn max_column_norm(w: &CovectorMatrix) -> f64 {
    w.columns().iter().map(|c| norm2(c)).fold(0.0, f64::max)
}

fn max_column_difference(w: &CovectorMatrix) -> f64 {
    let mut best = 0.0_f64;
    for (j, wj) in w.columns().iter().enumerate() {
        for wk in &w.columns()[j + 1..] {
            let diff: Vec<f64> = wj.iter().zip(wk).map(|(a, b)| a - b).collect();
            best = best.max(norm2(&diff));
        }
    }
    best
}

/// Comass of the 1-covector W under `spec`: sup over unit τ of ‖Wᵀτ‖*.
///
/// Exact closed forms (tol = 0) cover the ℓ^∞ and ℓ¹ coefficient norms and
/// the lifted norm whenever its dual exponent q is 1 or ∞ with φ ∈ {ℓ¹, ℓ^∞};
/// all exact forms enumerate signs or subsets and require m ≤ 20. The
/// remaining lifted cases are bounded by certified dense sampling of the unit
/// sphere: the returned `tol` is the Lipschitz sampling error, so the true
/// comass lies in [value, value + tol].
pub fn comass(w: &CovectorMatrix, spec: &NormSpec, tol: f64) -> Result<ComassBound, CoeffError> {
    spec.check_dim(w.m())?;
    let exact = |value: f64| ComassBound { value, exact: true, tol: 0.0 };
    match &spec.kind {
        // dual of ℓ¹ is ℓ^∞: sup_τ max_j |⟨τ, w_j⟩| = max_j |w_j|₂
        NormKind::L1 => Ok(exact(max_column_norm(w))),
        // dual of ℓ^∞ is ℓ¹: sup_τ Σ_j |⟨τ, w_j⟩| = max_s |Σ_j s_j w_j|₂
        NormKind::Linf => Ok(exact(sign_enumeration_max(w)?)),
        NormKind::PhiAlpha { phi, alpha } => {
            let q = alpha.q();
            match (phi, q) {
                (PhiNorm::L1, q) if q == 1.0 => Ok(exact(subset_enumeration_max(w)?)),
                (PhiNorm::Linf, q) if q == 1.0 => Ok(exact(sign_enumeration_max(w)?)),
                (PhiNorm::L1, q) if q.is_infinite() => Ok(exact(max_column_norm(w))),
                (PhiNorm::Linf, q) if q.is_infinite() => {
                    Ok(exact(max_column_norm(w).max(max_column_difference(w))))
                }
                _ => Ok(numeric_comass(w, spec, tol)),
            }
        }
    }
}

/// Certified dense sampling of g(τ) = ‖Wᵀτ‖* over the unit sphere. g is even
/// and L-Lipschitz with L = Σ_j |w_j|₂ (since ‖·‖* ≤ ‖·‖₁ entrywise for all
/// specs in use), which converts sample spacing into a value tolerance.
fn numeric_comass(w: &CovectorMatrix, spec: &NormSpec, tol: f64) -> ComassBound {
    let lip: f64 = w.columns().iter().map(|c| norm2(c)).sum();
    if lip == 0.0 {
        return ComassBound { value: 0.0, exact: true, tol: 0.0 };
    }
    let target = tol.max(1e-9);
    let g = |tau: &[f64]| dual_norm(&w.apply(tau), spec).expect("dimension checked");
    if w.d() == 2 {
        let k = ((std::f64::consts::PI * lip / (2.0 * target)).ceil() as usize)
            .clamp(4096, 1 << 21);
        let h = std::f64::consts::PI / k as f64;
        let mut best = (0usize, f64::NEG_INFINITY);
        for i in 0..k {
            let th = i as f64 * h;
            let v = g(&[th.cos(), th.sin()]);
            if v > best.1 {
                best = (i, v);
            }
        }
        // golden-section polish inside the winning bracket (raises value only)
        let (mut lo, mut hi) = (best.0 as f64 * h - h, best.0 as f64 * h + h);
        let inv_phi = 0.618_033_988_749_894_9_f64;
        let eval = |th: f64| g(&[th.cos(), th.sin()]);
        for _ in 0..80 {
            let m1 = hi - (hi - lo) * inv_phi;
            let m2 = lo + (hi - lo) * inv_phi;
            if eval(m1) < eval(m2) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        let value = best.1.max(eval(0.5 * (lo + hi)));
        ComassBound { value, exact: false, tol: lip * h / 2.0 }
    } else {
        // Fibonacci sphere stream with spacing ≈ 3.5/√M, then local polish
        let m_pts = (((3.5 * lip) / (2.0 * target)).powi(2).ceil() as usize).clamp(4096, 20_000_000);
        let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
        let mut best = (vec![0.0; 3], f64::NEG_INFINITY);
        for i in 0..m_pts {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / m_pts as f64;
            let r = (1.0 - z * z).sqrt();
            let th = golden * i as f64;
            let tau = [r * th.cos(), r * th.sin(), z];
            let v = g(&tau);
            if v > best.1 {
                best = (tau.to_vec(), v);
            }
        }
        let spacing = 3.5 / (m_pts as f64).sqrt();
        // hill polish on shrinking tangent grids
        let mut center = best.0.clone();
        let mut radius = spacing;
        let mut value = best.1;
        for _ in 0..40 {
            let (u, v_axis) = tangent_basis(&center);
            let mut improved = false;
            for a in -2i32..=2 {
                for b in -2i32..=2 {
                    let cand: Vec<f64> = (0..3)
                        .map(|i| center[i] + radius * (a as f64 * u[i] + b as f64 * v_axis[i]) / 2.0)
                        .collect();
                    let n = norm2(&cand);
                    let cand: Vec<f64> = cand.iter().map(|x| x / n).collect();
                    let val = g(&cand);
                    if val > value {
                        value = val;
                        center = cand;
                        improved = true;
                    }
                }
            }
            if !improved {
                radius *= 0.5;
            }
            if radius < 1e-12 {
                break;
            }
        }
        ComassBound { value, exact: false, tol: lip * spacing / 2.0 }
    }
}

fn tangent_basis(n: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let pick = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let mut u = [
        n[1] * pick[2] - n[2] * pick[1],
        n[2] * pick[0] - n[0] * pick[2],
        n[0] * pick[1] - n[1] * pick[0],
    ];
    let nu = norm2(&u);
    for x in &mut u {
        *x /= nu;
    }
    let v = [
        n[1] * u[2] - n[2] * u[1],
        n[2] * u[0] - n[0] * u[2],
        n[0] * u[1] - n[1] * u[0],
    ];
    (u.to_vec(), v.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn half() -> Alpha {
        Alpha::new(0.5).unwrap()
    }

    fn one() -> Alpha {
        Alpha::new(1.0).unwrap()
    }

    #[test]
    fn phi_eval_known_values() {
        assert_eq!(phi_eval(&PhiNorm::L1, 1.0, 1.0).unwrap(), 2.0);
        assert_eq!(phi_eval(&PhiNorm::Linf, 2.0, 3.0).unwrap(), 3.0);
        assert_eq!(phi_eval(&PhiNorm::lr(2.0).unwrap(), 3.0, 4.0).unwrap(), 5.0);
    }

    #[test]
    fn phi_eval_rejects_negative_arguments() {
        assert_eq!(
            phi_eval(&PhiNorm::L1, -1.0, 0.0).unwrap_err(),
            CoeffError::NegativeInput(-1.0)
        );
    }

    #[test]
    fn phi_lr_requires_exponent_above_one() {
        assert!(PhiNorm::lr(1.0).is_err());
        assert!(PhiNorm::lr(f64::INFINITY).is_err());
        assert!(PhiNorm::lr(1.5).is_ok());
    }

    #[test]
    fn cost_of_single_unit_entry_is_phi_1_0() {
        // θ = E_12 inside a 2×2 matrix, α = 1
        let theta = [0, 1, 0, 0];
        for phi in [PhiNorm::L1, PhiNorm::Linf, PhiNorm::lr(3.0).unwrap()] {
            assert_eq!(cost_c(&theta, &phi, one()), 1.0);
        }
    }

    #[test]
    fn cost_of_mixed_multiplicities_l1_half() {
        // θ = 2E_12 − E_21: aligned mass 2, anti-aligned 1
        let theta = [0, 2, -1, 0];
        let got = cost_c(&theta, &PhiNorm::L1, half());
        assert!((got - (2.0_f64.sqrt() + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn cost_of_opposite_units_under_linf_is_one() {
        let theta = [0, 1, -1, 0];
        for a in [0.0, 0.25, 0.5, 1.0] {
            assert_eq!(cost_c(&theta, &PhiNorm::Linf, Alpha::new(a).unwrap()), 1.0);
        }
    }

    #[test]
    fn cost_is_even_and_vanishes_at_zero() {
        let theta = [0, 3, -2, 0];
        let neg: Vec<i64> = theta.iter().map(|x| -x).collect();
        assert_eq!(
            cost_c(&theta, &PhiNorm::L1, half()),
            cost_c(&neg, &PhiNorm::L1, half())
        );
        assert_eq!(cost_c(&[0, 0, 0, 0], &PhiNorm::L1, half()), 0.0);
    }

    #[test]
    fn lifted_norm_counting_example() {
        let t = [1.0, 1.0, -1.0, 0.0];
        let got = norm_phi_alpha(&t, &PhiNorm::L1, half());
        assert_eq!(got, 2.0_f64.sqrt() + 1.0);
    }

    #[test]
    fn lifted_norm_of_zero_is_zero() {
        assert_eq!(norm_phi_alpha(&[0.0; 5], &PhiNorm::L1, half()), 0.0);
        assert_eq!(norm_phi_alpha(&[], &PhiNorm::Linf, Alpha::new(0.0).unwrap()), 0.0);
    }

    #[test]
    fn lifted_norm_with_alpha_one_uses_l1_parts() {
        let got = norm_phi_alpha(&[2.0, -1.0], &PhiNorm::Linf, one());
        assert_eq!(got, 2.0);
    }

    fn count_identity_holds(t: &[f64], phi: &PhiNorm, alpha: Alpha) -> bool {
        let plus = t.iter().filter(|&&x| x == 1.0).count() as f64;
        let minus = t.iter().filter(|&&x| x == -1.0).count() as f64;
        let expect = phi.eval_nn(pow_alpha(plus, alpha.value()), pow_alpha(minus, alpha.value()));
        norm_phi_alpha(t, phi, alpha) == expect
    }

    proptest! {
        #[test]
        fn counting_identity_is_exact_on_sign_vectors(
            entries in proptest::collection::vec(-1i8..=1, 1..12),
            phi_pick in 0usize..4,
            alpha_pick in 0usize..4,
        ) {
            let t: Vec<f64> = entries.iter().map(|&e| e as f64).collect();
            let phi = match phi_pick {
                0 => PhiNorm::L1,
                1 => PhiNorm::Linf,
                2 => PhiNorm::lr(1.7).unwrap(),
                _ => PhiNorm::lr(3.0).unwrap(),
            };
            let alpha = Alpha::new([0.0, 1.0 / 3.0, 0.5, 1.0][alpha_pick]).unwrap();
            prop_assert!(count_identity_holds(&t, &phi, alpha));
        }

        #[test]
        fn cost_matches_lifted_norm_on_expanded_vectors(
            pos in 0i64..6,
            neg in 0i64..6,
            alpha_pick in 0usize..4,
            phi_pick in 0usize..3,
        ) {
            // θ with aligned sum `pos` and anti-aligned sum `neg`, expanded into
            // a 0/±1 vector with `pos` ones and `neg` minus-ones
            let theta = [0, pos, -neg, 0];
            let mut t = vec![1.0; pos as usize];
            t.extend(std::iter::repeat(-1.0).take(neg as usize));
            t.push(0.0);
            let phi = match phi_pick {
                0 => PhiNorm::L1,
                1 => PhiNorm::Linf,
                _ => PhiNorm::lr(2.0).unwrap(),
            };
            let alpha = Alpha::new([0.0, 1.0 / 3.0, 0.5, 1.0][alpha_pick]).unwrap();
            prop_assert_eq!(cost_c(&theta, &phi, alpha), norm_phi_alpha(&t, &phi, alpha));
        }

        #[test]
        fn norms_are_homogeneous_and_subadditive(
            v in proptest::collection::vec(-5.0f64..5.0, 3),
            w in proptest::collection::vec(-5.0f64..5.0, 3),
            scale in -4.0f64..4.0,
            kind in 0usize..4,
        ) {
            let spec = match kind {
                0 => NormSpec::linf(3),
                1 => NormSpec::l1(3),
                2 => NormSpec::phi_alpha(PhiNorm::L1, half(), 3),
                _ => NormSpec::phi_alpha(PhiNorm::lr(2.0).unwrap(), Alpha::new(1.0/3.0).unwrap(), 3),
            };
            let n = |x: &[f64]| coeff_norm(x, &spec).unwrap();
            let scaled: Vec<f64> = v.iter().map(|x| x * scale).collect();
            prop_assert!((n(&scaled) - scale.abs() * n(&v)).abs() < 1e-12 * (1.0 + n(&v)));
            let sum: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a + b).collect();
            prop_assert!(n(&sum) <= n(&v) + n(&w) + 1e-12);
        }

        #[test]
        fn dual_pairing_bound_holds(
            v in proptest::collection::vec(-5.0f64..5.0, 4),
            t in proptest::collection::vec(-5.0f64..5.0, 4),
            kind in 0usize..4,
        ) {
            let spec = match kind {
                0 => NormSpec::linf(4),
                1 => NormSpec::l1(4),
                2 => NormSpec::phi_alpha(PhiNorm::L1, one(), 4),
                _ => NormSpec::phi_alpha(PhiNorm::Linf, half(), 4),
            };
            let pair: f64 = v.iter().zip(&t).map(|(a, b)| a * b).sum();
            let bound = dual_norm(&v, &spec).unwrap() * coeff_norm(&t, &spec).unwrap();
            prop_assert!(pair <= bound + 1e-9 * (1.0 + bound));
        }

        #[test]
        fn linf_comass_matches_dense_sampling(
            cols in proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, 2), 1..4),
        ) {
            let m = cols.len();
            let w = CovectorMatrix::from_columns(cols, 2).unwrap();
            let spec = NormSpec::linf(m);
            let enumerated = comass(&w, &spec, 1e-9).unwrap();
            prop_assert!(enumerated.exact);
            let mut sampled = 0.0_f64;
            let k = 20001;
            for i in 0..k {
                let th = std::f64::consts::PI * i as f64 / k as f64;
                let v = w.apply(&[th.cos(), th.sin()]);
                sampled = sampled.max(v.iter().map(|x| x.abs()).sum());
            }
            prop_assert!(sampled <= enumerated.value + 1e-12);
            prop_assert!(enumerated.value - sampled < 1e-7 * (1.0 + enumerated.value));
        }
    }

    #[test]
    fn dual_norm_examples() {
        assert_eq!(dual_norm(&[1.0, -2.0, 3.0], &NormSpec::linf(3)).unwrap(), 6.0);
        let spec = NormSpec::phi_alpha(PhiNorm::L1, one(), 2);
        assert_eq!(dual_norm(&[2.0, -3.0], &spec).unwrap(), 3.0);
        assert_eq!(dual_norm(&[0.0, 0.0], &spec).unwrap(), 0.0);
    }

    /// Brute-force dual norm: sup ⟨v,t⟩ / ‖t‖ over a lattice of trial vectors.
    fn lattice_dual(v: &[f64], spec: &NormSpec, half_steps: i32, step: f64) -> f64 {
        assert_eq!(v.len(), 2);
        let mut best = 0.0_f64;
        for i in -half_steps..=half_steps {
            for j in -half_steps..=half_steps {
                let t = [i as f64 * step, j as f64 * step];
                let n = coeff_norm(&t, spec).unwrap();
                if n > 1e-12 {
                    let pair = v[0] * t[0] + v[1] * t[1];
                    best = best.max(pair / n);
                }
            }
        }
        best
    }

    #[test]
    fn dual_norm_matches_lattice_oracle_on_the_q_infinity_example() {
        let spec = NormSpec::phi_alpha(PhiNorm::L1, one(), 2);
        let v = [2.0, -3.0];
        let oracle = lattice_dual(&v, &spec, 20, 0.25);
        assert_eq!(oracle, 3.0);
        assert_eq!(dual_norm(&v, &spec).unwrap(), oracle);
    }

    #[test]
    fn comass_of_zero_matrix_is_zero() {
        let w = CovectorMatrix::from_columns(vec![vec![0.0, 0.0]; 3], 2).unwrap();
        for spec in [NormSpec::linf(3), NormSpec::phi_alpha(PhiNorm::L1, half(), 3)] {
            let b = comass(&w, &spec, 1e-6).unwrap();
            assert_eq!(b.value, 0.0);
        }
    }

    #[test]
    fn comass_of_single_unit_column_is_one() {
        let w = CovectorMatrix::from_columns(vec![vec![0.6, 0.8]], 2).unwrap();
        let b = comass(&w, &NormSpec::linf(1), 1e-9).unwrap();
        assert!(b.exact);
        assert_eq!(b.value, 1.0);
    }

    #[test]
    fn comass_of_repeated_unit_column_is_two() {
        let u = vec![0.6, 0.8];
        let w = CovectorMatrix::from_columns(vec![u.clone(), u], 2).unwrap();
        let b = comass(&w, &NormSpec::linf(2), 1e-9).unwrap();
        assert!(b.exact);
        assert!((b.value - 2.0).abs() < 1e-15);
    }

    #[test]
    fn comass_enumeration_rejects_wide_matrices() {
        let w = CovectorMatrix::from_columns(vec![vec![1.0, 0.0]; 21], 2).unwrap();
        assert_eq!(
            comass(&w, &NormSpec::linf(21), 1e-9).unwrap_err(),
            CoeffError::EnumerationTooLarge(21)
        );
    }

    #[test]
    fn numeric_comass_agrees_with_exact_branch() {
        // φ = ℓ^∞, α = 1/2 has no exact branch; cross-check the sampled
        // bound against a much finer independent sweep.
        let w = CovectorMatrix::from_columns(vec![vec![1.0, 0.2], vec![-0.3, 0.7]], 2).unwrap();
        let spec = NormSpec::phi_alpha(PhiNorm::Linf, half(), 2);
        let b = comass(&w, &spec, 1e-7).unwrap();
        assert!(!b.exact);
        let mut fine = 0.0_f64;
        for i in 0..200_000 {
            let th = std::f64::consts::PI * i as f64 / 200_000.0;
            let v = dual_norm(&w.apply(&[th.cos(), th.sin()]), &spec).unwrap();
            fine = fine.max(v);
        }
        assert!((b.value - fine).abs() <= b.tol + 1e-9);
        assert!(b.value + b.tol >= fine);
    }

    #[test]
    fn numeric_comass_3d_brackets_the_known_value() {
        // single column: comass = |w|₂ · dual-norm factor 1 for any spec
        let w = CovectorMatrix::from_columns(vec![vec![0.0, 0.6, 0.8]], 3).unwrap();
        let spec = NormSpec::phi_alpha(PhiNorm::Linf, half(), 1);
        let b = comass(&w, &spec, 1e-3).unwrap();
        assert!((b.value - 1.0).abs() <= b.tol + 1e-9);
    }
}
