// Copyright 2026 wpsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Two-qubit entanglement witnesses, eigenbranch decomposition and
//! certification.
//!
//! `W̃ = σx⊗σx − σy⊗σy` equals `2(|00⟩⟨11| + |11⟩⟨00|)` in the computational
//! basis. On the four-level atom the qubit states map as
//! `|00⟩→|1⟩, |01⟩→|2⟩, |10⟩→|3⟩, |11⟩→|4⟩`, so `W̃ = 2(σ₁₄ + σ₄₁)`.
//! The factor two is carried by the coupling constant (see the cavity
//! module), never by the witness.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{
    commutator, expectation, hermitian_eigen, pauli, trace_product, DensityMatrix, Operator, C64,
};

/// Eigenvalues closer than this are grouped into one branch.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Branch-sum and direct expectation must agree to this.
pub const BRANCH_SUM_TOL: f64 = 1e-10;
/// Commutator magnitude below which a witness counts as frozen.
pub const FROZEN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WitnessSign {
    Plus,
    Minus,
}

impl WitnessSign {
    pub fn value(self) -> f64 {
        match self {
            WitnessSign::Plus => 1.0,
            WitnessSign::Minus => -1.0,
        }
    }

    /// `Plus` for nonnegative `x`, `Minus` otherwise.
    pub fn of(x: f64) -> Self {
        if x.is_sign_negative() {
            WitnessSign::Minus
        } else {
            WitnessSign::Plus
        }
    }
}

/// Witness choice in configuration files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WitnessChoice {
    Plus,
    Minus,
    Tilde,
}

impl WitnessChoice {
    pub fn operator(self) -> Operator {
        match self {
            WitnessChoice::Plus => build_w_pm(WitnessSign::Plus),
            WitnessChoice::Minus => build_w_pm(WitnessSign::Minus),
            WitnessChoice::Tilde => build_w_tilde(),
        }
    }
}

/// `W̃ = σx⊗σx − σy⊗σy`.
pub fn build_w_tilde() -> Operator {
    &pauli::x().kron(&pauli::x()) - &pauli::y().kron(&pauli::y())
}

/// `W± = 1 ± W̃`.
pub fn build_w_pm(sign: WitnessSign) -> Operator {
    &Operator::identity(4) + &build_w_tilde().scale(sign.value())
}

/// One eigenspace of a witness together with its weight on `ρ_S(0)`.
#[derive(Clone, Debug)]
pub struct Branch {
    pub eigenvalue: f64,
    /// Orthonormal basis of the eigenspace.
    pub states: Vec<Vec<C64>>,
    /// `tr(Π_k ρ_S(0))`.
    pub probability: f64,
}

impl Branch {
    pub fn projector(&self) -> Operator {
        let dim = self.states[0].len();
        let mut p = Operator::zeros(dim);
        for s in &self.states {
            p = &p + &Operator::outer(s, s).expect("equal lengths");
        }
        p
    }
}

#[derive(Clone, Debug)]
pub struct WitnessBranches {
    pub branches: Vec<Branch>,
}

impl WitnessBranches {
    /// Branches given directly as `(eigenvalue, probability)` pairs, without
    /// eigenspace vectors. Used by the classical gas ensemble.
    pub fn from_weights(pairs: &[(f64, f64)]) -> Result<Self> {
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        if pairs.is_empty() || (total - 1.0).abs() > BRANCH_SUM_TOL {
            return Err(Error::param("branches", format!("probabilities sum to {total}")));
        }
        if let Some(bad) = pairs.iter().find(|p| p.1 < 0.0 || !p.0.is_finite()) {
            return Err(Error::param("branches", format!("invalid branch {bad:?}")));
        }
        Ok(Self {
            branches: pairs
                .iter()
                .map(|&(eigenvalue, probability)| Branch {
                    eigenvalue,
                    states: Vec::new(),
                    probability,
                })
                .collect(),
        })
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.branches.iter().map(|b| b.eigenvalue).collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.branches.iter().map(|b| b.probability).collect()
    }

    pub fn total_probability(&self) -> f64 {
        self.branches.iter().map(|b| b.probability).sum()
    }

    /// `W₀ = Σ_k w_k p_k`.
    pub fn mean(&self) -> f64 {
        self.branches.iter().map(|b| b.eigenvalue * b.probability).sum()
    }

    /// `Σ_W = sqrt(Σ w_k² p_k − W₀²)`.
    pub fn std(&self) -> f64 {
        let second: f64 = self
            .branches
            .iter()
            .map(|b| b.eigenvalue * b.eigenvalue * b.probability)
            .sum();
        (second - self.mean().powi(2)).max(0.0).sqrt()
    }
}

/// Groups the eigenvectors of `w` into eigenspaces and weighs each by
/// `tr(Π_k ρ_S(0))`.
pub fn eigen_branches(w: &Operator, rho_s0: &DensityMatrix) -> Result<WitnessBranches> {
    w.check_same_dim(rho_s0.operator(), "eigen branches")?;
    let eig = hermitian_eigen(w)?;
    let mut branches: Vec<Branch> = Vec::new();
    let mut start = 0;
    while start < eig.dim() {
        let mut end = start + 1;
        while end < eig.dim() && eig.values[end] - eig.values[end - 1] <= DEGENERACY_TOL {
            end += 1;
        }
        let states: Vec<Vec<C64>> = (start..end).map(|k| eig.vector(k)).collect();
        let eigenvalue = eig.values[start..end].iter().sum::<f64>() / (end - start) as f64;
        let mut branch = Branch {
            eigenvalue,
            states,
            probability: 0.0,
        };
        branch.probability = trace_product(&branch.projector(), rho_s0.operator()).re;
        branches.push(branch);
        start = end;
    }
    Ok(WitnessBranches { branches })
}

/// `tr(W ρ_S)`, cross-checked against the branch sum `Σ_k w_k p_k`.
pub fn witness_expectation(w: &Operator, rho_s: &DensityMatrix) -> Result<f64> {
    let direct = expectation(w, rho_s)?;
    let via_branches = eigen_branches(w, rho_s)?.mean();
    let deviation = (direct - via_branches).abs();
    let tolerance = BRANCH_SUM_TOL * w.max_abs().max(1.0);
    if deviation > tolerance {
        return Err(Error::CrossCheck {
            context: "witness branch sum",
            deviation,
            tolerance,
        });
    }
    Ok(direct)
}

/// `max |[W, H_S]_ij|`; values at or below [`FROZEN_TOL`] count as frozen.
pub fn frozen_check(w: &Operator, h_s: &Operator) -> Result<f64> {
    Ok(commutator(w, h_s)?.max_abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertifyingWitness {
    Plus,
    Minus,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WitnessReport {
    pub w_tilde_expectation: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    pub certified: bool,
    pub certifying_witness: CertifyingWitness,
    /// Standard deviation of the certifying witness (of `W̃` when none
    /// certifies; all three share one variance).
    pub sigma_w: f64,
}

/// Certifies entanglement of a two-qubit state through `W±`.
pub fn certify(rho_s: &DensityMatrix) -> Result<WitnessReport> {
    if rho_s.dim() != 4 {
        return Err(Error::DimensionMismatch {
            context: "certify (two qubits)",
            expected: 4,
            found: rho_s.dim(),
        });
    }
    let w_tilde = build_w_tilde();
    let e = witness_expectation(&w_tilde, rho_s)?;
    let w_plus = 1.0 + e;
    let w_minus = 1.0 - e;
    let certifying_witness = if w_minus < 0.0 {
        CertifyingWitness::Minus
    } else if w_plus < 0.0 {
        CertifyingWitness::Plus
    } else {
        CertifyingWitness::None
    };
    let w = match certifying_witness {
        CertifyingWitness::Plus => build_w_pm(WitnessSign::Plus),
        CertifyingWitness::Minus => build_w_pm(WitnessSign::Minus),
        CertifyingWitness::None => w_tilde,
    };
    let mean = expectation(&w, rho_s)?;
    let centered = &w - &Operator::identity(4).scale(mean);
    let variance = expectation(&(&centered * &centered), rho_s)?;
    Ok(WitnessReport {
        w_tilde_expectation: e,
        w_plus,
        w_minus,
        certified: e.abs() > 1.0,
        certifying_witness,
        sigma_w: variance.max(0.0).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{SpaceLabel, ONE, ZERO};
    use crate::states::NamedState;

    fn named(s: NamedState) -> DensityMatrix {
        s.density_matrix()
    }

    #[test]
    fn w_tilde_structure() {
        let w = build_w_tilde();
        assert!(w.is_hermitian());
        assert_eq!(w.entry(0, 3), C64::new(2.0, 0.0));
        assert_eq!(w.entry(3, 0), C64::new(2.0, 0.0));
        assert_eq!(w.entry(0, 0), ZERO);
        assert_eq!(w.trace(), ZERO);
        let eig = hermitian_eigen(&w).unwrap();
        for (got, want) in eig.values.iter().zip([-2.0, 0.0, 0.0, 2.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn w_pm_on_bell_and_product_states() {
        let wm = build_w_pm(WitnessSign::Minus);
        let wp = build_w_pm(WitnessSign::Plus);
        let phi_p = named(NamedState::PhiPlus);
        assert!((witness_expectation(&wm, &phi_p).unwrap() + 1.0).abs() < 1e-12);
        assert!((witness_expectation(&wp, &phi_p).unwrap() - 3.0).abs() < 1e-12);
        let zz = named(NamedState::Basis(0));
        assert!((witness_expectation(&wm, &zz).unwrap() - 1.0).abs() < 1e-12);
        assert!((witness_expectation(&wp, &zz).unwrap() - 1.0).abs() < 1e-12);
        let phi_m = named(NamedState::PhiMinus);
        assert!((witness_expectation(&wp, &phi_m).unwrap() + 1.0).abs() < 1e-12);
        assert!((witness_expectation(&Operator::identity(4), &phi_m).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn branches_for_degenerate_eigenspaces() {
        let wm = build_w_pm(WitnessSign::Minus);
        let b = eigen_branches(&wm, &named(NamedState::PhiPlus)).unwrap();
        let minus_one = b.branches.iter().find(|b| (b.eigenvalue + 1.0).abs() < 1e-12).unwrap();
        assert!((minus_one.probability - 1.0).abs() < 1e-12);

        let id = eigen_branches(&Operator::identity(4), &named(NamedState::PhiPlus)).unwrap();
        assert_eq!(id.branches.len(), 1);
        assert!((id.branches[0].eigenvalue - 1.0).abs() < 1e-12);
        assert!((id.total_probability() - 1.0).abs() < 1e-12);

        let mixed = DensityMatrix::maximally_mixed(4, SpaceLabel::System);
        let b = eigen_branches(&build_w_tilde(), &mixed).unwrap();
        assert_eq!(b.branches.len(), 3);
        for (branch, (w, p)) in b.branches.iter().zip([(-2.0, 0.25), (0.0, 0.5), (2.0, 0.25)]) {
            assert!((branch.eigenvalue - w).abs() < 1e-12);
            assert!((branch.probability - p).abs() < 1e-12);
            assert!(branch.probability >= -1e-12);
        }
    }

    #[test]
    fn frozen_check_against_atomic_energies() {
        assert_eq!(frozen_check(&build_w_tilde(), &Operator::identity(4)).unwrap(), 0.0);
        let equal = Operator::from_real_diagonal(&[0.3, -0.2, 0.9, 0.3]);
        for sign in [WitnessSign::Plus, WitnessSign::Minus] {
            assert_eq!(frozen_check(&build_w_pm(sign), &equal).unwrap(), 0.0);
        }
        // [W±, diag(ε)]_{14} = ±2(ε₄ − ε₁).
        let unequal = Operator::from_real_diagonal(&[0.3, -0.2, 0.9, 0.55]);
        let r = frozen_check(&build_w_pm(WitnessSign::Plus), &unequal).unwrap();
        assert!((r - 2.0 * 0.25).abs() < 1e-14);
    }

    #[test]
    fn certify_named_states() {
        let r = certify(&named(NamedState::PhiPlus)).unwrap();
        assert!(r.certified);
        assert_eq!(r.certifying_witness, CertifyingWitness::Minus);
        assert!((r.w_minus + 1.0).abs() < 1e-12);
        assert!(r.sigma_w < 1e-12);

        let r = certify(&named(NamedState::Basis(0))).unwrap();
        assert!(!r.certified);
        assert_eq!(r.certifying_witness, CertifyingWitness::None);
        assert!((r.w_plus - 1.0).abs() < 1e-12 && (r.w_minus - 1.0).abs() < 1e-12);

        let r = certify(&DensityMatrix::maximally_mixed(4, SpaceLabel::System)).unwrap();
        assert!(!r.certified);
        assert!(r.w_tilde_expectation.abs() < 1e-15);

        let r = certify(&named(NamedState::PhiMinus)).unwrap();
        assert_eq!(r.certifying_witness, CertifyingWitness::Plus);
        assert!((r.w_plus + 1.0).abs() < 1e-12);
    }

    #[test]
    fn certify_rejects_wrong_dimension() {
        let qubit = DensityMatrix::from_pure(&[ONE, ZERO], SpaceLabel::System).unwrap();
        assert!(matches!(certify(&qubit), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn weights_constructor_validates() {
        assert!(WitnessBranches::from_weights(&[(1.0, 0.5)]).is_err());
        let b = WitnessBranches::from_weights(&[(-1.0, 0.9), (3.0, 0.1)]).unwrap();
        assert!((b.mean() + 0.6).abs() < 1e-15);
        assert!((b.std() - 1.2).abs() < 1e-12);
    }
}
