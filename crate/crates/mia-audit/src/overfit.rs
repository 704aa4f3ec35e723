//! Distributional-overfitting analysis.
//!
//! Model-output gaps γ are per-(bin, class) differences between the output
//! distribution on training members and on non-members; their half absolute
//! sum is the total-variation distance τ, the distributional-overfitting
//! distance. Vulnerability decomposes exactly into averages of these
//! distances on empirical tables, which is what the closed forms here
//! compute; the identity module cross-checks them against the measured
//! adversary accuracies.

use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};
use crate::freq::FrequencyTable;

/// Signed model-output gaps `γ[b][y]` and `γ_z[b][y][z]`.
///
/// Cells where either conditional is undefined carry gap 0 and are flagged
/// as undefined so that coverage diagnostics can surface sparse tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapTensor {
    pub num_classes: usize,
    pub num_subgroups: usize,
    pub bins: usize,
    /// `[y][b]`
    gamma: Vec<f64>,
    /// `[y][z][b]`
    gamma_sub: Vec<f64>,
    /// `[y]`: whether the (y, m) rows were populated on both sides.
    defined: Vec<bool>,
    /// `[y][z]`
    defined_sub: Vec<bool>,
}

impl GapTensor {
    pub fn gamma(&self, y: usize, b: usize) -> f64 {
        self.gamma[y * self.bins + b]
    }

    pub fn gamma_sub(&self, y: usize, z: usize, b: usize) -> f64 {
        self.gamma_sub[(y * self.num_subgroups + z) * self.bins + b]
    }

    /// Whether γ(·, y) is defined (both membership rows populated).
    pub fn defined(&self, y: usize) -> bool {
        self.defined[y]
    }

    pub fn defined_sub(&self, y: usize, z: usize) -> bool {
        self.defined_sub[y * self.num_subgroups + z]
    }

    /// Count of (y) and (y, z) cells whose gaps are undefined.
    pub fn undefined_cells(&self) -> (usize, usize) {
        (
            self.defined.iter().filter(|d| !**d).count(),
            self.defined_sub.iter().filter(|d| !**d).count(),
        )
    }
}

/// Computes all model-output gaps from a table.
pub fn compute_gaps(table: &FrequencyTable) -> GapTensor {
    let (p, k, bins) = (table.num_classes(), table.num_subgroups(), table.bins());
    let mut gamma = vec![0.0; p * bins];
    let mut gamma_sub = vec![0.0; p * k * bins];
    let mut defined = vec![false; p];
    let mut defined_sub = vec![false; p * k];
    for y in 0..p {
        defined[y] = table.total_my(0, y) > 0 && table.total_my(1, y) > 0;
        if defined[y] {
            for b in 0..bins {
                gamma[y * bins + b] = table.gap(y, b).unwrap();
            }
        }
        for z in 0..k {
            let ok = table.total_myz(0, y, z) > 0 && table.total_myz(1, y, z) > 0;
            defined_sub[y * k + z] = ok;
            if ok {
                for b in 0..bins {
                    gamma_sub[(y * k + z) * bins + b] = table.gap_sub(y, z, b).unwrap();
                }
            }
        }
    }
    GapTensor {
        num_classes: p,
        num_subgroups: k,
        bins,
        gamma,
        gamma_sub,
        defined,
        defined_sub,
    }
}

/// Summary of distributional overfitting: total-variation distances, class bias,
/// and marginals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverfitProfile {
    pub num_classes: usize,
    pub num_subgroups: usize,
    /// `τ(y) = ½ Σ_b |γ(b, y)|`, indexed `[y]`.
    pub tau: Vec<f64>,
    /// `τ_z(y)`, indexed `[y][z]` (flattened `y * k + z`).
    pub tau_sub: Vec<f64>,
    /// Class bias `ρ_z(y) = Pr̂[y | z]`, indexed `[y][z]`; 0 for absent z.
    pub rho: Vec<f64>,
    pub pr_y: Vec<f64>,
    pub pr_z: Vec<f64>,
    /// Coverage diagnostic: (y) cells with undefined gaps.
    pub undefined_cells: usize,
    /// Coverage diagnostic: (y, z) cells with undefined gaps.
    pub undefined_sub_cells: usize,
}

impl OverfitProfile {
    pub fn tau_sub(&self, y: usize, z: usize) -> f64 {
        self.tau_sub[y * self.num_subgroups + z]
    }

    pub fn rho(&self, y: usize, z: usize) -> f64 {
        self.rho[y * self.num_subgroups + z]
    }
}

/// Computes τ, τ_z, ρ_z and the marginals from a table.
///
/// Undefined cells contribute 0 to the τ sums and are counted in the
/// coverage diagnostics.
pub fn compute_profile(table: &FrequencyTable) -> OverfitProfile {
    let gaps = compute_gaps(table);
    let (p, k, bins) = (gaps.num_classes, gaps.num_subgroups, gaps.bins);
    let mut tau = vec![0.0; p];
    let mut tau_sub = vec![0.0; p * k];
    let mut rho = vec![0.0; p * k];
    for y in 0..p {
        if gaps.defined(y) {
            tau[y] = 0.5 * (0..bins).map(|b| gaps.gamma(y, b).abs()).sum::<f64>();
        }
        for z in 0..k {
            if gaps.defined_sub(y, z) {
                tau_sub[y * k + z] = 0.5
                    * (0..bins)
                        .map(|b| gaps.gamma_sub(y, z, b).abs())
                        .sum::<f64>();
            }
            rho[y * k + z] = table.rho(y, z).unwrap_or(0.0);
        }
    }
    let (undef, undef_sub) = gaps.undefined_cells();
    OverfitProfile {
        num_classes: p,
        num_subgroups: k,
        tau,
        tau_sub,
        rho,
        pr_y: (0..p).map(|y| table.pr_y(y)).collect(),
        pr_z: (0..k).map(|z| table.pr_z(z)).collect(),
        undefined_cells: undef,
        undefined_sub_cells: undef_sub,
    }
}

/// Closed-form overall vulnerability:
/// `Vᴿ = ½ + ½ Σ_y Pr[y] τ(y)` and
/// `Vᴰ = ½ + ½ Σ_y Σ_z Pr[z] ρ_z(y) τ_z(y)`.
pub fn closed_form_vulnerability(profile: &OverfitProfile) -> (f64, f64) {
    let p = profile.num_classes;
    let k = profile.num_subgroups;
    let mut vr = 0.0;
    for y in 0..p {
        vr += profile.pr_y[y] * profile.tau[y];
    }
    let mut vd = 0.0;
    for y in 0..p {
        for z in 0..k {
            vd += profile.pr_z[z] * profile.rho(y, z) * profile.tau_sub(y, z);
        }
    }
    (0.5 + 0.5 * vr, 0.5 + 0.5 * vd)
}

/// Closed-form per-subgroup vulnerabilities.
///
/// Discriminating: `Vᴰ_z = ½ + ½ Σ_y ρ_z(y) τ_z(y)`.
/// Regular: `Vᴿ_z = ½ + ½ Σ_y ρ_z(y) Σ_b 1[γ(b,y) > 0] γ_z(b,y)` — the
/// indicator is the *global* gap sign while the summand is the *subgroup*
/// gap, because a regular rule is being scored on subgroup-conditioned data.
/// Returns `(Vᴿ_z, Vᴰ_z)` per z, `None` for absent subgroups.
pub fn closed_form_subgroup_vulnerability(
    profile: &OverfitProfile,
    gaps: &GapTensor,
) -> (Vec<Option<f64>>, Vec<Option<f64>>) {
    let (p, k, bins) = (gaps.num_classes, gaps.num_subgroups, gaps.bins);
    let mut reg = vec![None; k];
    let mut disc = vec![None; k];
    for z in 0..k {
        if profile.pr_z[z] == 0.0 {
            continue;
        }
        let mut r = 0.0;
        let mut d = 0.0;
        for y in 0..p {
            let rho = profile.rho(y, z);
            d += rho * profile.tau_sub(y, z);
            if gaps.defined(y) && gaps.defined_sub(y, z) {
                let mut inner = 0.0;
                for b in 0..bins {
                    if gaps.gamma(y, b) > 0.0 {
                        inner += gaps.gamma_sub(y, z, b);
                    }
                }
                r += rho * inner;
            }
        }
        reg[z] = Some(0.5 + 0.5 * r);
        disc[z] = Some(0.5 + 0.5 * d);
    }
    (reg, disc)
}

/// Signed no-disparity residuals for a subgroup pair.
///
/// Discriminating: `Σ_y (ρ_z τ_z − ρ_z' τ_z')`; regular:
/// `Σ_{y,b} 1[γ > 0] (ρ_z γ_z − ρ_z' γ_z')`. Half the absolute residual
/// equals the corresponding measured disparity.
pub fn disparity_residuals(
    profile: &OverfitProfile,
    gaps: &GapTensor,
    z1: usize,
    z2: usize,
) -> Result<(f64, f64)> {
    let k = profile.num_subgroups;
    for z in [z1, z2] {
        if z >= k {
            return Err(AuditError::validation(format!(
                "subgroup {z} out of range (k = {k})"
            )));
        }
        if profile.pr_z[z] == 0.0 {
            return Err(AuditError::MissingSubgroup { subgroup: z });
        }
    }
    let (p, bins) = (gaps.num_classes, gaps.bins);
    let mut disc = 0.0;
    let mut reg = 0.0;
    for y in 0..p {
        disc += profile.rho(y, z1) * profile.tau_sub(y, z1)
            - profile.rho(y, z2) * profile.tau_sub(y, z2);
        if !gaps.defined(y) {
            continue;
        }
        for b in 0..bins {
            if gaps.gamma(y, b) > 0.0 {
                reg += profile.rho(y, z1) * gaps.gamma_sub(y, z1, b)
                    - profile.rho(y, z2) * gaps.gamma_sub(y, z2, b);
            }
        }
    }
    Ok((disc, reg))
}

/// Location of the largest generalized-equality-of-odds violation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeoWitness {
    pub y: usize,
    pub b: usize,
    pub m: usize,
    pub z1: usize,
    pub z2: usize,
}

/// Result of [`geo_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoCheck {
    pub holds: bool,
    pub max_deviation: f64,
    pub witness: Option<GeoWitness>,
}

/// Checks generalized equality of odds on the empirical table:
/// `Pr̂[b | y, z, m] = Pr̂[b | y, z', m]` for all pairs of populated
/// subgroups, within `tol`.
pub fn geo_check(table: &FrequencyTable, tol: f64) -> GeoCheck {
    let (p, k, bins) = (table.num_classes(), table.num_subgroups(), table.bins());
    let mut max_deviation = 0.0;
    let mut witness = None;
    for m in 0..2 {
        for y in 0..p {
            for z1 in 0..k {
                if table.total_myz(m, y, z1) == 0 {
                    continue;
                }
                for z2 in (z1 + 1)..k {
                    if table.total_myz(m, y, z2) == 0 {
                        continue;
                    }
                    for b in 0..bins {
                        let d = (table.cond_sub(m, y, z1, b).unwrap()
                            - table.cond_sub(m, y, z2, b).unwrap())
                        .abs();
                        if d > max_deviation {
                            max_deviation = d;
                            witness = Some(GeoWitness { y, b, m, z1, z2 });
                        }
                    }
                }
            }
        }
    }
    GeoCheck {
        holds: max_deviation <= tol,
        max_deviation,
        witness,
    }
}

/// Checks the implication "GEO + no class bias ⇒ zero disparity for both
/// adversaries".
///
/// Errors distinguish which precondition failed; on success asserts that
/// all pairwise closed-form disparities are ≤ 1e-12 for both adversaries.
pub fn geo_no_bias_implication_check(table: &FrequencyTable) -> Result<()> {
    let geo = geo_check(table, 0.0);
    if !geo.holds {
        return Err(AuditError::GeoPrecondition(format!(
            "GEO does not hold: max deviation {} at {:?}",
            geo.max_deviation, geo.witness
        )));
    }
    let profile = compute_profile(table);
    let k = profile.num_subgroups;
    let present: Vec<usize> = (0..k).filter(|&z| profile.pr_z[z] > 0.0).collect();
    for y in 0..profile.num_classes {
        for w in present.windows(2) {
            let (a, b) = (w[0], w[1]);
            if (profile.rho(y, a) - profile.rho(y, b)).abs() > 1e-12 {
                return Err(AuditError::GeoPrecondition(format!(
                    "class bias differs: rho_{a}({y}) = {} vs rho_{b}({y}) = {}",
                    profile.rho(y, a),
                    profile.rho(y, b)
                )));
            }
        }
    }
    let gaps = compute_gaps(table);
    let (reg, disc) = closed_form_subgroup_vulnerability(&profile, &gaps);
    for i in 0..present.len() {
        for j in (i + 1)..present.len() {
            let (a, b) = (present[i], present[j]);
            let dr = (reg[a].unwrap() - reg[b].unwrap()).abs();
            let dd = (disc[a].unwrap() - disc[b].unwrap()).abs();
            if dr > 1e-12 || dd > 1e-12 {
                return Err(AuditError::GeoPrecondition(format!(
                    "disparity not eliminated for pair ({a}, {b}): regular {dr}, discriminating {dd}"
                )));
            }
        }
    }
    Ok(())
}
