//! Proximinality of constraint kernels.
//!
//! A single functional has a proximinal kernel iff it attains its norm. For
//! several functionals in `ℓ¹` the kernel is proximinal iff the image of the
//! unit ball under `f ↦ (Lᵢ(f))ᵢ` is closed; non-closedness is certified
//! analytically by a direction `w` along which `Σ wᵢLᵢ` does not attain its
//! supremum.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::certificates::combination_sup;
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::rng::stream_rng;
use crate::spaces::{dual_norm, DualFunctional, Monotone, SpaceSpec, TailRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conclusion {
    Proximinal,
    NotProximinal,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    NormAttainment,
    FiniteDimCompactness,
    ImageClosednessNumeric,
}

/// A monotone tail whose limit exceeds every finite value: the checkable
/// reason behind every `NotProximinal` conclusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticNote {
    /// Direction `w` (length m) of the non-attaining combination `Σ wᵢLᵢ`.
    pub direction: Vec<f64>,
    /// `sup |Σ wᵢLᵢ(n)|`, reached only in the limit.
    pub sup: f64,
    /// Largest `|value|` over the finite prefix.
    pub prefix_max: f64,
    pub tail_start: usize,
    pub tail_monotone: Option<Monotone>,
}

impl AnalyticNote {
    /// Re-derives the note from the functionals.
    pub fn verify(&self, functionals: &[DualFunctional]) -> bool {
        let refs: Vec<&DualFunctional> = functionals.iter().collect();
        let Some(comb) = DualFunctional::linear_combination(&self.direction, &refs) else {
            return false;
        };
        let dn = dual_norm(&comb);
        !dn.attained && dn.value > 0.0 && (dn.value - self.sup).abs() <= 1e-12 * dn.value.max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProxWitness {
    AttainingIndex { index: usize },
    NonAttained(AnalyticNote),
}

/// Support-function evidence for one truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullStats {
    pub truncation: usize,
    pub vertices: usize,
    /// `max_w (h_∞(w) − h_N(w))` over the sampled unit directions.
    pub support_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProximinalityReport {
    pub conclusion: Conclusion,
    pub method: Method,
    pub witness: Option<ProxWitness>,
    pub notes: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hulls: Vec<HullStats>,
}

fn note_for(direction: Vec<f64>, comb: &DualFunctional) -> AnalyticNote {
    let prefix_max = comb.prefix().iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let tail_monotone = match comb.tail() {
        TailRule::Rational { monotone, .. } => Some(*monotone),
        _ => None,
    };
    AnalyticNote {
        direction,
        sup: dual_norm(comb).value,
        prefix_max,
        tail_start: comb.tail_start(),
        tail_monotone,
    }
}

pub fn kernel_proximinal_single(space: &SpaceSpec, l: &DualFunctional) -> Result<ProximinalityReport> {
    if l.is_zero() {
        return Err(Error::ZeroFunctional);
    }
    if space.dim().is_some() {
        return Ok(ProximinalityReport {
            conclusion: Conclusion::Proximinal,
            method: Method::FiniteDimCompactness,
            witness: None,
            notes: "finite-dimensional: the unit ball is compact".into(),
            hulls: Vec::new(),
        });
    }
    let dn = dual_norm(l);
    Ok(if dn.attained {
        let index = dn.witness.expect("attained");
        ProximinalityReport {
            conclusion: Conclusion::Proximinal,
            method: Method::NormAttainment,
            witness: Some(ProxWitness::AttainingIndex { index }),
            notes: format!("sup |Lₙ| = {} is attained at n = {index}", dn.value),
            hulls: Vec::new(),
        }
    } else {
        let note = note_for(vec![1.0], l);
        ProximinalityReport {
            conclusion: Conclusion::NotProximinal,
            method: Method::NormAttainment,
            notes: format!(
                "sup |Lₙ| = {} is only the limit of a monotone tail; the prefix reaches at most {}",
                note.sup, note.prefix_max
            ),
            witness: Some(ProxWitness::NonAttained(note)),
            hulls: Vec::new(),
        }
    })
}

/// Candidate directions: integer vectors with entries in `-2..=2`, first
/// nonzero entry positive, in lexicographic order.
fn integer_directions(m: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let total = 5usize.pow(m as u32);
    for code in 0..total {
        let mut c = code;
        let w: Vec<f64> = (0..m)
            .map(|_| {
                let d = (c % 5) as f64 - 2.0;
                c /= 5;
                d
            })
            .collect();
        if w.iter().find(|v| **v != 0.0).is_some_and(|v| *v > 0.0) {
            out.push(w);
        }
    }
    out
}

pub fn image_ball_closed(
    space: &SpaceSpec,
    functionals: &[DualFunctional],
    truncations: &[usize],
    seed: u64,
    exec: Execution,
) -> Result<ProximinalityReport> {
    let m = functionals.len();
    if m == 0 {
        return Err(Error::DimensionMismatch("need at least one functional".into()));
    }
    if space.dim().is_some() {
        for l in functionals {
            space.check_functional(l)?;
        }
        return Ok(ProximinalityReport {
            conclusion: Conclusion::Proximinal,
            method: Method::FiniteDimCompactness,
            witness: None,
            notes: "finite-dimensional ambient space: the image of the compact unit ball is closed".into(),
            hulls: Vec::new(),
        });
    }
    if m == 1 {
        return kernel_proximinal_single(space, &functionals[0]);
    }
    let refs: Vec<&DualFunctional> = functionals.iter().collect();

    let analytic = if m <= 4 {
        integer_directions(m).into_iter().find_map(|w| {
            let comb = DualFunctional::linear_combination(&w, &refs)?;
            let dn = dual_norm(&comb);
            (!dn.attained && dn.value > 0.0).then(|| note_for(w, &comb))
        })
    } else {
        None
    };

    let mut rng = stream_rng(seed, 0x9e11);
    let mut dirs: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|k| if k == i { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..64 {
        let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            dirs.push(v.iter().map(|x| x / n).collect());
        }
    }
    let h_inf: Vec<f64> = dirs.iter().map(|w| combination_sup(w, &refs)).collect();
    let hulls = par::map_slice(exec, truncations, |&n| {
        let vals: Vec<Vec<f64>> = (1..=n).map(|j| functionals.iter().map(|l| l.value(j)).collect()).collect();
        let gap = dirs
            .iter()
            .zip(&h_inf)
            .map(|(w, hi)| {
                let hn = vals
                    .iter()
                    .map(|v| v.iter().zip(w).map(|(a, b)| a * b).sum::<f64>().abs())
                    .fold(0.0, f64::max);
                hi - hn
            })
            .fold(0.0, f64::max);
        HullStats {
            truncation: n,
            vertices: 2 * n,
            support_gap: gap,
        }
    });

    Ok(match analytic {
        Some(note) => ProximinalityReport {
            conclusion: Conclusion::NotProximinal,
            method: Method::ImageClosednessNumeric,
            notes: format!(
                "along w = {:?} the support value {} of the image is the limit of a monotone tail and no finite vertex reaches it, so the image of the unit ball is not closed",
                note.direction, note.sup
            ),
            witness: Some(ProxWitness::NonAttained(note)),
            hulls,
        },
        None => ProximinalityReport {
            conclusion: Conclusion::Inconclusive,
            method: Method::ImageClosednessNumeric,
            witness: None,
            notes: "no analytic non-attaining direction found; hull growth attached as evidence only".into(),
            hulls,
        },
    })
}

/// Vertices `±(L₁(eⱼ), …, L_m(eⱼ))`, `j ≤ n`, of the truncated image hull.
pub fn hull_vertices(functionals: &[DualFunctional], n: usize) -> Vec<(usize, i8, Vec<f64>)> {
    let mut out = Vec::with_capacity(2 * n);
    for j in 1..=n {
        let v: Vec<f64> = functionals.iter().map(|l| l.value(j)).collect();
        out.push((j, 1, v.clone()));
        out.push((j, -1, v.iter().map(|x| -x).collect()));
    }
    out
}

pub fn reflexivity_note(space: &SpaceSpec) -> &'static str {
    match space {
        SpaceSpec::FiniteLp { .. } => "reflexive: every closed subspace proximinal",
        SpaceSpec::SequenceL1 => "non-reflexive: non-proximinal finite-codimension subspaces exist",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificates::counterexample_functional;

    #[test]
    fn single_functionals() {
        let s = SpaceSpec::SequenceL1;
        let r = kernel_proximinal_single(&s, &counterexample_functional()).unwrap();
        assert_eq!(r.conclusion, Conclusion::NotProximinal);
        let harmonic =
            DualFunctional::from_rule(TailRule::rational(0.0, 1.0, 1.0, 0.0, 1, Monotone::Decreasing).unwrap()).unwrap();
        let r = kernel_proximinal_single(&s, &harmonic).unwrap();
        assert_eq!(r.witness, Some(ProxWitness::AttainingIndex { index: 1 }));
        let r = kernel_proximinal_single(&SpaceSpec::finite(1.0, 3).unwrap(), &DualFunctional::finite(vec![1.0, 0.0, 0.0]))
            .unwrap();
        assert_eq!(r.conclusion, Conclusion::Proximinal);
    }

    #[test]
    fn two_functionals_not_closed() {
        let ls = vec![counterexample_functional(), DualFunctional::finite(vec![1.0])];
        let r = image_ball_closed(&SpaceSpec::SequenceL1, &ls, &[8, 64, 512], 0, Execution::Sequential).unwrap();
        assert_eq!(r.conclusion, Conclusion::NotProximinal);
        let Some(ProxWitness::NonAttained(note)) = &r.witness else { panic!() };
        assert!(note.verify(&ls));
        assert!(r.hulls.windows(2).all(|w| w[1].support_gap <= w[0].support_gap));
    }

    #[test]
    fn finite_is_compact() {
        let s = SpaceSpec::finite(1.0, 5).unwrap();
        let ls = vec![DualFunctional::finite(vec![1.0; 5]), DualFunctional::finite(vec![0.0, 1.0, 0.0, 0.0, 2.0])];
        let r = image_ball_closed(&s, &ls, &[], 0, Execution::Sequential).unwrap();
        assert_eq!((r.conclusion, r.method), (Conclusion::Proximinal, Method::FiniteDimCompactness));
    }
}
