//! Sampling-based checks of regularizers against the tangential bound and
//! the monotonicity of face minima, plus the mollified re-run.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{exposed_face, face_min, rotundity_profile, tangent_sample, Rotundity};
use crate::par::{self, Execution};
use crate::regularizer::{Mollifier, RegularizerSpec};
use crate::rng::stream_rng;
use crate::spaces::{duality_map, norm, pair, DualFunctional, PrimalVector, SpaceSpec};

/// Working dimension for sequence-space samples.
const SEQUENCE_DIM: usize = 6;
const FACE_GRID: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// `L` exposes `f`, `L(f_T) = 0` and `Ω(f + f_T) < Ω(f)`.
    Tangential {
        f: PrimalVector,
        l: DualFunctional,
        f_t: PrimalVector,
        before: f64,
        after: f64,
    },
    /// Face minima with `‖inner‖ < ‖outer‖` but `Ω(inner) > Ω(outer)`.
    Radial {
        inner: PrimalVector,
        outer: PrimalVector,
        before: f64,
        after: f64,
    },
}

impl Witness {
    /// Standalone re-check against `Ω` at tolerance `tol`.
    pub fn reverify(&self, omega: &RegularizerSpec, space: &SpaceSpec, tol: f64) -> bool {
        match self {
            Witness::Tangential { f, l, f_t, .. } => {
                let Ok(r) = norm(space, f) else { return false };
                let ln = space.dual_norm_of(l);
                let exposes = (pair(l, f) - ln * r).abs() <= 1e-9 * (1.0 + r * ln);
                let before = omega.eval(space, f);
                let after = omega.eval(space, &f.add(f_t));
                pair(l, f_t) == 0.0 && exposes && after < before - tol
            }
            Witness::Radial { inner, outer, .. } => {
                let (Ok(ri), Ok(ro)) = (norm(space, inner), norm(space, outer)) else {
                    return false;
                };
                ri < ro && omega.eval(space, inner) > omega.eval(space, outer) + tol
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub passed: bool,
    pub witness: Option<Witness>,
    pub samples_run: usize,
}

impl WitnessReport {
    fn from_first(n: usize, hit: Option<(usize, Witness)>) -> Self {
        match hit {
            None => WitnessReport {
                passed: true,
                witness: None,
                samples_run: n,
            },
            Some((i, w)) => WitnessReport {
                passed: false,
                witness: Some(w),
                samples_run: i + 1,
            },
        }
    }
}

/// `[0.1, 10]`, 64 geometrically spaced radii.
pub fn default_radii() -> Vec<f64> {
    (0..64).map(|i| 0.1 * 100f64.powf(i as f64 / 63.0)).collect()
}

fn work_dim(space: &SpaceSpec) -> usize {
    space.dim().unwrap_or(SEQUENCE_DIM)
}

/// A random exposing functional with `‖L‖ = 1`: in `ℓ¹`, one to three
/// coordinates at `±1` and the rest strictly inside; otherwise a random
/// direction normalized in the dual norm.
fn random_exposing(space: &SpaceSpec, rng: &mut ChaCha8Rng) -> DualFunctional {
    let n = work_dim(space);
    if space.is_l1() {
        let k = rng.gen_range(1..=n.min(3));
        let mut vals: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.9..0.9)).collect();
        for i in sample(rng, n, k).into_iter() {
            vals[i] = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        }
        DualFunctional::finite(vals)
    } else {
        loop {
            let vals: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let l = DualFunctional::finite(vals);
            let dn = space.dual_norm_of(&l);
            if dn > 1e-3 {
                return l.scale(1.0 / dn);
            }
        }
    }
}

fn signed_pow2(rng: &mut ChaCha8Rng) -> f64 {
    let s = 2f64.powi(rng.gen_range(-4..=3));
    if rng.gen_bool(0.5) {
        s
    } else {
        -s
    }
}

/// Samples exposed points (face minimizers in `ℓ¹`, the unique norming point
/// otherwise) and tangent directions, looking for `Ω(f + f_T) < Ω(f) − tol`.
pub fn check_tangential_bound(
    omega: &RegularizerSpec,
    space: &SpaceSpec,
    n_samples: usize,
    seed: u64,
    tol: f64,
    exec: Execution,
) -> WitnessReport {
    let radii = default_radii();
    let rot = rotundity_profile(space);
    let hit = par::find_first(exec, n_samples, |s| {
        let mut rng = stream_rng(seed, s as u64);
        let radius = radii[rng.gen_range(0..radii.len())];
        let (f, l) = match rot {
            Rotundity::UniformlyNonRotund => {
                let l = random_exposing(space, &mut rng);
                let face = exposed_face(space, &l, radius).ok()?;
                (face_min(&face, omega, FACE_GRID).point, l)
            }
            Rotundity::StrictlyConvex => {
                let n = work_dim(space);
                let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let f = PrimalVector::from_dense(&dir);
                let r = norm(space, &f).ok()?;
                if r < 1e-3 {
                    return None;
                }
                let f = f.scale(radius / r);
                let l = duality_map(space, &f).ok()?.smooth_point?;
                (f, l)
            }
        };
        let before = omega.eval(space, &f);
        for k in 0..8u64 {
            let base = tangent_sample(&l, space, rng.gen::<u64>() ^ k);
            if base.is_zero() {
                continue;
            }
            let f_t = base.scale(signed_pow2(&mut rng));
            if pair(&l, &f_t) != 0.0 {
                continue;
            }
            let after = omega.eval(space, &f.add(&f_t));
            if after < before - tol {
                return Some(Witness::Tangential {
                    f: f.clone(),
                    l: l.clone(),
                    f_t,
                    before,
                    after,
                });
            }
        }
        None
    });
    WitnessReport::from_first(n_samples, hit)
}

#[derive(Clone)]
struct FacePoint {
    radius: f64,
    point: PrimalVector,
    value: f64,
}

fn face_values(omega: &RegularizerSpec, space: &SpaceSpec, l: &DualFunctional, radius: f64) -> Option<FacePoint> {
    let face = exposed_face(space, l, radius).ok()?;
    let m = face_min(&face, omega, FACE_GRID);
    Some(FacePoint {
        radius,
        point: m.point,
        value: m.value,
    })
}

/// Checks that `λ ↦ min_{λF} Ω` is nondecreasing along the radii grid for
/// sampled faces `F` (three bisection passes locate a detected decrease), and
/// that face minima at smaller radii never exceed those at larger radii.
pub fn check_radial_face_monotone(
    omega: &RegularizerSpec,
    space: &SpaceSpec,
    n_faces: usize,
    radii: &[f64],
    seed: u64,
    tol: f64,
    exec: Execution,
) -> WitnessReport {
    let per_face = par::map_indexed(exec, n_faces, |s| {
        let mut rng = stream_rng(seed, 0x5ace_0000 + s as u64);
        let l = random_exposing(space, &mut rng);
        let pts: Vec<FacePoint> = radii.iter().filter_map(|&r| face_values(omega, space, &l, r)).collect();
        for w in pts.windows(2) {
            if w[0].value > w[1].value + tol {
                let (mut a, mut b) = (w[0].clone(), w[1].clone());
                for _ in 0..3 {
                    let Some(mid) = face_values(omega, space, &l, 0.5 * (a.radius + b.radius)) else {
                        break;
                    };
                    if a.value > mid.value + tol {
                        b = mid;
                    } else if mid.value > b.value + tol {
                        a = mid;
                    } else {
                        break;
                    }
                }
                return (
                    pts,
                    Some(Witness::Radial {
                        inner: a.point,
                        outer: b.point,
                        before: a.value,
                        after: b.value,
                    }),
                );
            }
        }
        (pts, None)
    });
    if let Some(i) = per_face.iter().position(|(_, w)| w.is_some()) {
        return WitnessReport {
            passed: false,
            witness: per_face[i].1.clone(),
            samples_run: i + 1,
        };
    }
    // cross-face pairs
    let all: Vec<&FacePoint> = per_face.iter().flat_map(|(p, _)| p.iter()).collect();
    let mut rng = stream_rng(seed, 0xc705);
    let n_pairs = if all.len() > 1 { 200 } else { 0 };
    for _ in 0..n_pairs {
        let i = rng.gen_range(0..all.len());
        let j = rng.gen_range(0..all.len());
        let (a, b) = if all[i].radius < all[j].radius { (all[i], all[j]) } else { (all[j], all[i]) };
        if a.radius < b.radius && a.value > b.value + tol {
            return WitnessReport {
                passed: false,
                witness: Some(Witness::Radial {
                    inner: a.point.clone(),
                    outer: b.point.clone(),
                    before: a.value,
                    after: b.value,
                }),
                samples_run: n_faces,
            };
        }
    }
    WitnessReport {
        passed: true,
        witness: None,
        samples_run: n_faces,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budget {
    pub n_samples: usize,
    pub n_faces: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            n_samples: 200,
            n_faces: 16,
            seed: 0,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    /// `consistent-with-admissible` or `not-admissible`.
    pub verdict: String,
    pub tangential: WitnessReport,
    pub radial: WitnessReport,
    pub mollified_tangential: WitnessReport,
    pub mollified_radial: WitnessReport,
    pub first_witness: Option<Witness>,
    pub text: String,
}

impl Verdict {
    pub fn consistent(&self) -> bool {
        self.verdict == "consistent-with-admissible"
    }
}

/// Runs both checkers on `Ω` and on its radial mollification (the configured
/// mollifier, or uniform `ρ` with 32 nodes).
pub fn admissibility_verdict(omega: &RegularizerSpec, space: &SpaceSpec, budget: &Budget, exec: Execution) -> Verdict {
    let radii = default_radii();
    let base = omega.without_mollifier();
    let tangential = check_tangential_bound(&base, space, budget.n_samples, budget.seed, budget.tol, exec);
    let radial = check_radial_face_monotone(&base, space, budget.n_faces, &radii, budget.seed, budget.tol, exec);
    let moll = omega
        .mollifier
        .clone()
        .unwrap_or_else(|| Mollifier::uniform(32));
    let mollified = base.with_mollifier(moll).expect("valid mollifier");
    let mtol = 10.0 * budget.tol;
    let mollified_tangential = check_tangential_bound(&mollified, space, budget.n_samples, budget.seed, mtol, exec);
    let mollified_radial = check_radial_face_monotone(&mollified, space, budget.n_faces, &radii, budget.seed, mtol, exec);
    let first_witness = [&tangential, &radial, &mollified_tangential, &mollified_radial]
        .iter()
        .find_map(|r| r.witness.clone());
    let ok = first_witness.is_none();
    let verdict = if ok { "consistent-with-admissible" } else { "not-admissible" }.to_string();
    let text = if ok {
        format!(
            "no violation found in {} tangential samples and {} faces (also after radial mollification); this is sampling evidence, not a proof",
            budget.n_samples, budget.n_faces
        )
    } else {
        "a sampled point violates the tangential bound or the monotonicity of face minima; the witness re-verifies standalone".into()
    };
    Verdict {
        verdict,
        tangential,
        radial,
        mollified_tangential,
        mollified_radial,
        first_witness,
        text,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regularizer::Profile;

    const EXEC: Execution = Execution::Sequential;

    #[test]
    fn norm_squared_passes() {
        let s = SpaceSpec::finite(2.0, 3).unwrap();
        let om = RegularizerSpec::radial(Profile::expr("r^2").unwrap()).unwrap();
        let r = check_tangential_bound(&om, &s, 1000, 3, 1e-9, EXEC);
        assert!(r.passed);
        assert_eq!(r.samples_run, 1000);
    }

    #[test]
    fn linear_functional_fails() {
        let s = SpaceSpec::finite(2.0, 2).unwrap();
        let om = RegularizerSpec::custom("x1").unwrap();
        let r = check_tangential_bound(&om, &s, 100, 0, 1e-9, EXEC);
        let w = r.witness.unwrap();
        assert!(w.reverify(&om, &s, 1e-9));
    }

    #[test]
    fn nonmonotone_profile_on_l1() {
        let s = SpaceSpec::finite(1.0, 2).unwrap();
        let om = RegularizerSpec::radial(Profile::expr("(r-1)^2").unwrap()).unwrap();
        let r = check_tangential_bound(&om, &s, 200, 0, 1e-9, EXEC);
        assert!(r.witness.unwrap().reverify(&om, &s, 1e-9));
        let r = check_radial_face_monotone(&om, &s, 4, &default_radii(), 0, 1e-9, EXEC);
        assert!(r.witness.unwrap().reverify(&om, &s, 1e-9));
    }

    #[test]
    fn downward_jump_detected() {
        let s = SpaceSpec::finite(1.0, 3).unwrap();
        let om = RegularizerSpec::radial(Profile::table(vec![[0.0, 0.0], [2.0, 2.0], [2.0, 1.0], [10.0, 9.0]]).unwrap()).unwrap();
        let r = check_radial_face_monotone(&om, &s, 4, &default_radii(), 1, 1e-9, EXEC);
        let Some(Witness::Radial { inner, outer, .. }) = &r.witness else { panic!("{r:?}") };
        let (ri, ro) = (norm(&s, inner).unwrap(), norm(&s, outer).unwrap());
        assert!(ri < 2.0 && ro >= 2.0, "{ri} {ro}");
        assert!(r.witness.unwrap().reverify(&om, &s, 1e-9));
    }

    #[test]
    fn verdicts() {
        let s = SpaceSpec::finite(1.0, 3).unwrap();
        let b = Budget {
            n_samples: 60,
            n_faces: 4,
            ..Budget::default()
        };
        assert!(admissibility_verdict(&RegularizerSpec::norm(), &s, &b, EXEC).consistent());
        let up = RegularizerSpec::radial(Profile::table(vec![[0.0, 0.0], [1.0, 1.0], [1.0, 2.0], [5.0, 3.0]]).unwrap()).unwrap();
        assert!(admissibility_verdict(&up, &s, &b, EXEC).consistent());
        let v = admissibility_verdict(&RegularizerSpec::custom("x1").unwrap(), &s, &b, EXEC);
        assert!(!v.consistent());
    }

    #[test]
    fn deterministic_across_modes() {
        let s = SpaceSpec::finite(1.0, 3).unwrap();
        let om = RegularizerSpec::custom("x1^2 - x2").unwrap();
        let a = check_tangential_bound(&om, &s, 50, 9, 1e-9, Execution::Parallel);
        let b = check_tangential_bound(&om, &s, 50, 9, 1e-9, Execution::Sequential);
        assert_eq!(a, b);
    }
}
