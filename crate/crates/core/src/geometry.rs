//! Norm-ball geometry: constraint kernels, exposed faces, rotundity and
//! minima of a regularizer over a face.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::regularizer::RegularizerSpec;
use crate::rng::stream_rng;
use crate::spaces::{dual_norm, lp_norm, pair, DualFunctional, PrimalVector, SpaceSpec, TailRule};

/// `Z = ∩ ker Lᵢ` inside a finite space or a truncation `ℓ¹_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSubspace {
    pub functionals: Vec<DualFunctional>,
    pub basis: Vec<PrimalVector>,
    /// Working dimension (the space dimension or the truncation).
    pub dim: usize,
    pub truncation_dim: Option<usize>,
    pub rank: usize,
    pub rank_deficient: bool,
}

impl KernelSubspace {
    /// `Σ tⱼ bⱼ`.
    pub fn combine(&self, t: &[f64]) -> PrimalVector {
        let mut dense = vec![0.0; self.dim];
        for (tj, b) in t.iter().zip(&self.basis) {
            for &(i, v) in b.entries() {
                dense[i - 1] += tj * v;
            }
        }
        PrimalVector::from_dense(&dense)
    }
}

pub fn kernel_basis(
    space: &SpaceSpec,
    functionals: &[DualFunctional],
    truncation_dim: Option<usize>,
) -> Result<KernelSubspace> {
    let n = match (space.dim(), truncation_dim) {
        (Some(d), _) => d,
        (None, Some(t)) if t > 0 => t,
        _ => {
            return Err(Error::Precondition(
                "sequence spaces need a truncation dimension for kernel computations".into(),
            ))
        }
    };
    let rows: Vec<Vec<f64>> = functionals.iter().map(|l| l.to_dense(n)).collect();
    let scale = rows.iter().map(|r| linalg::max_abs(r)).fold(0.0, f64::max).max(1.0);
    let rr = linalg::rref(&rows, n, 1e-12 * scale);
    let rank = rr.rank();
    let basis = rr.null_space().iter().map(|b| PrimalVector::from_dense(b)).collect();
    if rank < functionals.len() {
        log::warn!("rank-deficient constraints: rank {rank} < {}", functionals.len());
    }
    Ok(KernelSubspace {
        functionals: functionals.to_vec(),
        basis,
        dim: n,
        truncation_dim: space.dim().is_none().then_some(n),
        rank,
        rank_deficient: rank < functionals.len(),
    })
}

/// The argmax set of `L` over the ball of the given radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceDescriptor {
    pub space: SpaceSpec,
    pub exposing: DualFunctional,
    pub radius: f64,
    pub extreme_points: Vec<PrimalVector>,
    pub is_point: bool,
}

pub fn exposed_face(space: &SpaceSpec, l: &DualFunctional, radius: f64) -> Result<FaceDescriptor> {
    if l.is_zero() {
        return Err(Error::ZeroFunctional);
    }
    let extreme_points = if space.is_l1() {
        let dn = dual_norm(l);
        if !dn.attained {
            return Err(Error::EmptyFace);
        }
        let last = match space.dim() {
            Some(d) => d,
            None => {
                if matches!(l.tail(), TailRule::Constant(c) if c.abs() == dn.value && *c != 0.0) {
                    return Err(Error::Unsupported(
                        "face spanned by infinitely many coordinates".into(),
                    ));
                }
                // strictly monotone tails attain their sup only at the rule's first index
                l.tail_start()
            }
        };
        (1..=last)
            .filter(|&i| l.value(i).abs() == dn.value)
            .map(|i| PrimalVector::unit(i, radius * l.value(i).signum()))
            .collect()
    } else {
        let d = space.dim().expect("finite");
        let q = space.conjugate();
        let raw: Vec<f64> = l
            .to_dense(d)
            .iter()
            .map(|v| v.signum() * v.abs().powf(q - 1.0))
            .collect();
        let s = lp_norm(&raw, space.p());
        vec![PrimalVector::from_dense(
            &raw.iter().map(|v| radius * v / s).collect::<Vec<_>>(),
        )]
    };
    Ok(FaceDescriptor {
        space: *space,
        exposing: l.clone(),
        radius,
        is_point: extreme_points.len() == 1,
        extreme_points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rotundity {
    StrictlyConvex,
    UniformlyNonRotund,
}

pub fn rotundity_profile(space: &SpaceSpec) -> Rotundity {
    if space.is_l1() {
        Rotundity::UniformlyNonRotund
    } else {
        Rotundity::StrictlyConvex
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceMin {
    pub point: PrimalVector,
    pub value: f64,
    pub weights: Vec<f64>,
    /// Grid actually used (may be lowered for faces with many vertices).
    pub grid: usize,
    pub grid_too_coarse: bool,
}

const MAX_GRID_POINTS: usize = 200_000;

fn compositions(total: usize, parts: usize) -> usize {
    // C(total + parts - 1, parts - 1), saturating
    let mut c: u128 = 1;
    for i in 0..(parts as u128).saturating_sub(1) {
        c = c * (total as u128 + 1 + i) / (i + 1);
        if c > u64::MAX as u128 {
            return usize::MAX;
        }
    }
    c as usize
}

fn combine_vertices(verts: &[PrimalVector], w: &[f64]) -> PrimalVector {
    let mut out = PrimalVector::zero();
    for (v, &wi) in verts.iter().zip(w) {
        if wi != 0.0 {
            out = out.axpy(wi, v);
        }
    }
    out
}

/// Approximate minimum of `Ω` over a face: barycentric grid search (first
/// lexicographic minimizer kept) then pairwise mass-transfer refinement.
pub fn face_min(face: &FaceDescriptor, omega: &RegularizerSpec, grid: usize) -> FaceMin {
    let verts = &face.extreme_points;
    let k = verts.len();
    let space = face.space;
    let eval = |w: &[f64]| omega.eval(&space, &combine_vertices(verts, w));
    if k == 1 {
        return FaceMin {
            point: verts[0].clone(),
            value: omega.eval(&space, &verts[0]),
            weights: vec![1.0],
            grid: 0,
            grid_too_coarse: false,
        };
    }
    let mut g = grid.max(1);
    while g > 1 && compositions(g, k) > MAX_GRID_POINTS {
        g -= 1;
    }
    if g < grid {
        log::info!("face_min: grid lowered from {grid} to {g} for {k} vertices");
    }

    let mut counts = vec![0usize; k];
    let mut best_w = vec![0.0; k];
    let mut best = f64::INFINITY;
    let mut visit = |counts: &[usize]| {
        let w: Vec<f64> = counts.iter().map(|&c| c as f64 / g as f64).collect();
        let v = eval(&w);
        if v < best {
            best = v;
            best_w = w;
        }
    };
    enumerate(&mut counts, 0, g, &mut visit);

    let grid_w = best_w.clone();
    let mut step = 1.0 / g as f64;
    for _ in 0..50 {
        let mut improved = false;
        for a in 0..k {
            for b in 0..k {
                if a == b || best_w[a] <= 0.0 {
                    continue;
                }
                let d = step.min(best_w[a]);
                let mut w = best_w.clone();
                w[a] -= d;
                w[b] += d;
                let v = eval(&w);
                if v < best {
                    best = v;
                    best_w = w;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    let moved: f64 = best_w.iter().zip(&grid_w).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
    let grid_too_coarse = moved > 1.0 / g as f64 + 1e-12;
    if grid_too_coarse {
        log::warn!("face_min: refinement moved {moved:.3e}, more than one grid cell (1/{g})");
    }
    FaceMin {
        point: combine_vertices(verts, &best_w),
        value: best,
        weights: best_w,
        grid: g,
        grid_too_coarse,
    }
}

fn enumerate(counts: &mut [usize], pos: usize, left: usize, visit: &mut dyn FnMut(&[usize])) {
    if pos + 1 == counts.len() {
        counts[pos] = left;
        visit(counts);
        return;
    }
    for c in 0..=left {
        counts[pos] = c;
        enumerate(counts, pos + 1, left - c, visit);
    }
}

/// Deterministic pseudo-random `f_T` with `L(f_T) = 0` exactly.
///
/// Built from one scaled coordinate pair `a·(L_j eᵢ − Lᵢ eⱼ)` (the scale is
/// accepted only if the two products round identically, otherwise a power of
/// two is used) plus free values on coordinates where `L` vanishes.
pub fn tangent_sample(l: &DualFunctional, space: &SpaceSpec, seed: u64) -> PrimalVector {
    let mut rng = stream_rng(seed, 0x7a46);
    let n = space.dim().unwrap_or_else(|| (l.prefix().len() + 4).max(8));
    let mut entries: Vec<(usize, f64)> = Vec::new();
    if n >= 2 {
        let i = rng.gen_range(1..=n);
        let mut j = rng.gen_range(1..n);
        if j >= i {
            j += 1;
        }
        let (li, lj) = (l.value(i), l.value(j));
        let mut a = rng.gen_range(0.1..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        if li * (a * lj) != lj * (a * li) {
            a = (2.0f64).powi(rng.gen_range(-2..=1)) * a.signum();
        }
        entries.push((i, a * lj));
        entries.push((j, -a * li));
    }
    let zeros: Vec<usize> = (1..=n).filter(|&i| l.value(i) == 0.0).collect();
    if !zeros.is_empty() {
        for _ in 0..rng.gen_range(0..=2usize) {
            let i = zeros[rng.gen_range(0..zeros.len())];
            entries.retain(|e| e.0 != i);
            entries.push((i, rng.gen_range(-1.0..1.0)));
        }
    }
    entries.retain(|e| e.1 != 0.0);
    let f = PrimalVector::new(entries).expect("valid tangent");
    debug_assert_eq!(pair(l, &f), 0.0);
    f
}
