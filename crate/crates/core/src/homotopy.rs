//! Homotopy classes of loops in the N-punctured plane.
//!
//! The fundamental group of the plane punctured at the centres σ_1..σ_N is
//! free on generators a_1..a_N; a loop's class is read off as the reduced
//! word of its signed crossings with a system of disjoint cut rays, one per
//! centre. Free (basepoint-less) homotopy identifies words up to cyclic
//! permutation, which is what [`HomotopyWord::same_class`] decides. The
//! radial [`push_off`] map dilates a loop away from a centre it has crept
//! too close to; it fixes every sample's angular coordinate about that
//! centre and therefore preserves the word.

use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed by inherent f64 methods when std is in the test graph
use num_traits::Float;

use crate::error::{Error, Result};
use crate::loopspace::{DiscreteLoop, MarginNorm};
use crate::vec2::Vec2;

/// Consecutive-sample angle guard for winding-number evaluation (radians).
pub const ANGLE_GUARD: f64 = 0.1;

/// A freely reduced word in the free group on `n_generators` generators.
///
/// Letters are signed 1-based generator indices: `+i` for `a_i`, `-i` for
/// `a_i^{-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomotopyWord {
    letters: Vec<i32>,
    n_generators: usize,
}

impl HomotopyWord {
    /// Build a word, freely reducing adjacent inverse pairs.
    pub fn new(letters: Vec<i32>, n_generators: usize) -> Result<Self> {
        if n_generators == 0 {
            return Err(Error::InvalidConfig("word needs >= 1 generator".into()));
        }
        for &l in &letters {
            if l == 0 || l.unsigned_abs() as usize > n_generators {
                return Err(Error::InvalidConfig(alloc::format!(
                    "letter {l} out of range for {n_generators} generators"
                )));
            }
        }
        Ok(HomotopyWord {
            letters: reduce(letters),
            n_generators,
        })
    }

    /// Parse from the CLI syntax `"a1 a2^-1"`.
    pub fn parse(text: &str, n_generators: usize) -> Result<Self> {
        let mut letters = Vec::new();
        for token in text.split_whitespace() {
            let rest = token
                .strip_prefix('a')
                .ok_or_else(|| Error::InvalidConfig(alloc::format!("bad token `{token}`")))?;
            let (idx, sign) = match rest.split_once('^') {
                Some((i, "-1")) => (i, -1),
                Some((i, "1")) => (i, 1),
                Some(_) => {
                    return Err(Error::InvalidConfig(alloc::format!(
                        "bad exponent in `{token}` (only ^-1 and ^1 supported)"
                    )))
                }
                None => (rest, 1),
            };
            let i: i32 = idx
                .parse()
                .map_err(|_| Error::InvalidConfig(alloc::format!("bad token `{token}`")))?;
            if i <= 0 {
                return Err(Error::InvalidConfig(alloc::format!("bad token `{token}`")));
            }
            letters.push(sign * i);
        }
        HomotopyWord::new(letters, n_generators)
    }

    /// Render in the CLI syntax, `"e"` for the trivial word.
    pub fn display(&self) -> String {
        if self.letters.is_empty() {
            return "e".into();
        }
        let mut out = String::new();
        for (k, &l) in self.letters.iter().enumerate() {
            if k > 0 {
                out.push(' ');
            }
            if l > 0 {
                out.push_str(&alloc::format!("a{l}"));
            } else {
                out.push_str(&alloc::format!("a{}^-1", -l));
            }
        }
        out
    }

    pub fn letters(&self) -> &[i32] {
        &self.letters
    }

    pub fn n_generators(&self) -> usize {
        self.n_generators
    }

    pub fn is_trivial(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Signed letter count per generator (the abelianization).
    pub fn winding_vector(&self) -> Vec<i64> {
        let mut w = alloc::vec![0i64; self.n_generators];
        for &l in &self.letters {
            let i = (l.unsigned_abs() as usize) - 1;
            w[i] += if l > 0 { 1 } else { -1 };
        }
        w
    }

    /// The inverse word (reversed letters with flipped signs).
    pub fn inverse(&self) -> HomotopyWord {
        HomotopyWord {
            letters: self.letters.iter().rev().map(|&l| -l).collect(),
            n_generators: self.n_generators,
        }
    }

    /// Cyclic reduction: strip matching inverse letters from the two ends.
    pub fn cyclically_reduced(&self) -> HomotopyWord {
        let mut l = self.letters.clone();
        while l.len() >= 2 && l[0] == -l[l.len() - 1] {
            l.pop();
            l.remove(0);
        }
        HomotopyWord {
            letters: l,
            n_generators: self.n_generators,
        }
    }

    /// Equality of free-homotopy classes: reduced words equal up to cyclic
    /// permutation (after cyclic reduction). A word and its inverse are NOT
    /// identified here; time-reversal identification is a solution-counting
    /// policy applied by callers.
    pub fn same_class(&self, other: &HomotopyWord) -> bool {
        let a = self.cyclically_reduced();
        let b = other.cyclically_reduced();
        if a.letters.len() != b.letters.len() {
            return false;
        }
        let n = a.letters.len();
        if n == 0 {
            return true;
        }
        (0..n).any(|shift| (0..n).all(|i| a.letters[(i + shift) % n] == b.letters[i]))
    }

    /// Whether the word is NOT a proper power of a shorter sub-word.
    /// (Classes given by repeated sub-words may duplicate the sub-word's
    /// orbit; this is reported, never enforced.)
    pub fn is_primitive(&self) -> bool {
        let n = self.letters.len();
        if n <= 1 {
            return true;
        }
        for d in 1..n {
            if n % d == 0 && (0..n).all(|i| self.letters[i] == self.letters[i % d]) {
                return false;
            }
        }
        true
    }
}

/// Stack-based free reduction: cancel adjacent `g g^{-1}` pairs.
fn reduce(letters: Vec<i32>) -> Vec<i32> {
    let mut out: Vec<i32> = Vec::with_capacity(letters.len());
    for l in letters {
        if out.last() == Some(&-l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

/// One disjoint ray per centre, used to read off free-group words.
///
/// Rays point radially away from the centroid of the centres, rotated as a
/// whole in small increments until they are pairwise disjoint and clear of
/// every other centre. The construction is deterministic.
#[derive(Debug, Clone)]
pub struct CutSystem {
    bases: Vec<Vec2>,
    directions: Vec<Vec2>,
}

impl CutSystem {
    pub fn for_centers(centers: &[Vec2]) -> Result<CutSystem> {
        if centers.is_empty() {
            return Err(Error::InvalidConfig("cut system needs >= 1 centre".into()));
        }
        let n = centers.len();
        let centroid = centers.iter().fold(Vec2::ZERO, |a, &b| a + b) / (n as f64);
        let scale = centers
            .iter()
            .map(|c| c.distance(centroid))
            .fold(1.0_f64, f64::max);
        let base_dirs: Vec<Vec2> = centers
            .iter()
            .map(|&c| (c - centroid).normalized().unwrap_or(Vec2::new(1.0, 0.0)))
            .collect();

        const STEPS: usize = 720;
        for k in 0..STEPS {
            let phi = 2.0 * core::f64::consts::PI * (k as f64) / (STEPS as f64);
            let dirs: Vec<Vec2> = base_dirs.iter().map(|d| d.rotated(phi)).collect();
            if rays_admissible(centers, &dirs, 1e-6 * scale) {
                return Ok(CutSystem {
                    bases: centers.to_vec(),
                    directions: dirs,
                });
            }
        }
        Err(Error::InvalidConfig(
            "could not orient disjoint cut rays for this centre layout".into(),
        ))
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn ray(&self, i: usize) -> (Vec2, Vec2) {
        (self.bases[i], self.directions[i])
    }
}

fn rays_admissible(centers: &[Vec2], dirs: &[Vec2], clearance: f64) -> bool {
    let n = centers.len();
    for i in 0..n {
        // ray i must keep clear of every other centre
        for j in 0..n {
            if i == j {
                continue;
            }
            let rel = centers[j] - centers[i];
            let along = rel.dot(dirs[i]);
            if along >= 0.0 && rel.cross(dirs[i]).abs() <= clearance {
                return false;
            }
        }
        // rays must be pairwise disjoint
        for j in (i + 1)..n {
            let d = dirs[i].cross(dirs[j]);
            let rel = centers[j] - centers[i];
            if d.abs() <= 1e-12 {
                // parallel: reject only when collinear
                if rel.cross(dirs[i]).abs() <= clearance {
                    return false;
                }
                continue;
            }
            let s_i = rel.cross(dirs[j]) / d;
            let s_j = rel.cross(dirs[i]) / d;
            if s_i >= -clearance && s_j >= -clearance {
                return false;
            }
        }
    }
    true
}

/// Total signed turning of `u - center` around the origin, in whole turns.
///
/// Exact whenever consecutive samples subtend less than π at the centre;
/// larger jumps are rejected so callers can refine the grid.
pub fn winding_number(lp: &DiscreteLoop, center: Vec2) -> Result<i64> {
    let n = lp.grid_size();
    let mut total = 0.0_f64;
    for j in 0..n {
        let a = lp.samples()[j] - center;
        let b = lp.at(j + 1) - center;
        let delta = a.cross(b).atan2(a.dot(b));
        if delta.abs() >= core::f64::consts::PI - ANGLE_GUARD {
            return Err(Error::AmbiguousWinding {
                segment: j,
                angle: delta.abs(),
            });
        }
        total += delta;
    }
    Ok((total / (2.0 * core::f64::consts::PI)).round() as i64)
}

/// Read off the freely reduced word of signed cut-ray crossings.
pub fn homotopy_word(lp: &DiscreteLoop, cuts: &CutSystem) -> Result<HomotopyWord> {
    let n = lp.grid_size();
    let n_rays = cuts.len();

    // samples must not sit on a ray
    for (j, &u) in lp.samples().iter().enumerate() {
        for i in 0..n_rays {
            let (b, d) = cuts.ray(i);
            let rel = u - b;
            let along = rel.dot(d);
            if along >= 0.0 && rel.cross(d).abs() <= 1e-12 * along.max(1.0) {
                return Err(Error::SampleOnCut { sample: j, ray: i });
            }
        }
    }

    let mut letters: Vec<i32> = Vec::new();
    let mut crossings: Vec<(f64, i32)> = Vec::new();
    for j in 0..n {
        let a0 = lp.samples()[j];
        let e = lp.at(j + 1) - a0;
        crossings.clear();
        for i in 0..n_rays {
            let (b, d) = cuts.ray(i);
            let denom = e.cross(d);
            if denom.abs() <= 1e-300 {
                continue; // segment parallel to the ray
            }
            let t = (b - a0).cross(d) / e.cross(d);
            let s = (a0 - b).cross(e) / d.cross(e);
            if (0.0..1.0).contains(&t) && s > 0.0 {
                // positive crossing = counter-clockwise passage about the centre
                let sign = if d.cross(e) > 0.0 { 1 } else { -1 };
                crossings.push((t, sign * (i as i32 + 1)));
            }
        }
        crossings.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for w in crossings.windows(2) {
            if (w[1].0 - w[0].0).abs() < 1e-12 {
                return Err(Error::AmbiguousCrossing { segment: j });
            }
        }
        letters.extend(crossings.iter().map(|&(_, l)| l));
    }
    HomotopyWord::new(letters, n_rays)
}

/// Radial dilation about a centre: `u ↦ σ + k (u - σ)` with
/// `k = λ ε / dist(u, σ)` in the chosen margin norm, so the output sits at
/// distance exactly `λ ε`.
///
/// Angular coordinates about σ are fixed, so the homotopy word is preserved
/// as long as the swept annulus contains no other centre (guaranteed in the
/// near-collision regime where the map is used).
pub fn push_off(
    lp: &DiscreteLoop,
    center: Vec2,
    epsilon: f64,
    lambda: f64,
    norm: MarginNorm,
) -> Result<DiscreteLoop> {
    if !(epsilon > 0.0) || !(lambda > 1.0 && lambda <= 2.0) {
        return Err(Error::InvalidConfig(alloc::format!(
            "push-off needs epsilon > 0 and 1 < lambda <= 2, got ({epsilon}, {lambda})"
        )));
    }
    let dist = lp.center_distance(center, norm);
    if dist == 0.0 {
        return Err(Error::InvalidDilation { k: f64::INFINITY });
    }
    let k = lambda * epsilon / dist;
    if k <= 1.0 {
        return Err(Error::InvalidDilation { k });
    }
    DiscreteLoop::new(
        lp.samples()
            .iter()
            .map(|&u| center + (u - center) * k)
            .collect(),
    )
}
