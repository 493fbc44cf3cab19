//! Predicted sub-cell and point counts of an octree partition as functions of
//! depth, dimension and surface fraction, and their measured counterparts.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_dim, BoxCell, LevelSet};
use crate::octree::{partition_element, partition_volume, Partition};
use crate::quadrature::{assemble_scheme, BoxRuleKind, RuleIndexList, CSV_HEADER};

/// Average volume fraction of a randomly cut cube.
pub const V_BAR: f64 = 0.5;

/// Average cut measure s̄ of a randomly cut unit cube, fitted by
/// [`surface_constant`] with `SURFACE_SAMPLES` planes and `SURFACE_SEED`.
/// Integral geometry gives π/4 in 2D and 2/3 in 3D.
pub const S_BAR: [f64; 2] = [0.785_444_762_498_289_1, 0.666_783_724_900_905_9];
pub const SURFACE_SEED: u64 = 20_190_601;
pub const SURFACE_SAMPLES: usize = 1_000_000;

pub fn s_bar(d: usize) -> Result<f64> {
    check_dim(d)?;
    Ok(S_BAR[d - 2])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingInputs {
    pub d: usize,
    pub rho_max: u32,
    /// η_S = S / (s̄ h^{d−1}).
    pub eta_s: f64,
    /// Volume fraction η.
    pub eta: f64,
    /// Average points per sub-cell for levels 1..=ρ̄+1; the last entry is the
    /// tessellation level.
    pub q_bar: Vec<f64>,
    /// Tessellated cells per cut leaf.
    pub t_bar: f64,
    /// Points per direction of the equal-order box rule.
    pub q_line: f64,
}

impl ScalingInputs {
    /// Equal order everywhere: `q_line^d` on boxes and `q_tes` per tessellated cell.
    pub fn equal_order(d: usize, rho_max: u32, eta_s: f64, eta: f64, q_line: f64, q_tes: f64, t_bar: f64) -> Self {
        let mut q_bar = vec![q_line.powi(d as i32); rho_max as usize];
        q_bar.push(q_tes);
        ScalingInputs { d, rho_max, eta_s, eta, q_bar, t_bar, q_line }
    }

    fn validate(&self) -> Result<()> {
        check_dim(self.d)?;
        if self.rho_max < 1 {
            return Err(Error::InvalidArgument("depth must be at least 1".into()));
        }
        if !(self.eta_s > 0.0) || !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "need η_S > 0 and 0 < η < 1, got η_S = {}, η = {}",
                self.eta_s, self.eta
            )));
        }
        if self.q_bar.len() != self.rho_max as usize + 1 {
            return Err(Error::InvalidArgument(format!(
                "q_bar needs {} entries, got {}",
                self.rho_max + 1,
                self.q_bar.len()
            )));
        }
        Ok(())
    }

    /// ℓ̂ = ceil(log₂ η_S / (1 − d)) and whether it had to be clamped up to 1.
    pub fn ell_hat(&self) -> (u32, bool) {
        let raw = (self.eta_s.log2() / (1.0 - self.d as f64)).ceil();
        if raw < 1.0 {
            (1, true)
        } else {
            (raw as u32, false)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountPrediction {
    pub ell_hat: u32,
    /// ℓ̂ fell below 1 and was clamped; the formulas are outside their range.
    pub ell_hat_clamped: bool,
    /// Cut cells m⁰_ℓ for ℓ = 1..=ρ̄.
    pub m0: Vec<f64>,
    /// Preserved cells m⁺_ℓ for ℓ = 1..=ρ̄.
    pub m_plus: Vec<f64>,
    /// Points n_ℓ for ℓ = 1..=ρ̄+1.
    pub n: Vec<f64>,
    pub n_total: f64,
}

pub fn predict_counts(inp: &ScalingInputs) -> Result<CountPrediction> {
    inp.validate()?;
    let (ell_hat, clamped) = inp.ell_hat();
    let d = inp.d as i32;
    let rho = inp.rho_max;
    let m0 = (1..=rho)
        .map(|l| if l < ell_hat { 1.0 } else { inp.eta_s * 2f64.powi(l as i32 * (d - 1)) })
        .collect();
    let m_plus: Vec<f64> = (1..=rho)
        .map(|l| {
            if l > ell_hat {
                inp.eta_s * 2f64.powi(l as i32 * (d - 1) - 1)
            } else if inp.eta > 0.5 {
                2f64.powi(d) - 1.0
            } else {
                0.0
            }
        })
        .collect();
    let mut n: Vec<f64> = m_plus.iter().zip(&inp.q_bar).map(|(m, q)| q * m).collect();
    n.push(inp.q_bar[rho as usize] * inp.t_bar * inp.eta_s * 2f64.powi(rho as i32 * (d - 1)));
    let n_total = n.iter().sum();
    Ok(CountPrediction { ell_hat, ell_hat_clamped: clamped, m0, m_plus, n, n_total })
}

/// Equal-order closed form N ≈ η_S (q_tes t̄ + q_line^d / (2 − 2^{2−d})) 2^{ρ̄(d−1)}.
pub fn asymptotic_points(inp: &ScalingInputs) -> f64 {
    let d = inp.d as i32;
    let q_tes = *inp.q_bar.last().unwrap_or(&0.0);
    inp.eta_s * (q_tes * inp.t_bar + inp.q_line.powi(d) / (2.0 - 2f64.powi(2 - d))) * 2f64.powi(inp.rho_max as i32 * (d - 1))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SurfaceFraction {
    /// Trimmed boundary measure S.
    pub s: f64,
    pub eta_s: f64,
    pub eta: f64,
}

pub fn measure_surface_fraction(p: &Partition) -> SurfaceFraction {
    let s = p.surface_measure();
    let h = p.element.size;
    let s_bar = S_BAR[p.dim - 2];
    SurfaceFraction { s, eta_s: s / (s_bar * h.powi(p.dim as i32 - 1)), eta: partition_volume(p) / p.element.volume() }
}

/// Monte Carlo estimate of the mean cut measure of the unit cube under
/// isotropic uniformly distributed hyperplanes that hit it.
pub fn surface_constant(d: usize, samples: usize, seed: u64) -> Result<f64> {
    check_dim(d)?;
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = (d as f64).sqrt() / 2.0;
    let mut sum = 0.0;
    let mut hits = 0usize;
    while hits < samples {
        let n = loop {
            let mut v = [0.0; 3];
            for x in v.iter_mut().take(d) {
                *x = rng.gen_range(-1.0..1.0);
            }
            let r2: f64 = v.iter().map(|x| x * x).sum();
            if r2 > 1e-6 && r2 <= 1.0 {
                let r = r2.sqrt();
                break v.map(|x| x / r);
            }
        };
        let c = rng.gen_range(-radius..radius);
        if let Some(m) = plane_cut_measure(d, &n, c) {
            sum += m;
            hits += 1;
        }
    }
    Ok(sum / samples as f64)
}

/// Measure of {x ∈ [0,1]^d : n·(x − ½) = c}, or `None` when the plane misses.
fn plane_cut_measure(d: usize, n: &[f64; 3], c: f64) -> Option<f64> {
    let corner = |i: usize| -> [f64; 3] {
        let mut x = [0.0; 3];
        for (a, xa) in x.iter_mut().enumerate().take(d) {
            *xa = ((i >> a) & 1) as f64 - 0.5;
        }
        x
    };
    let g = |x: &[f64; 3]| n[0] * x[0] + n[1] * x[1] + n[2] * x[2] - c;
    let mut pts: Vec<[f64; 3]> = Vec::new();
    for i in 0..1usize << d {
        for a in 0..d {
            if i & (1 << a) != 0 {
                continue;
            }
            let (p, q) = (corner(i), corner(i | 1 << a));
            let (gp, gq) = (g(&p), g(&q));
            if (gp < 0.0) != (gq < 0.0) {
                let t = gp / (gp - gq);
                pts.push(std::array::from_fn(|k| p[k] + t * (q[k] - p[k])));
            }
        }
    }
    if pts.len() < d {
        return None;
    }
    if d == 2 {
        // a line crosses a convex polygon in exactly two edge points
        let (p, q) = (pts[0], pts[1]);
        return Some(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt());
    }
    let m = pts.iter().fold([0.0; 3], |acc, p| std::array::from_fn(|k| acc[k] + p[k] / pts.len() as f64));
    // in-plane frame for angular sorting
    let u = {
        let a = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let v = cross(n, &a);
        let r = dot(&v, &v).sqrt();
        v.map(|x| x / r)
    };
    let w = cross(n, &u);
    let angle = |p: &[f64; 3]| {
        let r: [f64; 3] = std::array::from_fn(|k| p[k] - m[k]);
        dot(&r, &w).atan2(dot(&r, &u))
    };
    pts.sort_by(|a, b| angle(a).total_cmp(&angle(b)));
    let mut area = 0.0;
    for i in 0..pts.len() {
        let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
        let ra: [f64; 3] = std::array::from_fn(|k| a[k] - m[k]);
        let rb: [f64; 3] = std::array::from_fn(|k| b[k] - m[k]);
        area += 0.5 * dot(&cross(&ra, &rb), n);
    }
    Some(area.abs())
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CountRow {
    pub level: u32,
    pub m0_predicted: f64,
    pub m0_measured: usize,
    pub m_plus_predicted: f64,
    pub m_plus_measured: usize,
    pub n_predicted: f64,
    pub n_measured: usize,
}

/// Predicted and measured counts per level for an equal-order scheme with
/// rule index `index` on every cell. The last row is the tessellation level.
pub fn compare_counts(field: &dyn LevelSet, element: &BoxCell, rho_max: u32, index: usize) -> Result<Vec<CountRow>> {
    let p = partition_element(field, element, rho_max)?;
    if p.is_untrimmed() || p.outside {
        return Err(Error::NotCut);
    }
    let d = p.dim;
    let sf = measure_surface_fraction(&p);
    let scheme = assemble_scheme(&p, &RuleIndexList::uniform(p.n_cells(), index), BoxRuleKind::Gauss)?;
    let mut n_measured = vec![0usize; rho_max as usize + 2];
    for id in 0..scheme.n_cells() {
        n_measured[scheme.levels[id] as usize] += scheme.cell_size(id);
    }
    let n_tess = p.tessellated.len();
    let q_tes = n_measured[rho_max as usize + 1] as f64 / n_tess.max(1) as f64;
    let t_bar = n_tess as f64 / p.cut_leaves.len().max(1) as f64;
    let inp = ScalingInputs::equal_order(d, rho_max, sf.eta_s, sf.eta, (index + 1) as f64, q_tes, t_bar);
    let pred = predict_counts(&inp)?;
    let mut rows = Vec::new();
    for l in 1..=rho_max {
        let m0_measured = if l == rho_max { p.cut_leaves.len() } else { partition_element(field, element, l)?.cut_leaves.len() };
        let i = l as usize - 1;
        rows.push(CountRow {
            level: l,
            m0_predicted: pred.m0[i],
            m0_measured,
            m_plus_predicted: pred.m_plus[i],
            m_plus_measured: p.levels[l as usize].len(),
            n_predicted: pred.n[i],
            n_measured: n_measured[l as usize],
        });
    }
    rows.push(CountRow {
        level: rho_max + 1,
        m0_predicted: 0.0,
        m0_measured: 0,
        m_plus_predicted: t_bar * pred.m0[rho_max as usize - 1],
        m_plus_measured: n_tess,
        n_predicted: pred.n[rho_max as usize],
        n_measured: n_measured[rho_max as usize + 1],
    });
    Ok(rows)
}

pub fn counts_to_csv(rows: &[CountRow]) -> String {
    let mut s = format!("{CSV_HEADER}\nlevel,m0_predicted,m0_measured,m_plus_predicted,m_plus_measured,n_predicted,n_measured\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{:.4},{},{:.4},{},{:.4},{}",
            r.level, r.m0_predicted, r.m0_measured, r.m_plus_predicted, r.m_plus_measured, r.n_predicted, r.n_measured
        );
    }
    s
}
