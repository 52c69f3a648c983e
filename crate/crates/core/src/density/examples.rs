//! Probes tied to the three example constructions.

use serde::{Deserialize, Serialize};

use super::{family_panel, run_probe, cloud_panel, Denominator, ProbeConfig, ProbeResult, RhoRule};
use crate::constructions::{cantor_cloud, example_cloud, fs_cloud, ExampleParams, RectFamily, WeightedCloud};
use crate::error::{invalid, Error, Result};
use crate::hgeom::Point;

/// Radii `r_k = 4 h_(k+1)` for the admissible `k` in `1..level`.
pub fn ex1_radii(level: u32) -> Result<Vec<(u32, f64)>> {
    if level < 2 {
        return invalid(format!("Example 1 probes need level >= 2 (r_k = 4 h_(k+1) with 1 <= k < level), got {level}"));
    }
    Ok((1..level).map(|k| (k, 4.0 * ExampleParams::Example1.h(k + 1))).collect())
}

/// Example 1 at `r_k = 4 h_(k+1)`, `rho = r/8`, denominator `2r`.
pub fn ex1_probe(level: u32, samples_per_rect: usize, panel: usize) -> Result<ProbeResult> {
    ex1_radii(level)?;
    let (fam, cloud) = example_cloud(ExampleParams::Example1, level, samples_per_rect)?;
    ex1_probe_on(&fam, &cloud, &family_panel(&fam, panel))
}

pub fn ex1_probe_on(family: &RectFamily, cloud: &WeightedCloud, points: &[Point]) -> Result<ProbeResult> {
    let radii = ex1_radii(family.level)?.into_iter().map(|(_, r)| r).collect();
    let cfg = ProbeConfig {
        s: 1.0,
        radii,
        rho_rule: RhoRule::Fixed { fraction: 0.125 },
        denominator: Denominator::TwoRPowS,
        base_points: points.to_vec(),
        seed: 0,
    };
    run_probe(cloud, "ex1", &cfg)
}

/// The `k` with `2^(1-k) <= r < 2^(2-k)`, checked against `2^k > 68M` and the built level.
pub fn ex2_window_level(m: f64, level: u32, r: f64) -> Result<u32> {
    let params = ExampleParams::example2(m)?;
    if !(r > 0.0 && r < 1.0) {
        return invalid(format!("radius {r} lies in no window 2^(1-k) <= r < 2^(2-k) with k >= 2"));
    }
    let k = (-r.log2()).ceil() as u32 + 1;
    let k0 = params.asymptotic_level().ok_or_else(|| Error::InvalidArgument(format!("no level has 2^k > 68M for M = {m}")))?;
    if k < k0 {
        return invalid(format!(
            "radius {r} lies in the window [2^{}, 2^{}) with k = {k}, but the estimate needs 2^k > 68M = {} (k >= {k0})",
            1 - k as i64,
            2 - k as i64,
            68.0 * m
        ));
    }
    if k + 1 > level {
        return invalid(format!(
            "radius {r} lies in the window [2^{}, 2^{}) with k = {k}, which needs level >= {} (built {level})",
            1 - k as i64,
            2 - k as i64,
            k + 1
        ));
    }
    Ok(k)
}

/// Example 2 with `rho = M r^2`, denominator `2r`. Read the minimum.
pub fn ex2_probe(m: f64, level: u32, radii: &[f64], samples_per_rect: usize, panel: usize) -> Result<ProbeResult> {
    let params = ExampleParams::example2(m)?;
    if params.asymptotic_level().is_none_or(|k0| k0 + 1 > level) {
        return invalid(format!("no radius window is usable at level {level}: need 2^k > 68M = {} and level >= k + 1", 68.0 * m));
    }
    for &r in radii {
        ex2_window_level(m, level, r)?;
    }
    let (fam, cloud) = example_cloud(params, level, samples_per_rect)?;
    ex2_probe_on(m, &cloud, radii, &family_panel(&fam, panel))
}

pub fn ex2_probe_on(m: f64, cloud: &WeightedCloud, radii: &[f64], points: &[Point]) -> Result<ProbeResult> {
    for &r in radii {
        ex2_window_level(m, cloud.level, r)?;
    }
    let cfg = ProbeConfig {
        s: 1.0,
        radii: radii.to_vec(),
        rho_rule: RhoRule::Quadratic { m },
        denominator: Denominator::TwoRPowS,
        base_points: points.to_vec(),
        seed: 0,
    };
    run_probe(cloud, "ex2", &cfg)
}

/// Empirical constants of the Cantor annulus bound and of the resulting probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ex3Constants {
    pub c0: f64,
    pub cd: f64,
    /// slab fraction `c0 / 6`
    pub delta_s: f64,
}

/// Candidates `c0 = 2^-j / 4` for `j < HDC_GRID_LEN`.
pub const HDC_GRID_LEN: u32 = 11;

/// Mass of `{t : c0 r <= |t - t0| <= r/4}` in a t-axis cloud given sorted `ts` and prefix sums.
fn annulus_sorted(ts: &[f64], prefix: &[f64], t0: f64, c0: f64, r: f64) -> f64 {
    let (near, far) = (c0 * r, 0.25 * r);
    if near > far {
        return 0.0;
    }
    let mass = |lo: f64, hi: f64| {
        let a = ts.partition_point(|&t| t < lo);
        let b = ts.partition_point(|&t| t <= hi);
        if b > a {
            prefix[b] - prefix[a]
        } else {
            0.0
        }
    };
    mass(t0 + near, t0 + far) + mass(t0 - far, t0 - near)
}

fn sorted_with_prefix(cloud: &WeightedCloud) -> (Vec<f64>, Vec<f64>) {
    let mut pairs: Vec<(f64, f64)> = cloud.iter().map(|(p, w)| (p.t, w)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let ts = pairs.iter().map(|p| p.0).collect();
    let mut prefix = Vec::with_capacity(pairs.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for (_, w) in &pairs {
        acc += w;
        prefix.push(acc);
    }
    (ts, prefix)
}

/// Annulus mass around `t0` in a t-axis cloud.
pub fn annulus_mass(cloud: &WeightedCloud, t0: f64, c0: f64, r: f64) -> f64 {
    let (ts, prefix) = sorted_with_prefix(cloud);
    annulus_sorted(&ts, &prefix, t0, c0, r)
}

/// Largest `c0` on the grid for which `annulus / r^d` stays positive over every
/// cloud point and every radius in `(0, 1)`, with `cd` the minimum of that ratio.
pub fn estimate_hdc(cantor: &WeightedCloud, d: f64, radii: &[f64]) -> Result<(f64, f64)> {
    if let Some(p) = cantor.points.iter().find(|p| p.x != 0.0 || p.y != 0.0) {
        return invalid(format!("Cantor cloud must lie on the t-axis, found {p:?}"));
    }
    let radii: Vec<f64> = radii.iter().copied().filter(|&r| r > 0.0 && r < 1.0).collect();
    if radii.is_empty() {
        return invalid("annulus estimate needs radii in (0, 1)");
    }
    let (ts, prefix) = sorted_with_prefix(cantor);
    for j in 0..HDC_GRID_LEN {
        let c0 = 0.25 * 0.5f64.powi(j as i32);
        let cd = ts
            .iter()
            .flat_map(|&t0| radii.iter().map(move |&r| (t0, r)))
            .map(|(t0, r)| annulus_sorted(&ts, &prefix, t0, c0, r) / r.powf(d))
            .fold(f64::INFINITY, f64::min);
        if cd > 0.0 {
            return Ok((c0, cd));
        }
    }
    Err(Error::Degenerate(format!(
        "no c0 in {{2^-j/4 : j < {HDC_GRID_LEN}}} gives a positive annulus bound on this Cantor cloud"
    )))
}

/// Example 3: estimate `(c0, cd)` on `C_d`, then probe `F_s` with `rho = (c0/6) r`, denominator `r^s`.
pub fn ex3_probe(d: f64, qh_depth: u32, cantor_depth: u32, radii: &[f64], panel: usize) -> Result<ProbeResult> {
    let cantor = cantor_cloud(d, cantor_depth)?;
    let fs = fs_cloud(d, qh_depth, cantor_depth)?;
    ex3_probe_on(&fs, &cantor, d, radii, &cloud_panel(&fs, panel))
}

pub fn ex3_probe_on(fs: &WeightedCloud, cantor: &WeightedCloud, d: f64, radii: &[f64], points: &[Point]) -> Result<ProbeResult> {
    if !(d > 0.0 && d < 1.0) {
        return invalid(format!("d must lie in (0, 1), got {d}"));
    }
    let (c0, cd) = estimate_hdc(cantor, d, radii)?;
    let delta_s = c0 / 6.0;
    let cfg = ProbeConfig {
        s: 2.0 + d,
        radii: radii.to_vec(),
        rho_rule: RhoRule::Fixed { fraction: delta_s },
        denominator: Denominator::RPowS,
        base_points: points.to_vec(),
        seed: 0,
    };
    let mut res = run_probe(fs, "ex3", &cfg)?;
    res.constants = Some(Ex3Constants { c0, cd, delta_s });
    Ok(res)
}
