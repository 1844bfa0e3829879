//! Closed form against quadrature oracle, Gaussian identities and sampler
//! sanity checks, swept over a list of exponents.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::Result;
use crate::gaussian::{
    bivariate_upper_orthant, density_identity_check, gaussian_survival, slepian_identity_check, tail_lower_bound,
    IdentityRecord,
};
use crate::riesz::oracle::{field_covariance_oracle, segment_energy_oracle};
use crate::riesz::{
    c_beta_forms, dyadic_increment_correlation, field_covariance, increment_variance, make_params,
    rectangle_increment_variance, region_covariance, segment_cross_energy, shift_invariance_residual,
    v1_crosssection_covariance, v1_region, LightCone, ModelParams, PlanePoint, Segment, TimeBand, C_BETA_REL_TOL,
};
use crate::sampler::{assemble_covariance, factorize, v1_covariance_matrix, GridSpec};

#[derive(Debug, Clone, Serialize)]
pub struct SelftestSummary {
    pub betas: Vec<f64>,
    pub total: usize,
    pub passed: usize,
    pub failures: Vec<String>,
    pub checks: Vec<IdentityRecord>,
}

impl SelftestSummary {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

fn rel_dev(x: f64, y: f64) -> f64 {
    let scale = x.abs().max(y.abs());
    if scale == 0.0 {
        0.0
    } else {
        (x - y).abs() / scale
    }
}

fn four_point(p: &ModelParams, pts: &[(f64, f64, f64)]) -> f64 {
    let mut v = 0.0;
    for &(t1, l1, w1) in pts {
        for &(t2, l2, w2) in pts {
            v += w1 * w2 * field_covariance(p, &LightCone::rotated(t1, l1), &LightCone::rotated(t2, l2));
        }
    }
    v
}

fn model_checks(beta: f64, out: &mut Vec<IdentityRecord>) -> Result<()> {
    let p = make_params(beta)?;
    let b = [("beta", beta)];
    let (c1, c2) = c_beta_forms(beta);
    out.push(IdentityRecord::new("c_beta_forms_agree", &b, rel_dev(c1, c2), C_BETA_REL_TOL));

    for (a, bb, c, d) in [(0.0, 1.0, 0.0, 1.0), (0.0, 1.0, 2.0, 3.0), (-0.5, 0.7, 0.2, 1.9)] {
        let (s1, s2) = (Segment::new(a, bb)?, Segment::new(c, d)?);
        let dev = rel_dev(segment_cross_energy(&p, s1, s2), segment_energy_oracle(beta, s1, s2));
        out.push(IdentityRecord::new(
            "segment_energy_vs_quadrature",
            &[("beta", beta), ("a", a), ("b", bb), ("c", c), ("d", d)],
            dev,
            1e-8,
        ));
    }

    let bands: [(&str, Option<TimeBand>, Option<TimeBand>); 4] = [
        ("none", None, None),
        ("before", Some(TimeBand::before(1.0)?), Some(TimeBand::before(1.0)?)),
        ("after", Some(TimeBand::after(0.5)?), Some(TimeBand::after(0.5)?)),
        ("mixed", Some(TimeBand::new(0.2, 1.1)?), Some(TimeBand::after(0.4)?)),
    ];
    for (i, (name, ba, bb)) in bands.into_iter().enumerate() {
        let a = LightCone::banded(PlanePoint::from_tx(1.0 + 0.1 * i as f64, 0.0), ba);
        let c = LightCone::banded(PlanePoint::from_tx(1.6, 0.3 - 0.2 * i as f64), bb);
        let dev = rel_dev(field_covariance(&p, &a, &c), field_covariance_oracle(&p, &a, &c));
        out.push(IdentityRecord::new(format!("field_covariance_vs_quadrature_{name}"), &b, dev, 1e-8));
    }

    for (tau, lambda, h) in [(1.0, 1.0, 0.25), (0.3, 2.0, 1e-3)] {
        let (ca, cb) = (LightCone::rotated(tau, lambda), LightCone::rotated(tau, lambda + h));
        let combo =
            field_covariance(&p, &ca, &ca) + field_covariance(&p, &cb, &cb) - 2.0 * field_covariance(&p, &ca, &cb);
        let dev = (combo - increment_variance(&p, tau, lambda, h)?).abs();
        out.push(IdentityRecord::new(
            "increment_variance_three_cone",
            &[("beta", beta), ("tau", tau), ("lambda", lambda), ("h", h)],
            dev,
            1e-10,
        ));
    }

    let (tau, tau2, h) = (0.0, 1.0, 0.5);
    let rect = |lam: f64| [(tau2, lam + h, 1.0), (tau, lam + h, -1.0), (tau2, lam, -1.0), (tau, lam, 1.0)];
    let closed = rectangle_increment_variance(&p, tau, tau2, 1.0, h)?;
    out.push(IdentityRecord::new("rectangle_four_point", &b, (closed - four_point(&p, &rect(1.0))).abs(), 1e-9));
    let shifted = four_point(&p, &rect(7.0));
    out.push(IdentityRecord::new("rectangle_lambda_invariance", &b, (closed - shifted).abs(), 1e-10));

    let lams = [0.25, 0.5, 1.0, 1.5];
    let m = v1_covariance_matrix(&p, 1.0, &lams)?;
    let mut dev = 0.0f64;
    for (i, &l1) in lams.iter().enumerate() {
        for (j, &l2) in lams.iter().enumerate() {
            let region = region_covariance(&p, &v1_region(1.0, l1)?, &v1_region(1.0, l2)?);
            dev = dev.max((m.entries()[(i, j)] - region).abs());
            dev = dev.max((v1_crosssection_covariance(&p, 1.0, l1, l2)? - region).abs());
        }
    }
    out.push(IdentityRecord::new("v1_fbm_covariance", &b, dev, 1e-10));

    let grid = [(0.5, 0.5), (1.0, 0.25), (1.5, 1.0)];
    out.push(IdentityRecord::new("shift_invariance", &b, shift_invariance_residual(&p, 1.0, &grid)?, 1e-10));

    let cross = LightCone::banded(PlanePoint::from_tx(2.0, 0.0), Some(TimeBand::before(1.0)?));
    let other = LightCone::banded(PlanePoint::from_tx(1.5, 0.5), Some(TimeBand::after(1.0)?));
    out.push(IdentityRecord::new("disjoint_bands_uncorrelated", &b, field_covariance(&p, &cross, &other).abs(), 0.0));

    let (j, k, q) = (2, 6, 2.0f64);
    let z = |n: i32| [(1.0, 1.0 + q.powi(-n), 1.0), (1.0, 1.0 + q.powi(-n - 1), -1.0)];
    let cov = |x: i32, y: i32| {
        let mut v = 0.0;
        for &(t1, l1, w1) in &z(x) {
            for &(t2, l2, w2) in &z(y) {
                v += w1 * w2 * field_covariance(&p, &LightCone::rotated(t1, l1), &LightCone::rotated(t2, l2));
            }
        }
        v
    };
    let r_cones = cov(j, k) / (cov(j, j) * cov(k, k)).sqrt();
    let r = dyadic_increment_correlation(&p, 1.0, 1.0, q, j, k)?;
    out.push(IdentityRecord::new("dyadic_correlation_four_cone", &b, (r - r_cones).abs(), 1e-8));

    let g = GridSpec::new(vec![0.5, 1.0], vec![0.5, 0.75, 1.0], None)?;
    let c = assemble_covariance(&p, &g)?;
    out.push(IdentityRecord::new("grid_covariance_psd", &b, (-c.min_eigenvalue()).max(0.0), 1e-9));
    let f = factorize(&c, 1e-8)?;
    out.push(IdentityRecord::new("grid_covariance_factorizes", &b, f.jitter_used(), 1e-8));
    Ok(())
}

fn gaussian_checks(out: &mut Vec<IdentityRecord>) -> Result<()> {
    out.push(IdentityRecord::new(
        "gaussian_survival_reference",
        &[("x", 1.96)],
        (gaussian_survival(1.96) - 0.024_997_895_148_220_436).abs(),
        1e-15,
    ));
    for x in [1.5, 2.0, 6.0] {
        let gap = (tail_lower_bound(x) - gaussian_survival(x)).max(0.0);
        out.push(IdentityRecord::new("tail_lower_bound_below_survival", &[("x", x)], gap, 0.0));
    }
    for r in [-0.9f64, -0.3, 0.0, 0.5, 0.95] {
        let closed = 0.25 + r.asin() / (2.0 * PI);
        let dev = (bivariate_upper_orthant(0.0, 0.0, r)? - closed).abs();
        out.push(IdentityRecord::new("orthant_arcsine", &[("r", r)], dev, 1e-10));
    }
    let prod = gaussian_survival(0.7) * gaussian_survival(1.3);
    out.push(IdentityRecord::new(
        "orthant_independent_product",
        &[("g1", 0.7), ("g2", 1.3)],
        (bivariate_upper_orthant(0.7, 1.3, 0.0)? - prod).abs(),
        1e-15,
    ));
    for (g1, g2, r) in [(1.0, 1.0, 0.5), (0.5, 2.0, -0.4)] {
        let rep = slepian_identity_check(g1, g2, r)?;
        out.push(rep.derivative);
        out.push(rep.mean_value);
    }
    out.push(density_identity_check(0.3, -0.8, 0.4)?);
    Ok(())
}

/// Runs every check for each exponent in `betas`.
pub fn run_selftest(betas: &[f64]) -> Result<SelftestSummary> {
    let mut checks = Vec::new();
    for &beta in betas {
        model_checks(beta, &mut checks)?;
    }
    gaussian_checks(&mut checks)?;
    let failures: Vec<String> = checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| format!("{} {:?}: deviation {:e} > {:e}", c.name, c.inputs, c.deviation, c.tolerance))
        .collect();
    Ok(SelftestSummary {
        betas: betas.to_vec(),
        total: checks.len(),
        passed: checks.len() - failures.len(),
        failures,
        checks,
    })
}
