//! Channel realizations: UMi path loss, a Rician BS-RIS link and Rayleigh
//! RIS-user links for users dropped uniformly in a quarter annulus.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{complex_normal_matrix, complex_normal_vector, psd_sqrt};
use crate::model::SystemConfig;
use crate::{CMatrix, CVector};

/// One random draw of every channel in the system.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    h1: CMatrix,
    ris_corr_sqrt: CMatrix,
    h2: Vec<CVector>,
    user_positions: Vec<[f64; 2]>,
    // H1 · R^{1/2}, reused by every SINR evaluation
    cascade: CMatrix,
}

impl ChannelRealization {
    /// `h1` is M×N, `ris_corr_sqrt` N×N, each `h2[k]` has length N and
    /// already includes the user's amplitude path loss.
    pub fn new(
        h1: CMatrix,
        ris_corr_sqrt: CMatrix,
        h2: Vec<CVector>,
        user_positions: Vec<[f64; 2]>,
    ) -> Result<Self> {
        let n = h1.ncols();
        if h1.nrows() == 0 || n == 0 {
            return Err(Error::Dimension("H1 must be non-empty".into()));
        }
        if ris_corr_sqrt.shape() != (n, n) {
            return Err(Error::Dimension(format!(
                "RIS correlation root is {:?}, expected ({n}, {n})",
                ris_corr_sqrt.shape()
            )));
        }
        if let Some(bad) = h2.iter().position(|h| h.len() != n) {
            return Err(Error::Dimension(format!(
                "user {bad} channel length differs from N={n}"
            )));
        }
        if user_positions.len() != h2.len() {
            return Err(Error::Dimension(format!(
                "{} user channels but {} positions",
                h2.len(),
                user_positions.len()
            )));
        }
        let cascade = &h1 * &ris_corr_sqrt;
        Ok(Self {
            h1,
            ris_corr_sqrt,
            h2,
            user_positions,
            cascade,
        })
    }

    pub fn antennas(&self) -> usize {
        self.h1.nrows()
    }

    pub fn ris_elements(&self) -> usize {
        self.h1.ncols()
    }

    pub fn users(&self) -> usize {
        self.h2.len()
    }

    pub fn h1(&self) -> &CMatrix {
        &self.h1
    }

    pub fn ris_corr_sqrt(&self) -> &CMatrix {
        &self.ris_corr_sqrt
    }

    pub fn h2(&self) -> &[CVector] {
        &self.h2
    }

    pub fn user_positions(&self) -> &[[f64; 2]] {
        &self.user_positions
    }

    /// `H1 · R_RIS^{1/2}`.
    pub fn cascade(&self) -> &CMatrix {
        &self.cascade
    }

    /// Checks the realization against the dimensions of a configuration.
    pub fn check_dimensions(&self, config: &SystemConfig) -> Result<()> {
        if (self.antennas(), self.ris_elements(), self.users()) != (config.m, config.n, config.k) {
            return Err(Error::Dimension(format!(
                "channel is M={} N={} K={}, configuration is M={} N={} K={}",
                self.antennas(),
                self.ris_elements(),
                self.users(),
                config.m,
                config.n,
                config.k
            )));
        }
        Ok(())
    }

    /// Text record: a header line, a `dims` line, then each matrix as a
    /// `name rows cols` line followed by one `re im` pair per entry in
    /// row-major order. Numbers carry 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::from("ris-channel v1\n");
        let _ = writeln!(
            out,
            "dims {} {} {}",
            self.antennas(),
            self.ris_elements(),
            self.users()
        );
        write_matrix(&mut out, "H1", &self.h1);
        write_matrix(&mut out, "R_SQRT", &self.ris_corr_sqrt);
        let h2 = CMatrix::from_fn(self.users(), self.ris_elements(), |k, n| self.h2[k][n]);
        write_matrix(&mut out, "H2", &h2);
        let _ = writeln!(out, "POSITIONS {} 2", self.users());
        for [x, y] in &self.user_positions {
            let _ = writeln!(out, "{x:.16e} {y:.16e}");
        }
        out
    }

    /// Parses the record written by [`ChannelRealization::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let bad = |msg: &str| Error::Config(format!("channel record: {msg}"));
        if lines.next() != Some("ris-channel v1") {
            return Err(bad("missing 'ris-channel v1' header"));
        }
        let dims = lines.next().ok_or_else(|| bad("missing dims line"))?;
        let dims: Vec<&str> = dims.split_whitespace().collect();
        if dims.len() != 4 || dims[0] != "dims" {
            return Err(bad("malformed dims line"));
        }
        let parse_usize = |s: &str| s.parse::<usize>().map_err(|_| bad("bad dimension"));
        let (m, n, k) = (
            parse_usize(dims[1])?,
            parse_usize(dims[2])?,
            parse_usize(dims[3])?,
        );
        let h1 = read_matrix(&mut lines, "H1", m, n)?;
        let r = read_matrix(&mut lines, "R_SQRT", n, n)?;
        let h2m = read_matrix(&mut lines, "H2", k, n)?;
        let header = lines.next().ok_or_else(|| bad("missing POSITIONS block"))?;
        if header != format!("POSITIONS {k} 2") {
            return Err(bad("malformed POSITIONS header"));
        }
        let mut positions = Vec::with_capacity(k);
        for _ in 0..k {
            let (x, y) = read_pair(lines.next())?;
            positions.push([x, y]);
        }
        let h2 = (0..k).map(|u| h2m.row(u).transpose()).collect();
        Self::new(h1, r, h2, positions)
    }
}

fn write_matrix(out: &mut String, name: &str, m: &CMatrix) {
    let _ = writeln!(out, "{name} {} {}", m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            let _ = writeln!(out, "{:.16e} {:.16e}", z.re, z.im);
        }
    }
}

fn read_pair(line: Option<&str>) -> Result<(f64, f64)> {
    let err = || Error::Config("channel record: expected a pair of numbers".into());
    let line = line.ok_or_else(err)?;
    let mut it = line.split_whitespace().map(str::parse::<f64>);
    match (it.next(), it.next(), it.next()) {
        (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
        _ => Err(err()),
    }
}

fn read_matrix<'a>(
    lines: &mut impl Iterator<Item = &'a str>,
    name: &str,
    rows: usize,
    cols: usize,
) -> Result<CMatrix> {
    let header = lines.next().unwrap_or_default();
    if header != format!("{name} {rows} {cols}") {
        return Err(Error::Config(format!(
            "channel record: expected '{name} {rows} {cols}', found '{header}'"
        )));
    }
    let mut m = CMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            let (re, im) = read_pair(lines.next())?;
            m[(r, c)] = Complex64::new(re, im);
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    Los,
    Nlos,
}

/// 3GPP UMi distance law with antenna gains in dBi.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossModel {
    pub kind: LinkKind,
    pub gt_dbi: f64,
    pub gr_dbi: f64,
}

impl PathLossModel {
    pub const LOS_EXPONENT: f64 = 2.2;
    pub const LOS_INTERCEPT_DB: f64 = 35.95;
    pub const NLOS_EXPONENT: f64 = 3.67;
    pub const NLOS_INTERCEPT_DB: f64 = 33.05;

    pub fn los(gt_dbi: f64, gr_dbi: f64) -> Self {
        Self {
            kind: LinkKind::Los,
            gt_dbi,
            gr_dbi,
        }
    }

    pub fn nlos(gt_dbi: f64, gr_dbi: f64) -> Self {
        Self {
            kind: LinkKind::Nlos,
            gt_dbi,
            gr_dbi,
        }
    }
}

/// Linear power gain at distance `d` metres.
pub fn path_loss(d: f64, model: &PathLossModel) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Domain(format!(
            "distance must be positive and finite, got {d}"
        )));
    }
    let (exponent, intercept) = match model.kind {
        LinkKind::Los => (PathLossModel::LOS_EXPONENT, PathLossModel::LOS_INTERCEPT_DB),
        LinkKind::Nlos => (
            PathLossModel::NLOS_EXPONENT,
            PathLossModel::NLOS_INTERCEPT_DB,
        ),
    };
    Ok(10f64.powf((model.gt_dbi + model.gr_dbi - intercept) / 10.0) / d.powf(exponent))
}

/// Departure/arrival angles of the deterministic BS-RIS component.
/// Elevations lie in `[0, π]`, azimuths in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LosAngleSet {
    /// Per RIS element.
    pub theta_los1: Vec<f64>,
    pub phi_los1: Vec<f64>,
    /// Per BS antenna.
    pub theta_los2: Vec<f64>,
    pub phi_los2: Vec<f64>,
}

impl LosAngleSet {
    pub fn sample<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Self {
        let mut elevation_azimuth = |count: usize| -> (Vec<f64>, Vec<f64>) {
            (0..count)
                .map(|_| (rng.random::<f64>() * PI, rng.random::<f64>() * TAU))
                .unzip()
        };
        let (theta_los1, phi_los1) = elevation_azimuth(n);
        let (theta_los2, phi_los2) = elevation_azimuth(m);
        Self {
            theta_los1,
            phi_los1,
            theta_los2,
            phi_los2,
        }
    }
}

/// Deterministic LOS matrix; entry `(m, n)` is
/// `exp(j2π[m·d_bs·sinθ₁(n)sinφ₁(n) + n·d_ris·sinθ₂(m)sinφ₂(m)])` with
/// zero-based indices and spacings in wavelengths.
pub fn los_steering_matrix(
    m: usize,
    n: usize,
    angles: &LosAngleSet,
    d_bs_over_lambda: f64,
    d_ris_over_lambda: f64,
) -> Result<CMatrix> {
    if !(d_bs_over_lambda > 0.0 && d_ris_over_lambda > 0.0) {
        return Err(Error::Domain("element spacings must be positive".into()));
    }
    if angles.theta_los1.len() != n
        || angles.phi_los1.len() != n
        || angles.theta_los2.len() != m
        || angles.phi_los2.len() != m
    {
        return Err(Error::Dimension(format!(
            "angle set does not match M={m}, N={n}"
        )));
    }
    Ok(CMatrix::from_fn(m, n, |row, col| {
        let bs = row as f64
            * d_bs_over_lambda
            * angles.theta_los1[col].sin()
            * angles.phi_los1[col].sin();
        let ris = col as f64
            * d_ris_over_lambda
            * angles.theta_los2[row].sin()
            * angles.phi_los2[row].sin();
        Complex64::from_polar(1.0, TAU * (bs + ris))
    }))
}

/// `count` points uniform over the first-quadrant annulus `r_min <= r <= r_max`.
pub fn sample_positions<R: Rng + ?Sized>(
    count: usize,
    r_min: f64,
    r_max: f64,
    rng: &mut R,
) -> Vec<[f64; 2]> {
    let (a, b) = (r_min * r_min, r_max * r_max);
    (0..count)
        .map(|_| {
            // area-uniform: r² is uniform on [r_min², r_max²]
            let r = (a + rng.random::<f64>() * (b - a)).sqrt();
            let angle = rng.random::<f64>() * PI / 2.0;
            [r * angle.cos(), r * angle.sin()]
        })
        .collect()
}

pub fn sample_user_positions<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Vec<[f64; 2]> {
    sample_positions(config.k, config.geometry.r_min, config.geometry.r_max, rng)
}

/// Square root of the RIS spatial correlation: identity when
/// `correlation == 0`, otherwise the root of `R[a,b] = ρ^{|a-b|}`.
pub fn ris_correlation_sqrt(n: usize, correlation: f64) -> CMatrix {
    if correlation == 0.0 {
        return CMatrix::identity(n, n);
    }
    let r = CMatrix::from_fn(n, n, |a, b| {
        Complex64::from(correlation.powi(a.abs_diff(b) as i32))
    });
    psd_sqrt(&r)
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Draws a full realization. The draw order is positions, LOS angles,
/// the scattered BS-RIS component, then one user channel at a time.
pub fn sample_channel<R: Rng + ?Sized>(
    config: &SystemConfig,
    rng: &mut R,
) -> Result<ChannelRealization> {
    config.validate()?;
    let (m, n) = (config.m, config.n);
    let ris = config.geometry.ris_position;
    let positions = sample_user_positions(config, rng);

    let angles = LosAngleSet::sample(m, n, rng);
    let los = los_steering_matrix(
        m,
        n,
        &angles,
        config.d_bs_over_lambda,
        config.d_ris_over_lambda,
    )?;
    let scattered = complex_normal_matrix(m, n, rng);
    let bs_link = PathLossModel::los(config.gains.ris_dbi, config.gains.bs_dbi);
    let pl = path_loss(distance(ris, [0.0, 0.0]), &bs_link)?;
    let kappa = config.kappa;
    let (w_los, w_nlos) = if kappa.is_infinite() {
        (1.0, 0.0)
    } else {
        ((kappa / (kappa + 1.0)).sqrt(), (1.0 / (kappa + 1.0)).sqrt())
    };
    let h1 = (los * Complex64::from(w_los) + scattered * Complex64::from(w_nlos))
        * Complex64::from((pl / n as f64).sqrt());

    let user_link = PathLossModel::nlos(config.gains.user_dbi, config.gains.ris_dbi);
    let h2 = positions
        .iter()
        .map(|&p| {
            let amplitude = path_loss(distance(p, ris), &user_link)?.sqrt();
            Ok(complex_normal_vector(n, rng) * Complex64::from(amplitude))
        })
        .collect::<Result<Vec<_>>>()?;

    ChannelRealization::new(
        h1,
        ris_correlation_sqrt(n, config.ris_correlation),
        h2,
        positions,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn los_unit_distance_cancels() {
        let pl = path_loss(1.0, &PathLossModel::los(35.95, 0.0)).unwrap();
        assert_relative_eq!(pl, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn los_ten_metres() {
        let pl = path_loss(10.0, &PathLossModel::los(5.0, 0.0)).unwrap();
        let expect = 10f64.powf(-3.095) / 10f64.powf(2.2);
        assert_relative_eq!(pl, expect, max_relative = 1e-14);
        assert_relative_eq!(pl, 5.07e-6, max_relative = 2e-3);
    }

    #[test]
    fn nlos_fifty_metres() {
        let pl = path_loss(50.0, &PathLossModel::nlos(0.0, 0.0)).unwrap();
        assert_relative_eq!(
            pl,
            10f64.powf(-3.305) / 50f64.powf(3.67),
            max_relative = 1e-14
        );
    }

    #[test]
    fn nonpositive_distance_rejected() {
        let model = PathLossModel::nlos(0.0, 0.0);
        assert!(matches!(path_loss(0.0, &model), Err(Error::Domain(_))));
        assert!(matches!(path_loss(-3.0, &model), Err(Error::Domain(_))));
    }

    #[test]
    fn steering_matrix_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let angles = LosAngleSet::sample(5, 7, &mut rng);
        let h = los_steering_matrix(5, 7, &angles, 0.5, 0.5).unwrap();
        assert!((h[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(h.iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
        assert!(angles
            .theta_los1
            .iter()
            .chain(&angles.theta_los2)
            .all(|&t| (0.0..=PI).contains(&t)));
        assert!(angles
            .phi_los1
            .iter()
            .chain(&angles.phi_los2)
            .all(|&t| (0.0..TAU).contains(&t)));
    }

    #[test]
    fn steering_matrix_hand_value() {
        let half_pi = PI / 2.0;
        let angles = LosAngleSet {
            theta_los1: vec![half_pi],
            phi_los1: vec![half_pi],
            theta_los2: vec![0.3, 1.1],
            phi_los2: vec![0.2, 2.0],
        };
        let h = los_steering_matrix(2, 1, &angles, 0.5, 0.5).unwrap();
        assert!((h[(1, 0)] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn positions_inside_quarter_annulus() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts = sample_positions(500, 10.0, 70.0, &mut rng);
        for [x, y] in pts {
            let r = x.hypot(y);
            assert!((10.0..=70.0).contains(&r));
            assert!(x >= 0.0 && y >= 0.0);
        }
        assert!(sample_positions(0, 10.0, 70.0, &mut rng).is_empty());
    }

    #[test]
    fn mean_radius_matches_area_integral() {
        // E[r] = ∫ r · r dr / ∫ r dr over [r_min, r_max]
        let (a, b) = (10.0f64, 70.0f64);
        let analytic = 2.0 / 3.0 * (b.powi(3) - a.powi(3)) / (b * b - a * a);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = sample_positions(100_000, a, b, &mut rng);
        let mean = pts.iter().map(|p| p[0].hypot(p[1])).sum::<f64>() / pts.len() as f64;
        assert_relative_eq!(mean, analytic, max_relative = 0.01);
    }

    #[test]
    fn sampled_shapes() {
        let cfg = SystemConfig {
            m: 3,
            n: 5,
            k: 4,
            ..SystemConfig::default()
        };
        let chan = sample_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(chan.h1().shape(), (3, 5));
        assert_eq!(chan.ris_corr_sqrt().shape(), (5, 5));
        assert_eq!(chan.h2().len(), 4);
        assert!(chan.h2().iter().all(|h| h.len() == 5));
        chan.check_dimensions(&cfg).unwrap();
    }

    #[test]
    fn same_seed_same_channel() {
        let cfg = SystemConfig {
            m: 4,
            n: 6,
            k: 3,
            ..SystemConfig::default()
        };
        let a = sample_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        let b = sample_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        let c = sample_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(78)).unwrap();
        assert_ne!(a.to_text(), c.to_text());
    }

    #[test]
    fn large_kappa_reduces_to_los_component() {
        let cfg = SystemConfig {
            m: 4,
            n: 6,
            k: 2,
            kappa: 1e9,
            ..SystemConfig::default()
        };
        let seed = 5;
        let chan = sample_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        // replay the draw order to recover the LOS angles
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let _ = sample_user_positions(&cfg, &mut rng);
        let angles = LosAngleSet::sample(cfg.m, cfg.n, &mut rng);
        let los = los_steering_matrix(cfg.m, cfg.n, &angles, 0.5, 0.5).unwrap();
        let pl = path_loss(0.5f64.hypot(0.5), &PathLossModel::los(0.0, 5.0)).unwrap();
        let scale = (pl / cfg.n as f64).sqrt();
        for (a, b) in chan.h1().iter().zip(los.iter()) {
            assert!((a - b * scale).norm() <= 1e-3 * scale);
        }
    }

    #[test]
    fn user_channel_variance_matches_path_loss() {
        let cfg = SystemConfig {
            m: 2,
            n: 4,
            k: 1,
            ..SystemConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        // fix the user position: variance is conditional on distance
        let pos = [30.0, 20.0];
        let d = (pos[0] - 0.5f64).hypot(pos[1] - 0.5);
        let pl = path_loss(d, &PathLossModel::nlos(0.0, 0.0)).unwrap();
        let draws = 10_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let h = complex_normal_vector(cfg.n, &mut rng) * Complex64::from(pl.sqrt());
            acc += h.norm_squared() / cfg.n as f64;
        }
        assert_relative_eq!(acc / draws as f64, pl, max_relative = 0.05);

        // and through the full sampler, normalised by each draw's own path loss
        let mut acc = 0.0;
        for _ in 0..draws {
            let chan = sample_channel(&cfg, &mut rng).unwrap();
            let p = chan.user_positions()[0];
            let pl = path_loss(distance(p, [0.5, 0.5]), &PathLossModel::nlos(0.0, 0.0)).unwrap();
            acc += chan.h2()[0].norm_squared() / (cfg.n as f64 * pl);
        }
        assert_relative_eq!(acc / draws as f64, 1.0, max_relative = 0.05);
    }

    #[test]
    fn bs_ris_energy_concentrates() {
        let cfg = SystemConfig {
            m: 4,
            n: 8,
            k: 1,
            ..SystemConfig::default()
        };
        let pl = path_loss(0.5f64.hypot(0.5), &PathLossModel::los(0.0, 5.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 10_000;
        let mean: f64 = (0..draws)
            .map(|_| sample_channel(&cfg, &mut rng).unwrap().h1().norm_squared())
            .sum::<f64>()
            / draws as f64;
        assert_relative_eq!(mean, cfg.m as f64 * pl, max_relative = 0.05);
    }

    #[test]
    fn correlated_root_is_used() {
        let root = ris_correlation_sqrt(6, 0.7);
        let r = &root * root.adjoint();
        for a in 0usize..6 {
            for b in 0..6 {
                let expect = 0.7f64.powi(a.abs_diff(b) as i32);
                assert!((r[(a, b)] - Complex64::from(expect)).norm() < 1e-10);
            }
        }
        let cfg = SystemConfig {
            m: 2,
            n: 6,
            k: 1,
            ris_correlation: 0.7,
            ..SystemConfig::default()
        };
        let chan = sample_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        assert!((chan.ris_corr_sqrt() - &root).norm() < 1e-12);
        assert_eq!(ris_correlation_sqrt(3, 0.0), CMatrix::identity(3, 3));
    }

    #[test]
    fn text_record_round_trip() {
        let cfg = SystemConfig {
            m: 3,
            n: 4,
            k: 2,
            ris_correlation: 0.3,
            ..SystemConfig::default()
        };
        let chan = sample_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let text = chan.to_text();
        assert!(text.starts_with("ris-channel v1\ndims 3 4 2\nH1 3 4\n"));
        assert_eq!(ChannelRealization::from_text(&text).unwrap(), chan);
        assert!(ChannelRealization::from_text("ris-channel v1\ndims 1 1 1\n").is_err());
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let h1 = CMatrix::zeros(2, 3);
        let err = ChannelRealization::new(h1.clone(), CMatrix::identity(2, 2), vec![], vec![]);
        assert!(matches!(err, Err(Error::Dimension(_))));
        let err = ChannelRealization::new(
            h1,
            CMatrix::identity(3, 3),
            vec![CVector::zeros(2)],
            vec![[0.0, 0.0]],
        );
        assert!(matches!(err, Err(Error::Dimension(_))));
    }

    proptest! {
        #[test]
        fn path_loss_strictly_decreasing(d1 in 0.01f64..500.0, frac in 1.0001f64..10.0, los in any::<bool>()) {
            let model = if los { PathLossModel::los(5.0, 0.0) } else { PathLossModel::nlos(0.0, 0.0) };
            let near = path_loss(d1, &model).unwrap();
            let far = path_loss(d1 * frac, &model).unwrap();
            prop_assert!(near > far && far > 0.0);
        }
    }
}
