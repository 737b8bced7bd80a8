//! Line-of-sight THz channel generation.
//!
//! The BS→IRS link is a rank-one outer product of two ULA steering vectors
//! scaled by the spreading/absorption loss; the IRS→user link is a scaled,
//! conjugated steering vector stored as an `M×1` column.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cis, Cplx, Real};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Physical parameters of one link realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams<T> {
    pub carrier_freq_hz: T,
    pub d1_m: T,
    pub d2_m: T,
    pub mu_abs_per_m: T,
    pub antenna_spacing_m: T,
    pub n_bs: usize,
    pub m_irs: usize,
    /// Departure angle at the BS array.
    pub theta_t_rad: T,
    /// Arrival angle at the IRS.
    pub theta_r_rad: T,
    /// Departure angle from the IRS towards the user.
    pub theta_u_rad: T,
    pub c_mps: T,
}

impl<T: Real> ChannelParams<T> {
    /// Parameters with half-wavelength spacing and broadside angles.
    pub fn broadside(carrier_freq_hz: T, d1_m: T, d2_m: T, n_bs: usize, m_irs: usize) -> Self {
        let c = T::lit(SPEED_OF_LIGHT);
        Self {
            carrier_freq_hz,
            d1_m,
            d2_m,
            mu_abs_per_m: T::zero(),
            antenna_spacing_m: c / (T::two() * carrier_freq_hz),
            n_bs,
            m_irs,
            theta_t_rad: T::zero(),
            theta_r_rad: T::zero(),
            theta_u_rad: T::zero(),
            c_mps: c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |x: T, what: &str| {
            if x > T::zero() && x.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain(format!("{what} must be positive and finite, got {x}")))
            }
        };
        pos(self.carrier_freq_hz, "carrier_freq_hz")?;
        pos(self.d1_m, "d1_m")?;
        pos(self.d2_m, "d2_m")?;
        pos(self.c_mps, "c_mps")?;
        pos(self.antenna_spacing_m, "antenna_spacing_m")?;
        if !(self.mu_abs_per_m >= T::zero()) {
            return Err(Error::Domain(format!(
                "mu_abs_per_m must be non-negative, got {}",
                self.mu_abs_per_m
            )));
        }
        if self.n_bs == 0 || self.m_irs == 0 {
            return Err(Error::Domain("n_bs and m_irs must be at least 1".into()));
        }
        let lim = T::FRAC_PI_2();
        for (name, th) in [
            ("theta_t_rad", self.theta_t_rad),
            ("theta_r_rad", self.theta_r_rad),
            ("theta_u_rad", self.theta_u_rad),
        ] {
            if !(th > -lim && th < lim) {
                return Err(Error::Domain(format!("{name} must lie in (-pi/2, pi/2), got {th}")));
            }
        }
        Ok(())
    }
}

/// Generated channel matrices: `h_bs_irs` is `M×N`, `g_irs_user` is `M×1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPair<T> {
    pub h_bs_irs: Array2<Cplx<T>>,
    pub g_irs_user: Array1<Cplx<T>>,
}

impl<T: Real> ChannelPair<T> {
    pub fn n_bs(&self) -> usize {
        self.h_bs_irs.ncols()
    }

    pub fn m_irs(&self) -> usize {
        self.h_bs_irs.nrows()
    }

    pub fn is_finite(&self) -> bool {
        self.h_bs_irs
            .iter()
            .chain(self.g_irs_user.iter())
            .all(crate::scalar::is_finite_c)
    }
}

/// Free-space spreading loss with exponential molecular absorption,
/// `c / (4π f d) · exp(-μ d / 2)`.
pub fn path_loss<T: Real>(f: T, d: T, mu: T, c: T) -> Result<T> {
    if !(f > T::zero()) {
        return Err(Error::Domain(format!("carrier frequency must be positive, got {f}")));
    }
    if !(d > T::zero()) {
        return Err(Error::Domain(format!("distance must be positive, got {d}")));
    }
    if !(mu >= T::zero()) {
        return Err(Error::Domain(format!("absorption must be non-negative, got {mu}")));
    }
    let spreading = c / (T::lit(4.0) * T::PI() * f * d);
    Ok(spreading * (-T::half() * mu * d).exp())
}

/// ULA response with entry `k` equal to `exp(jπkυ)`.
pub fn steering_vector<T: Real>(n_elems: usize, upsilon: T) -> Array1<Cplx<T>> {
    Array1::from_shape_fn(n_elems, |k| {
        if k == 0 {
            Cplx::new(T::one(), T::zero())
        } else {
            cis(T::PI() * T::from_usize(k).unwrap() * upsilon)
        }
    })
}

/// `2 d₀ f sin θ / c`.
pub fn spatial_frequency<T: Real>(d0: T, f: T, theta: T, c: T) -> T {
    T::two() * d0 * f * theta.sin() / c
}

/// Builds `H = ρ(f,d₁) a_M(υ_r) a_N(υ_t)ᴴ` and `g = ρ(f,d₂) conj(a_M(υ_u))`.
pub fn make_channels<T: Real>(params: &ChannelParams<T>) -> Result<ChannelPair<T>> {
    params.validate()?;
    let p = params;
    let rho1 = path_loss(p.carrier_freq_hz, p.d1_m, p.mu_abs_per_m, p.c_mps)?;
    let rho2 = path_loss(p.carrier_freq_hz, p.d2_m, p.mu_abs_per_m, p.c_mps)?;
    let ups = |theta| spatial_frequency(p.antenna_spacing_m, p.carrier_freq_hz, theta, p.c_mps);

    let a_rx = steering_vector(p.m_irs, ups(p.theta_r_rad));
    let a_tx = steering_vector(p.n_bs, ups(p.theta_t_rad));
    let a_user = steering_vector(p.m_irs, ups(p.theta_u_rad));

    let h = Array2::from_shape_fn((p.m_irs, p.n_bs), |(m, n)| a_rx[m] * a_tx[n].conj() * rho1);
    let g = a_user.mapv(|z| z.conj() * rho2);
    Ok(ChannelPair {
        h_bs_irs: h,
        g_irs_user: g,
    })
}

/// Scenario-level description used to draw [`ChannelParams`] per seed.
///
/// Defaults: 0.1 THz carrier, `M = 150`, 1 MHz bandwidth, −174 dBm/Hz noise
/// density, 10×10 m area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub carrier_freq_hz: f64,
    pub mu_abs_per_m: f64,
    /// Element spacing; half a wavelength when absent.
    pub antenna_spacing_m: Option<f64>,
    pub n_bs: usize,
    pub m_irs: usize,
    pub bandwidth_hz: f64,
    pub noise_dbm_per_hz: f64,
    pub area_m: f64,
    pub bs_pos: [f64; 2],
    pub irs_pos: [f64; 2],
    /// Fixed BS–IRS distance; derived from the node positions when absent.
    pub d1_m: Option<f64>,
    /// Fixed IRS–user distance; derived from a sampled user position when absent.
    pub d2_m: Option<f64>,
    /// Sampled users closer than this to the IRS are redrawn (far-field model).
    pub min_user_distance_m: f64,
    pub c_mps: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            carrier_freq_hz: 0.1e12,
            mu_abs_per_m: 0.0033,
            antenna_spacing_m: None,
            n_bs: 150,
            m_irs: 150,
            bandwidth_hz: 1e6,
            noise_dbm_per_hz: -174.0,
            area_m: 10.0,
            bs_pos: [0.0, 0.0],
            irs_pos: [5.0, 5.0],
            d1_m: None,
            d2_m: None,
            min_user_distance_m: 1.0,
            c_mps: SPEED_OF_LIGHT,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.carrier_freq_hz > 0.0, "carrier_freq_hz must be positive"),
            (self.mu_abs_per_m >= 0.0, "mu_abs_per_m must be non-negative"),
            (
                self.antenna_spacing_m.is_none_or(|d| d > 0.0),
                "antenna_spacing_m must be positive",
            ),
            (self.n_bs >= 1, "n_bs must be at least 1"),
            (self.m_irs >= 1, "m_irs must be at least 1"),
            (self.bandwidth_hz > 0.0, "bandwidth_hz must be positive"),
            (self.noise_dbm_per_hz.is_finite(), "noise_dbm_per_hz must be finite"),
            (self.area_m > 0.0, "area_m must be positive"),
            (self.d1_m.is_none_or(|d| d > 0.0), "d1_m must be positive"),
            (self.d2_m.is_none_or(|d| d > 0.0), "d2_m must be positive"),
            (
                self.min_user_distance_m >= 0.0,
                "min_user_distance_m must be non-negative",
            ),
            (self.c_mps > 0.0, "c_mps must be positive"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::Domain(msg.into()));
            }
        }
        if self.d1_m.is_none() && self.bs_pos == self.irs_pos {
            return Err(Error::Domain("BS and IRS positions coincide".into()));
        }
        if self.d2_m.is_none() {
            // The rejection sampler needs some admissible user position.
            let a = self.area_m;
            let far_corner = [[0.0, 0.0], [a, 0.0], [0.0, a], [a, a]]
                .iter()
                .map(|c| ((c[0] - self.irs_pos[0]).powi(2) + (c[1] - self.irs_pos[1]).powi(2)).sqrt())
                .fold(0.0, f64::max);
            if self.min_user_distance_m >= far_corner {
                return Err(Error::Domain("min_user_distance_m excludes the whole area".into()));
            }
        }
        Ok(())
    }

    pub fn antenna_spacing(&self) -> f64 {
        self.antenna_spacing_m
            .unwrap_or(self.c_mps / (2.0 * self.carrier_freq_hz))
    }

    /// Same scenario with a different BS array size.
    pub fn with_n_bs(&self, n_bs: usize) -> Self {
        Self { n_bs, ..self.clone() }
    }
}

/// Draws one link geometry. Deterministic in `seed`; angles are uniform in
/// `(-π/2, π/2)` and the user is uniform in the square area unless `d2_m`
/// is fixed.
pub fn sample_geometry<T: Real>(seed: u64, scenario: &Scenario) -> ChannelParams<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lim = std::f64::consts::FRAC_PI_2;
    let angle = |rng: &mut ChaCha8Rng| loop {
        let th: f64 = rng.random_range(-lim..lim);
        if th > -lim {
            break th;
        }
    };
    let theta_t = angle(&mut rng);
    let theta_r = angle(&mut rng);
    let theta_u = angle(&mut rng);

    let dist = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let d1 = scenario.d1_m.unwrap_or_else(|| dist(scenario.bs_pos, scenario.irs_pos));
    let d2 = match scenario.d2_m {
        Some(d) => d,
        None => loop {
            let user = [
                rng.random_range(0.0..scenario.area_m),
                rng.random_range(0.0..scenario.area_m),
            ];
            let d = dist(user, scenario.irs_pos);
            if d >= scenario.min_user_distance_m && d > 0.0 {
                break d;
            }
        },
    };

    ChannelParams {
        carrier_freq_hz: T::lit(scenario.carrier_freq_hz),
        d1_m: T::lit(d1),
        d2_m: T::lit(d2),
        mu_abs_per_m: T::lit(scenario.mu_abs_per_m),
        antenna_spacing_m: T::lit(scenario.antenna_spacing()),
        n_bs: scenario.n_bs,
        m_irs: scenario.m_irs,
        theta_t_rad: T::lit(theta_t),
        theta_r_rad: T::lit(theta_r),
        theta_u_rad: T::lit(theta_u),
        c_mps: T::lit(scenario.c_mps),
    }
}
