//! Alternating optimization of the 1-bit precoder and the IRS phase matrix.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{settled, LinkObjective};
use crate::phase::{design_bd_phase, dirs_baseline, unitarity_defect, PhaseDesignerConfig};
use crate::precoder::{solve_p1, SolverConfig};
use crate::quantizer::{project_to_xi, QuantSpec, ScaledCodeword};
use crate::scalar::{norm_sqr_vec, Cplx, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Beyond-diagonal IRS: every entry of Φ is a free alphabet value.
    Bd,
    /// Conventional diagonal IRS.
    Diag,
}

impl Variant {
    pub const ALL: [Variant; 2] = [Variant::Bd, Variant::Diag];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Bd => "bd",
            Variant::Diag => "diag",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bd" => Ok(Variant::Bd),
            "diag" => Ok(Variant::Diag),
            other => Err(Error::Domain(format!("unknown variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Outer stopping tolerance on the SE change (bits/s/Hz), scaled by the
    /// SE when it is below one.
    pub eps: f64,
    pub max_outer: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            eps: 1e-4,
            max_outer: 50,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Domain(format!(
                "optimizer.eps must be positive, got {}",
                self.eps
            )));
        }
        if self.max_outer == 0 {
            return Err(Error::Domain("optimizer.max_outer must be at least 1".into()));
        }
        Ok(())
    }
}

/// Everything a joint run needs besides the channels.
#[derive(Debug, Clone, PartialEq)]
pub struct JointConfig<T> {
    pub p_tot_w: T,
    pub quant: QuantSpec<T>,
    pub precoder: SolverConfig,
    pub phase_designer: PhaseDesignerConfig,
    pub optimizer: OptimizerConfig,
}

impl<T: Real> JointConfig<T> {
    pub fn new(p_tot_w: T, l_bits: u32) -> Result<Self> {
        Ok(Self {
            p_tot_w,
            quant: QuantSpec::new(l_bits)?,
            precoder: SolverConfig::default(),
            phase_designer: PhaseDesignerConfig::default(),
            optimizer: OptimizerConfig::default(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_tot_w > T::zero() && self.p_tot_w.is_finite()) {
            return Err(Error::Domain(format!(
                "power budget must be positive, got {}",
                self.p_tot_w
            )));
        }
        self.precoder.validate()?;
        self.phase_designer.validate()?;
        self.optimizer.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord<T> {
    pub config: JointConfig<T>,
    pub seed: u64,
    pub variant: Variant,
    /// `(outer_iter, se)`, starting at iteration 0 with the initial point.
    pub trace: Vec<(usize, T)>,
    pub converged: bool,
    pub iters_used: usize,
    pub wall_time_s: f64,
    pub precoder: ScaledCodeword<T>,
    pub phi: Array2<Cplx<T>>,
    /// `‖ΦΦᴴ − I‖_F` of the final phase matrix.
    pub unitarity_defect: T,
}

impl<T: Real> RunRecord<T> {
    pub fn final_se(&self) -> T {
        self.trace.last().map(|&(_, se)| se).unwrap_or_else(T::zero)
    }

    pub fn is_monotone(&self) -> bool {
        self.trace.windows(2).all(|w| w[1].1 >= w[0].1)
    }
}

/// Deterministic starting point: projected matched filter through the
/// diagonal alignment, then the diagonal alignment for that precoder.
pub fn initialize<T: Real>(
    link: &LinkObjective<T>,
    cfg: &JointConfig<T>,
) -> Result<(ScaledCodeword<T>, Array2<Cplx<T>>)> {
    let ch = &link.channels;
    let n = link.n_bs();
    let probe = ScaledCodeword::new(Array1::from_elem(n, Cplx::new(T::one(), T::one())), cfg.p_tot_w)?;
    let phi_probe = dirs_baseline(&ch.h_bs_irs, &ch.g_irs_user, &probe, &cfg.quant)?;
    let h_eff = link.precoder_context(&phi_probe, cfg.p_tot_w)?.h_eff;
    let v0 = ScaledCodeword::new(project_to_xi(h_eff.as_slice().unwrap()), cfg.p_tot_w)?;
    let phi0 = dirs_baseline(&ch.h_bs_irs, &ch.g_irs_user, &v0, &cfg.quant)?;
    Ok((v0, phi0))
}

struct Iterate<T> {
    v: ScaledCodeword<T>,
    phi: Array2<Cplx<T>>,
    se: T,
    trace: Vec<(usize, T)>,
    converged: bool,
    iters: usize,
}

pub fn run_joint<T: Real>(
    link: &LinkObjective<T>,
    cfg: &JointConfig<T>,
    variant: Variant,
    seed: u64,
) -> Result<RunRecord<T>> {
    let started = Instant::now();
    cfg.validate()?;
    let (v0, phi0) = initialize(link, cfg).map_err(|e| e.in_stage("initialization"))?;
    let se0 = link.spectral_efficiency(&v0, &phi0)?;

    let ch = &link.channels;
    let silent = norm_sqr_vec(ch.g_irs_user.as_slice().unwrap()) == T::zero()
        || ch.h_bs_irs.iter().all(|z| z.norm_sqr() == T::zero());
    let it = if silent {
        // No stage can move the objective off zero.
        Iterate {
            v: v0,
            phi: phi0,
            se: se0,
            trace: vec![(0, se0)],
            converged: true,
            iters: 1,
        }
    } else {
        let start = Iterate {
            v: v0,
            phi: phi0,
            se: se0,
            trace: vec![(0, se0)],
            converged: false,
            iters: 0,
        };
        let diag = alternate(link, cfg, Variant::Diag, start)?;
        match variant {
            Variant::Diag => diag,
            Variant::Bd => {
                // Warm start from the diagonal solution so BD can only improve on it.
                let warm = Iterate {
                    trace: vec![(0, diag.se)],
                    converged: false,
                    iters: 0,
                    ..diag
                };
                alternate(link, cfg, Variant::Bd, warm)?
            }
        }
    };

    Ok(RunRecord {
        config: cfg.clone(),
        seed,
        variant,
        trace: it.trace,
        converged: it.converged,
        iters_used: it.iters,
        wall_time_s: started.elapsed().as_secs_f64(),
        unitarity_defect: unitarity_defect(&it.phi),
        precoder: it.v,
        phi: it.phi,
    })
}

fn alternate<T: Real>(
    link: &LinkObjective<T>,
    cfg: &JointConfig<T>,
    variant: Variant,
    mut it: Iterate<T>,
) -> Result<Iterate<T>> {
    let ch = &link.channels;
    let eps = T::lit(cfg.optimizer.eps);
    let m = link.m_irs();
    let mut alpha = Array1::from_elem(m, Cplx::new(T::one(), T::zero()));
    let mut beta = Array1::from_elem(link.n_bs(), Cplx::new(T::one(), T::zero()));

    for outer in 1..=cfg.optimizer.max_outer {
        let prev = it.se;

        let pctx = link.precoder_context(&it.phi, cfg.p_tot_w)?;
        let p1 = solve_p1(&pctx, &it.v, &cfg.precoder).map_err(|e| e.in_stage("precoder design"))?;
        let se_p1 = link.spectral_efficiency(&p1.precoder, &it.phi)?;
        if !se_p1.is_finite() {
            return Err(Error::NonFinite {
                stage: "precoder design",
            });
        }
        if se_p1 >= it.se {
            it.v = p1.precoder;
            it.se = se_p1;
        }

        let candidate = match variant {
            Variant::Diag => dirs_baseline(&ch.h_bs_irs, &ch.g_irs_user, &it.v, &cfg.quant)
                .map_err(|e| e.in_stage("diagonal phase alignment"))?,
            Variant::Bd => {
                let ctx = link.phase_context(&it.v)?;
                design_bd_phase(
                    &ch.h_bs_irs,
                    &ch.g_irs_user,
                    &it.v,
                    &it.phi,
                    &ctx,
                    &cfg.quant,
                    &cfg.phase_designer,
                    &mut alpha,
                    &mut beta,
                )
                .map_err(|e| e.in_stage("phase design"))?
                .phi
            }
        };
        let se_p2 = link.spectral_efficiency(&it.v, &candidate)?;
        if !se_p2.is_finite() {
            return Err(Error::NonFinite { stage: "phase design" });
        }
        if se_p2 >= it.se {
            it.phi = candidate;
            it.se = se_p2;
        }

        it.iters += 1;
        it.trace.push((outer, it.se));
        if settled(prev, it.se, eps) {
            it.converged = true;
            break;
        }
    }
    Ok(it)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelPair;
    use crate::phase::is_feasible;
    use ndarray::array;

    fn c(re: f64, im: f64) -> Cplx<f64> {
        Cplx::new(re, im)
    }

    fn toy_link() -> LinkObjective<f64> {
        let h = Array2::from_shape_fn((3, 2), |(i, j)| Cplx::from_polar(1.0, 0.8 * i as f64 - 0.5 * j as f64));
        let g = Array1::from_shape_fn(3, |i| Cplx::from_polar(0.7, 1.9 * i as f64));
        LinkObjective::new(
            ChannelPair {
                h_bs_irs: h,
                g_irs_user: g,
            },
            0.5,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_user_channel() {
        let h = Array2::from_elem((2, 2), c(1.0, 0.0));
        let g = Array1::from_elem(2, c(0.0, 0.0));
        let link = LinkObjective::new(
            ChannelPair {
                h_bs_irs: h,
                g_irs_user: g,
            },
            1.0,
            1.0,
        )
        .unwrap();
        let cfg = JointConfig::new(1.0, 1).unwrap();
        for variant in Variant::ALL {
            let rec = run_joint(&link, &cfg, variant, 0).unwrap();
            assert_eq!(rec.trace, vec![(0, 0.0)]);
            assert!(rec.converged);
            assert_eq!(rec.iters_used, 1);
        }
    }

    #[test]
    fn matched_filter_start_on_positive_channel() {
        let h = array![[c(1.0, 0.0), c(2.0, 0.0)]];
        let g = array![c(1.0, 0.0)];
        let link = LinkObjective::new(
            ChannelPair {
                h_bs_irs: h,
                g_irs_user: g,
            },
            1.0,
            1.0,
        )
        .unwrap();
        let cfg = JointConfig::new(1.0, 1).unwrap();
        let (v, phi) = initialize(&link, &cfg).unwrap();
        assert!(v.codeword.iter().all(|&z| z == c(1.0, 1.0)));
        assert_eq!(phi, array![[c(1.0, 0.0)]]);
    }

    #[test]
    fn traces_are_monotone_and_deterministic() {
        let link = toy_link();
        let cfg = JointConfig::new(2.0, 1).unwrap();
        for variant in Variant::ALL {
            let a = run_joint(&link, &cfg, variant, 5).unwrap();
            let b = run_joint(&link, &cfg, variant, 5).unwrap();
            assert!(a.is_monotone());
            assert_eq!(a.trace, b.trace);
            assert!(a.precoder.is_feasible(2.0));
        }
    }

    #[test]
    fn bd_dominates_diag_and_is_feasible() {
        let link = toy_link();
        let cfg = JointConfig::new(2.0, 1).unwrap();
        let bd = run_joint(&link, &cfg, Variant::Bd, 0).unwrap();
        let diag = run_joint(&link, &cfg, Variant::Diag, 0).unwrap();
        assert!(bd.final_se() >= diag.final_se());
        assert!(is_feasible(&bd.phi, &cfg.quant));
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("bd".parse::<Variant>().unwrap(), Variant::Bd);
        assert_eq!(Variant::Diag.to_string(), "diag");
        assert!("both".parse::<Variant>().is_err());
    }

    #[test]
    fn single_precision_run() {
        let h = Array2::from_shape_fn((3, 2), |(i, j)| {
            Cplx::from_polar(1.0f32, 0.8 * i as f32 - 0.5 * j as f32)
        });
        let g = Array1::from_shape_fn(3, |i| Cplx::from_polar(0.7f32, 1.9 * i as f32));
        let link = LinkObjective::new(
            ChannelPair {
                h_bs_irs: h,
                g_irs_user: g,
            },
            0.5f32,
            1.0,
        )
        .unwrap();
        let cfg = JointConfig::new(2.0f32, 1).unwrap();
        let rec = run_joint(&link, &cfg, Variant::Bd, 0).unwrap();
        assert!(rec.is_monotone());
        assert!(rec.final_se() > 0.0);
    }
}
